use serde::Serialize;

use super::Dsu;
use crate::netlist::{Circuit, DeviceKind};
use crate::Scalar;

use DeviceKind::{
    Capacitor as C, CurrentSource as I, Inductor as L, Memristor as M, VoltageSource as V,
};

/// Cycle-space dimensions above this are not enumerated exhaustively.
const MAX_ENUMERATED_CYCLE_RANK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassWitness {
    pub found: bool,
    /// Branch ids of one loop (resp. cutset), empty when none exists.
    pub witness: Vec<String>,
}

impl ClassWitness {
    fn none() -> Self {
        Self {
            found: false,
            witness: Vec::new(),
        }
    }

    fn some(ids: Vec<String>) -> Self {
        Self {
            found: true,
            witness: ids,
        }
    }
}

/// Device-class loop and cutset configurations of a circuit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigReport {
    pub vc_loop: ClassWitness,
    pub vmc_loop: ClassWitness,
    pub vl_loop: ClassWitness,
    pub il_cutset: ClassWitness,
    pub ilc_cutset: ClassWitness,
    pub ic_cutset: ClassWitness,
    /// Simple cycles of the subgraph of voltage sources, memristors and
    /// inductors. Complete unless `vml_enumeration_complete` is false, in
    /// which case only the fundamental cycles are listed.
    pub vml_loops: Vec<Vec<String>>,
    pub vml_loop_count: Option<usize>,
    pub vml_enumeration_complete: bool,
    /// Exactly one VML-loop exists and it contains the memristor and at least one inductor.
    pub unique_vml_loop_with_memristor_and_inductor: bool,
}

pub fn check_configurations<T: Scalar>(circuit: &Circuit<T>) -> ConfigReport {
    let vml = vml_cycles(circuit);
    let count = vml.complete.then_some(vml.cycles.len());
    let unique = vml.cycle_rank == 1 && {
        let cycle = &vml.cycles[0];
        let has = |kind| cycle.iter().any(|&k| circuit.branches()[k].kind == kind);
        has(M) && has(L)
    };
    let ids = |set: &Vec<usize>| {
        set.iter()
            .map(|&k| circuit.branches()[k].id.clone())
            .collect()
    };
    ConfigReport {
        vc_loop: class_loop(circuit, &[V, C]),
        vmc_loop: class_loop(circuit, &[V, M, C]),
        vl_loop: class_loop(circuit, &[V, L]),
        il_cutset: class_cutset(circuit, &[I, L]),
        ilc_cutset: class_cutset(circuit, &[I, L, C]),
        ic_cutset: class_cutset(circuit, &[I, C]),
        vml_loops: vml.cycles.iter().map(ids).collect(),
        vml_loop_count: count,
        vml_enumeration_complete: vml.complete,
        unique_vml_loop_with_memristor_and_inductor: unique,
    }
}

fn in_classes<T>(circuit: &Circuit<T>, k: usize, classes: &[DeviceKind]) -> bool {
    classes.contains(&circuit.branches()[k].kind)
}

/// A loop made only of branches from `classes`, if one exists.
pub(crate) fn class_loop<T: Scalar>(circuit: &Circuit<T>, classes: &[DeviceKind]) -> ClassWitness {
    let n = circuit.node_count();
    let mut dsu = Dsu::new(n);
    let mut forest: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, b) in circuit.branches().iter().enumerate() {
        if !in_classes(circuit, k, classes) {
            continue;
        }
        if dsu.union(b.tail, b.head) {
            forest[b.tail].push((b.head, k));
            forest[b.head].push((b.tail, k));
            continue;
        }
        let mut members: Vec<usize> = super::tree_path(&forest, b.head, b.tail)
            .into_iter()
            .map(|(_, e)| e)
            .collect();
        members.push(k);
        members.sort_unstable();
        return ClassWitness::some(
            members
                .iter()
                .map(|&e| circuit.branches()[e].id.clone())
                .collect(),
        );
    }
    ClassWitness::none()
}

/// A cutset made only of branches from `classes`, if one exists.
///
/// Such a cutset exists iff deleting every branch of `classes` disconnects
/// the graph. The witness is the fundamental cutset of a crossing branch in
/// the graph obtained by contracting the remaining components.
pub(crate) fn class_cutset<T: Scalar>(
    circuit: &Circuit<T>,
    classes: &[DeviceKind],
) -> ClassWitness {
    let n = circuit.node_count();
    let branches = circuit.branches();
    let mut rest = Dsu::new(n);
    for (k, b) in branches.iter().enumerate() {
        if !in_classes(circuit, k, classes) {
            rest.union(b.tail, b.head);
        }
    }
    if rest.sets() == 1 {
        return ClassWitness::none();
    }
    let comp: Vec<usize> = (0..n).map(|v| rest.find(v)).collect();
    let crossing: Vec<usize> = (0..branches.len())
        .filter(|&k| {
            in_classes(circuit, k, classes) && comp[branches[k].tail] != comp[branches[k].head]
        })
        .collect();
    let first = crossing[0];

    // spanning tree of the contracted graph containing `first`
    let mut dsu = Dsu::new(n);
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &k in std::iter::once(&first).chain(crossing.iter()) {
        let (a, b) = (comp[branches[k].tail], comp[branches[k].head]);
        if dsu.union(a, b) {
            adjacency[a].push((b, k));
            adjacency[b].push((a, k));
        }
    }
    let side = super::tree_side(&adjacency, comp[branches[first].tail], first);
    let mut members: Vec<usize> = crossing
        .into_iter()
        .filter(|&k| side[comp[branches[k].tail]] != side[comp[branches[k].head]])
        .collect();
    members.sort_unstable();
    ClassWitness::some(members.iter().map(|&k| branches[k].id.clone()).collect())
}

struct CycleSet {
    cycles: Vec<Vec<usize>>,
    cycle_rank: usize,
    complete: bool,
}

/// Simple cycles of the V-M-L subgraph, as sorted branch positions.
fn vml_cycles<T: Scalar>(circuit: &Circuit<T>) -> CycleSet {
    let classes = [V, M, L];
    let n = circuit.node_count();
    let branches = circuit.branches();
    let edges: Vec<usize> = (0..branches.len())
        .filter(|&k| in_classes(circuit, k, &classes))
        .collect();

    let mut dsu = Dsu::new(n);
    let mut forest: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut chords = Vec::new();
    for &k in &edges {
        let b = &branches[k];
        if dsu.union(b.tail, b.head) {
            forest[b.tail].push((b.head, k));
            forest[b.head].push((b.tail, k));
        } else {
            chords.push(k);
        }
    }
    let m = branches.len();
    let fundamental: Vec<Vec<bool>> = chords
        .iter()
        .map(|&k| {
            let mut set = vec![false; m];
            set[k] = true;
            for (_, e) in super::tree_path(&forest, branches[k].head, branches[k].tail) {
                set[e] = true;
            }
            set
        })
        .collect();
    let as_positions = |set: &[bool]| -> Vec<usize> { (0..m).filter(|&k| set[k]).collect() };

    let rank = fundamental.len();
    if rank > MAX_ENUMERATED_CYCLE_RANK {
        return CycleSet {
            cycles: fundamental.iter().map(|s| as_positions(s)).collect(),
            cycle_rank: rank,
            complete: false,
        };
    }

    // Gray-code walk over all nonempty combinations of fundamental cycles.
    let mut cycles = Vec::new();
    let mut current = vec![false; m];
    for step in 1u64..(1u64 << rank) {
        let flip = step.trailing_zeros() as usize;
        for (c, f) in current.iter_mut().zip(&fundamental[flip]) {
            *c ^= *f;
        }
        if is_simple_cycle(circuit, &current) {
            cycles.push(as_positions(&current));
        }
    }
    cycles.sort();
    CycleSet {
        cycles,
        cycle_rank: rank,
        complete: true,
    }
}

fn is_simple_cycle<T>(circuit: &Circuit<T>, set: &[bool]) -> bool {
    let n = circuit.node_count();
    let mut degree = vec![0usize; n];
    let mut dsu = Dsu::new(n);
    let mut start = None;
    for (k, b) in circuit.branches().iter().enumerate() {
        if set[k] {
            degree[b.tail] += 1;
            degree[b.head] += 1;
            dsu.union(b.tail, b.head);
            start = Some(b.tail);
        }
    }
    let Some(start) = start else { return false };
    if degree.iter().any(|&d| d != 0 && d != 2) {
        return false;
    }
    let root = dsu.find(start);
    (0..n).all(|v| degree[v] == 0 || dsu.find(v) == root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn circuit(text: &str) -> Circuit<f64> {
        parse_netlist(text).unwrap()
    }

    #[test]
    fn ml_parallel_has_unique_vml_loop() {
        let c = circuit(crate::bundled::ML_PARALLEL);
        let r = check_configurations(&c);
        assert_eq!(r.vml_loop_count, Some(1));
        assert_eq!(r.vml_loops, vec![vec!["m1".to_string(), "l1".to_string()]]);
        assert!(r.unique_vml_loop_with_memristor_and_inductor);
        assert!(!r.vmc_loop.found);
        assert!(!r.ilc_cutset.found);
    }

    #[test]
    fn mrl_has_no_vml_loop() {
        let r = check_configurations(&circuit(crate::bundled::MRL));
        assert_eq!(r.vml_loop_count, Some(0));
        assert!(!r.unique_vml_loop_with_memristor_and_inductor);
        assert!(!r.vc_loop.found && !r.vl_loop.found);
        assert!(!r.il_cutset.found && !r.ic_cutset.found);
    }

    #[test]
    fn neural_network_configurations() {
        let r = check_configurations(&circuit(crate::bundled::NEURAL));
        assert!(!r.vl_loop.found);
        assert!(!r.ic_cutset.found);
        assert!(!r.vc_loop.found);
        assert!(!r.il_cutset.found);
        assert_eq!(r.vml_loop_count, Some(0));
    }

    #[test]
    fn vc_loop_detected() {
        let r = check_configurations(&circuit(crate::bundled::VC_LOOP));
        assert!(r.vc_loop.found);
        assert_eq!(r.vc_loop.witness, vec!["v1", "c1"]);
        assert!(r.vmc_loop.found);
    }

    #[test]
    fn inductor_cutset_detected() {
        // l1 alone joins the resistive island {c, d} to the rest
        let c = circuit("R r1 a b 1\nR r2 b a 1\nL l1 b c 1\nR r3 c d 1");
        let r = check_configurations(&c);
        assert!(r.il_cutset.found);
        assert_eq!(r.il_cutset.witness, vec!["l1"]);
        assert!(r.ilc_cutset.found);
        assert!(!r.ic_cutset.found);
    }

    #[test]
    fn two_vml_loops_reported_with_witnesses() {
        let c = circuit("M m1 a b 0 1\nL l1 a b 1\nL l2 a b 1");
        let r = check_configurations(&c);
        assert_eq!(r.vml_loop_count, Some(3));
        assert!(r.vml_loops.len() >= 2);
        assert!(!r.unique_vml_loop_with_memristor_and_inductor);
    }

    #[test]
    fn vml_loop_without_memristor_is_flagged() {
        let c = circuit("V v1 a b 1\nL l1 a b 1\nM m1 b c 0 1\nR r1 c a 1");
        let r = check_configurations(&c);
        assert_eq!(r.vml_loop_count, Some(1));
        assert!(r.vl_loop.found);
        assert!(!r.unique_vml_loop_with_memristor_and_inductor);
    }
}
