//! Digraph algebra on circuits: fundamental loop and cutset matrices,
//! device-class loop/cutset detection and spanning-tree families.

mod config;
mod trees;

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::Serialize;

pub use config::{check_configurations, ClassWitness, ConfigReport};
pub use trees::{
    enumerate_trees, mr_product_sum, FamilyKind, OperatingPoint, TreeFamily, TreeRecord,
};

use crate::netlist::{Circuit, DeviceKind};
use crate::{Error, Result, Scalar};

/// Union-find with path halving.
#[derive(Debug, Clone)]
pub(crate) struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.sets -= 1;
        true
    }

    pub fn sets(&self) -> usize {
        self.sets
    }
}

pub(crate) fn component_count(nodes: usize, edges: &[(usize, usize)]) -> usize {
    let mut dsu = Dsu::new(nodes);
    for &(a, b) in edges {
        dsu.union(a, b);
    }
    dsu.sets()
}

/// Spanning tree given by branch positions, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SpanningTree {
    branches: Vec<usize>,
}

impl SpanningTree {
    /// Validates that `positions` form a spanning tree of `circuit`.
    pub fn new<T: Scalar>(
        circuit: &Circuit<T>,
        positions: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut branches: Vec<usize> = positions.into_iter().collect();
        branches.sort_unstable();
        branches.dedup();
        let n = circuit.node_count();
        if branches.len() + 1 != n {
            return Err(Error::InvalidTree(format!(
                "{} branches given, a spanning tree of {n} nodes has {}",
                branches.len(),
                n - 1
            )));
        }
        let mut dsu = Dsu::new(n);
        for &k in &branches {
            let b = circuit
                .branches()
                .get(k)
                .ok_or_else(|| Error::InvalidTree(format!("branch position {k} out of range")))?;
            if !dsu.union(b.tail, b.head) {
                return Err(Error::InvalidTree(format!(
                    "branch `{}` closes a loop",
                    b.id
                )));
            }
        }
        Ok(Self { branches })
    }

    pub(crate) fn from_sorted_unchecked(branches: Vec<usize>) -> Self {
        Self { branches }
    }

    pub fn branches(&self) -> &[usize] {
        &self.branches
    }

    pub fn contains(&self, position: usize) -> bool {
        self.branches.binary_search(&position).is_ok()
    }

    pub fn ids<'a, T>(&self, circuit: &'a Circuit<T>) -> Vec<&'a str> {
        self.branches
            .iter()
            .map(|&k| circuit.branches()[k].id.as_str())
            .collect()
    }

    /// Complement in branch order.
    pub fn cotree<T>(&self, circuit: &Circuit<T>) -> Vec<usize> {
        (0..circuit.branches().len())
            .filter(|k| !self.contains(*k))
            .collect()
    }
}

/// Class preference of the default generating tree.
const TREE_PREFERENCE: [DeviceKind; 6] = [
    DeviceKind::VoltageSource,
    DeviceKind::Capacitor,
    DeviceKind::Inductor,
    DeviceKind::Resistor,
    DeviceKind::Memristor,
    DeviceKind::CurrentSource,
];

/// Greedy spanning tree taking branches by class preference (V, C, L, R, M, I)
/// and then netlist order. Greedy selection over the graphic matroid yields a
/// proper tree whenever one exists.
pub fn default_tree<T: Scalar>(circuit: &Circuit<T>) -> SpanningTree {
    let mut dsu = Dsu::new(circuit.node_count());
    let mut chosen = Vec::with_capacity(circuit.node_count().saturating_sub(1));
    for kind in TREE_PREFERENCE {
        for &k in circuit.class(kind) {
            let b = &circuit.branches()[k];
            if dsu.union(b.tail, b.head) {
                chosen.push(k);
            }
        }
    }
    chosen.sort_unstable();
    SpanningTree { branches: chosen }
}

/// Fundamental loop matrix `b` and cutset matrix `q` of a spanning tree.
///
/// Row `i` of `b` is the loop closed by the `i`-th cotree branch, oriented
/// with it; row `j` of `q` is the cutset of the `j`-th tree branch, oriented
/// with it. Columns follow circuit branch order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedMatrices {
    pub b: DMatrix<i32>,
    pub q: DMatrix<i32>,
    pub generating_tree: SpanningTree,
    /// Cotree branch generating each row of `b`.
    pub loop_branches: Vec<usize>,
}

impl ReducedMatrices {
    /// Columns of `b` belonging to one device class, in class order.
    pub fn b_block(&self, positions: &[usize]) -> DMatrix<i32> {
        self.b.select_columns(positions)
    }

    pub fn q_block(&self, positions: &[usize]) -> DMatrix<i32> {
        self.q.select_columns(positions)
    }
}

pub fn fundamental_matrices<T: Scalar>(
    circuit: &Circuit<T>,
    tree: &SpanningTree,
) -> Result<ReducedMatrices> {
    let tree = SpanningTree::new(circuit, tree.branches().iter().copied())?;
    let n = circuit.node_count();
    let m = circuit.branch_count();
    let branches = circuit.branches();

    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &k in tree.branches() {
        let b = &branches[k];
        adjacency[b.tail].push((b.head, k));
        adjacency[b.head].push((b.tail, k));
    }

    let cotree = tree.cotree(circuit);
    let mut b = DMatrix::<i32>::zeros(cotree.len(), m);
    for (row, &e) in cotree.iter().enumerate() {
        let br = &branches[e];
        b[(row, e)] = 1;
        // walk the tree from the head back to the tail
        for (from, k) in tree_path(&adjacency, br.head, br.tail) {
            b[(row, k)] = if branches[k].tail == from { 1 } else { -1 };
        }
    }

    let mut q = DMatrix::<i32>::zeros(tree.branches().len(), m);
    for (row, &t) in tree.branches().iter().enumerate() {
        let side = tree_side(&adjacency, branches[t].tail, t);
        for (k, br) in branches.iter().enumerate() {
            match (side[br.tail], side[br.head]) {
                (true, false) => q[(row, k)] = 1,
                (false, true) => q[(row, k)] = -1,
                _ => {}
            }
        }
    }

    Ok(ReducedMatrices {
        b,
        q,
        generating_tree: tree,
        loop_branches: cotree,
    })
}

/// Branches on the tree path from `start` to `goal`, each with the node it is entered from.
fn tree_path(adjacency: &[Vec<(usize, usize)>], start: usize, goal: usize) -> Vec<(usize, usize)> {
    let n = adjacency.len();
    let mut via: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        if u == goal {
            break;
        }
        for &(v, k) in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                via[v] = Some((u, k));
                queue.push_back(v);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = goal;
    while let Some((prev, k)) = via[node] {
        path.push((prev, k));
        node = prev;
    }
    path.reverse();
    path
}

/// Nodes reachable from `root` in the tree without crossing branch `cut`.
fn tree_side(adjacency: &[Vec<(usize, usize)>], root: usize, cut: usize) -> Vec<bool> {
    let mut side = vec![false; adjacency.len()];
    let mut stack = vec![root];
    side[root] = true;
    while let Some(u) = stack.pop() {
        for &(v, k) in &adjacency[u] {
            if k != cut && !side[v] {
                side[v] = true;
                stack.push(v);
            }
        }
    }
    side
}

/// Exact rank of an integer matrix (fraction-free Bareiss elimination).
pub fn exact_rank(a: &DMatrix<i32>) -> usize {
    let (rows, cols) = a.shape();
    let mut m: Vec<Vec<i128>> = (0..rows)
        .map(|i| (0..cols).map(|j| a[(i, j)] as i128).collect())
        .collect();
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn circuit(text: &str) -> Circuit<f64> {
        parse_netlist(text).unwrap()
    }

    fn tree(c: &Circuit<f64>, ids: &[&str]) -> SpanningTree {
        SpanningTree::new(c, ids.iter().map(|id| c.position(id).unwrap())).unwrap()
    }

    #[test]
    fn triangle_single_loop() {
        let c = circuit("R e1 a b 1\nR e2 b c 1\nR e3 c a 1");
        let rm = fundamental_matrices(&c, &tree(&c, &["e1", "e2"])).unwrap();
        assert_eq!(rm.b, DMatrix::from_row_slice(1, 3, &[1, 1, 1]));
        assert_eq!(rm.q.nrows(), 2);
        assert!((&rm.b * rm.q.transpose()).iter().all(|&x| x == 0));
    }

    #[test]
    fn parallel_pair() {
        let c = circuit("R e1 a b 1\nR e2 a b 1");
        let rm = fundamental_matrices(&c, &tree(&c, &["e1"])).unwrap();
        assert_eq!(rm.b, DMatrix::from_row_slice(1, 2, &[-1, 1]));
        assert_eq!(rm.q, DMatrix::from_row_slice(1, 2, &[1, 1]));
        assert!((&rm.b * rm.q.transpose()).iter().all(|&x| x == 0));
    }

    #[test]
    fn mrl_loop_matrices() {
        let c = circuit(crate::bundled::MRL);
        let rm = fundamental_matrices(&c, &tree(&c, &["r1", "l1"])).unwrap();
        assert_eq!(rm.b.shape(), (1, 3));
        assert!(rm.b.iter().all(|x| x.abs() == 1));
        assert_eq!(exact_rank(&rm.q), 2);
        assert_eq!(exact_rank(&rm.b), 1);
    }

    #[test]
    fn invalid_trees() {
        let c = circuit("R e1 a b 1\nR e2 b c 1\nR e3 c a 1");
        assert!(SpanningTree::new(&c, [0]).is_err());
        let c = circuit("R e1 a b 1\nR e2 a b 1\nR e3 b c 1");
        assert!(matches!(
            SpanningTree::new(&c, [0, 1]),
            Err(Error::InvalidTree(_))
        ));
        assert!(SpanningTree::new(&c, [0, 9]).is_err());
    }

    #[test]
    fn default_tree_prefers_sources_and_capacitors() {
        let c = circuit("R r1 a b 1\nC c1 a b 1\nL l1 b c 1\nV v1 b c 1\nI i1 a c 1");
        let t = default_tree(&c);
        assert_eq!(t.ids(&c), vec!["c1", "v1"]);
    }

    #[test]
    fn exact_rank_basics() {
        let a = DMatrix::from_row_slice(3, 3, &[1, 2, 3, 2, 4, 6, 1, 0, 1]);
        assert_eq!(exact_rank(&a), 2);
        assert_eq!(exact_rank(&DMatrix::<i32>::zeros(2, 4)), 0);
        assert_eq!(exact_rank(&DMatrix::<i32>::identity(4, 4)), 4);
    }
}
