use serde::{Deserialize, Serialize};

use super::{Dsu, SpanningTree};
use crate::netlist::{Circuit, DeviceKind};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Every spanning tree.
    All,
    /// Contains all voltage sources and capacitors, no current source or inductor.
    Proper,
    /// Contains all voltage sources and inductors, no current source or capacitor.
    LProper,
}

impl FamilyKind {
    fn constraints(self) -> (&'static [DeviceKind], &'static [DeviceKind]) {
        use DeviceKind::*;
        match self {
            FamilyKind::All => (&[], &[]),
            FamilyKind::Proper => (&[VoltageSource, Capacitor], &[CurrentSource, Inductor]),
            FamilyKind::LProper => (&[VoltageSource, Inductor], &[CurrentSource, Capacitor]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::All => "all",
            FamilyKind::Proper => "proper",
            FamilyKind::LProper => "l-proper",
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(FamilyKind::All),
            "proper" => Ok(FamilyKind::Proper),
            "l-proper" | "lproper" => Ok(FamilyKind::LProper),
            other => Err(format!("unknown tree family `{other}`")),
        }
    }
}

/// Spanning trees of one family in canonical order: each tree lists its
/// branches in netlist order and trees are sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeFamily<T> {
    pub kind: FamilyKind,
    pub trees: Vec<SpanningTree>,
    /// Cotree MR-products at the last evaluated operating point, one per tree.
    pub cotree_products: Vec<T>,
}

/// Serialized view of one tree of a family.
#[derive(Debug, Clone, Serialize)]
pub struct TreeRecord<T> {
    pub branches: Vec<String>,
    pub cotree_product: T,
}

impl<T: Scalar> TreeFamily<T> {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Evaluates and stores every tree's cotree MR-product; returns their sum.
    pub fn evaluate(&mut self, circuit: &Circuit<T>, point: &OperatingPoint<T>) -> T {
        let values = point.branch_values(circuit);
        self.cotree_products = self
            .trees
            .iter()
            .map(|t| cotree_product(circuit, t, &values))
            .collect();
        self.cotree_products.iter().fold(T::zero(), |a, b| a + *b)
    }

    pub fn records(&self, circuit: &Circuit<T>) -> Vec<TreeRecord<T>> {
        self.trees
            .iter()
            .zip(&self.cotree_products)
            .map(|(t, p)| TreeRecord {
                branches: t.ids(circuit).into_iter().map(str::to_string).collect(),
                cotree_product: *p,
            })
            .collect()
    }
}

/// Operating values entering MR-products: memristor charges and resistor
/// currents, each in class order.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint<T> {
    pub charges: Vec<T>,
    pub resistor_currents: Vec<T>,
}

impl<T: Scalar> OperatingPoint<T> {
    /// Zero resistor currents and the given charge on every memristor.
    pub fn at_charge(circuit: &Circuit<T>, q: T) -> Self {
        Self {
            charges: vec![q; circuit.count(DeviceKind::Memristor)],
            resistor_currents: vec![T::zero(); circuit.count(DeviceKind::Resistor)],
        }
    }

    /// Memristance or incremental resistance per branch; `None` for other classes.
    fn branch_values(&self, circuit: &Circuit<T>) -> Vec<Option<T>> {
        let mut values = vec![None; circuit.branch_count()];
        for (k, &pos) in circuit.class(DeviceKind::Memristor).iter().enumerate() {
            let q = self.charges.get(k).copied().unwrap_or_else(T::zero);
            values[pos] = Some(circuit.branches()[pos].characteristic.eval(q));
        }
        for (k, &pos) in circuit.class(DeviceKind::Resistor).iter().enumerate() {
            let i = self
                .resistor_currents
                .get(k)
                .copied()
                .unwrap_or_else(T::zero);
            values[pos] = Some(circuit.branches()[pos].characteristic.eval(i));
        }
        values
    }
}

fn cotree_product<T: Scalar>(circuit: &Circuit<T>, tree: &SpanningTree, values: &[Option<T>]) -> T {
    (0..circuit.branch_count())
        .filter(|&k| !tree.contains(k))
        .filter_map(|k| values[k])
        .fold(T::one(), |acc, v| acc * v)
}

/// Sum over the family's trees of the product of memristances and
/// resistances on cotree branches (an empty product is 1).
pub fn mr_product_sum<T: Scalar>(
    circuit: &Circuit<T>,
    family: &TreeFamily<T>,
    point: &OperatingPoint<T>,
) -> T {
    let values = point.branch_values(circuit);
    family
        .trees
        .iter()
        .map(|t| cotree_product(circuit, t, &values))
        .fold(T::zero(), |a, b| a + b)
}

/// Enumerates every spanning tree satisfying the family's constraints by
/// backtracking: required branches are contracted first, forbidden ones
/// deleted, and the remaining branches are decided include-first.
pub fn enumerate_trees<T: Scalar>(circuit: &Circuit<T>, kind: FamilyKind) -> TreeFamily<T> {
    let empty = TreeFamily {
        kind,
        trees: Vec::new(),
        cotree_products: Vec::new(),
    };
    let (required, forbidden) = kind.constraints();
    let branches = circuit.branches();
    let n = circuit.node_count();

    let mut dsu = Dsu::new(n);
    let mut chosen = Vec::new();
    for (k, b) in branches.iter().enumerate() {
        if required.contains(&b.kind) {
            if !dsu.union(b.tail, b.head) {
                return empty;
            }
            chosen.push(k);
        }
    }
    let optional: Vec<(usize, usize, usize)> = branches
        .iter()
        .enumerate()
        .filter(|(_, b)| !required.contains(&b.kind) && !forbidden.contains(&b.kind))
        .map(|(k, b)| (k, b.tail, b.head))
        .collect();

    let mut search = Search {
        optional: &optional,
        nodes: n,
        trees: Vec::new(),
    };
    if search.connectable(&dsu, 0) {
        search.descend(0, dsu, &mut chosen);
    }
    let mut trees = search.trees;
    trees.sort();
    TreeFamily {
        kind,
        trees,
        cotree_products: Vec::new(),
    }
}

struct Search<'a> {
    optional: &'a [(usize, usize, usize)],
    nodes: usize,
    trees: Vec<SpanningTree>,
}

impl Search<'_> {
    /// Whether the current forest plus the undecided branches spans all nodes.
    fn connectable(&self, dsu: &Dsu, from: usize) -> bool {
        let mut probe = dsu.clone();
        for &(_, a, b) in &self.optional[from..] {
            probe.union(a, b);
            if probe.sets() == 1 {
                return true;
            }
        }
        probe.sets() == 1
    }

    fn descend(&mut self, idx: usize, mut dsu: Dsu, chosen: &mut Vec<usize>) {
        if dsu.sets() == 1 {
            let mut branches = chosen.clone();
            branches.sort_unstable();
            self.trees
                .push(SpanningTree::from_sorted_unchecked(branches));
            return;
        }
        if idx == self.optional.len() || self.nodes == 0 {
            return;
        }
        let (k, a, b) = self.optional[idx];
        if dsu.find(a) != dsu.find(b) {
            let mut with = dsu.clone();
            with.union(a, b);
            chosen.push(k);
            self.descend(idx + 1, with, chosen);
            chosen.pop();
        }
        if self.connectable(&dsu, idx + 1) {
            self.descend(idx + 1, dsu, chosen);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn circuit(text: &str) -> Circuit<f64> {
        parse_netlist(text).unwrap()
    }

    #[test]
    fn mrl_l_proper_trees() {
        let c = circuit(crate::bundled::MRL);
        let mut fam = enumerate_trees(&c, FamilyKind::LProper);
        assert_eq!(fam.len(), 2);
        let cotrees: Vec<Vec<usize>> = fam.trees.iter().map(|t| t.cotree(&c)).collect();
        assert_eq!(cotrees, vec![vec![1], vec![0]]);
        let point = OperatingPoint::at_charge(&c, 0.3);
        let sum = fam.evaluate(&c, &point);
        // M(0.3) + R = -0.7 + 1
        assert!((sum - 0.3).abs() < 1e-15);
        assert_eq!(mr_product_sum(&c, &fam, &point), sum);
    }

    #[test]
    fn neural_network_has_33_l_proper_trees() {
        let c = circuit(crate::bundled::NEURAL);
        assert_eq!(enumerate_trees(&c, FamilyKind::LProper).len(), 33);
    }

    #[test]
    fn vc_loop_has_no_proper_tree() {
        let c = circuit(crate::bundled::VC_LOOP);
        assert!(enumerate_trees(&c, FamilyKind::Proper).is_empty());
        assert_eq!(enumerate_trees(&c, FamilyKind::All).len(), 2);
    }

    #[test]
    fn empty_products_count_trees() {
        // resistors forced into every tree: bridges
        let c = circuit("R r1 a b 2\nL l1 b c 1\nL l2 b c 1\nR r2 c d 3");
        let fam = enumerate_trees(&c, FamilyKind::All);
        assert_eq!(fam.len(), 2);
        let s = mr_product_sum(&c, &fam, &OperatingPoint::at_charge(&c, 0.0));
        assert_eq!(s, 2.0);
    }

    #[test]
    fn canonical_order_and_no_duplicates() {
        let c = circuit("R a1 a b 1\nR a2 b c 1\nR a3 c a 1\nR a4 a b 1");
        let fam = enumerate_trees(&c, FamilyKind::All);
        let mut sorted = fam.trees.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, fam.trees);
        for t in &fam.trees {
            assert!(SpanningTree::new(&c, t.branches().iter().copied()).is_ok());
        }
        // triangle with one doubled edge: 3 + 2 = 5 trees
        assert_eq!(fam.len(), 5);
    }
}
