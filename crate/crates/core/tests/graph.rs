mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{endpoints, is_cutset, is_cycle, netlist_of, random_multigraph, random_parts, Part};
use tbwp::graph::{
    check_configurations, enumerate_trees, exact_rank, fundamental_matrices, mr_product_sum,
    FamilyKind, OperatingPoint,
};
use tbwp::netlist::{parse_netlist, DeviceKind};

fn shape() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..=7).prop_flat_map(|n| (Just(n), n - 1..=12usize, any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_spanning_tree_gives_orthogonal_full_rank_matrices(
        (n, m, seed) in shape(),
        pick in any::<prop::sample::Index>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = random_parts(&mut rng, n, m, &['R', 'C', 'L', 'V', 'I']);
        let circuit = parse_netlist::<f64>(&netlist_of(&parts)).unwrap();
        let family = enumerate_trees(&circuit, FamilyKind::All);
        let tree = &family.trees[pick.index(family.len())];
        let mats = fundamental_matrices(&circuit, tree).unwrap();
        prop_assert_eq!(exact_rank(&mats.b) + n, m + 1);
        prop_assert_eq!(exact_rank(&mats.q) + 1, n);
        prop_assert!((&mats.b * mats.q.transpose()).iter().all(|&x| x == 0));
        prop_assert_eq!(&mats.generating_tree, tree);
    }

    #[test]
    fn cotree_products_match_weighted_matrix_tree_theorem((n, m, seed) in shape()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = random_parts(&mut rng, n, m, &['R']);
        let circuit = parse_netlist::<f64>(&netlist_of(&parts)).unwrap();
        let family = enumerate_trees(&circuit, FamilyKind::All);
        let sum = mr_product_sum(&circuit, &family, &OperatingPoint::at_charge(&circuit, 0.0));

        let mut lap = DMatrix::<f64>::zeros(n, n);
        for b in circuit.branches() {
            let g = 1.0 / b.characteristic.eval(0.0);
            lap[(b.tail, b.tail)] += g;
            lap[(b.head, b.head)] += g;
            lap[(b.tail, b.head)] -= g;
            lap[(b.head, b.tail)] -= g;
        }
        let weight: f64 = circuit.branches().iter().map(|b| b.characteristic.eval(0.0)).product();
        let expected = weight * lap.view((1, 1), (n - 1, n - 1)).determinant();
        prop_assert!((sum - expected).abs() <= 1e-9 * expected.abs(), "{} vs {}", sum, expected);
    }

    #[test]
    fn family_members_respect_their_constraints((n, m, seed) in shape()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = random_parts(&mut rng, n, m, &['R', 'C', 'L', 'V', 'I']);
        let circuit = parse_netlist::<f64>(&netlist_of(&parts)).unwrap();
        let all = enumerate_trees(&circuit, FamilyKind::All);
        for (kind, required, forbidden) in [
            (FamilyKind::Proper, [DeviceKind::VoltageSource, DeviceKind::Capacitor], [DeviceKind::CurrentSource, DeviceKind::Inductor]),
            (FamilyKind::LProper, [DeviceKind::VoltageSource, DeviceKind::Inductor], [DeviceKind::CurrentSource, DeviceKind::Capacitor]),
        ] {
            let family = enumerate_trees(&circuit, kind);
            let expected: Vec<_> = all
                .trees
                .iter()
                .filter(|t| {
                    circuit.branches().iter().enumerate().all(|(k, b)| {
                        (!required.contains(&b.kind) || t.contains(k))
                            && (!forbidden.contains(&b.kind) || !t.contains(k))
                    })
                })
                .cloned()
                .collect();
            prop_assert_eq!(&family.trees, &expected);
        }
    }

    #[test]
    fn configuration_witnesses_reverify((n, m, seed) in shape()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut parts = random_parts(&mut rng, n, m, &['R', 'C', 'L', 'V', 'I', 'L', 'C']);
        if let Some(p) = parts.first_mut() {
            p.letter = 'M';
            p.coeffs = vec![0.0, 1.0];
        }
        let circuit = parse_netlist::<f64>(&netlist_of(&parts)).unwrap();
        let report = check_configurations(&circuit);
        let kinds = |ids: &[String]| -> Vec<char> {
            ids.iter()
                .map(|id| circuit.branches()[circuit.position(id).unwrap()].kind.letter())
                .collect()
        };
        let loops = [
            (&report.vc_loop, "VC"),
            (&report.vmc_loop, "VMC"),
            (&report.vl_loop, "VL"),
        ];
        for (w, classes) in loops {
            if w.found {
                prop_assert!(is_cycle(&endpoints(&circuit, &w.witness)), "{:?}", w.witness);
                prop_assert!(kinds(&w.witness).iter().all(|c| classes.contains(*c)));
            } else {
                prop_assert!(w.witness.is_empty());
            }
        }
        let cutsets = [
            (&report.il_cutset, "IL"),
            (&report.ilc_cutset, "ILC"),
            (&report.ic_cutset, "IC"),
        ];
        for (w, classes) in cutsets {
            if w.found {
                prop_assert!(is_cutset(&circuit, &w.witness), "{:?}", w.witness);
                prop_assert!(kinds(&w.witness).iter().all(|c| classes.contains(*c)));
            }
        }
        for cycle in &report.vml_loops {
            prop_assert!(is_cycle(&endpoints(&circuit, cycle)), "{:?}", cycle);
            prop_assert!(kinds(cycle).iter().all(|c| "VML".contains(*c)));
        }
    }
}

#[test]
fn class_absence_is_confirmed_by_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let edges = random_multigraph(&mut rng, 4, 6);
        let letters = ['L', 'C', 'R', 'V'];
        let parts: Vec<Part> = edges
            .iter()
            .map(|&(tail, head)| Part {
                letter: letters[rng.random_range(0..letters.len())],
                tail,
                head,
                coeffs: vec![1.0],
            })
            .collect();
        let circuit = parse_netlist::<f64>(&netlist_of(&parts)).unwrap();
        let report = check_configurations(&circuit);
        let ids: Vec<String> = circuit.branches().iter().map(|b| b.id.clone()).collect();
        let subsets = (1u32..1 << ids.len()).map(|mask| {
            ids.iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, id)| id.clone())
                .collect::<Vec<_>>()
        });
        let (mut vl, mut vc, mut ic) = (false, false, false);
        for s in subsets {
            let letters: Vec<char> = s
                .iter()
                .map(|id| {
                    circuit.branches()[circuit.position(id).unwrap()]
                        .kind
                        .letter()
                })
                .collect();
            let within = |classes: &str| letters.iter().all(|c| classes.contains(*c));
            if is_cycle(&endpoints(&circuit, &s)) {
                vl |= within("VL");
                vc |= within("VC");
            }
            if within("IC") && is_cutset(&circuit, &s) {
                ic = true;
            }
        }
        assert_eq!(report.vl_loop.found, vl, "{}", netlist_of(&parts));
        assert_eq!(report.vc_loop.found, vc, "{}", netlist_of(&parts));
        assert_eq!(report.ic_cutset.found, ic, "{}", netlist_of(&parts));
    }
}
