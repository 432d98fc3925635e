mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{netlist_of, random_parts, Part};
use tbwp::dae::{assemble_dae, pencil_spectrum, Dae};
use tbwp::netlist::parse_netlist;
use tbwp::numerics::Tolerances;

/// Sourceless circuit with one memristor and nonlinear resistors.
fn circuit_text(seed: u64, nodes: usize, branches: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = random_parts(&mut rng, nodes, branches, &['R', 'C', 'L', 'V', 'I']);
    for p in parts.iter_mut().filter(|p| p.letter == 'R') {
        p.coeffs.push(rng.random_range(-1.0..1.0));
        p.coeffs.push(rng.random_range(-1.0..1.0));
    }
    let (tail, head) = (rng.random_range(0..nodes), rng.random_range(0..nodes));
    if tail != head {
        parts.push(Part {
            letter: 'M',
            tail,
            head,
            coeffs: vec![
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                0.5,
            ],
        });
    } else {
        parts[0].letter = 'M';
        parts[0].coeffs = vec![1.0, -1.0];
    }
    netlist_of(&parts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn memristor_charge_axis_is_a_line_of_equilibria(
        seed in any::<u64>(),
        nodes in 2usize..=6,
        extra in 0usize..=5,
        q in -3.0f64..3.0,
    ) {
        let text = circuit_text(seed, nodes, nodes - 1 + extra);
        let dae = assemble_dae(&parse_netlist::<f64>(&text).unwrap()).unwrap();
        let (r, p) = dae.dims();
        let mut x = DVector::zeros(r + p);
        x[0] = q;
        let residual = dae.full_residual(&x).unwrap().amax();
        prop_assert!(residual <= 1e-12, "residual {:e} for\n{}", residual, text);
    }

    #[test]
    fn pinned_equilibria_are_exact_and_spectra_complete(
        seed in any::<u64>(),
        nodes in 2usize..=5,
        extra in 0usize..=4,
        q in -2.0f64..2.0,
    ) {
        let text = circuit_text(seed, nodes, nodes - 1 + extra);
        let dae = assemble_dae(&parse_netlist::<f64>(&text).unwrap()).unwrap();
        let tol = Tolerances::default();
        let layout = dae.layout();
        let (r, _) = dae.dims();
        let Ok(eq) = dae.equilibrium_at(q, None, &tol) else {
            return Ok(());
        };
        prop_assert!((eq.y[0] - q).abs() <= 1e-12);
        let residual = eq.residual_h.max(eq.residual_g);
        prop_assert!(residual <= tol.newton_tol, "{:e}", residual);
        for range in [layout.i_m(), layout.i_c(), layout.v_l()] {
            let part = eq.z.rows(range.start, range.len());
            prop_assert!(part.iter().all(|v| v.abs() <= 1e-10), "{}", part);
        }
        if let Ok(ps) = pencil_spectrum(&dae, &eq, &tol) {
            prop_assert_eq!(ps.spectrum.len(), r);
            let s = &ps.spectrum;
            let mut seen: Vec<usize> = s
                .zero_cluster
                .iter()
                .chain(&s.stable)
                .chain(&s.unstable)
                .chain(&s.critical)
                .copied()
                .collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..r).collect::<Vec<_>>());
        }
    }
}
