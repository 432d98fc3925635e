use nalgebra::DVector;
use serde_json::json;

use super::core::{line_condition, spectral_checks, transversality, transversality_condition};
use super::ode::unit_direction;
use super::{vec_f64, Condition, Outcome, TbwpReport};
use crate::dae::{schur_reduce, stack, Dae, EquilibriumPoint};
use crate::numerics::{rank_info, Band, Tolerances};
use crate::{Error, Result, Scalar};

/// Checks the DAE hypotheses at `eq` with the equilibrium line along
/// `line_direction` in `y`-space.
///
/// Condition ids: `dae.gz-nonsingular`, `dae.equilibrium-line`,
/// `dae.double-zero`, `dae.geometric-simple`, `dae.index-two`,
/// `dae.normal-hyperbolicity`, `dae.full-corank`, `dae.transversality`.
pub fn check_dae_tbwp<T, D>(
    dae: &D,
    eq: &EquilibriumPoint<T>,
    line_direction: &DVector<T>,
    tol: &Tolerances,
) -> Result<TbwpReport>
where
    T: Scalar,
    D: Dae<T> + ?Sized,
{
    check_dae_with_source(dae, eq, line_direction, "caller", tol)
}

pub(crate) fn check_dae_with_source<T, D>(
    dae: &D,
    eq: &EquilibriumPoint<T>,
    line_direction: &DVector<T>,
    source: &str,
    tol: &Tolerances,
) -> Result<TbwpReport>
where
    T: Scalar,
    D: Dae<T> + ?Sized,
{
    let (r, p) = dae.dims();
    if eq.y.len() != r || eq.z.len() != p {
        return Err(Error::Dimension(format!(
            "equilibrium does not match dims ({r}, {p})"
        )));
    }
    let d = unit_direction(line_direction, r)?;
    let mut report = TbwpReport::new("dae", tol);
    report.line_direction = vec_f64(d.iter().copied());
    report.line_direction_source = source.to_string();

    let jac = dae.jacobian(&eq.y, &eq.z)?;
    let red = match schur_reduce(&jac, tol) {
        Ok(red) => {
            report.push(
                Condition::new(
                    "dae.gz-nonsingular",
                    Outcome::Pass,
                    "algebraic block is invertible",
                )
                .with_certificate(json!({ "condition": red.d_condition.as_f64() }))
                .with_tolerances(json!({ "zero_tol": tol.zero_tol })),
            );
            red
        }
        Err(Error::IndexAboveOne { sigma_min }) => {
            report.push(
                Condition::new(
                    "dae.gz-nonsingular",
                    Outcome::Fail,
                    "g_z is singular: the index exceeds one here",
                )
                .with_certificate(json!({ "sigma_min": sigma_min }))
                .with_tolerances(json!({ "zero_tol": tol.zero_tol })),
            );
            report.conclude();
            return Ok(report);
        }
        Err(e) => return Err(e),
    };

    let x_star = eq.stacked();
    let d_full = stack(&d, &DVector::zeros(p));
    report.push(line_condition(
        "dae.equilibrium-line",
        |x| dae.full_residual(x),
        &x_star,
        &d_full,
        tol,
    )?);

    let checks = spectral_checks("dae", &red.f_prime, Some(&d), tol)?;
    report.conditions.extend(checks.conditions);
    report.spectra.push(checks.summary);

    let full = jac.full();
    let smax = rank_info(&full, None).sigma_max();
    let threshold = T::lit(tol.zero_tol) * smax;
    let info = rank_info(&full, Some(threshold));
    let sv = &info.singular_values;
    let marginal = sv
        .iter()
        .any(|s| tol.band(s.as_f64(), threshold.as_f64()) == Band::Marginal);
    let outcome = if marginal {
        Outcome::Inconclusive
    } else {
        Outcome::from_bool(info.corank == 1)
    };
    report.push(
        Condition::new(
            "dae.full-corank",
            outcome,
            format!("corank of F' is {}", info.corank),
        )
        .with_certificate(
            json!({ "corank": info.corank, "singular_values": vec_f64(sv.iter().copied()) }),
        )
        .with_tolerances(json!({ "rank_threshold": threshold.as_f64() })),
    );

    let cond = match (&checks.kernel, &checks.generalized) {
        (Some(pk), Some(qk)) => {
            let p_bar = red.lift(pk);
            let q_bar = red.lift(qk);
            let t = transversality(
                |x| dae.full_residual(x),
                |x| dae.full_jacobian(x),
                &x_star,
                &p_bar,
                &q_bar,
                tol,
            )?;
            let mut c = transversality_condition("dae.transversality", &t, tol);
            c.certificate["p_bar"] = json!(vec_f64(p_bar.iter().copied()));
            c.certificate["q_bar"] = json!(vec_f64(q_bar.iter().copied()));
            c
        }
        _ => Condition::new(
            "dae.transversality",
            Outcome::Inconclusive,
            "not evaluated: no kernel vector with a generalized eigenvector",
        ),
    };
    report.push(cond);
    report.conclude();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Verdict;
    use crate::dae::{assemble_dae, normal_form_dae};
    use crate::netlist::parse_netlist;

    #[test]
    fn normal_form_dae_is_certified() {
        let dae = normal_form_dae::<f64>();
        let eq = EquilibriumPoint::at(&dae, DVector::zeros(2), DVector::zeros(1)).unwrap();
        let r = check_dae_tbwp(
            &dae,
            &eq,
            &DVector::from_vec(vec![1.0, 0.0]),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Certified, "{:#?}", r.conditions);
    }

    fn ml(coeffs: &str) -> TbwpReport {
        let c = parse_netlist::<f64>(&format!("M m1 a b {coeffs}\nL l1 a b 1\n")).unwrap();
        let dae = assemble_dae(&c).unwrap();
        let tol = Tolerances::default();
        let eq = dae.equilibrium_at(0.0, None, &tol).unwrap();
        check_dae_tbwp(&dae, &eq, &DVector::from_vec(vec![1.0, 0.0]), &tol).unwrap()
    }

    #[test]
    fn ml_parallel_linear_memristance_is_certified() {
        let r = ml("0 1");
        assert_eq!(r.verdict, Verdict::Certified, "{:#?}", r.conditions);
    }

    #[test]
    fn ml_parallel_quadratic_memristance_fails_transversality() {
        let r = ml("0 0 1");
        assert_eq!(r.verdict, Verdict::Refuted);
        assert_eq!(r.first_failure(), Some("dae.transversality"));
    }

    #[test]
    fn singular_gz_is_a_failing_condition() {
        let c = parse_netlist::<f64>("V v1 a b 1\nC c1 a b 1\nM m1 a b 1\n").unwrap();
        let dae = assemble_dae(&c).unwrap();
        let eq = EquilibriumPoint::at(&dae, DVector::from_vec(vec![0.0, 1.0]), DVector::zeros(3))
            .unwrap();
        let r = check_dae_tbwp(
            &dae,
            &eq,
            &DVector::from_vec(vec![1.0, 0.0]),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.first_failure(), Some("dae.gz-nonsingular"));
    }
}
