use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use super::{vec_f64, Condition, Outcome, SpectrumSummary};
use crate::numerics::{
    det_jacobian_derivative, generalized_eigvec, rank_info, second_directional_derivative,
    spectral_norm, spectrum, Band, Tolerances,
};
use crate::{Error, Result, Scalar};

/// Both implementations of the transversality condition at one point.
///
/// With `A = F'(x)` of corank one, kernel `p` and unit `q`:
/// the determinant route measures `(det F')'(x) q / (prod of the n-1
/// largest singular values)`, the image route measures the distance of
/// `F''(x) p q` from `im A`. Both are divided by `||A||`; for an exact
/// corank-one `A` the two magnitudes coincide.
#[derive(Debug, Clone, Serialize)]
pub struct Transversality {
    pub det_derivative: f64,
    pub det_scale: f64,
    /// Signed determinant-route scalar.
    pub det_value: f64,
    pub second_derivative: Vec<f64>,
    /// Image-route scalar.
    pub range_value: f64,
    pub det_band: Band,
    pub range_band: Band,
    pub routes_agree: bool,
    pub outcome: Outcome,
}

pub fn transversality<T, F, J>(
    residual: F,
    jacobian: J,
    x: &DVector<T>,
    p: &DVector<T>,
    q: &DVector<T>,
    tol: &Tolerances,
) -> Result<Transversality>
where
    T: Scalar,
    F: Fn(&DVector<T>) -> Result<DVector<T>>,
    J: Fn(&DVector<T>) -> Result<DMatrix<T>>,
{
    if p.norm().is_zero() || q.norm().is_zero() {
        return Err(Error::Evaluation(
            "transversality directions must be nonzero".into(),
        ));
    }
    let p = p.normalize();
    let q = q.normalize();
    let a = jacobian(x)?;
    let norm = spectral_norm(&a).max(T::machine_epsilon());
    let info = rank_info(&a, Some(T::lit(tol.zero_tol) * norm));
    let w = second_directional_derivative(&residual, x, &p, &q)?;
    let range_value = (info.range_residual(&w) / norm).as_f64();
    let det = det_jacobian_derivative(&jacobian, x, &q)?;
    let det_value = (det.normalized() / norm).as_f64();
    let det_band = tol.band(det_value.abs(), tol.trans_tol);
    let range_band = tol.band(range_value, tol.trans_tol);
    let routes_agree = det_band == range_band;
    let outcome = match (det_band, range_band) {
        (Band::Above, Band::Above) => Outcome::Pass,
        (Band::Below, Band::Below) => Outcome::Fail,
        _ => Outcome::Inconclusive,
    };
    Ok(Transversality {
        det_derivative: det.value.as_f64(),
        det_scale: det.scale.as_f64(),
        det_value,
        second_derivative: vec_f64(w.iter().copied()),
        range_value,
        det_band,
        range_band,
        routes_agree,
        outcome,
    })
}

pub(crate) fn transversality_condition(
    id: &str,
    t: &Transversality,
    tol: &Tolerances,
) -> Condition {
    let detail = match t.outcome {
        Outcome::Pass => format!("transversal: scalar {:.6e}", t.det_value),
        Outcome::Fail => format!(
            "not transversal: scalar {:.3e} below threshold",
            t.det_value
        ),
        Outcome::Inconclusive if !t.routes_agree => format!(
            "determinant route ({:.3e}) and image route ({:.3e}) disagree",
            t.det_value, t.range_value
        ),
        Outcome::Inconclusive => format!(
            "transversality scalar {:.3e} inside the margin band",
            t.det_value
        ),
    };
    Condition::new(id, t.outcome, detail)
        .with_certificate(serde_json::to_value(t).expect("serializable"))
        .with_tolerances(
            json!({ "trans_tol": tol.trans_tol, "margin_decades": tol.margin_decades }),
        )
}

/// Result of the spectral part of the check on a (reduced) Jacobian.
pub(crate) struct SpectralChecks<T: Scalar> {
    pub conditions: Vec<Condition>,
    pub summary: SpectrumSummary,
    /// Kernel vector `p` when the corank is one.
    pub kernel: Option<DVector<T>>,
    /// Generalized eigenvector `q` with `A q ∥ p` when it exists.
    pub generalized: Option<DVector<T>>,
}

/// Double zero eigenvalue of index two and normal hyperbolicity of the rest.
/// Condition ids are `<prefix>.double-zero`, `<prefix>.geometric-simple`,
/// `<prefix>.index-two` and `<prefix>.normal-hyperbolicity`.
pub(crate) fn spectral_checks<T: Scalar>(
    prefix: &str,
    a: &DMatrix<T>,
    orient: Option<&DVector<T>>,
    tol: &Tolerances,
) -> Result<SpectralChecks<T>> {
    let s = spectrum(a, tol)?;
    let summary = SpectrumSummary::new(prefix, &s);
    let mut conditions = Vec::new();
    let zero_threshold = s.zero_threshold.as_f64();
    let zero_values: Vec<[f64; 2]> = s
        .zero_cluster
        .iter()
        .map(|&k| summary.eigenvalues[k])
        .collect();
    let zero_ambiguous: Vec<usize> = s
        .ambiguous
        .iter()
        .copied()
        .filter(|&k| {
            let l = s.eigenvalues[k];
            tol.band(l.re.hypot(l.im).as_f64(), zero_threshold) == Band::Marginal
        })
        .collect();
    let outcome = if !zero_ambiguous.is_empty() {
        Outcome::Inconclusive
    } else {
        Outcome::from_bool(s.zero_cluster.len() == 2)
    };
    let detail = match outcome {
        Outcome::Inconclusive => {
            format!("eigenvalues {zero_ambiguous:?} lie in the margin band of the zero cluster")
        }
        _ => format!("{} eigenvalue(s) in the zero cluster", s.zero_cluster.len()),
    };
    conditions.push(
        Condition::new(&format!("{prefix}.double-zero"), outcome, detail)
            .with_certificate(
                json!({ "zero_eigenvalues": zero_values, "ambiguous": zero_ambiguous }),
            )
            .with_tolerances(json!({ "zero_threshold": zero_threshold, "zero_tol": tol.zero_tol })),
    );

    let norm = s.scale.max(T::machine_epsilon());
    let threshold = T::lit(tol.zero_tol) * norm;
    let info = rank_info(a, Some(threshold));
    let sv = &info.singular_values;
    let n = sv.len();
    let smallest = sv.last().copied().unwrap_or_else(T::zero).as_f64();
    let second = if n >= 2 {
        sv[n - 2].as_f64()
    } else {
        f64::INFINITY
    };
    let t = threshold.as_f64();
    let outcome = if info.corank == 1 {
        match (tol.band(smallest, t), tol.band(second, t)) {
            (Band::Below, Band::Above) => Outcome::Pass,
            _ => Outcome::Inconclusive,
        }
    } else if sv.iter().any(|v| tol.band(v.as_f64(), t) == Band::Marginal) {
        Outcome::Inconclusive
    } else {
        Outcome::Fail
    };
    let kernel = (info.corank == 1).then(|| {
        let mut p = info.null_basis.column(0).into_owned();
        if let Some(d) = orient {
            if p.dot(d) < T::zero() {
                p = -p;
            }
        }
        p
    });
    conditions.push(
        Condition::new(
            &format!("{prefix}.geometric-simple"),
            outcome,
            format!(
                "corank {} (smallest singular values {:.3e}, {:.3e})",
                info.corank, smallest, second
            ),
        )
        .with_certificate(json!({
            "corank": info.corank,
            "singular_values": vec_f64(sv.iter().copied()),
            "kernel": kernel.as_ref().map(|p| vec_f64(p.iter().copied())),
        }))
        .with_tolerances(json!({ "rank_threshold": t, "zero_tol": tol.zero_tol })),
    );

    let mut generalized = None;
    let index_condition = match &kernel {
        None => Condition::new(
            &format!("{prefix}.index-two"),
            if outcome == Outcome::Inconclusive {
                Outcome::Inconclusive
            } else {
                Outcome::Fail
            },
            "no one-dimensional kernel to build a Jordan chain on",
        ),
        Some(p) => {
            let (residual, q) = match generalized_eigvec(a, p, Some(threshold), T::lit(tol.lsq_tol))
            {
                Ok(g) => (g.residual.as_f64(), Some(g.q)),
                Err(Error::NoIndexTwo { residual, .. }) => (residual, None),
                Err(e) => return Err(e),
            };
            let relative = residual / p.norm().as_f64();
            let band = tol.band(relative, tol.lsq_tol);
            let outcome = match (band, &q) {
                (Band::Below, Some(_)) => Outcome::Pass,
                (Band::Above, _) => Outcome::Fail,
                _ => Outcome::Inconclusive,
            };
            let detail = match outcome {
                Outcome::Pass => "kernel vector lies in the image: Jordan chain of length two".to_string(),
                Outcome::Fail => format!("kernel vector not in the image (residual {relative:.3e}): zero eigenvalue is simple"),
                Outcome::Inconclusive => format!("Jordan-chain residual {relative:.3e} inside the margin band"),
            };
            let cert = json!({
                "p": vec_f64(p.iter().copied()),
                "q": q.as_ref().map(|q| vec_f64(q.iter().copied())),
                "residual": relative,
            });
            generalized = q;
            Condition::new(&format!("{prefix}.index-two"), outcome, detail).with_certificate(cert)
        }
    };
    conditions.push(index_condition.with_tolerances(json!({ "lsq_tol": tol.lsq_tol })));

    let rest_ambiguous: Vec<usize> = s
        .ambiguous
        .iter()
        .copied()
        .filter(|k| !s.zero_cluster.contains(k))
        .collect();
    let outcome = if !s.critical.is_empty() {
        Outcome::Fail
    } else if !rest_ambiguous.is_empty() {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };
    let detail = match outcome {
        Outcome::Pass => format!(
            "{} stable, {} unstable, none critical",
            s.stable.len(),
            s.unstable.len()
        ),
        Outcome::Fail => format!("eigenvalues {:?} are on the imaginary axis", s.critical),
        Outcome::Inconclusive => {
            format!("eigenvalues {rest_ambiguous:?} have real parts inside the margin band")
        }
    };
    conditions.push(
        Condition::new(&format!("{prefix}.normal-hyperbolicity"), outcome, detail)
            .with_certificate(json!({ "critical": s.critical, "ambiguous": rest_ambiguous }))
            .with_tolerances(json!({ "realpart_threshold": s.realpart_threshold.as_f64(), "realpart_tol": tol.realpart_tol })),
    );

    Ok(SpectralChecks {
        conditions,
        summary,
        kernel,
        generalized,
    })
}

/// Samples `|| F(x* + t d) ||_inf` over the symmetric grid of the registry.
pub(crate) fn line_condition<T, F>(
    id: &str,
    residual: F,
    x: &DVector<T>,
    d: &DVector<T>,
    tol: &Tolerances,
) -> Result<Condition>
where
    T: Scalar,
    F: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    let n = tol.line_samples.max(2);
    let half = tol.line_halfwidth;
    let mut worst = 0.0f64;
    let mut grid = Vec::with_capacity(n);
    for k in 0..n {
        let t = -half + 2.0 * half * k as f64 / (n - 1) as f64;
        grid.push(t);
        let r = residual(&(x + d * T::lit(t)))?;
        let m = r.iter().fold(0.0f64, |m, c| m.max(c.abs().as_f64()));
        worst = worst.max(if m.is_finite() { m } else { f64::INFINITY });
    }
    let outcome = Outcome::below(tol.band(worst, tol.line_tol));
    Ok(Condition::new(
        id,
        outcome,
        format!("max residual {worst:.3e} over {n} samples along the line"),
    )
    .with_certificate(json!({ "max_residual": worst, "samples": grid }))
    .with_tolerances(json!({ "line_tol": tol.line_tol, "line_halfwidth": half })))
}
