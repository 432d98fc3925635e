use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use super::dae::check_dae_with_source;
use super::{verdict_of, Condition, Outcome, TbwpReport, Verdict};
use crate::dae::{pencil_spectrum, CircuitDae, Devices, EquilibriumPoint};
use crate::graph::{check_configurations, ConfigReport};
use crate::numerics::Tolerances;
use crate::{Error, Result, Scalar};

/// Local passivity of the devices at the operating point.
#[derive(Debug, Clone, Serialize)]
pub struct Passivity {
    /// Smallest eigenvalue of the symmetric part; `None` when the class is empty.
    pub capacitance_min_eig: Option<f64>,
    pub inductance_min_eig: Option<f64>,
    pub resistance_min_eig: Option<f64>,
    pub capacitance_symmetric: bool,
    pub inductance_symmetric: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MemristanceInfo {
    pub charge: f64,
    pub memristance: f64,
    pub slope: f64,
}

/// Linear stability of one equilibrium of the line.
#[derive(Debug, Clone, Serialize)]
pub struct BranchSample {
    pub charge: f64,
    pub memristance: f64,
    pub eigenvalues: Vec<[f64; 2]>,
    /// Eigenvalue counts by sign of the real part; `zero` is the zero cluster.
    pub positive: usize,
    pub negative: usize,
    pub critical: usize,
    pub zero: usize,
    /// Exactly one eigenvalue in the zero cluster.
    pub simple_zero: bool,
    /// Failure to find the equilibrium or its spectrum at this sample.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CircuitTbwpReport {
    #[serde(flatten)]
    pub report: TbwpReport,
    pub structural_verdict: Verdict,
    pub numeric_verdict: Verdict,
    pub config: ConfigReport,
    pub passivity: Passivity,
    pub memristance: MemristanceInfo,
    /// Samples just below and above the charge of the analyzed equilibrium.
    pub stability_profile: Vec<BranchSample>,
}

fn min_sym_eig<T: Scalar>(m: &DMatrix<T>) -> Option<f64> {
    if m.is_empty() {
        return None;
    }
    let sym = (m + m.transpose()) * T::lit(0.5);
    let eig = sym.symmetric_eigenvalues();
    Some(eig.iter().fold(f64::INFINITY, |a, v| a.min(v.as_f64())))
}

fn is_symmetric<T: Scalar>(m: &DMatrix<T>, tol: &Tolerances) -> bool {
    (m - m.transpose()).norm() <= T::lit(tol.zero_tol) * m.norm()
}

fn part<T: Scalar>(v: &DVector<T>, r: std::ops::Range<usize>) -> DVector<T> {
    v.rows(r.start, r.len()).into_owned()
}

fn passivity<T: Scalar, D: Devices<T>>(
    dae: &CircuitDae<T, D>,
    eq: &EquilibriumPoint<T>,
    tol: &Tolerances,
) -> (Passivity, Condition) {
    let l = dae.layout();
    let c = dae.devices().capacitance(&part(&eq.y, l.v_c()));
    let li = dae.devices().inductance(&part(&eq.y, l.i_l()));
    let r = dae.devices().resistance(&part(&eq.z, l.i_r()));
    let info = Passivity {
        capacitance_min_eig: min_sym_eig(&c),
        inductance_min_eig: min_sym_eig(&li),
        resistance_min_eig: min_sym_eig(&r),
        capacitance_symmetric: is_symmetric(&c, tol),
        inductance_symmetric: is_symmetric(&li, tol),
    };
    let mut outcome = Outcome::from_bool(info.capacitance_symmetric && info.inductance_symmetric);
    let mut offending = Vec::new();
    for (name, m, e) in [
        ("capacitance", &c, info.capacitance_min_eig),
        ("inductance", &li, info.inductance_min_eig),
        ("resistance", &r, info.resistance_min_eig),
    ] {
        let Some(e) = e else { continue };
        let scale = m.norm().as_f64().max(f64::MIN_POSITIVE);
        let o = Outcome::above(tol.band(e / scale, tol.zero_tol));
        if o != Outcome::Pass {
            offending.push(name);
        }
        outcome = match (outcome, o) {
            (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
            (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => Outcome::Inconclusive,
            _ => Outcome::Pass,
        };
    }
    let detail = if outcome == Outcome::Pass {
        "capacitance, inductance and resistance are positive definite; C and L symmetric"
            .to_string()
    } else {
        format!(
            "not strictly locally passive: {}",
            if offending.is_empty() {
                "asymmetric C or L".to_string()
            } else {
                offending.join(", ")
            }
        )
    };
    let cond = Condition::new("circuit.passivity", outcome, detail)
        .with_certificate(serde_json::to_value(&info).expect("serializable"))
        .with_tolerances(json!({ "zero_tol": tol.zero_tol }));
    (info, cond)
}

/// Checks the circuit-level hypotheses at `eq` and, independently, the DAE
/// hypotheses on the assembled equations with the line along the charge
/// axis. Disagreement between the two verdicts is reported as inconclusive.
///
/// Condition ids: `circuit.no-vmc-loop`, `circuit.no-ilc-cutset`,
/// `circuit.unique-vml-loop`, `circuit.passivity`, `circuit.memristance-zero`,
/// `circuit.memristance-slope`, then the `dae.*` conditions, and
/// `circuit.consistency` when the structural and numeric verdicts differ.
pub fn check_circuit_tbwp<T, D>(
    dae: &CircuitDae<T, D>,
    eq: &EquilibriumPoint<T>,
    tol: &Tolerances,
) -> Result<CircuitTbwpReport>
where
    T: Scalar,
    D: Devices<T>,
{
    let circuit = dae.circuit();
    if dae.layout().memristors != 1 {
        return Err(Error::NoMemristor);
    }
    let mut report = TbwpReport::new("circuit", tol);
    let config = check_configurations(circuit);

    let absent = |id: &str, w: &crate::graph::ClassWitness, what: &str| {
        let outcome = Outcome::from_bool(!w.found);
        let detail = if w.found {
            format!("{what} found: {}", w.witness.join(", "))
        } else {
            format!("no {what}")
        };
        Condition::new(id, outcome, detail).with_certificate(json!({ "witness": w.witness }))
    };
    report.push(absent("circuit.no-vmc-loop", &config.vmc_loop, "VMC-loop"));
    report.push(absent(
        "circuit.no-ilc-cutset",
        &config.ilc_cutset,
        "ILC-cutset",
    ));

    let (outcome, detail) = if !config.vml_enumeration_complete {
        (
            Outcome::Inconclusive,
            "too many VML cycles to enumerate".to_string(),
        )
    } else {
        match config.vml_loops.len() {
            0 => (Outcome::Fail, "no VML-loop".to_string()),
            1 if config.unique_vml_loop_with_memristor_and_inductor => (
                Outcome::Pass,
                format!("unique VML-loop {{{}}}", config.vml_loops[0].join(", ")),
            ),
            1 => (
                Outcome::Fail,
                format!(
                    "the unique VML-loop {{{}}} lacks the memristor or an inductor",
                    config.vml_loops[0].join(", ")
                ),
            ),
            n => (Outcome::Fail, format!("{n} VML-loops")),
        }
    };
    report.push(
        Condition::new("circuit.unique-vml-loop", outcome, detail)
            .with_certificate(json!({ "loops": config.vml_loops, "count": config.vml_loop_count })),
    );

    let (passivity, cond) = passivity(dae, eq, tol);
    report.push(cond);

    let q = eq.y[0];
    let m = dae.memristance(q)?;
    let slope = dae.memristance_slope(q)?;
    let memristance = MemristanceInfo {
        charge: q.as_f64(),
        memristance: m.as_f64(),
        slope: slope.as_f64(),
    };
    report.push(
        Condition::new(
            "circuit.memristance-zero",
            Outcome::below(tol.band(m.abs().as_f64(), tol.zero_tol)),
            format!("M(q*) = {:.6e}", m.as_f64()),
        )
        .with_certificate(json!({ "memristance": m.as_f64() }))
        .with_tolerances(json!({ "zero_tol": tol.zero_tol })),
    );
    report.push(
        Condition::new(
            "circuit.memristance-slope",
            Outcome::above(tol.band(slope.abs().as_f64(), tol.trans_tol)),
            format!("M'(q*) = {:.6e}", slope.as_f64()),
        )
        .with_certificate(json!({ "slope": slope.as_f64() }))
        .with_tolerances(json!({ "trans_tol": tol.trans_tol })),
    );
    let structural_verdict = verdict_of(&report.conditions);

    let mut axis = DVector::zeros(dae.layout().r());
    axis[0] = T::one();
    let numeric = check_dae_with_source(dae, eq, &axis, "memristor-charge-axis", tol)?;
    let numeric_verdict = numeric.verdict;
    report.line_direction = numeric.line_direction.clone();
    report.line_direction_source = numeric.line_direction_source.clone();
    report.spectra = numeric.spectra;
    report.conditions.extend(numeric.conditions);

    report.verdict = if structural_verdict == numeric_verdict {
        structural_verdict
    } else {
        report.push(
            Condition::new(
                "circuit.consistency",
                Outcome::Inconclusive,
                format!(
                    "structural verdict {} and numeric verdict {} disagree",
                    structural_verdict.name(),
                    numeric_verdict.name()
                ),
            )
            .with_certificate(
                json!({ "structural": structural_verdict, "numeric": numeric_verdict }),
            ),
        );
        Verdict::Inconclusive
    };

    let h = T::lit(tol.line_halfwidth);
    let stability_profile = classify_equilibrium_branch(dae, &[q - h, q + h], Some(eq), tol);
    Ok(CircuitTbwpReport {
        report,
        structural_verdict,
        numeric_verdict,
        config,
        passivity,
        memristance,
        stability_profile,
    })
}

/// Eigenvalue sign counts of the reduced Jacobian at equilibria with the
/// given memristor charges. Failures are recorded per sample.
pub fn classify_equilibrium_branch<T, D>(
    dae: &CircuitDae<T, D>,
    charges: &[T],
    seed: Option<&EquilibriumPoint<T>>,
    tol: &Tolerances,
) -> Vec<BranchSample>
where
    T: Scalar,
    D: Devices<T>,
{
    let mut last = seed.map(|e| e.stacked());
    charges
        .iter()
        .map(|&q| {
            let mut sample = BranchSample {
                charge: q.as_f64(),
                memristance: dae.memristance(q).map(|m| m.as_f64()).unwrap_or(f64::NAN),
                eigenvalues: Vec::new(),
                positive: 0,
                negative: 0,
                critical: 0,
                zero: 0,
                simple_zero: false,
                error: None,
            };
            let result = dae
                .equilibrium_at(q, last.as_ref(), tol)
                .and_then(|eq| pencil_spectrum(dae, &eq, tol).map(|ps| (eq, ps)));
            match result {
                Ok((eq, ps)) => {
                    let s = &ps.spectrum;
                    sample.eigenvalues = s
                        .eigenvalues
                        .iter()
                        .map(|l| [l.re.as_f64(), l.im.as_f64()])
                        .collect();
                    sample.positive = s.unstable.len();
                    sample.negative = s.stable.len();
                    sample.critical = s.critical.len();
                    sample.zero = s.zero_cluster.len();
                    sample.simple_zero = sample.zero == 1;
                    last = Some(eq.stacked());
                }
                Err(e) => sample.error = Some(e.to_string()),
            }
            sample
        })
        .collect()
}

impl CircuitTbwpReport {
    pub fn verdict(&self) -> Verdict {
        self.report.verdict
    }

    pub fn first_failure(&self) -> Option<&str> {
        self.report.first_failure()
    }
}
