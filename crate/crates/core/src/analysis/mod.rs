//! Certification of transcritical bifurcations without parameters at the
//! ODE, DAE and circuit level, and the non-passive multiplicity test.
//!
//! Every check returns a [`TbwpReport`] listing its conditions in a fixed
//! order. A condition passes, fails, or is inconclusive when its deciding
//! quantity falls inside the margin band of its threshold. The verdict is
//! certified iff all conditions pass.

mod circuit;
mod core;
mod dae;
mod nonpassive;
mod ode;

use serde::Serialize;
use serde_json::Value;

pub use self::circuit::{
    check_circuit_tbwp, classify_equilibrium_branch, BranchSample, CircuitTbwpReport,
    MemristanceInfo, Passivity,
};
pub use self::core::{transversality, Transversality};
pub use self::dae::check_dae_tbwp;
pub use self::nonpassive::{check_nonpassive_zero_multiplicity, NonpassiveReport, TreeSum};
pub use self::ode::{check_ode_tbwp, FnField, VectorField};

use crate::numerics::{Band, Spectrum, Tolerances};
use crate::Scalar;

/// Version of the JSON layout of every report.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Process exit code: 0 certified, 1 refuted, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Certified => 0,
            Verdict::Refuted => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    /// Maps a band to an outcome when "above the threshold" is the passing side.
    pub fn above(band: Band) -> Self {
        match band {
            Band::Above => Outcome::Pass,
            Band::Below => Outcome::Fail,
            Band::Marginal => Outcome::Inconclusive,
        }
    }

    pub fn below(band: Band) -> Self {
        match band {
            Band::Below => Outcome::Pass,
            Band::Above => Outcome::Fail,
            Band::Marginal => Outcome::Inconclusive,
        }
    }

    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// One checked hypothesis with the numbers that decided it.
#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub id: String,
    pub pass: bool,
    pub outcome: Outcome,
    pub detail: String,
    pub certificate: Value,
    /// Thresholds the decision was taken against.
    pub tolerances: Value,
}

impl Condition {
    pub fn new(id: &str, outcome: Outcome, detail: impl Into<String>) -> Self {
        Self {
            id: id.to_string(),
            pass: outcome == Outcome::Pass,
            outcome,
            detail: detail.into(),
            certificate: Value::Null,
            tolerances: Value::Null,
        }
    }

    pub fn with_certificate(mut self, certificate: Value) -> Self {
        self.certificate = certificate;
        self
    }

    pub fn with_tolerances(mut self, tolerances: Value) -> Self {
        self.tolerances = tolerances;
        self
    }
}

/// Eigenvalues as `[re, im]` pairs with the index partition.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub label: String,
    pub eigenvalues: Vec<[f64; 2]>,
    pub zero_cluster: Vec<usize>,
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
    pub critical: Vec<usize>,
    pub ambiguous: Vec<usize>,
    pub scale: f64,
}

impl SpectrumSummary {
    pub fn new<T: Scalar>(label: &str, s: &Spectrum<T>) -> Self {
        Self {
            label: label.to_string(),
            eigenvalues: s
                .eigenvalues
                .iter()
                .map(|l| [l.re.as_f64(), l.im.as_f64()])
                .collect(),
            zero_cluster: s.zero_cluster.clone(),
            stable: s.stable.clone(),
            unstable: s.unstable.clone(),
            critical: s.critical.clone(),
            ambiguous: s.ambiguous.clone(),
            scale: s.scale.as_f64(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TbwpReport {
    pub schema: u32,
    /// `ode`, `dae`, `circuit` or `nonpassive`.
    pub level: String,
    pub verdict: Verdict,
    pub conditions: Vec<Condition>,
    pub spectra: Vec<SpectrumSummary>,
    /// Unit direction of the equilibrium line and where it came from.
    pub line_direction: Vec<f64>,
    pub line_direction_source: String,
    pub tolerances: Tolerances,
}

impl TbwpReport {
    pub(crate) fn new(level: &str, tol: &Tolerances) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            level: level.to_string(),
            verdict: Verdict::Inconclusive,
            conditions: Vec::new(),
            spectra: Vec::new(),
            line_direction: Vec::new(),
            line_direction_source: String::new(),
            tolerances: tol.clone(),
        }
    }

    pub(crate) fn push(&mut self, c: Condition) {
        self.conditions.push(c);
    }

    /// Any failure refutes; otherwise any inconclusive condition makes the
    /// report inconclusive.
    pub(crate) fn conclude(&mut self) {
        self.verdict = verdict_of(&self.conditions);
    }

    pub fn condition(&self, id: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }

    /// Id of the first failing condition.
    pub fn first_failure(&self) -> Option<&str> {
        self.conditions
            .iter()
            .find(|c| c.outcome == Outcome::Fail)
            .map(|c| c.id.as_str())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

pub(crate) fn verdict_of(conditions: &[Condition]) -> Verdict {
    if conditions.iter().any(|c| c.outcome == Outcome::Fail) {
        Verdict::Refuted
    } else if conditions
        .iter()
        .any(|c| c.outcome == Outcome::Inconclusive)
        || conditions.is_empty()
    {
        Verdict::Inconclusive
    } else {
        Verdict::Certified
    }
}

pub(crate) fn vec_f64<T: Scalar>(v: impl IntoIterator<Item = T>) -> Vec<f64> {
    v.into_iter().map(|x| x.as_f64()).collect()
}
