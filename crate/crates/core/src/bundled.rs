//! Example inputs shipped with the crate.

/// Memristor in series with a unit resistor and a unit inductor, `M(q) = -1 + q`.
pub const MRL: &str = include_str!("../circuits/mrl.net");
/// Memristor `M(q) = q` in parallel with a unit inductor.
pub const ML_PARALLEL: &str = include_str!("../circuits/ml_parallel.net");
/// Two RC neurons coupled through four synapses, one of them memristive.
pub const NEURAL: &str = include_str!("../circuits/neural.net");
/// A voltage source in parallel with a capacitor.
pub const VC_LOOP: &str = include_str!("../circuits/vc_loop.net");
/// Normal form `x' = y, y' = xy` in the polynomial field format.
pub const NORMAL_FORM: &str = include_str!("../circuits/normal_form.field");
