use nalgebra::DVector;

use tbwp::analysis::{
    check_circuit_tbwp, check_nonpassive_zero_multiplicity, check_ode_tbwp, Verdict,
};
use tbwp::bundled;
use tbwp::dae::assemble_dae;
use tbwp::field::parse_field;
use tbwp::graph::{enumerate_trees, mr_product_sum, FamilyKind, OperatingPoint};
use tbwp::netlist::parse_netlist;
use tbwp::numerics::Tolerances;
use tbwp::{CircuitDaeF32, CircuitF32};

fn relaxed() -> Tolerances {
    let mut tol = Tolerances::default();
    for (key, value) in [
        ("zero_tol", "1e-4"),
        ("realpart_tol", "1e-4"),
        ("trans_tol", "1e-3"),
        ("lsq_tol", "1e-4"),
        ("newton_tol", "1e-5"),
        ("line_tol", "1e-5"),
    ] {
        tol.set(key, value).unwrap();
    }
    tol
}

#[test]
fn ml_parallel_is_certified_in_single_precision() {
    let tol = relaxed();
    let circuit: CircuitF32 = parse_netlist(bundled::ML_PARALLEL).unwrap();
    let dae: CircuitDaeF32 = assemble_dae(&circuit).unwrap();
    let eq = dae.equilibrium_at(0.0f32, None, &tol).unwrap();
    let report = check_circuit_tbwp(&dae, &eq, &tol).unwrap();
    assert_eq!(
        report.verdict(),
        Verdict::Certified,
        "{:#?}",
        report.report.conditions
    );
}

#[test]
fn mrl_tree_sum_and_multiple_zero_in_single_precision() {
    let tol = relaxed();
    let circuit: CircuitF32 = parse_netlist(bundled::MRL).unwrap();
    let family = enumerate_trees(&circuit, FamilyKind::LProper);
    let sum = mr_product_sum(
        &circuit,
        &family,
        &OperatingPoint::at_charge(&circuit, 0.3f32),
    );
    assert!((sum - 0.3).abs() <= 1e-6);
    let dae = assemble_dae(&circuit).unwrap();
    let eq = dae.equilibrium_at(0.0f32, None, &tol).unwrap();
    let report = check_nonpassive_zero_multiplicity(&dae, &eq, &tol).unwrap();
    assert_eq!(
        report.verdict(),
        Verdict::Certified,
        "{:#?}",
        report.report.conditions
    );
}

#[test]
fn normal_form_field_in_single_precision() {
    let field = parse_field(bundled::NORMAL_FORM).unwrap();
    let origin = DVector::<f32>::zeros(2);
    let line = DVector::from_vec(vec![1.0f32, 0.0]);
    let report = check_ode_tbwp(&field, &origin, &line, &relaxed()).unwrap();
    assert_eq!(
        report.verdict,
        Verdict::Certified,
        "{:#?}",
        report.conditions
    );
}
