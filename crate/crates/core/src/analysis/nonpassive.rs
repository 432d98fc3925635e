use serde::Serialize;
use serde_json::json;

use super::{Condition, Outcome, SpectrumSummary, TbwpReport, Verdict};
use crate::dae::{pencil_spectrum, CircuitDae, Devices, EquilibriumPoint};
use crate::graph::{
    check_configurations, enumerate_trees, ClassWitness, FamilyKind, OperatingPoint, TreeRecord,
};
use crate::numerics::Tolerances;
use crate::{Result, Scalar};

/// MR-product sum over one tree family.
#[derive(Debug, Clone, Serialize)]
pub struct TreeSum {
    pub family: FamilyKind,
    pub count: usize,
    pub sum: f64,
    /// Sum of the absolute products; the vanishing test is relative to it.
    pub scale: f64,
    pub trees: Vec<TreeRecord<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonpassiveReport {
    #[serde(flatten)]
    pub report: TbwpReport,
    pub proper: TreeSum,
    pub l_proper: TreeSum,
    /// Size of the zero cluster of the reduced Jacobian, when it could be computed.
    pub zero_cluster: Option<usize>,
    /// The hypotheses hold, so a multiple zero eigenvalue is predicted.
    pub multiple_zero_predicted: bool,
}

impl NonpassiveReport {
    pub fn verdict(&self) -> Verdict {
        self.report.verdict
    }
}

fn tree_sum<T: Scalar>(
    dae_circuit: &crate::netlist::Circuit<T>,
    kind: FamilyKind,
    point: &OperatingPoint<T>,
) -> TreeSum {
    let mut family = enumerate_trees(dae_circuit, kind);
    let sum = family.evaluate(dae_circuit, point);
    let scale = family
        .cotree_products
        .iter()
        .fold(0.0, |a, p| a + p.abs().as_f64());
    let trees = family
        .records(dae_circuit)
        .into_iter()
        .map(|r| TreeRecord {
            branches: r.branches,
            cotree_product: r.cotree_product.as_f64(),
        })
        .collect();
    TreeSum {
        family: kind,
        count: family.len(),
        sum: sum.as_f64(),
        scale,
        trees,
    }
}

/// Tests whether a circuit with one memristor, possibly with active
/// resistors or memristor, meets the topological and tree-sum conditions
/// under which the equilibrium `eq` has a multiple zero eigenvalue, and
/// compares with the computed spectrum.
///
/// Condition ids: `nonpassive.no-vc-loop`, `nonpassive.no-il-cutset`,
/// `nonpassive.no-vl-loop`, `nonpassive.no-ic-cutset`,
/// `nonpassive.proper-sum-nonzero`, `nonpassive.lproper-sum-zero`, and
/// `nonpassive.multiple-zero` when all of these pass.
pub fn check_nonpassive_zero_multiplicity<T, D>(
    dae: &CircuitDae<T, D>,
    eq: &EquilibriumPoint<T>,
    tol: &Tolerances,
) -> Result<NonpassiveReport>
where
    T: Scalar,
    D: Devices<T>,
{
    let circuit = dae.circuit();
    let layout = dae.layout();
    let mut report = TbwpReport::new("nonpassive", tol);
    let config = check_configurations(circuit);

    let absent = |id: &str, w: &ClassWitness, what: &str| {
        let detail = if w.found {
            format!("{what} found: {}", w.witness.join(", "))
        } else {
            format!("no {what}")
        };
        Condition::new(id, Outcome::from_bool(!w.found), detail)
            .with_certificate(json!({ "witness": w.witness }))
    };
    report.push(absent("nonpassive.no-vc-loop", &config.vc_loop, "VC-loop"));
    report.push(absent(
        "nonpassive.no-il-cutset",
        &config.il_cutset,
        "IL-cutset",
    ));
    report.push(absent("nonpassive.no-vl-loop", &config.vl_loop, "VL-loop"));
    report.push(absent(
        "nonpassive.no-ic-cutset",
        &config.ic_cutset,
        "IC-cutset",
    ));

    let point = OperatingPoint {
        charges: eq
            .y
            .rows(layout.q_m().start, layout.q_m().len())
            .iter()
            .copied()
            .collect(),
        resistor_currents: eq
            .z
            .rows(layout.i_r().start, layout.i_r().len())
            .iter()
            .copied()
            .collect(),
    };
    let proper = tree_sum(circuit, FamilyKind::Proper, &point);
    let l_proper = tree_sum(circuit, FamilyKind::LProper, &point);

    let (outcome, detail) = if proper.count == 0 {
        (Outcome::Fail, "no proper tree exists".to_string())
    } else {
        let o = Outcome::above(tol.band(proper.sum.abs(), tol.trans_tol * proper.scale));
        (
            o,
            format!(
                "sum over {} proper trees is {:.6e}",
                proper.count, proper.sum
            ),
        )
    };
    report.push(
        Condition::new("nonpassive.proper-sum-nonzero", outcome, detail)
            .with_certificate(
                json!({ "count": proper.count, "sum": proper.sum, "scale": proper.scale }),
            )
            .with_tolerances(json!({ "trans_tol": tol.trans_tol })),
    );

    let (outcome, detail) = if l_proper.count == 0 {
        (Outcome::Fail, "no L-proper tree exists".to_string())
    } else {
        let o = Outcome::below(tol.band(l_proper.sum.abs(), tol.trans_tol * l_proper.scale));
        (
            o,
            format!(
                "sum over {} L-proper trees is {:.6e}",
                l_proper.count, l_proper.sum
            ),
        )
    };
    report.push(
        Condition::new("nonpassive.lproper-sum-zero", outcome, detail)
            .with_certificate(
                json!({ "count": l_proper.count, "sum": l_proper.sum, "scale": l_proper.scale }),
            )
            .with_tolerances(json!({ "trans_tol": tol.trans_tol })),
    );

    let predicted = report.conditions.iter().all(|c| c.outcome == Outcome::Pass);
    let spectrum = pencil_spectrum(dae, eq, tol);
    let zero_cluster = spectrum
        .as_ref()
        .ok()
        .map(|ps| ps.spectrum.zero_cluster.len());
    if let Ok(ps) = &spectrum {
        report
            .spectra
            .push(SpectrumSummary::new("dae", &ps.spectrum));
    }
    if predicted {
        let cond = match &spectrum {
            Ok(ps) => {
                let n = ps.spectrum.zero_cluster.len();
                let detail = if n >= 2 {
                    format!("zero eigenvalue of multiplicity {n}")
                } else {
                    format!("hypotheses hold but the zero cluster has {n} eigenvalue(s)")
                };
                Condition::new(
                    "nonpassive.multiple-zero",
                    Outcome::from_bool(n >= 2),
                    detail,
                )
                .with_certificate(json!({ "zero_cluster": n }))
            }
            Err(e) => Condition::new(
                "nonpassive.multiple-zero",
                Outcome::Inconclusive,
                format!("spectrum unavailable: {e}"),
            ),
        };
        report.push(cond.with_tolerances(json!({ "zero_tol": tol.zero_tol })));
    }
    report.conclude();
    Ok(NonpassiveReport {
        report,
        proper,
        l_proper,
        zero_cluster,
        multiple_zero_predicted: predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::dae::assemble_dae;
    use crate::netlist::parse_netlist;

    fn run(text: &str, q: f64) -> NonpassiveReport {
        let dae = assemble_dae(&parse_netlist::<f64>(text).unwrap()).unwrap();
        let tol = Tolerances::default();
        let eq = dae.equilibrium_at(q, None, &tol).unwrap();
        check_nonpassive_zero_multiplicity(&dae, &eq, &tol).unwrap()
    }

    #[test]
    fn mrl_with_active_memristor_has_multiple_zero() {
        let r = run(bundled::MRL, 0.0);
        assert_eq!(
            r.verdict(),
            Verdict::Certified,
            "{:#?}",
            r.report.conditions
        );
        assert_eq!((r.proper.count, r.l_proper.count), (1, 2));
        assert_eq!(r.proper.sum, 1.0);
        assert!(r.l_proper.sum.abs() < 1e-15);
        assert_eq!(r.zero_cluster, Some(2));
    }

    #[test]
    fn mrl_away_from_zero_sum() {
        let r = run(bundled::MRL, 0.5);
        assert_eq!(r.verdict(), Verdict::Refuted);
        assert_eq!(
            r.report.first_failure(),
            Some("nonpassive.lproper-sum-zero")
        );
        assert!((r.l_proper.sum - 0.5).abs() < 1e-15);
        assert!(!r.multiple_zero_predicted);
        assert_eq!(r.zero_cluster, Some(1));
    }

    #[test]
    fn vc_loop_fails_first() {
        let r = run(
            "V v1 a g 1\nC c1 a g 1\nR r1 a b 1\nM m1 b g 0 1\nL l1 b g 1\n",
            0.0,
        );
        assert_eq!(r.report.first_failure(), Some("nonpassive.no-vc-loop"));
    }
}
