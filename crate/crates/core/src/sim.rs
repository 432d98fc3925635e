//! Dynamic demonstration of the stability exchange: integrate the reduced
//! equations from small perturbations of equilibria on both sides of the
//! bifurcation point, and trace the spectrum along the equilibrium line.
//!
//! The equilibrium line is taken along the first differential coordinate
//! (the memristor charge for assembled circuits).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dae::{
    find_equilibrium, pencil_spectrum, reduced_field, CircuitDae, Dae, Devices, EquilibriumPoint,
};
use crate::graph::{enumerate_trees, mr_product_sum, FamilyKind, OperatingPoint};
use crate::numerics::{spectrum, Svd, Tolerances};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExchangeParams {
    /// Offset of each side's base equilibrium from the bifurcation charge.
    pub dq: f64,
    /// Size of the perturbation transverse to the line.
    pub eps: f64,
    pub t_end: f64,
    pub step: f64,
}

impl Default for ExchangeParams {
    fn default() -> Self {
        Self {
            dq: 0.1,
            eps: 1e-3,
            t_end: 50.0,
            step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SideVerdict {
    Attracted,
    Repelled,
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExchangeSide {
    pub label: String,
    pub charge: f64,
    pub memristance: Option<f64>,
    /// L-proper MR-product sum at the side's equilibrium.
    pub lproper_sum: Option<f64>,
    /// Eigenvalue whose eigenvector gave the perturbation direction.
    pub eigenvalue: [f64; 2],
    pub direction: Vec<f64>,
    pub initial_offset: f64,
    pub max_distance: f64,
    pub final_distance: f64,
    pub final_time: f64,
    /// Time at which the state diverged, when it did.
    pub blow_up: Option<f64>,
    pub max_constraint_residual: f64,
    pub verdict: SideVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExchangeReport {
    pub schema: u32,
    pub bifurcation_charge: f64,
    pub params: ExchangeParams,
    pub sides: Vec<ExchangeSide>,
}

impl ExchangeReport {
    pub fn side(&self, label: &str) -> Option<&ExchangeSide> {
        self.sides.iter().find(|s| s.label == label)
    }
}

/// One integrated trajectory with its constraint residual per sample.
#[derive(Debug, Clone)]
pub struct SimTrajectory<T: Scalar> {
    pub label: String,
    pub y_labels: Vec<String>,
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
    pub residuals: Vec<T>,
}

impl<T: Scalar> SimTrajectory<T> {
    /// Columns: `t`, the differential variables, `residual`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend(self.y_labels.iter().cloned());
        header.push("residual".into());
        w.write_record(&header).expect("in-memory write");
        for ((t, y), r) in self.times.iter().zip(&self.states).zip(&self.residuals) {
            let mut row = vec![t.as_f64().to_string()];
            row.extend(y.iter().map(|v| v.as_f64().to_string()));
            row.push(r.as_f64().to_string());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[derive(Debug, Clone)]
pub struct ExchangeRun<T: Scalar> {
    pub report: ExchangeReport,
    pub trajectories: Vec<SimTrajectory<T>>,
}

/// Runs the experiment on a generic DAE whose equilibrium line is the
/// first differential coordinate; sides are labelled `q<q*` and `q>q*`.
pub fn stability_exchange_experiment<T, D>(
    dae: &D,
    q_star: T,
    params: &ExchangeParams,
    tol: &Tolerances,
) -> Result<ExchangeRun<T>>
where
    T: Scalar,
    D: Dae<T> + ?Sized,
{
    let (r, _) = dae.dims();
    let labels = (1..=r).map(|k| format!("y{k}")).collect();
    run_experiment(dae, q_star, params, tol, labels, &|_| Ok(position_labels()))
}

fn position_labels() -> [SideInfo; 2] {
    ["q<q*", "q>q*"].map(|l| SideInfo {
        label: l.to_string(),
        memristance: None,
        lproper_sum: None,
    })
}

/// Runs the experiment on an assembled circuit. Sides are labelled by the
/// sign of the memristance (`M>0`, `M<0`) when it changes sign across
/// `q*`; otherwise by the sign of the L-proper MR-product sum (`S>0`,
/// `S<0`), which for a memristor in a loop with resistors is the composite
/// memristance; otherwise by position.
pub fn circuit_exchange_experiment<T, D>(
    dae: &CircuitDae<T, D>,
    q_star: T,
    params: &ExchangeParams,
    tol: &Tolerances,
) -> Result<ExchangeRun<T>>
where
    T: Scalar,
    D: Devices<T>,
{
    dae.memristance(q_star)?;
    let circuit = dae.circuit();
    let layout = dae.layout();
    let family = enumerate_trees(circuit, FamilyKind::LProper);
    let y_labels = layout.y_labels(circuit);
    run_experiment(dae, q_star, params, tol, y_labels, &|eqs| {
        let mut m = [0.0; 2];
        let mut s = [0.0; 2];
        for (k, eq) in eqs.iter().enumerate() {
            m[k] = dae.memristance(eq.y[0])?.as_f64();
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
            s[k] = mr_product_sum(circuit, &family, &point).as_f64();
        }
        let sign = |v: f64, name: &str| {
            if v > 0.0 {
                format!("{name}>0")
            } else {
                format!("{name}<0")
            }
        };
        let mut info = position_labels();
        for k in 0..2 {
            info[k].memristance = Some(m[k]);
            info[k].lproper_sum = (!family.is_empty()).then_some(s[k]);
        }
        if m[0] * m[1] < 0.0 {
            info[0].label = sign(m[0], "M");
            info[1].label = sign(m[1], "M");
        } else if !family.is_empty() && s[0] * s[1] < 0.0 {
            info[0].label = sign(s[0], "S");
            info[1].label = sign(s[1], "S");
        }
        Ok(info)
    })
}

struct SideInfo {
    label: String,
    memristance: Option<f64>,
    lproper_sum: Option<f64>,
}

type SideLabels<'a, T> = &'a dyn Fn(&[EquilibriumPoint<T>; 2]) -> Result<[SideInfo; 2]>;

fn run_experiment<T, D>(
    dae: &D,
    q_star: T,
    params: &ExchangeParams,
    tol: &Tolerances,
    y_labels: Vec<String>,
    labels: SideLabels<'_, T>,
) -> Result<ExchangeRun<T>>
where
    T: Scalar,
    D: Dae<T> + ?Sized,
{
    if !(params.eps > 0.0 && params.step > 0.0 && params.t_end >= 0.0 && params.dq >= 0.0) {
        return Err(Error::Evaluation(
            "eps and step must be positive, t_end and dq nonnegative".into(),
        ));
    }
    let below = find_equilibrium(dae, Some((0, q_star - T::lit(params.dq))), None, tol)?;
    let above = find_equilibrium(
        dae,
        Some((0, q_star + T::lit(params.dq))),
        Some(&below.stacked()),
        tol,
    )?;
    let eqs = [below, above];
    let mut sides = Vec::new();
    let mut trajectories = Vec::new();
    for (eq, info) in eqs.iter().zip(labels(&eqs)?) {
        let (side, trajectory) = run_side(dae, eq, params, tol, info, y_labels.clone())?;
        sides.push(side);
        trajectories.push(trajectory);
    }
    let report = ExchangeReport {
        schema: crate::analysis::SCHEMA_VERSION,
        bifurcation_charge: q_star.as_f64(),
        params: *params,
        sides,
    };
    Ok(ExchangeRun {
        report,
        trajectories,
    })
}

/// Unit eigenvector of `a` for the non-null eigenvalue with the largest
/// real part, with its line component removed.
fn perturbation_direction<T: Scalar>(
    a: &DMatrix<T>,
    tol: &Tolerances,
) -> Result<([f64; 2], DVector<T>)> {
    let n = a.nrows();
    if n < 2 {
        return Err(Error::Dimension(
            "no state transverse to the equilibrium line".into(),
        ));
    }
    let s = spectrum(a, tol)?;
    let null = (0..n)
        .min_by(|&i, &j| {
            let (li, lj) = (s.eigenvalues[i], s.eigenvalues[j]);
            li.re
                .hypot(li.im)
                .partial_cmp(&lj.re.hypot(lj.im))
                .expect("finite eigenvalues")
        })
        .expect("nonempty spectrum");
    let lead = (0..n)
        .filter(|&k| k != null)
        .max_by(|&i, &j| {
            s.eigenvalues[i]
                .re
                .partial_cmp(&s.eigenvalues[j].re)
                .expect("finite eigenvalues")
        })
        .expect("at least two eigenvalues");
    let lambda = s.eigenvalues[lead];
    let v = if lambda.im.is_zero() {
        let m = a - DMatrix::identity(n, n) * lambda.re;
        Svd::new(&m).v.column(n - 1).into_owned()
    } else {
        // real embedding of (A - lambda I) x = 0 with x = u + i w
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        let shifted = a - DMatrix::identity(n, n) * lambda.re;
        let b = DMatrix::identity(n, n) * lambda.im;
        m.view_mut((0, 0), (n, n)).copy_from(&shifted);
        m.view_mut((n, n), (n, n)).copy_from(&shifted);
        m.view_mut((0, n), (n, n)).copy_from(&b);
        m.view_mut((n, 0), (n, n)).copy_from(&(-b));
        let x = Svd::new(&m).v.column(2 * n - 1).into_owned();
        let (u, w) = (x.rows(0, n).into_owned(), x.rows(n, n).into_owned());
        if u.norm() >= w.norm() {
            u
        } else {
            w
        }
    };
    let mut d = v;
    d[0] = T::zero();
    let norm = d.norm();
    if norm <= T::lit(1e-12) {
        d = DVector::zeros(n);
        d[1] = T::one();
    } else {
        d /= norm;
    }
    Ok(([lambda.re.as_f64(), lambda.im.as_f64()], d))
}

fn run_side<T, D>(
    dae: &D,
    eq: &EquilibriumPoint<T>,
    params: &ExchangeParams,
    tol: &Tolerances,
    info: SideInfo,
    y_labels: Vec<String>,
) -> Result<(ExchangeSide, SimTrajectory<T>)>
where
    T: Scalar,
    D: Dae<T> + ?Sized,
{
    let ps = pencil_spectrum(dae, eq, tol)?;
    let (eigenvalue, direction) = perturbation_direction(&ps.f_prime, tol)?;
    let eps = T::lit(params.eps);
    let distance = |y: &DVector<T>| {
        let d = y - &eq.y;
        d.rows(1, d.len() - 1).norm()
    };
    let huge = T::lit(1e6) * (T::one() + eq.y.norm() + eps);

    let mut y = &eq.y + &direction * eps;
    let mut z = eq.z.clone();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut residuals = Vec::new();
    let mut max_distance = T::zero();
    let mut blow_up = None;
    let step = T::lit(params.step);
    let t_end = T::lit(params.t_end);
    let steps = (params.t_end / params.step).ceil() as usize;
    let mut t = T::zero();
    let two = T::lit(2.0);
    let six = T::lit(6.0);

    // Projects onto g = 0 and evaluates h; divergence ends the run.
    let eval = |y: &DVector<T>, z: &mut DVector<T>| -> Result<Option<(DVector<T>, T)>> {
        if y.iter().any(|c| !c.is_finite()) || y.norm() > huge {
            return Ok(None);
        }
        match reduced_field(dae, y, z, tol) {
            Ok((dy, nz, res)) => {
                *z = nz;
                Ok(dy.iter().all(|c| c.is_finite()).then_some((dy, res)))
            }
            Err(Error::NoConvergence { .. } | Error::SingularJacobian { .. })
                if y.norm() > huge.sqrt() =>
            {
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };

    for k in 0..=steps {
        let Some((k1, res)) = eval(&y, &mut z)? else {
            blow_up = Some(t.as_f64());
            break;
        };
        times.push(t);
        states.push(y.clone());
        residuals.push(res);
        max_distance = max_distance.max(distance(&y));
        if k == steps {
            break;
        }
        let next_t = if k + 1 == steps {
            t_end
        } else {
            T::from_usize_lossy(k + 1) * step
        };
        let h = next_t - t;
        let mut zs = z.clone();
        let stages = (|| -> Result<Option<DVector<T>>> {
            let Some((k2, _)) = eval(&(&y + &k1 * (h / two)), &mut zs)? else {
                return Ok(None);
            };
            let Some((k3, _)) = eval(&(&y + &k2 * (h / two)), &mut zs)? else {
                return Ok(None);
            };
            let Some((k4, _)) = eval(&(&y + &k3 * h), &mut zs)? else {
                return Ok(None);
            };
            Ok(Some(&y + (&k1 + k2 * two + k3 * two + k4) * (h / six)))
        })()?;
        let Some(ny) = stages else {
            blow_up = Some(next_t.as_f64());
            break;
        };
        y = ny;
        t = next_t;
    }

    let final_distance = states
        .last()
        .map(&distance)
        .unwrap_or_else(T::zero)
        .as_f64();
    let max_distance = max_distance.as_f64();
    let verdict = if blow_up.is_some() || max_distance >= 10.0 * params.eps {
        SideVerdict::Repelled
    } else if final_distance <= params.eps / 10.0 {
        SideVerdict::Attracted
    } else {
        SideVerdict::Undecided
    };
    let max_constraint_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.as_f64()));
    let label = info.label;
    let side = ExchangeSide {
        label: label.clone(),
        charge: eq.y[0].as_f64(),
        memristance: info.memristance,
        lproper_sum: info.lproper_sum,
        eigenvalue,
        direction: direction.iter().map(|v| v.as_f64()).collect(),
        initial_offset: params.eps,
        max_distance,
        final_distance,
        final_time: times.last().copied().unwrap_or_else(T::zero).as_f64(),
        blow_up,
        max_constraint_residual,
        verdict,
    };
    Ok((
        side,
        SimTrajectory {
            label,
            y_labels,
            times,
            states,
            residuals,
        },
    ))
}

/// One sample of the equilibrium line.
#[derive(Debug, Clone, Serialize)]
pub struct LineSample {
    pub charge: f64,
    pub memristance: f64,
    /// Largest of the differential and algebraic residuals at the equilibrium.
    pub residual: f64,
    /// Eigenvalues other than the one nearest zero, sorted by real part.
    pub nonnull_eigenvalues: Vec<[f64; 2]>,
    pub zero_cluster: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineTrace {
    pub samples: Vec<LineSample>,
}

impl LineTrace {
    /// Columns: `q`, `M`, `residual`, `zero_cluster`, then `re_k`, `im_k`
    /// for each non-null eigenvalue, then `error`.
    pub fn to_csv(&self) -> String {
        let width = self
            .samples
            .iter()
            .map(|s| s.nonnull_eigenvalues.len())
            .max()
            .unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["q", "M", "residual", "zero_cluster"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for k in 1..=width {
            header.push(format!("re_{k}"));
            header.push(format!("im_{k}"));
        }
        header.push("error".into());
        w.write_record(&header).expect("in-memory write");
        for s in &self.samples {
            let mut row = vec![
                s.charge.to_string(),
                s.memristance.to_string(),
                s.residual.to_string(),
                s.zero_cluster.to_string(),
            ];
            for k in 0..width {
                match s.nonnull_eigenvalues.get(k) {
                    Some([re, im]) => row.extend([re.to_string(), im.to_string()]),
                    None => row.extend([String::new(), String::new()]),
                }
            }
            row.push(s.error.clone().unwrap_or_default());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Samples `samples` evenly spaced charges in `[q_lo, q_hi]`; failures at
/// individual samples are recorded and do not stop the trace.
pub fn trace_equilibrium_line<T, D>(
    dae: &CircuitDae<T, D>,
    q_lo: T,
    q_hi: T,
    samples: usize,
    tol: &Tolerances,
) -> Result<LineTrace>
where
    T: Scalar,
    D: Devices<T>,
{
    dae.memristance(q_lo)?;
    let mut seed: Option<DVector<T>> = None;
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let q = if samples == 1 {
            q_lo
        } else {
            q_lo + (q_hi - q_lo) * T::from_usize_lossy(k) / T::from_usize_lossy(samples - 1)
        };
        let mut sample = LineSample {
            charge: q.as_f64(),
            memristance: dae.memristance(q)?.as_f64(),
            residual: f64::NAN,
            nonnull_eigenvalues: Vec::new(),
            zero_cluster: 0,
            error: None,
        };
        let result = dae
            .equilibrium_at(q, seed.as_ref(), tol)
            .and_then(|eq| pencil_spectrum(dae, &eq, tol).map(|ps| (eq, ps)));
        match result {
            Ok((eq, ps)) => {
                sample.residual = eq.residual_h.max(eq.residual_g).as_f64();
                let ev = &ps.spectrum.eigenvalues;
                let null = (0..ev.len()).min_by(|&i, &j| {
                    ev[i]
                        .re
                        .hypot(ev[i].im)
                        .partial_cmp(&ev[j].re.hypot(ev[j].im))
                        .expect("finite eigenvalues")
                });
                sample.nonnull_eigenvalues = (0..ev.len())
                    .filter(|&k| Some(k) != null)
                    .map(|k| [ev[k].re.as_f64(), ev[k].im.as_f64()])
                    .collect();
                sample.zero_cluster = ps.spectrum.zero_cluster.len();
                seed = Some(eq.stacked());
            }
            Err(e) => sample.error = Some(e.to_string()),
        }
        out.push(sample);
    }
    Ok(LineTrace { samples: out })
}
