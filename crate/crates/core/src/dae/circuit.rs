use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{find_equilibrium, Dae, DaeJacobian, EquilibriumPoint};
use crate::graph::{default_tree, fundamental_matrices, ReducedMatrices};
use crate::netlist::{Circuit, DeviceKind, Polynomial};
use crate::numerics::{first_derivative_step, Tolerances};
use crate::{Error, Result, Scalar};

/// Device characteristics entering the circuit equations. Vectors and
/// matrices are indexed by class order (the order branches of that class
/// appear in the netlist).
pub trait Devices<T: Scalar> {
    /// Memristance `M(q)` of the `k`-th memristor.
    fn memristance(&self, k: usize, q: T) -> T;
    fn memristance_slope(&self, k: usize, q: T) -> T;
    /// Capacitance matrix `C(v_c)`.
    fn capacitance(&self, v_c: &DVector<T>) -> DMatrix<T>;
    /// Inductance matrix `L(i_l)`.
    fn inductance(&self, i_l: &DVector<T>) -> DMatrix<T>;
    /// Resistor voltages `gamma(i_r)`.
    fn resistor_voltage(&self, i_r: &DVector<T>) -> DVector<T>;
    /// Incremental resistance matrix `R(i_r) = gamma'(i_r)`.
    fn resistance(&self, i_r: &DVector<T>) -> DMatrix<T>;
    /// Voltage-source values `V`.
    fn source_voltages(&self) -> DVector<T>;
    /// Current-source values `I`.
    fn source_currents(&self) -> DVector<T>;
}

/// Uncoupled devices read from a netlist: constant `C`, `L` and sources,
/// polynomial memristances and incremental resistances.
#[derive(Debug, Clone)]
pub struct NetlistDevices<T: Scalar> {
    memristance: Vec<Polynomial<T>>,
    memristance_slope: Vec<Polynomial<T>>,
    capacitance: Vec<T>,
    inductance: Vec<T>,
    resistance: Vec<Polynomial<T>>,
    voltage: Vec<Polynomial<T>>,
    sources_v: Vec<T>,
    sources_i: Vec<T>,
}

impl<T: Scalar> NetlistDevices<T> {
    pub fn from_circuit(circuit: &Circuit<T>) -> Self {
        let take = |kind: DeviceKind| -> Vec<Polynomial<T>> {
            circuit
                .class(kind)
                .iter()
                .map(|&k| circuit.branches()[k].characteristic.clone())
                .collect()
        };
        let value =
            |kind: DeviceKind| -> Vec<T> { take(kind).iter().map(|p| p.eval(T::zero())).collect() };
        let memristance = take(DeviceKind::Memristor);
        let resistance = take(DeviceKind::Resistor);
        Self {
            memristance_slope: memristance.iter().map(|p| p.derivative()).collect(),
            memristance,
            capacitance: value(DeviceKind::Capacitor),
            inductance: value(DeviceKind::Inductor),
            voltage: resistance.iter().map(|p| p.antiderivative()).collect(),
            resistance,
            sources_v: value(DeviceKind::VoltageSource),
            sources_i: value(DeviceKind::CurrentSource),
        }
    }
}

impl<T: Scalar> Devices<T> for NetlistDevices<T> {
    fn memristance(&self, k: usize, q: T) -> T {
        self.memristance[k].eval(q)
    }

    fn memristance_slope(&self, k: usize, q: T) -> T {
        self.memristance_slope[k].eval(q)
    }

    fn capacitance(&self, _v_c: &DVector<T>) -> DMatrix<T> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.capacitance))
    }

    fn inductance(&self, _i_l: &DVector<T>) -> DMatrix<T> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.inductance))
    }

    fn resistor_voltage(&self, i_r: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            i_r.len(),
            self.voltage.iter().zip(i_r.iter()).map(|(p, i)| p.eval(*i)),
        )
    }

    fn resistance(&self, i_r: &DVector<T>) -> DMatrix<T> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            i_r.len(),
            self.resistance
                .iter()
                .zip(i_r.iter())
                .map(|(p, i)| p.eval(*i)),
        ))
    }

    fn source_voltages(&self) -> DVector<T> {
        DVector::from_column_slice(&self.sources_v)
    }

    fn source_currents(&self) -> DVector<T> {
        DVector::from_column_slice(&self.sources_i)
    }
}

/// Variable layout `y = (q_m, v_c, i_l)`, `z = (i_m, i_c, v_l, i_r, v_j, i_u)`
/// where `u` indexes voltage sources and `j` current sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub memristors: usize,
    pub capacitors: usize,
    pub inductors: usize,
    pub resistors: usize,
    pub voltage_sources: usize,
    pub current_sources: usize,
}

impl Layout {
    pub fn of<T>(circuit: &Circuit<T>) -> Self {
        Self {
            memristors: circuit.count(DeviceKind::Memristor),
            capacitors: circuit.count(DeviceKind::Capacitor),
            inductors: circuit.count(DeviceKind::Inductor),
            resistors: circuit.count(DeviceKind::Resistor),
            voltage_sources: circuit.count(DeviceKind::VoltageSource),
            current_sources: circuit.count(DeviceKind::CurrentSource),
        }
    }

    pub fn r(&self) -> usize {
        self.memristors + self.capacitors + self.inductors
    }

    pub fn p(&self) -> usize {
        self.memristors
            + self.capacitors
            + self.inductors
            + self.resistors
            + self.voltage_sources
            + self.current_sources
    }

    pub fn q_m(&self) -> Range<usize> {
        0..self.memristors
    }

    pub fn v_c(&self) -> Range<usize> {
        let s = self.memristors;
        s..s + self.capacitors
    }

    pub fn i_l(&self) -> Range<usize> {
        let s = self.memristors + self.capacitors;
        s..s + self.inductors
    }

    pub fn i_m(&self) -> Range<usize> {
        0..self.memristors
    }

    pub fn i_c(&self) -> Range<usize> {
        let s = self.memristors;
        s..s + self.capacitors
    }

    pub fn v_l(&self) -> Range<usize> {
        let s = self.memristors + self.capacitors;
        s..s + self.inductors
    }

    pub fn i_r(&self) -> Range<usize> {
        let s = self.memristors + self.capacitors + self.inductors;
        s..s + self.resistors
    }

    pub fn v_j(&self) -> Range<usize> {
        let s = self.memristors + self.capacitors + self.inductors + self.resistors;
        s..s + self.current_sources
    }

    pub fn i_u(&self) -> Range<usize> {
        let s = self.memristors
            + self.capacitors
            + self.inductors
            + self.resistors
            + self.current_sources;
        s..s + self.voltage_sources
    }

    /// Names of the `y` components, e.g. `q_m1`, `v_c1`, `i_l1`.
    pub fn y_labels<T>(&self, circuit: &Circuit<T>) -> Vec<String> {
        let name = |prefix: &str, kind: DeviceKind| -> Vec<String> {
            circuit
                .class(kind)
                .iter()
                .map(|&k| format!("{prefix}_{}", circuit.branches()[k].id))
                .collect()
        };
        let mut out = name("q", DeviceKind::Memristor);
        out.extend(name("v", DeviceKind::Capacitor));
        out.extend(name("i", DeviceKind::Inductor));
        out
    }

    pub fn z_labels<T>(&self, circuit: &Circuit<T>) -> Vec<String> {
        let name = |prefix: &str, kind: DeviceKind| -> Vec<String> {
            circuit
                .class(kind)
                .iter()
                .map(|&k| format!("{prefix}_{}", circuit.branches()[k].id))
                .collect()
        };
        let mut out = name("i", DeviceKind::Memristor);
        out.extend(name("i", DeviceKind::Capacitor));
        out.extend(name("v", DeviceKind::Inductor));
        out.extend(name("i", DeviceKind::Resistor));
        out.extend(name("v", DeviceKind::CurrentSource));
        out.extend(name("i", DeviceKind::VoltageSource));
        out
    }
}

/// Class blocks of the loop and cutset matrices as real matrices.
#[derive(Debug, Clone)]
struct Blocks<T: Scalar> {
    b_m: DMatrix<T>,
    b_c: DMatrix<T>,
    b_l: DMatrix<T>,
    b_r: DMatrix<T>,
    b_u: DMatrix<T>,
    b_j: DMatrix<T>,
    q_m: DMatrix<T>,
    q_c: DMatrix<T>,
    q_l: DMatrix<T>,
    q_r: DMatrix<T>,
    q_u: DMatrix<T>,
    q_j: DMatrix<T>,
}

/// The circuit DAE: `q_m' = i_m`, `C(v_c) v_c' = i_c`, `L(i_l) i_l' = v_l`
/// with KVL rows from the loop matrix and KCL rows from the cutset matrix.
#[derive(Debug, Clone)]
pub struct CircuitDae<T: Scalar, D = NetlistDevices<T>> {
    circuit: Circuit<T>,
    matrices: ReducedMatrices,
    layout: Layout,
    blocks: Blocks<T>,
    devices: D,
}

/// Assembles the DAE of a circuit with netlist devices and the default tree.
pub fn assemble_dae<T: Scalar>(circuit: &Circuit<T>) -> Result<CircuitDae<T>> {
    assemble_dae_with(circuit, NetlistDevices::from_circuit(circuit))
}

/// Assembles with caller-supplied device characteristics.
pub fn assemble_dae_with<T: Scalar, D: Devices<T>>(
    circuit: &Circuit<T>,
    devices: D,
) -> Result<CircuitDae<T, D>> {
    let memristors = circuit.count(DeviceKind::Memristor);
    if memristors > 1 {
        return Err(Error::TooManyMemristors(memristors));
    }
    if circuit.branch_count() == 0 {
        return Err(Error::EmptyCircuit);
    }
    let matrices = fundamental_matrices(circuit, &default_tree(circuit))?;
    let real = |m: DMatrix<i32>| m.map(|v| T::from_i32(v).expect("small integer"));
    let b = |kind| real(matrices.b_block(circuit.class(kind)));
    let q = |kind| real(matrices.q_block(circuit.class(kind)));
    let blocks = Blocks {
        b_m: b(DeviceKind::Memristor),
        b_c: b(DeviceKind::Capacitor),
        b_l: b(DeviceKind::Inductor),
        b_r: b(DeviceKind::Resistor),
        b_u: b(DeviceKind::VoltageSource),
        b_j: b(DeviceKind::CurrentSource),
        q_m: q(DeviceKind::Memristor),
        q_c: q(DeviceKind::Capacitor),
        q_l: q(DeviceKind::Inductor),
        q_r: q(DeviceKind::Resistor),
        q_u: q(DeviceKind::VoltageSource),
        q_j: q(DeviceKind::CurrentSource),
    };
    Ok(CircuitDae {
        circuit: circuit.clone(),
        layout: Layout::of(circuit),
        matrices,
        blocks,
        devices,
    })
}

fn part<T: Scalar>(v: &DVector<T>, r: Range<usize>) -> DVector<T> {
    v.rows(r.start, r.len()).into_owned()
}

fn invert<T: Scalar>(m: DMatrix<T>, what: &'static str) -> Result<DMatrix<T>> {
    if m.is_empty() {
        return Ok(m);
    }
    m.try_inverse().ok_or(Error::SingularDevice { what })
}

impl<T: Scalar, D: Devices<T>> CircuitDae<T, D> {
    pub fn circuit(&self) -> &Circuit<T> {
        &self.circuit
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn matrices(&self) -> &ReducedMatrices {
        &self.matrices
    }

    pub fn devices(&self) -> &D {
        &self.devices
    }

    /// `M(q)` of the single memristor.
    pub fn memristance(&self, q: T) -> Result<T> {
        if self.layout.memristors == 0 {
            return Err(Error::NoMemristor);
        }
        Ok(self.devices.memristance(0, q))
    }

    pub fn memristance_slope(&self, q: T) -> Result<T> {
        if self.layout.memristors == 0 {
            return Err(Error::NoMemristor);
        }
        Ok(self.devices.memristance_slope(0, q))
    }

    /// Equilibrium with the memristor charge pinned to `q` (unpinned when
    /// the circuit has no memristor).
    pub fn equilibrium_at(
        &self,
        q: T,
        seed: Option<&DVector<T>>,
        tol: &Tolerances,
    ) -> Result<EquilibriumPoint<T>> {
        let pin = (self.layout.memristors > 0).then_some((0, q));
        find_equilibrium(self, pin, seed, tol)
    }

    fn memristive_voltage(&self, q_m: &DVector<T>, i_m: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            q_m.len(),
            (0..q_m.len()).map(|k| self.devices.memristance(k, q_m[k]) * i_m[k]),
        )
    }

    /// `d/dx [M(x)^-1 w]` columns for a state-dependent matrix, by central
    /// differences of `M` (exactly zero for constant devices).
    fn inverse_action_jacobian(
        &self,
        matrix: impl Fn(&DVector<T>) -> DMatrix<T>,
        x: &DVector<T>,
        inv: &DMatrix<T>,
        w: &DVector<T>,
    ) -> DMatrix<T> {
        let n = x.len();
        let mut out = DMatrix::zeros(n, n);
        if w.iter().all(|c| c.is_zero()) {
            return out;
        }
        let h = first_derivative_step(x);
        let v = inv * w;
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let dm = (matrix(&xp) - matrix(&xm)) / (T::lit(2.0) * h);
            out.set_column(k, &(-(inv * (dm * &v))));
        }
        out
    }
}

impl<T: Scalar, D: Devices<T>> Dae<T> for CircuitDae<T, D> {
    fn dims(&self) -> (usize, usize) {
        (self.layout.r(), self.layout.p())
    }

    fn h(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>> {
        let l = &self.layout;
        let c_inv = invert(self.devices.capacitance(&part(y, l.v_c())), "capacitance")?;
        let l_inv = invert(self.devices.inductance(&part(y, l.i_l())), "inductance")?;
        let mut out = DVector::zeros(l.r());
        out.rows_mut(l.q_m().start, l.memristors)
            .copy_from(&part(z, l.i_m()));
        out.rows_mut(l.v_c().start, l.capacitors)
            .copy_from(&(c_inv * part(z, l.i_c())));
        out.rows_mut(l.i_l().start, l.inductors)
            .copy_from(&(l_inv * part(z, l.v_l())));
        Ok(out)
    }

    fn g(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>> {
        let l = &self.layout;
        let bk = &self.blocks;
        let kvl = &bk.b_m * self.memristive_voltage(&part(y, l.q_m()), &part(z, l.i_m()))
            + &bk.b_c * part(y, l.v_c())
            + &bk.b_l * part(z, l.v_l())
            + &bk.b_r * self.devices.resistor_voltage(&part(z, l.i_r()))
            + &bk.b_u * self.devices.source_voltages()
            + &bk.b_j * part(z, l.v_j());
        let kcl = &bk.q_m * part(z, l.i_m())
            + &bk.q_c * part(z, l.i_c())
            + &bk.q_l * part(y, l.i_l())
            + &bk.q_r * part(z, l.i_r())
            + &bk.q_u * part(z, l.i_u())
            + &bk.q_j * self.devices.source_currents();
        Ok(super::stack(&kvl, &kcl))
    }

    fn jacobian(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DaeJacobian<T>> {
        let l = &self.layout;
        let bk = &self.blocks;
        let (r, p) = (l.r(), l.p());
        let loops = bk.b_m.nrows();
        let v_c = part(y, l.v_c());
        let i_l = part(y, l.i_l());
        let c_inv = invert(self.devices.capacitance(&v_c), "capacitance")?;
        let l_inv = invert(self.devices.inductance(&i_l), "inductance")?;

        let mut hy = DMatrix::zeros(r, r);
        let mut hz = DMatrix::zeros(r, p);
        for k in 0..l.memristors {
            hz[(k, l.i_m().start + k)] = T::one();
        }
        hz.view_mut((l.v_c().start, l.i_c().start), (l.capacitors, l.capacitors))
            .copy_from(&c_inv);
        hz.view_mut((l.i_l().start, l.v_l().start), (l.inductors, l.inductors))
            .copy_from(&l_inv);
        let dc = self.inverse_action_jacobian(
            |v| self.devices.capacitance(v),
            &v_c,
            &c_inv,
            &part(z, l.i_c()),
        );
        hy.view_mut((l.v_c().start, l.v_c().start), (l.capacitors, l.capacitors))
            .copy_from(&dc);
        let dl = self.inverse_action_jacobian(
            |i| self.devices.inductance(i),
            &i_l,
            &l_inv,
            &part(z, l.v_l()),
        );
        hy.view_mut((l.i_l().start, l.i_l().start), (l.inductors, l.inductors))
            .copy_from(&dl);

        let q_m = part(y, l.q_m());
        let i_m = part(z, l.i_m());
        let m_diag = DMatrix::from_diagonal(&DVector::from_iterator(
            l.memristors,
            (0..l.memristors).map(|k| self.devices.memristance(k, q_m[k])),
        ));
        let dm_diag = DMatrix::from_diagonal(&DVector::from_iterator(
            l.memristors,
            (0..l.memristors).map(|k| self.devices.memristance_slope(k, q_m[k]) * i_m[k]),
        ));
        let mut gy = DMatrix::zeros(p, r);
        gy.view_mut((0, l.q_m().start), (loops, l.memristors))
            .copy_from(&(&bk.b_m * dm_diag));
        gy.view_mut((0, l.v_c().start), (loops, l.capacitors))
            .copy_from(&bk.b_c);
        gy.view_mut((loops, l.i_l().start), (p - loops, l.inductors))
            .copy_from(&bk.q_l);

        let mut gz = DMatrix::zeros(p, p);
        let rr = self.devices.resistance(&part(z, l.i_r()));
        gz.view_mut((0, l.i_m().start), (loops, l.memristors))
            .copy_from(&(&bk.b_m * m_diag));
        gz.view_mut((0, l.v_l().start), (loops, l.inductors))
            .copy_from(&bk.b_l);
        gz.view_mut((0, l.i_r().start), (loops, l.resistors))
            .copy_from(&(&bk.b_r * rr));
        gz.view_mut((0, l.v_j().start), (loops, l.current_sources))
            .copy_from(&bk.b_j);
        let cut = p - loops;
        gz.view_mut((loops, l.i_m().start), (cut, l.memristors))
            .copy_from(&bk.q_m);
        gz.view_mut((loops, l.i_c().start), (cut, l.capacitors))
            .copy_from(&bk.q_c);
        gz.view_mut((loops, l.i_r().start), (cut, l.resistors))
            .copy_from(&bk.q_r);
        gz.view_mut((loops, l.i_u().start), (cut, l.voltage_sources))
            .copy_from(&bk.q_u);
        Ok(DaeJacobian { hy, hz, gy, gz })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::netlist::parse_netlist;
    use crate::numerics::fd_jacobian;

    fn check_jacobian(text: &str, y: &[f64], z: &[f64]) {
        let c = parse_netlist::<f64>(text).unwrap();
        let dae = assemble_dae(&c).unwrap();
        let x = DVector::from_iterator(y.len() + z.len(), y.iter().chain(z.iter()).copied());
        let exact = dae.full_jacobian(&x).unwrap();
        let approx = fd_jacobian(|x| dae.full_residual(x), &x).unwrap();
        assert!((exact - approx).norm() < 1e-7);
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        check_jacobian(bundled::MRL, &[0.3, -0.2], &[0.1, 0.4, -0.7]);
        check_jacobian("M m1 a b 0.5 -1 2\nR r1 b c 1 0.3 0.2\nL l1 c a 2\nC c1 a b 3\nV v1 a d 1\nR r2 d b 2\nI i1 c d 0.5\n",
            &[0.4, 0.1, -0.3], &[0.2, -0.1, 0.3, 0.5, -0.4, 0.6, 0.7]);
    }

    #[test]
    fn line_of_equilibria_has_zero_residual() {
        for text in [bundled::MRL, bundled::ML_PARALLEL, bundled::NEURAL] {
            let dae = assemble_dae(&parse_netlist::<f64>(text).unwrap()).unwrap();
            let (r, p) = dae.dims();
            for q in [-1.0, 0.0, 2.5] {
                let mut y = DVector::zeros(r);
                y[0] = q;
                let z = DVector::zeros(p);
                assert!(dae.h(&y, &z).unwrap().amax() <= 1e-12);
                assert!(dae.g(&y, &z).unwrap().amax() <= 1e-12);
            }
        }
    }

    #[test]
    fn layout_covers_every_branch_variable() {
        let c = parse_netlist::<f64>(bundled::NEURAL).unwrap();
        let l = Layout::of(&c);
        assert_eq!(l.p(), c.branch_count());
        assert_eq!(l.y_labels(&c)[0], "q_m1");
        assert_eq!(l.z_labels(&c).len(), l.p());
    }

    #[test]
    fn zero_inductance_is_rejected() {
        let dae =
            assemble_dae(&parse_netlist::<f64>("M m1 a b 0 1\nL l1 a b 0\n").unwrap()).unwrap();
        let r = dae.h(&DVector::zeros(2), &DVector::zeros(2));
        assert!(matches!(
            r,
            Err(Error::SingularDevice { what: "inductance" })
        ));
    }
}
