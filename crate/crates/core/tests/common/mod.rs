//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Fraction-free Gaussian elimination; exact for integer matrices whose
/// minors fit in `i128`.
pub fn bareiss_det(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return 0;
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Number of spanning trees of a multigraph: any cofactor of its Laplacian.
pub fn matrix_tree_count(nodes: usize, edges: &[(usize, usize)]) -> i128 {
    let mut lap = vec![vec![0i128; nodes]; nodes];
    for &(a, b) in edges {
        lap[a][a] += 1;
        lap[b][b] += 1;
        lap[a][b] -= 1;
        lap[b][a] -= 1;
    }
    let minor: Vec<Vec<i128>> = lap[1..].iter().map(|row| row[1..].to_vec()).collect();
    bareiss_det(minor)
}

/// Connected multigraph without self-loops: a random spanning tree plus
/// random extra edges (parallel ones allowed).
pub fn random_multigraph<R: Rng>(rng: &mut R, nodes: usize, edges: usize) -> Vec<(usize, usize)> {
    assert!(nodes >= 2 && edges >= nodes - 1);
    let mut out = Vec::with_capacity(edges);
    for k in 1..nodes {
        out.push((rng.random_range(0..k), k));
    }
    while out.len() < edges {
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        if a != b {
            out.push((a, b));
        }
    }
    for k in (1..out.len()).rev() {
        out.swap(k, rng.random_range(0..=k));
    }
    out
}

/// Resistor netlist for a multigraph with random positive resistances.
pub fn resistor_netlist<R: Rng>(rng: &mut R, edges: &[(usize, usize)]) -> String {
    edges
        .iter()
        .enumerate()
        .map(|(k, (a, b))| format!("R r{k} n{a} n{b} {:.6}\n", rng.random_range(0.5..2.0)))
        .collect()
}

/// Roots of `sum c_k x^k` by simultaneous (Weierstrass) iteration.
pub fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let lead = *coeffs.last().expect("nonempty polynomial");
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let n = monic.len() - 1;
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| seed.powu(k as u32) * radius / seed.norm().powi(k as i32))
        .collect();
    let eval = |x: Complex64| {
        monic
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |a, c| a * x + c)
    };
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta <= 1e-15 * radius {
            break;
        }
    }
    z
}

/// Coefficients (ascending) of `det(lambda E - M)` with `E = diag(I_r, 0)`,
/// recovered by an inverse DFT of determinant samples on a circle.
pub fn pencil_characteristic(m: &DMatrix<f64>, r: usize, radius: f64) -> Vec<Complex64> {
    let n = m.nrows();
    let samples = 2 * n + 2;
    let mc = m.map(|x| Complex64::new(x, 0.0));
    let values: Vec<Complex64> = (0..samples)
        .map(|j| {
            let w =
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / samples as f64);
            let lambda = w * radius;
            let mut a = -mc.clone();
            for i in 0..r {
                a[(i, i)] += lambda;
            }
            a.determinant()
        })
        .collect();
    (0..=r)
        .map(|k| {
            let sum: Complex64 = values
                .iter()
                .enumerate()
                .map(|(j, val)| {
                    val * Complex64::from_polar(
                        1.0,
                        -2.0 * std::f64::consts::PI * (j * k) as f64 / samples as f64,
                    )
                })
                .sum();
            sum / samples as f64 / radius.powi(k as i32)
        })
        .collect()
}

pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let directed = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Parameters of the two-neuron network.
#[derive(Debug, Clone, Copy)]
pub struct Neural {
    pub r1: f64,
    pub r2: f64,
    pub r10: f64,
    pub r11: f64,
    pub r12: f64,
    pub r20: f64,
    pub r22: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Neural {
    pub const BUNDLED: Neural = Neural {
        r1: 1.0,
        r2: 2.0,
        r10: 1.0,
        r11: 2.0,
        r12: 1.0,
        r20: 2.0,
        r22: 1.0,
        c1: 1.0,
        c2: 0.5,
    };

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut r = || rng.random_range(0.1..10.0);
        Neural {
            r1: r(),
            r2: r(),
            r10: r(),
            r11: r(),
            r12: r(),
            r20: r(),
            r22: r(),
            c1: r(),
            c2: r(),
        }
    }

    /// Netlist with memristance `M(q) = m0 + m1 q`.
    pub fn netlist(&self, m0: f64, m1: f64) -> String {
        format!(
            "C c1 u1 g {}\nR r1 u1 g {}\nC c2 u2 g {}\nR r2 u2 g {}\n\
             R r10 u1 x {}\nR r11 u1 x {}\nM m1 u2 x {m0} {m1}\n\
             R r12 u1 y {}\nR r20 u2 y {}\nR r22 u2 y {}\n",
            self.c1, self.r1, self.c2, self.r2, self.r10, self.r11, self.r12, self.r20, self.r22
        )
    }

    fn rb(&self) -> f64 {
        self.r12 * (self.r20 + self.r22) + self.r20 * self.r22
    }

    /// `R_A R_B + (R1 + R2)[(R20 + R22) R_A + (R10 + R11) R_B]`.
    pub fn bifurcation_polynomial(&self, m: f64) -> f64 {
        let ra = m * (self.r10 + self.r11) + self.r10 * self.r11;
        let rb = self.rb();
        ra * rb + (self.r1 + self.r2) * ((self.r20 + self.r22) * ra + (self.r10 + self.r11) * rb)
    }

    /// Memristance at which the polynomial vanishes.
    pub fn bifurcation_memristance(&self) -> f64 {
        let rb = self.rb();
        let s = self.r1 + self.r2;
        let rc = self.r10 * self.r11 * (rb + s * (self.r20 + self.r22));
        let rd = rb * s * (self.r10 + self.r11);
        (-rc - rd) / ((self.r10 + self.r11) * (rb + s * (self.r20 + self.r22)))
    }
}

/// Random matrix with entries uniform in `[-1, 1]`.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random orthogonal matrix from the QR factors of a random matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    random_matrix(rng, n, n).qr().q()
}

/// Random matrix with singular values in `[lo, hi]`.
pub fn random_conditioned<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let u = random_orthogonal(rng, n);
    let w = random_orthogonal(rng, n);
    let s = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(lo..hi)));
    u * s * w.transpose()
}

/// One branch of a generated circuit.
#[derive(Debug, Clone)]
pub struct Part {
    pub letter: char,
    pub tail: usize,
    pub head: usize,
    pub coeffs: Vec<f64>,
}

/// Netlist text for generated parts; ids are the lowercase letter plus index.
pub fn netlist_of(parts: &[Part]) -> String {
    parts
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let coeffs: Vec<String> = p.coeffs.iter().map(|c| format!("{c:e}")).collect();
            format!(
                "{} {}{k} n{} n{} {}\n",
                p.letter,
                p.letter.to_ascii_lowercase(),
                p.tail,
                p.head,
                coeffs.join(" ")
            )
        })
        .collect()
}

/// Random connected circuit on a random multigraph. Passive elements get
/// values in `[0.5, 2]`, sources are zero.
pub fn random_parts<R: Rng>(
    rng: &mut R,
    nodes: usize,
    branches: usize,
    letters: &[char],
) -> Vec<Part> {
    random_multigraph(rng, nodes, branches)
        .into_iter()
        .map(|(tail, head)| {
            let letter = letters[rng.random_range(0..letters.len())];
            let coeffs = match letter {
                'V' | 'I' => vec![0.0],
                _ => vec![rng.random_range(0.5..2.0)],
            };
            Part {
                letter,
                tail,
                head,
                coeffs,
            }
        })
        .collect()
}

/// Endpoints of each named branch, by node index in the parsed circuit.
pub fn endpoints<T>(circuit: &tbwp::netlist::Circuit<T>, ids: &[String]) -> Vec<(usize, usize)> {
    ids.iter()
        .map(|id| {
            let b = &circuit.branches()[circuit.position(id).expect("witness id exists")];
            (b.tail, b.head)
        })
        .collect()
}

fn components(nodes: usize, edges: impl Iterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut count = nodes;
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}

/// The branches form one simple cycle: every touched node has degree two
/// and the branches are connected.
pub fn is_cycle(edges: &[(usize, usize)]) -> bool {
    let mut degree = std::collections::BTreeMap::new();
    for &(a, b) in edges {
        *degree.entry(a).or_insert(0) += 1;
        *degree.entry(b).or_insert(0) += 1;
    }
    if edges.is_empty() || degree.values().any(|&d| d != 2) {
        return false;
    }
    let nodes: Vec<usize> = degree.keys().copied().collect();
    let index = |n: usize| nodes.binary_search(&n).expect("touched node");
    components(
        nodes.len(),
        edges.iter().map(|&(a, b)| (index(a), index(b))),
    ) == 1
}

/// Deleting `cut` from the graph adds exactly one component, and deleting
/// any proper subset does not.
pub fn is_cutset<T>(circuit: &tbwp::netlist::Circuit<T>, cut: &[String]) -> bool {
    let n = circuit.node_count();
    let positions: Vec<usize> = cut
        .iter()
        .map(|id| circuit.position(id).expect("witness id exists"))
        .collect();
    let without = |removed: &[usize]| {
        components(
            n,
            circuit
                .branches()
                .iter()
                .enumerate()
                .filter(|(k, _)| !removed.contains(k))
                .map(|(_, b)| (b.tail, b.head)),
        )
    };
    let base = without(&[]);
    if cut.is_empty() || without(&positions) != base + 1 {
        return false;
    }
    (0..positions.len()).all(|k| {
        let mut rest = positions.clone();
        rest.remove(k);
        without(&rest) == base
    })
}
