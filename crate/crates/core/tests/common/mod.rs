//! Independent reference model built on nalgebra: plain matrices, explicit
//! Kronecker products and hand-written Kraus maps, sharing no code with the
//! crate under test.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use paritybell_core::{DensityMatrix, Matrix, QubitSet};

pub type M = DMatrix<C>;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn eye(n: usize) -> M {
    M::identity(n, n)
}

pub fn x() -> M {
    M::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn y() -> M {
    M::from_row_slice(2, 2, &[c(0.0), C::new(0.0, -1.0), C::new(0.0, 1.0), c(0.0)])
}

pub fn z() -> M {
    M::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn kron(ms: &[&M]) -> M {
    let mut out = eye(1);
    for m in ms {
        out = out.kronecker(m);
    }
    out
}

/// `exp(-i θ/2 (cos φ X + sin φ Y))` by the matrix exponential.
pub fn rot(phi: f64, theta: f64) -> M {
    let gen = (x() * c(phi.cos()) + y() * c(phi.sin())) * C::new(0.0, -theta / 2.0);
    gen.exp()
}

/// Ancilla flip on the 8-dim register when `(c, n)` is one of `conds`.
pub fn cflip(conds: &[(usize, usize)]) -> M {
    let mut u = M::zeros(8, 8);
    for cc in 0..2 {
        for n in 0..2 {
            for a in 0..2 {
                let i = 4 * cc + 2 * n + a;
                let j = if conds.contains(&(cc, n)) { 4 * cc + 2 * n + (1 - a) } else { i };
                u[(j, i)] = c(1.0);
            }
        }
    }
    u
}

pub fn on_ancilla(k: &M) -> M {
    kron(&[&eye(4), k])
}

pub fn sandwich(k: &M, rho: &M) -> M {
    k * rho * k.adjoint()
}

/// `(1-e) U ρ U† + e ρ`.
pub fn mix(rho: &M, u: &M, e: f64) -> M {
    sandwich(u, rho) * c(1.0 - e) + rho * c(e)
}

pub fn pump(rho: &M) -> M {
    let k0 = M::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]);
    let k1 = M::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
    sandwich(&on_ancilla(&k0), rho) + sandwich(&on_ancilla(&k1), rho)
}

/// Unnormalized click branch.
pub fn click(rho: &M, b: f64, d: f64) -> M {
    let k = M::from_row_slice(2, 2, &[c(b.sqrt()), c(0.0), c(0.0), c(d.sqrt())]);
    sandwich(&on_ancilla(&k), rho)
}

pub fn trace(rho: &M) -> f64 {
    rho.trace().re
}

pub fn normalize(rho: M) -> (f64, M) {
    let p = trace(&rho);
    (p, rho / c(p))
}

/// Traces out the ancilla of an 8-dim register state.
pub fn trace_ancilla(rho: &M) -> M {
    M::from_fn(4, 4, |i, j| rho[(2 * i, 2 * j)] + rho[(2 * i + 1, 2 * j + 1)])
}

pub struct Params {
    pub eps: f64,
    pub b: f64,
    pub d: f64,
    pub q: f64,
    /// Coherence factors of C and N during the idle window.
    pub lambda_c: f64,
    pub lambda_n: f64,
}

impl Params {
    pub fn ideal(b: f64) -> Self {
        Self { eps: 0.0, b, d: 0.0, q: 0.0, lambda_c: 1.0, lambda_n: 1.0 }
    }
}

pub fn dephase(rho: &M, which: usize, lambda: f64) -> M {
    let zz = if which == 0 { kron(&[&z(), &eye(4)]) } else { kron(&[&eye(2), &z(), &eye(2)]) };
    // ρ -> (1+λ)/2 ρ + (1-λ)/2 Z ρ Z
    rho * c((1.0 + lambda) / 2.0) + sandwich(&zz, rho) * c((1.0 - lambda) / 2.0)
}

/// Bell preparation by measurement. `axes` are the π/2-pulse axes on (C, N)
/// and `even` selects the parity. Returns (nuclear state, init herald, parity herald).
pub fn prepare(axes: (f64, f64), even: bool, p: &Params) -> (M, f64, f64) {
    let xa = on_ancilla(&x());
    let mut rho = eye(8) / c(8.0);
    rho = pump(&rho);
    rho = sandwich(&cflip(&[(0, 0)]), &rho);
    let (p1, r) = normalize(click(&rho, p.b, p.d));
    rho = mix(&r, &xa, 1.0 - p.q);
    rho = mix(&rho, &xa, p.eps);
    let u = kron(&[&rot(axes.0, std::f64::consts::FRAC_PI_2), &rot(axes.1, std::f64::consts::FRAC_PI_2), &eye(2)]);
    rho = sandwich(&u, &rho);
    rho = dephase(&rho, 0, p.lambda_c);
    rho = dephase(&rho, 1, p.lambda_n);
    let conds: [(usize, usize); 2] = if even { [(0, 0), (1, 1)] } else { [(0, 1), (1, 0)] };
    for cond in conds {
        rho = sandwich(&cflip(&[cond]), &rho);
    }
    let (p2, r) = normalize(click(&rho, p.b, p.d));
    rho = mix(&r, &xa, 1.0 - p.q);
    rho = mix(&rho, &xa, p.eps);
    (trace_ancilla(&rho), p1, p2)
}

pub fn to_nalgebra(m: &Matrix) -> M {
    let n = m.dim();
    M::from_fn(n, n, |i, j| m[(i, j)])
}

pub fn from_nalgebra(m: &M) -> Matrix {
    Matrix::from_fn(m.nrows(), |i, j| m[(i, j)])
}

pub fn density(qubits: QubitSet, m: &M) -> DensityMatrix {
    DensityMatrix::new(qubits, from_nalgebra(m)).unwrap()
}

pub fn max_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `⟨ψ|ρ|ψ⟩` with a real amplitude vector.
pub fn overlap(rho: &M, psi: &[f64]) -> f64 {
    let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|&a| c(a)));
    (v.adjoint() * rho * &v)[(0, 0)].re
}

/// Random density matrix `G G† / tr` with Gaussian `G` of the given rank.
pub fn random_state<R: rand::Rng>(dim: usize, rank: usize, rng: &mut R) -> M {
    use rand_distr::{Distribution, StandardNormal};
    let g = M::from_fn(dim, rank, |_, _| C::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    let rho = &g * g.adjoint();
    let t = trace(&rho);
    rho / c(t)
}
