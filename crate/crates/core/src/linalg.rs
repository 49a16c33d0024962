//! Small dense complex linear-algebra helpers shared by the walk, Fock and
//! Dirac-limit modules.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{QcaError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |U†U - I|` over all entries.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let prod = dagger(u).dot(u);
    max_abs_diff(&prod, &identity(u.nrows()))
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) + b.dot(a)
}

/// `U O U†`.
pub fn conjugate(u: &Array2<C64>, o: &Array2<C64>) -> Array2<C64> {
    u.dot(o).dot(&dagger(u))
}

pub fn vec_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn kron_vec(a: &Array1<C64>, b: &Array1<C64>) -> Array1<C64> {
    let mut out = Array1::zeros(a.len() * b.len());
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

pub fn pauli_x() -> Array2<C64> {
    ndarray::array![[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_y() -> Array2<C64> {
    ndarray::array![[ZERO, -I], [I, ZERO]]
}

pub fn pauli_z() -> Array2<C64> {
    ndarray::array![[ONE, ZERO], [ZERO, -ONE]]
}

/// `r0 I + i (r1 σ_X + r2 σ_Y + r3 σ_Z)`.
pub fn su2_from_coefficients(r: [f64; 4]) -> Array2<C64> {
    identity(2).mapv(|z| z * r[0])
        + (pauli_x().mapv(|z| z * r[1])
            + pauli_y().mapv(|z| z * r[2])
            + pauli_z().mapv(|z| z * r[3]))
        .mapv(|z| z * I)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = a
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let scaled = a.mapv(|z| z * scale);

    let mut result = identity(n);
    let mut term = identity(n);
    for j in 1..=30 {
        term = term.dot(&scaled).mapv(|z| z / j as f64);
        result += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Eigenvalues of a 2×2 complex matrix from its characteristic polynomial.
pub fn eigenvalues_2x2(m: &Array2<C64>) -> [C64; 2] {
    let tr = m[[0, 0]] + m[[1, 1]];
    let det = m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]];
    let disc = (tr * tr - 4.0 * det).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0]
}

/// Principal logarithm of a 2×2 unitary via its spectral projectors.
///
/// Fails when an eigenvalue lies within `branch_tol` of the negative real axis.
pub fn log_unitary_2x2(m: &Array2<C64>, branch_tol: f64) -> Result<Array2<C64>> {
    let [l1, l2] = eigenvalues_2x2(m);
    for l in [l1, l2] {
        if std::f64::consts::PI - l.arg().abs() < branch_tol {
            return Err(QcaError::BranchCut);
        }
    }
    let log1 = C64::new(l1.norm().ln(), l1.arg());
    let log2 = C64::new(l2.norm().ln(), l2.arg());
    if (l1 - l2).norm() < 1e-12 {
        return Ok(identity(2).mapv(|z| z * log1));
    }
    let id = identity(2);
    let p1 = (m - &id.mapv(|z| z * l2)).mapv(|z| z / (l1 - l2));
    let p2 = (m - &id.mapv(|z| z * l1)).mapv(|z| z / (l2 - l1));
    Ok(p1.mapv(|z| z * log1) + p2.mapv(|z| z * log2))
}

/// Real Pauli coefficients `(h0, h1, h2, h3)` of `h0 I + h1 σ_X + h2 σ_Y + h3 σ_Z`.
pub fn pauli_coefficients(h: &Array2<C64>) -> [C64; 4] {
    let half = |m: Array2<C64>| -> C64 { (m[[0, 0]] + m[[1, 1]]) / 2.0 };
    [
        half(h.clone()),
        half(pauli_x().dot(h)),
        half(pauli_y().dot(h)),
        half(pauli_z().dot(h)),
    ]
}
