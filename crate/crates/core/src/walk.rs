//! Types shared by the 1D and 2D walks: the dense walk unitary, momentum-block
//! decompositions and dimension-dispatching entry points.

use std::fmt;
use std::io::Write;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{QcaError, Result};
use crate::lattice::{
    momentum_grid, Branch, Dimension, EnergyModeLabel, LatticeSpec, MomentumMode,
};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::{walk1d, walk2d};

/// Blocks with `sin φ` below this are treated as `M = ±I`.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Below this fraction of `sin φ` the eigenvector formula switches to its
/// companion form (the primary form would evaluate 0/0).
const COMPANION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Coin {
    R,
    L,
}

impl Coin {
    pub fn index(self) -> usize {
        match self {
            Coin::R => 0,
            Coin::L => 1,
        }
    }
}

/// Position and coin state of one walk basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct WalkBasisLabel {
    pub x: usize,
    pub y: usize,
    pub coin: Coin,
}

impl fmt::Display for WalkBasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>|{:?}>", self.x, self.y, self.coin)
    }
}

/// Site index `x + N y`; walk index `2 * site + coin`.
pub fn walk_index(spec: &LatticeSpec, x: usize, y: usize, coin: Coin) -> usize {
    2 * (x + spec.n * y) + coin.index()
}

pub fn walk_basis(spec: &LatticeSpec) -> Vec<WalkBasisLabel> {
    let ny = match spec.dimension {
        Dimension::One => 1,
        Dimension::Two => spec.n,
    };
    let mut out = Vec::with_capacity(spec.walk_dim());
    for y in 0..ny {
        for x in 0..spec.n {
            for coin in [Coin::R, Coin::L] {
                out.push(WalkBasisLabel { x, y, coin });
            }
        }
    }
    out
}

/// Dense single-particle evolution operator together with its basis labels.
#[derive(Debug, Clone)]
pub struct WalkUnitary {
    pub spec: LatticeSpec,
    pub matrix: Array2<C64>,
    pub basis: Vec<WalkBasisLabel>,
}

impl WalkUnitary {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, state: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(state)
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }
}

/// Largest walk dimension for which a dense unitary is built.
pub const MAX_DENSE_WALK_DIM: usize = 4096;

pub fn build_walk_unitary(spec: &LatticeSpec) -> Result<WalkUnitary> {
    if spec.walk_dim() > MAX_DENSE_WALK_DIM {
        return Err(QcaError::CapExceeded {
            requested: spec.walk_dim() as u128,
            cap: MAX_DENSE_WALK_DIM as u128,
        });
    }
    match spec.dimension {
        Dimension::One => walk1d::build_walk_unitary_1d(spec),
        Dimension::Two => walk2d::build_walk_unitary_2d(spec),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigenvectorForm {
    /// Closed-form `(r3 ± sin φ, r1 + i r2)` eigenvectors.
    Closed,
    /// At least one branch used `(r1 - i r2, ±sin φ - r3)`.
    Companion,
    /// `M = ±I`; computational basis returned.
    Canonical,
}

/// A momentum block `M = r0 I + i (r1 σ_X + r2 σ_Y + r3 σ_Z)` and its
/// eigen-decomposition `M v_± = e^{±iφ} v_±`.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub mode: MomentumMode,
    pub r: [f64; 4],
    pub m: Array2<C64>,
    pub phi: f64,
    pub sin_phi: f64,
    pub v_plus: Array1<C64>,
    pub v_minus: Array1<C64>,
    pub degenerate: bool,
    pub form: EigenvectorForm,
}

impl BlockDecomposition {
    /// Decomposes a block given its coefficients. `m` must equal the SU(2)
    /// element built from `r`; it is passed in so callers can use their own
    /// closed form for the matrix entries.
    pub fn from_parts(mode: MomentumMode, r: [f64; 4], m: Array2<C64>) -> Self {
        let rho_sq = r[1] * r[1] + r[2] * r[2];
        let s = (rho_sq + r[3] * r[3]).sqrt();
        // Same as acos(r0) on the unit sphere, without its loss of precision
        // near r0 = ±1.
        let phi = s.atan2(r[0]);

        if s < DEGENERACY_TOL {
            return BlockDecomposition {
                mode,
                r,
                m,
                phi,
                sin_phi: s,
                v_plus: ndarray::array![ONE, ZERO],
                v_minus: ndarray::array![ZERO, ONE],
                degenerate: true,
                form: EigenvectorForm::Canonical,
            };
        }

        // a± = sin φ ± r3, with the small one computed as ρ²/(large one).
        let (a_plus, a_minus) = if r[3] >= 0.0 {
            let big = s + r[3];
            (big, rho_sq / big)
        } else {
            let big = s - r[3];
            (rho_sq / big, big)
        };
        let off = C64::new(r[1], r[2]);

        let mut companion = false;
        let v_plus = if a_plus >= COMPANION_TOL * s {
            let norm = (2.0 * s * a_plus).sqrt();
            ndarray::array![C64::new(a_plus / norm, 0.0), off / norm]
        } else {
            companion = true;
            let norm = (2.0 * s * a_minus).sqrt();
            ndarray::array![off.conj() / norm, C64::new(a_minus / norm, 0.0)]
        };
        let v_minus = if a_minus >= COMPANION_TOL * s {
            let norm = (2.0 * s * a_minus).sqrt();
            ndarray::array![C64::new(-a_minus / norm, 0.0), off / norm]
        } else {
            companion = true;
            let norm = (2.0 * s * a_plus).sqrt();
            ndarray::array![off.conj() / norm, C64::new(-a_plus / norm, 0.0)]
        };

        BlockDecomposition {
            mode,
            r,
            m,
            phi,
            sin_phi: s,
            v_plus,
            v_minus,
            degenerate: false,
            form: if companion {
                EigenvectorForm::Companion
            } else {
                EigenvectorForm::Closed
            },
        }
    }

    pub fn eigenvector(&self, branch: Branch) -> &Array1<C64> {
        match branch {
            Branch::Plus => &self.v_plus,
            Branch::Minus => &self.v_minus,
        }
    }

    pub fn eigenvalue(&self, branch: Branch) -> C64 {
        C64::from_polar(1.0, branch.sign() * self.phi)
    }

    /// `max_± |M v_± - e^{±iφ} v_±|`.
    pub fn eigen_residual(&self) -> f64 {
        [Branch::Plus, Branch::Minus]
            .iter()
            .map(|&b| {
                let v = self.eigenvector(b);
                let lhs = self.m.dot(v);
                let lam = self.eigenvalue(b);
                lhs.iter()
                    .zip(v.iter())
                    .map(|(a, x)| (a - lam * x).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn coefficient_norm_defect(&self) -> f64 {
        (self.r.iter().map(|x| x * x).sum::<f64>() - 1.0).abs()
    }
}

pub fn momentum_block(spec: &LatticeSpec, mode: &MomentumMode) -> Result<BlockDecomposition> {
    match spec.dimension {
        Dimension::One => walk1d::momentum_block_1d(spec, mode),
        Dimension::Two => walk2d::momentum_block_2d(spec, mode),
    }
}

/// The plane wave `|k> = N^{-d/2} Σ_x e^{-i k·x} |x>` on the site register.
pub fn plane_wave(spec: &LatticeSpec, mode: &MomentumMode) -> Array1<C64> {
    let sites = spec.num_sites();
    let norm = (sites as f64).sqrt();
    let ny = match spec.dimension {
        Dimension::One => 1,
        Dimension::Two => spec.n,
    };
    let mut out = Array1::zeros(sites);
    for y in 0..ny {
        for x in 0..spec.n {
            let phase = -(mode.k[0] * x as f64 + mode.k[1] * y as f64) * spec.dx;
            out[x + spec.n * y] = C64::from_polar(1.0 / norm, phase);
        }
    }
    out
}

/// `|k> ⊗ (c_R |R> + c_L |L>)` on the full walk space.
pub fn momentum_coin_state(
    spec: &LatticeSpec,
    mode: &MomentumMode,
    coin: &Array1<C64>,
) -> Array1<C64> {
    let wave = plane_wave(spec, mode);
    linalg::kron_vec(&wave, coin)
}

/// Walk eigenstate `|k, ε>` built from the block eigenvector `v_{k,ε}`.
pub fn walk_eigenstate(spec: &LatticeSpec, label: &EnergyModeLabel) -> Result<Array1<C64>> {
    let block = momentum_block(spec, &label.mode)?;
    Ok(momentum_coin_state(
        spec,
        &label.mode,
        block.eigenvector(label.branch),
    ))
}

pub fn walk_eigenphase(spec: &LatticeSpec, label: &EnergyModeLabel) -> Result<f64> {
    Ok(label.branch.sign() * momentum_block(spec, &label.mode)?.phi)
}

/// Restriction of the dense walk unitary to `span{|k>|R>, |k>|L>}`.
///
/// Returns the projected 2×2 block and the norm of the part of `U|k,c>` that
/// leaks out of the span (zero when the span is invariant).
pub fn project_block(walk: &WalkUnitary, mode: &MomentumMode) -> (Array2<C64>, f64) {
    let spec = &walk.spec;
    let basis = [
        momentum_coin_state(spec, mode, &ndarray::array![ONE, ZERO]),
        momentum_coin_state(spec, mode, &ndarray::array![ZERO, ONE]),
    ];
    let mut block = Array2::zeros((2, 2));
    let mut leak: f64 = 0.0;
    for j in 0..2 {
        let image = walk.apply(&basis[j]);
        let mut rest = image.clone();
        for i in 0..2 {
            let amp = linalg::inner(&basis[i], &image);
            block[[i, j]] = amp;
            rest -= &basis[i].mapv(|z| z * amp);
        }
        leak = leak.max(linalg::vec_norm(&rest));
    }
    (block, leak)
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockConsistencyReport {
    pub modes_checked: usize,
    pub max_block_deviation: f64,
    pub max_leakage: f64,
}

impl BlockConsistencyReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_block_deviation.max(self.max_leakage)
    }
}

/// Compares every projected block of the dense unitary with its closed form.
pub fn verify_block_consistency(spec: &LatticeSpec) -> Result<BlockConsistencyReport> {
    let walk = build_walk_unitary(spec)?;
    let mut report = BlockConsistencyReport {
        modes_checked: 0,
        max_block_deviation: 0.0,
        max_leakage: 0.0,
    };
    for mode in momentum_grid(spec) {
        let closed = momentum_block(spec, &mode)?;
        let (projected, leak) = project_block(&walk, &mode);
        report.max_block_deviation = report
            .max_block_deviation
            .max(linalg::max_abs_diff(&projected, &closed.m));
        report.max_leakage = report.max_leakage.max(leak);
        report.modes_checked += 1;
    }
    Ok(report)
}

/// Writes the per-mode spectrum as CSV.
///
/// 1D columns: `ell,k,r0,r1,r2,r3,phi,degenerate`.
/// 2D columns: `ell_x,ell_y,k_x,k_y,r0,r1,r2,r3,phi,degenerate`.
pub fn write_spectrum_csv<W: Write>(spec: &LatticeSpec, out: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    match spec.dimension {
        Dimension::One => {
            w.write_record(["ell", "k", "r0", "r1", "r2", "r3", "phi", "degenerate"])?
        }
        Dimension::Two => w.write_record([
            "ell_x",
            "ell_y",
            "k_x",
            "k_y",
            "r0",
            "r1",
            "r2",
            "r3",
            "phi",
            "degenerate",
        ])?,
    }
    let mut rows = 0;
    for mode in momentum_grid(spec) {
        let b = momentum_block(spec, &mode)?;
        let mut rec: Vec<String> = match spec.dimension {
            Dimension::One => vec![mode.ell[0].to_string(), mode.k[0].to_string()],
            Dimension::Two => vec![
                mode.ell[0].to_string(),
                mode.ell[1].to_string(),
                mode.k[0].to_string(),
                mode.k[1].to_string(),
            ],
        };
        rec.extend(b.r.iter().map(|x| x.to_string()));
        rec.push(b.phi.to_string());
        rec.push(b.degenerate.to_string());
        w.write_record(&rec)?;
        rows += 1;
    }
    w.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_r(a: f64, b: f64, c: f64, phi: f64) -> [f64; 4] {
        let n = (a * a + b * b + c * c).sqrt();
        [
            phi.cos(),
            phi.sin() * a / n,
            phi.sin() * b / n,
            phi.sin() * c / n,
        ]
    }

    fn dummy_mode() -> MomentumMode {
        LatticeSpec::one_d(2, 1.0, 1.0, 0.0).unwrap().mode(0, 0)
    }

    #[test]
    fn aligned_coefficients_use_companion_form() {
        for r3 in [1.0, -1.0] {
            let phi: f64 = 0.4;
            let r = [phi.cos(), 0.0, 0.0, r3 * phi.sin()];
            let b =
                BlockDecomposition::from_parts(dummy_mode(), r, linalg::su2_from_coefficients(r));
            assert_eq!(b.form, EigenvectorForm::Companion);
            assert!(b.eigen_residual() < 1e-14);
            assert!((linalg::vec_norm(&b.v_plus) - 1.0).abs() < 1e-14);
            assert!((linalg::vec_norm(&b.v_minus) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_block_is_degenerate() {
        let r = [1.0, 0.0, 0.0, 0.0];
        let b = BlockDecomposition::from_parts(dummy_mode(), r, linalg::su2_from_coefficients(r));
        assert!(b.degenerate);
        assert_eq!(b.form, EigenvectorForm::Canonical);
        assert_eq!(b.phi, 0.0);
    }

    proptest! {
        #[test]
        fn closed_form_eigenvectors_are_orthonormal_eigenvectors(
            a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, phi in 1e-6f64..3.1
        ) {
            prop_assume!(a * a + b * b + c * c > 1e-6);
            let r = random_r(a, b, c, phi);
            let blk = BlockDecomposition::from_parts(dummy_mode(), r, linalg::su2_from_coefficients(r));
            prop_assert!(!blk.degenerate);
            prop_assert!(blk.eigen_residual() < 1e-12);
            prop_assert!(linalg::inner(&blk.v_plus, &blk.v_minus).norm() < 1e-12);
            prop_assert!((linalg::vec_norm(&blk.v_plus) - 1.0).abs() < 1e-12);
            prop_assert!((blk.phi.cos() - blk.r[0]).abs() < 1e-12);
        }
    }
}
