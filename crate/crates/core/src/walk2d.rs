//! The 2D walk
//! `U = (I ⊗ C)(S_Y ⊗ |U><U| + S_Y† ⊗ |D><D|)(S_X ⊗ |R><R| + S_X† ⊗ |L><L|)`
//! on an `N × N` torus with a two-dimensional coin.
//!
//! The coin frame is specified abstractly (vectors and operators in some
//! basis of `C²`). The walk itself is always represented in the frame's own
//! `{|R>, |L>}` coordinates, which is where the momentum block takes the form
//! `r0 I + i (r1 σ_X + r2 σ_Y + r3 σ_Z)`.

use ndarray::{Array1, Array2};

use crate::error::{QcaError, Result};
use crate::lattice::{Dimension, EnergyModeLabel, LatticeSpec, MomentumMode};
use crate::linalg::{self, C64, I, ONE};
use crate::walk::{self, walk_basis, walk_index, BlockDecomposition, Coin, WalkUnitary};

const FRAME_TOL: f64 = 1e-12;

/// Direction states and the operators `ΔP_X = |R><R| - |L><L|`,
/// `ΔP_Y = |U><U| - |D><D|` and the direction flip `Q`.
#[derive(Debug, Clone)]
pub struct CoinFrame2D {
    pub r: Array1<C64>,
    pub l: Array1<C64>,
    pub u: Array1<C64>,
    pub d: Array1<C64>,
    pub delta_px: Array2<C64>,
    pub delta_py: Array2<C64>,
    pub q: Array2<C64>,
}

fn outer(a: &Array1<C64>, b: &Array1<C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j].conj())
}

/// `ΔP_X = σ_X`, `ΔP_Y = σ_Y`, `Q = σ_Z`, with the direction states chosen as
/// eigenvectors of the `ΔP`s and phased so that `Q|R> = |L>` and `Q|U> = |D>`.
pub fn make_coin_frame_2d() -> CoinFrame2D {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = ndarray::array![C64::new(h, 0.0), C64::new(h, 0.0)];
    let u = ndarray::array![C64::new(h, 0.0), C64::new(0.0, h)];
    let q = linalg::pauli_z();
    let l = q.dot(&r);
    let d = q.dot(&u);
    CoinFrame2D {
        r,
        l,
        u,
        d,
        delta_px: linalg::pauli_x(),
        delta_py: linalg::pauli_y(),
        q,
    }
}

impl CoinFrame2D {
    /// Builds a user frame from direction vectors and `Q`, then validates it.
    pub fn from_parts(
        r: Array1<C64>,
        l: Array1<C64>,
        u: Array1<C64>,
        d: Array1<C64>,
        q: Array2<C64>,
    ) -> Result<Self> {
        if [&r, &l, &u, &d].iter().any(|v| v.len() != 2) || q.dim() != (2, 2) {
            return Err(QcaError::InvalidCoinFrame("coin space must be C^2".into()));
        }
        let frame = CoinFrame2D {
            delta_px: outer(&r, &r) - outer(&l, &l),
            delta_py: outer(&u, &u) - outer(&d, &d),
            r,
            l,
            u,
            d,
            q,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// Applies a unitary change of basis to every vector and operator.
    pub fn transformed(&self, v: &Array2<C64>) -> CoinFrame2D {
        let vd = linalg::dagger(v);
        let op = |m: &Array2<C64>| v.dot(m).dot(&vd);
        CoinFrame2D {
            r: v.dot(&self.r),
            l: v.dot(&self.l),
            u: v.dot(&self.u),
            d: v.dot(&self.d),
            delta_px: op(&self.delta_px),
            delta_py: op(&self.delta_py),
            q: op(&self.q),
        }
    }

    /// Largest violation among all frame invariants.
    pub fn invariant_defect(&self) -> f64 {
        let id = linalg::identity(2);
        let mut worst: f64 = 0.0;
        let mut check = |x: f64| worst = worst.max(x);

        for v in [&self.r, &self.l, &self.u, &self.d] {
            check((linalg::vec_norm(v) - 1.0).abs());
        }
        check(linalg::inner(&self.r, &self.l).norm());
        check(linalg::inner(&self.u, &self.d).norm());
        let unbiased = std::f64::consts::FRAC_1_SQRT_2;
        for a in [&self.r, &self.l] {
            for b in [&self.u, &self.d] {
                check((linalg::inner(a, b).norm() - unbiased).abs());
            }
        }
        check(linalg::max_abs_diff(
            &self.delta_px,
            &(outer(&self.r, &self.r) - outer(&self.l, &self.l)),
        ));
        check(linalg::max_abs_diff(
            &self.delta_py,
            &(outer(&self.u, &self.u) - outer(&self.d, &self.d)),
        ));
        check(linalg::max_abs_diff(&self.q, &linalg::dagger(&self.q)));
        for m in [&self.delta_px, &self.delta_py, &self.q] {
            check(linalg::max_abs_diff(&m.dot(m), &id));
        }
        check(linalg::max_abs(&linalg::anticommutator(
            &self.delta_px,
            &self.delta_py,
        )));
        check(linalg::max_abs(&linalg::anticommutator(
            &self.delta_px,
            &self.q,
        )));
        check(linalg::max_abs(&linalg::anticommutator(
            &self.delta_py,
            &self.q,
        )));
        // Q swaps R <-> L and U <-> D (up to phase).
        for (a, b) in [(&self.r, &self.l), (&self.u, &self.d)] {
            check((linalg::inner(b, &self.q.dot(a)).norm() - 1.0).abs());
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let defect = self.invariant_defect();
        if defect > FRAME_TOL {
            return Err(QcaError::InvalidCoinFrame(format!(
                "invariant violated by {defect:.3e}"
            )));
        }
        Ok(())
    }

    /// Change of basis whose columns are `|R>` and `|L>`.
    fn rl_basis(&self) -> Array2<C64> {
        Array2::from_shape_fn((2, 2), |(i, j)| if j == 0 { self.r[i] } else { self.l[i] })
    }

    /// An operator expressed in `{|R>, |L>}` coordinates.
    pub fn in_rl(&self, m: &Array2<C64>) -> Array2<C64> {
        let w = self.rl_basis();
        linalg::dagger(&w).dot(m).dot(&w)
    }

    /// `e^{iθQ}` in `{|R>, |L>}` coordinates.
    pub fn coin_rl(&self, theta: f64) -> Array2<C64> {
        let q = self.in_rl(&self.q);
        linalg::identity(2).mapv(|z| z * theta.cos()) + q.mapv(|z| z * I * theta.sin())
    }

    /// `(|U><U|, |D><D|)` in `{|R>, |L>}` coordinates.
    pub fn vertical_projectors_rl(&self) -> (Array2<C64>, Array2<C64>) {
        (
            self.in_rl(&outer(&self.u, &self.u)),
            self.in_rl(&outer(&self.d, &self.d)),
        )
    }
}

pub fn build_walk_unitary_2d(spec: &LatticeSpec) -> Result<WalkUnitary> {
    build_walk_unitary_2d_with_frame(spec, &make_coin_frame_2d())
}

pub fn build_walk_unitary_2d_with_frame(
    spec: &LatticeSpec,
    frame: &CoinFrame2D,
) -> Result<WalkUnitary> {
    spec.require(Dimension::Two)?;
    frame.validate()?;
    let n = spec.n;
    let coin = frame.coin_rl(spec.theta);
    let (pu, pd) = frame.vertical_projectors_rl();
    let dim = spec.walk_dim();
    let mut u = Array2::zeros((dim, dim));

    for y in 0..n {
        for x in 0..n {
            for from in [Coin::R, Coin::L] {
                let col = walk_index(spec, x, y, from);
                let x1 = match from {
                    Coin::R => (x + 1) % n,
                    Coin::L => (x + n - 1) % n,
                };
                // Y-step then coin: coefficient of |x1, y1, to> is
                // Σ_mid C[to, mid] P[mid, from] for P ∈ {P_U (y+1), P_D (y-1)}.
                for (proj, y1) in [(&pu, (y + 1) % n), (&pd, (y + n - 1) % n)] {
                    for to in [Coin::R, Coin::L] {
                        let amp: C64 = (0..2)
                            .map(|mid| coin[[to.index(), mid]] * proj[[mid, from.index()]])
                            .sum();
                        u[[walk_index(spec, x1, y1, to), col]] += amp;
                    }
                }
            }
        }
    }
    Ok(WalkUnitary {
        spec: *spec,
        matrix: u,
        basis: walk_basis(spec),
    })
}

pub fn block_coefficients_2d(kx_dx: f64, ky_dx: f64, theta: f64) -> [f64; 4] {
    let (sx, cx) = kx_dx.sin_cos();
    let (sy, cy) = ky_dx.sin_cos();
    let (st, ct) = theta.sin_cos();
    [
        cx * cy * ct - sx * sy * st,
        cx * cy * st + sx * sy * ct,
        -cx * sy * ct + sx * cy * st,
        sx * cy * ct + cx * sy * st,
    ]
}

pub fn block_at(mode: MomentumMode, kx_dx: f64, ky_dx: f64, theta: f64) -> BlockDecomposition {
    let r = block_coefficients_2d(kx_dx, ky_dx, theta);
    BlockDecomposition::from_parts(mode, r, linalg::su2_from_coefficients(r))
}

pub fn momentum_block_2d(spec: &LatticeSpec, mode: &MomentumMode) -> Result<BlockDecomposition> {
    spec.require(Dimension::Two)?;
    spec.check_on_grid(mode)?;
    Ok(block_at(
        *mode,
        mode.kx() * spec.dx,
        mode.ky() * spec.dx,
        spec.theta,
    ))
}

pub fn walk_eigenstate_2d(spec: &LatticeSpec, label: &EnergyModeLabel) -> Result<Array1<C64>> {
    spec.require(Dimension::Two)?;
    walk::walk_eigenstate(spec, label)
}

/// `|k> ⊗ |R>` and `|k> ⊗ |L>` for the 2D walk; convenience for callers.
pub fn momentum_rl_states(spec: &LatticeSpec, mode: &MomentumMode) -> [Array1<C64>; 2] {
    [
        walk::momentum_coin_state(spec, mode, &ndarray::array![ONE, linalg::ZERO]),
        walk::momentum_coin_state(spec, mode, &ndarray::array![linalg::ZERO, ONE]),
    ]
}
