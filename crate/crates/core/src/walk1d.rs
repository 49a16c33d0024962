//! The 1D coined walk `U = (I ⊗ C)(S ⊗ |R><R| + S† ⊗ |L><L|)` with
//! `C = e^{iθσ_X}` in the `{|R>, |L>}` basis.

use ndarray::{Array1, Array2};

use crate::error::Result;
use crate::lattice::{Dimension, EnergyModeLabel, LatticeSpec, MomentumMode};
use crate::linalg::{C64, I};
use crate::walk::{self, walk_basis, BlockDecomposition, Coin, WalkUnitary};

/// The coin `e^{iθQ}` with `Q = σ_X`.
pub fn coin_1d(theta: f64) -> Array2<C64> {
    let (s, c) = theta.sin_cos();
    ndarray::array![[C64::new(c, 0.0), I * s], [I * s, C64::new(c, 0.0)]]
}

pub fn build_walk_unitary_1d(spec: &LatticeSpec) -> Result<WalkUnitary> {
    spec.require(Dimension::One)?;
    Ok(WalkUnitary {
        spec: *spec,
        matrix: walk_matrix_1d(spec.n, spec.theta),
        basis: walk_basis(spec),
    })
}

/// The dense walk matrix on `n_sites` sites with walk index `2x + coin`.
/// Works for any `n_sites ≥ 1`, including odd ring sizes that have no
/// momentum grid.
pub fn walk_matrix_1d(n_sites: usize, theta: f64) -> Array2<C64> {
    let n = n_sites;
    let coin = coin_1d(theta);
    let mut u = Array2::zeros((2 * n, 2 * n));
    for x in 0..n {
        // R moves right, L moves left, then the coin mixes.
        let targets = [((x + 1) % n, Coin::R), ((x + n - 1) % n, Coin::L)];
        for (target, from) in targets {
            let col = 2 * x + from.index();
            for to in [Coin::R, Coin::L] {
                u[[2 * target + to.index(), col]] += coin[[to.index(), from.index()]];
            }
        }
    }
    u
}

/// Coefficients `(cos kΔx cos θ, cos kΔx sin θ, sin kΔx sin θ, sin kΔx cos θ)`.
pub fn block_coefficients_1d(k_dx: f64, theta: f64) -> [f64; 4] {
    let (sk, ck) = k_dx.sin_cos();
    let (st, ct) = theta.sin_cos();
    [ck * ct, ck * st, sk * st, sk * ct]
}

/// The block in its explicit form
/// `[[e^{ikΔx} cos θ, i e^{-ikΔx} sin θ], [i e^{ikΔx} sin θ, e^{-ikΔx} cos θ]]`.
pub fn block_matrix_1d(k_dx: f64, theta: f64) -> Array2<C64> {
    let (st, ct) = theta.sin_cos();
    let ep = C64::from_polar(1.0, k_dx);
    let em = C64::from_polar(1.0, -k_dx);
    ndarray::array![[ep * ct, I * em * st], [I * ep * st, em * ct]]
}

/// Block decomposition at an arbitrary wavenumber (not necessarily on a grid).
pub fn block_at(mode: MomentumMode, k_dx: f64, theta: f64) -> BlockDecomposition {
    BlockDecomposition::from_parts(
        mode,
        block_coefficients_1d(k_dx, theta),
        block_matrix_1d(k_dx, theta),
    )
}

pub fn momentum_block_1d(spec: &LatticeSpec, mode: &MomentumMode) -> Result<BlockDecomposition> {
    spec.require(Dimension::One)?;
    spec.check_on_grid(mode)?;
    Ok(block_at(*mode, mode.kx() * spec.dx, spec.theta))
}

pub fn walk_eigenstate_1d(spec: &LatticeSpec, label: &EnergyModeLabel) -> Result<Array1<C64>> {
    spec.require(Dimension::One)?;
    walk::walk_eigenstate(spec, label)
}
