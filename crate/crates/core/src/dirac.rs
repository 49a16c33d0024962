//! Long-wavelength comparison of the walk with the Dirac equation: the
//! dispersion relation, the effective generator of a momentum block and
//! convergence studies as `(kΔx, θ) → 0`.
//!
//! The effective generator is `H_eff = (iħ/Δt) log M` with the principal
//! logarithm, so that the creation operators evolve as the row vector
//! `(a†_R, a†_L) → (a†_R, a†_L) M ≈ (a†_R, a†_L)(I - i H Δt/ħ)`.

use std::io::Write;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{QcaError, Result};
use crate::fock::{self, FockBasis, FockOperator};
use crate::lattice::{momentum_grid, Dimension, LatticeSpec, MomentumMode, HBAR};
use crate::linalg::{self, C64, I};
use crate::walk::BlockDecomposition;
use crate::{walk1d, walk2d};

/// Modes with `π - φ` below this are rejected by the generator comparison.
pub const BRANCH_TOL: f64 = 1e-6;

/// Errors below this count as exact when fitting convergence orders.
pub const EXACT_TOL: f64 = 1e-12;

/// Fitted orders inside this window count as second-order convergence.
pub const ORDER_WINDOW: [f64; 2] = [1.8, 2.2];

/// `(U O U† - O) / Δt`.
pub fn time_derivative_superop(u: &Array2<C64>, o: &Array2<C64>, dt: f64) -> Result<Array2<C64>> {
    if u.nrows() != u.ncols() || o.nrows() != o.ncols() || u.nrows() != o.nrows() {
        return Err(QcaError::StateDimension {
            expected: u.nrows(),
            found: o.nrows(),
        });
    }
    Ok((linalg::conjugate(u, o) - o).mapv(|z| z / dt))
}

/// Same superoperator on Fock-space operators.
pub fn time_derivative_fock(u: &FockOperator, o: &FockOperator, dt: f64) -> Result<FockOperator> {
    if u.dim() != o.dim() {
        return Err(QcaError::StateDimension {
            expected: u.dim(),
            found: o.dim(),
        });
    }
    Ok(o.conjugated_by(u).sub(o).scaled(C64::new(1.0 / dt, 0.0)))
}

/// A point in the dimensionless long-wavelength plane together with units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalePoint {
    pub dimension: Dimension,
    /// `(k_x Δx, k_y Δx)`; the second entry is zero in 1D.
    pub k_dx: [f64; 2],
    pub theta: f64,
    pub dx: f64,
    pub dt: f64,
}

impl ScalePoint {
    pub fn one_d(k_dx: f64, theta: f64) -> Self {
        ScalePoint {
            dimension: Dimension::One,
            k_dx: [k_dx, 0.0],
            theta,
            dx: 1.0,
            dt: 1.0,
        }
    }

    pub fn two_d(kx_dx: f64, ky_dx: f64, theta: f64) -> Self {
        ScalePoint {
            dimension: Dimension::Two,
            k_dx: [kx_dx, ky_dx],
            theta,
            dx: 1.0,
            dt: 1.0,
        }
    }

    pub fn from_mode(spec: &LatticeSpec, mode: &MomentumMode) -> Self {
        ScalePoint {
            dimension: spec.dimension,
            k_dx: [mode.kx() * spec.dx, mode.ky() * spec.dx],
            theta: spec.theta,
            dx: spec.dx,
            dt: spec.dt,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        ScalePoint {
            k_dx: [self.k_dx[0] * s, self.k_dx[1] * s],
            theta: self.theta * s,
            ..*self
        }
    }

    fn mode(&self) -> MomentumMode {
        MomentumMode {
            dimension: self.dimension,
            ell: [0, 0],
            k: [self.k_dx[0] / self.dx, self.k_dx[1] / self.dx],
        }
    }

    pub fn block(&self) -> BlockDecomposition {
        match self.dimension {
            Dimension::One => walk1d::block_at(self.mode(), self.k_dx[0], self.theta),
            Dimension::Two => walk2d::block_at(self.mode(), self.k_dx[0], self.k_dx[1], self.theta),
        }
    }

    /// `ħφ/Δt`.
    pub fn lattice_energy(&self) -> f64 {
        HBAR * self.block().phi / self.dt
    }

    /// `√(p²c² + m²c⁴)` with `p = ħk`, `c = Δx/Δt`, `mc² = ħθ/Δt`.
    pub fn relativistic_energy(&self) -> f64 {
        let [a, b] = self.k_dx;
        HBAR / self.dt * (a * a + b * b + self.theta * self.theta).sqrt()
    }

    /// `-c p_X σ_Z + c p_Y σ_Y - mc² σ_X` (the `σ_Y` term vanishes in 1D).
    pub fn dirac_hamiltonian(&self) -> Array2<C64> {
        let unit = HBAR / self.dt;
        let cpx = unit * self.k_dx[0];
        let cpy = unit * self.k_dx[1];
        let mc2 = unit * self.theta;
        linalg::pauli_z().mapv(|z| z * -cpx) + linalg::pauli_y().mapv(|z| z * cpy)
            - linalg::pauli_x().mapv(|z| z * mc2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionRecord {
    pub mode: MomentumMode,
    pub phi_over_dt: f64,
    pub e_rel: f64,
    pub abs_err: f64,
    /// `(ħφ/Δt - E_rel) / E_rel`; zero when both vanish.
    pub rel_err: f64,
}

pub fn dispersion_at(point: &ScalePoint, mode: MomentumMode) -> DispersionRecord {
    let e = point.lattice_energy();
    let target = point.relativistic_energy();
    let rel_err = if target > 0.0 {
        (e - target) / target
    } else {
        0.0
    };
    DispersionRecord {
        mode,
        phi_over_dt: e,
        e_rel: target,
        abs_err: (e - target).abs(),
        rel_err,
    }
}

/// One record per grid mode, or per listed mode when a filter is given.
pub fn dispersion_table(
    spec: &LatticeSpec,
    filter: Option<&[MomentumMode]>,
) -> Result<Vec<DispersionRecord>> {
    let modes = match filter {
        Some(list) => {
            for m in list {
                spec.check_on_grid(m)?;
            }
            list.to_vec()
        }
        None => momentum_grid(spec),
    };
    Ok(modes
        .into_iter()
        .map(|m| dispersion_at(&ScalePoint::from_mode(spec, &m), m))
        .collect())
}

/// Columns: `k,phi_over_dt,E_rel,abs_err,rel_err` in 1D, with `k_x,k_y` in 2D.
pub fn write_dispersion_csv<W: Write>(
    dimension: Dimension,
    records: &[DispersionRecord],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let tail = ["phi_over_dt", "E_rel", "abs_err", "rel_err"];
    let head: &[&str] = match dimension {
        Dimension::One => &["k"],
        Dimension::Two => &["k_x", "k_y"],
    };
    w.write_record(head.iter().chain(tail.iter()))?;
    for r in records {
        let mut row: Vec<String> = match dimension {
            Dimension::One => vec![r.mode.kx().to_string()],
            Dimension::Two => vec![r.mode.kx().to_string(), r.mode.ky().to_string()],
        };
        row.extend(
            [r.phi_over_dt, r.e_rel, r.abs_err, r.rel_err]
                .iter()
                .map(|x| x.to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GeneratorComparison {
    pub point: ScalePoint,
    pub h_eff: Array2<C64>,
    pub h_dirac: Array2<C64>,
    /// Largest entry of `H_eff - H_dirac`.
    pub deviation: f64,
    pub hermiticity_defect: f64,
}

pub fn generator_at(point: &ScalePoint) -> Result<GeneratorComparison> {
    let block = point.block();
    if std::f64::consts::PI - block.phi < BRANCH_TOL {
        return Err(QcaError::BranchCut);
    }
    let log = linalg::log_unitary_2x2(&block.m, BRANCH_TOL)?;
    let h_eff = log.mapv(|z| z * I * HBAR / point.dt);
    let h_dirac = point.dirac_hamiltonian();
    Ok(GeneratorComparison {
        point: *point,
        deviation: linalg::max_abs_diff(&h_eff, &h_dirac),
        hermiticity_defect: linalg::max_abs_diff(&h_eff, &linalg::dagger(&h_eff)),
        h_eff,
        h_dirac,
    })
}

pub fn generator_comparison(
    spec: &LatticeSpec,
    mode: &MomentumMode,
) -> Result<GeneratorComparison> {
    spec.check_on_grid(mode)?;
    generator_at(&ScalePoint::from_mode(spec, mode))
}

/// Least-squares slope of `ln err` against `ln scale`.
pub fn fit_order(scales: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(s, e)| (s.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Result of fitting one error sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    /// `None` when every error is below [`EXACT_TOL`].
    pub order: Option<f64>,
    pub exact: bool,
}

impl OrderFit {
    pub fn from_errors(scales: &[f64], errors: &[f64]) -> Self {
        let exact = errors.iter().all(|e| *e < EXACT_TOL);
        OrderFit {
            order: if exact {
                None
            } else {
                fit_order(scales, errors)
            },
            exact,
        }
    }

    /// Exact results pass; otherwise the fitted order must lie in the window.
    pub fn second_order(&self) -> bool {
        self.exact
            || self
                .order
                .is_some_and(|p| (ORDER_WINDOW[0]..=ORDER_WINDOW[1]).contains(&p))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub scale: f64,
    pub rel_err: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub base: ScalePoint,
    pub halvings: usize,
    pub rows: Vec<ConvergenceRow>,
    pub dispersion: OrderFit,
    pub generator: OrderFit,
}

impl ConvergenceStudy {
    pub fn passes(&self) -> bool {
        self.dispersion.second_order() && self.generator.second_order()
    }
}

/// Evaluates `|rel_err|` and the generator deviation at scales
/// `1, 1/2, …, 2^{-halvings}` and fits both orders.
pub fn convergence_study(base: &ScalePoint, halvings: usize) -> Result<ConvergenceStudy> {
    if halvings < 2 {
        return Err(QcaError::InvalidInput(format!(
            "a convergence fit needs at least 2 halvings, got {halvings}"
        )));
    }
    let mut rows = Vec::with_capacity(halvings + 1);
    for j in 0..=halvings {
        let scale = 0.5f64.powi(j as i32);
        let p = base.scaled(scale);
        rows.push(ConvergenceRow {
            scale,
            rel_err: dispersion_at(&p, p.mode()).rel_err.abs(),
            deviation: generator_at(&p)?.deviation,
        });
    }
    let scales: Vec<f64> = rows.iter().map(|r| r.scale).collect();
    let rel: Vec<f64> = rows.iter().map(|r| r.rel_err).collect();
    let dev: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    Ok(ConvergenceStudy {
        base: *base,
        halvings,
        dispersion: OrderFit::from_errors(&scales, &rel),
        generator: OrderFit::from_errors(&scales, &dev),
        rows,
    })
}

pub fn write_convergence_csv<W: Write>(study: &ConvergenceStudy, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scale", "rel_err", "deviation"])?;
    for r in &study.rows {
        w.write_record([
            r.scale.to_string(),
            r.rel_err.to_string(),
            r.deviation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `max_s ‖U a†_s U† - a†_s - Σ_t a†_t (-iΔt H_dirac/ħ)_{ts}‖` on the Fock
/// space of the two energy modes at `mode`.
pub fn first_order_fock_residual(spec: &LatticeSpec, mode: &MomentumMode) -> Result<f64> {
    let basis = FockBasis::for_momenta(spec, &[*mode])?;
    let u = fock::evolution_diagonal(&basis, spec)?;
    let (cr, cl) = fock::momentum_mode_ops(&basis, spec, mode)?;
    let creators = [cr, cl];
    let step = ScalePoint::from_mode(spec, mode)
        .dirac_hamiltonian()
        .mapv(|z| z * -I * spec.dt / HBAR);
    let mut worst: f64 = 0.0;
    for s in 0..2 {
        let lhs = creators[s].conjugated_by(&u).sub(&creators[s]);
        let pred = creators[0]
            .scaled(step[[0, s]])
            .add(&creators[1].scaled(step[[1, s]]));
        worst = worst.max(lhs.max_abs_diff(&pred));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct FockConvergence {
    pub residuals: Vec<f64>,
    pub fit: OrderFit,
}

/// Halves `kΔx` by doubling `N` at fixed `ℓ`, and halves `θ`, evaluating
/// [`first_order_fock_residual`] at each scale.
pub fn first_order_fock_study(
    base: &LatticeSpec,
    ell: [i64; 2],
    halvings: usize,
) -> Result<FockConvergence> {
    let mut scales = Vec::new();
    let mut residuals = Vec::new();
    for j in 0..=halvings {
        let factor = 1i64 << j;
        let spec = LatticeSpec::new(
            base.dimension,
            base.n as i64 * factor,
            base.dx,
            base.dt,
            base.theta / factor as f64,
        )?;
        let mode = spec.mode(ell[0], ell[1]);
        scales.push(1.0 / factor as f64);
        residuals.push(first_order_fock_residual(&spec, &mode)?);
    }
    Ok(FockConvergence {
        fit: OrderFit::from_errors(&scales, &residuals),
        residuals,
    })
}

/// Eigenvalues of `H_eff` against `±ħφ/Δt`.
pub fn generator_spectrum_defect(g: &GeneratorComparison) -> f64 {
    let e = g.point.lattice_energy();
    let [a, b] = linalg::eigenvalues_2x2(&g.h_eff);
    let (hi, lo) = if a.re >= b.re { (a, b) } else { (b, a) };
    (hi - e).norm().max((lo + e).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::EnergyModeLabel;
    use crate::linalg::ONE;
    use proptest::prelude::*;

    #[test]
    fn time_derivative_examples() {
        let u = walk1d::coin_1d(0.4);
        let id = linalg::identity(2);
        assert!(linalg::max_abs(&time_derivative_superop(&u, &id, 0.5).unwrap()) < 1e-15);
        // σ_X commutes with e^{iθσ_X}.
        let d = time_derivative_superop(&u, &linalg::pauli_x(), 1.0).unwrap();
        assert!(linalg::max_abs(&d) < 1e-15);
        assert!(time_derivative_superop(&u, &linalg::identity(3), 1.0).is_err());
    }

    #[test]
    fn time_derivative_scales_single_mode_creator() {
        let s = LatticeSpec::one_d(8, 1.0, 0.5, 0.3).unwrap();
        let label = EnergyModeLabel::plus(s.mode(1, 0));
        let basis = FockBasis::new(vec![label]).unwrap();
        let u = fock::evolution_diagonal(&basis, &s).unwrap();
        let c = fock::creation_op(&basis, &label).unwrap();
        let phi = crate::walk::momentum_block(&s, &label.mode).unwrap().phi;
        let expected = c.scaled((C64::from_polar(1.0, phi) - ONE) / s.dt);
        assert!(
            time_derivative_fock(&u, &c, s.dt)
                .unwrap()
                .max_abs_diff(&expected)
                < 1e-15
        );
    }

    #[test]
    fn rest_energy_at_zero_momentum() {
        for spec in [
            LatticeSpec::one_d(8, 1.0, 0.5, 0.3).unwrap(),
            LatticeSpec::two_d(4, 1.0, 0.5, 0.3).unwrap(),
        ] {
            let rec = &dispersion_table(&spec, Some(&[spec.mode(0, 0)])).unwrap()[0];
            assert!((rec.phi_over_dt - spec.rest_energy()).abs() <= 1e-15 * spec.rest_energy());
            assert!((rec.e_rel - spec.rest_energy()).abs() <= 1e-15 * spec.rest_energy());
            assert!(rec.rel_err.abs() < 1e-15);
        }
    }

    #[test]
    fn spot_dispersion_1d() {
        let rec = dispersion_at(
            &ScalePoint::one_d(0.1, 0.05),
            ScalePoint::one_d(0.1, 0.05).mode(),
        );
        // Oracle: acos(cos 0.1 · cos 0.05) and √(0.1² + 0.05²).
        let oracle_phi = (0.1f64.cos() * 0.05f64.cos()).acos();
        let oracle_e = (0.0125f64).sqrt();
        // acos near 1 is only good to about 1e-15 / sin φ.
        assert!((rec.phi_over_dt - oracle_phi).abs() < 1e-13);
        assert!((rec.phi_over_dt - 0.111_766_1).abs() < 1e-7);
        assert!((rec.e_rel - oracle_e).abs() < 1e-15);
        assert!((rec.rel_err - (oracle_phi - oracle_e) / oracle_e).abs() < 1e-12);
        assert!((rec.rel_err + 3.337e-4).abs() < 1e-6);
    }

    #[test]
    fn massless_dispersion_is_exact() {
        for k in [0.1, 0.37, 1.0] {
            let p = ScalePoint::one_d(k, 0.0);
            assert!(dispersion_at(&p, p.mode()).rel_err.abs() < 1e-12);
        }
    }

    #[test]
    fn generator_at_rest_is_mass_term() {
        for p in [
            ScalePoint::one_d(0.0, 0.3),
            ScalePoint::two_d(0.0, 0.0, 0.3),
        ] {
            let g = generator_at(&p).unwrap();
            let expected = linalg::pauli_x().mapv(|z| z * -0.3);
            assert!(linalg::max_abs_diff(&g.h_eff, &expected) < 1e-15);
            assert!(g.deviation < 1e-15);
        }
    }

    #[test]
    fn generator_deviation_is_second_order() {
        for (a, b) in [
            (ScalePoint::one_d(0.1, 0.05), ScalePoint::one_d(0.05, 0.025)),
            (
                ScalePoint::two_d(0.1, 0.07, 0.05),
                ScalePoint::two_d(0.05, 0.035, 0.025),
            ),
        ] {
            let ratio = generator_at(&a).unwrap().deviation / generator_at(&b).unwrap().deviation;
            assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn massless_generator_is_exact() {
        let g = generator_at(&ScalePoint::one_d(0.1, 0.0)).unwrap();
        assert!(g.deviation < 1e-3);
        let expected = linalg::pauli_z().mapv(|z| z * -0.1);
        assert!(linalg::max_abs_diff(&g.h_eff, &expected) < 1e-15);
    }

    #[test]
    fn branch_cut_rejected() {
        // kΔx = π, θ = 0 gives M = -I.
        assert!(matches!(
            generator_at(&ScalePoint::one_d(std::f64::consts::PI, 0.0)),
            Err(QcaError::BranchCut)
        ));
    }

    #[test]
    fn convergence_1d() {
        let st = convergence_study(&ScalePoint::one_d(0.1, 0.05), 3).unwrap();
        assert_eq!(st.rows.len(), 4);
        let d = st.dispersion.order.unwrap();
        let g = st.generator.order.unwrap();
        assert!((d - 2.0).abs() < 0.05, "{d}");
        assert!((g - 2.0).abs() < 0.05, "{g}");
        assert!(st.passes());
    }

    #[test]
    fn convergence_massless_is_exact() {
        let st = convergence_study(&ScalePoint::one_d(0.1, 0.0), 3).unwrap();
        assert!(st.dispersion.exact && st.generator.exact);
        assert!(st.passes());
    }

    #[test]
    fn convergence_2d_dispersion_is_first_order() {
        // cos φ carries a cubic -sin(k_xΔx) sin(k_yΔx) sin θ term, so the
        // relative dispersion error falls off linearly.
        let st = convergence_study(&ScalePoint::two_d(0.1, 0.07, 0.05), 3).unwrap();
        let d = st.dispersion.order.unwrap();
        assert!((d - 1.0).abs() < 0.1, "{d}");
        let g = st.generator.order.unwrap();
        assert!((g - 2.0).abs() < 0.1, "{g}");
        // Oracle for the 2D spot value.
        let (sx, cx) = 0.1f64.sin_cos();
        let (sy, cy) = 0.07f64.sin_cos();
        let (st_, ct) = 0.05f64.sin_cos();
        let oracle = (cx * cy * ct - sx * sy * st_).acos();
        let p = ScalePoint::two_d(0.1, 0.07, 0.05);
        assert!((p.lattice_energy() - oracle).abs() < 1e-15);
        assert!((oracle - 0.134_429_4).abs() < 1e-7);
    }

    #[test]
    fn convergence_needs_points() {
        assert!(convergence_study(&ScalePoint::one_d(0.1, 0.05), 1).is_err());
    }

    #[test]
    fn fit_order_recovers_power_law() {
        let s = [1.0, 0.5, 0.25, 0.125];
        let e: Vec<f64> = s.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((fit_order(&s, &e).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fock_first_order_residual_is_second_order() {
        for (spec, ell) in [
            (LatticeSpec::one_d(64, 1.0, 1.0, 0.05).unwrap(), [1, 0]),
            (LatticeSpec::two_d(64, 1.0, 1.0, 0.05).unwrap(), [1, 1]),
        ] {
            let st = first_order_fock_study(&spec, ell, 3).unwrap();
            let p = st.fit.order.unwrap();
            assert!((p - 2.0).abs() < 0.1, "{p} {:?}", st.residuals);
        }
    }

    #[test]
    fn csv_schemas() {
        let s = LatticeSpec::two_d(2, 1.0, 1.0, 0.1).unwrap();
        let mut buf = Vec::new();
        write_dispersion_csv(s.dimension, &dispersion_table(&s, None).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k_x,k_y,phi_over_dt,E_rel,abs_err,rel_err\n"));
        assert_eq!(text.lines().count(), 5);
        let st = convergence_study(&ScalePoint::one_d(0.1, 0.05), 2).unwrap();
        let mut buf = Vec::new();
        write_convergence_csv(&st, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("scale,rel_err,deviation\n1,"));
    }

    proptest! {
        #[test]
        fn generator_is_hermitian_with_lattice_spectrum(
            kx in -1.5f64..1.5, ky in -1.5f64..1.5, theta in -1.0f64..1.0, two_d in any::<bool>()
        ) {
            let p = if two_d { ScalePoint::two_d(kx, ky, theta) } else { ScalePoint::one_d(kx, theta) };
            if let Ok(g) = generator_at(&p) {
                prop_assert!(g.hermiticity_defect < 1e-12);
                prop_assert!(generator_spectrum_defect(&g) < 1e-10);
                let tr = g.h_eff[[0, 0]] + g.h_eff[[1, 1]];
                prop_assert!(tr.norm() < 1e-12);
            }
        }

        #[test]
        fn lattice_energy_nonnegative_and_bounded_below(k in -3.0f64..3.0, theta in -1.5f64..1.5) {
            let p = ScalePoint::one_d(k, theta);
            let r = dispersion_at(&p, p.mode());
            prop_assert!(r.phi_over_dt >= 0.0);
            prop_assert!(r.e_rel + 1e-15 >= theta.abs());
        }
    }
}
