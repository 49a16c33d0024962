//! Lattice geometry, momentum grids and the total order on energy-mode labels.
//!
//! All quantities use units with ħ = 1. Momentum indices are stored in their
//! canonical range `-N/2 + 1 ..= N/2`, so `k` always lies in `(-π/Δx, π/Δx]`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};

/// Reduced Planck constant in internal units.
pub const HBAR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dimension {
    One,
    Two,
}

impl Dimension {
    pub fn as_u8(self) -> u8 {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }
}

impl TryFrom<u8> for Dimension {
    type Error = QcaError;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            1 => Ok(Dimension::One),
            2 => Ok(Dimension::Two),
            d => Err(QcaError::InvalidLattice(format!(
                "dimension must be 1 or 2, got {d}"
            ))),
        }
    }
}

impl From<Dimension> for u8 {
    fn from(d: Dimension) -> u8 {
        d.as_u8()
    }
}

#[derive(Deserialize)]
struct RawLatticeSpec {
    dimension: Dimension,
    #[serde(rename = "N")]
    n: i64,
    dx: f64,
    dt: f64,
    theta: f64,
}

impl TryFrom<RawLatticeSpec> for LatticeSpec {
    type Error = QcaError;

    fn try_from(raw: RawLatticeSpec) -> Result<Self> {
        LatticeSpec::new(raw.dimension, raw.n, raw.dx, raw.dt, raw.theta)
    }
}

/// Physical parameters of a periodic square lattice walk.
///
/// Serialized as `{dimension, N, dx, dt, theta}`; deserialization validates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLatticeSpec")]
pub struct LatticeSpec {
    pub dimension: Dimension,
    #[serde(rename = "N")]
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub theta: f64,
}

impl LatticeSpec {
    pub fn new(dimension: Dimension, n: i64, dx: f64, dt: f64, theta: f64) -> Result<Self> {
        if n < 2 {
            return Err(QcaError::InvalidLattice(format!(
                "N must be at least 2, got {n}"
            )));
        }
        if n % 2 != 0 {
            return Err(QcaError::InvalidLattice(format!("N must be even, got {n}")));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(QcaError::InvalidLattice(format!(
                "dx must be positive, got {dx}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(QcaError::InvalidLattice(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !theta.is_finite() {
            return Err(QcaError::InvalidLattice("theta must be finite".into()));
        }
        Ok(LatticeSpec {
            dimension,
            n: n as usize,
            dx,
            dt,
            theta,
        })
    }

    pub fn one_d(n: i64, dx: f64, dt: f64, theta: f64) -> Result<Self> {
        Self::new(Dimension::One, n, dx, dt, theta)
    }

    pub fn two_d(n: i64, dx: f64, dt: f64, theta: f64) -> Result<Self> {
        Self::new(Dimension::Two, n, dx, dt, theta)
    }

    /// Speed of light `c = Δx / Δt`.
    pub fn c(&self) -> f64 {
        self.dx / self.dt
    }

    /// Rest energy `mc² = ħθ / Δt`.
    pub fn rest_energy(&self) -> f64 {
        HBAR * self.theta / self.dt
    }

    /// Rest mass `m = ħθ / (Δt c²)`.
    pub fn mass(&self) -> f64 {
        self.rest_energy() / (self.c() * self.c())
    }

    pub fn num_sites(&self) -> usize {
        match self.dimension {
            Dimension::One => self.n,
            Dimension::Two => self.n * self.n,
        }
    }

    /// Dimension of the single-particle walk space (two coin states per site).
    pub fn walk_dim(&self) -> usize {
        2 * self.num_sites()
    }

    pub fn require(&self, dimension: Dimension) -> Result<()> {
        if self.dimension != dimension {
            return Err(QcaError::DimensionMismatch {
                expected: dimension.as_u8(),
                found: self.dimension.as_u8(),
            });
        }
        Ok(())
    }

    /// Maps any integer momentum index onto `-N/2 + 1 ..= N/2`.
    pub fn canonical_ell(&self, ell: i64) -> i64 {
        let n = self.n as i64;
        let mut r = ell.rem_euclid(n);
        if r > n / 2 {
            r -= n;
        }
        r
    }

    pub fn wavenumber(&self, ell: i64) -> f64 {
        2.0 * PI * ell as f64 / (self.n as f64 * self.dx)
    }

    /// Builds a canonical grid mode from arbitrary integer indices.
    pub fn mode(&self, ell_x: i64, ell_y: i64) -> MomentumMode {
        let ex = self.canonical_ell(ell_x);
        let ey = match self.dimension {
            Dimension::One => 0,
            Dimension::Two => self.canonical_ell(ell_y),
        };
        MomentumMode {
            dimension: self.dimension,
            ell: [ex, ey],
            k: [self.wavenumber(ex), self.wavenumber(ey)],
        }
    }

    /// Fails when the mode was not produced for this lattice.
    pub fn check_on_grid(&self, mode: &MomentumMode) -> Result<()> {
        let canonical = self.mode(mode.ell[0], mode.ell[1]);
        let consistent = mode.dimension == self.dimension
            && canonical.ell == mode.ell
            && (canonical.k[0] - mode.k[0]).abs() < 1e-12
            && (canonical.k[1] - mode.k[1]).abs() < 1e-12;
        if consistent {
            Ok(())
        } else {
            Err(QcaError::OffGrid(mode.ell.to_vec()))
        }
    }
}

/// A lattice momentum `k = 2πℓ/(NΔx)` per axis. In 1D the y components are zero.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentumMode {
    pub dimension: Dimension,
    pub ell: [i64; 2],
    pub k: [f64; 2],
}

impl MomentumMode {
    pub fn kx(&self) -> f64 {
        self.k[0]
    }

    pub fn ky(&self) -> f64 {
        self.k[1]
    }

    /// Canonical representative of `-k`.
    pub fn negated(&self, spec: &LatticeSpec) -> MomentumMode {
        spec.mode(-self.ell[0], -self.ell[1])
    }

    pub fn is_zero(&self) -> bool {
        self.ell == [0, 0]
    }
}

impl PartialEq for MomentumMode {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension && self.ell == other.ell
    }
}

impl Eq for MomentumMode {}

impl std::hash::Hash for MomentumMode {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.dimension.hash(state);
        self.ell.hash(state);
    }
}

impl fmt::Display for MomentumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dimension {
            Dimension::One => write!(f, "k[{}]", self.ell[0]),
            Dimension::Two => write!(f, "k[{},{}]", self.ell[0], self.ell[1]),
        }
    }
}

/// All `N^dimension` grid modes, sorted by the canonical mode order.
pub fn momentum_grid(spec: &LatticeSpec) -> Vec<MomentumMode> {
    let n = spec.n as i64;
    let range = (-n / 2 + 1)..=(n / 2);
    match spec.dimension {
        Dimension::One => range.map(|l| spec.mode(l, 0)).collect(),
        Dimension::Two => range
            .clone()
            .flat_map(|ly| range.clone().map(move |lx| (lx, ly)))
            .map(|(lx, ly)| spec.mode(lx, ly))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Branch::Minus => '-',
            Branch::Plus => '+',
        }
    }
}

/// A single-particle energy eigenmode `(k, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnergyModeLabel {
    pub mode: MomentumMode,
    pub branch: Branch,
}

impl EnergyModeLabel {
    pub fn new(mode: MomentumMode, branch: Branch) -> Self {
        EnergyModeLabel { mode, branch }
    }

    pub fn plus(mode: MomentumMode) -> Self {
        Self::new(mode, Branch::Plus)
    }

    pub fn minus(mode: MomentumMode) -> Self {
        Self::new(mode, Branch::Minus)
    }
}

impl fmt::Display for EnergyModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.mode, self.branch.symbol())
    }
}

/// Sort key: `k_y`, then `k_x`, then `ε = -1` before `ε = +1`.
///
/// In 1D `k_y` is identically zero, which reduces to ascending `k` with the
/// minus branch listed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeKey(i64, i64, Branch);

pub fn mode_ordering_key(label: &EnergyModeLabel) -> ModeKey {
    ModeKey(label.mode.ell[1], label.mode.ell[0], label.branch)
}

impl PartialOrd for EnergyModeLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EnergyModeLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        mode_ordering_key(self).cmp(&mode_ordering_key(other))
    }
}

/// Every `(k, ε)` label on the grid in canonical order.
pub fn energy_labels(spec: &LatticeSpec) -> Vec<EnergyModeLabel> {
    let mut labels: Vec<_> = momentum_grid(spec)
        .into_iter()
        .flat_map(|m| [EnergyModeLabel::minus(m), EnergyModeLabel::plus(m)])
        .collect();
    labels.sort();
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn make_lattice_examples() {
        let s = LatticeSpec::one_d(8, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(s.c(), 1.0);
        let s = LatticeSpec::two_d(4, 0.5, 0.25, 0.05).unwrap();
        assert_eq!(s.c(), 2.0);
        assert!((s.rest_energy() - 0.2).abs() < 1e-15);
        assert!(LatticeSpec::one_d(7, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LatticeSpec::one_d(0, 1.0, 1.0, 0.1).is_err());
        assert!(LatticeSpec::one_d(-4, 1.0, 1.0, 0.1).is_err());
        assert!(LatticeSpec::one_d(4, 0.0, 1.0, 0.1).is_err());
        assert!(LatticeSpec::one_d(4, 1.0, -1.0, 0.1).is_err());
        assert!(LatticeSpec::one_d(4, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn json_round_trip_uses_documented_keys() {
        let s = LatticeSpec::two_d(4, 0.5, 0.25, 0.05).unwrap();
        let json = serde_json::to_value(s).unwrap();
        assert_eq!(json["dimension"], 2);
        assert_eq!(json["N"], 4);
        let back: LatticeSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);

        let odd = r#"{"dimension":1,"N":7,"dx":1.0,"dt":1.0,"theta":0.1}"#;
        assert!(serde_json::from_str::<LatticeSpec>(odd).is_err());
        let bad_dim = r#"{"dimension":3,"N":4,"dx":1.0,"dt":1.0,"theta":0.1}"#;
        assert!(serde_json::from_str::<LatticeSpec>(bad_dim).is_err());
    }

    #[test]
    fn grid_values_1d() {
        let s = LatticeSpec::one_d(4, 1.0, 1.0, 0.0).unwrap();
        let ks: Vec<f64> = momentum_grid(&s).iter().map(|m| m.kx()).collect();
        let expected = [-PI / 2.0, 0.0, PI / 2.0, PI];
        for (k, e) in ks.iter().zip(expected) {
            assert!((k - e).abs() < 1e-15);
        }
        let s = LatticeSpec::one_d(2, 1.0, 1.0, 0.0).unwrap();
        let ks: Vec<f64> = momentum_grid(&s).iter().map(|m| m.kx()).collect();
        assert_eq!(ks, vec![0.0, PI]);
    }

    #[test]
    fn grid_2d_n2() {
        let s = LatticeSpec::two_d(2, 1.0, 1.0, 0.0).unwrap();
        let g = momentum_grid(&s);
        assert_eq!(g.len(), 4);
        for m in g {
            for k in m.k {
                assert!(k == 0.0 || k == PI);
            }
        }
    }

    #[test]
    fn ordering_examples() {
        let s1 = LatticeSpec::one_d(4, 1.0, 1.0, 0.1).unwrap();
        let k0 = s1.mode(0, 0);
        assert!(EnergyModeLabel::minus(k0) < EnergyModeLabel::plus(k0));
        let km = s1.mode(-1, 0);
        assert!(EnergyModeLabel::plus(km) < EnergyModeLabel::minus(k0));

        let s2 = LatticeSpec::two_d(2, 1.0, 1.0, 0.1).unwrap();
        let a = EnergyModeLabel::plus(s2.mode(1, 0)); // kx = π, ky = 0
        let b = EnergyModeLabel::minus(s2.mode(0, 1)); // kx = 0, ky = π
        assert!(a < b);
    }

    #[test]
    fn off_grid_mode_rejected() {
        let s = LatticeSpec::one_d(4, 1.0, 1.0, 0.1).unwrap();
        let mut m = s.mode(1, 0);
        m.k[0] += 0.01;
        assert!(s.check_on_grid(&m).is_err());
        let other = LatticeSpec::one_d(8, 1.0, 1.0, 0.1).unwrap();
        assert!(s.check_on_grid(&other.mode(1, 0)).is_err());
        assert!(s.check_on_grid(&s.mode(1, 0)).is_ok());
    }

    proptest! {
        #[test]
        fn grid_is_complete_and_closed_under_negation(half in 1i64..12, two_d in any::<bool>()) {
            let dim = if two_d { Dimension::Two } else { Dimension::One };
            let s = LatticeSpec::new(dim, 2 * half, 0.7, 1.3, 0.2).unwrap();
            let g = momentum_grid(&s);
            prop_assert_eq!(g.len(), s.num_sites());
            let set: HashSet<_> = g.iter().copied().collect();
            prop_assert_eq!(set.len(), g.len());
            for m in &g {
                prop_assert!(set.contains(&m.negated(&s)));
                for k in m.k {
                    prop_assert!(k > -PI / s.dx && k <= PI / s.dx + 1e-12);
                }
            }
        }

        #[test]
        fn ordering_is_strict_total(half in 1i64..5) {
            let s = LatticeSpec::two_d(2 * half, 1.0, 1.0, 0.1).unwrap();
            let labels = energy_labels(&s);
            for a in &labels {
                for b in &labels {
                    let lt = a < b;
                    let gt = a > b;
                    if a == b {
                        prop_assert!(!lt && !gt);
                    } else {
                        prop_assert!(lt ^ gt);
                    }
                }
            }
        }
    }
}
