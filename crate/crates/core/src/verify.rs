//! Invariant suites reported as `{check, max_residual, tolerance, pass}`.

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dirac::{self, ScalePoint};
use crate::error::{QcaError, Result};
use crate::fock::{self, FockBasis};
use crate::lattice::{energy_labels, momentum_grid, LatticeSpec};
use crate::linalg::{self, C64};
use crate::multiparticle::{self, PhysicalBasisLabel};
use crate::qca::{self, CellLattice, LocalCoin, QcaStepper};
use crate::walk::{self, build_walk_unitary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(check: &str, max_residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            check: check.to_string(),
            max_residual,
            tolerance,
            // NaN residuals fail.
            pass: max_residual <= tolerance,
        }
    }
}

/// Deliberate corruptions of the automaton's local coin, used as negative
/// controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Unitary coin that turns `|00>` into `|11>`.
    PairCreation,
    /// Number-conserving coin with a shrunken one-particle block.
    Loss,
}

impl std::str::FromStr for Fault {
    type Err = QcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair-creation" => Ok(Fault::PairCreation),
            "loss" => Ok(Fault::Loss),
            other => Err(QcaError::InvalidInput(format!(
                "unknown fault '{other}' (expected pair-creation or loss)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub lattice_1d: LatticeSpec,
    pub lattice_2d: LatticeSpec,
    pub n_max_1d: usize,
    pub n_max_2d: usize,
    pub random_states: usize,
    pub qca_sites: usize,
    pub qca_types: usize,
    pub car_modes: usize,
    pub seed: u64,
    pub tol: f64,
    pub fault: Option<Fault>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            lattice_1d: LatticeSpec::one_d(4, 1.0, 1.0, 0.3).expect("valid default"),
            lattice_2d: LatticeSpec::two_d(2, 1.0, 1.0, 0.3).expect("valid default"),
            n_max_1d: 3,
            n_max_2d: 2,
            random_states: 100,
            qca_sites: 3,
            qca_types: 2,
            car_modes: 6,
            seed: 0,
            tol: 1e-12,
            fault: None,
        }
    }
}

impl VerifyConfig {
    pub fn local_coin(&self) -> LocalCoin {
        let theta = self.lattice_1d.theta;
        match self.fault {
            None => LocalCoin::build(theta),
            Some(Fault::PairCreation) => LocalCoin::pair_creating(theta, 0.3),
            Some(Fault::Loss) => LocalCoin::lossy(theta, 0.9),
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn lattices(&self) -> [LatticeSpec; 2] {
        [self.lattice_1d, self.lattice_2d]
    }

    fn n_max(&self, spec: &LatticeSpec) -> usize {
        match spec.dimension {
            crate::lattice::Dimension::One => self.n_max_1d,
            crate::lattice::Dimension::Two => self.n_max_2d,
        }
    }
}

pub const CHECK_NAMES: &[&str] = &[
    "unitarity",
    "block",
    "eigenphase",
    "subspace",
    "multiparticle-eigenphase",
    "car",
    "momentum-ops",
    "intertwining",
    "isomorphism",
    "locality",
    "coin-number",
    "dirac-rest",
];

/// Walk unitaries of both lattices and the automaton's local coin.
pub fn unitarity_residual(cfg: &VerifyConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for spec in cfg.lattices() {
        worst = worst.max(build_walk_unitary(&spec)?.unitarity_defect());
    }
    Ok(worst.max(cfg.local_coin().defects(cfg.lattice_1d.theta).unitarity))
}

/// Projected blocks against the closed forms, and `Σ r_i² = 1`.
pub fn block_residual(spec: &LatticeSpec) -> Result<f64> {
    let mut worst = walk::verify_block_consistency(spec)?.max_deviation();
    for mode in momentum_grid(spec) {
        worst = worst.max(walk::momentum_block(spec, &mode)?.coefficient_norm_defect());
    }
    Ok(worst)
}

/// `cos φ` from the closed form against the eigenvalues of the block
/// projected out of the dense walk, plus exact eigenstate residuals.
pub fn eigenphase_law_residual(spec: &LatticeSpec) -> Result<f64> {
    let walk = build_walk_unitary(spec)?;
    let mut worst: f64 = 0.0;
    for mode in momentum_grid(spec) {
        let block = walk::momentum_block(spec, &mode)?;
        let (projected, _) = walk::project_block(&walk, &mode);
        let cos_closed = match spec.dimension {
            crate::lattice::Dimension::One => (mode.kx() * spec.dx).cos() * spec.theta.cos(),
            crate::lattice::Dimension::Two => block.r[0],
        };
        let [l1, l2] = linalg::eigenvalues_2x2(&projected);
        for l in [l1, l2] {
            worst = worst.max((l.norm() - 1.0).abs());
            worst = worst.max((l.arg().cos() - cos_closed).abs());
            worst = worst.max((block.phi.cos() - cos_closed).abs());
        }
        // Eigenvalues come in the pair e^{±iφ}.
        worst = worst.max((l1 * l2 - C64::new(1.0, 0.0)).norm());
    }
    for label in energy_labels(spec) {
        let psi = walk::walk_eigenstate(spec, &label)?;
        let phase = C64::from_polar(1.0, walk::walk_eigenphase(spec, &label)?);
        let r = walk.apply(&psi) - psi.mapv(|z| z * phase);
        worst = worst.max(linalg::vec_norm(&r));
    }
    Ok(worst)
}

/// `‖(I - P_phys) U_total ψ‖` over seeded random physical states.
pub fn subspace_residual(
    spec: &LatticeSpec,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let walk = build_walk_unitary(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let psi = multiparticle::random_physical_state(spec.walk_dim(), n_max, &mut rng)?;
        worst = worst.max(multiparticle::physical_subspace_projector_residual(&psi));
        let out = multiparticle::total_evolution_apply_with(&walk, &psi)?;
        worst = worst.max(multiparticle::physical_subspace_projector_residual(&out));
    }
    Ok(worst)
}

/// Every ordered energy-basis label with `n ≤ n_max` particles.
pub fn multiparticle_eigenphase_residual(spec: &LatticeSpec, n_max: usize) -> Result<f64> {
    let walk = build_walk_unitary(spec)?;
    let labels = energy_labels(spec);
    let mut worst: f64 = 0.0;
    for n in 0..=n_max {
        for combo in labels.iter().copied().combinations(n) {
            let label = PhysicalBasisLabel::new(combo)?;
            worst = worst.max(multiparticle::eigenphase_check_with(&walk, &label, n_max)?);
        }
    }
    Ok(worst)
}

pub fn car_suite_residual(spec: &LatticeSpec, modes: usize) -> Result<f64> {
    let labels: Vec<_> = energy_labels(spec).into_iter().take(modes).collect();
    Ok(fock::car_residual(&FockBasis::new(labels)?))
}

/// Row-wise block evolution of `(a†_{k,R}, a†_{k,L})` at every momentum with
/// well-defined coefficients, on the Fock space of the modes at `±k`.
pub fn momentum_ops_residual(spec: &LatticeSpec) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mode in fock::nondegenerate_momenta(spec)? {
        let basis = FockBasis::for_momenta(spec, &[mode, mode.negated(spec)])?;
        worst = worst.max(fock::momentum_evolution_check(&basis, spec, &mode)?.max_residual());
    }
    Ok(worst)
}

pub fn intertwining_residual(spec: &LatticeSpec, n_max: usize) -> Result<f64> {
    let walk = build_walk_unitary(spec)?;
    let basis = FockBasis::all(spec)?;
    let rep = fock::intertwining_check(&basis, &walk, n_max)?;
    Ok(rep.max_residual.max(rep.isometry_defect))
}

fn run_check(cfg: &VerifyConfig, name: &str) -> Result<CheckRecord> {
    let tol = cfg.tol;
    let [d1, d2] = cfg.lattices();
    let both =
        |f: &dyn Fn(&LatticeSpec) -> Result<f64>| -> Result<f64> { Ok(f(&d1)?.max(f(&d2)?)) };
    let residual = match name {
        "unitarity" => unitarity_residual(cfg)?,
        "block" => both(&block_residual)?,
        "eigenphase" => both(&eigenphase_law_residual)?,
        "subspace" => both(&|s| subspace_residual(s, cfg.n_max(s), cfg.random_states, cfg.seed))?,
        "multiparticle-eigenphase" => {
            both(&|s| multiparticle_eigenphase_residual(s, cfg.n_max(s).min(3)))?
        }
        "car" => car_suite_residual(&d1, cfg.car_modes)?,
        "momentum-ops" => both(&momentum_ops_residual)?,
        "intertwining" => {
            let small = LatticeSpec::one_d(2, d1.dx, d1.dt, d1.theta)?;
            intertwining_residual(&small, 3)?.max(intertwining_residual(&d2, cfg.n_max_2d)?)
        }
        "isomorphism" => {
            let cells = CellLattice::new(cfg.qca_sites, cfg.qca_types)?;
            qca::one_particle_sector_isomorphism(&cells, &cfg.local_coin(), d1.theta)?.max_residual
        }
        "locality" => {
            let cells = CellLattice::new(cfg.qca_sites, cfg.qca_types)?;
            let stepper = QcaStepper::new(cells, cfg.local_coin());
            let rep = qca::locality_check(&stepper, &mut cfg.rng())?;
            let excess = |r: usize| r.saturating_sub(1) as f64;
            rep.coin_cross_site_coupling
                .max(excess(rep.shift_hop))
                .max(excess(rep.light_cone_one_step))
        }
        "coin-number" => {
            let coin = cfg.local_coin();
            let d = coin.defects(d1.theta);
            let cells = CellLattice::new(cfg.qca_sites, cfg.qca_types)?;
            let stepper = QcaStepper::new(cells, coin);
            let cons = qca::conservation_check(&stepper, 3, &mut cfg.rng())?;
            d.number_conservation
                .max(d.vacuum_fixed)
                .max(d.one_particle_block)
                .max(cons.number_commutator)
        }
        "dirac-rest" => {
            let mut worst: f64 = 0.0;
            for spec in [d1, d2] {
                let rest = spec.mode(0, 0);
                let g = dirac::generator_comparison(&spec, &rest)?;
                let e = ScalePoint::from_mode(&spec, &rest).lattice_energy();
                worst = worst
                    .max(g.deviation)
                    .max((e - spec.rest_energy().abs()).abs());
            }
            worst
        }
        other => {
            return Err(QcaError::InvalidInput(format!(
                "unknown check '{other}' (known: {})",
                CHECK_NAMES.join(", ")
            )))
        }
    };
    Ok(CheckRecord::new(name, residual, tol))
}

/// Runs every suite, or only the named one.
pub fn run_verification(cfg: &VerifyConfig, only: Option<&str>) -> Result<Vec<CheckRecord>> {
    let names: Vec<&str> = match only {
        Some(name) if CHECK_NAMES.contains(&name) => vec![name],
        Some(name) => {
            return Err(QcaError::InvalidInput(format!(
                "unknown check '{name}' (known: {})",
                CHECK_NAMES.join(", ")
            )))
        }
        None => CHECK_NAMES.to_vec(),
    };
    names.into_iter().map(|n| run_check(cfg, n)).collect()
}

pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            random_states: 3,
            n_max_1d: 2,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn default_suites_pass() {
        let records = run_verification(&quick(), None).unwrap();
        assert_eq!(records.len(), CHECK_NAMES.len());
        for r in &records {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn only_filter() {
        let records = run_verification(&quick(), Some("car")).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].check, "car");
        assert!(run_verification(&quick(), Some("nope")).is_err());
    }

    #[test]
    fn pair_creation_fault_is_caught() {
        let cfg = VerifyConfig {
            fault: Some(Fault::PairCreation),
            ..quick()
        };
        let rec = &run_verification(&cfg, Some("coin-number")).unwrap()[0];
        assert!(!rec.pass);
        assert!(!run_verification(&cfg, Some("isomorphism")).unwrap()[0].pass);
    }

    #[test]
    fn loss_fault_breaks_unitarity() {
        let cfg = VerifyConfig {
            fault: Some(Fault::Loss),
            ..quick()
        };
        assert!(!run_verification(&cfg, Some("unitarity")).unwrap()[0].pass);
    }

    #[test]
    fn nan_residual_fails() {
        assert!(!CheckRecord::new("x", f64::NAN, 1.0).pass);
    }

    #[test]
    fn record_json_keys() {
        let json = serde_json::to_value(CheckRecord::new("car", 0.0, 1e-12)).unwrap();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 4);
        for k in ["check", "max_residual", "tolerance", "pass"] {
            assert!(json.get(k).is_some());
        }
    }
}
