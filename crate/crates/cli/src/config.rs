//! Experiment configuration: one JSON document, with command-line flags
//! taking precedence.

use std::path::Path;

use anyhow::Context;
use qca_core::verify::{Fault, VerifyConfig};
use qca_core::{Dimension, LatticeSpec, Result as CoreResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: Option<LatticeDoc>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub dispersion: DispersionOptions,
    pub verify: VerifyOptions,
    pub evolve: EvolveOptions,
    pub qca: QcaOptions,
}

/// Lattice fields as written in the config; validated only after flags are
/// merged in.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDoc {
    pub dimension: Option<u8>,
    #[serde(rename = "N")]
    pub n: Option<i64>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub theta: Option<f64>,
}

impl LatticeDoc {
    pub fn merged(&self, over: &LatticeDoc) -> LatticeDoc {
        LatticeDoc {
            dimension: over.dimension.or(self.dimension),
            n: over.n.or(self.n),
            dx: over.dx.or(self.dx),
            dt: over.dt.or(self.dt),
            theta: over.theta.or(self.theta),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.dimension.is_none()
            && self.n.is_none()
            && self.dx.is_none()
            && self.dt.is_none()
            && self.theta.is_none()
    }

    /// Missing fields default to a 1D, N = 8, Δx = Δt = 1, θ = 0.05 lattice.
    pub fn build(&self) -> CoreResult<LatticeSpec> {
        let dimension = Dimension::try_from(self.dimension.unwrap_or(1))?;
        LatticeSpec::new(
            dimension,
            self.n.unwrap_or(8),
            self.dx.unwrap_or(1.0),
            self.dt.unwrap_or(1.0),
            self.theta.unwrap_or(0.05),
        )
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionOptions {
    pub halvings: usize,
    /// Base `(k_x Δx, k_y Δx)` of the convergence study; defaults to
    /// `(0.1, 0)` in 1D and `(0.1, 0.07)` in 2D.
    pub k_dx: Option<[f64; 2]>,
    /// Base `θ`; defaults to the lattice's coin angle.
    pub theta: Option<f64>,
    /// Restrict the dispersion table to these `(ℓ_x, ℓ_y)`.
    pub modes: Option<Vec<[i64; 2]>>,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        DispersionOptions {
            halvings: 3,
            k_dx: None,
            theta: None,
            modes: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub n_max_1d: Option<usize>,
    pub n_max_2d: Option<usize>,
    pub random_states: Option<usize>,
    pub qca_sites: Option<usize>,
    pub qca_types: Option<usize>,
    pub car_modes: Option<usize>,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolveSystem {
    #[default]
    Qca,
    Walk,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WalkParticle {
    pub x: usize,
    #[serde(default)]
    pub y: usize,
    pub coin: CoinDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum CoinDoc {
    R,
    L,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveOptions {
    pub steps: usize,
    pub system: EvolveSystem,
    /// Tensor factors for the walk system; defaults to the particle count.
    pub n_max: Option<usize>,
    /// Initial localized particles for the walk system (antisymmetrized).
    pub particles: Vec<WalkParticle>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            steps: 5,
            system: EvolveSystem::Qca,
            n_max: None,
            particles: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SlotDoc {
    #[serde(rename = "type")]
    pub ty: usize,
    pub site: usize,
    pub dir: CoinDoc,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcaOptions {
    /// Ring size; defaults to the lattice's N. Odd sizes are allowed here.
    pub sites: Option<usize>,
    pub types: usize,
    /// Phase on the doubly occupied local state.
    pub delta: f64,
    /// Initially occupied slots; `None` uses one type-0 particle at site 0 moving right.
    pub initial: Option<Vec<SlotDoc>>,
}

impl Default for QcaOptions {
    fn default() -> Self {
        QcaOptions {
            sites: None,
            types: 1,
            delta: 0.0,
            initial: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn verify_config(
        &self,
        lattice_override: &LatticeDoc,
        seed: u64,
        tol: f64,
    ) -> CoreResult<VerifyConfig> {
        let mut cfg = VerifyConfig {
            seed,
            tol,
            ..VerifyConfig::default()
        };
        let doc = self
            .lattice
            .clone()
            .unwrap_or_default()
            .merged(lattice_override);
        if !doc.is_empty() {
            let spec = doc.build()?;
            match spec.dimension {
                Dimension::One => cfg.lattice_1d = spec,
                Dimension::Two => cfg.lattice_2d = spec,
            }
        }
        let v = &self.verify;
        cfg.n_max_1d = v.n_max_1d.unwrap_or(cfg.n_max_1d);
        cfg.n_max_2d = v.n_max_2d.unwrap_or(cfg.n_max_2d);
        cfg.random_states = v.random_states.unwrap_or(cfg.random_states);
        cfg.qca_sites = v.qca_sites.unwrap_or(cfg.qca_sites);
        cfg.qca_types = v.qca_types.unwrap_or(cfg.qca_types);
        cfg.car_modes = v.car_modes.unwrap_or(cfg.car_modes);
        cfg.fault = v.fault;
        Ok(cfg)
    }
}
