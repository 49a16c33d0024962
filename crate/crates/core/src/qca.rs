//! Occupation-number cellular automaton in 1D.
//!
//! Every (type, site, direction) triple is a two-level slot holding 0 or 1
//! particles. Slot `((type * N + site) * 2 + dir)` is bit `slot` of a basis
//! bitstring, with `dir = 0` for R and `1` for L. One step is the shift
//! (R contents to `x + 1`, L contents to `x - 1`) followed by the local coin
//! on every (type, site) pair.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::Serialize;

use crate::error::{QcaError, Result};
use crate::linalg::{self, C64, I, ONE, ZERO};
use crate::multiparticle::{self, MultiState};
use crate::walk1d::{coin_1d, walk_matrix_1d};

/// Largest state vector the automaton will allocate.
pub const MAX_QCA_DIM: u128 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellLattice {
    pub n_sites: usize,
    pub n_types: usize,
}

impl CellLattice {
    /// Any ring size `N ≥ 2` works here; the automaton never needs a momentum
    /// grid.
    pub fn new(n_sites: usize, n_types: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(QcaError::InvalidLattice(format!(
                "need at least 2 sites, got {n_sites}"
            )));
        }
        if n_types == 0 {
            return Err(QcaError::InvalidInput(
                "need at least one particle type".into(),
            ));
        }
        let slots = 2 * n_sites * n_types;
        let requested = if slots >= 127 {
            u128::MAX
        } else {
            1u128 << slots
        };
        if requested > MAX_QCA_DIM {
            return Err(QcaError::CapExceeded {
                requested,
                cap: MAX_QCA_DIM,
            });
        }
        Ok(CellLattice { n_sites, n_types })
    }

    pub fn num_slots(&self) -> usize {
        2 * self.n_sites * self.n_types
    }

    pub fn dim(&self) -> usize {
        1 << self.num_slots()
    }

    /// Dimension of one site's cell across all types, `2^{2 N_types}`.
    pub fn cell_dim(&self) -> usize {
        1 << (2 * self.n_types)
    }

    pub fn slot(&self, ty: usize, site: usize, dir: usize) -> usize {
        (ty * self.n_sites + site) * 2 + dir
    }

    /// Shortest periodic distance between two sites.
    pub fn site_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        d.min(self.n_sites - d)
    }

    pub fn vacuum(&self) -> Array1<C64> {
        let mut v = Array1::zeros(self.dim());
        v[0] = ONE;
        v
    }

    pub fn basis_state(&self, bits: usize) -> Array1<C64> {
        let mut v = Array1::zeros(self.dim());
        v[bits] = ONE;
        v
    }

    /// Particles of type `ty` in a bitstring.
    pub fn type_count(&self, bits: usize, ty: usize) -> u32 {
        let width = 2 * self.n_sites;
        let mask = ((1usize << width) - 1) << (ty * width);
        (bits & mask).count_ones()
    }
}

/// A 4×4 operator on one (type, site) pair in the basis `|n_R n_L>` indexed
/// by `n_R + 2 n_L`, i.e. `|00>, |10>, |01>, |11>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCoin {
    pub matrix: Array2<C64>,
}

/// Deviations of a local coin from the four required properties.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalCoinDefects {
    pub unitarity: f64,
    pub number_conservation: f64,
    pub vacuum_fixed: f64,
    pub one_particle_block: f64,
}

impl LocalCoinDefects {
    pub fn max(&self) -> f64 {
        self.unitarity
            .max(self.number_conservation)
            .max(self.vacuum_fixed)
            .max(self.one_particle_block)
    }
}

impl LocalCoin {
    pub fn build(theta: f64) -> Self {
        Self::with_double_phase(theta, 0.0)
    }

    /// The standard coin with `|11> -> e^{iδ}|11>`.
    pub fn with_double_phase(theta: f64, delta: f64) -> Self {
        let c = coin_1d(theta);
        let mut m = Array2::zeros((4, 4));
        m[[0, 0]] = ONE;
        for a in 0..2 {
            for b in 0..2 {
                m[[1 + a, 1 + b]] = c[[a, b]];
            }
        }
        m[[3, 3]] = C64::from_polar(1.0, delta);
        LocalCoin { matrix: m }
    }

    /// Unitary, but rotates `|00>` into `|11>`: creates and destroys pairs.
    pub fn pair_creating(theta: f64, pair_angle: f64) -> Self {
        let mut coin = Self::build(theta);
        let (s, c) = pair_angle.sin_cos();
        coin.matrix[[0, 0]] = C64::new(c, 0.0);
        coin.matrix[[0, 3]] = I * s;
        coin.matrix[[3, 0]] = I * s;
        coin.matrix[[3, 3]] = C64::new(c, 0.0);
        coin
    }

    /// Number conserving, but shrinks the one-particle block.
    pub fn lossy(theta: f64, damping: f64) -> Self {
        let mut coin = Self::build(theta);
        for a in 1..3 {
            for b in 1..3 {
                coin.matrix[[a, b]] *= damping;
            }
        }
        coin
    }

    pub fn defects(&self, theta: f64) -> LocalCoinDefects {
        let m = &self.matrix;
        let mut number: f64 = 0.0;
        for i in 0..4usize {
            for j in 0..4usize {
                if i.count_ones() != j.count_ones() {
                    number = number.max(m[[i, j]].norm());
                }
            }
        }
        let mut vacuum: f64 = (m[[0, 0]] - ONE).norm();
        for i in 1..4 {
            vacuum = vacuum.max(m[[i, 0]].norm()).max(m[[0, i]].norm());
        }
        let c = coin_1d(theta);
        let block = m.slice(ndarray::s![1..3, 1..3]).to_owned();
        LocalCoinDefects {
            unitarity: linalg::unitarity_defect(m),
            number_conservation: number,
            vacuum_fixed: vacuum,
            one_particle_block: linalg::max_abs_diff(&block, &c),
        }
    }
}

/// Image bitstring of every bitstring under the shift.
pub fn build_qca_shift(cells: &CellLattice) -> Vec<usize> {
    let slot_map = shift_slot_map(cells);
    (0..cells.dim())
        .map(|bits| {
            let mut out = 0;
            for (from, &to) in slot_map.iter().enumerate() {
                if bits >> from & 1 == 1 {
                    out |= 1 << to;
                }
            }
            out
        })
        .collect()
}

/// Destination slot of every slot under the shift.
pub fn shift_slot_map(cells: &CellLattice) -> Vec<usize> {
    let n = cells.n_sites;
    let mut map = vec![0; cells.num_slots()];
    for ty in 0..cells.n_types {
        for x in 0..n {
            map[cells.slot(ty, x, 0)] = cells.slot(ty, (x + 1) % n, 0);
            map[cells.slot(ty, x, 1)] = cells.slot(ty, (x + n - 1) % n, 1);
        }
    }
    map
}

/// One automaton step with a precomputed shift permutation.
#[derive(Debug, Clone)]
pub struct QcaStepper {
    pub cells: CellLattice,
    pub coin: LocalCoin,
    shift: Vec<usize>,
}

impl QcaStepper {
    pub fn new(cells: CellLattice, coin: LocalCoin) -> Self {
        QcaStepper {
            shift: build_qca_shift(&cells),
            cells,
            coin,
        }
    }

    pub fn apply_shift(&self, state: &Array1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(state.len());
        for (bits, z) in state.iter().enumerate() {
            out[self.shift[bits]] = *z;
        }
        out
    }

    /// Local coin on the (type, site) pair whose R slot is bit `2 * pair`.
    pub fn apply_coin_at(&self, state: &mut Array1<C64>, pair: usize) {
        let shift = 2 * pair;
        let mask = 0b11 << shift;
        let m = &self.coin.matrix;
        for base in 0..state.len() {
            if base & mask != 0 {
                continue;
            }
            let idx: [usize; 4] = std::array::from_fn(|k| base | k << shift);
            let old: [C64; 4] = std::array::from_fn(|k| state[idx[k]]);
            for a in 0..4 {
                state[idx[a]] = (0..4).map(|b| m[[a, b]] * old[b]).sum();
            }
        }
    }

    pub fn apply_coin(&self, state: &Array1<C64>) -> Array1<C64> {
        let mut out = state.clone();
        for pair in 0..self.cells.n_sites * self.cells.n_types {
            self.apply_coin_at(&mut out, pair);
        }
        out
    }

    /// Shift, then coin.
    pub fn step(&self, state: &Array1<C64>) -> Result<Array1<C64>> {
        if state.len() != self.cells.dim() {
            return Err(QcaError::StateDimension {
                expected: self.cells.dim(),
                found: state.len(),
            });
        }
        Ok(self.apply_coin(&self.apply_shift(state)))
    }
}

pub fn qca_step(cells: &CellLattice, coin: &LocalCoin, state: &Array1<C64>) -> Result<Array1<C64>> {
    QcaStepper::new(*cells, coin.clone()).step(state)
}

/// Bitstring of a configuration of `H_total` with one factor per type: factor
/// `t` at walk index `2x + dir` sets slot `(t, x, dir)`, the vacuum sets
/// nothing.
pub fn inject_configuration(cells: &CellLattice, digits: &[usize]) -> usize {
    let walk_dim = 2 * cells.n_sites;
    digits
        .iter()
        .enumerate()
        .filter(|(_, &d)| d < walk_dim)
        .fold(0, |acc, (ty, &d)| acc | 1 << (ty * walk_dim + d))
}

pub fn inject_state(cells: &CellLattice, state: &MultiState) -> Result<Array1<C64>> {
    if state.walk_dim != 2 * cells.n_sites || state.n_max != cells.n_types {
        return Err(QcaError::StateDimension {
            expected: (2 * cells.n_sites + 1).pow(cells.n_types as u32),
            found: state.len(),
        });
    }
    let mut out = Array1::zeros(cells.dim());
    for (idx, z) in state.amplitudes.iter().enumerate() {
        if *z != ZERO {
            out[inject_configuration(cells, &state.digits_of(idx))] = *z;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsomorphismReport {
    pub configurations_checked: usize,
    pub max_residual: f64,
}

/// Pulls one automaton step back through the injection of `H_total`
/// (one tensor factor per type) and compares it with `U_total` on every
/// configuration basis vector.
pub fn one_particle_sector_isomorphism(
    cells: &CellLattice,
    coin: &LocalCoin,
    theta: f64,
) -> Result<IsomorphismReport> {
    let walk = walk_matrix_1d(cells.n_sites, theta);
    let walk_dim = walk.nrows();
    let stepper = QcaStepper::new(*cells, coin.clone());
    let total = multiparticle::check_cap(walk_dim, cells.n_types)?;
    let mut worst: f64 = 0.0;
    for idx in 0..total {
        let mut basis = MultiState::zeros(walk_dim, cells.n_types)?;
        basis.amplitudes[idx] = ONE;
        let evolved = multiparticle::total_evolution_apply_matrix(&walk, &basis)?;
        let lhs = stepper.step(&inject_state(cells, &basis)?)?;
        let rhs = inject_state(cells, &evolved)?;
        worst = worst.max(linalg::vec_norm(&(lhs - rhs)));
    }
    Ok(IsomorphismReport {
        configurations_checked: total,
        max_residual: worst,
    })
}

/// `(site, type, <n_R>, <n_L>)` for every site and type.
pub fn occupations(cells: &CellLattice, state: &Array1<C64>) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    for site in 0..cells.n_sites {
        for ty in 0..cells.n_types {
            let r = cells.slot(ty, site, 0);
            let l = cells.slot(ty, site, 1);
            let (mut nr, mut nl) = (0.0, 0.0);
            for (bits, z) in state.iter().enumerate() {
                let p = z.norm_sqr();
                if bits >> r & 1 == 1 {
                    nr += p;
                }
                if bits >> l & 1 == 1 {
                    nl += p;
                }
            }
            out.push((site, ty, nr, nl));
        }
    }
    out
}

fn random_state<R: Rng>(dim: usize, rng: &mut R) -> Array1<C64> {
    let v = Array1::from_shape_fn(dim, |_| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let n = linalg::vec_norm(&v);
    v.mapv(|z| z / n)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConservationReport {
    /// `max |‖step ψ‖ - 1|` over the sampled states.
    pub norm_defect: f64,
    /// `max_t ‖step(N_t ψ) - N_t step(ψ)‖`.
    pub number_commutator: f64,
}

pub fn conservation_check<R: Rng>(
    stepper: &QcaStepper,
    samples: usize,
    rng: &mut R,
) -> Result<ConservationReport> {
    let cells = &stepper.cells;
    let mut report = ConservationReport {
        norm_defect: 0.0,
        number_commutator: 0.0,
    };
    for _ in 0..samples {
        let psi = random_state(cells.dim(), rng);
        let out = stepper.step(&psi)?;
        report.norm_defect = report.norm_defect.max((linalg::vec_norm(&out) - 1.0).abs());
        for ty in 0..cells.n_types {
            let count = |v: &Array1<C64>| {
                Array1::from_shape_fn(v.len(), |b| v[b] * cells.type_count(b, ty) as f64)
            };
            let lhs = stepper.step(&count(&psi))?;
            let rhs = count(&out);
            report.number_commutator = report.number_commutator.max(linalg::vec_norm(&(lhs - rhs)));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalityReport {
    /// Largest site displacement of any slot under the shift.
    pub shift_hop: usize,
    /// `max ‖[C_x, O_y] ψ‖` over sites `x ≠ y` and single-slot observables.
    pub coin_cross_site_coupling: f64,
    /// Spread of a single localized particle after one and two steps.
    pub light_cone_one_step: usize,
    pub light_cone_two_steps: usize,
}

fn support_radius(cells: &CellLattice, state: &Array1<C64>, origin: usize) -> usize {
    occupations(cells, state)
        .into_iter()
        .filter(|&(_, _, nr, nl)| nr + nl > 1e-24)
        .map(|(site, ..)| cells.site_distance(site, origin))
        .max()
        .unwrap_or(0)
}

pub fn locality_check<R: Rng>(stepper: &QcaStepper, rng: &mut R) -> Result<LocalityReport> {
    let cells = &stepper.cells;
    let slot_map = shift_slot_map(cells);
    let shift_hop = slot_map
        .iter()
        .enumerate()
        .map(|(from, &to)| cells.site_distance(from / 2 % cells.n_sites, to / 2 % cells.n_sites))
        .max()
        .unwrap_or(0);

    // Coin pieces on one site never act on another site's slots.
    let psi = random_state(cells.dim(), rng);
    let mut coupling: f64 = 0.0;
    for x in 0..cells.n_sites {
        let coin_x = |v: &Array1<C64>| {
            let mut out = v.clone();
            for ty in 0..cells.n_types {
                stepper.apply_coin_at(&mut out, ty * cells.n_sites + x);
            }
            out
        };
        for y in (0..cells.n_sites).filter(|&y| y != x) {
            for ty in 0..cells.n_types {
                for dir in 0..2 {
                    let slot = cells.slot(ty, y, dir);
                    let flip =
                        |v: &Array1<C64>| Array1::from_shape_fn(v.len(), |b| v[b ^ 1 << slot]);
                    let comm = coin_x(&flip(&psi)) - flip(&coin_x(&psi));
                    coupling = coupling.max(linalg::vec_norm(&comm));
                }
            }
        }
    }

    let mut one: usize = 0;
    let mut two: usize = 0;
    for ty in 0..cells.n_types {
        for x in 0..cells.n_sites {
            for dir in 0..2 {
                let start = cells.basis_state(1 << cells.slot(ty, x, dir));
                let s1 = stepper.step(&start)?;
                let s2 = stepper.step(&s1)?;
                one = one.max(support_radius(cells, &s1, x));
                two = two.max(support_radius(cells, &s2, x));
            }
        }
    }
    Ok(LocalityReport {
        shift_hop,
        coin_cross_site_coupling: coupling,
        light_cone_one_step: one,
        light_cone_two_steps: two,
    })
}
