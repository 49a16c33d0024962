//! Distinguishable-particle tensor space with vacuum-extended factors,
//! `H_total = (H_walk ⊕ span|ω>)^{⊗ N_max}`, and its antisymmetric physical
//! subspace.
//!
//! Amplitudes are stored row-major with factor 0 most significant. Within a
//! factor the walk basis keeps the indices of [`crate::walk`] and the vacuum
//! `|ω>` is the last index.

use std::io::{BufRead, Write};

use itertools::Itertools;
use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};
use crate::lattice::{EnergyModeLabel, LatticeSpec};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::walk::{self, WalkUnitary};

/// Largest dense amplitude vector this module will allocate.
pub const MAX_AMPLITUDES: u128 = 1 << 21;

/// Permutation sums are explicit; beyond this the factorial cost is refused.
pub const MAX_ANTISYMMETRIZED: usize = 6;

/// Dense amplitude vector over `(walk_dim + 1)^{n_max}` configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiState {
    pub walk_dim: usize,
    pub n_max: usize,
    pub amplitudes: Array1<C64>,
}

/// Number of amplitudes for the given configuration, or an error above the cap.
pub fn check_cap(walk_dim: usize, n_max: usize) -> Result<usize> {
    let requested = (walk_dim as u128 + 1)
        .checked_pow(n_max as u32)
        .unwrap_or(u128::MAX);
    if requested > MAX_AMPLITUDES {
        return Err(QcaError::CapExceeded {
            requested,
            cap: MAX_AMPLITUDES,
        });
    }
    Ok(requested as usize)
}

impl MultiState {
    pub fn zeros(walk_dim: usize, n_max: usize) -> Result<Self> {
        let len = check_cap(walk_dim, n_max)?;
        Ok(MultiState {
            walk_dim,
            n_max,
            amplitudes: Array1::zeros(len),
        })
    }

    /// `|Ω> = |ω>^{⊗ n_max}`.
    pub fn vacuum(walk_dim: usize, n_max: usize) -> Result<Self> {
        let mut s = Self::zeros(walk_dim, n_max)?;
        let idx = s.index_of(&vec![walk_dim; n_max]);
        s.amplitudes[idx] = ONE;
        Ok(s)
    }

    /// `ψ_1 ⊗ … ⊗ ψ_n ⊗ |ω>^{⊗ n_max - n}` for walk-space vectors `ψ_j`.
    pub fn product(walk_dim: usize, n_max: usize, particles: &[Array1<C64>]) -> Result<Self> {
        if particles.len() > n_max {
            return Err(QcaError::TooManyParticles {
                n: particles.len(),
                n_max,
            });
        }
        for p in particles {
            if p.len() != walk_dim {
                return Err(QcaError::StateDimension {
                    expected: walk_dim,
                    found: p.len(),
                });
            }
        }
        let factors: Vec<Array1<C64>> = (0..n_max)
            .map(|j| match particles.get(j) {
                Some(p) => extend_with_vacuum(p, ZERO),
                None => vacuum_factor(walk_dim),
            })
            .collect();
        Self::from_factors(&factors)
    }

    /// Tensor product of full `(walk_dim + 1)`-dimensional factor vectors.
    pub fn from_factors(factors: &[Array1<C64>]) -> Result<Self> {
        let f = factors.first().map(|v| v.len()).unwrap_or(1);
        let walk_dim = f - 1;
        check_cap(walk_dim, factors.len())?;
        let mut amps = Array1::from_elem(1, ONE);
        for v in factors {
            if v.len() != f {
                return Err(QcaError::StateDimension {
                    expected: f,
                    found: v.len(),
                });
            }
            amps = linalg::kron_vec(&amps, v);
        }
        Ok(MultiState {
            walk_dim,
            n_max: factors.len(),
            amplitudes: amps,
        })
    }

    pub fn factor_dim(&self) -> usize {
        self.walk_dim + 1
    }

    pub fn vacuum_index(&self) -> usize {
        self.walk_dim
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        linalg::vec_norm(&self.amplitudes)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.mapv_inplace(|z| z / n);
        }
        self
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        let f = self.factor_dim();
        digits.iter().fold(0, |acc, &d| acc * f + d)
    }

    pub fn digits_of(&self, mut idx: usize) -> Vec<usize> {
        let f = self.factor_dim();
        let mut digits = vec![0; self.n_max];
        for slot in digits.iter_mut().rev() {
            *slot = idx % f;
            idx /= f;
        }
        digits
    }

    pub fn inner(&self, other: &MultiState) -> C64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn distance(&self, other: &MultiState) -> f64 {
        linalg::vec_norm(&(&self.amplitudes - &other.amplitudes))
    }

    fn same_shape(&self, other: &MultiState) -> Result<()> {
        if self.walk_dim != other.walk_dim || self.n_max != other.n_max {
            return Err(QcaError::StateDimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, c: C64) -> MultiState {
        MultiState {
            amplitudes: self.amplitudes.mapv(|z| z * c),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &MultiState) -> Result<MultiState> {
        self.same_shape(other)?;
        Ok(MultiState {
            amplitudes: &self.amplitudes + &other.amplitudes,
            ..self.clone()
        })
    }

    /// Applies a `(walk_dim + 1)`-square operator to tensor factor `j`.
    pub fn apply_to_factor(&self, j: usize, op: &Array2<C64>) -> MultiState {
        let f = self.factor_dim();
        assert_eq!(op.dim(), (f, f), "factor operator shape");
        let right = f.pow((self.n_max - 1 - j) as u32);
        let left = self.len() / (f * right);
        let mut out = Array1::zeros(self.len());
        for l in 0..left {
            for r in 0..right {
                for a in 0..f {
                    let mut acc = ZERO;
                    for b in 0..f {
                        let w = op[[a, b]];
                        if w != ZERO {
                            acc += w * self.amplitudes[(l * f + b) * right + r];
                        }
                    }
                    out[(l * f + a) * right + r] = acc;
                }
            }
        }
        MultiState {
            amplitudes: out,
            ..self.clone()
        }
    }

    /// Reorders tensor factors: factor `j` of the result holds factor `perm[j]`.
    pub fn permute_factors(&self, perm: &[usize]) -> MultiState {
        assert_eq!(perm.len(), self.n_max);
        let mut out = Array1::zeros(self.len());
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let digits = self.digits_of(idx);
            let mut new_digits = vec![0; self.n_max];
            for (j, &p) in perm.iter().enumerate() {
                new_digits[j] = digits[p];
            }
            out[self.index_of(&new_digits)] = amp;
        }
        MultiState {
            amplitudes: out,
            ..self.clone()
        }
    }

    /// Number of leading non-vacuum factors when the configuration has the
    /// form `(walk, …, walk, ω, …, ω)`; `None` otherwise.
    pub fn leading_sector(&self, idx: usize) -> Option<usize> {
        let digits = self.digits_of(idx);
        let vac = self.vacuum_index();
        let n = digits.iter().take_while(|&&d| d != vac).count();
        digits[n..].iter().all(|&d| d == vac).then_some(n)
    }

    /// Keeps only the amplitudes of configurations in sector `n`.
    pub fn restrict_to_sector(&self, n: usize) -> MultiState {
        let mut out = self.clone();
        for (idx, z) in out.amplitudes.iter_mut().enumerate() {
            if self.leading_sector(idx) != Some(n) {
                *z = ZERO;
            }
        }
        out
    }

    /// Expectation weight of particle `j` being absent.
    pub fn vacuum_projector_apply(&self, j: usize) -> MultiState {
        let f = self.factor_dim();
        let mut p = Array2::zeros((f, f));
        p[[self.vacuum_index(), self.vacuum_index()]] = ONE;
        self.apply_to_factor(j, &p)
    }

    /// Writes the textual dump: a JSON header line, then `index real imag`
    /// for each nonzero amplitude.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let nonzero = self.amplitudes.iter().filter(|z| **z != ZERO).count();
        let header = DumpHeader {
            format: DUMP_FORMAT.to_string(),
            walk_dim: self.walk_dim,
            n_max: self.n_max,
            factor_dim: self.factor_dim(),
            vacuum_index: self.vacuum_index(),
            entries: nonzero,
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        for (idx, z) in self.amplitudes.iter().enumerate() {
            if *z != ZERO {
                writeln!(w, "{} {} {}", idx, z.re, z.im)?;
            }
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| QcaError::InvalidInput("empty state dump".into()))??;
        let header: DumpHeader = serde_json::from_str(&header_line)?;
        if header.format != DUMP_FORMAT || header.factor_dim != header.walk_dim + 1 {
            return Err(QcaError::InvalidInput(
                "unrecognized state dump header".into(),
            ));
        }
        let mut state = MultiState::zeros(header.walk_dim, header.n_max)?;
        let mut seen = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || QcaError::InvalidInput(format!("malformed dump line: {line}"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let idx: usize = parts[0].parse().map_err(|_| bad())?;
            let re: f64 = parts[1].parse().map_err(|_| bad())?;
            let im: f64 = parts[2].parse().map_err(|_| bad())?;
            if idx >= state.len() {
                return Err(bad());
            }
            state.amplitudes[idx] = C64::new(re, im);
            seen += 1;
        }
        if seen != header.entries {
            return Err(QcaError::InvalidInput(format!(
                "header promises {} entries, found {seen}",
                header.entries
            )));
        }
        Ok(state)
    }
}

const DUMP_FORMAT: &str = "qca-multistate-v1";

#[derive(Debug, Serialize, Deserialize)]
struct DumpHeader {
    format: String,
    walk_dim: usize,
    n_max: usize,
    factor_dim: usize,
    vacuum_index: usize,
    entries: usize,
}

fn extend_with_vacuum(walk_vec: &Array1<C64>, vac: C64) -> Array1<C64> {
    let mut v = Array1::zeros(walk_vec.len() + 1);
    v.slice_mut(ndarray::s![..walk_vec.len()]).assign(walk_vec);
    v[walk_vec.len()] = vac;
    v
}

fn vacuum_factor(walk_dim: usize) -> Array1<C64> {
    let mut v = Array1::zeros(walk_dim + 1);
    v[walk_dim] = ONE;
    v
}

/// All permutations of `0..n` with their signs `(-1)^{parity}`.
pub fn signed_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    (0..n)
        .permutations(n)
        .map(|p| {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

fn extend_perm(perm: &[usize], n_max: usize) -> Vec<usize> {
    perm.iter().copied().chain(perm.len()..n_max).collect()
}

/// `U_total = (U ⊕ |ω><ω|)^{⊗ N_max}` applied factor by factor.
pub fn total_evolution_apply_with(walk: &WalkUnitary, state: &MultiState) -> Result<MultiState> {
    total_evolution_apply_matrix(&walk.matrix, state)
}

/// Same as [`total_evolution_apply_with`] for a bare walk matrix.
pub fn total_evolution_apply_matrix(walk: &Array2<C64>, state: &MultiState) -> Result<MultiState> {
    if state.walk_dim != walk.nrows() {
        return Err(QcaError::StateDimension {
            expected: walk.nrows(),
            found: state.walk_dim,
        });
    }
    let d = walk.nrows();
    let mut u = Array2::zeros((d + 1, d + 1));
    u.slice_mut(ndarray::s![..d, ..d]).assign(walk);
    u[[d, d]] = ONE;
    let mut out = state.clone();
    for j in 0..state.n_max {
        out = out.apply_to_factor(j, &u);
    }
    Ok(out)
}

pub fn total_evolution_apply(
    spec: &LatticeSpec,
    n_max: usize,
    state: &MultiState,
) -> Result<MultiState> {
    if state.n_max != n_max || state.walk_dim != spec.walk_dim() {
        return Err(QcaError::StateDimension {
            expected: check_cap(spec.walk_dim(), n_max)?,
            found: state.len(),
        });
    }
    let walk = walk::build_walk_unitary(spec)?;
    total_evolution_apply_with(&walk, state)
}

/// Projects the first `n` factors onto their antisymmetric subspace.
///
/// The input must live entirely in sector `n` (factors `1..=n` occupied, the
/// rest vacuum).
pub fn antisymmetrize(state: &MultiState, n: usize) -> Result<MultiState> {
    if n > state.n_max {
        return Err(QcaError::TooManyParticles {
            n,
            n_max: state.n_max,
        });
    }
    if n > MAX_ANTISYMMETRIZED {
        return Err(QcaError::InvalidInput(format!(
            "antisymmetrizer limited to {MAX_ANTISYMMETRIZED} particles"
        )));
    }
    let outside = state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(idx, _)| state.leading_sector(*idx) != Some(n))
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if outside > 1e-12 * state.norm().max(1.0) {
        return Err(QcaError::SupportViolation(n));
    }
    Ok(antisymmetrize_unchecked(&state.restrict_to_sector(n), n))
}

fn antisymmetrize_unchecked(state: &MultiState, n: usize) -> MultiState {
    let perms = signed_permutations(n);
    let scale = 1.0 / perms.len() as f64;
    let mut acc = Array1::zeros(state.len());
    for (perm, sign) in perms {
        let permuted = state.permute_factors(&extend_perm(&perm, state.n_max));
        acc.scaled_add(C64::new(sign * scale, 0.0), &permuted.amplitudes);
    }
    MultiState {
        amplitudes: acc,
        ..state.clone()
    }
}

/// `(1/√n!) Σ_π (-1)^{p(π)} ψ_{π(1)} ⊗ … ⊗ ψ_{π(n)} ⊗ |ω>^{⊗ N_max - n}`.
pub fn antisymmetrized_product(
    walk_dim: usize,
    n_max: usize,
    particles: &[Array1<C64>],
) -> Result<MultiState> {
    let n = particles.len();
    if n > n_max {
        return Err(QcaError::TooManyParticles { n, n_max });
    }
    if n > MAX_ANTISYMMETRIZED {
        return Err(QcaError::InvalidInput(format!(
            "antisymmetrizer limited to {MAX_ANTISYMMETRIZED} particles"
        )));
    }
    let perms = signed_permutations(n);
    let norm = 1.0 / (perms.len() as f64).sqrt();
    let mut acc = MultiState::zeros(walk_dim, n_max)?;
    for (perm, sign) in perms {
        let ordered: Vec<Array1<C64>> = perm.iter().map(|&i| particles[i].clone()).collect();
        let term = MultiState::product(walk_dim, n_max, &ordered)?;
        acc.amplitudes
            .scaled_add(C64::new(sign * norm, 0.0), &term.amplitudes);
    }
    Ok(acc)
}

/// An ordered list of distinct energy-mode labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalBasisLabel {
    modes: Vec<EnergyModeLabel>,
}

impl PhysicalBasisLabel {
    pub fn new(modes: Vec<EnergyModeLabel>) -> Result<Self> {
        if modes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QcaError::UnorderedLabels);
        }
        Ok(PhysicalBasisLabel { modes })
    }

    pub fn vacuum() -> Self {
        PhysicalBasisLabel { modes: Vec::new() }
    }

    pub fn modes(&self) -> &[EnergyModeLabel] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Antisymmetrized product of walk eigenstates in the given label order.
/// Order is not checked; see [`physical_basis_state`] for the canonical form.
pub fn energy_product_state(
    spec: &LatticeSpec,
    labels: &[EnergyModeLabel],
    n_max: usize,
) -> Result<MultiState> {
    let particles = labels
        .iter()
        .map(|l| walk::walk_eigenstate(spec, l))
        .collect::<Result<Vec<_>>>()?;
    antisymmetrized_product(spec.walk_dim(), n_max, &particles)
}

pub fn physical_basis_state(
    spec: &LatticeSpec,
    label: &PhysicalBasisLabel,
    n_max: usize,
) -> Result<MultiState> {
    energy_product_state(spec, label.modes(), n_max)
}

/// Total eigenphase `Σ_j ε_j φ_{k_j}` of an energy-basis label.
pub fn total_eigenphase(spec: &LatticeSpec, labels: &[EnergyModeLabel]) -> Result<f64> {
    labels.iter().map(|l| walk::walk_eigenphase(spec, l)).sum()
}

/// `‖U_total ψ - e^{iΣ ε_j φ_{k_j}} ψ‖` for the energy-basis state `ψ`.
pub fn eigenphase_check(
    spec: &LatticeSpec,
    label: &PhysicalBasisLabel,
    n_max: usize,
) -> Result<f64> {
    let walk = walk::build_walk_unitary(spec)?;
    eigenphase_check_with(&walk, label, n_max)
}

pub fn eigenphase_check_with(
    walk: &WalkUnitary,
    label: &PhysicalBasisLabel,
    n_max: usize,
) -> Result<f64> {
    let spec = &walk.spec;
    let psi = physical_basis_state(spec, label, n_max)?;
    let evolved = total_evolution_apply_with(walk, &psi)?;
    let phase = C64::from_polar(1.0, total_eigenphase(spec, label.modes())?);
    Ok(evolved.distance(&psi.scaled(phase)))
}

/// Orthogonal projection onto `H_0 ⊕ A^(1) ⊕ A^(1,2) ⊕ …`.
pub fn physical_component(state: &MultiState) -> MultiState {
    let mut acc = MultiState {
        amplitudes: Array1::zeros(state.len()),
        ..state.clone()
    };
    for n in 0..=state.n_max.min(MAX_ANTISYMMETRIZED) {
        let part = antisymmetrize_unchecked(&state.restrict_to_sector(n), n);
        acc.amplitudes += &part.amplitudes;
    }
    acc
}

/// `‖(I - P_phys) ψ‖`.
pub fn physical_subspace_projector_residual(state: &MultiState) -> f64 {
    state.distance(&physical_component(state))
}

fn random_vector<R: Rng>(dim: usize, rng: &mut R) -> Array1<C64> {
    Array1::from_shape_fn(dim, |_| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// A random normalized state in the physical subspace: each sector gets a
/// random combination of antisymmetrized random product states.
pub fn random_physical_state<R: Rng>(
    walk_dim: usize,
    n_max: usize,
    rng: &mut R,
) -> Result<MultiState> {
    let mut acc = MultiState::vacuum(walk_dim, n_max)?
        .scaled(C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    for n in 1..=n_max.min(MAX_ANTISYMMETRIZED) {
        for _ in 0..2 {
            let particles: Vec<_> = (0..n).map(|_| random_vector(walk_dim, rng)).collect();
            let term = antisymmetrized_product(walk_dim, n_max, &particles)?;
            let weight = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            acc.amplitudes.scaled_add(weight, &term.amplitudes);
        }
    }
    Ok(acc.normalized())
}

/// A random normalized vector on the walk space.
pub fn random_walk_state<R: Rng>(walk_dim: usize, rng: &mut R) -> Array1<C64> {
    let v = random_vector(walk_dim, rng);
    let n = linalg::vec_norm(&v);
    v.mapv(|z| z / n)
}

/// Per-factor probabilities of occupying each walk basis state; row `j` is
/// particle type `j`.
pub fn factor_occupations(state: &MultiState) -> Array2<f64> {
    let mut occ = Array2::zeros((state.n_max, state.walk_dim));
    for (idx, z) in state.amplitudes.iter().enumerate() {
        let p = z.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (j, d) in state.digits_of(idx).into_iter().enumerate() {
            if d < state.walk_dim {
                occ[[j, d]] += p;
            }
        }
    }
    occ
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{energy_labels, Branch};
    use crate::walk::build_walk_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec4() -> LatticeSpec {
        LatticeSpec::one_d(4, 1.0, 1.0, 0.3).unwrap()
    }

    #[test]
    fn vacuum_is_invariant() {
        let s = spec4();
        let vac = MultiState::vacuum(s.walk_dim(), 2).unwrap();
        let out = total_evolution_apply(&s, 2, &vac).unwrap();
        assert_eq!(out, vac);
    }

    #[test]
    fn single_particle_factorizes() {
        let s = spec4();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_walk_state(s.walk_dim(), &mut rng);
        let walk = build_walk_unitary(&s).unwrap();
        let state = MultiState::product(s.walk_dim(), 3, std::slice::from_ref(&psi)).unwrap();
        let out = total_evolution_apply_with(&walk, &state).unwrap();
        let expected = MultiState::product(s.walk_dim(), 3, &[walk.apply(&psi)]).unwrap();
        assert!(out.distance(&expected) < 1e-14);
    }

    #[test]
    fn evolution_preserves_norm() {
        let s = LatticeSpec::one_d(2, 1.0, 1.0, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let len = check_cap(s.walk_dim(), 2).unwrap();
        let amps = Array1::from_shape_fn(len, |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let state = MultiState {
            walk_dim: s.walk_dim(),
            n_max: 2,
            amplitudes: amps,
        }
        .normalized();
        let out = total_evolution_apply(&s, 2, &state).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = spec4();
        let other = LatticeSpec::one_d(2, 1.0, 1.0, 0.3).unwrap();
        let vac = MultiState::vacuum(other.walk_dim(), 2).unwrap();
        assert!(total_evolution_apply(&s, 2, &vac).is_err());
        let vac = MultiState::vacuum(s.walk_dim(), 3).unwrap();
        assert!(total_evolution_apply(&s, 2, &vac).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(check_cap(128, 4).is_err());
        assert!(MultiState::zeros(8, 3).is_ok());
    }

    #[test]
    fn two_particle_antisymmetrization() {
        let s = spec4();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_walk_state(s.walk_dim(), &mut rng);
        let chi = random_walk_state(s.walk_dim(), &mut rng);
        let prod = MultiState::product(s.walk_dim(), 3, &[psi.clone(), chi.clone()]).unwrap();
        let swapped = MultiState::product(s.walk_dim(), 3, &[chi.clone(), psi.clone()]).unwrap();
        let a = antisymmetrize(&prod, 2).unwrap();
        let expected = prod
            .add(&swapped.scaled(C64::new(-1.0, 0.0)))
            .unwrap()
            .scaled(C64::new(0.5, 0.0));
        assert!(a.distance(&expected) < 1e-14);
        // Idempotent.
        assert!(antisymmetrize(&a, 2).unwrap().distance(&a) < 1e-12);
        // Identical particles vanish.
        let same = MultiState::product(s.walk_dim(), 3, &[psi.clone(), psi]).unwrap();
        assert!(antisymmetrize(&same, 2).unwrap().norm() < 1e-14);
    }

    #[test]
    fn antisymmetrize_rejects_wrong_sector() {
        let s = spec4();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_walk_state(s.walk_dim(), &mut rng);
        let one = MultiState::product(s.walk_dim(), 3, &[psi]).unwrap();
        assert!(matches!(
            antisymmetrize(&one, 2),
            Err(QcaError::SupportViolation(2))
        ));
    }

    #[test]
    fn basis_state_small_cases() {
        let s = spec4();
        let vac = physical_basis_state(&s, &PhysicalBasisLabel::vacuum(), 3).unwrap();
        assert_eq!(vac, MultiState::vacuum(s.walk_dim(), 3).unwrap());

        let label = EnergyModeLabel::plus(s.mode(1, 0));
        let one =
            physical_basis_state(&s, &PhysicalBasisLabel::new(vec![label]).unwrap(), 3).unwrap();
        let psi = walk::walk_eigenstate(&s, &label).unwrap();
        let expected = MultiState::product(s.walk_dim(), 3, &[psi]).unwrap();
        assert!(one.distance(&expected) < 1e-15);
    }

    #[test]
    fn swapped_labels_flip_sign() {
        let s = LatticeSpec::one_d(2, 1.0, 1.0, 0.4).unwrap();
        let a = EnergyModeLabel::minus(s.mode(0, 0));
        let b = EnergyModeLabel::plus(s.mode(1, 0));
        let ordered = energy_product_state(&s, &[a, b], 2).unwrap();
        let swapped = energy_product_state(&s, &[b, a], 2).unwrap();
        assert!(ordered.add(&swapped).unwrap().norm() < 1e-14);
        assert!(PhysicalBasisLabel::new(vec![b, a]).is_err());
        assert!(PhysicalBasisLabel::new(vec![a, a]).is_err());

        // Explicit two-term oracle.
        let pa = walk::walk_eigenstate(&s, &a).unwrap();
        let pb = walk::walk_eigenstate(&s, &b).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t1 = MultiState::product(s.walk_dim(), 2, &[pa.clone(), pb.clone()]).unwrap();
        let t2 = MultiState::product(s.walk_dim(), 2, &[pb, pa]).unwrap();
        let oracle = t1
            .add(&t2.scaled(C64::new(-1.0, 0.0)))
            .unwrap()
            .scaled(C64::new(h, 0.0));
        assert!(ordered.distance(&oracle) < 1e-15);
    }

    #[test]
    fn eigenphase_examples() {
        let s = spec4();
        let walk = build_walk_unitary(&s).unwrap();
        assert_eq!(
            eigenphase_check_with(&walk, &PhysicalBasisLabel::vacuum(), 2).unwrap(),
            0.0
        );
        let k = s.mode(1, 0);
        let l1 = PhysicalBasisLabel::new(vec![EnergyModeLabel::minus(k)]).unwrap();
        assert!(eigenphase_check_with(&walk, &l1, 2).unwrap() < 1e-12);
        let k2 = s.mode(2, 0);
        let l2 =
            PhysicalBasisLabel::new(vec![EnergyModeLabel::plus(k), EnergyModeLabel::minus(k2)])
                .unwrap();
        assert!(eigenphase_check_with(&walk, &l2, 2).unwrap() < 1e-12);
    }

    #[test]
    fn product_state_residual_is_symmetric_part() {
        let s = spec4();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = random_walk_state(s.walk_dim(), &mut rng);
        let chi = random_walk_state(s.walk_dim(), &mut rng);
        let overlap = linalg::inner(&psi, &chi).norm_sqr();
        let prod = MultiState::product(s.walk_dim(), 2, &[psi, chi]).unwrap();
        let expected = ((1.0 + overlap) / 2.0).sqrt();
        assert!((physical_subspace_projector_residual(&prod) - expected).abs() < 1e-13);
    }

    #[test]
    fn type_gaps_are_unphysical() {
        // Particle in factor 2 with factor 1 empty is outside H_phys.
        let s = spec4();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_walk_state(s.walk_dim(), &mut rng);
        let mut factors = vec![vacuum_factor(s.walk_dim()); 2];
        factors[1] = extend_with_vacuum(&psi, ZERO);
        let st = MultiState::from_factors(&factors).unwrap();
        assert!((physical_subspace_projector_residual(&st) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn basis_states_are_physical_and_stay_physical() {
        let s = spec4();
        let walk = build_walk_unitary(&s).unwrap();
        let labels = energy_labels(&s);
        for pair in labels.iter().combinations(2) {
            let l = PhysicalBasisLabel::new(vec![*pair[0], *pair[1]]).unwrap();
            let st = physical_basis_state(&s, &l, 2).unwrap();
            assert!(physical_subspace_projector_residual(&st) < 1e-12);
            let ev = total_evolution_apply_with(&walk, &st).unwrap();
            assert!(physical_subspace_projector_residual(&ev) < 1e-12);
        }
    }

    #[test]
    fn orthonormal_energy_basis() {
        let s = LatticeSpec::one_d(2, 1.0, 1.0, 0.3).unwrap();
        let labels = energy_labels(&s);
        let mut states = Vec::new();
        for n in 0..=2 {
            for combo in labels.iter().copied().combinations(n) {
                let l = PhysicalBasisLabel::new(combo).unwrap();
                states.push(physical_basis_state(&s, &l, 2).unwrap());
            }
        }
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let g = a.inner(b);
                let expected = if i == j { ONE } else { ZERO };
                assert!((g - expected).norm() < 1e-12, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn conserves_type_number() {
        let s = spec4();
        let walk = build_walk_unitary(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let len = check_cap(s.walk_dim(), 2).unwrap();
        let st = MultiState {
            walk_dim: s.walk_dim(),
            n_max: 2,
            amplitudes: Array1::from_shape_fn(len, |_| C64::new(rng.gen_range(-1.0..1.0), 0.0)),
        };
        for j in 0..2 {
            let a = total_evolution_apply_with(&walk, &st.vacuum_projector_apply(j)).unwrap();
            let b = total_evolution_apply_with(&walk, &st)
                .unwrap()
                .vacuum_projector_apply(j);
            assert!(a.distance(&b) < 1e-12);
        }
    }

    #[test]
    fn sector_equivalence_across_types() {
        let s = LatticeSpec::one_d(2, 1.0, 1.0, 0.3).unwrap();
        let walk = build_walk_unitary(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let psi = random_walk_state(s.walk_dim(), &mut rng);
        let chi = random_walk_state(s.walk_dim(), &mut rng);
        let vac = vacuum_factor(s.walk_dim());
        let p = extend_with_vacuum(&psi, ZERO);
        let c = extend_with_vacuum(&chi, ZERO);
        let types_12 = MultiState::from_factors(&[p.clone(), c.clone(), vac.clone()]).unwrap();
        let types_13 = MultiState::from_factors(&[p, vac, c]).unwrap();
        let e12 = total_evolution_apply_with(&walk, &types_12).unwrap();
        let e13 = total_evolution_apply_with(&walk, &types_13).unwrap();
        assert!(e13.permute_factors(&[0, 2, 1]).distance(&e12) < 1e-14);
    }

    #[test]
    fn signed_permutation_parities() {
        let perms = signed_permutations(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms.iter().map(|(_, s)| s).sum::<f64>(), 0.0);
        let swap = perms.iter().find(|(p, _)| p == &vec![1, 0, 2]).unwrap();
        assert_eq!(swap.1, -1.0);
        let cycle = perms.iter().find(|(p, _)| p == &vec![1, 2, 0]).unwrap();
        assert_eq!(cycle.1, 1.0);
    }

    #[test]
    fn dump_round_trip() {
        let s = spec4();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let st = random_physical_state(s.walk_dim(), 2, &mut rng).unwrap();
        let mut buf = Vec::new();
        st.write_dump(&mut buf).unwrap();
        let back = MultiState::read_dump(&buf[..]).unwrap();
        assert_eq!(back, st);
        assert!(MultiState::read_dump(&b"{}\n"[..]).is_err());
    }

    #[test]
    fn occupations_sum_to_presence() {
        let s = spec4();
        let l = PhysicalBasisLabel::new(vec![
            EnergyModeLabel::new(s.mode(0, 0), Branch::Minus),
            EnergyModeLabel::new(s.mode(1, 0), Branch::Plus),
        ])
        .unwrap();
        let st = physical_basis_state(&s, &l, 3).unwrap();
        let occ = factor_occupations(&st);
        assert!((occ.row(0).sum() - 1.0).abs() < 1e-12);
        assert!((occ.row(1).sum() - 1.0).abs() < 1e-12);
        assert!(occ.row(2).sum().abs() < 1e-12);
    }
}
