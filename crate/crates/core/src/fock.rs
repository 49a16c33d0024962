//! Fermionic creation and annihilation operators over an ordered list of
//! energy modes, the diagonal evolution they induce, and momentum-mode
//! operators built from them.
//!
//! Bit `i` of a basis bitstring is the occupation of `modes[i]`. Creation on
//! mode `i` carries the sign `(-1)^{#occupied modes j < i}`, so the ordered
//! product `a†_{m1} … a†_{mn} |Ω>` with `m1 < … < mn` has a + sign.

use std::collections::HashMap;
use std::io::Write;

use ndarray::{Array1, Array2};
use serde::Serialize;
use sprs::{CsMat, TriMat};

use crate::error::{QcaError, Result};
use crate::lattice::{
    momentum_grid, Branch, Dimension, EnergyModeLabel, LatticeSpec, MomentumMode,
};
use crate::linalg::{C64, I, ONE, ZERO};
use crate::multiparticle::{self, MultiState};
use crate::walk::{self, BlockDecomposition, EigenvectorForm, WalkUnitary, DEGENERACY_TOL};

pub const DEFAULT_MAX_FOCK_MODES: usize = 20;

#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: Vec<EnergyModeLabel>,
    position: HashMap<EnergyModeLabel, usize>,
}

impl FockBasis {
    /// Basis over `modes`, which must already be in canonical order.
    pub fn new(modes: Vec<EnergyModeLabel>) -> Result<Self> {
        if modes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QcaError::UnorderedLabels);
        }
        Self::with_order(modes)
    }

    /// Basis with a caller-chosen mode order (distinct labels required).
    pub fn with_order(modes: Vec<EnergyModeLabel>) -> Result<Self> {
        Self::with_order_and_cap(modes, DEFAULT_MAX_FOCK_MODES)
    }

    pub fn with_order_and_cap(modes: Vec<EnergyModeLabel>, cap: usize) -> Result<Self> {
        if modes.len() > cap {
            return Err(QcaError::CapExceeded {
                requested: 1u128 << modes.len().min(127),
                cap: 1u128 << cap,
            });
        }
        let position: HashMap<_, _> = modes.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        if position.len() != modes.len() {
            return Err(QcaError::UnorderedLabels);
        }
        Ok(FockBasis { modes, position })
    }

    /// Both branches of every grid mode.
    pub fn all(spec: &LatticeSpec) -> Result<Self> {
        Self::new(crate::lattice::energy_labels(spec))
    }

    /// Both branches of each given momentum, sorted canonically.
    pub fn for_momenta(spec: &LatticeSpec, momenta: &[MomentumMode]) -> Result<Self> {
        let mut labels = Vec::new();
        for m in momenta {
            spec.check_on_grid(m)?;
            labels.push(EnergyModeLabel::minus(*m));
            labels.push(EnergyModeLabel::plus(*m));
        }
        labels.sort();
        labels.dedup();
        Self::new(labels)
    }

    pub fn modes(&self) -> &[EnergyModeLabel] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.modes.len()
    }

    pub fn position(&self, label: &EnergyModeLabel) -> Result<usize> {
        self.position
            .get(label)
            .copied()
            .ok_or_else(|| QcaError::UnknownLabel(label.to_string()))
    }

    /// Occupied labels of a bitstring, in basis order.
    pub fn occupied(&self, bits: usize) -> Vec<EnergyModeLabel> {
        (0..self.modes.len())
            .filter(|i| bits >> i & 1 == 1)
            .map(|i| self.modes[i])
            .collect()
    }

    pub fn basis_vector(&self, bits: usize) -> Array1<C64> {
        let mut v = Array1::zeros(self.dim());
        v[bits] = ONE;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorRole {
    Creation,
    Annihilation,
    DiagonalEvolution,
    Composite,
}

/// Operator on the `2^M` Fock space, stored in compressed-row form since all
/// the operators built here have at most `2^M` nonzeros.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub matrix: CsMat<C64>,
    pub role: OperatorRole,
}

impl FockOperator {
    fn composite(matrix: CsMat<C64>) -> Self {
        FockOperator {
            matrix,
            role: OperatorRole::Composite,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::composite(CsMat::eye(dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::composite(CsMat::zero((dim, dim)))
    }

    pub fn diagonal(entries: &[C64], role: OperatorRole) -> Self {
        let n = entries.len();
        let mut tri = TriMat::new((n, n));
        for (i, z) in entries.iter().enumerate() {
            tri.add_triplet(i, i, *z);
        }
        FockOperator {
            matrix: tri.to_csr(),
            role,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dagger(&self) -> FockOperator {
        let t: CsMat<C64> = self.matrix.transpose_view().to_csr();
        let role = match self.role {
            OperatorRole::Creation => OperatorRole::Annihilation,
            OperatorRole::Annihilation => OperatorRole::Creation,
            r => r,
        };
        FockOperator {
            matrix: t.map(|z| z.conj()),
            role,
        }
    }

    pub fn mul(&self, other: &FockOperator) -> FockOperator {
        Self::composite(&self.matrix * &other.matrix)
    }

    pub fn add(&self, other: &FockOperator) -> FockOperator {
        Self::composite(&self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &FockOperator) -> FockOperator {
        self.add(&other.scaled(-ONE))
    }

    pub fn scaled(&self, c: C64) -> FockOperator {
        FockOperator {
            matrix: self.matrix.map(|z| z * c),
            role: self.role,
        }
    }

    pub fn anticommutator(&self, other: &FockOperator) -> FockOperator {
        self.mul(other).add(&other.mul(self))
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        self.mul(other).sub(&other.mul(self))
    }

    /// `U O U†`.
    pub fn conjugated_by(&self, u: &FockOperator) -> FockOperator {
        u.mul(self).mul(&u.dagger())
    }

    /// Largest entry modulus (zero for the zero operator).
    pub fn max_abs(&self) -> f64 {
        self.matrix
            .data()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &FockOperator) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(self.dim());
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            out[row] = vec.iter().map(|(col, z)| z * v[col]).sum();
        }
        out
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim(), self.matrix.cols()));
        for (z, (r, c)) in self.matrix.iter() {
            out[[r, c]] += *z;
        }
        out
    }

    /// Writes nonzero entries as CSV `row,col,real,imag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<usize> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "real", "imag"])?;
        let mut entries: Vec<_> = self
            .matrix
            .iter()
            .filter(|(z, _)| **z != ZERO)
            .map(|(z, (r, c))| (r, c, *z))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for (r, c, z) in &entries {
            w.write_record(&[
                r.to_string(),
                c.to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(entries.len())
    }
}

fn creation_by_position(basis: &FockBasis, i: usize) -> FockOperator {
    let dim = basis.dim();
    let below = (1usize << i) - 1;
    let mut tri = TriMat::new((dim, dim));
    for bits in 0..dim {
        if bits >> i & 1 == 0 {
            let sign = if (bits & below).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            tri.add_triplet(bits | 1 << i, bits, C64::new(sign, 0.0));
        }
    }
    FockOperator {
        matrix: tri.to_csr(),
        role: OperatorRole::Creation,
    }
}

pub fn creation_op(basis: &FockBasis, label: &EnergyModeLabel) -> Result<FockOperator> {
    Ok(creation_by_position(basis, basis.position(label)?))
}

pub fn annihilation_op(basis: &FockBasis, label: &EnergyModeLabel) -> Result<FockOperator> {
    Ok(creation_op(basis, label)?.dagger())
}

pub fn number_op(basis: &FockBasis, label: &EnergyModeLabel) -> Result<FockOperator> {
    let i = basis.position(label)?;
    let diag: Vec<C64> = (0..basis.dim())
        .map(|b| if b >> i & 1 == 1 { ONE } else { ZERO })
        .collect();
    Ok(FockOperator::diagonal(&diag, OperatorRole::Composite))
}

pub fn total_number_op(basis: &FockBasis) -> FockOperator {
    let diag: Vec<C64> = (0..basis.dim())
        .map(|b| C64::new(b.count_ones() as f64, 0.0))
        .collect();
    FockOperator::diagonal(&diag, OperatorRole::Composite)
}

/// Phase exponent `Σ_occupied ε φ_k` of every bitstring.
pub fn evolution_phases(basis: &FockBasis, spec: &LatticeSpec) -> Result<Vec<f64>> {
    let mode_phases = basis
        .modes()
        .iter()
        .map(|l| walk::walk_eigenphase(spec, l))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..basis.dim())
        .map(|b| {
            (0..mode_phases.len())
                .filter(|i| b >> i & 1 == 1)
                .map(|i| mode_phases[i])
                .sum()
        })
        .collect())
}

pub fn evolution_diagonal(basis: &FockBasis, spec: &LatticeSpec) -> Result<FockOperator> {
    let phases: Vec<C64> = evolution_phases(basis, spec)?
        .into_iter()
        .map(|p| C64::from_polar(1.0, p))
        .collect();
    Ok(FockOperator::diagonal(
        &phases,
        OperatorRole::DiagonalEvolution,
    ))
}

/// Diagonal of `G = Σ_k φ_k (n_{k,+} - n_{-k,-})`, restricted to the modes in
/// the basis. The negative-branch weight uses `φ` evaluated at the negated
/// momentum, independently of the per-mode phase rule.
pub fn exponential_form_generator(basis: &FockBasis, spec: &LatticeSpec) -> Result<Vec<f64>> {
    let weights = basis
        .modes()
        .iter()
        .map(|l| match l.branch {
            Branch::Plus => Ok(walk::momentum_block(spec, &l.mode)?.phi),
            Branch::Minus => Ok(-walk::momentum_block(spec, &l.mode.negated(spec))?.phi),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((0..basis.dim())
        .map(|b| {
            (0..weights.len())
                .filter(|i| b >> i & 1 == 1)
                .map(|i| weights[i])
                .sum()
        })
        .collect())
}

/// `exp{i G}` with the generator of [`exponential_form_generator`].
pub fn exponential_form(basis: &FockBasis, spec: &LatticeSpec) -> Result<FockOperator> {
    let diag: Vec<C64> = exponential_form_generator(basis, spec)?
        .into_iter()
        .map(|g| (I * g).exp())
        .collect();
    Ok(FockOperator::diagonal(
        &diag,
        OperatorRole::DiagonalEvolution,
    ))
}

/// Expansion coefficients of the coin states in the energy eigenvectors:
/// `(1,0) = α_R v_+ + β_R v_-`, `(0,1) = α_L v_+ + β_L v_-`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumCoefficients {
    pub alpha_r: C64,
    pub beta_r: C64,
    pub alpha_l: C64,
    pub beta_l: C64,
}

impl MomentumCoefficients {
    /// Largest deviation of `α v_+ + β v_-` from the coin basis vectors.
    pub fn reconstruction_residual(&self, block: &BlockDecomposition) -> f64 {
        let r = block.v_plus.mapv(|z| z * self.alpha_r) + block.v_minus.mapv(|z| z * self.beta_r);
        let l = block.v_plus.mapv(|z| z * self.alpha_l) + block.v_minus.mapv(|z| z * self.beta_l);
        let dr = (r[0] - ONE).norm().max(r[1].norm());
        let dl = l[0].norm().max((l[1] - ONE).norm());
        dr.max(dl)
    }
}

fn require_closed_form(block: &BlockDecomposition) -> Result<()> {
    if block.degenerate {
        return Err(QcaError::DegenerateMode(
            block.mode.to_string(),
            "block is proportional to the identity",
        ));
    }
    if block.form != EigenvectorForm::Closed {
        return Err(QcaError::DegenerateMode(
            block.mode.to_string(),
            "block is diagonal in the coin basis",
        ));
    }
    Ok(())
}

pub fn momentum_mode_coefficients_1d(
    spec: &LatticeSpec,
    mode: &MomentumMode,
) -> Result<MomentumCoefficients> {
    spec.require(Dimension::One)?;
    let block = walk::momentum_block(spec, mode)?;
    coefficients_1d_at(&block, mode.kx() * spec.dx, spec.theta)
}

/// The 1D closed forms at an arbitrary `kΔx`; `block` must be the block at
/// the same point.
pub fn coefficients_1d_at(
    block: &BlockDecomposition,
    k_dx: f64,
    theta: f64,
) -> Result<MomentumCoefficients> {
    require_closed_form(block)?;
    let (st, ct) = theta.sin_cos();
    if st.abs() < DEGENERACY_TOL {
        return Err(QcaError::DegenerateMode(
            block.mode.to_string(),
            "L coefficients undefined without coin mixing",
        ));
    }
    let (sk, ck) = k_dx.sin_cos();
    let root = (1.0 - ck * ck * ct * ct).sqrt();
    let n_plus = ((sk * ct + root).powi(2) + st * st).sqrt();
    let n_minus = ((sk * ct - root).powi(2) + st * st).sqrt();
    let n_r = 2.0 * root;
    let n_l = 2.0 * st * root;
    let phase = C64::from_polar(1.0, -k_dx);
    Ok(MomentumCoefficients {
        alpha_r: C64::new(n_plus / n_r, 0.0),
        beta_r: C64::new(-n_minus / n_r, 0.0),
        alpha_l: phase * (n_plus * (-sk * ct + root) / n_l),
        beta_l: phase * (n_minus * (sk * ct + root) / n_l),
    })
}

pub fn momentum_mode_coefficients_2d(
    spec: &LatticeSpec,
    mode: &MomentumMode,
) -> Result<MomentumCoefficients> {
    spec.require(Dimension::Two)?;
    let block = walk::momentum_block(spec, mode)?;
    require_closed_form(&block)?;
    let [_, r1, r2, r3] = block.r;
    let s = block.sin_phi;
    let off = C64::new(r1, -r2);
    Ok(MomentumCoefficients {
        alpha_r: C64::new(((s + r3) / (2.0 * s)).sqrt(), 0.0),
        beta_r: C64::new(-((s - r3) / (2.0 * s)).sqrt(), 0.0),
        alpha_l: off / (2.0 * s * (s + r3)).sqrt(),
        beta_l: off / (2.0 * s * (s - r3)).sqrt(),
    })
}

pub fn momentum_mode_coefficients(
    spec: &LatticeSpec,
    mode: &MomentumMode,
) -> Result<MomentumCoefficients> {
    match spec.dimension {
        Dimension::One => momentum_mode_coefficients_1d(spec, mode),
        Dimension::Two => momentum_mode_coefficients_2d(spec, mode),
    }
}

/// `(a†_{k,R}, a†_{k,L})` as combinations of the two energy-mode creators.
pub fn momentum_mode_ops(
    basis: &FockBasis,
    spec: &LatticeSpec,
    mode: &MomentumMode,
) -> Result<(FockOperator, FockOperator)> {
    let c = momentum_mode_coefficients(spec, mode)?;
    let plus = creation_op(basis, &EnergyModeLabel::plus(*mode))?;
    let minus = creation_op(basis, &EnergyModeLabel::minus(*mode))?;
    let r = plus.scaled(c.alpha_r).add(&minus.scaled(c.beta_r));
    let l = plus.scaled(c.alpha_l).add(&minus.scaled(c.beta_l));
    Ok((r, l))
}

/// Residuals of the two forms of momentum-operator evolution at one mode.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentumEvolutionReport {
    /// `U a†_s U† = Σ_t M_{ts} a†_t`: the pair `(a†_R, a†_L)` maps to
    /// `(a†_R, a†_L) M` as a row vector.
    pub creation_row_vector: f64,
    /// `U† a_s U = Σ_t M_{st} a_t`.
    pub annihilation_heisenberg: f64,
}

impl MomentumEvolutionReport {
    pub fn max_residual(&self) -> f64 {
        self.creation_row_vector.max(self.annihilation_heisenberg)
    }
}

pub fn momentum_evolution_check(
    basis: &FockBasis,
    spec: &LatticeSpec,
    mode: &MomentumMode,
) -> Result<MomentumEvolutionReport> {
    let u = evolution_diagonal(basis, spec)?;
    let m = walk::momentum_block(spec, mode)?.m;
    let (cr, cl) = momentum_mode_ops(basis, spec, mode)?;
    let creators = [cr, cl];
    let annihilators = [creators[0].dagger(), creators[1].dagger()];
    let u_dag = u.dagger();

    let mut row = 0.0f64;
    let mut heis = 0.0f64;
    for s in 0..2 {
        let lhs = creators[s].conjugated_by(&u);
        let rhs = creators[0]
            .scaled(m[[0, s]])
            .add(&creators[1].scaled(m[[1, s]]));
        row = row.max(lhs.max_abs_diff(&rhs));

        let lhs = u_dag.mul(&annihilators[s]).mul(&u);
        let rhs = annihilators[0]
            .scaled(m[[s, 0]])
            .add(&annihilators[1].scaled(m[[s, 1]]));
        heis = heis.max(lhs.max_abs_diff(&rhs));
    }
    Ok(MomentumEvolutionReport {
        creation_row_vector: row,
        annihilation_heisenberg: heis,
    })
}

/// Largest deviation from the anticommutation relations over all label pairs.
pub fn car_residual(basis: &FockBasis) -> f64 {
    let m = basis.num_modes();
    let dim = basis.dim();
    let create: Vec<_> = (0..m).map(|i| creation_by_position(basis, i)).collect();
    let annihilate: Vec<_> = create.iter().map(|c| c.dagger()).collect();
    let id = FockOperator::identity(dim);
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            worst = worst.max(annihilate[i].anticommutator(&annihilate[j]).max_abs());
            worst = worst.max(create[i].anticommutator(&create[j]).max_abs());
            let mixed = annihilate[i].anticommutator(&create[j]);
            let dev = if i == j {
                mixed.max_abs_diff(&id)
            } else {
                mixed.max_abs()
            };
            worst = worst.max(dev);
        }
        let vac = annihilate[i].apply(&basis.basis_vector(0));
        worst = worst.max(vac.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    worst
}

/// The multiparticle state of a Fock basis bitstring: the antisymmetrized
/// product of the occupied walk eigenstates, in basis order.
pub fn fock_to_firstquantized(
    basis: &FockBasis,
    bits: usize,
    spec: &LatticeSpec,
    n_max: usize,
) -> Result<MultiState> {
    if bits >= basis.dim() {
        return Err(QcaError::InvalidInput(format!(
            "bitstring {bits:#b} has more than {} modes",
            basis.num_modes()
        )));
    }
    let occupied = basis.occupied(bits);
    if occupied.len() > n_max {
        return Err(QcaError::TooManyParticles {
            n: occupied.len(),
            n_max,
        });
    }
    multiparticle::energy_product_state(spec, &occupied, n_max)
}

/// Linear extension of [`fock_to_firstquantized`] to Fock-space vectors whose
/// support has at most `n_max` particles.
pub fn fock_vector_to_firstquantized(
    basis: &FockBasis,
    v: &Array1<C64>,
    spec: &LatticeSpec,
    n_max: usize,
) -> Result<MultiState> {
    let mut acc = MultiState::zeros(spec.walk_dim(), n_max)?;
    for (bits, z) in v.iter().enumerate() {
        if *z != ZERO {
            let img = fock_to_firstquantized(basis, bits, spec, n_max)?;
            acc.amplitudes.scaled_add(*z, &img.amplitudes);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntertwiningReport {
    pub states_checked: usize,
    /// `max_b ‖U_total ι(b) - ι(U_F b)‖`.
    pub max_residual: f64,
    /// `max_{b,b'} |<ι(b), ι(b')> - δ_{bb'}|`.
    pub isometry_defect: f64,
}

/// Compares the two evolutions through the Fock-to-tensor map on every
/// bitstring with at most `n_max` particles.
pub fn intertwining_check(
    basis: &FockBasis,
    walk: &WalkUnitary,
    n_max: usize,
) -> Result<IntertwiningReport> {
    let spec = &walk.spec;
    let phases = evolution_phases(basis, spec)?;
    let mut images = Vec::new();
    let mut worst = 0.0f64;
    for (bits, &phase) in phases.iter().enumerate() {
        if bits.count_ones() as usize > n_max {
            continue;
        }
        let img = fock_to_firstquantized(basis, bits, spec, n_max)?;
        let lhs = multiparticle::total_evolution_apply_with(walk, &img)?;
        let rhs = img.scaled(C64::from_polar(1.0, phase));
        worst = worst.max(lhs.distance(&rhs));
        images.push(img);
    }
    let mut iso = 0.0f64;
    for (i, a) in images.iter().enumerate() {
        for (j, b) in images.iter().enumerate().skip(i) {
            let expected = if i == j { ONE } else { ZERO };
            iso = iso.max((a.inner(b) - expected).norm());
        }
    }
    Ok(IntertwiningReport {
        states_checked: images.len(),
        max_residual: worst,
        isometry_defect: iso,
    })
}

/// Every non-degenerate grid momentum of the lattice.
pub fn nondegenerate_momenta(spec: &LatticeSpec) -> Result<Vec<MomentumMode>> {
    let mut out = Vec::new();
    for m in momentum_grid(spec) {
        if momentum_mode_coefficients(spec, &m).is_ok() {
            out.push(m);
        }
    }
    Ok(out)
}
