//! Spin operator algebra, composite Hilbert spaces and exact unitary evolution.
//!
//! Hamiltonians are stored in ordinary frequency units (Hz) and times in
//! seconds; [`evolve`] supplies the factor of 2π. Basis states of a spin-`s`
//! slot are ordered `m = s, s-1, …, -s`.

use std::f64::consts::TAU;

use nalgebra::{Complex, DMatrix, Vector3};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("spin quantum number {0} is not a positive half-integer")]
    InvalidSpin(f64),
    #[error("operator of dimension {op} does not fit slot {slot} of dimension {expected}")]
    DimensionMismatch { op: usize, slot: usize, expected: usize },
    #[error("slot {slot} out of range for a space with {slots} slots")]
    SlotOutOfRange { slot: usize, slots: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("evolution time must be finite and non-negative, got {0}")]
    NegativeTime(f64),
    #[error("rotation axis must lie in the xy-plane (z component {0})")]
    AxisOutOfPlane(f64),
    #[error("rotation axis has zero length")]
    ZeroAxis,
    #[error("subspace levels must be distinct and inside the slot, got {0:?} for dimension {1}")]
    BadSubspace([usize; 2], usize),
    #[error("a two-level subspace must be named for a slot of dimension {0}")]
    SubspaceRequired(usize),
    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Angular momentum matrices for a single spin.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    twice_s: u32,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

impl SpinOperatorSet {
    pub fn spin(&self) -> f64 {
        self.twice_s as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.twice_s as usize + 1
    }

    /// Component `k` (0 = x, 1 = y, 2 = z).
    pub fn component(&self, k: usize) -> &CMatrix {
        match k {
            0 => &self.sx,
            1 => &self.sy,
            _ => &self.sz,
        }
    }

    /// `n·S` for a real vector `n`.
    pub fn along(&self, n: &Vector3<f64>) -> CMatrix {
        &self.sx * c(n.x, 0.0) + &self.sy * c(n.y, 0.0) + &self.sz * c(n.z, 0.0)
    }

    /// Basis index of magnetic quantum number `m`, if it exists.
    pub fn index_of(&self, m: f64) -> Option<usize> {
        let idx = self.spin() - m;
        let rounded = idx.round();
        ((idx - rounded).abs() < 1e-9 && rounded >= 0.0 && rounded <= self.twice_s as f64)
            .then_some(rounded as usize)
    }

    /// Magnetic quantum number of basis index `i`.
    pub fn m_of(&self, i: usize) -> f64 {
        self.spin() - i as f64
    }
}

/// Standard angular-momentum matrices for spin `s`.
pub fn spin_operators(s: f64) -> Result<SpinOperatorSet, SpinError> {
    let twice = 2.0 * s;
    if !twice.is_finite() || twice < 1.0 || (twice - twice.round()).abs() > 1e-12 {
        return Err(SpinError::InvalidSpin(s));
    }
    let twice_s = twice.round() as u32;
    let s = twice_s as f64 / 2.0;
    let dim = twice_s as usize + 1;
    let mut sz = CMatrix::zeros(dim, dim);
    let mut splus = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let m = s - i as f64;
        sz[(i, i)] = c(m, 0.0);
        if i > 0 {
            // <m+1| S+ |m>
            splus[(i - 1, i)] = c((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let sminus = splus.adjoint();
    let sx = (&splus + &sminus) * c(0.5, 0.0);
    let sy = (&splus - &sminus) * c(0.0, -0.5);
    Ok(SpinOperatorSet { twice_s, sx, sy, sz })
}

pub fn spin_half() -> SpinOperatorSet {
    spin_operators(0.5).expect("spin 1/2")
}

pub fn spin_one() -> SpinOperatorSet {
    spin_operators(1.0).expect("spin 1")
}

/// Tensor-product space. Slot order is fixed per simulation:
/// central electron, central nucleus (P1 only), then bath spins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeSpace {
    slots: Vec<usize>,
}

impl CompositeSpace {
    pub fn new(slots: Vec<usize>) -> Self {
        Self { slots }
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn total_dim(&self) -> usize {
        self.slots.iter().product()
    }

    pub fn slot_dim(&self, slot: usize) -> Result<usize, SpinError> {
        self.slots.get(slot).copied().ok_or(SpinError::SlotOutOfRange {
            slot,
            slots: self.slots.len(),
        })
    }
}

/// `op` tensored with identities on every other slot.
pub fn embed(op: &CMatrix, slot: usize, space: &CompositeSpace) -> Result<CMatrix, SpinError> {
    let expected = space.slot_dim(slot)?;
    if op.nrows() != expected || op.ncols() != expected {
        return Err(SpinError::DimensionMismatch { op: op.nrows(), slot, expected });
    }
    let left: usize = space.slots[..slot].iter().product();
    let right: usize = space.slots[slot + 1..].iter().product();
    let id_left = CMatrix::identity(left, left);
    let id_right = CMatrix::identity(right, right);
    Ok(id_left.kronecker(op).kronecker(&id_right))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn check_hermitian(m: &CMatrix) -> Result<(), SpinError> {
    let err = hermiticity_error(m);
    if err > HERMITIAN_TOL * max_abs(m).max(1.0) {
        Err(SpinError::NotHermitian(err))
    } else {
        Ok(())
    }
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: CMatrix,
}

impl Eigensystem {
    pub fn new(h: &CMatrix) -> Result<Self, SpinError> {
        check_hermitian(h)?;
        // Symmetrize so round-off in the input cannot leak into the solver.
        let sym = (h + h.adjoint()) * c(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_columns(
            &order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>(),
        );
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Cached eigendecomposition of a time-independent Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    eig: Eigensystem,
}

impl Propagator {
    pub fn new(h: &CMatrix) -> Result<Self, SpinError> {
        Ok(Self { eig: Eigensystem::new(h)? })
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eig
    }

    /// `exp(-i 2π H t)`.
    pub fn at(&self, t: f64) -> Result<CMatrix, SpinError> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(SpinError::NegativeTime(t));
        }
        let v = &self.eig.vectors;
        let mut scaled = v.clone();
        for (k, &e) in self.eig.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -TAU * e * t);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= phase;
            }
        }
        Ok(scaled * v.adjoint())
    }
}

/// Unitary `exp(-i 2π H t)` for a Hermitian `H` in Hz and `t` in seconds.
pub fn evolve(h: &CMatrix, t: f64) -> Result<CMatrix, SpinError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(SpinError::NegativeTime(t));
    }
    Propagator::new(h)?.at(t)
}

/// Ideal instantaneous rotation `exp(-i θ n̂·σ/2)` on a two-level subspace of one slot.
///
/// `axis` must lie in the xy-plane. For spin-1/2 slots the subspace defaults
/// to the whole slot; larger slots must name two levels, the first of which
/// plays the role of σz = +1.
pub fn rotation(
    axis: &Vector3<f64>,
    angle: f64,
    slot: usize,
    subspace: Option<[usize; 2]>,
    space: &CompositeSpace,
) -> Result<CMatrix, SpinError> {
    let dim = space.slot_dim(slot)?;
    let local = local_rotation(axis, angle, dim, subspace)?;
    embed(&local, slot, space)
}

/// The rotation of [`rotation`] acting on a single slot of dimension `dim`.
pub fn local_rotation(
    axis: &Vector3<f64>,
    angle: f64,
    dim: usize,
    subspace: Option<[usize; 2]>,
) -> Result<CMatrix, SpinError> {
    if axis.z.abs() > 1e-12 {
        return Err(SpinError::AxisOutOfPlane(axis.z));
    }
    let norm = (axis.x * axis.x + axis.y * axis.y).sqrt();
    if norm < 1e-15 {
        return Err(SpinError::ZeroAxis);
    }
    let (nx, ny) = (axis.x / norm, axis.y / norm);
    let [up, down] = match subspace {
        Some(levels) => levels,
        None if dim == 2 => [0, 1],
        None => return Err(SpinError::SubspaceRequired(dim)),
    };
    if up == down || up >= dim || down >= dim {
        return Err(SpinError::BadSubspace([up, down], dim));
    }
    let (s, co) = (0.5 * angle).sin_cos();
    let mut u = CMatrix::identity(dim, dim);
    u[(up, up)] = c(co, 0.0);
    u[(down, down)] = c(co, 0.0);
    // -i sin(θ/2) (nx σx + ny σy): off-diagonals nx ∓ i ny
    u[(up, down)] = c(0.0, -s) * c(nx, -ny);
    u[(down, up)] = c(0.0, -s) * c(nx, ny);
    Ok(u)
}

/// Density operator of a (sub)system.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), unit trace (1e-10) and positivity (-1e-10).
    pub fn new(matrix: CMatrix) -> Result<Self, SpinError> {
        if !matrix.is_square() {
            return Err(SpinError::InvalidDensity("not square".into()));
        }
        let herm = hermiticity_error(&matrix);
        if herm > 1e-12 {
            return Err(SpinError::InvalidDensity(format!("hermiticity error {herm:.3e}")));
        }
        let tr = trace(&matrix);
        if (tr - c(1.0, 0.0)).norm() > 1e-10 {
            return Err(SpinError::InvalidDensity(format!("trace {tr}")));
        }
        let eig = Eigensystem::new(&matrix)?;
        if let Some(&min) = eig.values.first() {
            if min < -1e-10 {
                return Err(SpinError::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(Self { matrix })
    }

    /// Maximally mixed state `1/d`.
    pub fn mixed(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0) }
    }

    /// Projector onto basis state `index`.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut matrix = CMatrix::zeros(dim, dim);
        matrix[(index, index)] = c(1.0, 0.0);
        Self { matrix }
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        Self { matrix: self.matrix.kronecker(&other.matrix) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `U ρ U†`. No validation; unitarity of `u` is the caller's contract.
    pub fn transform(&self, u: &CMatrix) -> Self {
        Self { matrix: u * &self.matrix * u.adjoint() }
    }

    /// `Tr[op ρ]`.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (op * &self.matrix).trace()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }
}

/// `‖U†U − I‖_max`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}
