//! Central-spin and central-spin-plus-bath Hamiltonians.
//!
//! All builders return matrices in Hz. Every spin's Zeeman term is
//! `-γ B·S`; with the negative electron γ this places `m_S = -1` of the NV
//! below `m_S = 0` by `D - |γ_e| B` and reproduces the usual P1 state labels.
//!
//! Lab frame: ẑ is the diamond [111] axis (the NV axis and field direction).
//! The P1 Jahn-Teller axis is either ẑ or one of the three other bond
//! directions, 109.47° away.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::BathSpin;
use crate::constants::{self, HZ_PER_MHZ};
use crate::spin::{self, c, embed, CMatrix, CompositeSpace, SpinError, SpinOperatorSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("spin separation must be non-zero")]
    ZeroSeparation,
    #[error("bath spins {0} and {1} share a position")]
    DuplicatePosition(usize, usize),
    #[error("bath spin {0} sits on the central spin")]
    SpinAtOrigin(usize),
    #[error(transparent)]
    Spin(#[from] SpinError),
}

/// P1 centre parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct P1Params {
    /// MHz/G
    pub gamma_e: f64,
    /// Hz/G
    pub gamma_n14: f64,
    /// MHz
    pub a_par: f64,
    /// MHz
    pub a_perp: f64,
    /// MHz
    pub q: f64,
}

impl Default for P1Params {
    fn default() -> Self {
        Self {
            gamma_e: constants::GAMMA_E_MHZ_PER_G,
            gamma_n14: constants::GAMMA_N14_HZ_PER_G,
            a_par: constants::P1_A_PAR_MHZ,
            a_perp: constants::P1_A_PERP_MHZ,
            q: constants::P1_Q_MHZ,
        }
    }
}

/// NV centre parameters. The NV axis is ẑ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NvParams {
    /// MHz
    pub d_zfs: f64,
    /// MHz/G
    pub gamma_e: f64,
}

impl Default for NvParams {
    fn default() -> Self {
        Self { d_zfs: constants::NV_D_MHZ, gamma_e: constants::GAMMA_E_MHZ_PER_G }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JtLabel {
    OnAxis,
    #[serde(rename = "off-axis-1")]
    OffAxis1,
    #[serde(rename = "off-axis-2")]
    OffAxis2,
    #[serde(rename = "off-axis-3")]
    OffAxis3,
}

impl JtLabel {
    pub const ALL: [JtLabel; 4] =
        [JtLabel::OnAxis, JtLabel::OffAxis1, JtLabel::OffAxis2, JtLabel::OffAxis3];

    pub fn as_str(self) -> &'static str {
        match self {
            JtLabel::OnAxis => "on-axis",
            JtLabel::OffAxis1 => "off-axis-1",
            JtLabel::OffAxis2 => "off-axis-2",
            JtLabel::OffAxis3 => "off-axis-3",
        }
    }

    /// Parses `on-axis`, `off-axis` (= `off-axis-1`) and `off-axis-{1,2,3}`.
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "on-axis" | "on" => Some(JtLabel::OnAxis),
            "off-axis" | "off" | "off-axis-1" => Some(JtLabel::OffAxis1),
            "off-axis-2" => Some(JtLabel::OffAxis2),
            "off-axis-3" => Some(JtLabel::OffAxis3),
            _ => None,
        }
    }
}

/// Static Jahn-Teller distortion axis of a P1 centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "JtLabel", into = "JtLabel")]
pub struct JtOrientation {
    label: JtLabel,
    axis: Vector3<f64>,
}

impl From<JtLabel> for JtOrientation {
    fn from(label: JtLabel) -> Self {
        Self::new(label)
    }
}

impl From<JtOrientation> for JtLabel {
    fn from(jt: JtOrientation) -> Self {
        jt.label
    }
}

impl JtOrientation {
    pub fn new(label: JtLabel) -> Self {
        let bond = match label {
            JtLabel::OnAxis => Vector3::new(1.0, 1.0, 1.0),
            JtLabel::OffAxis1 => Vector3::new(1.0, -1.0, -1.0),
            JtLabel::OffAxis2 => Vector3::new(-1.0, 1.0, -1.0),
            JtLabel::OffAxis3 => Vector3::new(-1.0, -1.0, 1.0),
        };
        let axis = (crystal_to_lab() * bond).normalize();
        Self { label, axis }
    }

    pub fn on_axis() -> Self {
        Self::new(JtLabel::OnAxis)
    }

    pub fn off_axis() -> Self {
        Self::new(JtLabel::OffAxis1)
    }

    pub fn label(&self) -> JtLabel {
        self.label
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    pub fn all() -> Vec<JtOrientation> {
        JtLabel::ALL.iter().map(|&l| Self::new(l)).collect()
    }
}

/// Rodrigues rotation taking `from` onto `to` (both non-zero).
pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    let a = from.normalize();
    let b = to.normalize();
    let cos = a.dot(&b);
    let axis = a.cross(&b);
    let sin = axis.norm();
    if sin < 1e-15 {
        if cos > 0.0 {
            return Matrix3::identity();
        }
        // antiparallel: half turn about any axis perpendicular to `a`
        let helper = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let k = a.cross(&helper).normalize();
        return 2.0 * k * k.transpose() - Matrix3::identity();
    }
    let k = axis / sin;
    let kx = k.cross_matrix();
    Matrix3::identity() + sin * kx + (1.0 - cos) * kx * kx
}

/// Rotation mapping crystal coordinates onto the lab frame ([111] → ẑ).
pub fn crystal_to_lab() -> Matrix3<f64> {
    rotation_between(&Vector3::new(1.0, 1.0, 1.0), &Vector3::z())
}

/// Point-dipole hyperfine tensor between two spins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperfineTensor {
    /// Hz
    pub a: Matrix3<f64>,
    /// nm
    pub separation: Vector3<f64>,
}

/// `A = (μ0 γ1 γ2 h / 4π r³)(1 − 3 r̂r̂)` in Hz, with γ's in Hz/G (signed) and `r` in nm.
pub fn hyperfine_tensor(
    r: &Vector3<f64>,
    gamma1_hz_per_g: f64,
    gamma2_hz_per_g: f64,
) -> Result<HyperfineTensor, HamiltonianError> {
    let dist = r.norm();
    if !(dist > 0.0) {
        return Err(HamiltonianError::ZeroSeparation);
    }
    let unit = r / dist;
    let pref = constants::dipolar_prefactor_hz_nm3(gamma1_hz_per_g, gamma2_hz_per_g) / dist.powi(3);
    let a = pref * (Matrix3::identity() - 3.0 * unit * unit.transpose());
    Ok(HyperfineTensor { a, separation: *r })
}

/// The central spin of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CentralSpin {
    P1 { params: P1Params, jt: JtOrientation },
    Nv { params: NvParams },
    /// Electron spin-1/2 with Zeeman term only. Used for ESEEM cross-checks.
    BareElectron { gamma_e: f64 },
}

impl CentralSpin {
    pub fn p1(jt: JtLabel) -> Self {
        CentralSpin::P1 { params: P1Params::default(), jt: JtOrientation::new(jt) }
    }

    pub fn nv() -> Self {
        CentralSpin::Nv { params: NvParams::default() }
    }

    pub fn bare_electron() -> Self {
        CentralSpin::BareElectron { gamma_e: constants::GAMMA_E_MHZ_PER_G }
    }

    /// Slot dimensions of the central system (electron first).
    pub fn slots(&self) -> Vec<usize> {
        match self {
            CentralSpin::P1 { .. } => vec![2, 3],
            CentralSpin::Nv { .. } => vec![3],
            CentralSpin::BareElectron { .. } => vec![2],
        }
    }

    pub fn dim(&self) -> usize {
        self.slots().iter().product()
    }

    /// Electron gyromagnetic ratio in Hz/G.
    pub fn gamma_e_hz(&self) -> f64 {
        let mhz = match self {
            CentralSpin::P1 { params, .. } => params.gamma_e,
            CentralSpin::Nv { params } => params.gamma_e,
            CentralSpin::BareElectron { gamma_e } => *gamma_e,
        };
        mhz * HZ_PER_MHZ
    }

    pub fn electron_ops(&self) -> SpinOperatorSet {
        match self {
            CentralSpin::Nv { .. } => spin::spin_one(),
            _ => spin::spin_half(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CentralSpin::P1 { .. } => "p1",
            CentralSpin::Nv { .. } => "nv",
            CentralSpin::BareElectron { .. } => "bare-electron",
        }
    }

    /// Hamiltonian of the central system alone, in Hz.
    pub fn hamiltonian(&self, b: &Vector3<f64>) -> CMatrix {
        match self {
            CentralSpin::P1 { params, jt } => build_p1_hamiltonian_axis(params, b, &jt.axis()),
            CentralSpin::Nv { params } => build_nv_hamiltonian(params, b),
            CentralSpin::BareElectron { gamma_e } => {
                spin::spin_half().along(b) * c(-gamma_e * HZ_PER_MHZ, 0.0)
            }
        }
    }
}

/// P1 electron + ¹⁴N Hamiltonian (6×6, Hz). Slots: [electron, ¹⁴N].
pub fn build_p1_hamiltonian(params: &P1Params, b: &Vector3<f64>, jt: &JtOrientation) -> CMatrix {
    build_p1_hamiltonian_axis(params, b, &jt.axis())
}

/// As [`build_p1_hamiltonian`] with an arbitrary distortion axis.
pub fn build_p1_hamiltonian_axis(
    params: &P1Params,
    b: &Vector3<f64>,
    jt_axis: &Vector3<f64>,
) -> CMatrix {
    let space = CompositeSpace::new(vec![2, 3]);
    let s_ops = spin::spin_half();
    let i_ops = spin::spin_one();
    let frame = rotation_between(&Vector3::z(), jt_axis);
    let s: Vec<CMatrix> =
        (0..3).map(|k| embed(s_ops.component(k), 0, &space).expect("slot 0")).collect();
    let i: Vec<CMatrix> =
        (0..3).map(|k| embed(i_ops.component(k), 1, &space).expect("slot 1")).collect();
    // primed component j = (column j of frame) · operator
    let primed = |ops: &[CMatrix], j: usize| -> CMatrix {
        let axis = frame.column(j);
        &ops[0] * c(axis[0], 0.0) + &ops[1] * c(axis[1], 0.0) + &ops[2] * c(axis[2], 0.0)
    };
    let sp: Vec<CMatrix> = (0..3).map(|j| primed(&s, j)).collect();
    let ip: Vec<CMatrix> = (0..3).map(|j| primed(&i, j)).collect();

    let gamma_e = params.gamma_e * HZ_PER_MHZ;
    let dot = |ops: &[CMatrix]| -> CMatrix {
        &ops[0] * c(b.x, 0.0) + &ops[1] * c(b.y, 0.0) + &ops[2] * c(b.z, 0.0)
    };
    let mut h = dot(&s) * c(-gamma_e, 0.0);
    h += dot(&i) * c(-params.gamma_n14, 0.0);
    h += &sp[2] * &ip[2] * c(params.a_par * HZ_PER_MHZ, 0.0);
    h += (&sp[0] * &ip[0] + &sp[1] * &ip[1]) * c(params.a_perp * HZ_PER_MHZ, 0.0);
    h += &ip[2] * &ip[2] * c(params.q * HZ_PER_MHZ, 0.0);
    h
}

/// NV electron Hamiltonian `D S_z² − γ_e B·S` (3×3, Hz).
pub fn build_nv_hamiltonian(params: &NvParams, b: &Vector3<f64>) -> CMatrix {
    let s = spin::spin_one();
    &s.sz * &s.sz * c(params.d_zfs * HZ_PER_MHZ, 0.0) + s.along(b) * c(-params.gamma_e * HZ_PER_MHZ, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemOptions {
    /// Include the electron–¹³C hyperfine coupling.
    pub hyperfine: bool,
    /// Include ¹³C–¹³C point-dipole couplings within a group.
    pub nuclear_coupling: bool,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self { hyperfine: true, nuclear_coupling: true }
    }
}

#[derive(Debug, Clone)]
pub struct SystemHamiltonian {
    pub matrix: CMatrix,
    pub space: CompositeSpace,
}

impl SystemHamiltonian {
    /// Number of central slots preceding the bath slots.
    pub fn bath_offset(&self, central: &CentralSpin) -> usize {
        central.slots().len()
    }
}

/// Central spin plus a group of ¹³C spins, in Hz.
///
/// Slots: central electron, ¹⁴N (P1 only), then one slot per bath spin in
/// group order. The ¹⁴N–¹³C coupling is neglected.
pub fn build_system_hamiltonian(
    central: &CentralSpin,
    group: &[BathSpin],
    b: &Vector3<f64>,
    opts: SystemOptions,
) -> Result<SystemHamiltonian, HamiltonianError> {
    for (i, si) in group.iter().enumerate() {
        if si.pos().norm() == 0.0 {
            return Err(HamiltonianError::SpinAtOrigin(i));
        }
        for (j, sj) in group.iter().enumerate().skip(i + 1) {
            if si.position == sj.position {
                return Err(HamiltonianError::DuplicatePosition(i, j));
            }
        }
    }
    let mut slots = central.slots();
    let offset = slots.len();
    slots.extend(std::iter::repeat(2).take(group.len()));
    let space = CompositeSpace::new(slots);
    let bath_dim = 1usize << group.len();

    let mut h = central.hamiltonian(b).kronecker(&CMatrix::identity(bath_dim, bath_dim));
    if group.is_empty() {
        return Ok(SystemHamiltonian { matrix: h, space });
    }

    let e_ops = central.electron_ops();
    let s: Vec<CMatrix> = (0..3).map(|k| embed(e_ops.component(k), 0, &space)).collect::<Result<_, _>>()?;
    let half = spin::spin_half();
    let nuc: Vec<Vec<CMatrix>> = (0..group.len())
        .map(|n| (0..3).map(|k| embed(half.component(k), offset + n, &space)).collect())
        .collect::<Result<_, _>>()?;

    let gamma_e = central.gamma_e_hz();
    for (n, spin) in group.iter().enumerate() {
        let ops = &nuc[n];
        h += (&ops[0] * c(b.x, 0.0) + &ops[1] * c(b.y, 0.0) + &ops[2] * c(b.z, 0.0))
            * c(-spin.gamma, 0.0);
        if !opts.hyperfine {
            continue;
        }
        let tensor = hyperfine_tensor(&spin.pos(), gamma_e, spin.gamma)?;
        for p in 0..3 {
            for q in 0..3 {
                let a = tensor.a[(p, q)];
                if a != 0.0 {
                    h += &s[p] * &ops[q] * c(a, 0.0);
                }
            }
        }
    }

    if opts.nuclear_coupling {
        for m in 0..group.len() {
            for n in m + 1..group.len() {
                let sep = group[n].pos() - group[m].pos();
                let tensor = hyperfine_tensor(&sep, group[m].gamma, group[n].gamma)?;
                for p in 0..3 {
                    for q in 0..3 {
                        let a = tensor.a[(p, q)];
                        if a != 0.0 {
                            h += &nuc[m][p] * &nuc[n][q] * c(a, 0.0);
                        }
                    }
                }
            }
        }
    }
    Ok(SystemHamiltonian { matrix: h, space })
}
