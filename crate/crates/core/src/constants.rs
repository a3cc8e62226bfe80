//! Physical constants and default model parameters.
//!
//! Gyromagnetic ratios are stored as ordinary frequencies (γ/2π). Electron
//! values are negative: the Zeeman term of every spin is `-γ B·S`, so a
//! negative γ puts `m_S = +1/2` above `m_S = -1/2`.

use serde::Serialize;

/// Electron gyromagnetic ratio, MHz/G.
pub const GAMMA_E_MHZ_PER_G: f64 = -2.8;
/// ¹⁴N gyromagnetic ratio, Hz/G.
pub const GAMMA_N14_HZ_PER_G: f64 = 307.7;
/// ¹³C gyromagnetic ratio, Hz/G.
pub const GAMMA_C13_HZ_PER_G: f64 = 1071.5;

/// P1 axial hyperfine, MHz.
pub const P1_A_PAR_MHZ: f64 = 114.0;
/// P1 transverse hyperfine, MHz.
pub const P1_A_PERP_MHZ: f64 = 81.34;
/// P1 ¹⁴N quadrupole, MHz.
pub const P1_Q_MHZ: f64 = -4.2;

/// NV ground-state zero-field splitting, MHz.
pub const NV_D_MHZ: f64 = 2870.0;

/// μ0/4π in T·m/A (CODATA 2018).
pub const MU0_OVER_4PI: f64 = 1.000_000_000_55e-7;
/// Planck constant, J·s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Diamond cubic lattice constant, nm.
pub const DIAMOND_LATTICE_NM: f64 = 0.3567;
/// Diamond atom number density, cm⁻³.
pub const DIAMOND_ATOM_DENSITY_CM3: f64 = 1.76e23;
/// Natural ¹³C abundance.
pub const C13_NATURAL_ABUNDANCE: f64 = 0.011;

/// Calibration constant of the linear instantaneous-diffusion law
/// `[N⁰] = κ / T_D`, in ppm·μs. Pinned to (T_D = 70 μs, 0.2 ppm).
pub const TD_CONCENTRATION_KAPPA_PPM_US: f64 = 14.0;

pub const GAUSS_PER_TESLA: f64 = 1.0e4;
pub const HZ_PER_MHZ: f64 = 1.0e6;

/// Nearest-neighbour C–C distance in diamond, nm.
pub fn bond_length_nm() -> f64 {
    DIAMOND_LATTICE_NM * 3f64.sqrt() / 4.0
}

/// Prefactor of the point-dipole coupling between two spins, in Hz·nm³.
///
/// Multiply by `(1 - 3 r̂r̂) / r³` (r in nm) to get the tensor in Hz.
/// Arguments are gyromagnetic ratios in Hz/G.
pub fn dipolar_prefactor_hz_nm3(gamma1_hz_per_g: f64, gamma2_hz_per_g: f64) -> f64 {
    let g1 = gamma1_hz_per_g * GAUSS_PER_TESLA;
    let g2 = gamma2_hz_per_g * GAUSS_PER_TESLA;
    // (m³ → nm³) = 1e27
    MU0_OVER_4PI * g1 * g2 * PLANCK * 1.0e27
}

/// Convert a concentration in ppm (of carbon sites) to a number density in cm⁻³.
pub fn ppm_to_density_cm3(ppm: f64) -> f64 {
    ppm * 1.0e-6 * DIAMOND_ATOM_DENSITY_CM3
}

/// Snapshot of every constant the simulator uses, for `dump-constants`.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsTable {
    pub schema_version: u32,
    pub gamma_e_mhz_per_g: f64,
    pub gamma_n14_hz_per_g: f64,
    pub gamma_c13_hz_per_g: f64,
    pub p1_a_par_mhz: f64,
    pub p1_a_perp_mhz: f64,
    pub p1_q_mhz: f64,
    pub nv_d_mhz: f64,
    pub mu0_over_4pi: f64,
    pub planck: f64,
    pub diamond_lattice_nm: f64,
    pub bond_length_nm: f64,
    pub diamond_atom_density_cm3: f64,
    pub c13_natural_abundance: f64,
    pub td_concentration_kappa_ppm_us: f64,
    pub electron_c13_prefactor_hz_nm3: f64,
    pub c13_c13_prefactor_hz_nm3: f64,
    pub zeeman_sign_convention: &'static str,
}

impl ConstantsTable {
    pub fn current() -> Self {
        let gamma_e_hz = GAMMA_E_MHZ_PER_G * HZ_PER_MHZ;
        Self {
            schema_version: crate::SCHEMA_VERSION,
            gamma_e_mhz_per_g: GAMMA_E_MHZ_PER_G,
            gamma_n14_hz_per_g: GAMMA_N14_HZ_PER_G,
            gamma_c13_hz_per_g: GAMMA_C13_HZ_PER_G,
            p1_a_par_mhz: P1_A_PAR_MHZ,
            p1_a_perp_mhz: P1_A_PERP_MHZ,
            p1_q_mhz: P1_Q_MHZ,
            nv_d_mhz: NV_D_MHZ,
            mu0_over_4pi: MU0_OVER_4PI,
            planck: PLANCK,
            diamond_lattice_nm: DIAMOND_LATTICE_NM,
            bond_length_nm: bond_length_nm(),
            diamond_atom_density_cm3: DIAMOND_ATOM_DENSITY_CM3,
            c13_natural_abundance: C13_NATURAL_ABUNDANCE,
            td_concentration_kappa_ppm_us: TD_CONCENTRATION_KAPPA_PPM_US,
            electron_c13_prefactor_hz_nm3: dipolar_prefactor_hz_nm3(gamma_e_hz, GAMMA_C13_HZ_PER_G),
            c13_c13_prefactor_hz_nm3: dipolar_prefactor_hz_nm3(
                GAMMA_C13_HZ_PER_G,
                GAMMA_C13_HZ_PER_G,
            ),
            zeeman_sign_convention: "H_Z = -gamma * B . S",
        }
    }
}
