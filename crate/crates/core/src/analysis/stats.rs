use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::constants::{self, GAMMA_C13_HZ_PER_G, GAMMA_E_MHZ_PER_G, HZ_PER_MHZ};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("density must be positive, got {0}")]
    Density(f64),
    #[error("neighbour index must be at least 1")]
    Index,
    #[error("distance must be positive, got {0}")]
    Distance(f64),
    #[error("time constant must be positive, got {0}")]
    TimeConstant(f64),
    #[error("field must be ≥ 0, got {0}")]
    Field(f64),
}

/// Mean distance to the k-th nearest neighbour in a Poisson ensemble of
/// number density `n_cm3` (cm⁻³), in nm.
pub fn mean_kth_distance(n_cm3: f64, k: u32) -> Result<f64, StatsError> {
    if !(n_cm3 > 0.0 && n_cm3.is_finite()) {
        return Err(StatsError::Density(n_cm3));
    }
    if k == 0 {
        return Err(StatsError::Index);
    }
    let n_nm3 = n_cm3 * 1e-21;
    let k = k as f64;
    let ratio = (ln_gamma(k + 1.0 / 3.0) - ln_gamma(k)).exp();
    Ok((4.0 * std::f64::consts::PI * n_nm3 / 3.0).powf(-1.0 / 3.0) * ratio)
}

/// As [`mean_kth_distance`] for a concentration in ppm of carbon sites.
pub fn mean_kth_distance_ppm(ppm: f64, k: u32) -> Result<f64, StatsError> {
    mean_kth_distance(constants::ppm_to_density_cm3(ppm), k)
}

/// Electron–electron point-dipole coupling at distance `r` (nm) and polar
/// angle `theta` (rad), in kHz.
pub fn mean_dipolar_coupling(r: f64, theta: f64) -> Result<f64, StatsError> {
    mean_dipolar_coupling_factor(r, 1.0 - 3.0 * theta.cos().powi(2))
}

/// Coupling for an explicit angular factor `1 − 3cos²θ`, in kHz.
pub fn mean_dipolar_coupling_factor(r: f64, angular: f64) -> Result<f64, StatsError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(StatsError::Distance(r));
    }
    let g = GAMMA_E_MHZ_PER_G * HZ_PER_MHZ;
    Ok(constants::dipolar_prefactor_hz_nm3(g, g) * angular / r.powi(3) / 1e3)
}

/// P1 concentration (ppm) from the instantaneous-diffusion time constant
/// `t_d` (seconds), using `[N⁰] = κ/T_D`.
pub fn concentration_from_td(t_d: f64) -> Result<f64, StatsError> {
    if !(t_d > 0.0 && t_d.is_finite()) {
        return Err(StatsError::TimeConstant(t_d));
    }
    Ok(constants::TD_CONCENTRATION_KAPPA_PPM_US / (t_d * 1e6))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Larmor {
    /// Hz
    pub freq: f64,
    /// seconds; `None` at zero field
    pub period: Option<f64>,
}

/// Bare ¹³C precession at field `b` (G).
pub fn larmor_frequency(b: f64) -> Result<Larmor, StatsError> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(StatsError::Field(b));
    }
    let freq = GAMMA_C13_HZ_PER_G * b;
    Ok(Larmor { freq, period: (freq > 0.0).then(|| 1.0 / freq) })
}
