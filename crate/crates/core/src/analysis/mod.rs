//! Spectra, conditional Larmor distributions, revival fits and ensemble
//! statistics.

pub mod fit;
pub mod larmor;
pub mod spectrum;
pub mod stats;

pub use fit::{detect_revivals, detect_revivals_in, fit_envelope, fit_t2, fit_t2_in, EnvelopeModel, FitError, FitResult, Revival, Revivals};
pub use larmor::{larmor_distribution, Binning, LarmorBranch, LarmorHistogram};
pub use spectrum::{transition_moment, transition_table, TransitionKind, TransitionRow, TransitionTable};
pub use stats::{
    concentration_from_td, larmor_frequency, mean_dipolar_coupling, mean_dipolar_coupling_factor, mean_kth_distance,
    mean_kth_distance_ppm, Larmor, StatsError,
};
