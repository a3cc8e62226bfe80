//! Central-spin decoherence in a ¹³C nuclear bath.
//!
//! The crate builds P1 and NV Hamiltonians, generates seeded ¹³C baths on
//! the diamond lattice, parses pulse sequences, propagates cluster-factorised
//! echo signals and extracts spectra, revivals and coherence times.

pub mod analysis;
pub mod bath;
pub mod constants;
pub mod dynamics;
pub mod exec;
pub mod hamiltonians;
pub mod io;
pub mod levels;
pub mod pulse;
pub mod spin;

/// Version tag written into every JSON artefact.
pub const SCHEMA_VERSION: u32 = 1;
