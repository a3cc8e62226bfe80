//! Cluster-factorised spin-echo dynamics.
//!
//! The central system is reduced to the two levels addressed by the drive,
//! `a` (initial state) and `b`. For a group of bath spins the full
//! Hamiltonian from [`build_system_hamiltonian`] is projected onto
//! `|a⟩ ⊗ bath` and `|b⟩ ⊗ bath`; the `a`–`b` coherence block is dropped and
//! each block is shifted by its central energy (rotating frame resonant with
//! the a↔b transition). Pulses are ideal rotations of this two-level system.
//!
//! `S_G = 2 Tr[P_a ρ_f] − 1` with `ρ_i = |a⟩⟨a| ⊗ 1/2^g`, normalised by the
//! sign of the bath-free signal so that `S(τ = 0) = 1`. Bath signals are
//! products over groups and ensemble signals are means over baths.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::FitResult;
use crate::bath::{child_seed, cluster_bath, generate_bath, BathError, BathParams, BathSpin, Partition};
use crate::exec::{map_indexed, Execution};
use crate::hamiltonians::{build_system_hamiltonian, CentralSpin, HamiltonianError, JtLabel, SystemOptions};
use crate::levels::{central_levels, find_level, CentralLevel};
use crate::pulse::{compile_schedule, expand_preset, Event, PulseError, PulseProgram, RotationSpec, Schedule};
use crate::spin::{c, local_rotation, CMatrix, DensityMatrix, Propagator, SpinError, C64};

/// Pulse target label that addresses the central spin.
pub const PROBE: &str = "probe";

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("pulse target '{0}' is not the probe spin; only probe rotations are simulated")]
    UnsupportedTarget(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no central level labelled m_S = {m_s}, m_I = {m_i:?}")]
    MissingLevel { m_s: f64, m_i: Option<f64> },
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
}

/// ¹⁴N handling for the P1 centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NitrogenState {
    /// Drive resonant with the line of this ¹⁴N projection.
    Fixed { m_i: i8 },
    /// Equal-weight average of the three lines.
    Thermal,
}

impl Default for NitrogenState {
    fn default() -> Self {
        NitrogenState::Fixed { m_i: -1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub central: CentralSpin,
    /// G
    pub b_field: [f64; 3],
    pub bath: BathParams,
    /// Maximum cluster size.
    pub g: usize,
    pub n_baths: usize,
    /// Per-arm delays, seconds.
    pub tau_grid: Vec<f64>,
    pub sequence: PulseProgram,
    pub master_seed: u64,
    pub nitrogen: NitrogenState,
    pub system: SystemOptions,
    /// Keep each bath's S_T in the output.
    pub keep_per_bath: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            central: CentralSpin::p1(JtLabel::OffAxis1),
            b_field: [0.0, 0.0, 72.0],
            bath: BathParams::default(),
            g: 3,
            n_baths: 20,
            tau_grid: uniform_grid(0.0, 45e-6, 451),
            sequence: expand_preset("hahn", 1).expect("hahn preset"),
            master_seed: 1,
            nitrogen: NitrogenState::default(),
            system: SystemOptions::default(),
            keep_per_bath: false,
        }
    }
}

impl SimulationConfig {
    pub fn field(&self) -> Vector3<f64> {
        Vector3::from(self.b_field)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::InvalidConfig(m.to_string()));
        if self.n_baths == 0 {
            return bad("n_baths must be at least 1");
        }
        if self.g == 0 {
            return bad("g must be at least 1");
        }
        if self.b_field.iter().any(|x| !x.is_finite()) {
            return bad("field must be finite");
        }
        if self.tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("tau grid must be finite and non-negative");
        }
        if self.tau_grid.windows(2).any(|w| w[1] < w[0]) {
            return bad("tau grid must be sorted ascending");
        }
        if !(self.bath.abundance > 0.0 && self.bath.abundance <= 1.0) {
            return bad("abundance must lie in (0, 1]");
        }
        Ok(())
    }

    /// One model per simulated ¹⁴N line.
    pub fn models(&self) -> Result<Vec<CentralModel>, DynamicsError> {
        let b = self.field();
        match (self.central, self.nitrogen) {
            (CentralSpin::P1 { .. }, NitrogenState::Thermal) => {
                [1.0, 0.0, -1.0].iter().map(|&m| CentralModel::new(&self.central, &b, Some(m))).collect()
            }
            (CentralSpin::P1 { .. }, NitrogenState::Fixed { m_i }) => {
                Ok(vec![CentralModel::new(&self.central, &b, Some(m_i as f64))?])
            }
            _ => Ok(vec![CentralModel::new(&self.central, &b, None)?]),
        }
    }
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn uniform_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// The two central levels addressed by the drive.
#[derive(Debug, Clone)]
pub struct CentralModel {
    pub central: CentralSpin,
    pub b_field: Vector3<f64>,
    /// Initial level (P1: m_S = +1/2; NV: m_S = 0).
    pub level_a: CentralLevel,
    /// Partner level (P1: m_S = −1/2; NV: m_S = −1).
    pub level_b: CentralLevel,
}

impl CentralModel {
    /// `m_i` selects the P1 hyperfine line (default −1) and is ignored otherwise.
    pub fn new(central: &CentralSpin, b_field: &Vector3<f64>, m_i: Option<f64>) -> Result<Self, DynamicsError> {
        let levels = central_levels(central, b_field)?;
        let (ma, mb, mi) = match central {
            CentralSpin::P1 { .. } => (0.5, -0.5, Some(m_i.unwrap_or(-1.0))),
            CentralSpin::Nv { .. } => (0.0, -1.0, None),
            CentralSpin::BareElectron { .. } => (0.5, -0.5, None),
        };
        let pick = |m_s: f64| {
            find_level(&levels, m_s, mi).cloned().ok_or(DynamicsError::MissingLevel { m_s, m_i: mi })
        };
        Ok(Self { central: *central, b_field: *b_field, level_a: pick(ma)?, level_b: pick(mb)? })
    }

    /// a↔b transition frequency, Hz.
    pub fn transition_frequency(&self) -> f64 {
        (self.level_a.energy - self.level_b.energy).abs()
    }
}

/// `(⟨v| ⊗ 1) H (|v⟩ ⊗ 1)` for a central vector `v` and bath dimension `nb`.
fn project(h: &CMatrix, v: &DVector<C64>, nb: usize) -> CMatrix {
    let dc = v.len();
    let mut out = CMatrix::zeros(nb, nb);
    for p in 0..dc {
        let vp = v[p].conj();
        if vp.norm_sqr() < 1e-30 {
            continue;
        }
        for q in 0..dc {
            let w = vp * v[q];
            if w.norm_sqr() < 1e-30 {
                continue;
            }
            for i in 0..nb {
                for j in 0..nb {
                    out[(i, j)] += w * h[(p * nb + i, q * nb + j)];
                }
            }
        }
    }
    out
}

/// Ideal rotation of the a/b two-level system (a ↔ σz = +1).
pub fn probe_rotation(spec: &RotationSpec) -> Result<CMatrix, DynamicsError> {
    if let Some(t) = &spec.target {
        if t != PROBE {
            return Err(DynamicsError::UnsupportedTarget(t.clone()));
        }
    }
    Ok(local_rotation(&spec.axis.vector(), spec.angle, 2, None)?)
}

/// Sign of the bath-free signal: `S` is divided by it so `S(0) = 1`.
/// Sequences whose bath-free signal is near zero are left unnormalised.
pub fn reference_sign(schedule: &Schedule) -> Result<f64, DynamicsError> {
    let mut u = CMatrix::identity(2, 2);
    for r in schedule.rotations() {
        u = probe_rotation(r)? * u;
    }
    let s0 = 2.0 * u[(0, 0)].norm_sqr() - 1.0;
    Ok(if s0.abs() >= 0.5 { s0.signum() } else { 1.0 })
}

/// Composed unitary on the two-level ⊗ bath space, held as 2×2 blocks.
#[derive(Debug, Clone)]
struct Blocks {
    aa: CMatrix,
    ab: CMatrix,
    ba: CMatrix,
    bb: CMatrix,
}

impl Blocks {
    fn identity(nb: usize) -> Self {
        Self {
            aa: CMatrix::identity(nb, nb),
            ab: CMatrix::zeros(nb, nb),
            ba: CMatrix::zeros(nb, nb),
            bb: CMatrix::identity(nb, nb),
        }
    }

    fn rotate(&mut self, r: &CMatrix) {
        let aa = &self.aa * r[(0, 0)] + &self.ba * r[(0, 1)];
        let ab = &self.ab * r[(0, 0)] + &self.bb * r[(0, 1)];
        let ba = &self.aa * r[(1, 0)] + &self.ba * r[(1, 1)];
        let bb = &self.ab * r[(1, 0)] + &self.bb * r[(1, 1)];
        *self = Self { aa, ab, ba, bb };
    }

    fn evolve(&mut self, ua: &CMatrix, ub: &CMatrix) {
        self.aa = ua * &self.aa;
        self.ab = ua * &self.ab;
        self.ba = ub * &self.ba;
        self.bb = ub * &self.bb;
    }

    fn to_matrix(&self) -> CMatrix {
        let nb = self.aa.nrows();
        let mut m = CMatrix::zeros(2 * nb, 2 * nb);
        m.view_mut((0, 0), (nb, nb)).copy_from(&self.aa);
        m.view_mut((0, nb), (nb, nb)).copy_from(&self.ab);
        m.view_mut((nb, 0), (nb, nb)).copy_from(&self.ba);
        m.view_mut((nb, nb), (nb, nb)).copy_from(&self.bb);
        m
    }
}

/// Conditional bath Hamiltonians of one group, ready to propagate.
#[derive(Debug, Clone)]
pub struct GroupSystem {
    nb: usize,
    /// Hz, shifted by E_a.
    pub h_a: CMatrix,
    /// Hz, shifted by E_b.
    pub h_b: CMatrix,
    prop_a: Propagator,
    prop_b: Propagator,
}

impl GroupSystem {
    pub fn new(model: &CentralModel, group: &[BathSpin], opts: SystemOptions) -> Result<Self, DynamicsError> {
        let sys = build_system_hamiltonian(&model.central, group, &model.b_field, opts)?;
        let nb = 1usize << group.len();
        let mut h_a = project(&sys.matrix, &model.level_a.vector, nb);
        let mut h_b = project(&sys.matrix, &model.level_b.vector, nb);
        for i in 0..nb {
            h_a[(i, i)] -= c(model.level_a.energy, 0.0);
            h_b[(i, i)] -= c(model.level_b.energy, 0.0);
        }
        let prop_a = Propagator::new(&h_a)?;
        let prop_b = Propagator::new(&h_b)?;
        Ok(Self { nb, h_a, h_b, prop_a, prop_b })
    }

    pub fn bath_dim(&self) -> usize {
        self.nb
    }

    fn blocks(&self, schedule: &Schedule) -> Result<Blocks, DynamicsError> {
        let mut u = Blocks::identity(self.nb);
        let mut cache: Vec<(f64, CMatrix, CMatrix)> = Vec::new();
        for event in &schedule.events {
            match event {
                Event::Rotation(r) => u.rotate(&probe_rotation(r)?),
                Event::Evolve(dt) => {
                    let k = match cache.iter().position(|(t, _, _)| t == dt) {
                        Some(k) => k,
                        None => {
                            cache.push((*dt, self.prop_a.at(*dt)?, self.prop_b.at(*dt)?));
                            cache.len() - 1
                        }
                    };
                    u.evolve(&cache[k].1, &cache[k].2);
                }
            }
        }
        Ok(u)
    }

    /// Whole-sequence unitary on the (a, b) ⊗ bath space (a block first).
    pub fn schedule_unitary(&self, schedule: &Schedule) -> Result<CMatrix, DynamicsError> {
        Ok(self.blocks(schedule)?.to_matrix())
    }

    pub fn initial_density(&self) -> DensityMatrix {
        let mut m = CMatrix::zeros(2 * self.nb, 2 * self.nb);
        for i in 0..self.nb {
            m[(i, i)] = c(1.0 / self.nb as f64, 0.0);
        }
        DensityMatrix::new(m).expect("valid density")
    }

    /// Propagate ρ event by event.
    pub fn evolve_density(&self, schedule: &Schedule) -> Result<DensityMatrix, DynamicsError> {
        let nb = self.nb;
        let mut rho = self.initial_density();
        for event in &schedule.events {
            let u = match event {
                Event::Rotation(r) => probe_rotation(r)?.kronecker(&CMatrix::identity(nb, nb)),
                Event::Evolve(dt) => {
                    let mut u = CMatrix::zeros(2 * nb, 2 * nb);
                    u.view_mut((0, 0), (nb, nb)).copy_from(&self.prop_a.at(*dt)?);
                    u.view_mut((nb, nb), (nb, nb)).copy_from(&self.prop_b.at(*dt)?);
                    u
                }
            };
            rho = rho.transform(&u);
        }
        Ok(rho)
    }

    /// `2 Tr[P_a ρ_f] − 1` of a final density matrix.
    pub fn population_signal(&self, rho: &DensityMatrix) -> f64 {
        let m = rho.matrix();
        let pa: f64 = (0..self.nb).map(|i| m[(i, i)].re).sum();
        2.0 * pa - 1.0
    }

    /// Unnormalised signal.
    pub fn raw_signal(&self, schedule: &Schedule) -> Result<f64, DynamicsError> {
        let u = self.blocks(schedule)?;
        let pa = u.aa.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.nb as f64;
        Ok(2.0 * pa - 1.0)
    }

    /// Normalised `S_G`.
    pub fn signal(&self, schedule: &Schedule) -> Result<f64, DynamicsError> {
        Ok(self.raw_signal(schedule)? * reference_sign(schedule)?)
    }
}

/// `S_G` for one group.
pub fn group_signal(
    model: &CentralModel,
    group: &[BathSpin],
    schedule: &Schedule,
    opts: SystemOptions,
) -> Result<f64, DynamicsError> {
    GroupSystem::new(model, group, opts)?.signal(schedule)
}

/// `S_T = Π_G S_G`.
pub fn bath_signal(
    model: &CentralModel,
    spins: &[BathSpin],
    partition: &Partition,
    schedule: &Schedule,
    opts: SystemOptions,
) -> Result<f64, DynamicsError> {
    if !partition.is_valid_for(spins.len()) {
        return Err(DynamicsError::InvalidConfig("partition does not cover the bath".into()));
    }
    let mut s = 1.0;
    for group in &partition.groups {
        let members: Vec<BathSpin> = group.iter().map(|&i| spins[i]).collect();
        s *= group_signal(model, &members, schedule, opts)?;
    }
    Ok(s)
}

/// Ensemble-averaged echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoCurve {
    pub schema_version: u32,
    /// seconds
    pub tau: Vec<f64>,
    pub signal: Vec<f64>,
    /// `per_bath[b][k]` is S_T of bath `b` at `tau[k]`.
    pub per_bath: Option<Vec<Vec<f64>>>,
    pub config: SimulationConfig,
    pub fit: Option<FitResult>,
}

/// Compile the program at every τ of the grid.
pub fn compile_grid(program: &PulseProgram, taus: &[f64]) -> Result<Vec<Schedule>, DynamicsError> {
    taus.iter().map(|&t| compile_schedule(program, t).map_err(DynamicsError::from)).collect()
}

/// S_T(τ) of bath `index` of the ensemble.
pub fn ensemble_member(
    config: &SimulationConfig,
    models: &[CentralModel],
    schedules: &[Schedule],
    index: usize,
    exec: Execution,
) -> Result<Vec<f64>, DynamicsError> {
    let bath = generate_bath(child_seed(config.master_seed, index as u64), &config.bath)?;
    let partition = cluster_bath(&bath, config.g)?;
    let signs: Vec<f64> = schedules.iter().map(reference_sign).collect::<Result<_, _>>()?;
    let mut total = vec![0.0; schedules.len()];
    for model in models {
        let mut s_t = vec![1.0; schedules.len()];
        for group in &partition.groups {
            let members: Vec<BathSpin> = group.iter().map(|&i| bath.spins[i]).collect();
            let sys = GroupSystem::new(model, &members, config.system)?;
            let s_g = map_indexed(schedules.len(), exec, |k| sys.raw_signal(&schedules[k]).map(|s| s * signs[k]));
            for (acc, s) in s_t.iter_mut().zip(s_g) {
                *acc *= s?;
            }
        }
        for (acc, s) in total.iter_mut().zip(&s_t) {
            *acc += s;
        }
    }
    let n = models.len() as f64;
    Ok(total.into_iter().map(|s| s / n).collect())
}

pub fn ensemble_signal(config: &SimulationConfig) -> Result<EchoCurve, DynamicsError> {
    ensemble_signal_with(config, Execution::default())
}

/// As [`ensemble_signal`] with an explicit execution mode. The result does
/// not depend on the mode or the worker count.
pub fn ensemble_signal_with(config: &SimulationConfig, exec: Execution) -> Result<EchoCurve, DynamicsError> {
    config.validate()?;
    let models = config.models()?;
    let schedules = compile_grid(&config.sequence, &config.tau_grid)?;
    let per_bath: Vec<Vec<f64>> =
        map_indexed(config.n_baths, exec, |b| ensemble_member(config, &models, &schedules, b, exec))
            .into_iter()
            .collect::<Result<_, _>>()?;
    let mut signal = vec![0.0; config.tau_grid.len()];
    for row in &per_bath {
        for (acc, s) in signal.iter_mut().zip(row) {
            *acc += s;
        }
    }
    let n = config.n_baths as f64;
    signal.iter_mut().for_each(|s| *s /= n);
    Ok(EchoCurve {
        schema_version: crate::SCHEMA_VERSION,
        tau: config.tau_grid.clone(),
        signal,
        per_bath: config.keep_per_bath.then_some(per_bath),
        config: config.clone(),
        fit: None,
    })
}

/// One curve per field magnitude along ẑ, all on the same baths.
pub fn field_scan(config: &SimulationConfig, fields: &[f64]) -> Result<Vec<EchoCurve>, DynamicsError> {
    field_scan_with(config, fields, Execution::default())
}

pub fn field_scan_with(
    config: &SimulationConfig,
    fields: &[f64],
    exec: Execution,
) -> Result<Vec<EchoCurve>, DynamicsError> {
    if fields.is_empty() {
        return Err(DynamicsError::InvalidConfig("field list is empty".into()));
    }
    fields
        .iter()
        .map(|&b| {
            let cfg = SimulationConfig { b_field: [0.0, 0.0, b], ..config.clone() };
            ensemble_signal_with(&cfg, exec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::parse_sequence;

    fn hahn(tau: f64) -> Schedule {
        compile_schedule(&expand_preset("hahn", 1).unwrap(), tau).unwrap()
    }

    fn carbon(x: f64, y: f64, z: f64) -> BathSpin {
        BathSpin::carbon(Vector3::new(x, y, z))
    }

    #[test]
    fn empty_group_is_perfect_echo() {
        for central in [CentralSpin::p1(JtLabel::OffAxis1), CentralSpin::nv(), CentralSpin::bare_electron()] {
            let model = CentralModel::new(&central, &Vector3::new(0.0, 0.0, 72.0), None).unwrap();
            for tau in [0.0, 1e-6, 13e-6] {
                let s = group_signal(&model, &[], &hahn(tau), SystemOptions::default()).unwrap();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_delay_gives_one() {
        let model = CentralModel::new(&CentralSpin::p1(JtLabel::OffAxis1), &Vector3::new(0.0, 0.0, 72.0), None).unwrap();
        let group = [carbon(0.3, 0.1, 0.2), carbon(-0.4, 0.2, 0.1), carbon(0.1, -0.5, 0.3)];
        for preset in ["hahn", "cpmg", "xy8"] {
            let s = compile_schedule(&expand_preset(preset, 2).unwrap(), 0.0).unwrap();
            let v = group_signal(&model, &group, &s, SystemOptions::default()).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{preset}: {v}");
        }
    }

    #[test]
    fn cpmg_one_is_sign_normalised() {
        let s = compile_schedule(&expand_preset("cpmg", 1).unwrap(), 0.0).unwrap();
        assert_eq!(reference_sign(&s).unwrap(), -1.0);
        assert_eq!(reference_sign(&hahn(0.0)).unwrap(), 1.0);
        let quarter = compile_schedule(&parse_sequence("pi/2(x)").unwrap(), 0.0).unwrap();
        assert_eq!(reference_sign(&quarter).unwrap(), 1.0);
    }

    #[test]
    fn rejects_foreign_targets() {
        let model = CentralModel::new(&CentralSpin::nv(), &Vector3::new(0.0, 0.0, 72.0), None).unwrap();
        let deer = compile_schedule(&expand_preset("deer", 1).unwrap(), 1e-6).unwrap();
        let err = group_signal(&model, &[carbon(1.0, 0.0, 0.0)], &deer, SystemOptions::default()).unwrap_err();
        assert!(matches!(err, DynamicsError::UnsupportedTarget(_)));
        let probe = compile_schedule(&parse_sequence("pi/2(x)@probe - tau - pi(x)@probe - tau - pi/2(x)").unwrap(), 1e-6)
            .unwrap();
        assert!(group_signal(&model, &[carbon(1.0, 0.0, 0.0)], &probe, SystemOptions::default()).is_ok());
    }

    #[test]
    fn p1_models_select_nitrogen_line() {
        let b = Vector3::new(0.0, 0.0, 72.0);
        let central = CentralSpin::p1(JtLabel::OffAxis1);
        let m = CentralModel::new(&central, &b, None).unwrap();
        assert_eq!(m.level_a.label.m_i, Some(-1.0));
        assert_eq!(m.level_a.label.m_s, 0.5);
        assert_eq!(m.level_b.label.m_s, -0.5);
        // the driven line of the default model is the ≈142 MHz electron line
        assert!((m.transition_frequency() / 1e6 - 141.9).abs() < 0.5, "{}", m.transition_frequency());
        let cfg = SimulationConfig { nitrogen: NitrogenState::Thermal, ..SimulationConfig::default() };
        assert_eq!(cfg.models().unwrap().len(), 3);
    }

    #[test]
    fn validation() {
        let ok = SimulationConfig::default();
        assert!(ok.validate().is_ok());
        let cases = [
            SimulationConfig { n_baths: 0, ..ok.clone() },
            SimulationConfig { g: 0, ..ok.clone() },
            SimulationConfig { tau_grid: vec![2e-6, 1e-6], ..ok.clone() },
            SimulationConfig { tau_grid: vec![-1e-6], ..ok.clone() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(DynamicsError::InvalidConfig(_))));
        }
        assert!(field_scan(&ok, &[]).is_err());
    }

    #[test]
    fn grid() {
        assert_eq!(uniform_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(uniform_grid(2.0, 3.0, 1), vec![2.0]);
        assert!(uniform_grid(0.0, 1.0, 0).is_empty());
    }
}
