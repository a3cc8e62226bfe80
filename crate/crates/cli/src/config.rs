//! Config file and resolution.
//!
//! Every value is resolved as flag, then config file, then built-in default.
//! The file is TOML; every key is optional:
//!
//! ```toml
//! seed = 7
//! threads = 4
//! format = "csv"          # or "json"
//! out_dir = "results"
//!
//! [system]
//! central = "p1"          # p1, nv or bare
//! jt = "off-axis-1"
//! nitrogen = "-1"         # -1, 0, 1 or thermal
//! b = 72.0                # G, along [111]
//!
//! [bath]
//! spins = 125
//! abundance = 0.011
//! min_radius = 0.154      # nm
//! placement = "lattice"   # or "continuum"
//! g = 3
//! n_baths = 20
//!
//! [echo]
//! tau = "0:45us:451"
//! sequence = "hahn"
//! n = 1
//! per_bath = false
//! fit = "exponential"     # or "gaussian"; omit for no fit
//!
//! [scan]
//! b = "40:110:8"
//!
//! [spectrum]
//! jt = "all"
//!
//! [larmor]
//! bins = "fd"             # fd, a bin count, or "width:<Hz>"
//! bath_index = 0
//!
//! [stats]
//! ppm = 0.2               # or density = <cm^-3>
//! k = 1
//! angular = 0.5           # or theta_deg = <deg>
//! td_us = 70.0
//! b = 72.0
//! ```
//!
//! The output directory falls back to `$SPINBATH_OUT_DIR` before `.`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinbath::analysis::Binning;
use spinbath::bath::{self, BathParams};
use spinbath::constants::C13_NATURAL_ABUNDANCE;
use spinbath::dynamics::{uniform_grid, NitrogenState, SimulationConfig};
use spinbath::hamiltonians::{CentralSpin, JtLabel, JtOrientation, SystemOptions};
use spinbath::pulse::{expand_preset, program_from_str, PulseProgram};

use crate::args::{Central, Common, FitModel, Format, Placement};
use crate::CliError;

pub const OUT_DIR_ENV: &str = "SPINBATH_OUT_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub echo: Option<EchoSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub larmor: Option<LarmorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub central: Option<Central>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nitrogen: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abundance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_baths: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EchoSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_bath: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitModel>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jt: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LarmorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bath_index: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angular: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub td_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Settings that do not enter the numeric output.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub out_dir: PathBuf,
    pub format: Format,
    pub threads: usize,
    pub dry_run: bool,
}

/// Resolve the top-level keys. Returns the settings and a config holding the
/// resolved seed, ready for the command's sections.
pub fn resolve_common(common: &Common, file: &FileConfig) -> (RunSettings, FileConfig) {
    let out_dir = common
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let settings = RunSettings {
        out_dir,
        format: common.format.or(file.format).unwrap_or(Format::Csv),
        threads: common.threads.or(file.threads).unwrap_or(0),
        dry_run: common.dry_run,
    };
    let resolved = FileConfig { seed: Some(common.seed.or(file.seed).unwrap_or(1)), ..FileConfig::default() };
    (settings, resolved)
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> Option<T> {
    Some(flag.or(file).unwrap_or(default))
}

pub fn resolve_system(
    flag: &crate::args::SystemArgs,
    b: Option<f64>,
    file: Option<&SystemSection>,
) -> SystemSection {
    let f = file.cloned().unwrap_or_default();
    let central = pick(flag.central, f.central, Central::P1);
    let p1 = central == Some(Central::P1);
    SystemSection {
        central,
        // P1-only keys are dropped for the other centres
        jt: pick(flag.jt.clone(), f.jt, "off-axis-1".into()).filter(|_| p1),
        nitrogen: pick(flag.nitrogen.clone(), f.nitrogen, "-1".into()).filter(|_| p1),
        b: pick(b, f.b, 72.0),
    }
}

pub fn resolve_bath(flag: &crate::args::BathArgs, g: Option<usize>, n_baths: Option<usize>, file: Option<&BathSection>) -> BathSection {
    let f = file.cloned().unwrap_or_default();
    let d = BathParams::default();
    BathSection {
        spins: pick(flag.spins, f.spins, d.n_spins),
        abundance: pick(flag.abundance, f.abundance, C13_NATURAL_ABUNDANCE),
        min_radius: pick(flag.min_radius, f.min_radius, d.min_radius),
        placement: pick(flag.placement, f.placement, Placement::Lattice),
        g: pick(g, f.g, 3),
        n_baths: pick(n_baths, f.n_baths, 20),
    }
}

pub fn resolve_echo(flag: &crate::args::SimArgs, fit: Option<FitModel>, file: Option<&EchoSection>) -> EchoSection {
    let f = file.cloned().unwrap_or_default();
    EchoSection {
        tau: pick(flag.tau.clone(), f.tau, "0:45us:451".into()),
        sequence: pick(flag.sequence.clone(), f.sequence, "hahn".into()),
        n: pick(flag.n, f.n, 1),
        per_bath: pick(flag.per_bath.then_some(true), f.per_bath, false),
        fit: fit.or(f.fit),
    }
}

/// Field magnitude check shared by every command that takes `--b`.
pub fn check_field(b: f64) -> Result<f64, CliError> {
    if !b.is_finite() || b < 0.0 {
        return Err(CliError::Config(format!("field must be ≥ 0, got {b}")));
    }
    Ok(b)
}

fn parse_jt(s: &str) -> Result<JtLabel, CliError> {
    JtLabel::parse(s).ok_or_else(|| {
        CliError::Config(format!("unknown JT orientation '{s}' (expected on-axis, off-axis, off-axis-2 or off-axis-3)"))
    })
}

/// `None` for `all`.
pub fn parse_jt_filter(s: &str) -> Result<Option<JtLabel>, CliError> {
    if s.eq_ignore_ascii_case("all") {
        Ok(None)
    } else {
        parse_jt(s).map(Some)
    }
}

pub fn parse_nitrogen(s: &str) -> Result<NitrogenState, CliError> {
    match s.trim() {
        "thermal" => Ok(NitrogenState::Thermal),
        "-1" => Ok(NitrogenState::Fixed { m_i: -1 }),
        "0" => Ok(NitrogenState::Fixed { m_i: 0 }),
        "1" | "+1" => Ok(NitrogenState::Fixed { m_i: 1 }),
        other => Err(CliError::Config(format!("nitrogen must be -1, 0, 1 or thermal, got '{other}'"))),
    }
}

pub fn central_spin(sys: &SystemSection) -> Result<CentralSpin, CliError> {
    Ok(match sys.central.unwrap_or(Central::P1) {
        Central::P1 => {
            let jt = parse_jt(sys.jt.as_deref().unwrap_or("off-axis-1"))?;
            CentralSpin::p1(jt)
        }
        Central::Nv => CentralSpin::nv(),
        Central::Bare => CentralSpin::bare_electron(),
    })
}

pub fn bath_params(b: &BathSection) -> Result<BathParams, CliError> {
    let p = BathParams {
        n_spins: b.spins.unwrap_or(125),
        abundance: b.abundance.unwrap_or(C13_NATURAL_ABUNDANCE),
        min_radius: b.min_radius.unwrap_or(0.154),
        placement: match b.placement.unwrap_or(Placement::Lattice) {
            Placement::Lattice => bath::Placement::Lattice,
            Placement::Continuum => bath::Placement::Continuum,
        },
    };
    if !(p.abundance > 0.0 && p.abundance <= 1.0) {
        return Err(CliError::Config(format!("abundance must lie in (0, 1], got {}", p.abundance)));
    }
    if !(p.min_radius >= 0.0 && p.min_radius.is_finite()) {
        return Err(CliError::Config(format!("min_radius must be ≥ 0, got {}", p.min_radius)));
    }
    Ok(p)
}

fn time_unit(s: &str) -> Option<(&str, f64)> {
    for (suffix, scale) in [("ms", 1e-3), ("us", 1e-6), ("μs", 1e-6), ("ns", 1e-9), ("s", 1.0)] {
        if let Some(num) = s.strip_suffix(suffix) {
            return Some((num, scale));
        }
    }
    None
}

fn number(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad number '{s}' in {what}")))
}

/// `start:stop:count` with optional time units on either end (bare numbers
/// are μs), or a single delay. Returns seconds.
pub fn parse_tau_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let unit_of = |s: &str| time_unit(s).map(|(_, k)| k);
    let value = |s: &str, scale: f64| match time_unit(s) {
        Some((num, k)) => number(num, "tau").map(|x| x * k),
        None => number(s, "tau").map(|x| x * scale),
    };
    let grid = match parts.as_slice() {
        [one] => vec![value(one, 1e-6)?],
        [start, stop, count] => {
            let scale = unit_of(stop).or_else(|| unit_of(start)).unwrap_or(1e-6);
            let n: usize = count.parse().map_err(|_| CliError::Config(format!("bad point count '{count}' in tau")))?;
            uniform_grid(value(start, scale)?, value(stop, scale)?, n)
        }
        _ => return Err(CliError::Config(format!("tau must be start:stop:count, got '{spec}'"))),
    };
    if grid.is_empty() {
        return Err(CliError::Config("tau grid is empty".into()));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(CliError::Config(format!("tau grid must be non-negative and ascending, got '{spec}'")));
    }
    Ok(grid)
}

/// `start:stop:count` (inclusive, `count` points) or a comma list, in G.
pub fn parse_field_list(spec: &str) -> Result<Vec<f64>, CliError> {
    let spec = spec.trim();
    let fields = if spec.is_empty() {
        Vec::new()
    } else if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(CliError::Config(format!("field range must be start:stop:count, got '{spec}'")));
        };
        let n: usize = count.trim().parse().map_err(|_| CliError::Config(format!("bad point count '{count}' in field range")))?;
        uniform_grid(number(start, "field range")?, number(stop, "field range")?, n)
    } else {
        spec.split(',').map(|s| number(s, "field list")).collect::<Result<_, _>>()?
    };
    if fields.is_empty() {
        return Err(CliError::Config("field list is empty".into()));
    }
    for &b in &fields {
        check_field(b)?;
    }
    Ok(fields)
}

pub fn parse_bins(spec: &str) -> Result<Binning, CliError> {
    let s = spec.trim().to_ascii_lowercase();
    if s == "fd" {
        return Ok(Binning::FreedmanDiaconis);
    }
    if let Some(w) = s.strip_prefix("width:") {
        let hz = number(w, "bins")?;
        if !(hz > 0.0 && hz.is_finite()) {
            return Err(CliError::Config(format!("bin width must be positive, got {hz}")));
        }
        return Ok(Binning::Width { hz });
    }
    match s.parse::<usize>() {
        Ok(bins) if bins > 0 => Ok(Binning::Count { bins }),
        _ => Err(CliError::Config(format!("bins must be fd, a positive count or width:<Hz>, got '{spec}'"))),
    }
}

/// Preset name with an explicit repeat count, preset-with-count text
/// (`cpmg-4`), sequence text, or `@path` to a sequence file.
pub fn sequence_program(spec: &str, n: u32) -> Result<PulseProgram, CliError> {
    let bad = |e: spinbath::pulse::PulseError| CliError::Config(format!("sequence: {e}"));
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read sequence {path}: {e}")))?;
        return spinbath::pulse::parse_sequence(&text).map_err(bad);
    }
    let name = spec.trim().to_ascii_lowercase();
    if matches!(name.as_str(), "hahn" | "cpmg" | "xy8" | "deer") {
        return expand_preset(&name, n).map_err(bad);
    }
    program_from_str(spec).map_err(bad)
}

/// Assemble the library config from resolved sections.
pub fn simulation_config(
    seed: u64,
    sys: &SystemSection,
    bath: &BathSection,
    echo: &EchoSection,
) -> Result<SimulationConfig, CliError> {
    let b = check_field(sys.b.unwrap_or(72.0))?;
    let cfg = SimulationConfig {
        central: central_spin(sys)?,
        b_field: [0.0, 0.0, b],
        bath: bath_params(bath)?,
        g: bath.g.unwrap_or(3),
        n_baths: bath.n_baths.unwrap_or(20),
        tau_grid: parse_tau_grid(echo.tau.as_deref().unwrap_or("0:45us:451"))?,
        sequence: sequence_program(echo.sequence.as_deref().unwrap_or("hahn"), echo.n.unwrap_or(1))?,
        master_seed: seed,
        nitrogen: parse_nitrogen(sys.nitrogen.as_deref().unwrap_or("-1"))?,
        system: SystemOptions::default(),
        keep_per_bath: echo.per_bath.unwrap_or(false),
    };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Orientations for a spectrum; all four unless one is named.
pub fn spectrum_orientations(filter: Option<JtLabel>) -> Vec<JtOrientation> {
    match filter {
        Some(l) => vec![JtOrientation::new(l)],
        None => JtOrientation::all(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-15 * (1.0 + y.abs()))
    }

    #[test]
    fn tau_grids() {
        let g = parse_tau_grid("0:40us:5").unwrap();
        assert!(close(&g, &[0.0, 10e-6, 20e-6, 30e-6, 40e-6]), "{g:?}");
        assert!(close(&parse_tau_grid("0:2:3").unwrap(), &[0.0, 1e-6, 2e-6]));
        assert!(close(&parse_tau_grid("1ms:2ms:2").unwrap(), &[1e-3, 2e-3]));
        assert!(close(&parse_tau_grid("500ns:1us:2").unwrap(), &[0.5e-6, 1e-6]));
        assert!(close(&parse_tau_grid("3").unwrap(), &[3e-6]));
        assert!(parse_tau_grid("0:40us:0").is_err());
        assert!(parse_tau_grid("5:1:3").is_err());
        assert!(parse_tau_grid("0:1").is_err());
    }

    #[test]
    fn field_lists() {
        assert_eq!(parse_field_list("40:110:8").unwrap(), vec![40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0]);
        assert_eq!(parse_field_list("47, 72,100").unwrap(), vec![47.0, 72.0, 100.0]);
        assert_eq!(parse_field_list("72").unwrap(), vec![72.0]);
        assert!(matches!(parse_field_list(""), Err(CliError::Config(m)) if m.contains("empty")));
        assert!(matches!(parse_field_list("10:20:0"), Err(CliError::Config(_))));
        assert!(matches!(parse_field_list("-5,10"), Err(CliError::Config(m)) if m.contains("field must be ≥ 0")));
    }

    #[test]
    fn bins_and_nitrogen() {
        assert_eq!(parse_bins("fd").unwrap(), Binning::FreedmanDiaconis);
        assert_eq!(parse_bins("12").unwrap(), Binning::Count { bins: 12 });
        assert_eq!(parse_bins("width:500").unwrap(), Binning::Width { hz: 500.0 });
        assert!(parse_bins("0").is_err());
        assert_eq!(parse_nitrogen("thermal").unwrap(), NitrogenState::Thermal);
        assert_eq!(parse_nitrogen("+1").unwrap(), NitrogenState::Fixed { m_i: 1 });
        assert!(parse_nitrogen("2").is_err());
    }

    #[test]
    fn sequences() {
        assert_eq!(sequence_program("xy8", 2).unwrap().pulse_count(), 18);
        assert_eq!(sequence_program("cpmg-4", 1).unwrap().pulse_count(), 6);
        assert_eq!(sequence_program("pi/2(x) - tau - pi(y) - tau - pi/2(x)", 1).unwrap().pulse_count(), 3);
        assert!(sequence_program("pi(q)", 1).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[bath]\nspinz = 3\n").is_err());
        let f: FileConfig = toml::from_str("seed = 9\n[system]\nb = 47.0\n").unwrap();
        assert_eq!(f.seed, Some(9));
        assert_eq!(f.system.unwrap().b, Some(47.0));
    }
}
