use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;
use spinbath::analysis::{
    concentration_from_td, fit_t2, larmor_distribution, larmor_frequency, mean_dipolar_coupling_factor,
    mean_kth_distance, transition_table, EnvelopeModel, FitResult,
};
use spinbath::bath::{child_seed, generate_bath};
use spinbath::constants::{ppm_to_density_cm3, ConstantsTable};
use spinbath::dynamics::{ensemble_signal, field_scan, NitrogenState};
use spinbath::exec::with_workers;
use spinbath::hamiltonians::{CentralSpin, JtLabel};
use spinbath::pulse::{compile_schedule, parse_sequence, PulseProgram};
use spinbath::{io, SCHEMA_VERSION};

use crate::args::{
    Central, Cli, Command, EchoArgs, FitModel, Format, LarmorArgs, ParseArgs, ScanArgs, SpectrumArgs, StatsArgs,
};
use crate::config::*;
use crate::CliError;

/// JSON wrapper for every artefact. In CSV mode it is written without
/// `result` as `<name>.meta.json` next to the data.
#[derive(Serialize)]
struct Output<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a FileConfig,
    constants: ConstantsTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<&'a FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a T>,
}

struct Ctx<'a, W: Write> {
    settings: RunSettings,
    file: FileConfig,
    resolved: FileConfig,
    out: &'a mut W,
}

impl<W: Write> Ctx<'_, W> {
    fn seed(&self) -> u64 {
        self.resolved.seed.unwrap_or(1)
    }

    fn say(&mut self, line: impl std::fmt::Display) -> Result<(), CliError> {
        match writeln!(self.out, "{line}") {
            // a closed pipe (e.g. `| head`) is not a failure
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io { context: "stdout".into(), source: e }),
            _ => Ok(()),
        }
    }

    /// Print the resolved config and constants. Returns true in dry-run mode.
    fn dry_run(&mut self, command: &str) -> Result<bool, CliError> {
        if !self.settings.dry_run {
            return Ok(false);
        }
        let o: Output<'_, ()> = Output {
            schema_version: SCHEMA_VERSION,
            command,
            config: &self.resolved,
            constants: ConstantsTable::current(),
            fit: None,
            result: None,
        };
        let text = json(&o)?;
        self.say(text.trim_end())?;
        Ok(true)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.settings.out_dir.join(name);
        write_to(&path, contents)?;
        self.say(format_args!("wrote {}", path.display()))
    }

    fn emit<T: Serialize>(
        &mut self,
        command: &str,
        name: &str,
        result: &T,
        fit: Option<&FitResult>,
        csv: impl FnOnce() -> String,
    ) -> Result<(), CliError> {
        let mut o = Output {
            schema_version: SCHEMA_VERSION,
            command,
            config: &self.resolved,
            constants: ConstantsTable::current(),
            fit,
            result: None,
        };
        match self.settings.format {
            Format::Json => {
                // the fit, if any, is already part of the result
                o.fit = None;
                o.result = Some(result);
                let text = json(&o)?;
                self.write(&format!("{name}.json"), &text)
            }
            Format::Csv => {
                let meta = json(&o)?;
                self.write(&format!("{name}.csv"), &csv())?;
                self.write(&format!("{name}.meta.json"), &meta)
            }
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    io::to_json(value).map_err(|e| CliError::Runtime(format!("serializing output: {e}")))
}

fn write_to(path: &Path, contents: &str) -> Result<(), CliError> {
    io::write_file(path, contents).map_err(|e| CliError::Io { context: format!("writing {}", path.display()), source: e })
}

/// Execute a parsed command line, printing progress to `out`.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let (settings, resolved) = resolve_common(&cli.common, &file);
    let mut ctx = Ctx { settings, file, resolved, out };
    match cli.command {
        Command::Spectrum(a) => spectrum(&mut ctx, a),
        Command::Echo(a) => echo(&mut ctx, a),
        Command::Scan(a) => scan(&mut ctx, a),
        Command::LarmorDist(a) => larmor(&mut ctx, a),
        Command::Stats(a) => stats(&mut ctx, a),
        Command::Parse(a) => parse(&mut ctx, a),
        Command::DumpConstants => {
            let text = json(&ConstantsTable::current())?;
            ctx.say(text.trim_end())
        }
    }
}

fn spectrum<W: Write>(ctx: &mut Ctx<'_, W>, a: SpectrumArgs) -> Result<(), CliError> {
    let fs = ctx.file.system.clone().unwrap_or_default();
    let central = a.central.or(fs.central).unwrap_or(Central::P1);
    let b = check_field(a.b.or(fs.b).unwrap_or(72.0))?;
    let jt = a.jt.or(ctx.file.spectrum.as_ref().and_then(|s| s.jt.clone())).unwrap_or_else(|| "all".into());
    let filter = parse_jt_filter(&jt)?;
    ctx.resolved.system = Some(SystemSection { central: Some(central), b: Some(b), ..SystemSection::default() });
    ctx.resolved.spectrum = Some(SpectrumSection { jt: Some(jt) });
    let spin = match central {
        Central::P1 => CentralSpin::p1(filter.unwrap_or(JtLabel::OffAxis1)),
        Central::Nv => CentralSpin::nv(),
        Central::Bare => CentralSpin::bare_electron(),
    };
    if ctx.dry_run("spectrum")? {
        return Ok(());
    }
    let table = transition_table(&spin, &Vector3::new(0.0, 0.0, b), &spectrum_orientations(filter))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    ctx.emit("spectrum", "spectrum", &table, None, || io::transitions_csv(&table))
}

fn envelope_model(m: FitModel) -> EnvelopeModel {
    match m {
        FitModel::Exponential => EnvelopeModel::Exponential,
        FitModel::Gaussian => EnvelopeModel::Gaussian,
    }
}

fn echo<W: Write>(ctx: &mut Ctx<'_, W>, a: EchoArgs) -> Result<(), CliError> {
    let sys = resolve_system(&a.sim.system, a.b, ctx.file.system.as_ref());
    let bath = resolve_bath(&a.sim.bath, a.sim.g, a.sim.n_baths, ctx.file.bath.as_ref());
    let echo = resolve_echo(&a.sim, a.fit, ctx.file.echo.as_ref());
    let cfg = simulation_config(ctx.seed(), &sys, &bath, &echo)?;
    ctx.resolved.system = Some(sys);
    ctx.resolved.bath = Some(bath);
    ctx.resolved.echo = Some(echo.clone());
    if ctx.dry_run("echo")? {
        return Ok(());
    }
    let mut curve = with_workers(ctx.settings.threads, || ensemble_signal(&cfg))?;
    if let Some(model) = echo.fit {
        let period = larmor_frequency(cfg.b_field[2]).ok().and_then(|l| l.period);
        match fit_t2(&curve, envelope_model(model), period) {
            Ok(f) => {
                ctx.say(format_args!("T2 = {:.3} us ({} revivals fitted)", f.t2 * 1e6, f.revival_times.len()))?;
                curve.fit = Some(f);
            }
            Err(e) => ctx.say(format_args!("warning: no T2 fit: {e}"))?,
        }
    }
    let fit = curve.fit.clone();
    ctx.emit("echo", "echo", &curve, fit.as_ref(), || io::echo_csv(&curve))
}

#[derive(Serialize)]
struct ScanResult {
    schema_version: u32,
    b_gauss: Vec<f64>,
    /// seconds
    tau: Vec<f64>,
    /// `signal[k]` belongs to `b_gauss[k]`
    signal: Vec<Vec<f64>>,
}

fn scan<W: Write>(ctx: &mut Ctx<'_, W>, a: ScanArgs) -> Result<(), CliError> {
    let mut sys = resolve_system(&a.sim.system, None, ctx.file.system.as_ref());
    sys.b = None;
    let bath = resolve_bath(&a.sim.bath, a.sim.g, a.sim.n_baths, ctx.file.bath.as_ref());
    let mut echo = resolve_echo(&a.sim, None, ctx.file.echo.as_ref());
    echo.fit = None;
    let spec = a.b.or(ctx.file.scan.as_ref().and_then(|s| s.b.clone())).unwrap_or_else(|| "40:110:8".into());
    let fields = parse_field_list(&spec)?;
    let cfg = simulation_config(ctx.seed(), &sys, &bath, &echo)?;
    ctx.resolved.system = Some(sys);
    ctx.resolved.bath = Some(bath);
    ctx.resolved.echo = Some(echo);
    ctx.resolved.scan = Some(ScanSection { b: Some(spec) });
    if ctx.dry_run("scan")? {
        return Ok(());
    }
    let curves = with_workers(ctx.settings.threads, || field_scan(&cfg, &fields))?;
    let result = ScanResult {
        schema_version: SCHEMA_VERSION,
        b_gauss: fields.clone(),
        tau: cfg.tau_grid.clone(),
        signal: curves.iter().map(|c| c.signal.clone()).collect(),
    };
    ctx.emit("scan", "scan", &result, None, || io::scan_csv(&fields, &curves))
}

fn larmor<W: Write>(ctx: &mut Ctx<'_, W>, a: LarmorArgs) -> Result<(), CliError> {
    let sys = resolve_system(&a.system, a.b, ctx.file.system.as_ref());
    let mut bath = resolve_bath(&a.bath, None, None, ctx.file.bath.as_ref());
    bath.g = None;
    bath.n_baths = None;
    let fl = ctx.file.larmor.clone().unwrap_or_default();
    let bins = a.bins.or(fl.bins).unwrap_or_else(|| "fd".into());
    let index = a.bath_index.or(fl.bath_index).unwrap_or(0);
    let rule = parse_bins(&bins)?;
    let b = check_field(sys.b.unwrap_or(72.0))?;
    let central = central_spin(&sys)?;
    let m_i = match central {
        CentralSpin::P1 { .. } => match parse_nitrogen(sys.nitrogen.as_deref().unwrap_or("-1"))? {
            NitrogenState::Fixed { m_i } => Some(m_i as f64),
            NitrogenState::Thermal => {
                return Err(CliError::Config("larmor-dist needs a fixed nitrogen line (-1, 0 or 1)".into()))
            }
        },
        _ => None,
    };
    let params = bath_params(&bath)?;
    ctx.resolved.system = Some(sys);
    ctx.resolved.bath = Some(bath);
    ctx.resolved.larmor = Some(LarmorSection { bins: Some(bins), bath_index: Some(index) });
    if ctx.dry_run("larmor-dist")? {
        return Ok(());
    }
    let seed = child_seed(ctx.seed(), index);
    let spins = generate_bath(seed, &params).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut hist = larmor_distribution(&central, &spins.spins, &Vector3::new(0.0, 0.0, b), m_i, rule)?;
    hist.bath_seed = Some(seed);
    if !hist.flagged.is_empty() {
        ctx.say(format_args!("{} bath spins have an ambiguous manifold assignment", hist.flagged.len()))?;
    }
    ctx.emit("larmor-dist", "larmor", &hist, None, || io::larmor_csv(&hist))
}

#[derive(Serialize)]
struct StatsResult {
    schema_version: u32,
    density_cm3: f64,
    k: u32,
    mean_distance_nm: f64,
    angular_factor: f64,
    coupling_khz: f64,
    td_concentration_ppm: Option<f64>,
    larmor_hz: Option<f64>,
    larmor_period_us: Option<f64>,
}

fn stats<W: Write>(ctx: &mut Ctx<'_, W>, a: StatsArgs) -> Result<(), CliError> {
    let f = ctx.file.stats.clone().unwrap_or_default();
    let bad = |e: spinbath::analysis::StatsError| CliError::Config(e.to_string());
    // flags win as a pair, so `--density` overrides a `ppm` key in the file
    let (ppm, density) = match (a.ppm, a.density) {
        (None, None) => match (f.ppm, f.density) {
            (None, None) => (Some(0.2), None),
            pair => pair,
        },
        pair => pair,
    };
    let (angular, theta_deg) = match (a.angular, a.theta_deg) {
        (None, None) => match (f.angular, f.theta_deg) {
            (None, None) => (Some(0.5), None),
            pair => pair,
        },
        pair => pair,
    };
    if ppm.is_some() && density.is_some() {
        return Err(CliError::Config("give either ppm or density, not both".into()));
    }
    if angular.is_some() && theta_deg.is_some() {
        return Err(CliError::Config("give either angular or theta_deg, not both".into()));
    }
    let section = StatsSection {
        ppm,
        density,
        k: Some(a.k.or(f.k).unwrap_or(1)),
        angular,
        theta_deg,
        td_us: a.td_us.or(f.td_us),
        b: a.b.or(f.b),
    };
    ctx.resolved.stats = Some(section.clone());
    if ctx.dry_run("stats")? {
        return Ok(());
    }
    let n = density.unwrap_or_else(|| ppm_to_density_cm3(ppm.unwrap_or(0.2)));
    let k = section.k.unwrap_or(1);
    let r = mean_kth_distance(n, k).map_err(bad)?;
    let factor = match theta_deg {
        Some(t) => 1.0 - 3.0 * t.to_radians().cos().powi(2),
        None => angular.unwrap_or(0.5),
    };
    let coupling = mean_dipolar_coupling_factor(r, factor).map_err(bad)?;
    let td = section.td_us.map(|t| concentration_from_td(t * 1e-6)).transpose().map_err(bad)?;
    let larmor = section.b.map(larmor_frequency).transpose().map_err(bad)?;
    let res = StatsResult {
        schema_version: SCHEMA_VERSION,
        density_cm3: n,
        k,
        mean_distance_nm: r,
        angular_factor: factor,
        coupling_khz: coupling,
        td_concentration_ppm: td,
        larmor_hz: larmor.map(|l| l.freq),
        larmor_period_us: larmor.and_then(|l| l.period).map(|p| p * 1e6),
    };
    let mut rows = vec![
        ("density_cm3", res.density_cm3),
        ("k", k as f64),
        ("mean_distance_nm", r),
        ("angular_factor", factor),
        ("coupling_khz", coupling),
    ];
    rows.extend(td.map(|v| ("td_concentration_ppm", v)));
    rows.extend(res.larmor_hz.map(|v| ("larmor_hz", v)));
    rows.extend(res.larmor_period_us.map(|v| ("larmor_period_us", v)));
    for (q, v) in &rows {
        if v.abs() >= 1e6 {
            ctx.say(format_args!("{q} = {v:.6e}"))?;
        } else {
            ctx.say(format_args!("{q} = {v:.6}"))?;
        }
    }
    ctx.emit("stats", "stats", &res, None, || {
        let mut s = String::from("quantity,value\n");
        for (q, v) in &rows {
            s.push_str(&format!("{q},{}\n", io::float(*v)));
        }
        s
    })
}

#[derive(Serialize)]
struct ParsedSequence<'a> {
    schema_version: u32,
    canonical: String,
    pulse_count: usize,
    /// `None` when the program refers to an unresolved symbol such as `ts`.
    tau_coefficient: Option<f64>,
    fixed_time_s: Option<f64>,
    program: &'a PulseProgram,
}

fn parse<W: Write>(ctx: &mut Ctx<'_, W>, a: ParseArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.file)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", a.file.display())))?;
    let program = parse_sequence(&text).map_err(|e| CliError::Config(format!("{}: {e}", a.file.display())))?;
    let canonical = program.to_string();
    ctx.say(&canonical)?;
    if a.check || ctx.settings.dry_run {
        return Ok(());
    }
    let sched = compile_schedule(&program, 0.0).ok();
    let parsed = ParsedSequence {
        schema_version: SCHEMA_VERSION,
        pulse_count: program.pulse_count(),
        tau_coefficient: sched.as_ref().map(|s| s.tau_coefficient),
        fixed_time_s: sched.as_ref().map(|s| s.fixed_time),
        canonical,
        program: &program,
    };
    let text = json(&parsed)?;
    ctx.write("sequence.json", &text)
}
