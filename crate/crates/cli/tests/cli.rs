use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

/// Small bath so each echo run takes well under a second.
const SMALL: [&str; 4] = ["--spins", "20", "--n-baths", "2"];

fn spinbath(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinbath"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("SPINBATH_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = spinbath(args, out);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Column `col` of a CSV with a header row.
fn column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

fn variance(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

#[test]
fn echo_runs_are_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = [&["echo", "--central", "p1", "--b", "72", "--tau", "0:40us:200", "--seed", "7"][..], &SMALL].concat();
    ok(&args, a.path());
    ok(&args, b.path());
    for name in ["echo.csv", "echo.meta.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let csv = read(a.path(), "echo.csv");
    assert!(csv.starts_with("tau_us,signal\n") && !csv.contains('\r'));
    assert_eq!(csv.lines().count(), 201);
    assert_eq!(json(a.path(), "echo.meta.json")["config"]["seed"], 7);
}

#[test]
fn worker_count_does_not_change_output() {
    let (one, four) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let base = [&["echo", "--tau", "0:30us:61", "--format", "json", "--per-bath"][..], &SMALL].concat();
    ok(&[&base[..], &["--threads", "1"]].concat(), one.path());
    ok(&[&base[..], &["--threads", "4"]].concat(), four.path());
    assert_eq!(read(one.path(), "echo.json"), read(four.path(), "echo.json"));
    let scan = [&["scan", "--b", "47,72", "--tau", "0:20us:21"][..], &SMALL].concat();
    ok(&[&scan[..], &["--threads", "1"]].concat(), one.path());
    ok(&[&scan[..], &["--threads", "4"]].concat(), four.path());
    assert_eq!(read(one.path(), "scan.csv"), read(four.path(), "scan.csv"));
}

#[test]
fn negative_field_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = spinbath(&["spectrum", "--b", "-5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("field must be ≥ 0"));
    assert_eq!(spinbath(&["echo", "--b", "-1"], dir.path()).status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "nothing is written on error");
}

#[test]
fn empty_field_list_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = spinbath(&["scan", "--b", ""], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("field list is empty"));
    assert_eq!(spinbath(&["scan", "--b", "40:110:0"], dir.path()).status.code(), Some(2));
}

#[test]
fn bad_values_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["echo", "--tau", "5:1:3"][..],
        &["echo", "--sequence", "pi(z)"],
        &["echo", "--sequence", "deer"],
        &["echo", "--jt", "sideways"],
        &["echo", "--nitrogen", "thermal", "--g", "0"],
        &["stats", "--ppm", "-1"],
        &["larmor-dist", "--bins", "0"],
        &["no-such-command"],
    ] {
        assert_eq!(spinbath(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn stats_nearest_distance() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["stats", "--ppm", "0.2", "--k", "1"], dir.path());
    assert!(stdout.contains("mean_distance_nm = 16.9"), "{stdout}");
    let csv = read(dir.path(), "stats.csv");
    let r: f64 = csv.lines().find(|l| l.starts_with("mean_distance_nm,")).unwrap()[17..].parse().unwrap();
    assert!((r - 16.9).abs() < 0.2, "{r}");
    ok(&["stats", "--td-us", "70", "--format", "json"], dir.path());
    assert_eq!(json(dir.path(), "stats.json")["result"]["td_concentration_ppm"], 0.2);
}

#[test]
fn parse_check_prints_the_canonical_form() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("hahn.seq");
    fs::write(&seq, "PI/2(X)  -tau-\n  pi(x) - TAU - pi/2(x)\n").unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&["parse", "--check", seq.to_str().unwrap()], &out);
    assert_eq!(stdout, "pi/2(x) - tau - pi(x) - tau - pi/2(x)\n");
    assert!(!out.exists());
    ok(&["parse", seq.to_str().unwrap()], &out);
    let v = json(&out, "sequence.json");
    assert_eq!(v["pulse_count"], 3);
    assert_eq!(v["tau_coefficient"], 2.0);

    fs::write(&seq, "pi/2(x) - tau - pi(q)").unwrap();
    let o = spinbath(&["parse", "--check", seq.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown axis 'q' at 1:20"));
}

#[test]
fn spectrum_at_32_gauss_has_the_90_mhz_nuclear_line() {
    let dir = TempDir::new().unwrap();
    ok(&["spectrum", "--b", "32"], dir.path());
    let csv = read(dir.path(), "spectrum.csv");
    assert!(csv.starts_with("jt,freq_mhz,from,to,kind,moment,mixing\n"));
    let hit = csv.lines().skip(1).any(|l| {
        let f: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        l.contains(",nuclear,") && (f - 90.0).abs() < 2.0
    });
    assert!(hit, "{csv}");
    for jt in ["on-axis", "off-axis-1", "off-axis-2", "off-axis-3"] {
        assert!(csv.lines().any(|l| l.starts_with(&format!("{jt},"))), "{jt}");
    }
}

#[test]
fn spectrum_jt_filter_and_json() {
    let dir = TempDir::new().unwrap();
    ok(&["spectrum", "--b", "72", "--jt", "off-axis", "--format", "json"], dir.path());
    let v = json(dir.path(), "spectrum.json");
    assert_eq!(v["schema_version"], 1);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["jt"] == "off-axis-1"));
    let line = |kind: &str, lo: f64, hi: f64| {
        rows.iter().any(|r| r["kind"] == kind && (lo..hi).contains(&r["freq"].as_f64().unwrap()))
    };
    assert!(line("nuclear", 66.0, 70.0));
    // the strong electron line sits near 142 MHz in this model
    assert!(line("electron", 140.0, 146.0));
}

#[test]
fn nv_branch_at_zero_is_narrow() {
    let dir = TempDir::new().unwrap();
    ok(&["larmor-dist", "--central", "nv", "--b", "72", "--format", "json"], dir.path());
    let v = json(dir.path(), "larmor.json");
    let branches = v["result"]["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 2);
    let freqs = |k: usize| -> Vec<f64> {
        branches[k]["frequencies"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    assert_eq!(branches[0]["m_s"], 0.0);
    assert!(variance(&freqs(0)) < variance(&freqs(1)) / 10.0);
    let counts: u64 = branches[1]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 125);
}

#[test]
fn larmor_bath_matches_the_echo_ensemble_seed() {
    let dir = TempDir::new().unwrap();
    ok(&["larmor-dist", "--seed", "7", "--bath-index", "1", "--spins", "30", "--bins", "8"], dir.path());
    let csv = read(dir.path(), "larmor.csv");
    assert!(csv.starts_with("bin_lo_hz,bin_hi_hz,count_ms_+1/2,count_ms_-1/2\n"), "{csv}");
    assert_eq!(csv.lines().count(), 9);
    let meta = json(dir.path(), "larmor.meta.json");
    assert_eq!(meta["config"]["larmor"]["bath_index"], 1);
}

#[test]
fn single_field_scan_equals_echo() {
    let dir = TempDir::new().unwrap();
    let common = [&["--tau", "0:30us:31", "--seed", "3"][..], &SMALL].concat();
    ok(&[&["scan", "--b", "72"][..], &common].concat(), dir.path());
    ok(&[&["echo", "--b", "72"][..], &common].concat(), dir.path());
    let scan = read(dir.path(), "scan.csv");
    let echo = read(dir.path(), "echo.csv");
    assert!(scan.starts_with("b_gauss,tau_us,signal\n"));
    let scan_rows: Vec<&str> = scan.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    let echo_rows: Vec<&str> = echo.lines().skip(1).collect();
    assert_eq!(scan_rows, echo_rows);
}

#[test]
fn scan_is_long_format_over_the_field_range() {
    let dir = TempDir::new().unwrap();
    ok(&[&["scan", "--b", "40:110:8", "--tau", "0:20us:11"][..], &["--spins", "5", "--n-baths", "1"]].concat(), dir.path());
    let csv = read(dir.path(), "scan.csv");
    let b = column(&csv, 0);
    assert_eq!(b.len(), 88);
    assert_eq!(b[0], 40.0);
    assert_eq!(b[87], 110.0);
    assert_eq!(b[11], 50.0);
}

#[test]
fn nv_revives_higher_than_p1() {
    let dir = TempDir::new().unwrap();
    let common = [&["--b", "72", "--tau", "0:40us:200", "--seed", "7"][..], &["--spins", "30", "--n-baths", "3"]].concat();
    let nv_dir = dir.path().join("nv");
    ok(&[&["echo", "--central", "nv"][..], &common].concat(), &nv_dir);
    ok(&[&["echo", "--central", "p1"][..], &common].concat(), dir.path());
    let nv = read(&nv_dir, "echo.csv");
    let p1 = read(dir.path(), "echo.csv");
    let (tau, s_nv, s_p1) = (column(&nv, 0), column(&nv, 1), column(&p1, 1));
    // NV maximum in the first revival window
    let window: Vec<usize> = (0..tau.len()).filter(|&i| (10.0..16.0).contains(&tau[i])).collect();
    let best = *window.iter().max_by(|&&i, &&j| s_nv[i].total_cmp(&s_nv[j])).unwrap();
    assert!((tau[best] - 12.96).abs() < 0.03 * 12.96, "NV revival at {}", tau[best]);
    let p1_best = window.iter().map(|&i| s_p1[i]).fold(f64::MIN, f64::max);
    assert!(s_nv[best] > p1_best, "NV {} vs P1 {}", s_nv[best], p1_best);
}

#[test]
fn xy8_sequence_is_compiled() {
    let dir = TempDir::new().unwrap();
    ok(&[&["echo", "--sequence", "xy8", "--n", "1", "--tau", "0:5us:6", "--format", "json"][..], &SMALL].concat(), dir.path());
    let v = json(dir.path(), "echo.json");
    assert_eq!(v["result"]["config"]["sequence"]["metadata"]["name"], "xy8-1");
    assert_eq!(v["config"]["echo"]["sequence"], "xy8");
    let s = v["result"]["signal"].as_array().unwrap();
    assert_eq!(s.len(), 6);
    assert!((s[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn config_file_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 3\n[system]\nb = 47.0\ncentral = \"nv\"\n[bath]\nspins = 10\n[echo]\ntau = \"0:10us:11\"\n").unwrap();
    let stdout = ok(&["echo", "--dry-run", "--config", cfg.to_str().unwrap(), "--b", "60"], dir.path());
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let c = &v["config"];
    assert_eq!(c["system"]["b"], 60.0, "flag beats file");
    assert_eq!(c["system"]["central"], "nv", "file beats default");
    assert_eq!(c["seed"], 3);
    assert_eq!(c["bath"]["spins"], 10);
    assert_eq!(c["bath"]["g"], 3, "default");
    assert!(c["system"].get("jt").is_none(), "P1-only keys are dropped for NV");
    assert_eq!(v["constants"]["gamma_c13_hz_per_g"], 1071.5);
    assert!(fs::read_dir(dir.path()).unwrap().count() == 1, "dry run writes nothing");

    fs::write(&cfg, "[bath]\nspinz = 3\n").unwrap();
    assert_eq!(spinbath(&["echo", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn output_dir_falls_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_spinbath"))
        .args(["stats", "--ppm", "0.2"])
        .env("SPINBATH_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("stats.csv").exists());
}

#[test]
fn dump_constants_is_json() {
    let dir = TempDir::new().unwrap();
    let v: Value = serde_json::from_str(&ok(&["dump-constants"], dir.path())).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["gamma_e_mhz_per_g"], -2.8);
    assert_eq!(v["zeeman_sign_convention"], "H_Z = -gamma * B . S");
}
