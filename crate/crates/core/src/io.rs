//! CSV and JSON emission.
//!
//! CSV files carry a header row, LF line endings and floats with 17
//! significant digits, so identical inputs give byte-identical files.
//! Column names:
//!
//! | file | columns |
//! |------|---------|
//! | echo | `tau_us, signal[, bath_0, bath_1, ...]` |
//! | scan | `b_gauss, tau_us, signal` (long format) |
//! | transitions | `jt, freq_mhz, from, to, kind, moment, mixing` |
//! | larmor | `bin_lo_hz, bin_hi_hz, count_ms_<a>, count_ms_<b>` |

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{LarmorHistogram, TransitionTable};
use crate::dynamics::EchoCurve;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory CSV writer. Cells that contain commas or quotes are quoted.
struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = Table(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new()));
        t.row(header);
        t
    }

    fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let cells = cells.iter().map(|c| c.as_ref().as_bytes());
        self.0.write_record(cells).expect("writing to memory");
    }

    fn finish(self) -> String {
        let bytes = self.0.into_inner().expect("flushing to memory");
        String::from_utf8(bytes).expect("cells are UTF-8")
    }
}

pub fn echo_csv(curve: &EchoCurve) -> String {
    let mut header = vec!["tau_us".to_string(), "signal".to_string()];
    let per_bath = curve.per_bath.as_deref().unwrap_or(&[]);
    header.extend((0..per_bath.len()).map(|k| format!("bath_{k}")));
    let mut t = Table::new(&header);
    for (i, (&tau, &s)) in curve.tau.iter().zip(&curve.signal).enumerate() {
        let mut cells = vec![float(tau * 1e6), float(s)];
        cells.extend(per_bath.iter().map(|b| float(b[i])));
        t.row(&cells);
    }
    t.finish()
}

/// Long-format field scan; `fields[k]` is the |B| of `curves[k]` in G.
pub fn scan_csv(fields: &[f64], curves: &[EchoCurve]) -> String {
    let mut t = Table::new(&["b_gauss", "tau_us", "signal"]);
    for (b, c) in fields.iter().zip(curves) {
        for (&tau, &s) in c.tau.iter().zip(&c.signal) {
            t.row(&[float(*b), float(tau * 1e6), float(s)]);
        }
    }
    t.finish()
}

pub fn transitions_csv(table: &TransitionTable) -> String {
    let mut t = Table::new(&["jt", "freq_mhz", "from", "to", "kind", "moment", "mixing"]);
    let label = |l: Option<crate::levels::Label>| l.map(|l| l.to_string()).unwrap_or_else(|| "mixed".into());
    for r in &table.rows {
        t.row(&[
            r.jt.map(|j| j.as_str().to_string()).unwrap_or_default(),
            float(r.freq),
            label(r.from_label),
            label(r.to_label),
            r.kind.as_str().to_string(),
            float(r.moment),
            float(r.mixing),
        ]);
    }
    t.finish()
}

pub fn larmor_csv(hist: &LarmorHistogram) -> String {
    let mut header = vec!["bin_lo_hz".to_string(), "bin_hi_hz".to_string()];
    for b in &hist.branches {
        let m = crate::levels::Label { m_s: b.m_s, m_i: None }.to_string();
        header.push(format!("count_ms_{}", m.trim_matches(['|', '>'])));
    }
    let mut t = Table::new(&header);
    for k in 0..hist.bin_edges.len().saturating_sub(1) {
        let mut cells = vec![float(hist.bin_edges[k]), float(hist.bin_edges[k + 1])];
        cells.extend(hist.branches.iter().map(|b| b.counts[k].to_string()));
        t.row(&cells);
    }
    t.finish()
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Write `contents`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)
}
