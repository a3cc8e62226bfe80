use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::EchoCurve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 revivals or 5 curve points, got {0} points")]
    InsufficientData(usize),
    #[error("singular fit: {0}")]
    Singular(String),
    #[error("expected period must be positive, got {0}")]
    BadPeriod(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeModel {
    /// exp(−τ/T₂)
    Exponential,
    /// exp(−(τ/T₂)²)
    Gaussian,
}

impl EnvelopeModel {
    pub fn eval(self, tau: f64, t2: f64) -> f64 {
        match self {
            EnvelopeModel::Exponential => (-tau / t2).exp(),
            EnvelopeModel::Gaussian => (-(tau / t2).powi(2)).exp(),
        }
    }

    fn power(self) -> i32 {
        match self {
            EnvelopeModel::Exponential => 1,
            EnvelopeModel::Gaussian => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Revival {
    pub n: u32,
    /// seconds
    pub time: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Revivals {
    pub found: Vec<Revival>,
    /// Windows without an interior maximum.
    pub missing: Vec<u32>,
}

impl Revivals {
    pub fn times(&self) -> Vec<f64> {
        self.found.iter().map(|r| r.time).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// seconds, on the per-arm τ axis
    pub t2: f64,
    pub model: EnvelopeModel,
    /// √Σ residual²
    pub residual_norm: f64,
    pub revival_times: Vec<f64>,
    /// Whether revival maxima (rather than the whole curve) were fitted.
    pub from_revivals: bool,
}

/// Vertex of the parabola through three points. Falls back to the middle
/// point when they are collinear.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if a >= 0.0 || !a.is_finite() {
        return (x[1], y[1]);
    }
    let b = d1 - a * (x[0] + x[1]);
    let xv = -b / (2.0 * a);
    let xv = xv.clamp(x[0], x[2]);
    // Newton form: y(x) = y0 + d1 (x − x0) + a (x − x0)(x − x1)
    (xv, y[0] + d1 * (xv - x[0]) + a * (xv - x[0]) * (xv - x[1]))
}

/// Local maxima near `n · period` for n = 1, 2, … within the sampled range.
///
/// Window n covers `[n − 0.4, n + 0.4]·period`; its largest sample must be a
/// local maximum with a neighbour on each side inside the window. The peak
/// is refined by quadratic interpolation.
pub fn detect_revivals_in(tau: &[f64], signal: &[f64], period: f64) -> Result<Revivals, FitError> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(FitError::BadPeriod(period));
    }
    let mut out = Revivals::default();
    let Some(&t_max) = tau.last() else {
        return Ok(out);
    };
    let mut n = 1u32;
    while n as f64 * period <= t_max {
        let lo = (n as f64 - 0.4) * period;
        let hi = (n as f64 + 0.4) * period;
        let idx: Vec<usize> = (0..tau.len()).filter(|&k| tau[k] >= lo && tau[k] <= hi).collect();
        let best = idx.iter().copied().max_by(|&a, &b| signal[a].total_cmp(&signal[b]).then(b.cmp(&a)));
        match best {
            Some(k) if k > idx[0] && k < *idx.last().unwrap() && signal[k] > signal[k - 1].min(signal[k + 1]) => {
                let (t, a) = parabola_vertex(
                    [tau[k - 1], tau[k], tau[k + 1]],
                    [signal[k - 1], signal[k], signal[k + 1]],
                );
                out.found.push(Revival { n, time: t, amplitude: a });
            }
            _ => out.missing.push(n),
        }
        n += 1;
    }
    Ok(out)
}

pub fn detect_revivals(curve: &EchoCurve, period: f64) -> Result<Revivals, FitError> {
    detect_revivals_in(&curve.tau, &curve.signal, period)
}

/// One-parameter least squares of `y ≈ envelope(x; T₂)`.
pub fn fit_envelope(x: &[f64], y: &[f64], model: EnvelopeModel) -> Result<(f64, f64), FitError> {
    let p = model.power();
    // log-linear start: −ln y = k^p x^p, k = 1/T₂
    let (mut num, mut den) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        if yi > 0.0 && yi < 1.0 && xi > 0.0 {
            let xp = xi.powi(p);
            num += xp * (-yi.ln());
            den += xp * xp;
        }
    }
    if den == 0.0 || num <= 0.0 {
        return Err(FitError::Singular("no decay in the data".into()));
    }
    let mut k = (num / den).powf(1.0 / p as f64);
    let sse = |k: f64| -> f64 {
        x.iter().zip(y).map(|(&xi, &yi)| (yi - (-(k * xi).powi(p)).exp()).powi(2)).sum()
    };
    // Gauss–Newton in k with step halving
    for _ in 0..100 {
        let (mut jtj, mut jtr) = (0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            let u = (k * xi).powi(p);
            let f = (-u).exp();
            // df/dk = −p u/k f
            let j = -(p as f64) * u / k * f;
            jtj += j * j;
            jtr += j * (yi - f);
        }
        if jtj <= 0.0 || !jtj.is_finite() {
            return Err(FitError::Singular("vanishing Jacobian".into()));
        }
        let mut step = jtr / jtj;
        let base = sse(k);
        while k + step <= 0.0 || sse(k + step) > base {
            step *= 0.5;
            if step.abs() < 1e-16 * k {
                step = 0.0;
                break;
            }
        }
        k += step;
        if step.abs() <= 1e-12 * k {
            break;
        }
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(FitError::Singular("non-positive decay rate".into()));
    }
    Ok((1.0 / k, sse(k).sqrt()))
}

/// Fit T₂ to revival maxima when `period` is given and at least three
/// revivals are found; otherwise to the whole curve.
pub fn fit_t2_in(
    tau: &[f64],
    signal: &[f64],
    model: EnvelopeModel,
    period: Option<f64>,
) -> Result<FitResult, FitError> {
    if let Some(p) = period {
        let rev = detect_revivals_in(tau, signal, p)?;
        if rev.found.len() >= 3 {
            let x: Vec<f64> = rev.found.iter().map(|r| r.time).collect();
            let y: Vec<f64> = rev.found.iter().map(|r| r.amplitude).collect();
            let (t2, residual_norm) = fit_envelope(&x, &y, model)?;
            return Ok(FitResult { t2, model, residual_norm, revival_times: x, from_revivals: true });
        }
    }
    if tau.len() < 5 {
        return Err(FitError::InsufficientData(tau.len()));
    }
    let (t2, residual_norm) = fit_envelope(tau, signal, model)?;
    Ok(FitResult { t2, model, residual_norm, revival_times: Vec::new(), from_revivals: false })
}

pub fn fit_t2(curve: &EchoCurve, model: EnvelopeModel, period: Option<f64>) -> Result<FitResult, FitError> {
    fit_t2_in(&curve.tau, &curve.signal, model, period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn synthetic_cos_squared_revivals() {
        let tl = 12.96e-6;
        let tau = grid(1001, 0.05e-6);
        let s: Vec<f64> = tau.iter().map(|t| (PI * t / tl).cos().powi(2)).collect();
        let r = detect_revivals_in(&tau, &s, tl).unwrap();
        assert_eq!(r.found.len(), 3);
        for rv in &r.found {
            assert!((rv.time - rv.n as f64 * tl).abs() < 1e-3 * tl, "{rv:?}");
        }
    }

    #[test]
    fn monotone_decay_has_no_revivals() {
        let tau = grid(500, 0.1e-6);
        let s: Vec<f64> = tau.iter().map(|t| (-t / 10e-6).exp()).collect();
        let r = detect_revivals_in(&tau, &s, 5e-6).unwrap();
        assert!(r.found.is_empty());
        assert!(!r.missing.is_empty());
    }

    #[test]
    fn exponential_self_consistency() {
        let tau = grid(200, 0.5e-6);
        let s: Vec<f64> = tau.iter().map(|t| (-t / 30e-6).exp()).collect();
        let f = fit_t2_in(&tau, &s, EnvelopeModel::Exponential, None).unwrap();
        assert!((f.t2 - 30e-6).abs() < 0.01 * 30e-6, "{}", f.t2);
        assert!(f.residual_norm < 1e-9);
        let g: Vec<f64> = tau.iter().map(|t| (-(t / 40e-6).powi(2)).exp()).collect();
        let f = fit_t2_in(&tau, &g, EnvelopeModel::Gaussian, None).unwrap();
        assert!((f.t2 - 40e-6).abs() < 1e-3 * 40e-6);
    }

    #[test]
    fn revival_envelope_fit() {
        let tl = 10e-6;
        let tau = grid(1201, 0.05e-6);
        let s: Vec<f64> =
            tau.iter().map(|t| (-t / 25e-6).exp() * (0.5 + 0.5 * (2.0 * PI * t / tl).cos())).collect();
        let f = fit_t2_in(&tau, &s, EnvelopeModel::Exponential, Some(tl)).unwrap();
        assert!(f.from_revivals);
        // the sixth window is cut by the end of the grid
        assert_eq!(f.revival_times.len(), 5);
        assert!((f.t2 - 25e-6).abs() < 0.02 * 25e-6, "{}", f.t2);
    }

    #[test]
    fn flat_data_is_singular() {
        let tau = grid(20, 1e-6);
        let s = vec![1.0; 20];
        assert!(matches!(fit_t2_in(&tau, &s, EnvelopeModel::Exponential, None), Err(FitError::Singular(_))));
        assert!(matches!(
            fit_t2_in(&tau[..3], &s[..3], EnvelopeModel::Exponential, None),
            Err(FitError::InsufficientData(3))
        ));
    }

    #[test]
    fn vertex() {
        // y = 1 + 1.5x − 0.5x²
        let (x, y) = parabola_vertex([0.0, 1.0, 2.0], [1.0, 2.0, 2.0]);
        assert!((x - 1.5).abs() < 1e-12);
        assert!((y - 2.125).abs() < 1e-12);
    }
}
