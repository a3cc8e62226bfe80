use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::bath::BathSpin;
use crate::dynamics::{CentralModel, DynamicsError};
use crate::hamiltonians::{build_system_hamiltonian, CentralSpin, SystemOptions};
use crate::spin::Eigensystem;

/// Minimum weight of an eigenstate on its central level before the spin is
/// flagged as ambiguous.
pub const MANIFOLD_WEIGHT_MIN: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Binning {
    #[default]
    FreedmanDiaconis,
    Count { bins: usize },
    Width { hz: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct LarmorBranch {
    /// Electron projection of the branch.
    pub m_s: f64,
    /// Hz, one entry per bath spin.
    pub frequencies: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LarmorHistogram {
    pub schema_version: u32,
    /// Hz
    pub bin_edges: Vec<f64>,
    pub branches: Vec<LarmorBranch>,
    /// Indices of bath spins whose manifold assignment was ambiguous.
    pub flagged: Vec<usize>,
    /// γ_13C·|B|, Hz
    pub bare_larmor: f64,
    pub bath_seed: Option<u64>,
}

/// Nuclear splittings of one ¹³C in each of the two driven electron levels.
/// Returns `(ω_a, ω_b, ambiguous)` in Hz.
pub fn conditional_larmor(model: &CentralModel, spin: &BathSpin) -> Result<(f64, f64, bool), DynamicsError> {
    let sys = build_system_hamiltonian(&model.central, std::slice::from_ref(spin), &model.b_field, SystemOptions::default())?;
    let eig = Eigensystem::new(&sys.matrix)?;
    let mut ambiguous = false;
    let mut split = |level: &crate::levels::CentralLevel| -> f64 {
        // weight of each eigenstate on |level⟩ ⊗ (¹³C up or down)
        let mut w: Vec<(f64, usize)> = (0..eig.dim())
            .map(|k| {
                let col = eig.vectors.column(k);
                let weight: f64 = (0..2)
                    .map(|n| {
                        let amp: crate::spin::C64 =
                            (0..level.vector.len()).map(|p| level.vector[p].conj() * col[p * 2 + n]).sum();
                        amp.norm_sqr()
                    })
                    .sum();
                (weight, k)
            })
            .collect();
        w.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        if w[1].0 < MANIFOLD_WEIGHT_MIN {
            ambiguous = true;
        }
        (eig.values[w[0].1] - eig.values[w[1].1]).abs()
    };
    let wa = split(&model.level_a);
    let wb = split(&model.level_b);
    Ok((wa, wb, ambiguous))
}

/// Bin edges shared by all branches.
pub fn bin_edges(values: &[f64], rule: Binning) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return Vec::new();
    }
    let span = hi - lo;
    let nbins = match rule {
        Binning::Count { bins } => bins.max(1),
        Binning::Width { hz } if hz > 0.0 => ((span / hz).ceil() as usize).max(1),
        Binning::Width { .. } => 1,
        Binning::FreedmanDiaconis => {
            let mut data = Data::new(values.to_vec());
            let iqr = data.upper_quartile() - data.lower_quartile();
            let width = 2.0 * iqr / (values.len() as f64).cbrt();
            if width > 0.0 && span > 0.0 {
                ((span / width).ceil() as usize).clamp(1, 10_000)
            } else {
                1
            }
        }
    };
    if span == 0.0 {
        return vec![lo - 0.5, hi + 0.5];
    }
    let step = match rule {
        Binning::Width { hz } if hz > 0.0 => hz,
        _ => span / nbins as f64,
    };
    (0..=nbins).map(|k| lo + step * k as f64).collect()
}

/// Counts per bin; the last bin is closed on the right.
pub fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    if edges.len() < 2 {
        return Vec::new();
    }
    let nb = edges.len() - 1;
    let mut counts = vec![0; nb];
    for &v in values {
        if v < edges[0] || v > edges[nb] {
            continue;
        }
        let k = edges.partition_point(|&e| e <= v).saturating_sub(1).min(nb - 1);
        counts[k] += 1;
    }
    counts
}

/// Conditional ¹³C precession frequencies of every bath spin, for the two
/// driven central levels (P1: m_S = ±1/2 of the chosen ¹⁴N line; NV: 0, −1).
pub fn larmor_distribution(
    central: &CentralSpin,
    spins: &[BathSpin],
    b: &Vector3<f64>,
    m_i: Option<f64>,
    rule: Binning,
) -> Result<LarmorHistogram, DynamicsError> {
    if spins.is_empty() {
        return Err(DynamicsError::InvalidConfig("bath is empty".into()));
    }
    let model = CentralModel::new(central, b, m_i)?;
    let mut fa = Vec::with_capacity(spins.len());
    let mut fb = Vec::with_capacity(spins.len());
    let mut flagged = Vec::new();
    for (i, s) in spins.iter().enumerate() {
        let (wa, wb, amb) = conditional_larmor(&model, s)?;
        fa.push(wa);
        fb.push(wb);
        if amb {
            flagged.push(i);
        }
    }
    let all: Vec<f64> = fa.iter().chain(fb.iter()).copied().collect();
    let edges = bin_edges(&all, rule);
    let branch = |m_s: f64, f: Vec<f64>| LarmorBranch { m_s, counts: histogram(&f, &edges), frequencies: f };
    Ok(LarmorHistogram {
        schema_version: crate::SCHEMA_VERSION,
        branches: vec![branch(model.level_a.label.m_s, fa), branch(model.level_b.label.m_s, fb)],
        bin_edges: edges,
        flagged,
        bare_larmor: crate::constants::GAMMA_C13_HZ_PER_G * b.norm(),
        bath_seed: None,
    })
}
