//! Eigenstates of the central system with (m_S, m_I) labels.
//!
//! Each eigenvector is matched to one product basis state by maximising the
//! summed overlap over all one-to-one assignments. The assignment always
//! yields a complete, unique labelling even where states are strongly mixed;
//! `weight` records how much of the state the label actually describes.

use nalgebra::{DVector, Vector3};
use serde::Serialize;

use crate::hamiltonians::CentralSpin;
use crate::spin::{self, Eigensystem, SpinError, C64};

/// Threshold on the dominant |amplitude|² below which a state is "mixed".
pub const DOMINANT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Label {
    pub m_s: f64,
    /// ¹⁴N projection (P1 only).
    pub m_i: Option<f64>,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let frac = |m: f64| -> String {
            if (m.fract()).abs() > 0.25 {
                format!("{}{}/2", if m < 0.0 { "-" } else { "+" }, (2.0 * m.abs()).round() as i64)
            } else if m == 0.0 {
                "0".to_string()
            } else {
                format!("{:+}", m.round() as i64)
            }
        };
        match self.m_i {
            Some(mi) => write!(f, "|{},{}>", frac(self.m_s), frac(mi)),
            None => write!(f, "|{}>", frac(self.m_s)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CentralLevel {
    /// Hz
    pub energy: f64,
    pub vector: DVector<C64>,
    /// Product basis state assigned to this eigenvector.
    pub label: Label,
    /// |amplitude|² of the assigned basis state.
    pub weight: f64,
    /// Largest single |amplitude|² and its label.
    pub dominant: Label,
    pub dominant_weight: f64,
}

impl CentralLevel {
    /// Dominant label, or `None` when no basis state exceeds the threshold.
    pub fn dominant_label(&self) -> Option<Label> {
        (self.dominant_weight > DOMINANT_THRESHOLD).then_some(self.dominant)
    }
}

/// Label of product basis index `k` of the central system.
pub fn basis_label(central: &CentralSpin, k: usize) -> Label {
    match central {
        CentralSpin::P1 { .. } => {
            Label { m_s: spin::spin_half().m_of(k / 3), m_i: Some(spin::spin_one().m_of(k % 3)) }
        }
        CentralSpin::Nv { .. } => Label { m_s: spin::spin_one().m_of(k), m_i: None },
        CentralSpin::BareElectron { .. } => Label { m_s: spin::spin_half().m_of(k), m_i: None },
    }
}

/// Permutation maximising Σ_k w[k][perm[k]]. Exhaustive; the central
/// systems have at most six levels.
pub fn best_assignment(w: &[Vec<f64>]) -> Vec<usize> {
    fn recurse(
        w: &[Vec<f64>],
        row: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        score: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        if row == w.len() {
            if score > best.0 + 1e-12 {
                *best = (score, cur.clone());
            }
            return;
        }
        for col in 0..w.len() {
            if !used[col] {
                used[col] = true;
                cur.push(col);
                recurse(w, row + 1, used, cur, score + w[row][col], best);
                cur.pop();
                used[col] = false;
            }
        }
    }
    let n = w.len();
    let mut best = (f64::NEG_INFINITY, (0..n).collect());
    recurse(w, 0, &mut vec![false; n], &mut Vec::with_capacity(n), 0.0, &mut best);
    best.1
}

/// Energy-ordered labelled eigenstates of the central system at field `b` (G).
pub fn central_levels(central: &CentralSpin, b: &Vector3<f64>) -> Result<Vec<CentralLevel>, SpinError> {
    let eig = Eigensystem::new(&central.hamiltonian(b))?;
    let n = eig.dim();
    let weights: Vec<Vec<f64>> =
        (0..n).map(|k| (0..n).map(|i| eig.vectors[(i, k)].norm_sqr()).collect()).collect();
    let assign = best_assignment(&weights);
    Ok((0..n)
        .map(|k| {
            let (dom, dom_w) = weights[k]
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc });
            CentralLevel {
                energy: eig.values[k],
                vector: eig.vectors.column(k).into_owned(),
                label: basis_label(central, assign[k]),
                weight: weights[k][assign[k]],
                dominant: basis_label(central, dom),
                dominant_weight: dom_w,
            }
        })
        .collect())
}

/// Find the level assigned to `(m_s, m_i)`.
pub fn find_level(levels: &[CentralLevel], m_s: f64, m_i: Option<f64>) -> Option<&CentralLevel> {
    levels.iter().find(|l| {
        (l.label.m_s - m_s).abs() < 1e-9
            && match (l.label.m_i, m_i) {
                (Some(a), Some(b)) => (a - b).abs() < 1e-9,
                (None, None) => true,
                _ => false,
            }
    })
}
