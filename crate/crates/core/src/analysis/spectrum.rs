use nalgebra::{DVector, Vector3};
use serde::Serialize;

use crate::constants::{GAMMA_N14_HZ_PER_G, HZ_PER_MHZ};
use crate::hamiltonians::{CentralSpin, JtLabel, JtOrientation};
use crate::levels::{central_levels, CentralLevel, Label};
use crate::spin::{self, c, embed, CMatrix, CompositeSpace, SpinError, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionKind {
    Electron,
    Nuclear,
    DoubleQuantum,
    Hybridized,
}

impl TransitionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::Electron => "electron",
            TransitionKind::Nuclear => "nuclear",
            TransitionKind::DoubleQuantum => "double-quantum",
            TransitionKind::Hybridized => "hybridized",
        }
    }

    /// Classify by the dominant labels of the two states; `None` means mixed.
    pub fn classify(from: Option<Label>, to: Option<Label>) -> Self {
        let (Some(a), Some(b)) = (from, to) else {
            return TransitionKind::Hybridized;
        };
        let dms = (a.m_s - b.m_s).abs() > 1e-9;
        let dmi = match (a.m_i, b.m_i) {
            (Some(x), Some(y)) => (x - y).abs() > 1e-9,
            _ => false,
        };
        match (dms, dmi) {
            (false, true) => TransitionKind::Nuclear,
            (true, false) => TransitionKind::Electron,
            (true, true) => TransitionKind::DoubleQuantum,
            // distinct eigenstates with identical dominant labels
            (false, false) => TransitionKind::Hybridized,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionRow {
    pub jt: Option<JtLabel>,
    /// MHz
    pub freq: f64,
    /// Dominant label of the lower state; `None` when mixed.
    pub from_label: Option<Label>,
    pub to_label: Option<Label>,
    pub kind: TransitionKind,
    /// Drive strength relative to the strongest electron row of the table.
    pub moment: f64,
    /// `1 −` the smaller dominant weight of the two states.
    pub mixing: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionTable {
    pub schema_version: u32,
    pub central: &'static str,
    /// G
    pub b_field: [f64; 3],
    pub rows: Vec<TransitionRow>,
}

/// Transverse drive operator `γ_e S_x + γ_N I_x` (Hz/G) on the central space.
fn drive_operator(central: &CentralSpin) -> CMatrix {
    let space = CompositeSpace::new(central.slots());
    let e = central.electron_ops();
    let mut op = embed(&e.sx, 0, &space).expect("electron slot") * c(central.gamma_e_hz(), 0.0);
    if let CentralSpin::P1 { params, .. } = central {
        op += embed(&spin::spin_one().sx, 1, &space).expect("nitrogen slot") * c(params.gamma_n14, 0.0);
    }
    op
}

fn raw_moment(op: &CMatrix, i: &DVector<C64>, f: &DVector<C64>) -> f64 {
    (f.adjoint() * op * i)[(0, 0)].norm()
}

/// Drive strength of `i → f` relative to a bare spin-1/2 electron flip
/// (`|γ_e|/2`). Eigenvectors are in the P1 product basis [electron, ¹⁴N].
pub fn transition_moment(i: &DVector<C64>, f: &DVector<C64>, params: &crate::hamiltonians::P1Params) -> f64 {
    let central = CentralSpin::P1 { params: *params, jt: JtOrientation::on_axis() };
    let op = drive_operator(&central);
    raw_moment(&op, i, f) / (0.5 * (params.gamma_e * HZ_PER_MHZ).abs())
}

fn rows_for(central: &CentralSpin, levels: &[CentralLevel], jt: Option<JtLabel>) -> Vec<TransitionRow> {
    let op = drive_operator(central);
    let mut rows = Vec::new();
    for lo in 0..levels.len() {
        for hi in lo + 1..levels.len() {
            let (a, b) = (&levels[lo], &levels[hi]);
            let from_label = a.dominant_label();
            let to_label = b.dominant_label();
            rows.push(TransitionRow {
                jt,
                freq: (b.energy - a.energy).abs() / HZ_PER_MHZ,
                from_label,
                to_label,
                kind: TransitionKind::classify(from_label, to_label),
                moment: raw_moment(&op, &a.vector, &b.vector),
                mixing: 1.0 - a.dominant_weight.min(b.dominant_weight),
            });
        }
    }
    rows
}

/// All pairwise transitions of the central system at field `b` (G).
///
/// For a P1 centre one block of 15 rows is emitted per Jahn-Teller
/// orientation in `jts` (the centre's own orientation when empty). Moments
/// are normalised to the strongest electron row of the whole table.
pub fn transition_table(
    central: &CentralSpin,
    b: &Vector3<f64>,
    jts: &[JtOrientation],
) -> Result<TransitionTable, SpinError> {
    let mut rows = Vec::new();
    match central {
        CentralSpin::P1 { params, jt } => {
            let list: Vec<JtOrientation> = if jts.is_empty() { vec![*jt] } else { jts.to_vec() };
            for o in list {
                let c = CentralSpin::P1 { params: *params, jt: o };
                rows.extend(rows_for(&c, &central_levels(&c, b)?, Some(o.label())));
            }
        }
        _ => rows.extend(rows_for(central, &central_levels(central, b)?, None)),
    }
    let norm = rows
        .iter()
        .filter(|r| r.kind == TransitionKind::Electron)
        .map(|r| r.moment)
        .fold(0.0, f64::max);
    if norm > 0.0 {
        rows.iter_mut().for_each(|r| r.moment /= norm);
    }
    Ok(TransitionTable { schema_version: crate::SCHEMA_VERSION, central: central.name(), b_field: [b.x, b.y, b.z], rows })
}

/// Ratio `γ_N/|γ_e|` that bounds nuclear-transition moments from below.
pub fn nuclear_moment_scale() -> f64 {
    GAMMA_N14_HZ_PER_G / (crate::constants::GAMMA_E_MHZ_PER_G * HZ_PER_MHZ).abs()
}
