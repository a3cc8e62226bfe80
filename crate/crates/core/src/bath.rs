//! Seeded ¹³C baths on the diamond lattice and their disjoint partition.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{self, DIAMOND_LATTICE_NM, GAMMA_C13_HZ_PER_G};
use crate::hamiltonians::{crystal_to_lab, hyperfine_tensor, HamiltonianError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathError {
    #[error("abundance must lie in (0, 1], got {0}")]
    Abundance(f64),
    #[error("minimum radius must be finite and non-negative, got {0}")]
    MinRadius(f64),
    #[error("maximum group size must be at least 1")]
    GroupSize,
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// A ¹³C nuclear spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpin {
    /// nm, lab frame (ẑ ∥ [111])
    pub position: [f64; 3],
    /// Hz/G
    pub gamma: f64,
}

impl BathSpin {
    pub fn carbon(position: Vector3<f64>) -> Self {
        Self { position: [position.x, position.y, position.z], gamma: GAMMA_C13_HZ_PER_G }
    }

    pub fn pos(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Occupied diamond-cubic sites.
    #[default]
    Lattice,
    /// Homogeneous Poisson process at the same number density.
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BathParams {
    pub n_spins: usize,
    pub abundance: f64,
    /// nm; sites closer than this are never occupied.
    pub min_radius: f64,
    pub placement: Placement,
}

impl Default for BathParams {
    fn default() -> Self {
        Self {
            n_spins: 125,
            abundance: constants::C13_NATURAL_ABUNDANCE,
            min_radius: 0.154,
            placement: Placement::Lattice,
        }
    }
}

/// A generated bath. Serializes to JSON and replays bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bath {
    pub schema_version: u32,
    pub seed: u64,
    pub abundance: f64,
    pub n_spins: usize,
    pub min_radius: f64,
    pub placement: Placement,
    pub spins: Vec<BathSpin>,
}

impl Bath {
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Seed of bath `index` in an ensemble: SplitMix64 finaliser applied to
/// `master ⊕ (index + 1)·φ64`. Stable across versions.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Diamond sites in units of a/4: FCC points (all even, sum ≡ 0 mod 4)
/// and the (1,1,1)-shifted sublattice (all odd, sum ≡ 3 mod 4).
fn is_diamond_site(x: i64, y: i64, z: i64) -> bool {
    let even = x.rem_euclid(2) == 0 && y.rem_euclid(2) == 0 && z.rem_euclid(2) == 0;
    let odd = x.rem_euclid(2) == 1 && y.rem_euclid(2) == 1 && z.rem_euclid(2) == 1;
    let sum = (x + y + z).rem_euclid(4);
    (even && sum == 0) || (odd && sum == 3)
}

/// Sites with squared radius in `(lo, hi]` (units of (a/4)²), ordered by
/// radius then lexicographically.
fn lattice_shell(lo: i64, hi: i64) -> Vec<[i64; 3]> {
    let m = (hi as f64).sqrt().ceil() as i64;
    let mut sites = Vec::new();
    for x in -m..=m {
        for y in -m..=m {
            for z in -m..=m {
                let r2 = x * x + y * y + z * z;
                if r2 > lo && r2 <= hi && is_diamond_site(x, y, z) {
                    sites.push([x, y, z]);
                }
            }
        }
    }
    sites.sort_by(|a, b| {
        let ra = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
        let rb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
        ra.cmp(&rb).then_with(|| a.cmp(b))
    });
    sites
}

/// Generate a bath of the `n_spins` occupied sites nearest the origin.
///
/// Sites are visited in order of increasing radius; each site at or beyond
/// `min_radius` is occupied with probability `abundance`. The enumeration
/// grows until enough spins are found.
pub fn generate_bath(seed: u64, params: &BathParams) -> Result<Bath, BathError> {
    if !(params.abundance > 0.0 && params.abundance <= 1.0) {
        return Err(BathError::Abundance(params.abundance));
    }
    if !(params.min_radius >= 0.0 && params.min_radius.is_finite()) {
        return Err(BathError::MinRadius(params.min_radius));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spins = match params.placement {
        Placement::Lattice => lattice_spins(&mut rng, params),
        Placement::Continuum => continuum_spins(&mut rng, params),
    };
    Ok(Bath {
        schema_version: crate::SCHEMA_VERSION,
        seed,
        abundance: params.abundance,
        n_spins: params.n_spins,
        min_radius: params.min_radius,
        placement: params.placement,
        spins,
    })
}

fn lattice_spins(rng: &mut ChaCha8Rng, params: &BathParams) -> Vec<BathSpin> {
    let quarter = DIAMOND_LATTICE_NM / 4.0;
    let rot: Matrix3<f64> = crystal_to_lab();
    let mut spins = Vec::with_capacity(params.n_spins);
    if params.n_spins == 0 {
        return spins;
    }
    // 8 sites per cubic cell of side 4 (in a/4 units): density 1/8
    let wanted_sites = (params.n_spins as f64 / params.abundance) * 1.5 + 64.0;
    let r_est = (wanted_sites * 8.0 * 3.0 / (4.0 * PI)).cbrt() + params.min_radius / quarter;
    let mut hi = (r_est * r_est).ceil() as i64;
    let mut lo = 0i64;
    loop {
        for site in lattice_shell(lo, hi) {
            let local = Vector3::new(site[0] as f64, site[1] as f64, site[2] as f64) * quarter;
            if local.norm() < params.min_radius {
                continue;
            }
            let u: f64 = rng.random();
            if u < params.abundance {
                spins.push(BathSpin::carbon(rot * local));
                if spins.len() == params.n_spins {
                    return spins;
                }
            }
        }
        lo = hi;
        hi *= 2;
    }
}

fn continuum_spins(rng: &mut ChaCha8Rng, params: &BathParams) -> Vec<BathSpin> {
    // carbon sites per nm³ from the lattice: 8 per a³
    let density = params.abundance * 8.0 / DIAMOND_LATTICE_NM.powi(3);
    let mut volume = 4.0 / 3.0 * PI * params.min_radius.powi(3);
    (0..params.n_spins)
        .map(|_| {
            let u: f64 = rng.random();
            volume += -(1.0 - u).ln() / density;
            let r = (3.0 * volume / (4.0 * PI)).cbrt();
            let cos_t: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let sin_t = (1.0 - cos_t * cos_t).sqrt();
            BathSpin::carbon(Vector3::new(r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMetric {
    /// |zz| element of the dipolar tensor.
    #[default]
    Secular,
    /// Frobenius norm of the dipolar tensor.
    FullTensor,
}

/// Secular ¹³C–¹³C dipolar coupling magnitude in Hz.
pub fn pair_coupling(a: &BathSpin, b: &BathSpin) -> Result<f64, BathError> {
    pair_coupling_with(a, b, CouplingMetric::Secular)
}

pub fn pair_coupling_with(a: &BathSpin, b: &BathSpin, metric: CouplingMetric) -> Result<f64, BathError> {
    let t = hyperfine_tensor(&(b.pos() - a.pos()), a.gamma, b.gamma)?;
    Ok(match metric {
        CouplingMetric::Secular => t.a[(2, 2)].abs(),
        CouplingMetric::FullTensor => t.a.norm(),
    })
}

/// Disjoint groups of bath-spin indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub groups: Vec<Vec<usize>>,
    pub g: usize,
}

impl Partition {
    /// Checks that groups cover `0..n` exactly once with sizes in `[1, g]`.
    pub fn is_valid_for(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for group in &self.groups {
            if group.is_empty() || group.len() > self.g {
                return false;
            }
            for &i in group {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

struct Groups {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Groups {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }
}

/// Greedy agglomeration: strongest pairs first, merging while the merged
/// group stays within `g`. Ties go to the lower index pair.
pub fn cluster_bath(bath: &Bath, g: usize) -> Result<Partition, BathError> {
    cluster_spins(&bath.spins, g, CouplingMetric::Secular)
}

pub fn cluster_spins(spins: &[BathSpin], g: usize, metric: CouplingMetric) -> Result<Partition, BathError> {
    if g == 0 {
        return Err(BathError::GroupSize);
    }
    let n = spins.len();
    let mut uf = Groups::new(n);
    if g > 1 {
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((pair_coupling_with(&spins[i], &spins[j], metric)?, i, j));
            }
        }
        pairs.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then((a.1, a.2).cmp(&(b.1, b.2)))
        });
        for (_, i, j) in pairs {
            let (ri, rj) = (uf.find(i), uf.find(j));
            if ri != rj && uf.size[ri] + uf.size[rj] <= g {
                let (keep, drop) = if ri < rj { (ri, rj) } else { (rj, ri) };
                uf.parent[drop] = keep;
                uf.size[keep] += uf.size[drop];
            }
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf.find(i);
        by_root[r].push(i);
    }
    let mut groups: Vec<Vec<usize>> = by_root.into_iter().filter(|v| !v.is_empty()).collect();
    groups.sort_by_key(|grp| grp[0]);
    Ok(Partition { groups, g })
}

/// Fraction of multi-spin groups whose strongest internal coupling is at
/// least the strongest coupling any member has to a spin outside the group.
/// `None` when the partition has no multi-spin group.
pub fn group_quality(spins: &[BathSpin], partition: &Partition, metric: CouplingMetric) -> Result<Option<f64>, BathError> {
    let n = spins.len();
    let mut owner = vec![usize::MAX; n];
    for (k, grp) in partition.groups.iter().enumerate() {
        for &i in grp {
            owner[i] = k;
        }
    }
    let (mut good, mut total) = (0usize, 0usize);
    for (k, grp) in partition.groups.iter().enumerate() {
        if grp.len() < 2 {
            continue;
        }
        let (mut inside, mut outside) = (0.0f64, 0.0f64);
        for &i in grp {
            for j in 0..n {
                if j == i {
                    continue;
                }
                let c = pair_coupling_with(&spins[i], &spins[j], metric)?;
                if owner[j] == k {
                    inside = inside.max(c);
                } else {
                    outside = outside.max(c);
                }
            }
        }
        total += 1;
        if inside >= outside {
            good += 1;
        }
    }
    Ok((total > 0).then(|| good as f64 / total as f64))
}
