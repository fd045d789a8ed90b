//! Per-eigenstate diagnostics and energy clustering.
//!
//! Expectation values use the normalized right eigenvector, `ρ = |ψ⟩⟨ψ|`.
//! Input vectors need not be normalized; their squared moduli are rescaled
//! to unit total weight first.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::fock::{Basis, OccupationSpace, Statistics};
use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservableError {
    #[error("state vector has zero norm")]
    ZeroVector,
    #[error("state vector length {got} does not match basis dimension {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("operation needs {needed} particles, basis has {got}")]
    ParticleNumber { needed: &'static str, got: usize },
    #[error("invalid site subset: {0}")]
    InvalidSubset(&'static str),
}

/// Eigenvalues of the reduced density matrix below this are treated as zero.
pub const ENTROPY_CUTOFF: f64 = 1e-14;
/// Default ratio between a splitting gap and the median level spacing.
pub const DEFAULT_GAP_FACTOR: f64 = 10.0;
/// Width of the dead zones around `N_cor = 0` and `N_cor = 2`.
pub const DEFAULT_NCOR_MARGIN: f64 = 0.05;

fn weights(vector: &[Complex64], basis: &Basis) -> Result<Vec<f64>, ObservableError> {
    if vector.len() != basis.dimension() {
        return Err(ObservableError::LengthMismatch { got: vector.len(), expected: basis.dimension() });
    }
    let w: Vec<f64> = vector.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(ObservableError::ZeroVector);
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// `⟨n_s⟩` on every combined site.
pub fn site_density(vector: &[Complex64], basis: &Basis) -> Result<Vec<f64>, ObservableError> {
    let w = weights(vector, basis)?;
    let mut out = vec![0.0; basis.num_sites()];
    for (state, p) in basis.iter().zip(&w) {
        for (s, &n) in state.occupations().iter().enumerate() {
            if n != 0 {
                out[s] += p * n as f64;
            }
        }
    }
    Ok(out)
}

/// `(N_A - N_B) / N` from a site density.
pub fn polarization_from_density(density: &[f64]) -> f64 {
    let cells = density.len() / 2;
    let a: f64 = density[..cells].iter().sum();
    let b: f64 = density[cells..].iter().sum();
    (a - b) / (a + b)
}

pub fn polarization(vector: &[Complex64], basis: &Basis) -> Result<f64, ObservableError> {
    Ok(polarization_from_density(&site_density(vector, basis)?))
}

/// `ρ(s₁, s₂) = ⟨n_{s₁} n_{s₂}⟩` over combined sites.
pub fn pair_density(vector: &[Complex64], basis: &Basis) -> Result<Vec<Vec<f64>>, ObservableError> {
    if basis.particles() < 2 {
        return Err(ObservableError::ParticleNumber { needed: "at least 2", got: basis.particles() });
    }
    let w = weights(vector, basis)?;
    let m = basis.num_sites();
    let mut rho = vec![vec![0.0; m]; m];
    let mut occupied: Vec<(usize, f64)> = Vec::with_capacity(basis.particles());
    for (state, p) in basis.iter().zip(&w) {
        occupied.clear();
        occupied.extend(state.occupations().iter().enumerate().filter(|(_, &n)| n != 0).map(|(s, &n)| (s, n as f64)));
        for &(s1, n1) in &occupied {
            for &(s2, n2) in &occupied {
                rho[s1][s2] += p * n1 * n2;
            }
        }
    }
    Ok(rho)
}

/// `Γ(s₁, s₂) = ⟨a†_{s₁} a†_{s₂} a_{s₂} a_{s₁}⟩ = ρ(s₁, s₂) - δ ⟨n_{s₁}⟩`.
pub fn correlation_matrix(vector: &[Complex64], basis: &Basis) -> Result<Vec<Vec<f64>>, ObservableError> {
    let mut g = pair_density(vector, basis)?;
    let n = site_density(vector, basis)?;
    for (s, row) in g.iter_mut().enumerate() {
        row[s] -= n[s];
    }
    Ok(g)
}

/// `(Σ Γ_ss)² - Σ Γ²`, defined for two particles.
pub fn correlation_ncor(vector: &[Complex64], basis: &Basis) -> Result<f64, ObservableError> {
    if basis.particles() != 2 {
        return Err(ObservableError::ParticleNumber { needed: "exactly 2", got: basis.particles() });
    }
    let g = correlation_matrix(vector, basis)?;
    Ok(ncor_from_correlation(&g))
}

pub fn ncor_from_correlation(g: &[Vec<f64>]) -> f64 {
    let trace: f64 = g.iter().enumerate().map(|(s, row)| row[s]).sum();
    let frob: f64 = g.iter().flat_map(|row| row.iter()).map(|x| x * x).sum();
    trace * trace - frob
}

/// Sites of leg A.
pub fn leg_a_sites(cells: usize) -> Vec<usize> {
    (0..cells).collect()
}

/// Sites of the left half (cells `x <= L/2`) on both legs.
pub fn left_half_sites(cells: usize) -> Vec<usize> {
    let half = cells / 2;
    (0..half).chain(cells..cells + half).collect()
}

/// Fraction of the density on leg A.
pub fn leg_a_fraction(density: &[f64]) -> f64 {
    let cells = density.len() / 2;
    let total: f64 = density.iter().sum();
    density[..cells].iter().sum::<f64>() / total
}

/// Fraction of the density in the left half of the ladder.
pub fn left_fraction(density: &[f64]) -> f64 {
    let cells = density.len() / 2;
    let total: f64 = density.iter().sum();
    left_half_sites(cells).into_iter().map(|s| density[s]).sum::<f64>() / total
}

/// Von Neumann entropy of the reduced state on `subset`.
pub fn entanglement_entropy(vector: &[Complex64], basis: &Basis, subset: &[usize]) -> Result<f64, ObservableError> {
    let m = basis.num_sites();
    if vector.len() != basis.dimension() {
        return Err(ObservableError::LengthMismatch { got: vector.len(), expected: basis.dimension() });
    }
    let mut inside = vec![false; m];
    for &s in subset {
        if s >= m {
            return Err(ObservableError::InvalidSubset("site out of range"));
        }
        if inside[s] {
            return Err(ObservableError::InvalidSubset("repeated site"));
        }
        inside[s] = true;
    }
    if subset.is_empty() || subset.len() == m {
        return Err(ObservableError::InvalidSubset("subset must be a nonempty proper subset"));
    }
    let total: f64 = vector.iter().map(|z| z.norm_sqr()).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(ObservableError::ZeroVector);
    }
    let scale = 1.0 / math::sqrt(total);
    let sub_sites: Vec<usize> = (0..m).filter(|&s| inside[s]).collect();
    let rest_sites: Vec<usize> = (0..m).filter(|&s| !inside[s]).collect();
    let stats = basis.statistics();
    let n = basis.particles();

    // one block of the coefficient matrix per particle number in the subset
    struct Block {
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, Complex64)>,
    }
    let mut blocks: BTreeMap<usize, Block> = BTreeMap::new();
    let mut spaces: BTreeMap<usize, (OccupationSpace, OccupationSpace)> = BTreeMap::new();
    let mut occ_sub = vec![0u8; sub_sites.len()];
    let mut occ_rest = vec![0u8; rest_sites.len()];
    for (state, &c) in basis.iter().zip(vector) {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let occ = state.occupations();
        for (k, &s) in sub_sites.iter().enumerate() {
            occ_sub[k] = occ[s];
        }
        for (k, &s) in rest_sites.iter().enumerate() {
            occ_rest[k] = occ[s];
        }
        let k: usize = occ_sub.iter().map(|&x| x as usize).sum();
        let (sa, sb) = spaces.entry(k).or_insert_with(|| {
            (
                OccupationSpace::new(sub_sites.len(), k, stats),
                OccupationSpace::new(rest_sites.len(), n - k, stats),
            )
        });
        let row = sa.rank_unchecked(&occ_sub);
        let col = sb.rank_unchecked(&occ_rest);
        let mut value = c * scale;
        if stats == Statistics::Fermion && fermion_reorder_odd(occ, &inside) {
            value = -value;
        }
        let block = blocks.entry(k).or_insert_with(|| Block {
            rows: sa.dimension() as usize,
            cols: sb.dimension() as usize,
            entries: Vec::new(),
        });
        block.entries.push((row, col, value));
    }

    let mut entropy = 0.0;
    for block in blocks.values() {
        let gram = gram_matrix(block.rows, block.cols, &block.entries);
        for lambda in hermitian_eigenvalues(&gram) {
            if lambda > ENTROPY_CUTOFF {
                entropy -= lambda * math::ln(lambda);
            }
        }
    }
    Ok(entropy.max(0.0))
}

// Parity of moving all subset creation operators in front of the rest.
fn fermion_reorder_odd(occ: &[u8], inside: &[bool]) -> bool {
    let mut rest_seen = 0usize;
    let mut swaps = 0usize;
    for (s, &n) in occ.iter().enumerate() {
        if n == 0 {
            continue;
        }
        if inside[s] {
            swaps += rest_seen;
        } else {
            rest_seen += 1;
        }
    }
    swaps % 2 == 1
}

// Gram matrix on the smaller side of a sparse `rows x cols` block.
fn gram_matrix(rows: usize, cols: usize, entries: &[(usize, usize, Complex64)]) -> Vec<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    if rows <= cols {
        // Ψ Ψ†: group by column
        let mut by_col: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for &(r, c, v) in entries {
            by_col.entry(c).or_default().push((r, v));
        }
        let mut g = vec![vec![zero; rows]; rows];
        for col in by_col.values() {
            for &(r1, v1) in col {
                for &(r2, v2) in col {
                    g[r1][r2] += v1 * v2.conj();
                }
            }
        }
        g
    } else {
        let mut by_row: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for &(r, c, v) in entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut g = vec![vec![zero; cols]; cols];
        for row in by_row.values() {
            for &(c1, v1) in row {
                for &(c2, v2) in row {
                    g[c1][c2] += v1.conj() * v2;
                }
            }
        }
        g
    }
}

/// Eigenvalues of a Hermitian matrix via cyclic Jacobi on the real symmetric
/// embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is the original one
/// doubled.
pub(crate) fn hermitian_eigenvalues(g: &[Vec<Complex64>]) -> Vec<f64> {
    let m = g.len();
    if m == 0 {
        return Vec::new();
    }
    let complex = g.iter().flatten().any(|z| z.im != 0.0);
    if !complex {
        let a: Vec<Vec<f64>> = g.iter().map(|row| row.iter().map(|z| z.re).collect()).collect();
        return jacobi_eigenvalues(a);
    }
    let k = 2 * m;
    let mut a = vec![vec![0.0; k]; k];
    for i in 0..m {
        for j in 0..m {
            let z = g[i][j];
            a[i][j] = z.re;
            a[i + m][j + m] = z.re;
            a[i][j + m] = -z.im;
            a[i + m][j] = z.im;
        }
    }
    let mut all = jacobi_eigenvalues(a);
    all.sort_by(f64::total_cmp);
    all.into_iter().step_by(2).collect()
}

fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// All diagnostics of one eigenstate.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StateObservables {
    pub polarization: f64,
    /// Only defined for two particles.
    pub ncor: Option<f64>,
    /// Set when this state carries the largest `Im E` of its cluster.
    pub is_max_imag: bool,
    pub density: Vec<f64>,
    /// Present for two or more particles.
    pub pair_density: Option<Vec<Vec<f64>>>,
    pub entropy_ab: f64,
    pub entropy_leftright: f64,
}

impl StateObservables {
    pub fn compute(vector: &[Complex64], basis: &Basis, is_max_imag: bool) -> Result<Self, ObservableError> {
        let density = site_density(vector, basis)?;
        let cells = basis.cells();
        let (pair, ncor) = if basis.particles() >= 2 {
            let rho = pair_density(vector, basis)?;
            let ncor = if basis.particles() == 2 {
                let mut g = rho.clone();
                for (s, row) in g.iter_mut().enumerate() {
                    row[s] -= density[s];
                }
                Some(ncor_from_correlation(&g))
            } else {
                None
            };
            (Some(rho), ncor)
        } else {
            (None, None)
        };
        let entropy_leftright = if cells >= 2 {
            entanglement_entropy(vector, basis, &left_half_sites(cells))?
        } else {
            0.0
        };
        Ok(StateObservables {
            polarization: polarization_from_density(&density),
            ncor,
            is_max_imag,
            entropy_ab: entanglement_entropy(vector, basis, &leg_a_sites(cells))?,
            entropy_leftright,
            density,
            pair_density: pair,
        })
    }

    pub fn leg_a_fraction(&self) -> f64 {
        leg_a_fraction(&self.density)
    }

    pub fn left_fraction(&self) -> f64 {
        left_fraction(&self.density)
    }
}

/// Cluster type: edge localization combined with scattering or bound
/// character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum ClusterLabel {
    RS,
    BiS,
    LS,
    RB,
    BiB,
    LB,
    Mixed,
    Unclassified,
}

impl ClusterLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterLabel::RS => "RS",
            ClusterLabel::BiS => "BiS",
            ClusterLabel::LS => "LS",
            ClusterLabel::RB => "RB",
            ClusterLabel::BiB => "BiB",
            ClusterLabel::LB => "LB",
            ClusterLabel::Mixed => "mixed",
            ClusterLabel::Unclassified => "unclassified",
        }
    }
}

impl fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A group of eigenvalues separated from the rest by a spectral gap.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Cluster {
    /// Indices into the eigenvalue slice the cluster was built from, in
    /// ascending order of `Re E`.
    pub members: Vec<usize>,
    pub label: ClusterLabel,
    pub re_range: (f64, f64),
    pub max_im: f64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn centroid(&self, eigenvalues: &[Complex64]) -> f64 {
        self.members.iter().map(|&k| eigenvalues[k].re).sum::<f64>() / self.members.len() as f64
    }

    /// Member with the largest imaginary part (first one on ties).
    pub fn max_imag_member(&self, eigenvalues: &[Complex64]) -> usize {
        let mut best = self.members[0];
        for &k in &self.members[1..] {
            if eigenvalues[k].im > eigenvalues[best].im {
                best = k;
            }
        }
        best
    }
}

/// Default minimum splitting gap, a tenth of the larger leg-A hopping.
pub fn default_min_gap(j_left_a: f64, j_right_a: f64) -> f64 {
    0.1 * j_left_a.abs().max(j_right_a.abs())
}

/// Split the spectrum at real-axis gaps wider than
/// `max(min_gap, gap_factor * median gap)`.
pub fn cluster_spectrum(eigenvalues: &[Complex64], gap_factor: f64, min_gap: f64) -> Vec<Cluster> {
    if eigenvalues.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| crate::eig::compare_eigenvalues(&eigenvalues[a], &eigenvalues[b]));
    let gaps: Vec<f64> = order.windows(2).map(|w| eigenvalues[w[1]].re - eigenvalues[w[0]].re).collect();
    let threshold = if gaps.is_empty() {
        f64::INFINITY
    } else {
        let mut sorted = gaps.clone();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = 0.5 * (sorted[(k - 1) / 2] + sorted[k / 2]);
        min_gap.max(gap_factor * median)
    };
    let mut clusters = Vec::new();
    let mut current = vec![order[0]];
    for (i, &g) in gaps.iter().enumerate() {
        if g > threshold {
            clusters.push(make_cluster(core::mem::take(&mut current), eigenvalues));
        }
        current.push(order[i + 1]);
    }
    clusters.push(make_cluster(current, eigenvalues));
    clusters
}

fn make_cluster(members: Vec<usize>, eigenvalues: &[Complex64]) -> Cluster {
    let lo = eigenvalues[members[0]].re;
    let hi = eigenvalues[*members.last().expect("nonempty")].re;
    let max_im = members.iter().map(|&k| eigenvalues[k].im).fold(f64::NEG_INFINITY, f64::max);
    Cluster { members, label: ClusterLabel::Unclassified, re_range: (lo, hi), max_im }
}

/// Edge localization of a density profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Localization {
    Left,
    Right,
    Both,
    Neither,
}

/// Edge test on the per-cell density (both legs summed): the outer quarter
/// of cells on each side is an edge. `Both` when each edge holds at least
/// 30%, otherwise `Left`/`Right` when one edge holds at least 60%.
pub fn localization(density: &[f64]) -> Localization {
    let cells = density.len() / 2;
    let per_cell: Vec<f64> = (0..cells).map(|x| density[x] + density[cells + x]).collect();
    let total: f64 = per_cell.iter().sum();
    let edge = cells.div_ceil(4).max(1);
    let left: f64 = per_cell[..edge].iter().sum::<f64>() / total;
    let right: f64 = per_cell[cells - edge..].iter().sum::<f64>() / total;
    if left >= 0.3 && right >= 0.3 {
        Localization::Both
    } else if left >= 0.6 {
        Localization::Left
    } else if right >= 0.6 {
        Localization::Right
    } else {
        Localization::Neither
    }
}

/// Label from a representative `N_cor` and a density profile. `margin` is
/// the dead-zone half width around 0 and 2.
pub fn classify_cluster(ncor: f64, density: &[f64], margin: f64) -> ClusterLabel {
    let loc = localization(density);
    if ncor > 2.0 + margin {
        match loc {
            Localization::Left => ClusterLabel::LB,
            Localization::Right => ClusterLabel::RB,
            Localization::Both => ClusterLabel::BiB,
            Localization::Neither => ClusterLabel::Unclassified,
        }
    } else if ncor < -margin {
        match loc {
            Localization::Left => ClusterLabel::LS,
            Localization::Right => ClusterLabel::RS,
            Localization::Both => ClusterLabel::BiS,
            Localization::Neither => ClusterLabel::Unclassified,
        }
    } else if ncor > margin && ncor < 2.0 - margin {
        ClusterLabel::Mixed
    } else {
        ClusterLabel::Unclassified
    }
}
