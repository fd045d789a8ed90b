//! Parameter grids, inter-leg threshold search and onsite-energy classes.
//!
//! A sweep is evaluated line by line: a line is the set of points sharing
//! every coordinate except the last axis. Points of different lines are
//! independent, so a caller may evaluate lines concurrently and still get
//! the table [`run_sweep`] produces.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::eig::{default_eps_im, EigError, EigOptions, Eigensystem};
use crate::fock::{Basis, BasisError, Statistics};
use crate::math;
use crate::model::{build_hamiltonian, diagonal_signature, ModelError, ModelParams};
use crate::observables::{
    cluster_spectrum, correlation_ncor, default_min_gap, entanglement_entropy, leg_a_fraction, leg_a_sites,
    left_fraction, left_half_sites, polarization_from_density, site_density, Cluster, ObservableError,
    DEFAULT_GAP_FACTOR,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(&'static str),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eig(#[from] EigError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
}

// ---------------------------------------------------------------------------
// onsite-energy classes

/// Configurations sharing the interaction count `k` and leg imbalance
/// `d = N_A - N_B`, so that their diagonal energy is `k·U + d·μ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OnsiteClass {
    pub interaction_count: u64,
    pub imbalance: i64,
    pub population: usize,
}

impl OnsiteClass {
    pub fn energy(&self, interaction: f64, mu: f64) -> f64 {
        interaction * self.interaction_count as f64 + mu * self.imbalance as f64
    }

    /// Classes with at least one interacting pair (or bond).
    pub fn is_bound(&self) -> bool {
        self.interaction_count > 0
    }

    /// Particles left over once the fewest particles that can produce the
    /// interaction count are set aside. They keep their free kinetic band.
    pub fn free_particles(&self, particles: usize, statistics: Statistics) -> usize {
        let k = self.interaction_count as usize;
        if k == 0 {
            return particles;
        }
        let needed = match statistics {
            // m bosons on one site give m(m-1)/2 pairs
            Statistics::Boson => (2..=particles).find(|m| m * (m - 1) / 2 >= k).unwrap_or(particles),
            // k bonds need at least k+1 fermions
            Statistics::Fermion => k + 1,
        };
        particles.saturating_sub(needed)
    }
}

/// Half width of the open-chain band of one free particle, the larger of the
/// two legs.
pub fn single_particle_half_width(params: &ModelParams) -> f64 {
    let leg = |jl: f64, jr: f64| 2.0 * math::sqrt((jl * jr).abs());
    leg(params.j_left_a, params.j_right_a).max(leg(params.j_left_b, params.j_right_b))
}

/// Partition of `basis` into onsite classes, sorted by `(k, d)`.
pub fn onsite_classes(basis: &Basis) -> Vec<OnsiteClass> {
    let mut classes: Vec<OnsiteClass> = Vec::new();
    for state in basis.iter() {
        let (k, d) = diagonal_signature(state.occupations(), basis.cells(), basis.statistics());
        match classes.binary_search_by(|c| (c.interaction_count, c.imbalance).cmp(&(k, d))) {
            Ok(i) => classes[i].population += 1,
            Err(i) => classes.insert(i, OnsiteClass { interaction_count: k, imbalance: d, population: 1 }),
        }
    }
    classes
}

/// Two class lines meeting at `mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Crossing {
    pub first: usize,
    pub second: usize,
    pub mu: f64,
    pub energy: f64,
    /// Particles that must change leg to connect the two classes.
    pub order: u64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EonsiteTable {
    pub interaction: f64,
    pub classes: Vec<OnsiteClass>,
    pub crossings: Vec<Crossing>,
}

/// Class lines `E(μ) = k·U + d·μ` and their crossings with `μ` inside
/// `mu_range` (inclusive).
pub fn eonsite_table(params: &ModelParams, mu_range: (f64, f64)) -> Result<EonsiteTable, SweepError> {
    params.validate()?;
    if params.particles > 4 {
        return Err(SweepError::InvalidSpec("onsite table supports at most 4 particles"));
    }
    let basis = Basis::new(params.cells, params.particles, params.statistics)?;
    let classes = onsite_classes(&basis);
    let u = params.interaction();
    let (lo, hi) = if mu_range.0 <= mu_range.1 { mu_range } else { (mu_range.1, mu_range.0) };
    let mut crossings = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            let (a, b) = (classes[i], classes[j]);
            if a.imbalance == b.imbalance {
                continue;
            }
            let mu = u * (b.interaction_count as f64 - a.interaction_count as f64) / (a.imbalance - b.imbalance) as f64;
            if mu >= lo && mu <= hi {
                crossings.push(Crossing {
                    first: i,
                    second: j,
                    mu,
                    energy: a.energy(u, mu),
                    order: (a.imbalance - b.imbalance).unsigned_abs() / 2,
                });
            }
        }
    }
    crossings.sort_by(|x, y| x.mu.total_cmp(&y.mu).then((x.first, x.second).cmp(&(y.first, y.second))));
    Ok(EonsiteTable { interaction: u, classes, crossings })
}

// ---------------------------------------------------------------------------
// cluster selection

/// Which clusters a diagnostic looks at.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "lowercase"))]
pub enum ClusterSelector {
    All,
    /// The k-th cluster counted from the lowest `Re E`, 0-based.
    Rank(usize),
    /// The cluster whose centroid is closest to the given energy.
    Nearest(f64),
    /// Like `Nearest` on the first point of a sweep line, then follows the
    /// centroid picked at the previous point.
    Tracked(f64),
    /// Clusters whose centroid lies in `[lo, hi]`.
    Window { lo: f64, hi: f64 },
    /// Clusters nearest to an onsite class without interaction energy.
    Scattering,
    /// Clusters nearest to an onsite class with interaction energy.
    Bound,
}

impl fmt::Display for ClusterSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterSelector::All => write!(f, "all"),
            ClusterSelector::Rank(k) => write!(f, "rank:{k}"),
            ClusterSelector::Nearest(e) => write!(f, "nearest:{e}"),
            ClusterSelector::Tracked(e) => write!(f, "tracked:{e}"),
            ClusterSelector::Window { lo, hi } => write!(f, "window:{lo}:{hi}"),
            ClusterSelector::Scattering => write!(f, "scattering"),
            ClusterSelector::Bound => write!(f, "bound"),
        }
    }
}

impl FromStr for ClusterSelector {
    type Err = String;

    /// `all`, `scattering`, `bound`, `rank:K`, `nearest:E`, `tracked:E`,
    /// `window:LO:HI`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.trim().split(':');
        let head = parts.next().unwrap_or("").to_ascii_lowercase();
        let rest: Vec<&str> = parts.collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}' in selector '{s}'"));
        match (head.as_str(), rest.as_slice()) {
            ("all", []) => Ok(ClusterSelector::All),
            ("scattering", []) => Ok(ClusterSelector::Scattering),
            ("bound", []) => Ok(ClusterSelector::Bound),
            ("rank", [k]) => k.trim().parse().map(ClusterSelector::Rank).map_err(|_| format!("bad rank in selector '{s}'")),
            ("nearest", [e]) => Ok(ClusterSelector::Nearest(num(e)?)),
            ("tracked", [e]) => Ok(ClusterSelector::Tracked(num(e)?)),
            ("window", [lo, hi]) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(format!("empty window in selector '{s}'"));
                }
                Ok(ClusterSelector::Window { lo, hi })
            }
            _ => Err(format!("unknown cluster selector '{s}'")),
        }
    }
}

fn nearest_cluster(target: f64, eigenvalues: &[Complex64], clusters: &[Cluster]) -> Vec<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in clusters.iter().enumerate() {
        let d = (c.centroid(eigenvalues) - target).abs();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| vec![i]).unwrap_or_default()
}

/// Indices of the clusters picked by `selector`. Scattering and bound
/// clusters are found by assigning each cluster centroid to the closest
/// onsite class, measured to the class energy widened by the free band of
/// its unbound particles.
pub fn select_clusters(
    selector: &ClusterSelector,
    eigenvalues: &[Complex64],
    clusters: &[Cluster],
    params: &ModelParams,
    basis: &Basis,
) -> Vec<usize> {
    match *selector {
        ClusterSelector::All => (0..clusters.len()).collect(),
        ClusterSelector::Rank(k) => {
            if k < clusters.len() {
                vec![k]
            } else {
                Vec::new()
            }
        }
        ClusterSelector::Nearest(e) | ClusterSelector::Tracked(e) => nearest_cluster(e, eigenvalues, clusters),
        ClusterSelector::Window { lo, hi } => clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                let x = c.centroid(eigenvalues);
                x >= lo && x <= hi
            })
            .map(|(i, _)| i)
            .collect(),
        ClusterSelector::Scattering | ClusterSelector::Bound => {
            let want_bound = *selector == ClusterSelector::Bound;
            let w = single_particle_half_width(params);
            let bands: Vec<(f64, f64, bool)> = onsite_classes(basis)
                .iter()
                .map(|c| {
                    let e = c.energy(params.interaction(), params.mu);
                    let half = w * c.free_particles(basis.particles(), basis.statistics()) as f64;
                    (e - half, e + half, c.is_bound())
                })
                .collect();
            clusters
                .iter()
                .enumerate()
                .filter(|(_, c)| {
                    let x = c.centroid(eigenvalues);
                    let mut best = (f64::INFINITY, false);
                    for &(lo, hi, bound) in &bands {
                        let d = (lo - x).max(x - hi).max(0.0);
                        if d < best.0 {
                            best = (d, bound);
                        }
                    }
                    best.1 == want_bound
                })
                .map(|(i, _)| i)
                .collect()
        }
    }
}

/// Largest `Im E` over the picked clusters, `None` if nothing was picked.
pub fn selected_max_imag(picked: &[usize], clusters: &[Cluster]) -> Option<f64> {
    picked.iter().map(|&i| clusters[i].max_im).reduce(f64::max)
}

// ---------------------------------------------------------------------------
// threshold search

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThresholdError {
    #[error("bracket does not straddle the transition: max Im E is {lo_max_im:e} at lo and {hi_max_im:e} at hi (eps_im {eps_im:e})")]
    BracketInvalid { lo_max_im: f64, hi_max_im: f64, eps_im: f64 },
    #[error("bracket and resolution must be finite with lo < hi and resolution > 0")]
    BadArguments,
    #[error("cluster selector picked no cluster at J_p = {0}")]
    NothingSelected(f64),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

impl From<EigError> for ThresholdError {
    fn from(e: EigError) -> Self {
        ThresholdError::Sweep(SweepError::Eig(e))
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ThresholdResult {
    /// Upper end of the final bracket: the smallest resolved `J_p` with a
    /// complex selected cluster.
    pub jp_star: f64,
    pub bracket: (f64, f64),
    pub eps_im: f64,
    pub evaluations: usize,
    /// The five-point pre-scan was not monotone and a grid scan was used.
    pub non_monotone: bool,
}

/// Largest `Im E` of the selected clusters at one inter-leg coupling, with
/// the matrix norm.
pub fn selected_max_imag_at(
    params: &ModelParams,
    basis: &Basis,
    selector: &ClusterSelector,
    opts: &EigOptions,
) -> Result<Option<(f64, f64)>, SweepError> {
    let h = build_hamiltonian(params, basis)?;
    let sys = Eigensystem::new(&h, opts)?;
    let e = sys.eigenvalues();
    let clusters = cluster_spectrum(e, DEFAULT_GAP_FACTOR, default_min_gap(params.j_left_a, params.j_right_a));
    let picked = select_clusters(selector, e, &clusters, params, basis);
    Ok(selected_max_imag(&picked, &clusters).map(|m| (m, sys.matrix_norm())))
}

/// Smallest inter-leg coupling in `bracket` at which the selected clusters
/// acquire `Im E > eps_im`, resolved to `resolution`.
///
/// `eps_im = None` uses the default reality threshold of the matrix at the
/// upper end of the bracket.
pub fn find_threshold_jp(
    params: &ModelParams,
    selector: &ClusterSelector,
    eps_im: Option<f64>,
    bracket: (f64, f64),
    resolution: f64,
    opts: &EigOptions,
) -> Result<ThresholdResult, ThresholdError> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && resolution > 0.0 && resolution.is_finite()) {
        return Err(ThresholdError::BadArguments);
    }
    params.validate().map_err(SweepError::from)?;
    let basis = Basis::new(params.cells, params.particles, params.statistics).map_err(SweepError::from)?;
    let mut evaluations = 0usize;
    let mut max_im = |jp: f64| -> Result<(f64, f64), ThresholdError> {
        evaluations += 1;
        let p = params.clone().with_jp(jp);
        selected_max_imag_at(&p, &basis, selector, opts)?.ok_or(ThresholdError::NothingSelected(jp))
    };

    let (hi_im, hi_norm) = max_im(hi)?;
    let eps = eps_im.unwrap_or_else(|| default_eps_im(hi_norm));
    let (lo_im, _) = max_im(lo)?;
    if lo_im > eps || hi_im <= eps {
        return Err(ThresholdError::BracketInvalid { lo_max_im: lo_im, hi_max_im: hi_im, eps_im: eps });
    }

    let width = hi - lo;
    let mut flags = vec![false; 5];
    flags[4] = true;
    let scan: Vec<f64> = (0..5).map(|k| lo + width * k as f64 / 4.0).collect();
    for k in 1..4 {
        flags[k] = max_im(scan[k])?.0 > eps;
    }
    let monotone = flags.windows(2).all(|w| !w[0] || w[1]);
    let (mut a, mut b) = if monotone {
        let first = flags.iter().position(|&f| f).expect("last flag is set");
        (scan[first - 1], scan[first])
    } else {
        let step = resolution.max(width / 64.0);
        let count = (math::ceil(width / step) as usize).max(1);
        let mut prev = lo;
        let mut cell = (lo, hi);
        for k in 1..=count {
            let x = if k == count { hi } else { lo + step * k as f64 };
            let flag = if k == count { true } else { max_im(x)?.0 > eps };
            if flag {
                cell = (prev, x);
                break;
            }
            prev = x;
        }
        cell
    };
    while b - a > resolution {
        let mid = 0.5 * (a + b);
        if max_im(mid)?.0 > eps {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(ThresholdResult { jp_star: b, bracket: (a, b), eps_im: eps, evaluations, non_monotone: !monotone })
}

// ---------------------------------------------------------------------------
// grids

/// A parameter that can be swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum SweepParameter {
    Jp,
    Mu,
    U,
    Unn,
    /// Non-reciprocity `α` at fixed `J = sqrt(J_L^A J_R^A)`, leg B mirrored.
    Alpha,
    JLeftA,
    JRightA,
    JLeftB,
    JRightB,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Jp => "jp",
            SweepParameter::Mu => "mu",
            SweepParameter::U => "u",
            SweepParameter::Unn => "unn",
            SweepParameter::Alpha => "alpha",
            SweepParameter::JLeftA => "j_left_a",
            SweepParameter::JRightA => "j_right_a",
            SweepParameter::JLeftB => "j_left_b",
            SweepParameter::JRightB => "j_right_b",
        }
    }

    pub fn apply(self, params: &mut ModelParams, value: f64) {
        match self {
            SweepParameter::Jp => params.jp = value,
            SweepParameter::Mu => params.mu = value,
            SweepParameter::U => params.u = value,
            SweepParameter::Unn => params.unn = value,
            SweepParameter::Alpha => {
                let j = math::sqrt((params.j_left_a * params.j_right_a).abs());
                *params = params.clone().with_j_alpha(j, value);
            }
            SweepParameter::JLeftA => params.j_left_a = value,
            SweepParameter::JRightA => params.j_right_a = value,
            SweepParameter::JLeftB => params.j_left_b = value,
            SweepParameter::JRightB => params.j_right_b = value,
        }
    }
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let all = [
            SweepParameter::Jp,
            SweepParameter::Mu,
            SweepParameter::U,
            SweepParameter::Unn,
            SweepParameter::Alpha,
            SweepParameter::JLeftA,
            SweepParameter::JRightA,
            SweepParameter::JLeftB,
            SweepParameter::JRightB,
        ];
        let key = s.trim().to_ascii_lowercase();
        all.into_iter().find(|p| p.name() == key).ok_or_else(|| format!("unknown sweep parameter '{s}'"))
    }
}

/// Linear range with `points` values, both ends included.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Axis {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| if k + 1 == n { self.max } else { self.min + (self.max - self.min) * k as f64 / (n - 1) as f64 })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum SweepObservable {
    /// Largest `Im E` of the whole spectrum.
    MaxImGlobal,
    /// Cluster count and largest `Im E` of the selected, scattering and
    /// bound clusters.
    MaxImPerCluster,
    /// `N_cor` of the selected clusters' max-Im eigenstate.
    NcorOfMaxImState,
    Polarization,
    Entropies,
    /// Leg-A and left-half density fractions.
    Density,
    Threshold,
}

impl SweepObservable {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            SweepObservable::MaxImGlobal => &["max_im"],
            SweepObservable::MaxImPerCluster => &["clusters", "max_im_selected", "max_im_scattering", "max_im_bound"],
            SweepObservable::NcorOfMaxImState => &["ncor"],
            SweepObservable::Polarization => &["polarization"],
            SweepObservable::Entropies => &["entropy_ab", "entropy_leftright"],
            SweepObservable::Density => &["leg_a_fraction", "left_fraction"],
            SweepObservable::Threshold => &["jp_star", "threshold_evaluations"],
        }
    }

    fn needs_state(self) -> bool {
        matches!(
            self,
            SweepObservable::NcorOfMaxImState
                | SweepObservable::Polarization
                | SweepObservable::Entropies
                | SweepObservable::Density
        )
    }
}

impl FromStr for SweepObservable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max_im_global" | "max_im" => Ok(SweepObservable::MaxImGlobal),
            "max_im_per_cluster" | "clusters" => Ok(SweepObservable::MaxImPerCluster),
            "ncor_of_max_im_state" | "ncor" => Ok(SweepObservable::NcorOfMaxImState),
            "polarization" => Ok(SweepObservable::Polarization),
            "entropies" | "entropy" => Ok(SweepObservable::Entropies),
            "density" => Ok(SweepObservable::Density),
            "threshold" => Ok(SweepObservable::Threshold),
            _ => Err(format!("unknown sweep observable '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ThresholdSpec {
    pub bracket: (f64, f64),
    pub resolution: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepSpec {
    pub base: ModelParams,
    pub axes: Vec<Axis>,
    pub observables: Vec<SweepObservable>,
    pub selector: ClusterSelector,
    /// Reality threshold; `None` uses the per-matrix default.
    pub eps_im: Option<f64>,
    pub threshold: Option<ThresholdSpec>,
    pub gap_factor: f64,
    /// `None` uses a tenth of the larger leg-A hopping.
    pub min_gap: Option<f64>,
    pub eig: EigOptions,
}

impl SweepSpec {
    pub fn new(base: ModelParams, axes: Vec<Axis>, observables: Vec<SweepObservable>) -> Self {
        SweepSpec {
            base,
            axes,
            observables,
            selector: ClusterSelector::All,
            eps_im: None,
            threshold: None,
            gap_factor: DEFAULT_GAP_FACTOR,
            min_gap: None,
            eig: EigOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.base.validate()?;
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(SweepError::InvalidSpec("a sweep needs one or two axes"));
        }
        for a in &self.axes {
            if a.points < 2 {
                return Err(SweepError::InvalidSpec("every axis needs at least two points"));
            }
            if !(a.min.is_finite() && a.max.is_finite()) {
                return Err(SweepError::InvalidSpec("axis bounds must be finite"));
            }
        }
        if self.axes.len() == 2 && self.axes[0].parameter == self.axes[1].parameter {
            return Err(SweepError::InvalidSpec("the two axes must sweep different parameters"));
        }
        if self.observables.is_empty() {
            return Err(SweepError::InvalidSpec("no observables requested"));
        }
        if self.observables.contains(&SweepObservable::Threshold) {
            match self.threshold {
                None => return Err(SweepError::InvalidSpec("threshold observable needs a threshold spec")),
                Some(_) if self.axes.iter().any(|a| a.parameter == SweepParameter::Jp) => {
                    return Err(SweepError::InvalidSpec("threshold search cannot run along a jp axis"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn axis_names(&self) -> Vec<&'static str> {
        self.axes.iter().map(|a| a.parameter.name()).collect()
    }

    /// Observable columns in output order.
    pub fn columns(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.observables.iter().any(|o| o.needs_state()) {
            out.push("state_re");
            out.push("state_im");
        }
        for o in &self.observables {
            for c in o.columns() {
                if !out.contains(c) {
                    out.push(c);
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates and parameters of row `index` (row-major over axes).
    pub fn point(&self, index: usize) -> (Vec<f64>, ModelParams) {
        let mut coords = vec![0.0; self.axes.len()];
        let mut rem = index;
        for (k, a) in self.axes.iter().enumerate().rev() {
            coords[k] = a.values()[rem % a.points];
            rem /= a.points;
        }
        let mut p = self.base.clone();
        for (a, &v) in self.axes.iter().zip(&coords) {
            a.parameter.apply(&mut p, v);
        }
        (coords, p)
    }

    /// Row indices grouped by line (fixed leading coordinates).
    pub fn lines(&self) -> Vec<core::ops::Range<usize>> {
        let inner = self.axes.last().map_or(1, |a| a.points);
        (0..self.len() / inner).map(|k| k * inner..(k + 1) * inner).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepRow {
    pub coordinates: Vec<f64>,
    /// One entry per column; `None` where the quantity is undefined.
    pub values: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepTable {
    pub axis_names: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

struct PointOutcome {
    values: Vec<Option<f64>>,
    centroid: Option<f64>,
}

fn evaluate_point(
    spec: &SweepSpec,
    params: &ModelParams,
    basis: &Basis,
    selector: &ClusterSelector,
    columns: &[&'static str],
) -> Result<PointOutcome, String> {
    let err = |e: &dyn fmt::Display| e.to_string();
    let h = build_hamiltonian(params, basis).map_err(|e| err(&e))?;
    let sys = Eigensystem::new(&h, &spec.eig).map_err(|e| err(&e))?;
    let e = sys.eigenvalues();
    let min_gap = spec.min_gap.unwrap_or_else(|| default_min_gap(params.j_left_a, params.j_right_a));
    let clusters = cluster_spectrum(e, spec.gap_factor, min_gap);
    let picked = select_clusters(selector, e, &clusters, params, basis);
    let centroid = match picked.as_slice() {
        [one] => Some(clusters[*one].centroid(e)),
        _ => None,
    };

    let mut values: Vec<Option<f64>> = vec![None; columns.len()];
    let mut set = |name: &str, v: Option<f64>| {
        if let Some(i) = columns.iter().position(|c| *c == name) {
            values[i] = v;
        }
    };
    let global = e.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    set("max_im", Some(global));
    if spec.observables.contains(&SweepObservable::MaxImPerCluster) {
        set("clusters", Some(clusters.len() as f64));
        set("max_im_selected", selected_max_imag(&picked, &clusters));
        let s = select_clusters(&ClusterSelector::Scattering, e, &clusters, params, basis);
        set("max_im_scattering", selected_max_imag(&s, &clusters));
        let b = select_clusters(&ClusterSelector::Bound, e, &clusters, params, basis);
        set("max_im_bound", selected_max_imag(&b, &clusters));
    }

    if spec.observables.iter().any(|o| o.needs_state()) && !picked.is_empty() {
        let mut best = clusters[picked[0]].max_imag_member(e);
        for &c in &picked[1..] {
            let k = clusters[c].max_imag_member(e);
            if e[k].im > e[best].im {
                best = k;
            }
        }
        set("state_re", Some(e[best].re));
        set("state_im", Some(e[best].im));
        let (v, _) = sys.eigenvector(best).map_err(|x| err(&x))?;
        let cells = basis.cells();
        if spec.observables.contains(&SweepObservable::NcorOfMaxImState) && basis.particles() == 2 {
            set("ncor", Some(correlation_ncor(&v, basis).map_err(|x| err(&x))?));
        }
        let density = site_density(&v, basis).map_err(|x| err(&x))?;
        if spec.observables.contains(&SweepObservable::Polarization) {
            set("polarization", Some(polarization_from_density(&density)));
        }
        if spec.observables.contains(&SweepObservable::Density) {
            set("leg_a_fraction", Some(leg_a_fraction(&density)));
            set("left_fraction", Some(left_fraction(&density)));
        }
        if spec.observables.contains(&SweepObservable::Entropies) {
            set("entropy_ab", Some(entanglement_entropy(&v, basis, &leg_a_sites(cells)).map_err(|x| err(&x))?));
            if cells >= 2 {
                set(
                    "entropy_leftright",
                    Some(entanglement_entropy(&v, basis, &left_half_sites(cells)).map_err(|x| err(&x))?),
                );
            }
        }
    }

    if let (true, Some(t)) = (spec.observables.contains(&SweepObservable::Threshold), spec.threshold) {
        let r = find_threshold_jp(params, selector, spec.eps_im, t.bracket, t.resolution, &spec.eig).map_err(|x| err(&x))?;
        set("jp_star", Some(r.jp_star));
        set("threshold_evaluations", Some(r.evaluations as f64));
    }
    Ok(PointOutcome { values, centroid })
}

/// Evaluate the rows of one line, in order.
pub fn evaluate_line(spec: &SweepSpec, basis: &Basis, line: core::ops::Range<usize>) -> Vec<SweepRow> {
    let columns = spec.columns();
    let mut selector = spec.selector.clone();
    let mut rows = Vec::with_capacity(line.len());
    for index in line {
        let (coordinates, params) = spec.point(index);
        match evaluate_point(spec, &params, basis, &selector, &columns) {
            Ok(out) => {
                if let (ClusterSelector::Tracked(_), Some(c)) = (&selector, out.centroid) {
                    selector = ClusterSelector::Tracked(c);
                }
                rows.push(SweepRow { coordinates, values: out.values, error: None });
            }
            Err(msg) => rows.push(SweepRow { coordinates, values: vec![None; columns.len()], error: Some(msg) }),
        }
    }
    rows
}

/// Basis shared by every point of the sweep.
pub fn sweep_basis(spec: &SweepSpec) -> Result<Basis, SweepError> {
    Ok(Basis::new(spec.base.cells, spec.base.particles, spec.base.statistics)?)
}

pub fn empty_table(spec: &SweepSpec) -> SweepTable {
    SweepTable {
        axis_names: spec.axis_names().into_iter().map(String::from).collect(),
        columns: spec.columns().into_iter().map(String::from).collect(),
        rows: Vec::with_capacity(spec.len()),
    }
}

/// Serial evaluation of the whole grid, rows in row-major order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable, SweepError> {
    spec.validate()?;
    let basis = sweep_basis(spec)?;
    let mut table = empty_table(spec);
    for line in spec.lines() {
        table.rows.extend(evaluate_line(spec, &basis, line));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_params(cells: usize) -> ModelParams {
        ModelParams::new(cells, 2, Statistics::Boson)
    }

    #[test]
    fn pair_classes_and_crossing() {
        let p = pair_params(3).with_u(4.0);
        let t = eonsite_table(&p, (-1.0, 1.0)).unwrap();
        let doublon_a = t.classes.iter().position(|c| c.interaction_count == 1 && c.imbalance == 2).unwrap();
        let doublon_b = t.classes.iter().position(|c| c.interaction_count == 1 && c.imbalance == -2).unwrap();
        assert_eq!(t.classes[doublon_a].energy(4.0, 0.3), 4.6);
        assert_eq!(t.classes[doublon_b].energy(4.0, 0.3), 3.4);
        let x = t.crossings.iter().find(|c| c.first == doublon_b && c.second == doublon_a).unwrap();
        assert_eq!(x.mu, 0.0);
        assert_eq!(x.order, 2);
        let total: usize = t.classes.iter().map(|c| c.population).sum();
        assert_eq!(total, 21);
    }

    #[test]
    fn third_order_crossing() {
        let p = ModelParams::new(4, 3, Statistics::Boson).with_u(16.0);
        let t = eonsite_table(&p, (0.0, 8.0)).unwrap();
        let triplon_b = t.classes.iter().position(|c| c.interaction_count == 3 && c.imbalance == -3).unwrap();
        let mixed_a = t.classes.iter().position(|c| c.interaction_count == 1 && c.imbalance == 3).unwrap();
        let x = t
            .crossings
            .iter()
            .find(|c| (c.first, c.second) == (mixed_a.min(triplon_b), mixed_a.max(triplon_b)))
            .unwrap();
        assert!((x.mu - 16.0 / 3.0).abs() < 1e-12);
        assert_eq!(x.order, 3);
    }

    #[test]
    fn free_particle_counts() {
        let c = |k| OnsiteClass { interaction_count: k, imbalance: 0, population: 1 };
        assert_eq!(c(0).free_particles(3, Statistics::Boson), 3);
        assert_eq!(c(1).free_particles(3, Statistics::Boson), 1);
        assert_eq!(c(3).free_particles(3, Statistics::Boson), 0);
        assert_eq!(c(1).free_particles(2, Statistics::Fermion), 0);
        assert_eq!(c(2).free_particles(4, Statistics::Fermion), 1);
    }

    #[test]
    fn weak_interaction_band_top_is_scattering() {
        // at U=4 the top of the two-particle band lies closer to U than to 0
        let p = pair_params(6).with_u(4.0).with_jp(0.01);
        let b = Basis::new(6, 2, Statistics::Boson).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        let e = crate::eig::eigenvalues(&h, &EigOptions::default()).unwrap();
        let clusters = cluster_spectrum(&e, DEFAULT_GAP_FACTOR, default_min_gap(1.0, 0.5));
        let bound = select_clusters(&ClusterSelector::Bound, &e, &clusters, &p, &b);
        let n: usize = bound.iter().map(|&c| clusters[c].len()).sum();
        assert_eq!(n, 12);
        for &c in &bound {
            assert!(clusters[c].centroid(&e) > 3.0);
        }
    }

    #[test]
    fn selector_parsing_roundtrip() {
        for s in ["all", "rank:2", "nearest:4.5", "tracked:-1", "window:1:2", "scattering", "bound"] {
            let sel: ClusterSelector = s.parse().unwrap();
            assert_eq!(sel.to_string().parse::<ClusterSelector>().unwrap(), sel);
        }
        assert!("window:3:1".parse::<ClusterSelector>().is_err());
        assert!("rank".parse::<ClusterSelector>().is_err());
        assert!("nope".parse::<ClusterSelector>().is_err());
    }

    #[test]
    fn axis_values_include_ends() {
        let a = Axis { parameter: SweepParameter::Mu, min: 0.0, max: 0.45, points: 10 };
        let v = a.values();
        assert_eq!(v.len(), 10);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[9], 0.45);
        assert!((v[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn row_major_points_and_lines() {
        let spec = SweepSpec::new(
            pair_params(3),
            vec![
                Axis { parameter: SweepParameter::U, min: 1.0, max: 2.0, points: 2 },
                Axis { parameter: SweepParameter::Mu, min: 0.0, max: 0.2, points: 3 },
            ],
            vec![SweepObservable::MaxImGlobal],
        );
        let (c, p) = spec.point(4);
        assert_eq!(c, vec![2.0, 0.1]);
        assert_eq!((p.u, p.mu), (2.0, 0.1));
        assert_eq!(spec.lines(), vec![0..3, 3..6]);
    }

    #[test]
    fn decoupled_sweep_is_real() {
        let spec = SweepSpec::new(
            pair_params(4).with_u(4.0),
            vec![Axis { parameter: SweepParameter::Jp, min: 0.0, max: 0.0, points: 2 }],
            vec![SweepObservable::MaxImGlobal, SweepObservable::MaxImPerCluster],
        );
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 2);
        for r in &t.rows {
            assert!(r.error.is_none());
            assert!(r.values[0].unwrap().abs() <= 1e-9);
        }
    }

    #[test]
    fn invalid_specs() {
        let mut spec = SweepSpec::new(
            pair_params(3),
            vec![Axis { parameter: SweepParameter::Jp, min: 0.0, max: 1.0, points: 1 }],
            vec![SweepObservable::MaxImGlobal],
        );
        assert!(run_sweep(&spec).is_err());
        spec.axes[0].points = 3;
        spec.observables.push(SweepObservable::Threshold);
        assert!(run_sweep(&spec).is_err());
        spec.threshold = Some(ThresholdSpec { bracket: (0.0, 1.0), resolution: 0.1 });
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn threshold_bracket_invariant() {
        // scattering states of a short ladder turn complex at small J_p
        let p = pair_params(6).with_u(4.0).with_mu(0.2);
        let r = find_threshold_jp(&p, &ClusterSelector::Scattering, None, (0.0, 0.05), 1e-3, &EigOptions::default()).unwrap();
        assert!(r.bracket.1 - r.bracket.0 <= 1e-3);
        assert_eq!(r.jp_star, r.bracket.1);
        let at = |jp: f64| {
            selected_max_imag_at(&p.clone().with_jp(jp), &Basis::new(6, 2, Statistics::Boson).unwrap(), &ClusterSelector::Scattering, &EigOptions::default())
                .unwrap()
                .unwrap()
                .0
        };
        assert!(at(r.bracket.0) <= r.eps_im);
        assert!(at(r.bracket.1) > r.eps_im);
        let bad = find_threshold_jp(&p, &ClusterSelector::Scattering, None, (0.0, 0.0), 1e-3, &EigOptions::default());
        assert_eq!(bad.unwrap_err(), ThresholdError::BadArguments);
    }
}
