//! Many-body occupation bases on a two-leg ladder.
//!
//! A ladder with `L` cells has `2L` sites. States are occupation sequences
//! over those sites, ordered lexicographically (ascending), so the first state
//! of a bosonic basis is `(0, ..., 0, N)`. Ranking is combinatorial: no hash
//! map is kept, and `rank` costs `O(2L * N)`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Default upper bound on the number of basis states.
pub const DEFAULT_BASIS_CAPACITY: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "lowercase"))]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Leg {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BasisError {
    #[error("invalid basis arguments: {0}")]
    InvalidArguments(&'static str),
    #[error("basis dimension {dimension} exceeds the capacity limit {capacity}")]
    Capacity { dimension: u64, capacity: usize },
    #[error("state is not in the basis: {0}")]
    NotInBasis(&'static str),
    #[error("index {index} out of range for basis of dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },
    #[error("cell {cell} out of range 1..={cells}")]
    CellOutOfRange { cell: usize, cells: usize },
}

/// Zero-based site on the combined coordinate: A-leg cells occupy `[0, L)`,
/// B-leg cells `[L, 2L)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteIndex(usize);

impl SiteIndex {
    #[inline]
    pub const fn new(value: usize) -> Self {
        SiteIndex(value)
    }

    #[inline]
    pub const fn value(self) -> usize {
        self.0
    }

    /// 1-based cell of this site in a ladder of `cells` cells.
    #[inline]
    pub fn cell(self, cells: usize) -> usize {
        self.0 % cells + 1
    }

    #[inline]
    pub fn leg(self, cells: usize) -> Leg {
        if self.0 < cells {
            Leg::A
        } else {
            Leg::B
        }
    }
}

impl fmt::Display for SiteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Map `(cell, leg)` to the combined site index. `cell` is 1-based.
pub fn combined_site(cell: usize, leg: Leg, cells: usize) -> Result<SiteIndex, BasisError> {
    if cell == 0 || cell > cells {
        return Err(BasisError::CellOutOfRange { cell, cells });
    }
    Ok(match leg {
        Leg::A => SiteIndex(cell - 1),
        Leg::B => SiteIndex(cells + cell - 1),
    })
}

/// Occupation numbers over all `2L` sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FockState {
    occupations: Vec<u8>,
}

impl FockState {
    pub fn new(occupations: Vec<u8>) -> Self {
        FockState { occupations }
    }

    /// The empty state on `sites` sites.
    pub fn vacuum(sites: usize) -> Self {
        FockState { occupations: vec![0; sites] }
    }

    #[inline]
    pub fn occupations(&self) -> &[u8] {
        &self.occupations
    }

    #[inline]
    pub fn occupation(&self, site: SiteIndex) -> u8 {
        self.occupations[site.0]
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.occupations.len()
    }

    pub fn particle_count(&self) -> usize {
        self.occupations.iter().map(|&n| n as usize).sum()
    }

    pub fn into_occupations(self) -> Vec<u8> {
        self.occupations
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (i, n) in self.occupations.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(">")
    }
}

/// Counting table and lexicographic ranking for `particles` indistinguishable
/// particles on `sites` sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupationSpace {
    sites: usize,
    particles: usize,
    statistics: Statistics,
    // counts[m * (particles + 1) + k]: configurations of k particles on m sites, saturating.
    counts: Vec<u64>,
}

impl OccupationSpace {
    pub fn new(sites: usize, particles: usize, statistics: Statistics) -> Self {
        let stride = particles + 1;
        let mut counts = vec![0u64; (sites + 1) * stride];
        counts[0] = 1;
        for m in 1..=sites {
            for k in 0..=particles {
                let max_here = match statistics {
                    Statistics::Boson => k,
                    Statistics::Fermion => k.min(1),
                };
                let mut total = 0u64;
                for v in 0..=max_here {
                    total = total.saturating_add(counts[(m - 1) * stride + k - v]);
                }
                counts[m * stride + k] = total;
            }
        }
        OccupationSpace { sites, particles, statistics, counts }
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.sites
    }

    #[inline]
    pub fn particles(&self) -> usize {
        self.particles
    }

    #[inline]
    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Number of configurations of `k` particles on `m` sites (saturating at `u64::MAX`).
    #[inline]
    pub fn count(&self, m: usize, k: usize) -> u64 {
        self.counts[m * (self.particles + 1) + k]
    }

    /// Total number of configurations (saturating).
    #[inline]
    pub fn dimension(&self) -> u64 {
        self.count(self.sites, self.particles)
    }

    #[inline]
    fn max_occupation(&self) -> u8 {
        match self.statistics {
            Statistics::Boson => u8::MAX,
            Statistics::Fermion => 1,
        }
    }

    /// Check that `occ` is a configuration of this space.
    pub fn validate(&self, occ: &[u8]) -> Result<(), BasisError> {
        if occ.len() != self.sites {
            return Err(BasisError::NotInBasis("wrong number of sites"));
        }
        let max = self.max_occupation();
        let mut total = 0usize;
        for &n in occ {
            if n > max {
                return Err(BasisError::NotInBasis("occupation violates statistics"));
            }
            total += n as usize;
        }
        if total != self.particles {
            return Err(BasisError::NotInBasis("wrong particle number"));
        }
        Ok(())
    }

    /// Rank of a configuration already known to be valid.
    pub(crate) fn rank_unchecked(&self, occ: &[u8]) -> usize {
        let mut rank = 0u64;
        let mut remaining = self.particles;
        for (i, &n) in occ.iter().enumerate() {
            let rest = self.sites - i - 1;
            for v in 0..n as usize {
                rank += self.count(rest, remaining - v);
            }
            remaining -= n as usize;
        }
        rank as usize
    }

    pub fn rank(&self, occ: &[u8]) -> Result<usize, BasisError> {
        self.validate(occ)?;
        Ok(self.rank_unchecked(occ))
    }

    /// Write the configuration of lexicographic rank `index` into `out`.
    pub fn unrank_into(&self, mut index: u64, out: &mut [u8]) {
        debug_assert_eq!(out.len(), self.sites);
        let mut remaining = self.particles;
        let max = self.max_occupation() as usize;
        for i in 0..self.sites {
            let rest = self.sites - i - 1;
            let top = remaining.min(max);
            let mut chosen = top;
            for v in 0..=top {
                let c = self.count(rest, remaining - v);
                if index < c {
                    chosen = v;
                    break;
                }
                index -= c;
            }
            out[i] = chosen as u8;
            remaining -= chosen;
        }
    }
}

/// Ordered many-body basis with bidirectional state/index maps.
#[derive(Clone, Debug)]
pub struct Basis {
    cells: usize,
    space: OccupationSpace,
    states: Vec<FockState>,
}

impl Basis {
    /// Enumerate the basis with the default capacity limit.
    pub fn new(cells: usize, particles: usize, statistics: Statistics) -> Result<Self, BasisError> {
        Self::with_capacity_limit(cells, particles, statistics, DEFAULT_BASIS_CAPACITY)
    }

    pub fn with_capacity_limit(
        cells: usize,
        particles: usize,
        statistics: Statistics,
        capacity: usize,
    ) -> Result<Self, BasisError> {
        if cells == 0 {
            return Err(BasisError::InvalidArguments("need at least one cell"));
        }
        if particles == 0 {
            return Err(BasisError::InvalidArguments("need at least one particle"));
        }
        if particles > u8::MAX as usize {
            return Err(BasisError::InvalidArguments("at most 255 particles"));
        }
        let sites = 2 * cells;
        if statistics == Statistics::Fermion && particles > sites {
            return Err(BasisError::InvalidArguments("more fermions than sites"));
        }
        let space = OccupationSpace::new(sites, particles, statistics);
        let dimension = space.dimension();
        if dimension > capacity as u64 {
            return Err(BasisError::Capacity { dimension, capacity });
        }
        let mut states = Vec::with_capacity(dimension as usize);
        let mut buf = vec![0u8; sites];
        for idx in 0..dimension {
            space.unrank_into(idx, &mut buf);
            states.push(FockState::new(buf.clone()));
        }
        Ok(Basis { cells, space, states })
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.cells
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        2 * self.cells
    }

    #[inline]
    pub fn particles(&self) -> usize {
        self.space.particles
    }

    #[inline]
    pub fn statistics(&self) -> Statistics {
        self.space.statistics
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    #[inline]
    pub fn space(&self) -> &OccupationSpace {
        &self.space
    }

    pub fn index_of(&self, state: &FockState) -> Result<usize, BasisError> {
        self.space.rank(state.occupations())
    }

    pub fn rank(&self, state: &FockState) -> Result<usize, BasisError> {
        self.index_of(state)
    }

    pub fn unrank(&self, index: usize) -> Result<&FockState, BasisError> {
        self.states.get(index).ok_or(BasisError::IndexOutOfRange { index, dimension: self.states.len() })
    }

    pub fn iter(&self) -> core::slice::Iter<'_, FockState> {
        self.states.iter()
    }
}

/// Apply `a†_to a_from` to `state`.
///
/// Returns `None` when the result vanishes (empty source site, or a Pauli-blocked
/// fermion target). Bosonic amplitudes are `sqrt(n_from) * sqrt(n_to + 1)`;
/// fermionic ones are `(-1)^k` with `k` the number of occupied sites strictly
/// between `from` and `to`.
pub fn apply_single_hop(
    state: &FockState,
    from: SiteIndex,
    to: SiteIndex,
    statistics: Statistics,
) -> Option<(FockState, f64)> {
    let mut occ = state.occupations.clone();
    let amp = hop_in_place(&mut occ, from.0, to.0, statistics)?;
    Some((FockState::new(occ), amp))
}

/// In-place variant of [`apply_single_hop`]; `occ` is left untouched when the
/// move vanishes.
pub(crate) fn hop_in_place(occ: &mut [u8], from: usize, to: usize, statistics: Statistics) -> Option<f64> {
    debug_assert_ne!(from, to, "a hop needs two distinct sites");
    let n_from = occ[from];
    if n_from == 0 {
        return None;
    }
    let n_to = occ[to];
    let amp = match statistics {
        Statistics::Boson => crate::math::sqrt(n_from as f64 * (n_to as f64 + 1.0)),
        Statistics::Fermion => {
            if n_to != 0 {
                return None;
            }
            let (lo, hi) = if from < to { (from, to) } else { (to, from) };
            let between: u32 = occ[lo + 1..hi].iter().map(|&n| n as u32).sum();
            if between % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    occ[from] -= 1;
    occ[to] += 1;
    Some(amp)
}
