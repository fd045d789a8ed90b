//! Model parameters and sparse Hamiltonian assembly.
//!
//! The bosonic ladder is
//!
//! ```text
//! H = -Σ_{x,σ} (J_L^σ a†_{x,σ} a_{x+1,σ} + J_R^σ a†_{x+1,σ} a_{x,σ})
//!     + J_p Σ_x (a†_{x,A} a_{x,B} + h.c.) + μ Σ_x (n_{x,A} - n_{x,B})
//!     + U/2 Σ_{x,σ} n_{x,σ}(n_{x,σ} - 1)
//! ```
//!
//! with open boundaries. The fermionic variant swaps the onsite Hubbard term
//! for a nearest-neighbour intra-leg interaction `U_NN Σ n_{x,σ} n_{x+1,σ}`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::fock::{hop_in_place, Basis, BasisError, FockState, Statistics};
use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("basis does not match the model: {0}")]
    BasisMismatch(&'static str),
    #[error("invalid model parameters: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// All couplings of the ladder.
///
/// Hoppings are stored as four independent amplitudes. `J_L^σ` multiplies
/// `a†_x a_{x+1}` (a particle moving left), `J_R^σ` multiplies
/// `a†_{x+1} a_x`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelParams {
    pub cells: usize,
    pub particles: usize,
    pub statistics: Statistics,
    pub j_left_a: f64,
    pub j_right_a: f64,
    pub j_left_b: f64,
    pub j_right_b: f64,
    pub jp: f64,
    pub mu: f64,
    pub u: f64,
    pub unn: f64,
}

/// Leftward amplitude `J e^α` of leg A in the reference parameter set.
pub const DEFAULT_J_STRONG: f64 = 1.0;
/// Rightward amplitude `J e^{-α}` of leg A in the reference parameter set.
pub const DEFAULT_J_WEAK: f64 = 0.5;

impl ModelParams {
    /// Reference hoppings (`J e^α = 1`, `J e^{-α} = 0.5`, leg B mirrored), all
    /// other couplings zero.
    pub fn new(cells: usize, particles: usize, statistics: Statistics) -> Self {
        ModelParams {
            cells,
            particles,
            statistics,
            j_left_a: DEFAULT_J_STRONG,
            j_right_a: DEFAULT_J_WEAK,
            j_left_b: DEFAULT_J_WEAK,
            j_right_b: DEFAULT_J_STRONG,
            jp: 0.0,
            mu: 0.0,
            u: 0.0,
            unn: 0.0,
        }
    }

    /// Set the hoppings from `(J, α)` with `α_A = -α_B = α`.
    pub fn with_j_alpha(mut self, j: f64, alpha: f64) -> Self {
        let strong = j * math::exp(alpha);
        let weak = j * math::exp(-alpha);
        self.j_left_a = strong;
        self.j_right_a = weak;
        self.j_left_b = weak;
        self.j_right_b = strong;
        self
    }

    pub fn with_jp(mut self, jp: f64) -> Self {
        self.jp = jp;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_u(mut self, u: f64) -> Self {
        self.u = u;
        self
    }

    pub fn with_unn(mut self, unn: f64) -> Self {
        self.unn = unn;
        self
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        2 * self.cells
    }

    /// Hopping amplitudes `(J_L, J_R)` of leg `A` (`leg == 0`) or `B`.
    #[inline]
    pub fn leg_hoppings(&self, leg: usize) -> (f64, f64) {
        if leg == 0 {
            (self.j_left_a, self.j_right_a)
        } else {
            (self.j_left_b, self.j_right_b)
        }
    }

    /// The interaction strength that is active for this statistics.
    #[inline]
    pub fn interaction(&self) -> f64 {
        match self.statistics {
            Statistics::Boson => self.u,
            Statistics::Fermion => self.unn,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.cells == 0 {
            return Err(ModelError::InvalidParams("cells must be at least 1"));
        }
        if self.particles == 0 {
            return Err(ModelError::InvalidParams("particles must be at least 1"));
        }
        let all = [self.j_left_a, self.j_right_a, self.j_left_b, self.j_right_b, self.jp, self.mu, self.u, self.unn];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParams("couplings must be finite"));
        }
        match self.statistics {
            Statistics::Boson if self.unn != 0.0 => {
                Err(ModelError::InvalidParams("nearest-neighbour interaction is fermion-only"))
            }
            Statistics::Fermion if self.u != 0.0 => Err(ModelError::InvalidParams("onsite interaction is boson-only")),
            Statistics::Fermion if self.particles > 2 * self.cells => {
                Err(ModelError::InvalidParams("more fermions than sites"))
            }
            _ => Ok(()),
        }
    }
}

/// Square matrix in coordinate form: entries sorted by `(row, col)` with
/// duplicates summed and exact zeros dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dimension: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    pub fn from_triplets<I>(dimension: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut raw: Vec<(usize, usize, Complex64)> = triplets.into_iter().collect();
        for &(r, c, _) in &raw {
            assert!(r < dimension && c < dimension, "triplet ({r}, {c}) outside dimension {dimension}");
        }
        raw.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut entries: Vec<(usize, usize, Complex64)> = Vec::with_capacity(raw.len());
        for (r, c, v) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|e| e.2 != Complex64::new(0.0, 0.0));
        SparseOperator { dimension, entries }
    }

    /// Build from real-valued triplets.
    pub fn from_real_triplets<I>(dimension: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::from_triplets(dimension, triplets.into_iter().map(|(r, c, v)| (r, c, Complex64::new(v, 0.0))))
    }

    pub fn from_dense_real(dimension: usize, row_major: &[f64]) -> Self {
        assert_eq!(row_major.len(), dimension * dimension);
        Self::from_real_triplets(
            dimension,
            row_major.iter().enumerate().map(|(k, &v)| (k / dimension, k % dimension, v)),
        )
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        match self.entries.binary_search_by(|e| (e.0, e.1).cmp(&(row, col))) {
            Ok(k) => self.entries[k].2,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.2.im == 0.0)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dimension];
        for &(r, _, v) in &self.entries {
            rows[r] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dimension);
        let mut y = vec![Complex64::new(0.0, 0.0); self.dimension];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dimension, self.entries.iter().map(|&(r, c, v)| (c, r, v)))
    }

    /// Row-major dense copy of the real part. Fails if any entry is complex.
    pub fn to_dense_real(&self) -> Option<Vec<f64>> {
        if !self.is_real() {
            return None;
        }
        let n = self.dimension;
        let mut out = vec![0.0; n * n];
        for &(r, c, v) in &self.entries {
            out[r * n + c] = v.re;
        }
        Some(out)
    }

    /// True when `self[i][j] == self[j][i]` for every entry.
    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|&(r, c, v)| self.get(c, r) == v)
    }
}

/// Integer signature of a configuration's diagonal energy: `(k, d)` with
/// `k` the interaction count (onsite pairs `Σ n(n-1)/2` for bosons,
/// nearest-neighbour intra-leg bonds for fermions) and `d = N_A - N_B`.
pub fn diagonal_signature(occ: &[u8], cells: usize, statistics: Statistics) -> (u64, i64) {
    let (a, b) = occ.split_at(cells);
    let n_a: i64 = a.iter().map(|&n| n as i64).sum();
    let n_b: i64 = b.iter().map(|&n| n as i64).sum();
    let k = match statistics {
        Statistics::Boson => occ.iter().map(|&n| (n as u64) * (n as u64).saturating_sub(1) / 2).sum(),
        Statistics::Fermion => {
            let bonds = |leg: &[u8]| leg.windows(2).map(|w| (w[0] as u64) * (w[1] as u64)).sum::<u64>();
            bonds(a) + bonds(b)
        }
    };
    (k, n_a - n_b)
}

/// Interaction plus chemical-potential energy of a configuration (the diagonal
/// of the Hamiltonian).
pub fn onsite_energy(state: &FockState, params: &ModelParams) -> f64 {
    let (k, d) = diagonal_signature(state.occupations(), params.cells, params.statistics);
    params.interaction() * k as f64 + params.mu * d as f64
}

/// One term `coef * a†_to a_from`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct HopTerm {
    pub from: usize,
    pub to: usize,
    pub coef: f64,
}

/// All nonzero single-particle transfer terms of the model.
pub(crate) fn hop_terms(params: &ModelParams) -> Vec<HopTerm> {
    let l = params.cells;
    let mut terms = Vec::with_capacity(6 * l);
    for leg in 0..2 {
        let (jl, jr) = params.leg_hoppings(leg);
        let base = leg * l;
        for x in 0..l.saturating_sub(1) {
            if jl != 0.0 {
                terms.push(HopTerm { from: base + x + 1, to: base + x, coef: -jl });
            }
            if jr != 0.0 {
                terms.push(HopTerm { from: base + x, to: base + x + 1, coef: -jr });
            }
        }
    }
    if params.jp != 0.0 {
        for x in 0..l {
            terms.push(HopTerm { from: l + x, to: x, coef: params.jp });
            terms.push(HopTerm { from: x, to: l + x, coef: params.jp });
        }
    }
    terms
}

/// Assemble the many-body Hamiltonian on `basis`.
pub fn build_hamiltonian(params: &ModelParams, basis: &Basis) -> Result<SparseOperator, ModelError> {
    params.validate()?;
    if basis.cells() != params.cells {
        return Err(ModelError::BasisMismatch("cell count"));
    }
    if basis.particles() != params.particles {
        return Err(ModelError::BasisMismatch("particle number"));
    }
    if basis.statistics() != params.statistics {
        return Err(ModelError::BasisMismatch("statistics"));
    }
    let terms = hop_terms(params);
    let space = basis.space();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(basis.dimension() * (terms.len() / 2 + 1));
    let mut scratch = vec![0u8; basis.num_sites()];
    for (col, state) in basis.iter().enumerate() {
        let diag = onsite_energy(state, params);
        if diag != 0.0 {
            triplets.push((col, col, diag));
        }
        for t in &terms {
            scratch.copy_from_slice(state.occupations());
            if let Some(amp) = hop_in_place(&mut scratch, t.from, t.to, params.statistics) {
                let row = space.rank_unchecked(&scratch);
                triplets.push((row, col, t.coef * amp));
            }
        }
    }
    Ok(SparseOperator::from_real_triplets(basis.dimension(), triplets))
}

/// First-quantized `2L x 2L` matrix on the combined site coordinate.
pub fn build_single_particle_matrix(params: &ModelParams) -> SparseOperator {
    let l = params.cells;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for x in 0..l {
        if params.mu != 0.0 {
            triplets.push((x, x, params.mu));
            triplets.push((l + x, l + x, -params.mu));
        }
    }
    for t in hop_terms(params) {
        triplets.push((t.to, t.from, t.coef));
    }
    SparseOperator::from_real_triplets(2 * l, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(cells: usize, particles: usize) -> ModelParams {
        ModelParams::new(cells, particles, Statistics::Boson)
    }

    #[test]
    fn pair_state_diagonal() {
        let p = reference(3, 2).with_u(4.0).with_mu(0.2);
        let mut occ = vec![0u8; 6];
        occ[1] = 2;
        let e = onsite_energy(&FockState::new(occ), &p);
        assert!((e - 4.4).abs() < 1e-14);
    }

    #[test]
    fn three_particle_onsite_classes() {
        let p = reference(4, 3).with_u(16.0).with_mu(1.25);
        let mut triplon_b = vec![0u8; 8];
        triplon_b[5] = 3;
        let e = onsite_energy(&FockState::new(triplon_b), &p);
        assert!((e - (48.0 - 3.0 * 1.25)).abs() < 1e-12);
        let mut doublon_single_a = vec![0u8; 8];
        doublon_single_a[0] = 2;
        doublon_single_a[2] = 1;
        let e = onsite_energy(&FockState::new(doublon_single_a), &p);
        assert!((e - (16.0 + 3.0 * 1.25)).abs() < 1e-12);
        // the two classes cross at mu = 16/3
        let mu_star: f64 = 16.0 / 3.0;
        assert!(((48.0 - 3.0 * mu_star) - (16.0 + 3.0 * mu_star)).abs() < 1e-12);
    }

    #[test]
    fn single_chain_matrix_element() {
        // only leg A is populated; |2,0> on cells 1,2 of leg A
        let p = reference(2, 2);
        let b = Basis::new(2, 2, Statistics::Boson).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        let src = b.index_of(&FockState::new(vec![2, 0, 0, 0])).unwrap();
        let dst = b.index_of(&FockState::new(vec![1, 1, 0, 0])).unwrap();
        assert!((h.get(dst, src).re + 0.5 * core::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((h.get(dst, src).re + 0.70711).abs() < 1e-5);
    }

    #[test]
    fn decoupled_single_particle_blocks() {
        let p = reference(4, 1);
        let h = build_single_particle_matrix(&p);
        for &(r, c, _) in h.entries() {
            assert_eq!(r < 4, c < 4, "entry ({r},{c}) couples the legs");
        }
        // leg B is the mirror image of leg A
        assert_eq!(h.get(0, 1).re, -1.0);
        assert_eq!(h.get(1, 0).re, -0.5);
        assert_eq!(h.get(4, 5).re, -0.5);
        assert_eq!(h.get(5, 4).re, -1.0);
    }

    #[test]
    fn interleg_entries_only_on_rungs() {
        let p = reference(5, 1).with_jp(0.01);
        let h = build_single_particle_matrix(&p);
        for &(r, c, v) in h.entries() {
            if (r < 5) != (c < 5) {
                assert_eq!(r % 5, c % 5);
                assert_eq!(v.re, 0.01);
            }
        }
    }

    #[test]
    fn hermitian_limit_is_symmetric() {
        let p = reference(4, 2).with_j_alpha(0.7, 0.0).with_jp(0.3).with_u(2.0).with_mu(0.4);
        let b = Basis::new(4, 2, Statistics::Boson).unwrap();
        assert!(build_hamiltonian(&p, &b).unwrap().is_symmetric());
        assert!(build_single_particle_matrix(&p).is_symmetric());
    }

    #[test]
    fn j_alpha_conversion() {
        let p = reference(2, 1).with_j_alpha(core::f64::consts::FRAC_1_SQRT_2, core::f64::consts::LN_2 / 2.0);
        assert!((p.j_left_a - 1.0).abs() < 1e-15);
        assert!((p.j_right_a - 0.5).abs() < 1e-15);
        assert!((p.j_left_b - 0.5).abs() < 1e-15);
        assert!((p.j_right_b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_basis_is_rejected() {
        let p = reference(3, 2);
        let b = Basis::new(3, 1, Statistics::Boson).unwrap();
        assert!(matches!(build_hamiltonian(&p, &b), Err(ModelError::BasisMismatch(_))));
        let b = Basis::new(2, 2, Statistics::Boson).unwrap();
        assert!(matches!(build_hamiltonian(&p, &b), Err(ModelError::BasisMismatch(_))));
        let b = Basis::new(3, 2, Statistics::Fermion).unwrap();
        assert!(matches!(build_hamiltonian(&p, &b), Err(ModelError::BasisMismatch(_))));
    }

    #[test]
    fn interaction_belongs_to_statistics() {
        assert!(reference(3, 2).with_unn(1.0).validate().is_err());
        let mut f = reference(3, 2);
        f.statistics = Statistics::Fermion;
        assert!(f.clone().with_u(1.0).validate().is_err());
        assert!(f.with_unn(16.0).validate().is_ok());
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let op = SparseOperator::from_real_triplets(2, [(0, 1, 1.0), (0, 1, 2.5), (1, 0, 1.0), (1, 0, -1.0)]);
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(0, 1).re, 3.5);
    }

    #[test]
    fn fermion_nearest_neighbour_energy() {
        let mut p = reference(3, 2).with_mu(0.5);
        p.statistics = Statistics::Fermion;
        p.unn = 16.0;
        // adjacent on leg A, cells 1 and 2
        let e = onsite_energy(&FockState::new(vec![1, 1, 0, 0, 0, 0]), &p);
        assert!((e - 17.0).abs() < 1e-14);
        // across the leg boundary (cell 3 of A and cell 1 of B) is not a bond
        let e = onsite_energy(&FockState::new(vec![0, 0, 1, 1, 0, 0]), &p);
        assert!(e.abs() < 1e-14);
    }
}
