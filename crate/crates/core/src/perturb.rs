//! Second-order effective model for tightly bound pairs.
//!
//! At large `U` the two-boson states with both particles on one site form an
//! isolated band near `E = U`. Eliminating the singly occupied intermediate
//! states at second order leaves a single-particle ladder on the pair sites
//! `|β_{x,σ}⟩⟩ = (a†_{x,σ})²/√2 |vac⟩`, indexed like the combined site
//! coordinate.
//!
//! Two coefficient sets are available:
//!
//! - [`PairCoupling::Reference`]: hoppings `√2 J²/U`, inter-leg
//!   `√2 J_p² [1/(U+2μ) + 1/(U-2μ)]`, diagonal
//!   `U ± 2μ + √2 J_p²/U + 2√2 J_L J_R/U`.
//! - [`PairCoupling::Rederived`]: the same elimination carried out with the
//!   `√2` matrix elements of both hops, which gives hoppings `2 J²/U`,
//!   inter-leg `J_p² [1/(U+2μ) + 1/(U-2μ)]` and a diagonal with one
//!   `2 J_L J_R/U` per existing neighbour plus `2 J_p²/(U ± 2μ)`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::eig::{self, compare_eigenvalues, EigError, EigOptions};
use crate::fock::{Basis, BasisError, Statistics};
use crate::model::{build_hamiltonian, ModelError, ModelParams, SparseOperator};
use crate::observables::{cluster_spectrum, default_min_gap, DEFAULT_GAP_FACTOR};
use crate::sweep::{select_clusters, ClusterSelector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerturbError {
    #[error("effective pair model needs a nonzero onsite interaction")]
    ZeroInteraction,
    #[error("resonant denominator: |U - 2|mu|| is below 1e-6 |U|")]
    Resonance,
    #[error("effective pair model is defined for bosons only")]
    NotBosonic,
    #[error("effective pair model needs exactly two particles, got {0}")]
    ParticleNumber(usize),
    #[error("bound cluster not isolated: expected {expected} states, found {found}")]
    BoundClusterNotIsolated { expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Eig(#[from] EigError),
}

/// Which second-order coefficients to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "lowercase"))]
pub enum PairCoupling {
    #[default]
    Reference,
    Rederived,
}

/// Coefficients of the pair ladder.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EffectivePairModel {
    pub cells: usize,
    pub coupling: PairCoupling,
    /// `(left, right)` pair hoppings on legs A and B.
    pub hops: [(f64, f64); 2],
    /// Inter-leg pair coupling.
    pub interleg: f64,
    /// Diagonal per pair site, combined-site order.
    pub diagonal: Vec<f64>,
}

fn check(params: &ModelParams) -> Result<(), PerturbError> {
    params.validate()?;
    if params.statistics != Statistics::Boson {
        return Err(PerturbError::NotBosonic);
    }
    if params.u == 0.0 {
        return Err(PerturbError::ZeroInteraction);
    }
    let u = params.u;
    if (u - 2.0 * params.mu).abs() < 1e-6 * u.abs() || (u + 2.0 * params.mu).abs() < 1e-6 * u.abs() {
        return Err(PerturbError::Resonance);
    }
    Ok(())
}

impl EffectivePairModel {
    pub fn new(params: &ModelParams, coupling: PairCoupling) -> Result<Self, PerturbError> {
        check(params)?;
        let l = params.cells;
        let u = params.u;
        let jp2 = params.jp * params.jp;
        let energies = [u + 2.0 * params.mu, u - 2.0 * params.mu];
        let both_denominators = 1.0 / energies[0] + 1.0 / energies[1];
        let sqrt2 = core::f64::consts::SQRT_2;
        let mut hops = [(0.0, 0.0); 2];
        let mut diagonal = Vec::with_capacity(2 * l);
        let interleg = match coupling {
            PairCoupling::Reference => sqrt2 * jp2 * both_denominators,
            PairCoupling::Rederived => jp2 * both_denominators,
        };
        for leg in 0..2 {
            let (jl, jr) = params.leg_hoppings(leg);
            hops[leg] = match coupling {
                PairCoupling::Reference => (sqrt2 * jl * jl / u, sqrt2 * jr * jr / u),
                PairCoupling::Rederived => (2.0 * jl * jl / u, 2.0 * jr * jr / u),
            };
            for x in 0..l {
                let shift = match coupling {
                    PairCoupling::Reference => sqrt2 * jp2 / u + 2.0 * sqrt2 * jl * jr / u,
                    PairCoupling::Rederived => {
                        let neighbours = usize::from(x > 0) + usize::from(x + 1 < l);
                        neighbours as f64 * 2.0 * jl * jr / u + 2.0 * jp2 / energies[leg]
                    }
                };
                diagonal.push(energies[leg] + shift);
            }
        }
        Ok(EffectivePairModel { cells: l, coupling, hops, interleg, diagonal })
    }

    /// The `2L x 2L` matrix. Row `x`, column `x+1` carries the leftward pair
    /// hop, mirroring the bare model's orientation.
    pub fn matrix(&self) -> SparseOperator {
        let l = self.cells;
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(6 * l);
        for (s, &d) in self.diagonal.iter().enumerate() {
            t.push((s, s, d));
        }
        for leg in 0..2 {
            let (left, right) = self.hops[leg];
            let base = leg * l;
            for x in 0..l.saturating_sub(1) {
                t.push((base + x, base + x + 1, left));
                t.push((base + x + 1, base + x, right));
            }
        }
        for x in 0..l {
            t.push((x, l + x, self.interleg));
            t.push((l + x, x, self.interleg));
        }
        SparseOperator::from_real_triplets(2 * l, t)
    }
}

pub fn build_effective_pair_hamiltonian(params: &ModelParams, coupling: PairCoupling) -> Result<SparseOperator, PerturbError> {
    Ok(EffectivePairModel::new(params, coupling)?.matrix())
}

/// Width `4√2 J_L J_R / U` of the reference pair band on leg A.
pub fn pair_bandwidth(params: &ModelParams) -> f64 {
    4.0 * core::f64::consts::SQRT_2 * (params.j_left_a * params.j_right_a).abs() / params.u.abs()
}

/// Full-model bound cluster against the effective spectrum at one `U`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpectrumComparison {
    pub u: f64,
    pub full: Vec<Complex64>,
    pub effective: Vec<Complex64>,
    pub max_deviation: f64,
}

/// Comparison at `U` and `2U`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DeviationReport {
    pub params: ModelParams,
    pub coupling: PairCoupling,
    pub at_u: SpectrumComparison,
    pub at_double_u: SpectrumComparison,
    /// `max_deviation(U) / max_deviation(2U)`.
    pub ratio: f64,
}

/// Sorted bound-cluster eigenvalues of the full two-particle model.
pub fn bound_cluster_eigenvalues(params: &ModelParams, opts: &EigOptions) -> Result<Vec<Complex64>, PerturbError> {
    check(params)?;
    if params.particles != 2 {
        return Err(PerturbError::ParticleNumber(params.particles));
    }
    let basis = Basis::new(params.cells, 2, Statistics::Boson)?;
    let h = build_hamiltonian(params, &basis)?;
    let eigenvalues = eig::eigenvalues(&h, opts)?;
    let clusters = cluster_spectrum(&eigenvalues, DEFAULT_GAP_FACTOR, default_min_gap(params.j_left_a, params.j_right_a));
    let picked = select_clusters(&ClusterSelector::Bound, &eigenvalues, &clusters, params, &basis);
    let mut bound: Vec<Complex64> = picked.iter().flat_map(|&c| clusters[c].members.iter().map(|&k| eigenvalues[k])).collect();
    bound.sort_by(compare_eigenvalues);
    let expected = 2 * params.cells;
    if bound.len() != expected {
        return Err(PerturbError::BoundClusterNotIsolated { expected, found: bound.len() });
    }
    Ok(bound)
}

/// Compare the full and effective spectra at the given `U`.
pub fn compare_spectra(params: &ModelParams, coupling: PairCoupling, opts: &EigOptions) -> Result<SpectrumComparison, PerturbError> {
    let full = bound_cluster_eigenvalues(params, opts)?;
    let eff_op = build_effective_pair_hamiltonian(params, coupling)?;
    let effective = eig::eigenvalues(&eff_op, opts)?;
    let max_deviation = full.iter().zip(&effective).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(SpectrumComparison { u: params.u, full, effective, max_deviation })
}

/// Run the comparison at `U` and `2U`.
pub fn validate_effective_model(params: &ModelParams, coupling: PairCoupling, opts: &EigOptions) -> Result<DeviationReport, PerturbError> {
    let at_u = compare_spectra(params, coupling, opts)?;
    let doubled = params.clone().with_u(2.0 * params.u);
    let at_double_u = compare_spectra(&doubled, coupling, opts)?;
    let ratio = at_u.max_deviation / at_double_u.max_deviation;
    Ok(DeviationReport { params: params.clone(), coupling, at_u, at_double_u, ratio })
}
