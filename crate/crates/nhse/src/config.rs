//! Run configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use nhse_core::perturb::PairCoupling;
use nhse_core::sweep::{Axis, ClusterSelector, SweepObservable, ThresholdSpec};
use nhse_core::{EigOptions, ModelParams, Statistics};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Model section. Hoppings are given either as `(j, alpha)` or as up to four
/// amplitudes; the two forms cannot be mixed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    /// Hopping scale; defaults to `e^{-alpha}` so that `J e^α = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_left_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_right_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_left_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_right_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unn: Option<f64>,
}

impl ModelConfig {
    pub fn resolve(&self) -> Result<ModelParams, CliError> {
        let cells = self.cells.ok_or_else(|| CliError::Config("model.cells is required".into()))?;
        let particles = self.particles.ok_or_else(|| CliError::Config("model.particles is required".into()))?;
        let stats = self.statistics.unwrap_or(Statistics::Boson);
        let mut p = ModelParams::new(cells, particles, stats);
        let amplitudes = [self.j_left_a, self.j_right_a, self.j_left_b, self.j_right_b];
        if self.j.is_some() || self.alpha.is_some() {
            if amplitudes.iter().any(Option::is_some) {
                return Err(CliError::Config("give hoppings either as (j, alpha) or as amplitudes, not both".into()));
            }
            let alpha = self.alpha.ok_or_else(|| CliError::Config("model.j needs model.alpha".into()))?;
            let j = self.j.unwrap_or_else(|| (-alpha).exp());
            p = p.with_j_alpha(j, alpha);
        } else {
            p.j_left_a = self.j_left_a.unwrap_or(p.j_left_a);
            p.j_right_a = self.j_right_a.unwrap_or(p.j_right_a);
            p.j_left_b = self.j_left_b.unwrap_or(p.j_left_b);
            p.j_right_b = self.j_right_b.unwrap_or(p.j_right_b);
        }
        p.jp = self.jp.unwrap_or(0.0);
        p.mu = self.mu.unwrap_or(0.0);
        p.u = self.u.unwrap_or(0.0);
        p.unn = self.unn.unwrap_or(0.0);
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }

    /// The four-amplitude form of resolved parameters.
    pub fn from_params(p: &ModelParams) -> Self {
        ModelConfig {
            cells: Some(p.cells),
            particles: Some(p.particles),
            statistics: Some(p.statistics),
            j: None,
            alpha: None,
            j_left_a: Some(p.j_left_a),
            j_right_a: Some(p.j_right_a),
            j_left_b: Some(p.j_left_b),
            j_right_b: Some(p.j_right_b),
            jp: Some(p.jp),
            mu: Some(p.mu),
            u: Some(p.u),
            unn: Some(p.unn),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    /// Eigenstate selector: `max_im`, `index:K` or `cluster:<cluster selector>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    /// Cluster selector, see [`ClusterSelector`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<SweepObservable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<PairCoupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_im: Option<f64>,
    /// Relative residual tolerance of the eigensolver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Largest basis dimension accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
}

/// Command-line overrides, applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub cells: Option<usize>,
    pub particles: Option<usize>,
    pub statistics: Option<Statistics>,
    /// Leftward leg-A amplitude; leg B gets it as its rightward amplitude.
    pub jl: Option<f64>,
    /// Rightward leg-A amplitude; leg B gets it as its leftward amplitude.
    pub jr: Option<f64>,
    pub j: Option<f64>,
    pub alpha: Option<f64>,
    pub jp: Option<f64>,
    pub mu: Option<f64>,
    pub u: Option<f64>,
    pub unn: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub eps_im: Option<f64>,
    pub state: Option<String>,
    pub clusters: Option<String>,
}

pub const CAPACITY_ENV: &str = "NHSE_CAPACITY";

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        let m = &mut self.model;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = Some(v);
                }
            };
        }
        set!(m.cells, o.cells);
        set!(m.particles, o.particles);
        set!(m.statistics, o.statistics);
        set!(m.j, o.j);
        set!(m.alpha, o.alpha);
        if let Some(jl) = o.jl {
            m.j_left_a = Some(jl);
            m.j_right_b = Some(jl);
        }
        if let Some(jr) = o.jr {
            m.j_right_a = Some(jr);
            m.j_left_b = Some(jr);
        }
        set!(m.jp, o.jp);
        set!(m.mu, o.mu);
        set!(m.u, o.u);
        set!(m.unn, o.unn);
        set!(self.out, o.out);
        set!(self.workers, o.workers);
        set!(self.eps_im, o.eps_im);
        set!(self.state, o.state);
        set!(self.clusters, o.clusters);
    }

    /// Fill in the capacity from the environment when the file leaves it open.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(CAPACITY_ENV) {
            let cap = v
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("{CAPACITY_ENV} must be a positive integer, got '{v}'")))?;
            self.capacity = Some(cap);
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.model.resolve()
    }

    pub fn eig_options(&self) -> Result<EigOptions, CliError> {
        let mut o = EigOptions::default();
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config("tol must be positive".into()));
            }
            o.tol = t;
        }
        if let Some(c) = self.capacity {
            if c == 0 {
                return Err(CliError::Config("capacity must be positive".into()));
            }
            o.capacity = c;
        }
        Ok(o)
    }

    pub fn cluster_selector(&self) -> Result<ClusterSelector, CliError> {
        match &self.clusters {
            None => Ok(ClusterSelector::All),
            Some(s) => s.parse().map_err(CliError::Config),
        }
    }

    pub fn state_selector(&self) -> Result<StateSelector, CliError> {
        match &self.state {
            None => Ok(StateSelector::MaxIm),
            Some(s) => s.parse().map_err(CliError::Config),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("nhse_out"))
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1).max(1)
    }

    /// Fully explicit copy: model in four-amplitude form, capacity and
    /// tolerance filled in. Loading it reproduces the run.
    pub fn resolved(&self) -> Result<Self, CliError> {
        let mut r = self.clone();
        r.model = ModelConfig::from_params(&self.params()?);
        let o = self.eig_options()?;
        r.tol = Some(o.tol);
        r.capacity = Some(o.capacity);
        Ok(r)
    }
}

/// Which eigenstate a state-level command reports on.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSelector {
    /// Largest `Im E` of the whole spectrum.
    MaxIm,
    /// Position in the sorted spectrum.
    Index(usize),
    /// Largest `Im E` inside the selected clusters.
    Cluster(ClusterSelector),
}

impl std::str::FromStr for StateSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "max_im" {
            return Ok(StateSelector::MaxIm);
        }
        if let Some(k) = s.strip_prefix("index:") {
            return k.trim().parse().map(StateSelector::Index).map_err(|_| format!("bad state index in '{s}'"));
        }
        if let Some(c) = s.strip_prefix("cluster:") {
            return c.parse().map(StateSelector::Cluster);
        }
        Err(format!("unknown state selector '{s}' (max_im, index:K, cluster:<selector>)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_alpha_form_keeps_strong_hop_at_one() {
        let c = RunConfig::from_json(r#"{"model": {"cells": 4, "particles": 2, "alpha": 0.34657359027997264}}"#).unwrap();
        let p = c.params().unwrap();
        assert!((p.j_left_a - 1.0).abs() < 1e-15);
        assert!((p.j_right_a - 0.5).abs() < 1e-15);
        assert!((p.j_left_b - 0.5).abs() < 1e-15);
        assert!((p.j_right_b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_hopping_forms_rejected() {
        let c = RunConfig::from_json(r#"{"model": {"cells": 4, "particles": 2, "alpha": 0.3, "j_left_a": 1.0}}"#).unwrap();
        assert!(matches!(c.params(), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"model": {"cells": 4, "particles": 2, "J": 1.0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"modle": {}}"#).is_err());
    }

    #[test]
    fn overrides_mirror_leg_b() {
        let mut c = RunConfig::default();
        c.apply(&Overrides { cells: Some(3), particles: Some(1), jl: Some(2.0), jr: Some(0.25), ..Overrides::default() });
        let p = c.params().unwrap();
        assert_eq!((p.j_left_a, p.j_right_a, p.j_left_b, p.j_right_b), (2.0, 0.25, 0.25, 2.0));
    }

    #[test]
    fn resolved_roundtrip() {
        let c = RunConfig::from_json(
            r#"{"model": {"cells": 5, "particles": 2, "alpha": 0.2, "u": 4, "jp": 0.01},
                "axes": [{"parameter": "mu", "min": 0, "max": 1, "points": 3}],
                "observables": ["max_im_global"], "clusters": "bound"}"#,
        )
        .unwrap();
        let r = c.resolved().unwrap();
        let text = serde_json::to_string_pretty(&r).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.params().unwrap(), c.params().unwrap());
    }

    #[test]
    fn state_selectors() {
        assert_eq!("max_im".parse::<StateSelector>().unwrap(), StateSelector::MaxIm);
        assert_eq!("index:7".parse::<StateSelector>().unwrap(), StateSelector::Index(7));
        assert_eq!("cluster:bound".parse::<StateSelector>().unwrap(), StateSelector::Cluster(ClusterSelector::Bound));
        assert!("cluster:nope".parse::<StateSelector>().is_err());
    }
}
