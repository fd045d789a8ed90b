//! Sub-command implementations. Each writes its products under the output
//! directory together with `run_config.json` (re-ingestable) and
//! `metadata.json`, and returns a one-paragraph summary for stdout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nhse_core::fock::OccupationSpace;
use nhse_core::observables::{
    classify_cluster, cluster_spectrum, correlation_matrix, correlation_ncor, default_min_gap, entanglement_entropy,
    leg_a_fraction, leg_a_sites, left_fraction, left_half_sites, ncor_from_correlation, pair_density,
    polarization_from_density, site_density, DEFAULT_GAP_FACTOR, DEFAULT_NCOR_MARGIN,
};
use nhse_core::perturb::{compare_spectra, EffectivePairModel, PairCoupling};
use nhse_core::sweep::{eonsite_table, find_threshold_jp, select_clusters, SweepSpec};
use nhse_core::{
    build_hamiltonian, default_eps_im, eigendecompose, Basis, Cluster, ClusterLabel, Complex64, EigOptions,
    Eigensystem, Leg, ModelParams, SiteIndex,
};
use serde::Serialize;

use crate::config::{RunConfig, StateSelector};
use crate::error::CliError;
use crate::io::{fmt_f64, fmt_opt, write_csv, write_json};
use crate::parallel::run_sweep_parallel;

#[derive(Serialize)]
struct Metadata<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    params: &'a ModelParams,
    dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix_norm: Option<f64>,
    timings_s: BTreeMap<&'static str, f64>,
    result: T,
}

struct Run {
    cfg: RunConfig,
    params: ModelParams,
    opts: EigOptions,
    out: PathBuf,
    timings: BTreeMap<&'static str, f64>,
}

impl Run {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let resolved = cfg.resolved()?;
        let params = resolved.params()?;
        let opts = resolved.eig_options()?;
        let out = cfg.out_dir();
        Ok(Run { cfg: resolved, params, opts, out, timings: BTreeMap::new() })
    }

    fn dimension(&self) -> usize {
        let p = &self.params;
        OccupationSpace::new(p.num_sites(), p.particles, p.statistics).dimension() as usize
    }

    fn basis(&mut self) -> Result<Basis, CliError> {
        let p = &self.params;
        let t = Instant::now();
        let b = Basis::with_capacity_limit(p.cells, p.particles, p.statistics, self.opts.capacity)?;
        self.timings.insert("basis", t.elapsed().as_secs_f64());
        Ok(b)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn eps_im(&self, norm: f64) -> f64 {
        self.cfg.eps_im.unwrap_or_else(|| default_eps_im(norm))
    }

    fn clusters(&self, eigenvalues: &[Complex64]) -> Vec<Cluster> {
        let p = &self.params;
        let gap = self.cfg.gap_factor.unwrap_or(DEFAULT_GAP_FACTOR);
        let min_gap = self.cfg.min_gap.unwrap_or_else(|| default_min_gap(p.j_left_a, p.j_right_a));
        cluster_spectrum(eigenvalues, gap, min_gap)
    }

    fn finish<T: Serialize>(
        &self,
        command: &str,
        eps_im: Option<f64>,
        matrix_norm: Option<f64>,
        result: T,
    ) -> Result<(), CliError> {
        write_json(&self.path("run_config.json"), &self.cfg)?;
        let meta = Metadata {
            command,
            version: env!("CARGO_PKG_VERSION"),
            params: &self.params,
            dimension: self.dimension(),
            eps_im,
            matrix_norm,
            timings_s: self.timings.clone(),
            result,
        };
        write_json(&self.path("metadata.json"), &meta)
    }
}

fn site_label(site: usize, cells: usize) -> (usize, &'static str) {
    let s = SiteIndex::new(site);
    (s.cell(cells), if s.leg(cells) == Leg::A { "A" } else { "B" })
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SpectrumSummary {
    max_im: f64,
    is_real: bool,
    clusters: usize,
    max_residual: f64,
}

pub fn spectrum(cfg: &RunConfig) -> Result<String, CliError> {
    let mut run = Run::new(cfg)?;
    let basis = run.basis()?;
    let h = build_hamiltonian(&run.params, &basis)?;
    let t = Instant::now();
    let r = eigendecompose(&h, &run.opts)?;
    run.timings.insert("eigensolver", t.elapsed().as_secs_f64());
    let eps = run.eps_im(r.matrix_norm);

    let t = Instant::now();
    let pairs = basis.particles() == 2;
    let mut pol = Vec::with_capacity(r.dimension());
    let mut ncor = Vec::with_capacity(r.dimension());
    let mut dens = Vec::with_capacity(r.dimension());
    for v in &r.right_eigenvectors {
        let d = site_density(v, &basis).map_err(|e| CliError::Solver(e.to_string()))?;
        pol.push(polarization_from_density(&d));
        ncor.push(if pairs { Some(correlation_ncor(v, &basis).map_err(|e| CliError::Solver(e.to_string()))?) } else { None });
        dens.push(d);
    }
    let mut clusters = run.clusters(&r.eigenvalues);
    let mut cluster_of = vec![0usize; r.dimension()];
    for (id, c) in clusters.iter_mut().enumerate() {
        for &m in &c.members {
            cluster_of[m] = id;
        }
        let k = c.max_imag_member(&r.eigenvalues);
        c.label = match ncor[k] {
            Some(n) => classify_cluster(n, &dens[k], DEFAULT_NCOR_MARGIN),
            None => ClusterLabel::Unclassified,
        };
    }
    run.timings.insert("observables", t.elapsed().as_secs_f64());

    let rows = (0..r.dimension()).map(|k| {
        let z = r.eigenvalues[k];
        vec![
            k.to_string(),
            fmt_f64(z.re),
            fmt_f64(z.im),
            fmt_f64(pol[k]),
            fmt_opt(ncor[k]),
            cluster_of[k].to_string(),
            clusters[cluster_of[k]].label.to_string(),
            fmt_f64(r.residuals[k]),
        ]
    });
    write_csv(
        &run.path("spectrum.csv"),
        &["index", "re_e", "im_e", "polarization", "ncor", "cluster_id", "cluster_label", "residual"],
        rows,
    )?;
    write_clusters(&run.path("clusters.csv"), &clusters, &r.eigenvalues)?;

    let summary = SpectrumSummary {
        max_im: r.max_imag(),
        is_real: r.is_real(eps),
        clusters: clusters.len(),
        max_residual: r.residuals.iter().copied().fold(0.0, f64::max),
    };
    let text = format!(
        "spectrum: dimension {}, max Im E = {:.6e} ({} at eps_im {:.1e}), {} clusters, worst residual {:.2e}\nwrote {}",
        r.dimension(),
        summary.max_im,
        if summary.is_real { "real" } else { "complex" },
        eps,
        summary.clusters,
        summary.max_residual,
        run.out.display()
    );
    run.finish("spectrum", Some(eps), Some(r.matrix_norm), summary)?;
    Ok(text)
}

fn write_clusters(path: &Path, clusters: &[Cluster], e: &[Complex64]) -> Result<(), CliError> {
    let rows = clusters.iter().enumerate().map(|(id, c)| {
        vec![
            id.to_string(),
            c.label.to_string(),
            c.len().to_string(),
            fmt_f64(c.re_range.0),
            fmt_f64(c.re_range.1),
            fmt_f64(c.centroid(e)),
            fmt_f64(c.max_im),
        ]
    });
    write_csv(path, &["cluster_id", "label", "size", "re_lo", "re_hi", "centroid", "max_im"], rows)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SelectedState {
    index: usize,
    re_e: f64,
    im_e: f64,
    residual: f64,
}

struct StateRun {
    run: Run,
    basis: Basis,
    state: SelectedState,
    vector: Vec<Complex64>,
    eps_im: f64,
    norm: f64,
}

fn select_state(cfg: &RunConfig) -> Result<StateRun, CliError> {
    let mut run = Run::new(cfg)?;
    let selector = run.cfg.state_selector()?;
    let basis = run.basis()?;
    let h = build_hamiltonian(&run.params, &basis)?;
    let t = Instant::now();
    let sys = Eigensystem::new(&h, &run.opts)?;
    run.timings.insert("eigenvalues", t.elapsed().as_secs_f64());
    let e = sys.eigenvalues();
    let argmax = |candidates: &mut dyn Iterator<Item = usize>| {
        candidates.fold(None, |best: Option<usize>, k| match best {
            Some(b) if e[b].im >= e[k].im => Some(b),
            _ => Some(k),
        })
    };
    let index = match &selector {
        StateSelector::MaxIm => argmax(&mut (0..e.len())),
        StateSelector::Index(k) => (*k < e.len()).then_some(*k),
        StateSelector::Cluster(sel) => {
            let clusters = run.clusters(e);
            let picked = select_clusters(sel, e, &clusters, &run.params, &basis);
            argmax(&mut picked.iter().flat_map(|&c| clusters[c].members.iter().copied()))
        }
    }
    .ok_or_else(|| CliError::EmptySelection(format!("state selector resolves to no eigenstate ({selector:?})")))?;
    let t = Instant::now();
    let (vector, residual) = sys.eigenvector(index)?;
    run.timings.insert("eigenvector", t.elapsed().as_secs_f64());
    let eps_im = run.eps_im(sys.matrix_norm());
    let state = SelectedState { index, re_e: e[index].re, im_e: e[index].im, residual };
    let norm = sys.matrix_norm();
    Ok(StateRun { run, basis, state, vector, eps_im, norm })
}

fn obs_err(e: nhse_core::observables::ObservableError) -> CliError {
    CliError::Config(e.to_string())
}

fn state_line(cmd: &str, s: &SelectedState) -> String {
    format!("{cmd}: state {} at E = {:.6} {:+.6e}i (residual {:.1e})", s.index, s.re_e, s.im_e, s.residual)
}

fn pair_rows(m: &[Vec<f64>]) -> impl Iterator<Item = Vec<String>> + '_ {
    m.iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| vec![i.to_string(), j.to_string(), fmt_f64(v)]))
}

pub fn density(cfg: &RunConfig) -> Result<String, CliError> {
    let s = select_state(cfg)?;
    let cells = s.basis.cells();
    let d = site_density(&s.vector, &s.basis).map_err(obs_err)?;
    let rows = d.iter().enumerate().map(|(site, &v)| {
        let (cell, leg) = site_label(site, cells);
        vec![site.to_string(), cell.to_string(), leg.to_string(), fmt_f64(v)]
    });
    write_csv(&s.run.path("density.csv"), &["site", "cell", "leg", "density"], rows)?;
    if s.basis.particles() >= 2 {
        let rho = pair_density(&s.vector, &s.basis).map_err(obs_err)?;
        write_csv(&s.run.path("pair_density.csv"), &["x1", "x2", "value"], pair_rows(&rho))?;
    }
    let text = format!(
        "{}\nleg-A fraction {:.4}, left fraction {:.4}\nwrote {}",
        state_line("density", &s.state),
        leg_a_fraction(&d),
        left_fraction(&d),
        s.run.out.display()
    );
    s.run.finish("density", Some(s.eps_im), Some(s.norm), &s.state)?;
    Ok(text)
}

#[derive(Serialize)]
struct NcorResult<'a> {
    state: &'a SelectedState,
    ncor: f64,
}

pub fn ncor(cfg: &RunConfig) -> Result<String, CliError> {
    let s = select_state(cfg)?;
    if s.basis.particles() != 2 {
        return Err(CliError::Config("ncor needs exactly two particles".into()));
    }
    let g = correlation_matrix(&s.vector, &s.basis).map_err(obs_err)?;
    let value = ncor_from_correlation(&g);
    write_csv(&s.run.path("correlation.csv"), &["x1", "x2", "value"], pair_rows(&g))?;
    let result = NcorResult { state: &s.state, ncor: value };
    write_json(&s.run.path("ncor.json"), &result)?;
    let text = format!("{}\nN_cor = {:.6}\nwrote {}", state_line("ncor", &s.state), value, s.run.out.display());
    s.run.finish("ncor", Some(s.eps_im), Some(s.norm), &result)?;
    Ok(text)
}

#[derive(Serialize)]
struct EntropyResult<'a> {
    state: &'a SelectedState,
    s_a: f64,
    s_left: Option<f64>,
    rho_a_over_n: f64,
    rho_left_over_n: f64,
}

pub fn entropy(cfg: &RunConfig) -> Result<String, CliError> {
    let s = select_state(cfg)?;
    let cells = s.basis.cells();
    let d = site_density(&s.vector, &s.basis).map_err(obs_err)?;
    let s_a = entanglement_entropy(&s.vector, &s.basis, &leg_a_sites(cells)).map_err(obs_err)?;
    let s_left = if cells >= 2 {
        Some(entanglement_entropy(&s.vector, &s.basis, &left_half_sites(cells)).map_err(obs_err)?)
    } else {
        None
    };
    let result = EntropyResult {
        state: &s.state,
        s_a,
        s_left,
        rho_a_over_n: leg_a_fraction(&d),
        rho_left_over_n: left_fraction(&d),
    };
    write_json(&s.run.path("entropy.json"), &result)?;
    let text = format!(
        "{}\nS_A = {:.6}, S_left = {}, rho_A/N = {:.4}, rho_left/N = {:.4}\nwrote {}",
        state_line("entropy", &s.state),
        s_a,
        s_left.map_or("n/a".to_string(), |x| format!("{x:.6}")),
        result.rho_a_over_n,
        result.rho_left_over_n,
        s.run.out.display()
    );
    s.run.finish("entropy", Some(s.eps_im), Some(s.norm), &result)?;
    Ok(text)
}

// ---------------------------------------------------------------------------

pub fn sweep_spec(cfg: &RunConfig) -> Result<SweepSpec, CliError> {
    let params = cfg.params()?;
    if cfg.axes.is_empty() {
        return Err(CliError::Config("sweep needs at least one axis".into()));
    }
    let mut spec = SweepSpec::new(params, cfg.axes.clone(), cfg.observables.clone());
    if spec.observables.is_empty() {
        spec.observables.push(nhse_core::sweep::SweepObservable::MaxImGlobal);
    }
    spec.selector = cfg.cluster_selector()?;
    spec.eps_im = cfg.eps_im;
    spec.threshold = cfg.threshold;
    spec.gap_factor = cfg.gap_factor.unwrap_or(DEFAULT_GAP_FACTOR);
    spec.min_gap = cfg.min_gap;
    spec.eig = cfg.eig_options()?;
    Ok(spec)
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    failed: usize,
    workers: usize,
}

pub fn sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let mut run = Run::new(cfg)?;
    let spec = sweep_spec(&run.cfg)?;
    spec.validate()?;
    if run.dimension() > run.opts.capacity {
        return Err(CliError::Capacity(format!(
            "basis dimension {} exceeds the capacity limit {}",
            run.dimension(),
            run.opts.capacity
        )));
    }
    let workers = run.cfg.workers();
    let t = Instant::now();
    let table = run_sweep_parallel(&spec, workers)?;
    run.timings.insert("sweep", t.elapsed().as_secs_f64());

    let mut header: Vec<&str> = table.axis_names.iter().map(String::as_str).collect();
    header.extend(table.columns.iter().map(String::as_str));
    header.push("error");
    let rows = table.rows.iter().map(|r| {
        let mut out: Vec<String> = r.coordinates.iter().map(|&x| fmt_f64(x)).collect();
        out.extend(r.values.iter().map(|&v| fmt_opt(v)));
        out.push(r.error.clone().unwrap_or_default());
        out
    });
    write_csv(&run.path("sweep.csv"), &header, rows)?;
    write_json(&run.path("sweep_spec.json"), &spec)?;
    let summary = SweepSummary {
        rows: table.rows.len(),
        failed: table.rows.iter().filter(|r| r.error.is_some()).count(),
        workers,
    };
    let text = format!(
        "sweep: {} points ({} failed) on {} worker(s)\nwrote {}",
        summary.rows,
        summary.failed,
        workers,
        run.out.display()
    );
    run.finish("sweep", cfg.eps_im, None, summary)?;
    Ok(text)
}

pub fn threshold(cfg: &RunConfig) -> Result<String, CliError> {
    let mut run = Run::new(cfg)?;
    let spec = run.cfg.threshold.ok_or_else(|| CliError::Config("threshold needs a 'threshold' section".into()))?;
    let selector = run.cfg.cluster_selector()?;
    if run.dimension() > run.opts.capacity {
        return Err(CliError::Capacity(format!("basis dimension {} exceeds {}", run.dimension(), run.opts.capacity)));
    }
    let t = Instant::now();
    let r = find_threshold_jp(&run.params, &selector, run.cfg.eps_im, spec.bracket, spec.resolution, &run.opts)?;
    run.timings.insert("search", t.elapsed().as_secs_f64());
    write_json(&run.path("threshold.json"), &r)?;
    let text = format!(
        "threshold: J_p* = {:.6e} in [{:.6e}, {:.6e}] for clusters '{}' ({} evaluations{})\nwrote {}",
        r.jp_star,
        r.bracket.0,
        r.bracket.1,
        selector,
        r.evaluations,
        if r.non_monotone { ", non-monotone pre-scan" } else { "" },
        run.out.display()
    );
    run.finish("threshold", Some(r.eps_im), None, &r)?;
    Ok(text)
}

#[derive(Serialize)]
struct EffectiveResult<'a> {
    model: &'a EffectivePairModel,
    bandwidth: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison_error: Option<String>,
}

pub fn effective(cfg: &RunConfig) -> Result<String, CliError> {
    let mut run = Run::new(cfg)?;
    let coupling = run.cfg.coupling.unwrap_or(PairCoupling::Reference);
    let model = EffectivePairModel::new(&run.params, coupling)?;
    let eff = nhse_core::eigenvalues(&model.matrix(), &run.opts)?;
    let t = Instant::now();
    let cmp = if run.dimension() <= run.opts.capacity {
        compare_spectra(&run.params, coupling, &run.opts).map_err(|e| e.to_string())
    } else {
        Err(format!("full model dimension {} exceeds the capacity limit", run.dimension()))
    };
    run.timings.insert("comparison", t.elapsed().as_secs_f64());
    let full = cmp.as_ref().ok().map(|c| c.full.clone());
    let rows = eff.iter().enumerate().map(|(k, z)| {
        let f = full.as_ref().map(|f| f[k]);
        vec![k.to_string(), fmt_f64(z.re), fmt_f64(z.im), fmt_opt(f.map(|f| f.re)), fmt_opt(f.map(|f| f.im))]
    });
    write_csv(&run.path("effective_spectrum.csv"), &["index", "re_e", "im_e", "full_re_e", "full_im_e"], rows)?;
    let result = EffectiveResult {
        model: &model,
        bandwidth: nhse_core::perturb::pair_bandwidth(&run.params),
        max_deviation: cmp.as_ref().ok().map(|c| c.max_deviation),
        comparison_error: cmp.as_ref().err().cloned(),
    };
    write_json(&run.path("effective.json"), &result)?;
    let text = format!(
        "effective ({coupling:?}): inter-leg coupling {:.4e}, leg-A hops {:.4e} / {:.4e}, bandwidth {:.4e}, {}\nwrote {}",
        model.interleg,
        model.hops[0].0,
        model.hops[0].1,
        result.bandwidth,
        match &cmp {
            Ok(c) => format!("max deviation from full bound cluster {:.3e}", c.max_deviation),
            Err(e) => format!("no comparison: {e}"),
        },
        run.out.display()
    );
    run.finish("effective", None, None, &result)?;
    Ok(text)
}

pub fn eonsite(cfg: &RunConfig) -> Result<String, CliError> {
    let run = Run::new(cfg)?;
    let p = &run.params;
    let reach = p.particles as f64 * p.interaction().abs().max(1.0);
    let range = run.cfg.mu_range.unwrap_or((-reach, reach));
    let t = eonsite_table(p, range)?;
    let classes = t.classes.iter().enumerate().map(|(i, c)| {
        vec![
            i.to_string(),
            c.interaction_count.to_string(),
            c.imbalance.to_string(),
            c.population.to_string(),
            fmt_f64(t.interaction * c.interaction_count as f64),
            c.imbalance.to_string(),
        ]
    });
    write_csv(
        &run.path("eonsite_classes.csv"),
        &["class", "interaction_count", "imbalance", "population", "intercept", "slope"],
        classes,
    )?;
    let crossings = t.crossings.iter().map(|x| {
        vec![fmt_f64(x.mu), fmt_f64(x.energy), x.first.to_string(), x.second.to_string(), x.order.to_string()]
    });
    write_csv(&run.path("eonsite_crossings.csv"), &["mu", "energy", "first", "second", "order"], crossings)?;
    let mut text = format!("eonsite: {} classes, {} crossings in mu [{}, {}]", t.classes.len(), t.crossings.len(), range.0, range.1);
    for x in t.crossings.iter().filter(|x| x.mu != 0.0).take(8) {
        let (a, b) = (t.classes[x.first], t.classes[x.second]);
        text.push_str(&format!(
            "\n  mu = {:.4}: (k={}, d={}) x (k={}, d={}), order {}",
            x.mu, a.interaction_count, a.imbalance, b.interaction_count, b.imbalance, x.order
        ));
    }
    text.push_str(&format!("\nwrote {}", run.out.display()));
    run.finish("eonsite", None, None, &t)?;
    Ok(text)
}
