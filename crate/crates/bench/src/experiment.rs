//! Monte-Carlo runner: simulates every trial of a preset, applies each
//! estimator, aggregates metrics and writes the result files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use doa_core::array::{sample_covariance, simulate_snapshots, GridSpec, SourceScene, UlaGeometry};
use doa_core::estimators::{l21_svd, music_spectrum, pick_peaks, root_music, BpdnConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::crlb::{crlb_unconditional, rms};
use crate::error::{BenchError, Result};
use crate::metrics::{hausdorff, rmse_standard_error, squared_error, summarize_hausdorff, ConfusionMatrix, HausdorffSummary, Pairing};
use crate::network::NetworkModel;
use crate::presets::{build_preset, ExperimentPreset, Layout, Method, PresetParams, Scale};

/// Confidence level used when neither the preset nor the caller gives one.
pub const DEFAULT_P_BAR: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub scale: Scale,
    /// Directory for the result files; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// One noise bound for every point, or one per point.
    pub eta: Option<Vec<f64>>,
    pub snapshots: Option<usize>,
    pub p_bar: Option<f64>,
    pub methods: Option<Vec<Method>>,
    pub pairing: Pairing,
}

impl RunOptions {
    pub fn new(scale: Scale, seed: u64) -> Self {
        Self {
            seed,
            scale,
            out_dir: None,
            checkpoint: None,
            eta: None,
            snapshots: None,
            p_bar: None,
            methods: None,
            pairing: Pairing::Sorted,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Estimate(Vec<f64>),
    Failed(String),
}

impl Outcome {
    pub fn estimate(&self) -> Option<&[f64]> {
        match self {
            Outcome::Estimate(e) => Some(e),
            Outcome::Failed(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub point: usize,
    pub scene: usize,
    /// Global trial index; the snapshot seed is `run seed ^ index`.
    pub index: usize,
    pub seed: u64,
    pub truth: Vec<f64>,
    /// One outcome per method, in the report's method order.
    pub outcomes: Vec<Outcome>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSummary {
    pub point: usize,
    pub x: f64,
    pub snr_db: f64,
    pub snapshots: usize,
    pub eta: f64,
    pub p_bar: Option<f64>,
    pub method: Method,
    pub trials: usize,
    /// Trials where the estimator returned an error.
    pub failures: usize,
    /// Trials whose estimate count matched the true count (used for RMSE).
    pub rmse_trials: usize,
    pub rmse_deg: Option<f64>,
    pub rmse_se_deg: Option<f64>,
    pub crlb_deg: Option<f64>,
    pub hausdorff: HausdorffSummary,
    pub count_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub preset: ExperimentPreset,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<PointSummary>,
    /// Source-count confusion per operating point for threshold decoding.
    pub confusion: Vec<(usize, ConfusionMatrix)>,
    pub files: Vec<PathBuf>,
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn summary_for(&self, point: usize, method: Method) -> Option<&PointSummary> {
        self.summary.iter().find(|s| s.point == point && s.method == method)
    }
}

fn missing_network(preset: &str) -> BenchError {
    BenchError::MissingCheckpoint {
        preset: preset.to_string(),
        hint: "train one with `doa train --profile small --checkpoint model.doac` \
               (add `--mixed --k 2` for unknown source counts) and pass `--checkpoint model.doac`"
            .to_string(),
    }
}

/// Resolves the preset, its methods and (when needed) the network.
fn prepare(name: &str, opts: &RunOptions) -> Result<(ExperimentPreset, Vec<Method>, Option<NetworkModel>)> {
    let model = opts.checkpoint.as_ref().map(NetworkModel::load).transpose()?;
    let mut params = PresetParams::new(opts.scale, opts.seed);
    if let Some(m) = model.as_ref().filter(|m| m.is_mixed()) {
        params.k_max = m.metadata.k;
        params.network_snr_db = m.metadata.training_snrs_db.first().copied();
    }
    let mut preset = build_preset(name, &params)?;
    if preset.points.is_empty() {
        return Err(BenchError::Domain(format!(
            "preset `{name}` has no operating point at the network's training SNR"
        )));
    }
    let mut methods = match &opts.methods {
        Some(m) => m.clone(),
        None => {
            let mut m = preset.methods.clone();
            if model.is_some() && !m.iter().any(|x| x.needs_network()) {
                m.push(Method::Cnn);
            }
            m
        }
    };
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(BenchError::Usage("no methods selected".into()));
    }
    let needs_network = preset.requires_network || methods.iter().any(|m| m.needs_network());
    if needs_network {
        let Some(m) = &model else {
            return Err(missing_network(name));
        };
        if m.grid != preset.grid || m.geometry.n_sensors() != preset.n_sensors {
            return Err(BenchError::Domain(format!(
                "checkpoint was trained for {} sensors and {} grid points; preset `{name}` at {} scale uses {} and {}",
                m.geometry.n_sensors(),
                m.grid.len(),
                opts.scale.name(),
                preset.n_sensors,
                preset.grid.len()
            )));
        }
    }
    apply_overrides(&mut preset, opts)?;
    Ok((preset, methods, model))
}

fn apply_overrides(preset: &mut ExperimentPreset, opts: &RunOptions) -> Result<()> {
    if let Some(eta) = &opts.eta {
        if eta.len() != 1 && eta.len() != preset.points.len() {
            return Err(BenchError::Usage(format!(
                "--eta takes one value or one per operating point ({}), got {}",
                preset.points.len(),
                eta.len()
            )));
        }
        if eta.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(BenchError::Usage("--eta values must be positive".into()));
        }
        for (i, p) in preset.points.iter_mut().enumerate() {
            p.eta = eta[if eta.len() == 1 { 0 } else { i }];
        }
    }
    if let Some(t) = opts.snapshots {
        if t == 0 {
            return Err(BenchError::Usage("--snapshots must be positive".into()));
        }
        for p in &mut preset.points {
            p.snapshots = t;
        }
    }
    if let Some(pb) = opts.p_bar {
        if !(pb > 0.0 && pb < 1.0) {
            return Err(BenchError::Usage("--p-bar must lie strictly between 0 and 1".into()));
        }
        for p in &mut preset.points {
            p.p_bar = Some(pb);
        }
    }
    Ok(())
}

struct Job<'a> {
    point: usize,
    scene_index: usize,
    scene: &'a SourceScene,
    index: usize,
}

struct TrialContext<'a> {
    geom: UlaGeometry,
    grid: GridSpec,
    methods: &'a [Method],
    model: Option<&'a NetworkModel>,
}

impl TrialContext<'_> {
    fn run(&self, scene: &SourceScene, snapshots: usize, eta: f64, p_bar: f64, seed: u64) -> Vec<Outcome> {
        let k = scene.n_sources();
        let prepared = simulate_snapshots(&self.geom, scene, snapshots, seed)
            .map_err(BenchError::from)
            .and_then(|block| {
                let r = sample_covariance(&block)?;
                Ok((block, r))
            });
        let (block, r) = match prepared {
            Ok(v) => v,
            Err(e) => return vec![Outcome::Failed(e.to_string()); self.methods.len()],
        };
        let mut probs: Option<Result<Vec<f64>>> = None;
        self.methods
            .iter()
            .map(|&m| {
                let est: Result<Vec<f64>> = match m {
                    Method::Music => music_spectrum(&r, k, &self.grid, &self.geom)
                        .map(|s| pick_peaks(&self.grid, &s.values, k).into_vec())
                        .map_err(Into::into),
                    Method::RootMusic => root_music(&r, k, &self.geom).map(|e| e.into_vec()).map_err(Into::into),
                    Method::L21 => l21_svd(&block, &self.grid, &self.geom, &BpdnConfig::new(eta), k)
                        .map(|s| s.estimates.into_vec())
                        .map_err(Into::into),
                    Method::Cnn | Method::CnnThreshold => {
                        let model = self.model.expect("network presence checked before running");
                        let p = probs.get_or_insert_with(|| model.probabilities(&r));
                        match p {
                            Ok(p) if m == Method::Cnn => model.topk(p, k).map(|e| e.into_vec()),
                            Ok(p) => model.threshold(p, p_bar).map(|e| e.into_vec()),
                            Err(e) => Err(BenchError::Numerical(e.to_string())),
                        }
                    }
                };
                match est {
                    Ok(e) => Outcome::Estimate(e),
                    Err(e) => Outcome::Failed(e.to_string()),
                }
            })
            .collect()
    }
}

/// Runs a named preset and, if an output directory is given, writes
/// `<preset>_trials.csv`, `<preset>_summary.csv`, `<preset>_plot.csv`,
/// `<preset>_confusion.csv` (threshold decoding only) and `<preset>_manifest.json`.
pub fn run_preset(name: &str, opts: &RunOptions) -> Result<RunReport> {
    let start = Instant::now();
    let (preset, methods, model) = prepare(name, opts)?;
    let ctx = TrialContext {
        geom: UlaGeometry::half_wavelength(preset.n_sensors)?,
        grid: preset.grid,
        methods: &methods,
        model: model.as_ref(),
    };
    let mut jobs = Vec::new();
    for (pi, p) in preset.points.iter().enumerate() {
        for (si, scene) in p.scenes.iter().enumerate() {
            for _ in 0..p.trials_per_scene {
                jobs.push(Job {
                    point: pi,
                    scene_index: si,
                    scene,
                    index: jobs.len(),
                });
            }
        }
    }
    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|job| {
            let p = &preset.points[job.point];
            let seed = opts.seed ^ job.index as u64;
            TrialRecord {
                point: job.point,
                scene: job.scene_index,
                index: job.index,
                seed,
                truth: job.scene.doas_deg().to_vec(),
                outcomes: ctx.run(job.scene, p.snapshots, p.eta, p.p_bar.unwrap_or(DEFAULT_P_BAR), seed),
            }
        })
        .collect();
    let summary = summarize(&preset, &methods, &trials, opts.pairing)?;
    let confusion = confusion_tables(&preset, &methods, &trials);
    let mut report = RunReport {
        preset,
        seed: opts.seed,
        methods,
        trials,
        summary,
        confusion,
        files: Vec::new(),
        elapsed_seconds: 0.0,
    };
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    if let Some(dir) = &opts.out_dir {
        report.files = write_outputs(&report, dir, opts)?;
    }
    Ok(report)
}

/// Root-mean-square of the per-source bound over the scenes of a point.
fn point_crlb(geom: &UlaGeometry, scenes: &[SourceScene], snapshots: usize) -> Option<f64> {
    let mut acc = 0.0;
    for s in scenes {
        let b = crlb_unconditional(geom, s, snapshots).ok()?;
        acc += rms(&b).powi(2);
    }
    Some((acc / scenes.len() as f64).sqrt())
}

fn summarize(preset: &ExperimentPreset, methods: &[Method], trials: &[TrialRecord], pairing: Pairing) -> Result<Vec<PointSummary>> {
    let geom = UlaGeometry::half_wavelength(preset.n_sensors)?;
    let mut out = Vec::new();
    for (pi, p) in preset.points.iter().enumerate() {
        let crlb_deg = point_crlb(&geom, &p.scenes, p.snapshots);
        let here: Vec<&TrialRecord> = trials.iter().filter(|t| t.point == pi).collect();
        for (mi, &method) in methods.iter().enumerate() {
            let mut failures = 0;
            let mut mses = Vec::new();
            let mut distances = Vec::new();
            let mut count_ok = 0;
            for t in &here {
                match &t.outcomes[mi] {
                    Outcome::Failed(_) => {
                        failures += 1;
                        distances.push(None);
                    }
                    Outcome::Estimate(e) => {
                        distances.push(hausdorff(&t.truth, e));
                        if e.len() == t.truth.len() {
                            count_ok += 1;
                            if !e.is_empty() {
                                mses.push(squared_error(&t.truth, e, pairing)? / e.len() as f64);
                            }
                        }
                    }
                }
            }
            let (rmse_deg, rmse_se_deg) = if mses.is_empty() {
                (None, None)
            } else {
                let mean = mses.iter().sum::<f64>() / mses.len() as f64;
                (Some(mean.sqrt()), Some(rmse_standard_error(&mses)))
            };
            out.push(PointSummary {
                point: pi,
                x: p.x,
                snr_db: p.snr_db,
                snapshots: p.snapshots,
                eta: p.eta,
                p_bar: p.p_bar.filter(|_| method == Method::CnnThreshold),
                method,
                trials: here.len(),
                failures,
                rmse_trials: mses.len(),
                rmse_deg,
                rmse_se_deg,
                crlb_deg,
                hausdorff: summarize_hausdorff(&distances),
                count_accuracy: if here.is_empty() { 0.0 } else { count_ok as f64 / here.len() as f64 },
            });
        }
    }
    Ok(out)
}

fn confusion_tables(preset: &ExperimentPreset, methods: &[Method], trials: &[TrialRecord]) -> Vec<(usize, ConfusionMatrix)> {
    let Some(mi) = methods.iter().position(|&m| m == Method::CnnThreshold) else {
        return Vec::new();
    };
    let k_display = preset
        .points
        .iter()
        .flat_map(|p| p.scenes.iter().map(SourceScene::n_sources))
        .max()
        .unwrap_or(1);
    (0..preset.points.len())
        .map(|pi| {
            let mut cm = ConfusionMatrix::new(k_display);
            for t in trials.iter().filter(|t| t.point == pi) {
                let predicted = match &t.outcomes[mi] {
                    Outcome::Estimate(e) => e.len(),
                    Outcome::Failed(_) => 0,
                };
                cm.record(t.truth.len(), predicted);
            }
            (pi, cm)
        })
        .collect()
}

/// Decimal rendering shared by every result file.
pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(";")
}

fn trials_csv(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# {}: one row per trial and method; angle lists in degrees separated by ';'",
        r.preset.name
    );
    s.push_str("point,scene,trial,seed,x,snr_db,snapshots,method,truth_deg,estimate_deg,status\n");
    for t in &r.trials {
        let p = &r.preset.points[t.point];
        for (m, o) in r.methods.iter().zip(&t.outcomes) {
            let (est, status) = match o {
                Outcome::Estimate(e) => (fmt_list(e), "ok".to_string()),
                Outcome::Failed(msg) => (String::new(), format!("failed: {}", msg.replace([',', '\n'], " "))),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                t.point,
                t.scene,
                t.index,
                t.seed,
                fmt_num(p.x),
                fmt_num(p.snr_db),
                p.snapshots,
                m.name(),
                fmt_list(&t.truth),
                est,
                status
            );
        }
    }
    s
}

fn summary_csv(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# {}: per operating point and method; x is {}; angles and errors in degrees",
        r.preset.name, r.preset.x_label
    );
    s.push_str(
        "preset,point,x,snr_db,snapshots,eta,p_bar,method,trials,failures,rmse_trials,rmse_deg,rmse_se_deg,crlb_deg,\
         hausdorff_mean_deg,hausdorff_max_deg,hausdorff_undefined,count_accuracy\n",
    );
    for p in &r.summary {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.preset.name,
            p.point,
            fmt_num(p.x),
            fmt_num(p.snr_db),
            p.snapshots,
            fmt_num(p.eta),
            fmt_opt(p.p_bar),
            p.method.name(),
            p.trials,
            p.failures,
            p.rmse_trials,
            fmt_opt(p.rmse_deg),
            fmt_opt(p.rmse_se_deg),
            fmt_opt(p.crlb_deg),
            fmt_opt(p.hausdorff.mean),
            fmt_opt(p.hausdorff.max),
            p.hausdorff.undefined,
            fmt_num(p.count_accuracy)
        );
    }
    s
}

fn plot_csv(r: &RunReport) -> String {
    let mut s = String::new();
    match r.preset.layout {
        Layout::Sweep => {
            let _ = writeln!(s, "# {}: RMSE in degrees against {}", r.preset.name, r.preset.x_label);
            let cols: Vec<String> = r.methods.iter().map(|m| format!("{}_rmse_deg", m.name())).collect();
            let _ = writeln!(s, "{},{},crlb_deg", r.preset.x_label, cols.join(","));
            for (pi, p) in r.preset.points.iter().enumerate() {
                let vals: Vec<String> = r
                    .methods
                    .iter()
                    .map(|&m| fmt_opt(r.summary_for(pi, m).and_then(|s| s.rmse_deg)))
                    .collect();
                let crlb = r.summary_for(pi, r.methods[0]).and_then(|s| s.crlb_deg);
                let _ = writeln!(s, "{},{},{}", fmt_num(p.x), vals.join(","), fmt_opt(crlb));
            }
        }
        Layout::Slide => {
            let _ = writeln!(
                s,
                "# {}: true and estimated directions in degrees per scene, lists separated by ';'",
                r.preset.name
            );
            let cols: Vec<&str> = r.methods.iter().map(|m| m.name()).collect();
            let _ = writeln!(s, "point,{},scene,first_doa_deg,truth_deg,{}", r.preset.x_label, cols.join(","));
            for t in &r.trials {
                let ests: Vec<String> = t
                    .outcomes
                    .iter()
                    .map(|o| o.estimate().map(fmt_list).unwrap_or_default())
                    .collect();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    t.point,
                    fmt_num(r.preset.points[t.point].x),
                    t.scene,
                    fmt_num(t.truth[0]),
                    fmt_list(&t.truth),
                    ests.join(",")
                );
            }
        }
    }
    s
}

fn confusion_csv(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# {}: trial counts by true and estimated source count under threshold decoding",
        r.preset.name
    );
    s.push_str("point,x,true_k,estimated_k,count\n");
    for (pi, cm) in &r.confusion {
        let x = r.preset.points[*pi].x;
        for i in 0..cm.counts.len() {
            for j in 0..cm.counts.len() {
                let _ = writeln!(s, "{},{},{},{},{}", pi, fmt_num(x), cm.label(i), cm.label(j), cm.counts[i][j]);
            }
        }
    }
    s
}

#[derive(Serialize)]
struct ManifestPoint {
    x: f64,
    snr_db: f64,
    snapshots: usize,
    eta: f64,
    p_bar: Option<f64>,
    scenes: usize,
    trials: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    preset: &'a str,
    description: &'a str,
    scale: &'a str,
    seed: u64,
    n_sensors: usize,
    grid_half_points: usize,
    grid_resolution_deg: f64,
    methods: Vec<&'a str>,
    pairing: Pairing,
    checkpoint: Option<String>,
    points: Vec<ManifestPoint>,
    files: Vec<String>,
    version: &'a str,
    elapsed_seconds: f64,
}

fn write_outputs(r: &RunReport, dir: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = r.preset.name;
    let mut files = vec![
        (format!("{name}_trials.csv"), trials_csv(r)),
        (format!("{name}_summary.csv"), summary_csv(r)),
        (format!("{name}_plot.csv"), plot_csv(r)),
    ];
    if !r.confusion.is_empty() {
        files.push((format!("{name}_confusion.csv"), confusion_csv(r)));
    }
    let mut written = Vec::new();
    for (file, body) in &files {
        let path = dir.join(file);
        fs::write(&path, body)?;
        written.push(path);
    }
    let manifest = Manifest {
        preset: name,
        description: r.preset.description,
        scale: r.preset.scale.name(),
        seed: r.seed,
        n_sensors: r.preset.n_sensors,
        grid_half_points: r.preset.grid.half_points(),
        grid_resolution_deg: r.preset.grid.resolution_deg(),
        methods: r.methods.iter().map(|m| m.name()).collect(),
        pairing: opts.pairing,
        checkpoint: opts.checkpoint.as_ref().map(|p| p.display().to_string()),
        points: r
            .preset
            .points
            .iter()
            .map(|p| ManifestPoint {
                x: p.x,
                snr_db: p.snr_db,
                snapshots: p.snapshots,
                eta: p.eta,
                p_bar: p.p_bar,
                scenes: p.scenes.len(),
                trials: p.trial_count(),
            })
            .collect(),
        files: files.iter().map(|(f, _)| f.clone()).collect(),
        version: env!("CARGO_PKG_VERSION"),
        elapsed_seconds: r.elapsed_seconds,
    };
    let path = dir.join(format!("{name}_manifest.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    written.push(path);
    Ok(written)
}

/// Picks the confidence level that maximises source-count accuracy over
/// simulated calibration trials (trial `i` uses seed `seed ^ i`). Ties go
/// to the earlier candidate. Returns the level and its accuracy.
pub fn calibrate_p_bar(
    model: &NetworkModel,
    scenes: &[SourceScene],
    snapshots: usize,
    seed: u64,
    candidates: &[f64],
) -> Result<(f64, f64)> {
    if candidates.is_empty() || scenes.is_empty() {
        return Err(BenchError::Domain("calibration needs scenes and candidate levels".into()));
    }
    let probs: Vec<Vec<f64>> = scenes
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let block = simulate_snapshots(&model.geometry, s, snapshots, seed ^ i as u64)?;
            model.probabilities(&sample_covariance(&block)?)
        })
        .collect::<Result<_>>()?;
    let mut best = (candidates[0], -1.0);
    for &c in candidates {
        let hits = scenes
            .iter()
            .zip(&probs)
            .filter(|(s, p)| p.iter().filter(|&&v| v >= c).count() == s.n_sources())
            .count();
        let acc = hits as f64 / scenes.len() as f64;
        if acc > best.1 {
            best = (c, acc);
        }
    }
    Ok(best)
}
