//! The `doa` command-line tool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use doa_core::array::{simulate_snapshots, SourceScene, UlaGeometry};
use doa_net::{fixed_k_count, load_dataset, mixed_k_count, save_dataset, KPolicy, LayerSpec, NetworkSpec, Shape};

use crate::crlb::{crlb_fisher_oracle, crlb_unconditional, rms};
use crate::error::{BenchError, Result};
use crate::experiment::{fmt_list, fmt_num, run_preset, RunOptions};
use crate::metrics::{confusion, hausdorff, rmse, squared_error, summarize_hausdorff, Pairing};
use crate::presets::{Method, Scale, PRESET_NAMES};
use crate::training::{history_csv, save_model, Profile, TrainRequest};

#[derive(Parser, Debug)]
#[command(name = "doa", version, about = "Direction-of-arrival estimation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate snapshot blocks for a scene and write them to files.
    Simulate(SimulateArgs),
    /// Build a training set, train a network and write a checkpoint.
    Train(TrainArgs),
    /// Run a named experiment preset.
    Eval(EvalArgs),
    /// RMSE, Hausdorff distance and source-count confusion.
    Metrics(MetricsArgs),
    /// Cramér-Rao bound tables.
    Crlb(CrlbArgs),
    /// Validate an architecture's layer dimensions, size and dataset counts.
    SpecCheck(SpecCheckArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Source directions in degrees, comma separated.
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    doas: Vec<f64>,
    /// SNR in dB with unit source powers.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["powers", "noise"])]
    snr: Option<f64>,
    /// Source powers, comma separated (use with --noise).
    #[arg(long, value_delimiter = ',', requires = "noise")]
    powers: Option<Vec<f64>>,
    /// Noise power (use with --powers).
    #[arg(long, requires = "powers")]
    noise: Option<f64>,
    #[arg(long, default_value_t = 8)]
    sensors: usize,
    #[arg(long, default_value_t = 1000)]
    snapshots: usize,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum, default_value = "small")]
    profile: Profile,
    /// Where to write the checkpoint; the loss history goes next to it.
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training SNRs in dB (default: the profile's list, or 0 dB with --mixed).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Source count, or the largest source count with --mixed.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Train on every source count from 1 to --k.
    #[arg(long)]
    mixed: bool,
    /// With --mixed, pool several SNRs into one training set.
    #[arg(long, requires = "mixed")]
    pooled: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    halving_period: Option<usize>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Dataset cache: loaded if present, otherwise built and saved here.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Build the training set and report its size without training.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PairingArg {
    Sorted,
    Optimal,
}

impl From<PairingArg> for Pairing {
    fn from(p: PairingArg) -> Self {
        match p {
            PairingArg::Sorted => Pairing::Sorted,
            PairingArg::Optimal => Pairing::Optimal,
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Noise bound: one value for every point, or one per point.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    snapshots: Option<usize>,
    /// Methods: music, root-music, l21-svd, cnn, cnn-threshold.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Confidence level for threshold decoding.
    #[arg(long)]
    p_bar: Option<f64>,
    #[arg(long, value_enum, default_value = "sorted")]
    pairing: PairingArg,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Report Hausdorff distances.
    #[arg(long)]
    hausdorff: bool,
    /// Report RMSE.
    #[arg(long)]
    rmse: bool,
    /// Report source-count confusion matrices.
    #[arg(long)]
    confusion: bool,
    /// A `<preset>_trials.csv` written by `doa eval`; without it the
    /// worked examples are evaluated.
    #[arg(long)]
    trials: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sorted")]
    pairing: PairingArg,
}

#[derive(Args, Debug)]
struct CrlbArgs {
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    doas: Vec<f64>,
    /// SNRs in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    snr: Vec<f64>,
    /// Snapshot counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    snapshots: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    sensors: usize,
    /// Also evaluate the finite-difference Fisher information.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct SpecCheckArgs {
    #[arg(long, value_enum, default_value = "paper")]
    profile: Profile,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_with_output(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// As [`run`], writing to the given streams.
pub fn run_with_output<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a, out),
        Command::Train(a) => train(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Metrics(a) => metrics(a, out),
        Command::Crlb(a) => crlb(a, out),
        Command::SpecCheck(a) => spec_check(a, out),
    }
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let scene = match (a.snr, a.powers, a.noise) {
        (Some(snr), None, None) => SourceScene::with_snr(a.doas, snr)?,
        (None, Some(p), Some(n)) => SourceScene::new(a.doas, p, n)?,
        (None, None, None) => SourceScene::with_snr(a.doas, 0.0)?,
        _ => return Err(BenchError::Usage("give either --snr or --powers with --noise".into())),
    };
    let geom = UlaGeometry::half_wavelength(a.sensors)?;
    fs::create_dir_all(&a.out)?;
    for i in 0..a.trials {
        let seed = a.seed ^ i as u64;
        let block = simulate_snapshots(&geom, &scene, a.snapshots, seed)?;
        let path = a.out.join(format!("snapshots_{i:05}.bin"));
        block.write_to(std::io::BufWriter::new(fs::File::create(&path)?))?;
        writeln!(out, "{} seed={seed}", path.display())?;
    }
    let scene_json = serde_json::json!({
        "doas_deg": scene.doas_deg(),
        "source_powers": scene.source_powers(),
        "noise_power": scene.noise_power(),
        "snr_db": scene.snr_db().ok(),
        "n_sensors": a.sensors,
        "snapshots": a.snapshots,
        "trials": a.trials,
        "seed": a.seed,
    });
    fs::write(a.out.join("scene.json"), serde_json::to_string_pretty(&scene_json)?)?;
    Ok(())
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    if a.k == 0 {
        return Err(BenchError::Usage("--k must be at least 1".into()));
    }
    let mut req = if a.mixed {
        TrainRequest::mixed(a.profile, a.k, 0.0, a.seed)
    } else {
        let mut r = TrainRequest::fixed(a.profile, a.seed);
        r.policy = KPolicy::Fixed(a.k);
        r
    };
    if let Some(s) = a.snr {
        req.snrs_db = s;
    }
    req.pooled = a.pooled;
    let c = &mut req.config;
    if let Some(v) = a.epochs {
        c.epochs = v;
    }
    if let Some(v) = a.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = a.lr {
        c.initial_lr = v;
    }
    if let Some(v) = a.halving_period {
        c.lr_halving_period = v;
    }
    if let Some(v) = a.validation_fraction {
        c.validation_fraction = v;
    }
    c.validate().map_err(|e| BenchError::Usage(e.to_string()))?;
    let data = match &a.dataset {
        Some(p) if p.exists() => {
            let d = load_dataset(p)?;
            writeln!(out, "loaded {} examples from {}", d.len(), p.display())?;
            d
        }
        cache => {
            let d = req.build_dataset()?;
            if let Some(p) = cache {
                save_dataset(p, &d)?;
            }
            d
        }
    };
    writeln!(
        out,
        "profile {:?}: {} training examples, {} parameters",
        a.profile,
        data.len(),
        req.profile.spec().parameter_count()?
    )?;
    if a.dry_run {
        return Ok(());
    }
    let (model, history) = req.train(&data, |epoch, h| {
        let val = h.validation_loss.last().map(|v| format!(" val {v:.6}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "epoch {:>4} lr {:.3e} train {:.6}{val}",
            epoch + 1,
            h.learning_rate.last().copied().unwrap_or(0.0),
            h.train_loss.last().copied().unwrap_or(f64::NAN)
        );
    })?;
    if let Some(parent) = a.checkpoint.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_model(&a.checkpoint, &model)?;
    let hist = history_path(&a.checkpoint);
    fs::write(&hist, history_csv(&history))?;
    writeln!(out, "wrote {} and {}", a.checkpoint.display(), hist.display())?;
    Ok(())
}

fn history_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_stem().unwrap_or_default().to_os_string();
    name.push(".history.csv");
    checkpoint.with_file_name(name)
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let methods = a
        .methods
        .map(|ms| {
            ms.iter()
                .map(|m| {
                    Method::from_name(m).ok_or_else(|| {
                        BenchError::Usage(format!(
                            "unknown method `{m}`; expected one of {}",
                            Method::ALL.map(Method::name).join(", ")
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let opts = RunOptions {
        seed: a.seed,
        scale: a.scale,
        out_dir: Some(a.out),
        checkpoint: a.checkpoint,
        eta: a.eta,
        snapshots: a.snapshots,
        p_bar: a.p_bar,
        methods,
        pairing: a.pairing.into(),
    };
    let report = run_preset(&a.preset, &opts)?;
    writeln!(
        out,
        "{} ({} scale, seed {}): {} trials in {:.1}s",
        report.preset.name,
        report.preset.scale.name(),
        report.seed,
        report.trials.len(),
        report.elapsed_seconds
    )?;
    writeln!(
        out,
        "{:>10} {:>14} {:>7} {:>6} {:>10} {:>10} {:>10} {:>9}",
        report.preset.x_label, "method", "trials", "fail", "rmse_deg", "crlb_deg", "mean_dH", "count_acc"
    )?;
    let show = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    for s in &report.summary {
        writeln!(
            out,
            "{:>10} {:>14} {:>7} {:>6} {:>10} {:>10} {:>10} {:>9.3}",
            fmt_num(s.x),
            s.method.name(),
            s.trials,
            s.failures,
            show(s.rmse_deg),
            show(s.crlb_deg),
            show(s.hausdorff.mean),
            s.count_accuracy
        )?;
    }
    for (pi, cm) in &report.confusion {
        writeln!(out, "source-count confusion at point {pi} (rows true, columns estimated):")?;
        write_confusion(out, cm)?;
    }
    for f in &report.files {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn write_confusion(out: &mut dyn Write, cm: &crate::metrics::ConfusionMatrix) -> Result<()> {
    let n = cm.counts.len();
    write!(out, "{:>6}", "")?;
    for j in 0..n {
        write!(out, "{:>7}", cm.label(j))?;
    }
    writeln!(out)?;
    for i in 0..n {
        write!(out, "{:>6}", cm.label(i))?;
        for j in 0..n {
            write!(out, "{:>7}", cm.counts[i][j])?;
        }
        writeln!(out)?;
    }
    writeln!(out, "accuracy {:.4}", cm.accuracy())?;
    Ok(())
}

/// Reference sets whose pairwise distances are quoted as worked examples.
pub const WORKED_B: [f64; 3] = [-30.2, 20.15, 22.83];
pub const WORKED_A: [&[f64]; 3] = [&[-30.0, 20.0, 23.0], &[-30.0, 21.0], &[-30.0, 51.0]];

fn metrics(a: MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let all = !(a.hausdorff || a.rmse || a.confusion);
    let pairing: Pairing = a.pairing.into();
    let Some(path) = a.trials else {
        if all || a.hausdorff {
            for set in WORKED_A {
                let d = hausdorff(set, &WORKED_B).expect("non-empty sets");
                writeln!(out, "hausdorff [{}] vs [{}] = {}", fmt_list(set), fmt_list(&WORKED_B), fmt_num(d))?;
            }
        }
        if all || a.rmse {
            let r = rmse(&[WORKED_A[0].to_vec()], &[WORKED_B.to_vec()], pairing)?;
            writeln!(out, "rmse [{}] vs [{}] = {}", fmt_list(WORKED_A[0]), fmt_list(&WORKED_B), fmt_num(r))?;
        }
        if all || a.confusion {
            let m = confusion(&[1, 2, 3], &[1, 2, 3], 3)?;
            writeln!(out, "confusion of a perfect prediction:")?;
            write_confusion(out, &m)?;
        }
        return Ok(());
    };
    let rows = parse_trials(&fs::read_to_string(&path)?)?;
    let mut groups: Vec<(String, String)> = rows.iter().map(|r| (r.point.clone(), r.method.clone())).collect();
    groups.sort();
    groups.dedup();
    for (point, method) in groups {
        let sel: Vec<&TrialRow> = rows.iter().filter(|r| r.point == point && r.method == method).collect();
        writeln!(out, "point {point} method {method}: {} trials", sel.len())?;
        if all || a.rmse {
            let ok: Vec<f64> = sel
                .iter()
                .filter_map(|r| r.estimate.as_ref().filter(|e| e.len() == r.truth.len() && !e.is_empty()).map(|e| (r, e)))
                .map(|(r, e)| squared_error(&r.truth, e, pairing).map(|v| v / e.len() as f64))
                .collect::<Result<_>>()?;
            let v = (!ok.is_empty()).then(|| (ok.iter().sum::<f64>() / ok.len() as f64).sqrt());
            writeln!(
                out,
                "  rmse_deg {} over {} trials",
                v.map(fmt_num).unwrap_or_else(|| "-".into()),
                ok.len()
            )?;
        }
        if all || a.hausdorff {
            let d: Vec<Option<f64>> = sel
                .iter()
                .map(|r| r.estimate.as_ref().and_then(|e| hausdorff(&r.truth, e)))
                .collect();
            let s = summarize_hausdorff(&d);
            let show = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "  hausdorff mean {} max {} undefined {}",
                show(s.mean),
                show(s.max),
                s.undefined
            )?;
        }
        if all || a.confusion {
            let t: Vec<usize> = sel.iter().map(|r| r.truth.len()).collect();
            let p: Vec<usize> = sel.iter().map(|r| r.estimate.as_ref().map_or(0, Vec::len)).collect();
            let k = t.iter().copied().max().unwrap_or(1).max(1);
            write_confusion(out, &confusion(&t, &p, k)?)?;
        }
    }
    Ok(())
}

struct TrialRow {
    point: String,
    method: String,
    truth: Vec<f64>,
    estimate: Option<Vec<f64>>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|v| v.parse::<f64>().map_err(|_| BenchError::Parse(format!("bad angle `{v}`"))))
        .collect()
}

fn parse_trials(text: &str) -> Result<Vec<TrialRow>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| BenchError::Parse("empty file".into()))?.split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| BenchError::Parse(format!("missing column `{name}`")))
    };
    let (cp, cm, ct, ce, cs) = (col("point")?, col("method")?, col("truth_deg")?, col("estimate_deg")?, col("status")?);
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != header.len() {
                return Err(BenchError::Parse(format!("expected {} fields: `{l}`", header.len())));
            }
            Ok(TrialRow {
                point: f[cp].to_string(),
                method: f[cm].to_string(),
                truth: parse_list(f[ct])?,
                estimate: if f[cs] == "ok" { Some(parse_list(f[ce])?) } else { None },
            })
        })
        .collect()
}

fn crlb(a: CrlbArgs, out: &mut dyn Write) -> Result<()> {
    let geom = UlaGeometry::half_wavelength(a.sensors)?;
    let n = a.doas.len();
    let angle_cols: Vec<String> = (1..=n).map(|i| format!("crlb_{i}_deg")).collect();
    let oracle_cols: Vec<String> = if a.oracle {
        (1..=n).map(|i| format!("oracle_{i}_deg")).collect()
    } else {
        Vec::new()
    };
    let mut header = vec!["snr_db".to_string(), "snapshots".to_string()];
    header.extend(angle_cols);
    header.push("rms_deg".into());
    header.extend(oracle_cols);
    writeln!(out, "{}", header.join(","))?;
    for &snr in &a.snr {
        let scene = SourceScene::with_snr(a.doas.clone(), snr)?;
        for &t in &a.snapshots {
            let b = crlb_unconditional(&geom, &scene, t)?;
            let mut row = vec![fmt_num(snr), t.to_string()];
            row.extend(b.iter().map(|&v| fmt_num(v)));
            row.push(fmt_num(rms(&b)));
            if a.oracle {
                row.extend(crlb_fisher_oracle(&geom, &scene, t)?.iter().map(|&v| fmt_num(v)));
            }
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

fn thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn shape_label(s: Shape) -> String {
    match s {
        Shape::Spatial { h, w, c } => format!("{h}x{w}x{c}"),
        Shape::Flat(n) => n.to_string(),
    }
}

fn layer_label(l: &LayerSpec) -> String {
    match l {
        LayerSpec::Conv2d { filters, kernel, stride } => format!("conv {kernel}x{kernel}/{stride}, {filters}"),
        LayerSpec::BatchNorm => "batch-norm".into(),
        LayerSpec::Relu => "relu".into(),
        LayerSpec::Flatten => "flatten".into(),
        LayerSpec::Dense { units } => format!("dense {units}"),
        LayerSpec::Dropout { rate } => format!("dropout {rate}"),
        LayerSpec::Sigmoid => "sigmoid".into(),
    }
}

fn spec_check(a: SpecCheckArgs, out: &mut dyn Write) -> Result<()> {
    let spec: NetworkSpec = a.profile.spec();
    spec.validate()?;
    let grid = a.profile.grid();
    writeln!(
        out,
        "profile {:?}: {} sensors, {} grid points at {} deg",
        a.profile,
        spec.input_size,
        grid.len(),
        grid.resolution_deg()
    )?;
    let shapes = spec.shapes()?;
    let counts = spec.layer_parameter_counts()?;
    writeln!(out, "{:>3} {:<22} {:<12} {:>12}", "#", "layer", "output", "parameters")?;
    writeln!(out, "{:>3} {:<22} {:<12} {:>12}", "", "input", shape_label(spec.input_shape()), "")?;
    for (i, ((layer, shape), c)) in spec.layers.iter().zip(&shapes).zip(&counts).enumerate() {
        writeln!(
            out,
            "{:>3} {:<22} {:<12} {:>12}",
            i,
            layer_label(layer),
            shape_label(*shape),
            thousands(*c as u64)
        )?;
    }
    let dims: Vec<String> = std::iter::once(spec.input_size)
        .chain(shapes.iter().filter_map(|s| match s {
            Shape::Spatial { h, .. } => Some(*h),
            Shape::Flat(_) => None,
        }))
        .scan(0, |prev, h| {
            let keep = h != *prev;
            *prev = h;
            Some(keep.then_some(h))
        })
        .flatten()
        .map(|h| h.to_string())
        .collect();
    let flat = shapes.iter().find_map(|s| match s {
        Shape::Flat(n) => Some(*n),
        Shape::Spatial { .. } => None,
    });
    writeln!(
        out,
        "spatial chain: {}; flatten: {}",
        dims.join(" -> "),
        flat.map(|n| n.to_string()).unwrap_or_default()
    )?;
    let total = spec.parameter_count()? as u64;
    writeln!(out, "trainable parameters: {} ({total})", thousands(total))?;
    let snrs = a.profile.default_snrs_db().len();
    let per_snr = fixed_k_count(grid.len(), 2, 1)?;
    let fixed = fixed_k_count(grid.len(), 2, snrs)?;
    let mixed = mixed_k_count(grid.len(), 3)?;
    writeln!(out, "fixed K=2 examples per SNR: {} ({per_snr})", thousands(per_snr))?;
    writeln!(out, "fixed K=2 examples over {snrs} SNRs: {} ({fixed})", thousands(fixed))?;
    writeln!(out, "mixed K<=3 examples per SNR: {} ({mixed})", thousands(mixed))?;
    writeln!(out, "available presets: {}", PRESET_NAMES.join(", "))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousands_separators() {
        assert_eq!(thousands(28_190_585), "28,190,585");
        assert_eq!(thousands(7260), "7,260");
        assert_eq!(thousands(999), "999");
    }

    #[test]
    fn history_sits_next_to_checkpoint() {
        assert_eq!(history_path(Path::new("out/m.doac")), PathBuf::from("out/m.history.csv"));
    }

    #[test]
    fn trials_round_trip_through_parser() {
        let text = "# c\npoint,scene,trial,seed,x,snr_db,snapshots,method,truth_deg,estimate_deg,status\n\
                    0,0,0,0,1,0,10,music,-1;2,-1.5;2,ok\n0,0,0,0,1,0,10,l21-svd,-1;2,,failed: x\n";
        let rows = parse_trials(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].estimate.as_deref(), Some(&[-1.5, 2.0][..]));
        assert!(rows[1].estimate.is_none());
    }
}
