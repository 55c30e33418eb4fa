//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage problems (unknown flags, bad
//! flag values, unresolvable configuration), 1 for data problems
//! (unreadable datasets, structural violations, failed runs). Effective
//! configuration precedence is built-in defaults, then the `--config`
//! file, then flags; the resolved config is echoed as
//! `config.snapshot` next to every produced output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{DetectorKind, PipelineConfig, TierMode};
use crate::eval::{write_report_csv, EvalReport, EvalRow};
use crate::ingest::{load_dataset, validate_dataset, Dataset};
use crate::pipeline::{
    evaluate_mode, prepare, run_ablation, score_listed_pairs, score_prepared, training_samples,
};
use crate::predictor::{predict_candidates, train_classifier, Classifier, PairScore, TemporalConfig};
use crate::synth::{generate_sequence, RevisitWindow, SynthConfig};

#[derive(Parser, Debug)]
#[command(
    name = "loopgraph",
    version,
    about = "Loop-closure candidate detection over tiered scene graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic benchmark sequence with ground truth.
    Synth(SynthArgs),
    /// Check dataset files against their structural constraints.
    Validate(ValidateArgs),
    /// Export each frame's scene graph as node/edge CSVs.
    BuildGraphs(BuildGraphsArgs),
    /// Score frame pairs (all eligible pairs, or an explicit list).
    Score(ScoreArgs),
    /// Train the pair classifier on a dataset's ground truth.
    Train(TrainArgs),
    /// Emit loop-closure candidate pairs.
    Predict(PredictArgs),
    /// Evaluate candidates against ground truth (default detector: mlp).
    Evaluate(EvaluateArgs),
    /// Compare flat/two_tier/three_tier on one dataset (default
    /// detector: threshold).
    Ablate(AblateArgs),
}

/// Config resolution shared by the dataset-processing subcommands.
#[derive(Args, Debug, Default)]
struct ConfigOverrides {
    /// Flat `key = value` config file applied over built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Graph tier mode: flat, two_tier, or three_tier.
    #[arg(long)]
    mode: Option<String>,
    /// Pixel margin of the background band around each box.
    #[arg(long)]
    margin: Option<f64>,
    /// Temporal-term scale, in (0, 1).
    #[arg(long)]
    beta_s: Option<f64>,
    /// Temporal-term weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Relabeling iterations of the graph kernel.
    #[arg(long)]
    iterations: Option<u32>,
    /// Acceptance threshold on the combined score.
    #[arg(long)]
    tau: Option<f64>,
    /// Smallest frame gap eligible for candidacy.
    #[arg(long)]
    min_gap: Option<u32>,
    /// Temporal term form: literal or clamped.
    #[arg(long)]
    temporal_mode: Option<String>,
    /// Seed for every random draw (vocabulary, classifier).
    #[arg(long)]
    seed: Option<u64>,
    /// Frame tolerance when matching predictions to ground truth.
    #[arg(long)]
    tolerance: Option<u32>,
    /// Largest acceptable label mismatch fraction between two frames.
    #[arg(long)]
    label_tolerance: Option<f64>,
    /// Visual vocabulary size.
    #[arg(long)]
    vocab_k: Option<usize>,
    /// Decision stage: mlp or threshold.
    #[arg(long)]
    detector: Option<String>,
    /// Worker threads for pair scoring.
    #[arg(long)]
    workers: Option<usize>,
    /// Classifier training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Classifier learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Record measured runtimes in reports (makes report bytes
    /// run-dependent).
    #[arg(long)]
    timings: bool,
}

enum CliError {
    /// Bad invocation or unresolvable configuration: exit 2.
    Usage(String),
    /// Bad data or failed run: exit 1.
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

impl ConfigOverrides {
    /// Resolves the effective pipeline config. `default_detector` seeds
    /// the per-command detector default; the config file and the
    /// `--detector` flag both override it.
    fn resolve(&self, default_detector: DetectorKind) -> Result<PipelineConfig, CliError> {
        let mut cfg = PipelineConfig { detector: default_detector, ..PipelineConfig::default() };
        if let Some(path) = &self.config {
            cfg.apply_file(path).map_err(|e| CliError::Usage(format!("--config: {e}")))?;
        }
        let mut set = |key: &str, value: Option<String>| -> Result<(), CliError> {
            if let Some(v) = value {
                cfg.set(key, &v).map_err(CliError::Usage)?;
            }
            Ok(())
        };
        set("mode", self.mode.clone())?;
        set("margin_px", self.margin.map(|v| v.to_string()))?;
        set("beta_s", self.beta_s.map(|v| v.to_string()))?;
        set("alpha", self.alpha.map(|v| v.to_string()))?;
        set("iterations", self.iterations.map(|v| v.to_string()))?;
        set("tau", self.tau.map(|v| v.to_string()))?;
        set("min_gap", self.min_gap.map(|v| v.to_string()))?;
        set("temporal_mode", self.temporal_mode.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("tolerance", self.tolerance.map(|v| v.to_string()))?;
        set("label_match_tolerance", self.label_tolerance.map(|v| v.to_string()))?;
        set("vocab_k", self.vocab_k.map(|v| v.to_string()))?;
        set("detector", self.detector.clone())?;
        set("workers", self.workers.map(|v| v.to_string()))?;
        set("clf_epochs", self.epochs.map(|v| v.to_string()))?;
        set("clf_lr", self.learning_rate.map(|v| v.to_string()))?;
        if self.timings {
            cfg.emit_runtime = true;
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory for frames.jsonl, groundtruth.csv,
    /// config.snapshot.
    #[arg(long)]
    out: PathBuf,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Total frames.
    #[arg(long)]
    frames: Option<u32>,
    /// Places on the camera path.
    #[arg(long)]
    places: Option<u32>,
    /// Distinct object labels.
    #[arg(long)]
    labels: Option<u32>,
    /// Label-flip probability per emitted detection.
    #[arg(long)]
    label_noise: Option<f64>,
    /// Standard deviation of per-object centroid jitter, in pixels.
    #[arg(long)]
    jitter: Option<f64>,
    /// Probability a detection is dropped (its keypoints remain).
    #[arg(long)]
    dropout: Option<f64>,
    /// Decoy places mirroring the revisited place (0-2).
    #[arg(long)]
    decoys: Option<u32>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Dataset directory (frames.jsonl plus optional CSVs).
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Args, Debug)]
struct BuildGraphsArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directory for frame_NNNNNN.nodes.csv / .edges.csv exports.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directory for scores.csv and config.snapshot.
    #[arg(long)]
    out: PathBuf,
    /// Score only the `i,j` pairs listed in this file (bypasses the
    /// frame-gap and label gates).
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// File the trained model is written to.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directory for candidates.csv and config.snapshot.
    #[arg(long)]
    out: PathBuf,
    /// Trained model; without it the score threshold decides.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directory for report.csv and config.snapshot.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Pretrained model to evaluate instead of training one.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directory for report.csv and config.snapshot.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Comma-separated subset of flat,two_tier,three_tier.
    #[arg(long)]
    modes: Option<String>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

/// Parses and runs one invocation, returning the process exit code.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            // Help goes to stdout, errors to stderr, as printed by clap.
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(args) => run_synth(args),
        Command::Validate(args) => run_validate(args),
        Command::BuildGraphs(args) => run_build_graphs(args),
        Command::Score(args) => run_score(args),
        Command::Train(args) => run_train(args),
        Command::Predict(args) => run_predict(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Ablate(args) => run_ablate(args),
    }
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    let mut cfg = SynthConfig::benchmark();
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.frames {
        cfg.n_frames = v;
    }
    if let Some(v) = args.places {
        cfg.n_places = v;
    }
    if let Some(v) = args.labels {
        cfg.n_labels = v;
    }
    if let Some(v) = args.label_noise {
        cfg.label_noise_rate = v;
    }
    if let Some(v) = args.jitter {
        cfg.centroid_jitter_px = v;
    }
    if let Some(v) = args.dropout {
        cfg.dropout_rate = v;
    }
    if let Some(v) = args.decoys {
        cfg.n_decoy_places = v;
    }
    // Keep the revisit aligned with place dwells for any frame/place
    // count: the second place is re-imaged over the final dwell.
    if args.frames.is_some() || args.places.is_some() {
        let dwell = cfg.dwell();
        cfg.revisits = vec![RevisitWindow {
            original_start: dwell,
            original_end: 2 * dwell,
            revisit_start: cfg.n_frames.saturating_sub(dwell),
            revisit_end: cfg.n_frames,
        }];
        cfg.min_revisit_gap = dwell;
    }
    let (_, stats) = generate_sequence(&cfg, &args.out).map_err(data)?;
    println!(
        "wrote {} frames, {} ground-truth pairs, {} label flips to {}",
        stats.n_frames,
        stats.n_truth_pairs,
        stats.label_flips,
        args.out.display()
    );
    Ok(())
}

fn load(path: &Path) -> Result<Dataset, CliError> {
    let loaded = load_dataset(path).map_err(data)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.dataset)
}

fn run_validate(args: ValidateArgs) -> Result<(), CliError> {
    let ds = load(&args.dataset)?;
    let report = validate_dataset(&ds);
    print!("{report}");
    if report.is_clean() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{} structural violations", report.violations.len())))
    }
}

fn write_snapshot(dir: &Path, cfg: &PipelineConfig) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(data)?;
    fs::write(dir.join("config.snapshot"), cfg.snapshot()).map_err(data)
}

fn run_build_graphs(args: BuildGraphsArgs) -> Result<(), CliError> {
    let cfg = args.overrides.resolve(DetectorKind::Threshold)?;
    let ds = load(&args.dataset)?;
    let prepared = prepare(&ds, &cfg, None).map_err(data)?;
    write_snapshot(&args.out, &cfg)?;
    for frame in &prepared.frames {
        let nodes = args.out.join(format!("frame_{:06}.nodes.csv", frame.frame_id));
        let edges = args.out.join(format!("frame_{:06}.edges.csv", frame.frame_id));
        frame.graph.export_csv(&nodes, &edges).map_err(data)?;
    }
    for w in &prepared.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "wrote {} graph exports ({} mode) to {}",
        prepared.frames.len(),
        cfg.mode.as_str(),
        args.out.display()
    );
    Ok(())
}

fn scores_csv(scores: &[PairScore]) -> String {
    let mut out = String::from("i,j,k_raw,k_norm,tc,s,vbow,label_match,hausdorff\n");
    for sc in scores {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            sc.i, sc.j, sc.k_raw, sc.k_norm, sc.tc, sc.s, sc.vbow, sc.label_match, sc.hausdorff
        )
        .unwrap();
    }
    out
}

fn parse_pair_list(path: &Path) -> Result<Vec<(u32, u32)>, CliError> {
    let text = fs::read_to_string(path).map_err(data)?;
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (k == 0 && line == "i,j") {
            continue;
        }
        let (i, j) = line
            .split_once(',')
            .ok_or_else(|| CliError::Data(format!("{}:{}: expected 'i,j'", path.display(), k + 1)))?;
        let parse = |t: &str| {
            t.trim().parse::<u32>().map_err(|e| {
                CliError::Data(format!("{}:{}: bad frame id '{}': {e}", path.display(), k + 1, t.trim()))
            })
        };
        let (i, j) = (parse(i)?, parse(j)?);
        pairs.push((i.min(j), i.max(j)));
    }
    Ok(pairs)
}

fn run_score(args: ScoreArgs) -> Result<(), CliError> {
    let cfg = args.overrides.resolve(DetectorKind::Threshold)?;
    let ds = load(&args.dataset)?;
    let prepared = prepare(&ds, &cfg, None).map_err(data)?;
    let (scores, summary) = match &args.pairs {
        Some(list) => {
            let pairs = parse_pair_list(list)?;
            let scores = score_listed_pairs(&prepared, &ds, &cfg, &pairs).map_err(data)?;
            let n = scores.len();
            (scores, format!("scored {n} listed pairs"))
        }
        None => {
            let outcome = score_prepared(&prepared, &ds, &cfg).map_err(data)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            let line = format!(
                "scored {} pairs ({} eligible, {} rejected by the label gate)",
                outcome.scores.len(),
                outcome.considered,
                outcome.gate_rejected
            );
            (outcome.scores, line)
        }
    };
    write_snapshot(&args.out, &cfg)?;
    let path = args.out.join("scores.csv");
    fs::write(&path, scores_csv(&scores)).map_err(data)?;
    println!("{summary}; wrote {}", path.display());
    Ok(())
}

fn run_train(args: TrainArgs) -> Result<(), CliError> {
    let cfg = args.overrides.resolve(DetectorKind::Mlp)?;
    let ds = load(&args.dataset)?;
    let truth = ds
        .ground_truth
        .clone()
        .ok_or_else(|| CliError::Data("training requires groundtruth.csv".into()))?;
    let prepared = prepare(&ds, &cfg, None).map_err(data)?;
    let outcome = score_prepared(&prepared, &ds, &cfg).map_err(data)?;
    let samples = training_samples(&outcome.scores, &truth, prepared.frame_span);
    let clf = train_classifier(
        &samples,
        &cfg.classifier.hidden,
        cfg.classifier.epochs as u32,
        cfg.classifier.learning_rate,
        cfg.seed,
    )
    .map_err(data)?;
    let mean_loss =
        samples.iter().map(|(x, y)| clf.loss(x, *y)).sum::<f64>() / samples.len().max(1) as f64;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(data)?;
        }
    }
    clf.save(&args.out).map_err(data)?;
    println!(
        "trained on {} samples ({} scored pairs); mean training loss {:.4}; saved to {}",
        samples.len(),
        outcome.scores.len(),
        mean_loss,
        args.out.display()
    );
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<(), CliError> {
    let cfg = args.overrides.resolve(if args.model.is_some() {
        DetectorKind::Mlp
    } else {
        DetectorKind::Threshold
    })?;
    let classifier = match (&args.model, cfg.detector) {
        (Some(path), _) => Some(Classifier::load(path).map_err(data)?),
        (None, DetectorKind::Mlp) => {
            return Err(CliError::Usage(
                "the mlp detector needs --model MODEL_FILE (train one with `train`)".into(),
            ))
        }
        (None, DetectorKind::Threshold) => None,
    };
    let ds = load(&args.dataset)?;
    let prepared = prepare(&ds, &cfg, None).map_err(data)?;
    let outcome = score_prepared(&prepared, &ds, &cfg).map_err(data)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let tcfg = TemporalConfig::from_pipeline(&cfg);
    let predicted =
        predict_candidates(&outcome.scores, classifier.as_ref(), cfg.tau, &tcfg, prepared.frame_span);
    write_snapshot(&args.out, &cfg)?;
    let mut body = String::from("i,j\n");
    for (i, j) in &predicted {
        writeln!(body, "{i},{j}").unwrap();
    }
    let path = args.out.join("candidates.csv");
    fs::write(&path, body).map_err(data)?;
    println!("{} candidates; wrote {}", predicted.len(), path.display());
    Ok(())
}

fn dataset_id(path: &Path) -> String {
    path.display().to_string()
}

fn print_row(row: &EvalRow) {
    let first = row.first_kf.map_or_else(|| "-".to_string(), |v| v.to_string());
    println!(
        "{}: precision {:.4} recall {:.4} tp {} fp {} fn {} first_kf {}",
        row.mode, row.precision, row.recall, row.tp, row.fp, row.fn_, first
    );
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let cfg = args.overrides.resolve(DetectorKind::Mlp)?;
    let ds = load(&args.dataset)?;
    let pretrained = match &args.model {
        Some(path) => Some(Classifier::load(path).map_err(data)?),
        None => None,
    };
    let eval = evaluate_mode(&ds, &cfg, None, pretrained.as_ref()).map_err(data)?;
    for w in &eval.warnings {
        eprintln!("warning: {w}");
    }
    let report = EvalReport {
        dataset_id: dataset_id(&args.dataset),
        rows: vec![eval.row.clone()],
        config_snapshot: cfg.snapshot(),
    };
    fs::create_dir_all(&args.out).map_err(data)?;
    let path = args.out.join("report.csv");
    write_report_csv(&report, &path).map_err(data)?;
    print_row(&eval.row);
    println!("wrote {}", path.display());
    Ok(())
}

fn run_ablate(args: AblateArgs) -> Result<(), CliError> {
    let cfg = args.overrides.resolve(DetectorKind::Threshold)?;
    let modes: Vec<TierMode> = match &args.modes {
        None => TierMode::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|t| t.trim().parse::<TierMode>().map_err(CliError::Usage))
            .collect::<Result<_, _>>()?,
    };
    if modes.is_empty() {
        return Err(CliError::Usage("--modes must name at least one mode".into()));
    }
    let ds = load(&args.dataset)?;
    let (report, warnings) =
        run_ablation(&ds, &cfg, &modes, &dataset_id(&args.dataset)).map_err(data)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&args.out).map_err(data)?;
    let path = args.out.join("report.csv");
    write_report_csv(&report, &path).map_err(data)?;
    for row in &report.rows {
        print_row(row);
    }
    println!("wrote {}", path.display());
    Ok(())
}
