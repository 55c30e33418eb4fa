//! End-to-end orchestration: per-frame preparation (filtering, graphs,
//! histograms, cached self-kernels), gated pair scoring across worker
//! threads, detector training, and report assembly.
//!
//! Scoring is deterministic by construction: pairs are enumerated in
//! `(i, j)` order, workers process contiguous chunks whose results are
//! concatenated back in chunk order, and every random draw (vocabulary,
//! classifier) comes from the seeded generators in the config.

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::config::{DetectorKind, PipelineConfig, TierMode};
use crate::eval::{first_detection, precision_recall, EvalReport, EvalRow};
use crate::ingest::{Dataset, Detection, GroundTruth, IngestError};
use crate::labelmatch::{
    hausdorff_distance, match_labels, normalize_detections, LabelMatchError, NormalizedDetection,
};
use crate::objfilter::filter_detections;
use crate::predictor::{
    pair_features, predict_candidates, train_classifier, Classifier, PairScore, PredictError,
    TemporalConfig,
};
use crate::scenegraph::{build_graph, GraphError, SceneGraph};
use crate::vbow::{build_vocabulary, frame_histogram, BowHistogram, Vocabulary};
use crate::wlkernel::{wl_kernel_raw, KernelError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    LabelMatch(#[from] LabelMatchError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("dataset has no ground truth; evaluation requires groundtruth.csv")]
    MissingGroundTruth,
    #[error("frame {0} is not in the dataset")]
    UnknownFrame(u32),
    #[error("frame {0} has no usable graph in {1} mode")]
    UnusableFrame(u32, &'static str),
}

/// Everything the scorer needs about one frame, precomputed once.
#[derive(Debug, Clone)]
pub struct FrameArtifacts {
    pub frame_id: u32,
    /// Detections surviving the movable/oversized filters.
    pub filtered: Vec<Detection>,
    pub normalized: Vec<NormalizedDetection>,
    /// Normalized detection centroids, in `normalized` order.
    pub centroids: Vec<(f64, f64)>,
    pub graph: SceneGraph,
    /// Self kernel value, cached for normalization; present iff usable.
    pub self_kernel: Option<u64>,
    /// Whether the frame can participate in pairs: a non-empty graph in
    /// flat mode, at least one anchor otherwise.
    pub usable: bool,
    /// Histogram ingested with the frame, when present and valid.
    ingested: Option<BowHistogram>,
    /// Histogram computed from descriptors via the shared vocabulary.
    computed: Option<BowHistogram>,
}

/// Per-frame artifacts plus the shared visual vocabulary.
#[derive(Debug)]
pub struct Prepared {
    pub frames: Vec<FrameArtifacts>,
    pub vocabulary: Option<Vocabulary>,
    pub frame_span: u32,
    pub warnings: Vec<String>,
}

/// Builds the visual vocabulary shared by every mode of a run. Returns
/// no vocabulary (with a warning) when the dataset carries no
/// descriptors at all.
pub fn build_shared_vocabulary(
    ds: &Dataset,
    cfg: &PipelineConfig,
) -> (Option<Vocabulary>, Vec<String>) {
    match build_vocabulary(&ds.frames, cfg.vocab_k, cfg.seed) {
        Ok(v) => (Some(v), Vec::new()),
        Err(e) => (None, vec![format!("visual vocabulary unavailable: {e}")]),
    }
}

/// Prepares every frame for scoring under `cfg.mode`. Pass a
/// prebuilt vocabulary to share it across modes; `None` builds one.
pub fn prepare(
    ds: &Dataset,
    cfg: &PipelineConfig,
    vocabulary: Option<&Vocabulary>,
) -> Result<Prepared, PipelineError> {
    let (vocab_owned, mut warnings) = match vocabulary {
        Some(v) => (Some(v.clone()), Vec::new()),
        None => build_shared_vocabulary(ds, cfg),
    };
    let vocab = vocab_owned.as_ref();

    let mut frames = Vec::with_capacity(ds.frames.len());
    let mut bad_ingested = 0usize;
    for frame in &ds.frames {
        let filtered = filter_detections(&frame.objects, frame.width, frame.height, &cfg.filter);
        let normalized =
            normalize_detections(&filtered, ds.label_ids(), frame.width, frame.height)?;
        let centroids = normalized.iter().map(NormalizedDetection::centroid).collect();

        let ingested = match &frame.vbow {
            Some(raw) => match BowHistogram::from_weights(raw.iter().map(|(&w, &v)| (w, v))) {
                Ok(h) => Some(h),
                Err(_) => {
                    bad_ingested += 1;
                    None
                }
            },
            None => None,
        };
        let computed = vocab.and_then(|v| frame_histogram(v, frame).ok());
        let vbow_weight =
            ingested.as_ref().or(computed.as_ref()).map_or(0.0, BowHistogram::mean_weight);

        let graph = build_graph(frame, &filtered, ds.label_ids(), cfg.mode, cfg.margin_px, vbow_weight)?;
        let usable = match cfg.mode {
            TierMode::Flat => graph.node_count() > 0,
            TierMode::TwoTier | TierMode::ThreeTier => graph.has_anchors(),
        };
        let self_kernel =
            if usable { Some(wl_kernel_raw(&graph, &graph, cfg.iterations)?) } else { None };

        frames.push(FrameArtifacts {
            frame_id: frame.frame_id,
            filtered,
            normalized,
            centroids,
            graph,
            self_kernel,
            usable,
            ingested,
            computed,
        });
    }
    if bad_ingested > 0 {
        warnings.push(format!("{bad_ingested} frames carried invalid ingested histograms; recomputed or zeroed"));
    }
    let unusable = frames.iter().filter(|f| !f.usable).count();
    if unusable > 0 {
        warnings.push(format!("{unusable} frames have no usable graph in {} mode and are skipped", cfg.mode.as_str()));
    }

    Ok(Prepared { frames, vocabulary: vocab_owned, frame_span: ds.frame_span(), warnings })
}

/// Visual-word similarity for one frame pair, mirroring the scoring
/// precedence: precomputed pair scores, then histograms ingested with
/// both frames, then histograms computed for both from the vocabulary.
/// Pairs with no source score 0.
fn pair_vbow(
    a: &FrameArtifacts,
    b: &FrameArtifacts,
    precomputed: Option<&BTreeMap<(u32, u32), f64>>,
) -> Option<f64> {
    let key = (a.frame_id.min(b.frame_id), a.frame_id.max(b.frame_id));
    if let Some(score) = precomputed.and_then(|m| m.get(&key)) {
        return Some(*score);
    }
    if let (Some(ha), Some(hb)) = (&a.ingested, &b.ingested) {
        return Some(ha.similarity(hb));
    }
    if let (Some(ha), Some(hb)) = (&a.computed, &b.computed) {
        return Some(ha.similarity(hb));
    }
    None
}

/// Full measurement of one frame pair from prepared artifacts.
fn score_one(
    a: &FrameArtifacts,
    b: &FrameArtifacts,
    match_score: f64,
    tcfg: &TemporalConfig,
    iterations: u32,
    precomputed: Option<&BTreeMap<(u32, u32), f64>>,
) -> Result<PairScore, PipelineError> {
    let k_raw = wl_kernel_raw(&a.graph, &b.graph, iterations)?;
    let saa = a.self_kernel.expect("usable frame has a self kernel") as f64;
    let sbb = b.self_kernel.expect("usable frame has a self kernel") as f64;
    let k_norm = k_raw as f64 / (saa * sbb).sqrt();
    let (i, j) = (a.frame_id.min(b.frame_id), a.frame_id.max(b.frame_id));
    let tc = crate::predictor::temporal_constraint(i, j, tcfg)?;
    let vbow = pair_vbow(a, b, precomputed);
    let hausdorff = hausdorff_distance(&a.centroids, &b.centroids)?;
    Ok(PairScore {
        i,
        j,
        k_raw,
        k_norm,
        tc,
        s: k_norm - tcfg.alpha * tc,
        vbow: vbow.unwrap_or(0.0),
        label_match: match_score,
        hausdorff,
    })
}

/// All scored pairs of one run, in `(i, j)` order.
#[derive(Debug)]
pub struct ScoreOutcome {
    pub scores: Vec<PairScore>,
    /// Pairs that passed the frame-gap test (scored or not).
    pub considered: usize,
    /// Pairs rejected by the label-agreement gate.
    pub gate_rejected: usize,
    pub warnings: Vec<String>,
}

/// Scores every eligible pair: both frames usable, frame gap at least
/// `min_gap`, and label agreement within tolerance. Kernel work fans
/// out over `cfg.workers` threads; output order is independent of the
/// worker count.
pub fn score_pairs(ds: &Dataset, cfg: &PipelineConfig) -> Result<ScoreOutcome, PipelineError> {
    let prepared = prepare(ds, cfg, None)?;
    score_prepared(&prepared, ds, cfg)
}

/// [`score_pairs`] over an existing [`Prepared`].
pub fn score_prepared(
    prepared: &Prepared,
    ds: &Dataset,
    cfg: &PipelineConfig,
) -> Result<ScoreOutcome, PipelineError> {
    let tcfg = TemporalConfig::from_pipeline(cfg);
    let frames = &prepared.frames;
    let mut warnings = prepared.warnings.clone();

    // Gate single-threaded (cheap, and it fixes the task list), kernel
    // scoring threaded.
    let mut tasks: Vec<(usize, usize, f64)> = Vec::new();
    let mut considered = 0usize;
    let mut gate_rejected = 0usize;
    for ia in 0..frames.len() {
        for ib in ia + 1..frames.len() {
            let (a, b) = (&frames[ia], &frames[ib]);
            if b.frame_id.abs_diff(a.frame_id) < cfg.min_gap.max(1) || !a.usable || !b.usable {
                continue;
            }
            considered += 1;
            let gate = match_labels(&a.normalized, &b.normalized, cfg.label_match_tolerance);
            if gate.accepted {
                tasks.push((ia, ib, gate.match_score));
            } else {
                gate_rejected += 1;
            }
        }
    }

    let mut no_vbow_source = 0usize;
    let precomputed = ds.pair_scores.as_ref();
    let workers = cfg.workers.max(1).min(tasks.len().max(1));
    let chunk_len = tasks.len().div_ceil(workers);
    let score_task = |&(ia, ib, match_score): &(usize, usize, f64)| {
        score_one(&frames[ia], &frames[ib], match_score, &tcfg, cfg.iterations, precomputed)
    };

    let scores = if workers <= 1 || tasks.len() <= 1 {
        tasks.iter().map(score_task).collect::<Result<Vec<_>, _>>()?
    } else {
        let chunk_results: Vec<Result<Vec<PairScore>, PipelineError>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = tasks
                    .chunks(chunk_len)
                    .map(|chunk| scope.spawn(|| chunk.iter().map(score_task).collect()))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("scoring worker panicked")).collect()
            });
        let mut merged = Vec::with_capacity(tasks.len());
        for chunk in chunk_results {
            merged.extend(chunk?);
        }
        merged
    };

    for (task, score) in tasks.iter().zip(&scores) {
        let (a, b) = (&frames[task.0], &frames[task.1]);
        if pair_vbow(a, b, precomputed).is_none() {
            no_vbow_source += 1;
        }
        debug_assert_eq!((score.i, score.j), {
            let (x, y) = (a.frame_id, b.frame_id);
            (x.min(y), x.max(y))
        });
    }
    if no_vbow_source > 0 {
        warnings.push(format!(
            "{no_vbow_source} pairs had no visual-word source; their similarity channel is 0"
        ));
    }

    Ok(ScoreOutcome { scores, considered, gate_rejected, warnings })
}

/// Scores an explicit pair list, bypassing the frame-gap and label
/// gates (the label agreement is still measured and reported). Pairs
/// are canonicalized to `i < j` and kept in list order. Unknown frame
/// ids, frames without a usable graph, and pairs of identical frames
/// are errors.
pub fn score_listed_pairs(
    prepared: &Prepared,
    ds: &Dataset,
    cfg: &PipelineConfig,
    pairs: &[(u32, u32)],
) -> Result<Vec<PairScore>, PipelineError> {
    let tcfg = TemporalConfig::from_pipeline(cfg);
    let index: BTreeMap<u32, usize> =
        prepared.frames.iter().enumerate().map(|(k, f)| (f.frame_id, k)).collect();
    let lookup = |id: u32| -> Result<&FrameArtifacts, PipelineError> {
        let f = index.get(&id).map(|&k| &prepared.frames[k]).ok_or(PipelineError::UnknownFrame(id))?;
        if !f.usable {
            return Err(PipelineError::UnusableFrame(id, cfg.mode.as_str()));
        }
        Ok(f)
    };
    pairs
        .iter()
        .map(|&(i, j)| {
            let a = lookup(i)?;
            let b = lookup(j)?;
            let gate = match_labels(&a.normalized, &b.normalized, cfg.label_match_tolerance);
            score_one(a, b, gate.match_score, &tcfg, cfg.iterations, ds.pair_scores.as_ref())
        })
        .collect()
}

/// Builds classifier training samples from scored pairs and ground
/// truth. Positives are repeated so their weight roughly balances the
/// negatives.
pub fn training_samples(
    scores: &[PairScore],
    truth: &GroundTruth,
    frame_span: u32,
) -> Vec<(Vec<f64>, f64)> {
    let mut samples: Vec<(Vec<f64>, f64)> = Vec::with_capacity(scores.len());
    let mut positives = Vec::new();
    for sc in scores {
        let x = pair_features(sc, frame_span).to_vec();
        if truth.pairs.contains(&(sc.i, sc.j)) {
            positives.push(x.clone());
            samples.push((x, 1.0));
        } else {
            samples.push((x, 0.0));
        }
    }
    if !positives.is_empty() {
        let negatives = samples.len() - positives.len();
        let repeats = negatives.div_ceil(positives.len()).saturating_sub(1);
        for _ in 0..repeats {
            samples.extend(positives.iter().cloned().map(|x| (x, 1.0)));
        }
    }
    samples
}

/// Trains the pair classifier on the dataset's own ground truth over
/// all gate-passing pairs.
pub fn train_detector(ds: &Dataset, cfg: &PipelineConfig) -> Result<Classifier, PipelineError> {
    let truth = ds.ground_truth.as_ref().ok_or(PipelineError::MissingGroundTruth)?;
    let outcome = score_pairs(ds, cfg)?;
    let samples = training_samples(&outcome.scores, truth, ds.frame_span());
    Ok(train_classifier(
        &samples,
        &cfg.classifier.hidden,
        cfg.classifier.epochs as u32,
        cfg.classifier.learning_rate,
        cfg.seed,
    )?)
}

/// One evaluated mode: its report row and the predicted pairs.
#[derive(Debug)]
pub struct ModeEval {
    pub row: EvalRow,
    pub predicted: Vec<(u32, u32)>,
    pub warnings: Vec<String>,
}

/// Runs the full pipeline for `cfg.mode` and scores the predictions
/// against ground truth. The detector is `cfg.detector`: the threshold
/// rule accepts combined scores at `tau`; the classifier is trained on
/// the dataset's own ground truth first, unless `pretrained` supplies
/// one. Pass a shared vocabulary when evaluating several modes of one
/// dataset.
pub fn evaluate_mode(
    ds: &Dataset,
    cfg: &PipelineConfig,
    vocabulary: Option<&Vocabulary>,
    pretrained: Option<&Classifier>,
) -> Result<ModeEval, PipelineError> {
    let truth = ds.ground_truth.as_ref().ok_or(PipelineError::MissingGroundTruth)?;
    let start = Instant::now();
    let prepared = prepare(ds, cfg, vocabulary)?;
    let outcome = score_prepared(&prepared, ds, cfg)?;
    let tcfg = TemporalConfig::from_pipeline(cfg);
    let span = prepared.frame_span;

    let trained;
    let classifier = match (cfg.detector, pretrained) {
        (DetectorKind::Threshold, _) => None,
        (DetectorKind::Mlp, Some(clf)) => Some(clf),
        (DetectorKind::Mlp, None) => {
            let samples = training_samples(&outcome.scores, truth, span);
            trained = train_classifier(
                &samples,
                &cfg.classifier.hidden,
                cfg.classifier.epochs as u32,
                cfg.classifier.learning_rate,
                cfg.seed,
            )?;
            Some(&trained)
        }
    };
    let predicted = predict_candidates(&outcome.scores, classifier, cfg.tau, &tcfg, span);
    let pr = precision_recall(&predicted, &truth.pairs, cfg.tolerance);
    let row = EvalRow {
        mode: cfg.mode.as_str().to_string(),
        precision: pr.precision,
        recall: pr.recall,
        tp: pr.tp,
        fp: pr.fp,
        fn_: pr.fn_,
        first_kf: first_detection(&predicted),
        runtime_s: cfg.emit_runtime.then(|| start.elapsed().as_secs_f64()),
    };
    Ok(ModeEval { row, predicted, warnings: outcome.warnings })
}

/// Evaluates each mode with otherwise identical config and assembles
/// the comparison report. The vocabulary is built once and shared.
pub fn run_ablation(
    ds: &Dataset,
    cfg: &PipelineConfig,
    modes: &[TierMode],
    dataset_id: &str,
) -> Result<(EvalReport, Vec<String>), PipelineError> {
    if ds.ground_truth.is_none() {
        return Err(PipelineError::MissingGroundTruth);
    }
    let (vocab, mut warnings) = build_shared_vocabulary(ds, cfg);
    let mut rows = Vec::new();
    for &mode in modes {
        let mode_cfg = PipelineConfig { mode, ..cfg.clone() };
        let eval = evaluate_mode(ds, &mode_cfg, vocab.as_ref(), None)?;
        for w in eval.warnings {
            let tagged = format!("{}: {w}", mode.as_str());
            if !warnings.contains(&tagged) {
                warnings.push(tagged);
            }
        }
        rows.push(eval.row);
    }
    let report = EvalReport {
        dataset_id: dataset_id.to_string(),
        rows,
        config_snapshot: cfg.snapshot(),
    };
    Ok((report, warnings))
}
