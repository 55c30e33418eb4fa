//! End-to-end acceptance checks for the whole pipeline. Every check
//! prints one `PASS`/`FAIL` line; the test fails only after all checks
//! have run, so a red run still shows the full scoreboard.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loopgraph::cli::execute;
use loopgraph::config::{PipelineConfig, TemporalMode, TierMode};
use loopgraph::eval::{first_detection, precision_recall};
use loopgraph::ingest::{Bbox, Dataset, Detection, FrameAnnotation, Keypoint};
use loopgraph::labelmatch::match_labels;
use loopgraph::pipeline::{prepare, score_prepared};
use loopgraph::predictor::{temporal_constraint, Classifier, TemporalConfig};
use loopgraph::scenegraph::{EdgeRecord, NodeRecord, SceneGraph};
use loopgraph::synth::{generate_dataset, generate_sequence, RevisitWindow, SynthConfig};
use loopgraph::wlkernel::{wl_kernel, wl_kernel_raw};

// ---------------------------------------------------------------------
// Scoreboard plumbing
// ---------------------------------------------------------------------

/// Writes straight to the process stdout so the scoreboard shows even
/// when the harness captures test output.
fn say(line: String) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn run_check(
    number: u32,
    name: &str,
    failures: &mut Vec<u32>,
    body: impl FnOnce() -> Result<(), String>,
) {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".to_string());
        Err(msg)
    });
    match outcome {
        Ok(()) => say(format!("check {number:>2}: PASS  {name}")),
        Err(msg) => {
            say(format!("check {number:>2}: FAIL  {name}: {msg}"));
            failures.push(number);
        }
    }
}

fn ensure(cond: bool, msg: impl Fn() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------
// Check 1 helpers: an independently written reference kernel that
// relabels with explicit strings instead of interned integers and
// materializes every round instead of shortcutting on stabilization.
// ---------------------------------------------------------------------

struct RefGraph {
    labels: Vec<u32>,
    edges: Vec<(usize, usize)>,
}

fn reference_refine(labels: &[String], edges: &[(usize, usize)]) -> Vec<String> {
    let mut neighbor_labels: Vec<Vec<&str>> = vec![Vec::new(); labels.len()];
    for &(u, v) in edges {
        neighbor_labels[u].push(&labels[v]);
        neighbor_labels[v].push(&labels[u]);
    }
    labels
        .iter()
        .enumerate()
        .map(|(k, old)| {
            let mut ns = neighbor_labels[k].clone();
            ns.sort_unstable();
            format!("({old}|{})", ns.join(","))
        })
        .collect()
}

fn reference_inner(a: &[String], b: &[String]) -> u64 {
    let mut ca: BTreeMap<&str, u64> = BTreeMap::new();
    for l in a {
        *ca.entry(l).or_insert(0) += 1;
    }
    let mut cb: BTreeMap<&str, u64> = BTreeMap::new();
    for l in b {
        *cb.entry(l).or_insert(0) += 1;
    }
    ca.iter().map(|(l, na)| na * cb.get(l).copied().unwrap_or(0)).sum()
}

fn reference_kernel_raw(a: &RefGraph, b: &RefGraph, rounds: u32) -> u64 {
    let mut la: Vec<String> = a.labels.iter().map(|l| l.to_string()).collect();
    let mut lb: Vec<String> = b.labels.iter().map(|l| l.to_string()).collect();
    let mut total = reference_inner(&la, &lb);
    for _ in 0..rounds {
        la = reference_refine(&la, &a.edges);
        lb = reference_refine(&lb, &b.edges);
        total += reference_inner(&la, &lb);
    }
    total
}

fn random_ref_graph(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize, n_labels: u32) -> RefGraph {
    let n = rng.gen_range(1..=max_nodes);
    let labels = (0..n).map(|_| rng.gen_range(0..n_labels)).collect();
    let mut all_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    all_pairs.shuffle(rng);
    let count = rng.gen_range(0..=all_pairs.len().min(max_edges));
    let mut edges: Vec<(usize, usize)> = all_pairs.into_iter().take(count).collect();
    edges.sort_unstable();
    RefGraph { labels, edges }
}

fn to_scene_graph(g: &RefGraph) -> SceneGraph {
    let nodes = g
        .labels
        .iter()
        .enumerate()
        .map(|(k, &wl_label)| NodeRecord { node_id: k, tier: 1, wl_label, features: [0.0; 8] })
        .collect();
    let edges = g
        .edges
        .iter()
        .map(|&(u, v)| EdgeRecord { u, v, features: [0.0; 4] })
        .collect();
    SceneGraph::from_parts(0, TierMode::ThreeTier, nodes, edges)
}

/// Reindexes a graph's nodes by a permutation (labels move with their
/// nodes, edges are remapped and recanonicalized).
fn permuted(g: &RefGraph, perm: &[usize]) -> RefGraph {
    let n = g.labels.len();
    let mut labels = vec![0; n];
    for (old, &new) in perm.iter().enumerate() {
        labels[new] = g.labels[old];
    }
    let mut edges: Vec<(usize, usize)> = g
        .edges
        .iter()
        .map(|&(u, v)| {
            let (nu, nv) = (perm[u], perm[v]);
            (nu.min(nv), nu.max(nv))
        })
        .collect();
    edges.sort_unstable();
    RefGraph { labels, edges }
}

// ---------------------------------------------------------------------
// Check 5 helper: uniformly rescale a dataset's pixel geometry.
// ---------------------------------------------------------------------

fn scaled_dataset(ds: &Dataset, s: f64) -> Dataset {
    let frames = ds
        .frames
        .iter()
        .map(|f| FrameAnnotation {
            frame_id: f.frame_id,
            width: f.width * s,
            height: f.height * s,
            objects: f
                .objects
                .iter()
                .map(|o| Detection {
                    label: o.label.clone(),
                    confidence: o.confidence,
                    bbox: Bbox::new(o.bbox.x1 * s, o.bbox.y1 * s, o.bbox.x2 * s, o.bbox.y2 * s),
                })
                .collect(),
            keypoints: f
                .keypoints
                .iter()
                .map(|k| Keypoint { x: k.x * s, y: k.y * s, desc: k.desc })
                .collect(),
            vbow: f.vbow.clone(),
        })
        .collect();
    Dataset::new(frames, ds.ground_truth.clone(), ds.pair_scores.clone()).expect("scaled dataset")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol
}

// ---------------------------------------------------------------------
// CLI helpers
// ---------------------------------------------------------------------

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["loopgraph"];
    argv.extend_from_slice(args);
    execute(argv)
}

fn cli_ok(args: &[&str]) -> Result<(), String> {
    let code = cli(args);
    ensure(code == 0, || format!("`{}` exited {code}", args.join(" ")))
}

fn path_str(p: &Path) -> String {
    p.to_str().expect("utf-8 path").to_string()
}

/// report.csv rows keyed by mode: (precision, recall, first_kf).
fn read_report(path: &Path) -> Result<BTreeMap<String, (f64, f64, Option<u32>)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut rows = BTreeMap::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 7 {
            return Err(format!("short row '{line}'"));
        }
        let p: f64 = cols[1].parse().map_err(|e| format!("bad precision in '{line}': {e}"))?;
        let r: f64 = cols[2].parse().map_err(|e| format!("bad recall in '{line}': {e}"))?;
        let first = if cols[6].is_empty() {
            None
        } else {
            Some(cols[6].parse::<u32>().map_err(|e| format!("bad first_kf in '{line}': {e}"))?)
        };
        rows.insert(cols[0].to_string(), (p, r, first));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------
// The checks
// ---------------------------------------------------------------------

fn check_kernel_against_reference() -> Result<(), String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..200 {
        let a = random_ref_graph(&mut rng, 6, 9, 4);
        let b = random_ref_graph(&mut rng, 6, 9, 4);
        let (ga, gb) = (to_scene_graph(&a), to_scene_graph(&b));
        for rounds in 0..=2 {
            let got = wl_kernel_raw(&ga, &gb, rounds).map_err(|e| e.to_string())?;
            let want = reference_kernel_raw(&a, &b, rounds);
            ensure(got == want, || {
                format!("case {case}, {rounds} rounds: kernel {got} != reference {want}")
            })?;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    ensure(elapsed < 5.0, || format!("200 reference comparisons took {elapsed:.1}s (budget 5s)"))
}

fn check_kernel_identities() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..100 {
        let a = random_ref_graph(&mut rng, 6, 9, 4);
        let b = random_ref_graph(&mut rng, 6, 9, 4);
        let (ga, gb) = (to_scene_graph(&a), to_scene_graph(&b));
        let rounds = rng.gen_range(0..=4);

        let self_norm = wl_kernel(&ga, &ga, rounds, true).map_err(|e| e.to_string())?;
        ensure((self_norm - 1.0).abs() <= 1e-12, || {
            format!("case {case}: normalized self-kernel {self_norm} != 1")
        })?;

        let ab = wl_kernel_raw(&ga, &gb, rounds).map_err(|e| e.to_string())?;
        let ba = wl_kernel_raw(&gb, &ga, rounds).map_err(|e| e.to_string())?;
        ensure(ab == ba, || format!("case {case}: asymmetric kernel {ab} vs {ba}"))?;

        let mut perm: Vec<usize> = (0..a.labels.len()).collect();
        perm.shuffle(&mut rng);
        let pa = to_scene_graph(&permuted(&a, &perm));
        let pab = wl_kernel_raw(&pa, &gb, rounds).map_err(|e| e.to_string())?;
        ensure(pab == ab, || {
            format!("case {case}: node reindexing changed the kernel {ab} -> {pab}")
        })?;

        let mut prev = 0;
        for h in 0..=5 {
            let k = wl_kernel_raw(&ga, &gb, h).map_err(|e| e.to_string())?;
            ensure(k >= prev, || {
                format!("case {case}: raw kernel decreased from {prev} to {k} at {h} rounds")
            })?;
            prev = k;
        }
    }
    Ok(())
}

fn check_temporal_constraint() -> Result<(), String> {
    let literal = |beta_s: f64| TemporalConfig {
        beta_s,
        alpha: 2.0,
        mode: TemporalMode::Literal,
        min_gap: 1,
    };
    let clamped = |beta_s: f64| TemporalConfig { mode: TemporalMode::Clamped, ..literal(beta_s) };

    for &beta_s in &[0.05, 0.1, 0.25, 0.3, 0.5, 0.75, 0.9] {
        for gap in 1u32..=600 {
            let got = temporal_constraint(0, gap, &literal(beta_s)).map_err(|e| e.to_string())?;
            let want = beta_s.ln() + 2.0 * f64::from(gap).ln();
            ensure((got - want).abs() <= 1e-12, || {
                format!("literal({beta_s}, {gap}) = {got}, reference {want}")
            })?;
        }

        let cutoff = (1.0 / beta_s.sqrt()).ceil() as u32;
        let mut prev = f64::INFINITY;
        for gap in 1u32..=600 {
            let tc = temporal_constraint(0, gap, &clamped(beta_s)).map_err(|e| e.to_string())?;
            ensure(tc >= 0.0, || format!("clamped({beta_s}, {gap}) = {tc} < 0"))?;
            ensure(tc <= prev, || {
                format!("clamped({beta_s}) increased from {prev} to {tc} at gap {gap}")
            })?;
            if gap >= cutoff {
                ensure(tc == 0.0, || {
                    format!("clamped({beta_s}, {gap}) = {tc}, expected exact 0 past gap {cutoff}")
                })?;
            }
            prev = tc;
        }
    }

    // beta_s * gap^2 = 1 exactly: the penalty is zero in both modes.
    for cfg in [literal(0.25), clamped(0.25)] {
        let tc = temporal_constraint(7, 9, &cfg).map_err(|e| e.to_string())?;
        ensure(tc == 0.0, || format!("0.25 * 2^2 = 1 should zero the term, got {tc}"))?;
    }
    Ok(())
}

fn check_classifier_gradients() -> Result<(), String> {
    let mut clf = Classifier::new(&[5, 16, 16, 1], 9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let eps = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y = f64::from(rng.gen_range(0..=1u32));
        let (_, grad) = clf.loss_gradient(&x, y);
        for idx in 0..clf.parameter_count() {
            let orig = clf.parameter(idx);
            clf.set_parameter(idx, orig + eps);
            let up = clf.loss(&x, y);
            clf.set_parameter(idx, orig - eps);
            let down = clf.loss(&x, y);
            clf.set_parameter(idx, orig);
            let numeric = (up - down) / (2.0 * eps);
            let rel = (grad[idx] - numeric).abs() / grad[idx].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-4, || format!("max relative gradient error {worst:.2e} >= 1e-4"))
}

fn check_scale_invariance() -> Result<(), String> {
    let synth_cfg = SynthConfig {
        n_frames: 60,
        n_places: 4,
        n_labels: 8,
        objects_per_place: (3, 4),
        keypoints_per_object: (3, 5),
        background_keypoints: (1, 3),
        clutter_per_frame: (2, 4),
        revisits: vec![RevisitWindow {
            original_start: 15,
            original_end: 30,
            revisit_start: 45,
            revisit_end: 60,
        }],
        label_noise_rate: 0.0,
        centroid_jitter_px: 1.0,
        dropout_rate: 0.0,
        camera_shift_px: 10.0,
        min_revisit_gap: 15,
        n_decoy_places: 0,
        seed: 7,
        ..SynthConfig::benchmark()
    };
    let (base_ds, _) = generate_dataset(&synth_cfg).map_err(|e| e.to_string())?;
    let base_cfg = PipelineConfig { min_gap: 15, iterations: 10, vocab_k: 16, ..PipelineConfig::default() };

    let base_prep = prepare(&base_ds, &base_cfg, None).map_err(|e| e.to_string())?;
    let base_scores = score_prepared(&base_prep, &base_ds, &base_cfg).map_err(|e| e.to_string())?.scores;
    ensure(!base_scores.is_empty(), || "no scored pairs in the reference run".into())?;

    let tol = 1e-9;
    for s in [0.5, 2.0, 3.0] {
        let ds = scaled_dataset(&base_ds, s);
        // margin_px is a pixel-space parameter, so it scales with the
        // image; everything downstream must then be unchanged.
        let cfg = PipelineConfig { margin_px: base_cfg.margin_px * s, ..base_cfg.clone() };
        let prep = prepare(&ds, &cfg, None).map_err(|e| e.to_string())?;

        for (fa, fb) in base_prep.frames.iter().zip(&prep.frames) {
            ensure(fa.normalized.len() == fb.normalized.len(), || {
                format!("x{s}: frame {} kept a different detection count", fa.frame_id)
            })?;
            for (da, db) in fa.normalized.iter().zip(&fb.normalized) {
                let same = da.label_id == db.label_id
                    && close(da.ncx, db.ncx, tol)
                    && close(da.ncy, db.ncy, tol)
                    && close(da.nw, db.nw, tol)
                    && close(da.nh, db.nh, tol);
                ensure(same, || format!("x{s}: frame {} normalized detections moved", fa.frame_id))?;
            }
            let (ga, gb) = (&fa.graph, &fb.graph);
            ensure(
                ga.node_count() == gb.node_count() && ga.edge_count() == gb.edge_count(),
                || format!("x{s}: frame {} graph shape changed", fa.frame_id),
            )?;
            for (na, nb) in ga.nodes.iter().zip(&gb.nodes) {
                let same = na.tier == nb.tier
                    && na.wl_label == nb.wl_label
                    && na.features.iter().zip(&nb.features).all(|(a, b)| close(*a, *b, tol));
                ensure(same, || format!("x{s}: frame {} node features moved", fa.frame_id))?;
            }
            for (ea, eb) in ga.edges.iter().zip(&gb.edges) {
                let same = ea.u == eb.u
                    && ea.v == eb.v
                    && ea.features.iter().zip(&eb.features).all(|(a, b)| close(*a, *b, tol));
                ensure(same, || format!("x{s}: frame {} edge features moved", fa.frame_id))?;
            }
        }

        let scores = score_prepared(&prep, &ds, &cfg).map_err(|e| e.to_string())?.scores;
        ensure(scores.len() == base_scores.len(), || {
            format!("x{s}: {} scored pairs vs {} in the reference", scores.len(), base_scores.len())
        })?;
        for (a, b) in base_scores.iter().zip(&scores) {
            let same = a.i == b.i
                && a.j == b.j
                && a.k_raw == b.k_raw
                && close(a.k_norm, b.k_norm, tol)
                && close(a.tc, b.tc, tol)
                && close(a.s, b.s, tol)
                && close(a.vbow, b.vbow, tol)
                && close(a.label_match, b.label_match, tol)
                && close(a.hausdorff, b.hausdorff, tol);
            ensure(same, || format!("x{s}: pair ({}, {}) scored differently", a.i, a.j))?;
        }
    }
    Ok(())
}

fn check_ablation_trend(bench: &Path, scratch: &Path) -> Result<(), String> {
    let out = scratch.join("ablation");
    let started = Instant::now();
    cli_ok(&["ablate", "--dataset", &path_str(bench), "--out", &path_str(&out)])?;
    let elapsed = started.elapsed().as_secs_f64();

    let rows = read_report(&out.join("report.csv"))?;
    let precision = |mode: &str| -> Result<f64, String> {
        rows.get(mode).map(|r| r.0).ok_or_else(|| format!("report has no '{mode}' row"))
    };
    let (flat, two, three) = (precision("flat")?, precision("two_tier")?, precision("three_tier")?);
    ensure(three >= two && two >= flat, || {
        format!("precision not ordered: three_tier {three:.4}, two_tier {two:.4}, flat {flat:.4}")
    })?;
    ensure(three - flat >= 0.05, || {
        format!("three_tier ({three:.4}) beats flat ({flat:.4}) by less than 5 points")
    })?;
    ensure(elapsed < 60.0, || format!("ablation took {elapsed:.1}s (budget 60s)"))
}

fn check_detection_quality(bench: &Path, scratch: &Path) -> Result<(), String> {
    let out = scratch.join("detection");
    cli_ok(&["evaluate", "--dataset", &path_str(bench), "--out", &path_str(&out)])?;
    let rows = read_report(&out.join("report.csv"))?;
    let (precision, recall, first) =
        *rows.get("three_tier").ok_or("report has no 'three_tier' row")?;
    let first = first.ok_or("no first detection recorded")?;
    ensure(precision >= 0.9, || format!("precision {precision:.4} < 0.9"))?;
    ensure(recall >= 0.8, || format!("recall {recall:.4} < 0.8"))?;
    // The generator re-images the early place starting at frame 270.
    ensure((270 - 5..=270 + 5).contains(&first), || {
        format!("first detection at frame {first}, expected within 5 of 270")
    })
}

fn check_label_gate_boundary() -> Result<(), String> {
    let labels: BTreeMap<String, u32> =
        (0..7).map(|k| (format!("label{k}"), k + 1)).collect();
    let frame = |names: [&str; 5]| -> Vec<Detection> {
        names
            .iter()
            .enumerate()
            .map(|(k, name)| Detection {
                label: name.to_string(),
                confidence: 0.9,
                bbox: Bbox::new(10.0 + 30.0 * k as f64, 10.0, 30.0 + 30.0 * k as f64, 30.0),
            })
            .collect()
    };
    let norm = |dets: &[Detection]| {
        loopgraph::labelmatch::normalize_detections(dets, &labels, 640.0, 480.0)
            .map_err(|e| e.to_string())
    };

    let reference = norm(&frame(["label0", "label1", "label2", "label3", "label4"]))?;
    // Same five slots with two labels swapped out: mismatch 2/5 = 0.40.
    let two_off = norm(&frame(["label0", "label1", "label2", "label5", "label6"]))?;
    let res = match_labels(&reference, &two_off, 0.40);
    ensure(res.accepted && (res.mismatch_fraction - 0.40).abs() < 1e-15, || {
        format!(
            "2-of-5 unmatched should pass at tolerance 0.40: accepted={}, mismatch={}",
            res.accepted, res.mismatch_fraction
        )
    })?;

    // Three labels swapped out: mismatch 3/5 = 0.60.
    let three_off = norm(&frame(["label0", "label1", "label5", "label6", "label5"]))?;
    let res = match_labels(&reference, &three_off, 0.40);
    ensure(!res.accepted && (res.mismatch_fraction - 0.60).abs() < 1e-15, || {
        format!(
            "3-of-5 unmatched should fail at tolerance 0.40: accepted={}, mismatch={}",
            res.accepted, res.mismatch_fraction
        )
    })
}

fn check_metric_arithmetic() -> Result<(), String> {
    let truth: BTreeSet<(u32, u32)> = [(0, 40), (1, 41), (2, 42)].into_iter().collect();

    // Exact matching at tolerance 0.
    let pr = precision_recall(&[(0, 40), (1, 41), (9, 90)], &truth, 0);
    ensure(
        pr.tp == 2 && pr.fp == 1 && pr.fn_ == 1 && pr.precision == 2.0 / 3.0 && pr.recall == 2.0 / 3.0,
        || format!("tolerance-0 case: {pr:?}"),
    )?;

    // Window matching: both endpoints within +/-2.
    let pr = precision_recall(&[(0, 43)], &truth, 2);
    ensure(pr.tp == 1 && pr.fp == 0 && pr.fn_ == 2, || format!("window case: {pr:?}"))?;

    // One-to-one consumption: a second hit on one truth pair is a
    // false positive.
    let lone: BTreeSet<(u32, u32)> = [(0, 40)].into_iter().collect();
    let pr = precision_recall(&[(0, 40), (0, 41)], &lone, 1);
    ensure(pr.tp == 1 && pr.fp == 1 && pr.fn_ == 0, || format!("double-hit case: {pr:?}"))?;

    // Zero denominators: no predictions, then no truth.
    let pr = precision_recall(&[], &truth, 5);
    ensure(
        pr.precision == 0.0 && pr.precision_degenerate && pr.recall == 0.0 && pr.fn_ == 3,
        || format!("no-predictions case: {pr:?}"),
    )?;
    let pr = precision_recall(&[(0, 40)], &BTreeSet::new(), 5);
    ensure(
        pr.recall == 0.0 && pr.recall_degenerate && pr.precision == 0.0 && pr.fp == 1,
        || format!("no-truth case: {pr:?}"),
    )?;

    ensure(first_detection(&[]).is_none(), || "first detection of nothing".into())?;
    ensure(first_detection(&[(5, 90), (3, 80)]) == Some(80), || {
        "first detection should be the smallest revisit frame".into()
    })
}

fn check_determinism(bench: &Path, scratch: &Path) -> Result<(), String> {
    let mut eval_reports = Vec::new();
    let mut ablate_reports = Vec::new();
    for (tag, workers) in [("r1", None), ("r2", None), ("r3", None), ("w1", Some("1")), ("w4", Some("4"))] {
        let out_e = scratch.join(format!("det_eval_{tag}"));
        let out_a = scratch.join(format!("det_ablate_{tag}"));
        for (sub, out) in [("evaluate", &out_e), ("ablate", &out_a)] {
            let mut args = vec![sub.to_string(), "--dataset".into(), path_str(bench), "--out".into(), path_str(out)];
            if let Some(w) = workers {
                args.push("--workers".into());
                args.push(w.into());
            }
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            cli_ok(&argv)?;
        }
        eval_reports
            .push(std::fs::read(out_e.join("report.csv")).map_err(|e| format!("read report: {e}"))?);
        ablate_reports
            .push(std::fs::read(out_a.join("report.csv")).map_err(|e| format!("read report: {e}"))?);
    }
    ensure(eval_reports.iter().all(|r| r == &eval_reports[0]), || {
        "evaluate reports differ across runs or worker counts".into()
    })?;
    ensure(ablate_reports.iter().all(|r| r == &ablate_reports[0]), || {
        "ablation reports differ across runs or worker counts".into()
    })
}

// ---------------------------------------------------------------------

#[test]
fn acceptance() {
    let scratch = tempfile::tempdir().expect("scratch dir");
    let bench: PathBuf = scratch.path().join("bench");
    generate_sequence(&SynthConfig::benchmark(), &bench).expect("benchmark generation");

    let mut failures = Vec::new();
    let mut check = |n, name, body: &mut dyn FnMut() -> Result<(), String>| {
        run_check(n, name, &mut failures, body);
    };

    say(String::new());
    check(1, "graph kernel equals a brute-force relabeling reference", &mut || {
        check_kernel_against_reference()
    });
    check(2, "kernel symmetry, self-normalization, reindexing invariance, monotonicity", &mut || {
        check_kernel_identities()
    });
    check(3, "temporal penalty matches its closed form and clamps to zero", &mut || {
        check_temporal_constraint()
    });
    check(4, "classifier gradients match central finite differences", &mut || {
        check_classifier_gradients()
    });
    check(5, "uniform image rescaling leaves all scores unchanged", &mut || {
        check_scale_invariance()
    });
    check(6, "tiered graphs beat flat ones on benchmark precision", &mut || {
        check_ablation_trend(&bench, scratch.path())
    });
    check(7, "benchmark detection is early, precise, and sensitive", &mut || {
        check_detection_quality(&bench, scratch.path())
    });
    check(8, "label gate accepts 2-of-5 and rejects 3-of-5 mismatches", &mut || {
        check_label_gate_boundary()
    });
    check(9, "precision/recall reproduces hand-built confusion matrices", &mut || {
        check_metric_arithmetic()
    });
    check(10, "evaluation reports are byte-identical across runs and workers", &mut || {
        check_determinism(&bench, scratch.path())
    });

    assert!(failures.is_empty(), "failed checks: {failures:?}");
}
