//! Pair scoring (kernel + temporal term) and the small trainable
//! classifier that turns per-pair features into accept/reject decisions.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{PipelineConfig, TemporalMode};
use crate::scenegraph::SceneGraph;
use crate::wlkernel::{wl_kernel_raw, KernelError};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("temporal term undefined for identical frame ids ({0})")]
    SameFrame(u32),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("classifier shape invalid: {0}")]
    BadShape(String),
    #[error("no training samples")]
    NoTrainingData,
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model parse: {0}")]
    Parse(String),
}

/// Parameters of the frame-distance term.
#[derive(Debug, Clone, Copy)]
pub struct TemporalConfig {
    pub beta_s: f64,
    pub alpha: f64,
    pub mode: TemporalMode,
    pub min_gap: u32,
}

impl TemporalConfig {
    pub fn from_pipeline(cfg: &PipelineConfig) -> TemporalConfig {
        TemporalConfig { beta_s: cfg.beta_s, alpha: cfg.alpha, mode: cfg.temporal_mode, min_gap: cfg.min_gap }
    }
}

/// Frame-distance term for a pair of frame ids.
///
/// `literal` returns `ln(beta_s * gap^2)` verbatim, which grows with
/// the gap and therefore punishes exactly the distant revisits the
/// detector is after. `clamped` (the default) keeps only the short-gap
/// deterrent: `max(0, -ln(beta_s * gap^2))`, which is exactly zero once
/// `gap >= 1/sqrt(beta_s)`.
pub fn temporal_constraint(i: u32, j: u32, cfg: &TemporalConfig) -> Result<f64, PredictError> {
    if i == j {
        return Err(PredictError::SameFrame(i));
    }
    let gap = f64::from(i.abs_diff(j));
    let literal = (cfg.beta_s * gap * gap).ln();
    Ok(match cfg.mode {
        TemporalMode::Literal => literal,
        TemporalMode::Clamped => (-literal).max(0.0),
    })
}

/// All per-pair measurements for a canonically ordered pair `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub i: u32,
    pub j: u32,
    /// Unnormalized kernel value.
    pub k_raw: u64,
    /// Kernel normalized by the self-kernel geometric mean.
    pub k_norm: f64,
    /// Frame-distance term.
    pub tc: f64,
    /// Combined score `k_norm - alpha * tc`.
    pub s: f64,
    /// Visual-word histogram similarity (0 when no source exists).
    pub vbow: f64,
    /// Label assignment score, 1 - mismatch fraction.
    pub label_match: f64,
    /// Hausdorff distance between normalized detection centroids.
    pub hausdorff: f64,
}

impl PairScore {
    pub fn gap(&self) -> u32 {
        self.j - self.i
    }
}

/// Scores one pair of graphs: kernel, temporal term, and the combined
/// score. The auxiliary channels (visual words, label match, Hausdorff)
/// are left at zero; the pipeline fills them from frame data.
pub fn combined_similarity(
    ga: &SceneGraph,
    gb: &SceneGraph,
    i: u32,
    j: u32,
    iterations: u32,
    cfg: &TemporalConfig,
) -> Result<PairScore, PredictError> {
    let (i, j) = (i.min(j), i.max(j));
    let tc = temporal_constraint(i, j, cfg)?;
    let k_raw = wl_kernel_raw(ga, gb, iterations)?;
    let saa = wl_kernel_raw(ga, ga, iterations)? as f64;
    let sbb = wl_kernel_raw(gb, gb, iterations)? as f64;
    let k_norm = k_raw as f64 / (saa * sbb).sqrt();
    Ok(PairScore {
        i,
        j,
        k_raw,
        k_norm,
        tc,
        s: k_norm - cfg.alpha * tc,
        vbow: 0.0,
        label_match: 0.0,
        hausdorff: 0.0,
    })
}

/// Feature vector fed to the classifier for one scored pair.
pub fn pair_features(score: &PairScore, frame_span: u32) -> [f64; 5] {
    [
        score.k_norm,
        score.vbow,
        score.label_match,
        score.hausdorff,
        f64::from(score.gap()) / f64::from(frame_span.max(1)),
    ]
}

/// Fully connected network with tanh hidden layers and one sigmoid
/// output, trained with per-sample gradient steps on binary
/// cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    sizes: Vec<usize>,
    /// Per layer, row-major: `weights[l][o * in + i]`.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    /// Seed the parameters were initialized/trained from; 0 when the
    /// model was assembled from explicit parameters.
    seed: u64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Classifier {
    /// Seeded uniform init with per-layer scale `sqrt(6 / (in + out))`.
    pub fn new(sizes: &[usize], seed: u64) -> Classifier {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "need at least input and output sizes");
        assert_eq!(*sizes.last().unwrap(), 1, "single-output classifier");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let scale = (6.0 / (n_in + n_out) as f64).sqrt();
            weights.push((0..n_in * n_out).map(|_| rng.gen_range(-scale..scale)).collect());
            biases.push(vec![0.0; n_out]);
        }
        Classifier { sizes: sizes.to_vec(), weights, biases, seed }
    }

    /// Builds a classifier from explicit parameters, validating shapes.
    pub fn with_parameters(
        sizes: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Classifier, PredictError> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(PredictError::BadShape("need at least non-empty input and output layers".into()));
        }
        if weights.len() != sizes.len() - 1 || biases.len() != sizes.len() - 1 {
            return Err(PredictError::BadShape(format!(
                "expected {} layers, got {} weight and {} bias blocks",
                sizes.len() - 1,
                weights.len(),
                biases.len()
            )));
        }
        for (l, w) in sizes.windows(2).enumerate() {
            if weights[l].len() != w[0] * w[1] {
                return Err(PredictError::BadShape(format!("layer {l} expects {} weights", w[0] * w[1])));
            }
            if biases[l].len() != w[1] {
                return Err(PredictError::BadShape(format!("layer {l} expects {} biases", w[1])));
            }
        }
        Ok(Classifier { sizes: sizes.to_vec(), weights, biases, seed: 0 })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Seed used to initialize the parameters (0 for hand-built models).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Activations of every layer, input included.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(x.len(), self.sizes[0], "input width mismatch");
        let mut acts = vec![x.to_vec()];
        for l in 0..self.weights.len() {
            let n_in = self.sizes[l];
            let n_out = self.sizes[l + 1];
            let prev = &acts[l];
            let mut a = Vec::with_capacity(n_out);
            for o in 0..n_out {
                let mut z = self.biases[l][o];
                for i in 0..n_in {
                    z += self.weights[l][o * n_in + i] * prev[i];
                }
                a.push(if l + 1 == self.sizes.len() - 1 { sigmoid(z) } else { z.tanh() });
            }
            acts.push(a);
        }
        acts
    }

    /// Predicted probability for one feature vector.
    pub fn forward(&self, x: &[f64]) -> f64 {
        self.activations(x).last().unwrap()[0]
    }

    /// Binary cross-entropy of one sample.
    pub fn loss(&self, x: &[f64], y: f64) -> f64 {
        let p = self.forward(x).clamp(1e-12, 1.0 - 1e-12);
        -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
    }

    /// Loss plus its gradient, flattened in parameter-index order.
    pub fn loss_gradient(&self, x: &[f64], y: f64) -> (f64, Vec<f64>) {
        let acts = self.activations(x);
        let p = acts.last().unwrap()[0];
        let loss = {
            let pc = p.clamp(1e-12, 1.0 - 1e-12);
            -(y * pc.ln() + (1.0 - y) * (1.0 - pc).ln())
        };

        let layers = self.weights.len();
        let mut grad_w: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut grad_b: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        // Sigmoid + cross-entropy collapse to p - y at the output.
        let mut delta = vec![p - y];
        for l in (0..layers).rev() {
            let n_in = self.sizes[l];
            let prev = &acts[l];
            for (o, d) in delta.iter().enumerate() {
                grad_b[l][o] = *d;
                for i in 0..n_in {
                    grad_w[l][o * n_in + i] = d * prev[i];
                }
            }
            if l > 0 {
                let mut prev_delta = vec![0.0; n_in];
                for (o, d) in delta.iter().enumerate() {
                    for (i, pd) in prev_delta.iter_mut().enumerate() {
                        *pd += self.weights[l][o * n_in + i] * d;
                    }
                }
                for (i, pd) in prev_delta.iter_mut().enumerate() {
                    *pd *= 1.0 - prev[i] * prev[i];
                }
                delta = prev_delta;
            }
        }

        let mut flat = Vec::with_capacity(self.parameter_count());
        for l in 0..layers {
            flat.extend_from_slice(&grad_w[l]);
            flat.extend_from_slice(&grad_b[l]);
        }
        (loss, flat)
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Reads a parameter by flat index (layer by layer, weights then
    /// biases). Used for finite-difference checks.
    pub fn parameter(&self, idx: usize) -> f64 {
        let mut k = idx;
        for l in 0..self.weights.len() {
            if k < self.weights[l].len() {
                return self.weights[l][k];
            }
            k -= self.weights[l].len();
            if k < self.biases[l].len() {
                return self.biases[l][k];
            }
            k -= self.biases[l].len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn set_parameter(&mut self, idx: usize, value: f64) {
        let mut k = idx;
        for l in 0..self.weights.len() {
            if k < self.weights[l].len() {
                self.weights[l][k] = value;
                return;
            }
            k -= self.weights[l].len();
            if k < self.biases[l].len() {
                self.biases[l][k] = value;
                return;
            }
            k -= self.biases[l].len();
        }
        panic!("parameter index {idx} out of range");
    }

    fn gradient_step(&mut self, grad: &[f64], learning_rate: f64) {
        let mut k = 0;
        for l in 0..self.weights.len() {
            for w in &mut self.weights[l] {
                *w -= learning_rate * grad[k];
                k += 1;
            }
            for b in &mut self.biases[l] {
                *b -= learning_rate * grad[k];
                k += 1;
            }
        }
    }

    /// Text serialization: a layer-sizes line, then per layer one line of
    /// row-major weights and one of biases, all at full precision so a
    /// round trip is bit exact, then a trailing `seed <n>` line.
    pub fn save(&self, path: &Path) -> Result<(), PredictError> {
        let mut out = String::new();
        out.push_str(&self.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "));
        out.push('\n');
        for l in 0..self.weights.len() {
            out.push_str(&join_floats(&self.weights[l]));
            out.push('\n');
            out.push_str(&join_floats(&self.biases[l]));
            out.push('\n');
        }
        out.push_str(&format!("seed {}\n", self.seed));
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Classifier, PredictError> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let sizes: Vec<usize> = lines
            .next()
            .ok_or_else(|| PredictError::Parse("missing layer-sizes line".into()))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| PredictError::Parse(format!("bad layer size {t:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len().saturating_sub(1) {
            weights.push(parse_floats(lines.next(), &format!("weights of layer {l}"))?);
            biases.push(parse_floats(lines.next(), &format!("biases of layer {l}"))?);
        }
        let mut clf = Classifier::with_parameters(&sizes, weights, biases)?;
        if let Some(rest) = lines.next() {
            let mut toks = rest.split_whitespace();
            if toks.next() == Some("seed") {
                let tok = toks.next().ok_or_else(|| PredictError::Parse("missing seed value".into()))?;
                clf.seed = tok
                    .parse::<u64>()
                    .map_err(|e| PredictError::Parse(format!("bad seed {tok:?}: {e}")))?;
            }
        }
        Ok(clf)
    }
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

fn parse_floats(line: Option<&str>, what: &str) -> Result<Vec<f64>, PredictError> {
    line.ok_or_else(|| PredictError::Parse(format!("missing {what}")))?
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| PredictError::Parse(format!("bad value {t:?} in {what}: {e}"))))
        .collect()
}

/// Trains a classifier with per-sample gradient steps; the sample order
/// is reshuffled each epoch from a seeded generator. `epochs == 0` or a
/// zero learning rate returns the seeded initialization unchanged.
pub fn train_classifier(
    samples: &[(Vec<f64>, f64)],
    hidden: &[usize],
    epochs: u32,
    learning_rate: f64,
    seed: u64,
) -> Result<Classifier, PredictError> {
    let Some(first) = samples.first() else {
        return Err(PredictError::NoTrainingData);
    };
    let mut sizes = vec![first.0.len()];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    let mut clf = Classifier::new(&sizes, seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let (x, y) = &samples[k];
            let (_, grad) = clf.loss_gradient(x, *y);
            clf.gradient_step(&grad, learning_rate);
        }
    }
    Ok(clf)
}

/// Selects candidate pairs from scored pairs. Pairs closer than
/// `cfg.min_gap` frames are dropped first; with a classifier, pairs
/// whose predicted probability reaches 0.5 are kept; without one, pairs
/// whose combined score reaches `tau`. Output is sorted by `(i, j)`.
pub fn predict_candidates(
    scores: &[PairScore],
    classifier: Option<&Classifier>,
    tau: f64,
    cfg: &TemporalConfig,
    frame_span: u32,
) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = scores
        .iter()
        .filter(|sc| sc.gap() >= cfg.min_gap)
        .filter(|sc| match classifier {
            Some(clf) => clf.forward(&pair_features(sc, frame_span)) >= 0.5,
            None => sc.s >= tau,
        })
        .map(|sc| (sc.i, sc.j))
        .collect();
    out.sort_unstable();
    out
}
