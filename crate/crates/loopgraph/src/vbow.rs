//! Visual bag-of-words scoring over binary keypoint descriptors.
//!
//! A vocabulary is trained by k-majority clustering under Hamming
//! distance: seeded sampling of k distinct descriptors, then alternating
//! nearest-word assignment and bitwise-majority centroid updates until
//! assignments stabilize (at most 50 rounds). Frames become L1-normalized
//! TF-IDF histograms over the vocabulary, and a frame pair scores
//! `1 - 0.5 * sum |va - vb|`, which is 1 for identical histograms and 0
//! for disjoint ones.
//!
//! Pair scores can come from three sources, in order of precedence:
//! precomputed scores shipped with the dataset, histograms ingested with
//! the frames, or histograms computed here from raw descriptors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::{Descriptor, FrameAnnotation};

const MAX_ROUNDS: usize = 50;
const MAGIC: &[u8; 4] = b"SBV1";

#[derive(Debug, Error)]
pub enum VbowError {
    #[error("vocabulary size k must be at least 1")]
    ZeroK,
    #[error("no descriptors in the training frames")]
    NoTrainingDescriptors,
    #[error("frame {0} has no descriptors")]
    NoDescriptors(u32),
    #[error("no usable score source for pair ({0}, {1})")]
    NoUsableSource(u32, u32),
    #[error("histogram has no positive weights")]
    EmptyHistogram,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad vocabulary file: {0}")]
    Format(String),
}

/// A trained visual vocabulary: k binary words plus per-word idf weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub words: Vec<Descriptor>,
    pub idf: Vec<f64>,
    /// Seed used for word initialization; not persisted to disk.
    pub seed: u64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Index of the nearest word by Hamming distance; ties resolve to
    /// the lowest word id.
    pub fn quantize(&self, desc: &Descriptor) -> u32 {
        let mut best = 0u32;
        let mut best_dist = u32::MAX;
        for (k, word) in self.words.iter().enumerate() {
            let d = desc.hamming(word);
            if d < best_dist {
                best_dist = d;
                best = k as u32;
            }
        }
        best
    }
}

/// An L1-normalized sparse histogram over vocabulary words.
#[derive(Debug, Clone, PartialEq)]
pub struct BowHistogram {
    weights: BTreeMap<u32, f64>,
}

impl BowHistogram {
    /// Builds a histogram from non-negative raw weights, dropping zeros
    /// and normalizing the rest to sum to 1.
    pub fn from_weights<I: IntoIterator<Item = (u32, f64)>>(raw: I) -> Result<BowHistogram, VbowError> {
        let mut weights: BTreeMap<u32, f64> = BTreeMap::new();
        for (word, w) in raw {
            if w > 0.0 {
                *weights.entry(word).or_insert(0.0) += w;
            }
        }
        let total: f64 = weights.values().sum();
        if total <= 0.0 {
            return Err(VbowError::EmptyHistogram);
        }
        for w in weights.values_mut() {
            *w /= total;
        }
        Ok(BowHistogram { weights })
    }

    pub fn weights(&self) -> &BTreeMap<u32, f64> {
        &self.weights
    }

    /// Mean of the stored (non-zero) weights.
    pub fn mean_weight(&self) -> f64 {
        if self.weights.is_empty() {
            0.0
        } else {
            self.weights.values().sum::<f64>() / self.weights.len() as f64
        }
    }

    /// Histogram similarity `1 - 0.5 * sum |a - b|` over the word union.
    pub fn similarity(&self, other: &BowHistogram) -> f64 {
        let mut diff = 0.0;
        let mut it_b = other.weights.iter().peekable();
        for (word, wa) in &self.weights {
            while let Some((wb_word, wb)) = it_b.peek() {
                if *wb_word < word {
                    diff += wb.abs();
                    it_b.next();
                } else {
                    break;
                }
            }
            match it_b.peek() {
                Some((wb_word, wb)) if *wb_word == word => {
                    diff += (wa - *wb).abs();
                    it_b.next();
                }
                _ => diff += wa.abs(),
            }
        }
        for (_, wb) in it_b {
            diff += wb.abs();
        }
        1.0 - 0.5 * diff
    }
}

fn bitwise_majority(members: &[&Descriptor]) -> Descriptor {
    let mut out = [0u8; 32];
    for byte in 0..32 {
        for bit in 0..8 {
            let ones = members.iter().filter(|d| d.0[byte] & (1 << bit) != 0).count();
            if ones * 2 > members.len() {
                out[byte] |= 1 << bit;
            }
        }
    }
    Descriptor(out)
}

/// Trains a vocabulary on every descriptor found in `frames`.
///
/// Initial words are a seeded sample of k distinct descriptors (fewer if
/// the corpus has fewer distinct ones). Per-word idf is
/// `ln(N / (1 + n_w))` clamped at zero, with N the training frame count
/// and `n_w` the number of frames containing word w.
pub fn build_vocabulary(frames: &[FrameAnnotation], k: usize, seed: u64) -> Result<Vocabulary, VbowError> {
    if k == 0 {
        return Err(VbowError::ZeroK);
    }
    let all: Vec<Descriptor> = frames
        .iter()
        .flat_map(|f| f.keypoints.iter().filter_map(|kp| kp.desc))
        .collect();
    if all.is_empty() {
        return Err(VbowError::NoTrainingDescriptors);
    }

    let mut distinct = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for d in &all {
        if seen.insert(d.0) {
            distinct.push(*d);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_eff = k.min(distinct.len());
    let mut words: Vec<Descriptor> = if k_eff == distinct.len() {
        distinct
    } else {
        for i in 0..k_eff {
            let j = rng.gen_range(i..distinct.len());
            distinct.swap(i, j);
        }
        distinct.truncate(k_eff);
        distinct
    };

    let mut assignment = vec![u32::MAX; all.len()];
    for _ in 0..MAX_ROUNDS {
        let vocab_view = Vocabulary { words: words.clone(), idf: Vec::new(), seed };
        let next: Vec<u32> = all.iter().map(|d| vocab_view.quantize(d)).collect();
        let stable = next == assignment;
        assignment = next;
        for (w, word) in words.iter_mut().enumerate() {
            let members: Vec<&Descriptor> =
                all.iter().zip(&assignment).filter(|(_, a)| **a == w as u32).map(|(d, _)| d).collect();
            if !members.is_empty() {
                *word = bitwise_majority(&members);
            }
        }
        if stable {
            break;
        }
    }

    let n_frames = frames.len() as f64;
    let final_vocab = Vocabulary { words: words.clone(), idf: Vec::new(), seed };
    let mut frames_with_word = vec![0u64; words.len()];
    for frame in frames {
        let mut present = vec![false; words.len()];
        for kp in &frame.keypoints {
            if let Some(d) = &kp.desc {
                present[final_vocab.quantize(d) as usize] = true;
            }
        }
        for (w, p) in present.iter().enumerate() {
            if *p {
                frames_with_word[w] += 1;
            }
        }
    }
    let idf = frames_with_word
        .iter()
        .map(|&n_w| (n_frames / (1.0 + n_w as f64)).ln().max(0.0))
        .collect();

    Ok(Vocabulary { words, idf, seed })
}

/// TF-IDF histogram of one frame's descriptors. When every present word
/// has zero idf, plain term frequencies are used so the frame still
/// yields a usable histogram.
pub fn frame_histogram(vocab: &Vocabulary, frame: &FrameAnnotation) -> Result<BowHistogram, VbowError> {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut total = 0u64;
    for kp in &frame.keypoints {
        if let Some(d) = &kp.desc {
            *counts.entry(vocab.quantize(d)).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(VbowError::NoDescriptors(frame.frame_id));
    }
    let tf_idf: Vec<(u32, f64)> = counts
        .iter()
        .map(|(&w, &c)| (w, c as f64 / total as f64 * vocab.idf.get(w as usize).copied().unwrap_or(0.0)))
        .collect();
    if tf_idf.iter().any(|(_, w)| *w > 0.0) {
        BowHistogram::from_weights(tf_idf)
    } else {
        BowHistogram::from_weights(counts.iter().map(|(&w, &c)| (w, c as f64)))
    }
}

/// Scores a frame pair in [0, 1]. Precedence: a precomputed score for
/// the pair, then histograms ingested with both frames, then histograms
/// computed from descriptors with `vocab`.
pub fn score_pair(
    vocab: Option<&Vocabulary>,
    fa: &FrameAnnotation,
    fb: &FrameAnnotation,
    precomputed: Option<&BTreeMap<(u32, u32), f64>>,
) -> Result<f64, VbowError> {
    let key = (fa.frame_id.min(fb.frame_id), fa.frame_id.max(fb.frame_id));
    if let Some(score) = precomputed.and_then(|m| m.get(&key)) {
        return Ok(*score);
    }
    if let (Some(ha), Some(hb)) = (&fa.vbow, &fb.vbow) {
        let ha = BowHistogram::from_weights(ha.iter().map(|(&w, &v)| (w, v)))?;
        let hb = BowHistogram::from_weights(hb.iter().map(|(&w, &v)| (w, v)))?;
        return Ok(ha.similarity(&hb));
    }
    if let Some(vocab) = vocab {
        let ha = frame_histogram(vocab, fa)?;
        let hb = frame_histogram(vocab, fb)?;
        return Ok(ha.similarity(&hb));
    }
    Err(VbowError::NoUsableSource(key.0, key.1))
}

/// Writes the vocabulary: magic `SBV1`, word count as little-endian u32,
/// k 32-byte words, then k little-endian f64 idf values.
pub fn save_vocabulary(vocab: &Vocabulary, path: &Path) -> Result<(), VbowError> {
    let mut bytes = Vec::with_capacity(8 + vocab.words.len() * 40);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(vocab.words.len() as u32).to_le_bytes());
    for word in &vocab.words {
        bytes.extend_from_slice(&word.0);
    }
    for idf in &vocab.idf {
        bytes.extend_from_slice(&idf.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| VbowError::Io { path: path.to_path_buf(), source: e })
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary, VbowError> {
    let bytes = fs::read(path).map_err(|e| VbowError::Io { path: path.to_path_buf(), source: e })?;
    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        return Err(VbowError::Format("missing SBV1 magic".into()));
    }
    let k = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = 8 + k * 32 + k * 8;
    if bytes.len() != expected {
        return Err(VbowError::Format(format!("expected {expected} bytes for k={k}, got {}", bytes.len())));
    }
    let mut words = Vec::with_capacity(k);
    for w in 0..k {
        let start = 8 + w * 32;
        let mut word = [0u8; 32];
        word.copy_from_slice(&bytes[start..start + 32]);
        words.push(Descriptor(word));
    }
    let mut idf = Vec::with_capacity(k);
    let base = 8 + k * 32;
    for w in 0..k {
        let start = base + w * 8;
        idf.push(f64::from_le_bytes(bytes[start..start + 8].try_into().unwrap()));
    }
    Ok(Vocabulary { words, idf, seed: 0 })
}
