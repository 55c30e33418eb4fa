//! Dataset ingestion and validation.
//!
//! A dataset directory holds `frames.jsonl` (one frame annotation per
//! line), an optional `groundtruth.csv` of loop-closure pairs, and an
//! optional `pair_scores.csv` of precomputed visual-word scores. Loading
//! canonicalizes pair orientation, assigns stable numeric label ids, and
//! reports unknown JSON fields as warnings rather than errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A 256-bit binary keypoint descriptor.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Descriptor(pub [u8; 32]);

impl Descriptor {
    pub const BITS: u32 = 256;

    pub fn hamming(&self, other: &Descriptor) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn to_hex(self) -> String {
        let mut s = String::with_capacity(64);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(s: &str) -> Result<Descriptor, String> {
        if s.len() != 64 {
            return Err(format!("descriptor must be 64 hex chars, got {}", s.len()));
        }
        let mut out = [0u8; 32];
        for (k, chunk) in s.as_bytes().chunks(2).enumerate() {
            let hex = std::str::from_utf8(chunk).map_err(|_| "non-ascii descriptor".to_string())?;
            out[k] = u8::from_str_radix(hex, 16).map_err(|_| format!("bad hex byte '{hex}'"))?;
        }
        Ok(Descriptor(out))
    }
}

impl fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Descriptor({}..)", &self.to_hex()[..8])
    }
}

impl Serialize for Descriptor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Descriptor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Descriptor::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned bounding box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Bbox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Bbox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Bbox {
        Bbox { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn centroid(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    /// True when the point lies inside the box or on its boundary.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x1 && x <= self.x2 && y >= self.y1 && y <= self.y2
    }

    /// The box grown by `margin` on all four sides.
    pub fn expanded(&self, margin: f64) -> Bbox {
        Bbox::new(self.x1 - margin, self.y1 - margin, self.x2 + margin, self.y2 + margin)
    }

    pub fn is_degenerate(&self) -> bool {
        self.x1 >= self.x2 || self.y1 >= self.y2
    }
}

impl From<[f64; 4]> for Bbox {
    fn from(v: [f64; 4]) -> Bbox {
        Bbox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Bbox> for [f64; 4] {
    fn from(b: Bbox) -> [f64; 4] {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

/// One semantic object detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    #[serde(rename = "score")]
    pub confidence: f64,
    pub bbox: Bbox,
}

/// One visual keypoint, optionally carrying a binary descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desc: Option<Descriptor>,
}

/// Everything observed in a single keyframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    #[serde(rename = "frame")]
    pub frame_id: u32,
    pub width: f64,
    pub height: f64,
    pub objects: Vec<Detection>,
    pub keypoints: Vec<Keypoint>,
    /// Optional externally computed visual-word histogram (word id -> weight).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vbow: Option<BTreeMap<u32, f64>>,
}

/// Known loop-closure pairs, canonicalized to `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    pub pairs: BTreeSet<(u32, u32)>,
}

impl GroundTruth {
    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Result<GroundTruth, IngestError> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(IngestError::InvalidPair {
                    i: a,
                    j: b,
                    message: "loop pair endpoints must differ".into(),
                });
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(GroundTruth { pairs: set })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// A frame sequence plus optional ground truth and precomputed pair scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub frames: Vec<FrameAnnotation>,
    pub ground_truth: Option<GroundTruth>,
    pub pair_scores: Option<BTreeMap<(u32, u32), f64>>,
    label_ids: BTreeMap<String, u32>,
}

impl Dataset {
    /// Sorts frames by id, rejects duplicates, and assigns label ids
    /// `1..=n` over the lexicographically sorted distinct labels.
    pub fn new(
        mut frames: Vec<FrameAnnotation>,
        ground_truth: Option<GroundTruth>,
        pair_scores: Option<BTreeMap<(u32, u32), f64>>,
    ) -> Result<Dataset, IngestError> {
        frames.sort_by_key(|f| f.frame_id);
        for w in frames.windows(2) {
            if w[0].frame_id == w[1].frame_id {
                return Err(IngestError::DuplicateFrame { frame_id: w[0].frame_id });
            }
        }
        let mut labels: BTreeSet<&str> = BTreeSet::new();
        for f in &frames {
            for obj in &f.objects {
                labels.insert(&obj.label);
            }
        }
        let label_ids = labels
            .into_iter()
            .enumerate()
            .map(|(k, l)| (l.to_string(), (k + 1) as u32))
            .collect();
        Ok(Dataset { frames, ground_truth, pair_scores, label_ids })
    }

    pub fn label_ids(&self) -> &BTreeMap<String, u32> {
        &self.label_ids
    }

    pub fn label_id(&self, label: &str) -> Option<u32> {
        self.label_ids.get(label).copied()
    }

    pub fn frame(&self, frame_id: u32) -> Option<&FrameAnnotation> {
        self.frames
            .binary_search_by_key(&frame_id, |f| f.frame_id)
            .ok()
            .map(|k| &self.frames[k])
    }

    /// Spread of frame ids, at least 1; used to normalize frame gaps.
    pub fn frame_span(&self) -> u32 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => (b.frame_id - a.frame_id).max(1),
            _ => 1,
        }
    }
}

/// A loaded dataset together with non-fatal loader warnings.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("duplicate frame id {frame_id}")]
    DuplicateFrame { frame_id: u32 },
    #[error("invalid pair ({i}, {j}): {message}")]
    InvalidPair { i: u32, j: u32, message: String },
    #[error("{0}")]
    Other(String),
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

const FRAME_FIELDS: &[&str] = &["frame", "width", "height", "objects", "keypoints", "vbow"];
const OBJECT_FIELDS: &[&str] = &["label", "score", "bbox"];
const KEYPOINT_FIELDS: &[&str] = &["x", "y", "desc"];

fn warn_unknown_fields(
    value: &serde_json::Value,
    known: &[&str],
    context: &str,
    line: usize,
    warnings: &mut Vec<String>,
) {
    if let Some(map) = value.as_object() {
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                warnings.push(format!("line {line}: ignoring unknown field '{key}' in {context}"));
            }
        }
    }
}

/// Loads `frames.jsonl` plus the optional `groundtruth.csv` and
/// `pair_scores.csv` from a dataset directory.
pub fn load_dataset(root: &Path) -> Result<Loaded, IngestError> {
    let frames_path = root.join("frames.jsonl");
    let text = fs::read_to_string(&frames_path).map_err(|e| io_err(&frames_path, e))?;

    let mut warnings = Vec::new();
    let mut frames = Vec::new();
    for (k, raw_line) in text.lines().enumerate() {
        let line_no = k + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(trimmed)
            .map_err(|e| parse_err(&frames_path, line_no, e.to_string()))?;
        warn_unknown_fields(&value, FRAME_FIELDS, "frame", line_no, &mut warnings);
        if let Some(objs) = value.get("objects").and_then(|v| v.as_array()) {
            for obj in objs {
                warn_unknown_fields(obj, OBJECT_FIELDS, "object", line_no, &mut warnings);
            }
        }
        if let Some(kps) = value.get("keypoints").and_then(|v| v.as_array()) {
            for kp in kps {
                warn_unknown_fields(kp, KEYPOINT_FIELDS, "keypoint", line_no, &mut warnings);
            }
        }
        let frame: FrameAnnotation = serde_json::from_value(value)
            .map_err(|e| parse_err(&frames_path, line_no, e.to_string()))?;
        frames.push(frame);
    }

    let ground_truth = load_ground_truth(&root.join("groundtruth.csv"))?;
    let pair_scores = load_pair_scores(&root.join("pair_scores.csv"))?;
    let dataset = Dataset::new(frames, ground_truth, pair_scores)?;
    Ok(Loaded { dataset, warnings })
}

fn load_ground_truth(path: &Path) -> Result<Option<GroundTruth>, IngestError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut pairs = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if k == 0 {
            if trimmed != "i,j" {
                return Err(parse_err(path, 1, format!("expected header 'i,j', got '{trimmed}'")));
            }
            continue;
        }
        let (i, j) = parse_pair(trimmed).map_err(|m| parse_err(path, line_no, m))?;
        if i == j {
            return Err(parse_err(path, line_no, "loop pair endpoints must differ"));
        }
        pairs.push((i, j));
    }
    Ok(Some(GroundTruth::from_pairs(pairs)?))
}

fn load_pair_scores(path: &Path) -> Result<Option<BTreeMap<(u32, u32), f64>>, IngestError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut scores = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if k == 0 {
            if trimmed != "i,j,score" {
                return Err(parse_err(path, 1, format!("expected header 'i,j,score', got '{trimmed}'")));
            }
            continue;
        }
        let mut parts = trimmed.split(',');
        let (a, b, s) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(s), None) => (a, b, s),
            _ => return Err(parse_err(path, line_no, "expected 'i,j,score'")),
        };
        let i: u32 = a.trim().parse().map_err(|_| parse_err(path, line_no, "bad frame id"))?;
        let j: u32 = b.trim().parse().map_err(|_| parse_err(path, line_no, "bad frame id"))?;
        let score: f64 = s.trim().parse().map_err(|_| parse_err(path, line_no, "bad score"))?;
        if i == j {
            return Err(parse_err(path, line_no, "pair endpoints must differ"));
        }
        let key = (i.min(j), i.max(j));
        if scores.insert(key, score).is_some() {
            return Err(parse_err(
                path,
                line_no,
                format!("duplicate pair ({}, {})", key.0, key.1),
            ));
        }
    }
    Ok(Some(scores))
}

fn parse_pair(line: &str) -> Result<(u32, u32), String> {
    let mut parts = line.split(',');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), None) => {
            let i: u32 = a.trim().parse().map_err(|_| format!("bad frame id '{}'", a.trim()))?;
            let j: u32 = b.trim().parse().map_err(|_| format!("bad frame id '{}'", b.trim()))?;
            Ok((i.min(j), i.max(j)))
        }
        _ => Err("expected 'i,j'".into()),
    }
}

/// Writes a dataset back to the directory layout `load_dataset` reads.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<(), IngestError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let frames_path = dir.join("frames.jsonl");
    let mut out = String::new();
    for frame in &ds.frames {
        let line = serde_json::to_string(frame)
            .map_err(|e| IngestError::Other(format!("serialize frame {}: {e}", frame.frame_id)))?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(&frames_path, out).map_err(|e| io_err(&frames_path, e))?;

    if let Some(gt) = &ds.ground_truth {
        let path = dir.join("groundtruth.csv");
        let mut file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut body = String::from("i,j\n");
        for (i, j) in &gt.pairs {
            body.push_str(&format!("{i},{j}\n"));
        }
        file.write_all(body.as_bytes()).map_err(|e| io_err(&path, e))?;
    }

    if let Some(scores) = &ds.pair_scores {
        let path = dir.join("pair_scores.csv");
        let mut body = String::from("i,j,score\n");
        for ((i, j), s) in scores {
            body.push_str(&format!("{i},{j},{s}\n"));
        }
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    }

    Ok(())
}

/// Structural check results for a dataset.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub frame_count: usize,
    pub object_count: usize,
    pub keypoint_count: usize,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} frames, {} objects, {} keypoints, {} violations",
            self.frame_count,
            self.object_count,
            self.keypoint_count,
            self.violations.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Checks every frame, ground-truth pair, and pair score against the
/// dataset's structural constraints. Violations are reported as data,
/// never as errors.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut report = ValidationReport { frame_count: ds.frames.len(), ..Default::default() };
    let mut ids = BTreeSet::new();

    for frame in &ds.frames {
        let id = frame.frame_id;
        if !ids.insert(id) {
            report.violations.push(format!("frame {id}: duplicate frame id"));
        }
        if !(frame.width > 0.0) || !(frame.height > 0.0) {
            report
                .violations
                .push(format!("frame {id}: non-positive image dims {}x{}", frame.width, frame.height));
        }
        for (k, obj) in frame.objects.iter().enumerate() {
            report.object_count += 1;
            let b = obj.bbox;
            if b.is_degenerate() {
                report.violations.push(format!("frame {id}: degenerate bbox for object {k} ({})", obj.label));
            } else if b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > frame.width || b.y2 > frame.height {
                report.violations.push(format!("frame {id}: object {k} ({}) bbox outside image", obj.label));
            }
            if !(0.0..=1.0).contains(&obj.confidence) {
                report.violations.push(format!(
                    "frame {id}: object {k} ({}) confidence {} outside [0, 1]",
                    obj.label, obj.confidence
                ));
            }
        }
        for (k, kp) in frame.keypoints.iter().enumerate() {
            report.keypoint_count += 1;
            if kp.x < 0.0 || kp.x > frame.width || kp.y < 0.0 || kp.y > frame.height {
                report.violations.push(format!("frame {id}: keypoint {k} outside image"));
            }
        }
        if let Some(hist) = &frame.vbow {
            for (word, weight) in hist {
                if *weight < 0.0 {
                    report.violations.push(format!("frame {id}: vbow word {word} has negative weight"));
                }
            }
        }
    }

    if let Some(gt) = &ds.ground_truth {
        for (i, j) in &gt.pairs {
            if i >= j {
                report.violations.push(format!("ground truth pair ({i}, {j}) not ordered i < j"));
            }
            for id in [i, j] {
                if !ids.contains(id) {
                    report.violations.push(format!("ground truth pair ({i}, {j}): frame {id} not in dataset"));
                }
            }
        }
    }

    if let Some(scores) = &ds.pair_scores {
        for ((i, j), s) in scores {
            for id in [i, j] {
                if !ids.contains(id) {
                    report.violations.push(format!("pair score ({i}, {j}): frame {id} not in dataset"));
                }
            }
            if !(0.0..=1.0).contains(s) {
                report.violations.push(format!("pair score ({i}, {j}): score {s} outside [0, 1]"));
            }
        }
    }

    report
}
