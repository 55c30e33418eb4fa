//! Pipeline configuration: defaults, config-file parsing, and snapshots.
//!
//! Settings resolve in three layers: built-in defaults, then a flat
//! `key = value` config file, then command-line flags. The effective
//! configuration can be rendered to a deterministic snapshot string that
//! accompanies every written report.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::objfilter::FilterConfig;

/// Scene-graph construction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TierMode {
    Flat,
    TwoTier,
    ThreeTier,
}

impl TierMode {
    pub const ALL: [TierMode; 3] = [TierMode::Flat, TierMode::TwoTier, TierMode::ThreeTier];

    pub fn as_str(&self) -> &'static str {
        match self {
            TierMode::Flat => "flat",
            TierMode::TwoTier => "two_tier",
            TierMode::ThreeTier => "three_tier",
        }
    }
}

impl fmt::Display for TierMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TierMode {
    type Err = String;

    fn from_str(s: &str) -> Result<TierMode, String> {
        match s {
            "flat" => Ok(TierMode::Flat),
            "two_tier" => Ok(TierMode::TwoTier),
            "three_tier" => Ok(TierMode::ThreeTier),
            other => Err(format!("unknown mode '{other}' (expected flat, two_tier, or three_tier)")),
        }
    }
}

/// How the temporal term enters the combined score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalMode {
    /// Subtract `alpha * ln(beta_s * gap^2)` as written.
    Literal,
    /// Subtract `alpha * max(0, -ln(beta_s * gap^2))`, a pure nearby-frame
    /// penalty that vanishes for large gaps.
    Clamped,
}

impl TemporalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TemporalMode::Literal => "literal",
            TemporalMode::Clamped => "clamped",
        }
    }
}

impl fmt::Display for TemporalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemporalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<TemporalMode, String> {
        match s {
            "literal" => Ok(TemporalMode::Literal),
            "clamped" => Ok(TemporalMode::Clamped),
            other => Err(format!("unknown temporal mode '{other}' (expected literal or clamped)")),
        }
    }
}

/// Candidate decision stage: trained detector or plain score threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Mlp,
    Threshold,
}

impl DetectorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::Mlp => "mlp",
            DetectorKind::Threshold => "threshold",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<DetectorKind, String> {
        match s {
            "mlp" => Ok(DetectorKind::Mlp),
            "threshold" => Ok(DetectorKind::Threshold),
            other => Err(format!("unknown detector '{other}' (expected mlp or threshold)")),
        }
    }
}

/// Hyperparameters of the pair detector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for ClassifierConfig {
    fn default() -> ClassifierConfig {
        ClassifierConfig { hidden: vec![16, 16], epochs: 40, learning_rate: 0.05 }
    }
}

/// Every knob of the scoring pipeline in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mode: TierMode,
    /// Pixel margin of the tier-3 band around each bounding box.
    pub margin_px: f64,
    /// Temporal constraint scale; must lie in (0, 1).
    pub beta_s: f64,
    /// Temporal constraint weight; must lie in (0, 100).
    pub alpha: f64,
    /// Relabeling iterations of the graph kernel.
    pub iterations: u32,
    /// Score threshold used by the threshold detector.
    pub tau: f64,
    /// Smallest frame gap eligible for candidacy.
    pub min_gap: u32,
    pub temporal_mode: TemporalMode,
    /// Largest acceptable label mismatch fraction between two frames.
    pub label_match_tolerance: f64,
    /// Frame tolerance when matching predictions to ground truth.
    pub tolerance: u32,
    /// Visual vocabulary size.
    pub vocab_k: usize,
    pub seed: u64,
    pub filter: FilterConfig,
    pub classifier: ClassifierConfig,
    pub detector: DetectorKind,
    /// Worker threads for pair scoring; results merge in canonical order.
    pub workers: usize,
    /// Emit measured runtimes in reports (off keeps reports byte-stable).
    pub emit_runtime: bool,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            mode: TierMode::ThreeTier,
            margin_px: 25.0,
            beta_s: 0.3,
            alpha: 2.0,
            iterations: 50,
            tau: 0.5,
            min_gap: 30,
            temporal_mode: TemporalMode::Clamped,
            label_match_tolerance: 0.40,
            tolerance: 5,
            vocab_k: 64,
            seed: 42,
            filter: FilterConfig::default(),
            classifier: ClassifierConfig::default(),
            detector: DetectorKind::Mlp,
            workers: 1,
            emit_runtime: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    /// Applies `key = value` lines from a config file over this config.
    /// `#` starts a comment; blank lines are ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|message| ConfigError::Parse { line: line_no, message })?;
        }
        Ok(())
    }

    /// Sets a single field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e| format!("bad value '{value}' for {key}: {e}"))
        }

        match key {
            "mode" => self.mode = value.parse()?,
            "margin_px" => self.margin_px = num(key, value)?,
            "beta_s" => self.beta_s = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "iterations" => self.iterations = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "min_gap" => self.min_gap = num(key, value)?,
            "temporal_mode" => self.temporal_mode = value.parse()?,
            "label_match_tolerance" => self.label_match_tolerance = num(key, value)?,
            "tolerance" => self.tolerance = num(key, value)?,
            "vocab_k" => self.vocab_k = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "denylist" => {
                self.filter.denylist = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect::<BTreeSet<String>>();
            }
            "max_area_fraction" => self.filter.max_area_fraction = num(key, value)?,
            "overlap_iou_threshold" => self.filter.overlap_iou_threshold = num(key, value)?,
            "clf_hidden" => {
                self.classifier.hidden = value
                    .split(',')
                    .map(|s| num::<usize>(key, s.trim()))
                    .collect::<Result<Vec<usize>, String>>()?;
            }
            "clf_epochs" => self.classifier.epochs = num(key, value)?,
            "clf_lr" => self.classifier.learning_rate = num(key, value)?,
            "detector" => self.detector = value.parse()?,
            "workers" => self.workers = num(key, value)?,
            "emit_runtime" => self.emit_runtime = num(key, value)?,
            other => return Err(format!("unknown config key '{other}'")),
        }
        Ok(())
    }

    /// Rejects out-of-range settings.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.beta_s > 0.0 && self.beta_s < 1.0) {
            return Err(ConfigError::Invalid(format!("beta_s must lie in (0, 1), got {}", self.beta_s)));
        }
        if !(self.alpha > 0.0 && self.alpha < 100.0) {
            return Err(ConfigError::Invalid(format!("alpha must lie in (0, 100), got {}", self.alpha)));
        }
        if self.min_gap == 0 {
            return Err(ConfigError::Invalid("min_gap must be at least 1".into()));
        }
        if self.margin_px < 0.0 {
            return Err(ConfigError::Invalid(format!("margin_px must be non-negative, got {}", self.margin_px)));
        }
        if !(0.0..=1.0).contains(&self.label_match_tolerance) {
            return Err(ConfigError::Invalid(format!(
                "label_match_tolerance must lie in [0, 1], got {}",
                self.label_match_tolerance
            )));
        }
        if self.vocab_k == 0 {
            return Err(ConfigError::Invalid("vocab_k must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.classifier.hidden.iter().any(|&h| h == 0) {
            return Err(ConfigError::Invalid("classifier hidden sizes must be positive".into()));
        }
        Ok(())
    }

    /// Deterministic `key = value` rendering of the effective config.
    pub fn snapshot(&self) -> String {
        let denylist: Vec<&str> = self.filter.denylist.iter().map(|s| s.as_str()).collect();
        let hidden: Vec<String> = self.classifier.hidden.iter().map(|h| h.to_string()).collect();
        let entries = [
            ("alpha", self.alpha.to_string()),
            ("beta_s", self.beta_s.to_string()),
            ("clf_epochs", self.classifier.epochs.to_string()),
            ("clf_hidden", hidden.join(",")),
            ("clf_lr", self.classifier.learning_rate.to_string()),
            ("denylist", denylist.join(",")),
            ("detector", self.detector.to_string()),
            ("emit_runtime", self.emit_runtime.to_string()),
            ("iterations", self.iterations.to_string()),
            ("label_match_tolerance", self.label_match_tolerance.to_string()),
            ("margin_px", self.margin_px.to_string()),
            ("max_area_fraction", self.filter.max_area_fraction.to_string()),
            ("min_gap", self.min_gap.to_string()),
            ("mode", self.mode.to_string()),
            ("overlap_iou_threshold", self.filter.overlap_iou_threshold.to_string()),
            ("seed", self.seed.to_string()),
            ("tau", self.tau.to_string()),
            ("temporal_mode", self.temporal_mode.to_string()),
            ("tolerance", self.tolerance.to_string()),
            ("vocab_k", self.vocab_k.to_string()),
            ("workers", self.workers.to_string()),
        ];
        let mut out = String::new();
        for (key, value) in entries {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }
}
