//! Deterministic generation of synthetic annotated keyframe sequences
//! with ground-truth revisits.
//!
//! The generator builds a fixed set of *places*: persistent layouts of
//! labeled boxes, each with stable keypoints well inside the box and
//! stable background landmarks in a thin band just outside it. A camera
//! pans through the places in order, dwelling `n_frames / n_places`
//! frames on each, and revisit windows steer late frames back to the
//! place first imaged at a window's original range. Every emitted
//! keypoint falls in exactly one of three zones relative to the object
//! boxes (all distances axis-aligned):
//!
//! * object keypoints: inside a box, at least 20 px from its edges;
//! * background landmarks: 10–15 px outside their own box;
//! * clutter: at least 30 px outside every box, with descriptors
//!   redrawn each frame.
//!
//! Per frame, each object moves rigidly (one shared camera shift plus
//! per-object Gaussian jitter, clamped so box and landmarks stay in the
//! image), so with noise rates at zero, frames of the same place differ
//! only by those offsets. Noise follows three channels: label noise
//! swaps a detection's label to a uniformly random other label, jitter
//! perturbs the object translation, and dropout removes the detection
//! while keeping its keypoints (a missed box does not erase image
//! features).
//!
//! Optional *decoy places* stress structural discrimination: the layout
//! decoy clones another place's labels, boxes, and keypoint positions
//! but redraws every descriptor and its background landmarks; the label
//! decoy clones only labels and boxes. Both are therefore
//! indistinguishable by label sets, the layout decoy is
//! indistinguishable even by per-object keypoint counts, and only the
//! background-landmark layer separates it.
//!
//! All randomness comes from one seeded ChaCha8 stream in a fixed
//! order: place construction (object count, cell and label shuffles,
//! then per object box, confidence, keypoints, landmarks), decoy
//! rewrites (layout decoy first), then frames in id order (camera
//! shift; per object jitter, dropout, label flip; then clutter).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::ingest::{
    save_dataset, Bbox, Dataset, Descriptor, Detection, FrameAnnotation, GroundTruth,
    IngestError, Keypoint,
};

/// Pool of static (non-movable) scene labels places draw from.
pub const STATIC_LABELS: [&str; 18] = [
    "chair", "couch", "bed", "toilet", "tv", "laptop", "keyboard", "book", "clock", "vase",
    "bottle", "cup", "bowl", "microwave", "oven", "toaster", "sink", "refrigerator",
];

const GRID_COLS: u32 = 3;
const GRID_ROWS: u32 = 2;
/// Clearance kept between a cell border and any box placed in it; also
/// the image-edge inset for boxes in border cells.
const CELL_PAD: f64 = 40.0;
const BOX_WIDTH: (f64, f64) = (60.0, 100.0);
const BOX_HEIGHT: (f64, f64) = (50.0, 90.0);
/// Object keypoints stay at least this far inside their box.
const KEYPOINT_INSET: f64 = 20.0;
/// Background landmarks sit this far outside their own box
/// (axis-aligned band).
const LANDMARK_BAND: (f64, f64) = (10.0, 15.0);
/// Clutter keeps at least this axis-aligned clearance from every box.
const CLUTTER_CLEARANCE: f64 = 30.0;
const CONFIDENCE_RANGE: (f64, f64) = (0.75, 0.95);
const MAX_PLACEMENT_TRIES: u32 = 1000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] IngestError),
}

/// One revisit: the camera re-images, over `[revisit_start,
/// revisit_end)`, the place it first saw at `original_start`. Ranges
/// are half-open frame-id intervals with the original strictly before
/// the revisit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RevisitWindow {
    pub original_start: u32,
    pub original_end: u32,
    pub revisit_start: u32,
    pub revisit_end: u32,
}

/// Full parameter set of the generator. Integer ranges are inclusive
/// on both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_frames: u32,
    pub width: f64,
    pub height: f64,
    pub n_places: u32,
    /// Number of distinct labels drawn from [`STATIC_LABELS`].
    pub n_labels: u32,
    pub objects_per_place: (u32, u32),
    pub keypoints_per_object: (u32, u32),
    /// Background landmarks attached per object.
    pub background_keypoints: (u32, u32),
    /// Free-standing clutter keypoints per frame, redrawn every frame.
    pub clutter_per_frame: (u32, u32),
    pub revisits: Vec<RevisitWindow>,
    pub label_noise_rate: f64,
    /// Standard deviation of per-object translation jitter.
    pub centroid_jitter_px: f64,
    pub dropout_rate: f64,
    /// Max magnitude of the per-frame rigid camera shift (uniform per
    /// axis).
    pub camera_shift_px: f64,
    /// Ground truth keeps only same-place pairs at least this far
    /// apart.
    pub min_revisit_gap: u32,
    /// 0 disables decoys, 1 adds the layout decoy, 2 adds the label
    /// decoy as well.
    pub n_decoy_places: u32,
    pub seed: u64,
}

impl SynthConfig {
    /// The bundled benchmark: 300 frames, 640x480, 10 places with 5-6
    /// objects over 12 labels, 10% label noise, 2 px jitter, and one
    /// revisit of the second place, with both decoy variants enabled.
    pub fn benchmark() -> SynthConfig {
        SynthConfig {
            n_frames: 300,
            width: 640.0,
            height: 480.0,
            n_places: 10,
            n_labels: 12,
            objects_per_place: (5, 6),
            keypoints_per_object: (4, 9),
            background_keypoints: (2, 5),
            clutter_per_frame: (4, 8),
            revisits: vec![RevisitWindow {
                original_start: 30,
                original_end: 60,
                revisit_start: 270,
                revisit_end: 300,
            }],
            label_noise_rate: 0.1,
            centroid_jitter_px: 2.0,
            dropout_rate: 0.0,
            camera_shift_px: 15.0,
            min_revisit_gap: 30,
            n_decoy_places: 2,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::BadConfig(msg));
        if self.n_frames == 0 {
            return bad("n_frames must be positive".into());
        }
        if self.n_places == 0 || self.n_places > self.n_frames {
            return bad(format!("n_places {} must be in [1, n_frames]", self.n_places));
        }
        if !(self.width.is_finite() && self.height.is_finite()) {
            return bad("image dims must be finite".into());
        }
        let need_w = f64::from(GRID_COLS) * (2.0 * CELL_PAD + BOX_WIDTH.1);
        let need_h = f64::from(GRID_ROWS) * (2.0 * CELL_PAD + BOX_HEIGHT.1);
        if self.width < need_w || self.height < need_h {
            return bad(format!(
                "image {}x{} too small for the object grid (needs at least {need_w}x{need_h})",
                self.width, self.height
            ));
        }
        let cells = GRID_COLS * GRID_ROWS;
        let (olo, ohi) = self.objects_per_place;
        if olo == 0 || olo > ohi || ohi > cells {
            return bad(format!("objects_per_place ({olo}, {ohi}) must satisfy 1 <= lo <= hi <= {cells}"));
        }
        if self.n_labels < ohi || self.n_labels as usize > STATIC_LABELS.len() {
            return bad(format!(
                "n_labels {} must cover one distinct label per object and at most {}",
                self.n_labels,
                STATIC_LABELS.len()
            ));
        }
        for (name, (lo, hi)) in [
            ("keypoints_per_object", self.keypoints_per_object),
            ("background_keypoints", self.background_keypoints),
            ("clutter_per_frame", self.clutter_per_frame),
        ] {
            if lo > hi {
                return bad(format!("{name} range ({lo}, {hi}) is reversed"));
            }
        }
        for (name, rate) in
            [("label_noise_rate", self.label_noise_rate), ("dropout_rate", self.dropout_rate)]
        {
            if !(0.0..=1.0).contains(&rate) {
                return bad(format!("{name} {rate} outside [0, 1]"));
            }
        }
        if !(self.centroid_jitter_px >= 0.0 && self.centroid_jitter_px.is_finite()) {
            return bad(format!("centroid_jitter_px {} must be finite and >= 0", self.centroid_jitter_px));
        }
        let max_shift = CELL_PAD - LANDMARK_BAND.1;
        if !(0.0..=max_shift).contains(&self.camera_shift_px) {
            return bad(format!(
                "camera_shift_px {} must be in [0, {max_shift}] to keep landmarks in-image",
                self.camera_shift_px
            ));
        }
        for (k, w) in self.revisits.iter().enumerate() {
            let ordered = w.original_start < w.original_end
                && w.original_end <= w.revisit_start
                && w.revisit_start < w.revisit_end;
            if !ordered || w.revisit_end > self.n_frames {
                return bad(format!("revisit window {k} has invalid geometry: {w:?}"));
            }
        }
        if self.n_decoy_places > 2 {
            return bad(format!("n_decoy_places {} must be at most 2", self.n_decoy_places));
        }
        if self.n_decoy_places > 0 {
            if self.revisits.is_empty() {
                return bad("decoy places need a revisit window to shadow".into());
            }
            if self.n_places < 6 {
                return bad(format!("decoy places need at least 6 places, got {}", self.n_places));
            }
            let source = self.base_place(self.revisits[0].original_start);
            for decoy in self.decoy_indices() {
                if decoy == source {
                    return bad(format!("decoy place {decoy} collides with the revisited place"));
                }
            }
        }
        Ok(())
    }

    /// Frames spent on each place before the camera moves on.
    pub fn dwell(&self) -> u32 {
        (self.n_frames / self.n_places.max(1)).max(1)
    }

    fn base_place(&self, frame: u32) -> u32 {
        (frame / self.dwell()).min(self.n_places - 1)
    }

    /// Place imaged at `frame`: the panning schedule, overridden inside
    /// revisit windows by the place of the window's original range.
    pub fn place_of_frame(&self, frame: u32) -> u32 {
        for w in &self.revisits {
            if (w.revisit_start..w.revisit_end).contains(&frame) {
                return self.base_place(w.original_start);
            }
        }
        self.base_place(frame)
    }

    /// Indices of the decoy places: layout decoy first, then the label
    /// decoy.
    fn decoy_indices(&self) -> Vec<u32> {
        (0..self.n_decoy_places.min(2)).map(|k| self.n_places - 3 - k).collect()
    }

    /// Effective configuration as `# key = value` comment lines.
    pub fn snapshot(&self) -> String {
        let mut s = String::from("# synthetic sequence generator configuration\n");
        let mut kv = |k: &str, v: String| writeln!(s, "# {k} = {v}").unwrap();
        kv("n_frames", self.n_frames.to_string());
        kv("width", self.width.to_string());
        kv("height", self.height.to_string());
        kv("n_places", self.n_places.to_string());
        kv("n_labels", self.n_labels.to_string());
        kv("objects_per_place", format!("{}..={}", self.objects_per_place.0, self.objects_per_place.1));
        kv(
            "keypoints_per_object",
            format!("{}..={}", self.keypoints_per_object.0, self.keypoints_per_object.1),
        );
        kv(
            "background_keypoints",
            format!("{}..={}", self.background_keypoints.0, self.background_keypoints.1),
        );
        kv("clutter_per_frame", format!("{}..={}", self.clutter_per_frame.0, self.clutter_per_frame.1));
        for (k, w) in self.revisits.iter().enumerate() {
            kv(
                &format!("revisit_{k}"),
                format!(
                    "original [{}, {}) re-imaged at [{}, {})",
                    w.original_start, w.original_end, w.revisit_start, w.revisit_end
                ),
            );
        }
        kv("label_noise_rate", self.label_noise_rate.to_string());
        kv("centroid_jitter_px", self.centroid_jitter_px.to_string());
        kv("dropout_rate", self.dropout_rate.to_string());
        kv("camera_shift_px", self.camera_shift_px.to_string());
        kv("min_revisit_gap", self.min_revisit_gap.to_string());
        kv("n_decoy_places", self.n_decoy_places.to_string());
        kv("seed", self.seed.to_string());
        s
    }
}

/// Tallies from one generation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthStats {
    pub n_frames: u32,
    pub n_truth_pairs: usize,
    /// Detections emitted with a swapped label.
    pub label_flips: u32,
    /// Detections removed by dropout.
    pub dropped_objects: u32,
    /// Place imaged by each frame, indexed by frame id.
    pub place_of_frame: Vec<u32>,
}

#[derive(Debug, Clone)]
struct ObjectSpec {
    label_idx: u32,
    bbox: Bbox,
    confidence: f64,
    keypoints: Vec<(f64, f64, Descriptor)>,
    landmarks: Vec<(f64, f64, Descriptor)>,
}

#[derive(Debug, Clone)]
struct PlaceSpec {
    objects: Vec<ObjectSpec>,
}

fn draw_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
    Descriptor(rng.gen())
}

fn draw_keypoint_in_box(rng: &mut ChaCha8Rng, b: &Bbox) -> (f64, f64) {
    (
        rng.gen_range(b.x1 + KEYPOINT_INSET..=b.x2 - KEYPOINT_INSET),
        rng.gen_range(b.y1 + KEYPOINT_INSET..=b.y2 - KEYPOINT_INSET),
    )
}

/// Rejection-samples a point 10-15 px (axis-aligned) outside `b`.
fn draw_landmark_near_box(rng: &mut ChaCha8Rng, b: &Bbox) -> (f64, f64) {
    let outer = b.expanded(LANDMARK_BAND.1);
    let inner = b.expanded(LANDMARK_BAND.0);
    for _ in 0..MAX_PLACEMENT_TRIES {
        let x = rng.gen_range(outer.x1..=outer.x2);
        let y = rng.gen_range(outer.y1..=outer.y2);
        if !inner.contains(x, y) {
            return (x, y);
        }
    }
    // The band covers a fixed fraction of the outer box, so this is
    // unreachable in practice; fall back to a point straight above.
    (b.centroid().0, b.y1 - LANDMARK_BAND.1)
}

fn draw_object(rng: &mut ChaCha8Rng, cell: u32, label_idx: u32, cfg: &SynthConfig) -> ObjectSpec {
    let cell_w = cfg.width / f64::from(GRID_COLS);
    let cell_h = cfg.height / f64::from(GRID_ROWS);
    let cx = f64::from(cell % GRID_COLS) * cell_w;
    let cy = f64::from(cell / GRID_COLS) * cell_h;
    let w = rng.gen_range(BOX_WIDTH.0..=BOX_WIDTH.1);
    let h = rng.gen_range(BOX_HEIGHT.0..=BOX_HEIGHT.1);
    let x1 = rng.gen_range(cx + CELL_PAD..=cx + cell_w - CELL_PAD - w);
    let y1 = rng.gen_range(cy + CELL_PAD..=cy + cell_h - CELL_PAD - h);
    let bbox = Bbox::new(x1, y1, x1 + w, y1 + h);
    let confidence = rng.gen_range(CONFIDENCE_RANGE.0..=CONFIDENCE_RANGE.1);
    let n_kp = rng.gen_range(cfg.keypoints_per_object.0..=cfg.keypoints_per_object.1);
    let keypoints = (0..n_kp)
        .map(|_| {
            let (x, y) = draw_keypoint_in_box(rng, &bbox);
            (x, y, draw_descriptor(rng))
        })
        .collect();
    let landmarks = draw_landmarks(rng, &bbox, cfg);
    ObjectSpec { label_idx, bbox, confidence, keypoints, landmarks }
}

fn draw_landmarks(rng: &mut ChaCha8Rng, bbox: &Bbox, cfg: &SynthConfig) -> Vec<(f64, f64, Descriptor)> {
    let n = rng.gen_range(cfg.background_keypoints.0..=cfg.background_keypoints.1);
    (0..n)
        .map(|_| {
            let (x, y) = draw_landmark_near_box(rng, bbox);
            (x, y, draw_descriptor(rng))
        })
        .collect()
}

fn draw_place(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> PlaceSpec {
    let n_obj = rng.gen_range(cfg.objects_per_place.0..=cfg.objects_per_place.1);
    let mut cells: Vec<u32> = (0..GRID_COLS * GRID_ROWS).collect();
    cells.shuffle(rng);
    let mut labels: Vec<u32> = (0..cfg.n_labels).collect();
    labels.shuffle(rng);
    let objects = (0..n_obj as usize).map(|k| draw_object(rng, cells[k], labels[k], cfg)).collect();
    PlaceSpec { objects }
}

fn counts_per_label<F: Fn(&ObjectSpec) -> usize>(place: &PlaceSpec, f: F) -> Vec<(u32, usize)> {
    let mut v: Vec<(u32, usize)> = place.objects.iter().map(|o| (o.label_idx, f(o))).collect();
    v.sort_unstable();
    v
}

/// Rewrites `decoy` as a copy of `source` that shares labels, boxes,
/// confidences, and keypoint positions but no descriptors, with its
/// background landmarks redrawn and forced to differ in count from the
/// source on at least one object.
fn make_layout_decoy(rng: &mut ChaCha8Rng, source: &PlaceSpec, cfg: &SynthConfig) -> PlaceSpec {
    let mut decoy = source.clone();
    for obj in &mut decoy.objects {
        for kp in &mut obj.keypoints {
            kp.2 = draw_descriptor(rng);
        }
        obj.landmarks = draw_landmarks(rng, &obj.bbox, cfg);
    }
    force_count_difference(rng, &mut decoy, source, cfg, true);
    decoy
}

/// Rewrites `decoy` as a copy of `source` that shares only labels,
/// boxes, and confidences: keypoints and landmarks are redrawn, with
/// the per-object keypoint counts forced to differ from the source.
fn make_label_decoy(rng: &mut ChaCha8Rng, source: &PlaceSpec, cfg: &SynthConfig) -> PlaceSpec {
    let mut decoy = source.clone();
    for obj in &mut decoy.objects {
        let n_kp = rng.gen_range(cfg.keypoints_per_object.0..=cfg.keypoints_per_object.1);
        obj.keypoints = (0..n_kp)
            .map(|_| {
                let (x, y) = draw_keypoint_in_box(rng, &obj.bbox);
                (x, y, draw_descriptor(rng))
            })
            .collect();
        obj.landmarks = draw_landmarks(rng, &obj.bbox, cfg);
    }
    force_count_difference(rng, &mut decoy, source, cfg, false);
    decoy
}

/// Guarantees the decoy differs from the source in the per-label count
/// multiset of landmarks (`landmarks = true`) or keypoints, bumping the
/// first object when the redraw happened to tie.
fn force_count_difference(
    rng: &mut ChaCha8Rng,
    decoy: &mut PlaceSpec,
    source: &PlaceSpec,
    cfg: &SynthConfig,
    landmarks: bool,
) {
    let (counts, range): (fn(&ObjectSpec) -> usize, (u32, u32)) = if landmarks {
        (|o| o.landmarks.len(), cfg.background_keypoints)
    } else {
        (|o| o.keypoints.len(), cfg.keypoints_per_object)
    };
    if counts_per_label(decoy, counts) != counts_per_label(source, counts)
        || decoy.objects.is_empty()
    {
        return;
    }
    let obj = &mut decoy.objects[0];
    let grow = (counts(obj) as u32) < range.1;
    if landmarks {
        if grow {
            let (x, y) = draw_landmark_near_box(rng, &obj.bbox);
            obj.landmarks.push((x, y, draw_descriptor(rng)));
        } else {
            obj.landmarks.pop();
        }
    } else if grow {
        let (x, y) = draw_keypoint_in_box(rng, &obj.bbox);
        obj.keypoints.push((x, y, draw_descriptor(rng)));
    } else {
        obj.keypoints.pop();
    }
}

/// Translation applied to one object this frame, clamped so the box and
/// its landmark band stay inside the image.
fn clamp_offset(bbox: &Bbox, dx: f64, dy: f64, cfg: &SynthConfig) -> (f64, f64) {
    let pad = LANDMARK_BAND.1;
    let dx = dx.clamp(-(bbox.x1 - pad), cfg.width - bbox.x2 - pad);
    let dy = dy.clamp(-(bbox.y1 - pad), cfg.height - bbox.y2 - pad);
    (dx, dy)
}

/// Generates the full dataset in memory. Output is identical across
/// runs for a fixed config.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<(Dataset, SynthStats), SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter = Normal::new(0.0, cfg.centroid_jitter_px)
        .map_err(|e| SynthError::BadConfig(format!("jitter distribution: {e}")))?;

    let mut places: Vec<PlaceSpec> = (0..cfg.n_places).map(|_| draw_place(&mut rng, cfg)).collect();
    if !cfg.revisits.is_empty() {
        let source = cfg.base_place(cfg.revisits[0].original_start) as usize;
        for (k, decoy) in cfg.decoy_indices().into_iter().enumerate() {
            places[decoy as usize] = if k == 0 {
                make_layout_decoy(&mut rng, &places[source], cfg)
            } else {
                make_label_decoy(&mut rng, &places[source], cfg)
            };
        }
    }

    let mut stats = SynthStats {
        n_frames: cfg.n_frames,
        n_truth_pairs: 0,
        label_flips: 0,
        dropped_objects: 0,
        place_of_frame: (0..cfg.n_frames).map(|f| cfg.place_of_frame(f)).collect(),
    };

    let mut frames = Vec::with_capacity(cfg.n_frames as usize);
    for frame_id in 0..cfg.n_frames {
        let place = &places[stats.place_of_frame[frame_id as usize] as usize];
        let cam_x = rng.gen_range(-1.0..1.0) * cfg.camera_shift_px;
        let cam_y = rng.gen_range(-1.0..1.0) * cfg.camera_shift_px;
        let mut objects = Vec::new();
        let mut keypoints = Vec::new();
        let mut boxes = Vec::new();
        for obj in &place.objects {
            let (dx, dy) = clamp_offset(
                &obj.bbox,
                cam_x + jitter.sample(&mut rng),
                cam_y + jitter.sample(&mut rng),
                cfg,
            );
            let bbox = Bbox::new(obj.bbox.x1 + dx, obj.bbox.y1 + dy, obj.bbox.x2 + dx, obj.bbox.y2 + dy);
            let dropped = rng.gen::<f64>() < cfg.dropout_rate;
            if dropped {
                stats.dropped_objects += 1;
            } else {
                let mut label_idx = obj.label_idx;
                if rng.gen::<f64>() < cfg.label_noise_rate {
                    let other = rng.gen_range(0..cfg.n_labels - 1);
                    label_idx = if other >= label_idx { other + 1 } else { other };
                    stats.label_flips += 1;
                }
                boxes.push(bbox);
                objects.push(Detection {
                    label: STATIC_LABELS[label_idx as usize].to_string(),
                    confidence: obj.confidence,
                    bbox,
                });
            }
            for (x, y, desc) in obj.keypoints.iter().chain(&obj.landmarks) {
                keypoints.push(Keypoint { x: x + dx, y: y + dy, desc: Some(*desc) });
            }
        }
        let n_clutter = rng.gen_range(cfg.clutter_per_frame.0..=cfg.clutter_per_frame.1);
        for _ in 0..n_clutter {
            for _ in 0..MAX_PLACEMENT_TRIES {
                let x = rng.gen_range(0.0..=cfg.width);
                let y = rng.gen_range(0.0..=cfg.height);
                if boxes.iter().all(|b| !b.expanded(CLUTTER_CLEARANCE).contains(x, y)) {
                    keypoints.push(Keypoint { x, y, desc: Some(draw_descriptor(&mut rng)) });
                    break;
                }
            }
        }
        frames.push(FrameAnnotation {
            frame_id,
            width: cfg.width,
            height: cfg.height,
            objects,
            keypoints,
            vbow: None,
        });
    }

    let mut pairs = Vec::new();
    for i in 0..cfg.n_frames {
        for j in (i + cfg.min_revisit_gap.max(1))..cfg.n_frames {
            if stats.place_of_frame[i as usize] == stats.place_of_frame[j as usize] {
                pairs.push((i, j));
            }
        }
    }
    stats.n_truth_pairs = pairs.len();
    let ground_truth = GroundTruth::from_pairs(pairs)?;
    let dataset = Dataset::new(frames, Some(ground_truth), None)?;
    Ok((dataset, stats))
}

/// Generates the dataset and writes `frames.jsonl`, `groundtruth.csv`,
/// and `config.snapshot` into `out_dir`.
pub fn generate_sequence(cfg: &SynthConfig, out_dir: &Path) -> Result<(Dataset, SynthStats), SynthError> {
    let (dataset, stats) = generate_dataset(cfg)?;
    save_dataset(&dataset, out_dir)?;
    let snap = out_dir.join("config.snapshot");
    fs::write(&snap, cfg.snapshot()).map_err(|e| {
        SynthError::Io(IngestError::Other(format!("write {}: {e}", snap.display())))
    })?;
    Ok((dataset, stats))
}
