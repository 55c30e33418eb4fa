//! Detection filtering ahead of graph construction.
//!
//! Two passes run before anything is anchored on a detection: a denylist
//! drop of movable object classes, and removal of oversized detections
//! that heavily overlap another detection (typically a near-duplicate
//! box swallowing the scene). Both passes preserve input order.

use std::collections::BTreeSet;

use crate::ingest::{Bbox, Detection};

/// Movable object classes excluded from anchoring by default.
pub const DEFAULT_DENYLIST: [&str; 15] = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
    "bird", "cat", "dog", "horse", "sheep", "cow",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub denylist: BTreeSet<String>,
    /// Fraction of the image area above which a detection counts as oversized.
    pub max_area_fraction: f64,
    /// IoU with another detection above which an oversized detection is dropped.
    pub overlap_iou_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> FilterConfig {
        FilterConfig {
            denylist: DEFAULT_DENYLIST.iter().map(|s| s.to_string()).collect(),
            max_area_fraction: 0.5,
            overlap_iou_threshold: 0.3,
        }
    }
}

/// Intersection over union of two boxes; 0 when either is degenerate
/// or they do not overlap.
pub fn iou(a: &Bbox, b: &Bbox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Drops detections whose label is on the denylist.
pub fn filter_movable(objects: &[Detection], cfg: &FilterConfig) -> Vec<Detection> {
    objects.iter().filter(|o| !cfg.denylist.contains(&o.label)).cloned().collect()
}

/// Drops detections that are both oversized (area fraction above
/// `max_area_fraction`) and overlap some other detection with IoU above
/// `overlap_iou_threshold`. Both conditions are evaluated against the
/// input list, so the pass is idempotent.
pub fn filter_oversized(
    objects: &[Detection],
    width: f64,
    height: f64,
    cfg: &FilterConfig,
) -> Vec<Detection> {
    let image_area = width * height;
    if image_area <= 0.0 {
        return objects.to_vec();
    }
    objects
        .iter()
        .enumerate()
        .filter(|(k, obj)| {
            let oversized = obj.bbox.area() / image_area > cfg.max_area_fraction;
            if !oversized {
                return true;
            }
            let overlaps = objects
                .iter()
                .enumerate()
                .any(|(m, other)| m != *k && iou(&obj.bbox, &other.bbox) > cfg.overlap_iou_threshold);
            !overlaps
        })
        .map(|(_, obj)| obj.clone())
        .collect()
}

/// Runs both passes: denylist first, then the oversized-overlap drop.
pub fn filter_detections(
    objects: &[Detection],
    width: f64,
    height: f64,
    cfg: &FilterConfig,
) -> Vec<Detection> {
    let kept = filter_movable(objects, cfg);
    filter_oversized(&kept, width, height, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn det(label: &str, bbox: Bbox) -> Detection {
        Detection { label: label.into(), confidence: 0.9, bbox }
    }

    #[test]
    fn denylist_drops_movable_classes_in_order() {
        let objects = vec![
            det("person", Bbox::new(0.0, 0.0, 10.0, 10.0)),
            det("cup", Bbox::new(20.0, 0.0, 30.0, 10.0)),
            det("monitor", Bbox::new(40.0, 0.0, 50.0, 10.0)),
        ];
        let kept = filter_movable(&objects, &FilterConfig::default());
        let labels: Vec<&str> = kept.iter().map(|o| o.label.as_str()).collect();
        assert_eq!(labels, ["cup", "monitor"]);
    }

    #[test]
    fn denylist_handles_empty_and_all_denied() {
        let cfg = FilterConfig::default();
        assert!(filter_movable(&[], &cfg).is_empty());
        let objects = vec![
            det("person", Bbox::new(0.0, 0.0, 1.0, 1.0)),
            det("dog", Bbox::new(2.0, 0.0, 3.0, 1.0)),
        ];
        assert!(filter_movable(&objects, &cfg).is_empty());
    }

    // Oversized-drop cases on a 100x100 image, worked by hand:
    // box (0,0,60,100) covers 60% of the image; against (30,0,90,100) the
    // intersection is 30*100 = 3000 and the union 9000, so IoU = 1/3.
    #[test]
    fn oversized_overlapping_boxes_are_dropped() {
        let cfg = FilterConfig::default();
        let a = det("couch", Bbox::new(0.0, 0.0, 60.0, 100.0));
        let b = det("bed", Bbox::new(30.0, 0.0, 90.0, 100.0));
        assert!((iou(&a.bbox, &b.bbox) - 1.0 / 3.0).abs() < 1e-12);

        let kept = filter_oversized(&[a, b], 100.0, 100.0, &cfg);
        assert!(kept.is_empty());
    }

    #[test]
    fn oversized_without_overlap_is_kept() {
        let cfg = FilterConfig::default();
        let a = det("couch", Bbox::new(0.0, 0.0, 60.0, 100.0));
        let b = det("cup", Bbox::new(70.0, 0.0, 80.0, 10.0));
        let kept = filter_oversized(&[a, b], 100.0, 100.0, &cfg);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn small_boxes_survive_any_overlap() {
        let cfg = FilterConfig::default();
        // 16% of the image each, IoU = (20*40)/(2*40*40 - 800) = 1/3 > 0.3.
        let a = det("book", Bbox::new(0.0, 0.0, 40.0, 40.0));
        let b = det("laptop", Bbox::new(20.0, 0.0, 60.0, 40.0));
        assert!(iou(&a.bbox, &b.bbox) > cfg.overlap_iou_threshold);
        let kept = filter_oversized(&[a, b], 100.0, 100.0, &cfg);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn oversized_next_to_small_partner_drops_only_the_large_box() {
        let cfg = FilterConfig::default();
        let a = det("couch", Bbox::new(0.0, 0.0, 60.0, 100.0));
        // Entirely inside `a`, small area; IoU = 800/6000 = 0.133 < 0.3,
        // so grow it until IoU passes: (0,0,30,100) gives 3000/6000 = 0.5.
        let b = det("chair", Bbox::new(0.0, 0.0, 30.0, 100.0));
        let kept = filter_oversized(&[a.clone(), b.clone()], 100.0, 100.0, &cfg);
        assert_eq!(kept, vec![b]);
    }

    #[test]
    fn filtering_is_idempotent_and_order_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let labels = ["cup", "tv", "person", "couch", "book", "dog"];
        let cfg = FilterConfig::default();
        for _ in 0..200 {
            let n = rng.gen_range(0..8);
            let objects: Vec<Detection> = (0..n)
                .map(|_| {
                    let x1 = rng.gen_range(0.0..60.0);
                    let y1 = rng.gen_range(0.0..60.0);
                    let w = rng.gen_range(5.0..90.0);
                    let h = rng.gen_range(5.0..90.0);
                    det(
                        labels[rng.gen_range(0..labels.len())],
                        Bbox::new(x1, y1, (x1 + w).min(100.0), (y1 + h).min(100.0)),
                    )
                })
                .collect();
            let once = filter_detections(&objects, 100.0, 100.0, &cfg);
            let twice = filter_detections(&once, 100.0, 100.0, &cfg);
            assert_eq!(once, twice);

            // Order preserved: kept list is a subsequence of the input.
            let mut cursor = 0;
            for obj in &once {
                while cursor < objects.len() && objects[cursor] != *obj {
                    cursor += 1;
                }
                assert!(cursor < objects.len(), "kept object not found in order");
                cursor += 1;
            }
        }
    }
}
