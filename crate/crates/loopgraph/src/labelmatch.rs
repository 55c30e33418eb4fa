//! Semantic label matching between frames on the normalized image plane.
//!
//! Detections are first mapped to resolution-independent coordinates
//! (centroids and box extents divided by the image dimensions). Two
//! frames are then compared label by label: detections sharing a label
//! id are put in correspondence by an exact minimum-cost assignment on
//! centroid distance, and the fraction of unmatched detections decides
//! whether the pair is worth scoring at all.

use thiserror::Error;

use crate::ingest::Detection;
use std::collections::BTreeMap;

/// Default upper bound on the tolerated mismatch fraction.
pub const DEFAULT_MISMATCH_TOLERANCE: f64 = 0.40;

/// A detection in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedDetection {
    pub label_id: u32,
    pub ncx: f64,
    pub ncy: f64,
    pub nw: f64,
    pub nh: f64,
    pub confidence: f64,
}

impl NormalizedDetection {
    pub fn centroid(&self) -> (f64, f64) {
        (self.ncx, self.ncy)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LabelMatchError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    BadImageDims { width: f64, height: f64 },
    #[error("label '{0}' has no id in the dataset vocabulary")]
    UnknownLabel(String),
    #[error("hausdorff distance requires non-empty point sets")]
    EmptyPointSet,
}

/// Maps pixel-space detections onto the unit plane. Centroids and box
/// extents are divided per axis, so the output is invariant to uniform
/// rescaling of the image and its annotations.
pub fn normalize_detections(
    objects: &[Detection],
    label_ids: &BTreeMap<String, u32>,
    width: f64,
    height: f64,
) -> Result<Vec<NormalizedDetection>, LabelMatchError> {
    if !(width > 0.0) || !(height > 0.0) {
        return Err(LabelMatchError::BadImageDims { width, height });
    }
    objects
        .iter()
        .map(|obj| {
            let label_id = label_ids
                .get(&obj.label)
                .copied()
                .ok_or_else(|| LabelMatchError::UnknownLabel(obj.label.clone()))?;
            let (cx, cy) = obj.bbox.centroid();
            Ok(NormalizedDetection {
                label_id,
                ncx: cx / width,
                ncy: cy / height,
                nw: obj.bbox.width() / width,
                nh: obj.bbox.height() / height,
                confidence: obj.confidence,
            })
        })
        .collect()
}

/// Outcome of matching two frames' detections by label.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Index pairs (into the two input slices) put in correspondence.
    pub correspondences: Vec<(usize, usize)>,
    /// 1 - matched / max(len_a, len_b); 1.0 when either side is empty.
    pub mismatch_fraction: f64,
    /// True when the mismatch fraction is within tolerance.
    pub accepted: bool,
    /// 1 - mismatch_fraction.
    pub match_score: f64,
}

/// Matches detections with equal label ids across two frames, choosing
/// within each label group the assignment that minimizes total centroid
/// distance. `tolerance` is the largest acceptable mismatch fraction
/// (inclusive).
pub fn match_labels(
    a: &[NormalizedDetection],
    b: &[NormalizedDetection],
    tolerance: f64,
) -> MatchResult {
    if a.is_empty() || b.is_empty() {
        return MatchResult {
            correspondences: Vec::new(),
            mismatch_fraction: 1.0,
            accepted: false,
            match_score: 0.0,
        };
    }

    let mut by_label_a: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (k, d) in a.iter().enumerate() {
        by_label_a.entry(d.label_id).or_default().push(k);
    }
    let mut by_label_b: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (k, d) in b.iter().enumerate() {
        by_label_b.entry(d.label_id).or_default().push(k);
    }

    let mut correspondences = Vec::new();
    for (label, idx_a) in &by_label_a {
        let Some(idx_b) = by_label_b.get(label) else { continue };
        let costs: Vec<Vec<f64>> = idx_a
            .iter()
            .map(|&ia| {
                idx_b
                    .iter()
                    .map(|&ib| {
                        let dx = a[ia].ncx - b[ib].ncx;
                        let dy = a[ia].ncy - b[ib].ncy;
                        (dx * dx + dy * dy).sqrt()
                    })
                    .collect()
            })
            .collect();
        for (ra, rb) in min_cost_assignment(&costs) {
            correspondences.push((idx_a[ra], idx_b[rb]));
        }
    }
    correspondences.sort_unstable();

    let max_side = a.len().max(b.len());
    let mismatch_fraction = 1.0 - correspondences.len() as f64 / max_side as f64;
    MatchResult {
        accepted: mismatch_fraction <= tolerance,
        match_score: 1.0 - mismatch_fraction,
        mismatch_fraction,
        correspondences,
    }
}

/// Exact minimum-cost assignment matching min(rows, cols) pairs, via
/// subset dynamic programming over the smaller side's columns. Frames
/// carry a handful of duplicate-label detections at most, so the
/// exponential term stays tiny.
fn min_cost_assignment(costs: &[Vec<f64>]) -> Vec<(usize, usize)> {
    if costs.is_empty() || costs[0].is_empty() {
        return Vec::new();
    }
    let (rows, cols, transposed) = if costs.len() <= costs[0].len() {
        (costs.len(), costs[0].len(), false)
    } else {
        (costs[0].len(), costs.len(), true)
    };
    let cost = |r: usize, c: usize| if transposed { costs[c][r] } else { costs[r][c] };
    assert!(cols < 64, "assignment group too large");

    // best[mask] = minimal cost of assigning the first popcount(mask)
    // rows to exactly the column set `mask`.
    let full = 1usize << cols;
    let mut best = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    best[0] = 0.0;
    for mask in 0..full {
        if best[mask].is_infinite() {
            continue;
        }
        let row = (mask as u32).count_ones() as usize;
        if row >= rows {
            continue;
        }
        for c in 0..cols {
            let bit = 1usize << c;
            if mask & bit != 0 {
                continue;
            }
            let next = mask | bit;
            let total = best[mask] + cost(row, c);
            if total < best[next] {
                best[next] = total;
                choice[next] = c;
            }
        }
    }

    let mut target = (0..full)
        .filter(|m| (*m as u32).count_ones() as usize == rows)
        .min_by(|&x, &y| best[x].partial_cmp(&best[y]).unwrap())
        .unwrap();
    let mut pairs = Vec::with_capacity(rows);
    while target != 0 {
        let c = choice[target];
        let row = (target as u32).count_ones() as usize - 1;
        pairs.push(if transposed { (c, row) } else { (row, c) });
        target &= !(1usize << c);
    }
    pairs.reverse();
    pairs
}

/// Symmetric Hausdorff distance between two non-empty point sets: the
/// larger of the two directed max-min Euclidean distances.
pub fn hausdorff_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64, LabelMatchError> {
    if a.is_empty() || b.is_empty() {
        return Err(LabelMatchError::EmptyPointSet);
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

fn directed_hausdorff(from: &[(f64, f64)], to: &[(f64, f64)]) -> f64 {
    from.iter()
        .map(|&(x1, y1)| {
            to.iter()
                .map(|&(x2, y2)| ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Bbox;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vocab(labels: &[&str]) -> BTreeMap<String, u32> {
        labels.iter().enumerate().map(|(k, l)| (l.to_string(), (k + 1) as u32)).collect()
    }

    fn norm(label_id: u32, ncx: f64, ncy: f64) -> NormalizedDetection {
        NormalizedDetection { label_id, ncx, ncy, nw: 0.1, nh: 0.1, confidence: 0.9 }
    }

    #[test]
    fn normalizes_centroid_and_extent() {
        let objects = vec![Detection {
            label: "tv".into(),
            confidence: 0.8,
            bbox: Bbox::new(100.0, 100.0, 540.0, 380.0),
        }];
        let out = normalize_detections(&objects, &vocab(&["tv"]), 640.0, 480.0).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].ncx - 0.5).abs() < 1e-15);
        assert!((out[0].ncy - 0.5).abs() < 1e-15);
        assert!((out[0].nw - 440.0 / 640.0).abs() < 1e-15);
        assert!((out[0].nh - 280.0 / 480.0).abs() < 1e-15);
        assert_eq!(out[0].label_id, 1);
    }

    #[test]
    fn normalization_is_bit_exact_under_power_of_two_rescale() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ids = vocab(&["a", "b", "c"]);
        for _ in 0..100 {
            let objects: Vec<Detection> = (0..rng.gen_range(1..6))
                .map(|k| {
                    let x1 = rng.gen_range(0.0..500.0);
                    let y1 = rng.gen_range(0.0..300.0);
                    Detection {
                        label: ["a", "b", "c"][k % 3].into(),
                        confidence: rng.gen_range(0.0..1.0),
                        bbox: Bbox::new(x1, y1, x1 + rng.gen_range(1.0..100.0), y1 + rng.gen_range(1.0..100.0)),
                    }
                })
                .collect();
            for s in [0.5, 2.0] {
                let scaled: Vec<Detection> = objects
                    .iter()
                    .map(|o| Detection {
                        label: o.label.clone(),
                        confidence: o.confidence,
                        bbox: Bbox::new(o.bbox.x1 * s, o.bbox.y1 * s, o.bbox.x2 * s, o.bbox.y2 * s),
                    })
                    .collect();
                let base = normalize_detections(&objects, &ids, 640.0, 480.0).unwrap();
                let resized = normalize_detections(&scaled, &ids, 640.0 * s, 480.0 * s).unwrap();
                assert_eq!(base, resized);
            }
        }
    }

    #[test]
    fn zero_image_dims_error() {
        let objects = vec![];
        assert_eq!(
            normalize_detections(&objects, &vocab(&[]), 0.0, 480.0),
            Err(LabelMatchError::BadImageDims { width: 0.0, height: 480.0 })
        );
    }

    #[test]
    fn identical_sets_match_perfectly() {
        let a = vec![norm(1, 0.2, 0.2), norm(2, 0.8, 0.3), norm(3, 0.5, 0.7)];
        let result = match_labels(&a, &a, DEFAULT_MISMATCH_TOLERANCE);
        assert_eq!(result.correspondences, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(result.mismatch_fraction, 0.0);
        assert!(result.accepted);
        assert_eq!(result.match_score, 1.0);
    }

    #[test]
    fn five_versus_three_matching_sits_on_the_acceptance_boundary() {
        let a = vec![norm(1, 0.1, 0.1), norm(2, 0.2, 0.2), norm(3, 0.3, 0.3), norm(4, 0.4, 0.4), norm(5, 0.5, 0.5)];
        let b = vec![norm(1, 0.1, 0.1), norm(2, 0.2, 0.2), norm(3, 0.3, 0.3)];
        let result = match_labels(&a, &b, DEFAULT_MISMATCH_TOLERANCE);
        assert_eq!(result.correspondences.len(), 3);
        assert_eq!(result.mismatch_fraction, 0.4);
        assert!(result.accepted);

        let b2 = vec![norm(1, 0.1, 0.1), norm(2, 0.2, 0.2)];
        let result2 = match_labels(&a, &b2, DEFAULT_MISMATCH_TOLERANCE);
        assert_eq!(result2.mismatch_fraction, 0.6);
        assert!(!result2.accepted);
    }

    #[test]
    fn empty_side_is_never_accepted() {
        let a = vec![norm(1, 0.1, 0.1)];
        let result = match_labels(&a, &[], DEFAULT_MISMATCH_TOLERANCE);
        assert_eq!(result.mismatch_fraction, 1.0);
        assert!(!result.accepted);
        let result = match_labels(&[], &[], DEFAULT_MISMATCH_TOLERANCE);
        assert!(!result.accepted);
    }

    #[test]
    fn duplicate_labels_take_the_cheapest_assignment() {
        // Two 'cup' detections each side; crossing them costs more.
        let a = vec![norm(1, 0.1, 0.5), norm(1, 0.9, 0.5)];
        let b = vec![norm(1, 0.85, 0.5), norm(1, 0.15, 0.5)];
        let result = match_labels(&a, &b, DEFAULT_MISMATCH_TOLERANCE);
        assert_eq!(result.correspondences, vec![(0, 1), (1, 0)]);
        assert_eq!(result.mismatch_fraction, 0.0);
    }

    fn exhaustive_min_cost(costs: &[Vec<f64>]) -> f64 {
        // Brute force over permutations of the larger side.
        let rows = costs.len();
        let cols = costs[0].len();
        let mut best = f64::INFINITY;
        if rows <= cols {
            let mut perm: Vec<usize> = (0..cols).collect();
            permute(&mut perm, 0, &mut |p| {
                let total: f64 = (0..rows).map(|r| costs[r][p[r]]).sum();
                if total < best {
                    best = total;
                }
            });
        } else {
            let mut perm: Vec<usize> = (0..rows).collect();
            permute(&mut perm, 0, &mut |p| {
                let total: f64 = (0..cols).map(|c| costs[p[c]][c]).sum();
                if total < best {
                    best = total;
                }
            });
        }
        best
    }

    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for m in k..items.len() {
            items.swap(k, m);
            permute(items, k + 1, visit);
            items.swap(k, m);
        }
    }

    #[test]
    fn assignment_cost_equals_exhaustive_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let rows = rng.gen_range(1..=4);
            let cols = rng.gen_range(1..=4);
            let costs: Vec<Vec<f64>> =
                (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
            let pairs = min_cost_assignment(&costs);
            assert_eq!(pairs.len(), rows.min(cols));
            let total: f64 = pairs.iter().map(|&(r, c)| costs[r][c]).sum();
            let best = exhaustive_min_cost(&costs);
            assert!((total - best).abs() < 1e-12, "dp {total} vs brute force {best}");
        }
    }

    #[test]
    fn hausdorff_of_worked_example_is_one() {
        let a = vec![(0.0, 0.0), (1.0, 0.0)];
        let b = vec![(0.0, 0.0)];
        assert_eq!(hausdorff_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn hausdorff_is_symmetric_and_zero_on_self() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let a: Vec<(f64, f64)> =
                (0..rng.gen_range(1..6)).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
            let b: Vec<(f64, f64)> =
                (0..rng.gen_range(1..6)).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
            let ab = hausdorff_distance(&a, &b).unwrap();
            let ba = hausdorff_distance(&b, &a).unwrap();
            assert_eq!(ab, ba);
            assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        }
    }

    #[test]
    fn hausdorff_rejects_empty_input() {
        assert_eq!(hausdorff_distance(&[], &[(0.0, 0.0)]), Err(LabelMatchError::EmptyPointSet));
    }
}
