//! Iterative label-refinement graph kernel.
//!
//! Two graphs are compared by refining node labels side by side: at each
//! round a node's new label is a compressed id for the pair
//! `(own label, sorted multiset of neighbour labels)`, drawn from one
//! table shared by both graphs so identical neighbourhoods receive
//! identical ids no matter which graph they live in. The kernel value is
//! the sum, over rounds 0..=h, of the inner products of the two label
//! histograms. Round 0 uses the raw structural labels; edge attributes
//! do not participate.
//!
//! Refinement only ever splits label classes, so once a round leaves the
//! number of distinct labels unchanged the partition is final and every
//! later round contributes the same inner product. `wl_kernel_raw`
//! exploits that to stop early while returning exactly the full sum.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::scenegraph::SceneGraph;

/// Count of nodes per compressed label for one refinement round.
pub type LabelHistogram = BTreeMap<u64, u64>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("graph for frame {0} has no nodes")]
    EmptyGraph(u32),
}

fn histogram(labels: &[u64]) -> LabelHistogram {
    let mut h = LabelHistogram::new();
    for &l in labels {
        *h.entry(l).or_insert(0) += 1;
    }
    h
}

fn distinct_count(la: &[u64], lb: &[u64]) -> usize {
    la.iter().chain(lb.iter()).collect::<BTreeSet<_>>().len()
}

/// One joint refinement round. Nodes of `a` are relabeled first (in id
/// order), then nodes of `b`, drawing fresh ids from `next_id`.
fn refine_once(
    a: &SceneGraph,
    la: &[u64],
    b: &SceneGraph,
    lb: &[u64],
    next_id: &mut u64,
) -> (Vec<u64>, Vec<u64>) {
    let mut table: BTreeMap<(u64, Vec<u64>), u64> = BTreeMap::new();
    let mut relabel = |g: &SceneGraph, labels: &[u64]| -> Vec<u64> {
        (0..labels.len())
            .map(|i| {
                let mut nb: Vec<u64> = g.neighbors(i).iter().map(|&j| labels[j]).collect();
                nb.sort_unstable();
                *table.entry((labels[i], nb)).or_insert_with(|| {
                    let id = *next_id;
                    *next_id += 1;
                    id
                })
            })
            .collect()
    };
    let na = relabel(a, la);
    let nb = relabel(b, lb);
    (na, nb)
}

fn initial_labels(g: &SceneGraph) -> Vec<u64> {
    g.nodes.iter().map(|n| n.wl_label as u64).collect()
}

/// Materializes the label histograms of both graphs for every round
/// 0..=iterations (no early stopping). Mostly useful for inspection and
/// for cross-checking the shortcut in `wl_kernel_raw`.
pub fn wl_refine(a: &SceneGraph, b: &SceneGraph, iterations: u32) -> Vec<(LabelHistogram, LabelHistogram)> {
    let mut la = initial_labels(a);
    let mut lb = initial_labels(b);
    let mut next_id = la.iter().chain(lb.iter()).copied().max().unwrap_or(0) + 1;
    let mut out = vec![(histogram(&la), histogram(&lb))];
    for _ in 0..iterations {
        let (na, nb) = refine_once(a, &la, b, &lb, &mut next_id);
        la = na;
        lb = nb;
        out.push((histogram(&la), histogram(&lb)));
    }
    out
}

/// Inner product of two label histograms.
pub fn vertex_histogram_product(a: &LabelHistogram, b: &LabelHistogram) -> u64 {
    let mut sum = 0u64;
    let mut ib = b.iter().peekable();
    for (la, ca) in a {
        while let Some(&(lb, _)) = ib.peek() {
            if lb < la {
                ib.next();
            } else {
                break;
            }
        }
        if let Some(&(lb, cb)) = ib.peek() {
            if lb == la {
                sum += ca * cb;
            }
        }
    }
    sum
}

/// Unnormalized kernel value: the sum over rounds 0..=iterations of the
/// histogram inner products, computed with the exact early-stop shortcut.
pub fn wl_kernel_raw(a: &SceneGraph, b: &SceneGraph, iterations: u32) -> Result<u64, KernelError> {
    if a.nodes.is_empty() {
        return Err(KernelError::EmptyGraph(a.frame_id));
    }
    if b.nodes.is_empty() {
        return Err(KernelError::EmptyGraph(b.frame_id));
    }
    let mut la = initial_labels(a);
    let mut lb = initial_labels(b);
    let mut next_id = la.iter().chain(lb.iter()).copied().max().unwrap_or(0) + 1;
    let mut distinct = distinct_count(&la, &lb);
    let mut raw = vertex_histogram_product(&histogram(&la), &histogram(&lb));
    for t in 1..=iterations {
        let (na, nb) = refine_once(a, &la, b, &lb, &mut next_id);
        la = na;
        lb = nb;
        let k_t = vertex_histogram_product(&histogram(&la), &histogram(&lb));
        raw += k_t;
        let nd = distinct_count(&la, &lb);
        if nd == distinct {
            raw += u64::from(iterations - t) * k_t;
            break;
        }
        distinct = nd;
    }
    Ok(raw)
}

/// Kernel value, optionally normalized by the geometric mean of the two
/// self-kernels so identical graphs score 1.
pub fn wl_kernel(a: &SceneGraph, b: &SceneGraph, iterations: u32, normalize: bool) -> Result<f64, KernelError> {
    let raw = wl_kernel_raw(a, b, iterations)? as f64;
    if !normalize {
        return Ok(raw);
    }
    let saa = wl_kernel_raw(a, a, iterations)? as f64;
    let sbb = wl_kernel_raw(b, b, iterations)? as f64;
    Ok(raw / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TierMode;
    use crate::scenegraph::{EdgeRecord, NodeRecord, SceneGraph};
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(frame_id: u32, labels: &[u32], edges: &[(usize, usize)]) -> SceneGraph {
        let nodes = labels
            .iter()
            .enumerate()
            .map(|(k, &l)| NodeRecord { node_id: k, tier: 1, wl_label: l, features: [0.0; 8] })
            .collect();
        let edges = edges
            .iter()
            .map(|&(u, v)| EdgeRecord { u: u.min(v), v: u.max(v), features: [0.0; 4] })
            .collect();
        SceneGraph::from_parts(frame_id, TierMode::TwoTier, nodes, edges)
    }

    #[test]
    fn histogram_inner_product_counts_shared_labels() {
        let a = LabelHistogram::from([(1, 2), (2, 1)]);
        let b = LabelHistogram::from([(1, 1), (2, 2)]);
        assert_eq!(vertex_histogram_product(&a, &b), 4);
        assert_eq!(vertex_histogram_product(&a, &LabelHistogram::new()), 0);
    }

    #[test]
    fn hand_worked_path_pair_is_frozen() {
        // Path 1-2-1 versus the same labels with one edge missing.
        let g1 = graph(0, &[1, 2, 1], &[(0, 1), (1, 2)]);
        let g2 = graph(1, &[1, 2, 1], &[(0, 1)]);
        assert_eq!(wl_kernel_raw(&g1, &g2, 0).unwrap(), 5);
        assert_eq!(wl_kernel_raw(&g1, &g2, 1).unwrap(), 7);
        assert_eq!(wl_kernel_raw(&g1, &g2, 2).unwrap(), 7);
        assert_eq!(wl_kernel_raw(&g1, &g2, 50).unwrap(), 7);
        assert_eq!(wl_kernel_raw(&g1, &g1, 1).unwrap(), 10);
        assert_eq!(wl_kernel_raw(&g2, &g2, 1).unwrap(), 8);
        let norm = wl_kernel(&g1, &g2, 1, true).unwrap();
        assert!((norm - 7.0 / 80f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_node_pair_scores_one_per_round() {
        let a = graph(0, &[3], &[]);
        let b = graph(1, &[3], &[]);
        assert_eq!(wl_kernel_raw(&a, &b, 0).unwrap(), 1);
        assert_eq!(wl_kernel_raw(&a, &b, 1).unwrap(), 2);
        assert_eq!(wl_kernel_raw(&a, &b, 7).unwrap(), 8);
    }

    #[test]
    fn unlabeled_edgeless_graphs_always_normalize_to_one() {
        let a = graph(0, &[0, 0, 0], &[]);
        let b = graph(1, &[0, 0, 0, 0, 0], &[]);
        assert_eq!(wl_kernel_raw(&a, &b, 2).unwrap(), 45);
        assert_eq!(wl_kernel(&a, &b, 50, true).unwrap(), 1.0);
    }

    #[test]
    fn empty_graphs_are_rejected() {
        let empty = graph(9, &[], &[]);
        let one = graph(1, &[1], &[]);
        assert_eq!(wl_kernel_raw(&empty, &one, 3), Err(KernelError::EmptyGraph(9)));
        assert_eq!(wl_kernel_raw(&one, &empty, 3), Err(KernelError::EmptyGraph(9)));
    }

    fn random_graph(rng: &mut ChaCha8Rng, frame_id: u32) -> SceneGraph {
        let n = rng.gen_range(1..9usize);
        let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let mut all_pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        all_pairs.shuffle(rng);
        let m = rng.gen_range(0..=all_pairs.len());
        graph(frame_id, &labels, &all_pairs[..m])
    }

    #[test]
    fn kernel_is_symmetric_and_self_normalizes_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for round in 0..120 {
            let a = random_graph(&mut rng, round);
            let b = random_graph(&mut rng, 1000 + round);
            let h = rng.gen_range(0..6);
            assert_eq!(wl_kernel_raw(&a, &b, h).unwrap(), wl_kernel_raw(&b, &a, h).unwrap());
            assert!((wl_kernel(&a, &a, h, true).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn raw_kernel_is_monotone_in_the_iteration_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for round in 0..60 {
            let a = random_graph(&mut rng, round);
            let b = random_graph(&mut rng, 1000 + round);
            let mut prev = 0;
            for h in 0..8 {
                let raw = wl_kernel_raw(&a, &b, h).unwrap();
                assert!(raw >= prev);
                prev = raw;
            }
        }
    }

    #[test]
    fn relabeling_node_ids_does_not_change_the_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for round in 0..80 {
            let a = random_graph(&mut rng, round);
            let b = random_graph(&mut rng, 1000 + round);
            let mut perm: Vec<usize> = (0..a.nodes.len()).collect();
            perm.shuffle(&mut rng);
            // position -> new id
            let nodes = {
                let mut nodes: Vec<NodeRecord> = vec![
                    NodeRecord { node_id: 0, tier: 1, wl_label: 0, features: [0.0; 8] };
                    a.nodes.len()
                ];
                for (old, n) in a.nodes.iter().enumerate() {
                    nodes[perm[old]] = NodeRecord { node_id: perm[old], ..n.clone() };
                }
                nodes
            };
            let edges = a
                .edges
                .iter()
                .map(|e| {
                    let (u, v) = (perm[e.u].min(perm[e.v]), perm[e.u].max(perm[e.v]));
                    EdgeRecord { u, v, features: e.features }
                })
                .collect();
            let pa = SceneGraph::from_parts(a.frame_id, a.mode, nodes, edges);
            let h = rng.gen_range(0..5);
            assert_eq!(wl_kernel_raw(&a, &b, h).unwrap(), wl_kernel_raw(&pa, &b, h).unwrap());
        }
    }

    #[test]
    fn early_stop_matches_the_materialized_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for round in 0..80 {
            let a = random_graph(&mut rng, round);
            let b = random_graph(&mut rng, 1000 + round);
            let full: u64 = wl_refine(&a, &b, 10)
                .iter()
                .map(|(ha, hb)| vertex_histogram_product(ha, hb))
                .sum();
            assert_eq!(wl_kernel_raw(&a, &b, 10).unwrap(), full);
        }
    }
}
