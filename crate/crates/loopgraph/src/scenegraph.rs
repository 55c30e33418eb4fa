//! Tiered scene-graph construction for one frame.
//!
//! Filtered detections become tier-1 anchor nodes, fully connected among
//! themselves. Keypoints inside (or on the boundary of) a bounding box
//! attach as tier-2 nodes to their anchor and inherit its label;
//! keypoints outside every box but within a pixel margin band attach as
//! tier-3 nodes with the background label 0. Each keypoint joins at most
//! one anchor: nearest box centroid first, then smaller box area, then
//! lower object index. Keypoints beyond the margin band are dropped.
//!
//! `flat` mode is the structural ablation: every keypoint becomes a node
//! (recorded as tier 3) with label 0 and no edges at all.
//!
//! Node features are resolution-independent:
//! `(tier, label_id, ncx, ncy, nw, nh, confidence, vbow_weight)`, with
//! extents and confidence zeroed for keypoint nodes. Edge features are
//! `(distance, dncx, dncy, tier_code)` measured between the canonically
//! ordered endpoints on the normalized plane.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::config::TierMode;
use crate::ingest::{Detection, FrameAnnotation, Keypoint};
use crate::labelmatch::{normalize_detections, LabelMatchError, NormalizedDetection};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub node_id: usize,
    pub tier: u8,
    pub wl_label: u32,
    pub features: [f64; 8],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    /// Lower endpoint id; edges are undirected but stored canonically.
    pub u: usize,
    pub v: usize,
    pub features: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    pub frame_id: u32,
    pub mode: TierMode,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub anchor_count: usize,
    neighbors: Vec<Vec<usize>>,
}

impl SceneGraph {
    /// Assembles a graph directly from records, for graphs that come
    /// from sources other than frame annotations. Node ids must equal
    /// their positions and edges must be canonical (`u < v`, in range).
    pub fn from_parts(frame_id: u32, mode: TierMode, nodes: Vec<NodeRecord>, edges: Vec<EdgeRecord>) -> SceneGraph {
        for (k, n) in nodes.iter().enumerate() {
            assert_eq!(n.node_id, k, "node ids must match their positions");
        }
        let mut neighbors = vec![Vec::new(); nodes.len()];
        for e in &edges {
            assert!(e.u < e.v && e.v < nodes.len(), "edge endpoints must be canonical and in range");
            neighbors[e.u].push(e.v);
            neighbors[e.v].push(e.u);
        }
        let anchor_count = nodes.iter().filter(|n| n.tier == 1).count();
        SceneGraph { frame_id, mode, nodes, edges, anchor_count, neighbors }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_anchors(&self) -> bool {
        self.anchor_count > 0
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    /// Writes `nodes.csv` and `edges.csv` for inspection.
    pub fn export_csv(&self, nodes_path: &Path, edges_path: &Path) -> io::Result<()> {
        let mut nodes = String::from("node_id,tier,wl_label,f0,f1,f2,f3,f4,f5,f6,f7\n");
        for n in &self.nodes {
            nodes.push_str(&format!("{},{},{}", n.node_id, n.tier, n.wl_label));
            for f in n.features {
                nodes.push_str(&format!(",{f:.6}"));
            }
            nodes.push('\n');
        }
        fs::write(nodes_path, nodes)?;

        let mut edges = String::from("u,v,e0,e1,e2,e3\n");
        for e in &self.edges {
            edges.push_str(&format!("{},{}", e.u, e.v));
            for f in e.features {
                edges.push_str(&format!(",{f:.6}"));
            }
            edges.push('\n');
        }
        fs::write(edges_path, edges)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    LabelMatch(#[from] LabelMatchError),
}

/// Decides which anchor (if any) a keypoint belongs to, and at which
/// tier. Containment (boundary inclusive) wins over the margin band;
/// among qualifying boxes the nearest centroid is chosen, with ties
/// broken by smaller box area and then lower object index.
pub fn assign_anchor(kp: &Keypoint, objects: &[Detection], margin_px: f64) -> Option<(usize, u8)> {
    let best_among = |candidates: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        let mut best: Option<(f64, f64, usize)> = None;
        for k in candidates {
            let (cx, cy) = objects[k].bbox.centroid();
            let dist = ((kp.x - cx).powi(2) + (kp.y - cy).powi(2)).sqrt();
            let key = (dist, objects[k].bbox.area(), k);
            let better = match best {
                None => true,
                Some(cur) => key < cur,
            };
            if better {
                best = Some(key);
            }
        }
        best.map(|(_, _, k)| k)
    };

    let mut containing = (0..objects.len()).filter(|&k| objects[k].bbox.contains(kp.x, kp.y)).peekable();
    if containing.peek().is_some() {
        return best_among(&mut containing).map(|k| (k, 2));
    }
    let mut banded = (0..objects.len())
        .filter(|&k| objects[k].bbox.expanded(margin_px).contains(kp.x, kp.y))
        .peekable();
    if banded.peek().is_some() {
        return best_among(&mut banded).map(|k| (k, 3));
    }
    None
}

/// Builds the scene graph of one frame from its already-filtered
/// detections. `vbow_weight` is a per-frame scalar copied into every
/// node's last feature slot (0 when no visual-word data exists).
pub fn build_graph(
    frame: &FrameAnnotation,
    filtered: &[Detection],
    label_ids: &BTreeMap<String, u32>,
    mode: TierMode,
    margin_px: f64,
    vbow_weight: f64,
) -> Result<SceneGraph, GraphError> {
    let normalized = normalize_detections(filtered, label_ids, frame.width, frame.height)?;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut anchor_count = 0;

    match mode {
        TierMode::Flat => {
            for kp in &frame.keypoints {
                let node_id = nodes.len();
                nodes.push(keypoint_node(node_id, 3, 0, kp, frame, vbow_weight));
            }
        }
        TierMode::TwoTier | TierMode::ThreeTier => {
            anchor_count = normalized.len();
            for (k, det) in normalized.iter().enumerate() {
                nodes.push(anchor_node(k, det, vbow_weight));
            }
            for i in 0..normalized.len() {
                for j in i + 1..normalized.len() {
                    edges.push(edge_between(&nodes[i], &nodes[j], 1.0));
                }
            }
            for kp in &frame.keypoints {
                let Some((anchor, tier)) = assign_anchor(kp, filtered, margin_px) else { continue };
                if tier == 3 && mode == TierMode::TwoTier {
                    continue;
                }
                let wl_label = if tier == 2 { normalized[anchor].label_id } else { 0 };
                let node_id = nodes.len();
                nodes.push(keypoint_node(node_id, tier, wl_label, kp, frame, vbow_weight));
                edges.push(edge_between(&nodes[anchor], &nodes[node_id], tier as f64));
            }
        }
    }

    let mut neighbors = vec![Vec::new(); nodes.len()];
    for e in &edges {
        neighbors[e.u].push(e.v);
        neighbors[e.v].push(e.u);
    }

    Ok(SceneGraph { frame_id: frame.frame_id, mode, nodes, edges, anchor_count, neighbors })
}

fn anchor_node(node_id: usize, det: &NormalizedDetection, vbow_weight: f64) -> NodeRecord {
    NodeRecord {
        node_id,
        tier: 1,
        wl_label: det.label_id,
        features: [1.0, det.label_id as f64, det.ncx, det.ncy, det.nw, det.nh, det.confidence, vbow_weight],
    }
}

fn keypoint_node(
    node_id: usize,
    tier: u8,
    wl_label: u32,
    kp: &Keypoint,
    frame: &FrameAnnotation,
    vbow_weight: f64,
) -> NodeRecord {
    NodeRecord {
        node_id,
        tier,
        wl_label,
        features: [
            tier as f64,
            wl_label as f64,
            kp.x / frame.width,
            kp.y / frame.height,
            0.0,
            0.0,
            0.0,
            vbow_weight,
        ],
    }
}

fn edge_between(a: &NodeRecord, b: &NodeRecord, tier_code: f64) -> EdgeRecord {
    let (u, v) = if a.node_id < b.node_id { (a, b) } else { (b, a) };
    let dncx = v.features[2] - u.features[2];
    let dncy = v.features[3] - u.features[3];
    let dist = (dncx * dncx + dncy * dncy).sqrt();
    EdgeRecord { u: u.node_id, v: v.node_id, features: [dist, dncx, dncy, tier_code] }
}
