//! Shows the temporal term that suppresses matches between frames shot
//! moments apart: nearby frames look alike whether or not the camera
//! returned anywhere, so their kernel similarity is discounted before
//! thresholding. The clamped form fades to exactly zero once the frame
//! gap is large enough to be interesting.
//!
//! Run with `cargo run --example temporal_scoring`.

use loopgraph::config::{PipelineConfig, TemporalMode};
use loopgraph::predictor::{combined_similarity, temporal_constraint, TemporalConfig};
use loopgraph::scenegraph::{EdgeRecord, NodeRecord, SceneGraph};
use loopgraph::config::TierMode;

fn star_graph(labels: &[u32]) -> SceneGraph {
    let nodes = labels
        .iter()
        .enumerate()
        .map(|(k, &wl_label)| NodeRecord { node_id: k, tier: 1, wl_label, features: [0.0; 8] })
        .collect();
    let edges = (1..labels.len())
        .map(|v| EdgeRecord { u: 0, v, features: [0.0; 4] })
        .collect();
    SceneGraph::from_parts(0, TierMode::TwoTier, nodes, edges)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PipelineConfig::default();
    let clamped = TemporalConfig::from_pipeline(&cfg);
    let literal = TemporalConfig { mode: TemporalMode::Literal, ..clamped.clone() };

    println!("temporal term per frame gap (beta_s = {}, alpha = {}):", cfg.beta_s, cfg.alpha);
    println!("{:>5}  {:>12}  {:>12}", "gap", "literal form", "clamped form");
    for gap in [1u32, 2, 3, 5, 10, 30, 100] {
        let lit = temporal_constraint(0, gap, &literal)?;
        let cl = temporal_constraint(0, gap, &clamped)?;
        println!("{gap:>5}  {lit:>12.4}  {cl:>12.4}");
    }
    let cutoff = (1.0 / cfg.beta_s.sqrt()).ceil() as u32;
    println!("\nclamped penalty hits exactly zero from gap {cutoff} on (1/sqrt(beta_s))");

    // Combined score on identical graphs: the kernel says 1.0 either
    // way, but with a slower fade (beta_s = 0.01 keeps the penalty
    // alive out to gap 10) a 2-frame gap is suppressed while a 50-frame
    // gap is untouched.
    let slow = TemporalConfig { beta_s: 0.01, ..clamped };
    let g = star_graph(&[4, 1, 1, 2, 3]);
    let near = combined_similarity(&g, &g, 10, 12, cfg.iterations, &slow)?;
    let far = combined_similarity(&g, &g, 10, 60, cfg.iterations, &slow)?;
    println!("\nidentical graphs, clamped mode with beta_s = 0.01,");
    println!("score = kernel - alpha * penalty:");
    println!(
        "  gap  2: kernel {:.3}, penalty {:.3}, score {:+.3}  (suppressed)",
        near.k_norm, near.tc, near.s
    );
    println!(
        "  gap 50: kernel {:.3}, penalty {:.3}, score {:+.3}  (eligible)",
        far.k_norm, far.tc, far.s
    );
    Ok(())
}
