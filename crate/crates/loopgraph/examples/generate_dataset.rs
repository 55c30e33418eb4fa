//! Generates a small synthetic keyframe sequence in which the camera
//! pans over several places and later returns to one of them, then
//! shows what landed on disk: per-frame annotations, the ground-truth
//! revisit pairs, and the generator's config snapshot.
//!
//! Run with `cargo run --example generate_dataset`.

use loopgraph::synth::{generate_sequence, RevisitWindow, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = tempfile::tempdir()?;

    // 80 frames over 4 places; the second place (frames 20..40) is
    // re-imaged over the final 20 frames. Detections get 10% label
    // noise and 2 px of centroid jitter, like an imperfect detector.
    let cfg = SynthConfig {
        n_frames: 80,
        n_places: 4,
        n_labels: 9,
        objects_per_place: (4, 5),
        revisits: vec![RevisitWindow {
            original_start: 20,
            original_end: 40,
            revisit_start: 60,
            revisit_end: 80,
        }],
        min_revisit_gap: 20,
        n_decoy_places: 0,
        seed: 11,
        ..SynthConfig::benchmark()
    };

    let (dataset, stats) = generate_sequence(&cfg, out.path())?;

    println!("wrote {} into {}", "frames.jsonl / groundtruth.csv / config.snapshot", out.path().display());
    println!(
        "{} frames, {} ground-truth pairs, {} label flips, {} dropped detections",
        stats.n_frames, stats.n_truth_pairs, stats.label_flips, stats.dropped_objects
    );

    println!("\ncamera schedule (place per frame, one row per 20 frames):");
    for row in stats.place_of_frame.chunks(20) {
        let rendered: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        println!("  {}", rendered.join(" "));
    }

    let frame = &dataset.frames[25];
    println!("\nframe {} ({}x{}):", frame.frame_id, frame.width, frame.height);
    for obj in &frame.objects {
        let (cx, cy) = obj.bbox.centroid();
        println!(
            "  {:<12} confidence {:.2}  centroid ({cx:6.1}, {cy:6.1})",
            obj.label, obj.confidence
        );
    }
    println!("  plus {} keypoints with 256-bit descriptors", frame.keypoints.len());

    let truth = dataset.ground_truth.as_ref().expect("generator always writes ground truth");
    let first = truth.pairs.iter().next().expect("non-empty");
    let last = truth.pairs.iter().next_back().expect("non-empty");
    println!(
        "\nground truth spans ({}, {}) .. ({}, {}) — every pair images the same place twice",
        first.0, first.1, last.0, last.1
    );

    println!("\ngenerator snapshot written alongside the data:");
    let snapshot = std::fs::read_to_string(out.path().join("config.snapshot"))?;
    for line in snapshot.lines().take(6) {
        println!("  {line}");
    }
    println!("  ...");
    Ok(())
}
