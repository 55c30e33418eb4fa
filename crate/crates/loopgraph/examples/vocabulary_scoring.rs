//! Builds a visual-word vocabulary from binary keypoint descriptors by
//! k-majority clustering, turns frames into TF-IDF histograms, and
//! scores frame pairs by histogram overlap. Revisited places keep their
//! physical keypoints, so they share words; different places do not.
//!
//! Run with `cargo run --example vocabulary_scoring`.

use loopgraph::synth::{generate_dataset, RevisitWindow, SynthConfig};
use loopgraph::vbow::{build_vocabulary, frame_histogram, save_vocabulary, score_pair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_frames: 60,
        n_places: 3,
        n_labels: 9,
        revisits: vec![RevisitWindow {
            original_start: 20,
            original_end: 40,
            revisit_start: 40,
            revisit_end: 60,
        }],
        min_revisit_gap: 20,
        n_decoy_places: 0,
        seed: 21,
        ..SynthConfig::benchmark()
    };
    let (dataset, _) = generate_dataset(&cfg)?;

    let vocab = build_vocabulary(&dataset.frames, 32, 42)?;
    println!("clustered all descriptors into a {}-word vocabulary", vocab.len());

    let hist = frame_histogram(&vocab, &dataset.frames[25])?;
    println!(
        "frame 25 quantizes onto {} distinct words (weights sum to 1)",
        hist.weights().len()
    );

    let pair = |a: usize, b: usize| -> Result<f64, loopgraph::vbow::VbowError> {
        score_pair(Some(&vocab), &dataset.frames[a], &dataset.frames[b], None)
    };
    println!("\nhistogram similarity (1 = identical word distribution):");
    println!("  same place, 20 frames apart (25 vs 45): {:.4}", pair(25, 45)?);
    println!("  different places        (25 vs  5): {:.4}", pair(25, 5)?);
    println!("  different places        (45 vs 10): {:.4}", pair(45, 10)?);

    // Vocabularies persist in a compact binary format.
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("vocabulary.bin");
    save_vocabulary(&vocab, &path)?;
    println!(
        "\nvocabulary saved to {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    println!("\nscore sources, in order of precedence:");
    println!("  1. precomputed pair scores bundled with a dataset");
    println!("  2. per-frame histograms shipped in the annotations");
    println!("  3. histograms computed from descriptors via a vocabulary (this example)");
    Ok(())
}
