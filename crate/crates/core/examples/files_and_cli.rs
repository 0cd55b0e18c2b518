//! Point files in and out, dendrogram CSV round trips, and the `chac`
//! subcommands driven in-process.
//!
//! ```text
//! cargo run --example files_and_cli
//! ```

use std::error::Error;
use std::fs;

use centroid_hac::cli::run_cli_with;
use centroid_hac::geometry::Dataset;
use centroid_hac::hac::{run_hac, HacConfig};
use centroid_hac::io::{load_points, read_dendrogram, write_dendrogram, write_fvecs, write_labels, PointFormat};
use centroid_hac::metrics::Clustering;

fn chac(args: &[&str]) -> Result<String, Box<dyn Error>> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("chac").chain(args.iter().copied());
    let code = run_cli_with(argv, &mut out, &mut err);
    if code != 0 {
        return Err(format!("chac {} exited {code}: {}", args.join(" "), String::from_utf8_lossy(&err)).into());
    }
    Ok(String::from_utf8(out)?)
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|i| {
            let group = (i / 4) as f64;
            vec![group * 5.0 + (i % 4) as f64 * 0.1, group * -2.0 + (i % 2) as f64 * 0.3]
        })
        .collect();
    let data = Dataset::new(rows)?;

    let fvecs = dir.path().join("points.fvecs");
    write_fvecs(&data, &fvecs)?;
    let reloaded = load_points(&fvecs, PointFormat::from_path(&fvecs))?;
    println!("fvecs round trip: {} points, dim {}", reloaded.len(), reloaded.dim());

    let (dend, _) = run_hac(&data, &HacConfig::exact())?;
    let csv = dir.path().join("tree.csv");
    write_dendrogram(&dend, &csv)?;
    assert_eq!(read_dendrogram(&csv)?, dend);
    println!("{}", fs::read_to_string(&csv)?.lines().take(3).collect::<Vec<_>>().join("\n"));

    let labels = dir.path().join("labels.txt");
    write_labels(&Clustering::from_labels(&(0..12).map(|i| i / 4).collect::<Vec<_>>()), &labels)?;

    let (input, tree, stats) = (
        fvecs.to_str().ok_or("path")?,
        dir.path().join("cli_tree.csv"),
        dir.path().join("stats.json"),
    );
    chac(&[
        "cluster", "--input", input, "--mode", "bucket", "--epsilon", "0.2",
        "--output", tree.to_str().ok_or("path")?, "--stats-out", stats.to_str().ok_or("path")?,
    ])?;
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&stats)?)?;
    println!("cluster: {} merges, gamma {}", report["stats"]["merges"], report["gamma"]);

    let scores = chac(&[
        "metrics", "--dendrogram", tree.to_str().ok_or("path")?, "--labels", labels.to_str().ok_or("path")?,
        "--input", input,
    ])?;
    let scores: serde_json::Value = serde_json::from_str(&scores)?;
    println!("metrics: best ARI {}, purity {}", scores["ari"]["score"], scores["purity"]["value"]);

    let check = chac(&["invariant-check", "--input", input, "--epsilon", "0.2"])?;
    println!("invariant-check: {}", check.trim());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
