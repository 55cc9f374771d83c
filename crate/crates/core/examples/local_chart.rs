//! Nearest neighbours and a PCA chart over planted embeddings, printed in
//! the per-axis layout used by the `chart` command.
//!
//! Usage: cargo run --example local_chart [seed]

use ctxnmt::chart::{chart_for_word, nearest_neighbors, render_chart_table, Centering, EmbeddingIndex, Metric};
use ctxnmt::synthetic::planted_chart;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let planted = planted_chart(50, 20, 1e-3, seed);
    let index = EmbeddingIndex::from_rows(50, planted.words.iter().cloned().zip(planted.vectors.iter().cloned())).unwrap();
    for nb in nearest_neighbors(&index, "w0", 6, Metric::Cosine).unwrap() {
        println!("{:<4} {:.4}", nb.word, nb.score);
    }
    let chart = chart_for_word(&index, "w0", 20, Metric::Cosine, Centering::Mean).unwrap();
    let cos = |axis: &[f64], dir: &[f64]| axis.iter().zip(dir).map(|(a, b)| a * b).sum::<f64>().abs();
    println!("\neigenvalues {:.4?}", &chart.eigenvalues[..3]);
    println!("|cos(axis 1, u)| = {:.5}, |cos(axis 2, v)| = {:.5}\n", cos(&chart.axes[0], &planted.u), cos(&chart.axes[1], &planted.v));
    print!("{}", render_chart_table(&chart, 2, 5));
}
