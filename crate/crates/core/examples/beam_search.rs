//! Decodes with greedy search and beam search of several widths on a small
//! model with random weights.
//!
//! Usage: cargo run --example beam_search [seed]

use ctxnmt::corpus::EOS;
use ctxnmt::model::{beam_search, greedy_decode, Model, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut model = Model::new(ModelConfig::new(12, 12, 8, 8), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in model.params.tensors_mut() {
        t.values_mut().iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    }
    let src = [5, 6, 7, 8, EOS];
    let g = greedy_decode(&model, &src, Some(8)).unwrap();
    println!("greedy      {:?}  log p = {:.4}", g.tokens, g.log_prob);
    for width in [1, 2, 4, 12] {
        let b = beam_search(&model, &src, width, Some(8)).unwrap();
        println!("beam {width:<2}     {:?}  log p = {:.4}  finished = {}", b.tokens, b.log_prob, b.finished);
    }
}
