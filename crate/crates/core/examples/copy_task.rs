//! Trains the attention model to copy random token sequences and reports
//! greedy token accuracy on held-out pairs.
//!
//! Usage: cargo run --release --example copy_task [epochs] [batch] [--lr=RATE] [--seed=N] [--no-context]

use ctxnmt::corpus::RESERVED;
use ctxnmt::model::{token_accuracy, train, ModelConfig, TrainingConfig};
use ctxnmt::synthetic::copy_corpus;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let numbers: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let epochs = numbers.first().copied().unwrap_or(50);
    let vocab = RESERVED.len() + 20;
    let train_set = copy_corpus(500, 20, 3, 8, 1);
    let dev = copy_corpus(100, 20, 3, 8, 2);
    let test = copy_corpus(100, 20, 3, 8, 3);
    let mut mc = ModelConfig::new(vocab, vocab, 16, 32);
    mc.contextualize = !args.iter().any(|a| a == "--no-context");
    let mut cfg = TrainingConfig::new(mc);
    cfg.max_epochs = epochs;
    cfg.batch_size = numbers.get(1).copied().unwrap_or(2);
    cfg.patience = epochs;
    cfg.adam.learning_rate = args
        .iter()
        .find_map(|a| a.strip_prefix("--lr=").and_then(|v| v.parse().ok()))
        .unwrap_or(0.005);
    cfg.seed = args
        .iter()
        .find_map(|a| a.strip_prefix("--seed=").and_then(|v| v.parse().ok()))
        .unwrap_or(1);
    let start = std::time::Instant::now();
    let out = train(&train_set, &dev, &cfg, |m| {
        println!("{}\t{:.1}s", m.to_line(), start.elapsed().as_secs_f64())
    })
    .expect("training failed");
    let acc = token_accuracy(&out.model, &test).unwrap();
    println!("best epoch {}; test greedy token accuracy {:.2}%", out.best_epoch, 100.0 * acc);
}
