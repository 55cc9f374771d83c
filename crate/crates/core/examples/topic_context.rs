//! Compares the attention model with and without contextual embedding masks
//! on a task where every source word has two translations and a topic marker
//! anywhere in the sentence decides between them.
//!
//! Usage: cargo run --release --example topic_context [seeds] [epochs]

use ctxnmt::model::{evaluate_nll, train, ModelConfig, TrainingConfig};
use ctxnmt::synthetic::{budget_matched_baseline, TopicTask};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let seeds = args.next().flatten().unwrap_or(5) as u64;
    let epochs = args.next().flatten().unwrap_or(60);
    let task = TopicTask { words: 8, min_len: 4, max_len: 8 };
    let mut with = ModelConfig::new(task.src_vocab(), task.tgt_vocab(), 16, 16);
    with.context = 16;
    let without = budget_matched_baseline(&with);
    println!("baseline sizes: enc {} dec {} attn {}", without.enc_hidden, without.dec_hidden, without.attn_hidden);
    for seed in 0..seeds {
        let train_set = task.corpus(400, 100 + seed);
        let dev = task.corpus(100, 200 + seed);
        let mut nll = Vec::new();
        for mc in [&with, &without] {
            let mut cfg = TrainingConfig::new(mc.clone());
            cfg.max_epochs = epochs;
            cfg.patience = epochs;
            cfg.batch_size = 4;
            cfg.adam.learning_rate = 0.01;
            cfg.seed = seed;
            let start = std::time::Instant::now();
            let out = train(&train_set, &dev, &cfg, |_| {}).expect("training");
            let (loss, tokens) = evaluate_nll(&out.model, &dev).unwrap();
            nll.push(loss / tokens as f64);
            eprintln!("seed {seed} context {} : {:.4} ({:.0}s)", mc.contextualize, nll[nll.len() - 1], start.elapsed().as_secs_f64());
        }
        println!("seed {seed}\twith masks {:.4}\twithout {:.4}", nll[0], nll[1]);
    }
}
