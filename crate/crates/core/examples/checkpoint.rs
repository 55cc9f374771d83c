//! Saves a model, reloads it, and confirms the reloaded copy scores a
//! sentence pair identically.
//!
//! Usage: cargo run --example checkpoint

use ctxnmt::corpus::EOS;
use ctxnmt::model::{Model, ModelConfig};

fn main() {
    let model = Model::new(ModelConfig::new(10, 10, 6, 5), 3).unwrap();
    let dir = std::env::temp_dir().join(format!("ctxnmt-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.ckpt");
    model.save(&path).unwrap();
    let size = std::fs::metadata(&path).unwrap().len();
    let back = Model::load(&path).unwrap();
    let (src, tgt) = ([4, 5, 6, EOS], [6, 5, EOS]);
    let a = model.sentence_loss(&src, &tgt).unwrap();
    let b = back.sentence_loss(&src, &tgt).unwrap();
    println!("checkpoint {} ({size} bytes)", path.display());
    println!("loss before save {a:.12}, after load {b:.12}, bitwise equal: {}", a.to_bits() == b.to_bits());
    std::fs::remove_dir_all(&dir).unwrap();
}
