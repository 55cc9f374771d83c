//! Corpus-level BLEU-4 on a few tokenized sentences.
//!
//! Usage: cargo run --example bleu_score

use ctxnmt::bleu::corpus_bleu;

fn toks(s: &str) -> Vec<String> {
    s.split(' ').map(str::to_string).collect()
}

fn main() {
    let refs = vec![
        toks("the cat is on the mat"),
        toks("there is a cat on the mat"),
        toks("the finals were held in San Diego"),
    ];
    let hyps = vec![
        toks("the cat is on the mat"),
        toks("a cat is on the mat"),
        toks("the finals took place in San Diego"),
    ];
    println!("{}", corpus_bleu(&hyps, &refs));
    let clipped = corpus_bleu(&[toks("the the the")], &[toks("the cat")]);
    println!("clipped unigram precision of \"the the the\" against \"the cat\": {}", clipped.precisions[0]);
}
