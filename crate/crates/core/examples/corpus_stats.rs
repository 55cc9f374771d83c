//! Builds vocabularies, filters a planted parallel corpus, and compares
//! coverage before and after symbolization.
//!
//! Usage: cargo run --example corpus_stats [lines] [vocab]

use ctxnmt::corpus::{build_vocab, corpus_stats, filter_pairs, FilterConfig, SentencePair};
use ctxnmt::symbolizer::{symbolize_pair, SymbolizerConfig};
use ctxnmt::synthetic::planted_symbol_corpus;

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let lines = args.next().flatten().unwrap_or(1000);
    let k = args.next().flatten().unwrap_or(200);
    let pairs = planted_symbol_corpus(lines, 1);
    let cfg = SymbolizerConfig::default();
    let before: Vec<Vec<String>> = pairs.iter().map(|p| p.source.clone()).collect();
    let sym: Vec<_> = pairs.iter().enumerate().map(|(i, p)| symbolize_pair(i + 1, &p.source, &p.target, &cfg)).collect();
    let after: Vec<Vec<String>> = sym.iter().map(|s| s.source.clone()).collect();

    let vb = build_vocab(before.iter().map(|l| l.as_slice()), k).unwrap();
    let va = build_vocab(after.iter().map(|l| l.as_slice()), k).unwrap();
    let (b, a) = (corpus_stats(&before, &vb), corpus_stats(&after, &va));
    println!("{:<16}{:>10}{:>10}", "", "Before", "After");
    println!("{:<16}{:>10}{:>10}", "Unique words", b.unique, a.unique);
    println!("{:<16}{:>10}{:>10}", "Total words", b.total, a.total);
    println!("{:<16}{:>10.1}{:>10.1}", "Coverage (%)", b.coverage, a.coverage);

    let tv = build_vocab(sym.iter().map(|s| s.target.as_slice()), k).unwrap();
    let corpus: Vec<SentencePair> = sym
        .into_iter()
        .enumerate()
        .map(|(i, s)| SentencePair { src: s.source, tgt: s.target, line: i + 1 })
        .collect();
    let (kept, report) = filter_pairs(corpus, &va, &tv, &FilterConfig { max_len: 20, ..FilterConfig::default() });
    println!("\nfilter: kept {} of {lines}; first rejections {:?}", kept.len(), &report.rejected[..report.rejected.len().min(3)]);
}
