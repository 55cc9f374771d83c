mod common;

use common::{counters_ok, coverage_before_after, symbol_failures, SymbolFailures};
use ctxnmt::symbolizer::{
    desymbolize, desymbolize_side, symbol_of, symbolize_pair, symbolize_source_only, Fallback, Side,
    SymbolizerConfig,
};
use ctxnmt::synthetic::planted_symbol_corpus;
use proptest::prelude::*;

fn toks(s: &str) -> Vec<String> {
    s.split_ascii_whitespace().map(str::to_string).collect()
}

#[test]
fn planted_corpus_round_trips_with_invariants() {
    let pairs = planted_symbol_corpus(1000, 7);
    assert_eq!(symbol_failures(&pairs, &SymbolizerConfig::default()), SymbolFailures::default());
}

#[test]
fn planted_corpus_exercises_every_symbol_kind() {
    let pairs = planted_symbol_corpus(200, 3);
    let cfg = SymbolizerConfig::default();
    let mut kinds = std::collections::BTreeSet::new();
    for (i, p) in pairs.iter().enumerate() {
        let out = symbolize_pair(i + 1, &p.source, &p.target, &cfg);
        kinds.extend(out.rules.rules.iter().map(|r| r.symbol.kind));
    }
    assert_eq!(kinds.len(), 3);
}

#[test]
fn mismatched_acronyms_are_symbolized() {
    let cfg = SymbolizerConfig::default();
    let out = symbolize_pair(1, &toks("the IMF said"), &toks("le FMI a dit"), &cfg);
    assert_eq!(out.source, toks("the <C_1> said"));
    assert_eq!(out.target, toks("le <C_1> a dit"));
}

#[test]
fn symbolization_raises_coverage_and_shrinks_vocabulary() {
    let pairs = planted_symbol_corpus(1000, 11);
    for target_side in [false, true] {
        let (before, after) = coverage_before_after(&pairs, 200, target_side);
        assert!(after.coverage > before.coverage, "{before:?} -> {after:?}");
        assert!(after.unique < before.unique, "{before:?} -> {after:?}");
    }
}

#[test]
fn source_only_mode_restores_source() {
    let cfg = SymbolizerConfig::default();
    let line = toks("On June 2nd the IMF met in San Diego at 10:30 for 1,500 people");
    let (out, rules) = symbolize_source_only(4, &line, None, &cfg);
    assert!(out.iter().any(|t| symbol_of(t).is_some()));
    assert!(counters_ok(&out));
    assert_eq!(desymbolize_side(&out, &rules, Side::Source, Fallback::Literal).tokens, line);
}

#[test]
fn output_is_deterministic() {
    let pairs = planted_symbol_corpus(300, 5);
    let cfg = SymbolizerConfig::default();
    let render = || -> String {
        pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let o = symbolize_pair(i + 1, &p.source, &p.target, &cfg);
                format!("{}\t{}\t{}\n", o.source.join(" "), o.target.join(" "), o.rules.to_line())
            })
            .collect()
    };
    assert_eq!(render(), render());
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-z]{1,6}",
        2 => "[A-Z][a-z]{1,5}",
        1 => "[A-Z]{2,4}",
        2 => "[0-9]{1,4}",
        1 => "[0-9]{1,3}[,.][0-9]{3}",
        1 => "[0-9]{1,2}(st|nd|rd|th|km|%)",
        1 => Just("of".to_string()),
        1 => Just(",".to_string()),
    ]
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(word(), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_pairs_round_trip(src in sentence(), tgt in sentence(), single in any::<bool>()) {
        let cfg = SymbolizerConfig { single_word_proper_nouns: single, ..SymbolizerConfig::default() };
        let out = symbolize_pair(1, &src, &tgt, &cfg);
        prop_assert_eq!(&desymbolize(&out.target, &out.rules, Fallback::Literal).tokens, &tgt);
        prop_assert_eq!(&desymbolize_side(&out.source, &out.rules, Side::Source, Fallback::Literal).tokens, &src);
        prop_assert!(counters_ok(&out.source));
        let src_syms: Vec<_> = out.source.iter().filter_map(|t| symbol_of(t)).collect();
        for t in out.target.iter().filter_map(|t| symbol_of(t)) {
            prop_assert!(src_syms.contains(&t));
        }
    }

    #[test]
    fn symbolization_is_idempotent(src in sentence(), tgt in sentence()) {
        let cfg = SymbolizerConfig::default();
        let once = symbolize_pair(1, &src, &tgt, &cfg);
        let twice = symbolize_pair(1, &once.source, &once.target, &cfg);
        prop_assert_eq!(&twice.source, &once.source);
        prop_assert_eq!(&twice.target, &once.target);
    }

    #[test]
    fn shared_numbers_shrink_unique_count(nums in proptest::collection::btree_set(10u32..100_000, 4..12)) {
        let cfg = SymbolizerConfig::default();
        let mut before = std::collections::BTreeSet::new();
        let mut after = std::collections::BTreeSet::new();
        for (i, n) in nums.iter().enumerate() {
            let s = toks(&format!("we saw {n} cats"));
            let t = toks(&format!("nous avons vu {n} chats"));
            before.extend(s.iter().chain(&t).cloned());
            let o = symbolize_pair(i + 1, &s, &t, &cfg);
            after.extend(o.source.iter().chain(&o.target).cloned());
        }
        prop_assert!(after.len() < before.len());
    }
}
