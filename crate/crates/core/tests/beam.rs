mod common;

use common::{exhaustive_best, exhaustive_mismatches, random_model, tiny_config, width_one_mismatches};
use ctxnmt::model::beam_search;

#[test]
fn width_one_matches_greedy_on_random_models() {
    assert_eq!(width_one_mismatches(100), 0);
}

#[test]
fn wide_beam_finds_the_exhaustive_optimum() {
    assert_eq!(exhaustive_mismatches(100), 0);
}

#[test]
fn narrow_beam_never_beats_the_optimum() {
    let mut cfg = tiny_config(false, false);
    cfg.tgt_vocab = 3;
    cfg.bos = 0;
    cfg.eos = 1;
    for seed in 0..30 {
        let model = random_model(&cfg, seed, 1.5);
        let src = [2, 3, 4];
        let (_, best) = exhaustive_best(&model, &src);
        for width in 1..=3 {
            let t = beam_search(&model, &src, width, Some(3)).unwrap();
            if t.finished {
                assert!(t.log_prob <= best + 1e-12);
            }
        }
    }
}

#[test]
fn exhaustive_cases_are_not_all_empty_outputs() {
    let mut cfg = tiny_config(true, false);
    cfg.tgt_vocab = 3;
    cfg.bos = 0;
    cfg.eos = 1;
    let lengths: Vec<usize> = (0..100)
        .map(|seed| exhaustive_best(&random_model(&cfg, 1000 + seed, 1.5), &[2, 5, 3]).0.len())
        .collect();
    for len in 0..=2 {
        assert!(lengths.contains(&len), "no optimum of length {len}");
    }
}
