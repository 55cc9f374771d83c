use std::cmp::Ordering;

use crate::tensor::Graph;

use super::layers::{encode_source, step, Bound, DecoderState};
use super::{Model, ModelError};

/// Partial translation during beam search.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    pub state: DecoderState,
    pub finished: bool,
}

/// Decoder output, without the end-of-sentence token.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    pub finished: bool,
}

/// Output length cap for a source of `src_len` tokens.
pub fn max_output_len(src_len: usize) -> usize {
    2 * src_len + 10
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = crate::tensor::log_sum_exp(logits);
    logits.iter().map(|z| z - lse).collect()
}

/// Iterated argmax until end-of-sentence or `max_len` tokens. Ties go to the lower id.
pub fn greedy_decode(model: &Model, src: &[usize], max_len: Option<usize>) -> Result<Translation, ModelError> {
    let cap = max_len.unwrap_or_else(|| max_output_len(src.len()));
    let mut g = Graph::new();
    let b = Bound::new(&mut g, model);
    let enc = encode_source(&mut g, &b, model, src, None)?;
    let mut state = enc.initial_state;
    let mut tokens = Vec::new();
    let mut log_prob = 0.0;
    for _ in 0..cap {
        let (next, logits) = step(&mut g, &b, model, &enc, &state, state.prev)?;
        let lp = log_softmax(g.value(logits));
        let mut best = 0;
        for (i, &v) in lp.iter().enumerate() {
            if v > lp[best] {
                best = i;
            }
        }
        log_prob += lp[best];
        if best == model.config.eos {
            return Ok(Translation {
                tokens,
                log_prob,
                finished: true,
            });
        }
        tokens.push(best);
        state = DecoderState { prev: best, ..next };
    }
    Ok(Translation {
        tokens,
        log_prob,
        finished: false,
    })
}

/// Beam search keeping the `width` best candidates per step.
///
/// Candidates ending in end-of-sentence move to a completed pool. Search stops
/// when no live hypothesis remains, when the best completed score is at least
/// the best live score (scores only decrease), or at the length cap. The best
/// completed hypothesis is returned, or the best live one if none completed.
pub fn beam_search(
    model: &Model,
    src: &[usize],
    width: usize,
    max_len: Option<usize>,
) -> Result<Translation, ModelError> {
    if width < 1 {
        return Err(ModelError::Invalid("beam width must be at least 1".into()));
    }
    let cap = max_len.unwrap_or_else(|| max_output_len(src.len()));
    let eos = model.config.eos;
    let mut g = Graph::new();
    let b = Bound::new(&mut g, model);
    let enc = encode_source(&mut g, &b, model, src, None)?;
    let mut live = vec![Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        state: enc.initial_state,
        finished: false,
    }];
    let mut done: Vec<Hypothesis> = Vec::new();

    for _ in 0..cap {
        // (score, parent, token)
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        let mut next_states = Vec::with_capacity(live.len());
        for (pi, h) in live.iter().enumerate() {
            let (next, logits) = step(&mut g, &b, model, &enc, &h.state, h.state.prev)?;
            next_states.push(next);
            for (tok, lp) in log_softmax(g.value(logits)).into_iter().enumerate() {
                cands.push((h.log_prob + lp, pi, tok));
            }
        }
        cands.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        cands.truncate(width);
        let mut next_live = Vec::new();
        for (score, pi, tok) in cands {
            let parent = &live[pi];
            let mut tokens = parent.tokens.clone();
            let finished = tok == eos;
            if !finished {
                tokens.push(tok);
            }
            let h = Hypothesis {
                tokens,
                log_prob: score,
                state: DecoderState {
                    prev: tok,
                    ..next_states[pi]
                },
                finished,
            };
            if finished {
                done.push(h);
            } else {
                next_live.push(h);
            }
        }
        live = next_live;
        let best_done = done.iter().map(|h| h.log_prob).fold(f64::NEG_INFINITY, f64::max);
        let best_live = live.iter().map(|h| h.log_prob).fold(f64::NEG_INFINITY, f64::max);
        if live.is_empty() || best_done >= best_live {
            break;
        }
    }

    let pick = |pool: &[Hypothesis]| {
        pool.iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.log_prob
                    .partial_cmp(&b.log_prob)
                    .unwrap_or(Ordering::Equal)
                    .then(ib.cmp(ia))
            })
            .map(|(_, h)| h.clone())
    };
    let best = pick(&done)
        .or_else(|| pick(&live))
        .expect("beam always holds a hypothesis");
    Ok(Translation {
        tokens: best.tokens,
        log_prob: best.log_prob,
        finished: best.finished,
    })
}
