//! Helpers shared by the integration test binaries.
#![allow(dead_code)]

use std::collections::BTreeSet;

use ctxnmt::chart::{local_chart_pca, Centering, LocalChart};
use ctxnmt::corpus::{build_vocab, corpus_stats, CorpusStats};
use ctxnmt::model::{beam_search, greedy_decode, Model, ModelConfig};
use ctxnmt::symbolizer::{desymbolize, symbol_of, symbolize_pair, Fallback, SymbolizerConfig, TypedSymbol};
use ctxnmt::synthetic::{planted_chart, PlantedPair};
use ctxnmt::tensor::{Graph, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely rather than relatively.
pub const FD_FLOOR: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;
/// Single primitives are held to a tighter bound than the composed model.
pub const PRIMITIVE_TOL: f64 = 1e-5;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

/// Largest relative error between backprop and central differences for a
/// function of some input tensors.
pub fn check_fn(inputs: &mut [Tensor], f: &dyn Fn(&mut Graph, &[Var]) -> Var) -> f64 {
    let eval = |ts: &[Tensor]| -> (Graph, Var) {
        let mut g = Graph::new();
        let vars: Vec<Var> = ts.iter().enumerate().map(|(i, t)| g.param(i, t)).collect();
        let out = f(&mut g, &vars);
        (g, out)
    };
    let (g, out) = eval(inputs);
    let grads = g.backward(out).expect("backward");
    let mut worst: f64 = 0.0;
    for &(slot, ref grad) in grads.params() {
        for i in 0..grad.len() {
            let orig = inputs[slot].values()[i];
            inputs[slot].values_mut()[i] = orig + FD_STEP;
            let (g1, o1) = eval(inputs);
            inputs[slot].values_mut()[i] = orig - FD_STEP;
            let (g2, o2) = eval(inputs);
            inputs[slot].values_mut()[i] = orig;
            let numeric = (g1.scalar(o1) - g2.scalar(o2)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(grad[i], numeric));
        }
    }
    worst
}

/// The small configuration used for model gradient checks.
pub fn tiny_config(contextualize: bool, mask_output: bool) -> ModelConfig {
    let mut c = ModelConfig::new(7, 7, 4, 3);
    c.context = 3;
    c.attn_hidden = 3;
    c.contextualize = contextualize;
    c.mask_output_embeddings = mask_output;
    c
}

/// Random sentence pair of length 1..=5 each; the target ends with EOS.
pub fn random_pair(rng: &mut ChaCha8Rng, cfg: &ModelConfig) -> (Vec<usize>, Vec<usize>) {
    let ls = rng.gen_range(1..=5);
    let lt = rng.gen_range(1..=5);
    let src = (0..ls).map(|_| rng.gen_range(0..cfg.src_vocab)).collect();
    let mut tgt: Vec<usize> = (0..lt - 1).map(|_| rng.gen_range(0..cfg.tgt_vocab)).collect();
    tgt.push(cfg.eos);
    (src, tgt)
}

/// Worst relative error over every parameter entry of a tiny model.
pub fn model_grad_error(seed: u64, contextualize: bool, mask_output: bool) -> f64 {
    let cfg = tiny_config(contextualize, mask_output);
    let mut model = Model::new(cfg.clone(), seed).expect("model");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    // Larger weights than the default init make the check less trivial.
    for t in model.params.tensors_mut() {
        for v in t.values_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
    let (src, tgt) = random_pair(&mut rng, &cfg);
    let (g, loss) = model.loss_graph(&src, &tgt, None).expect("graph");
    let grads = g.backward(loss).expect("backward");
    let mut worst: f64 = 0.0;
    for &(slot, ref grad) in grads.params() {
        for i in 0..grad.len() {
            let orig = model.params.tensors()[slot].values()[i];
            model.params.tensors_mut()[slot].values_mut()[i] = orig + FD_STEP;
            let up = model.sentence_loss(&src, &tgt).unwrap();
            model.params.tensors_mut()[slot].values_mut()[i] = orig - FD_STEP;
            let down = model.sentence_loss(&src, &tgt).unwrap();
            model.params.tensors_mut()[slot].values_mut()[i] = orig;
            let e = rel_err(grad[i], (up - down) / (2.0 * FD_STEP));
            if e > worst {
                worst = e;
                if std::env::var("GRADCHECK_VERBOSE").is_ok() && e > FD_TOL {
                    eprintln!("seed {seed} slot {slot} entry {i}: analytic {} numeric {}", grad[i], (up - down) / (2.0 * FD_STEP));
                }
            }
        }
    }
    worst
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Reduces `out` to a scalar through a fixed random weighting so that every
/// output entry gets a distinct upstream gradient.
fn weighted_sum(g: &mut Graph, out: Var, seed: u64) -> Var {
    if g.shape(out).is_empty() {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rand_tensor(&mut rng, &g.shape(out).to_vec());
    let w = g.input(&w);
    let p = g.mul(out, w).unwrap();
    g.sum(p)
}

type Case = (&'static str, Vec<Vec<usize>>, Box<dyn Fn(&mut Graph, &[Var]) -> Var>);

/// Worst finite-difference error of every graph primitive for one seed.
pub fn primitive_errors(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<usize> = (0..4).map(|_| rng.gen_range(0..5)).collect();
    let target = rng.gen_range(0..6);
    let cases: Vec<Case> = vec![
        ("matmul mk*kn", vec![vec![3, 4], vec![4, 2]], Box::new(|g, v| g.matmul(v[0], v[1]).unwrap())),
        ("matmul mk*k", vec![vec![3, 4], vec![4]], Box::new(|g, v| g.matmul(v[0], v[1]).unwrap())),
        ("matmul k*kn", vec![vec![4], vec![4, 2]], Box::new(|g, v| g.matmul(v[0], v[1]).unwrap())),
        ("matmul k*k", vec![vec![4], vec![4]], Box::new(|g, v| g.matmul(v[0], v[1]).unwrap())),
        ("add", vec![vec![3, 2], vec![3, 2]], Box::new(|g, v| g.add(v[0], v[1]).unwrap())),
        ("add broadcast", vec![vec![3, 2], vec![2]], Box::new(|g, v| g.add(v[0], v[1]).unwrap())),
        ("mul", vec![vec![5], vec![5]], Box::new(|g, v| g.mul(v[0], v[1]).unwrap())),
        ("mul broadcast", vec![vec![3, 2], vec![2]], Box::new(|g, v| g.mul(v[0], v[1]).unwrap())),
        ("sigmoid", vec![vec![2, 3]], Box::new(|g, v| g.sigmoid(v[0]))),
        ("tanh", vec![vec![2, 3]], Box::new(|g, v| g.tanh(v[0]))),
        ("softmax vector", vec![vec![5]], Box::new(|g, v| g.softmax(v[0]).unwrap())),
        ("softmax rows", vec![vec![3, 4]], Box::new(|g, v| g.softmax(v[0]).unwrap())),
        ("concat vectors", vec![vec![2], vec![3]], Box::new(|g, v| g.concat(&[v[0], v[1]], 0).unwrap())),
        ("concat columns", vec![vec![2, 2], vec![2, 3]], Box::new(|g, v| g.concat(&[v[0], v[1]], 1).unwrap())),
        ("stack", vec![vec![3], vec![3]], Box::new(|g, v| g.stack(&[v[0], v[1], v[0]]).unwrap())),
        ("gather", vec![vec![5, 3]], Box::new(move |g, v| g.gather(v[0], &ids).unwrap())),
        ("row", vec![vec![4, 3]], Box::new(|g, v| g.row(v[0], 2).unwrap())),
        ("mean_rows", vec![vec![4, 3]], Box::new(|g, v| g.mean_rows(v[0]).unwrap())),
        ("nll", vec![vec![6]], Box::new(move |g, v| g.nll(v[0], target).unwrap())),
        ("slice", vec![vec![7]], Box::new(|g, v| g.slice(v[0], 2, 3).unwrap())),
        ("sum", vec![vec![2, 3]], Box::new(|g, v| g.sum(v[0]))),
        ("sum_scalars", vec![vec![3]], Box::new(|g, v| {
            let a = g.sum(v[0]);
            let b = g.nll(v[0], 1).unwrap();
            g.sum_scalars(&[a, b, a]).unwrap()
        })),
        ("scale", vec![vec![4]], Box::new(|g, v| g.scale(v[0], -2.5))),
        ("reshape", vec![vec![2, 3]], Box::new(|g, v| g.reshape(v[0], &[3, 2]).unwrap())),
    ];
    let mut out = Vec::new();
    for (k, (name, shapes, f)) in cases.into_iter().enumerate() {
        let mut inputs: Vec<Tensor> = shapes.iter().map(|s| rand_tensor(&mut rng, s)).collect();
        let wseed = seed.wrapping_mul(131).wrapping_add(k as u64);
        let e = check_fn(&mut inputs, &|g, v| {
            let o = f(g, v);
            weighted_sum(g, o, wseed)
        });
        out.push((name, e));
    }
    out
}

/// Model with every parameter drawn from U(-scale, scale).
pub fn random_model(cfg: &ModelConfig, seed: u64, scale: f64) -> Model {
    let mut model = Model::new(cfg.clone(), seed).expect("model");
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5EED));
    for t in model.params.tensors_mut() {
        for v in t.values_mut() {
            *v = rng.gen_range(-scale..scale);
        }
    }
    model
}

/// Number of random models, out of `trials`, where width-1 beam search and
/// greedy decoding disagree on the output tokens.
pub fn width_one_mismatches(trials: u64) -> usize {
    let mut bad = 0;
    for seed in 0..trials {
        let mut cfg = tiny_config(seed % 2 == 0, false);
        cfg.tgt_vocab = 9;
        let model = random_model(&cfg, seed, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, _) = random_pair(&mut rng, &cfg);
        let greedy = greedy_decode(&model, &src, None).expect("greedy");
        let beam = beam_search(&model, &src, 1, None).expect("beam");
        if greedy.tokens != beam.tokens {
            bad += 1;
        }
    }
    bad
}

/// Highest-scoring finished output for a three-word target vocabulary and a
/// length cap of 3, found by scoring every sequence with teacher forcing.
pub fn exhaustive_best(model: &Model, src: &[usize]) -> (Vec<usize>, f64) {
    let eos = model.config.eos;
    let words: Vec<usize> = (0..model.config.tgt_vocab).filter(|&w| w != eos).collect();
    let mut prefixes: Vec<Vec<usize>> = vec![vec![]];
    for a in &words {
        prefixes.push(vec![*a]);
        for b in &words {
            prefixes.push(vec![*a, *b]);
        }
    }
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for p in prefixes {
        let mut full = p.clone();
        full.push(eos);
        let lp = -model.sentence_loss(src, &full).expect("loss");
        if lp > best.1 {
            best = (p, lp);
        }
    }
    best
}

/// Number of random three-word models, out of `trials`, where a width-27
/// beam with cap 3 misses the exhaustive optimum.
pub fn exhaustive_mismatches(trials: u64) -> usize {
    let mut bad = 0;
    for seed in 0..trials {
        let mut cfg = tiny_config(true, false);
        cfg.tgt_vocab = 3;
        cfg.bos = 0;
        cfg.eos = 1;
        let model = random_model(&cfg, 1000 + seed, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, _) = random_pair(&mut rng, &cfg);
        let beam = beam_search(&model, &src, 27, Some(3)).expect("beam");
        let (tokens, lp) = exhaustive_best(&model, &src);
        if beam.tokens != tokens || (beam.log_prob - lp).abs() > 1e-9 || !beam.finished {
            bad += 1;
        }
    }
    bad
}

/// Per-line invariant violations of pair symbolization.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct SymbolFailures {
    pub round_trip: usize,
    pub subset: usize,
    pub counters: usize,
}

/// Indices of each kind, in order of first occurrence, must read 1, 2, 3, ...
pub fn counters_ok(tokens: &[String]) -> bool {
    let mut seen: Vec<TypedSymbol> = Vec::new();
    for t in tokens {
        if let Some(s) = symbol_of(t) {
            if !seen.contains(&s) {
                let prior = seen.iter().filter(|x| x.kind == s.kind).count();
                if s.index != prior + 1 {
                    return false;
                }
                seen.push(s);
            }
        }
    }
    true
}

pub fn symbol_failures(pairs: &[PlantedPair], cfg: &SymbolizerConfig) -> SymbolFailures {
    let mut f = SymbolFailures::default();
    for (i, p) in pairs.iter().enumerate() {
        let out = symbolize_pair(i + 1, &p.source, &p.target, cfg);
        if desymbolize(&out.target, &out.rules, Fallback::Literal).tokens != p.target {
            f.round_trip += 1;
        }
        let src_syms: BTreeSet<_> = out.source.iter().filter_map(|t| symbol_of(t)).collect();
        if out.target.iter().filter_map(|t| symbol_of(t)).any(|s| !src_syms.contains(&s)) {
            f.subset += 1;
        }
        if !counters_ok(&out.source) {
            f.counters += 1;
        }
    }
    f
}

/// Unique-token count and vocabulary coverage of one corpus side, before and
/// after symbolization, each with its own `k`-word vocabulary.
pub fn coverage_before_after(pairs: &[PlantedPair], k: usize, target_side: bool) -> (CorpusStats, CorpusStats) {
    let cfg = SymbolizerConfig::default();
    let side = |p: &PlantedPair| if target_side { p.target.clone() } else { p.source.clone() };
    let before: Vec<Vec<String>> = pairs.iter().map(side).collect();
    let after: Vec<Vec<String>> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = symbolize_pair(i + 1, &p.source, &p.target, &cfg);
            if target_side { s.target } else { s.source }
        })
        .collect();
    let stats = |c: &[Vec<String>]| {
        let v = build_vocab(c.iter().map(|l| l.as_slice()), k).expect("vocab");
        corpus_stats(c, &v)
    };
    (stats(&before), stats(&after))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest `‖Cov·v − λv‖` over every axis of a chart.
pub fn eigen_residual(chart: &LocalChart) -> f64 {
    let e = chart.dim();
    let mut worst: f64 = 0.0;
    for (axis, &lambda) in chart.axes.iter().zip(&chart.eigenvalues) {
        let r: f64 = (0..e)
            .map(|i| {
                let cv = dot(&chart.covariance[i * e..(i + 1) * e], axis);
                (cv - lambda * axis[i]).powi(2)
            })
            .sum();
        worst = worst.max(r.sqrt());
    }
    worst
}

/// Largest deviation of the axes' Gram matrix from the identity.
pub fn orthonormality_error(chart: &LocalChart) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in chart.axes.iter().enumerate() {
        for (j, b) in chart.axes.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(a, b) - target).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy)]
pub struct ChartRecovery {
    pub hits: usize,
    pub worst_residual: f64,
}

/// Planted two-direction charts (E=50, N=20, σ=1e-3): counts trials where
/// both leading axes align with the planted directions to |cos| ≥ 0.99.
pub fn chart_recovery(trials: u64) -> ChartRecovery {
    let mut hits = 0;
    let mut worst_residual: f64 = 0.0;
    for seed in 0..trials {
        let p = planted_chart(50, 20, 1e-3, seed);
        let points: Vec<(&str, &[f64])> = p.words.iter().map(|w| w.as_str()).zip(p.vectors.iter().map(|v| v.as_slice())).collect();
        let chart = local_chart_pca(&points, Centering::Mean).expect("chart");
        worst_residual = worst_residual.max(eigen_residual(&chart));
        if dot(&chart.axes[0], &p.u).abs() >= 0.99 && dot(&chart.axes[1], &p.v).abs() >= 0.99 {
            hits += 1;
        }
    }
    ChartRecovery { hits, worst_residual }
}
