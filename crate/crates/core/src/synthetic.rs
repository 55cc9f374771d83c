//! Seeded generators for the toy experiments: copy and topic-disambiguation
//! corpora, a planted corpus for symbolization, and planted embeddings for
//! local charts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::RESERVED;
use crate::model::{Model, ModelConfig};

/// Id pairs without end-of-sentence markers.
pub type IdPairs = Vec<(Vec<usize>, Vec<usize>)>;

const FIRST: usize = RESERVED.len();

/// Target equals source; tokens drawn uniformly from `vocab` non-reserved ids.
pub fn copy_corpus(pairs: usize, vocab: usize, min_len: usize, max_len: usize, seed: u64) -> IdPairs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pairs)
        .map(|_| {
            let len = rng.gen_range(min_len..=max_len);
            let s: Vec<usize> = (0..len).map(|_| FIRST + rng.gen_range(0..vocab)).collect();
            (s.clone(), s)
        })
        .collect()
}

/// Layout of the topic-disambiguation task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopicTask {
    /// Ambiguous source words.
    pub words: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl TopicTask {
    /// Source ids: reserved, `words` content ids, two topic markers.
    pub fn src_vocab(&self) -> usize {
        FIRST + self.words + 2
    }

    /// Target ids: reserved, then two translations per content word.
    pub fn tgt_vocab(&self) -> usize {
        FIRST + 2 * self.words
    }

    pub fn marker(&self, topic: usize) -> usize {
        FIRST + self.words + topic
    }

    /// Each source word has one translation per topic. The topic marker sits
    /// at a random position and is not translated.
    pub fn corpus(&self, pairs: usize, seed: u64) -> IdPairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..pairs)
            .map(|_| {
                let topic = rng.gen_range(0..2);
                let len = rng.gen_range(self.min_len..=self.max_len);
                let words: Vec<usize> = (0..len).map(|_| rng.gen_range(0..self.words)).collect();
                let mut src: Vec<usize> = words.iter().map(|w| FIRST + w).collect();
                src.insert(rng.gen_range(0..=len), self.marker(topic));
                let tgt = words.iter().map(|w| FIRST + 2 * w + topic).collect();
                (src, tgt)
            })
            .collect()
    }
}

/// Grows the hidden sizes of a configuration with contextualization turned
/// off until its trainable parameter count is as close as possible to that
/// of `cfg` with contextualization on.
pub fn budget_matched_baseline(cfg: &ModelConfig) -> ModelConfig {
    let count = |c: &ModelConfig| {
        let m = Model::new(c.clone(), 0).expect("valid config");
        m.params.trainable_count(c)
    };
    let mut with = cfg.clone();
    with.contextualize = true;
    let target = count(&with);
    let mut base = cfg.clone();
    base.contextualize = false;
    let mut best = (count(&base).abs_diff(target), base.clone());
    for step in 0.. {
        match step % 3 {
            0 => base.enc_hidden += 1,
            1 => base.dec_hidden += 1,
            _ => base.attn_hidden += 1,
        }
        let n = count(&base);
        if n.abs_diff(target) < best.0 {
            best = (n.abs_diff(target), base.clone());
        }
        if n >= target {
            break;
        }
    }
    best.1
}

/// One line of the planted symbolization corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedPair {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

const NAMES: [&str; 12] = [
    "San Diego",
    "New York",
    "House of Blues",
    "World of Warcraft",
    "Buenos Aires",
    "Hong Kong",
    "Rio de Janeiro",
    "Costa Rica",
    "Los Angeles",
    "Bank of England",
    "Tel Aviv",
    "Sri Lanka",
];
const ACRONYMS: [&str; 6] = ["NATO", "UNESCO", "FIFA", "NASA", "OPEC", "CERN"];
const MISMATCHED: [(&str, &str); 3] = [("IMF", "FMI"), ("UN", "ONU"), ("EU", "UE")];
const SRC_WORDS: [&str; 16] = [
    "the", "report", "said", "about", "people", "in", "million", "and", "with", "visited", "year", "new",
    "plan", "city", "for", "was",
];
const TGT_WORDS: [&str; 16] = [
    "le", "rapport", "dit", "environ", "personnes", "dans", "millions", "et", "avec", "visité", "année",
    "nouveau", "plan", "ville", "pour", "était",
];

/// Draws a number and writes it in one of five conventions. Returns the
/// English-side and French-side renderings.
fn render_number(rng: &mut ChaCha8Rng, format: usize) -> (String, String) {
    let int: u64 = rng.gen_range(1000..10_000_000);
    let frac: u64 = rng.gen_range(10..100);
    let group = |n: u64, sep: &str| {
        let digits = n.to_string();
        let mut out = String::new();
        for (i, c) in digits.chars().enumerate() {
            if i > 0 && (digits.len() - i) % 3 == 0 {
                out.push_str(sep);
            }
            out.push(c);
        }
        out
    };
    match format {
        // Plain integer on both sides.
        0 => (int.to_string(), int.to_string()),
        // Comma grouping against dot grouping.
        1 => (group(int, ","), group(int, ".")),
        // Comma grouping against narrow no-break space grouping.
        2 => (group(int, ","), group(int, "\u{202f}")),
        // Decimal point against decimal comma.
        3 => (format!("{}.{frac}", int % 1000), format!("{},{frac}", int % 1000)),
        // Grouped decimal in both conventions.
        _ => (format!("{}.{frac}", group(int, ",")), format!("{},{frac}", group(int, "."))),
    }
}

/// Parallel corpus with planted numbers in five formats, multi-word names,
/// acronyms, unit suffixes and ordinals. Every fiftieth line carries one
/// acronym that differs across the two sides.
pub fn planted_symbol_corpus(lines: usize, seed: u64) -> Vec<PlantedPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(lines);
    for line in 0..lines {
        let mut src: Vec<Vec<String>> = Vec::new();
        let mut tgt: Vec<Vec<String>> = Vec::new();
        let filler = rng.gen_range(3..8);
        for _ in 0..filler {
            let k = rng.gen_range(0..SRC_WORDS.len());
            src.push(vec![SRC_WORDS[k].to_string()]);
            tgt.push(vec![TGT_WORDS[k].to_string()]);
        }
        let mut planted: Vec<(Vec<String>, Vec<String>)> = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            let format = rng.gen_range(0..5);
            let (s, t) = render_number(&mut rng, format);
            planted.push((vec![s], vec![t]));
        }
        if rng.gen_bool(0.3) {
            let n = rng.gen_range(2..40);
            planted.push((vec![format!("{n}km")], vec![format!("{n}km")]));
        }
        if rng.gen_bool(0.3) {
            let n = rng.gen_range(1..30);
            planted.push((vec![format!("{n}th")], vec![format!("{n}e")]));
        }
        for _ in 0..rng.gen_range(0..=2) {
            let name = NAMES[rng.gen_range(0..NAMES.len())];
            let toks: Vec<String> = name.split(' ').map(str::to_string).collect();
            planted.push((toks.clone(), toks));
        }
        if rng.gen_bool(0.5) {
            let a = ACRONYMS[rng.gen_range(0..ACRONYMS.len())].to_string();
            planted.push((vec![a.clone()], vec![a]));
        }
        if line % 50 == 0 {
            let (s, t) = MISMATCHED[rng.gen_range(0..MISMATCHED.len())];
            planted.push((vec![s.to_string()], vec![t.to_string()]));
        }
        // Planted items keep their relative order on the source side; the
        // target side sees them in a shuffled order.
        let mut tgt_planted = planted.clone();
        tgt_planted.shuffle(&mut rng);
        for (s, _) in planted {
            let at = rng.gen_range(0..=src.len());
            src.insert(at, s);
        }
        for (_, t) in tgt_planted {
            let at = rng.gen_range(0..=tgt.len());
            tgt.insert(at, t);
        }
        out.push(PlantedPair {
            source: src.concat(),
            target: tgt.concat(),
        });
    }
    out
}

/// Embeddings planted along two directions around a centre word.
#[derive(Debug, Clone)]
pub struct PlantedChart {
    pub words: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Coefficient of `u` for every word.
    pub a: Vec<f64>,
    /// Coefficient of `v` for every word.
    pub b: Vec<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// `x_i = x' + a_i u + b_i v + noise` for `n` words `w0..`, with `a` spread
/// wider than `b` and isotropic Gaussian noise of scale `sigma`. The sample
/// coefficients are centred and mutually uncorrelated.
pub fn planted_chart(dim: usize, n: usize, sigma: f64, seed: u64) -> PlantedChart {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = unit(&mut rng, dim);
    let u = unit(&mut rng, dim);
    let mut v = unit(&mut rng, dim);
    let p: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    v.iter_mut().zip(&u).for_each(|(x, y)| *x -= p * y);
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.4..0.4)).collect();
    // Zero sample mean and zero sample correlation make u and v the exact
    // principal axes of the noiseless points.
    for c in [&mut a, &mut b] {
        let m = c.iter().sum::<f64>() / n as f64;
        c.iter_mut().for_each(|x| *x -= m);
    }
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let beta = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / aa;
    b.iter_mut().zip(&a).for_each(|(y, x)| *y -= beta * x);
    let vectors = (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let noise = sigma * gaussian(&mut rng);
                    center[d] + a[i] * u[d] + b[i] * v[d] + noise
                })
                .collect()
        })
        .collect();
    PlantedChart {
        words: (0..n).map(|i| format!("w{i}")).collect(),
        vectors,
        u,
        v,
        a,
        b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topic_targets_follow_marker() {
        let task = TopicTask {
            words: 5,
            min_len: 2,
            max_len: 4,
        };
        for (src, tgt) in task.corpus(50, 3) {
            let topic = if src.contains(&task.marker(0)) { 0 } else { 1 };
            assert_eq!(src.len(), tgt.len() + 1);
            assert!(tgt.iter().all(|&t| t < task.tgt_vocab() && (t - FIRST) % 2 == topic));
        }
    }

    #[test]
    fn matched_baseline_is_close() {
        let mut cfg = ModelConfig::new(20, 20, 8, 8);
        cfg.context = 8;
        let base = budget_matched_baseline(&cfg);
        assert!(!base.contextualize);
        let n = |c: &ModelConfig| Model::new(c.clone(), 0).unwrap().params.trainable_count(c);
        let with = n(&cfg);
        let without = n(&base);
        assert!(with.abs_diff(without) * 20 < with, "{with} vs {without}");
    }

    #[test]
    fn planted_corpus_is_reproducible() {
        assert_eq!(planted_symbol_corpus(20, 5), planted_symbol_corpus(20, 5));
        assert!(planted_symbol_corpus(60, 5)
            .iter()
            .any(|p| p.source.iter().any(|t| t == "IMF" || t == "UN" || t == "EU")));
    }
}
