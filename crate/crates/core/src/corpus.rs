//! Vocabulary construction, pair filtering, coverage statistics and batching.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
/// Surface forms of the reserved ids, in id order.
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary size must be at least 1")]
    ZeroCutoff,
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("vocabulary file: {0}")]
    BadVocabFile(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Token ↔ id map with the reserved block at ids 0..4.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_ranked(ranked: Vec<String>) -> Self {
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        tokens.extend(ranked);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }

    /// Total size including the reserved block.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Non-reserved tokens in rank order.
    pub fn ranked(&self) -> &[String] {
        &self.tokens[RESERVED.len()..]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Id of `token`, or [`UNK`].
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map(String::as_str).unwrap_or(RESERVED[UNK])
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    /// One token per line after the four reserved lines.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        w.flush()
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, CorpusError> {
        let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
        if lines.len() < RESERVED.len() {
            return Err(CorpusError::BadVocabFile("missing reserved header".into()));
        }
        for (i, want) in RESERVED.iter().enumerate() {
            if lines[i] != *want {
                return Err(CorpusError::BadVocabFile(format!(
                    "line {} should be {want:?}, found {:?}",
                    i + 1,
                    lines[i]
                )));
            }
        }
        let ranked = lines[RESERVED.len()..].to_vec();
        let mut seen = HashSet::new();
        for t in &ranked {
            if !seen.insert(t) || RESERVED.contains(&t.as_str()) {
                return Err(CorpusError::BadVocabFile(format!("duplicate token {t:?}")));
            }
        }
        Ok(Self::from_ranked(ranked))
    }
}

/// Keeps the `k` most frequent tokens; ties break lexicographically.
pub fn build_vocab<'a, I, S>(corpus: I, k: usize) -> Result<Vocabulary, CorpusError>
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    if k == 0 {
        return Err(CorpusError::ZeroCutoff);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for line in corpus {
        for t in line {
            let t = t.as_ref();
            if !RESERVED.contains(&t) {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(k);
    Ok(Vocabulary::from_ranked(
        ranked.into_iter().map(|(t, _)| t.to_string()).collect(),
    ))
}

/// Whitespace split that also detaches leading and trailing punctuation.
///
/// A fallback for text that has not been run through a real tokenizer.
pub fn simple_tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in line.split_ascii_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let is_p = |c: &char| c.is_ascii_punctuation() && *c != '^';
        let start = chars.iter().position(|c| !is_p(c)).unwrap_or(chars.len());
        let end = chars.iter().rposition(|c| !is_p(c)).map_or(start, |e| e + 1);
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        out.extend(chars[end.max(start)..].iter().map(|c| c.to_string()));
    }
    out
}

/// Tokens of one line, split on ASCII whitespace only so that no-break
/// spaces inside numbers such as `1\u{202f}234` stay within their token.
pub fn split_tokens(line: &str) -> Vec<String> {
    line.split_ascii_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    /// 1-based line number in the input files.
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub oov_src_max: f64,
    pub oov_tgt_max: f64,
    pub max_len: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            oov_src_max: 0.10,
            oov_tgt_max: 0.10,
            max_len: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    Empty,
    SourceOov,
    TargetOov,
    TooLong,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterReport {
    pub kept: usize,
    pub rejected: Vec<(usize, RejectReason)>,
}

impl FilterReport {
    pub fn count(&self, reason: RejectReason) -> usize {
        self.rejected.iter().filter(|(_, r)| *r == reason).count()
    }
}

fn oov_ratio(tokens: &[String], vocab: &Vocabulary) -> f64 {
    let oov = tokens.iter().filter(|t| !vocab.contains(t)).count();
    oov as f64 / tokens.len() as f64
}

/// Drops pairs whose OOV ratio on either side is strictly above its
/// threshold, or where either side is longer than `max_len`.
pub fn filter_pairs(
    pairs: Vec<SentencePair>,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
    cfg: &FilterConfig,
) -> (Vec<SentencePair>, FilterReport) {
    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for p in pairs {
        let reason = if p.src.is_empty() || p.tgt.is_empty() {
            Some(RejectReason::Empty)
        } else if p.src.len() > cfg.max_len || p.tgt.len() > cfg.max_len {
            Some(RejectReason::TooLong)
        } else if oov_ratio(&p.src, src_vocab) > cfg.oov_src_max {
            Some(RejectReason::SourceOov)
        } else if oov_ratio(&p.tgt, tgt_vocab) > cfg.oov_tgt_max {
            Some(RejectReason::TargetOov)
        } else {
            None
        };
        match reason {
            Some(r) => report.rejected.push((p.line, r)),
            None => kept.push(p),
        }
    }
    report.kept = kept.len();
    (kept, report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub unique: usize,
    pub total: usize,
    /// Percentage of running tokens that map to a non-UNK id.
    pub coverage: f64,
}

pub fn corpus_stats<S: AsRef<str>>(corpus: &[Vec<S>], vocab: &Vocabulary) -> CorpusStats {
    let mut unique = HashSet::new();
    let (mut total, mut covered) = (0usize, 0usize);
    for line in corpus {
        for t in line {
            let t = t.as_ref();
            unique.insert(t);
            total += 1;
            if vocab.lookup(t) != UNK {
                covered += 1;
            }
        }
    }
    let coverage = if total == 0 {
        100.0
    } else {
        100.0 * covered as f64 / total as f64
    };
    CorpusStats {
        unique: unique.len(),
        total,
        coverage,
    }
}

/// Padded id matrices for a group of sentence pairs.
///
/// Every row ends with [`EOS`] followed by [`PAD`] up to the batch width.
/// The decoder supplies [`BOS`] itself, so target rows do not carry it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub src: Vec<Vec<usize>>,
    pub tgt: Vec<Vec<usize>>,
    pub src_lens: Vec<usize>,
    pub tgt_lens: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    /// Unpadded `(source, target)` rows.
    pub fn pairs(&self) -> impl Iterator<Item = (&[usize], &[usize])> {
        self.src
            .iter()
            .zip(&self.tgt)
            .zip(self.src_lens.iter().zip(&self.tgt_lens))
            .map(|((s, t), (&ls, &lt))| (&s[..ls], &t[..lt]))
    }

    /// 1 for real positions (including EOS), 0 for padding.
    pub fn target_mask(&self) -> Vec<Vec<f64>> {
        self.tgt
            .iter()
            .zip(&self.tgt_lens)
            .map(|(row, &l)| (0..row.len()).map(|i| if i < l { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    pub fn target_tokens(&self) -> usize {
        self.tgt_lens.iter().sum()
    }
}

fn pad_rows(rows: Vec<Vec<usize>>) -> (Vec<Vec<usize>>, Vec<usize>) {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let lens = rows.iter().map(Vec::len).collect();
    let padded = rows
        .into_iter()
        .map(|mut r| {
            r.resize(width, PAD);
            r
        })
        .collect();
    (padded, lens)
}

/// Seeded shuffle, stable bucketing by source length, then a seeded shuffle
/// of the batch order.
pub fn make_batches(
    pairs: &[(Vec<usize>, Vec<usize>)],
    batch_size: usize,
    seed: u64,
) -> Result<Vec<Batch>, CorpusError> {
    if batch_size == 0 {
        return Err(CorpusError::ZeroBatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&i| pairs[i].0.len());
    let mut batches: Vec<Batch> = order
        .chunks(batch_size)
        .map(|chunk| {
            let with_eos = |ids: &Vec<usize>| {
                let mut v = ids.clone();
                v.push(EOS);
                v
            };
            let (src, src_lens) = pad_rows(chunk.iter().map(|&i| with_eos(&pairs[i].0)).collect());
            let (tgt, tgt_lens) = pad_rows(chunk.iter().map(|&i| with_eos(&pairs[i].1)).collect());
            Batch {
                src,
                tgt,
                src_lens,
                tgt_lens,
            }
        })
        .collect();
    batches.shuffle(&mut rng);
    Ok(batches)
}

/// Token frequencies, sorted by token, for reports.
pub fn frequencies<S: AsRef<str>>(corpus: &[Vec<S>]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for line in corpus {
        for t in line {
            *m.entry(t.as_ref().to_string()).or_default() += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        split_tokens(s)
    }

    #[test]
    fn frequency_ranking() {
        let c = [toks("a a b")];
        let v = build_vocab(c.iter().map(|l| l.as_slice()), 2).unwrap();
        assert_eq!(v.ranked(), &["a", "b"]);
        assert_eq!(v.lookup("a"), 4);
    }

    #[test]
    fn lexicographic_tie_break() {
        let c = [toks("b a")];
        let v = build_vocab(c.iter().map(|l| l.as_slice()), 1).unwrap();
        assert_eq!(v.ranked(), &["a"]);
    }

    #[test]
    fn large_cutoff_keeps_everything_without_padding() {
        let c = [toks("x y z")];
        let v = build_vocab(c.iter().map(|l| l.as_slice()), 100).unwrap();
        assert_eq!(v.len(), 7);
    }

    #[test]
    fn empty_corpus_rejected() {
        let c: [Vec<String>; 1] = [vec![]];
        assert!(matches!(
            build_vocab(c.iter().map(|l| l.as_slice()), 3),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn unknown_maps_to_unk() {
        let c = [toks("a")];
        let v = build_vocab(c.iter().map(|l| l.as_slice()), 1).unwrap();
        assert_eq!(v.lookup("zzz"), UNK);
        assert_eq!(v.token(UNK), "<unk>");
    }

    #[test]
    fn vocab_file_round_trip() {
        let c = [toks("the cat sat on the mat")];
        let v = build_vocab(c.iter().map(|l| l.as_slice()), 10).unwrap();
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"<pad>\n<unk>\n<s>\n</s>\nthe\n"));
        assert_eq!(Vocabulary::read(&buf[..]).unwrap(), v);
        assert!(Vocabulary::read(&b"x\n"[..]).is_err());
    }

    fn vocab_of(words: &str) -> Vocabulary {
        let c = [toks(words)];
        build_vocab(c.iter().map(|l| l.as_slice()), 1000).unwrap()
    }

    #[test]
    fn oov_threshold_is_strict() {
        let v = vocab_of("w0 w1 w2 w3 w4 w5 w6 w7 w8");
        let src = toks("w0 w1 w2 w3 w4 w5 w6 w7 w8 unknown");
        let pair = SentencePair {
            src: src.clone(),
            tgt: toks("w0"),
            line: 1,
        };
        let (kept, _) = filter_pairs(vec![pair], &v, &v, &FilterConfig::default());
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn long_pair_removed() {
        let v = vocab_of("a");
        let pair = SentencePair {
            src: vec!["a".to_string(); 51],
            tgt: toks("a"),
            line: 7,
        };
        let short = SentencePair {
            src: toks("a a"),
            tgt: toks("a"),
            line: 8,
        };
        let (kept, report) = filter_pairs(vec![pair, short], &v, &v, &FilterConfig::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(report.rejected, vec![(7, RejectReason::TooLong)]);
    }

    #[test]
    fn coverage_values() {
        let v = vocab_of("a");
        assert_eq!(corpus_stats(&[toks("a a")], &v).coverage, 100.0);
        let s = corpus_stats(&[toks("a b")], &v);
        assert_eq!(s.coverage, 50.0);
        assert_eq!((s.unique, s.total), (2, 2));
    }

    #[test]
    fn batching() {
        let pairs: Vec<(Vec<usize>, Vec<usize>)> =
            (0..10).map(|i| (vec![4; 1 + i % 3], vec![5; 1 + i % 4])).collect();
        let b1 = make_batches(&pairs, 1, 3).unwrap();
        assert_eq!(b1.len(), 10);
        assert!(b1.iter().all(|b| b.len() == 1));
        assert_eq!(b1, make_batches(&pairs, 1, 3).unwrap());
        let b = make_batches(&pairs, 4, 3).unwrap();
        assert_eq!(b.iter().map(Batch::len).sum::<usize>(), 10);
        for batch in &b {
            for (s, t) in batch.pairs() {
                assert_eq!(s.last(), Some(&EOS));
                assert_eq!(t.last(), Some(&EOS));
                assert!(!s.contains(&PAD) && !t.contains(&PAD));
            }
            let mask = batch.target_mask();
            for (row, m) in batch.tgt.iter().zip(mask) {
                for (id, w) in row.iter().zip(m) {
                    assert_eq!(*id == PAD, w == 0.0);
                }
            }
        }
        assert!(make_batches(&pairs, 0, 1).is_err());
    }

    #[test]
    fn fallback_tokenizer_detaches_punctuation() {
        assert_eq!(
            simple_tokenize("Hello, world! (yes)"),
            vec!["Hello", ",", "world", "!", "(", "yes", ")"]
        );
        assert_eq!(simple_tokenize("12,158 ..."), vec!["12,158", ".", ".", "."]);
    }

    proptest! {
        #[test]
        fn lookup_round_trip(words in proptest::collection::vec("[a-e]{1,3}", 1..40), k in 1usize..10) {
            let v = build_vocab([words.as_slice()], k).unwrap();
            for id in 0..v.len() {
                prop_assert_eq!(v.lookup(v.token(id)), id);
            }
            for w in &words {
                prop_assert!(v.lookup(w) < v.len());
            }
        }

        #[test]
        fn loosening_filter_never_removes(
            lines in proptest::collection::vec((proptest::collection::vec("[a-f]", 1..12), proptest::collection::vec("[a-f]", 1..12)), 1..20),
            t1 in 0.0f64..0.5, extra in 0.0f64..0.5, len1 in 1usize..12,
        ) {
            let v = vocab_of("a b c");
            let pairs: Vec<SentencePair> = lines.iter().enumerate().map(|(i, (s, t))| SentencePair { src: s.clone(), tgt: t.clone(), line: i + 1 }).collect();
            let strict = FilterConfig { oov_src_max: t1, oov_tgt_max: t1, max_len: len1 };
            let loose = FilterConfig { oov_src_max: t1 + extra, oov_tgt_max: t1 + extra, max_len: len1 + 3 };
            let (a, _) = filter_pairs(pairs.clone(), &v, &v, &strict);
            let (b, _) = filter_pairs(pairs, &v, &v, &loose);
            for p in &a {
                prop_assert!(b.contains(p));
            }
        }

        #[test]
        fn coverage_ignores_line_order(mut lines in proptest::collection::vec(proptest::collection::vec("[a-f]", 1..6), 1..10)) {
            let v = vocab_of("a b c");
            let s1 = corpus_stats(&lines, &v);
            lines.reverse();
            let s2 = corpus_stats(&lines, &v);
            prop_assert_eq!(s1, s2);
        }
    }
}
