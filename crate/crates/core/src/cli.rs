//! Command-line front end.
//!
//! Every subcommand is a plain function over files so that it can be driven
//! from tests as well as from the `ctxnmt` binary. Exit codes: 0 success,
//! 1 usage error, 2 data error, 3 numeric failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bleu::corpus_bleu;
use crate::chart::{chart_for_word, render_chart_table, Centering, ChartError, EmbeddingIndex, Metric};
use crate::corpus::{
    build_vocab, corpus_stats, filter_pairs, CorpusStats, split_tokens, FilterConfig, RejectReason, SentencePair, Vocabulary, EOS,
};
use crate::model::{beam_search, train, Model, ModelConfig, StopMetric, TrainError, TrainingConfig};
use crate::symbolizer::{
    desymbolize, desymbolize_side, read_rules, symbol_of, symbolize_pair, symbolize_source_only, Fallback, Side, SymbolKind, SymbolRuleSet,
    SymbolizerConfig,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "ctxnmt", version, about = "Toy attention NMT with contextual masks and symbolization")]
pub struct Cli {
    /// Flat key=value file whose entries act as default flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replace numbers, names and acronyms by typed placeholders.
    Symbolize(SymbolizeArgs),
    /// Restore placeholders using a rules file.
    Desymbolize(DesymbolizeArgs),
    /// Filter a parallel corpus, build vocabularies and train a model.
    Train(TrainArgs),
    /// Translate a file with beam search.
    Translate(TranslateArgs),
    /// Corpus-level BLEU-4 of tokenized candidates against references.
    Bleu(BleuArgs),
    /// Principal axes of a word's local neighbourhood.
    Chart(ChartArgs),
    /// Unique tokens, running tokens and vocabulary coverage.
    CorpusStats(CorpusStatsArgs),
}

#[derive(Debug, Args)]
pub struct SymbolizeArgs {
    #[arg(long)]
    pub src: PathBuf,
    /// Target side; without it only the source is symbolized.
    #[arg(long)]
    pub tgt: Option<PathBuf>,
    #[arg(long)]
    pub out_src: PathBuf,
    #[arg(long, requires = "tgt")]
    pub out_tgt: Option<PathBuf>,
    #[arg(long)]
    pub rules: PathBuf,
    #[arg(long)]
    pub single_word_proper_nouns: bool,
    /// One functional word per line, replacing the built-in list.
    #[arg(long, value_name = "FILE")]
    pub bridging_words: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesymbolizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rules: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Emit nothing for placeholders without a rule instead of keeping them.
    #[arg(long)]
    pub drop_unknown: bool,
    /// Restore source surfaces instead of target surfaces.
    #[arg(long)]
    pub source_side: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Nll,
    Bleu,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub tgt: PathBuf,
    #[arg(long, requires = "dev_tgt")]
    pub dev_src: Option<PathBuf>,
    #[arg(long, requires = "dev_src")]
    pub dev_tgt: Option<PathBuf>,
    /// Output directory for the checkpoint, vocabularies and metrics.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 50)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.10)]
    pub oov_max: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub no_context: bool,
    #[arg(long)]
    pub mask_output_embeddings: bool,
    #[arg(long, value_enum, default_value_t = MetricArg::Nll)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 64)]
    pub embed: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long)]
    pub context: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub beam: usize,
    /// Skip source symbolization and placeholder restoration.
    #[arg(long)]
    pub no_symbolize: bool,
    #[arg(long)]
    pub single_word_proper_nouns: bool,
}

#[derive(Debug, Args)]
pub struct BleuArgs {
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub references: PathBuf,
}

#[derive(Debug, Args)]
pub struct ChartArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub word: String,
    /// Chart size including the query word.
    #[arg(long, default_value_t = 20)]
    pub neighbours: usize,
    /// Words listed per axis.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub axes: usize,
    #[arg(long)]
    pub euclidean: bool,
    /// Centre the chart on the query word instead of the mean.
    #[arg(long)]
    pub center_at_query: bool,
}

#[derive(Debug, Args)]
pub struct CorpusStatsArgs {
    /// Corpus before symbolization.
    #[arg(long)]
    pub before: PathBuf,
    /// Same corpus after symbolization.
    #[arg(long)]
    pub after: Option<PathBuf>,
    #[arg(long, default_value_t = 30000)]
    pub vocab_size: usize,
}

/// Reads `key=value` lines; `#` starts a comment line.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path).map_err(data(format!("config {}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Inserts config entries as flags right after the subcommand. Entries whose
/// flag also appears on the command line are skipped so the command line wins.
fn splice_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let pos = args.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(args) };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| CliError::Usage("--config needs a file".into()))?,
    };
    let entries = read_config_file(Path::new(&path))?;
    let sub = args
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, a)| !a.starts_with('-') && (*i != pos + 1 || args[pos].contains('=')))
        .map(|(i, _)| i);
    let Some(sub) = sub else { return Ok(args) };
    let given = |k: &str| {
        let flag = format!("--{k}");
        args[sub + 1..].iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut injected = Vec::new();
    for (k, v) in entries {
        if given(&k) {
            continue;
        }
        match v.as_str() {
            "true" => injected.push(format!("--{k}")),
            "false" => {}
            _ => {
                injected.push(format!("--{k}"));
                injected.push(v);
            }
        }
    }
    let mut out = args[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

/// Parses `args` (program name first) and runs the command, writing reports
/// to `out`.
pub fn run(args: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    let args = splice_config(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{e}").map_err(data("stdout"))?;
                return Ok(());
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    match cli.command {
        Command::Symbolize(a) => cmd_symbolize(&a, out),
        Command::Desymbolize(a) => cmd_desymbolize(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Translate(a) => cmd_translate(&a, out),
        Command::Bleu(a) => cmd_bleu(&a, out),
        Command::Chart(a) => cmd_chart(&a, out),
        Command::CorpusStats(a) => cmd_corpus_stats(&a, out),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let f = fs::File::open(path).map_err(data(path.display()))?;
    BufReader::new(f)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(data(path.display()))
}

fn read_tokens(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    Ok(read_lines(path)?.iter().map(|l| split_tokens(l)).collect())
}

fn aligned(a: &Path, b: &Path) -> Result<(Vec<Vec<String>>, Vec<Vec<String>>), CliError> {
    let x = read_tokens(a)?;
    let y = read_tokens(b)?;
    if x.len() != y.len() {
        let first = x.len().min(y.len()) + 1;
        return Err(CliError::Data(format!(
            "{} has {} lines but {} has {}; first unmatched line is {first}",
            a.display(),
            x.len(),
            b.display(),
            y.len()
        )));
    }
    Ok((x, y))
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), CliError> {
    let f = fs::File::create(path).map_err(data(path.display()))?;
    let mut w = BufWriter::new(f);
    for l in lines {
        writeln!(w, "{l}").map_err(data(path.display()))?;
    }
    w.flush().map_err(data(path.display()))
}

fn say(out: &mut dyn Write, text: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(data("stdout"))
}

fn symbolizer_config(single: bool, bridging: Option<&Path>) -> Result<SymbolizerConfig, CliError> {
    let mut cfg = SymbolizerConfig {
        single_word_proper_nouns: single,
        ..SymbolizerConfig::default()
    };
    if let Some(p) = bridging {
        let f = fs::File::open(p).map_err(data(p.display()))?;
        cfg.bridging_words = SymbolizerConfig::read_bridging_words(BufReader::new(f)).map_err(data(p.display()))?;
    }
    Ok(cfg)
}

fn kind_counts(rule_sets: &[SymbolRuleSet]) -> [usize; 3] {
    let mut c = [0; 3];
    for r in rule_sets.iter().flat_map(|s| &s.rules) {
        c[match r.symbol.kind {
            SymbolKind::Digit => 0,
            SymbolKind::ProperNoun => 1,
            SymbolKind::Acronym => 2,
        }] += 1;
    }
    c
}

pub fn cmd_symbolize(a: &SymbolizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = symbolizer_config(a.single_word_proper_nouns, a.bridging_words.as_deref())?;
    let mut rule_sets = Vec::new();
    match (&a.tgt, &a.out_tgt) {
        (Some(tgt), Some(out_tgt)) => {
            let (src, tgt) = aligned(&a.src, tgt)?;
            let mut s_lines = Vec::with_capacity(src.len());
            let mut t_lines = Vec::with_capacity(src.len());
            for (i, (s, t)) in src.iter().zip(&tgt).enumerate() {
                let p = symbolize_pair(i + 1, s, t, &cfg);
                s_lines.push(p.source.join(" "));
                t_lines.push(p.target.join(" "));
                rule_sets.push(p.rules);
            }
            write_lines(&a.out_src, s_lines)?;
            write_lines(out_tgt, t_lines)?;
        }
        (None, None) => {
            let src = read_tokens(&a.src)?;
            let mut s_lines = Vec::with_capacity(src.len());
            for (i, s) in src.iter().enumerate() {
                let (toks, rules) = symbolize_source_only(i + 1, s, None, &cfg);
                s_lines.push(toks.join(" "));
                rule_sets.push(rules);
            }
            write_lines(&a.out_src, s_lines)?;
        }
        _ => return Err(CliError::Usage("--tgt and --out-tgt go together".into())),
    }
    write_lines(&a.rules, rule_sets.iter().map(|r| r.to_line()))?;
    let [n, s, c] = kind_counts(&rule_sets);
    say(out, format!("lines {}\tdigits {n}\tproper nouns {s}\tacronyms {c}", rule_sets.len()))
}

fn load_rules(path: &Path) -> Result<Vec<SymbolRuleSet>, CliError> {
    let f = fs::File::open(path).map_err(data(path.display()))?;
    read_rules(BufReader::new(f)).map_err(data(path.display()))
}

pub fn cmd_desymbolize(a: &DesymbolizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let lines = read_tokens(&a.input)?;
    let rules = load_rules(&a.rules)?;
    if rules.len() != lines.len() {
        return Err(CliError::Data(format!(
            "{} has {} lines but the rules file has {}; first unmatched line is {}",
            a.input.display(),
            lines.len(),
            rules.len(),
            lines.len().min(rules.len()) + 1
        )));
    }
    let fallback = if a.drop_unknown { Fallback::Drop } else { Fallback::Literal };
    let side = if a.source_side { Side::Source } else { Side::Target };
    let mut warnings = 0;
    let mut restored = Vec::with_capacity(lines.len());
    for (toks, r) in lines.iter().zip(&rules) {
        let d = desymbolize_side(toks, r, side, fallback);
        warnings += d.warnings;
        restored.push(d.tokens.join(" "));
    }
    write_lines(&a.output, restored)?;
    say(out, format!("lines {}\tunresolved symbols {warnings}", lines.len()))
}

fn encode_pairs(pairs: &[SentencePair], sv: &Vocabulary, tv: &Vocabulary) -> Vec<(Vec<usize>, Vec<usize>)> {
    pairs.iter().map(|p| (sv.encode(&p.src), tv.encode(&p.tgt))).collect()
}

fn save_vocab(v: &Vocabulary, path: &Path) -> Result<(), CliError> {
    let f = fs::File::create(path).map_err(data(path.display()))?;
    let mut w = BufWriter::new(f);
    v.write(&mut w).map_err(data(path.display()))?;
    w.flush().map_err(data(path.display()))
}

fn load_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    let f = fs::File::open(path).map_err(data(path.display()))?;
    Vocabulary::read(BufReader::new(f)).map_err(data(path.display()))
}

/// Validates everything that does not need the data.
fn training_config(a: &TrainArgs) -> Result<(FilterConfig, TrainingConfig), CliError> {
    if !(0.0..=1.0).contains(&a.oov_max) {
        return Err(CliError::Usage(format!("--oov-max must lie in [0, 1], got {}", a.oov_max)));
    }
    if a.vocab_size == 0 || a.max_len == 0 {
        return Err(CliError::Usage("--vocab-size and --max-len must be positive".into()));
    }
    let mut mc = ModelConfig::new(1, 5, a.embed, a.hidden);
    mc.context = a.context.unwrap_or(a.embed);
    mc.contextualize = !a.no_context;
    mc.mask_output_embeddings = a.mask_output_embeddings;
    let mut tc = TrainingConfig::new(mc);
    tc.adam.learning_rate = a.lr;
    tc.batch_size = a.batch_size;
    tc.max_epochs = a.epochs;
    tc.patience = a.patience;
    tc.seed = a.seed;
    tc.metric = match a.metric {
        MetricArg::Nll => StopMetric::Nll,
        MetricArg::Bleu => StopMetric::Bleu,
    };
    // Vocabulary sizes are placeholders until the data is read.
    let mut probe = tc.clone();
    probe.model.src_vocab = 5;
    probe.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let filter = FilterConfig {
        oov_src_max: a.oov_max,
        oov_tgt_max: a.oov_max,
        max_len: a.max_len,
    };
    Ok((filter, tc))
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (filter, mut tc) = training_config(a)?;
    let (src, tgt) = aligned(&a.src, &a.tgt)?;
    if src.is_empty() {
        return Err(CliError::Data(format!("{} is empty", a.src.display())));
    }
    let sv = build_vocab(src.iter().map(|s| s.as_slice()), a.vocab_size).map_err(data("source vocabulary"))?;
    let tv = build_vocab(tgt.iter().map(|s| s.as_slice()), a.vocab_size).map_err(data("target vocabulary"))?;
    let pairs: Vec<SentencePair> = src
        .into_iter()
        .zip(tgt)
        .enumerate()
        .map(|(i, (s, t))| SentencePair { src: s, tgt: t, line: i + 1 })
        .collect();
    let (kept, report) = filter_pairs(pairs, &sv, &tv, &filter);
    say(
        out,
        format!(
            "kept {}\tempty {}\ttoo long {}\tsource OOV {}\ttarget OOV {}",
            report.kept,
            report.count(RejectReason::Empty),
            report.count(RejectReason::TooLong),
            report.count(RejectReason::SourceOov),
            report.count(RejectReason::TargetOov)
        ),
    )?;
    if kept.is_empty() {
        return Err(CliError::Data("no training pairs survive filtering".into()));
    }
    let train_ids = encode_pairs(&kept, &sv, &tv);
    let dev_ids = match (&a.dev_src, &a.dev_tgt) {
        (Some(ds), Some(dt)) => {
            let (s, t) = aligned(ds, dt)?;
            s.iter()
                .zip(&t)
                .filter(|(s, t)| !s.is_empty() && !t.is_empty())
                .map(|(s, t)| (sv.encode(s), tv.encode(t)))
                .collect()
        }
        _ => Vec::new(),
    };
    tc.model.src_vocab = sv.len();
    tc.model.tgt_vocab = tv.len();
    fs::create_dir_all(&a.out).map_err(data(a.out.display()))?;
    save_vocab(&sv, &a.out.join("src.vocab"))?;
    save_vocab(&tv, &a.out.join("tgt.vocab"))?;
    let mut metrics = Vec::new();
    let result = train(&train_ids, &dev_ids, &tc, |m| {
        let line = m.to_line();
        let _ = writeln!(out, "{line}");
        metrics.push(line);
    });
    write_lines(&a.out.join("metrics.tsv"), metrics)?;
    let outcome = match result {
        Ok(o) => o,
        Err(TrainError::Diverged { epoch, last_good }) => {
            let path = a.out.join("model.ckpt");
            last_good.save(&path).map_err(data(path.display()))?;
            return Err(CliError::Numeric(format!(
                "training diverged in epoch {epoch}; last finite parameters saved to {}",
                path.display()
            )));
        }
        Err(e) => return Err(CliError::Data(e.to_string())),
    };
    let path = a.out.join("model.ckpt");
    outcome.model.save(&path).map_err(data(path.display()))?;
    say(out, format!("best epoch {}; checkpoint {}", outcome.best_epoch, path.display()))
}

pub fn cmd_translate(a: &TranslateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.beam == 0 {
        return Err(CliError::Usage("--beam must be at least 1".into()));
    }
    let model = Model::load(&a.model.join("model.ckpt")).map_err(|e| CliError::Data(e.to_string()))?;
    let sv = load_vocab(&a.model.join("src.vocab"))?;
    let tv = load_vocab(&a.model.join("tgt.vocab"))?;
    if sv.len() != model.config.src_vocab || tv.len() != model.config.tgt_vocab {
        return Err(CliError::Data("vocabulary files do not match the checkpoint".into()));
    }
    let cfg = symbolizer_config(a.single_word_proper_nouns, None)?;
    let lines = read_tokens(&a.input)?;
    let mut outputs = Vec::with_capacity(lines.len());
    let mut unresolved = 0;
    for (i, toks) in lines.iter().enumerate() {
        let (src, rules) = if a.no_symbolize {
            (toks.clone(), SymbolRuleSet::new(i + 1))
        } else {
            symbolize_source_only(i + 1, toks, None::<&BTreeMap<String, String>>, &cfg)
        };
        let mut ids = sv.encode(&src);
        ids.push(EOS);
        let hyp = beam_search(&model, &ids, a.beam, None).map_err(|e| CliError::Data(e.to_string()))?;
        let words = tv.decode(&hyp.tokens);
        let restored = if a.no_symbolize {
            words
        } else {
            let d = desymbolize(&words, &rules, Fallback::Literal);
            unresolved += d.warnings;
            d.tokens
        };
        outputs.push(restored.join(" "));
    }
    write_lines(&a.output, outputs)?;
    say(out, format!("lines {}\tunresolved symbols {unresolved}", lines.len()))
}

pub fn cmd_bleu(a: &BleuArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (c, r) = aligned(&a.candidates, &a.references)?;
    say(out, corpus_bleu(&c, &r))
}

pub fn cmd_chart(a: &ChartArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let f = fs::File::open(&a.embeddings).map_err(data(a.embeddings.display()))?;
    let index = EmbeddingIndex::read(BufReader::new(f)).map_err(data(a.embeddings.display()))?;
    let metric = if a.euclidean { Metric::Euclidean } else { Metric::Cosine };
    let centering = if a.center_at_query { Centering::Query } else { Centering::Mean };
    let chart = chart_for_word(&index, &a.word, a.neighbours, metric, centering).map_err(|e| match e {
        ChartError::NoConvergence(_) => CliError::Numeric(e.to_string()),
        ChartError::TooFewNeighbours(_) | ChartError::TooManyNeighbours { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    say(out, "# words per axis: neighbours whose largest |coordinate| is on that axis")?;
    write!(out, "{}", render_chart_table(&chart, a.axes, a.k)).map_err(data("stdout"))
}

fn is_placeholder(t: &str) -> bool {
    symbol_of(t).is_some()
}

pub fn cmd_corpus_stats(a: &CorpusStatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.vocab_size == 0 {
        return Err(CliError::Usage("--vocab-size must be positive".into()));
    }
    let stats = |path: &Path| -> Result<_, CliError> {
        let toks = read_tokens(path)?;
        let placeholders = toks.iter().flatten().filter(|t| is_placeholder(t)).count();
        if toks.iter().all(|t| t.is_empty()) {
            let empty = CorpusStats { unique: 0, total: 0, coverage: 100.0 };
            return Ok((empty, placeholders));
        }
        let vocab = build_vocab(toks.iter().map(|t| t.as_slice()), a.vocab_size).map_err(data(path.display()))?;
        Ok((corpus_stats(&toks, &vocab), placeholders))
    };
    let (before, _) = stats(&a.before)?;
    match &a.after {
        None => {
            say(out, format!("{:<16}{:>12}", "", "Corpus"))?;
            say(out, format!("{:<16}{:>12}", "Unique words", before.unique))?;
            say(out, format!("{:<16}{:>12}", "Total words", before.total))?;
            say(out, format!("{:<16}{:>12.1}", "Coverage (%)", before.coverage))
        }
        Some(p) => {
            let (after, placeholders) = stats(p)?;
            say(out, format!("{:<16}{:>12}{:>12}", "", "Before", "After"))?;
            say(out, format!("{:<16}{:>12}{:>12}", "Unique words", before.unique, after.unique))?;
            say(out, format!("{:<16}{:>12}{:>12}", "Total words", before.total, after.total))?;
            say(out, format!("{:<16}{:>12.1}{:>12.1}", "Coverage (%)", before.coverage, after.coverage))?;
            say(out, format!("{:<16}{:>12}{:>12}", "Placeholders", 0, placeholders))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> String {
        let mut out = Vec::new();
        let mut v = vec!["ctxnmt".to_string()];
        v.extend(args.iter().map(|s| s.to_string()));
        run(v, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    fn run_err(args: &[&str]) -> CliError {
        let mut v = vec!["ctxnmt".to_string()];
        v.extend(args.iter().map(|s| s.to_string()));
        run(v, &mut Vec::new()).unwrap_err()
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run_err(&["frobnicate"]).exit_code(), 1);
        assert_eq!(run_err(&["bleu", "--candidates", "x"]).exit_code(), 1);
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let e = run_err(&["bleu", "--candidates", "/nonexistent/a", "--references", "/nonexistent/b"]);
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn config_file_supplies_defaults_and_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# comment\nbeam = 3\nno-symbolize=true\n").unwrap();
        let args: Vec<String> = ["ctxnmt", "--config", cfg.to_str().unwrap(), "translate", "--model", "m", "--input", "i", "--output", "o", "--beam", "5"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let cli = Cli::try_parse_from(splice_config(args).unwrap()).unwrap();
        match cli.command {
            Command::Translate(t) => {
                assert_eq!(t.beam, 5);
                assert!(t.no_symbolize);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn help_is_not_an_error() {
        assert!(run_ok(&["--help"]).contains("symbolize"));
    }
}
