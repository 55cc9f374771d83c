//! Typed-token symbolization of parallel sentence pairs.
//!
//! Numbers, multi-word capitalized phrases and all-caps acronyms that occur on
//! both sides of a pair are replaced by positional placeholders `<N_n>`,
//! `<S_n>` and `<C_n>`. Each pair carries its own rule set mapping every
//! placeholder back to its source and target surfaces. A token prefixed with
//! [`MERGE_MARK`] is glued to its predecessor when the text is restored, which
//! is how `2nd` survives being split into `2 ^^nd`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead};
use std::str::FromStr;

use thiserror::Error;

/// Prefix marking a token that attaches to the previous one without a space.
pub const MERGE_MARK: &str = "^^";

/// Functional words allowed inside a capitalized phrase.
pub const DEFAULT_BRIDGING_WORDS: [&str; 9] = ["of", "de", "du", "des", "von", "van", "the", "la", "le"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolError {
    #[error("not a number: {0:?}")]
    NotANumber(String),
    #[error("not a typed symbol: {0:?}")]
    NotASymbol(String),
    #[error("malformed rules line {line}: {msg}")]
    BadRulesLine { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Digit,
    ProperNoun,
    Acronym,
}

impl SymbolKind {
    pub fn letter(self) -> char {
        match self {
            SymbolKind::Digit => 'N',
            SymbolKind::ProperNoun => 'S',
            SymbolKind::Acronym => 'C',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c {
            'N' => Some(SymbolKind::Digit),
            'S' => Some(SymbolKind::ProperNoun),
            'C' => Some(SymbolKind::Acronym),
            _ => None,
        }
    }
}

/// A placeholder such as `<N_2>`. Indices start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedSymbol {
    pub kind: SymbolKind,
    pub index: usize,
}

impl TypedSymbol {
    pub fn new(kind: SymbolKind, index: usize) -> Self {
        assert!(index >= 1, "symbol indices start at 1");
        Self { kind, index }
    }

    /// `N:3` form used in the rules sidecar.
    pub fn key(&self) -> String {
        format!("{}:{}", self.kind.letter(), self.index)
    }

    fn from_key(s: &str) -> Option<Self> {
        let (k, n) = s.split_once(':')?;
        let mut chars = k.chars();
        let kind = SymbolKind::from_letter(chars.next()?)?;
        if chars.next().is_some() {
            return None;
        }
        parse_index(n).map(|index| Self { kind, index })
    }
}

fn parse_index(n: &str) -> Option<usize> {
    if n.is_empty() || n.starts_with('0') || !n.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    n.parse().ok()
}

impl fmt::Display for TypedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}_{}>", self.kind.letter(), self.index)
    }
}

impl FromStr for TypedSymbol {
    type Err = SymbolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || SymbolError::NotASymbol(s.to_string());
        let inner = s.strip_prefix('<').and_then(|r| r.strip_suffix('>')).ok_or_else(err)?;
        let (k, n) = inner.split_once('_').ok_or_else(err)?;
        let mut chars = k.chars();
        let kind = chars.next().and_then(SymbolKind::from_letter).ok_or_else(err)?;
        if chars.next().is_some() {
            return Err(err());
        }
        let index = parse_index(n).ok_or_else(err)?;
        Ok(Self { kind, index })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolRule {
    pub symbol: TypedSymbol,
    pub source: Vec<String>,
    pub target: Vec<String>,
}

/// Rules of one sentence pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolRuleSet {
    pub pair_id: usize,
    pub rules: Vec<SymbolRule>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

impl SymbolRuleSet {
    pub fn new(pair_id: usize) -> Self {
        Self {
            pair_id,
            rules: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, symbol: TypedSymbol) -> Option<&SymbolRule> {
        self.rules.iter().find(|r| r.symbol == symbol)
    }

    /// Sidecar line: the pair id, then `kind:index`, source and target
    /// surface for every rule, all TAB separated. Backslash, TAB, CR and LF
    /// inside surfaces are written as `\\`, `\t`, `\r` and `\n`.
    pub fn to_line(&self) -> String {
        let mut line = self.pair_id.to_string();
        for r in &self.rules {
            line.push('\t');
            line.push_str(&r.symbol.key());
            line.push('\t');
            line.push_str(&escape(&r.source.join(" ")));
            line.push('\t');
            line.push_str(&escape(&r.target.join(" ")));
        }
        line
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, SymbolError> {
        let bad = |msg: &str| SymbolError::BadRulesLine {
            line: line_no,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.trim_end_matches(['\n', '\r']).split('\t').collect();
        let pair_id = fields[0].parse().map_err(|_| bad("pair id is not a number"))?;
        if (fields.len() - 1) % 3 != 0 {
            return Err(bad("expected triples of kind:index, source, target"));
        }
        let mut set = Self::new(pair_id);
        for t in fields[1..].chunks(3) {
            let symbol = TypedSymbol::from_key(t[0]).ok_or_else(|| bad("bad symbol key"))?;
            if set.get(symbol).is_some() {
                return Err(bad("duplicate symbol"));
            }
            let surface = |s: &str| -> Result<Vec<String>, SymbolError> {
                let s = unescape(s).ok_or_else(|| bad("bad escape"))?;
                let toks: Vec<String> = s.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect();
                if toks.is_empty() {
                    return Err(bad("empty surface"));
                }
                Ok(toks)
            };
            set.rules.push(SymbolRule {
                symbol,
                source: surface(t[1])?,
                target: surface(t[2])?,
            });
        }
        Ok(set)
    }
}

/// Reads a whole sidecar file. Pair ids are taken from the file, not the
/// line position.
pub fn read_rules<R: BufRead>(r: R) -> Result<Vec<SymbolRuleSet>, io::Error> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        out.push(
            SymbolRuleSet::parse_line(&line, i + 1)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolizedPair {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub rules: SymbolRuleSet,
}

/// What to emit for a placeholder that has no rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    /// Keep the placeholder text.
    #[default]
    Literal,
    /// Emit nothing.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolizerConfig {
    /// Lowercase words that may sit between capitalized words of one phrase.
    pub bridging_words: Vec<String>,
    /// Accept single capitalized words as proper nouns.
    pub single_word_proper_nouns: bool,
    pub fallback: Fallback,
}

impl Default for SymbolizerConfig {
    fn default() -> Self {
        Self {
            bridging_words: DEFAULT_BRIDGING_WORDS.iter().map(|s| s.to_string()).collect(),
            single_word_proper_nouns: false,
            fallback: Fallback::Literal,
        }
    }
}

impl SymbolizerConfig {
    /// One word per line; blank lines and lines starting with `#` are skipped.
    pub fn read_bridging_words<R: BufRead>(r: R) -> io::Result<Vec<String>> {
        let mut words = Vec::new();
        for line in r.lines() {
            let line = line?;
            let w = line.trim();
            if !w.is_empty() && !w.starts_with('#') {
                words.push(w.to_lowercase());
            }
        }
        Ok(words)
    }

    fn is_bridging(&self, tok: &str) -> bool {
        self.bridging_words.iter().any(|w| w == tok)
    }

    fn is_functional(&self, tok: &str) -> bool {
        self.bridging_words.iter().any(|w| *w == tok.to_lowercase())
    }
}

// ----- token classes -------------------------------------------------------

fn split_mark(tok: &str) -> (&str, &str) {
    match tok.strip_prefix(MERGE_MARK) {
        Some(core) => (MERGE_MARK, core),
        None => ("", tok),
    }
}

/// Parses a placeholder, ignoring a leading merge mark.
pub fn symbol_of(tok: &str) -> Option<TypedSymbol> {
    split_mark(tok).1.parse().ok()
}

fn is_separator(c: char) -> bool {
    matches!(c, '.' | ',' | '\'' | ' ' | '\u{a0}' | '\u{202f}')
}

fn is_space_like(c: char) -> bool {
    matches!(c, '\'' | ' ' | '\u{a0}' | '\u{202f}')
}

/// Digits with single separators between them, starting and ending with a digit.
fn is_number(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    if chars.is_empty() || !chars[0].is_ascii_digit() || !chars[chars.len() - 1].is_ascii_digit() {
        return false;
    }
    chars.windows(2).all(|w| !(is_separator(w[0]) && is_separator(w[1])))
        && chars.iter().all(|&c| c.is_ascii_digit() || (is_separator(c) && c != ' '))
}

fn is_all_caps(tok: &str) -> bool {
    tok.chars().count() >= 2 && tok.chars().all(|c| c.is_alphabetic() && c.is_uppercase())
}

fn is_capitalized(tok: &str) -> bool {
    let first_upper = tok.chars().next().is_some_and(|c| c.is_uppercase());
    let shouting = tok.chars().count() >= 2 && !tok.chars().any(|c| c.is_lowercase());
    first_upper && !shouting
}

fn is_roman(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(|c| "IVXLCDM".contains(c))
}

fn next_index(tokens: &[String], kind: SymbolKind) -> usize {
    tokens
        .iter()
        .filter_map(|t| symbol_of(t))
        .filter(|s| s.kind == kind)
        .map(|s| s.index)
        .max()
        .unwrap_or(0)
        + 1
}

// ----- digits ----------------------------------------------------------------

/// Splits tokens at boundaries between numbers and other characters.
///
/// Every piece after the first carries the merge mark, so `137Kg` becomes
/// `137`, `^^Kg`. Pure numbers, digit-free tokens and placeholders pass
/// through unchanged.
pub fn separate_digit_units<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let tok = tok.as_ref();
        let (mark, core) = split_mark(tok);
        if symbol_of(tok).is_some() || is_number(core) || !core.chars().any(|c| c.is_ascii_digit()) {
            out.push(tok.to_string());
            continue;
        }
        let chars: Vec<char> = core.chars().collect();
        let mut pieces: Vec<String> = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let start = i;
            if chars[i].is_ascii_digit() {
                // A separator stays inside the number only between two digits.
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || (is_separator(chars[i])
                            && chars[i] != ' '
                            && i + 1 < chars.len()
                            && chars[i + 1].is_ascii_digit()
                            && chars[i - 1].is_ascii_digit()))
                {
                    i += 1;
                }
            } else {
                while i < chars.len() && !chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            pieces.push(chars[start..i].iter().collect());
        }
        for (k, p) in pieces.into_iter().enumerate() {
            if k == 0 {
                out.push(format!("{mark}{p}"));
            } else {
                out.push(format!("{MERGE_MARK}{p}"));
            }
        }
    }
    out
}

/// Canonical form of a written number, used only to compare numbers across
/// languages.
///
/// Grouping separators are dropped and a decimal mark becomes `.`. With
/// several separator kinds, the last one is the decimal mark when it occurs
/// once and differs from the others. With one kind used repeatedly, it groups.
/// A single occurrence of a space-like separator groups. A single `.` or `,`
/// groups when exactly three digits follow and the leading group is one to
/// three digits other than `0`; otherwise it is a decimal mark.
pub fn normalize_number(token: &str) -> Result<String, SymbolError> {
    let err = || SymbolError::NotANumber(token.to_string());
    let chars: Vec<char> = token.chars().collect();
    if chars.is_empty() || !chars[0].is_ascii_digit() || !chars[chars.len() - 1].is_ascii_digit() {
        return Err(err());
    }
    let mut groups: Vec<String> = vec![String::new()];
    let mut seps: Vec<char> = Vec::new();
    for &c in &chars {
        if c.is_ascii_digit() {
            groups.last_mut().unwrap().push(c);
        } else if is_separator(c) {
            if groups.last().unwrap().is_empty() {
                return Err(err());
            }
            seps.push(c);
            groups.push(String::new());
        } else {
            return Err(err());
        }
    }
    let Some(&last) = seps.last() else {
        return Ok(groups.concat());
    };
    let occurrences = seps.iter().filter(|&&s| s == last).count();
    let single_kind = seps.iter().all(|&s| s == last);
    let decimal = if !single_kind {
        occurrences == 1
    } else if seps.len() > 1 || is_space_like(last) {
        false
    } else {
        let lead = &groups[0];
        let trailing_three = groups[1].len() == 3;
        !(trailing_three && lead != "0" && lead.len() <= 3)
    };
    if decimal {
        let n = groups.len();
        Ok(format!("{}.{}", groups[..n - 1].concat(), groups[n - 1]))
    } else {
        Ok(groups.concat())
    }
}

fn canonical_number(tok: &str) -> Option<String> {
    if symbol_of(tok).is_some() {
        return None;
    }
    let core = split_mark(tok).1;
    if !is_number(core) {
        return None;
    }
    normalize_number(core).ok()
}

fn replace_core(tok: &str, sym: TypedSymbol) -> String {
    format!("{}{}", split_mark(tok).0, sym)
}

/// Pairs numbers with equal canonical forms and replaces them by `<N_n>`.
///
/// Source numbers are visited left to right; each takes the leftmost unused
/// target number with the same canonical form.
pub fn symbolize_digits(src: &[String], tgt: &[String]) -> (Vec<String>, Vec<String>, Vec<SymbolRule>) {
    let mut s = src.to_vec();
    let mut t = tgt.to_vec();
    let mut used = vec![false; tgt.len()];
    let tgt_canon: Vec<Option<String>> = tgt.iter().map(|x| canonical_number(x)).collect();
    let mut n = next_index(src, SymbolKind::Digit).max(next_index(tgt, SymbolKind::Digit));
    let mut rules = Vec::new();
    for i in 0..src.len() {
        let Some(c) = canonical_number(&src[i]) else { continue };
        let hit = (0..tgt.len()).find(|&j| !used[j] && tgt_canon[j].as_deref() == Some(c.as_str()));
        if let Some(j) = hit {
            used[j] = true;
            let sym = TypedSymbol::new(SymbolKind::Digit, n);
            n += 1;
            rules.push(SymbolRule {
                symbol: sym,
                source: vec![split_mark(&src[i]).1.to_string()],
                target: vec![split_mark(&tgt[j]).1.to_string()],
            });
            s[i] = replace_core(&src[i], sym);
            t[j] = replace_core(&tgt[j], sym);
        }
    }
    (s, t, rules)
}

// ----- proper nouns ------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Content,
    Bridge,
    Other,
}

/// Maximal capitalized runs as `(start, end_exclusive)`, trimmed so they begin
/// and end with a content word.
fn capitalized_runs(tokens: &[String], cfg: &SymbolizerConfig) -> (Vec<(usize, usize)>, Vec<Role>) {
    let mut roles = vec![Role::Other; tokens.len()];
    let mut runs = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !is_capitalized(&tokens[i]) {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i + 1;
        roles[i] = Role::Content;
        let mut j = i + 1;
        while j < tokens.len() {
            let t = &tokens[j];
            if is_capitalized(t) || is_roman(t) {
                roles[j] = Role::Content;
                end = j + 1;
            } else if cfg.is_bridging(t) {
                roles[j] = Role::Bridge;
            } else {
                break;
            }
            j += 1;
        }
        for r in roles.iter_mut().take(j).skip(end) {
            *r = Role::Other;
        }
        runs.push((start, end));
        i = end.max(start + 1);
    }
    (runs, roles)
}

fn content_words(roles: &[Role], a: usize, b: usize) -> usize {
    roles[a..b].iter().filter(|&&r| r == Role::Content).count()
}

fn min_words(cfg: &SymbolizerConfig) -> usize {
    if cfg.single_word_proper_nouns {
        1
    } else {
        2
    }
}

fn find_unused(hay: &[String], used: &[bool], needle: &[String]) -> Option<usize> {
    if needle.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - needle.len())
        .find(|&p| hay[p..p + needle.len()] == *needle && used[p..p + needle.len()].iter().all(|u| !u))
}

/// Rewrites `tokens`, replacing each `(start, end, symbol)` span by its symbol.
fn splice(tokens: &[String], spans: &[(usize, usize, TypedSymbol)]) -> Vec<String> {
    let mut spans = spans.to_vec();
    spans.sort_by_key(|s| s.0);
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    for (a, b, sym) in spans {
        out.extend_from_slice(&tokens[i..a]);
        out.push(sym.to_string());
        i = b;
    }
    out.extend_from_slice(&tokens[i..]);
    out
}

/// Replaces capitalized phrases present verbatim on both sides by `<S_n>`.
///
/// Candidates are every sub-span of a capitalized run that starts and ends
/// with a content word and holds at least two of them. Longer candidates are
/// matched first, then earlier ones. Indices follow source order.
pub fn symbolize_proper_nouns(
    src: &[String],
    tgt: &[String],
    cfg: &SymbolizerConfig,
) -> (Vec<String>, Vec<String>, Vec<SymbolRule>) {
    let (runs, roles) = capitalized_runs(src, cfg);
    let mut cands = Vec::new();
    for &(a, b) in &runs {
        for i in a..b {
            for j in i + 1..=b {
                if roles[i] != Role::Content || roles[j - 1] != Role::Content {
                    continue;
                }
                if content_words(&roles, i, j) < min_words(cfg) {
                    continue;
                }
                if j - i == 1 && cfg.is_functional(&src[i]) {
                    continue;
                }
                cands.push((i, j));
            }
        }
    }
    cands.sort_by(|x, y| (y.1 - y.0).cmp(&(x.1 - x.0)).then(x.0.cmp(&y.0)));

    let mut src_used = vec![false; src.len()];
    let mut tgt_used = vec![false; tgt.len()];
    let mut matches = Vec::new();
    for (i, j) in cands {
        if src_used[i..j].iter().any(|&u| u) {
            continue;
        }
        if let Some(p) = find_unused(tgt, &tgt_used, &src[i..j]) {
            src_used[i..j].iter_mut().for_each(|u| *u = true);
            tgt_used[p..p + (j - i)].iter_mut().for_each(|u| *u = true);
            matches.push((i, j, p));
        }
    }
    matches.sort();
    let mut n = next_index(src, SymbolKind::ProperNoun).max(next_index(tgt, SymbolKind::ProperNoun));
    let mut rules = Vec::new();
    let mut s_spans = Vec::new();
    let mut t_spans = Vec::new();
    for (i, j, p) in matches {
        let sym = TypedSymbol::new(SymbolKind::ProperNoun, n);
        n += 1;
        rules.push(SymbolRule {
            symbol: sym,
            source: src[i..j].to_vec(),
            target: tgt[p..p + (j - i)].to_vec(),
        });
        s_spans.push((i, j, sym));
        t_spans.push((p, p + (j - i), sym));
    }
    (splice(src, &s_spans), splice(tgt, &t_spans), rules)
}

// ----- acronyms ----------------------------------------------------------------

/// Replaces all-caps tokens by `<C_n>`: verbatim matches first, then the last
/// remaining acronym of each side if exactly one is left on both.
pub fn symbolize_acronyms(src: &[String], tgt: &[String]) -> (Vec<String>, Vec<String>, Vec<SymbolRule>) {
    let mut tgt_used = vec![false; tgt.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut src_left = Vec::new();
    for i in (0..src.len()).filter(|&i| is_all_caps(&src[i])) {
        match (0..tgt.len()).find(|&j| !tgt_used[j] && is_all_caps(&tgt[j]) && tgt[j] == src[i]) {
            Some(j) => {
                tgt_used[j] = true;
                pairs.push((i, j));
            }
            None => src_left.push(i),
        }
    }
    let tgt_left: Vec<usize> = (0..tgt.len()).filter(|&j| !tgt_used[j] && is_all_caps(&tgt[j])).collect();
    if src_left.len() == 1 && tgt_left.len() == 1 {
        pairs.push((src_left[0], tgt_left[0]));
    }
    pairs.sort();
    let mut s = src.to_vec();
    let mut t = tgt.to_vec();
    let mut n = next_index(src, SymbolKind::Acronym).max(next_index(tgt, SymbolKind::Acronym));
    let mut rules = Vec::new();
    for (i, j) in pairs {
        let sym = TypedSymbol::new(SymbolKind::Acronym, n);
        n += 1;
        rules.push(SymbolRule {
            symbol: sym,
            source: vec![src[i].clone()],
            target: vec![tgt[j].clone()],
        });
        s[i] = sym.to_string();
        t[j] = sym.to_string();
    }
    (s, t, rules)
}

// ----- whole pairs -------------------------------------------------------------

/// Unit separation on both sides, then digits, proper nouns and acronyms.
pub fn symbolize_pair<S: AsRef<str>>(
    pair_id: usize,
    src: &[S],
    tgt: &[S],
    cfg: &SymbolizerConfig,
) -> SymbolizedPair {
    let s = separate_digit_units(src);
    let t = separate_digit_units(tgt);
    let (s, t, mut rules) = symbolize_digits(&s, &t);
    let (s, t, r) = symbolize_proper_nouns(&s, &t, cfg);
    rules.extend(r);
    let (s, t, r) = symbolize_acronyms(&s, &t);
    rules.extend(r);
    SymbolizedPair {
        source: s,
        target: t,
        rules: SymbolRuleSet { pair_id, rules },
    }
}

/// Test-time symbolization of a source sentence alone.
///
/// Every number, every capitalized run of at least two content words and
/// every acronym is replaced. The target surface copies the source unless
/// `hints` maps the space-joined source surface to a translation.
pub fn symbolize_source_only<S: AsRef<str>>(
    pair_id: usize,
    src: &[S],
    hints: Option<&BTreeMap<String, String>>,
    cfg: &SymbolizerConfig,
) -> (Vec<String>, SymbolRuleSet) {
    let mut rules = Vec::new();
    let target_for = |surface: &[String]| -> Vec<String> {
        hints
            .and_then(|h| h.get(&surface.join(" ")))
            .map(|t| t.split(' ').filter(|x| !x.is_empty()).map(str::to_string).collect::<Vec<_>>())
            .filter(|v| !v.is_empty())
            .unwrap_or_else(|| surface.to_vec())
    };

    let mut toks = separate_digit_units(src);
    let mut n = next_index(&toks, SymbolKind::Digit);
    for tok in toks.iter_mut() {
        if canonical_number(tok).is_some() {
            let sym = TypedSymbol::new(SymbolKind::Digit, n);
            n += 1;
            let surface = vec![split_mark(tok).1.to_string()];
            rules.push(SymbolRule {
                symbol: sym,
                target: target_for(&surface),
                source: surface,
            });
            *tok = replace_core(tok, sym);
        }
    }

    let (runs, roles) = capitalized_runs(&toks, cfg);
    let mut spans = Vec::new();
    let mut n = next_index(&toks, SymbolKind::ProperNoun);
    for (mut a, b) in runs {
        while a < b && cfg.is_functional(&toks[a]) && content_words(&roles, a + 1, b) >= min_words(cfg) {
            a += 1;
            while a < b && roles[a] != Role::Content {
                a += 1;
            }
        }
        if content_words(&roles, a, b) < min_words(cfg) || (b - a == 1 && cfg.is_functional(&toks[a])) {
            continue;
        }
        let sym = TypedSymbol::new(SymbolKind::ProperNoun, n);
        n += 1;
        let surface = toks[a..b].to_vec();
        rules.push(SymbolRule {
            symbol: sym,
            target: target_for(&surface),
            source: surface,
        });
        spans.push((a, b, sym));
    }
    let mut toks = splice(&toks, &spans);

    let mut n = next_index(&toks, SymbolKind::Acronym);
    for tok in toks.iter_mut() {
        if is_all_caps(tok) {
            let sym = TypedSymbol::new(SymbolKind::Acronym, n);
            n += 1;
            let surface = vec![tok.clone()];
            rules.push(SymbolRule {
                symbol: sym,
                target: target_for(&surface),
                source: surface,
            });
            *tok = sym.to_string();
        }
    }
    (toks, SymbolRuleSet { pair_id, rules })
}

/// Restored tokens plus the number of placeholders that had no rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Desymbolized {
    pub tokens: Vec<String>,
    pub warnings: usize,
}

/// Which surface of a rule to restore.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    Source,
    #[default]
    Target,
}

/// Replaces placeholders by their target surfaces, then glues every
/// merge-marked token to its predecessor.
pub fn desymbolize<S: AsRef<str>>(tokens: &[S], rules: &SymbolRuleSet, fallback: Fallback) -> Desymbolized {
    desymbolize_side(tokens, rules, Side::Target, fallback)
}

/// [`desymbolize`] with a choice of which surface to restore.
pub fn desymbolize_side<S: AsRef<str>>(
    tokens: &[S],
    rules: &SymbolRuleSet,
    side: Side,
    fallback: Fallback,
) -> Desymbolized {
    let mut expanded: Vec<String> = Vec::with_capacity(tokens.len());
    let mut warnings = 0;
    for tok in tokens {
        let tok = tok.as_ref();
        let (mark, core) = split_mark(tok);
        let Ok(sym) = core.parse::<TypedSymbol>() else {
            expanded.push(tok.to_string());
            continue;
        };
        match rules.get(sym) {
            Some(rule) => {
                let surface = match side {
                    Side::Source => &rule.source,
                    Side::Target => &rule.target,
                };
                for (k, t) in surface.iter().enumerate() {
                    expanded.push(if k == 0 { format!("{mark}{t}") } else { t.clone() });
                }
            }
            None => {
                warnings += 1;
                match fallback {
                    Fallback::Literal => expanded.push(tok.to_string()),
                    // A dropped placeholder still passes its merge mark on.
                    Fallback::Drop => {
                        if !mark.is_empty() {
                            expanded.push(MERGE_MARK.to_string());
                        }
                    }
                }
            }
        }
    }
    let mut out: Vec<String> = Vec::with_capacity(expanded.len());
    for tok in expanded {
        match tok.strip_prefix(MERGE_MARK) {
            Some(rest) => match out.last_mut() {
                Some(prev) => prev.push_str(rest),
                None if !rest.is_empty() => out.push(rest.to_string()),
                None => {}
            },
            None => out.push(tok),
        }
    }
    Desymbolized { tokens: out, warnings }
}
