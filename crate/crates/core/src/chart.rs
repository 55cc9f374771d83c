//! Local charts of a word-embedding manifold.
//!
//! For a query word the `N - 1` nearest neighbours are gathered, the `N`
//! vectors are run through PCA, and each principal axis is reported as the
//! list of words that lie mostly along it.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("unknown word {word:?}; closest spellings: {}", suggestions.join(", "))]
    UnknownWord { word: String, suggestions: Vec<String> },
    #[error("asked for {requested} neighbours but only {available} other words exist")]
    TooManyNeighbours { requested: usize, available: usize },
    #[error("a chart needs at least 1 neighbour, got {0}")]
    TooFewNeighbours(usize),
    #[error("duplicate word {0:?} in embedding index")]
    DuplicateWord(String),
    #[error("vector for {word:?} has {got} values, expected {expected}")]
    DimensionMismatch { word: String, got: usize, expected: usize },
    #[error("embedding file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("axis {axis} is degenerate (only {usable} axes carry variance)")]
    DegenerateAxis { axis: usize, usable: usize },
    #[error("Jacobi iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    /// Subtract the mean of all chart points.
    #[default]
    Mean,
    /// Subtract the query vector itself.
    Query,
}

/// Immutable table of word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingIndex {
    words: Vec<String>,
    data: Vec<f64>,
    dim: usize,
    ids: HashMap<String, usize>,
}

impl EmbeddingIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            words: Vec::new(),
            data: Vec::new(),
            dim,
            ids: HashMap::new(),
        }
    }

    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self, ChartError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut idx = Self::new(dim);
        for (w, v) in rows {
            idx.push(w.into(), &v)?;
        }
        Ok(idx)
    }

    pub fn push(&mut self, word: String, vector: &[f64]) -> Result<(), ChartError> {
        if vector.len() != self.dim {
            return Err(ChartError::DimensionMismatch {
                word,
                got: vector.len(),
                expected: self.dim,
            });
        }
        if self.ids.contains_key(&word) {
            return Err(ChartError::DuplicateWord(word));
        }
        self.ids.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.ids.get(word).map(|&i| self.vector(i))
    }

    /// Plain-text vectors: a `count dim` header, then one `word v1 .. vdim`
    /// line per word.
    pub fn read<R: BufRead>(r: R) -> Result<Self, ChartError> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(ChartError::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let nums: Vec<usize> = header.split_whitespace().filter_map(|x| x.parse().ok()).collect();
        let [count, dim] = nums[..] else {
            return Err(ChartError::Parse {
                line: 1,
                msg: format!("expected \"count dim\", got {header:?}"),
            });
        };
        let mut idx = Self::new(dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap().to_string();
            let v: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let v = v.map_err(|e| ChartError::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?;
            idx.push(word, &v)?;
        }
        if idx.len() != count {
            return Err(ChartError::Parse {
                line: 1,
                msg: format!("header announces {count} words, file has {}", idx.len()),
            });
        }
        Ok(idx)
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for x in self.vector(i) {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Up to `k` known words closest to `word` by edit distance.
    pub fn suggestions(&self, word: &str, k: usize) -> Vec<String> {
        let mut scored: Vec<(usize, &String)> = self.words.iter().map(|w| (strsim::levenshtein(word, w), w)).collect();
        scored.sort();
        scored.into_iter().take(k).map(|(_, w)| w.clone()).collect()
    }

    fn require(&self, word: &str) -> Result<usize, ChartError> {
        self.ids.get(word).copied().ok_or_else(|| ChartError::UnknownWord {
            word: word.to_string(),
            suggestions: self.suggestions(word, 3),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity, defined as 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbour {
    pub word: String,
    /// Cosine similarity, or negated Euclidean distance. Higher is closer.
    pub score: f64,
}

/// The `n - 1` words closest to `word`, best first, ties in lexicographic order.
pub fn nearest_neighbors(
    index: &EmbeddingIndex,
    word: &str,
    n: usize,
    metric: Metric,
) -> Result<Vec<Neighbour>, ChartError> {
    let q = index.require(word)?;
    let wanted = n.saturating_sub(1);
    if wanted > index.len() - 1 {
        return Err(ChartError::TooManyNeighbours {
            requested: wanted,
            available: index.len() - 1,
        });
    }
    let qv = index.vector(q);
    let mut scored: Vec<(f64, &String)> = (0..index.len())
        .filter(|&i| i != q)
        .map(|i| {
            let v = index.vector(i);
            let s = match metric {
                Metric::Cosine => cosine(qv, v),
                Metric::Euclidean => -qv.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            };
            (s, &index.words[i])
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(scored
        .into_iter()
        .take(wanted)
        .map(|(score, w)| Neighbour { word: w.clone(), score })
        .collect())
}

/// Eigen-decomposition of a symmetric `n x n` row-major matrix by cyclic
/// Jacobi rotations. Returns eigenvalues and the matching unit eigenvectors,
/// unsorted.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), ChartError> {
    const MAX_SWEEPS: usize = 100;
    const TOL: f64 = 1e-12;
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut converged = off(&a) <= TOL * scale;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&a) <= TOL * scale;
    }
    if !converged {
        return Err(ChartError::NoConvergence(MAX_SWEEPS));
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i * n + j]).collect()).collect();
    Ok((values, vectors))
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Flips `v` so that its largest-magnitude component is non-negative.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalChart {
    /// Chart words, query first.
    pub words: Vec<String>,
    /// Orthonormal principal axes, one per embedding dimension.
    pub axes: Vec<Vec<f64>>,
    /// Variance along each axis, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// `coordinates[i][a]` is point `i` projected on axis `a`.
    pub coordinates: Vec<Vec<f64>>,
    /// The point the coordinates are relative to.
    pub origin: Vec<f64>,
    /// Covariance of the chart points around `origin`, row-major.
    pub covariance: Vec<f64>,
    /// All points coincide; axes are the canonical basis.
    pub degenerate: bool,
}

impl LocalChart {
    /// Axes whose variance is distinguishable from zero.
    pub fn usable_axes(&self) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        let tol = 1e-10 * top.max(1e-300);
        if self.degenerate {
            return 0;
        }
        self.eigenvalues.iter().take_while(|&&l| l > tol).count()
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }
}

/// PCA over `points`, whose first entry is the query.
///
/// When there are fewer points than dimensions the eigenproblem is solved on
/// the `N x N` Gram matrix and the remaining axes are completed to an
/// orthonormal basis. Covariance divides by `N`.
pub fn local_chart_pca(points: &[(&str, &[f64])], centering: Centering) -> Result<LocalChart, ChartError> {
    if points.len() < 2 {
        return Err(ChartError::TooFewNeighbours(points.len().saturating_sub(1)));
    }
    let n = points.len();
    let e = points[0].1.len();
    for (w, v) in points {
        if v.len() != e {
            return Err(ChartError::DimensionMismatch {
                word: w.to_string(),
                got: v.len(),
                expected: e,
            });
        }
    }
    let origin: Vec<f64> = match centering {
        Centering::Query => points[0].1.to_vec(),
        Centering::Mean => (0..e)
            .map(|d| points.iter().map(|(_, v)| v[d]).sum::<f64>() / n as f64)
            .collect(),
    };
    let x: Vec<Vec<f64>> = points
        .iter()
        .map(|(_, v)| v.iter().zip(&origin).map(|(a, o)| a - o).collect())
        .collect();
    let mut cov = vec![0.0; e * e];
    for row in &x {
        for i in 0..e {
            for j in 0..e {
                cov[i * e + j] += row[i] * row[j];
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n as f64);

    let mut pairs: Vec<(f64, Vec<f64>)> = if n < e {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] = dot(&x[i], &x[j]) / n as f64;
            }
        }
        let (vals, vecs) = jacobi_eigen(&gram, n)?;
        vals.into_iter()
            .zip(vecs)
            .map(|(l, w)| {
                let mut axis = vec![0.0; e];
                for (wi, row) in w.iter().zip(&x) {
                    for d in 0..e {
                        axis[d] += wi * row[d];
                    }
                }
                (l, axis)
            })
            .collect()
    } else {
        let (vals, vecs) = jacobi_eigen(&cov, e)?;
        vals.into_iter().zip(vecs).collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top = pairs.first().map(|p| p.0).unwrap_or(0.0);
    let scale = cov.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let degenerate = scale == 0.0 || top <= 1e-14 * scale.max(1e-300) || top <= 0.0;

    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(e);
    let mut eigenvalues = Vec::with_capacity(e);
    if !degenerate {
        let keep = 1e-10 * top;
        for (l, mut v) in pairs {
            if l <= keep {
                break;
            }
            // Re-orthogonalize against earlier axes; Gram-derived vectors drift slightly.
            for a in &axes {
                let p = dot(&v, a);
                v.iter_mut().zip(a).for_each(|(x, y)| *x -= p * y);
            }
            if normalize(&mut v) == 0.0 {
                continue;
            }
            fix_sign(&mut v);
            axes.push(v);
            eigenvalues.push(l);
        }
    }
    // Complete the basis with canonical vectors orthogonal to what is there.
    for d in 0..e {
        if axes.len() == e {
            break;
        }
        let mut v = vec![0.0; e];
        v[d] = 1.0;
        for _ in 0..2 {
            for a in &axes {
                let p = dot(&v, a);
                v.iter_mut().zip(a).for_each(|(x, y)| *x -= p * y);
            }
        }
        if normalize(&mut v) > 1e-6 {
            fix_sign(&mut v);
            axes.push(v);
            eigenvalues.push(0.0);
        }
    }
    let coordinates = x
        .iter()
        .map(|row| axes.iter().map(|a| dot(row, a)).collect())
        .collect();
    Ok(LocalChart {
        words: points.iter().map(|(w, _)| w.to_string()).collect(),
        axes,
        eigenvalues,
        coordinates,
        origin,
        covariance: cov,
        degenerate,
    })
}

/// Builds the chart of `word` from its `n - 1` nearest neighbours.
pub fn chart_for_word(
    index: &EmbeddingIndex,
    word: &str,
    n: usize,
    metric: Metric,
    centering: Centering,
) -> Result<LocalChart, ChartError> {
    let neighbours = nearest_neighbors(index, word, n, metric)?;
    let mut points: Vec<(&str, &[f64])> = vec![(word, index.get(word).unwrap())];
    for nb in &neighbours {
        points.push((nb.word.as_str(), index.get(&nb.word).unwrap()));
    }
    local_chart_pca(&points, centering)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisEntry {
    pub word: String,
    pub coordinate: f64,
    pub is_query: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisReport {
    /// 1-based axis number.
    pub axis: usize,
    pub eigenvalue: f64,
    /// Ordered by signed coordinate.
    pub entries: Vec<AxisEntry>,
}

impl fmt::Display for AxisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self
            .entries
            .iter()
            .map(|e| if e.is_query { format!("({})", e.word) } else { e.word.clone() })
            .collect();
        write!(f, "{}", words.join(" "))
    }
}

/// Words lying mostly along `axis` (0-based).
///
/// A neighbour qualifies when its absolute coordinate on `axis` is at least
/// as large as on every other usable axis. The `k` qualifying neighbours with
/// the largest absolute coordinate are kept. The query word is always listed
/// at its own position.
pub fn axis_report(chart: &LocalChart, axis: usize, k: usize) -> Result<AxisReport, ChartError> {
    let usable = chart.usable_axes();
    if axis >= usable {
        return Err(ChartError::DegenerateAxis { axis: axis + 1, usable });
    }
    let mut picked: Vec<(f64, usize)> = Vec::new();
    for (i, coords) in chart.coordinates.iter().enumerate().skip(1) {
        let c = coords[axis].abs();
        if coords[..usable].iter().all(|o| c >= o.abs()) {
            picked.push((c, i));
        }
    }
    picked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| chart.words[a.1].cmp(&chart.words[b.1])));
    picked.truncate(k);
    let mut entries: Vec<AxisEntry> = picked
        .into_iter()
        .map(|(_, i)| AxisEntry {
            word: chart.words[i].clone(),
            coordinate: chart.coordinates[i][axis],
            is_query: false,
        })
        .collect();
    if k > 0 {
        entries.push(AxisEntry {
            word: chart.words[0].clone(),
            coordinate: chart.coordinates[0][axis],
            is_query: true,
        });
    }
    entries.sort_by(|a, b| a.coordinate.total_cmp(&b.coordinate).then_with(|| a.word.cmp(&b.word)));
    Ok(AxisReport {
        axis: axis + 1,
        eigenvalue: chart.eigenvalues[axis],
        entries,
    })
}

/// Table-style text for the first `axes` usable axes of a chart.
pub fn render_chart_table(chart: &LocalChart, axes: usize, k: usize) -> String {
    let query = &chart.words[0];
    if chart.degenerate {
        return format!("{query}\tdegenerate chart: all chart points coincide\n");
    }
    let mut out = String::new();
    let shown = axes.min(chart.usable_axes());
    for a in 0..shown {
        let report = axis_report(chart, a, k).expect("axis is usable");
        let label = if a == 0 { query.as_str() } else { "" };
        out.push_str(&format!("{label:<16}\t{}\t{report}\n", a + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let idx = EmbeddingIndex::from_rows(3, [("a", one_hot(3, 0)), ("c", one_hot(3, 1)), ("b", one_hot(3, 2))]).unwrap();
        let nn = nearest_neighbors(&idx, "a", 2, Metric::Cosine).unwrap();
        assert_eq!(nn.len(), 1);
        assert_eq!(nn[0].word, "b");
    }

    #[test]
    fn duplicate_vector_ranks_first() {
        let idx = EmbeddingIndex::from_rows(
            2,
            [("q", vec![1.0, 2.0]), ("z", vec![1.0, 2.0]), ("a", vec![2.0, 1.0])],
        )
        .unwrap();
        let nn = nearest_neighbors(&idx, "q", 3, Metric::Cosine).unwrap();
        assert_eq!(nn[0].word, "z");
        assert!((nn[0].score - 1.0).abs() < 1e-15);
        let nn = nearest_neighbors(&idx, "q", 2, Metric::Euclidean).unwrap();
        assert_eq!(nn[0].word, "z");
    }

    #[test]
    fn unknown_word_suggests_spellings() {
        let idx = EmbeddingIndex::from_rows(1, [("notebook", vec![1.0]), ("power", vec![2.0])]).unwrap();
        match nearest_neighbors(&idx, "notebok", 2, Metric::Cosine) {
            Err(ChartError::UnknownWord { suggestions, .. }) => assert_eq!(suggestions[0], "notebook"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            nearest_neighbors(&idx, "power", 3, Metric::Cosine),
            Err(ChartError::TooManyNeighbours { .. })
        ));
    }

    #[test]
    fn text_format_round_trip() {
        let idx = EmbeddingIndex::from_rows(2, [("x", vec![0.5, -1.25]), ("y", vec![1e-3, 3.0])]).unwrap();
        let mut buf = Vec::new();
        idx.write(&mut buf).unwrap();
        assert_eq!(EmbeddingIndex::read(&buf[..]).unwrap(), idx);
        assert!(EmbeddingIndex::read(&b"3 2\nx 1 2\n"[..]).is_err());
        assert!(EmbeddingIndex::read(&b"1 2\nx 1\n"[..]).is_err());
        assert!(EmbeddingIndex::from_rows(1, [("x", vec![1.0]), ("x", vec![2.0])]).is_err());
    }

    #[test]
    fn jacobi_diagonalizes() {
        let m = [4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 1.0];
        let (vals, vecs) = jacobi_eigen(&m, 3).unwrap();
        for (l, v) in vals.iter().zip(&vecs) {
            for i in 0..3 {
                let mv: f64 = (0..3).map(|j| m[i * 3 + j] * v[j]).sum();
                assert!((mv - l * v[i]).abs() < 1e-12);
            }
        }
        assert!((vals.iter().sum::<f64>() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn two_points_give_a_single_axis() {
        let a = [1.0, 2.0, 0.0];
        let b = [3.0, 2.0, 0.0];
        let chart = local_chart_pca(&[("a", &a[..]), ("b", &b[..])], Centering::Mean).unwrap();
        assert_eq!(chart.usable_axes(), 1);
        assert!((chart.axes[0][0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let p = [1.0, 2.0, 3.0];
        let pts: Vec<(&str, &[f64])> = vec![("a", &p), ("b", &p), ("c", &p)];
        let chart = local_chart_pca(&pts, Centering::Mean).unwrap();
        assert!(chart.degenerate);
        assert!(chart.eigenvalues.iter().all(|&l| l == 0.0));
        assert_eq!(chart.axes[0], one_hot(3, 0));
        assert!(axis_report(&chart, 0, 3).is_err());
        assert!(render_chart_table(&chart, 2, 3).contains("degenerate"));
    }

    #[test]
    fn symmetric_pair_spans_one_axis() {
        let c = [1.0, 1.0, 1.0, 1.0];
        let u = [0.0, 0.6, 0.0, -0.8];
        let plus: Vec<f64> = c.iter().zip(&u).map(|(a, b)| a + 2.0 * b).collect();
        let minus: Vec<f64> = c.iter().zip(&u).map(|(a, b)| a - 2.0 * b).collect();
        let pts: Vec<(&str, &[f64])> = vec![("q", &c), ("p", &plus), ("m", &minus)];
        for centering in [Centering::Mean, Centering::Query] {
            let chart = local_chart_pca(&pts, centering).unwrap();
            assert!((dot(&chart.axes[0], &u).abs() - 1.0).abs() < 1e-12);
            assert!(chart.eigenvalues[1].abs() < 1e-12);
            assert_eq!(chart.usable_axes(), 1);
            let r = axis_report(&chart, 0, 5).unwrap();
            let words: Vec<&str> = r.entries.iter().map(|e| e.word.as_str()).collect();
            // The largest component of u is negative, so the axis points along -u.
            assert_eq!(words, ["p", "q", "m"]);
            assert!(r.entries[0].coordinate < 0.0 && r.entries[2].coordinate > 0.0);
            assert_eq!(r.to_string(), "p (q) m");
            assert!(axis_report(&chart, 0, 0).unwrap().entries.is_empty());
        }
    }

    #[test]
    fn axes_are_orthonormal_and_reconstruct() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..9).map(|d| ((i * 7 + d * 3) % 11) as f64 * 0.1 - 0.4).collect())
            .collect();
        let pts: Vec<(&str, &[f64])> = rows.iter().map(|r| ("w", r.as_slice())).collect();
        let chart = local_chart_pca(&pts, Centering::Mean).unwrap();
        assert_eq!(chart.axes.len(), 9);
        for a in 0..9 {
            for b in 0..9 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot(&chart.axes[a], &chart.axes[b]) - want).abs() < 1e-8);
            }
        }
        for (i, row) in rows.iter().enumerate() {
            for d in 0..9 {
                let rec: f64 = (0..9).map(|a| chart.coordinates[i][a] * chart.axes[a][d]).sum();
                assert!((rec - (row[d] - chart.origin[d])).abs() < 1e-8);
            }
        }
        assert!(chart.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}
