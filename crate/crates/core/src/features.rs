//! Vocabularies and sparse design matrices.
//!
//! Two feature schemes are supported:
//! - [`FeatureScheme::Ngram`]: raw counts of word n-grams (bigrams by default)
//! - [`FeatureScheme::Tfidf`]: `TF(i,j) · IDF(i)` with `TF(i,j) = n(i,j) / Σ_k n(k,j)` and
//!   `IDF(i) = log(N / n_i)`, unigrams by default
//!
//! Vocabulary, document frequencies and IDF weights come from the training split
//! only and are never touched when transforming other documents.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenStream;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    pub fn empty(dim: usize) -> Self {
        Self {
            entries: Vec::new(),
            dim,
        }
    }

    /// Builds a vector from arbitrary `(column, weight)` pairs: duplicates are
    /// summed, zeros dropped, columns sorted.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        if let Some(&(col, _)) = entries.iter().find(|(c, _)| *c >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: col + 1,
            });
        }
        entries.sort_by_key(|(c, _)| *c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, w) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == c => *acc += w,
                _ => merged.push((c, w)),
            }
        }
        merged.retain(|(_, w)| *w != 0.0);
        Ok(Self {
            entries: merged,
            dim,
        })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
            dim: values.len(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, col: usize) -> f64 {
        self.entries
            .binary_search_by_key(&col, |(c, _)| *c)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|(c, w)| w * dense[*c]).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector {
            entries: self
                .entries
                .iter()
                .map(|(c, w)| (*c, w * factor))
                .filter(|(_, w)| *w != 0.0)
                .collect(),
            dim: self.dim,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for (c, w) in &self.entries {
            dense[*c] = *w;
        }
        dense
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: Vec<SparseVector>,
    dim: usize,
}

impl SparseMatrix {
    pub fn new(dim: usize, rows: Vec<SparseVector>) -> Result<Self> {
        if let Some(row) = rows.iter().find(|r| r.dim != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.dim,
            });
        }
        Ok(Self { rows, dim })
    }

    pub fn from_dense(rows: &[Vec<f64>], dim: usize) -> Result<Self> {
        Self::new(dim, rows.iter().map(|r| SparseVector::from_dense(r)).collect())
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseVector {
        &self.rows[i]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseVector::nnz).sum()
    }

    pub fn map_rows(&self, f: impl Fn(&SparseVector) -> SparseVector + Sync + Send) -> SparseMatrix {
        SparseMatrix {
            rows: self.rows.par_iter().map(f).collect(),
            dim: self.dim,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(SparseVector::to_dense).collect()
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> SparseMatrix {
        SparseMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            dim: self.dim,
        }
    }
}

/// All contiguous `n`-token windows joined by a single space.
pub fn extract_ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> Vec<String> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens
        .windows(n)
        .map(|w| {
            let mut gram = String::from(w[0].as_ref());
            for t in &w[1..] {
                gram.push(' ');
                gram.push_str(t.as_ref());
            }
            gram
        })
        .collect()
}

pub fn stream_ngrams(stream: &TokenStream, n: usize) -> Vec<String> {
    extract_ngrams(&stream.surfaces(), n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    num_docs: usize,
    ngram: usize,
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn ngram(&self) -> usize {
        self.ngram
    }

    /// Rebuilds a vocabulary from stored statistics. Terms need not be sorted;
    /// column ids follow the given order.
    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>, num_docs: usize, ngram: usize) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(Error::Vocabulary(format!(
                "{} terms but {} document frequencies",
                terms.len(),
                doc_freq.len()
            )));
        }
        if let Some((t, df)) = terms
            .iter()
            .zip(&doc_freq)
            .find(|(_, &df)| df == 0 || df > num_docs)
        {
            return Err(Error::Vocabulary(format!(
                "term {t:?} has document frequency {df} outside 1..={num_docs}"
            )));
        }
        let index: HashMap<String, usize> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != terms.len() {
            return Err(Error::Vocabulary("duplicate terms".to_string()));
        }
        Ok(Self {
            terms,
            index,
            doc_freq,
            num_docs,
            ngram,
        })
    }

    /// Tab-separated `term, column, doc_freq, idf` lines in column order, with a header.
    pub fn dump_tsv(&self, idf: &[f64]) -> String {
        let mut out = String::from("term\tcolumn\tdoc_freq\tidf\n");
        for (col, term) in self.terms.iter().enumerate() {
            let _ = writeln!(out, "{term}\t{col}\t{}\t{}", self.doc_freq[col], idf[col]);
        }
        out
    }
}

/// Distinct `n`-grams with document frequency ≥ `min_df`, ranked by
/// (doc_freq desc, term asc), cut to `max_features`, then sorted lexicographically
/// so column ids are stable.
pub fn build_vocabulary(
    streams: &[TokenStream],
    n: usize,
    min_df: usize,
    max_features: Option<usize>,
) -> Result<Vocabulary> {
    if streams.is_empty() {
        return Err(Error::Vocabulary("empty training set".to_string()));
    }
    if n == 0 {
        return Err(Error::Vocabulary("n-gram size must be at least 1".to_string()));
    }
    let per_doc: Vec<HashSet<String>> = streams
        .par_iter()
        .map(|s| stream_ngrams(s, n).into_iter().collect())
        .collect();
    let mut df: HashMap<String, usize> = HashMap::new();
    for grams in per_doc {
        for g in grams {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let min_df = min_df.max(1);
    let mut ranked: Vec<(String, usize)> = df.into_iter().filter(|(_, c)| *c >= min_df).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(limit) = max_features {
        ranked.truncate(limit);
    }
    ranked.sort_by(|a, b| a.0.cmp(&b.0));
    let (terms, doc_freq): (Vec<String>, Vec<usize>) = ranked.into_iter().unzip();
    Vocabulary::from_parts(terms, doc_freq, streams.len(), n)
}

/// Raw in-vocabulary n-gram counts; out-of-vocabulary n-grams are ignored.
pub fn count_vectorize(stream: &TokenStream, vocab: &Vocabulary, n: usize) -> Result<SparseVector> {
    if n != vocab.ngram {
        return Err(Error::Vocabulary(format!(
            "vocabulary built for n={}, asked to count n={n}",
            vocab.ngram
        )));
    }
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for gram in stream_ngrams(stream, n) {
        if let Some(col) = vocab.column(&gram) {
            *counts.entry(col).or_insert(0.0) += 1.0;
        }
    }
    SparseVector::from_pairs(vocab.len(), counts)
}

pub fn count_matrix(streams: &[TokenStream], vocab: &Vocabulary) -> Result<SparseMatrix> {
    let rows = streams
        .par_iter()
        .map(|s| count_vectorize(s, vocab, vocab.ngram))
        .collect::<Result<Vec<_>>>()?;
    SparseMatrix::new(vocab.len(), rows)
}

/// Divides each count by the document's total in-vocabulary count. An all-zero
/// row maps to the empty vector.
pub fn term_frequency(counts: &SparseVector) -> SparseVector {
    let total = counts.sum();
    if total == 0.0 {
        return SparseVector::empty(counts.dim);
    }
    SparseVector {
        entries: counts.entries.iter().map(|(c, w)| (*c, w / total)).collect(),
        dim: counts.dim,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdfVariant {
    #[default]
    Log10,
    Ln,
    /// `N / n_i` without a logarithm.
    RawRatio,
}

impl IdfVariant {
    pub fn weight(&self, num_docs: usize, doc_freq: usize) -> f64 {
        let ratio = num_docs as f64 / doc_freq as f64;
        match self {
            IdfVariant::Log10 => ratio.log10(),
            IdfVariant::Ln => ratio.ln(),
            IdfVariant::RawRatio => ratio,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            IdfVariant::Log10 => "log10",
            IdfVariant::Ln => "ln",
            IdfVariant::RawRatio => "raw-ratio",
        }
    }
}

impl std::str::FromStr for IdfVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log10" => Ok(IdfVariant::Log10),
            "ln" => Ok(IdfVariant::Ln),
            "raw-ratio" => Ok(IdfVariant::RawRatio),
            other => Err(Error::Config(format!(
                "unknown idf variant {other:?}, expected log10|ln|raw-ratio"
            ))),
        }
    }
}

pub fn inverse_document_frequency(vocab: &Vocabulary, variant: IdfVariant) -> Vec<f64> {
    vocab
        .doc_freq
        .iter()
        .map(|&df| variant.weight(vocab.num_docs, df))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermStats {
    pub tf: f64,
    pub idf: f64,
}

impl TermStats {
    pub fn tfidf(&self) -> f64 {
        self.tf * self.idf
    }
}

pub fn term_stats(counts: &SparseVector, idf: &[f64], column: usize) -> TermStats {
    TermStats {
        tf: term_frequency(counts).get(column),
        idf: idf[column],
    }
}

/// Row-wise `term_frequency(row)[t] × idf[t]`.
pub fn tfidf_transform(counts: &SparseMatrix, vocab: &Vocabulary, variant: IdfVariant) -> Result<SparseMatrix> {
    let idf = inverse_document_frequency(vocab, variant);
    tfidf_with_weights(counts, &idf)
}

pub fn tfidf_with_weights(counts: &SparseMatrix, idf: &[f64]) -> Result<SparseMatrix> {
    if counts.dim != idf.len() {
        return Err(Error::DimensionMismatch {
            expected: idf.len(),
            actual: counts.dim,
        });
    }
    Ok(counts.map_rows(|row| {
        let tf = term_frequency(row);
        SparseVector {
            entries: tf
                .entries
                .iter()
                .map(|(c, w)| (*c, w * idf[*c]))
                .filter(|(_, w)| *w != 0.0)
                .collect(),
            dim: tf.dim,
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureScheme {
    Ngram,
    Tfidf,
}

impl FeatureScheme {
    pub const ALL: [FeatureScheme; 2] = [FeatureScheme::Ngram, FeatureScheme::Tfidf];

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureScheme::Ngram => "ngram",
            FeatureScheme::Tfidf => "tfidf",
        }
    }
}

impl std::str::FromStr for FeatureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ngram" => Ok(FeatureScheme::Ngram),
            "tfidf" => Ok(FeatureScheme::Tfidf),
            other => Err(Error::Config(format!(
                "unknown feature scheme {other:?}, expected ngram|tfidf"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSettings {
    pub ngram_n: usize,
    pub tfidf_n: usize,
    pub min_df: usize,
    pub max_features: Option<usize>,
    pub idf_variant: IdfVariant,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            ngram_n: 2,
            tfidf_n: 1,
            min_df: 2,
            max_features: Some(50_000),
            idf_variant: IdfVariant::Log10,
        }
    }
}

/// Vocabulary and IDF weights fitted on a training split.
#[derive(Debug, Clone)]
pub struct FittedFeatures {
    pub scheme: FeatureScheme,
    pub vocab: Vocabulary,
    pub idf: Vec<f64>,
}

impl FittedFeatures {
    pub fn fit(scheme: FeatureScheme, settings: &FeatureSettings, train: &[TokenStream]) -> Result<Self> {
        let n = match scheme {
            FeatureScheme::Ngram => settings.ngram_n,
            FeatureScheme::Tfidf => settings.tfidf_n,
        };
        let vocab = build_vocabulary(train, n, settings.min_df, settings.max_features)?;
        let idf = inverse_document_frequency(&vocab, settings.idf_variant);
        Ok(Self { scheme, vocab, idf })
    }

    pub fn transform(&self, streams: &[TokenStream]) -> Result<SparseMatrix> {
        let counts = count_matrix(streams, &self.vocab)?;
        match self.scheme {
            FeatureScheme::Ngram => Ok(counts),
            FeatureScheme::Tfidf => tfidf_with_weights(&counts, &self.idf),
        }
    }

    pub fn dump_tsv(&self) -> String {
        self.vocab.dump_tsv(&self.idf)
    }
}
