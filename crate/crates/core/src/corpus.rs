//! Review corpora: the `aclImdb` directory tree and the Amazon Alexa TSV export.
//!
//! Both loaders produce a [`Corpus`] whose document order is a pure function of
//! the input, so repeated loads are identical. Rows without usable text or label
//! are dropped and counted in the [`LoadReport`].

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::keyed_hash;

pub const NEGATIVE: usize = 0;
pub const POSITIVE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    /// Index into [`Corpus::class_names`].
    pub label: usize,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub loaded: usize,
    pub dropped: usize,
    pub undecodable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub documents: Vec<Document>,
    pub class_names: Vec<String>,
    pub load_report: LoadReport,
}

fn binary_class_names() -> Vec<String> {
    vec!["negative".to_string(), "positive".to_string()]
}

impl Corpus {
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for doc in &self.documents {
            counts[doc.label] += 1;
        }
        counts
    }

    pub fn split_documents(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.documents
            .iter()
            .filter(move |d| d.split == Some(split))
    }

    /// Returns a copy without the documents of `split`.
    pub fn without_split(&self, split: Split) -> Corpus {
        Corpus {
            documents: self
                .documents
                .iter()
                .filter(|d| d.split != Some(split))
                .cloned()
                .collect(),
            ..self.clone()
        }
    }
}

const IMDB_SUBDIRS: [(&str, &str, Split, usize); 4] = [
    ("train", "pos", Split::Train, POSITIVE),
    ("train", "neg", Split::Train, NEGATIVE),
    ("test", "pos", Split::Test, POSITIVE),
    ("test", "neg", Split::Test, NEGATIVE),
];

/// Loads the `aclImdb` layout: `(train|test)/(pos|neg)/*.txt`.
///
/// Labels come from the parent directory, splits from the grandparent. Documents
/// are ordered by relative path. Invalid UTF-8 is replaced with U+FFFD and counted.
pub fn load_imdb(root: &Path) -> Result<Corpus> {
    let missing: Vec<String> = IMDB_SUBDIRS
        .iter()
        .map(|(split, class, _, _)| root.join(split).join(class))
        .filter(|p| !p.is_dir())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPaths { missing });
    }

    let mut entries: Vec<(String, PathBuf, Split, usize)> = Vec::new();
    for (split_dir, class_dir, split, label) in IMDB_SUBDIRS {
        let dir = root.join(split_dir).join(class_dir);
        let listing = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in listing {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let path = entry.path();
            if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let name = entry.file_name().to_string_lossy().into_owned();
            let id = format!("{split_dir}/{class_dir}/{name}");
            entries.push((id, path, split, label));
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    let read: Vec<Result<(Document, bool)>> = entries
        .into_par_iter()
        .map(|(id, path, split, label)| {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let (text, lossy) = match String::from_utf8(bytes) {
                Ok(s) => (s, false),
                Err(e) => (String::from_utf8_lossy(e.as_bytes()).into_owned(), true),
            };
            Ok((
                Document {
                    id,
                    text,
                    label,
                    split: Some(split),
                },
                lossy,
            ))
        })
        .collect();

    let mut report = LoadReport::default();
    let mut documents = Vec::with_capacity(read.len());
    for item in read {
        let (doc, lossy) = item?;
        if lossy {
            report.undecodable += 1;
        }
        if is_blank(&doc.text) {
            report.dropped += 1;
            continue;
        }
        documents.push(doc);
    }
    report.loaded = documents.len();
    tracing::info!(
        dataset = "imdb",
        loaded = report.loaded,
        dropped = report.dropped,
        undecodable = report.undecodable,
        "corpus loaded"
    );
    Ok(Corpus {
        name: "imdb".to_string(),
        documents,
        class_names: binary_class_names(),
        load_report: report,
    })
}

/// Header names for the Alexa TSV columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlexaColumns {
    pub text: String,
    pub label: String,
}

impl Default for AlexaColumns {
    fn default() -> Self {
        Self {
            text: "verified_reviews".to_string(),
            label: "feedback".to_string(),
        }
    }
}

/// One raw TSV row before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub row: usize,
    pub text: Option<String>,
    pub label: Option<String>,
}

fn is_blank(s: &str) -> bool {
    s.trim().is_empty()
}

/// Keeps rows whose text and label are both present and non-blank, in input order.
pub fn drop_missing(rows: Vec<RawRecord>) -> (Vec<RawRecord>, usize) {
    let total = rows.len();
    let kept: Vec<RawRecord> = rows
        .into_iter()
        .filter(|r| {
            r.text.as_deref().is_some_and(|t| !is_blank(t))
                && r.label.as_deref().is_some_and(|l| !is_blank(l))
        })
        .collect();
    let dropped = total - kept.len();
    (kept, dropped)
}

fn locate_column(headers: &[String], name: &str) -> Result<usize> {
    let hits: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.trim() == name)
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [i] => Ok(*i),
        [] => Err(Error::Schema {
            message: format!("column {name:?} not found"),
            available: headers.to_vec(),
        }),
        _ => Err(Error::Schema {
            message: format!("column {name:?} is ambiguous ({} matches)", hits.len()),
            available: headers.to_vec(),
        }),
    }
}

fn parse_feedback(raw: &str) -> Option<usize> {
    match raw.trim() {
        "1" => Some(POSITIVE),
        "0" => Some(NEGATIVE),
        _ => None,
    }
}

/// Loads the Alexa review TSV. Feedback `1` is positive, `0` negative.
///
/// Rows with blank text, blank label, or a feedback value other than 0/1 are
/// dropped. Document ids are 0-based data-row indices. No split is assigned.
pub fn load_alexa(tsv_path: &Path, columns: &AlexaColumns) -> Result<Corpus> {
    let bytes = fs::read(tsv_path).map_err(|e| Error::io(tsv_path, e))?;
    let mut report = LoadReport::default();
    let content = match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => {
            report.undecodable += 1;
            String::from_utf8_lossy(e.as_bytes()).into_owned()
        }
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .has_headers(true)
        .from_reader(content.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", tsv_path.display())))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    let text_col = locate_column(&headers, &columns.text)?;
    let label_col = locate_column(&headers, &columns.label)?;

    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", tsv_path.display())))?;
        rows.push(RawRecord {
            row,
            text: record.get(text_col).map(str::to_string),
            label: record.get(label_col).map(str::to_string),
        });
    }
    let (kept, mut dropped) = drop_missing(rows);

    let mut documents = Vec::with_capacity(kept.len());
    for rec in kept {
        let label = rec.label.as_deref().and_then(parse_feedback);
        match (rec.text, label) {
            (Some(text), Some(label)) => documents.push(Document {
                id: rec.row.to_string(),
                text,
                label,
                split: None,
            }),
            _ => dropped += 1,
        }
    }
    report.loaded = documents.len();
    report.dropped = dropped;
    tracing::info!(
        dataset = "alexa",
        loaded = report.loaded,
        dropped = report.dropped,
        undecodable = report.undecodable,
        "corpus loaded"
    );
    Ok(Corpus {
        name: "alexa".to_string(),
        documents,
        class_names: binary_class_names(),
        load_report: report,
    })
}

/// Documents of one class ordered by a seed-keyed hash of their ids.
fn keyed_order<'a>(docs: impl Iterator<Item = &'a Document>, seed: u64) -> Vec<&'a Document> {
    let mut keyed: Vec<(u64, &Document)> = docs
        .map(|d| (keyed_hash(seed, &[d.id.as_bytes()]), d))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    keyed.into_iter().map(|(_, d)| d).collect()
}

/// Stratified train/test assignment, overwriting any existing split.
///
/// Per class, `round(class_size * test_fraction)` documents go to test. Membership
/// depends only on `seed` and the document ids, never on list position.
pub fn split_corpus(corpus: &Corpus, test_fraction: f64, seed: u64) -> Result<Corpus> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let ids: HashSet<&str> = corpus.documents.iter().map(|d| d.id.as_str()).collect();
    if ids.len() != corpus.documents.len() {
        return Err(Error::Split("duplicate document ids".to_string()));
    }
    let counts = corpus.class_counts();
    for (class, &n) in counts.iter().enumerate() {
        if n < 2 {
            return Err(Error::Split(format!(
                "class {:?} has {n} documents, at least 2 required",
                corpus.class_names[class]
            )));
        }
    }

    let mut test_ids: HashSet<&str> = HashSet::new();
    for (class, &n) in counts.iter().enumerate() {
        let n_test = (n as f64 * test_fraction).round() as usize;
        let ordered = keyed_order(corpus.documents.iter().filter(|d| d.label == class), seed);
        test_ids.extend(ordered.iter().take(n_test).map(|d| d.id.as_str()));
    }

    let documents = corpus
        .documents
        .iter()
        .map(|d| Document {
            split: Some(if test_ids.contains(d.id.as_str()) {
                Split::Test
            } else {
                Split::Train
            }),
            ..d.clone()
        })
        .collect();
    Ok(Corpus {
        documents,
        ..corpus.clone()
    })
}

/// Stratified subsample of `size` documents, preserving each (split, label)
/// cell's share of the corpus. Original document order is kept.
pub fn subsample_stratified(corpus: &Corpus, size: usize, seed: u64) -> Result<Corpus> {
    let total = corpus.documents.len();
    if size == 0 || size > total {
        return Err(Error::Split(format!(
            "subsample size {size} outside 1..={total}"
        )));
    }
    let mut cells: BTreeMap<(Option<&'static str>, usize), Vec<&Document>> = BTreeMap::new();
    for doc in &corpus.documents {
        cells
            .entry((doc.split.map(|s| s.as_str()), doc.label))
            .or_default()
            .push(doc);
    }
    let mut keep: HashSet<&str> = HashSet::new();
    for docs in cells.values() {
        let take = (docs.len() as f64 * size as f64 / total as f64).round() as usize;
        let ordered = keyed_order(docs.iter().copied(), seed);
        keep.extend(ordered.iter().take(take).map(|d| d.id.as_str()));
    }
    let documents: Vec<Document> = corpus
        .documents
        .iter()
        .filter(|d| keep.contains(d.id.as_str()))
        .cloned()
        .collect();
    Ok(Corpus {
        documents,
        ..corpus.clone()
    })
}
