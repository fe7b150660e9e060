//! Raw review text to token streams.
//!
//! The pipeline runs `tokenize → normalize → remove_stopwords → reducer → remove_noise`.
//! Every stage is a pure function; [`PipelineConfig`] is immutable once built and
//! can be shared across threads.

mod numbers;
mod porter;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

pub use numbers::digits_to_words;
pub use porter::stem;

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const BUNDLED_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.tsv");
const BUNDLED_LEMMAS: &str = include_str!("../../data/lemmas.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStream {
    pub doc_id: String,
    pub tokens: Vec<Token>,
}

impl TokenStream {
    /// Builds a stream with dense positions `0..words.len()`.
    pub fn from_words<S: Into<String>>(doc_id: impl Into<String>, words: impl IntoIterator<Item = S>) -> Self {
        Self {
            doc_id: doc_id.into(),
            tokens: words
                .into_iter()
                .enumerate()
                .map(|(position, w)| Token {
                    surface: w.into(),
                    position,
                })
                .collect(),
        }
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reducer {
    None,
    #[default]
    Stem,
    Lemmatize,
}

impl std::str::FromStr for Reducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Reducer::None),
            "stem" => Ok(Reducer::Stem),
            "lemmatize" => Ok(Reducer::Lemmatize),
            other => Err(Error::Config(format!(
                "unknown reducer {other:?}, expected none|stem|lemmatize"
            ))),
        }
    }
}

/// Serializable description of a pipeline: flags plus optional resource overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub expand_abbreviations: bool,
    pub numbers_to_words: bool,
    pub reducer: Reducer,
    pub stopwords_path: Option<PathBuf>,
    pub abbreviations_path: Option<PathBuf>,
    pub lemmas_path: Option<PathBuf>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            expand_abbreviations: true,
            numbers_to_words: false,
            reducer: Reducer::Stem,
            stopwords_path: None,
            abbreviations_path: None,
            lemmas_path: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub expand_abbreviations: bool,
    pub numbers_to_words: bool,
    pub reducer: Reducer,
    stopwords: Arc<HashSet<String>>,
    abbreviations: Arc<HashMap<String, String>>,
    lemmas: Arc<HashMap<String, String>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let settings = PipelineSettings::default();
        Self {
            lowercase: settings.lowercase,
            strip_punctuation: settings.strip_punctuation,
            expand_abbreviations: settings.expand_abbreviations,
            numbers_to_words: settings.numbers_to_words,
            reducer: settings.reducer,
            stopwords: bundled_stopwords(),
            abbreviations: bundled_abbreviations(),
            lemmas: bundled_lemmas(),
        }
    }
}

impl PipelineConfig {
    /// Builds a config, reading any resource overrides from disk.
    pub fn from_settings(settings: &PipelineSettings) -> Result<Self> {
        let stopwords = match &settings.stopwords_path {
            Some(p) => Arc::new(parse_word_list(&read_resource(p)?)),
            None => bundled_stopwords(),
        };
        let abbreviations = match &settings.abbreviations_path {
            Some(p) => Arc::new(parse_tsv_map(&read_resource(p)?, p)?),
            None => bundled_abbreviations(),
        };
        let lemmas = match &settings.lemmas_path {
            Some(p) => Arc::new(parse_tsv_map(&read_resource(p)?, p)?),
            None => bundled_lemmas(),
        };
        Ok(Self {
            lowercase: settings.lowercase,
            strip_punctuation: settings.strip_punctuation,
            expand_abbreviations: settings.expand_abbreviations,
            numbers_to_words: settings.numbers_to_words,
            reducer: settings.reducer,
            stopwords,
            abbreviations,
            lemmas,
        })
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = Arc::new(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect());
        self
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn abbreviations(&self) -> &HashMap<String, String> {
        &self.abbreviations
    }

    pub fn lemmas(&self) -> &HashMap<String, String> {
        &self.lemmas
    }
}

fn read_resource(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn parse_tsv_map(text: &str, origin: &Path) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('\t').ok_or_else(|| {
            Error::Parse(format!(
                "{}:{}: expected `key<TAB>value`",
                origin.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_lowercase(), value.trim().to_string());
    }
    Ok(map)
}

fn bundled_stopwords() -> Arc<HashSet<String>> {
    static CELL: OnceLock<Arc<HashSet<String>>> = OnceLock::new();
    CELL.get_or_init(|| Arc::new(parse_word_list(BUNDLED_STOPWORDS)))
        .clone()
}

fn bundled_abbreviations() -> Arc<HashMap<String, String>> {
    static CELL: OnceLock<Arc<HashMap<String, String>>> = OnceLock::new();
    CELL.get_or_init(|| {
        Arc::new(parse_tsv_map(BUNDLED_ABBREVIATIONS, Path::new("abbreviations.tsv")).expect("bundled table"))
    })
    .clone()
}

fn bundled_lemmas() -> Arc<HashMap<String, String>> {
    static CELL: OnceLock<Arc<HashMap<String, String>>> = OnceLock::new();
    CELL.get_or_init(|| {
        Arc::new(parse_tsv_map(BUNDLED_LEMMAS, Path::new("lemmas.tsv")).expect("bundled table"))
    })
    .clone()
}

/// The bundled English stopword list.
pub fn standard_stopwords() -> HashSet<String> {
    bundled_stopwords().as_ref().clone()
}

fn markup_tag() -> &'static Regex {
    static CELL: OnceLock<Regex> = OnceLock::new();
    CELL.get_or_init(|| Regex::new(r"</?[A-Za-z][^<>]{0,64}>").expect("valid regex"))
}

fn trim_punctuation(piece: &str) -> &str {
    piece.trim_matches(|c: char| !c.is_alphanumeric())
}

fn split_pieces(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

/// Splits on Unicode whitespace (HTML tags such as `<br />` count as whitespace)
/// and strips leading/trailing punctuation from every piece. Empty pieces are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned = markup_tag().replace_all(text, " ");
    split_pieces(&cleaned)
        .map(trim_punctuation)
        .filter(|p| !p.is_empty())
        .map(str::to_string)
        .collect()
}

/// Tokenizer honoring the config: emoticons in the abbreviation table are mapped
/// to words before punctuation stripping, and stripping itself can be disabled.
pub fn tokenize_with(text: &str, config: &PipelineConfig) -> Vec<String> {
    let cleaned = markup_tag().replace_all(text, " ");
    split_pieces(&cleaned)
        .filter_map(|piece| {
            if config.expand_abbreviations {
                if let Some(word) = config.abbreviations.get(&piece.to_lowercase()) {
                    if piece.chars().any(|c| !c.is_alphanumeric()) {
                        return Some(word.clone());
                    }
                }
            }
            let kept = if config.strip_punctuation {
                trim_punctuation(piece)
            } else {
                piece
            };
            (!kept.is_empty()).then(|| kept.to_string())
        })
        .collect()
}

/// Lowercasing, abbreviation expansion and digit-to-word conversion, in that order.
pub fn normalize(tokens: &[String], config: &PipelineConfig) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        let mut t = if config.lowercase {
            token.to_lowercase()
        } else {
            token.clone()
        };
        if config.expand_abbreviations {
            let key = if config.lowercase { t.clone() } else { t.to_lowercase() };
            if let Some(expansion) = config.abbreviations.get(&key) {
                t = expansion.clone();
            }
        }
        if config.numbers_to_words && !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
            out.extend(digits_to_words(&t));
            continue;
        }
        if !t.is_empty() {
            out.push(t);
        }
    }
    out
}

/// Dictionary lemmatization; unknown words come back unchanged.
pub fn lemmatize(token: &str, lemmas: &HashMap<String, String>) -> String {
    lemmas
        .get(token)
        .cloned()
        .unwrap_or_else(|| token.to_string())
}

pub fn remove_stopwords(tokens: &[String], stopwords: &HashSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stopwords.contains(t.as_str()))
        .cloned()
        .collect()
}

fn is_noise(token: &str) -> bool {
    let pure_punctuation = token.chars().all(|c| !c.is_alphanumeric());
    let pure_digits = token.chars().all(|c| c.is_ascii_digit());
    let markup = token.contains('<')
        || token.contains('>')
        || (token.starts_with('&') && token.ends_with(';'));
    pure_punctuation || pure_digits || markup
}

/// Drops punctuation-only, digit-only and markup-remnant tokens, then renumbers positions.
pub fn remove_noise(stream: TokenStream) -> TokenStream {
    let TokenStream { doc_id, tokens } = stream;
    TokenStream::from_words(
        doc_id,
        tokens
            .into_iter()
            .map(|t| t.surface)
            .filter(|s| !is_noise(s)),
    )
}

pub fn run_pipeline_text(doc_id: &str, text: &str, config: &PipelineConfig) -> TokenStream {
    let tokens = tokenize_with(text, config);
    let tokens = normalize(&tokens, config);
    let tokens = remove_stopwords(&tokens, &config.stopwords);
    let reduced: Vec<String> = match config.reducer {
        Reducer::None => tokens,
        Reducer::Stem => tokens.iter().map(|t| stem(t)).collect(),
        Reducer::Lemmatize => tokens.iter().map(|t| lemmatize(t, &config.lemmas)).collect(),
    };
    remove_noise(TokenStream::from_words(doc_id, reduced))
}

pub fn run_pipeline(doc: &Document, config: &PipelineConfig) -> TokenStream {
    run_pipeline_text(&doc.id, &doc.text, config)
}
