//! The dataset × feature scheme × classifier grid and its report writers.
//!
//! [`run_grid`] loads every configured dataset up front (any load or config
//! problem fails the whole run before a cell starts), preprocesses each corpus
//! once, fits vocabulary and IDF on the training split only and then trains and
//! evaluates every classifier. Cells are isolated: an error or panic inside one
//! is recorded on that cell and the rest of the grid carries on.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{train, ClassifierKind, DistanceMetric, FeatureSubsample, Hyperparameters};
use crate::corpus::{load_alexa, load_imdb, split_corpus, subsample_stratified, AlexaColumns, Corpus, LoadReport, Split};
use crate::error::{Error, Result};
use crate::features::{FeatureScheme, FeatureSettings, FittedFeatures, IdfVariant};
use crate::metrics::{format2, EvalReport};
use crate::preprocess::{run_pipeline, PipelineConfig, PipelineSettings, Reducer, TokenStream};
use crate::seeding::derive_seed;

/// Exit status when every cell succeeded.
pub const EXIT_OK: i32 = 0;
/// Exit status when at least one cell failed.
pub const EXIT_CELL_FAILED: i32 = 2;
/// Exit status for config or dataset errors raised before any cell ran.
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Imdb,
    Alexa,
}

impl Dataset {
    pub const ALL: [Dataset; 2] = [Dataset::Imdb, Dataset::Alexa];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dataset::Imdb => "imdb",
            Dataset::Alexa => "alexa",
        }
    }
}

impl std::str::FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imdb" => Ok(Dataset::Imdb),
            "alexa" => Ok(Dataset::Alexa),
            other => Err(Error::Config(format!("unknown dataset {other:?}, expected imdb|alexa"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown];
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!("unknown report format {other:?}, expected csv|json|markdown"))),
        }
    }
}

/// Everything a run depends on. Serialized as a flat TOML table; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub datasets: Vec<Dataset>,
    pub imdb_dir: Option<PathBuf>,
    pub alexa_tsv: Option<PathBuf>,
    pub alexa_text_column: String,
    pub alexa_label_column: String,
    /// Stratified IMDB subsample size; the predefined split is kept.
    pub imdb_subsample: Option<usize>,
    /// Ignore the predefined IMDB split and draw a fresh stratified one.
    pub imdb_resplit: bool,
    pub test_fraction: f64,
    pub seed: u64,

    pub features: Vec<FeatureScheme>,
    pub classifiers: Vec<ClassifierKind>,

    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub expand_abbreviations: bool,
    pub numbers_to_words: bool,
    pub reducer: Reducer,
    pub stopwords_path: Option<PathBuf>,
    pub abbreviations_path: Option<PathBuf>,
    pub lemmas_path: Option<PathBuf>,

    pub ngram_n: usize,
    pub tfidf_n: usize,
    pub min_df: usize,
    /// 0 keeps every term that passes `min_df`.
    pub max_features: usize,
    pub idf_variant: IdfVariant,

    pub nb_alpha: f64,
    pub svm_c: f64,
    pub svm_epochs: usize,
    pub lr_l2: f64,
    pub lr_epochs: usize,
    pub lr_tol: f64,
    pub knn_k: usize,
    pub knn_metric: DistanceMetric,
    pub tree_max_depth: Option<usize>,
    pub tree_min_leaf: usize,
    pub rf_n_trees: usize,
    pub rf_max_depth: Option<usize>,
    pub rf_min_leaf: usize,
    /// `"sqrt"` or a ratio in (0, 1] written as a string, e.g. `"0.3"`.
    pub rf_feature_subsample: String,
    pub rf_bootstrap: bool,

    pub output_dir: PathBuf,
    pub formats: Vec<ReportFormat>,
    pub write_vocabularies: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pipeline = PipelineSettings::default();
        let features = FeatureSettings::default();
        Self {
            datasets: Dataset::ALL.to_vec(),
            imdb_dir: None,
            alexa_tsv: None,
            alexa_text_column: AlexaColumns::default().text,
            alexa_label_column: AlexaColumns::default().label,
            imdb_subsample: None,
            imdb_resplit: false,
            test_fraction: 0.2,
            seed: 42,
            features: FeatureScheme::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            lowercase: pipeline.lowercase,
            strip_punctuation: pipeline.strip_punctuation,
            expand_abbreviations: pipeline.expand_abbreviations,
            numbers_to_words: pipeline.numbers_to_words,
            reducer: pipeline.reducer,
            stopwords_path: None,
            abbreviations_path: None,
            lemmas_path: None,
            ngram_n: features.ngram_n,
            tfidf_n: features.tfidf_n,
            min_df: features.min_df,
            max_features: features.max_features.unwrap_or(0),
            idf_variant: features.idf_variant,
            nb_alpha: 1.0,
            svm_c: 1.0,
            svm_epochs: 20,
            lr_l2: 1.0,
            lr_epochs: 100,
            lr_tol: 1e-6,
            knn_k: 5,
            knn_metric: DistanceMetric::Cosine,
            tree_max_depth: None,
            tree_min_leaf: 1,
            rf_n_trees: 100,
            rf_max_depth: None,
            rf_min_leaf: 1,
            rf_feature_subsample: "sqrt".to_string(),
            rf_bootstrap: true,
            output_dir: PathBuf::from("results"),
            formats: ReportFormat::ALL.to_vec(),
            write_vocabularies: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn pipeline_settings(&self) -> PipelineSettings {
        PipelineSettings {
            lowercase: self.lowercase,
            strip_punctuation: self.strip_punctuation,
            expand_abbreviations: self.expand_abbreviations,
            numbers_to_words: self.numbers_to_words,
            reducer: self.reducer,
            stopwords_path: self.stopwords_path.clone(),
            abbreviations_path: self.abbreviations_path.clone(),
            lemmas_path: self.lemmas_path.clone(),
        }
    }

    pub fn feature_settings(&self) -> FeatureSettings {
        FeatureSettings {
            ngram_n: self.ngram_n,
            tfidf_n: self.tfidf_n,
            min_df: self.min_df,
            max_features: (self.max_features > 0).then_some(self.max_features),
            idf_variant: self.idf_variant,
        }
    }

    pub fn hyperparameters(&self, kind: ClassifierKind) -> Result<Hyperparameters> {
        Ok(match kind {
            ClassifierKind::MultinomialNb => Hyperparameters::MultinomialNb { alpha: self.nb_alpha },
            ClassifierKind::LinearSvm => Hyperparameters::LinearSvm {
                c: self.svm_c,
                epochs: self.svm_epochs,
            },
            ClassifierKind::Knn => Hyperparameters::Knn {
                k: self.knn_k,
                metric: self.knn_metric,
            },
            ClassifierKind::LogisticRegression => Hyperparameters::LogisticRegression {
                l2: self.lr_l2,
                epochs: self.lr_epochs,
                tol: self.lr_tol,
            },
            ClassifierKind::DecisionTree => Hyperparameters::DecisionTree {
                max_depth: self.tree_max_depth,
                min_leaf: self.tree_min_leaf,
            },
            ClassifierKind::RandomForest => Hyperparameters::RandomForest {
                n_trees: self.rf_n_trees,
                max_depth: self.rf_max_depth,
                min_leaf: self.rf_min_leaf,
                feature_subsample: self.rf_feature_subsample.parse::<FeatureSubsample>()?,
                bootstrap: self.rf_bootstrap,
            },
        })
    }

    /// Checks everything that can be checked without touching a dataset.
    pub fn validate(&self) -> Result<()> {
        let nonempty = [
            ("datasets", self.datasets.is_empty()),
            ("features", self.features.is_empty()),
            ("classifiers", self.classifiers.is_empty()),
        ];
        if let Some((name, _)) = nonempty.iter().find(|(_, empty)| *empty) {
            return Err(Error::Config(format!("{name} must list at least one entry")));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test_fraction {} outside (0, 1)", self.test_fraction)));
        }
        if self.ngram_n == 0 || self.tfidf_n == 0 {
            return Err(Error::Config("ngram_n and tfidf_n must be at least 1".to_string()));
        }
        if self.min_df == 0 {
            return Err(Error::Config("min_df must be at least 1".to_string()));
        }
        self.rf_feature_subsample.parse::<FeatureSubsample>()?;
        let mut missing = Vec::new();
        for dataset in &self.datasets {
            let path = match dataset {
                Dataset::Imdb => &self.imdb_dir,
                Dataset::Alexa => &self.alexa_tsv,
            };
            match path {
                None => {
                    return Err(Error::Config(format!(
                        "dataset {} requested but no path given ({})",
                        dataset.as_str(),
                        match dataset {
                            Dataset::Imdb => "imdb_dir",
                            Dataset::Alexa => "alexa_tsv",
                        }
                    )))
                }
                Some(p) if !p.exists() => missing.push(p.display().to_string()),
                Some(_) => {}
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingPaths { missing });
        }
        Ok(())
    }

    /// The config reduced to a single grid cell.
    pub fn for_cell(&self, dataset: Dataset, feature: FeatureScheme, classifier: ClassifierKind) -> RunConfig {
        RunConfig {
            datasets: vec![dataset],
            features: vec![feature],
            classifiers: vec![classifier],
            ..self.clone()
        }
    }
}

/// Seed handed to the classifier of one cell.
pub fn cell_seed(seed: u64, dataset: Dataset, feature: FeatureScheme, classifier: ClassifierKind) -> u64 {
    derive_seed(seed, &[dataset.as_str(), feature.as_str(), classifier.as_str()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: Dataset,
    pub feature: FeatureScheme,
    pub classifier: ClassifierKind,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn succeeded(&self) -> bool {
        self.report.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub dataset: Dataset,
    pub feature: FeatureScheme,
    pub classifier: ClassifierKind,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset: Dataset,
    pub load_report: LoadReport,
    pub num_train: usize,
    pub num_test: usize,
    pub class_names: Vec<String>,
    pub train_class_counts: Vec<usize>,
    pub test_class_counts: Vec<usize>,
    /// Vocabulary sizes and dump digests per feature scheme.
    pub vocabularies: BTreeMap<FeatureScheme, VocabularySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularySummary {
    pub terms: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentNote {
    pub package_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl EnvironmentNote {
    pub fn capture() -> Self {
        Self {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub config: RunConfig,
    pub cells: Vec<CellResult>,
    pub datasets: Vec<DatasetSummary>,
    pub timings: Vec<CellTiming>,
    pub environment: EnvironmentNote,
    /// Vocabulary dumps keyed by `(dataset, scheme)`; not serialized.
    #[serde(skip)]
    pub vocabulary_dumps: Vec<(Dataset, FeatureScheme, String)>,
}

impl GridResult {
    pub fn empty(config: RunConfig) -> Self {
        Self {
            config,
            cells: Vec::new(),
            datasets: Vec::new(),
            timings: Vec::new(),
            environment: EnvironmentNote::capture(),
            vocabulary_dumps: Vec::new(),
        }
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.succeeded()).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed_cells() == 0 {
            EXIT_OK
        } else {
            EXIT_CELL_FAILED
        }
    }

    pub fn cell(&self, dataset: Dataset, feature: FeatureScheme, classifier: ClassifierKind) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.feature == feature && c.classifier == classifier)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Loads one configured dataset and assigns its train/test split.
pub fn load_dataset(config: &RunConfig, dataset: Dataset) -> Result<Corpus> {
    match dataset {
        Dataset::Imdb => {
            let dir = config
                .imdb_dir
                .as_deref()
                .ok_or_else(|| Error::Config("imdb_dir not set".to_string()))?;
            let mut corpus = load_imdb(dir)?;
            if let Some(size) = config.imdb_subsample {
                corpus = subsample_stratified(&corpus, size, config.seed)?;
            }
            if config.imdb_resplit {
                corpus = split_corpus(&corpus, config.test_fraction, config.seed)?;
            }
            Ok(corpus)
        }
        Dataset::Alexa => {
            let path = config
                .alexa_tsv
                .as_deref()
                .ok_or_else(|| Error::Config("alexa_tsv not set".to_string()))?;
            let columns = AlexaColumns {
                text: config.alexa_text_column.clone(),
                label: config.alexa_label_column.clone(),
            };
            let corpus = load_alexa(path, &columns)?;
            split_corpus(&corpus, config.test_fraction, config.seed)
        }
    }
}

/// Token streams and labels for both splits of one corpus.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub class_names: Vec<String>,
    pub train: Vec<TokenStream>,
    pub train_labels: Vec<usize>,
    pub test: Vec<TokenStream>,
    pub test_labels: Vec<usize>,
}

pub fn prepare(corpus: &Corpus, pipeline: &PipelineConfig) -> Result<PreparedDataset> {
    if corpus.documents.iter().any(|d| d.split.is_none()) {
        return Err(Error::Split(format!("corpus {} has documents without a split", corpus.name)));
    }
    let streams: Vec<TokenStream> = corpus.documents.par_iter().map(|d| run_pipeline(d, pipeline)).collect();
    let mut out = PreparedDataset {
        class_names: corpus.class_names.clone(),
        train: Vec::new(),
        train_labels: Vec::new(),
        test: Vec::new(),
        test_labels: Vec::new(),
    };
    for (doc, stream) in corpus.documents.iter().zip(streams) {
        if doc.split == Some(Split::Train) {
            out.train.push(stream);
            out.train_labels.push(doc.label);
        } else {
            out.test.push(stream);
            out.test_labels.push(doc.label);
        }
    }
    Ok(out)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic with non-string payload".to_string()
    }
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one (dataset, feature) block of classifier cells against prepared data.
#[allow(clippy::too_many_arguments)]
fn run_feature_block(
    config: &RunConfig,
    dataset: Dataset,
    scheme: FeatureScheme,
    data: &PreparedDataset,
    summary: &mut DatasetSummary,
    dumps: &mut Vec<(Dataset, FeatureScheme, String)>,
    cells: &mut Vec<CellResult>,
    timings: &mut Vec<CellTiming>,
) {
    let classifiers = canonical_classifiers(&config.classifiers);
    let fitted = FittedFeatures::fit(scheme, &config.feature_settings(), &data.train).and_then(|f| {
        let train = f.transform(&data.train)?;
        let test = f.transform(&data.test)?;
        Ok((f, train, test))
    });
    let (fitted, train_matrix, test_matrix) = match fitted {
        Ok(v) => v,
        Err(e) => {
            tracing::warn!(dataset = dataset.as_str(), feature = scheme.as_str(), error = %e, "feature extraction failed");
            for kind in classifiers {
                cells.push(CellResult {
                    dataset,
                    feature: scheme,
                    classifier: kind,
                    report: None,
                    error: Some(format!("feature extraction: {e}")),
                });
                timings.push(CellTiming {
                    dataset,
                    feature: scheme,
                    classifier: kind,
                    seconds: 0.0,
                });
            }
            return;
        }
    };
    let dump = fitted.dump_tsv();
    summary.vocabularies.insert(
        scheme,
        VocabularySummary {
            terms: fitted.vocab.len(),
            sha256: sha256_hex(&dump),
        },
    );
    if config.write_vocabularies {
        dumps.push((dataset, scheme, dump));
    }
    let empty_test_rows = test_matrix.rows().iter().filter(|r| r.is_empty()).count();

    let outcomes: Vec<(CellResult, CellTiming)> = classifiers
        .par_iter()
        .map(|&kind| {
            let started = Instant::now();
            let seed = cell_seed(config.seed, dataset, scheme, kind);
            let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<EvalReport> {
                let hyper = config.hyperparameters(kind)?;
                let train_set = crate::classifiers::TrainSet::new(
                    train_matrix.clone(),
                    data.train_labels.clone(),
                    data.class_names.clone(),
                )?;
                let model = train(&train_set, &hyper, seed)?;
                let predicted = model.predict(&test_matrix)?;
                let mut report = EvalReport::from_predictions(
                    dataset.as_str(),
                    scheme.as_str(),
                    kind.as_str(),
                    &data.class_names,
                    &data.test_labels,
                    &predicted,
                )?;
                report.num_train = data.train.len();
                report.empty_test_rows = empty_test_rows;
                report.config_snapshot = serde_json::json!({
                    "run_config": config.for_cell(dataset, scheme, kind),
                    "cell_seed": seed,
                    "hyperparameters": hyper,
                });
                Ok(report)
            }));
            let (report, error) = match outcome {
                Ok(Ok(report)) => (Some(report), None),
                Ok(Err(e)) => (None, Some(e.to_string())),
                Err(payload) => (None, Some(format!("panic: {}", panic_message(payload)))),
            };
            let seconds = started.elapsed().as_secs_f64();
            match &error {
                None => tracing::info!(dataset = dataset.as_str(), feature = scheme.as_str(), classifier = kind.as_str(), seconds, "cell done"),
                Some(e) => tracing::warn!(dataset = dataset.as_str(), feature = scheme.as_str(), classifier = kind.as_str(), error = %e, "cell failed"),
            }
            (
                CellResult {
                    dataset,
                    feature: scheme,
                    classifier: kind,
                    report,
                    error,
                },
                CellTiming {
                    dataset,
                    feature: scheme,
                    classifier: kind,
                    seconds,
                },
            )
        })
        .collect();
    for (cell, timing) in outcomes {
        cells.push(cell);
        timings.push(timing);
    }
}

fn canonical_classifiers(kinds: &[ClassifierKind]) -> Vec<ClassifierKind> {
    ClassifierKind::ALL.into_iter().filter(|k| kinds.contains(k)).collect()
}

fn canonical_features(schemes: &[FeatureScheme]) -> Vec<FeatureScheme> {
    FeatureScheme::ALL.into_iter().filter(|s| schemes.contains(s)).collect()
}

fn canonical_datasets(datasets: &[Dataset]) -> Vec<Dataset> {
    Dataset::ALL.into_iter().filter(|d| datasets.contains(d)).collect()
}

/// Runs the grid over corpora that are already loaded and split.
pub fn run_grid_on(config: &RunConfig, corpora: &[(Dataset, Corpus)]) -> Result<GridResult> {
    let pipeline = PipelineConfig::from_settings(&config.pipeline_settings())?;
    let mut result = GridResult::empty(config.clone());
    for (dataset, corpus) in corpora {
        let data = prepare(corpus, &pipeline)?;
        let count = |labels: &[usize]| {
            let mut c = vec![0; data.class_names.len()];
            labels.iter().for_each(|&l| c[l] += 1);
            c
        };
        let mut summary = DatasetSummary {
            dataset: *dataset,
            load_report: corpus.load_report.clone(),
            num_train: data.train.len(),
            num_test: data.test.len(),
            class_names: data.class_names.clone(),
            train_class_counts: count(&data.train_labels),
            test_class_counts: count(&data.test_labels),
            vocabularies: BTreeMap::new(),
        };
        for scheme in canonical_features(&config.features) {
            run_feature_block(
                config,
                *dataset,
                scheme,
                &data,
                &mut summary,
                &mut result.vocabulary_dumps,
                &mut result.cells,
                &mut result.timings,
            );
        }
        result.datasets.push(summary);
    }
    Ok(result)
}

/// Validates the config, loads every dataset and runs the grid.
///
/// An `Err` means nothing ran (exit status [`EXIT_CONFIG`]); cell failures are
/// reported inside the returned [`GridResult`].
pub fn run_grid(config: &RunConfig) -> Result<GridResult> {
    config.validate()?;
    let corpora = canonical_datasets(&config.datasets)
        .into_iter()
        .map(|d| load_dataset(config, d).map(|c| (d, c)))
        .collect::<Result<Vec<_>>>()?;
    run_grid_on(config, &corpora)
}

const METRIC_NAMES: [&str; 4] = ["A", "P", "R", "F1"];

fn metric_values(report: &EvalReport) -> [f64; 4] {
    [report.accuracy, report.precision, report.recall, report.f1]
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(fields).expect("writing to a Vec cannot fail");
    String::from_utf8(w.into_inner().expect("flush to Vec")).expect("csv output is UTF-8")
}

/// Datasets to show as table columns: the configured ones plus any that appear
/// in the cells, in canonical order.
fn table_datasets(result: &GridResult) -> Vec<Dataset> {
    let mut ds: Vec<Dataset> = result.config.datasets.clone();
    ds.extend(result.cells.iter().map(|c| c.dataset));
    canonical_datasets(&ds)
}

fn table_schemes(result: &GridResult) -> Vec<FeatureScheme> {
    let mut fs: Vec<FeatureScheme> = result.config.features.clone();
    fs.extend(result.cells.iter().map(|c| c.feature));
    canonical_features(&fs)
}

fn table_rows(result: &GridResult, scheme: FeatureScheme) -> Vec<ClassifierKind> {
    ClassifierKind::ALL
        .into_iter()
        .filter(|k| result.cells.iter().any(|c| c.feature == scheme && c.classifier == *k))
        .collect()
}

/// Table for one feature scheme: one row per classifier, A/P/R/F1 per dataset.
pub fn feature_table_csv(result: &GridResult, scheme: FeatureScheme) -> String {
    let datasets = table_datasets(result);
    let mut header = vec!["classifier".to_string()];
    for d in &datasets {
        header.extend(METRIC_NAMES.iter().map(|m| format!("{}_{m}", d.as_str())));
    }
    let mut out = csv_line(&header);
    for kind in table_rows(result, scheme) {
        let mut row = vec![kind.display_name().to_string()];
        for &d in &datasets {
            match result.cell(d, scheme, kind).and_then(|c| c.report.as_ref()) {
                Some(r) => row.extend(metric_values(r).iter().map(|v| format2(*v))),
                None => row.extend(std::iter::repeat(String::new()).take(4)),
            }
        }
        out.push_str(&csv_line(&row));
    }
    out
}

pub fn feature_table_markdown(result: &GridResult, scheme: FeatureScheme) -> String {
    let datasets = table_datasets(result);
    let mut header = vec!["Classifier".to_string()];
    for d in &datasets {
        header.extend(METRIC_NAMES.iter().map(|m| format!("{} {m}", d.as_str())));
    }
    let mut out = format!("| {} |\n", header.join(" | "));
    out.push_str(&format!("|{}\n", ["---|"].repeat(header.len()).concat()));
    for kind in table_rows(result, scheme) {
        let mut row = vec![kind.display_name().to_string()];
        for &d in &datasets {
            match result.cell(d, scheme, kind) {
                Some(CellResult { report: Some(r), .. }) => row.extend(metric_values(r).iter().map(|v| format2(*v))),
                Some(_) => row.extend(std::iter::repeat("failed".to_string()).take(4)),
                None => row.extend(std::iter::repeat("-".to_string()).take(4)),
            }
        }
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

/// Long-form rows `(classifier, feature, dataset, metric, value)` for plotting.
pub fn plot_data_csv(result: &GridResult) -> String {
    let mut out = csv_line(&["classifier", "feature", "dataset", "metric", "value"].map(String::from));
    for cell in &result.cells {
        if let Some(r) = &cell.report {
            for (name, value) in METRIC_NAMES.iter().zip(metric_values(r)) {
                out.push_str(&csv_line(&[
                    cell.classifier.as_str().to_string(),
                    cell.feature.as_str().to_string(),
                    cell.dataset.as_str().to_string(),
                    name.to_string(),
                    format2(value),
                ]));
            }
        }
    }
    out
}

/// One [`EvalReport`] CSV row per successful cell.
pub fn cells_csv(result: &GridResult) -> String {
    let mut out = csv_line(&EvalReport::CSV_HEADER.map(String::from));
    for r in result.cells.iter().filter_map(|c| c.report.as_ref()) {
        out.push_str(&csv_line(&r.csv_row()));
    }
    out
}

fn probe_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Writes the report files for `formats` into `out_dir` and returns their paths.
///
/// The directory is checked for writability before the first file is written.
pub fn emit_reports(result: &GridResult, formats: &[ReportFormat], out_dir: &Path) -> Result<Vec<PathBuf>> {
    probe_writable(out_dir)?;
    let mut files: Vec<(String, String)> = Vec::new();
    let schemes = table_schemes(result);
    if formats.contains(&ReportFormat::Csv) {
        for &s in &schemes {
            files.push((format!("{}_table.csv", s.as_str()), feature_table_csv(result, s)));
        }
        files.push(("plotdata.csv".to_string(), plot_data_csv(result)));
        files.push(("cells.csv".to_string(), cells_csv(result)));
    }
    if formats.contains(&ReportFormat::Markdown) {
        for &s in &schemes {
            files.push((format!("{}_table.md", s.as_str()), feature_table_markdown(result, s)));
        }
        files.push(("comparison.txt".to_string(), compare_features(result).summary_text()));
    }
    if formats.contains(&ReportFormat::Json) {
        files.push(("grid_result.json".to_string(), result.to_json()? + "\n"));
        files.push((
            "comparison.json".to_string(),
            serde_json::to_string_pretty(&compare_features(result))? + "\n",
        ));
    }
    files.push(("run_config.json".to_string(), serde_json::to_string_pretty(&result.config)? + "\n"));
    files.push(("run_config.toml".to_string(), result.config.to_toml_string()?));
    for (dataset, scheme, dump) in &result.vocabulary_dumps {
        files.push((format!("vocab_{}_{}.tsv", dataset.as_str(), scheme.as_str()), dump.clone()));
    }

    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDelta {
    pub dataset: Dataset,
    pub classifier: ClassifierKind,
    /// `tfidf − ngram` for A, P, R, F1.
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMax {
    pub metric: String,
    pub value: f64,
    pub feature: FeatureScheme,
    pub classifier: ClassifierKind,
    pub dataset: Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub available: bool,
    pub note: Option<String>,
    pub deltas: Vec<FeatureDelta>,
    pub maxima: Vec<MetricMax>,
}

impl FeatureComparison {
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        match &self.note {
            Some(note) => out.push_str(&format!("comparison unavailable: {note}\n")),
            None => {
                out.push_str("tfidf - ngram per dataset and classifier\n");
                for d in &self.deltas {
                    out.push_str(&format!(
                        "  {:<6} {:<20} A {:>+7.2}  P {:>+7.2}  R {:>+7.2}  F1 {:>+7.2}\n",
                        d.dataset.as_str(),
                        d.classifier.display_name(),
                        d.accuracy,
                        d.precision,
                        d.recall,
                        d.f1
                    ));
                }
            }
        }
        if !self.maxima.is_empty() {
            out.push_str("best cell per metric\n");
            for m in &self.maxima {
                out.push_str(&format!(
                    "  {:<3} {:>6} ({}, {}, {})\n",
                    m.metric,
                    format2(m.value),
                    m.feature.as_str(),
                    m.classifier.as_str(),
                    m.dataset.as_str()
                ));
            }
        }
        out
    }
}

/// Per (dataset, classifier) metric deltas between the two feature schemes and
/// the best cell for each metric. Ties keep the first cell in grid order.
pub fn compare_features(result: &GridResult) -> FeatureComparison {
    let ok: Vec<(&CellResult, &EvalReport)> = result
        .cells
        .iter()
        .filter_map(|c| c.report.as_ref().map(|r| (c, r)))
        .collect();
    let mut deltas = Vec::new();
    for &(cell, tfidf) in ok.iter().filter(|(c, _)| c.feature == FeatureScheme::Tfidf) {
        let ngram = ok
            .iter()
            .find(|(c, _)| c.feature == FeatureScheme::Ngram && c.dataset == cell.dataset && c.classifier == cell.classifier);
        if let Some((_, ngram)) = ngram {
            deltas.push(FeatureDelta {
                dataset: cell.dataset,
                classifier: cell.classifier,
                accuracy: tfidf.accuracy - ngram.accuracy,
                precision: tfidf.precision - ngram.precision,
                recall: tfidf.recall - ngram.recall,
                f1: tfidf.f1 - ngram.f1,
            });
        }
    }
    deltas.sort_by_key(|d| (d.dataset, d.classifier));

    let maxima = METRIC_NAMES
        .iter()
        .enumerate()
        .filter_map(|(i, name)| {
            let mut best: Option<(&CellResult, f64)> = None;
            for &(cell, report) in &ok {
                let v = metric_values(report)[i];
                if best.map_or(true, |(_, b)| v > b) {
                    best = Some((cell, v));
                }
            }
            best.map(|(cell, value)| MetricMax {
                metric: name.to_string(),
                value,
                feature: cell.feature,
                classifier: cell.classifier,
                dataset: cell.dataset,
            })
        })
        .collect();

    let note = deltas.is_empty().then(|| {
        "no (dataset, classifier) pair has successful cells under both feature schemes".to_string()
    });
    FeatureComparison {
        available: note.is_none(),
        note,
        deltas,
        maxima,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn toy_corpus() -> Corpus {
        let pos = ["great wonderful film loved it", "wonderful acting great story", "loved the great plot", "great fun wonderful cast"];
        let neg = ["terrible boring film hated it", "boring plot terrible acting", "hated the terrible story", "awful boring terrible cast"];
        let mut documents = Vec::new();
        for (i, (p, n)) in pos.iter().zip(neg.iter()).enumerate() {
            let split = if i < 3 { Split::Train } else { Split::Test };
            documents.push(Document { id: format!("p{i}"), text: p.to_string(), label: 1, split: Some(split) });
            documents.push(Document { id: format!("n{i}"), text: n.to_string(), label: 0, split: Some(split) });
        }
        Corpus {
            name: "toy".to_string(),
            documents,
            class_names: vec!["negative".to_string(), "positive".to_string()],
            load_report: LoadReport::default(),
        }
    }

    fn toy_config() -> RunConfig {
        RunConfig {
            datasets: vec![Dataset::Imdb],
            knn_k: 1,
            rf_n_trees: 5,
            min_df: 1,
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = RunConfig {
            imdb_subsample: Some(5000),
            max_features: 0,
            ..RunConfig::default()
        };
        let text = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("sede = 3\n").unwrap_err();
        assert!(err.to_string().contains("sede"));
        let c = RunConfig::from_toml_str("seed = 3\nclassifiers = [\"knn\"]\n").unwrap();
        assert_eq!((c.seed, c.classifiers), (3, vec![ClassifierKind::Knn]));
    }

    #[test]
    fn validate_reports_missing_paths() {
        let c = RunConfig {
            imdb_dir: Some("/nonexistent/aclImdb".into()),
            alexa_tsv: Some("/nonexistent/alexa.tsv".into()),
            ..RunConfig::default()
        };
        match c.validate() {
            Err(Error::MissingPaths { missing }) => assert_eq!(missing.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
        let c = RunConfig { rf_feature_subsample: "2".into(), ..c };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn toy_grid_runs_every_cell() {
        let result = run_grid_on(&toy_config(), &[(Dataset::Imdb, toy_corpus())]).unwrap();
        assert_eq!(result.cells.len(), 12);
        assert_eq!(result.exit_code(), EXIT_OK, "{:?}", result.cells.iter().filter_map(|c| c.error.as_ref()).collect::<Vec<_>>());
        let r = result.cell(Dataset::Imdb, FeatureScheme::Tfidf, ClassifierKind::MultinomialNb).unwrap();
        assert_eq!(r.report.as_ref().unwrap().accuracy, 100.0);
    }

    #[test]
    fn failing_cell_does_not_stop_the_grid() {
        let config = RunConfig {
            knn_k: 100,
            ..toy_config()
        };
        let result = run_grid_on(&config, &[(Dataset::Imdb, toy_corpus())]).unwrap();
        assert_eq!(result.cells.len(), 12);
        assert_eq!(result.failed_cells(), 2);
        assert_eq!(result.exit_code(), EXIT_CELL_FAILED);
        let md = feature_table_markdown(&result, FeatureScheme::Tfidf);
        assert!(md.contains("| KNeighbors | failed"));
    }

    #[test]
    fn tables_follow_classifier_order() {
        let result = run_grid_on(&toy_config(), &[(Dataset::Imdb, toy_corpus())]).unwrap();
        let md = feature_table_markdown(&result, FeatureScheme::Tfidf);
        let names: Vec<&str> = md.lines().skip(2).map(|l| l.split('|').nth(1).unwrap().trim()).collect();
        assert_eq!(
            names,
            ["Multinomial NB", "SVM", "KNeighbors", "LogisticRegression", "Decision Tree", "Random Forest"]
        );
    }

    #[test]
    fn empty_result_gives_headers_only() {
        let result = GridResult::empty(RunConfig::default());
        assert_eq!(feature_table_csv(&result, FeatureScheme::Ngram).lines().count(), 1);
        assert_eq!(feature_table_markdown(&result, FeatureScheme::Tfidf).lines().count(), 2);
        assert_eq!(plot_data_csv(&result), "classifier,feature,dataset,metric,value\n");
        let dir = tempfile::tempdir().unwrap();
        let files = emit_reports(&result, &ReportFormat::ALL, dir.path()).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        for expected in ["ngram_table.csv", "tfidf_table.csv", "ngram_table.md", "tfidf_table.md", "plotdata.csv", "run_config.json"] {
            assert!(names.iter().any(|n| n == expected), "{expected} missing from {names:?}");
        }
    }

    #[test]
    fn comparison_cases() {
        let result = run_grid_on(&toy_config(), &[(Dataset::Imdb, toy_corpus())]).unwrap();
        let cmp = compare_features(&result);
        assert!(cmp.available);
        assert_eq!(cmp.deltas.len(), 6);
        assert_eq!(cmp.maxima.len(), 4);

        let single = RunConfig {
            features: vec![FeatureScheme::Tfidf],
            classifiers: vec![ClassifierKind::LogisticRegression],
            ..toy_config()
        };
        let result = run_grid_on(&single, &[(Dataset::Imdb, toy_corpus())]).unwrap();
        assert_eq!(result.cells.len(), 1);
        let cmp = compare_features(&result);
        assert!(!cmp.available);
        assert!(cmp.summary_text().contains("comparison unavailable"));
    }

    #[test]
    fn cell_seeds_depend_on_coordinates() {
        let a = cell_seed(42, Dataset::Imdb, FeatureScheme::Tfidf, ClassifierKind::RandomForest);
        assert_eq!(a, cell_seed(42, Dataset::Imdb, FeatureScheme::Tfidf, ClassifierKind::RandomForest));
        assert_ne!(a, cell_seed(42, Dataset::Alexa, FeatureScheme::Tfidf, ClassifierKind::RandomForest));
        assert_ne!(a, cell_seed(43, Dataset::Imdb, FeatureScheme::Tfidf, ClassifierKind::RandomForest));
    }
}
