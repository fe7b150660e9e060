//! Python bindings: preprocessing, vectorizers, classifiers, metrics and the grid runner.

use std::collections::{BTreeMap, HashMap};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use textclass::bench::{compare_features, run_grid, GridResult, RunConfig};
use textclass::classifiers::{self, ClassifierKind, Hyperparameters, Model, TrainSet};
use textclass::features::{FeatureScheme, FeatureSettings, FittedFeatures, IdfVariant, SparseMatrix, SparseVector};
use textclass::metrics::EvalReport;
use textclass::preprocess::{self, PipelineConfig, Reducer, TokenStream};

fn err(e: textclass::Error) -> PyErr {
    match e {
        textclass::Error::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = textclass::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Rows as `{column: weight}` dicts.
type PyRows = Vec<HashMap<usize, f64>>;

fn to_matrix(rows: PyRows, dim: usize) -> PyResult<SparseMatrix> {
    let rows = rows
        .into_iter()
        .map(|r| SparseVector::from_pairs(dim, r))
        .collect::<textclass::Result<Vec<_>>>()
        .map_err(err)?;
    SparseMatrix::new(dim, rows).map_err(err)
}

fn from_matrix(m: &SparseMatrix) -> Vec<BTreeMap<usize, f64>> {
    m.rows().iter().map(|r| r.entries().iter().copied().collect()).collect()
}

fn json_of(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    preprocess::tokenize(text)
}

#[pyfunction]
fn stem(word: &str) -> String {
    preprocess::stem(word)
}

#[pyfunction]
fn lemmatize(word: &str) -> String {
    preprocess::lemmatize(word, PipelineConfig::default().lemmas())
}

#[pyfunction]
fn ngrams(tokens: Vec<String>, n: usize) -> Vec<String> {
    textclass::features::extract_ngrams(&tokens, n)
}

/// Full preprocessing pipeline for one text.
#[pyfunction]
#[pyo3(signature = (text, reducer = "stem", lowercase = true, strip_punctuation = true, expand_abbreviations = true, numbers_to_words = false))]
fn preprocess_text(
    text: &str,
    reducer: &str,
    lowercase: bool,
    strip_punctuation: bool,
    expand_abbreviations: bool,
    numbers_to_words: bool,
) -> PyResult<Vec<String>> {
    let mut config = PipelineConfig::default();
    config.lowercase = lowercase;
    config.strip_punctuation = strip_punctuation;
    config.expand_abbreviations = expand_abbreviations;
    config.numbers_to_words = numbers_to_words;
    config.reducer = parse::<Reducer>(reducer)?;
    Ok(preprocess::run_pipeline_text("", text, &config)
        .surfaces()
        .into_iter()
        .map(str::to_string)
        .collect())
}

/// Vocabulary plus optional IDF weights, fitted on training token lists.
#[pyclass(module = "textclass")]
struct Vectorizer {
    scheme: FeatureScheme,
    settings: FeatureSettings,
    fitted: Option<FittedFeatures>,
}

fn streams(docs: Vec<Vec<String>>) -> Vec<TokenStream> {
    docs.into_iter()
        .enumerate()
        .map(|(i, d)| TokenStream::from_words(i.to_string(), d))
        .collect()
}

impl Vectorizer {
    fn fitted(&self) -> PyResult<&FittedFeatures> {
        self.fitted
            .as_ref()
            .ok_or_else(|| PyRuntimeError::new_err("vectorizer is not fitted"))
    }
}

#[pymethods]
impl Vectorizer {
    #[new]
    #[pyo3(signature = (scheme = "tfidf", n = None, min_df = 2, max_features = Some(50_000), idf = "log10"))]
    fn new(scheme: &str, n: Option<usize>, min_df: usize, max_features: Option<usize>, idf: &str) -> PyResult<Self> {
        let scheme = parse::<FeatureScheme>(scheme)?;
        let mut settings = FeatureSettings {
            min_df,
            max_features,
            idf_variant: parse::<IdfVariant>(idf)?,
            ..FeatureSettings::default()
        };
        if let Some(n) = n {
            match scheme {
                FeatureScheme::Ngram => settings.ngram_n = n,
                FeatureScheme::Tfidf => settings.tfidf_n = n,
            }
        }
        Ok(Self {
            scheme,
            settings,
            fitted: None,
        })
    }

    fn fit(&mut self, docs: Vec<Vec<String>>) -> PyResult<()> {
        self.fitted = Some(FittedFeatures::fit(self.scheme, &self.settings, &streams(docs)).map_err(err)?);
        Ok(())
    }

    fn transform(&self, docs: Vec<Vec<String>>) -> PyResult<Vec<BTreeMap<usize, f64>>> {
        Ok(from_matrix(&self.fitted()?.transform(&streams(docs)).map_err(err)?))
    }

    #[getter]
    fn dim(&self) -> PyResult<usize> {
        Ok(self.fitted()?.vocab.len())
    }

    fn vocabulary(&self) -> PyResult<Vec<String>> {
        Ok(self.fitted()?.vocab.terms().to_vec())
    }

    fn idf(&self) -> PyResult<Vec<f64>> {
        Ok(self.fitted()?.idf.clone())
    }

    fn dump_tsv(&self) -> PyResult<String> {
        Ok(self.fitted()?.dump_tsv())
    }
}

/// One of the six classifiers. Unspecified hyperparameters take their defaults.
#[pyclass(module = "textclass")]
struct Classifier {
    hyper: Hyperparameters,
    seed: u64,
    model: Option<Model>,
}

impl Classifier {
    fn model(&self) -> PyResult<&Model> {
        self.model
            .as_ref()
            .ok_or_else(|| PyRuntimeError::new_err("classifier is not trained"))
    }
}

#[pymethods]
impl Classifier {
    #[new]
    #[pyo3(signature = (kind, seed = 0, params = None))]
    fn new(py: Python<'_>, kind: &str, seed: u64, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let kind = parse::<ClassifierKind>(kind)?;
        let mut value = serde_json::to_value(Hyperparameters::default_for(kind))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        if let Some(params) = params {
            let serde_json::Value::Object(extra) = json_of(py, params.as_any())? else {
                return Err(PyValueError::new_err("params must be a dict"));
            };
            let obj = value.as_object_mut().expect("hyperparameters serialize to an object");
            for (k, v) in extra {
                if k == "kind" || !obj.contains_key(&k) {
                    return Err(PyValueError::new_err(format!("unknown hyperparameter {k:?} for {}", kind.as_str())));
                }
                obj.insert(k, v);
            }
        }
        let hyper = serde_json::from_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            hyper,
            seed,
            model: None,
        })
    }

    /// Trains on `{column: weight}` rows of width `dim` with integer labels.
    #[pyo3(signature = (rows, labels, dim, class_names = None))]
    fn fit(&mut self, rows: PyRows, labels: Vec<usize>, dim: usize, class_names: Option<Vec<String>>) -> PyResult<()> {
        let matrix = to_matrix(rows, dim)?;
        let data = match class_names {
            Some(names) => TrainSet::new(matrix, labels, names),
            None => TrainSet::binary(matrix, labels),
        }
        .map_err(err)?;
        self.model = Some(classifiers::train(&data, &self.hyper, self.seed).map_err(err)?);
        Ok(())
    }

    fn predict(&self, rows: PyRows) -> PyResult<Vec<usize>> {
        let model = self.model()?;
        model.predict(&to_matrix(rows, model.dim)?).map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.hyper.kind().as_str()
    }

    fn to_json(&self) -> PyResult<String> {
        self.model()?.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let model = Model::from_json(text).map_err(err)?;
        Ok(Self {
            hyper: model.hyperparameters.clone(),
            seed: model.seed,
            model: Some(model),
        })
    }
}

/// Accuracy and support-weighted precision/recall/F1 as percentages.
#[pyfunction]
#[pyo3(signature = (truth, predicted, num_classes = 2))]
fn evaluate(py: Python<'_>, truth: Vec<usize>, predicted: Vec<usize>, num_classes: usize) -> PyResult<Py<PyDict>> {
    let names: Vec<String> = (0..num_classes).map(|c| c.to_string()).collect();
    let r = EvalReport::from_predictions("", "", "", &names, &truth, &predicted).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("accuracy", r.accuracy)?;
    out.set_item("precision", r.precision)?;
    out.set_item("recall", r.recall)?;
    out.set_item("f1", r.f1)?;
    out.set_item("zero_division", r.zero_division)?;
    Ok(out.unbind())
}

/// Runs the grid for a TOML config and returns the grid result as JSON.
#[pyfunction]
fn run_grid_toml(config_toml: &str) -> PyResult<String> {
    let config = RunConfig::from_toml_str(config_toml).map_err(err)?;
    run_grid(&config).and_then(|r| r.to_json()).map_err(err)
}

/// Human-readable feature comparison for a grid result JSON.
#[pyfunction]
fn compare(grid_json: &str) -> PyResult<String> {
    let result = GridResult::from_json(grid_json).map_err(err)?;
    Ok(compare_features(&result).summary_text())
}

#[pymodule]
fn textclass_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(stem, m)?)?;
    m.add_function(wrap_pyfunction!(lemmatize, m)?)?;
    m.add_function(wrap_pyfunction!(ngrams, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess_text, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid_toml, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_class::<Vectorizer>()?;
    m.add_class::<Classifier>()?;
    Ok(())
}
