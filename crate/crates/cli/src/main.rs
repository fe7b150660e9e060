use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use textclass::bench::{
    compare_features, emit_reports, run_grid, Dataset, GridResult, ReportFormat, RunConfig, EXIT_CONFIG,
};
use textclass::classifiers::{ClassifierKind, DistanceMetric};
use textclass::features::{FeatureScheme, IdfVariant};
use textclass::preprocess::Reducer;
use tracing_subscriber::EnvFilter;

/// Exit status for failures writing or reading report files.
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "textclass", version, about = "Sentiment classification benchmark over n-gram and TF-IDF features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dataset x feature x classifier grid and write reports.
    Run(RunArgs),
    /// Re-emit report files from a saved grid_result.json.
    Report {
        grid: PathBuf,
        #[arg(long, env = "TEXTCLASS_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        formats: Option<Vec<ReportFormat>>,
    },
    /// Print tfidf - ngram deltas and the best cell per metric.
    Compare {
        grid: PathBuf,
        /// Print the comparison as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,

    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<Dataset>>,
    #[arg(long)]
    imdb_dir: Option<PathBuf>,
    #[arg(long)]
    alexa_tsv: Option<PathBuf>,
    #[arg(long)]
    alexa_text_column: Option<String>,
    #[arg(long)]
    alexa_label_column: Option<String>,
    /// Stratified IMDB subsample size (0 = full corpus).
    #[arg(long)]
    imdb_subsample: Option<usize>,
    #[arg(long)]
    imdb_resplit: Option<bool>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<FeatureScheme>>,
    #[arg(long, value_delimiter = ',')]
    classifiers: Option<Vec<ClassifierKind>>,

    #[arg(long)]
    lowercase: Option<bool>,
    #[arg(long)]
    strip_punctuation: Option<bool>,
    #[arg(long)]
    expand_abbreviations: Option<bool>,
    #[arg(long)]
    numbers_to_words: Option<bool>,
    #[arg(long)]
    reducer: Option<Reducer>,
    #[arg(long)]
    stopwords_path: Option<PathBuf>,
    #[arg(long)]
    abbreviations_path: Option<PathBuf>,
    #[arg(long)]
    lemmas_path: Option<PathBuf>,

    #[arg(long)]
    ngram_n: Option<usize>,
    #[arg(long)]
    tfidf_n: Option<usize>,
    #[arg(long)]
    min_df: Option<usize>,
    /// 0 = unbounded.
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    idf_variant: Option<IdfVariant>,

    #[arg(long)]
    nb_alpha: Option<f64>,
    #[arg(long)]
    svm_c: Option<f64>,
    #[arg(long)]
    svm_epochs: Option<usize>,
    #[arg(long)]
    lr_l2: Option<f64>,
    #[arg(long)]
    lr_epochs: Option<usize>,
    #[arg(long)]
    lr_tol: Option<f64>,
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long)]
    knn_metric: Option<DistanceMetric>,
    /// 0 = unlimited depth.
    #[arg(long)]
    tree_max_depth: Option<usize>,
    #[arg(long)]
    tree_min_leaf: Option<usize>,
    #[arg(long)]
    rf_n_trees: Option<usize>,
    /// 0 = unlimited depth.
    #[arg(long)]
    rf_max_depth: Option<usize>,
    #[arg(long)]
    rf_min_leaf: Option<usize>,
    /// "sqrt" or a ratio in (0, 1].
    #[arg(long)]
    rf_feature_subsample: Option<String>,
    #[arg(long)]
    rf_bootstrap: Option<bool>,

    #[arg(long, env = "TEXTCLASS_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    formats: Option<Vec<ReportFormat>>,
    #[arg(long)]
    write_vocabularies: Option<bool>,
}

fn nonzero(v: usize) -> Option<usize> {
    (v > 0).then_some(v)
}

impl RunArgs {
    fn apply(self, mut c: RunConfig) -> RunConfig {
        macro_rules! set {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        macro_rules! set_some {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$field = Some(v); })*
            };
        }
        set!(
            datasets, alexa_text_column, alexa_label_column, imdb_resplit, test_fraction, seed, features,
            classifiers, lowercase, strip_punctuation, expand_abbreviations, numbers_to_words, reducer, ngram_n,
            tfidf_n, min_df, max_features, idf_variant, nb_alpha, svm_c, svm_epochs, lr_l2, lr_epochs, lr_tol,
            knn_k, knn_metric, tree_min_leaf, rf_n_trees, rf_min_leaf, rf_feature_subsample, rf_bootstrap,
            output_dir, formats, write_vocabularies,
        );
        set_some!(imdb_dir, alexa_tsv, stopwords_path, abbreviations_path, lemmas_path);
        if let Some(v) = self.imdb_subsample {
            c.imdb_subsample = nonzero(v);
        }
        if let Some(v) = self.tree_max_depth {
            c.tree_max_depth = nonzero(v);
        }
        if let Some(v) = self.rf_max_depth {
            c.rf_max_depth = nonzero(v);
        }
        c
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn read_grid(path: &Path) -> Result<GridResult, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    GridResult::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let base = match &args.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_CONFIG as u8, e),
        },
        None => RunConfig::default(),
    };
    let print_only = args.print_config;
    let config = args.apply(base);
    if print_only {
        return match config.to_toml_string() {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_CONFIG as u8, e),
        };
    }
    let result = match run_grid(&config) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG as u8, e),
    };
    match emit_reports(&result, &config.formats, &config.output_dir) {
        Ok(files) => {
            for f in files {
                tracing::debug!(file = %f.display(), "wrote");
            }
        }
        Err(e) => return fail(EXIT_IO, e),
    }
    print!("{}", compare_features(&result).summary_text());
    for cell in result.cells.iter().filter(|c| !c.succeeded()) {
        eprintln!(
            "cell failed: {} / {} / {}: {}",
            cell.dataset.as_str(),
            cell.feature.as_str(),
            cell.classifier.as_str(),
            cell.error.as_deref().unwrap_or("unknown error")
        );
    }
    ExitCode::from(result.exit_code() as u8)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Report {
            grid,
            output_dir,
            formats,
        } => {
            let result = match read_grid(&grid) {
                Ok(r) => r,
                Err(e) => return fail(EXIT_IO, e),
            };
            let out = output_dir.unwrap_or_else(|| result.config.output_dir.clone());
            let formats = formats.unwrap_or_else(|| result.config.formats.clone());
            match emit_reports(&result, &formats, &out) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_IO, e),
            }
        }
        Command::Compare { grid, json } => {
            let result = match read_grid(&grid) {
                Ok(r) => r,
                Err(e) => return fail(EXIT_IO, e),
            };
            let cmp = compare_features(&result);
            if json {
                match serde_json::to_string_pretty(&cmp) {
                    Ok(text) => println!("{text}"),
                    Err(e) => return fail(EXIT_IO, e),
                }
            } else {
                print!("{}", cmp.summary_text());
            }
            ExitCode::SUCCESS
        }
    }
}
