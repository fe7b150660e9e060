//! Sentiment text classification toolkit.
//!
//! The crate covers the whole path from raw reviews to evaluation tables:
//!
//! - [`corpus`]: IMDB (`aclImdb` directory tree) and Amazon Alexa (TSV) loaders, stratified splits
//! - [`preprocess`]: tokenizer, normalizer, stopword filter, Porter stemmer, dictionary lemmatizer
//! - [`features`]: vocabularies, n-gram counts and TF-IDF weighting over sparse rows
//! - [`classifiers`]: multinomial naive Bayes, linear SVM, logistic regression, k-NN,
//!   CART decision tree and random forest behind one train/predict contract
//! - [`metrics`]: confusion counts, accuracy and support-weighted precision/recall/F1
//! - [`bench`]: the dataset × feature × classifier grid runner and its report writers

pub mod bench;
pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod features;
pub mod metrics;
pub mod preprocess;
mod seeding;

pub use error::{Error, Result};
