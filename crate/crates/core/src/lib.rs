//! Offline sEMG movement-recognition toolkit.
//!
//! The crate implements the full recognition pipeline for multi-channel
//! surface EMG trials:
//!
//! ```text
//! raw recording
//!   -> notch + band-pass denoising (zero-phase Butterworth)       dsp
//!   -> multi-threshold short-time-energy activity segmentation    segment
//!   -> 44 time/frequency features (22 per channel x 2 channels)   features
//!   -> min-max normalization + stratified train/test split        preprocess
//!   -> SVM-RFE feature ranking, top-k selection                   rfe / svm
//!   -> trainable classifiers (MLP, LDA, one-vs-one SVM)           mlp / lda / svm
//!   -> confusion-matrix evaluation and aggregation                eval
//! ```
//!
//! A seeded synthetic trial generator (`synth`) provides ground-truthed
//! corpora so every stage is verifiable end to end, and `pipeline` wires the
//! stages together behind a single validated configuration.

pub mod dsp;
pub mod eval;
pub mod error;
pub mod features;
pub mod lda;
pub mod mlp;
pub mod model;
pub mod preprocess;
pub mod rfe;
pub mod seeding;
pub mod segment;
pub mod spectrum;
pub mod svm;
pub mod svm_multi;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
