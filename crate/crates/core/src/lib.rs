//! Measuring gender, racial and intersectional bias in noisy historical corpora.
//!
//! The pipeline runs from OCR cleanup ([`ingest`]) through tokenization
//! ([`tokenize`]) and skip-gram embeddings ([`embed`], audited by
//! [`stability`]) to the association measures: [`weat`] over embeddings,
//! and [`pmi`] / [`lexicon`] over entity descriptors collected by
//! [`entities`]. [`synth`] plants known biases for validation and
//! [`pipeline`] wires everything to a single configuration.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix it to `f64`.

pub mod embed;
pub mod entities;
mod error;
pub mod ingest;
pub mod jsonl;
pub mod lexicon;
pub mod pipeline;
pub mod pmi;
mod scalar;
pub mod stability;
pub mod synth;
pub mod tokenize;
pub mod weat;

pub use error::{Error, Result};
pub use scalar::{dot, mean, norm, population_std, Scalar};

/// Default-precision embedding model.
pub type EmbeddingModel = embed::EmbeddingModel<f64>;
/// Single-precision embedding model.
pub type EmbeddingModel32 = embed::EmbeddingModel<f32>;
pub type TrainConfig = embed::TrainConfig;
pub type WeatResult = weat::WeatResult<f64>;
pub type PlaneCoordinate = pmi::PlaneCoordinate<f64>;
pub type StabilityReport = stability::StabilityReport<f64>;
