//! Skip-gram embeddings: vocabulary, training, cosine queries and file I/O.

mod io;
mod model;
mod sgns;
mod vocab;

pub use io::{load_model, model_from_reader, model_to_text, save_model};
pub use model::{cosine, EmbeddingModel, Lookup};
pub use sgns::{
    logistic_target, sgns_gradients, train_sgns, train_sgns_with_report, NoiseSampler, SgnsGradients, TrainConfig,
    TrainReport,
};
pub use vocab::{build_vocab, Vocab};
