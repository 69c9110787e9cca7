//! Embeddings, recurrent encoders, affine maps and dropout.

mod affine;
mod dropout;
mod embedding;
mod init;
mod lstm;

pub use affine::{affine_map, AffineParams};
pub use dropout::{check_rate, dropout, Mode};
pub use embedding::{
    build_vocab, glove_tokens, load_glove, load_glove_from, read_vocab, write_vocab,
    EmbeddingTable, GloveStats, Vocab, OOV_INDEX, OOV_TOKEN, PLACEHOLDER, PLACEHOLDER_INDEX,
};
pub use init::glorot_uniform;
pub use lstm::{bilstm_forward, lstm_forward, BiLstm, Direction, LstmParams};
