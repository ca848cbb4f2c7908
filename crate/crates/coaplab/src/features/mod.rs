//! Feature preprocessing: the 42-column per-packet schema, projection
//! to a selected subset, string tokenization, ragged-window padding,
//! Frobenius normalization, and tensor export.

mod schema;
mod tensor;
mod tokenize;

pub use schema::{
    default_selected_mask, extract_features, project_selected, Cell, ColumnKind, FeatureColumn,
    FeatureMask, FeatureSchema, RawFeatureRow, DEFAULT_SELECTED_COLUMNS, SCHEMA_WIDTH,
};
pub use tensor::{
    flatten_window, frobenius_normalize, pad_windows, read_tensor, unflatten_window,
    write_tensor, Matrix, TensorSidecar, WindowTensor,
};
pub use tokenize::{detokenize, tokenize, tokenize_frozen, TokenVocabulary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature mask covers {mask} columns but rows have {row}")]
    MaskWidthMismatch { mask: usize, row: usize },
    #[error("vocabulary has {vocab} columns but rows have {row}")]
    VocabularyWidthMismatch { vocab: usize, row: usize },
    #[error("column {0} is numeric but holds a categorical value")]
    KindMismatch(usize),
    #[error("cannot pad an empty tensor")]
    EmptyTensor,
    #[error("pad row has {pad} cells but windows have {window} columns")]
    PadWidthMismatch { pad: usize, window: usize },
    #[error("window {0} rows have inconsistent widths")]
    RaggedColumns(usize),
    #[error("Frobenius norm of an all-zero matrix is undefined")]
    ZeroMatrix,
    #[error("tensor file corrupt: {0}")]
    CorruptTensor(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
