//! Window tensors: padding ragged per-window packet matrices to a
//! uniform row count, per-window Frobenius normalization, flattening
//! for the non-sequence models, and the binary tensor file format.
//!
//! Tensor file layout: three little-endian u64 header words
//! `{window_count, rows, cols}` followed by `window_count * rows * cols`
//! little-endian f64 values, window-major then row-major. Labels and
//! the token vocabulary travel in a JSON sidecar.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::TokenVocabulary;
use super::FeatureError;
use crate::windows::Label;

/// One window's packet-by-feature matrix.
pub type Matrix = Vec<Vec<f64>>;

/// A list of window matrices with aligned labels. Ragged before
/// padding, uniform after.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTensor {
    pub windows: Vec<Matrix>,
    pub labels: Vec<Label>,
}

impl WindowTensor {
    pub fn max_rows(&self) -> usize {
        self.windows.iter().map(Vec::len).max().unwrap_or(0)
    }
}

fn window_width(window: &Matrix, index: usize) -> Result<usize, FeatureError> {
    let width = window.first().map_or(0, Vec::len);
    if window.iter().any(|row| row.len() != width) {
        return Err(FeatureError::RaggedColumns(index));
    }
    Ok(width)
}

/// Extend every window to the tensor's maximum row count (or
/// `min_rows`, whichever is larger) by appending copies of `pad_row`.
pub fn pad_windows(
    tensor: &WindowTensor,
    pad_row: &[f64],
    min_rows: usize,
) -> Result<WindowTensor, FeatureError> {
    if tensor.windows.is_empty() {
        return Err(FeatureError::EmptyTensor);
    }
    let target = tensor.max_rows().max(min_rows);
    let mut windows = Vec::with_capacity(tensor.windows.len());
    for (i, window) in tensor.windows.iter().enumerate() {
        let width = window_width(window, i)?;
        if !window.is_empty() && width != pad_row.len() {
            return Err(FeatureError::PadWidthMismatch { pad: pad_row.len(), window: width });
        }
        let mut padded = window.clone();
        padded.resize(target, pad_row.to_vec());
        windows.push(padded);
    }
    Ok(WindowTensor { windows, labels: tensor.labels.clone() })
}

/// Scale a matrix to unit Frobenius norm. All-zero input is undefined.
pub fn frobenius_normalize(matrix: &Matrix) -> Result<Matrix, FeatureError> {
    let sum_squares: f64 = matrix
        .iter()
        .flat_map(|row| row.iter())
        .map(|v| v.abs().powi(2))
        .sum();
    if sum_squares == 0.0 {
        return Err(FeatureError::ZeroMatrix);
    }
    let norm = sum_squares.sqrt();
    Ok(matrix
        .iter()
        .map(|row| row.iter().map(|v| v / norm).collect())
        .collect())
}

/// Row-major flattening of a window into one feature vector.
pub fn flatten_window(window: &Matrix) -> Vec<f64> {
    window.iter().flat_map(|row| row.iter().copied()).collect()
}

/// Inverse of [`flatten_window`] for a known column count.
pub fn unflatten_window(flat: &[f64], cols: usize) -> Matrix {
    if cols == 0 {
        return Vec::new();
    }
    flat.chunks(cols).map(<[f64]>::to_vec).collect()
}

/// JSON sidecar accompanying a tensor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSidecar {
    pub labels: Vec<Label>,
    pub columns: Vec<String>,
    pub vocabulary: TokenVocabulary,
}

/// Write a padded tensor and its sidecar (`<path>.json`).
pub fn write_tensor(
    path: &Path,
    tensor: &WindowTensor,
    sidecar: &TensorSidecar,
) -> Result<(), FeatureError> {
    if tensor.windows.is_empty() {
        return Err(FeatureError::EmptyTensor);
    }
    let rows = tensor.windows[0].len();
    let cols = window_width(&tensor.windows[0], 0)?;
    let mut out =
        Vec::with_capacity(24 + tensor.windows.len() * rows * cols * 8);
    out.extend_from_slice(&(tensor.windows.len() as u64).to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for (i, window) in tensor.windows.iter().enumerate() {
        if window.len() != rows || window_width(window, i)? != cols {
            return Err(FeatureError::CorruptTensor(format!(
                "window {i} is not {rows}x{cols}; pad before writing"
            )));
        }
        for row in window {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    fs::write(path, out)?;
    fs::write(sidecar_path(path), serde_json::to_string(sidecar)?)?;
    Ok(())
}

/// Read a tensor file and its sidecar.
pub fn read_tensor(path: &Path) -> Result<(WindowTensor, TensorSidecar), FeatureError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 24 {
        return Err(FeatureError::CorruptTensor("missing header".into()));
    }
    let word = |i: usize| {
        u64::from_le_bytes(bytes[i * 8..(i + 1) * 8].try_into().unwrap()) as usize
    };
    let (count, rows, cols) = (word(0), word(1), word(2));
    let expected = 24 + count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| FeatureError::CorruptTensor("dimension overflow".into()))?;
    if bytes.len() != expected {
        return Err(FeatureError::CorruptTensor(format!(
            "expected {expected} bytes for {count}x{rows}x{cols}, found {}",
            bytes.len()
        )));
    }
    let mut values = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let windows: Vec<Matrix> = (0..count)
        .map(|_| {
            (0..rows)
                .map(|_| (0..cols).map(|_| values.next().unwrap()).collect())
                .collect()
        })
        .collect();

    let sidecar: TensorSidecar =
        serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if sidecar.labels.len() != count {
        return Err(FeatureError::CorruptTensor(format!(
            "sidecar has {} labels for {count} windows",
            sidecar.labels.len()
        )));
    }
    let labels = sidecar.labels.clone();
    Ok((WindowTensor { windows, labels }, sidecar))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    std::path::PathBuf::from(s)
}
