//! Python bindings for the CoAP DoS laboratory.
//!
//! Structured values cross the boundary as JSON strings, matching the
//! artifact formats the CLI writes; raw CoAP messages cross as bytes.
//!
//! Usage from Python:
//!
//!     import coaplab_py as lab
//!     cfg = lab.default_config_json()
//!     print(lab.generate_capture(cfg, "out/"))
//!     report = lab.run_pipeline(cfg, "out/", True)

use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use coaplab::capture::read_pcap;
use coaplab::coap;
use coaplab::features;
use coaplab::pipeline::{
    cmd_generate, cmd_label, cmd_pipeline, PipelineConfig,
};
use coaplab::windows::Label;

fn value_err<E: std::fmt::Display>(err: E) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// The default pipeline configuration as pretty JSON.
#[pyfunction]
fn default_config_json() -> PyResult<String> {
    serde_json::to_string_pretty(&PipelineConfig::default()).map_err(value_err)
}

/// Encode a CoAP message given its JSON form; returns the wire bytes.
#[pyfunction]
fn encode_message<'py>(py: Python<'py>, message_json: &str) -> PyResult<Bound<'py, PyBytes>> {
    let message: coap::CoapMessage = serde_json::from_str(message_json).map_err(value_err)?;
    let bytes = coap::encode_message(&message).map_err(value_err)?;
    Ok(PyBytes::new(py, &bytes))
}

/// Decode CoAP wire bytes; returns the message as JSON.
#[pyfunction]
fn decode_message(bytes: &[u8]) -> PyResult<String> {
    let message = coap::decode_message(bytes).map_err(value_err)?;
    serde_json::to_string(&message).map_err(value_err)
}

/// Build a confirmable request and return its wire bytes.
#[pyfunction]
fn make_request<'py>(
    py: Python<'py>,
    method: &str,
    payload: &[u8],
    message_id: u16,
) -> PyResult<Bound<'py, PyBytes>> {
    let method = match method.to_ascii_uppercase().as_str() {
        "GET" => coap::Method::Get,
        "PUT" => coap::Method::Put,
        "POST" => coap::Method::Post,
        other => return Err(PyValueError::new_err(format!("unknown method {other}"))),
    };
    let message = coap::make_request(method, payload.to_vec(), message_id).map_err(value_err)?;
    let bytes = coap::encode_message(&message).map_err(value_err)?;
    Ok(PyBytes::new(py, &bytes))
}

/// Run the traffic scenario; writes capture.pcap, attacks.json, and
/// manifest.json under `out_dir` and returns the summary as JSON.
#[pyfunction]
fn generate_capture(config_json: &str, out_dir: &str) -> PyResult<String> {
    let config: PipelineConfig = serde_json::from_str(config_json).map_err(value_err)?;
    let summary = cmd_generate(&config, Path::new(out_dir)).map_err(value_err)?;
    serde_json::to_string(&summary).map_err(value_err)
}

/// Window and label a capture, writing NDJSON to `out_path`; returns
/// the `{windows, malicious, benign, disagreements}` summary as JSON.
#[pyfunction]
#[pyo3(signature = (pcap_path, attack_log_path, out_path, threshold = 350, window_width_us = 10_000_000, crosscheck = true))]
fn label_capture(
    pcap_path: &str,
    attack_log_path: &str,
    out_path: &str,
    threshold: i64,
    window_width_us: u64,
    crosscheck: bool,
) -> PyResult<String> {
    let summary = cmd_label(
        Path::new(pcap_path),
        Path::new(attack_log_path),
        Path::new(out_path),
        window_width_us,
        threshold,
        crosscheck,
    )
    .map_err(value_err)?;
    serde_json::to_string(&summary).map_err(value_err)
}

/// Number of packets in a pcap file.
#[pyfunction]
fn pcap_packet_count(path: &str) -> PyResult<usize> {
    Ok(read_pcap(Path::new(path)).map_err(value_err)?.len())
}

/// Scale a matrix to unit Frobenius norm.
#[pyfunction]
fn frobenius_normalize(matrix: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    features::frobenius_normalize(&matrix).map_err(value_err)
}

/// Pad every window to the longest one by appending copies of `pad_row`.
#[pyfunction]
fn pad_windows(
    windows: Vec<Vec<Vec<f64>>>,
    pad_row: Vec<f64>,
) -> PyResult<Vec<Vec<Vec<f64>>>> {
    let labels = vec![Label::Benign; windows.len()];
    let tensor = features::WindowTensor { windows, labels };
    let padded = features::pad_windows(&tensor, &pad_row, 0).map_err(value_err)?;
    Ok(padded.windows)
}

/// First-seen tokenization of one categorical column: tokens are
/// 1-based, with the distinct values returned in token order.
#[pyfunction]
fn tokenize_column(values: Vec<String>) -> PyResult<(Vec<u64>, Vec<String>)> {
    let kinds = vec![features::ColumnKind::Categorical];
    let rows: Vec<features::RawFeatureRow> = values
        .into_iter()
        .map(|v| features::RawFeatureRow { cells: vec![features::Cell::Categorical(v)] })
        .collect();
    let mut vocab = features::TokenVocabulary::new(&kinds);
    let tokens = features::tokenize(&rows, &mut vocab).map_err(value_err)?;
    let table = vocab.per_column.remove(0).unwrap_or_default();
    Ok((tokens.into_iter().map(|r| r[0] as u64).collect(), table))
}

/// Fraction of packets counted as attacker-sourced.
#[pyfunction]
fn attack_fraction(total: u64, attack_requests: u64) -> PyResult<f64> {
    Ok(coaplab::capture::DatasetStats::from_counts(total, attack_requests)
        .map_err(value_err)?
        .attack_fraction())
}

/// Run the full pipeline (generate, label, features, train, evaluate)
/// into `out_dir`; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir, crosscheck = true))]
fn run_pipeline(config_json: &str, out_dir: &str, crosscheck: bool) -> PyResult<String> {
    let config: PipelineConfig = serde_json::from_str(config_json).map_err(value_err)?;
    let report = cmd_pipeline(&config, Path::new(out_dir), crosscheck).map_err(value_err)?;
    serde_json::to_string(&report).map_err(value_err)
}

#[pymodule]
fn coaplab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(default_config_json, m)?)?;
    m.add_function(wrap_pyfunction!(encode_message, m)?)?;
    m.add_function(wrap_pyfunction!(decode_message, m)?)?;
    m.add_function(wrap_pyfunction!(make_request, m)?)?;
    m.add_function(wrap_pyfunction!(generate_capture, m)?)?;
    m.add_function(wrap_pyfunction!(label_capture, m)?)?;
    m.add_function(wrap_pyfunction!(pcap_packet_count, m)?)?;
    m.add_function(wrap_pyfunction!(frobenius_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(pad_windows, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize_column, m)?)?;
    m.add_function(wrap_pyfunction!(attack_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
