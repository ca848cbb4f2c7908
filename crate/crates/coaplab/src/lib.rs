//! A desk-scale laboratory for CoAP denial-of-service traffic.
//!
//! The crate regenerates a four-host CoAP DoS scenario (one server, one
//! benign client, two coordinated attackers) on a deterministic virtual
//! clock, persists the capture as classic pcap plus a JSON attack log,
//! labels 10-second flow windows by attacker packet count, preprocesses
//! the windows into classifier-ready tensors (tokenization, padding,
//! Frobenius normalization), selects feature subsets with a genetic
//! algorithm, and trains five classifiers (SVM, Gaussian naive Bayes,
//! decision tree, random forest, LSTM) on the result.
//!
//! Everything is seeded: identical configuration yields byte-identical
//! captures and reports. The `coaplab` binary drives the full pipeline;
//! each stage is also callable as a library.

pub mod capture;
pub mod classify;
pub mod coap;
pub mod features;
pub mod ga;
pub mod pipeline;
pub mod scenario;
pub mod seed;
pub mod windows;

pub use windows::Label;
