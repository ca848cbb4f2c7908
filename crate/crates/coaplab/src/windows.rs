//! Flow windowing and labeling: split a capture into fixed-width
//! windows anchored at the first packet, label each window malicious
//! when attacker-sourced packets exceed the threshold, and cross-check
//! the count rule against the attack log.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{AttackLogFile, CaptureError, PacketRecord};

/// Default window width: ten seconds.
pub const DEFAULT_WINDOW_WIDTH_US: u64 = 10_000_000;

/// Default malicious-packet threshold; a window is malicious when the
/// attacker packet count is strictly greater than this.
pub const DEFAULT_PACKET_THRESHOLD: i64 = 350;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("cannot window an empty capture")]
    EmptyCapture,
    #[error("window width must be positive")]
    ZeroWidth,
    #[error("capture is not time-ordered at packet {0}")]
    NotTimeOrdered(usize),
    #[error("capture: {0}")]
    Capture(#[from] CaptureError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Binary window label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

impl Label {
    pub fn as_bit(self) -> u8 {
        match self {
            Label::Benign => 0,
            Label::Malicious => 1,
        }
    }
}

/// One half-open window `[start, start + width)` of the capture.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowWindow {
    pub index: usize,
    pub start_us: u64,
    pub width_us: u64,
    pub packets: Vec<PacketRecord>,
}

/// A window plus its label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub window: FlowWindow,
    pub label: Label,
}

/// Partition a time-ordered capture into contiguous windows anchored at
/// the first packet timestamp. Interior windows may be empty; windows
/// past the last packet are not emitted.
pub fn split_windows(
    records: &[PacketRecord],
    width_us: u64,
) -> Result<Vec<FlowWindow>, LabelError> {
    if width_us == 0 {
        return Err(LabelError::ZeroWidth);
    }
    if records.is_empty() {
        return Err(LabelError::EmptyCapture);
    }
    if let Some(i) = records.windows(2).position(|w| w[0].ts_us > w[1].ts_us) {
        return Err(LabelError::NotTimeOrdered(i + 1));
    }
    let origin = records[0].ts_us;
    let last = records[records.len() - 1].ts_us;
    let count = ((last - origin) / width_us + 1) as usize;
    let mut windows: Vec<FlowWindow> = (0..count)
        .map(|index| FlowWindow {
            index,
            start_us: origin + index as u64 * width_us,
            width_us,
            packets: Vec::new(),
        })
        .collect();
    for rec in records {
        let idx = ((rec.ts_us - origin) / width_us) as usize;
        windows[idx].packets.push(rec.clone());
    }
    Ok(windows)
}

/// Count the window's packets whose source is a malicious address.
pub fn malicious_packet_count(window: &FlowWindow, malicious_ips: &HashSet<Ipv4Addr>) -> usize {
    window.packets.iter().filter(|p| malicious_ips.contains(&p.src_ip)).count()
}

/// Label one window: malicious iff the attacker-sourced packet count is
/// strictly greater than the threshold.
pub fn label_window(
    window: &FlowWindow,
    malicious_ips: &HashSet<Ipv4Addr>,
    threshold: i64,
) -> Label {
    if malicious_packet_count(window, malicious_ips) as i64 > threshold {
        Label::Malicious
    } else {
        Label::Benign
    }
}

/// Split and label a whole capture.
pub fn label_dataset(
    records: &[PacketRecord],
    malicious_ips: &HashSet<Ipv4Addr>,
    width_us: u64,
    threshold: i64,
) -> Result<Vec<LabeledWindow>, LabelError> {
    Ok(split_windows(records, width_us)?
        .into_iter()
        .map(|window| {
            let label = label_window(&window, malicious_ips, threshold);
            LabeledWindow { window, label }
        })
        .collect())
}

/// A window whose count-rule label disagrees with the attack-interval
/// overlap rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub window_index: usize,
    pub start_us: u64,
    pub count_label: Label,
    pub overlap_label: Label,
    pub malicious_packets: usize,
}

/// Cross-check report; empty means both labeling routes agree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CrosscheckReport {
    pub disagreements: Vec<Disagreement>,
}

impl CrosscheckReport {
    pub fn is_empty(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Compare count-rule labels against overlap-with-burst labels: a
/// window overlaps an event when `[start, start+width)` intersects the
/// inclusive `[event.start_us, event.end_us]` interval.
pub fn crosscheck_labels(
    labeled: &[LabeledWindow],
    log: &AttackLogFile,
    malicious_ips: &HashSet<Ipv4Addr>,
) -> CrosscheckReport {
    let mut disagreements = Vec::new();
    for lw in labeled {
        let w = &lw.window;
        let overlap = log.events.iter().any(|e| {
            e.start_us < w.start_us + w.width_us && e.end_us >= w.start_us
        });
        let overlap_label = if overlap { Label::Malicious } else { Label::Benign };
        if overlap_label != lw.label {
            disagreements.push(Disagreement {
                window_index: w.index,
                start_us: w.start_us,
                count_label: lw.label,
                overlap_label,
                malicious_packets: malicious_packet_count(w, malicious_ips),
            });
        }
    }
    CrosscheckReport { disagreements }
}

#[derive(Serialize)]
struct NdjsonRow {
    window_index: usize,
    start_us: u64,
    label: Label,
    packet_count: usize,
}

/// Export labeled windows as NDJSON:
/// `{"window_index":0,"start_us":0,"label":"benign","packet_count":12}`.
pub fn write_labeled_ndjson(labeled: &[LabeledWindow], path: &Path) -> Result<(), LabelError> {
    let mut w = BufWriter::new(File::create(path)?);
    for lw in labeled {
        let row = NdjsonRow {
            window_index: lw.window.index,
            start_us: lw.window.start_us,
            label: lw.label,
            packet_count: lw.window.packets.len(),
        };
        serde_json::to_writer(&mut w, &row).map_err(CaptureError::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
