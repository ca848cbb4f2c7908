//! Capture-level statistics: how much of the traffic originated from
//! attacker addresses.

use std::collections::HashSet;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::frame::PacketRecord;
use super::CaptureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: u64,
    pub attack_requests: u64,
}

impl DatasetStats {
    /// Build from raw counts; a zero total leaves the fraction undefined.
    pub fn from_counts(total: u64, attack_requests: u64) -> Result<Self, CaptureError> {
        if total == 0 {
            return Err(CaptureError::EmptyCapture);
        }
        Ok(Self { total, attack_requests })
    }

    /// Fraction of packets whose source is an attacker address, in [0, 1].
    pub fn attack_fraction(&self) -> f64 {
        self.attack_requests as f64 / self.total as f64
    }
}

/// Count packets originating from the malicious source addresses.
pub fn dataset_stats(
    records: &[PacketRecord],
    malicious_ips: &HashSet<Ipv4Addr>,
) -> Result<DatasetStats, CaptureError> {
    let attack_requests = records
        .iter()
        .filter(|r| malicious_ips.contains(&r.src_ip))
        .count() as u64;
    DatasetStats::from_counts(records.len() as u64, attack_requests)
}
