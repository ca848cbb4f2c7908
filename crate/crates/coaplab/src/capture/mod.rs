//! Capture persistence: Ethernet/IPv4/UDP framing with valid checksums,
//! classic pcap files, the JSON attack log, NDJSON packet export, and
//! capture-level statistics.

mod attack_log;
mod frame;
mod pcap;
mod stats;

pub use attack_log::{
    read_attack_log, write_attack_log, AttackLogFile, ATTACK_LOG_SCHEMA_VERSION,
};
pub use frame::{
    frame_packet, internet_checksum, parse_frame, serialize_frame, udp_checksum,
    verify_checksums, write_ndjson, read_ndjson, PacketRecord, MAX_UDP_PAYLOAD,
};
pub use pcap::{pcap_bytes, read_pcap, read_pcap_bytes, write_pcap};
pub use stats::{dataset_stats, DatasetStats};

use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("payload of {0} bytes does not fit a UDP datagram")]
    OversizePayload(usize),
    #[error("frame truncated: need {needed} bytes, have {have}")]
    FrameTruncated { needed: usize, have: usize },
    #[error("unsupported ethertype 0x{0:04x}")]
    UnsupportedEthertype(u16),
    #[error("unsupported IP header: {0}")]
    BadIpHeader(String),
    #[error("unsupported transport protocol {0}")]
    UnsupportedProtocol(u8),
    #[error("inconsistent length field: {0}")]
    BadLength(String),
    #[error("bad pcap magic 0x{0:08x}")]
    BadMagic(u32),
    #[error("unsupported pcap version {0}.{1}")]
    UnsupportedVersion(u16, u16),
    #[error("unsupported pcap linktype {0}")]
    UnsupportedLinktype(u32),
    #[error("pcap record truncated at byte {0}")]
    TruncatedRecord(usize),
    #[error("unknown attack log schema version {0}")]
    UnknownSchemaVersion(u32),
    #[error("attack log events not sorted by start time")]
    UnsortedEvents,
    #[error("statistics undefined for an empty capture")]
    EmptyCapture,
    #[error("coap: {0}")]
    Coap(#[from] crate::coap::CoapError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}
