//! The canonical 42-column per-packet feature schema and the projection
//! from packet records to raw feature rows.
//!
//! Layout: 3 Ethernet + 12 IPv4 + 10 TCP + 4 UDP + 13 CoAP-derived
//! columns. The capture is pure UDP, so the TCP columns are always
//! absent; they stay in the schema because the selected-feature set is
//! defined over the full table.

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::capture::PacketRecord;
use crate::coap::decode_message;

/// Fixed schema width.
pub const SCHEMA_WIDTH: usize = 42;

/// The default 16-column selection: the fifteen named header fields
/// (with the flags pair split across IP and TCP) plus the UDP
/// destination port.
pub const DEFAULT_SELECTED_COLUMNS: [&str; 16] = [
    "eth.type",
    "ip.version",
    "ip.tos",
    "ip.len",
    "ip.id",
    "ip.flags",
    "ip.chksum",
    "udp.sport",
    "tcp.seq",
    "tcp.ack",
    "tcp.dataofs",
    "tcp.flags",
    "tcp.window",
    "udp.chksum",
    "tcp.urgptr",
    "udp.dport",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: ColumnKind,
}

/// Ordered, named, kinded columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<FeatureColumn>,
}

impl FeatureSchema {
    /// The canonical 42-column schema.
    pub fn canonical() -> Self {
        use ColumnKind::{Categorical as C, Numeric as N};
        let cols: [(&str, ColumnKind); SCHEMA_WIDTH] = [
            ("eth.dst", C),
            ("eth.src", C),
            ("eth.type", N),
            ("ip.version", N),
            ("ip.ihl", N),
            ("ip.tos", N),
            ("ip.len", N),
            ("ip.id", N),
            ("ip.flags", C),
            ("ip.frag", N),
            ("ip.ttl", N),
            ("ip.proto", N),
            ("ip.chksum", N),
            ("ip.src", C),
            ("ip.dst", C),
            ("tcp.sport", N),
            ("tcp.dport", N),
            ("tcp.seq", N),
            ("tcp.ack", N),
            ("tcp.dataofs", N),
            ("tcp.reserved", N),
            ("tcp.flags", C),
            ("tcp.window", N),
            ("tcp.chksum", N),
            ("tcp.urgptr", N),
            ("udp.sport", N),
            ("udp.dport", N),
            ("udp.len", N),
            ("udp.chksum", N),
            ("coap.version", N),
            ("coap.type", C),
            ("coap.code", C),
            ("coap.mid", N),
            ("coap.token_len", N),
            ("coap.token", C),
            ("coap.opt_count", N),
            ("coap.uri_path", C),
            ("coap.payload_len", N),
            ("coap.has_payload", N),
            ("coap.class", N),
            ("coap.detail", N),
            ("coap.is_request", N),
        ];
        FeatureSchema {
            columns: cols
                .into_iter()
                .map(|(name, kind)| FeatureColumn { name: name.to_string(), kind })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn kinds(&self) -> Vec<ColumnKind> {
        self.columns.iter().map(|c| c.kind).collect()
    }

    /// Schema restricted to the masked columns, order preserved.
    pub fn project(&self, mask: &FeatureMask) -> Result<FeatureSchema, FeatureError> {
        if mask.width() != self.len() {
            return Err(FeatureError::MaskWidthMismatch { mask: mask.width(), row: self.len() });
        }
        Ok(FeatureSchema {
            columns: mask.indices().map(|i| self.columns[i].clone()).collect(),
        })
    }
}

/// One observed cell: a string, a number, or nothing (absent layer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Categorical(String),
    Numeric(f64),
    Absent,
}

/// One packet projected onto a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFeatureRow {
    pub cells: Vec<Cell>,
}

/// A column subset as a bitmask over up to 64 columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureMask {
    width: usize,
    bits: u64,
}

impl FeatureMask {
    pub fn new(width: usize, bits: u64) -> Self {
        assert!(width <= 64, "mask supports at most 64 columns");
        Self { width, bits: bits & Self::full_bits(width) }
    }

    pub fn empty(width: usize) -> Self {
        Self::new(width, 0)
    }

    pub fn all(width: usize) -> Self {
        Self::new(width, Self::full_bits(width))
    }

    fn full_bits(width: usize) -> u64 {
        if width == 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        }
    }

    pub fn from_indices(width: usize, indices: &[usize]) -> Self {
        let mut bits = 0u64;
        for &i in indices {
            assert!(i < width);
            bits |= 1 << i;
        }
        Self { width, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn popcount(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.width && self.bits & (1 << index) != 0
    }

    pub fn set(&mut self, index: usize, on: bool) {
        assert!(index < self.width);
        if on {
            self.bits |= 1 << index;
        } else {
            self.bits &= !(1 << index);
        }
    }

    /// Selected column indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(move |i| self.contains(*i))
    }}

/// The default 16-feature mask over the canonical schema.
pub fn default_selected_mask(schema: &FeatureSchema) -> FeatureMask {
    let indices: Vec<usize> = DEFAULT_SELECTED_COLUMNS
        .iter()
        .map(|name| schema.index_of(name).expect("canonical schema has all default columns"))
        .collect();
    FeatureMask::from_indices(schema.len(), &indices)
}

fn mac_string(mac: &[u8; 6]) -> String {
    mac.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(":")
}

fn ip_flags_string(flags: u8) -> String {
    match flags & 0b011 {
        0b010 => "DF".to_string(),
        0b001 => "MF".to_string(),
        0b011 => "DF+MF".to_string(),
        _ => String::new(),
    }
}

/// Map a packet onto the schema. Fields of layers the packet does not
/// carry (all TCP columns on this UDP traffic, CoAP columns when the
/// payload does not decode) come out as [`Cell::Absent`].
pub fn extract_features(packet: &PacketRecord, schema: &FeatureSchema) -> RawFeatureRow {
    let coap = decode_message(&packet.payload).ok();
    let cells = schema
        .columns
        .iter()
        .map(|col| match col.name.as_str() {
            "eth.dst" => Cell::Categorical(mac_string(&packet.eth_dst)),
            "eth.src" => Cell::Categorical(mac_string(&packet.eth_src)),
            "eth.type" => Cell::Numeric(f64::from(packet.eth_type)),
            "ip.version" => Cell::Numeric(f64::from(packet.ip_version)),
            "ip.ihl" => Cell::Numeric(5.0),
            "ip.tos" => Cell::Numeric(f64::from(packet.ip_tos)),
            "ip.len" => Cell::Numeric(f64::from(packet.ip_len)),
            "ip.id" => Cell::Numeric(f64::from(packet.ip_id)),
            "ip.flags" => Cell::Categorical(ip_flags_string(packet.ip_flags)),
            "ip.frag" => Cell::Numeric(0.0),
            "ip.ttl" => Cell::Numeric(f64::from(packet.ip_ttl)),
            "ip.proto" => Cell::Numeric(f64::from(packet.ip_proto)),
            "ip.chksum" => Cell::Numeric(f64::from(packet.ip_chksum)),
            "ip.src" => Cell::Categorical(packet.src_ip.to_string()),
            "ip.dst" => Cell::Categorical(packet.dst_ip.to_string()),
            name if name.starts_with("tcp.") => Cell::Absent,
            "udp.sport" => Cell::Numeric(f64::from(packet.src_port)),
            "udp.dport" => Cell::Numeric(f64::from(packet.dst_port)),
            "udp.len" => Cell::Numeric(f64::from(packet.udp_len)),
            "udp.chksum" => Cell::Numeric(f64::from(packet.udp_chksum)),
            "coap.version" => match &coap {
                Some(m) => Cell::Numeric(f64::from(m.version)),
                None => Cell::Absent,
            },
            "coap.type" => match &coap {
                Some(m) => Cell::Categorical(m.msg_type.name().to_string()),
                None => Cell::Absent,
            },
            "coap.code" => match &coap {
                Some(m) => Cell::Categorical(m.code.name().to_string()),
                None => Cell::Absent,
            },
            "coap.mid" => match &coap {
                Some(m) => Cell::Numeric(f64::from(m.message_id)),
                None => Cell::Absent,
            },
            "coap.token_len" => match &coap {
                Some(m) => Cell::Numeric(m.token.len() as f64),
                None => Cell::Absent,
            },
            "coap.token" => match &coap {
                Some(m) if !m.token.is_empty() => Cell::Categorical(
                    m.token.iter().map(|b| format!("{b:02x}")).collect::<String>(),
                ),
                _ => Cell::Absent,
            },
            "coap.opt_count" => match &coap {
                Some(m) => Cell::Numeric(m.options.len() as f64),
                None => Cell::Absent,
            },
            "coap.uri_path" => match coap.as_ref().and_then(|m| m.uri_path()) {
                Some(path) => Cell::Categorical(path),
                None => Cell::Absent,
            },
            "coap.payload_len" => match &coap {
                Some(m) => Cell::Numeric(m.payload.len() as f64),
                None => Cell::Absent,
            },
            "coap.has_payload" => match &coap {
                Some(m) => Cell::Numeric(f64::from(!m.payload.is_empty())),
                None => Cell::Absent,
            },
            "coap.class" => match &coap {
                Some(m) => Cell::Numeric(f64::from(m.code.class())),
                None => Cell::Absent,
            },
            "coap.detail" => match &coap {
                Some(m) => Cell::Numeric(f64::from(m.code.detail())),
                None => Cell::Absent,
            },
            "coap.is_request" => match &coap {
                Some(m) => Cell::Numeric(f64::from(m.code.is_request())),
                None => Cell::Absent,
            },
            _ => Cell::Absent,
        })
        .collect();
    RawFeatureRow { cells }
}

/// Keep only the masked cells, order preserved.
pub fn project_selected(
    row: &RawFeatureRow,
    mask: &FeatureMask,
) -> Result<RawFeatureRow, FeatureError> {
    if mask.width() != row.cells.len() {
        return Err(FeatureError::MaskWidthMismatch { mask: mask.width(), row: row.cells.len() });
    }
    Ok(RawFeatureRow {
        cells: mask.indices().map(|i| row.cells[i].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::frame_packet;
    use crate::coap::{make_request, Method};
    use crate::scenario::ScenarioConfig;
    use proptest::prelude::*;

    fn sample_packet() -> PacketRecord {
        let cfg = ScenarioConfig::default();
        let msg = make_request(Method::Put, b"payload".to_vec(), 77).unwrap();
        frame_packet(&msg, &cfg.endpoints[1], &cfg.endpoints[0], 123_456).unwrap()
    }

    #[test]
    fn canonical_schema_shape() {
        let schema = FeatureSchema::canonical();
        assert_eq!(schema.len(), SCHEMA_WIDTH);
        let mut names = schema.names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), SCHEMA_WIDTH, "column names must be unique");
        // Layer counts: 3 Ethernet, 12 IPv4, 10 TCP, 4 UDP, 13 CoAP.
        let count = |prefix: &str| {
            schema.columns.iter().filter(|c| c.name.starts_with(prefix)).count()
        };
        assert_eq!(count("eth."), 3);
        assert_eq!(count("ip."), 12);
        assert_eq!(count("tcp."), 10);
        assert_eq!(count("udp."), 4);
        assert_eq!(count("coap."), 13);
    }

    #[test]
    fn default_mask_selects_sixteen_known_columns() {
        let schema = FeatureSchema::canonical();
        let mask = default_selected_mask(&schema);
        assert_eq!(mask.popcount(), 16);
        let projected = schema.project(&mask).unwrap();
        let names = projected.names();
        for required in DEFAULT_SELECTED_COLUMNS {
            assert!(names.iter().any(|n| n == required), "missing {required}");
        }
        assert!(names.iter().any(|n| n == "ip.chksum"));
        assert!(names.iter().any(|n| n == "udp.chksum"));
    }

    #[test]
    fn udp_packet_has_absent_tcp_cells() {
        let schema = FeatureSchema::canonical();
        let row = extract_features(&sample_packet(), &schema);
        for name in ["tcp.seq", "tcp.ack", "tcp.dataofs", "tcp.window", "tcp.urgptr"] {
            let idx = schema.index_of(name).unwrap();
            assert_eq!(row.cells[idx], Cell::Absent, "{name} must be absent");
        }
    }

    #[test]
    fn ethertype_is_copied_through() {
        let schema = FeatureSchema::canonical();
        let row = extract_features(&sample_packet(), &schema);
        let idx = schema.index_of("eth.type").unwrap();
        assert_eq!(row.cells[idx], Cell::Numeric(f64::from(0x0800u16)));
    }

    #[test]
    fn extraction_is_deterministic() {
        let schema = FeatureSchema::canonical();
        let p = sample_packet();
        assert_eq!(extract_features(&p, &schema), extract_features(&p, &schema));
    }

    #[test]
    fn all_ones_mask_is_identity() {
        let schema = FeatureSchema::canonical();
        let row = extract_features(&sample_packet(), &schema);
        let projected = project_selected(&row, &FeatureMask::all(SCHEMA_WIDTH)).unwrap();
        assert_eq!(projected, row);
    }

    #[test]
    fn mask_width_mismatch_is_rejected() {
        let row = RawFeatureRow { cells: vec![Cell::Numeric(1.0); 10] };
        assert!(matches!(
            project_selected(&row, &FeatureMask::all(SCHEMA_WIDTH)),
            Err(FeatureError::MaskWidthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn projection_matches_index_oracle(bits in any::<u64>()) {
            let schema = FeatureSchema::canonical();
            let mask = FeatureMask::new(SCHEMA_WIDTH, bits);
            let row = extract_features(&sample_packet(), &schema);
            let projected = project_selected(&row, &mask).unwrap();
            let expected: Vec<Cell> = (0..SCHEMA_WIDTH)
                .filter(|i| bits & (1 << i) != 0)
                .map(|i| row.cells[i].clone())
                .collect();
            prop_assert_eq!(projected.cells, expected);
        }
    }
}
