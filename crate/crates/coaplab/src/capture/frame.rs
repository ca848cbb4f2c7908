//! One captured frame: Ethernet II / IPv4 / UDP around a CoAP payload,
//! with both checksums computed by the standard ones'-complement rules.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CaptureError;
use crate::coap::{encode_message, CoapMessage};
use crate::scenario::EndpointConfig;

/// Largest UDP payload that fits one IPv4 datagram (65535 - 20 - 8).
pub const MAX_UDP_PAYLOAD: usize = 65_507;

const ETHERTYPE_IPV4: u16 = 0x0800;
const IP_PROTO_UDP: u8 = 17;
const ETH_HEADER_LEN: usize = 14;
const IP_HEADER_LEN: usize = 20;
const UDP_HEADER_LEN: usize = 8;

/// A single captured frame, decomposed into the header fields the
/// feature schema draws from plus the raw UDP payload (CoAP bytes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    /// Capture timestamp, microseconds since the virtual epoch.
    pub ts_us: u64,
    pub eth_src: [u8; 6],
    pub eth_dst: [u8; 6],
    pub eth_type: u16,
    pub ip_version: u8,
    pub ip_tos: u8,
    /// IP total length: 20 + 8 + payload length (no IP options).
    pub ip_len: u16,
    pub ip_id: u16,
    /// 3-bit flags field value (2 = don't-fragment).
    pub ip_flags: u8,
    pub ip_ttl: u8,
    pub ip_proto: u8,
    pub ip_chksum: u16,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    /// UDP length: 8 + payload length.
    pub udp_len: u16,
    pub udp_chksum: u16,
    pub payload: Vec<u8>,
}

/// Ones'-complement sum of 16-bit big-endian words, folded to 16 bits.
/// An odd trailing byte is padded with zero on the right.
fn ones_complement_sum(data: &[u8]) -> u16 {
    let mut sum: u32 = 0;
    let mut chunks = data.chunks_exact(2);
    for c in &mut chunks {
        sum += u32::from(u16::from_be_bytes([c[0], c[1]]));
    }
    if let [last] = chunks.remainder() {
        sum += u32::from(*last) << 8;
    }
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    sum as u16
}

/// RFC 1071 internet checksum: complement of the ones'-complement sum.
pub fn internet_checksum(data: &[u8]) -> u16 {
    !ones_complement_sum(data)
}

/// UDP checksum over the IPv4 pseudo-header, UDP header, and payload.
/// A computed value of zero is transmitted as 0xFFFF.
pub fn udp_checksum(
    src_ip: Ipv4Addr,
    dst_ip: Ipv4Addr,
    src_port: u16,
    dst_port: u16,
    payload: &[u8],
) -> u16 {
    let udp_len = (UDP_HEADER_LEN + payload.len()) as u16;
    let mut buf = Vec::with_capacity(12 + UDP_HEADER_LEN + payload.len());
    buf.extend_from_slice(&src_ip.octets());
    buf.extend_from_slice(&dst_ip.octets());
    buf.push(0);
    buf.push(IP_PROTO_UDP);
    buf.extend_from_slice(&udp_len.to_be_bytes());
    buf.extend_from_slice(&src_port.to_be_bytes());
    buf.extend_from_slice(&dst_port.to_be_bytes());
    buf.extend_from_slice(&udp_len.to_be_bytes());
    buf.extend_from_slice(&[0, 0]); // checksum field zeroed
    buf.extend_from_slice(payload);
    match internet_checksum(&buf) {
        0 => 0xFFFF,
        sum => sum,
    }
}

fn ipv4_header_bytes(rec: &PacketRecord, chksum: u16) -> [u8; IP_HEADER_LEN] {
    let mut hdr = [0u8; IP_HEADER_LEN];
    hdr[0] = (rec.ip_version << 4) | 5; // IHL fixed at 5 words
    hdr[1] = rec.ip_tos;
    hdr[2..4].copy_from_slice(&rec.ip_len.to_be_bytes());
    hdr[4..6].copy_from_slice(&rec.ip_id.to_be_bytes());
    let flags_frag = u16::from(rec.ip_flags) << 13;
    hdr[6..8].copy_from_slice(&flags_frag.to_be_bytes());
    hdr[8] = rec.ip_ttl;
    hdr[9] = rec.ip_proto;
    hdr[10..12].copy_from_slice(&chksum.to_be_bytes());
    hdr[12..16].copy_from_slice(&rec.src_ip.octets());
    hdr[16..20].copy_from_slice(&rec.dst_ip.octets());
    hdr
}

/// Encapsulate a CoAP message into a fully framed packet record with
/// consistent lengths and valid checksums.
///
/// The IP identification field is derived from the timestamp so that it
/// varies across a run while staying a pure function of the inputs.
pub fn frame_packet(
    msg: &CoapMessage,
    src: &EndpointConfig,
    dst: &EndpointConfig,
    ts_us: u64,
) -> Result<PacketRecord, CaptureError> {
    let payload = encode_message(msg)?;
    if payload.len() > MAX_UDP_PAYLOAD {
        return Err(CaptureError::OversizePayload(payload.len()));
    }
    let udp_len = (UDP_HEADER_LEN + payload.len()) as u16;
    let ip_len = (IP_HEADER_LEN as u16) + udp_len;
    let mut rec = PacketRecord {
        ts_us,
        eth_src: src.mac,
        eth_dst: dst.mac,
        eth_type: ETHERTYPE_IPV4,
        ip_version: 4,
        ip_tos: 0,
        ip_len,
        ip_id: (ts_us & 0xFFFF) as u16,
        ip_flags: 2, // don't fragment
        ip_ttl: 64,
        ip_proto: IP_PROTO_UDP,
        ip_chksum: 0,
        src_ip: src.ip,
        dst_ip: dst.ip,
        src_port: src.port,
        dst_port: dst.port,
        udp_len,
        udp_chksum: udp_checksum(src.ip, dst.ip, src.port, dst.port, &payload),
        payload,
    };
    rec.ip_chksum = internet_checksum(&ipv4_header_bytes(&rec, 0));
    Ok(rec)
}

/// Check both checksums against the record's current contents.
pub fn verify_checksums(rec: &PacketRecord) -> bool {
    // A header including its own checksum sums to 0xFFFF.
    let header_ok = ones_complement_sum(&ipv4_header_bytes(rec, rec.ip_chksum)) == 0xFFFF;
    let udp_ok = rec.udp_chksum
        == udp_checksum(rec.src_ip, rec.dst_ip, rec.src_port, rec.dst_port, &rec.payload);
    header_ok && udp_ok
}

/// Serialize the record into raw Ethernet frame bytes.
pub fn serialize_frame(rec: &PacketRecord) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(ETH_HEADER_LEN + IP_HEADER_LEN + UDP_HEADER_LEN + rec.payload.len());
    out.extend_from_slice(&rec.eth_dst);
    out.extend_from_slice(&rec.eth_src);
    out.extend_from_slice(&rec.eth_type.to_be_bytes());
    out.extend_from_slice(&ipv4_header_bytes(rec, rec.ip_chksum));
    out.extend_from_slice(&rec.src_port.to_be_bytes());
    out.extend_from_slice(&rec.dst_port.to_be_bytes());
    out.extend_from_slice(&rec.udp_len.to_be_bytes());
    out.extend_from_slice(&rec.udp_chksum.to_be_bytes());
    out.extend_from_slice(&rec.payload);
    out
}

/// Parse raw Ethernet frame bytes back into a record. Exact inverse of
/// [`serialize_frame`] for the frames this crate produces.
pub fn parse_frame(ts_us: u64, bytes: &[u8]) -> Result<PacketRecord, CaptureError> {
    let min = ETH_HEADER_LEN + IP_HEADER_LEN + UDP_HEADER_LEN;
    if bytes.len() < min {
        return Err(CaptureError::FrameTruncated { needed: min, have: bytes.len() });
    }
    let eth_dst: [u8; 6] = bytes[0..6].try_into().unwrap();
    let eth_src: [u8; 6] = bytes[6..12].try_into().unwrap();
    let eth_type = u16::from_be_bytes([bytes[12], bytes[13]]);
    if eth_type != ETHERTYPE_IPV4 {
        return Err(CaptureError::UnsupportedEthertype(eth_type));
    }

    let ip = &bytes[ETH_HEADER_LEN..];
    let ip_version = ip[0] >> 4;
    let ihl = ip[0] & 0x0F;
    if ip_version != 4 {
        return Err(CaptureError::BadIpHeader(format!("version {ip_version}")));
    }
    if ihl != 5 {
        return Err(CaptureError::BadIpHeader(format!("IHL {ihl}, options unsupported")));
    }
    let ip_tos = ip[1];
    let ip_len = u16::from_be_bytes([ip[2], ip[3]]);
    let ip_id = u16::from_be_bytes([ip[4], ip[5]]);
    let flags_frag = u16::from_be_bytes([ip[6], ip[7]]);
    let ip_flags = (flags_frag >> 13) as u8;
    if flags_frag & 0x1FFF != 0 {
        return Err(CaptureError::BadIpHeader("fragmented packet".into()));
    }
    let ip_ttl = ip[8];
    let ip_proto = ip[9];
    if ip_proto != IP_PROTO_UDP {
        return Err(CaptureError::UnsupportedProtocol(ip_proto));
    }
    let ip_chksum = u16::from_be_bytes([ip[10], ip[11]]);
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);

    if usize::from(ip_len) != bytes.len() - ETH_HEADER_LEN {
        return Err(CaptureError::BadLength(format!(
            "IP total length {} vs {} bytes after Ethernet header",
            ip_len,
            bytes.len() - ETH_HEADER_LEN
        )));
    }

    let udp = &ip[IP_HEADER_LEN..];
    let src_port = u16::from_be_bytes([udp[0], udp[1]]);
    let dst_port = u16::from_be_bytes([udp[2], udp[3]]);
    let udp_len = u16::from_be_bytes([udp[4], udp[5]]);
    let udp_chksum = u16::from_be_bytes([udp[6], udp[7]]);
    if usize::from(udp_len) != udp.len() {
        return Err(CaptureError::BadLength(format!(
            "UDP length {} vs {} bytes after IP header",
            udp_len,
            udp.len()
        )));
    }
    let payload = udp[UDP_HEADER_LEN..].to_vec();

    Ok(PacketRecord {
        ts_us,
        eth_src,
        eth_dst,
        eth_type,
        ip_version,
        ip_tos,
        ip_len,
        ip_id,
        ip_flags,
        ip_ttl,
        ip_proto,
        ip_chksum,
        src_ip,
        dst_ip,
        src_port,
        dst_port,
        udp_len,
        udp_chksum,
        payload,
    })
}

/// Debug export: one JSON object per line.
pub fn write_ndjson(records: &[PacketRecord], path: &Path) -> Result<(), CaptureError> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_ndjson`].
pub fn read_ndjson(path: &Path) -> Result<Vec<PacketRecord>, CaptureError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coap::{make_request, Method};
    use crate::scenario::{EndpointConfig, Role};
    use proptest::prelude::*;

    fn endpoints() -> (EndpointConfig, EndpointConfig) {
        let src = EndpointConfig {
            role: Role::Benign,
            ip: Ipv4Addr::new(192, 168, 1, 2),
            port: 49152,
            mac: [2, 0, 0, 0, 0, 2],
        };
        let dst = EndpointConfig {
            role: Role::Server,
            ip: Ipv4Addr::new(192, 168, 1, 9),
            port: 8080,
            mac: [2, 0, 0, 0, 0, 1],
        };
        (src, dst)
    }

    #[test]
    fn oversized_attack_payload_lengths_are_consistent() {
        let (src, dst) = endpoints();
        let msg = make_request(Method::Put, vec![b'a'; 9203], 7).unwrap();
        let rec = frame_packet(&msg, &src, &dst, 123).unwrap();
        // CoAP framing adds a 4-byte header and the 1-byte payload marker.
        assert_eq!(rec.ip_len, 20 + 8 + (4 + 1 + 9203));
        assert_eq!(rec.udp_len, 8 + 4 + 1 + 9203);
        assert!(verify_checksums(&rec));
    }

    #[test]
    fn payload_beyond_datagram_limit_is_rejected() {
        let (src, dst) = endpoints();
        let msg = make_request(Method::Put, vec![0; MAX_UDP_PAYLOAD], 0).unwrap();
        assert!(matches!(
            frame_packet(&msg, &src, &dst, 0),
            Err(CaptureError::OversizePayload(_))
        ));
    }

    #[test]
    fn header_checksum_matches_known_vector() {
        // Classic worked example: the header below checksums to 0xB1E6.
        let header: [u8; 20] = [
            0x45, 0x00, 0x00, 0x3c, 0x1c, 0x46, 0x40, 0x00, 0x40, 0x06, 0x00, 0x00, 0xac, 0x10,
            0x0a, 0x63, 0xac, 0x10, 0x0a, 0x0c,
        ];
        assert_eq!(internet_checksum(&header), 0xB1E6);
    }

    #[test]
    fn checksum_of_zero_header_matches_independent_fold() {
        // Independent oracle: sum the words with carries in i64, fold once.
        let (src, dst) = endpoints();
        let msg = make_request(Method::Get, Vec::new(), 1).unwrap();
        let rec = frame_packet(&msg, &src, &dst, 0).unwrap();
        let hdr = ipv4_header_bytes(&rec, 0);
        let mut total: i64 = 0;
        for pair in hdr.chunks(2) {
            total += i64::from(u16::from_be_bytes([pair[0], pair[1]]));
        }
        let folded = ((total & 0xFFFF) + (total >> 16)) as u16;
        assert_eq!(rec.ip_chksum, !folded);
    }

    #[test]
    fn frame_then_parse_is_identity() {
        let (src, dst) = endpoints();
        let msg = make_request(Method::Post, b"hello".to_vec(), 42).unwrap();
        let rec = frame_packet(&msg, &src, &dst, 555).unwrap();
        let parsed = parse_frame(rec.ts_us, &serialize_frame(&rec)).unwrap();
        assert_eq!(parsed, rec);
    }

    #[test]
    fn ndjson_round_trips() {
        let (src, dst) = endpoints();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("packets.ndjson");
        let recs: Vec<PacketRecord> = (0..3)
            .map(|i| {
                let msg = make_request(Method::Put, vec![b'x'; 10 + i], i as u16).unwrap();
                frame_packet(&msg, &src, &dst, i as u64 * 1000).unwrap()
            })
            .collect();
        write_ndjson(&recs, &path).unwrap();
        assert_eq!(read_ndjson(&path).unwrap(), recs);
    }

    proptest! {
        #[test]
        fn flipping_any_payload_byte_breaks_udp_checksum(
            len in 1usize..64,
            flip_at in any::<prop::sample::Index>(),
            flip_bit in 0u8..8,
        ) {
            let (src, dst) = endpoints();
            let msg = make_request(Method::Put, vec![b'q'; len], 9).unwrap();
            let mut rec = frame_packet(&msg, &src, &dst, 77).unwrap();
            prop_assert!(verify_checksums(&rec));
            let idx = flip_at.index(rec.payload.len());
            rec.payload[idx] ^= 1 << flip_bit;
            prop_assert!(!verify_checksums(&rec));
        }
    }
}
