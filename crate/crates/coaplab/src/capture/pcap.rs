//! Classic pcap serialization (magic 0xa1b2c3d4, version 2.4, Ethernet
//! linktype, little-endian headers, microsecond timestamps).

use std::fs;
use std::path::Path;

use super::frame::{parse_frame, serialize_frame, PacketRecord};
use super::CaptureError;

const MAGIC: u32 = 0xa1b2_c3d4;
const VERSION_MAJOR: u16 = 2;
const VERSION_MINOR: u16 = 4;
const SNAPLEN: u32 = 65_535;
const LINKTYPE_ETHERNET: u32 = 1;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;

/// Serialize records into an in-memory pcap image.
pub fn pcap_bytes(records: &[PacketRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(GLOBAL_HEADER_LEN + records.len() * 64);
    out.extend_from_slice(&MAGIC.to_le_bytes());
    out.extend_from_slice(&VERSION_MAJOR.to_le_bytes());
    out.extend_from_slice(&VERSION_MINOR.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes()); // thiszone
    out.extend_from_slice(&0u32.to_le_bytes()); // sigfigs
    out.extend_from_slice(&SNAPLEN.to_le_bytes());
    out.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());
    for rec in records {
        let frame = serialize_frame(rec);
        let ts_sec = (rec.ts_us / 1_000_000) as u32;
        let ts_usec = (rec.ts_us % 1_000_000) as u32;
        out.extend_from_slice(&ts_sec.to_le_bytes());
        out.extend_from_slice(&ts_usec.to_le_bytes());
        out.extend_from_slice(&(frame.len() as u32).to_le_bytes());
        out.extend_from_slice(&(frame.len() as u32).to_le_bytes());
        out.extend_from_slice(&frame);
    }
    out
}

/// Write records to a pcap file.
pub fn write_pcap(records: &[PacketRecord], path: &Path) -> Result<(), CaptureError> {
    fs::write(path, pcap_bytes(records))?;
    Ok(())
}

/// Parse an in-memory pcap image. Exact inverse of [`pcap_bytes`].
pub fn read_pcap_bytes(bytes: &[u8]) -> Result<Vec<PacketRecord>, CaptureError> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(CaptureError::TruncatedRecord(bytes.len()));
    }
    let magic = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if magic != MAGIC {
        return Err(CaptureError::BadMagic(magic));
    }
    let major = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    let minor = u16::from_le_bytes(bytes[6..8].try_into().unwrap());
    if (major, minor) != (VERSION_MAJOR, VERSION_MINOR) {
        return Err(CaptureError::UnsupportedVersion(major, minor));
    }
    let linktype = u32::from_le_bytes(bytes[20..24].try_into().unwrap());
    if linktype != LINKTYPE_ETHERNET {
        return Err(CaptureError::UnsupportedLinktype(linktype));
    }

    let mut records = Vec::new();
    let mut pos = GLOBAL_HEADER_LEN;
    while pos < bytes.len() {
        if bytes.len() - pos < RECORD_HEADER_LEN {
            return Err(CaptureError::TruncatedRecord(pos));
        }
        let ts_sec = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
        let ts_usec = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap());
        let incl_len = u32::from_le_bytes(bytes[pos + 8..pos + 12].try_into().unwrap()) as usize;
        let orig_len = u32::from_le_bytes(bytes[pos + 12..pos + 16].try_into().unwrap()) as usize;
        pos += RECORD_HEADER_LEN;
        if incl_len != orig_len {
            return Err(CaptureError::BadLength(format!(
                "snapped record ({incl_len} of {orig_len} bytes) unsupported"
            )));
        }
        let frame = bytes
            .get(pos..pos + incl_len)
            .ok_or(CaptureError::TruncatedRecord(pos))?;
        pos += incl_len;
        let ts_us = u64::from(ts_sec) * 1_000_000 + u64::from(ts_usec);
        records.push(parse_frame(ts_us, frame)?);
    }
    Ok(records)
}

/// Read a pcap file written by [`write_pcap`].
pub fn read_pcap(path: &Path) -> Result<Vec<PacketRecord>, CaptureError> {
    read_pcap_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coap::{make_request, Method};
    use crate::scenario::ScenarioConfig;

    fn sample_records(n: usize) -> Vec<PacketRecord> {
        let cfg = ScenarioConfig::default();
        let src = &cfg.endpoints[1];
        let dst = &cfg.endpoints[0];
        (0..n)
            .map(|i| {
                let msg = make_request(Method::Put, vec![b'p'; 20 + i], i as u16).unwrap();
                super::super::frame_packet(&msg, src, dst, i as u64 * 500_000).unwrap()
            })
            .collect()
    }

    #[test]
    fn empty_capture_is_just_the_global_header() {
        assert_eq!(pcap_bytes(&[]).len(), 24);
    }

    #[test]
    fn write_read_round_trip() {
        let records = sample_records(5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pcap");
        write_pcap(&records, &path).unwrap();
        assert_eq!(read_pcap(&path).unwrap(), records);
    }

    #[test]
    fn reserialization_is_byte_identical() {
        let records = sample_records(4);
        let first = pcap_bytes(&records);
        let second = pcap_bytes(&read_pcap_bytes(&first).unwrap());
        assert_eq!(first, second);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = pcap_bytes(&sample_records(1));
        bytes[0] ^= 0xFF;
        assert!(matches!(read_pcap_bytes(&bytes), Err(CaptureError::BadMagic(_))));
    }

    #[test]
    fn truncated_record_is_rejected() {
        let bytes = pcap_bytes(&sample_records(1));
        assert!(matches!(
            read_pcap_bytes(&bytes[..bytes.len() - 3]),
            Err(CaptureError::TruncatedRecord(_))
        ));
    }

    #[test]
    fn foreign_linktype_is_rejected() {
        let mut bytes = pcap_bytes(&[]);
        bytes[20] = 101; // raw IP
        assert!(matches!(
            read_pcap_bytes(&bytes),
            Err(CaptureError::UnsupportedLinktype(101))
        ));
    }
}
