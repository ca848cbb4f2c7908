//! Minimal CoAP codec: RFC 7252 fixed header, token, Uri-Path option,
//! and payload marker.
//!
//! The subset is just large enough to carry GET/PUT/POST request traffic
//! and piggybacked responses between emulated endpoints. Blockwise
//! transfer, Observe, retransmission state, and DTLS are out of scope;
//! an oversized payload rides in a single UDP datagram.
//!
//! Wire layout (RFC 7252 §3):
//!
//! ```text
//! 0         1         2        3
//! +---------+---------+--------+--------+
//! |Ver|T|TKL|  Code   |   Message ID    |
//! +---------+---------+--------+--------+
//! | Token (TKL bytes) ...
//! +--------------------------------------+
//! | Options ...
//! +------+-------------------------------+
//! | 0xFF | Payload (if non-empty) ...
//! +------+-------------------------------+
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Uri-Path option number (RFC 7252 §5.10), the only option supported.
pub const OPTION_URI_PATH: u16 = 11;

/// Maximum token length representable in the TKL field.
pub const MAX_TOKEN_LEN: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoapError {
    #[error("message truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("unsupported version {0}, expected 1")]
    BadVersion(u8),
    #[error("token length {0} exceeds {max} bytes", max = MAX_TOKEN_LEN)]
    TokenTooLong(usize),
    #[error("unknown code 0x{0:02x}")]
    UnknownCode(u8),
    #[error("unsupported option number {0}")]
    UnsupportedOption(u16),
    #[error("option numbers must be non-decreasing")]
    OptionOrder,
    #[error("option value length {0} exceeds 255 bytes")]
    OptionValueTooLong(usize),
    #[error("malformed option header at byte {0}")]
    MalformedOption(usize),
    #[error("payload marker not followed by payload")]
    EmptyPayloadAfterMarker,
    #[error("GET request must carry an empty payload")]
    PayloadOnGet,
}

/// Message type from the fixed-header T field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MsgType {
    Confirmable,
    NonConfirmable,
    Ack,
    Reset,
}

impl MsgType {
    fn bits(self) -> u8 {
        match self {
            MsgType::Confirmable => 0,
            MsgType::NonConfirmable => 1,
            MsgType::Ack => 2,
            MsgType::Reset => 3,
        }
    }

    fn from_bits(bits: u8) -> Self {
        match bits & 0x3 {
            0 => MsgType::Confirmable,
            1 => MsgType::NonConfirmable,
            2 => MsgType::Ack,
            _ => MsgType::Reset,
        }
    }

    /// Short wire name ("CON", "NON", "ACK", "RST").
    pub fn name(self) -> &'static str {
        match self {
            MsgType::Confirmable => "CON",
            MsgType::NonConfirmable => "NON",
            MsgType::Ack => "ACK",
            MsgType::Reset => "RST",
        }
    }
}

/// Request method carried by a client message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Get,
    Put,
    Post,
}

impl Method {
    pub fn code(self) -> Code {
        match self {
            Method::Get => Code::Get,
            Method::Put => Code::Put,
            Method::Post => Code::Post,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Put => "PUT",
            Method::Post => "POST",
        }
    }
}

/// The code registry subset used by the lab: three request methods and
/// their conventional success responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Code {
    Get,
    Post,
    Put,
    /// 2.05 Content, the response to GET.
    Content,
    /// 2.04 Changed, the response to PUT.
    Changed,
    /// 2.01 Created, the response to POST.
    Created,
}

impl Code {
    pub fn byte(self) -> u8 {
        match self {
            Code::Get => 0x01,
            Code::Post => 0x02,
            Code::Put => 0x03,
            Code::Created => 0x41,
            Code::Changed => 0x44,
            Code::Content => 0x45,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self, CoapError> {
        match b {
            0x01 => Ok(Code::Get),
            0x02 => Ok(Code::Post),
            0x03 => Ok(Code::Put),
            0x41 => Ok(Code::Created),
            0x44 => Ok(Code::Changed),
            0x45 => Ok(Code::Content),
            other => Err(CoapError::UnknownCode(other)),
        }
    }

    /// Code class (upper 3 bits): 0 for requests, 2 for success responses.
    pub fn class(self) -> u8 {
        self.byte() >> 5
    }

    /// Code detail (lower 5 bits).
    pub fn detail(self) -> u8 {
        self.byte() & 0x1f
    }

    pub fn is_request(self) -> bool {
        self.class() == 0
    }

    /// Dotted-decimal name, e.g. "GET" or "2.05".
    pub fn name(self) -> &'static str {
        match self {
            Code::Get => "GET",
            Code::Post => "POST",
            Code::Put => "PUT",
            Code::Created => "2.01",
            Code::Changed => "2.04",
            Code::Content => "2.05",
        }
    }
}

/// One decoded CoAP message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoapMessage {
    /// Protocol version, always 1.
    pub version: u8,
    pub msg_type: MsgType,
    pub code: Code,
    pub message_id: u16,
    /// 0..=8 bytes.
    pub token: Vec<u8>,
    /// (option number, value) pairs, numbers non-decreasing.
    pub options: Vec<(u16, Vec<u8>)>,
    pub payload: Vec<u8>,
}

impl CoapMessage {
    fn validate(&self) -> Result<(), CoapError> {
        if self.version != 1 {
            return Err(CoapError::BadVersion(self.version));
        }
        if self.token.len() > MAX_TOKEN_LEN {
            return Err(CoapError::TokenTooLong(self.token.len()));
        }
        if self.code == Code::Get && !self.payload.is_empty() {
            return Err(CoapError::PayloadOnGet);
        }
        let mut prev = 0u16;
        for (num, value) in &self.options {
            if *num < prev {
                return Err(CoapError::OptionOrder);
            }
            if *num != OPTION_URI_PATH {
                return Err(CoapError::UnsupportedOption(*num));
            }
            if value.len() > 255 {
                return Err(CoapError::OptionValueTooLong(value.len()));
            }
            prev = *num;
        }
        Ok(())
    }

    /// Uri-Path segments joined with '/', if any Uri-Path options are present.
    pub fn uri_path(&self) -> Option<String> {
        let segments: Vec<String> = self
            .options
            .iter()
            .filter(|(num, _)| *num == OPTION_URI_PATH)
            .map(|(_, v)| String::from_utf8_lossy(v).into_owned())
            .collect();
        if segments.is_empty() {
            None
        } else {
            Some(segments.join("/"))
        }
    }
}

/// Encode a message into its canonical binary form.
pub fn encode_message(msg: &CoapMessage) -> Result<Vec<u8>, CoapError> {
    msg.validate()?;
    let opts_len: usize = msg.options.iter().map(|(_, v)| encoded_option_len(v.len())).sum();
    let payload_len = if msg.payload.is_empty() { 0 } else { 1 + msg.payload.len() };
    let mut out = Vec::with_capacity(4 + msg.token.len() + opts_len + payload_len);

    out.push((msg.version << 6) | (msg.msg_type.bits() << 4) | msg.token.len() as u8);
    out.push(msg.code.byte());
    out.extend_from_slice(&msg.message_id.to_be_bytes());
    out.extend_from_slice(&msg.token);

    let mut prev = 0u16;
    for (num, value) in &msg.options {
        // Only Uri-Path passes validation, so deltas are always <= 12 and
        // fit the plain nibble; lengths may need the one-byte extension.
        let delta = (num - prev) as u8;
        debug_assert!(delta <= 12);
        let (len_nibble, len_ext) = if value.len() < 13 {
            (value.len() as u8, None)
        } else {
            (13u8, Some((value.len() - 13) as u8))
        };
        out.push((delta << 4) | len_nibble);
        if let Some(ext) = len_ext {
            out.push(ext);
        }
        out.extend_from_slice(value);
        prev = *num;
    }

    if !msg.payload.is_empty() {
        out.push(0xFF);
        out.extend_from_slice(&msg.payload);
    }
    Ok(out)
}

fn encoded_option_len(value_len: usize) -> usize {
    1 + usize::from(value_len >= 13) + value_len
}

/// Decode a binary message. Inverse of [`encode_message`] on its image;
/// arbitrary input yields a structured error, never a panic or over-read.
pub fn decode_message(bytes: &[u8]) -> Result<CoapMessage, CoapError> {
    if bytes.len() < 4 {
        return Err(CoapError::Truncated { needed: 4, have: bytes.len() });
    }
    let version = bytes[0] >> 6;
    if version != 1 {
        return Err(CoapError::BadVersion(version));
    }
    let msg_type = MsgType::from_bits(bytes[0] >> 4);
    let tkl = (bytes[0] & 0x0F) as usize;
    if tkl > MAX_TOKEN_LEN {
        return Err(CoapError::TokenTooLong(tkl));
    }
    let code = Code::from_byte(bytes[1])?;
    let message_id = u16::from_be_bytes([bytes[2], bytes[3]]);

    let mut pos = 4;
    let token = bytes
        .get(pos..pos + tkl)
        .ok_or(CoapError::Truncated { needed: pos + tkl, have: bytes.len() })?
        .to_vec();
    pos += tkl;

    let mut options = Vec::new();
    let mut payload = Vec::new();
    let mut number = 0u16;
    while pos < bytes.len() {
        if bytes[pos] == 0xFF {
            pos += 1;
            if pos == bytes.len() {
                return Err(CoapError::EmptyPayloadAfterMarker);
            }
            payload = bytes[pos..].to_vec();
            break;
        }
        let header_pos = pos;
        let delta_nibble = bytes[pos] >> 4;
        let len_nibble = bytes[pos] & 0x0F;
        pos += 1;
        let delta = read_option_field(bytes, &mut pos, delta_nibble, header_pos)?;
        let value_len = read_option_field(bytes, &mut pos, len_nibble, header_pos)? as usize;
        number = number
            .checked_add(delta)
            .ok_or(CoapError::MalformedOption(header_pos))?;
        if number != OPTION_URI_PATH {
            return Err(CoapError::UnsupportedOption(number));
        }
        let value = bytes
            .get(pos..pos + value_len)
            .ok_or(CoapError::Truncated { needed: pos + value_len, have: bytes.len() })?
            .to_vec();
        pos += value_len;
        options.push((number, value));
    }

    let msg = CoapMessage { version, msg_type, code, message_id, token, options, payload };
    msg.validate()?;
    Ok(msg)
}

/// Resolve an option delta/length nibble, consuming extension bytes.
fn read_option_field(
    bytes: &[u8],
    pos: &mut usize,
    nibble: u8,
    header_pos: usize,
) -> Result<u16, CoapError> {
    match nibble {
        0..=12 => Ok(u16::from(nibble)),
        13 => {
            let ext = *bytes
                .get(*pos)
                .ok_or(CoapError::Truncated { needed: *pos + 1, have: bytes.len() })?;
            *pos += 1;
            Ok(u16::from(ext) + 13)
        }
        14 => {
            let ext = bytes
                .get(*pos..*pos + 2)
                .ok_or(CoapError::Truncated { needed: *pos + 2, have: bytes.len() })?;
            *pos += 2;
            Ok(u16::from_be_bytes([ext[0], ext[1]]).saturating_add(269))
        }
        _ => Err(CoapError::MalformedOption(header_pos)),
    }
}

/// Build a confirmable request with the given method and payload.
pub fn make_request(
    method: Method,
    payload: Vec<u8>,
    message_id: u16,
) -> Result<CoapMessage, CoapError> {
    if method == Method::Get && !payload.is_empty() {
        return Err(CoapError::PayloadOnGet);
    }
    Ok(CoapMessage {
        version: 1,
        msg_type: MsgType::Confirmable,
        code: method.code(),
        message_id,
        token: Vec::new(),
        options: Vec::new(),
        payload,
    })
}

/// Build the piggybacked ACK response for a request: 2.05 for GET,
/// 2.04 for PUT, 2.01 for POST, echoing message id and token.
pub fn make_response(request: &CoapMessage, payload: Vec<u8>) -> Result<CoapMessage, CoapError> {
    let code = match request.code {
        Code::Get => Code::Content,
        Code::Put => Code::Changed,
        Code::Post => Code::Created,
        other => return Err(CoapError::UnknownCode(other.byte())),
    };
    Ok(CoapMessage {
        version: 1,
        msg_type: MsgType::Ack,
        code,
        message_id: request.message_id,
        token: request.token.clone(),
        options: Vec::new(),
        payload,
    })
}
