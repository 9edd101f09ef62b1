//! Length-prefixed binary framing for the client/server protocol.
//!
//! Frame layout (header is 11 bytes):
//!
//! ```text
//! magic "MVPR" | version u8 | msg_type u8 | scheme_id u8 | body_len u32 LE | body
//! ```
//!
//! Message types: 1 = QUERY (body: `k` bytes, one `Z_m` coordinate each),
//! 2 = ANSWER (body: concatenated ring elements, `r` bytes each — `f0`, then
//! `k` gradient entries, then `k²` second-order entries when the variant
//! asks for them), 3 = ERROR (body: one code byte plus a UTF-8 message).
//!
//! On connect the server first sends a fixed 37-byte HELLO:
//! `version u8 | scheme_id u8 | m u8 | k u16 LE | binding hash (32 bytes)`,
//! where the hash covers both the family file and the scheme configuration,
//! so a client talking to mismatched servers aborts before sending anything.

use std::io::{Read, Write};

use thiserror::Error;

use crate::encode::AnswerBundle;
use crate::family::MvFamily;
use crate::ring::RingElem;
use crate::scheme::SchemeConfig;

pub const MAGIC: [u8; 4] = *b"MVPR";
pub const PROTOCOL_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 11;
pub const HELLO_LEN: usize = 37;
/// Bodies above this are treated as hostile and the connection is dropped.
pub const MAX_BODY_LEN: u32 = 1 << 20;

/// ERROR body codes.
pub mod error_code {
    /// Unparseable or unexpected frame.
    pub const MALFORMED: u8 = 1;
    /// QUERY body length does not match `k`.
    pub const BAD_LENGTH: u8 = 2;
    /// Frame's scheme id differs from the server's.
    pub const SCHEME_MISMATCH: u8 = 3;
    /// Protocol version not supported.
    pub const UNSUPPORTED_VERSION: u8 = 4;
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown message type {0}")]
    UnknownMsgType(u8),
    #[error("body of {0} bytes exceeds the frame limit")]
    Oversized(u32),
    #[error("truncated frame")]
    Truncated,
    #[error("answer body malformed: {0}")]
    BadAnswer(String),
    #[error("error body malformed")]
    BadErrorBody,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgType {
    Query = 1,
    Answer = 2,
    Error = 3,
}

impl MsgType {
    fn from_byte(b: u8) -> Option<MsgType> {
        Some(match b {
            1 => MsgType::Query,
            2 => MsgType::Answer,
            3 => MsgType::Error,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub scheme_id: u8,
    pub body: Vec<u8>,
}

impl Frame {
    pub fn query(scheme_id: u8, coordinates: &[u8]) -> Frame {
        Frame {
            msg_type: MsgType::Query,
            scheme_id,
            body: coordinates.to_vec(),
        }
    }

    pub fn answer(scheme_id: u8, body: Vec<u8>) -> Frame {
        Frame {
            msg_type: MsgType::Answer,
            scheme_id,
            body,
        }
    }

    pub fn error(scheme_id: u8, code: u8, message: &str) -> Frame {
        let mut body = Vec::with_capacity(1 + message.len());
        body.push(code);
        body.extend_from_slice(message.as_bytes());
        Frame {
            msg_type: MsgType::Error,
            scheme_id,
            body,
        }
    }

    /// Parse an ERROR body into `(code, message)`.
    pub fn error_parts(&self) -> Result<(u8, String), WireError> {
        if self.msg_type != MsgType::Error || self.body.is_empty() {
            return Err(WireError::BadErrorBody);
        }
        let message = String::from_utf8(self.body[1..].to_vec())
            .map_err(|_| WireError::BadErrorBody)?;
        Ok((self.body[0], message))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.body.len());
        out.extend_from_slice(&MAGIC);
        out.push(PROTOCOL_VERSION);
        out.push(self.msg_type as u8);
        out.push(self.scheme_id);
        out.extend_from_slice(&(self.body.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    /// Decode one frame from a byte slice; returns the frame and the number
    /// of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, usize), WireError> {
        if bytes.len() < HEADER_LEN {
            return Err(WireError::Truncated);
        }
        let header: [u8; HEADER_LEN] = bytes[..HEADER_LEN].try_into().unwrap();
        let body_len = Self::check_header(&header)? as usize;
        if bytes.len() < HEADER_LEN + body_len {
            return Err(WireError::Truncated);
        }
        let frame = Frame {
            msg_type: MsgType::from_byte(header[5]).unwrap(),
            scheme_id: header[6],
            body: bytes[HEADER_LEN..HEADER_LEN + body_len].to_vec(),
        };
        Ok((frame, HEADER_LEN + body_len))
    }

    fn check_header(header: &[u8; HEADER_LEN]) -> Result<u32, WireError> {
        if header[0..4] != MAGIC {
            return Err(WireError::BadMagic);
        }
        if header[4] != PROTOCOL_VERSION {
            return Err(WireError::UnsupportedVersion(header[4]));
        }
        if MsgType::from_byte(header[5]).is_none() {
            return Err(WireError::UnknownMsgType(header[5]));
        }
        let body_len = u32::from_le_bytes(header[7..11].try_into().unwrap());
        if body_len > MAX_BODY_LEN {
            return Err(WireError::Oversized(body_len));
        }
        Ok(body_len)
    }

    /// Read exactly one frame from a stream.
    pub fn read_from(reader: &mut impl Read) -> Result<Frame, WireError> {
        let mut header = [0u8; HEADER_LEN];
        reader.read_exact(&mut header)?;
        let body_len = Self::check_header(&header)?;
        let mut body = vec![0u8; body_len as usize];
        reader.read_exact(&mut body)?;
        Ok(Frame {
            msg_type: MsgType::from_byte(header[5]).unwrap(),
            scheme_id: header[6],
            body,
        })
    }

    pub fn write_to(&self, writer: &mut impl Write) -> std::io::Result<()> {
        writer.write_all(&self.encode())
    }
}

/// The fixed-size preamble a server sends on every fresh connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hello {
    pub scheme_id: u8,
    pub m: u8,
    pub k: u16,
    pub binding_hash: [u8; 32],
}

impl Hello {
    pub fn encode(&self) -> [u8; HELLO_LEN] {
        let mut out = [0u8; HELLO_LEN];
        out[0] = PROTOCOL_VERSION;
        out[1] = self.scheme_id;
        out[2] = self.m;
        out[3..5].copy_from_slice(&self.k.to_le_bytes());
        out[5..37].copy_from_slice(&self.binding_hash);
        out
    }

    pub fn decode(bytes: &[u8; HELLO_LEN]) -> Result<Hello, WireError> {
        if bytes[0] != PROTOCOL_VERSION {
            return Err(WireError::UnsupportedVersion(bytes[0]));
        }
        Ok(Hello {
            scheme_id: bytes[1],
            m: bytes[2],
            k: u16::from_le_bytes(bytes[3..5].try_into().unwrap()),
            binding_hash: bytes[5..37].try_into().unwrap(),
        })
    }

    pub fn read_from(reader: &mut impl Read) -> Result<Hello, WireError> {
        let mut buf = [0u8; HELLO_LEN];
        reader.read_exact(&mut buf)?;
        Self::decode(&buf)
    }
}

/// SHA-256 over the canonical family text and the scheme description; both
/// sides must agree on it before any query is sent.
pub fn binding_hash(cfg: &SchemeConfig, family: &MvFamily) -> [u8; 32] {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(family.to_canonical_string().as_bytes());
    hasher.update(b"\n");
    hasher.update(cfg.binding_string().as_bytes());
    hasher.finalize().into()
}

/// Serialize an answer bundle: `f0`, the gradient entries, then the
/// second-order entries when present, each as its raw coefficient bytes.
pub fn encode_answer(bundle: &AnswerBundle) -> Vec<u8> {
    let r = bundle.f0.order();
    let k = bundle.f1.len();
    let extra = bundle.f2.as_ref().map_or(0, |m| m.len() * m.len());
    let mut out = Vec::with_capacity(r * (1 + k + extra));
    out.extend_from_slice(bundle.f0.to_bytes());
    for e in &bundle.f1 {
        out.extend_from_slice(e.to_bytes());
    }
    if let Some(f2) = &bundle.f2 {
        for row in f2 {
            for e in row {
                out.extend_from_slice(e.to_bytes());
            }
        }
    }
    out
}

/// Strict inverse of [`encode_answer`] for a known layout; rejects wrong
/// sizes and out-of-range coefficient bytes.
pub fn decode_answer(cfg: &SchemeConfig, k: usize, body: &[u8]) -> Result<AnswerBundle, WireError> {
    let expected = cfg.answer_body_len(k);
    if body.len() != expected {
        return Err(WireError::BadAnswer(format!(
            "expected {expected} bytes, got {}",
            body.len()
        )));
    }
    let r = cfg.ring_order();
    let m = cfg.answer_modulus();
    let elem = |chunk: &[u8]| -> Result<RingElem, WireError> {
        RingElem::from_residues(m, chunk.to_vec())
            .map_err(|e| WireError::BadAnswer(e.to_string()))
    };
    let mut chunks = body.chunks_exact(r);
    let f0 = elem(chunks.next().expect("length checked"))?;
    let f1 = (0..k)
        .map(|_| elem(chunks.next().expect("length checked")))
        .collect::<Result<Vec<_>, _>>()?;
    let f2 = if cfg.variant.needs_second_order() {
        let mut rows = Vec::with_capacity(k);
        for _ in 0..k {
            rows.push(
                (0..k)
                    .map(|_| elem(chunks.next().expect("length checked")))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        Some(rows)
    } else {
        None
    };
    Ok(AnswerBundle { f0, f1, f2 })
}
