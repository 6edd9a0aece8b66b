//! Packet framing.
//!
//! ```text
//! 0      2     3      4        6         8      9            13
//! | 57 56 | 01 | scheme | tile_id | frame_idx | type | payload_len | payload ...
//! ```
//! Big-endian throughout; 13 header bytes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::PayloadType;
use crate::wire::Reader;
use crate::{Error, Result};

pub const MAGIC: [u8; 2] = [0x57, 0x56];
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 13;

/// Delivery scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "wiservr")]
    WiserVr = 0,
    #[serde(rename = "deepjscc")]
    DeepJscc = 1,
    #[serde(rename = "conventional")]
    Conventional = 2,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::WiserVr, Scheme::DeepJscc, Scheme::Conventional];

    pub fn from_code(code: u8) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| *s as u8 == code)
    }

    /// Whether the scheme sends only a subset of behavior frames.
    pub fn uses_dbf(self) -> bool {
        self != Scheme::Conventional
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::WiserVr => "WiserVR",
            Scheme::DeepJscc => "DeepJSCC",
            Scheme::Conventional => "Conventional",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scheme> {
        match s.to_ascii_lowercase().as_str() {
            "wiservr" => Ok(Scheme::WiserVr),
            "deepjscc" => Ok(Scheme::DeepJscc),
            "conventional" => Ok(Scheme::Conventional),
            _ => Err(Error::InvalidConfig(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketMeta {
    pub scheme: Scheme,
    pub tile_id: u16,
    pub frame_idx: u16,
    pub payload_type: PayloadType,
}

pub fn encapsulate(meta: &PacketMeta, payload: &[u8]) -> Result<Vec<u8>> {
    let len = u32::try_from(payload.len())
        .map_err(|_| Error::InvalidInput(format!("payload of {} bytes exceeds 2^32 - 1", payload.len())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(meta.scheme as u8);
    out.extend_from_slice(&meta.tile_id.to_be_bytes());
    out.extend_from_slice(&meta.frame_idx.to_be_bytes());
    out.push(meta.payload_type as u8);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn decapsulate(bytes: &[u8]) -> Result<(PacketMeta, Vec<u8>)> {
    let bad = |m: String| Error::MalformedPacket(m);
    let mut r = Reader::new(bytes);
    let header = |e: Error| bad(format!("truncated header: {e}"));
    let magic = r.bytes(2).map_err(header)?;
    if magic != MAGIC {
        return Err(bad(format!("bad magic {magic:02x?}")));
    }
    let version = r.u8().map_err(header)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let scheme_code = r.u8().map_err(header)?;
    let scheme = Scheme::from_code(scheme_code).ok_or_else(|| bad(format!("unknown scheme {scheme_code}")))?;
    let tile_id = r.u16().map_err(header)?;
    let frame_idx = r.u16().map_err(header)?;
    let type_code = r.u8().map_err(header)?;
    let payload_type =
        PayloadType::from_code(type_code).ok_or_else(|| bad(format!("unknown payload type {type_code}")))?;
    let len = r.u32().map_err(header)? as usize;
    if r.remaining() != len {
        return Err(bad(format!("payload_len {len} but {} bytes follow", r.remaining())));
    }
    let payload = r.bytes(len).map_err(header)?.to_vec();
    debug_assert_eq!(r.position(), bytes.len());
    Ok((
        PacketMeta {
            scheme,
            tile_id,
            frame_idx,
            payload_type,
        },
        payload,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> PacketMeta {
        PacketMeta {
            scheme: Scheme::DeepJscc,
            tile_id: 0x0102,
            frame_idx: 19,
            payload_type: PayloadType::WholeFrame,
        }
    }

    #[test]
    fn header_layout_is_bit_exact() {
        let bytes = encapsulate(&meta(), &[0xAA, 0xBB]).unwrap();
        assert_eq!(
            bytes,
            vec![0x57, 0x56, 0x01, 0x01, 0x01, 0x02, 0x00, 0x13, 0x02, 0, 0, 0, 2, 0xAA, 0xBB]
        );
        assert_eq!(bytes.len() - 2, HEADER_LEN);
    }

    #[test]
    fn malformed_inputs() {
        let bytes = encapsulate(&meta(), &[1, 2, 3]).unwrap();
        assert_eq!(decapsulate(&bytes).unwrap(), (meta(), vec![1, 2, 3]));
        for cut in [0, 5, 12, 14] {
            assert!(matches!(decapsulate(&bytes[..cut]), Err(Error::MalformedPacket(_))), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = 0;
        assert!(matches!(decapsulate(&bad), Err(Error::MalformedPacket(_))));
        let mut bad = bytes.clone();
        bad[2] = 2;
        assert!(matches!(decapsulate(&bad), Err(Error::MalformedPacket(_))));
        let mut long = bytes;
        long.push(0);
        assert!(decapsulate(&long).is_err());
    }

    #[test]
    fn scheme_names() {
        assert_eq!("WiserVR".parse::<Scheme>().unwrap(), Scheme::WiserVr);
        assert_eq!("deepjscc".parse::<Scheme>().unwrap(), Scheme::DeepJscc);
        assert!("mpeg".parse::<Scheme>().is_err());
        assert_eq!(Scheme::Conventional.to_string(), "Conventional");
    }
}
