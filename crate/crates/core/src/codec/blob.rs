//! Compressed-field container: fixed 64-byte header + arithmetic-coded payload.
//!
//! Byte layout (all integers little-endian, floats IEEE-754 binary64):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "WFCB"
//!      4     2  version (currently 1)
//!      6     2  flags (bit 0: 1 = quantized symbols, 0 = lossless f32 bytes)
//!      8     4  grid height
//!     12     4  grid width
//!     16     8  field min
//!     24     8  field max
//!     32     8  mu
//!     40     4  quantization levels Q
//!     44     1  ppm order
//!     45     3  reserved (zero)
//!     48     8  payload length in bytes
//!     56     4  CRC-32 (IEEE) of the payload
//!     60     4  reserved (zero)
//! ```

use crate::error::{CoreError, Result};

pub const HEADER_LEN: usize = 64;
pub const MAGIC: [u8; 4] = *b"WFCB";
pub const VERSION: u16 = 1;

pub const FLAG_QUANTIZED: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct BlobHeader {
    pub flags: u16,
    pub height: u32,
    pub width: u32,
    pub min: f64,
    pub max: f64,
    pub mu: f64,
    pub q: u32,
    pub ppm_order: u8,
    pub payload_len: u64,
    pub payload_crc: u32,
}

impl BlobHeader {
    pub fn is_quantized(&self) -> bool {
        self.flags & FLAG_QUANTIZED != 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedBlob {
    pub header: BlobHeader,
    pub payload: Vec<u8>,
}

impl CompressedBlob {
    pub fn new(mut header: BlobHeader, payload: Vec<u8>) -> Self {
        header.payload_len = payload.len() as u64;
        header.payload_crc = crc32(&payload);
        Self { header, payload }
    }

    /// Total on-disk size in bytes, header included.
    pub fn total_bytes(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(self.total_bytes());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&h.flags.to_le_bytes());
        out.extend_from_slice(&h.height.to_le_bytes());
        out.extend_from_slice(&h.width.to_le_bytes());
        out.extend_from_slice(&h.min.to_le_bytes());
        out.extend_from_slice(&h.max.to_le_bytes());
        out.extend_from_slice(&h.mu.to_le_bytes());
        out.extend_from_slice(&h.q.to_le_bytes());
        out.push(h.ppm_order);
        out.extend_from_slice(&[0u8; 3]);
        out.extend_from_slice(&h.payload_len.to_le_bytes());
        out.extend_from_slice(&h.payload_crc.to_le_bytes());
        out.extend_from_slice(&[0u8; 4]);
        debug_assert_eq!(out.len(), HEADER_LEN);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(CoreError::Codec(format!(
                "blob truncated: {} bytes, header needs {HEADER_LEN}",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(CoreError::Codec("bad magic; not a compressed field blob".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u16_at(4);
        if version != VERSION {
            return Err(CoreError::Codec(format!(
                "unsupported blob version {version}, expected {VERSION}"
            )));
        }
        let header = BlobHeader {
            flags: u16_at(6),
            height: u32_at(8),
            width: u32_at(12),
            min: f64_at(16),
            max: f64_at(24),
            mu: f64_at(32),
            q: u32_at(40),
            ppm_order: bytes[44],
            payload_len: u64_at(48),
            payload_crc: u32_at(56),
        };
        let expect = HEADER_LEN + header.payload_len as usize;
        if bytes.len() != expect {
            return Err(CoreError::Codec(format!(
                "blob length {} does not match header ({expect})",
                bytes.len()
            )));
        }
        let payload = bytes[HEADER_LEN..].to_vec();
        if crc32(&payload) != header.payload_crc {
            return Err(CoreError::Codec("payload checksum mismatch".into()));
        }
        Ok(Self { header, payload })
    }
}

/// CRC-32 (IEEE 802.3, reflected, init/xorout 0xFFFFFFFF).
pub fn crc32(data: &[u8]) -> u32 {
    const POLY: u32 = 0xEDB8_8320;
    let mut crc = 0xFFFF_FFFFu32;
    for &b in data {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (POLY & mask);
        }
    }
    !crc
}
