//! Wire codec for multiplier exchange between neighboring nodes.
//!
//! Layout, all little-endian: node id (u32), iteration (u32), then one f64
//! per level. A 12-level ladder encodes to 104 bytes.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierMessage {
    pub node_id: u32,
    pub iteration: u32,
    pub values: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MessageError {
    #[error("buffer truncated: {0} bytes, need at least {HEADER_LEN}")]
    Truncated(usize),
    #[error("buffer length {0} does not match 8 + 8*L for any L")]
    Misaligned(usize),
}

pub const HEADER_LEN: usize = 8;

/// Encoded size for a given level count.
pub const fn encoded_len(levels: usize) -> usize {
    HEADER_LEN + 8 * levels
}

impl MultiplierMessage {
    pub fn new(node_id: u32, iteration: u32, values: Vec<f64>) -> Self {
        Self {
            node_id,
            iteration,
            values,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(encoded_len(self.values.len()));
        out.extend_from_slice(&self.node_id.to_le_bytes());
        out.extend_from_slice(&self.iteration.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, MessageError> {
        if bytes.len() < HEADER_LEN {
            return Err(MessageError::Truncated(bytes.len()));
        }
        if (bytes.len() - HEADER_LEN) % 8 != 0 {
            return Err(MessageError::Misaligned(bytes.len()));
        }
        let node_id = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes"));
        let iteration = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        let values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self {
            node_id,
            iteration,
            values,
        })
    }

    /// Decode with a required level count; rejects truncated or over-long
    /// buffers for that count.
    pub fn decode_expecting(bytes: &[u8], levels: usize) -> Result<Self, MessageError> {
        if bytes.len() != encoded_len(levels) {
            return Err(if bytes.len() < encoded_len(levels) {
                MessageError::Truncated(bytes.len())
            } else {
                MessageError::Misaligned(bytes.len())
            });
        }
        Self::decode(bytes)
    }
}
