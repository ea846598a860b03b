//! Fixed packet framing for byte streams.
//!
//! Wire layout, big-endian: magic "USDR" | seq u32 | total u32 | len u32 |
//! payload | crc32 u32. The CRC covers header and payload. Payloads cap at
//! 64435 bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PACKET_MAGIC: [u8; 4] = *b"USDR";
/// Largest payload per packet.
pub const MAX_PAYLOAD: usize = 64435;
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum PacketError {
    #[error("max_payload must be in 1..={MAX_PAYLOAD}")]
    BadMaxPayload,
    #[error("packet truncated")]
    Truncated,
    #[error("bad packet magic")]
    BadMagic,
}

/// One framed chunk of a byte stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub seq: u32,
    pub total: u32,
    pub payload: Vec<u8>,
    pub crc32: u32,
}

/// Reflected 0x04C11DB7 CRC-32 (the ubiquitous zlib parameterization).
pub fn crc32(bytes: &[u8]) -> u32 {
    let mut reg: u32 = 0xFFFF_FFFF;
    for &b in bytes {
        reg ^= b as u32;
        for _ in 0..8 {
            if reg & 1 != 0 {
                reg = (reg >> 1) ^ 0xEDB8_8320;
            } else {
                reg >>= 1;
            }
        }
    }
    !reg
}

impl Packet {
    fn header_bytes(seq: u32, total: u32, len: u32) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(HEADER_LEN);
        bytes.extend_from_slice(&PACKET_MAGIC);
        bytes.extend_from_slice(&seq.to_be_bytes());
        bytes.extend_from_slice(&total.to_be_bytes());
        bytes.extend_from_slice(&len.to_be_bytes());
        bytes
    }

    pub fn new(seq: u32, total: u32, payload: Vec<u8>) -> Self {
        let mut covered = Self::header_bytes(seq, total, payload.len() as u32);
        covered.extend_from_slice(&payload);
        let crc32 = crc32(&covered);
        Self {
            seq,
            total,
            payload,
            crc32,
        }
    }

    /// True when the stored CRC matches the header+payload bytes.
    pub fn crc_ok(&self) -> bool {
        let mut covered = Self::header_bytes(self.seq, self.total, self.payload.len() as u32);
        covered.extend_from_slice(&self.payload);
        crc32(&covered) == self.crc32
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = Self::header_bytes(self.seq, self.total, self.payload.len() as u32);
        bytes.extend_from_slice(&self.payload);
        bytes.extend_from_slice(&self.crc32.to_be_bytes());
        bytes
    }

    /// Parse one packet from the front of `bytes`; returns it and the rest.
    pub fn parse(bytes: &[u8]) -> Result<(Self, &[u8]), PacketError> {
        if bytes.len() < HEADER_LEN + 4 {
            return Err(PacketError::Truncated);
        }
        if bytes[..4] != PACKET_MAGIC {
            return Err(PacketError::BadMagic);
        }
        let word = |o: usize| u32::from_be_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        let seq = word(4);
        let total = word(8);
        let len = word(12) as usize;
        if len > MAX_PAYLOAD || bytes.len() < HEADER_LEN + len + 4 {
            return Err(PacketError::Truncated);
        }
        let payload = bytes[HEADER_LEN..HEADER_LEN + len].to_vec();
        let crc32 = word(HEADER_LEN + len);
        let rest = &bytes[HEADER_LEN + len + 4..];
        Ok((
            Self {
                seq,
                total,
                payload,
                crc32,
            },
            rest,
        ))
    }
}

/// Split a byte stream into sequentially numbered packets.
pub fn packetize(stream: &[u8], max_payload: usize) -> Result<Vec<Packet>, PacketError> {
    if max_payload == 0 || max_payload > MAX_PAYLOAD {
        return Err(PacketError::BadMaxPayload);
    }
    let total = stream.len().div_ceil(max_payload) as u32;
    Ok(stream
        .chunks(max_payload)
        .enumerate()
        .map(|(seq, chunk)| Packet::new(seq as u32, total, chunk.to_vec()))
        .collect())
}

/// Reassemble packets in seq order. CRC-failed packets are dropped and
/// reported, as are gaps; the surviving payload bytes concatenate in order.
pub fn depacketize(packets: &[Packet]) -> (Vec<u8>, Vec<u32>) {
    let total = packets
        .iter()
        .filter(|p| p.crc_ok())
        .map(|p| p.total)
        .max()
        .unwrap_or(0);
    let mut slots: Vec<Option<&Packet>> = vec![None; total as usize];
    for p in packets {
        if !p.crc_ok() || p.seq >= total {
            continue;
        }
        let slot = &mut slots[p.seq as usize];
        if slot.is_none() {
            *slot = Some(p);
        }
    }
    let mut bytes = Vec::new();
    let mut missing = Vec::new();
    for (seq, slot) in slots.iter().enumerate() {
        match slot {
            Some(p) => bytes.extend_from_slice(&p.payload),
            None => missing.push(seq as u32),
        }
    }
    (bytes, missing)
}

/// Parse a contiguous byte stream of packets, tolerating a corrupt tail.
pub fn parse_packets(mut bytes: &[u8]) -> Vec<Packet> {
    let mut packets = Vec::new();
    while !bytes.is_empty() {
        match Packet::parse(bytes) {
            Ok((p, rest)) => {
                packets.push(p);
                bytes = rest;
            }
            Err(_) => break,
        }
    }
    packets
}
