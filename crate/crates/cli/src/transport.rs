//! UDP datagram transport with fragmentation and reassembly.
//!
//! Wire format, big-endian: magic "USDP" | stream_id u32 | frag_seq u32 |
//! frag_total u32 | payload of at most 1400 bytes. Fragmentation feeds the
//! socket through a bounded queue so chunking and transmission overlap;
//! reassembly gives up on a stream after two silent seconds and returns
//! what arrived plus the missing fragment list.

use anyhow::{bail, Context, Result};
use std::net::UdpSocket;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

pub const UDP_MAGIC: [u8; 4] = *b"USDP";
/// Fits a common 1500-byte MTU with headroom for the 16-byte header.
pub const UDP_MAX_PAYLOAD: usize = 1400;
const HEADER_LEN: usize = 16;
/// Reassembly gives up after this much inactivity.
pub const REASSEMBLY_TIMEOUT: Duration = Duration::from_secs(2);
const SEND_RETRIES: usize = 3;

fn encode_datagram(stream_id: u32, frag_seq: u32, frag_total: u32, payload: &[u8]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + payload.len());
    bytes.extend_from_slice(&UDP_MAGIC);
    bytes.extend_from_slice(&stream_id.to_be_bytes());
    bytes.extend_from_slice(&frag_seq.to_be_bytes());
    bytes.extend_from_slice(&frag_total.to_be_bytes());
    bytes.extend_from_slice(payload);
    bytes
}

struct Datagram {
    stream_id: u32,
    frag_seq: u32,
    frag_total: u32,
    payload: Vec<u8>,
}

fn decode_datagram(bytes: &[u8]) -> Option<Datagram> {
    if bytes.len() < HEADER_LEN || bytes[..4] != UDP_MAGIC {
        return None;
    }
    let word = |o: usize| u32::from_be_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    Some(Datagram {
        stream_id: word(4),
        frag_seq: word(8),
        frag_total: word(12),
        payload: bytes[HEADER_LEN..].to_vec(),
    })
}

/// Fragment `data` and send it to `dest` as one stream. Oversize inputs are
/// split across datagrams; each send is retried a few times before failing.
pub fn send_stream(dest: &str, stream_id: u32, data: &[u8]) -> Result<()> {
    let socket = UdpSocket::bind("0.0.0.0:0").context("bind send socket")?;
    socket
        .connect(dest)
        .with_context(|| format!("connect to {dest}"))?;

    let frag_total = data.len().div_ceil(UDP_MAX_PAYLOAD).max(1) as u32;
    // Bounded handoff between fragmentation and the socket writer so the
    // producer can run ahead without unbounded memory.
    let (tx, rx) = mpsc::sync_channel::<Vec<u8>>(64);
    let chunks: Vec<Vec<u8>> = if data.is_empty() {
        vec![Vec::new()]
    } else {
        data.chunks(UDP_MAX_PAYLOAD).map(|c| c.to_vec()).collect()
    };
    let producer = thread::spawn(move || {
        for (seq, chunk) in chunks.into_iter().enumerate() {
            let datagram = encode_datagram(stream_id, seq as u32, frag_total, &chunk);
            if tx.send(datagram).is_err() {
                return;
            }
        }
    });

    let mut result = Ok(());
    for datagram in rx.iter() {
        let mut attempt = 0;
        loop {
            match socket.send(&datagram) {
                Ok(_) => break,
                Err(e) if attempt + 1 < SEND_RETRIES => {
                    attempt += 1;
                    thread::sleep(Duration::from_millis(20 << attempt));
                    log::warn!("udp send retry {attempt}: {e}");
                }
                Err(e) => {
                    result = Err(e).context("udp send failed after retries");
                    break;
                }
            }
        }
        if result.is_err() {
            break;
        }
        // pace large streams slightly so an unbuffered loopback peer keeps up
        if frag_total > 64 {
            thread::sleep(Duration::from_micros(50));
        }
    }
    drop(rx);
    let _ = producer.join();
    result
}

/// Outcome of a stream receive: the reassembled bytes (gaps skipped) and
/// which fragments never arrived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecvOutcome {
    pub stream_id: u32,
    pub data: Vec<u8>,
    pub missing_frags: Vec<u32>,
}

impl RecvOutcome {
    pub fn complete(&self) -> bool {
        self.missing_frags.is_empty()
    }
}

/// Bind `listen` (e.g. "127.0.0.1:9000") and collect one stream.
///
/// The first valid datagram pins the stream id; reception ends when all
/// fragments arrived, after [`REASSEMBLY_TIMEOUT`] of silence, or at
/// `overall_timeout`.
pub fn recv_stream(listen: &str, overall_timeout: Duration) -> Result<RecvOutcome> {
    let socket = UdpSocket::bind(listen).with_context(|| format!("bind {listen}"))?;
    socket.set_read_timeout(Some(Duration::from_millis(50)))?;
    let started = Instant::now();
    let mut last_progress = Instant::now();
    let mut stream: Option<(u32, Vec<Option<Vec<u8>>>)> = None;
    let mut buf = vec![0u8; HEADER_LEN + UDP_MAX_PAYLOAD];

    loop {
        if let Some((_, frags)) = &stream {
            if frags.iter().all(|f| f.is_some()) {
                break;
            }
            if last_progress.elapsed() >= REASSEMBLY_TIMEOUT {
                break;
            }
        }
        if started.elapsed() >= overall_timeout {
            break;
        }
        let n = match socket.recv(&mut buf) {
            Ok(n) => n,
            Err(ref e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                continue;
            }
            Err(e) => return Err(e).context("udp recv"),
        };
        let Some(datagram) = decode_datagram(&buf[..n]) else {
            continue;
        };
        let (id, frags) = stream.get_or_insert_with(|| {
            (
                datagram.stream_id,
                vec![None; datagram.frag_total.max(1) as usize],
            )
        });
        if datagram.stream_id != *id || datagram.frag_seq as usize >= frags.len() {
            continue;
        }
        let slot = &mut frags[datagram.frag_seq as usize];
        if slot.is_none() {
            *slot = Some(datagram.payload);
            last_progress = Instant::now();
        }
    }

    let Some((stream_id, frags)) = stream else {
        bail!("no stream received on {listen}");
    };
    let mut data = Vec::new();
    let mut missing = Vec::new();
    for (seq, frag) in frags.iter().enumerate() {
        match frag {
            Some(payload) => data.extend_from_slice(payload),
            None => missing.push(seq as u32),
        }
    }
    Ok(RecvOutcome {
        stream_id,
        data,
        missing_frags: missing,
    })
}
