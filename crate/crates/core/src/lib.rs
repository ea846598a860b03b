//! Baseband toolkit for a desk-scale software-defined radio: three bit-exact
//! software modems (LoRa chirp spread spectrum, DC-biased optical OFDM, and
//! NRZ on-off keying) over seedable simulated channels, plus a quasi-real-time
//! pipeline scheduler with profiling and deadline-miss reporting.
//!
//! Everything operates on [`iq::IqFrame`] buffers of complex baseband samples;
//! modems, channels and files all speak that one currency.

pub mod channel;
pub mod iq;
pub mod lora;
pub mod ofdm;
pub mod ook;
pub mod pipeline;

pub use iq::IqFrame;
