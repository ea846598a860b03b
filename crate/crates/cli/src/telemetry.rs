//! Sensor telemetry carried by the gateway demo's LoRa frames.
//!
//! Byte layout, big-endian: node_id u16 | kind u8 | value f32 | timestamp_ms
//! u64 — 15 bytes.

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

pub const TELEMETRY_LEN: usize = 15;

/// The three sensors a node can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    TempHumidity,
    Pir,
    Ultrasonic,
}

impl SensorKind {
    pub const ALL: [SensorKind; 3] = [
        SensorKind::TempHumidity,
        SensorKind::Pir,
        SensorKind::Ultrasonic,
    ];

    fn code(self) -> u8 {
        match self {
            SensorKind::TempHumidity => 0,
            SensorKind::Pir => 1,
            SensorKind::Ultrasonic => 2,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => SensorKind::TempHumidity,
            1 => SensorKind::Pir,
            2 => SensorKind::Ultrasonic,
            other => bail!("unknown sensor kind {other}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub node_id: u16,
    pub sensor_kind: SensorKind,
    pub value: f32,
    pub timestamp_ms: u64,
}

impl TelemetryRecord {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(TELEMETRY_LEN);
        bytes.extend_from_slice(&self.node_id.to_be_bytes());
        bytes.push(self.sensor_kind.code());
        bytes.extend_from_slice(&self.value.to_be_bytes());
        bytes.extend_from_slice(&self.timestamp_ms.to_be_bytes());
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != TELEMETRY_LEN {
            bail!("telemetry record must be {TELEMETRY_LEN} bytes, got {}", bytes.len());
        }
        Ok(Self {
            node_id: u16::from_be_bytes([bytes[0], bytes[1]]),
            sensor_kind: SensorKind::from_code(bytes[2])?,
            value: f32::from_be_bytes([bytes[3], bytes[4], bytes[5], bytes[6]]),
            timestamp_ms: u64::from_be_bytes([
                bytes[7], bytes[8], bytes[9], bytes[10], bytes[11], bytes[12], bytes[13], bytes[14],
            ]),
        })
    }
}
