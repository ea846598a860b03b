//! Full-chain LoRa loopback across configurations, driven through the
//! public frame codec and the channel simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use usdr_core::channel::{apply_channel, ChannelModel};
use usdr_core::lora::{FrameCodec, LoRaConfig};

// 10^3 random frames over random (SF, CR): every payload bit survives the
// ideal channel.
#[test]
fn thousand_random_frames_ber_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10a7);
    let mut codecs: Vec<Vec<FrameCodec>> = Vec::new();
    for sf in 7..=12u8 {
        let mut row = Vec::new();
        for cr in 0..=4u8 {
            row.push(FrameCodec::new(LoRaConfig::new(sf, 125_000.0, cr).unwrap()).unwrap());
        }
        codecs.push(row);
    }
    for trial in 0..1000 {
        let sf = rng.random_range(7..=12u8);
        let cr = rng.random_range(0..=4u8);
        // cap lengths at high SF to keep the suite quick
        let max_len = if sf >= 11 { 48 } else { 128 };
        let len = rng.random_range(1..=max_len);
        let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let codec = &codecs[(sf - 7) as usize][cr as usize];
        let frame = codec.encode(&payload).unwrap();
        let result = codec.decode(&frame).unwrap();
        assert!(
            result.status.ok(),
            "trial {trial} sf={sf} cr={cr}: {:?}",
            result.status
        );
        assert_eq!(result.payload, payload, "trial {trial} sf={sf} cr={cr}");
    }
}

#[test]
fn oversampled_frame_loopback() {
    let mut config = LoRaConfig::new(8, 125_000.0, 1).unwrap();
    config.oversample = 4;
    let codec = FrameCodec::new(config).unwrap();
    let payload = b"oversampled chirps".to_vec();
    let frame = codec.encode(&payload).unwrap();
    let result = codec.decode(&frame).unwrap();
    assert!(result.status.ok(), "{:?}", result.status);
    assert_eq!(result.payload, payload);
}

#[test]
fn frame_survives_flat_gain_and_mild_noise() {
    let config = LoRaConfig::new(9, 250_000.0, 3).unwrap();
    let codec = FrameCodec::new(config).unwrap();
    let payload: Vec<u8> = (0..100).map(|i| i as u8 ^ 0x5A).collect();
    let frame = codec.encode(&payload).unwrap();
    let faded = apply_channel(
        &frame,
        &ChannelModel {
            kind: usdr_core::channel::ChannelKind::FlatGain {
                gain: num_complex::Complex64::new(0.02, 0.07),
            },
            seed: 0,
        },
    )
    .unwrap();
    let noisy = apply_channel(&faded, &ChannelModel::awgn(8.0, 99)).unwrap();
    let result = codec.decode(&noisy).unwrap();
    assert!(result.status.ok(), "{:?}", result.status);
    assert_eq!(result.payload, payload);
}

// Even with CR=0 (no protection) a clean channel round-trips; with CR=4 a
// heavily protected frame reports zero corrections on a clean channel.
#[test]
fn corrected_bits_zero_on_clean_channel() {
    for cr in [0u8, 4] {
        let config = LoRaConfig::new(7, 125_000.0, cr).unwrap();
        let codec = FrameCodec::new(config).unwrap();
        let frame = codec.encode(b"quiet link").unwrap();
        let result = codec.decode(&frame).unwrap();
        assert!(result.status.ok());
        assert_eq!(result.status.corrected_bits, 0);
    }
}

#[test]
fn tx_frame_length_matches_symbol_arithmetic() {
    let config = LoRaConfig::new(7, 125_000.0, 1).unwrap();
    let codec = FrameCodec::new(config.clone()).unwrap();
    let payload = vec![0x42u8; 10];
    let frame = codec.encode(&payload).unwrap();
    let header_syms = 8;
    let payload_syms =
        usdr_core::lora::payload_symbol_count(payload.len(), true, config.cr, config.payload_sf_eff());
    let expected =
        (config.preamble_symbols() * 128.0) as usize + (header_syms + payload_syms) * 128;
    assert_eq!(frame.len(), expected);
}
