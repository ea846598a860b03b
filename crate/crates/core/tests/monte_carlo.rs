//! Seeded Monte-Carlo behavior of the modems over the AWGN channel.
//!
//! The RECORDED_* constants were produced by the `record_oracle_values` run
//! below (fixed seeds, this code) before the assertions were armed; the
//! armed tests then hold the implementation to oracle + 20%.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use usdr_core::channel::{apply_channel, ChannelModel};
use usdr_core::iq::IqFrame;
use usdr_core::lora::{CssModem, LoRaConfig};
use usdr_core::ofdm::{OfdmConfig, OfdmModem};
use usdr_core::ook::{ook_demodulate, ook_modulate, OokConfig};

/// Symbol error rate of the bare CSS modem at a per-sample channel SNR.
fn css_ser(sf: u8, snr_db: f64, n_symbols: usize, seed: u64) -> f64 {
    let config = LoRaConfig::new(sf, 125_000.0, 1).unwrap();
    let modem = CssModem::new(config.clone()).unwrap();
    let m = config.chips() as u16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = 0usize;
    for trial in 0..n_symbols {
        let symbol = rng.random_range(0..m);
        let frame = modem.modulate(symbol).unwrap();
        let noisy = apply_channel(&frame, &ChannelModel::awgn(snr_db, seed ^ trial as u64)).unwrap();
        let (hat, _) = modem.demodulate(&noisy.samples).unwrap();
        errors += (hat != symbol) as usize;
    }
    errors as f64 / n_symbols as f64
}

fn ook_ber(snr_db: f64, n_bits: usize, seed: u64) -> f64 {
    let config = OokConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..n_bits).map(|_| rng.random_range(0..2)).collect();
    let frame = ook_modulate(&bits, &config).unwrap();
    let noisy = apply_channel(&frame, &ChannelModel::awgn(snr_db, seed)).unwrap();
    let hat = ook_demodulate(&noisy, &config).unwrap();
    let errors: usize = bits.iter().zip(hat.iter()).filter(|(a, b)| a != b).count();
    errors as f64 / n_bits as f64
}

fn ofdm_evm(snr_db: f64, seed: u64) -> f64 {
    let cfg = OfdmConfig::new(64, 20, 16).unwrap();
    let modem = OfdmModem::new(cfg.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..cfg.bits_per_block() * 16).map(|_| rng.random_range(0..2)).collect();
    let packet = modem.encode_packet(&bits).unwrap();
    let frame = packet.to_frame(1.0);
    let noisy = apply_channel(&frame, &ChannelModel::awgn(snr_db, seed)).unwrap();
    modem.decode_packet(&noisy.samples).unwrap().evm_db
}

/// Pre-registered oracle values (seeds below, 10^4 symbols / 10^5 bits).
/// Both channels are error-free at these operating points: the dechirp
/// processing gain puts the SF7 bin SNR near 21 dB, and symbol averaging
/// leaves OOK a >6 sigma decision margin.
const RECORDED_CSS_SER_SF7_0DB: f64 = 0.0;
const RECORDED_OOK_BER_10DB: f64 = 0.0;

const CSS_SEED: u64 = 0xC550;
const OOK_SEED: u64 = 0x00C0;

// One-time oracle recorder; run with
//   cargo test -p usdr-core --test monte_carlo record_oracle_values -- --ignored --nocapture
#[test]
#[ignore]
fn record_oracle_values() {
    println!("css ser sf7 @0dB: {}", css_ser(7, 0.0, 10_000, CSS_SEED));
    println!("ook ber @10dB:    {}", ook_ber(10.0, 100_000, OOK_SEED));
    for sf in [7u8, 9, 11] {
        println!("css ser sf{sf} @-12dB: {}", css_ser(sf, -12.0, 10_000, CSS_SEED));
    }
    for snr in [12.0f64, 9.0, 6.0] {
        println!("ook ber @{snr}dB: {}", ook_ber(snr, 100_000, OOK_SEED));
    }
    for snr in [30.0f64, 20.0, 10.0] {
        println!("ofdm evm @{snr}dB: {}", ofdm_evm(snr, 77));
    }
}

#[test]
fn css_ser_at_0db_within_oracle_envelope() {
    let ser = css_ser(7, 0.0, 10_000, CSS_SEED);
    let bound = if RECORDED_CSS_SER_SF7_0DB == 0.0 {
        // oracle recorded zero errors; demand the same and keep the spec's
        // fallback ceiling
        0.01
    } else {
        RECORDED_CSS_SER_SF7_0DB * 1.2
    };
    assert!(ser <= bound, "ser {ser} > bound {bound}");
}

#[test]
fn css_ser_monotone_in_sf() {
    // at -12 dB per-sample SNR the SF=7 modem actually makes errors
    let sers: Vec<f64> = [7u8, 9, 11]
        .iter()
        .map(|&sf| css_ser(sf, -12.0, 10_000, CSS_SEED))
        .collect();
    assert!(sers[0] > 0.0, "want real errors at sf7, got {sers:?}");
    assert!(sers[0] >= sers[1] && sers[1] >= sers[2], "{sers:?}");
}

#[test]
fn ook_ber_at_10db_within_oracle_envelope() {
    let ber = ook_ber(10.0, 100_000, OOK_SEED);
    assert!(
        ber <= RECORDED_OOK_BER_10DB * 1.2,
        "ber {ber} > oracle {RECORDED_OOK_BER_10DB} + 20%"
    );
    // sanity: errors do appear once the margin shrinks, so the zero above is
    // a real operating point and not a dead detector
    assert!(ook_ber(6.0, 100_000, OOK_SEED) > 0.0);
}

#[test]
fn ook_ber_monotone_in_snr() {
    let bers: Vec<f64> = [12.0f64, 9.0, 6.0]
        .iter()
        .map(|&snr| ook_ber(snr, 100_000, OOK_SEED))
        .collect();
    assert!(bers[0] <= bers[1] && bers[1] <= bers[2], "{bers:?}");
}

#[test]
fn ofdm_evm_monotone_in_snr() {
    let evms: Vec<f64> = [30.0f64, 20.0, 10.0].iter().map(|&s| ofdm_evm(s, 77)).collect();
    assert!(evms[0] < evms[1] && evms[1] < evms[2], "{evms:?}");
}

// End-to-end fixture tying channel_sim and lora sync together: offsets plus
// noise, recovered exactly, then decoded.
#[test]
fn offset_noise_decode_fixture() {
    let config = LoRaConfig::new(7, 125_000.0, 2).unwrap();
    let codec = usdr_core::lora::FrameCodec::new(config.clone()).unwrap();
    let payload: Vec<u8> = (0..48).map(|i| (i * 7 + 1) as u8).collect();
    let clean = codec.encode(&payload).unwrap();
    for (k, offset) in [0usize, 1, 17, 37, 512].into_iter().enumerate() {
        let shifted = usdr_core::channel::apply_timing_offset(&clean, offset);
        let noisy = apply_channel(&shifted, &ChannelModel::awgn(10.0, 1000 + k as u64)).unwrap();
        let result = codec.decode(&noisy).unwrap();
        assert!(result.status.ok(), "offset {offset}: {:?}", result.status);
        assert_eq!(result.status.offset_samples, offset);
        assert_eq!(result.payload, payload);
    }
}

// Noise-disabled channel mode is the identity, end to end.
#[test]
fn noise_disabled_channel_is_transparent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<Complex64> = (0..1000)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let frame = IqFrame::new(samples, 1.0);
    let out = apply_channel(&frame, &ChannelModel::awgn(f64::INFINITY, 3)).unwrap();
    assert_eq!(out, frame);
}
