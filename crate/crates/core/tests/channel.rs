use qvr_core::channel::{
    effective_throughput, jitter_factor, loopback_transport, sha256, transmit, ChannelProfile, ProfileName,
};
use qvr_core::Error;

#[test]
fn named_profiles_carry_nominal_throughput() {
    let cases = [
        (ProfileName::Wifi, 200e6),
        (ProfileName::Lte4g, 100e6),
        (ProfileName::Early5g, 500e6),
    ];
    for (name, bps) in cases {
        let p = ChannelProfile::preset(name).unwrap();
        assert_eq!(p.throughput_bps, bps);
        assert_eq!(p.snr_db, 20.0);
        assert_eq!(p.overhead_s, 0.0);
        assert_eq!(name.as_str().parse::<ProfileName>().unwrap(), name);
    }
    assert!(ChannelProfile::preset(ProfileName::Custom).is_err());
    assert!("dialup".parse::<ProfileName>().is_err());
}

#[test]
fn noiseless_back_buffer_takes_wire_time() {
    let p = ChannelProfile::preset(ProfileName::Wifi).unwrap().noiseless();
    let r = transmit(&p, &[530_000], 0).unwrap();
    assert_eq!(r.bytes, 530_000);
    assert!((r.latency_s - 0.0212).abs() < 1e-12);
    assert_eq!(r.effective_throughput_bps, 200e6);
}

#[test]
fn streams_share_bandwidth_and_overhead_once() {
    let p = ChannelProfile {
        overhead_s: 0.002,
        ..ChannelProfile::custom(100e6).noiseless()
    };
    let split = transmit(&p, &[250_000, 250_000, 500_000], 3).unwrap();
    let whole = transmit(&p, &[1_000_000], 3).unwrap();
    assert_eq!(split.latency_s, whole.latency_s);
    assert!((whole.latency_s - (0.002 + 0.08)).abs() < 1e-12);
    assert!(matches!(transmit(&p, &[], 0), Err(Error::EmptyStreams)));
}

#[test]
fn jitter_sigma_matches_snr() {
    let p = ChannelProfile::preset(ProfileName::Wifi).unwrap().with_seed(99);
    let n = 100_000;
    let samples: Vec<f64> = (0..n).map(|f| jitter_factor(&p, f)).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sigma = var.sqrt();
    // 20 dB gives 10^(-1) = 0.1; the [0.5, 1.5] clamp sits 5 sigma out.
    assert!((sigma - 0.1).abs() <= 0.01, "sigma {sigma}");
    assert!((mean - 1.0).abs() < 0.002, "mean {mean}");
    assert!(samples.iter().all(|s| (0.5..=1.5).contains(s)));
}

#[test]
fn jitter_is_deterministic_per_seed_and_frame() {
    let p = ChannelProfile::preset(ProfileName::Lte4g).unwrap().with_seed(5);
    assert_eq!(jitter_factor(&p, 17), jitter_factor(&p, 17));
    assert_ne!(jitter_factor(&p, 17), jitter_factor(&p, 18));
    assert_ne!(jitter_factor(&p, 17), jitter_factor(&p.with_seed(6), 17));
    assert_eq!(effective_throughput(&p.noiseless(), 17), 100e6);
}

#[test]
fn loopback_round_trip_preserves_content() {
    let payload: Vec<u8> = (0..200_000u32).map(|i| (i * 31 % 251) as u8).collect();
    let receipt = loopback_transport(&payload).unwrap();
    assert_eq!(receipt.received_digest, sha256(&payload));
    assert_eq!(receipt.result.bytes, payload.len() as u64);
    assert!(receipt.result.latency_s > 0.0);

    let empty = loopback_transport(&[]).unwrap();
    assert_eq!(empty.received_digest, sha256(&[]));
}
