//! Network channel models: nominal-throughput profiles with seeded multiplicative
//! jitter, shared-medium parallel streams, and a real loopback socket transport.

use std::io::{Read, Write};
use std::net::{Ipv4Addr, TcpListener, TcpStream};
use std::thread;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_SNR_DB: f64 = 20.0;

const JITTER_FLOOR: f64 = 0.5;
const JITTER_CEIL: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Wifi,
    Lte4g,
    Early5g,
    Custom,
}

impl ProfileName {
    pub fn nominal_throughput_bps(self) -> Option<f64> {
        match self {
            ProfileName::Wifi => Some(200e6),
            ProfileName::Lte4g => Some(100e6),
            ProfileName::Early5g => Some(500e6),
            ProfileName::Custom => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileName::Wifi => "wifi",
            ProfileName::Lte4g => "lte4g",
            ProfileName::Early5g => "early5g",
            ProfileName::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ProfileName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wifi" => Ok(Self::Wifi),
            "lte4g" => Ok(Self::Lte4g),
            "early5g" => Ok(Self::Early5g),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!(
                "unknown network profile {other:?} (expected wifi, lte4g, early5g or custom)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelProfile {
    pub name: ProfileName,
    pub throughput_bps: f64,
    pub snr_db: f64,
    pub overhead_s: f64,
    pub seed: u64,
}

impl ChannelProfile {
    /// Named preset with default SNR, no per-frame overhead, and seed 0.
    pub fn preset(name: ProfileName) -> Result<Self> {
        let throughput_bps = name
            .nominal_throughput_bps()
            .ok_or_else(|| Error::Config("custom profiles need an explicit throughput".into()))?;
        Ok(Self {
            name,
            throughput_bps,
            snr_db: DEFAULT_SNR_DB,
            overhead_s: 0.0,
            seed: 0,
        })
    }

    pub fn custom(throughput_bps: f64) -> Self {
        Self {
            name: ProfileName::Custom,
            throughput_bps,
            snr_db: DEFAULT_SNR_DB,
            overhead_s: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn noiseless(self) -> Self {
        Self {
            snr_db: f64::INFINITY,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.throughput_bps > 0.0 && self.throughput_bps.is_finite()) {
            return Err(Error::Config("throughput must be positive".into()));
        }
        // An infinite SNR is the noiseless limit; NaN and -inf are rejected.
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("snr_db {} invalid", self.snr_db)));
        }
        if !(self.overhead_s >= 0.0) {
            return Err(Error::Config("overhead must be non-negative".into()));
        }
        Ok(())
    }

    /// Standard deviation of the throughput jitter factor.
    pub fn jitter_sigma(&self) -> f64 {
        10f64.powf(-self.snr_db / 20.0)
    }
}

/// Mixes seed and frame into one well-spread stream seed.
fn frame_seed(seed: u64, frame_id: u64) -> u64 {
    let mut z = seed ^ frame_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Jitter factor applied to the nominal throughput for one frame.
pub fn jitter_factor(profile: &ChannelProfile, frame_id: u64) -> f64 {
    let sigma = profile.jitter_sigma();
    if sigma == 0.0 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(profile.seed, frame_id));
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    (1.0 + noise.sample(&mut rng)).clamp(JITTER_FLOOR, JITTER_CEIL)
}

pub fn effective_throughput(profile: &ChannelProfile, frame_id: u64) -> f64 {
    profile.throughput_bps * jitter_factor(profile, frame_id)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmitResult {
    pub bytes: u64,
    pub latency_s: f64,
    pub effective_throughput_bps: f64,
}

/// Streams share the medium: they overlap setup but not bandwidth.
pub fn transmit(profile: &ChannelProfile, streams: &[u64], frame_id: u64) -> Result<TransmitResult> {
    if streams.is_empty() {
        return Err(Error::EmptyStreams);
    }
    let bytes: u64 = streams.iter().sum();
    let eff = effective_throughput(profile, frame_id);
    Ok(TransmitResult {
        bytes,
        latency_s: profile.overhead_s + 8.0 * bytes as f64 / eff,
        effective_throughput_bps: eff,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopbackReceipt {
    pub result: TransmitResult,
    /// SHA-256 the receiver computed over what it read.
    pub received_digest: [u8; 32],
}

/// Sends `payload` over a TCP connection on 127.0.0.1 to a receiver thread, which
/// hashes what it reads and acknowledges with the digest. Latency is measured
/// from first write to acknowledgement.
pub fn loopback_transport(payload: &[u8]) -> Result<LoopbackReceipt> {
    let listener = TcpListener::bind((Ipv4Addr::LOCALHOST, 0)).map_err(Error::Transport)?;
    let addr = listener.local_addr().map_err(Error::Transport)?;
    let receiver = thread::spawn(move || -> std::io::Result<()> {
        let (mut conn, _) = listener.accept()?;
        let mut len = [0u8; 8];
        conn.read_exact(&mut len)?;
        let mut remaining = u64::from_le_bytes(len);
        let mut hasher = Sha256::new();
        let mut buf = vec![0u8; 64 * 1024];
        while remaining > 0 {
            let want = buf.len().min(remaining as usize);
            let n = conn.read(&mut buf[..want])?;
            if n == 0 {
                return Err(std::io::ErrorKind::UnexpectedEof.into());
            }
            hasher.update(&buf[..n]);
            remaining -= n as u64;
        }
        conn.write_all(&hasher.finalize())?;
        conn.flush()
    });

    let mut conn = TcpStream::connect(addr).map_err(Error::Transport)?;
    conn.set_nodelay(true).map_err(Error::Transport)?;
    let start = Instant::now();
    conn.write_all(&(payload.len() as u64).to_le_bytes())
        .map_err(Error::Transport)?;
    conn.write_all(payload).map_err(Error::Transport)?;
    let mut digest = [0u8; 32];
    conn.read_exact(&mut digest).map_err(Error::Transport)?;
    let latency_s = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    receiver
        .join()
        .map_err(|_| Error::Transport(std::io::Error::other("receiver thread panicked")))?
        .map_err(Error::Transport)?;

    let bytes = payload.len() as u64;
    Ok(LoopbackReceipt {
        result: TransmitResult {
            bytes,
            latency_s,
            effective_throughput_bps: 8.0 * bytes as f64 / latency_s,
        },
        received_digest: digest,
    })
}

pub fn sha256(payload: &[u8]) -> [u8; 32] {
    Sha256::digest(payload).into()
}
