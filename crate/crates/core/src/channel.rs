//! AWGN link models.
//!
//! The analog path carries quantized values as amplitude symbols and degrades
//! gradually with noise. The digital path sends raw bits as BPSK with hard
//! decisions, which is exact at high SNR and collapses at low SNR.
//! Control fields (packet headers, masks, boxes, graph nodes) never pass
//! through here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codec::QuantBits;

/// Estimator applied to received analog symbols before clamping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalogReceiver {
    /// Mean removed at the transmitter, linear MMSE shrinkage at the receiver.
    #[default]
    Lmmse,
    /// Plain rescale of the received symbols.
    ZeroForcing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    Analog,
    DigitalBpsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub seed: u64,
    /// Skip noise entirely (the infinite-SNR limit).
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub receiver: AnalogReceiver,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        ChannelConfig {
            snr_db,
            seed,
            noiseless: false,
            receiver: AnalogReceiver::default(),
        }
    }

    pub fn noiseless(seed: u64) -> Self {
        ChannelConfig {
            noiseless: true,
            ..ChannelConfig::new(f64::INFINITY, seed)
        }
    }

    pub fn noise_variance(&self) -> f64 {
        if self.noiseless {
            0.0
        } else {
            noise_variance(self.snr_db)
        }
    }
}

/// Noise variance at unit signal power: `10^(-snr_db / 10)`.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Scales `symbols` to unit mean-square power. Returns the scaled symbols and
/// the factor that restores the originals; an all-zero input is sent as zeros
/// with scale 0.
pub fn normalize_power(symbols: &[f64]) -> (Vec<f64>, f64) {
    if symbols.is_empty() {
        return (Vec::new(), 0.0);
    }
    let power = symbols.iter().map(|s| s * s).sum::<f64>() / symbols.len() as f64;
    if power == 0.0 {
        return (vec![0.0; symbols.len()], 0.0);
    }
    let scale = power.sqrt();
    (symbols.iter().map(|s| s / scale).collect(), scale)
}

/// Adds i.i.d. zero-mean Gaussian noise of variance `10^(-snr_db/10)`.
pub fn awgn(symbols: &[f64], snr_db: f64, seed: u64) -> Vec<f64> {
    add_noise(symbols, noise_variance(snr_db).sqrt(), seed)
}

fn add_noise(symbols: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    symbols
        .iter()
        .map(|&x| {
            let n: f64 = StandardNormal.sample(&mut rng);
            x + sigma * n
        })
        .collect()
}

/// Sends quantized values over the analog link and returns the received
/// values, rounded and clamped to `[0, 2^b - 1]`.
pub fn transmit_analog(values: &[u16], b: QuantBits, cfg: &ChannelConfig, seed: u64) -> Vec<u16> {
    if values.is_empty() {
        return Vec::new();
    }
    let top = b.max_value() as f64;
    let symbols: Vec<f64> = values.iter().map(|&v| 2.0 * v as f64 / top - 1.0).collect();
    let received = if cfg.noiseless {
        symbols
    } else {
        let var = cfg.noise_variance();
        match cfg.receiver {
            AnalogReceiver::ZeroForcing => {
                let (x, scale) = normalize_power(&symbols);
                add_noise(&x, var.sqrt(), seed).into_iter().map(|y| y * scale).collect()
            }
            AnalogReceiver::Lmmse => {
                let mean = symbols.iter().sum::<f64>() / symbols.len() as f64;
                let centred: Vec<f64> = symbols.iter().map(|s| s - mean).collect();
                let (x, scale) = normalize_power(&centred);
                let gain = 1.0 / (1.0 + var);
                add_noise(&x, var.sqrt(), seed)
                    .into_iter()
                    .map(|y| mean + scale * gain * y)
                    .collect()
            }
        }
    };
    received
        .into_iter()
        .map(|s| {
            let s = s.clamp(-1.0, 1.0);
            ((s + 1.0) / 2.0 * top).round().clamp(0.0, top) as u16
        })
        .collect()
}

/// BPSK over AWGN with hard decisions (`1 -> +1`, `0 -> -1`, ties decide 1).
///
/// The noise variance is the complex baseband total; BPSK occupies the
/// in-phase rail only and sees half of it, giving a flip probability of
/// `Q(sqrt(2 * snr))`. Analog values ride both rails of unit-power complex
/// symbols, which is the per-value variance [`awgn`] applies.
pub fn transmit_digital_bpsk(bits: &[bool], cfg: &ChannelConfig, seed: u64) -> Vec<bool> {
    if cfg.noiseless {
        return bits.to_vec();
    }
    let sigma = (cfg.noise_variance() / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bits.iter()
        .map(|&bit| {
            let x = if bit { 1.0 } else { -1.0 };
            let n: f64 = StandardNormal.sample(&mut rng);
            x + sigma * n >= 0.0
        })
        .collect()
}
