//! Metrics, parameter sweeps and report emission.

pub mod metrics;
mod report;

use serde::{Deserialize, Serialize};

pub use metrics::{mean_psnr, psnr, psnr_sequence, time_saved};
pub use report::{Report, ReportFormat, ReportRow, CSV_HEADER};

use crate::channel::{AnalogReceiver, ChannelConfig};
use crate::codec::QuantBits;
use crate::parallel::{self, Execution};
use crate::protocol::{self, LinkConfig, MecServer, Scheme, SessionConfig};
use crate::scene::{generate_scene, SceneConfig};
use crate::{seed, Error, Result};

const VIDEO_ID: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub schemes: Vec<Scheme>,
    pub snr_grid: Vec<f64>,
    pub dbf_proportions: Vec<f64>,
    /// Number of channel realisations averaged per cell.
    pub n_seeds: usize,
    pub bandwidth_hz: f64,
    pub spectral_efficiency: f64,
    pub quant_bits: QuantBits,
    pub noiseless: bool,
    pub receiver: AnalogReceiver,
    pub viewpoint: u32,
    pub scene: SceneConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schemes: Scheme::ALL.to_vec(),
            snr_grid: vec![-9.0, -6.0, -3.0, 0.0, 3.0, 6.0],
            dbf_proportions: vec![0.25, 0.5, 1.0],
            n_seeds: 10,
            bandwidth_hz: 1e6,
            spectral_efficiency: 1.0,
            quant_bits: QuantBits::FULL,
            noiseless: false,
            receiver: AnalogReceiver::default(),
            viewpoint: 1,
            scene: SceneConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.schemes.is_empty() {
            return bad("no schemes");
        }
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| !s.is_finite()) {
            return bad("snr grid must be nonempty and finite");
        }
        if self.dbf_proportions.is_empty() {
            return bad("no dbf proportions");
        }
        if let Some(p) = self.dbf_proportions.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(Error::InvalidProportion(*p));
        }
        if self.n_seeds == 0 {
            return bad("n_seeds must be at least 1");
        }
        if !(self.bandwidth_hz > 0.0 && self.spectral_efficiency > 0.0) {
            return bad("bandwidth and spectral efficiency must be positive");
        }
        self.scene.validate()
    }

    fn link(&self) -> LinkConfig {
        LinkConfig {
            bandwidth_hz: self.bandwidth_hz,
            spectral_efficiency: self.spectral_efficiency,
        }
    }

    /// (scheme, dbf) pairs in report order. Conventional gets a single
    /// full-rate entry.
    fn variants(&self) -> Vec<(Scheme, Option<f64>)> {
        let mut schemes = self.schemes.clone();
        schemes.sort();
        schemes.dedup();
        let mut dbfs = self.dbf_proportions.clone();
        dbfs.sort_by(f64::total_cmp);
        dbfs.dedup();
        schemes
            .into_iter()
            .flat_map(|s| {
                if s.uses_dbf() {
                    dbfs.iter().map(|&p| (s, Some(p))).collect()
                } else {
                    vec![(s, None)]
                }
            })
            .collect()
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    run_experiment_with(config, Execution::default())
}

struct Cell {
    scheme: Scheme,
    dbf: Option<f64>,
    snr_db: f64,
    seed_idx: u64,
}

struct CellResult {
    psnr: f64,
    bits: u64,
}

pub fn run_experiment_with(config: &ExperimentConfig, exec: Execution) -> Result<Report> {
    config.validate()?;
    let scene = generate_scene(&config.scene)?;
    let server = MecServer::single(VIDEO_ID, scene, 0);
    let mut snrs = config.snr_grid.clone();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    let variants = config.variants();

    let mut cells = Vec::new();
    for &(scheme, dbf) in &variants {
        for &snr_db in &snrs {
            for seed_idx in 0..config.n_seeds as u64 {
                cells.push(Cell {
                    scheme,
                    dbf,
                    snr_db,
                    seed_idx,
                });
            }
        }
    }
    let results = parallel::try_map(exec, &cells, |cell| {
        let channel_seed = seed::derive(config.scene.seed, &[0xC4A7, cell.seed_idx]);
        let mut channel = ChannelConfig::new(cell.snr_db, channel_seed);
        channel.noiseless = config.noiseless;
        channel.receiver = config.receiver;
        let mut session = SessionConfig::new(VIDEO_ID, cell.scheme, cell.dbf.unwrap_or(1.0), channel);
        session.quant_bits = config.quant_bits;
        session.link = config.link();
        session.viewpoints = vec![config.viewpoint];
        let trace = protocol::run_session(&server, None, &session, Execution::Sequential)?;
        Ok::<_, Error>(CellResult {
            psnr: trace.viewpoints[0].mean_psnr(),
            bits: trace.total_bits(),
        })
    })?;

    // conventional bits do not depend on the channel, so one noiseless run fixes the baseline
    let baseline = {
        let session = SessionConfig::new(VIDEO_ID, Scheme::Conventional, 1.0, ChannelConfig::noiseless(0));
        let session = SessionConfig {
            viewpoints: vec![config.viewpoint],
            ..session
        };
        protocol::run_session(&server, None, &session, exec)?.total_bits()
    };
    let link = config.link();
    let per_cell = config.n_seeds;
    let mut rows = Vec::new();
    for (group, chunk) in cells.chunks(per_cell).zip(results.chunks(per_cell)) {
        let cell = &group[0];
        let bits = chunk[0].bits;
        if chunk.iter().any(|r| r.bits != bits) {
            return Err(Error::InvalidInput(format!(
                "bit count of {} varies across seeds",
                cell.scheme
            )));
        }
        let psnrs: Vec<f64> = chunk.iter().map(|r| r.psnr).collect();
        rows.push(ReportRow {
            scheme: cell.scheme,
            dbf: cell.dbf,
            snr_db: cell.snr_db,
            psnr_db: mean_psnr(&psnrs),
            total_bits: bits,
            tx_seconds: link.seconds(bits),
            time_saved_pct: time_saved(bits as f64, baseline as f64)?,
        });
    }
    Ok(Report::new(rows))
}

/// Bit counts reported for the reference run and the published savings.
pub const TABLE1_CONVENTIONAL_BITS: f64 = 2.83e7;
pub const TABLE1: [(&str, f64, f64); 6] = [
    ("WiserVR 100%", 1.81e6, 93.6),
    ("WiserVR 50%", 9.05e5, 96.8),
    ("WiserVR 25%", 4.53e5, 98.4),
    ("DeepJSCC 100%", 9.42e6, 66.7),
    ("DeepJSCC 50%", 4.71e6, 83.4),
    ("DeepJSCC 25%", 2.36e6, 91.7),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Check {
    pub label: &'static str,
    pub bits: f64,
    pub expected_pct: f64,
    pub computed_pct: f64,
    pub pass: bool,
}

/// Recomputes the time-saved column from the bit counts, within 0.05 points.
pub fn verify_table1() -> Vec<Table1Check> {
    TABLE1
        .iter()
        .map(|&(label, bits, expected_pct)| {
            let computed_pct = time_saved(bits, TABLE1_CONVENTIONAL_BITS).expect("nonzero baseline");
            Table1Check {
                label,
                bits,
                expected_pct,
                computed_pct,
                pass: (computed_pct - expected_pct).abs() <= 0.05,
            }
        })
        .collect()
}
