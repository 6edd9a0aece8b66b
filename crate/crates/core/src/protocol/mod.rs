//! Three-stage delivery session between an edge server and one user.
//!
//! The initial stage caches content and binds encoders to knowledge bases.
//! Preparation selects the encoder and shares knowledge if the user's KB is
//! missing or stale; its cost is booked to preparation time only. Each
//! delivery round encodes every tile of the requested viewpoint, frames the
//! payloads into packets, sends them over the channel and rebuilds the FOV.

mod kb;
pub mod packet;
pub mod state;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use kb::{needs_knowledge_sharing, KnowledgeBase};
pub use packet::{decapsulate, encapsulate, PacketMeta, Scheme, HEADER_LEN};
pub use state::{step, Action, Event, Phase, SessionState};

use crate::channel::{self, ChannelConfig};
use crate::codec::{self, Payload, PayloadType, QuantBits};
use crate::harness::metrics::{mean_psnr, psnr_sequence};
use crate::parallel::{self, Execution};
use crate::reconstruct::{self, RecoveredTileVideo};
use crate::scene::{self, Frame, Scene, TileIndex};
use crate::slg;
use crate::{seed, Error, Result};

/// Link rate model: seconds = bits / (bandwidth * spectral efficiency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub bandwidth_hz: f64,
    pub spectral_efficiency: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            bandwidth_hz: 1e6,
            spectral_efficiency: 1.0,
        }
    }
}

impl LinkConfig {
    pub fn seconds(&self, bits: u64) -> f64 {
        bits as f64 / (self.bandwidth_hz * self.spectral_efficiency)
    }
}

/// Edge server content: cached videos and the KB each encoder is bound to.
#[derive(Debug, Clone, Default)]
pub struct MecServer {
    pub videos: BTreeMap<u32, Scene>,
    pub kbs: BTreeMap<u32, KnowledgeBase>,
}

impl MecServer {
    /// A server hosting one video under KB id 1, version 1.
    pub fn single(video_id: u32, scene: Scene, kb_size_bits: u64) -> Self {
        MecServer {
            videos: BTreeMap::from([(video_id, scene)]),
            kbs: BTreeMap::from([(
                video_id,
                KnowledgeBase {
                    kb_id: 1,
                    video_id,
                    version: 1,
                    size_bits: kb_size_bits,
                },
            )]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub video_id: u32,
    pub scheme: Scheme,
    pub dbf_proportion: f64,
    pub quant_bits: QuantBits,
    pub channel: ChannelConfig,
    pub link: LinkConfig,
    pub viewpoints: Vec<u32>,
    /// Keep recovered FOV frames in the trace.
    #[serde(default)]
    pub keep_frames: bool,
}

impl SessionConfig {
    pub fn new(video_id: u32, scheme: Scheme, dbf_proportion: f64, channel: ChannelConfig) -> Self {
        SessionConfig {
            video_id,
            scheme,
            dbf_proportion,
            quant_bits: QuantBits::FULL,
            channel,
            link: LinkConfig::default(),
            viewpoints: vec![1],
            keep_frames: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub tile_id: u16,
    pub frame_idx: u16,
    pub payload_type: PayloadType,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewpointTrace {
    pub viewpoint: u32,
    pub packets: Vec<PacketRecord>,
    pub total_bits: u64,
    /// Per FOV frame; `None` encodes an exact (infinite PSNR) frame.
    pub psnr_db: Vec<Option<f64>>,
    pub mean_psnr_db: Option<f64>,
    pub calibration_flags: usize,
    pub delivery_seconds: f64,
    #[serde(skip)]
    pub recovered: Vec<Frame>,
}

impl ViewpointTrace {
    pub fn psnr_values(&self) -> Vec<f64> {
        self.psnr_db.iter().map(|p| p.unwrap_or(f64::INFINITY)).collect()
    }

    pub fn mean_psnr(&self) -> f64 {
        self.mean_psnr_db.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyLedger {
    /// Knowledge sharing and setup; excluded from the delivery budget.
    pub preparation_time: f64,
    /// Payload transmission only.
    pub delivery_time: f64,
    pub per_viewpoint: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub from: Phase,
    pub event: Event,
    pub to: Phase,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub video_id: u32,
    pub scheme: Scheme,
    pub dbf_proportion: Option<f64>,
    /// KB the selected encoder/decoder pair is bound to.
    pub encoder_kb_id: u32,
    pub knowledge_shares: usize,
    pub transitions: Vec<TransitionRecord>,
    pub viewpoints: Vec<ViewpointTrace>,
    pub ledger: LatencyLedger,
    pub final_state: SessionState,
}

impl SessionTrace {
    pub fn total_bits(&self) -> u64 {
        self.viewpoints.iter().map(|v| v.total_bits).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Driver {
    state: SessionState,
    transitions: Vec<TransitionRecord>,
}

impl Driver {
    fn fire(&mut self, event: Event) -> Result<Vec<Action>> {
        let (next, actions) = step(&self.state, event)?;
        self.transitions.push(TransitionRecord {
            from: self.state.phase,
            event,
            to: next.phase,
            actions: actions.clone(),
        });
        self.state = next;
        Ok(actions)
    }
}

/// Runs a full session. `user_kb` is the KB the user holds on arrival.
pub fn run_session(
    server: &MecServer,
    mut user_kb: Option<KnowledgeBase>,
    cfg: &SessionConfig,
    exec: Execution,
) -> Result<SessionTrace> {
    let server_kb = *server
        .kbs
        .get(&cfg.video_id)
        .ok_or(Error::ServiceUnavailable(cfg.video_id))?;
    let scene = server
        .videos
        .get(&cfg.video_id)
        .ok_or(Error::ServiceUnavailable(cfg.video_id))?;
    let dbf = codec::select_dbf_indices(scene.n_frames(), cfg.dbf_proportion)?;
    let layout = scene.config.fov_layout();
    for &v in &cfg.viewpoints {
        scene::fov_tiles(v, &layout)?;
    }

    let mut driver = Driver {
        state: SessionState::default(),
        transitions: Vec::new(),
    };
    let mut ledger = LatencyLedger::default();
    let mut shares = 0;
    let mut prepare = |actions: Vec<Action>, ledger: &mut LatencyLedger| {
        if actions.contains(&Action::ShareKnowledge) && needs_knowledge_sharing(&server_kb, user_kb.as_ref()) {
            ledger.preparation_time += cfg.link.seconds(server_kb.size_bits);
            user_kb = Some(server_kb);
            shares += 1;
        }
    };

    driver.fire(Event::CacheComplete)?;
    let actions = driver.fire(Event::ServiceRequest)?;
    prepare(actions, &mut ledger);
    driver.fire(Event::KnowledgeShared)?;

    let mut viewpoints = Vec::with_capacity(cfg.viewpoints.len());
    for (round, &v) in cfg.viewpoints.iter().enumerate() {
        if driver.state.phase == Phase::Preparing {
            driver.fire(Event::KnowledgeShared)?;
        }
        driver.fire(Event::ViewpointRequest(v))?;
        let trace = deliver_viewpoint(scene, v, round as u64, &dbf, cfg, exec)?;
        ledger.delivery_time += trace.delivery_seconds;
        ledger.per_viewpoint.push((v, trace.delivery_seconds));
        viewpoints.push(trace);
        let actions = driver.fire(Event::ViewpointDelivered)?;
        prepare(actions, &mut ledger);
    }
    driver.fire(Event::SessionEnd)?;

    Ok(SessionTrace {
        video_id: cfg.video_id,
        scheme: cfg.scheme,
        dbf_proportion: cfg.scheme.uses_dbf().then_some(cfg.dbf_proportion),
        encoder_kb_id: server_kb.kb_id,
        knowledge_shares: shares,
        transitions: driver.transitions,
        viewpoints,
        ledger,
        final_state: driver.state,
    })
}

struct TileOutcome {
    packets: Vec<PacketRecord>,
    bits: u64,
    video: RecoveredTileVideo,
    truth: Vec<Frame>,
}

fn deliver_viewpoint(
    scene: &Scene,
    viewpoint: u32,
    round: u64,
    dbf: &[usize],
    cfg: &SessionConfig,
    exec: Execution,
) -> Result<ViewpointTrace> {
    let tiles = scene::fov_tiles(viewpoint, &scene.config.fov_layout())?;
    let outcomes = parallel::try_map(exec, &tiles, |&t| deliver_tile(scene, t, round, dbf, cfg))?;
    let n = scene.n_frames();
    let grid_cols = scene.config.grid_cols;
    let mut recovered = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for k in 0..n {
        let rec: Vec<&Frame> = outcomes.iter().map(|o| &o.video.frames[k]).collect();
        let gt: Vec<&Frame> = outcomes.iter().map(|o| &o.truth[k]).collect();
        recovered.push(reconstruct::stitch(&rec, grid_cols)?);
        truth.push(reconstruct::stitch(&gt, grid_cols)?);
    }
    let psnr = psnr_sequence(&truth, &recovered)?;
    let mean = mean_psnr(&psnr);
    let total_bits: u64 = outcomes.iter().map(|o| o.bits).sum();
    Ok(ViewpointTrace {
        viewpoint,
        packets: outcomes.iter().flat_map(|o| o.packets.iter().cloned()).collect(),
        total_bits,
        psnr_db: psnr.iter().map(|p| p.is_finite().then_some(*p)).collect(),
        mean_psnr_db: mean.is_finite().then_some(mean),
        calibration_flags: outcomes
            .iter()
            .map(|o| o.video.calibration_flags.iter().map(Vec::len).sum::<usize>())
            .sum(),
        delivery_seconds: cfg.link.seconds(total_bits),
        recovered: if cfg.keep_frames { recovered } else { Vec::new() },
    })
}

fn deliver_tile(scene: &Scene, tile: TileIndex, round: u64, dbf: &[usize], cfg: &SessionConfig) -> Result<TileOutcome> {
    let n = scene.n_frames();
    let dims = (scene.config.tile_height, scene.config.tile_width);
    let truth = (0..n)
        .map(|k| scene::render_frame(scene, tile, k))
        .collect::<Result<Vec<_>>>()?;
    let payloads: Vec<Payload> = match cfg.scheme {
        Scheme::WiserVr => {
            let segmaps = (0..n)
                .map(|k| scene::oracle_segment(scene, tile, k))
                .collect::<Result<Vec<_>>>()?;
            let graphs: Vec<_> = segmaps.iter().enumerate().map(|(k, m)| slg::build_slg(m, k)).collect();
            let classes = slg::classify_objects(&graphs, &segmaps)?;
            let (env, behaviors) = codec::encode_wiservr(&truth, &segmaps, &classes, dbf, cfg.quant_bits)?;
            std::iter::once(Payload::Environment(env))
                .chain(behaviors.into_iter().map(Payload::Behavior))
                .collect()
        }
        Scheme::DeepJscc => codec::encode_deepjscc(&truth, dbf, cfg.quant_bits)?
            .into_iter()
            .map(Payload::WholeFrame)
            .collect(),
        Scheme::Conventional => codec::encode_conventional(&truth)
            .into_iter()
            .map(Payload::Conventional)
            .collect(),
    };

    let tile_id = scene.tile_id(tile);
    let mut packets = Vec::with_capacity(payloads.len());
    let mut bits = 0u64;
    let mut received = Vec::with_capacity(payloads.len());
    for payload in &payloads {
        let meta = PacketMeta {
            scheme: cfg.scheme,
            tile_id,
            frame_idx: payload.frame_idx() as u16,
            payload_type: payload.payload_type(),
        };
        let wire = encapsulate(&meta, &payload.to_bytes()?)?;
        bits += 8 * wire.len() as u64;
        packets.push(PacketRecord {
            tile_id,
            frame_idx: meta.frame_idx,
            payload_type: meta.payload_type,
            bytes: wire.len(),
        });
        // headers and payload structure arrive intact; values go through the channel
        let (rx_meta, body) = decapsulate(&wire)?;
        let mut rx = Payload::from_bytes(rx_meta.payload_type, rx_meta.frame_idx as usize, &body, dims, cfg.quant_bits)?;
        let stream = seed::derive(
            cfg.channel.seed,
            &[round, tile_id as u64, rx_meta.frame_idx as u64, rx_meta.payload_type as u64],
        );
        apply_channel(&mut rx, cfg, stream);
        received.push(rx);
    }

    let video = match cfg.scheme {
        Scheme::WiserVr => {
            let mut env = None;
            let mut behaviors = Vec::new();
            for p in received {
                match p {
                    Payload::Environment(e) => env = Some(e),
                    Payload::Behavior(b) => behaviors.push(b),
                    _ => unreachable!("semantic scheme sends env and behavior payloads only"),
                }
            }
            let env = env.ok_or_else(|| Error::MalformedPayload("no environment payload".into()))?;
            reconstruct::recover_wiservr(&env, &behaviors, n, dims)?
        }
        Scheme::DeepJscc => {
            let frames: Vec<_> = received
                .into_iter()
                .filter_map(|p| match p {
                    Payload::WholeFrame(f) => Some(f),
                    _ => None,
                })
                .collect();
            reconstruct::recover_deepjscc(&frames, n, dims)?
        }
        Scheme::Conventional => {
            let streams: Vec<_> = received
                .into_iter()
                .filter_map(|p| match p {
                    Payload::Conventional(s) => Some(s),
                    _ => None,
                })
                .collect();
            reconstruct::recover_conventional(&streams, dims)?
        }
    };
    Ok(TileOutcome {
        packets,
        bits,
        video,
        truth,
    })
}

fn apply_channel(payload: &mut Payload, cfg: &SessionConfig, stream: u64) {
    match payload {
        Payload::Conventional(s) => {
            s.bits = channel::transmit_digital_bpsk(&s.bits, &cfg.channel, stream);
        }
        other => {
            let b = cfg.quant_bits;
            for (j, values) in other.analog_values_mut().into_iter().enumerate() {
                let block = seed::derive(stream, &[j as u64]);
                *values = channel::transmit_analog(values, b, &cfg.channel, block);
            }
        }
    }
}
