//! Source coding for the three delivery schemes.
//!
//! - Semantic scheme: one environment payload per tile plus one behavior
//!   payload per delivered frame, each behavior carrying the visible sprite
//!   of every dynamic object and its graph node.
//! - Whole-frame scheme: every delivered frame sent as quantized pixels.
//! - Conventional: every frame as raw 8-bit channel bits.
//!
//! Payload body layouts (all integers big-endian):
//!
//! ```text
//! env        : b u8 | 3HW values packed at b bits | node list (see slg)
//! behavior   : b u8 | count u16 | count x object
//!   object   : id u16 | z i32 | top u16 | left u16 | h u16 | w u16
//!              | mask bits packed (h*w) | 3m values packed at b bits | node
//! whole-frame: b u8 | 3HW values packed at b bits
//! conventional: 3HW bytes, channel values row-major
//! ```
//!
//! `H`, `W` are fixed for a session and not repeated per payload.

mod quant;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use quant::{dequantize, pack_values, packed_len, quantize, unpack_values, QuantBits};

use crate::protocol::packet::HEADER_LEN;
use crate::scene::{pack_bits, unpack_bits, Frame, SegmentationMap, Sprite};
use crate::slg::{self, ObjectClassification, ObjectRole, SlgNode};
use crate::wire::Reader;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadType {
    Environment = 0,
    Behavior = 1,
    WholeFrame = 2,
    Conventional = 3,
}

impl PayloadType {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => PayloadType::Environment,
            1 => PayloadType::Behavior,
            2 => PayloadType::WholeFrame,
            3 => PayloadType::Conventional,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvPayload {
    pub quant_bits: QuantBits,
    /// `3 * H * W` quantized channel values, row-major, interleaved RGB.
    pub values: Vec<u16>,
    /// Serialized node list of the environment objects.
    pub static_slg: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorObject {
    pub object_id: u16,
    pub z_order: i32,
    pub top: u16,
    pub left: u16,
    pub height: u16,
    pub width: u16,
    /// Visible-pixel mask over the bounding box, row-major.
    pub mask: Vec<bool>,
    /// Quantized RGB of the masked pixels, in mask order.
    pub values: Vec<u16>,
    pub node: SlgNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorPayload {
    pub frame_idx: usize,
    pub quant_bits: QuantBits,
    pub objects: Vec<BehaviorObject>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePayload {
    pub frame_idx: usize,
    pub quant_bits: QuantBits,
    pub values: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConventionalBitstream {
    pub frame_idx: usize,
    /// 8-bit big-endian channel values, row-major, one bit per entry.
    pub bits: Vec<bool>,
}

/// Any payload that can be packed into a packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Environment(EnvPayload),
    Behavior(BehaviorPayload),
    WholeFrame(FramePayload),
    Conventional(ConventionalBitstream),
}

impl Payload {
    pub fn payload_type(&self) -> PayloadType {
        match self {
            Payload::Environment(_) => PayloadType::Environment,
            Payload::Behavior(_) => PayloadType::Behavior,
            Payload::WholeFrame(_) => PayloadType::WholeFrame,
            Payload::Conventional(_) => PayloadType::Conventional,
        }
    }

    /// Frame index carried in the packet header (0 for environment payloads).
    pub fn frame_idx(&self) -> usize {
        match self {
            Payload::Environment(_) => 0,
            Payload::Behavior(p) => p.frame_idx,
            Payload::WholeFrame(p) => p.frame_idx,
            Payload::Conventional(p) => p.frame_idx,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        match self {
            Payload::Environment(p) => {
                out.push(p.quant_bits.get());
                out.extend(pack_values(&p.values, p.quant_bits));
                out.extend_from_slice(&p.static_slg);
            }
            Payload::Behavior(p) => {
                out.push(p.quant_bits.get());
                let count = u16::try_from(p.objects.len())
                    .map_err(|_| Error::InvalidInput("more than 65535 behavior objects".into()))?;
                out.extend_from_slice(&count.to_be_bytes());
                for o in &p.objects {
                    out.extend_from_slice(&o.object_id.to_be_bytes());
                    out.extend_from_slice(&o.z_order.to_be_bytes());
                    for v in [o.top, o.left, o.height, o.width] {
                        out.extend_from_slice(&v.to_be_bytes());
                    }
                    out.extend(pack_bits(&o.mask));
                    out.extend(pack_values(&o.values, p.quant_bits));
                    slg::write_node(&mut out, &o.node)?;
                }
            }
            Payload::WholeFrame(p) => out.extend(pack_values(&p.values, p.quant_bits)),
            Payload::Conventional(p) => out.extend(pack_bits(&p.bits)),
        }
        Ok(out)
    }

    /// Parses a payload body. `frame_idx` comes from the packet header;
    /// `dims` and `frame_bits` are session parameters (whole-frame payloads
    /// carry no depth field of their own).
    pub fn from_bytes(
        kind: PayloadType,
        frame_idx: usize,
        bytes: &[u8],
        dims: (usize, usize),
        frame_bits: QuantBits,
    ) -> Result<Payload> {
        let n_values = 3 * dims.0 * dims.1;
        let mut r = Reader::new(bytes);
        let payload = match kind {
            PayloadType::Environment => {
                let b = read_bits(&mut r)?;
                let values = unpack_values(r.bytes(packed_len(n_values, b))?, n_values, b)?;
                let static_slg = r.bytes(r.remaining())?.to_vec();
                Payload::Environment(EnvPayload {
                    quant_bits: b,
                    values,
                    static_slg,
                })
            }
            PayloadType::Behavior => {
                let b = read_bits(&mut r)?;
                let count = r.u16()?;
                let mut objects = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    let object_id = r.u16()?;
                    let z_order = r.i32()?;
                    let (top, left, height, width) = (r.u16()?, r.u16()?, r.u16()?, r.u16()?);
                    let area = height as usize * width as usize;
                    let mask = unpack_bits(r.bytes(area.div_ceil(8))?, area);
                    let m = mask.iter().filter(|&&x| x).count();
                    let values = unpack_values(r.bytes(packed_len(3 * m, b))?, 3 * m, b)?;
                    let node = slg::read_node(&mut r)?;
                    objects.push(BehaviorObject {
                        object_id,
                        z_order,
                        top,
                        left,
                        height,
                        width,
                        mask,
                        values,
                        node,
                    });
                }
                Payload::Behavior(BehaviorPayload {
                    frame_idx,
                    quant_bits: b,
                    objects,
                })
            }
            PayloadType::WholeFrame => {
                let b = frame_bits;
                let values = unpack_values(r.bytes(packed_len(n_values, b))?, n_values, b)?;
                Payload::WholeFrame(FramePayload {
                    frame_idx,
                    quant_bits: b,
                    values,
                })
            }
            PayloadType::Conventional => {
                let bits = unpack_bits(r.bytes(n_values)?, 8 * n_values);
                Payload::Conventional(ConventionalBitstream { frame_idx, bits })
            }
        };
        if r.remaining() != 0 {
            return Err(Error::MalformedPayload(format!(
                "{} trailing bytes in {kind:?} payload",
                r.remaining()
            )));
        }
        Ok(payload)
    }

    /// Channel-value fields that travel through the analog link.
    pub fn analog_values_mut(&mut self) -> Vec<&mut Vec<u16>> {
        match self {
            Payload::Environment(p) => vec![&mut p.values],
            Payload::Behavior(p) => p.objects.iter_mut().map(|o| &mut o.values).collect(),
            Payload::WholeFrame(p) => vec![&mut p.values],
            Payload::Conventional(_) => vec![],
        }
    }
}

fn read_bits(r: &mut Reader<'_>) -> Result<QuantBits> {
    QuantBits::new(r.u8()?).map_err(|e| Error::MalformedPayload(e.to_string()))
}

/// Bits needed to deliver `payload`: packet header plus the encoded body.
/// Values are counted at `b` bits each, graph nodes at 8 bits per byte, and
/// each packed section is padded to a byte boundary.
pub fn payload_bits(payload: &Payload) -> Result<u64> {
    Ok(8 * (HEADER_LEN + payload.to_bytes()?.len()) as u64)
}

/// Delivered frame indices: `k = max(2, round(p * n))` evenly spaced anchors
/// including both ends.
pub fn select_dbf_indices(n_frames: usize, proportion: f64) -> Result<Vec<usize>> {
    if !(proportion > 0.0 && proportion <= 1.0) {
        return Err(Error::InvalidProportion(proportion));
    }
    if n_frames < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 frames, got {n_frames}")));
    }
    let k = ((proportion * n_frames as f64 + 0.5).floor() as usize).clamp(2, n_frames);
    let (span, steps) = (n_frames - 1, k - 1);
    // round-half-up of i * span / steps
    Ok((0..k).map(|i| (2 * i * span + steps) / (2 * steps)).collect())
}

fn quantize_all(values: impl IntoIterator<Item = u8>, b: QuantBits) -> Vec<u16> {
    values.into_iter().map(|v| quantize(v, b)).collect()
}

fn check_dbf(dbf: &[usize], n_frames: usize) -> Result<()> {
    if dbf.is_empty() {
        return Err(Error::InvalidInput("no delivered frames".into()));
    }
    if let Some(&bad) = dbf.iter().find(|&&i| i >= n_frames) {
        return Err(Error::Index {
            what: "delivered frame",
            index: bad,
            limit: n_frames,
        });
    }
    Ok(())
}

/// The environment frame seen by the encoder: each pixel taken from the
/// first frame where it shows background or an environment object.
/// Pixels covered by behaviors in every frame keep their frame-0 value.
pub fn environment_frame(
    frames: &[Frame],
    segmaps: &[SegmentationMap],
    classification: &ObjectClassification,
) -> Result<Frame> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidInput("no frames".into()))?;
    let (h, w) = first.dims();
    let is_static = |id: u16| id == 0 || classification.get(&id) == Some(&ObjectRole::Environment);
    let mut env = first.clone();
    for r in 0..h {
        for c in 0..w {
            if let Some(k) = segmaps.iter().position(|m| is_static(m.id_at(r, c))) {
                env.set(r, c, frames[k].get(r, c));
            }
        }
    }
    Ok(env)
}

/// Semantic encoder for one tile.
pub fn encode_wiservr(
    frames: &[Frame],
    segmaps: &[SegmentationMap],
    classification: &ObjectClassification,
    dbf: &[usize],
    b: QuantBits,
) -> Result<(EnvPayload, Vec<BehaviorPayload>)> {
    if frames.len() != segmaps.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} frames but {} segmentation maps",
            frames.len(),
            segmaps.len()
        )));
    }
    check_dbf(dbf, frames.len())?;
    let env = environment_frame(frames, segmaps, classification)?;
    let static_nodes: Vec<SlgNode> = slg::build_slg(&segmaps[0], 0)
        .nodes
        .into_iter()
        .filter(|n| classification.get(&n.object_id) == Some(&ObjectRole::Environment))
        .collect();
    let env_payload = EnvPayload {
        quant_bits: b,
        values: quantize_all(env.channel_values(), b),
        static_slg: slg::encode_nodes(&static_nodes)?,
    };
    let behaviors = dbf
        .iter()
        .map(|&k| encode_behavior_frame(&frames[k], &segmaps[k], classification, k, b))
        .collect::<Result<Vec<_>>>()?;
    Ok((env_payload, behaviors))
}

fn encode_behavior_frame(
    frame: &Frame,
    segmap: &SegmentationMap,
    classification: &ObjectClassification,
    frame_idx: usize,
    b: QuantBits,
) -> Result<BehaviorPayload> {
    let masks: BTreeMap<u16, Vec<(usize, usize)>> = segmap.masks();
    let mut objects = Vec::new();
    for (id, pixels) in masks {
        if classification.get(&id) != Some(&ObjectRole::Behavior) {
            continue;
        }
        let top = pixels.iter().map(|p| p.0).min().unwrap();
        let bottom = pixels.iter().map(|p| p.0).max().unwrap();
        let left = pixels.iter().map(|p| p.1).min().unwrap();
        let right = pixels.iter().map(|p| p.1).max().unwrap();
        let (bh, bw) = (bottom - top + 1, right - left + 1);
        let mut mask = vec![false; bh * bw];
        for &(r, c) in &pixels {
            mask[(r - top) * bw + (c - left)] = true;
        }
        // pixels are row-major, which is also mask order
        let values = quantize_all(pixels.iter().flat_map(|&(r, c)| frame.get(r, c)), b);
        let label = &segmap.labels[&id];
        objects.push(BehaviorObject {
            object_id: id,
            z_order: label.z_order,
            top: top as u16,
            left: left as u16,
            height: bh as u16,
            width: bw as u16,
            mask,
            values,
            node: SlgNode {
                object_id: id,
                centroid: slg::centroid(pixels.iter().copied())?,
                class_label: label.class_label.clone(),
                semantic_label: label.semantic_label.clone(),
            },
        });
    }
    Ok(BehaviorPayload {
        frame_idx,
        quant_bits: b,
        objects,
    })
}

/// Whole-frame encoder: one payload per delivered frame.
pub fn encode_deepjscc(frames: &[Frame], dbf: &[usize], b: QuantBits) -> Result<Vec<FramePayload>> {
    check_dbf(dbf, frames.len())?;
    Ok(dbf
        .iter()
        .map(|&k| FramePayload {
            frame_idx: k,
            quant_bits: b,
            values: quantize_all(frames[k].channel_values(), b),
        })
        .collect())
}

/// Fixed-length 8-bit code for every frame.
pub fn encode_conventional(frames: &[Frame]) -> Vec<ConventionalBitstream> {
    frames
        .iter()
        .enumerate()
        .map(|(k, f)| ConventionalBitstream {
            frame_idx: k,
            bits: f
                .channel_values()
                .into_iter()
                .flat_map(|v| (0..8).rev().map(move |i| v >> i & 1 == 1))
                .collect(),
        })
        .collect()
}

fn dequantize_frame(values: &[u16], b: QuantBits, dims: (usize, usize)) -> Result<Frame> {
    let bytes: Vec<u8> = values.iter().map(|&q| dequantize(q, b)).collect();
    Frame::from_channel_values(dims.0, dims.1, &bytes)
        .map_err(|e| Error::MalformedPayload(e.to_string()))
}

/// Environment frame plus the still-serialized static graph.
pub fn decode_env(payload: &EnvPayload, dims: (usize, usize)) -> Result<Frame> {
    dequantize_frame(&payload.values, payload.quant_bits, dims)
}

/// A received behavior sprite positioned as sent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedSprite {
    pub object_id: u16,
    pub z_order: i32,
    pub top: i64,
    pub left: i64,
    pub sprite: Sprite,
    pub node: SlgNode,
}

pub fn decode_behavior(payload: &BehaviorPayload) -> Result<Vec<DecodedSprite>> {
    let b = payload.quant_bits;
    payload
        .objects
        .iter()
        .map(|o| {
            let (h, w) = (o.height as usize, o.width as usize);
            if o.mask.len() != h * w {
                return Err(Error::MalformedPayload(format!("object {} mask size", o.object_id)));
            }
            let m = o.mask.iter().filter(|&&x| x).count();
            if o.values.len() != 3 * m {
                return Err(Error::MalformedPayload(format!("object {} value count", o.object_id)));
            }
            let mut colors = o.values.chunks_exact(3).map(|c| {
                [dequantize(c[0], b), dequantize(c[1], b), dequantize(c[2], b)]
            });
            let rgb = o
                .mask
                .iter()
                .map(|&covered| if covered { colors.next().unwrap() } else { [0; 3] })
                .collect();
            let sprite = Sprite::new(h, w, rgb, o.mask.clone())
                .map_err(|e| Error::MalformedPayload(format!("object {}: {e}", o.object_id)))?;
            Ok(DecodedSprite {
                object_id: o.object_id,
                z_order: o.z_order,
                top: o.top as i64,
                left: o.left as i64,
                sprite,
                node: o.node.clone(),
            })
        })
        .collect()
}

pub fn decode_frame(payload: &FramePayload, dims: (usize, usize)) -> Result<Frame> {
    dequantize_frame(&payload.values, payload.quant_bits, dims)
}

pub fn decode_conventional(stream: &ConventionalBitstream, dims: (usize, usize)) -> Result<Frame> {
    if stream.bits.len() != 24 * dims.0 * dims.1 {
        return Err(Error::MalformedPayload(format!(
            "{} bits for a {}x{} frame",
            stream.bits.len(),
            dims.0,
            dims.1
        )));
    }
    let bytes: Vec<u8> = stream
        .bits
        .chunks_exact(8)
        .map(|byte| byte.iter().fold(0u8, |acc, &bit| acc << 1 | bit as u8))
        .collect();
    Frame::from_channel_values(dims.0, dims.1, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ObjectLabel;

    #[test]
    fn dbf_examples() {
        assert_eq!(select_dbf_indices(20, 1.0).unwrap(), (0..20).collect::<Vec<_>>());
        assert_eq!(select_dbf_indices(20, 0.25).unwrap(), vec![0, 5, 10, 14, 19]);
        assert_eq!(select_dbf_indices(2, 0.25).unwrap(), vec![0, 1]);
        assert!(matches!(select_dbf_indices(20, 0.0), Err(Error::InvalidProportion(_))));
        assert!(matches!(select_dbf_indices(20, 1.5), Err(Error::InvalidProportion(_))));
        assert!(select_dbf_indices(20, f64::NAN).is_err());
    }

    #[test]
    fn conventional_sizes_and_identity() {
        let f = Frame::filled(64, 64, [1, 128, 255]);
        let streams = encode_conventional(&vec![f.clone(); 20]);
        assert_eq!(streams.len(), 20);
        assert!(streams.iter().all(|s| s.bits.len() == 98_304));
        assert_eq!(decode_conventional(&streams[3], (64, 64)).unwrap(), f);
        let p = Payload::Conventional(streams[0].clone());
        assert_eq!(payload_bits(&p).unwrap(), 98_304 + 8 * HEADER_LEN as u64);
    }

    #[test]
    fn whole_frame_bits() {
        let f = Frame::filled(64, 64, [7, 7, 7]);
        let ps = encode_deepjscc(&[f.clone(), f.clone()], &[0, 1], QuantBits::FULL).unwrap();
        assert_eq!(ps.len(), 2);
        let bits = payload_bits(&Payload::WholeFrame(ps[0].clone())).unwrap();
        assert_eq!(bits, 98_304 + 8 * HEADER_LEN as u64);
        assert_eq!(decode_frame(&ps[1], (64, 64)).unwrap(), f);
    }

    fn background_map(h: usize, w: usize) -> SegmentationMap {
        SegmentationMap {
            height: h,
            width: w,
            ids: vec![0; h * w],
            labels: BTreeMap::new(),
        }
    }

    #[test]
    fn all_background_env_bits() {
        let f = Frame::filled(64, 64, [50, 60, 70]);
        let m = background_map(64, 64);
        let (env, beh) = encode_wiservr(
            &[f.clone(), f.clone()],
            &[m.clone(), m],
            &ObjectClassification::new(),
            &[0, 1],
            QuantBits::FULL,
        )
        .unwrap();
        assert_eq!(beh.len(), 2);
        assert!(beh.iter().all(|b| b.objects.is_empty()));
        assert_eq!(env.static_slg, vec![0, 0]);
        let bits = payload_bits(&Payload::Environment(env.clone())).unwrap();
        assert_eq!(bits, 98_304 + 2 * 8 + 8 * (1 + HEADER_LEN as u64));
        assert_eq!(decode_env(&env, (64, 64)).unwrap(), f);
        assert!(decode_behavior(&beh[0]).unwrap().is_empty());
        assert!(matches!(
            encode_wiservr(&[f], &[background_map(64, 64)], &ObjectClassification::new(), &[], QuantBits::FULL),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn behavior_payload_round_trips_through_bytes() {
        let mut m = background_map(4, 4);
        m.ids[5] = 3;
        m.ids[6] = 3;
        m.ids[10] = 3;
        m.labels.insert(
            3,
            ObjectLabel {
                class_label: "dog".into(),
                semantic_label: "a brown dog".into(),
                z_order: 9,
            },
        );
        let f = Frame::from_pixels(4, 4, (0..16).map(|i| [i as u8, 2 * i as u8, 3 * i as u8]).collect()).unwrap();
        let cls = ObjectClassification::from([(3, ObjectRole::Behavior)]);
        let b4 = QuantBits::new(4).unwrap();
        let p = encode_behavior_frame(&f, &m, &cls, 2, b4).unwrap();
        let o = &p.objects[0];
        assert_eq!((o.top, o.left, o.height, o.width), (1, 1, 2, 2));
        assert_eq!(o.mask, vec![true, true, false, true]);
        assert_eq!(o.values.len(), 9);
        let payload = Payload::Behavior(p.clone());
        let bytes = payload.to_bytes().unwrap();
        let back = Payload::from_bytes(PayloadType::Behavior, 2, &bytes, (4, 4), QuantBits::FULL).unwrap();
        assert_eq!(back, payload);
        assert!(matches!(
            Payload::from_bytes(PayloadType::Behavior, 2, &bytes[..bytes.len() - 1], (4, 4), QuantBits::FULL),
            Err(Error::MalformedPayload(_))
        ));
        let sprites = decode_behavior(&p).unwrap();
        assert_eq!(sprites[0].sprite.mask_len(), 3);
        assert_eq!(sprites[0].z_order, 9);
    }
}
