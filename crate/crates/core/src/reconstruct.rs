//! Receiver-side recovery: environment rebuild, behavior interpolation for
//! frames that were not delivered, compositing, and FOV stitching.

use num_traits::Signed;
use std::collections::BTreeMap;
use std::path::Path;

use crate::codec::{self, BehaviorPayload, ConventionalBitstream, DecodedSprite, EnvPayload, FramePayload};
use crate::rational::{round_half_up, Point, Rational};
use crate::scene::Frame;
use crate::slg::{self, SlgNode};
use crate::{Error, Result};

/// Largest per-axis gap between a painted centroid and its graph node that
/// still counts as calibrated.
pub fn calibration_tolerance() -> Rational {
    Rational::new(1, 2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredTileVideo {
    pub frames: Vec<Frame>,
    /// Per frame, ids of objects painted away from their graph node.
    pub calibration_flags: Vec<Vec<u16>>,
    /// False when the static graph could not be parsed.
    pub calibration_available: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredEnvironment {
    pub frame: Frame,
    /// `None` when the static graph was malformed; reconstruction continues
    /// without it.
    pub static_nodes: Option<Vec<SlgNode>>,
}

pub fn reconstruct_environment(env: &EnvPayload, dims: (usize, usize)) -> Result<RecoveredEnvironment> {
    let frame = codec::decode_env(env, dims)?;
    let static_nodes = slg::decode_nodes(&env.static_slg).ok();
    Ok(RecoveredEnvironment { frame, static_nodes })
}

/// Behaviors at `target`: passed through when delivered, otherwise each
/// object's centroid is interpolated between the bracketing delivered frames
/// and the sprite taken from the nearer one (ties go to the earlier frame).
/// Objects seen in only one bracket are carried from it unchanged.
pub fn interpolate_behavior(
    delivered: &BTreeMap<usize, Vec<DecodedSprite>>,
    target: usize,
) -> Result<Vec<DecodedSprite>> {
    if let Some(exact) = delivered.get(&target) {
        return Ok(exact.clone());
    }
    let (first, last) = match (delivered.keys().next(), delivered.keys().next_back()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::InvalidInput("no delivered behavior frames".into())),
    };
    if target < first || target > last {
        return Err(Error::ExtrapolationUnsupported { target, first, last });
    }
    let (&a, before) = delivered.range(..target).next_back().expect("target > first");
    let (&c, after) = delivered.range(target + 1..).next().expect("target < last");
    let t = Rational::new((target - a) as i64, (c - a) as i64);
    let nearer_is_a = 2 * target <= a + c;

    let mut out = Vec::new();
    for s in before {
        match after.iter().find(|o| o.object_id == s.object_id) {
            Some(o) => {
                let centroid = s.node.centroid.lerp(o.node.centroid, t);
                let src = if nearer_is_a { s } else { o };
                let (top, left) = src.sprite.placement_for(centroid);
                out.push(DecodedSprite {
                    top,
                    left,
                    node: SlgNode {
                        centroid,
                        ..src.node.clone()
                    },
                    ..src.clone()
                });
            }
            None => out.push(s.clone()),
        }
    }
    for o in after {
        if !before.iter().any(|s| s.object_id == o.object_id) {
            out.push(o.clone());
        }
    }
    out.sort_by_key(|s| s.object_id);
    Ok(out)
}

/// Paints the environment and then the sprites in ascending z-order, and
/// flags every sprite whose painted centroid strays from its received node by
/// more than [`calibration_tolerance`] on either axis.
pub fn composite(env_frame: &Frame, sprites: &[DecodedSprite], received_nodes: &[SlgNode]) -> (Frame, Vec<u16>) {
    let mut order: Vec<&DecodedSprite> = sprites.iter().collect();
    order.sort_by_key(|s| s.z_order);
    let mut frame = env_frame.clone();
    let tol = calibration_tolerance();
    let mut flags = Vec::new();
    for s in order {
        s.sprite.paint(&mut frame, s.top, s.left);
        if let Some(node) = received_nodes.iter().find(|n| n.object_id == s.object_id) {
            let placed = s.sprite.local_centroid() + Point::from_ints(s.top, s.left);
            let d = placed - node.centroid;
            if d.row.abs() > tol || d.col.abs() > tol {
                flags.push(s.object_id);
            }
        }
    }
    flags.sort_unstable();
    (frame, flags)
}

/// Per-pixel blend `round_half_up((1 - t) a + t b)`.
pub fn pixel_vfi(a: &Frame, b: &Frame, t: Rational) -> Result<Frame> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    if t < Rational::from_integer(0) || t > Rational::from_integer(1) {
        return Err(Error::InvalidInput(format!("blend weight {t} outside [0, 1]")));
    }
    let (num, den) = (*t.numer(), *t.denom());
    let pixels = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(pa, pb)| {
            std::array::from_fn(|ch| {
                let v = Rational::new((den - num) * pa[ch] as i64 + num * pb[ch] as i64, den);
                round_half_up(v) as u8
            })
        })
        .collect();
    Frame::from_pixels(a.height(), a.width(), pixels)
}

/// Semantic receiver for one tile.
pub fn recover_wiservr(
    env: &EnvPayload,
    behaviors: &[BehaviorPayload],
    n_frames: usize,
    dims: (usize, usize),
) -> Result<RecoveredTileVideo> {
    let environment = reconstruct_environment(env, dims)?;
    let delivered = behaviors
        .iter()
        .map(|p| Ok((p.frame_idx, codec::decode_behavior(p)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mut frames = Vec::with_capacity(n_frames);
    let mut calibration_flags = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let sprites = interpolate_behavior(&delivered, k)?;
        let nodes: Vec<SlgNode> = sprites.iter().map(|s| s.node.clone()).collect();
        let (frame, flags) = composite(&environment.frame, &sprites, &nodes);
        frames.push(frame);
        calibration_flags.push(flags);
    }
    Ok(RecoveredTileVideo {
        frames,
        calibration_flags,
        calibration_available: environment.static_nodes.is_some(),
    })
}

/// Whole-frame receiver: undelivered frames are blended from their neighbours.
pub fn recover_deepjscc(
    payloads: &[FramePayload],
    n_frames: usize,
    dims: (usize, usize),
) -> Result<RecoveredTileVideo> {
    let delivered = payloads
        .iter()
        .map(|p| Ok((p.frame_idx, codec::decode_frame(p, dims)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let (first, last) = match (delivered.keys().next(), delivered.keys().next_back()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::InvalidInput("no delivered frames".into())),
    };
    let frames = (0..n_frames)
        .map(|k| {
            if let Some(f) = delivered.get(&k) {
                return Ok(f.clone());
            }
            if k < first || k > last {
                return Err(Error::ExtrapolationUnsupported { target: k, first, last });
            }
            let (&a, fa) = delivered.range(..k).next_back().unwrap();
            let (&c, fc) = delivered.range(k + 1..).next().unwrap();
            pixel_vfi(fa, fc, Rational::new((k - a) as i64, (c - a) as i64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveredTileVideo {
        calibration_flags: vec![Vec::new(); frames.len()],
        frames,
        calibration_available: false,
    })
}

pub fn recover_conventional(streams: &[ConventionalBitstream], dims: (usize, usize)) -> Result<RecoveredTileVideo> {
    let mut sorted: Vec<&ConventionalBitstream> = streams.iter().collect();
    sorted.sort_by_key(|s| s.frame_idx);
    let frames = sorted
        .into_iter()
        .map(|s| codec::decode_conventional(s, dims))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveredTileVideo {
        calibration_flags: vec![Vec::new(); frames.len()],
        frames,
        calibration_available: false,
    })
}

/// Stitches row-major tiles into one field-of-view frame.
pub fn stitch(tiles: &[&Frame], grid_cols: usize) -> Result<Frame> {
    if tiles.is_empty() || grid_cols == 0 || !tiles.len().is_multiple_of(grid_cols) {
        return Err(Error::DimensionMismatch(format!(
            "{} tiles do not fill rows of {grid_cols}",
            tiles.len()
        )));
    }
    let (h, w) = tiles[0].dims();
    if tiles.iter().any(|t| t.dims() != (h, w)) {
        return Err(Error::DimensionMismatch("tiles differ in size".into()));
    }
    let grid_rows = tiles.len() / grid_cols;
    let mut out = Frame::filled(grid_rows * h, grid_cols * w, [0; 3]);
    for (i, tile) in tiles.iter().enumerate() {
        let (r0, c0) = ((i / grid_cols) * h, (i % grid_cols) * w);
        for r in 0..h {
            for c in 0..w {
                out.set(r0 + r, c0 + c, tile.get(r, c));
            }
        }
    }
    Ok(out)
}

/// Field-of-view frame `frame_idx` from row-major recovered tiles.
pub fn assemble_fov(tiles: &[RecoveredTileVideo], grid_cols: usize, frame_idx: usize) -> Result<Frame> {
    let n = tiles.first().map(|t| t.frames.len()).unwrap_or(0);
    if tiles.iter().any(|t| t.frames.len() != n) {
        return Err(Error::DimensionMismatch("tiles differ in frame count".into()));
    }
    if frame_idx >= n {
        return Err(Error::Index {
            what: "frame",
            index: frame_idx,
            limit: n,
        });
    }
    let frames: Vec<&Frame> = tiles.iter().map(|t| &t.frames[frame_idx]).collect();
    stitch(&frames, grid_cols)
}

/// Writes `prefix_NNN.ppm` for every frame into `dir`.
pub fn export_ppm_sequence(frames: &[Frame], dir: &Path, prefix: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (k, f) in frames.iter().enumerate() {
        let path = dir.join(format!("{prefix}_{k:03}.ppm"));
        std::fs::write(&path, f.to_ppm()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
