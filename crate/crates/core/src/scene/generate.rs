//! Procedural scene generation.

use num_traits::Signed;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Frame, Keyframe, ObjectSpec, Rgb, Scene, SceneConfig, Sprite, TileIndex, TileScene};
use super::{Trajectory, TrajectoryKind};
use crate::rational::{Point, Rational};
use crate::{seed, Error, Result};

const STATIC_CLASSES: &[&str] = &["tree", "rock", "house", "bench", "lamp", "sign"];
const DYNAMIC_CLASSES: &[&str] = &["man", "car", "dog", "bird", "ball", "cyclist"];
const COLORS: &[(&str, Rgb)] = &[
    ("red", [200, 40, 40]),
    ("green", [40, 170, 60]),
    ("blue", [40, 70, 200]),
    ("yellow", [220, 200, 40]),
    ("white", [235, 235, 235]),
    ("orange", [230, 130, 30]),
    ("purple", [140, 50, 170]),
    ("brown", [120, 80, 40]),
];

const PLACEMENT_ATTEMPTS: usize = 200;
const TILE_ATTEMPTS: usize = 50;

/// Generates a scene; identical configs give bit-identical scenes.
pub fn generate_scene(config: &SceneConfig) -> Result<Scene> {
    config.validate()?;
    let mut next_id: u16 = 1;
    let mut next_z: i32 = 0;
    let mut tiles = Vec::with_capacity(config.pano_rows() * config.pano_cols());
    for row in 0..config.pano_rows() {
        for col in 0..config.pano_cols() {
            let linear = (row * config.pano_cols() + col) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, &[0x5CE4E, linear]));
            tiles.push(generate_tile(
                config,
                TileIndex::new(row, col),
                &mut rng,
                &mut next_id,
                &mut next_z,
            )?);
        }
    }
    Ok(Scene {
        config: config.clone(),
        tiles,
    })
}

#[derive(Clone, Copy)]
struct BoxRect {
    top: i64,
    left: i64,
    h: i64,
    w: i64,
}

impl BoxRect {
    fn overlaps(&self, o: &BoxRect) -> bool {
        self.top < o.top + o.h && o.top < self.top + self.h && self.left < o.left + o.w && o.left < self.left + self.w
    }
}

fn generate_tile(
    config: &SceneConfig,
    index: TileIndex,
    rng: &mut ChaCha8Rng,
    next_id: &mut u16,
    next_z: &mut i32,
) -> Result<TileScene> {
    let background = background(config.tile_height, config.tile_width, rng);
    for _ in 0..TILE_ATTEMPTS {
        if let Some((statics, dynamics)) = try_layout(config, rng)? {
            let mut objects = Vec::with_capacity(statics.len() + dynamics.len());
            for (sprite, trajectory) in statics {
                objects.push(new_object(next_id, next_z, STATIC_CLASSES, sprite, false, trajectory, rng)?);
            }
            for (sprite, trajectory) in dynamics {
                objects.push(new_object(next_id, next_z, DYNAMIC_CLASSES, sprite, true, trajectory, rng)?);
            }
            return Ok(TileScene {
                index,
                background,
                objects,
            });
        }
    }
    Err(Error::InvalidConfig(format!(
        "cannot lay out {} static and {} dynamic objects in a {}x{} tile",
        config.n_static_objects, config.n_dynamic_objects, config.tile_height, config.tile_width
    )))
}

type Layout = (Vec<(Sprite, Trajectory)>, Vec<(Sprite, Trajectory)>);

/// One layout attempt. Without dynamic overlap each mover gets its own lane
/// across the tile; statics then go wherever no mover ever passes.
fn try_layout(config: &SceneConfig, rng: &mut ChaCha8Rng) -> Result<Option<Layout>> {
    let (h, w) = (config.tile_height, config.tile_width);
    let n = config.n_frames;
    let d = h.min(w);
    let n_dyn = config.n_dynamic_objects;
    let rows_are_lanes = rng.random_bool(0.5);
    let (cross, along) = if rows_are_lanes { (h, w) } else { (w, h) };
    // overlapping movers share one lane spanning the tile but keep lane-sized sprites
    let lanes = if config.allow_dynamic_overlap { 1 } else { n_dyn.max(1) };
    let sprite_band = cross / n_dyn.max(1);
    if sprite_band < 2 {
        return Err(Error::InvalidConfig(format!(
            "{n_dyn} dynamic objects need at least {} pixels across the tile",
            2 * n_dyn
        )));
    }
    let mut lane_order: Vec<usize> = (0..n_dyn).map(|i| i % lanes).collect();
    lane_order.shuffle(rng);

    let mut dynamics = Vec::with_capacity(n_dyn);
    let mut swept: Vec<Vec<BoxRect>> = Vec::with_capacity(n_dyn);
    for &lane in &lane_order {
        let (lo, hi) = (lane * cross / lanes, (lane + 1) * cross / lanes);
        let band = hi - lo;
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let cross_size = rng.random_range(2.max(sprite_band * 3 / 4).min(sprite_band)..=sprite_band);
            let along_size = rng.random_range(2.max(d / 4 + 2).min(along)..=(d / 3 + 8).clamp(2, along));
            let sprite = if rows_are_lanes {
                random_sprite(cross_size, along_size, rng)
            } else {
                random_sprite(along_size, cross_size, rng)
            };
            let (cross_room, along_room) = ((band - cross_size) as i64, (along - along_size) as i64);
            let (ranges, origin) = if rows_are_lanes {
                ((cross_room, along_room), Point::from_ints(lo as i64, 0))
            } else {
                ((along_room, cross_room), Point::from_ints(0, lo as i64))
            };
            let Some(offsets) = random_offsets(config.trajectory_kind, ranges, n, rng) else {
                continue;
            };
            let lc = sprite.local_centroid();
            let keyframes: Vec<Keyframe> = offsets
                .into_iter()
                .map(|(frame, p)| Keyframe {
                    frame,
                    position: p + origin + lc,
                })
                .collect();
            let trajectory = Trajectory::new(keyframes)?;
            let path: Vec<BoxRect> = (0..n)
                .map(|k| {
                    let (top, left) = sprite.placement_for(trajectory.at(k));
                    BoxRect {
                        top,
                        left,
                        h: sprite.height() as i64,
                        w: sprite.width() as i64,
                    }
                })
                .collect();
            if path.iter().all(|b| (b.top, b.left) == (path[0].top, path[0].left)) {
                continue;
            }
            let collides = !config.allow_dynamic_overlap
                && swept.iter().any(|other| other.iter().zip(&path).any(|(a, b)| a.overlaps(b)));
            if !collides {
                placed = Some((sprite, trajectory, path));
                break;
            }
        }
        let Some((sprite, trajectory, path)) = placed else {
            return Ok(None);
        };
        swept.push(path);
        dynamics.push((sprite, trajectory));
    }

    let static_size = (2.max(d / 10), 2.max(d / 10).max(d / 5));
    let mut statics = Vec::with_capacity(config.n_static_objects);
    let mut static_boxes: Vec<BoxRect> = Vec::new();
    for _ in 0..config.n_static_objects {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let sprite = random_sprite(
                rng.random_range(static_size.0..=static_size.1.min(h)),
                rng.random_range(static_size.0..=static_size.1.min(w)),
                rng,
            );
            let (sh, sw) = (sprite.height() as i64, sprite.width() as i64);
            let top = rng.random_range(0..=h as i64 - sh);
            let left = rng.random_range(0..=w as i64 - sw);
            let rect = BoxRect { top, left, h: sh, w: sw };
            let clear_of_movers =
                config.allow_static_occlusion || swept.iter().flatten().all(|b| !b.overlaps(&rect));
            if clear_of_movers && static_boxes.iter().all(|b| !b.overlaps(&rect)) {
                placed = Some((sprite, rect));
                break;
            }
        }
        let Some((sprite, rect)) = placed else {
            return Ok(None);
        };
        static_boxes.push(rect);
        let at = sprite.local_centroid() + Point::from_ints(rect.top, rect.left);
        statics.push((sprite, Trajectory::fixed(at)));
    }
    Ok(Some((statics, dynamics)))
}

fn new_object(
    next_id: &mut u16,
    next_z: &mut i32,
    classes: &[&str],
    sprite: Sprite,
    dynamic: bool,
    trajectory: Trajectory,
    rng: &mut ChaCha8Rng,
) -> Result<ObjectSpec> {
    let object_id = *next_id;
    *next_id = next_id
        .checked_add(1)
        .ok_or_else(|| Error::InvalidConfig("more than 65535 objects".into()))?;
    let z_order = *next_z;
    *next_z += 1;
    let class = classes.choose(rng).expect("nonempty class list");
    let color = COLORS[rng.random_range(0..COLORS.len())].0;
    Ok(ObjectSpec {
        object_id,
        class_label: class.to_string(),
        semantic_label: format!("a {color} {class}"),
        sprite,
        z_order,
        dynamic,
        trajectory,
    })
}

fn background(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Frame {
    let base: [i32; 3] = std::array::from_fn(|_| rng.random_range(60..160));
    let grad_r: [i32; 3] = std::array::from_fn(|_| rng.random_range(-40..=40));
    let grad_c: [i32; 3] = std::array::from_fn(|_| rng.random_range(-40..=40));
    let mut pixels = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let px: Rgb = std::array::from_fn(|ch| {
                let v = base[ch] + grad_r[ch] * r as i32 / h as i32 + grad_c[ch] * c as i32 / w as i32
                    + rng.random_range(-6..=6);
                v.clamp(0, 255) as u8
            });
            pixels.push(px);
        }
    }
    Frame::from_pixels(h, w, pixels).expect("dimensions match")
}

fn random_sprite(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Sprite {
    let shape = rng.random_range(0..4);
    let (hc, wc) = (h as f64 / 2.0, w as f64 / 2.0);
    let corner = h.min(w) / 4;
    let mut mask: Vec<bool> = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            let (dr, dc) = ((r as f64 + 0.5 - hc) / hc, (c as f64 + 0.5 - wc) / wc);
            match shape {
                0 => true,
                1 => r.min(h - 1 - r) + c.min(w - 1 - c) >= corner,
                2 => dr * dr + dc * dc <= 1.0,
                _ => dr.abs() + dc.abs() <= 1.0,
            }
        })
        .collect();
    mask[(h / 2) * w + w / 2] = true;
    let base = COLORS[rng.random_range(0..COLORS.len())].1;
    let (tr, tc) = (rng.random_range(1..6i32), rng.random_range(1..6i32));
    let rgb = (0..h * w)
        .map(|i| {
            let (r, c) = ((i / w) as i32, (i % w) as i32);
            let t = (r * tr + c * tc) % 32 - 16;
            std::array::from_fn(|ch| (base[ch] as i32 + t).clamp(0, 255) as u8)
        })
        .collect();
    Sprite::new(h, w, rgb, mask).expect("mask has its centre pixel set")
}

/// Top-left offset keyframes for a moving sprite with room `ranges`
/// (max row offset, max col offset).
fn random_offsets(
    kind: TrajectoryKind,
    ranges: (i64, i64),
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<(usize, Point)>> {
    let last = (n - 1) as i64;
    let pick = |rng: &mut ChaCha8Rng| Point::from_ints(rng.random_range(0..=ranges.0), rng.random_range(0..=ranges.1));
    match kind {
        TrajectoryKind::Linear => {
            let vmax = (ranges.0 / last).min(2);
            let hmax = (ranges.1 / last).min(2);
            if vmax == 0 && hmax == 0 {
                // No room for whole-pixel steps: fall back to fractional motion.
                return Some(vec![(0, pick(rng)), (n - 1, pick(rng))]);
            }
            let vr = rng.random_range(-vmax..=vmax);
            let vc = rng.random_range(-hmax..=hmax);
            if vr == 0 && vc == 0 {
                return None;
            }
            let start = |v: i64, range: i64, rng: &mut ChaCha8Rng| {
                rng.random_range((-v * last).max(0)..=range - (v * last).max(0))
            };
            let r0 = start(vr, ranges.0, rng);
            let c0 = start(vc, ranges.1, rng);
            Some(vec![
                (0, Point::from_ints(r0, c0)),
                (n - 1, Point::from_ints(r0 + vr * last, c0 + vc * last)),
            ])
        }
        TrajectoryKind::PiecewiseLinear => {
            let interior = (n - 2).min(rng.random_range(1..=2));
            let mut frames: Vec<usize> = rand::seq::index::sample(rng, n - 2, interior)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            frames.push(0);
            frames.push(n - 1);
            frames.sort_unstable();
            Some(frames.into_iter().map(|f| (f, pick(rng))).collect())
        }
        TrajectoryKind::Quadratic => {
            let (a, b, m) = (pick(rng), pick(rng), pick(rng));
            let mid = (last / 2).max(1);
            if last < 2 {
                return Some(vec![(0, a), (n - 1, b)]);
            }
            let chord = a.lerp(b, Rational::new(mid, last));
            let bend = m - chord;
            let need = |range: i64| Rational::from_integer((range / 6).max(2));
            if bend.row.abs() < need(ranges.0) && bend.col.abs() < need(ranges.1) {
                return None;
            }
            let clamp = |v: Rational, hi: i64| v.max(Rational::from_integer(0)).min(Rational::from_integer(hi));
            Some(
                (0..n)
                    .map(|k| {
                        let p = lagrange3((0, a), (mid, m), (last, b), k as i64);
                        (k, Point::new(clamp(p.row, ranges.0), clamp(p.col, ranges.1)))
                    })
                    .collect(),
            )
        }
    }
}

/// Quadratic through three samples, evaluated exactly at `x`.
fn lagrange3(p0: (i64, Point), p1: (i64, Point), p2: (i64, Point), x: i64) -> Point {
    let basis = |xi: i64, xj: i64, xk: i64| Rational::new((x - xj) * (x - xk), (xi - xj) * (xi - xk));
    p0.1 * basis(p0.0, p1.0, p2.0) + p1.1 * basis(p1.0, p0.0, p2.0) + p2.1 * basis(p2.0, p0.0, p1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{render_frame, TileIndex};

    #[test]
    fn lagrange_hits_its_samples() {
        let p = |r, c| Point::from_ints(r, c);
        let (a, b, c) = ((0, p(0, 0)), (5, p(10, 3)), (10, p(0, 6)));
        assert_eq!(lagrange3(a, b, c, 0), p(0, 0));
        assert_eq!(lagrange3(a, b, c, 5), p(10, 3));
        assert_eq!(lagrange3(a, b, c, 10), p(0, 6));
    }

    #[test]
    fn every_kind_stays_in_bounds() {
        for kind in [TrajectoryKind::Linear, TrajectoryKind::PiecewiseLinear, TrajectoryKind::Quadratic] {
            for seed in 0..5 {
                let cfg = SceneConfig {
                    trajectory_kind: kind,
                    seed,
                    ..SceneConfig::default()
                };
                let scene = generate_scene(&cfg).unwrap();
                for tile in &scene.tiles {
                    for o in &tile.objects {
                        for k in 0..cfg.n_frames {
                            let (top, left) = o.placement(k);
                            assert!(top >= 0 && left >= 0);
                            assert!(top as usize + o.sprite.height() <= cfg.tile_height);
                            assert!(left as usize + o.sprite.width() <= cfg.tile_width);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn linear_scenes_move_whole_pixels_per_frame() {
        let scene = generate_scene(&SceneConfig::default()).unwrap();
        for o in scene.tiles.iter().flat_map(|t| &t.objects).filter(|o| o.dynamic) {
            let d0 = o.trajectory.at(1) - o.trajectory.at(0);
            assert!(d0.row.is_integer() && d0.col.is_integer());
        }
    }

    #[test]
    fn small_tiles_still_generate() {
        let cfg = SceneConfig {
            tile_height: 8,
            tile_width: 8,
            n_static_objects: 1,
            n_dynamic_objects: 1,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg).unwrap();
        render_frame(&scene, TileIndex::new(1, 1), 19).unwrap();
    }

    #[test]
    fn impossible_packing_is_invalid_config() {
        let cfg = SceneConfig {
            n_static_objects: 200,
            ..SceneConfig::default()
        };
        assert!(matches!(generate_scene(&cfg), Err(Error::InvalidConfig(_))));
    }
}
