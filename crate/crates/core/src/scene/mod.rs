//! Synthetic tiled video content with full ground truth.
//!
//! A [`Scene`] is a panorama of tiles, each holding a background and a set of
//! sprites that either stay put (environment) or move along a trajectory
//! (behavior). Rendering paints the background and then objects in ascending
//! z-order; the same painter is used by the receiver when it stitches frames
//! back together, so noiseless round trips are pixel-exact.

mod frame;
mod generate;
mod sprite;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use frame::{Frame, Rgb};
pub use generate::generate_scene;
pub(crate) use sprite::{pack_bits, unpack_bits};
pub use sprite::Sprite;

use crate::rational::{Point, Rational};
use crate::{Error, Result};

/// Version tag written into scene JSON documents.
pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    Linear,
    PiecewiseLinear,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub tile_height: usize,
    pub tile_width: usize,
    /// Tiles per field of view.
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Number of horizontally adjacent viewpoints; the panorama is
    /// `grid_rows x (grid_cols + n_viewpoints - 1)` tiles.
    pub n_viewpoints: usize,
    pub n_frames: usize,
    pub n_static_objects: usize,
    pub n_dynamic_objects: usize,
    pub trajectory_kind: TrajectoryKind,
    /// Let dynamic objects overlap each other.
    pub allow_dynamic_overlap: bool,
    /// Let dynamic objects pass over static ones.
    pub allow_static_occlusion: bool,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            tile_height: 64,
            tile_width: 64,
            grid_rows: 2,
            grid_cols: 2,
            n_viewpoints: 1,
            n_frames: 20,
            n_static_objects: 2,
            n_dynamic_objects: 3,
            trajectory_kind: TrajectoryKind::Linear,
            allow_dynamic_overlap: false,
            allow_static_occlusion: false,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.tile_height < 8 || self.tile_width < 8 {
            return bad(format!(
                "tile {}x{} is smaller than 8x8",
                self.tile_height, self.tile_width
            ));
        }
        if self.tile_height > u16::MAX as usize || self.tile_width > u16::MAX as usize {
            return bad("tile dimensions must fit in 16 bits".into());
        }
        if self.grid_rows == 0 || self.grid_cols == 0 || self.n_viewpoints == 0 {
            return bad("grid and viewpoint counts must be positive".into());
        }
        if self.pano_rows() * self.pano_cols() > u16::MAX as usize {
            return bad("too many tiles for 16-bit tile ids".into());
        }
        if self.n_frames < 2 || self.n_frames > u16::MAX as usize {
            return bad(format!("n_frames = {} outside [2, 65535]", self.n_frames));
        }
        Ok(())
    }

    pub fn pano_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn pano_cols(&self) -> usize {
        self.grid_cols + self.n_viewpoints - 1
    }

    pub fn fov_layout(&self) -> FovLayout {
        FovLayout {
            grid_rows: self.grid_rows,
            grid_cols: self.grid_cols,
            n_viewpoints: self.n_viewpoints,
        }
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: usize,
    pub position: Point,
}

/// Centroid positions given as keyframes; positions between keyframes are
/// linearly interpolated, positions outside are held at the nearest end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    keyframes: Vec<Keyframe>,
}

impl Trajectory {
    pub fn new(mut keyframes: Vec<Keyframe>) -> Result<Self> {
        if keyframes.is_empty() {
            return Err(Error::InvalidInput("trajectory without keyframes".into()));
        }
        keyframes.sort_by_key(|k| k.frame);
        if keyframes.windows(2).any(|w| w[0].frame == w[1].frame) {
            return Err(Error::InvalidInput("duplicate keyframe index".into()));
        }
        Ok(Trajectory { keyframes })
    }

    pub fn fixed(position: Point) -> Self {
        Trajectory {
            keyframes: vec![Keyframe { frame: 0, position }],
        }
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    pub fn at(&self, frame: usize) -> Point {
        let ks = &self.keyframes;
        let after = ks.partition_point(|k| k.frame <= frame);
        if after == 0 {
            return ks[0].position;
        }
        let a = ks[after - 1];
        if a.frame == frame || after == ks.len() {
            return a.position;
        }
        let c = ks[after];
        let t = Rational::new((frame - a.frame) as i64, (c.frame - a.frame) as i64);
        a.position.lerp(c.position, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub object_id: u16,
    pub class_label: String,
    pub semantic_label: String,
    pub sprite: Sprite,
    pub z_order: i32,
    pub dynamic: bool,
    pub trajectory: Trajectory,
}

impl ObjectSpec {
    /// Top-left corner of the sprite at `frame`.
    pub fn placement(&self, frame: usize) -> (i64, i64) {
        self.sprite.placement_for(self.trajectory.at(frame))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileIndex {
    pub row: usize,
    pub col: usize,
}

impl TileIndex {
    pub fn new(row: usize, col: usize) -> Self {
        TileIndex { row, col }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileScene {
    pub index: TileIndex,
    pub background: Frame,
    /// Sorted by ascending z-order.
    pub objects: Vec<ObjectSpec>,
}

impl TileScene {
    pub fn object(&self, id: u16) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.object_id == id)
    }
}

/// Semantic identity of a segmented object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectLabel {
    pub class_label: String,
    pub semantic_label: String,
    pub z_order: i32,
}

/// Per-pixel object ids (0 = background) plus labels for every visible id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMap {
    pub height: usize,
    pub width: usize,
    pub ids: Vec<u16>,
    pub labels: BTreeMap<u16, ObjectLabel>,
}

impl SegmentationMap {
    #[inline]
    pub fn id_at(&self, row: usize, col: usize) -> u16 {
        self.ids[row * self.width + col]
    }

    /// Visible pixels of object `id`, row-major.
    pub fn mask_of(&self, id: u16) -> Vec<(usize, usize)> {
        self.ids
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == id)
            .map(|(i, _)| (i / self.width, i % self.width))
            .collect()
    }

    /// Visible masks of all objects, keyed by id, in one pass.
    pub fn masks(&self) -> BTreeMap<u16, Vec<(usize, usize)>> {
        let mut out: BTreeMap<u16, Vec<(usize, usize)>> = BTreeMap::new();
        for (i, &id) in self.ids.iter().enumerate() {
            if id != 0 {
                out.entry(id).or_default().push((i / self.width, i % self.width));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub config: SceneConfig,
    /// Panorama tiles, row-major.
    pub tiles: Vec<TileScene>,
}

#[derive(Serialize, Deserialize)]
struct SceneDoc {
    version: u32,
    #[serde(flatten)]
    scene: Scene,
}

impl Scene {
    pub fn tile(&self, index: TileIndex) -> Result<&TileScene> {
        let cols = self.config.pano_cols();
        if index.row >= self.config.pano_rows() || index.col >= cols {
            return Err(Error::Index {
                what: "tile",
                index: index.row * cols + index.col,
                limit: self.tiles.len(),
            });
        }
        Ok(&self.tiles[index.row * cols + index.col])
    }

    /// 16-bit wire id of a tile (row-major panorama position).
    pub fn tile_id(&self, index: TileIndex) -> u16 {
        (index.row * self.config.pano_cols() + index.col) as u16
    }

    pub fn n_frames(&self) -> usize {
        self.config.n_frames
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SceneDoc {
            version: SCENE_FORMAT_VERSION,
            scene: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Scene> {
        let doc: SceneDoc = serde_json::from_str(s)?;
        if doc.version != SCENE_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported scene format version {}",
                doc.version
            )));
        }
        doc.scene.config.validate()?;
        Ok(doc.scene)
    }

    fn check_frame(&self, frame_idx: usize) -> Result<()> {
        if frame_idx >= self.config.n_frames {
            return Err(Error::Index {
                what: "frame",
                index: frame_idx,
                limit: self.config.n_frames,
            });
        }
        Ok(())
    }
}

pub fn render_frame(scene: &Scene, tile: TileIndex, frame_idx: usize) -> Result<Frame> {
    scene.check_frame(frame_idx)?;
    let t = scene.tile(tile)?;
    Ok(paint_objects(t, frame_idx, |_| true))
}

/// Background plus static objects only.
pub fn render_environment(scene: &Scene, tile: TileIndex) -> Result<Frame> {
    let t = scene.tile(tile)?;
    Ok(paint_objects(t, 0, |o| !o.dynamic))
}

fn paint_objects(t: &TileScene, frame_idx: usize, keep: impl Fn(&ObjectSpec) -> bool) -> Frame {
    let mut frame = t.background.clone();
    for o in t.objects.iter().filter(|o| keep(o)) {
        let (top, left) = o.placement(frame_idx);
        o.sprite.paint(&mut frame, top, left);
    }
    frame
}

/// Exact segmentation from ground truth: each pixel takes the id of the
/// top-most object covering it.
pub fn oracle_segment(scene: &Scene, tile: TileIndex, frame_idx: usize) -> Result<SegmentationMap> {
    scene.check_frame(frame_idx)?;
    let t = scene.tile(tile)?;
    let (h, w) = t.background.dims();
    let mut ids = vec![0u16; h * w];
    for o in &t.objects {
        let (top, left) = o.placement(frame_idx);
        for (r, c) in o.sprite.mask_pixels() {
            let (fr, fc) = (top + r as i64, left + c as i64);
            if (0..h as i64).contains(&fr) && (0..w as i64).contains(&fc) {
                ids[fr as usize * w + fc as usize] = o.object_id;
            }
        }
    }
    let mut labels = BTreeMap::new();
    for &id in ids.iter().filter(|&&id| id != 0) {
        labels.entry(id).or_insert_with(|| {
            let o = t.object(id).expect("painted ids come from the tile");
            ObjectLabel {
                class_label: o.class_label.clone(),
                semantic_label: o.semantic_label.clone(),
                z_order: o.z_order,
            }
        });
    }
    Ok(SegmentationMap {
        height: h,
        width: w,
        ids,
        labels,
    })
}

/// How viewpoints map onto panorama tile windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FovLayout {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub n_viewpoints: usize,
}

/// Tiles covered by `viewpoint` (1-based), row-major. Viewpoint `v` is the
/// window whose left edge sits at panorama column `v - 1`.
pub fn fov_tiles(viewpoint: u32, layout: &FovLayout) -> Result<Vec<TileIndex>> {
    if viewpoint == 0 || viewpoint as usize > layout.n_viewpoints {
        return Err(Error::Lookup {
            what: "viewpoint",
            id: viewpoint as u64,
        });
    }
    let left = viewpoint as usize - 1;
    Ok((0..layout.grid_rows)
        .flat_map(|r| (0..layout.grid_cols).map(move |c| TileIndex::new(r, left + c)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_scene(objects: Vec<ObjectSpec>, n_frames: usize) -> Scene {
        let config = SceneConfig {
            tile_height: 8,
            tile_width: 8,
            grid_rows: 1,
            grid_cols: 1,
            n_frames,
            n_static_objects: 0,
            n_dynamic_objects: 0,
            ..SceneConfig::default()
        };
        Scene {
            config,
            tiles: vec![TileScene {
                index: TileIndex::new(0, 0),
                background: Frame::filled(8, 8, [10, 20, 30]),
                objects,
            }],
        }
    }

    fn block(id: u16, z: i32, color: Rgb, n: usize, at: Point, dynamic: bool) -> ObjectSpec {
        ObjectSpec {
            object_id: id,
            class_label: "block".into(),
            semantic_label: format!("block {id}"),
            sprite: Sprite::new(n, n, vec![color; n * n], vec![true; n * n]).unwrap(),
            z_order: z,
            dynamic,
            trajectory: Trajectory::fixed(at),
        }
    }

    #[test]
    fn linear_trajectory_interpolates_keyframes() {
        let tr = Trajectory::new(vec![
            Keyframe {
                frame: 0,
                position: Point::from_ints(0, 0),
            },
            Keyframe {
                frame: 19,
                position: Point::from_ints(19, 19),
            },
        ])
        .unwrap();
        assert_eq!(tr.at(10), Point::from_ints(10, 10));
        assert_eq!(tr.at(0), Point::from_ints(0, 0));
        assert_eq!(tr.at(25), Point::from_ints(19, 19));
    }

    #[test]
    fn higher_z_wins_and_segments_on_top() {
        let centre = Point::from_ints(4, 4);
        let scene = tiny_scene(
            vec![
                block(1, 1, [255, 0, 0], 2, centre, false),
                block(2, 5, [0, 255, 0], 4, centre, true),
            ],
            4,
        );
        let t = TileIndex::new(0, 0);
        let f = render_frame(&scene, t, 3).unwrap();
        assert_eq!(f.get(4, 4), [0, 255, 0]);
        let seg = oracle_segment(&scene, t, 3).unwrap();
        assert_eq!(seg.id_at(4, 4), 2);
        assert_eq!(seg.id_at(0, 0), 0);
        assert!(!seg.labels.contains_key(&1));
        // environment render drops the dynamic occluder
        let env = render_environment(&scene, t).unwrap();
        assert_eq!(env.get(4, 4), [255, 0, 0]);
    }

    #[test]
    fn empty_scene_renders_background() {
        let scene = tiny_scene(vec![], 3);
        let f = render_frame(&scene, TileIndex::new(0, 0), 2).unwrap();
        assert_eq!(f, scene.tiles[0].background);
        assert!(matches!(
            render_frame(&scene, TileIndex::new(0, 0), 3),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn fov_windows() {
        let l = FovLayout {
            grid_rows: 2,
            grid_cols: 2,
            n_viewpoints: 2,
        };
        let t = |r, c| TileIndex::new(r, c);
        assert_eq!(fov_tiles(1, &l).unwrap(), vec![t(0, 0), t(0, 1), t(1, 0), t(1, 1)]);
        assert_eq!(fov_tiles(2, &l).unwrap(), vec![t(0, 1), t(0, 2), t(1, 1), t(1, 2)]);
        assert_eq!(fov_tiles(1, &l).unwrap(), fov_tiles(1, &l).unwrap());
        assert!(matches!(fov_tiles(3, &l), Err(Error::Lookup { .. })));
        assert!(fov_tiles(0, &l).is_err());
        let single = FovLayout {
            grid_rows: 1,
            grid_cols: 1,
            n_viewpoints: 1,
        };
        assert_eq!(fov_tiles(1, &single).unwrap(), vec![t(0, 0)]);
    }

    #[test]
    fn config_validation() {
        let mut c = SceneConfig::default();
        assert!(c.validate().is_ok());
        c.n_frames = 1;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let c = SceneConfig {
            tile_width: 0,
            ..SceneConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
