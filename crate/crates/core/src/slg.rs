//! Semantic location graphs.
//!
//! One graph per frame: a node per visible object, placed at the exact
//! rational centroid of its visible mask, and a directional relation for
//! every ordered pair of nodes. Comparing graphs across frames separates
//! environment objects from behaviors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::rational::{Point, Rational};
use crate::scene::SegmentationMap;
use crate::wire::Reader;
use crate::{Error, Result};

/// Compass relation of one centroid as seen from another. Rows grow downward,
/// so `Below` means a larger row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Right,
    AboveRight,
    Above,
    AboveLeft,
    Left,
    BelowLeft,
    Below,
    BelowRight,
    CoLocated,
}

impl Relation {
    /// Octants in counterclockwise order starting at `Right` (0 degrees).
    pub const OCTANTS: [Relation; 8] = [
        Relation::Right,
        Relation::AboveRight,
        Relation::Above,
        Relation::AboveLeft,
        Relation::Left,
        Relation::BelowLeft,
        Relation::Below,
        Relation::BelowRight,
    ];

    pub fn opposite(self) -> Relation {
        match self {
            Relation::CoLocated => Relation::CoLocated,
            r => {
                let i = Self::OCTANTS.iter().position(|&o| o == r).unwrap();
                Self::OCTANTS[(i + 4) % 8]
            }
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Relation::Right => "right",
            Relation::AboveRight => "above-right",
            Relation::Above => "above",
            Relation::AboveLeft => "above-left",
            Relation::Left => "left",
            Relation::BelowLeft => "below-left",
            Relation::Below => "below",
            Relation::BelowRight => "below-right",
            Relation::CoLocated => "co-located",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlgNode {
    pub object_id: u16,
    pub centroid: Point,
    pub class_label: String,
    pub semantic_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlgEdge {
    pub from_id: u16,
    pub to_id: u16,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slg {
    pub frame_idx: usize,
    /// Sorted by object id.
    pub nodes: Vec<SlgNode>,
    pub edges: Vec<SlgEdge>,
}

impl Slg {
    /// Builds the graph from nodes, recomputing the complete edge set.
    pub fn from_nodes(frame_idx: usize, mut nodes: Vec<SlgNode>) -> Slg {
        nodes.sort_by_key(|n| n.object_id);
        let mut edges = Vec::with_capacity(nodes.len() * nodes.len().saturating_sub(1));
        for u in &nodes {
            for v in &nodes {
                if u.object_id != v.object_id {
                    edges.push(SlgEdge {
                        from_id: u.object_id,
                        to_id: v.object_id,
                        relation: relation(u.centroid, v.centroid).unwrap_or(Relation::CoLocated),
                    });
                }
            }
        }
        Slg {
            frame_idx,
            nodes,
            edges,
        }
    }

    pub fn node(&self, id: u16) -> Option<&SlgNode> {
        self.nodes
            .binary_search_by_key(&id, |n| n.object_id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn relation_between(&self, from: u16, to: u16) -> Option<Relation> {
        self.edges
            .iter()
            .find(|e| e.from_id == from && e.to_id == to)
            .map(|e| e.relation)
    }
}

/// Arithmetic mean of pixel coordinates, exact.
pub fn centroid(pixels: impl IntoIterator<Item = (usize, usize)>) -> Result<Point> {
    let (mut n, mut sr, mut sc) = (0i64, 0i64, 0i64);
    for (r, c) in pixels {
        n += 1;
        sr += r as i64;
        sc += c as i64;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(Point::new(Rational::new(sr, n), Rational::new(sc, n)))
}

/// Octant of the direction from `u` to `v`.
///
/// Sectors are 45 degrees wide and centred on the compass directions, with
/// boundaries at odd multiples of 22.5 degrees. A boundary direction belongs
/// to the counterclockwise neighbour; since tan(22.5) is irrational no
/// rational displacement ever lands on one.
pub fn relation(u: Point, v: Point) -> Result<Relation> {
    let d = v - u;
    // math orientation: x to the right, y upward
    let (x, y) = (d.col, -d.row);
    if x == Rational::from_integer(0) && y == x {
        return Err(Error::CoincidentCentroids);
    }
    let (ax, ay) = (x.abs(), y.abs());
    let horizontal = below_tan_22_5(ay, ax);
    let vertical = below_tan_22_5(ax, ay);
    let pos = |r: Rational| r.is_positive();
    Ok(match (horizontal, vertical) {
        (true, _) if pos(x) => Relation::Right,
        (true, _) => Relation::Left,
        (_, true) if pos(y) => Relation::Above,
        (_, true) => Relation::Below,
        _ => match (pos(x), pos(y)) {
            (true, true) => Relation::AboveRight,
            (false, true) => Relation::AboveLeft,
            (false, false) => Relation::BelowLeft,
            (true, false) => Relation::BelowRight,
        },
    })
}

/// `a < tan(22.5 deg) * b` for nonnegative `a`, `b`, exactly.
fn below_tan_22_5(a: Rational, b: Rational) -> bool {
    // a/b < sqrt(2) - 1  <=>  (a + b)^2 < 2 b^2, over a common denominator
    let (an, ad) = (*a.numer() as i128, *a.denom() as i128);
    let (bn, bd) = (*b.numer() as i128, *b.denom() as i128);
    let (a, b) = (an * bd, bn * ad);
    (a + b) * (a + b) < 2 * b * b
}

/// One node per visible object, centroid over its visible mask.
pub fn build_slg(segmap: &SegmentationMap, frame_idx: usize) -> Slg {
    let nodes = segmap
        .masks()
        .into_iter()
        .map(|(id, pixels)| {
            let label = segmap.labels.get(&id);
            SlgNode {
                object_id: id,
                centroid: centroid(pixels).expect("masks from a segmap are nonempty"),
                class_label: label.map(|l| l.class_label.clone()).unwrap_or_default(),
                semantic_label: label.map(|l| l.semantic_label.clone()).unwrap_or_default(),
            }
        })
        .collect();
    Slg::from_nodes(frame_idx, nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectRole {
    Environment,
    Behavior,
}

pub type ObjectClassification = BTreeMap<u16, ObjectRole>;

/// An object is an environment iff it is visible in every frame with the
/// same centroid and the same visible pixel set; anything else is a behavior.
pub fn classify_objects(slgs: &[Slg], segmaps: &[SegmentationMap]) -> Result<ObjectClassification> {
    if slgs.len() < 2 || slgs.len() != segmaps.len() {
        return Err(Error::InvalidInput(format!(
            "classification needs >= 2 matching frames, got {} graphs and {} maps",
            slgs.len(),
            segmaps.len()
        )));
    }
    let masks: Vec<_> = segmaps.iter().map(SegmentationMap::masks).collect();
    let ids: BTreeSet<u16> = slgs.iter().flat_map(|g| g.nodes.iter().map(|n| n.object_id)).collect();
    Ok(ids
        .into_iter()
        .map(|id| {
            let first = slgs[0].node(id).map(|n| n.centroid);
            let same_place = first.is_some() && slgs.iter().all(|g| g.node(id).map(|n| n.centroid) == first);
            let same_mask = masks.iter().all(|m| m.get(&id) == masks[0].get(&id));
            let role = if same_place && same_mask {
                ObjectRole::Environment
            } else {
                ObjectRole::Behavior
            };
            (id, role)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlgDelta {
    /// `b - a` centroid displacement for ids present in both graphs.
    pub displacements: BTreeMap<u16, Point>,
    pub appeared: BTreeSet<u16>,
    pub disappeared: BTreeSet<u16>,
}

pub fn diff_slg(a: &Slg, b: &Slg) -> SlgDelta {
    let mut delta = SlgDelta::default();
    for n in &a.nodes {
        match b.node(n.object_id) {
            Some(m) => {
                delta.displacements.insert(n.object_id, m.centroid - n.centroid);
            }
            None => {
                delta.disappeared.insert(n.object_id);
            }
        }
    }
    for m in &b.nodes {
        if a.node(m.object_id).is_none() {
            delta.appeared.insert(m.object_id);
        }
    }
    delta
}

// Wire format (big-endian): node count u16, then per node
// id u16 | row num u32 | row den u32 | col num u32 | col den u32 |
// label len u16 | label bytes ("class:semantic"). Edges are not sent.

fn ratio_parts(r: Rational) -> Result<(u32, u32)> {
    let (n, d) = (*r.numer(), *r.denom());
    match (u32::try_from(n), u32::try_from(d)) {
        (Ok(n), Ok(d)) => Ok((n, d)),
        _ => Err(Error::InvalidInput(format!("coordinate {r} does not fit the wire format"))),
    }
}

pub fn write_node(out: &mut Vec<u8>, node: &SlgNode) -> Result<()> {
    let (rn, rd) = ratio_parts(node.centroid.row)?;
    let (cn, cd) = ratio_parts(node.centroid.col)?;
    let label = format!("{}:{}", node.class_label, node.semantic_label);
    let len = u16::try_from(label.len()).map_err(|_| Error::InvalidInput("label longer than 65535 bytes".into()))?;
    out.extend_from_slice(&node.object_id.to_be_bytes());
    for v in [rn, rd, cn, cd] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(label.as_bytes());
    Ok(())
}

pub(crate) fn read_node(r: &mut Reader<'_>) -> Result<SlgNode> {
    let object_id = r.u16()?;
    let mut parts = [0u32; 4];
    for p in &mut parts {
        *p = r.u32()?;
    }
    if parts[1] == 0 || parts[3] == 0 {
        return Err(Error::MalformedPayload("zero centroid denominator".into()));
    }
    let len = r.u16()? as usize;
    let label = std::str::from_utf8(r.bytes(len)?)
        .map_err(|e| Error::MalformedPayload(format!("label is not UTF-8: {e}")))?;
    let (class_label, semantic_label) = label.split_once(':').unwrap_or((label, ""));
    Ok(SlgNode {
        object_id,
        centroid: Point::new(
            Rational::new(parts[0] as i64, parts[1] as i64),
            Rational::new(parts[2] as i64, parts[3] as i64),
        ),
        class_label: class_label.to_string(),
        semantic_label: semantic_label.to_string(),
    })
}

pub fn encode_nodes(nodes: &[SlgNode]) -> Result<Vec<u8>> {
    let count = u16::try_from(nodes.len()).map_err(|_| Error::InvalidInput("more than 65535 nodes".into()))?;
    let mut out = count.to_be_bytes().to_vec();
    for n in nodes {
        write_node(&mut out, n)?;
    }
    Ok(out)
}

pub(crate) fn read_nodes(r: &mut Reader<'_>) -> Result<Vec<SlgNode>> {
    let count = r.u16()?;
    (0..count).map(|_| read_node(r)).collect()
}

/// Parses a serialized node list; trailing bytes are an error.
pub fn decode_nodes(bytes: &[u8]) -> Result<Vec<SlgNode>> {
    let mut r = Reader::new(bytes);
    let nodes = read_nodes(&mut r)?;
    if r.remaining() != 0 {
        return Err(Error::MalformedPayload(format!("{} trailing bytes after graph", r.remaining())));
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ObjectLabel;

    fn p(r: i64, c: i64) -> Point {
        Point::from_ints(r, c)
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid([(0, 0), (0, 2)]).unwrap(), p(0, 1));
        assert_eq!(centroid([(3, 3)]).unwrap(), p(3, 3));
        let half = Rational::new(1, 2);
        assert_eq!(centroid([(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap(), Point::new(half, half));
        assert!(matches!(centroid(std::iter::empty()), Err(Error::EmptyMask)));
    }

    #[test]
    fn relation_examples() {
        assert_eq!(relation(p(5, 10), p(20, 10)).unwrap(), Relation::Below);
        assert_eq!(relation(p(5, 10), p(5, 30)).unwrap(), Relation::Right);
        assert_eq!(relation(p(0, 0), p(10, 10)).unwrap(), Relation::BelowRight);
        assert_eq!(relation(p(10, 10), p(0, 0)).unwrap(), Relation::AboveLeft);
        assert_eq!(relation(p(10, 0), p(0, 1)).unwrap(), Relation::Above);
        assert_eq!(relation(p(0, 0), p(1, -10)).unwrap(), Relation::Left);
        assert!(matches!(relation(p(1, 1), p(1, 1)), Err(Error::CoincidentCentroids)));
    }

    #[test]
    fn relation_sector_edges() {
        // slope 2/5 = 0.4 < tan 22.5 (0.4142) stays horizontal; 5/12 = 0.4167 tips over
        assert_eq!(relation(p(0, 0), p(-2, 5)).unwrap(), Relation::Right);
        assert_eq!(relation(p(0, 0), p(-5, 12)).unwrap(), Relation::AboveRight);
    }

    fn segmap(ids: Vec<u16>, w: usize) -> SegmentationMap {
        let labels = ids
            .iter()
            .filter(|&&i| i != 0)
            .map(|&i| {
                (
                    i,
                    ObjectLabel {
                        class_label: format!("c{i}"),
                        semantic_label: format!("object {i}"),
                        z_order: i as i32,
                    },
                )
            })
            .collect();
        SegmentationMap {
            height: ids.len() / w,
            width: w,
            ids,
            labels,
        }
    }

    #[test]
    fn three_objects_six_edges() {
        let m = segmap(vec![1, 0, 2, 0, 0, 0, 3, 0, 0], 3);
        let g = build_slg(&m, 0);
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 6);
        assert_eq!(g.relation_between(1, 3), Some(Relation::Below));
        assert_eq!(g.relation_between(1, 2), Some(Relation::Right));
        let empty = build_slg(&segmap(vec![0; 4], 2), 0);
        assert!(empty.nodes.is_empty() && empty.edges.is_empty());
    }

    #[test]
    fn classification_rules() {
        // object 1 static, object 2 moves one column
        let a = segmap(vec![1, 0, 2, 0], 4);
        let b = segmap(vec![1, 0, 0, 2], 4);
        let graphs = [build_slg(&a, 0), build_slg(&b, 1)];
        let cls = classify_objects(&graphs, &[a.clone(), b]).unwrap();
        assert_eq!(cls[&1], ObjectRole::Environment);
        assert_eq!(cls[&2], ObjectRole::Behavior);
        // visible in one frame only
        let c = segmap(vec![1, 0, 0, 0], 4);
        let cls = classify_objects(&[build_slg(&a, 0), build_slg(&c, 1)], &[a.clone(), c]).unwrap();
        assert_eq!(cls[&2], ObjectRole::Behavior);
        assert!(classify_objects(&[build_slg(&a, 0)], &[a]).is_err());
    }

    #[test]
    fn same_centroid_different_mask_is_behavior() {
        // {(0,0),(0,1),(0,2)} and {(0,0),(0,2)} share centroid (0,1)
        let a = segmap(vec![1, 1, 1, 0, 0, 0], 3);
        let b = segmap(vec![1, 0, 1, 0, 0, 0], 3);
        let ga = build_slg(&a, 0);
        let gb = build_slg(&b, 1);
        assert_eq!(ga.nodes[0].centroid, gb.nodes[0].centroid);
        let cls = classify_objects(&[ga, gb], &[a, b]).unwrap();
        assert_eq!(cls[&1], ObjectRole::Behavior);
    }

    #[test]
    fn diff_reports_motion_and_membership() {
        let a = build_slg(&segmap(vec![1, 2, 0, 0], 2), 0);
        let b = build_slg(&segmap(vec![1, 0, 2, 3], 2), 1);
        let d = diff_slg(&a, &b);
        assert_eq!(d.displacements[&1], Point::zero());
        assert_eq!(d.displacements[&2], p(1, -1));
        assert_eq!(d.appeared, BTreeSet::from([3]));
        assert!(d.disappeared.is_empty());
        let same = diff_slg(&a, &a);
        assert!(same.displacements.values().all(|&v| v == Point::zero()));
        assert!(same.appeared.is_empty() && same.disappeared.is_empty());
    }

    #[test]
    fn node_wire_round_trip_and_size() {
        let nodes = vec![SlgNode {
            object_id: 7,
            centroid: Point::new(Rational::new(3, 2), Rational::new(10, 3)),
            class_label: "man".into(),
            semantic_label: "a red man".into(),
        }];
        let bytes = encode_nodes(&nodes).unwrap();
        assert_eq!(bytes.len(), 2 + 2 + 16 + 2 + "man:a red man".len());
        assert_eq!(decode_nodes(&bytes).unwrap(), nodes);
        assert_eq!(encode_nodes(&[]).unwrap(), vec![0, 0]);
        assert!(matches!(decode_nodes(&bytes[..10]), Err(Error::MalformedPayload(_))));
    }
}
