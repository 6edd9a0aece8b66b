use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::frame::{Frame, Rgb};
use crate::rational::{round_half_up, Point};
use crate::slg;
use crate::{Error, Result};

/// A rectangular RGB patch with a boolean coverage mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sprite {
    height: usize,
    width: usize,
    rgb: Vec<Rgb>,
    mask: Vec<bool>,
}

impl Sprite {
    pub fn new(height: usize, width: usize, rgb: Vec<Rgb>, mask: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput("sprite with zero area".into()));
        }
        if rgb.len() != height * width || mask.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "sprite {height}x{width} with {} colors and {} mask bits",
                rgb.len(),
                mask.len()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyMask);
        }
        Ok(Sprite {
            height,
            width,
            rgb,
            mask,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rgb(&self) -> &[Rgb] {
        &self.rgb
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn covers(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    #[inline]
    pub fn color(&self, row: usize, col: usize) -> Rgb {
        self.rgb[row * self.width + col]
    }

    /// Local (row, col) coordinates of the covered pixels, row-major.
    pub fn mask_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (i / self.width, i % self.width))
    }

    pub fn mask_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Centroid of the mask in sprite-local coordinates.
    pub fn local_centroid(&self) -> Point {
        slg::centroid(self.mask_pixels()).expect("sprite masks are nonempty")
    }

    /// Top-left offset that puts the mask centroid on `target`, halves rounded up.
    pub fn placement_for(&self, target: Point) -> (i64, i64) {
        let d = target - self.local_centroid();
        (round_half_up(d.row), round_half_up(d.col))
    }

    /// Paints the masked pixels with the sprite's top-left corner at `(top, left)`.
    /// Pixels falling outside the frame are skipped.
    pub fn paint(&self, frame: &mut Frame, top: i64, left: i64) {
        let (h, w) = (frame.height() as i64, frame.width() as i64);
        for (r, c) in self.mask_pixels() {
            let (fr, fc) = (top + r as i64, left + c as i64);
            if (0..h).contains(&fr) && (0..w).contains(&fc) {
                frame.set(fr as usize, fc as usize, self.color(r, c));
            }
        }
    }
}

pub(crate) fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

pub(crate) fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect()
}

#[derive(Serialize, Deserialize)]
struct SpriteDoc {
    height: usize,
    width: usize,
    rgb: String,
    mask: String,
}

impl Serialize for Sprite {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rgb: Vec<u8> = self.rgb.iter().flatten().copied().collect();
        SpriteDoc {
            height: self.height,
            width: self.width,
            rgb: B64.encode(rgb),
            mask: B64.encode(pack_bits(&self.mask)),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sprite {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Sprite, D::Error> {
        use serde::de::Error as _;
        let doc = SpriteDoc::deserialize(d)?;
        let n = doc.height * doc.width;
        let rgb = B64.decode(doc.rgb).map_err(D::Error::custom)?;
        let mask = B64.decode(doc.mask).map_err(D::Error::custom)?;
        if rgb.len() != 3 * n || mask.len() != n.div_ceil(8) {
            return Err(D::Error::custom("sprite payload length mismatch"));
        }
        let rgb = rgb.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Sprite::new(doc.height, doc.width, rgb, unpack_bits(&mask, n)).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn square(n: usize) -> Sprite {
        Sprite::new(n, n, vec![[9, 9, 9]; n * n], vec![true; n * n]).unwrap()
    }

    #[test]
    fn empty_mask_rejected() {
        assert!(matches!(
            Sprite::new(1, 2, vec![[0; 3]; 2], vec![false; 2]),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn placement_centres_mask_on_target() {
        let s = square(2);
        assert_eq!(s.local_centroid(), Point::new(Rational::new(1, 2), Rational::new(1, 2)));
        // target (10, 10) - (1/2, 1/2) = 9.5 -> rounds up to 10
        assert_eq!(s.placement_for(Point::from_ints(10, 10)), (10, 10));
        let s = square(3);
        assert_eq!(s.placement_for(Point::from_ints(10, 10)), (9, 9));
    }

    #[test]
    fn bit_packing_round_trips() {
        let bits = vec![true, false, true, true, false, false, false, true, true];
        let packed = pack_bits(&bits);
        assert_eq!(packed, vec![0b1011_0001, 0b1000_0000]);
        assert_eq!(unpack_bits(&packed, bits.len()), bits);
    }
}
