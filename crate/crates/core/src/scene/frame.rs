use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

pub type Rgb = [u8; 3];

/// A row-major grid of 8-bit RGB pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    height: usize,
    width: usize,
    pixels: Vec<Rgb>,
}

impl Frame {
    pub fn filled(height: usize, width: usize, color: Rgb) -> Self {
        Frame {
            height,
            width,
            pixels: vec![color; height * width],
        }
    }

    pub fn from_pixels(height: usize, width: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {height}x{width} frame",
                pixels.len()
            )));
        }
        Ok(Frame {
            height,
            width,
            pixels,
        })
    }

    /// Builds a frame from interleaved channel values (`r g b r g b ...`).
    pub fn from_channel_values(height: usize, width: usize, values: &[u8]) -> Result<Self> {
        if values.len() != 3 * height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} channel values for a {height}x{width} frame",
                values.len()
            )));
        }
        let pixels = values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Frame {
            height,
            width,
            pixels,
        })
    }

    pub fn channel_values(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, rgb: Rgb) {
        self.pixels[row * self.width + col] = rgb;
    }

    /// Binary PPM (P6) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().flatten());
        out
    }
}

#[derive(Serialize, Deserialize)]
struct FrameDoc {
    height: usize,
    width: usize,
    rgb: String,
}

impl Serialize for Frame {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameDoc {
            height: self.height,
            width: self.width,
            rgb: B64.encode(self.channel_values()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Frame {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Frame, D::Error> {
        let doc = FrameDoc::deserialize(d)?;
        let bytes = B64.decode(doc.rgb).map_err(serde::de::Error::custom)?;
        Frame::from_channel_values(doc.height, doc.width, &bytes).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_header_and_size() {
        let f = Frame::filled(2, 3, [1, 2, 3]);
        let ppm = f.to_ppm();
        assert!(ppm.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(ppm.len(), b"P6\n3 2\n255\n".len() + 18);
    }

    #[test]
    fn rejects_wrong_value_count() {
        assert!(Frame::from_channel_values(2, 2, &[0; 11]).is_err());
    }
}
