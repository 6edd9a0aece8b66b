use crate::{Error, Result};

/// Bits per quantized channel value, in `[2, 8]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct QuantBits(u8);

impl QuantBits {
    pub const FULL: QuantBits = QuantBits(8);

    pub fn new(bits: u8) -> Result<Self> {
        if (2..=8).contains(&bits) {
            Ok(QuantBits(bits))
        } else {
            Err(Error::InvalidConfig(format!("quantization depth {bits} outside [2, 8]")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Number of quantization levels, `2^b`.
    pub fn levels(self) -> u32 {
        1 << self.0
    }

    pub fn max_value(self) -> u16 {
        (self.levels() - 1) as u16
    }
}

impl Default for QuantBits {
    fn default() -> Self {
        QuantBits::FULL
    }
}

impl TryFrom<u8> for QuantBits {
    type Error = Error;
    fn try_from(b: u8) -> Result<Self> {
        QuantBits::new(b)
    }
}

impl From<QuantBits> for u8 {
    fn from(b: QuantBits) -> u8 {
        b.0
    }
}

/// Uniform quantizer: keeps the `b` most significant bits.
pub fn quantize(v: u8, b: QuantBits) -> u16 {
    (v >> (8 - b.0)) as u16
}

/// Midpoint reconstruction `(q + 1/2) * 256 / 2^b - 1/2`, rounded half up and
/// clamped to `[0, 255]`; the identity when `b = 8`.
pub fn dequantize(q: u16, b: QuantBits) -> u8 {
    let q = q.min(b.max_value()) as u32;
    if b.0 == 8 {
        return q as u8;
    }
    // twice the midpoint is (2q + 1) * 2^(8-b) - 1, an odd integer, so the
    // half-up rounding of the midpoint is (2q + 1) * 2^(7-b)
    (((2 * q + 1) << (7 - b.0)).min(255)) as u8
}

/// Packs values MSB-first at `b` bits each, zero-padded to a whole byte.
pub fn pack_values(values: &[u16], b: QuantBits) -> Vec<u8> {
    let bits = b.0 as usize;
    let mut out = vec![0u8; (values.len() * bits).div_ceil(8)];
    let mut pos = 0usize;
    for &v in values {
        for k in (0..bits).rev() {
            if v >> k & 1 == 1 {
                out[pos / 8] |= 0x80 >> (pos % 8);
            }
            pos += 1;
        }
    }
    out
}

pub fn unpack_values(bytes: &[u8], n: usize, b: QuantBits) -> Result<Vec<u16>> {
    let bits = b.0 as usize;
    if bytes.len() < (n * bits).div_ceil(8) {
        return Err(Error::MalformedPayload(format!(
            "{} bytes cannot hold {n} values of {bits} bits",
            bytes.len()
        )));
    }
    let mut pos = 0usize;
    Ok((0..n)
        .map(|_| {
            let mut v = 0u16;
            for _ in 0..bits {
                v = (v << 1) | ((bytes[pos / 8] >> (7 - pos % 8)) & 1) as u16;
                pos += 1;
            }
            v
        })
        .collect())
}

pub fn packed_len(n: usize, b: QuantBits) -> usize {
    (n * b.0 as usize).div_ceil(8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_bit_midpoint() {
        let b = QuantBits::new(4).unwrap();
        assert_eq!(quantize(255, b), 15);
        // (15 + 0.5) * 16 - 0.5 = 247.5 -> 248
        assert_eq!(dequantize(15, b), 248);
        assert_eq!(dequantize(0, b), 8);
    }

    #[test]
    fn midpoint_matches_float_formula() {
        for bits in 2..=8u8 {
            let b = QuantBits::new(bits).unwrap();
            for q in 0..b.levels() as u16 {
                let x = (q as f64 + 0.5) * 256.0 / b.levels() as f64 - 0.5;
                let want = (x.clamp(0.0, 255.0) + 0.5).floor() as u8;
                assert_eq!(dequantize(q, b), want, "b={bits} q={q}");
            }
        }
    }

    #[test]
    fn depth_bounds() {
        assert!(QuantBits::new(1).is_err());
        assert!(QuantBits::new(9).is_err());
        assert!(QuantBits::new(2).is_ok());
    }

    proptest! {
        #[test]
        fn full_depth_is_identity(v in any::<u8>()) {
            prop_assert_eq!(dequantize(quantize(v, QuantBits::FULL), QuantBits::FULL), v);
        }

        #[test]
        fn packing_round_trips(bits in 2u8..=8, raw in proptest::collection::vec(any::<u16>(), 0..64)) {
            let b = QuantBits::new(bits).unwrap();
            let values: Vec<u16> = raw.iter().map(|v| v & b.max_value()).collect();
            let packed = pack_values(&values, b);
            prop_assert_eq!(packed.len(), packed_len(values.len(), b));
            prop_assert_eq!(unpack_values(&packed, values.len(), b).unwrap(), values);
        }
    }
}
