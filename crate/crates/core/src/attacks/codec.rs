//! Bit codecs used by the memorization adversary: uniform quantisation of
//! samples into a bit string, low-order mantissa (LSB) embedding, and sign
//! embedding.

use serde::{Deserialize, Serialize};

use crate::dataset::Domain;
use crate::error::{Error, Result};
use crate::model::Model;

/// Largest number of low-order mantissa bits the LSB codec may overwrite.
pub const MAX_LSB_BITS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleShape {
    Flat(usize),
    Image { height: usize, width: usize },
}

impl SampleShape {
    pub fn dim(&self) -> usize {
        match *self {
            SampleShape::Flat(d) => d,
            SampleShape::Image { height, width } => height * width,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codec {
    pub bits_per_feature: u8,
    pub shape: SampleShape,
    /// Number of encoded samples.
    pub count: usize,
}

impl Codec {
    pub fn new(bits_per_feature: u8, shape: SampleShape, count: usize) -> Result<Self> {
        let c = Codec {
            bits_per_feature,
            shape,
            count,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.bits_per_feature) {
            return Err(Error::invalid("codec.bits_per_feature", "must lie in 1..=8"));
        }
        if self.shape.dim() == 0 {
            return Err(Error::invalid("codec.shape", "empty sample shape"));
        }
        Ok(())
    }

    pub fn bit_len(&self) -> usize {
        self.count * self.shape.dim() * self.bits_per_feature as usize
    }

    fn levels(&self) -> u32 {
        1u32 << self.bits_per_feature
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecretPayload {
    pub bits: Vec<bool>,
    pub codec: Codec,
}

impl SecretPayload {
    pub fn new(bits: Vec<bool>, codec: Codec) -> Result<Self> {
        codec.validate()?;
        if bits.len() != codec.bit_len() {
            return Err(Error::DimensionMismatch {
                expected: codec.bit_len(),
                found: bits.len(),
            });
        }
        Ok(SecretPayload { bits, codec })
    }
}

/// Quantise every feature onto `2^b` evenly spaced levels spanning the whole
/// domain (both end points included) and emit the level index MSB-first.
pub fn samples_to_bits(samples: &[Vec<f64>], codec: Codec, domain: Domain) -> Result<SecretPayload> {
    codec.validate()?;
    if samples.len() != codec.count {
        return Err(Error::DimensionMismatch {
            expected: codec.count,
            found: samples.len(),
        });
    }
    let b = codec.bits_per_feature as usize;
    let top = f64::from(codec.levels() - 1);
    let mut bits = Vec::with_capacity(codec.bit_len());
    for s in samples {
        if s.len() != codec.shape.dim() {
            return Err(Error::DimensionMismatch {
                expected: codec.shape.dim(),
                found: s.len(),
            });
        }
        for &x in s {
            let level = (domain.to_unit(domain.clip(x)) * top).round() as u32;
            for k in (0..b).rev() {
                bits.push((level >> k) & 1 == 1);
            }
        }
    }
    SecretPayload::new(bits, codec)
}

pub fn bits_to_samples(payload: &SecretPayload, domain: Domain) -> Result<Vec<Vec<f64>>> {
    let codec = payload.codec;
    codec.validate()?;
    if payload.bits.len() != codec.bit_len() {
        return Err(Error::DimensionMismatch {
            expected: codec.bit_len(),
            found: payload.bits.len(),
        });
    }
    let b = codec.bits_per_feature as usize;
    let step = domain.width() / f64::from(codec.levels() - 1);
    let values: Vec<f64> = payload
        .bits
        .chunks(b)
        .map(|chunk| {
            let level = chunk.iter().fold(0u32, |acc, &bit| (acc << 1) | u32::from(bit));
            domain.clip(domain.lo + f64::from(level) * step)
        })
        .collect();
    Ok(values.chunks(codec.shape.dim()).map(<[f64]>::to_vec).collect())
}

fn check_k(k_bits: u32) -> Result<()> {
    if !(1..=MAX_LSB_BITS).contains(&k_bits) {
        return Err(Error::invalid("k_bits", format!("must lie in 1..={MAX_LSB_BITS}")));
    }
    Ok(())
}

pub fn lsb_capacity(model: &Model, k_bits: u32) -> usize {
    model.parameter_count() * k_bits as usize
}

/// Write `bits` into the `k_bits` lowest mantissa bits of consecutive
/// parameters, MSB-first within each parameter's field. Sign and exponent
/// bits are never touched.
pub fn lsb_encode_bits(model: &Model, bits: &[bool], k_bits: u32) -> Result<Model> {
    check_k(k_bits)?;
    let cap = lsb_capacity(model, k_bits);
    if bits.len() > cap {
        return Err(Error::CapacityExceeded {
            needed: bits.len(),
            available: cap,
        });
    }
    let k = k_bits as usize;
    let mut params = model.get_parameters();
    for (p, chunk) in params.iter_mut().zip(bits.chunks(k)) {
        let mut raw = p.to_bits();
        for (t, &bit) in chunk.iter().enumerate() {
            let pos = k - 1 - t;
            if bit {
                raw |= 1u64 << pos;
            } else {
                raw &= !(1u64 << pos);
            }
        }
        *p = f64::from_bits(raw);
    }
    model.set_parameters(&params)
}

pub fn lsb_decode_bits(model: &Model, n_bits: usize, k_bits: u32) -> Result<Vec<bool>> {
    check_k(k_bits)?;
    let cap = lsb_capacity(model, k_bits);
    if n_bits > cap {
        return Err(Error::CapacityExceeded {
            needed: n_bits,
            available: cap,
        });
    }
    let k = k_bits as usize;
    let mut out = Vec::with_capacity(n_bits);
    for p in model.get_parameters() {
        let raw = p.to_bits();
        for t in 0..k {
            if out.len() == n_bits {
                return Ok(out);
            }
            out.push((raw >> (k - 1 - t)) & 1 == 1);
        }
    }
    Ok(out)
}

pub fn lsb_encode(model: &Model, payload: &SecretPayload, k_bits: u32) -> Result<Model> {
    lsb_encode_bits(model, &payload.bits, k_bits)
}

pub fn lsb_decode(model: &Model, codec: Codec, k_bits: u32) -> Result<SecretPayload> {
    SecretPayload::new(lsb_decode_bits(model, codec.bit_len(), k_bits)?, codec)
}

/// Read the signs of the first `n` parameters: non-negative (including zero)
/// is bit 1.
pub fn sign_decode(model: &Model, n: usize) -> Result<Vec<bool>> {
    let params = model.get_parameters();
    if n > params.len() {
        return Err(Error::CapacityExceeded {
            needed: n,
            available: params.len(),
        });
    }
    Ok(params[..n].iter().map(|&v| v >= 0.0).collect())
}

/// Fraction of positions where the two bit strings agree.
pub fn bit_recovery_rate(expected: &[bool], recovered: &[bool]) -> Result<f64> {
    if expected.len() != recovered.len() {
        return Err(Error::DimensionMismatch {
            expected: expected.len(),
            found: recovered.len(),
        });
    }
    if expected.is_empty() {
        return Err(Error::Empty("payload"));
    }
    let same = expected.iter().zip(recovered).filter(|(a, b)| a == b).count();
    Ok(same as f64 / expected.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use proptest::prelude::*;

    #[test]
    fn eight_bits_are_lossless_on_integers() {
        let codec = Codec::new(8, SampleShape::Flat(4), 2).unwrap();
        let samples = vec![vec![0.0, 255.0, 17.0, 128.0], vec![1.0, 254.0, 99.0, 200.0]];
        let payload = samples_to_bits(&samples, codec, Domain::PIXEL).unwrap();
        assert_eq!(payload.bits.len(), 64);
        assert_eq!(bits_to_samples(&payload, Domain::PIXEL).unwrap(), samples);
    }

    #[test]
    fn one_bit_snaps_to_end_points() {
        let codec = Codec::new(1, SampleShape::Flat(4), 1).unwrap();
        let payload = samples_to_bits(&[vec![3.0, 120.0, 130.0, 250.0]], codec, Domain::PIXEL).unwrap();
        assert_eq!(payload.bits, vec![false, false, true, true]);
        assert_eq!(
            bits_to_samples(&payload, Domain::PIXEL).unwrap(),
            vec![vec![0.0, 0.0, 255.0, 255.0]]
        );
    }

    #[test]
    fn codec_errors() {
        assert!(Codec::new(0, SampleShape::Flat(3), 1).is_err());
        assert!(Codec::new(9, SampleShape::Flat(3), 1).is_err());
        let codec = Codec::new(2, SampleShape::Image { height: 2, width: 2 }, 1).unwrap();
        assert_eq!(codec.bit_len(), 8);
        assert!(SecretPayload::new(vec![true; 7], codec).is_err());
        assert!(samples_to_bits(&[vec![0.0; 3]], codec, Domain::PIXEL).is_err());
    }

    #[test]
    fn lsb_capacity_and_overflow() {
        let m = Model::init(ModelSpec::softmax(4, 3), 1).unwrap();
        assert_eq!(lsb_capacity(&m, 16), 240);
        assert!(lsb_encode_bits(&m, &vec![true; 241], 16).is_err());
        assert!(lsb_encode_bits(&m, &[true], 0).is_err());
        assert!(lsb_encode_bits(&m, &[true], 21).is_err());
    }

    #[test]
    fn sign_decode_is_scale_invariant() {
        let m = Model::init(ModelSpec::mlp(5, 4, 3), 8).unwrap();
        let doubled: Vec<f64> = m.get_parameters().iter().map(|v| 2.0 * v).collect();
        let m2 = m.set_parameters(&doubled).unwrap();
        let n = m.parameter_count();
        assert_eq!(sign_decode(&m, n).unwrap(), sign_decode(&m2, n).unwrap());
        assert!(sign_decode(&m, n + 1).is_err());
        let z = Model::zeros(ModelSpec::softmax(2, 2)).unwrap();
        assert!(sign_decode(&z, 6).unwrap().iter().all(|b| *b));
    }

    proptest! {
        #[test]
        fn lsb_roundtrip_leaves_high_bits(seed in any::<u64>(), k in 1u32..=20, frac in 0.0f64..=1.0) {
            let m = Model::init(ModelSpec::mlp(6, 5, 3), seed).unwrap();
            let n = (frac * lsb_capacity(&m, k) as f64) as usize;
            let mut rng = crate::seed::rng(seed, "bits", 0);
            let bits: Vec<bool> = (0..n).map(|_| rand::Rng::random(&mut rng)).collect();
            let enc = lsb_encode_bits(&m, &bits, k).unwrap();
            prop_assert_eq!(lsb_decode_bits(&enc, n, k).unwrap(), bits);
            let high = !((1u64 << k) - 1);
            for (a, b) in m.get_parameters().iter().zip(enc.get_parameters()) {
                prop_assert_eq!(a.to_bits() & high, b.to_bits() & high);
            }
        }

        #[test]
        fn quantizer_roundtrips_bits(seed in any::<u64>(), b in 1u8..=8, count in 1usize..4) {
            let codec = Codec::new(b, SampleShape::Flat(5), count).unwrap();
            let mut rng = crate::seed::rng(seed, "bits", 1);
            let bits: Vec<bool> = (0..codec.bit_len()).map(|_| rand::Rng::random(&mut rng)).collect();
            let payload = SecretPayload::new(bits, codec).unwrap();
            let dom = Domain::new(-3.0, 7.5).unwrap();
            let samples = bits_to_samples(&payload, dom).unwrap();
            prop_assert_eq!(samples_to_bits(&samples, codec, dom).unwrap(), payload);
        }

        #[test]
        fn quantizer_error_bound(x in 0.0f64..=255.0, b in 1u8..=8) {
            let codec = Codec::new(b, SampleShape::Flat(1), 1).unwrap();
            let payload = samples_to_bits(&[vec![x]], codec, Domain::PIXEL).unwrap();
            let back = bits_to_samples(&payload, Domain::PIXEL).unwrap()[0][0];
            prop_assert!((back - x).abs() <= 255.0 / f64::from(1u32 << b));
        }
    }
}
