use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hashing::derive_seed;

/// Sign bits of a vector against `len` random Gaussian directions. A
/// degenerate signature (from the zero vector) matches nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RPSignature {
    pub words: Vec<u64>,
    pub len: usize,
    pub degenerate: bool,
}

impl RPSignature {
    pub fn degenerate(len: usize) -> Self {
        RPSignature {
            words: vec![0; len.div_ceil(64)],
            len,
            degenerate: true,
        }
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn hamming(&self, other: &RPSignature) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct Projector {
    dim: usize,
    bits: usize,
    /// `bits` rows of `dim` Gaussian components.
    planes: Vec<f64>,
}

impl Projector {
    pub fn new(dim: usize, bits: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "random-projection"));
        let planes = (0..dim * bits).map(|_| StandardNormal.sample(&mut rng)).collect();
        Projector { dim, bits, planes }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn project(&self, v: &[f32]) -> Result<RPSignature> {
        if v.len() != self.dim {
            return Err(Error::ParamMismatch(format!(
                "vector has dimension {}, projector expects {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().all(|x| *x == 0.0) {
            return Ok(RPSignature::degenerate(self.bits));
        }
        let mut words = vec![0u64; self.bits.div_ceil(64)];
        for (j, plane) in self.planes.chunks_exact(self.dim).enumerate() {
            let dot: f64 = plane.iter().zip(v).map(|(r, x)| r * f64::from(*x)).sum();
            if dot >= 0.0 {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        Ok(RPSignature {
            words,
            len: self.bits,
            degenerate: false,
        })
    }
}

pub fn random_projection(v: &[f32], b: usize, seed: u64) -> RPSignature {
    Projector::new(v.len(), b, seed)
        .project(v)
        .expect("projector built for this dimension")
}

/// Fraction of differing bits.
pub fn hamming_fraction(s1: &RPSignature, s2: &RPSignature) -> Result<f64> {
    if s1.len != s2.len {
        return Err(Error::ParamMismatch(format!(
            "projection widths differ: {} vs {}",
            s1.len, s2.len
        )));
    }
    if s1.degenerate || s2.degenerate {
        return Ok(1.0);
    }
    Ok(f64::from(s1.hamming(s2)) / s1.len as f64)
}

/// `1 - cos(pi * hamming_fraction)`, clamped to [0, 1].
pub fn estimate_cosine_distance(s1: &RPSignature, s2: &RPSignature) -> Result<f64> {
    let h = hamming_fraction(s1, s2)?;
    if s1.degenerate || s2.degenerate {
        return Ok(1.0);
    }
    Ok((1.0 - (std::f64::consts::PI * h).cos()).clamp(0.0, 1.0))
}
