use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hashing::{derive_seed, hash_bytes};

/// 2^61 - 1.
const MERSENNE_61: u64 = (1 << 61) - 1;

#[inline]
fn mulmod61(a: u64, b: u64) -> u64 {
    let r = u128::from(a) * u128::from(b);
    let mut s = (r as u64 & MERSENNE_61) + (r >> 61) as u64;
    while s >= MERSENNE_61 {
        s -= MERSENNE_61;
    }
    s
}

/// Fixed-length MinHash sketch. A signature whose components are all
/// `u64::MAX` stands for the empty set and matches nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashSignature {
    pub mins: Vec<u64>,
}

impl MinHashSignature {
    pub fn sentinel(h: usize) -> Self {
        MinHashSignature {
            mins: vec![u64::MAX; h],
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.mins.iter().all(|m| *m == u64::MAX)
    }

    pub fn len(&self) -> usize {
        self.mins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mins.is_empty()
    }
}

/// Universal hash family `h_i(x) = (a_i x + b_i) mod (2^61 - 1)` over a
/// seeded 64-bit digest of each element's bytes.
#[derive(Debug, Clone)]
pub struct MinHasher {
    element_seed: u64,
    a: Vec<u64>,
    b: Vec<u64>,
}

impl MinHasher {
    pub fn new(h: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "minhash-family"));
        let mut a = Vec::with_capacity(h);
        let mut b = Vec::with_capacity(h);
        for _ in 0..h {
            a.push(rng.random_range(1..MERSENNE_61));
            b.push(rng.random_range(0..MERSENNE_61));
        }
        MinHasher {
            element_seed: derive_seed(seed, "minhash-element"),
            a,
            b,
        }
    }

    pub fn width(&self) -> usize {
        self.a.len()
    }

    pub fn sign<'a, I>(&self, items: I) -> MinHashSignature
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut mins = vec![u64::MAX; self.width()];
        for item in items {
            let x = hash_bytes(item.as_bytes(), self.element_seed) % MERSENNE_61;
            for ((m, &a), &b) in mins.iter_mut().zip(&self.a).zip(&self.b) {
                let mut v = mulmod61(a, x) + b;
                if v >= MERSENNE_61 {
                    v -= MERSENNE_61;
                }
                if v < *m {
                    *m = v;
                }
            }
        }
        MinHashSignature { mins }
    }
}

/// One-off MinHash of a set. Prefer a shared [`MinHasher`] in loops.
pub fn minhash<'a, I>(set: I, h: usize, seed: u64) -> MinHashSignature
where
    I: IntoIterator<Item = &'a String>,
{
    MinHasher::new(h, seed).sign(set.into_iter().map(String::as_str))
}

/// `1 - matching/h`; 1 when either side is the empty-set sentinel.
pub fn estimate_jaccard_distance(s1: &MinHashSignature, s2: &MinHashSignature) -> Result<f64> {
    if s1.len() != s2.len() {
        return Err(Error::ParamMismatch(format!(
            "MinHash widths differ: {} vs {}",
            s1.len(),
            s2.len()
        )));
    }
    if s1.is_sentinel() || s2.is_sentinel() || s1.is_empty() {
        return Ok(1.0);
    }
    let matching = s1.mins.iter().zip(&s2.mins).filter(|(a, b)| a == b).count();
    Ok(1.0 - matching as f64 / s1.len() as f64)
}
