use crate::error::{Error, Result};

/// Non-negative weights of the five evidence aggregates, not all zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceWeights(pub [f64; 5]);

impl EvidenceWeights {
    pub fn new(w: [f64; 5]) -> Result<Self> {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroWeights);
        }
        Ok(EvidenceWeights(w))
    }

    pub fn uniform() -> Self {
        EvidenceWeights([1.0; 5])
    }
}

impl Default for EvidenceWeights {
    fn default() -> Self {
        EvidenceWeights::uniform()
    }
}

/// Share of the population strictly farther than `observed`.
pub fn column_weights(population: &[f64], observed: f64) -> f64 {
    if population.is_empty() {
        return 0.0;
    }
    population.iter().filter(|d| **d > observed).count() as f64 / population.len() as f64
}

/// Weighted mean of `distances`; the plain mean when every weight is zero.
pub fn aggregate_column(distances: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(distances.len(), weights.len());
    if distances.is_empty() {
        return 1.0;
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return distances.iter().sum::<f64>() / distances.len() as f64;
    }
    distances.iter().zip(weights).map(|(d, w)| d * w).sum::<f64>() / total
}

/// Weighted l2 norm `sqrt(sum((w_t dv_t)^2) / sum(w_t))`, clamped to [0, 1].
pub fn combine(dv: &[f64; 5], w: &EvidenceWeights) -> Result<f64> {
    combine_masked(dv, &[true; 5], w).ok_or(Error::ZeroWeights)
}

/// As [`combine`] over the dimensions marked `present` only. `None` when the
/// present dimensions carry no weight.
pub fn combine_masked(dv: &[f64; 5], present: &[bool; 5], w: &EvidenceWeights) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 0..5 {
        if present[t] {
            num += (w.0[t] * dv[t]).powi(2);
            den += w.0[t];
        }
    }
    (den > 0.0).then(|| (num / den).sqrt().clamp(0.0, 1.0))
}
