//! Logistic regression over the five aggregate distances, used to derive
//! the weights of the final combination.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::relatedness::EvidenceWeights;

pub const MIN_PAIRS: usize = 20;
const RIDGE: f64 = 1e-3;
const MIN_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPair {
    pub dv: [f64; 5],
    pub related: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic {
    pub coefficients: [f64; 5],
    pub intercept: f64,
}

impl Logistic {
    pub fn probability(&self, dv: &[f64; 5]) -> f64 {
        let z = self.intercept + self.coefficients.iter().zip(dv).map(|(c, x)| c * x).sum::<f64>();
        1.0 / (1.0 + (-z).exp())
    }

    pub fn accuracy(&self, pairs: &[LabeledPair]) -> f64 {
        if pairs.is_empty() {
            return 0.0;
        }
        let hits = pairs
            .iter()
            .filter(|p| (self.probability(&p.dv) >= 0.5) == p.related)
            .count();
        hits as f64 / pairs.len() as f64
    }

    /// Related pairs have small distances, so useful evidence shows up as a
    /// negative coefficient. Weights are the negated coefficients, floored.
    pub fn weights(&self) -> EvidenceWeights {
        EvidenceWeights(self.coefficients.map(|c| (-c).max(MIN_WEIGHT)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: Logistic,
    pub weights: EvidenceWeights,
    pub train_accuracy: f64,
    pub holdout_accuracy: Option<f64>,
    pub train_size: usize,
    pub holdout_size: usize,
}

fn check(pairs: &[LabeledPair]) -> Result<()> {
    if pairs.len() < MIN_PAIRS {
        return Err(Error::Training(format!(
            "need at least {MIN_PAIRS} labelled pairs, got {}",
            pairs.len()
        )));
    }
    let pos = pairs.iter().filter(|p| p.related).count();
    if pos == 0 || pos == pairs.len() {
        return Err(Error::Training("both labels must be present".into()));
    }
    if pairs.iter().any(|p| p.dv.iter().any(|x| !x.is_finite())) {
        return Err(Error::Training("non-finite feature".into()));
    }
    Ok(())
}

/// Solve `a x = b` for a small dense system by Gaussian elimination with
/// partial pivoting.
fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            let (above, below) = a.split_at_mut(row);
            for (x, p) in below[0][col..].iter_mut().zip(&above[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Newton's method on the mean log-loss with a small ridge penalty on the
/// coefficients (not the intercept). Deterministic for a given input.
pub fn fit_logistic(pairs: &[LabeledPair]) -> Result<Logistic> {
    check(pairs)?;
    let n = pairs.len() as f64;
    // beta[0] is the intercept.
    let mut beta = [0.0f64; 6];
    for _ in 0..100 {
        let mut grad = [0.0; 6];
        let mut hess = [[0.0; 6]; 6];
        for p in pairs {
            let x = [1.0, p.dv[0], p.dv[1], p.dv[2], p.dv[3], p.dv[4]];
            let z: f64 = beta.iter().zip(&x).map(|(b, v)| b * v).sum();
            let mu = 1.0 / (1.0 + (-z).exp());
            let y = if p.related { 1.0 } else { 0.0 };
            let s = (mu * (1.0 - mu)).max(1e-12);
            for i in 0..6 {
                grad[i] += (mu - y) * x[i] / n;
                for j in 0..6 {
                    hess[i][j] += s * x[i] * x[j] / n;
                }
            }
        }
        for i in 1..6 {
            grad[i] += RIDGE * beta[i];
            hess[i][i] += RIDGE;
        }
        let step = solve(hess, grad).ok_or_else(|| Error::Training("singular system".into()))?;
        for i in 0..6 {
            beta[i] -= step[i];
        }
        if step.iter().map(|s| s * s).sum::<f64>().sqrt() < 1e-10 {
            break;
        }
    }
    Ok(Logistic {
        intercept: beta[0],
        coefficients: [beta[1], beta[2], beta[3], beta[4], beta[5]],
    })
}

/// Fit on every pair.
pub fn fit_weights(pairs: &[LabeledPair]) -> Result<FitReport> {
    let model = fit_logistic(pairs)?;
    Ok(FitReport {
        model,
        weights: model.weights(),
        train_accuracy: model.accuracy(pairs),
        holdout_accuracy: None,
        train_size: pairs.len(),
        holdout_size: 0,
    })
}

/// Fit on a seeded split, holding out `holdout` (a fraction in (0, 1)) of
/// the pairs for the reported accuracy.
pub fn fit_with_holdout(pairs: &[LabeledPair], holdout: f64, seed: u64) -> Result<FitReport> {
    if !(0.0..1.0).contains(&holdout) || holdout == 0.0 {
        return Err(Error::Training(format!("holdout fraction {holdout} outside (0, 1)")));
    }
    let mut shuffled = pairs.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((pairs.len() as f64) * holdout).round() as usize;
    let (test, train) = shuffled.split_at(cut.min(pairs.len()));
    let model = fit_logistic(train)?;
    Ok(FitReport {
        model,
        weights: model.weights(),
        train_accuracy: model.accuracy(train),
        holdout_accuracy: Some(model.accuracy(test)),
        train_size: train.len(),
        holdout_size: test.len(),
    })
}
