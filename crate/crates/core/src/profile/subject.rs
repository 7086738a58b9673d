//! Subject attribute heuristic: prefer leftmost text columns with few nulls
//! and many distinct values.

use std::collections::HashSet;

use crate::ingest::{Dataset, Kind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectWeights {
    pub uniqueness: f64,
    pub completeness: f64,
    pub leftness: f64,
}

impl Default for SubjectWeights {
    fn default() -> Self {
        SubjectWeights::from([0.4, 0.3, 0.3])
    }
}

impl From<[f64; 3]> for SubjectWeights {
    fn from(w: [f64; 3]) -> Self {
        SubjectWeights {
            uniqueness: w[0],
            completeness: w[1],
            leftness: w[2],
        }
    }
}

pub fn subject_score(dataset: &Dataset, position: usize, weights: &SubjectWeights) -> f64 {
    let attr = &dataset.attributes[position];
    let rows = dataset.row_count.max(1) as f64;
    let distinct = attr.values.iter().map(String::as_str).collect::<HashSet<_>>().len();
    let uniqueness = distinct as f64 / rows;
    let null_ratio = attr.null_count as f64 / rows;
    let leftness = 1.0 - position as f64 / dataset.arity().max(1) as f64;
    weights.uniqueness * uniqueness + weights.completeness * (1.0 - null_ratio) + weights.leftness * leftness
}

/// Position of the subject attribute, or `None` when the dataset has no text
/// attribute. Ties go to the leftmost column.
pub fn detect_subject_attribute(dataset: &Dataset, weights: &SubjectWeights) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for attr in dataset.attributes.iter().filter(|a| a.kind == Kind::Text) {
        let score = subject_score(dataset, attr.position, weights);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((attr.position, score));
        }
    }
    best.map(|(p, _)| p)
}
