//! Evaluation: retrieval metrics, ground truth, benchmark generation and
//! weight fitting.

pub mod bench;
pub mod fit;
pub mod metrics;
pub mod synth;
pub mod truth;

use std::collections::BTreeSet;

pub use bench::{generate_benchmark, BaseTable, BenchOptions, Benchmark};
pub use bench::{load_bases, write_bases, write_benchmark, LAKE_DIR, TRUTH_FILE};
pub use fit::{fit_weights, fit_with_holdout, FitReport, LabeledPair, Logistic};
pub use metrics::{
    attribute_precision, coverage, join_attribute_precision, join_coverage, precision_recall, Alignment,
};
pub use synth::{synthetic_bases, SynthLake, SynthOptions};
pub use truth::GroundTruth;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::hashing::derive_seed;
use crate::joins::{find_join_paths, JoinGraph};
use crate::profile::DatasetProfile;
use crate::relatedness::{collect_rows, rank, EvidenceSource, EvidenceWeights, LookupOptions, RankedDataset};

/// Metrics of one target at one k.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMetrics {
    pub target: String,
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    /// Mean plain coverage over the returned datasets.
    pub coverage: f64,
    /// Mean join-augmented coverage over the returned datasets.
    pub join_coverage: f64,
    pub attribute_precision: Option<f64>,
}

/// Averages over targets at one k.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub k: usize,
    pub targets: usize,
    pub precision: f64,
    pub recall: f64,
    pub coverage: f64,
    pub join_coverage: f64,
    pub attribute_precision: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalSettings<'a> {
    pub weights: &'a EvidenceWeights,
    pub budget_factor: usize,
    pub max_join_len: usize,
    pub graph: Option<&'a JoinGraph>,
}

fn alignments<S: EvidenceSource>(source: &S, target: &DatasetProfile, d: &RankedDataset) -> Vec<Alignment> {
    let catalog = source.catalog();
    d.rows
        .iter()
        .map(|r| Alignment {
            target_attr: target.attributes[r.target_attr].name.clone(),
            dataset: d.id.clone(),
            attr: catalog.attribute(r.candidate_attr).name.clone(),
        })
        .collect()
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Rank the lake for `target` once at the largest k and score every k in
/// `ks` on prefixes of that ranking, so larger k only ever adds results.
/// The target's own dataset is left out when it is part of the lake.
pub fn evaluate_target<S: EvidenceSource>(
    source: &S,
    target: &DatasetProfile,
    truth: &GroundTruth,
    ks: &[usize],
    settings: &EvalSettings<'_>,
) -> Result<Vec<TargetMetrics>> {
    let related = truth.related(&target.id)?;
    let catalog = source.catalog();
    let max_k = ks.iter().copied().max().unwrap_or(1).max(1);
    let opts = LookupOptions {
        budget: settings.budget_factor.saturating_mul(max_k),
        exclude: catalog.find_dataset(&target.id),
    };
    let collected = collect_rows(target, source, opts)?;
    let ranking = rank(&collected, catalog, settings.weights);
    let arity = target.attributes.len();

    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let top = &ranking[..k.min(ranking.len())];
        let ids: Vec<String> = top.iter().map(|d| d.id.clone()).collect();
        let tp = ids.iter().filter(|id| related.contains(*id)).count() as f64;
        let precision = if ids.is_empty() { 0.0 } else { tp / ids.len() as f64 };
        let recall = if related.is_empty() {
            0.0
        } else {
            tp / related.len() as f64
        };

        let paths = match settings.graph {
            Some(g) => {
                let starts: Vec<_> = top.iter().map(|d| d.dataset).collect();
                find_join_paths(g, &starts, &collected.evidence, settings.max_join_len)
            }
            None => Vec::new(),
        };
        let mut covs = Vec::new();
        let mut join_covs = Vec::new();
        for d in top {
            let base = d.covered();
            covs.push(coverage(arity, &base));
            let joined: Vec<BTreeSet<usize>> = paths
                .iter()
                .filter(|p| p.start() == d.dataset)
                .flat_map(|p| p.nodes[1..].iter())
                .filter_map(|n| collected.rows.get(n))
                .map(|rows| rows.iter().map(|r| r.target_attr).collect())
                .collect();
            join_covs.push(join_coverage(arity, &base, &joined));
        }
        let attr_precision = mean(
            top.iter()
                .filter_map(|d| attribute_precision(&alignments(source, target, d), truth, &target.id)),
        );
        out.push(TargetMetrics {
            target: target.id.clone(),
            k,
            precision,
            recall,
            coverage: mean(covs).unwrap_or(0.0),
            join_coverage: mean(join_covs).unwrap_or(0.0),
            attribute_precision: attr_precision,
        });
    }
    Ok(out)
}

/// [`evaluate_target`] over many targets in parallel; output follows the
/// order of `targets`.
pub fn evaluate_targets<S: EvidenceSource>(
    source: &S,
    targets: &[DatasetProfile],
    truth: &GroundTruth,
    ks: &[usize],
    settings: &EvalSettings<'_>,
) -> Result<Vec<TargetMetrics>> {
    let per: Vec<Result<Vec<TargetMetrics>>> = targets
        .par_iter()
        .map(|t| evaluate_target(source, t, truth, ks, settings))
        .collect();
    let mut out = Vec::new();
    for r in per {
        out.extend(r?);
    }
    Ok(out)
}

/// Seeded choice of `n` ids without replacement, kept in input order. All
/// ids when `n` is at least their count.
pub fn sample_targets(ids: &[String], n: usize, seed: u64) -> Vec<String> {
    if n >= ids.len() {
        return ids.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "eval-targets"));
    let mut picked = sample(&mut rng, ids.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| ids[i].clone()).collect()
}

/// Average per-target metrics into one row per k (in order of first
/// appearance).
pub fn summarize(per_target: &[TargetMetrics]) -> Vec<MetricRow> {
    let mut ks: Vec<usize> = Vec::new();
    for m in per_target {
        if !ks.contains(&m.k) {
            ks.push(m.k);
        }
    }
    ks.into_iter()
        .map(|k| {
            let rows: Vec<&TargetMetrics> = per_target.iter().filter(|m| m.k == k).collect();
            MetricRow {
                k,
                targets: rows.len(),
                precision: mean(rows.iter().map(|m| m.precision)).unwrap_or(0.0),
                recall: mean(rows.iter().map(|m| m.recall)).unwrap_or(0.0),
                coverage: mean(rows.iter().map(|m| m.coverage)).unwrap_or(0.0),
                join_coverage: mean(rows.iter().map(|m| m.join_coverage)).unwrap_or(0.0),
                attribute_precision: mean(rows.iter().filter_map(|m| m.attribute_precision)).unwrap_or(0.0),
            }
        })
        .collect()
}

/// Every candidate dataset found for `target`, labelled by the truth.
pub fn labeled_pairs<S: EvidenceSource>(
    source: &S,
    target: &DatasetProfile,
    truth: &GroundTruth,
    budget: usize,
) -> Result<Vec<LabeledPair>> {
    let related = truth.related(&target.id)?;
    let catalog = source.catalog();
    let opts = LookupOptions {
        budget,
        exclude: catalog.find_dataset(&target.id),
    };
    let collected = collect_rows(target, source, opts)?;
    Ok(rank(&collected, catalog, &EvidenceWeights::uniform())
        .into_iter()
        .map(|d| LabeledPair {
            dv: d.dv,
            related: related.contains(&d.id),
        })
        .collect())
}
