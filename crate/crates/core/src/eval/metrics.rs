use std::collections::{BTreeMap, BTreeSet};

use super::truth::GroundTruth;
use crate::error::Result;

/// Precision and recall of a returned list of dataset ids. An empty result
/// has precision 0; an empty truth set has recall 0.
pub fn precision_recall(result: &[String], truth: &GroundTruth, target: &str) -> Result<(f64, f64)> {
    let related = truth.related(target)?;
    let returned: BTreeSet<&String> = result.iter().collect();
    let tp = returned.iter().filter(|id| related.contains(id.as_str())).count() as f64;
    let p = if returned.is_empty() {
        0.0
    } else {
        tp / returned.len() as f64
    };
    let r = if related.is_empty() {
        0.0
    } else {
        tp / related.len() as f64
    };
    Ok((p, r))
}

/// Share of the target's attributes that are covered.
pub fn coverage(arity: usize, covered: &BTreeSet<usize>) -> f64 {
    if arity == 0 {
        return 0.0;
    }
    covered.iter().filter(|a| **a < arity).count() as f64 / arity as f64
}

/// Coverage of the union of a start dataset's alignment and the alignments
/// of every dataset on its join paths.
pub fn join_coverage<'a>(
    arity: usize,
    start: &BTreeSet<usize>,
    path_nodes: impl IntoIterator<Item = &'a BTreeSet<usize>>,
) -> f64 {
    let mut all = start.clone();
    for covered in path_nodes {
        all.extend(covered);
    }
    coverage(arity, &all)
}

/// One aligned pair: a target attribute and an attribute of a lake dataset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Alignment {
    pub target_attr: String,
    pub dataset: String,
    pub attr: String,
}

/// Share of correct alignments; `None` when there are none.
pub fn attribute_precision(alignments: &[Alignment], truth: &GroundTruth, target: &str) -> Option<f64> {
    if alignments.is_empty() {
        return None;
    }
    let tp = alignments
        .iter()
        .filter(|a| truth.attribute_related(target, &a.target_attr, &a.dataset, &a.attr))
        .count();
    Some(tp as f64 / alignments.len() as f64)
}

/// Join-path variant: the attributes aligned to one target attribute form
/// a set, which is correct when at least one member is.
pub fn join_attribute_precision(alignments: &[Alignment], truth: &GroundTruth, target: &str) -> Option<f64> {
    let mut sets: BTreeMap<&str, bool> = BTreeMap::new();
    for a in alignments {
        let ok = truth.attribute_related(target, &a.target_attr, &a.dataset, &a.attr);
        *sets.entry(a.target_attr.as_str()).or_default() |= ok;
    }
    if sets.is_empty() {
        return None;
    }
    Some(sets.values().filter(|ok| **ok).count() as f64 / sets.len() as f64)
}
