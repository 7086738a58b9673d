//! Ranking lake datasets by relatedness to a target table.
//!
//! Each target attribute is looked up in every forest. Hits are merged into
//! one distance row per (target attribute, candidate dataset), aggregated per
//! evidence type with CCDF weights, and combined into one scalar distance.
//!
//! An evidence type is *applicable* to a row when both attributes carry that
//! representation (e.g. value tokens only exist for text, the KS distance
//! only for numbers). Inapplicable entries still read 1 in the row but are
//! left out of the aggregates, and a type with no applicable row drops out
//! of the final combination. Without this a table compared with itself could
//! never reach distance 0.

mod ks;
mod source;
mod weights;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

pub use ks::two_sample_ks;
pub use source::{exact_cosine_distance, exact_jaccard_distance, EvidenceSource, ExactSource};
pub use weights::{aggregate_column, column_weights, combine, combine_masked, EvidenceWeights};

use crate::error::{Error, Result};
use crate::index::{AttrId, Catalog, DatasetIdx, Evidence};
use crate::ingest::Kind;
use crate::profile::{AttributeProfile, DatasetProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow {
    /// Position of the attribute in the target.
    pub target_attr: usize,
    pub candidate_attr: AttrId,
    /// D_N, D_V, D_F, D_E, D_D; 1 means no evidence.
    pub d: [f64; 5],
    pub applicable: [bool; 5],
}

impl DistanceRow {
    pub fn mean(&self) -> f64 {
        self.d.iter().sum::<f64>() / 5.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct Collected {
    /// Rows per candidate dataset, ascending by target attribute.
    pub rows: BTreeMap<DatasetIdx, Vec<DistanceRow>>,
    /// Per target attribute and evidence type: every distance the lookups
    /// returned (the CCDF population).
    pub populations: Vec<[Vec<f64>; 5]>,
    /// Datasets with at least one forest hit for some target attribute.
    pub evidence: BTreeSet<DatasetIdx>,
}

#[derive(Debug, Clone, Copy)]
pub struct LookupOptions {
    pub budget: usize,
    /// Dataset to leave out of every lookup (the target itself when it is
    /// part of the lake).
    pub exclude: Option<DatasetIdx>,
}

fn target_has(attr: &AttributeProfile) -> [bool; 5] {
    [
        !attr.qset.is_empty(),
        attr.tset_len() > 0,
        !attr.rset.is_empty(),
        attr.embedding.is_some(),
        attr.kind == Kind::Numeric,
    ]
}

fn applicable(target: &[bool; 5], catalog: &Catalog, id: AttrId) -> [bool; 5] {
    let c = catalog.attribute(id);
    let cand = [c.has[0], c.has[1], c.has[2], c.has[3], c.kind == Kind::Numeric];
    std::array::from_fn(|t| target[t] && cand[t])
}

/// Two-sample KS distance between a target extent and an indexed numeric
/// attribute; 1 for anything that is not a numeric pair.
pub fn numeric_distance<S: EvidenceSource>(target: &AttributeProfile, candidate: AttrId, source: &S) -> f64 {
    match (&target.numeric_extent, source.numeric_extent(candidate)) {
        (Some(a), Some(b)) => two_sample_ks(a, b),
        _ => 1.0,
    }
}

/// Numeric candidates that pass the guards for a numeric target attribute:
/// a name or format hit on the attribute itself, or a dataset whose subject
/// attribute is related to the target's subject attribute.
fn guarded_numeric(
    catalog: &Catalog,
    own_hits: &[Vec<(AttrId, f64)>; 4],
    subject_related: &BTreeSet<DatasetIdx>,
    exclude: Option<DatasetIdx>,
) -> BTreeSet<AttrId> {
    let is_numeric = |id: &AttrId| catalog.attribute(*id).kind == Kind::Numeric;
    let mut out: BTreeSet<AttrId> = own_hits[Evidence::Name as usize]
        .iter()
        .chain(&own_hits[Evidence::Format as usize])
        .map(|(id, _)| *id)
        .filter(is_numeric)
        .collect();
    for &ds in subject_related {
        if Some(ds) != exclude {
            out.extend(catalog.attr_ids(ds).filter(is_numeric));
        }
    }
    out
}

pub fn collect_rows<S: EvidenceSource>(target: &DatasetProfile, source: &S, opts: LookupOptions) -> Result<Collected> {
    let catalog = source.catalog();
    if target.attributes.is_empty() {
        return Err(Error::Unprofiled(target.id.clone()));
    }
    let max_distance = source.threshold_distance();
    let extra = opts.exclude.map_or(0, |d| catalog.dataset(d).arity as usize);

    // Forest hits per target attribute and indexed evidence type.
    let hits: Vec<[Vec<(AttrId, f64)>; 4]> = target
        .attributes
        .par_iter()
        .map(|attr| {
            let probe = source.probe(attr)?;
            Ok(Evidence::INDEXED.map(|ev| {
                let mut found = source.lookup(ev, &probe, opts.budget + extra, max_distance);
                found.retain(|(id, _)| Some(catalog.dataset_of(*id)) != opts.exclude);
                found.truncate(opts.budget);
                found
            }))
        })
        .collect::<Result<_>>()?;

    let mut out = Collected {
        populations: vec![Default::default(); target.attributes.len()],
        ..Collected::default()
    };
    for per_attr in &hits {
        for (id, _) in per_attr.iter().flatten() {
            out.evidence.insert(catalog.dataset_of(*id));
        }
    }

    let subject_related: BTreeSet<DatasetIdx> = match target.subject {
        Some(s) => hits[s]
            .iter()
            .flatten()
            .filter(|(id, _)| catalog.dataset(catalog.dataset_of(*id)).subject == Some(*id))
            .map(|(id, _)| catalog.dataset_of(*id))
            .collect(),
        None => BTreeSet::new(),
    };

    for (i, attr) in target.attributes.iter().enumerate() {
        let mut pairs: BTreeMap<AttrId, [f64; 5]> = BTreeMap::new();
        for (t, found) in hits[i].iter().enumerate() {
            for &(id, d) in found {
                pairs.entry(id).or_insert([1.0; 5])[t] = d;
                out.populations[i][t].push(d);
            }
        }
        if attr.kind == Kind::Numeric {
            for id in guarded_numeric(catalog, &hits[i], &subject_related, opts.exclude) {
                let d = numeric_distance(attr, id, source);
                pairs.entry(id).or_insert([1.0; 5])[Evidence::Domain as usize] = d;
                out.populations[i][Evidence::Domain as usize].push(d);
            }
        }

        let has = target_has(attr);
        let mut best: BTreeMap<DatasetIdx, DistanceRow> = BTreeMap::new();
        for (id, d) in pairs {
            let row = DistanceRow {
                target_attr: i,
                candidate_attr: id,
                d,
                applicable: applicable(&has, catalog, id),
            };
            let ds = catalog.dataset_of(id);
            match best.get(&ds) {
                Some(cur) if cur.mean() <= row.mean() => {}
                _ => {
                    best.insert(ds, row);
                }
            }
        }
        for (ds, row) in best {
            out.rows.entry(ds).or_default().push(row);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDataset {
    pub dataset: DatasetIdx,
    pub id: String,
    pub distance: f64,
    /// Per-type aggregates; 1 where no row was applicable.
    pub dv: [f64; 5],
    pub present: [bool; 5],
    /// Number of target attributes with a row for this dataset.
    pub m: usize,
    pub rows: Vec<DistanceRow>,
}

impl RankedDataset {
    /// Target attribute positions aligned with this dataset.
    pub fn covered(&self) -> BTreeSet<usize> {
        self.rows.iter().map(|r| r.target_attr).collect()
    }
}

/// Aggregate one dataset's rows into its distance vector and combined
/// distance.
pub fn score_dataset(
    rows: &[DistanceRow],
    populations: &[[Vec<f64>; 5]],
    weights: &EvidenceWeights,
) -> ([f64; 5], [bool; 5], f64) {
    let mut dv = [1.0; 5];
    let mut present = [false; 5];
    for t in 0..5 {
        let (ds, ws): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.applicable[t])
            .map(|r| (r.d[t], column_weights(&populations[r.target_attr][t], r.d[t])))
            .unzip();
        if !ds.is_empty() {
            dv[t] = aggregate_column(&ds, &ws);
            present[t] = true;
        }
    }
    let combined = combine_masked(&dv, &present, weights).unwrap_or(1.0);
    (dv, present, combined)
}

/// Every candidate dataset, best first: ascending distance, then more
/// aligned attributes, then dataset id.
pub fn rank(collected: &Collected, catalog: &Catalog, weights: &EvidenceWeights) -> Vec<RankedDataset> {
    let mut out: Vec<RankedDataset> = collected
        .rows
        .iter()
        .map(|(&ds, rows)| {
            let (dv, present, distance) = score_dataset(rows, &collected.populations, weights);
            RankedDataset {
                dataset: ds,
                id: catalog.dataset(ds).id.clone(),
                distance,
                dv,
                present,
                m: rows.iter().map(|r| r.target_attr).collect::<BTreeSet<_>>().len(),
                rows: rows.clone(),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(b.m.cmp(&a.m))
            .then_with(|| a.id.cmp(&b.id))
    });
    out
}

#[derive(Debug, Clone)]
pub struct Ranking {
    pub results: Vec<RankedDataset>,
    pub evidence: BTreeSet<DatasetIdx>,
}

/// The `k` datasets most related to `target`.
pub fn top_k<S: EvidenceSource>(
    target: &DatasetProfile,
    source: &S,
    k: usize,
    weights: &EvidenceWeights,
    opts: LookupOptions,
) -> Result<Ranking> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let collected = collect_rows(target, source, opts)?;
    let mut results = rank(&collected, source.catalog(), weights);
    results.truncate(k);
    Ok(Ranking {
        results,
        evidence: collected.evidence,
    })
}
