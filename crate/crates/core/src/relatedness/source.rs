use std::collections::BTreeSet;

use crate::error::Result;
use crate::index::{AttrId, Catalog, DatasetIdx, Evidence, LakeIndex, Probe};
use crate::profile::{AttributeProfile, DatasetProfile};

const DISTANCE_EPS: f64 = 1e-9;

/// Where the query pipeline gets its per-evidence neighbours from.
pub trait EvidenceSource: Sync {
    type Probe: Send + Sync;

    fn catalog(&self) -> &Catalog;
    /// Largest distance a lookup may return (`1 - tau`).
    fn threshold_distance(&self) -> f64;
    fn probe(&self, attr: &AttributeProfile) -> Result<Self::Probe>;
    /// Probe for an attribute that is already part of the lake.
    fn stored_probe(&self, id: AttrId) -> Self::Probe;
    /// Up to `budget` neighbours within `max_distance`, ascending by
    /// (distance, id).
    fn lookup(&self, evidence: Evidence, probe: &Self::Probe, budget: usize, max_distance: f64) -> Vec<(AttrId, f64)>;
    fn numeric_extent(&self, id: AttrId) -> Option<&[f64]>;
}

impl EvidenceSource for LakeIndex {
    type Probe = Probe;

    fn catalog(&self) -> &Catalog {
        LakeIndex::catalog(self)
    }

    fn threshold_distance(&self) -> f64 {
        LakeIndex::threshold_distance(self)
    }

    fn probe(&self, attr: &AttributeProfile) -> Result<Probe> {
        LakeIndex::probe(self, attr)
    }

    fn stored_probe(&self, id: AttrId) -> Probe {
        LakeIndex::stored_probe(self, id)
    }

    fn lookup(&self, evidence: Evidence, probe: &Probe, budget: usize, max_distance: f64) -> Vec<(AttrId, f64)> {
        LakeIndex::lookup(self, evidence, probe, budget, max_distance)
    }

    fn numeric_extent(&self, id: AttrId) -> Option<&[f64]> {
        LakeIndex::numeric_extent(self, id)
    }
}

pub fn exact_jaccard_distance(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    1.0 - inter as f64 / (a.len() + b.len() - inter) as f64
}

pub fn exact_cosine_distance(u: &[f32], v: &[f32]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
    let nu: f64 = u.iter().map(|a| f64::from(*a).powi(2)).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| f64::from(*a).powi(2)).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 1.0;
    }
    if u == v {
        // Exact, where the quotient below can land a few ulps off 1.
        return 0.0;
    }
    (1.0 - dot / (nu * nv)).clamp(0.0, 1.0)
}

/// Brute-force source over exact set and vector distances. Used for small
/// lakes and as a reference for the sketch-based index.
#[derive(Debug, Clone)]
pub struct ExactSource {
    catalog: Catalog,
    attributes: Vec<AttributeProfile>,
    threshold: f64,
}

impl ExactSource {
    pub fn new(profiles: &[DatasetProfile], threshold: f64) -> Self {
        ExactSource {
            catalog: Catalog::from_profiles(profiles),
            attributes: profiles.iter().flat_map(|p| p.attributes.iter().cloned()).collect(),
            threshold,
        }
    }

    pub fn distance(evidence: Evidence, a: &AttributeProfile, b: &AttributeProfile) -> Option<f64> {
        let set = |s: &BTreeSet<String>| (!s.is_empty()).then_some(());
        match evidence {
            Evidence::Name => {
                set(&a.qset)?;
                set(&b.qset)?;
                Some(exact_jaccard_distance(&a.qset, &b.qset))
            }
            Evidence::Value => {
                let (x, y) = (a.tset.as_ref()?, b.tset.as_ref()?);
                set(x)?;
                set(y)?;
                Some(exact_jaccard_distance(x, y))
            }
            Evidence::Format => {
                set(&a.rset)?;
                set(&b.rset)?;
                Some(exact_jaccard_distance(&a.rset, &b.rset))
            }
            Evidence::Embedding => {
                let (u, v) = (a.embedding.as_ref()?, b.embedding.as_ref()?);
                if u.iter().all(|x| *x == 0.0) || v.iter().all(|x| *x == 0.0) {
                    return None;
                }
                Some(exact_cosine_distance(u, v))
            }
            Evidence::Domain => None,
        }
    }

    pub fn attribute(&self, id: AttrId) -> &AttributeProfile {
        &self.attributes[id.0 as usize]
    }

    pub fn datasets(&self) -> impl Iterator<Item = DatasetIdx> + '_ {
        self.catalog.dataset_indices()
    }
}

impl EvidenceSource for ExactSource {
    type Probe = AttributeProfile;

    fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn threshold_distance(&self) -> f64 {
        1.0 - self.threshold
    }

    fn probe(&self, attr: &AttributeProfile) -> Result<AttributeProfile> {
        Ok(attr.clone())
    }

    fn stored_probe(&self, id: AttrId) -> AttributeProfile {
        self.attribute(id).clone()
    }

    fn lookup(
        &self,
        evidence: Evidence,
        probe: &AttributeProfile,
        budget: usize,
        max_distance: f64,
    ) -> Vec<(AttrId, f64)> {
        let mut out: Vec<(AttrId, f64)> = self
            .attributes
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                let d = ExactSource::distance(evidence, probe, a)?;
                (d <= max_distance + DISTANCE_EPS).then_some((AttrId(i as u32), d))
            })
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out.truncate(budget);
        out
    }

    fn numeric_extent(&self, id: AttrId) -> Option<&[f64]> {
        self.attribute(id).numeric_extent.as_deref()
    }
}
