//! LSH Forest: `trees` prefix trees, each keyed on a disjoint run of
//! `depth` signature components. Lookups descend from the longest shared
//! prefix towards the root until the candidate budget is met, then rank the
//! candidates by the distance estimated from the full signatures.

use std::collections::{BTreeMap, BTreeSet};

use super::minhash::{estimate_jaccard_distance, MinHashSignature};
use super::projection::{estimate_cosine_distance, RPSignature};
use super::AttrId;
use crate::error::{Error, Result};

/// A fixed-width sketch that can be keyed into prefix trees.
pub trait Sketch: Clone + PartialEq + Send + Sync {
    fn width(&self) -> usize;
    fn component(&self, i: usize) -> u64;
    /// Sentinels carry no evidence; they are never inserted and never match.
    fn is_sentinel(&self) -> bool;
    /// Estimated distance in [0, 1]. Widths are checked by the forest.
    fn distance(&self, other: &Self) -> f64;
}

impl Sketch for MinHashSignature {
    fn width(&self) -> usize {
        self.len()
    }
    fn component(&self, i: usize) -> u64 {
        self.mins[i]
    }
    fn is_sentinel(&self) -> bool {
        MinHashSignature::is_sentinel(self)
    }
    fn distance(&self, other: &Self) -> f64 {
        estimate_jaccard_distance(self, other).unwrap_or(1.0)
    }
}

impl Sketch for RPSignature {
    fn width(&self) -> usize {
        self.len
    }
    fn component(&self, i: usize) -> u64 {
        u64::from(self.bit(i))
    }
    fn is_sentinel(&self) -> bool {
        self.degenerate
    }
    fn distance(&self, other: &Self) -> f64 {
        estimate_cosine_distance(self, other).unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub depth: usize,
    /// Similarity threshold; lookups keep distances <= 1 - threshold.
    pub threshold: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 8,
            depth: 32,
            threshold: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    Unchanged,
    Replaced,
    /// Sentinel signatures are not indexed.
    Skipped,
}

const DISTANCE_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LshForest<S: Sketch> {
    params: ForestParams,
    width: usize,
    depth: usize,
    entries: BTreeMap<AttrId, S>,
    trees: Vec<BTreeMap<Vec<u64>, BTreeSet<AttrId>>>,
}

impl<S: Sketch> LshForest<S> {
    pub fn new(params: ForestParams, width: usize) -> Result<Self> {
        if params.trees == 0 || params.trees > width {
            return Err(Error::Config(format!(
                "forest needs 1..={width} trees, got {}",
                params.trees
            )));
        }
        let depth = params.depth.min(width / params.trees).max(1);
        Ok(LshForest {
            params,
            width,
            depth,
            entries: BTreeMap::new(),
            trees: vec![BTreeMap::new(); params.trees],
        })
    }

    pub fn params(&self) -> ForestParams {
        self.params
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Effective prefix depth per tree.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: AttrId) -> Option<&S> {
        self.entries.get(&id)
    }

    pub fn contains(&self, id: AttrId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (AttrId, &S)> {
        self.entries.iter().map(|(id, s)| (*id, s))
    }

    fn key(&self, sig: &S, tree: usize) -> Vec<u64> {
        let start = tree * self.depth;
        (start..start + self.depth).map(|i| sig.component(i)).collect()
    }

    fn check_width(&self, sig: &S) -> Result<()> {
        if sig.width() != self.width {
            return Err(Error::ParamMismatch(format!(
                "signature width {} does not match forest width {}",
                sig.width(),
                self.width
            )));
        }
        Ok(())
    }

    pub fn insert(&mut self, id: AttrId, sig: S) -> Result<InsertOutcome> {
        self.check_width(&sig)?;
        if sig.is_sentinel() {
            return Ok(InsertOutcome::Skipped);
        }
        let outcome = match self.entries.get(&id) {
            Some(old) if *old == sig => return Ok(InsertOutcome::Unchanged),
            Some(_) => {
                log::warn!("attribute {id} re-inserted with a different signature; replacing");
                self.remove(id);
                InsertOutcome::Replaced
            }
            None => InsertOutcome::Inserted,
        };
        for t in 0..self.trees.len() {
            let key = self.key(&sig, t);
            self.trees[t].entry(key).or_default().insert(id);
        }
        self.entries.insert(id, sig);
        Ok(outcome)
    }

    pub fn remove(&mut self, id: AttrId) -> Option<S> {
        let sig = self.entries.remove(&id)?;
        for t in 0..self.trees.len() {
            let key = self.key(&sig, t);
            if let Some(ids) = self.trees[t].get_mut(&key) {
                ids.remove(&id);
                if ids.is_empty() {
                    self.trees[t].remove(&key);
                }
            }
        }
        Some(sig)
    }

    /// Ids sharing at least the longest prefix that yields `budget`
    /// candidates across all trees (or every prefix level, if never met).
    pub fn candidates(&self, probe: &S, budget: usize) -> BTreeSet<AttrId> {
        let mut found = BTreeSet::new();
        if budget == 0 || self.entries.is_empty() || probe.is_sentinel() || probe.width() != self.width {
            return found;
        }
        let keys: Vec<Vec<u64>> = (0..self.trees.len()).map(|t| self.key(probe, t)).collect();
        for r in (1..=self.depth).rev() {
            for (tree, key) in self.trees.iter().zip(&keys) {
                let prefix = &key[..r];
                for (k, ids) in tree.range(prefix.to_vec()..) {
                    if &k[..r] != prefix {
                        break;
                    }
                    found.extend(ids.iter().copied());
                }
            }
            if found.len() >= budget {
                break;
            }
        }
        found
    }

    /// Candidates within `max_distance`, ascending by (distance, id), at most
    /// `budget` of them.
    pub fn lookup_within(&self, probe: &S, budget: usize, max_distance: f64) -> Vec<(AttrId, f64)> {
        let mut out: Vec<(AttrId, f64)> = self
            .candidates(probe, budget)
            .into_iter()
            .map(|id| (id, probe.distance(&self.entries[&id])))
            .filter(|(_, d)| *d <= max_distance + DISTANCE_EPS)
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out.truncate(budget);
        out
    }

    pub fn lookup(&self, probe: &S, budget: usize) -> Vec<(AttrId, f64)> {
        self.lookup_within(probe, budget, 1.0 - self.params.threshold)
    }
}
