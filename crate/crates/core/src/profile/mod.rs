//! Per-attribute evidence: name q-grams, value tokens, value formats, an
//! embedding vector, and (for numeric columns) the sorted extent.

mod embedding;
mod subject;
mod text;

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use embedding::{embed_attribute, EmbeddingModel};
pub use subject::{detect_subject_attribute, subject_score, SubjectWeights};
pub use text::{get_qgrams, get_regex_string, split_parts, tokenize_extent, ExtentTokens};

use crate::config::Config;
use crate::hashing::{derive_seed, hash_bytes};
use crate::ingest::{Attribute, Dataset, Kind};

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeProfile {
    pub name: String,
    pub position: usize,
    pub kind: Kind,
    pub qset: BTreeSet<String>,
    /// Absent for numeric attributes.
    pub tset: Option<BTreeSet<String>>,
    pub rset: BTreeSet<String>,
    pub embedding: Option<Vec<f32>>,
    /// Sorted ascending; present only for numeric attributes.
    pub numeric_extent: Option<Vec<f64>>,
    pub is_subject: bool,
}

impl AttributeProfile {
    pub fn tset_len(&self) -> usize {
        self.tset.as_ref().map_or(0, BTreeSet::len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetProfile {
    pub id: String,
    pub name: String,
    pub row_count: usize,
    pub attributes: Vec<AttributeProfile>,
    pub subject: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ProfileConfig {
    pub qgram_size: usize,
    pub subject_weights: SubjectWeights,
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::from(&Config::default())
    }
}

impl From<&Config> for ProfileConfig {
    fn from(cfg: &Config) -> Self {
        ProfileConfig {
            qgram_size: cfg.qgram_size,
            subject_weights: SubjectWeights::from(cfg.subject_weights),
            sample_cap: cfg.sample_cap,
            seed: cfg.seed,
        }
    }
}

pub struct Profiler<'m> {
    cfg: ProfileConfig,
    model: Option<&'m EmbeddingModel>,
}

impl<'m> Profiler<'m> {
    pub fn new(cfg: ProfileConfig, model: Option<&'m EmbeddingModel>) -> Self {
        Profiler { cfg, model }
    }

    pub fn config(&self) -> &ProfileConfig {
        &self.cfg
    }

    pub fn profile_dataset(&self, dataset: &Dataset) -> DatasetProfile {
        let subject = detect_subject_attribute(dataset, &self.cfg.subject_weights);
        let attributes = dataset
            .attributes
            .par_iter()
            .map(|a| self.profile_attribute(&dataset.id, a, subject == Some(a.position)))
            .collect();
        DatasetProfile {
            id: dataset.id.clone(),
            name: dataset.name.clone(),
            row_count: dataset.row_count,
            attributes,
            subject,
        }
    }

    pub fn profile_lake(&self, datasets: &[Dataset]) -> Vec<DatasetProfile> {
        datasets.par_iter().map(|d| self.profile_dataset(d)).collect()
    }

    /// Row indices to profile: all of them, or a seeded uniform sample of
    /// `sample_cap` when the extent is larger.
    fn sample_indices(&self, dataset_id: &str, attr: &Attribute) -> Option<Vec<usize>> {
        let n = attr.values.len();
        if n <= self.cfg.sample_cap {
            return None;
        }
        let key = format!("{dataset_id}\u{1f}{}", attr.position);
        let seed = hash_bytes(key.as_bytes(), derive_seed(self.cfg.seed, "sample"));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, n, self.cfg.sample_cap).into_vec();
        idx.sort_unstable();
        Some(idx)
    }

    pub fn profile_attribute(&self, dataset_id: &str, attr: &Attribute, is_subject: bool) -> AttributeProfile {
        let picked = self.sample_indices(dataset_id, attr);
        let values: Vec<&str> = match &picked {
            Some(idx) => idx.iter().map(|&i| attr.values[i].as_str()).collect(),
            None => attr.values.iter().map(String::as_str).collect(),
        };
        let qset = get_qgrams(&attr.name, self.cfg.qgram_size);
        let rset: BTreeSet<String> = values
            .iter()
            .map(|v| get_regex_string(v))
            .filter(|r| !r.is_empty())
            .collect();
        match attr.kind {
            Kind::Text => {
                let tokens = tokenize_extent(&values);
                let embedding = self.model.and_then(|m| embed_attribute(&tokens.frequent, m));
                AttributeProfile {
                    name: attr.name.clone(),
                    position: attr.position,
                    kind: Kind::Text,
                    qset,
                    tset: Some(tokens.tset),
                    rset,
                    embedding,
                    numeric_extent: None,
                    is_subject,
                }
            }
            Kind::Numeric => {
                let mut numbers: Vec<f64> = match &picked {
                    Some(idx) => idx.iter().map(|&i| attr.numbers[i]).collect(),
                    None => attr.numbers.clone(),
                };
                numbers.sort_by(f64::total_cmp);
                AttributeProfile {
                    name: attr.name.clone(),
                    position: attr.position,
                    kind: Kind::Numeric,
                    qset,
                    tset: None,
                    rset,
                    embedding: None,
                    numeric_extent: Some(numbers),
                    is_subject,
                }
            }
        }
    }
}
