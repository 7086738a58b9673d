//! Signatures, LSH forests and the on-disk lake index.
//!
//! Directory layout: `names.idx`, `values.idx`, `formats.idx`,
//! `embeddings.idx` (one container per forest, see [`store`]),
//! `numeric.bin` with the sorted numeric extents, and `manifest.json` with
//! the config and the dataset/attribute catalog.

mod catalog;
pub mod forest;
pub mod minhash;
pub mod projection;
pub mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use catalog::{AttrEntry, Catalog, DatasetEntry};
pub use forest::{ForestParams, InsertOutcome, LshForest, Sketch};
pub use minhash::{estimate_jaccard_distance, minhash, MinHashSignature, MinHasher};
pub use projection::{estimate_cosine_distance, hamming_fraction, random_projection, Projector, RPSignature};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::profile::{AttributeProfile, DatasetProfile};
use store::Header;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttrId(pub u32);

impl fmt::Display for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DatasetIdx(pub u32);

/// The five kinds of relatedness evidence, in vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Evidence {
    Name = 0,
    Value = 1,
    Format = 2,
    Embedding = 3,
    Domain = 4,
}

impl Evidence {
    pub const ALL: [Evidence; 5] = [
        Evidence::Name,
        Evidence::Value,
        Evidence::Format,
        Evidence::Embedding,
        Evidence::Domain,
    ];
    /// Evidence types backed by a forest.
    pub const INDEXED: [Evidence; 4] = [Evidence::Name, Evidence::Value, Evidence::Format, Evidence::Embedding];

    pub fn from_u8(v: u8) -> Option<Evidence> {
        Evidence::ALL.get(usize::from(v)).copied()
    }

    pub fn label(self) -> &'static str {
        ["N", "V", "F", "E", "D"][self as usize]
    }

    fn file_name(self) -> &'static str {
        [
            "names.idx",
            "values.idx",
            "formats.idx",
            "embeddings.idx",
            "numeric.bin",
        ][self as usize]
    }
}

/// Sketches of one attribute, ready for lookups. `None` where the attribute
/// has no usable representation.
#[derive(Debug, Clone, Default)]
pub struct Probe {
    pub name: Option<MinHashSignature>,
    pub value: Option<MinHashSignature>,
    pub format: Option<MinHashSignature>,
    pub embedding: Option<RPSignature>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    config: String,
    embedding_dim: Option<usize>,
    catalog: Catalog,
}

const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct LakeIndex {
    config: Config,
    embedding_dim: Option<usize>,
    catalog: Catalog,
    names: LshForest<MinHashSignature>,
    values: LshForest<MinHashSignature>,
    formats: LshForest<MinHashSignature>,
    embeddings: LshForest<RPSignature>,
    numeric: BTreeMap<AttrId, Vec<f64>>,
    minhasher: MinHasher,
    projector: Option<Projector>,
}

fn non_empty(sig: MinHashSignature) -> Option<MinHashSignature> {
    (!sig.is_sentinel()).then_some(sig)
}

impl LakeIndex {
    fn empty(config: &Config, embedding_dim: Option<usize>, catalog: Catalog) -> Result<Self> {
        config.validate()?;
        let params = ForestParams {
            trees: config.forest_trees,
            depth: config.forest_depth,
            threshold: config.lsh_threshold,
        };
        Ok(LakeIndex {
            config: config.clone(),
            embedding_dim,
            catalog,
            names: LshForest::new(params, config.minhash_size)?,
            values: LshForest::new(params, config.minhash_size)?,
            formats: LshForest::new(params, config.minhash_size)?,
            embeddings: LshForest::new(params, config.rp_bits)?,
            numeric: BTreeMap::new(),
            minhasher: MinHasher::new(config.minhash_size, config.seed),
            projector: embedding_dim.map(|d| Projector::new(d, config.rp_bits, config.seed)),
        })
    }

    /// Sketch and insert every attribute of the profiled lake.
    pub fn build(profiles: &[DatasetProfile], config: &Config, embedding_dim: Option<usize>) -> Result<Self> {
        let catalog = Catalog::from_profiles(profiles);
        let mut index = LakeIndex::empty(config, embedding_dim, catalog)?;
        let attrs: Vec<&AttributeProfile> = profiles.iter().flat_map(|p| &p.attributes).collect();
        let probes = attrs.par_iter().map(|a| index.probe(a)).collect::<Result<Vec<_>>>()?;
        for (i, (attr, probe)) in attrs.iter().zip(probes).enumerate() {
            let id = AttrId(i as u32);
            if let Some(s) = probe.name {
                index.names.insert(id, s)?;
            }
            if let Some(s) = probe.value {
                index.values.insert(id, s)?;
            }
            if let Some(s) = probe.format {
                index.formats.insert(id, s)?;
            }
            if let Some(s) = probe.embedding {
                index.embeddings.insert(id, s)?;
            }
            if let Some(extent) = &attr.numeric_extent {
                index.numeric.insert(id, extent.clone());
            }
        }
        Ok(index)
    }

    pub fn probe(&self, attr: &AttributeProfile) -> Result<Probe> {
        let sign =
            |set: &std::collections::BTreeSet<String>| non_empty(self.minhasher.sign(set.iter().map(String::as_str)));
        let embedding = match (&attr.embedding, &self.projector) {
            (Some(v), Some(p)) => Some(p.project(v)?).filter(|s| !s.degenerate),
            (Some(v), None) => {
                return Err(Error::ParamMismatch(format!(
                    "attribute `{}` has a {}-dimensional embedding but the index was built without a model",
                    attr.name,
                    v.len()
                )))
            }
            (None, _) => None,
        };
        Ok(Probe {
            name: sign(&attr.qset),
            value: attr.tset.as_ref().and_then(sign),
            format: sign(&attr.rset),
            embedding,
        })
    }

    /// Forest lookup for one evidence type. `Domain` has no forest and
    /// always returns nothing.
    pub fn lookup(&self, evidence: Evidence, probe: &Probe, budget: usize, max_distance: f64) -> Vec<(AttrId, f64)> {
        match evidence {
            Evidence::Name => probe
                .name
                .as_ref()
                .map(|s| self.names.lookup_within(s, budget, max_distance)),
            Evidence::Value => probe
                .value
                .as_ref()
                .map(|s| self.values.lookup_within(s, budget, max_distance)),
            Evidence::Format => probe
                .format
                .as_ref()
                .map(|s| self.formats.lookup_within(s, budget, max_distance)),
            Evidence::Embedding => probe
                .embedding
                .as_ref()
                .map(|s| self.embeddings.lookup_within(s, budget, max_distance)),
            Evidence::Domain => None,
        }
        .unwrap_or_default()
    }

    /// The probe an indexed attribute would produce, rebuilt from the
    /// stored signatures.
    pub fn stored_probe(&self, id: AttrId) -> Probe {
        Probe {
            name: self.names.get(id).cloned(),
            value: self.values.get(id).cloned(),
            format: self.formats.get(id).cloned(),
            embedding: self.embeddings.get(id).cloned(),
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    pub fn threshold_distance(&self) -> f64 {
        1.0 - self.config.lsh_threshold
    }

    pub fn numeric_extent(&self, id: AttrId) -> Option<&[f64]> {
        self.numeric.get(&id).map(Vec::as_slice)
    }

    pub fn names(&self) -> &LshForest<MinHashSignature> {
        &self.names
    }

    pub fn values(&self) -> &LshForest<MinHashSignature> {
        &self.values
    }

    pub fn formats(&self) -> &LshForest<MinHashSignature> {
        &self.formats
    }

    pub fn embeddings(&self) -> &LshForest<RPSignature> {
        &self.embeddings
    }

    fn header(&self, evidence: Evidence) -> Header {
        let width = match evidence {
            Evidence::Embedding => self.config.rp_bits,
            _ => self.config.minhash_size,
        };
        Header {
            evidence,
            kind: 0,
            width,
            trees: self.config.forest_trees,
            depth: self.config.forest_depth,
            seed: self.config.seed,
            threshold: self.config.lsh_threshold,
            dim: self.embedding_dim.unwrap_or(0),
        }
    }

    /// Serialized files, in write order.
    pub fn to_files(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        let manifest = Manifest {
            format_version: store::FORMAT_VERSION,
            config: self.config.to_text(),
            embedding_dim: self.embedding_dim,
            catalog: self.catalog.clone(),
        };
        let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Container {
            path: MANIFEST.into(),
            message: e.to_string(),
        })?;
        json.push(b'\n');
        Ok(vec![
            (
                Evidence::Name.file_name(),
                store::encode_forest(&self.names, &self.header(Evidence::Name)),
            ),
            (
                Evidence::Value.file_name(),
                store::encode_forest(&self.values, &self.header(Evidence::Value)),
            ),
            (
                Evidence::Format.file_name(),
                store::encode_forest(&self.formats, &self.header(Evidence::Format)),
            ),
            (
                Evidence::Embedding.file_name(),
                store::encode_forest(&self.embeddings, &self.header(Evidence::Embedding)),
            ),
            (
                Evidence::Domain.file_name(),
                store::encode_numeric(self.numeric.iter().map(|(id, v)| (*id, v.as_slice()))),
            ),
            (MANIFEST, json),
        ])
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, bytes) in self.to_files()? {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read(&path).map_err(|e| Error::io(&path, e)).map(|b| (path, b))
        };
        let (mpath, mbytes) = read(MANIFEST)?;
        let manifest: Manifest = serde_json::from_slice(&mbytes).map_err(|e| Error::Container {
            path: mpath.display().to_string(),
            message: e.to_string(),
        })?;
        if manifest.format_version != store::FORMAT_VERSION {
            return Err(Error::Container {
                path: mpath.display().to_string(),
                message: format!("unsupported format version {}", manifest.format_version),
            });
        }
        let config = Config::parse(&manifest.config)?;
        let mut index = LakeIndex::empty(&config, manifest.embedding_dim, manifest.catalog)?;
        let n = index.catalog.attributes.len() as u32;

        let (p, b) = read(Evidence::Name.file_name())?;
        index.names = store::decode_forest(&b, &index.header(Evidence::Name), &p)?;
        let (p, b) = read(Evidence::Value.file_name())?;
        index.values = store::decode_forest(&b, &index.header(Evidence::Value), &p)?;
        let (p, b) = read(Evidence::Format.file_name())?;
        index.formats = store::decode_forest(&b, &index.header(Evidence::Format), &p)?;
        let (p, b) = read(Evidence::Embedding.file_name())?;
        index.embeddings = store::decode_forest(&b, &index.header(Evidence::Embedding), &p)?;
        let (p, b) = read(Evidence::Domain.file_name())?;
        index.numeric = store::decode_numeric(&b, &p)?.into_iter().collect();

        let out_of_range = [&index.names, &index.values, &index.formats]
            .iter()
            .any(|f| f.entries().any(|(id, _)| id.0 >= n))
            || index.embeddings.entries().any(|(id, _)| id.0 >= n)
            || index.numeric.keys().any(|id| id.0 >= n);
        if out_of_range {
            return Err(Error::Container {
                path: dir.display().to_string(),
                message: "entry id outside the catalog".into(),
            });
        }
        Ok(index)
    }
}
