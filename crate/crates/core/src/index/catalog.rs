use serde::{Deserialize, Serialize};

use super::{AttrId, DatasetIdx};
use crate::ingest::Kind;
use crate::profile::DatasetProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    pub name: String,
    pub row_count: usize,
    pub first_attr: u32,
    pub arity: u32,
    pub subject: Option<AttrId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttrEntry {
    pub dataset: DatasetIdx,
    pub position: usize,
    pub name: String,
    pub kind: Kind,
    pub tset_len: usize,
    /// Whether the attribute carries a non-empty name, value, format and
    /// embedding representation (in that order).
    pub has: [bool; 4],
}

/// Dataset and attribute directory shared by every index. Attribute ids are
/// dense and grouped by dataset in lake order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub datasets: Vec<DatasetEntry>,
    pub attributes: Vec<AttrEntry>,
}

impl Catalog {
    pub fn from_profiles(profiles: &[DatasetProfile]) -> Self {
        let mut catalog = Catalog::default();
        for (di, p) in profiles.iter().enumerate() {
            let first = catalog.attributes.len() as u32;
            for a in &p.attributes {
                catalog.attributes.push(AttrEntry {
                    dataset: DatasetIdx(di as u32),
                    position: a.position,
                    name: a.name.clone(),
                    kind: a.kind,
                    tset_len: a.tset_len(),
                    has: [
                        !a.qset.is_empty(),
                        a.tset_len() > 0,
                        !a.rset.is_empty(),
                        a.embedding.is_some(),
                    ],
                });
            }
            catalog.datasets.push(DatasetEntry {
                id: p.id.clone(),
                name: p.name.clone(),
                row_count: p.row_count,
                first_attr: first,
                arity: p.attributes.len() as u32,
                subject: p.subject.map(|s| AttrId(first + s as u32)),
            });
        }
        catalog
    }

    pub fn dataset(&self, idx: DatasetIdx) -> &DatasetEntry {
        &self.datasets[idx.0 as usize]
    }

    pub fn attribute(&self, id: AttrId) -> &AttrEntry {
        &self.attributes[id.0 as usize]
    }

    pub fn dataset_of(&self, id: AttrId) -> DatasetIdx {
        self.attribute(id).dataset
    }

    pub fn attr_ids(&self, idx: DatasetIdx) -> impl Iterator<Item = AttrId> {
        let d = self.dataset(idx);
        (d.first_attr..d.first_attr + d.arity).map(AttrId)
    }

    pub fn find_dataset(&self, id: &str) -> Option<DatasetIdx> {
        self.datasets
            .iter()
            .position(|d| d.id == id)
            .map(|i| DatasetIdx(i as u32))
    }

    pub fn dataset_indices(&self) -> impl Iterator<Item = DatasetIdx> {
        (0..self.datasets.len() as u32).map(DatasetIdx)
    }
}
