//! Two-level ground truth: related tables, and related attribute pairs.
//!
//! File format: CSV records tagged by their first field,
//! `T,<target>,<related>` and `A,<target>,<target attr>,<related>,<related attr>`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub tables: BTreeMap<String, BTreeSet<String>>,
    pub attributes: BTreeMap<(String, String), BTreeSet<(String, String)>>,
}

impl GroundTruth {
    pub fn add_table(&mut self, target: &str, related: &str) {
        self.tables
            .entry(target.to_string())
            .or_default()
            .insert(related.to_string());
    }

    /// Record an attribute pair; the table pair is implied.
    pub fn add_attribute(&mut self, target: &str, target_attr: &str, related: &str, related_attr: &str) {
        self.add_table(target, related);
        self.attributes
            .entry((target.to_string(), target_attr.to_string()))
            .or_default()
            .insert((related.to_string(), related_attr.to_string()));
    }

    /// Make sure `target` has an entry even when nothing relates to it.
    pub fn add_target(&mut self, target: &str) {
        self.tables.entry(target.to_string()).or_default();
    }

    pub fn related(&self, target: &str) -> Result<&BTreeSet<String>> {
        self.tables
            .get(target)
            .ok_or_else(|| Error::UnknownTarget(target.to_string()))
    }

    pub fn covers(&self, target: &str) -> bool {
        self.tables.contains_key(target)
    }

    pub fn attribute_related(&self, target: &str, target_attr: &str, related: &str, related_attr: &str) -> bool {
        self.attributes
            .get(&(target.to_string(), target_attr.to_string()))
            .is_some_and(|s| s.contains(&(related.to_string(), related_attr.to_string())))
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let err = |e: csv::Error| Error::Truth(e.to_string());
        for (target, related) in &self.tables {
            if related.is_empty() {
                w.write_record(["T", target.as_str(), ""]).map_err(err)?;
            }
            for r in related {
                w.write_record(["T", target.as_str(), r.as_str()]).map_err(err)?;
            }
        }
        for ((target, tattr), related) in &self.attributes {
            for (r, rattr) in related {
                w.write_record(["A", target.as_str(), tattr.as_str(), r.as_str(), rattr.as_str()])
                    .map_err(err)?;
            }
        }
        w.into_inner().map_err(|e| Error::Truth(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut truth = GroundTruth::default();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        for (line, record) in reader.records().enumerate() {
            let r = record.map_err(|e| Error::Truth(e.to_string()))?;
            let bad = || Error::Truth(format!("line {}: malformed record", line + 1));
            match r.get(0) {
                Some("T") if r.len() == 3 => {
                    if r[2].is_empty() {
                        truth.add_target(&r[1]);
                    } else {
                        truth.add_table(&r[1], &r[2]);
                    }
                }
                Some("A") if r.len() == 5 => truth.add_attribute(&r[1], &r[2], &r[3], &r[4]),
                _ => return Err(bad()),
            }
        }
        Ok(truth)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GroundTruth::from_csv(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_implication() {
        let mut t = GroundTruth::default();
        t.add_attribute("t.csv", "City", "s, 1.csv", "Town");
        t.add_table("t.csv", "u.csv");
        t.add_target("lonely.csv");
        assert!(t.related("t.csv").unwrap().contains("s, 1.csv"));
        let back = GroundTruth::from_csv(std::str::from_utf8(&t.to_csv().unwrap()).unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(back.related("lonely.csv").unwrap().is_empty());
        assert!(back.attribute_related("t.csv", "City", "s, 1.csv", "Town"));
        assert!(matches!(back.related("nope"), Err(Error::UnknownTarget(_))));
        assert!(GroundTruth::from_csv("X,a,b\n").is_err());
    }
}
