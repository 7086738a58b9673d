//! Benchmark lakes derived from base tables by random projections and
//! selections, with lineage-based ground truth.
//!
//! Each base column carries a domain tag. Two derived tables are related
//! when they come from the same base or share a domain tag; two attributes
//! are related when their tags are equal.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::truth::GroundTruth;
use crate::error::{Error, Result};
use crate::hashing::derive_seed;
use crate::ingest::{read_raw_table, write_raw_table, Dataset, IngestConfig, RawTable};
use crate::profile::{detect_subject_attribute, SubjectWeights};

pub const DOMAINS_FILE: &str = "domains.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct BaseTable {
    pub name: String,
    pub table: RawTable,
    /// One domain tag per column.
    pub domains: Vec<String>,
}

impl BaseTable {
    pub fn new(name: impl Into<String>, table: RawTable, domains: Vec<String>) -> Result<Self> {
        let name = name.into();
        if domains.len() != table.header.len() {
            return Err(Error::Benchmark(format!(
                "{name}: {} domain tags for {} columns",
                domains.len(),
                table.header.len()
            )));
        }
        Ok(BaseTable { name, table, domains })
    }

    /// Every column gets its own domain.
    pub fn untagged(name: impl Into<String>, table: RawTable) -> Self {
        let name = name.into();
        let domains = table.header.iter().map(|h| format!("{name}#{h}")).collect();
        BaseTable { name, table, domains }
    }

    fn subject(&self) -> Option<usize> {
        let d = Dataset::from_raw(&self.name, &self.name, &self.table, &IngestConfig::default());
        detect_subject_attribute(&d, &SubjectWeights::default())
    }
}

/// Read every table in `dir` (not recursive). Domain tags come from an
/// optional `domains.csv` with `file,column,domain` records; untagged
/// columns get a domain of their own.
pub fn load_bases(dir: &Path) -> Result<Vec<BaseTable>> {
    let mut tags: BTreeMap<(String, String), String> = BTreeMap::new();
    let tag_path = dir.join(DOMAINS_FILE);
    if tag_path.exists() {
        let mut reader = csv::Reader::from_path(&tag_path).map_err(|e| Error::Benchmark(e.to_string()))?;
        for record in reader.records() {
            let r = record.map_err(|e| Error::Benchmark(e.to_string()))?;
            if r.len() != 3 {
                return Err(Error::Benchmark(format!(
                    "{}: expected file,column,domain",
                    tag_path.display()
                )));
            }
            tags.insert((r[0].to_string(), r[1].to_string()), r[2].to_string());
        }
    }
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.file_name() != Some(DOMAINS_FILE.as_ref())
                && p.extension().is_some_and(|x| x == "csv" || x == "tsv")
        })
        .collect();
    files.sort();
    let mut bases = Vec::new();
    for path in files {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let (table, _) = read_raw_table(&path)?;
        let domains = table
            .header
            .iter()
            .map(|h| {
                tags.get(&(name.clone(), h.clone()))
                    .cloned()
                    .unwrap_or_else(|| format!("{name}#{h}"))
            })
            .collect();
        bases.push(BaseTable::new(name, table, domains)?);
    }
    if bases.is_empty() {
        return Err(Error::Benchmark(format!("no base tables in {}", dir.display())));
    }
    Ok(bases)
}

pub fn write_bases(dir: &Path, bases: &[BaseTable]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tags = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Benchmark(e.to_string());
    tags.write_record(["file", "column", "domain"]).map_err(err)?;
    for b in bases {
        write_raw_table(&dir.join(&b.name), &b.table)?;
        for (h, d) in b.table.header.iter().zip(&b.domains) {
            tags.write_record([b.name.as_str(), h.as_str(), d.as_str()])
                .map_err(err)?;
        }
    }
    let bytes = tags.into_inner().map_err(|e| Error::Benchmark(e.to_string()))?;
    let path = dir.join(DOMAINS_FILE);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub project: bool,
    pub select: bool,
    /// Probability that a projection keeps the base's subject column.
    pub subject_keep: f64,
    pub min_columns: usize,
    pub min_rows: usize,
    /// Selections keep at least this share of the base rows.
    pub min_row_fraction: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            project: true,
            select: true,
            subject_keep: 0.8,
            min_columns: 2,
            min_rows: 10,
            min_row_fraction: 0.5,
        }
    }
}

impl BenchOptions {
    /// Every derived table is a verbatim copy of its base.
    pub fn identity() -> Self {
        BenchOptions {
            project: false,
            select: false,
            ..BenchOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub id: String,
    pub base: usize,
    /// Base column index of each column.
    pub columns: Vec<usize>,
    pub table: RawTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub tables: Vec<BenchTable>,
    pub truth: GroundTruth,
    /// Bases left out because they were too small.
    pub skipped: Vec<String>,
}

fn choose_columns(rng: &mut ChaCha8Rng, ncols: usize, subject: Option<usize>, opts: &BenchOptions) -> Vec<usize> {
    if !opts.project {
        return (0..ncols).collect();
    }
    let want = rng.random_range(opts.min_columns..=ncols);
    let keep_subject = subject.is_some() && rng.random_bool(opts.subject_keep);
    let others: Vec<usize> = (0..ncols).filter(|c| Some(*c) != subject).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(want);
    if keep_subject {
        chosen.push(subject.unwrap());
    }
    let from_others = (want - chosen.len()).min(others.len());
    chosen.extend(sample(rng, others.len(), from_others).into_iter().map(|i| others[i]));
    if chosen.len() < opts.min_columns {
        // Too few non-subject columns; the subject has to stay.
        chosen.extend(subject);
    }
    chosen.sort_unstable();
    chosen.dedup();
    chosen
}

fn choose_rows(rng: &mut ChaCha8Rng, nrows: usize, opts: &BenchOptions) -> Vec<usize> {
    if !opts.select {
        return (0..nrows).collect();
    }
    let lo = opts
        .min_rows
        .max((nrows as f64 * opts.min_row_fraction).ceil() as usize)
        .min(nrows);
    let want = rng.random_range(lo..=nrows);
    let mut rows = sample(rng, nrows, want).into_vec();
    rows.sort_unstable();
    rows
}

/// Derive `n` tables from `bases`. Bases are used round-robin, so every
/// usable base yields at least one table; table ids are `t0000.csv`, ...
/// in a seeded shuffled order.
pub fn generate_benchmark(bases: &[BaseTable], n: usize, seed: u64, opts: &BenchOptions) -> Result<Benchmark> {
    if n < bases.len() {
        return Err(Error::Benchmark(format!(
            "asked for {n} tables from {} base tables; need at least one per base",
            bases.len()
        )));
    }
    let mut skipped = Vec::new();
    let mut usable = Vec::new();
    for (i, b) in bases.iter().enumerate() {
        if b.table.header.len() < opts.min_columns || b.table.rows.len() < opts.min_rows {
            log::warn!("base table {} is too small to derive from; skipped", b.name);
            skipped.push(b.name.clone());
        } else {
            usable.push(i);
        }
    }
    if usable.is_empty() {
        return Err(Error::Benchmark("no base table is large enough".into()));
    }
    let subjects: Vec<Option<usize>> = bases.iter().map(BaseTable::subject).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "benchmark"));
    let mut assignment: Vec<usize> = (0..n).map(|i| usable[i % usable.len()]).collect();
    assignment.shuffle(&mut rng);

    let mut tables = Vec::with_capacity(n);
    for (i, &b) in assignment.iter().enumerate() {
        let base = &bases[b];
        let columns = choose_columns(&mut rng, base.table.header.len(), subjects[b], opts);
        let rows = choose_rows(&mut rng, base.table.rows.len(), opts);
        let table = RawTable {
            header: columns.iter().map(|&c| base.table.header[c].clone()).collect(),
            rows: rows
                .iter()
                .map(|&r| columns.iter().map(|&c| base.table.rows[r][c].clone()).collect())
                .collect(),
        };
        tables.push(BenchTable {
            id: format!("t{i:04}.csv"),
            base: b,
            columns,
            table,
        });
    }

    let mut truth = GroundTruth::default();
    for a in &tables {
        truth.add_target(&a.id);
        for b in &tables {
            if a.id == b.id {
                continue;
            }
            if a.base == b.base {
                truth.add_table(&a.id, &b.id);
            }
            for (ia, &ca) in a.columns.iter().enumerate() {
                for (ib, &cb) in b.columns.iter().enumerate() {
                    if bases[a.base].domains[ca] == bases[b.base].domains[cb] {
                        truth.add_attribute(&a.id, &a.table.header[ia], &b.id, &b.table.header[ib]);
                    }
                }
            }
        }
    }
    Ok(Benchmark { tables, truth, skipped })
}

pub const LAKE_DIR: &str = "lake";
pub const TRUTH_FILE: &str = "truth.csv";

/// Write `dir/lake/<id>` for every table and `dir/truth.csv`.
pub fn write_benchmark(dir: &Path, bench: &Benchmark) -> Result<()> {
    let lake = dir.join(LAKE_DIR);
    std::fs::create_dir_all(&lake).map_err(|e| Error::io(&lake, e))?;
    for t in &bench.tables {
        write_raw_table(&lake.join(&t.id), &t.table)?;
    }
    bench.truth.write(&dir.join(TRUTH_FILE))
}
