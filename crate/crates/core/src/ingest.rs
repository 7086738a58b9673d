//! Loading delimiter-separated tables from a lake directory.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};

const DELIMITERS: [u8; 4] = *b",\t;|";
const SNIFF_LINES: usize = 10;
const TABLE_EXTENSIONS: [&str; 4] = ["csv", "tsv", "txt", "psv"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Text,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub position: usize,
    pub kind: Kind,
    /// Non-null cell values, trimmed, in row order.
    pub values: Vec<String>,
    /// Parsed values for `Kind::Numeric` (parallel to `values`); empty for text.
    pub numbers: Vec<f64>,
    pub null_count: usize,
}

impl Attribute {
    pub fn extent_len(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Path relative to the lake root, `/`-separated.
    pub id: String,
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub row_count: usize,
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub theta_num: f64,
    pub null_markers: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig::from(&Config::default())
    }
}

impl From<&Config> for IngestConfig {
    fn from(cfg: &Config) -> Self {
        IngestConfig {
            theta_num: cfg.theta_num,
            null_markers: cfg.null_markers.clone(),
        }
    }
}

impl IngestConfig {
    pub fn is_null(&self, cell: &str) -> bool {
        let cell = cell.trim();
        self.null_markers.iter().any(|m| m.eq_ignore_ascii_case(cell))
    }
}

/// A header plus rectangular rows of trimmed cells, before typing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Default, Clone)]
pub struct LoadReport {
    pub warnings: Vec<String>,
    /// Malformed rows dropped, per dataset id.
    pub skipped_rows: BTreeMap<String, usize>,
}

#[derive(Debug)]
pub struct Lake {
    pub datasets: Vec<Dataset>,
    pub report: LoadReport,
}

fn thousands_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$").unwrap())
}

/// Parse a cell as a finite number, accepting `1,234,567.5` style grouping.
pub fn parse_number(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    let parsed = if cell.contains(',') {
        if !thousands_re().is_match(cell) {
            return None;
        }
        cell.replace(',', "").parse::<f64>().ok()
    } else {
        // Rust accepts "inf"/"nan"/"infinity"; only digits-bearing cells count.
        if !cell.bytes().any(|b| b.is_ascii_digit()) {
            return None;
        }
        cell.parse::<f64>().ok()
    };
    parsed.filter(|x| x.is_finite())
}

/// Numeric iff at least `theta_num` of the non-null cells parse as finite
/// numbers. An all-null column is text.
pub fn infer_kind<S: AsRef<str>>(values: &[S], cfg: &IngestConfig) -> Kind {
    let mut non_null = 0usize;
    let mut numeric = 0usize;
    for v in values {
        let v = v.as_ref();
        if cfg.is_null(v) {
            continue;
        }
        non_null += 1;
        if parse_number(v).is_some() {
            numeric += 1;
        }
    }
    if non_null == 0 {
        return Kind::Text;
    }
    if numeric as f64 >= cfg.theta_num * non_null as f64 {
        Kind::Numeric
    } else {
        Kind::Text
    }
}

/// Pick the delimiter whose per-line count is most consistent over the first
/// lines; ties go to the larger count, then to the order comma, tab,
/// semicolon, pipe.
pub fn sniff_delimiter(text: &str) -> u8 {
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .take(SNIFF_LINES)
        .collect();
    let mut best = (b',', 0usize, 0usize);
    for &d in &DELIMITERS {
        let counts: Vec<usize> = lines.iter().map(|l| l.bytes().filter(|b| *b == d).count()).collect();
        let Some(&first) = counts.first() else { continue };
        if first == 0 {
            continue;
        }
        let agree = counts.iter().filter(|c| **c == first).count();
        if agree > best.1 || (agree == best.1 && first > best.2) {
            best = (d, agree, first);
        }
    }
    best.0
}

/// Parse delimited text. Rows whose field count differs from the header are
/// dropped and counted.
pub fn parse_raw_table(text: &str, source: &str) -> Result<(RawTable, usize)> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let delimiter = sniff_delimiter(text);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(Ok(rec)) => rec.iter().map(|s| s.trim().to_string()).collect(),
        Some(Err(e)) => {
            return Err(Error::Csv {
                path: source.to_string(),
                message: e.to_string(),
            })
        }
        None => return Err(Error::NoHeader(source.to_string())),
    };
    let looks_like_data = header.iter().all(|h| h.is_empty() || parse_number(h).is_some());
    if header.is_empty() || looks_like_data {
        return Err(Error::NoHeader(source.to_string()));
    }
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for rec in records {
        match rec {
            Ok(rec) if rec.len() == header.len() => {
                rows.push(rec.iter().map(|s| s.trim().to_string()).collect());
            }
            Ok(rec) if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) => {}
            _ => skipped += 1,
        }
    }
    Ok((RawTable { header, rows }, skipped))
}

pub fn read_raw_table(path: &Path) -> Result<(RawTable, usize)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_raw_table(&text, &path.display().to_string())
}

fn disambiguate(header: &[String]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    header
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let base = if h.is_empty() {
                format!("column_{}", i + 1)
            } else {
                h.clone()
            };
            let n = seen.entry(base.to_lowercase()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}_{n}")
            }
        })
        .collect()
}

impl Dataset {
    pub fn from_raw(id: impl Into<String>, name: impl Into<String>, raw: &RawTable, cfg: &IngestConfig) -> Dataset {
        let names = disambiguate(&raw.header);
        let attributes = names
            .into_iter()
            .enumerate()
            .map(|(position, name)| {
                let column: Vec<&str> = raw.rows.iter().map(|r| r[position].as_str()).collect();
                build_attribute(name, position, &column, cfg)
            })
            .collect();
        Dataset {
            id: id.into(),
            name: name.into(),
            attributes,
            row_count: raw.rows.len(),
        }
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

fn build_attribute(name: String, position: usize, column: &[&str], cfg: &IngestConfig) -> Attribute {
    let kind = infer_kind(column, cfg);
    let mut values = Vec::new();
    let mut numbers = Vec::new();
    let mut null_count = 0;
    for cell in column {
        let cell = cell.trim();
        if cfg.is_null(cell) {
            null_count += 1;
            continue;
        }
        match kind {
            Kind::Text => values.push(cell.to_string()),
            // Cells that do not parse in a numeric column are treated as nulls.
            Kind::Numeric => match parse_number(cell) {
                Some(x) => {
                    values.push(cell.to_string());
                    numbers.push(x);
                }
                None => null_count += 1,
            },
        }
    }
    Attribute {
        name,
        position,
        kind,
        values,
        numbers,
        null_count,
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn load_table(path: &Path, id: &str, cfg: &IngestConfig) -> Result<(Dataset, usize)> {
    let (raw, skipped) = read_raw_table(path)?;
    Ok((Dataset::from_raw(id, dataset_name(path), &raw, cfg), skipped))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let file_name = entry.file_name();
        if file_name.to_string_lossy().starts_with('.') {
            continue;
        }
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| TABLE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        {
            let rel = path.strip_prefix(root).unwrap_or(&path);
            let id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            out.push((id, path));
        }
    }
    Ok(())
}

/// Load every table file under `root`. Unreadable or headerless files are
/// reported as warnings; an empty result is an error.
pub fn load_lake(root: &Path, cfg: &IngestConfig) -> Result<Lake> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "lake root is not a directory"),
        ));
    }
    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    files.sort();

    let loaded: Vec<(String, Result<(Dataset, usize)>)> = files
        .par_iter()
        .map(|(id, path)| (id.clone(), load_table(path, id, cfg)))
        .collect();

    let mut report = LoadReport::default();
    let mut datasets = Vec::new();
    for (id, outcome) in loaded {
        match outcome {
            Ok((ds, skipped)) => {
                if skipped > 0 {
                    report
                        .warnings
                        .push(format!("{id}: skipped {skipped} malformed row(s)"));
                    report.skipped_rows.insert(id.clone(), skipped);
                }
                datasets.push(ds);
            }
            Err(e) => {
                log::warn!("skipping {id}: {e}");
                report.warnings.push(format!("{id}: {e}"));
            }
        }
    }
    if datasets.is_empty() {
        return Err(Error::EmptyLake(root.to_path_buf()));
    }
    Ok(Lake { datasets, report })
}

pub fn write_raw_table(path: &Path, table: &RawTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
