//! Engine configuration.
//!
//! One flat `key = value` text file drives every stage. Blank lines and
//! lines starting with `#` are ignored. Unknown keys are rejected so that a
//! typo cannot silently fall back to a default.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Weights for the final weighted l2 combination of the five evidence
/// aggregates.
#[derive(Debug, Clone, PartialEq)]
pub enum Eq3Weights {
    Fixed([f64; 5]),
    /// Read `fitted_weights` from the index directory at query time.
    Fitted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub qgram_size: usize,
    pub minhash_size: usize,
    pub rp_bits: usize,
    pub lsh_threshold: f64,
    pub forest_trees: usize,
    pub forest_depth: usize,
    pub lookup_budget_factor: usize,
    pub join_budget: usize,
    pub theta_num: f64,
    pub null_markers: Vec<String>,
    /// (uniqueness, completeness, leftness) coefficients of the subject
    /// attribute score.
    pub subject_weights: [f64; 3],
    pub eq3_weights: Eq3Weights,
    pub embedding_path: Option<PathBuf>,
    pub sample_cap: usize,
    pub seed: u64,
    pub max_join_len: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            qgram_size: 4,
            minhash_size: 256,
            rp_bits: 256,
            lsh_threshold: 0.7,
            forest_trees: 8,
            forest_depth: 32,
            lookup_budget_factor: 4,
            join_budget: 32,
            theta_num: 0.9,
            null_markers: ["", "-", "NA", "N/A", "null"].iter().map(|s| s.to_string()).collect(),
            subject_weights: [0.4, 0.3, 0.3],
            eq3_weights: Eq3Weights::Fixed([1.0; 5]),
            embedding_path: None,
            sample_cap: 100_000,
            seed: 42,
            max_join_len: 3,
        }
    }
}

/// Keys that change what ends up inside an index. A query against an index
/// must agree with it on all of these.
const INDEX_KEYS: &[&str] = &[
    "qgram_size",
    "minhash_size",
    "rp_bits",
    "lsh_threshold",
    "forest_trees",
    "forest_depth",
    "theta_num",
    "null_markers",
    "subject_weights",
    "sample_cap",
    "seed",
];

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        self.validate()
    }

    /// Set a single key. Used by the file parser and by command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "qgram_size" => self.qgram_size = parse_num(key, value)?,
            "minhash_size" => self.minhash_size = parse_num(key, value)?,
            "rp_bits" => self.rp_bits = parse_num(key, value)?,
            "lsh_threshold" => self.lsh_threshold = parse_num(key, value)?,
            "forest_trees" => self.forest_trees = parse_num(key, value)?,
            "forest_depth" => self.forest_depth = parse_num(key, value)?,
            "lookup_budget_factor" => self.lookup_budget_factor = parse_num(key, value)?,
            "join_budget" => self.join_budget = parse_num(key, value)?,
            "theta_num" => self.theta_num = parse_num(key, value)?,
            "null_markers" => {
                self.null_markers = value.split(',').map(|s| s.trim().to_string()).collect();
                if !self.null_markers.iter().any(|m| m.is_empty()) {
                    self.null_markers.insert(0, String::new());
                }
            }
            "subject_weights" => {
                let v = parse_list(key, value)?;
                self.subject_weights = v
                    .try_into()
                    .map_err(|_| Error::Config("subject_weights needs 3 values".into()))?;
            }
            "eq3_weights" => {
                self.eq3_weights = if value.eq_ignore_ascii_case("fitted") {
                    Eq3Weights::Fitted
                } else {
                    let v = parse_list(key, value)?;
                    Eq3Weights::Fixed(
                        v.try_into()
                            .map_err(|_| Error::Config("eq3_weights needs 5 values".into()))?,
                    )
                }
            }
            "embedding_path" => {
                self.embedding_path = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "sample_cap" => self.sample_cap = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "max_join_len" => self.max_join_len = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lsh_threshold > 0.0 && self.lsh_threshold < 1.0) {
            return fail("lsh_threshold must lie in (0, 1)");
        }
        if self.minhash_size < 16 || self.rp_bits < 16 {
            return fail("minhash_size and rp_bits must be at least 16");
        }
        if self.qgram_size < 2 {
            return fail("qgram_size must be at least 2");
        }
        if self.forest_trees == 0 || self.forest_depth == 0 {
            return fail("forest_trees and forest_depth must be positive");
        }
        if self.forest_trees > self.minhash_size.min(self.rp_bits) {
            return fail("forest_trees cannot exceed the signature width");
        }
        if !(self.theta_num > 0.0 && self.theta_num <= 1.0) {
            return fail("theta_num must lie in (0, 1]");
        }
        if self.lookup_budget_factor == 0 || self.join_budget == 0 {
            return fail("lookup budgets must be positive");
        }
        if self.sample_cap == 0 {
            return fail("sample_cap must be positive");
        }
        if self.subject_weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return fail("subject_weights must be finite and non-negative");
        }
        if let Eq3Weights::Fixed(w) = &self.eq3_weights {
            if w.iter().any(|x| *x < 0.0 || !x.is_finite()) || w.iter().all(|x| *x == 0.0) {
                return fail("eq3_weights must be non-negative and not all zero");
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("qgram_size", self.qgram_size.to_string()),
            ("minhash_size", self.minhash_size.to_string()),
            ("rp_bits", self.rp_bits.to_string()),
            ("lsh_threshold", self.lsh_threshold.to_string()),
            ("forest_trees", self.forest_trees.to_string()),
            ("forest_depth", self.forest_depth.to_string()),
            ("lookup_budget_factor", self.lookup_budget_factor.to_string()),
            ("join_budget", self.join_budget.to_string()),
            ("theta_num", self.theta_num.to_string()),
            ("null_markers", self.null_markers.join(",")),
            ("subject_weights", join(&self.subject_weights)),
            (
                "eq3_weights",
                match &self.eq3_weights {
                    Eq3Weights::Fixed(w) => join(w),
                    Eq3Weights::Fitted => "fitted".to_string(),
                },
            ),
            (
                "embedding_path",
                self.embedding_path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("sample_cap", self.sample_cap.to_string()),
            ("seed", self.seed.to_string()),
            ("max_join_len", self.max_join_len.to_string()),
        ]
    }

    /// Check that `other` (typically the config recorded in an index) agrees
    /// on every parameter that shapes index contents.
    pub fn check_index_compatible(&self, other: &Config) -> Result<()> {
        let mine = self.entries();
        let theirs = other.entries();
        let mut diffs = Vec::new();
        for ((k, a), (_, b)) in mine.iter().zip(theirs.iter()) {
            if INDEX_KEYS.contains(k) && a != b {
                diffs.push(format!("{k}: {a} vs {b}"));
            }
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::ParamMismatch(diffs.join("; ")))
        }
    }

    pub fn lookup_budget(&self, k: usize) -> usize {
        self.lookup_budget_factor.saturating_mul(k.max(1))
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Read a five-value weights file (one line, comma or whitespace separated;
/// `#` comments allowed).
pub fn read_weights_file(path: &Path) -> Result<[f64; 5]> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let body: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join(" ");
    let values = parse_list("weights", &body)?;
    let w: [f64; 5] = values
        .try_into()
        .map_err(|_| Error::Config(format!("{}: expected 5 weights", path.display())))?;
    if w.iter().any(|x| *x < 0.0 || !x.is_finite()) || w.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroWeights);
    }
    Ok(w)
}

pub fn write_weights_file(path: &Path, w: &[f64; 5]) -> Result<()> {
    let line = w.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
    std::fs::write(path, format!("# N,V,F,E,D\n{line}\n")).map_err(|e| Error::io(path, e))
}
