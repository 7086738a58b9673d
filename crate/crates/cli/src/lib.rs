//! Commands behind the `lakefind` binary. Each command returns its output
//! as data; `main` only parses flags and prints.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use lakefind_core::config::{read_weights_file, write_weights_file, Eq3Weights};
use lakefind_core::eval::{
    evaluate_targets, fit_with_holdout, generate_benchmark, labeled_pairs, load_bases, sample_targets, summarize,
    synthetic_bases, write_bases, write_benchmark, BenchOptions, EvalSettings, FitReport, GroundTruth, MetricRow,
    SynthOptions, LAKE_DIR, TRUTH_FILE,
};
use lakefind_core::index::LakeIndex;
use lakefind_core::ingest::{load_lake, load_table, IngestConfig};
use lakefind_core::joins::{build_join_graph, find_join_paths};
use lakefind_core::profile::{DatasetProfile, EmbeddingModel, Profiler};
use lakefind_core::relatedness::{collect_rows, rank, EvidenceWeights, LookupOptions};
use lakefind_core::Config;

/// Weights written by `eval --fit-weights` and read under `eq3_weights = fitted`.
pub const FITTED_WEIGHTS_FILE: &str = "fitted_weights";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const BASES_DIR: &str = "bases";
pub const BENCH_CONFIG_FILE: &str = "lakefind.conf";

/// `--config` file and `--set key=value` overrides, applied in that order.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub set: Vec<String>,
}

impl Overrides {
    /// Start from `base` (defaults, or an index's recorded config), replace
    /// it with the config file when given, then apply `--set` pairs.
    pub fn apply(&self, base: Config) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path).with_context(|| format!("reading config {}", path.display()))?,
            None => base,
        };
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .with_context(|| format!("--set expects key=value, got `{pair}`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_model(cfg: &Config) -> Result<Option<EmbeddingModel>> {
    match &cfg.embedding_path {
        Some(p) => Ok(Some(
            EmbeddingModel::load(p).with_context(|| format!("loading embeddings {}", p.display()))?,
        )),
        None => Ok(None),
    }
}

fn ensure_writable_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            bail!("{} exists and is not a directory", dir.display());
        }
        let non_empty = std::fs::read_dir(dir)?.next().is_some();
        if non_empty && !force {
            bail!("{} is not empty; pass --force to overwrite", dir.display());
        }
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct IndexSummary {
    pub tables: usize,
    pub attributes: usize,
    pub warnings: Vec<String>,
    pub elapsed: Duration,
}

pub fn cmd_index(lake: &Path, out: &Path, cfg: &Config, force: bool) -> Result<IndexSummary> {
    let started = Instant::now();
    ensure_writable_dir(out, force)?;
    let loaded = load_lake(lake, &IngestConfig::from(cfg))?;
    let model = load_model(cfg)?;
    let profiles = Profiler::new(cfg.into(), model.as_ref()).profile_lake(&loaded.datasets);
    let index = LakeIndex::build(&profiles, cfg, model.as_ref().map(EmbeddingModel::dimension))?;
    index.save(out)?;
    Ok(IndexSummary {
        tables: index.catalog().datasets.len(),
        attributes: index.catalog().attributes.len(),
        warnings: loaded.report.warnings,
        elapsed: started.elapsed(),
    })
}

/// Load an index and settle the query-time config: the recorded config
/// unless overridden, and in any case compatible with the index.
pub fn open_index(dir: &Path, overrides: &Overrides) -> Result<(LakeIndex, Config)> {
    let index = LakeIndex::load(dir).with_context(|| format!("loading index {}", dir.display()))?;
    let cfg = overrides.apply(index.config().clone())?;
    cfg.check_index_compatible(index.config())?;
    Ok((index, cfg))
}

pub fn resolve_weights(cfg: &Config, index_dir: &Path, weights_file: Option<&Path>) -> Result<EvidenceWeights> {
    let w = match (weights_file, &cfg.eq3_weights) {
        (Some(p), _) => read_weights_file(p)?,
        (None, Eq3Weights::Fixed(w)) => *w,
        (None, Eq3Weights::Fitted) => {
            let p = index_dir.join(FITTED_WEIGHTS_FILE);
            read_weights_file(&p).with_context(|| format!("eq3_weights = fitted but {} is unusable", p.display()))?
        }
    };
    Ok(EvidenceWeights::new(w)?)
}

fn profile_file(path: &Path, id: &str, cfg: &Config, model: Option<&EmbeddingModel>) -> Result<DatasetProfile> {
    let (dataset, skipped) =
        load_table(path, id, &IngestConfig::from(cfg)).with_context(|| format!("reading target {}", path.display()))?;
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed row(s)", path.display());
    }
    Ok(Profiler::new(cfg.into(), model).profile_dataset(&dataset))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub rank: usize,
    pub dataset: String,
    pub distance: f64,
    pub d_n: f64,
    pub d_v: f64,
    pub d_f: f64,
    pub d_e: f64,
    pub d_d: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopRecord {
    pub from: String,
    pub from_attr: String,
    pub to: String,
    pub to_attr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub start: String,
    pub nodes: Vec<String>,
    pub hops: Vec<HopRecord>,
    /// Target attributes aligned with each node.
    pub covered: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRecord {
    pub dataset: String,
    pub coverage: f64,
    pub join_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryOutput {
    pub results: Vec<ResultRecord>,
    pub paths: Vec<PathRecord>,
    pub coverage: Vec<CoverageRecord>,
}

#[derive(Debug, Clone, Default)]
pub struct QueryOptions {
    pub join_paths: bool,
    pub weights: Option<PathBuf>,
}

/// Rank the lake for the table in `target`. The dataset id of the target
/// is its file name.
pub fn cmd_query(index_dir: &Path, target: &Path, k: usize, cfg: &Config, opts: &QueryOptions) -> Result<QueryOutput> {
    if k == 0 {
        bail!("k must be at least 1");
    }
    let index = LakeIndex::load(index_dir).with_context(|| format!("loading index {}", index_dir.display()))?;
    cfg.check_index_compatible(index.config())?;
    let weights = resolve_weights(cfg, index_dir, opts.weights.as_deref())?;
    let model = load_model(cfg)?;
    let id = target
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| target.display().to_string());
    let profile = profile_file(target, &id, cfg, model.as_ref())?;
    query_profile(&index, &profile, k, cfg, &weights, opts.join_paths)
}

pub fn query_profile(
    index: &LakeIndex,
    target: &DatasetProfile,
    k: usize,
    cfg: &Config,
    weights: &EvidenceWeights,
    join_paths: bool,
) -> Result<QueryOutput> {
    if k == 0 {
        bail!("k must be at least 1");
    }
    let catalog = index.catalog();
    let opts = LookupOptions {
        budget: cfg.lookup_budget(k),
        exclude: None,
    };
    let collected = collect_rows(target, index, opts)?;
    let mut ranking = rank(&collected, catalog, weights);
    ranking.truncate(k);

    let mut out = QueryOutput {
        results: ranking
            .iter()
            .enumerate()
            .map(|(i, d)| ResultRecord {
                rank: i + 1,
                dataset: d.id.clone(),
                distance: d.distance,
                d_n: d.dv[0],
                d_v: d.dv[1],
                d_f: d.dv[2],
                d_e: d.dv[3],
                d_d: d.dv[4],
                m: d.m,
            })
            .collect(),
        ..QueryOutput::default()
    };
    if !join_paths {
        return Ok(out);
    }

    let graph = build_join_graph(index, cfg.join_budget);
    let starts: Vec<_> = ranking.iter().map(|d| d.dataset).collect();
    let paths = find_join_paths(&graph, &starts, &collected.evidence, cfg.max_join_len);
    let arity = target.attributes.len();
    let covered_by = |ds| -> BTreeSet<usize> {
        collected
            .rows
            .get(&ds)
            .map(|rows| rows.iter().map(|r| r.target_attr).collect())
            .unwrap_or_default()
    };
    let attr_names = |set: &BTreeSet<usize>| set.iter().map(|&a| target.attributes[a].name.clone()).collect();

    for p in &paths {
        let hops = p
            .nodes
            .windows(2)
            .map(|w| {
                let (a, b, _) = graph.hop(w[0], w[1]).expect("path follows graph edges");
                HopRecord {
                    from: catalog.dataset(w[0]).id.clone(),
                    from_attr: catalog.attribute(a).name.clone(),
                    to: catalog.dataset(w[1]).id.clone(),
                    to_attr: catalog.attribute(b).name.clone(),
                }
            })
            .collect();
        out.paths.push(PathRecord {
            start: catalog.dataset(p.start()).id.clone(),
            nodes: p.nodes.iter().map(|n| catalog.dataset(*n).id.clone()).collect(),
            hops,
            covered: p.nodes.iter().map(|n| attr_names(&covered_by(*n))).collect(),
        });
    }
    for d in &ranking {
        let base = d.covered();
        let joined: Vec<BTreeSet<usize>> = paths
            .iter()
            .filter(|p| p.start() == d.dataset)
            .flat_map(|p| p.nodes[1..].iter().map(|n| covered_by(*n)))
            .collect();
        out.coverage.push(CoverageRecord {
            dataset: d.id.clone(),
            coverage: lakefind_core::eval::coverage(arity, &base),
            join_coverage: lakefind_core::eval::join_coverage(arity, &base, &joined),
        });
    }
    Ok(out)
}

impl QueryOutput {
    /// Tab-separated records, each line tagged with its record type.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            s.push_str(&format!(
                "result\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.rank, r.dataset, r.distance, r.d_n, r.d_v, r.d_f, r.d_e, r.d_d, r.m
            ));
        }
        for p in &self.paths {
            let hops: Vec<String> = p
                .hops
                .iter()
                .map(|h| format!("{}.{}={}.{}", h.from, h.from_attr, h.to, h.to_attr))
                .collect();
            let covered: Vec<String> = p.covered.iter().map(|c| c.join(",")).collect();
            s.push_str(&format!(
                "path\t{}\t{}\t{}\t{}\n",
                p.start,
                p.nodes.join(">"),
                hops.join(";"),
                covered.join("|")
            ));
        }
        for c in &self.coverage {
            s.push_str(&format!(
                "coverage\t{}\t{}\t{}\n",
                c.dataset, c.coverage, c.join_coverage
            ));
        }
        s
    }

    /// One JSON object per line; keys in declaration order after `type`.
    pub fn to_json_lines(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Tagged<'a, T: Serialize> {
            r#type: &'a str,
            #[serde(flatten)]
            record: &'a T,
        }
        let mut s = String::new();
        for r in &self.results {
            s.push_str(&serde_json::to_string(&Tagged {
                r#type: "result",
                record: r,
            })?);
            s.push('\n');
        }
        for p in &self.paths {
            s.push_str(&serde_json::to_string(&Tagged {
                r#type: "path",
                record: p,
            })?);
            s.push('\n');
        }
        for c in &self.coverage {
            s.push_str(&serde_json::to_string(&Tagged {
                r#type: "coverage",
                record: c,
            })?);
            s.push('\n');
        }
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    /// Evaluate a seeded sample of this many targets.
    pub sample: Option<usize>,
    pub seed: u64,
    pub weights: Option<PathBuf>,
    /// Fit weights on the evaluated targets and store them in the index.
    pub fit_weights: bool,
}

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub rows: Vec<MetricRow>,
    /// Targets without a ground-truth entry.
    pub skipped: Vec<String>,
    pub fit: Option<FitReport>,
}

pub const METRICS_HEADER: &str = "k,targets,precision,recall,coverage,join_coverage,attribute_precision";

impl EvalOutput {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{METRICS_HEADER}\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.k, r.targets, r.precision, r.recall, r.coverage, r.join_coverage, r.attribute_precision
            ));
        }
        s
    }
}

pub fn cmd_eval(
    index_dir: &Path,
    targets_dir: &Path,
    truth: &Path,
    cfg: &Config,
    opts: &EvalOptions,
) -> Result<EvalOutput> {
    if opts.ks.is_empty() || opts.ks.contains(&0) {
        bail!("k list must be non-empty and every k at least 1");
    }
    let index = LakeIndex::load(index_dir).with_context(|| format!("loading index {}", index_dir.display()))?;
    cfg.check_index_compatible(index.config())?;
    let truth = GroundTruth::read(truth)?;
    let model = load_model(cfg)?;

    let loaded = load_lake(targets_dir, &IngestConfig::from(cfg))?;
    let mut skipped = Vec::new();
    let mut ids = Vec::new();
    for d in &loaded.datasets {
        if truth.covers(&d.id) {
            ids.push(d.id.clone());
        } else {
            skipped.push(d.id.clone());
        }
    }
    let ids = match opts.sample {
        Some(n) => sample_targets(&ids, n, opts.seed),
        None => ids,
    };
    if ids.is_empty() {
        bail!("no target in {} is covered by the ground truth", targets_dir.display());
    }
    let wanted: BTreeSet<&String> = ids.iter().collect();
    let chosen: Vec<_> = loaded
        .datasets
        .iter()
        .filter(|d| wanted.contains(&d.id))
        .cloned()
        .collect();
    let targets = Profiler::new(cfg.into(), model.as_ref()).profile_lake(&chosen);

    let weights = match opts.weights.as_deref() {
        Some(p) => EvidenceWeights::new(read_weights_file(p)?)?,
        None if opts.fit_weights && cfg.eq3_weights == Eq3Weights::Fitted => EvidenceWeights::uniform(),
        None => resolve_weights(cfg, index_dir, None)?,
    };
    let graph = build_join_graph(&index, cfg.join_budget);
    let settings = EvalSettings {
        weights: &weights,
        budget_factor: cfg.lookup_budget_factor,
        max_join_len: cfg.max_join_len,
        graph: Some(&graph),
    };
    let per_target = evaluate_targets(&index, &targets, &truth, &opts.ks, &settings)?;

    let fit = if opts.fit_weights {
        let budget = cfg.lookup_budget(*opts.ks.iter().max().expect("non-empty"));
        let mut pairs = Vec::new();
        for t in &targets {
            pairs.extend(labeled_pairs(&index, t, &truth, budget)?);
        }
        let report = fit_with_holdout(&pairs, 0.25, opts.seed)?;
        write_weights_file(&index_dir.join(FITTED_WEIGHTS_FILE), &report.weights.0)?;
        Some(report)
    } else {
        None
    };
    Ok(EvalOutput {
        rows: summarize(&per_target),
        skipped,
        fit,
    })
}

#[derive(Debug, Clone)]
pub enum BaseSource {
    Dir(PathBuf),
    /// Generate this many synthetic base tables.
    Synthetic(usize),
}

#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub tables: usize,
    pub bases: usize,
    pub skipped: Vec<String>,
    pub embeddings: Option<PathBuf>,
}

/// Derive `n` tables into `out/lake` with `out/truth.csv`. Synthetic bases
/// are also written to `out/bases`, with their embedding model and a config
/// file pointing at it.
pub fn cmd_bench(source: &BaseSource, n: usize, seed: u64, out: &Path, force: bool) -> Result<BenchSummary> {
    let (bases, model) = match source {
        BaseSource::Dir(dir) => (load_bases(dir)?, None),
        BaseSource::Synthetic(count) => {
            if *count == 0 {
                bail!("--synthetic-bases must be at least 1");
            }
            let synth = synthetic_bases(*count, seed, &SynthOptions::default());
            (synth.bases, Some(synth.embeddings))
        }
    };
    let bench = generate_benchmark(&bases, n, seed, &BenchOptions::default())?;
    ensure_writable_dir(out, force)?;
    write_benchmark(out, &bench)?;
    let mut embeddings = None;
    if let Some(model) = model {
        write_bases(&out.join(BASES_DIR), &bases)?;
        let path = out.join(EMBEDDINGS_FILE);
        model.write(&path)?;
        let mut cfg = Config {
            seed,
            ..Config::default()
        };
        cfg.embedding_path = Some(path.clone());
        std::fs::write(out.join(BENCH_CONFIG_FILE), cfg.to_text())?;
        embeddings = Some(path);
    }
    Ok(BenchSummary {
        tables: bench.tables.len(),
        bases: bases.len(),
        skipped: bench.skipped,
        embeddings,
    })
}

/// Paths inside a benchmark directory.
pub fn bench_lake(dir: &Path) -> PathBuf {
    dir.join(LAKE_DIR)
}

pub fn bench_truth(dir: &Path) -> PathBuf {
    dir.join(TRUTH_FILE)
}
