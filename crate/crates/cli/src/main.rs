use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use lakefind_cli::{
    bench_lake, bench_truth, cmd_bench, cmd_eval, cmd_index, cmd_query, open_index, BaseSource, EvalOptions, Overrides,
    QueryOptions,
};
use lakefind_core::Config;

#[derive(Parser)]
#[command(name = "lakefind", version, about = "Find related tables in a data lake")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            set: self.set.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Profile every table under LAKE and write an index to OUT.
    Index {
        lake: PathBuf,
        out: PathBuf,
        /// Overwrite a non-empty OUT.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Rank indexed tables by relatedness to TARGET.
    Query {
        index: PathBuf,
        target: PathBuf,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        /// Also report join paths and join-augmented coverage.
        #[arg(long)]
        join_paths: bool,
        /// File with five weights (N,V,F,E,D).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// One JSON object per line.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score rankings of the tables in TARGETS against a ground truth.
    Eval {
        index: PathBuf,
        targets: PathBuf,
        truth: PathBuf,
        /// Comma-separated k values.
        #[arg(short, long, value_delimiter = ',', default_value = "10")]
        k: Vec<usize>,
        /// Evaluate a seeded sample of this many targets.
        #[arg(long)]
        sample: Option<usize>,
        /// Sampling seed; defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Fit evidence weights and store them in the index directory.
        #[arg(long)]
        fit_weights: bool,
        /// Write the metrics CSV here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Derive a benchmark lake and ground truth from base tables.
    Bench {
        /// Directory of base tables (optionally with domains.csv).
        #[arg(required_unless_present = "synthetic_bases", conflicts_with = "synthetic_bases")]
        bases: Option<PathBuf>,
        /// Generate this many synthetic base tables instead.
        #[arg(long)]
        synthetic_bases: Option<usize>,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = Config::default().seed)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

/// Write to stdout; a reader that went away (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index { lake, out, force, cfg } => {
            let cfg = cfg.overrides().apply(Config::default())?;
            let s = cmd_index(&lake, &out, &cfg, force)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "indexed {} tables, {} attributes in {:.2}s ({} warnings)",
                s.tables,
                s.attributes,
                s.elapsed.as_secs_f64(),
                s.warnings.len()
            );
        }
        Command::Query {
            index,
            target,
            k,
            join_paths,
            weights,
            json,
            cfg,
        } => {
            let (_, cfg) = open_index(&index, &cfg.overrides())?;
            let out = cmd_query(&index, &target, k, &cfg, &QueryOptions { join_paths, weights })?;
            if json {
                emit(&out.to_json_lines()?)?;
            } else {
                emit(&out.to_tsv())?;
            }
        }
        Command::Eval {
            index,
            targets,
            truth,
            k,
            sample,
            seed,
            weights,
            fit_weights,
            out,
            cfg,
        } => {
            let (_, cfg) = open_index(&index, &cfg.overrides())?;
            let opts = EvalOptions {
                ks: k,
                sample,
                seed: seed.unwrap_or(cfg.seed),
                weights,
                fit_weights,
            };
            let result = cmd_eval(&index, &targets, &truth, &cfg, &opts)?;
            for id in &result.skipped {
                eprintln!("warning: {id} is not in the ground truth; skipped");
            }
            if let Some(fit) = &result.fit {
                eprintln!(
                    "fitted weights {:?}; train accuracy {:.3}, held-out accuracy {:.3}",
                    fit.weights.0,
                    fit.train_accuracy,
                    fit.holdout_accuracy.unwrap_or(f64::NAN)
                );
            }
            match out {
                Some(p) => std::fs::write(&p, result.to_csv())?,
                None => emit(&result.to_csv())?,
            }
        }
        Command::Bench {
            bases,
            synthetic_bases,
            n,
            seed,
            out,
            force,
        } => {
            let source = match (bases, synthetic_bases) {
                (_, Some(count)) => BaseSource::Synthetic(count),
                (Some(dir), None) => BaseSource::Dir(dir),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let s = cmd_bench(&source, n, seed, &out, force)?;
            for b in &s.skipped {
                eprintln!("warning: base table {b} is too small; skipped");
            }
            println!(
                "wrote {} tables from {} bases to {}; truth in {}",
                s.tables,
                s.bases,
                bench_lake(&out).display(),
                bench_truth(&out).display()
            );
            if let Some(p) = s.embeddings {
                println!("embedding model in {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
