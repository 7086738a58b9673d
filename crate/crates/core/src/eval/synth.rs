//! Synthetic base tables for benchmarks.
//!
//! Bases are grouped into topics. Each topic owns a set of column domains
//! (an entity domain used as the subject column, categories, codes, dates,
//! status words and numeric measures) built from pseudo-words, so that
//! domains of different topics do not share values or names. A matching
//! word-embedding model places every domain's words around a random
//! centroid.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::bench::BaseTable;
use crate::hashing::derive_seed;
use crate::ingest::RawTable;
use crate::profile::EmbeddingModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub topics: usize,
    pub min_rows: usize,
    pub max_rows: usize,
    pub embedding_dim: usize,
    /// Entity first-words per topic.
    pub entity_words: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            topics: 5,
            min_rows: 40,
            max_rows: 120,
            embedding_dim: 24,
            entity_words: 60,
        }
    }
}

pub struct SynthLake {
    pub bases: Vec<BaseTable>,
    pub embeddings: EmbeddingModel,
}

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ren", "tu", "sa", "vel", "do", "ri", "ban", "ko", "ze", "ma", "pil", "nu", "ta", "gor", "le",
    "fi", "dar", "bo", "che", "sun", "qua", "wen", "ly", "mor", "ti", "xan", "ed", "hal", "pe",
];

struct Words {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl Words {
    fn next(&mut self) -> String {
        loop {
            let n = self.rng.random_range(2..=3);
            let w: String = (0..n)
                .map(|_| SYLLABLES[self.rng.random_range(0..SYLLABLES.len())])
                .collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn many(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.next()).collect()
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone)]
enum Generator {
    /// "<First> <Suffix>", unique within a table.
    Entity {
        first: Vec<String>,
        suffix: Vec<String>,
    },
    Category(Vec<String>),
    /// Letter prefix, separator, digits; a different layout per topic.
    Code {
        prefix: String,
        layout: usize,
    },
    Date {
        layout: usize,
    },
    Status(Vec<String>),
    Measure {
        mean: f64,
        sd: f64,
        decimals: bool,
    },
}

#[derive(Debug, Clone)]
struct Domain {
    tag: String,
    names: [String; 2],
    gen: Generator,
}

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

impl Domain {
    fn value(&self, rng: &mut ChaCha8Rng) -> String {
        match &self.gen {
            Generator::Entity { .. } => unreachable!("entities are drawn per table"),
            Generator::Category(words) | Generator::Status(words) => words[rng.random_range(0..words.len())].clone(),
            Generator::Code { prefix, layout } => {
                let n: u32 = rng.random_range(0..10_000);
                match layout % 4 {
                    0 => format!("{prefix}-{n:04}"),
                    1 => format!("{n:04}/{prefix}"),
                    2 => format!("{prefix} {n:04} {}", &prefix[..1]),
                    _ => format!("#{n:04}.{}", prefix.to_lowercase()),
                }
            }
            Generator::Date { layout } => {
                let (y, m, d) = (
                    rng.random_range(2010..2024),
                    rng.random_range(1..=12),
                    rng.random_range(1..=28),
                );
                match layout % 4 {
                    0 => format!("{y}-{m:02}-{d:02}"),
                    1 => format!("{} {y}", MONTHS[m as usize - 1]),
                    2 => format!("{d:02}/{m:02}/{y}"),
                    _ => format!("{y}Q{}", (m - 1) / 3 + 1),
                }
            }
            Generator::Measure { mean, sd, decimals } => {
                let x = Normal::new(*mean, *sd).unwrap().sample(rng).max(0.0);
                if *decimals {
                    format!("{x:.2}")
                } else {
                    format!("{}", x.round() as i64)
                }
            }
        }
    }

    fn embedded_words(&self) -> Vec<String> {
        match &self.gen {
            Generator::Entity { suffix, .. } => suffix.clone(),
            Generator::Category(w) | Generator::Status(w) => w.clone(),
            _ => Vec::new(),
        }
    }
}

fn topic_domains(words: &mut Words, rng: &mut ChaCha8Rng, topic: usize, opts: &SynthOptions) -> Vec<Domain> {
    let names = |w: &mut Words| [w.next(), format!("{} {}", w.next(), w.next())];
    let mut domains = vec![Domain {
        tag: format!("topic{topic}/entity"),
        names: names(words),
        gen: Generator::Entity {
            first: words.many(opts.entity_words).iter().map(|w| capitalize(w)).collect(),
            suffix: words.many(6).iter().map(|w| capitalize(w)).collect(),
        },
    }];
    for k in 0..2 {
        let n = rng.random_range(8..=15);
        domains.push(Domain {
            tag: format!("topic{topic}/category{k}"),
            names: names(words),
            gen: Generator::Category(words.many(n).iter().map(|w| capitalize(w)).collect()),
        });
    }
    domains.push(Domain {
        tag: format!("topic{topic}/code"),
        names: names(words),
        gen: Generator::Code {
            prefix: words.next()[..2].to_uppercase(),
            layout: topic,
        },
    });
    domains.push(Domain {
        tag: format!("topic{topic}/date"),
        names: names(words),
        gen: Generator::Date { layout: topic },
    });
    domains.push(Domain {
        tag: format!("topic{topic}/status"),
        names: names(words),
        gen: Generator::Status(words.many(rng.random_range(4..=7))),
    });
    for k in 0..2 {
        domains.push(Domain {
            tag: format!("topic{topic}/measure{k}"),
            names: names(words),
            gen: Generator::Measure {
                mean: rng.random_range(10.0..5000.0),
                sd: rng.random_range(2.0..200.0),
                decimals: rng.random_bool(0.5),
            },
        });
    }
    domains
}

/// `count` base tables over `opts.topics` topics, plus an embedding model
/// covering their words. Deterministic in `seed`.
pub fn synthetic_bases(count: usize, seed: u64, opts: &SynthOptions) -> SynthLake {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "synthetic-bases"));
    let mut words = Words {
        rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, "synthetic-words")),
        used: HashSet::new(),
    };
    let topics: Vec<Vec<Domain>> = (0..opts.topics.max(1))
        .map(|t| topic_domains(&mut words, &mut rng, t, opts))
        .collect();

    let mut bases = Vec::with_capacity(count);
    for b in 0..count {
        let domains = &topics[b % topics.len()];
        let rows = rng.random_range(opts.min_rows..=opts.max_rows);
        let extra = rng.random_range(3..=5).min(domains.len() - 1);
        let mut picked: Vec<usize> = sample(&mut rng, domains.len() - 1, extra)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        picked.shuffle(&mut rng);
        let cols: Vec<&Domain> = std::iter::once(&domains[0])
            .chain(picked.iter().map(|&i| &domains[i]))
            .collect();

        let header: Vec<String> = cols
            .iter()
            .map(|d| d.names[usize::from(rng.random_bool(0.25))].clone())
            .collect();
        let Generator::Entity { first, suffix } = &domains[0].gen else {
            unreachable!()
        };
        let combos = first.len() * suffix.len();
        let entity_idx = sample(&mut rng, combos, rows.min(combos)).into_vec();
        let table_rows = entity_idx
            .iter()
            .map(|&e| {
                let mut row = vec![format!("{} {}", first[e / suffix.len()], suffix[e % suffix.len()])];
                row.extend(cols[1..].iter().map(|d| d.value(&mut rng)));
                row
            })
            .collect();
        bases.push(BaseTable {
            name: format!("base{b:02}.csv"),
            table: RawTable {
                header,
                rows: table_rows,
            },
            domains: cols.iter().map(|d| d.tag.clone()).collect(),
        });
    }

    let dim = opts.embedding_dim.max(1);
    let mut model = EmbeddingModel::new(dim).expect("positive dimension");
    for domain in topics.iter().flatten() {
        let centroid: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        for w in domain.embedded_words() {
            let v = centroid
                .iter()
                .map(|c| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    (c + 0.5 * noise) as f32
                })
                .collect();
            model.insert(w, v).expect("dimension matches");
        }
    }
    SynthLake {
        bases,
        embeddings: model,
    }
}
