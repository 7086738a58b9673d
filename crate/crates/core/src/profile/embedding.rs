//! Word-embedding vector files.
//!
//! Text format: an optional `count dimension` header line, then one record
//! per line: a word followed by `dimension` whitespace-separated floats.
//! Words are lowercased on load; the first occurrence wins.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dimension: usize,
    vocabulary: HashMap<String, Vec<f32>>,
}

impl EmbeddingModel {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Embedding("dimension must be positive".into()));
        }
        Ok(EmbeddingModel {
            dimension,
            vocabulary: HashMap::new(),
        })
    }

    pub fn from_pairs<I, S>(dimension: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut model = EmbeddingModel::new(dimension)?;
        for (word, vector) in pairs {
            model.insert(word.into(), vector)?;
        }
        Ok(model)
    }

    pub fn insert(&mut self, word: String, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::Embedding(format!(
                "vector for `{word}` has length {}, expected {}",
                vector.len(),
                self.dimension
            )));
        }
        self.vocabulary.entry(word.to_lowercase()).or_insert(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vocabulary.get(word).map(Vec::as_slice)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut model: Option<EmbeddingModel> = None;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if lineno == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                model = Some(EmbeddingModel::new(fields[1].parse().unwrap())?);
                continue;
            }
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f32>())
                .collect::<std::result::Result<Vec<f32>, _>>()
                .map_err(|_| Error::Embedding(format!("{}:{}: non-numeric component", path.display(), lineno + 1)))?;
            let model = match &mut model {
                Some(m) => m,
                None => model.insert(EmbeddingModel::new(values.len())?),
            };
            model
                .insert(fields[0].to_string(), values)
                .map_err(|e| Error::Embedding(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        }
        model.ok_or_else(|| Error::Embedding(format!("{}: no vectors", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut words: Vec<&String> = self.vocabulary.keys().collect();
        words.sort();
        let mut out = format!("{} {}\n", words.len(), self.dimension);
        for w in words {
            out.push_str(w);
            for x in &self.vocabulary[w] {
                out.push(' ');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Mean vector of the in-vocabulary words, or `None` when no word is known.
pub fn embed_attribute(frequent_words: &BTreeSet<String>, model: &EmbeddingModel) -> Option<Vec<f32>> {
    let mut sum = vec![0f64; model.dimension()];
    let mut n = 0usize;
    for w in frequent_words {
        if let Some(v) = model.get(w) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += f64::from(*x);
            }
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    Some(sum.into_iter().map(|s| (s / n as f64) as f32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> EmbeddingModel {
        EmbeddingModel::from_pairs(
            3,
            [
                ("street", vec![1.0, 0.0, 2.0]),
                ("road", vec![1.0, 0.0, 2.0]),
                ("avenue", vec![0.0, 4.0, 1.0]),
            ],
        )
        .unwrap()
    }

    fn words(ws: &[&str]) -> BTreeSet<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn mean_of_identical_vectors() {
        assert_eq!(
            embed_attribute(&words(&["street", "road"]), &toy()),
            Some(vec![1.0, 0.0, 2.0])
        );
    }

    #[test]
    fn out_of_vocabulary_is_absent() {
        assert_eq!(embed_attribute(&words(&["zzqx"]), &toy()), None);
        assert_eq!(embed_attribute(&BTreeSet::new(), &toy()), None);
    }

    #[test]
    fn componentwise_mean() {
        assert_eq!(
            embed_attribute(&words(&["street", "avenue", "zzqx"]), &toy()),
            Some(vec![0.5, 2.0, 1.5])
        );
    }

    #[test]
    fn loads_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.vec");
        std::fs::write(&a, "2 3\nStreet 1 0 2\navenue 0 4 1\n").unwrap();
        let m = EmbeddingModel::load(&a).unwrap();
        assert_eq!(m.dimension(), 3);
        assert_eq!(m.get("street"), Some(&[1.0f32, 0.0, 2.0][..]));

        let b = dir.path().join("b.vec");
        std::fs::write(&b, "street 1 0 2\navenue 0 4 1\n").unwrap();
        assert_eq!(EmbeddingModel::load(&b).unwrap(), m);

        let bad = dir.path().join("bad.vec");
        std::fs::write(&bad, "street 1 0 2\navenue 0 4\n").unwrap();
        assert!(EmbeddingModel::load(&bad).is_err());
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.vec");
        toy().write(&p).unwrap();
        assert_eq!(EmbeddingModel::load(&p).unwrap(), toy());
    }
}
