//! Word-vector tables and the plain text vector format.
//!
//! The format is one word per line followed by its components, separated by
//! single spaces, with an optional `<count> <dimension>` header line. Both
//! GloVe training output and transformer exports use it.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use indexmap::IndexMap;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize_word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LookupPolicy {
    /// Exact match on the normalized (lowercase) word.
    Strict,
    /// Normalized form first, then title case, then upper case.
    #[default]
    Casefold,
}

impl std::str::FromStr for LookupPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(LookupPolicy::Strict),
            "casefold" => Ok(LookupPolicy::Casefold),
            other => Err(format!(
                "unknown lookup policy {other:?} (expected strict|casefold)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: IndexMap<String, Vec<f64>>,
    pub source: String,
}

impl EmbeddingTable {
    pub fn new(dimension: usize, source: impl Into<String>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Vector("dimension must be at least 1".into()));
        }
        Ok(EmbeddingTable {
            dimension,
            vectors: IndexMap::new(),
            source: source.into(),
        })
    }

    /// Inserts or replaces a vector. Returns true when the word was already present.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<bool> {
        let word = word.into();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::Vector(format!("invalid word {word:?}")));
        }
        if vector.len() != self.dimension {
            return Err(Error::Vector(format!(
                "{word:?} has {} components, table dimension is {}",
                vector.len(),
                self.dimension
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Vector(format!(
                "{word:?} has a non-finite component"
            )));
        }
        if norm(&vector) == 0.0 {
            return Err(Error::Vector(format!("{word:?} is a zero vector")));
        }
        Ok(self.vectors.insert(word, vector).is_some())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    pub fn lookup(&self, word: &str, policy: LookupPolicy) -> Option<&[f64]> {
        let key = normalize_word(word);
        if let Some(v) = self.vectors.get(&key) {
            return Some(v);
        }
        if policy == LookupPolicy::Strict {
            return None;
        }
        [title_case(&key), key.to_uppercase()]
            .iter()
            .find_map(|k| self.vectors.get(k))
            .map(Vec::as_slice)
    }

    /// Applies `f` to every vector. Fails if a result breaks the table invariants.
    pub fn map_vectors(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<EmbeddingTable> {
        let first = self
            .vectors
            .values()
            .next()
            .map(|v| f(v).len())
            .unwrap_or(self.dimension);
        let mut out = EmbeddingTable::new(first, self.source.clone())?;
        for (w, v) in &self.vectors {
            out.insert(w.clone(), f(v))?;
        }
        Ok(out)
    }

    pub fn write(&self, mut w: impl Write, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "{} {}", self.vectors.len(), self.dimension)?;
        }
        for (word, v) in &self.vectors {
            w.write_all(word.as_bytes())?;
            for x in v {
                write!(w, " {x}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write(&mut out, true)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(reader: impl BufRead, source: impl Into<String>) -> Result<EmbeddingTable> {
        let source = source.into();
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source.as_str(), e))?;
            if !line.trim().is_empty() {
                lines.push((i + 1, line));
            }
        }
        let mut body = &lines[..];
        let mut declared = None;
        if let Some((_, first)) = lines.first() {
            if let Some((count, dim)) = parse_header(first) {
                let next_fields = lines.get(1).map(|(_, l)| l.split_whitespace().count());
                if next_fields.is_none_or(|n| n == dim + 1) {
                    declared = Some(count);
                    body = &lines[1..];
                }
            }
        }
        let Some((first_line, first)) = body.first() else {
            return Err(Error::Embedding {
                line: lines.first().map_or(1, |(n, _)| *n),
                message: "no vectors".into(),
            });
        };
        let dimension = first.split_whitespace().count().saturating_sub(1);
        if dimension == 0 {
            return Err(Error::Embedding {
                line: *first_line,
                message: "a vector line needs a word and at least one component".into(),
            });
        }
        let mut table = EmbeddingTable::new(dimension, source)?;
        for (n, line) in body {
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default();
            let vector = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Embedding {
                        line: *n,
                        message: format!("non-numeric component {f:?}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != dimension {
                return Err(Error::Embedding {
                    line: *n,
                    message: format!("expected {dimension} components, found {}", vector.len()),
                });
            }
            match table.insert(word, vector) {
                Ok(true) => warn!("line {n}: duplicate word {word:?}, keeping the later vector"),
                Ok(false) => {}
                Err(e) => {
                    return Err(Error::Embedding {
                        line: *n,
                        message: e.to_string(),
                    })
                }
            }
        }
        if let Some(count) = declared.filter(|&c| c != table.len()) {
            warn!(
                "header declares {count} vectors, file holds {}",
                table.len()
            );
        }
        Ok(table)
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_whitespace();
    let count = it.next()?.parse().ok()?;
    let dim = it.next()?.parse().ok()?;
    it.next().is_none().then_some((count, dim))
}

fn title_case(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn load_table(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    EmbeddingTable::read(BufReader::new(file), format!("file:{label}"))
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Vector(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Vector("cosine of a zero vector".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}
