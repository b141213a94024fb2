//! GloVe embeddings trained from scratch on a review corpus.
//!
//! Co-occurrences are counted inside sentences only: two tokens `d <= window`
//! positions apart add `1/d` to both `X[i][j]` and `X[j][i]`. Training
//! minimizes `sum f(X_ij) (w_i . c_j + b_i + b'_j - ln X_ij)^2` with
//! `f(x) = min((x / x_max)^alpha, 1)` using AdaGrad. The exported vector of a
//! word is `w + c`.
//!
//! With more than one worker, shards of the shuffled entries are processed
//! concurrently and update shared parameters without locks: concurrent
//! read-modify-write sequences may lose updates, but every individual load and
//! store is atomic. Results are bit-identical across runs only with one worker.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooccur::with_workers;
use crate::corpus::Corpus;
use crate::embed::{norm, EmbeddingTable};
use crate::error::{Error, Result};
use crate::text::{split_sentences, tokenize, Profile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dimension: usize,
    pub window: usize,
    pub epochs: usize,
    pub workers: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub learning_rate: f64,
    pub seed: u64,
    pub min_word_count: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dimension: 300,
            window: 15,
            epochs: 100,
            workers: 8,
            x_max: 100.0,
            alpha: 0.75,
            learning_rate: 0.05,
            seed: 1,
            min_word_count: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Training(m.to_string()));
        if self.dimension == 0 {
            return bad("dimension must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(self.x_max > 0.0) {
            return bad("x_max must be > 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be a positive number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub word: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoocMatrix {
    /// Ordered by descending count, then word.
    pub vocabulary: Vec<VocabEntry>,
    /// `(i, j, weight)` sorted by `(i, j)`; symmetric, all weights positive.
    pub entries: Vec<(u32, u32, f64)>,
}

impl CoocMatrix {
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.vocabulary.iter().position(|v| v.word == word)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by(|&(a, b, _)| (a as usize, b as usize).cmp(&(i, j)))
            .map_or(0.0, |k| self.entries[k].2)
    }

    /// Weight between two words; zero when either is missing or they never co-occur.
    pub fn weight(&self, a: &str, b: &str) -> f64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

const SENTENCES_PER_CHUNK: usize = 512;

pub fn build_cooc(corpus: &Corpus, config: &TrainConfig) -> Result<CoocMatrix> {
    config.validate()?;
    let sentences: Vec<Vec<String>> = with_workers(config.workers, || {
        corpus
            .reviews()
            .par_iter()
            .flat_map_iter(|r| {
                split_sentences(&r.text)
                    .into_iter()
                    .map(|s| tokenize(&s, Profile::Training))
                    .filter(|t| !t.is_empty())
                    .collect::<Vec<_>>()
            })
            .collect()
    });

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in &sentences {
        for t in s {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut vocabulary: Vec<VocabEntry> = counts
        .into_iter()
        .filter(|&(_, c)| c >= config.min_word_count)
        .map(|(w, c)| VocabEntry {
            word: w.to_string(),
            count: c,
        })
        .collect();
    vocabulary.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    if vocabulary.is_empty() {
        return Err(Error::Training(
            "corpus is empty after tokenization and min_word_count".into(),
        ));
    }
    let index: HashMap<&str, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, v)| (v.word.as_str(), i as u32))
        .collect();

    let window = config.window;
    let chunk_maps: Vec<HashMap<(u32, u32), f64>> = with_workers(config.workers, || {
        sentences
            .par_chunks(SENTENCES_PER_CHUNK)
            .map(|chunk| {
                let mut m: HashMap<(u32, u32), f64> = HashMap::new();
                for s in chunk {
                    let ids: Vec<u32> = s
                        .iter()
                        .filter_map(|t| index.get(t.as_str()).copied())
                        .collect();
                    for (p, &i) in ids.iter().enumerate() {
                        for (d, &j) in ids[p + 1..].iter().take(window).enumerate() {
                            let w = 1.0 / (d + 1) as f64;
                            *m.entry((i, j)).or_default() += w;
                            *m.entry((j, i)).or_default() += w;
                        }
                    }
                }
                m
            })
            .collect()
    });
    // chunks are merged in corpus order, so sums do not depend on the worker count
    let mut merged: HashMap<(u32, u32), f64> = HashMap::new();
    for m in chunk_maps {
        for (k, v) in m {
            *merged.entry(k).or_default() += v;
        }
    }
    let mut entries: Vec<(u32, u32, f64)> =
        merged.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    entries.sort_by_key(|&(i, j, _)| (i, j));
    Ok(CoocMatrix {
        vocabulary,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub table: EmbeddingTable,
    pub log: Vec<EpochLoss>,
}

/// Shared f64 parameters stored as bit patterns.
struct Params(Vec<AtomicU64>);

impl Params {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        Params(values.map(|v| AtomicU64::new(v.to_bits())).collect())
    }

    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f64) {
        self.0[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

struct Model {
    dim: usize,
    /// Word vectors, then context vectors: `2 * vocab * dim`.
    vectors: Params,
    /// Word biases, then context biases: `2 * vocab`.
    biases: Params,
    grad_vectors: Params,
    grad_biases: Params,
    vocab: usize,
}

impl Model {
    fn init(vocab: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 0.5 / dim as f64;
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-scale..=scale)).collect() };
        let vectors = draw(2 * vocab * dim);
        let biases = draw(2 * vocab);
        Model {
            dim,
            vectors: Params::new(vectors.into_iter()),
            biases: Params::new(biases.into_iter()),
            grad_vectors: Params::new(std::iter::repeat_n(1.0, 2 * vocab * dim)),
            grad_biases: Params::new(std::iter::repeat_n(1.0, 2 * vocab)),
            vocab,
        }
    }

    /// One AdaGrad step on a single entry; returns `f(x) * diff^2`.
    fn step(&self, i: usize, j: usize, x: f64, cfg: &TrainConfig) -> f64 {
        let d = self.dim;
        let wi = i * d;
        let cj = (self.vocab + j) * d;
        let bi = i;
        let bj = self.vocab + j;
        let mut diff = self.biases.get(bi) + self.biases.get(bj) - x.ln();
        for k in 0..d {
            diff += self.vectors.get(wi + k) * self.vectors.get(cj + k);
        }
        let weight = if x < cfg.x_max {
            (x / cfg.x_max).powf(cfg.alpha)
        } else {
            1.0
        };
        let loss = weight * diff * diff;
        let g = cfg.learning_rate * weight * diff;
        for k in 0..d {
            let w = self.vectors.get(wi + k);
            let c = self.vectors.get(cj + k);
            let gw = g * c;
            let gc = g * w;
            let sw = self.grad_vectors.get(wi + k);
            let sc = self.grad_vectors.get(cj + k);
            self.vectors.set(wi + k, w - gw / sw.sqrt());
            self.vectors.set(cj + k, c - gc / sc.sqrt());
            self.grad_vectors.set(wi + k, sw + gw * gw);
            self.grad_vectors.set(cj + k, sc + gc * gc);
        }
        for b in [bi, bj] {
            let s = self.grad_biases.get(b);
            self.biases.set(b, self.biases.get(b) - g / s.sqrt());
            self.grad_biases.set(b, s + g * g);
        }
        loss
    }

    fn exported(&self, i: usize) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|k| self.vectors.get(i * d + k) + self.vectors.get((self.vocab + i) * d + k))
            .collect()
    }
}

pub fn train(cooc: &CoocMatrix, config: &TrainConfig) -> Result<TrainOutput> {
    train_labeled(cooc, config, "corpus")
}

pub fn train_labeled(cooc: &CoocMatrix, config: &TrainConfig, label: &str) -> Result<TrainOutput> {
    config.validate()?;
    if cooc.entries.is_empty() || cooc.vocabulary.is_empty() {
        return Err(Error::Training("co-occurrence matrix is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = Model::init(cooc.vocabulary.len(), config.dimension, &mut rng);
    let mut order: Vec<usize> = (0..cooc.entries.len()).collect();
    let workers = config.workers.max(1);
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let shard_len = order.len().div_ceil(workers);
        let shards: Vec<&[usize]> = order.chunks(shard_len).collect();
        let run_shard = |shard: &[usize]| -> f64 {
            shard
                .iter()
                .map(|&k| {
                    let (i, j, x) = cooc.entries[k];
                    model.step(i as usize, j as usize, x, config)
                })
                .sum()
        };
        let total: f64 = if shards.len() == 1 {
            run_shard(shards[0])
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = shards.iter().map(|sh| s.spawn(|| run_shard(sh))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .sum()
            })
        };
        let mean_loss = total / cooc.entries.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss at epoch {epoch}; the learning rate ({}) is probably too high",
                config.learning_rate
            )));
        }
        log::debug!("epoch {epoch}: mean loss {mean_loss:.6}");
        log.push(EpochLoss { epoch, mean_loss });
    }

    let mut table = EmbeddingTable::new(config.dimension, format!("glove:{label}"))?;
    for (i, v) in cooc.vocabulary.iter().enumerate() {
        let vec = model.exported(i);
        if norm(&vec) == 0.0 {
            return Err(Error::Training(format!(
                "{:?} trained to a zero vector",
                v.word
            )));
        }
        table.insert(v.word.clone(), vec)?;
    }
    Ok(TrainOutput { table, log })
}

/// Training log as `epoch,mean_loss` CSV.
pub fn log_csv(log: &[EpochLoss]) -> String {
    let mut s = String::from("epoch,mean_loss\n");
    for e in log {
        s.push_str(&format!("{},{}\n", e.epoch, e.mean_loss));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Review;
    use proptest::prelude::*;

    fn corpus(texts: &[&str]) -> Corpus {
        let reviews = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Review::new(format!("r{i}"), *t))
            .collect();
        Corpus::new(reviews, "test").unwrap()
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            dimension: 10,
            epochs: 100,
            workers: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn adjacent_and_distance_two_weights() {
        let m = build_cooc(&corpus(&["a b"]), &cfg()).unwrap();
        assert_eq!(m.weight("a", "b"), 1.0);
        assert_eq!(m.weight("b", "a"), 1.0);
        let m = build_cooc(&corpus(&["a b c"]), &cfg()).unwrap();
        assert_eq!(m.weight("a", "c"), 0.5);
        assert_eq!(m.weight("a", "b"), 1.0);
    }

    #[test]
    fn sentence_boundary_blocks_pairs() {
        let m = build_cooc(&corpus(&["a. b"]), &cfg()).unwrap();
        assert_eq!(m.weight("a", "b"), 0.0);
    }

    #[test]
    fn window_limits_distance() {
        let c = TrainConfig { window: 2, ..cfg() };
        let m = build_cooc(&corpus(&["a b c d"]), &c).unwrap();
        assert_eq!(m.weight("a", "c"), 0.5);
        assert_eq!(m.weight("a", "d"), 0.0);
    }

    #[test]
    fn stopwords_are_dropped_before_windowing() {
        // "und" is a stop-word, so a and b become adjacent
        let m = build_cooc(&corpus(&["a und b"]), &cfg()).unwrap();
        assert_eq!(m.weight("a", "b"), 1.0);
        assert!(m.index_of("und").is_none());
    }

    #[test]
    fn min_count_removes_rare_words_entirely() {
        let c = TrainConfig {
            min_word_count: 2,
            ..cfg()
        };
        let m = build_cooc(&corpus(&["a b x", "a b"]), &c).unwrap();
        assert!(m.index_of("x").is_none());
        assert_eq!(m.vocabulary.len(), 2);
        assert!(m
            .entries
            .iter()
            .all(|&(i, j, _)| (i as usize) < 2 && (j as usize) < 2));
    }

    #[test]
    fn empty_inputs_error() {
        assert!(build_cooc(&corpus(&["und die der"]), &cfg()).is_err());
        let empty = CoocMatrix {
            vocabulary: vec![],
            entries: vec![],
        };
        assert!(train(&empty, &cfg()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig {
            alpha: 0.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            alpha: 1.5,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            x_max: 0.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(TrainConfig { epochs: 0, ..cfg() }.validate().is_err());
        assert!(TrainConfig {
            dimension: 0,
            ..cfg()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let m = build_cooc(&corpus(&["alpha beta gamma delta epsilon"; 3]), &cfg()).unwrap();
        let c = TrainConfig {
            learning_rate: 1e200,
            ..cfg()
        };
        let err = train(&m, &c).unwrap_err().to_string();
        assert!(err.contains("non-finite"), "{err}");
    }

    #[test]
    fn init_range_and_export() {
        let m = build_cooc(&corpus(&["a b c"]), &cfg()).unwrap();
        let c = TrainConfig { epochs: 1, ..cfg() };
        let out = train(&m, &c).unwrap();
        assert_eq!(out.table.len(), 3);
        assert_eq!(out.table.dimension(), 10);
        assert_eq!(out.log.len(), 1);
        assert_eq!(out.table.source, "glove:corpus");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn matrix_is_symmetric_and_positive(
            texts in proptest::collection::vec("[a-c]{1,2}( [a-c]{1,2}){0,12}[.!]?( [a-c]{1,3}){0,5}", 1..8),
            window in 1usize..6,
            workers in 1usize..4,
        ) {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let c = TrainConfig { window, workers, ..cfg() };
            let m = build_cooc(&corpus(&refs), &c).unwrap();
            let single = build_cooc(&corpus(&refs), &TrainConfig { workers: 1, ..c.clone() }).unwrap();
            prop_assert_eq!(&m, &single);
            for &(i, j, w) in &m.entries {
                prop_assert!(w > 0.0);
                prop_assert!((i as usize) < m.vocabulary.len() && (j as usize) < m.vocabulary.len());
                prop_assert_eq!(m.get(j as usize, i as usize), w);
            }
        }
    }
}
