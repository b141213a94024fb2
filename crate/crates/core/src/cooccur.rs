//! Sentence-level co-occurrence of WEAT target and attribute words in raw text.
//!
//! A sentence with `k` target tokens and `m` attribute tokens of one test
//! yields `k * m` hits. Hits are emitted sorted by review id, sentence index,
//! test id and token positions, so the report does not depend on corpus order
//! or on the number of workers.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Band, Corpus, Provenance, RatingAxis, Review, SubsetSpec};
use crate::error::{Error, Result};
use crate::text::{split_sentences, tokenize, Profile};
use crate::wordlists::{ListRole, WeatTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetSide {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttributeSide {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CooccurrenceHit {
    pub review_id: String,
    pub sentence_index: usize,
    pub test_id: u8,
    /// Token positions within the sentence (matching profile).
    pub target_position: usize,
    pub attribute_position: usize,
    pub target_list: TargetSide,
    pub attribute_list: AttributeSide,
    pub target_word: String,
    pub attribute_word: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCount {
    pub test_id: u8,
    pub hits: usize,
    /// Sentences with at least one hit for this test.
    pub sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceReport {
    pub provenance: Provenance,
    pub profile: Profile,
    pub reviews: usize,
    pub sentences: usize,
    pub total: usize,
    pub counts: Vec<TestCount>,
    pub hits: Vec<CooccurrenceHit>,
}

impl CooccurrenceReport {
    pub fn count(&self, test_id: u8) -> usize {
        self.counts
            .iter()
            .find(|c| c.test_id == test_id)
            .map_or(0, |c| c.hits)
    }

    /// Re-scans every referenced sentence and checks that it reproduces
    /// exactly the hits recorded for it.
    pub fn verify(&self, corpus: &Corpus, battery: &[WeatTest]) -> bool {
        let index = WordIndex::new(battery);
        let by_id: HashMap<&str, &Review> = corpus
            .reviews()
            .iter()
            .map(|r| (r.id.as_str(), r))
            .collect();
        let mut grouped: BTreeMap<(&str, usize), Vec<&CooccurrenceHit>> = BTreeMap::new();
        for h in &self.hits {
            grouped
                .entry((h.review_id.as_str(), h.sentence_index))
                .or_default()
                .push(h);
        }
        grouped.into_iter().all(|((id, s), recorded)| {
            let Some(review) = by_id.get(id) else {
                return false;
            };
            let sentences = split_sentences(&review.text);
            let Some(sentence) = sentences.get(s) else {
                return false;
            };
            let mut again = Vec::new();
            index.scan_sentence(id, s, &tokenize(sentence, self.profile), &mut again);
            again.sort();
            again.iter().eq(recorded)
        })
    }
}

/// Maps each battery word to the (test, list) slots it belongs to.
struct WordIndex<'a> {
    tests: &'a [WeatTest],
    slots: HashMap<&'a str, Vec<(usize, ListRole)>>,
}

impl<'a> WordIndex<'a> {
    fn new(tests: &'a [WeatTest]) -> Self {
        let mut slots: HashMap<&str, Vec<(usize, ListRole)>> = HashMap::new();
        for (ti, t) in tests.iter().enumerate() {
            for role in ListRole::ALL {
                for w in &t.list(role).words {
                    slots.entry(w.as_str()).or_default().push((ti, role));
                }
            }
        }
        WordIndex { tests, slots }
    }

    fn scan_sentence(
        &self,
        review_id: &str,
        sentence_index: usize,
        tokens: &[String],
        out: &mut Vec<CooccurrenceHit>,
    ) {
        // per test: (position, side, word) for targets and attributes
        let mut targets: BTreeMap<usize, Vec<(usize, TargetSide, &str)>> = BTreeMap::new();
        let mut attributes: BTreeMap<usize, Vec<(usize, AttributeSide, &str)>> = BTreeMap::new();
        for (pos, tok) in tokens.iter().enumerate() {
            let Some(slots) = self.slots.get(tok.as_str()) else {
                continue;
            };
            for &(ti, role) in slots {
                match role {
                    ListRole::TargetX => {
                        targets
                            .entry(ti)
                            .or_default()
                            .push((pos, TargetSide::X, tok))
                    }
                    ListRole::TargetY => {
                        targets
                            .entry(ti)
                            .or_default()
                            .push((pos, TargetSide::Y, tok))
                    }
                    ListRole::AttributeA => {
                        attributes
                            .entry(ti)
                            .or_default()
                            .push((pos, AttributeSide::A, tok))
                    }
                    ListRole::AttributeB => {
                        attributes
                            .entry(ti)
                            .or_default()
                            .push((pos, AttributeSide::B, tok))
                    }
                }
            }
        }
        for (ti, ts) in &targets {
            let Some(attrs) = attributes.get(ti) else {
                continue;
            };
            for &(tp, tside, tw) in ts {
                for &(ap, aside, aw) in attrs {
                    if tp == ap {
                        continue;
                    }
                    out.push(CooccurrenceHit {
                        review_id: review_id.to_string(),
                        sentence_index,
                        test_id: self.tests[*ti].id,
                        target_position: tp,
                        attribute_position: ap,
                        target_list: tside,
                        attribute_list: aside,
                        target_word: tw.to_string(),
                        attribute_word: aw.to_string(),
                    });
                }
            }
        }
    }

    fn scan_review(&self, review: &Review, profile: Profile) -> (usize, Vec<CooccurrenceHit>) {
        let sentences = split_sentences(&review.text);
        let mut hits = Vec::new();
        for (i, s) in sentences.iter().enumerate() {
            self.scan_sentence(&review.id, i, &tokenize(s, profile), &mut hits);
        }
        (sentences.len(), hits)
    }
}

/// Runs `f` on a pool of `workers` threads; `workers <= 1` runs inline.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers <= 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn scan(corpus: &Corpus, battery: &[WeatTest], workers: usize) -> CooccurrenceReport {
    scan_with_profile(corpus, battery, workers, Profile::Matching)
}

pub fn scan_with_profile(
    corpus: &Corpus,
    battery: &[WeatTest],
    workers: usize,
    profile: Profile,
) -> CooccurrenceReport {
    let index = WordIndex::new(battery);
    let per_review: Vec<(usize, Vec<CooccurrenceHit>)> = if workers <= 1 {
        corpus
            .reviews()
            .iter()
            .map(|r| index.scan_review(r, profile))
            .collect()
    } else {
        with_workers(workers, || {
            corpus
                .reviews()
                .par_iter()
                .map(|r| index.scan_review(r, profile))
                .collect()
        })
    };
    let sentences = per_review.iter().map(|(n, _)| n).sum();
    let mut hits: Vec<CooccurrenceHit> = per_review.into_iter().flat_map(|(_, h)| h).collect();
    hits.sort();

    let counts = battery
        .iter()
        .map(|t| {
            let mine: Vec<&CooccurrenceHit> = hits.iter().filter(|h| h.test_id == t.id).collect();
            let mut sentence_keys: Vec<(&str, usize)> = mine
                .iter()
                .map(|h| (h.review_id.as_str(), h.sentence_index))
                .collect();
            sentence_keys.dedup();
            TestCount {
                test_id: t.id,
                hits: mine.len(),
                sentences: sentence_keys.len(),
            }
        })
        .collect();

    CooccurrenceReport {
        provenance: corpus.provenance.clone(),
        profile,
        reviews: corpus.len(),
        sentences,
        total: hits.len(),
        counts,
        hits,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    /// `overall` or a rating axis name.
    pub subset: String,
    pub band: Option<Band>,
    pub reviews: usize,
    pub counts: BTreeMap<u8, usize>,
}

/// Co-occurrence counts per (rating axis, band, test).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetMatrix {
    pub test_ids: Vec<u8>,
    pub rows: Vec<MatrixRow>,
}

impl SubsetMatrix {
    pub fn cell(&self, axis: RatingAxis, band: Band, test_id: u8) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.subset == axis.as_str() && r.band == Some(band))
            .and_then(|r| r.counts.get(&test_id).copied())
    }

    pub fn overall(&self, test_id: u8) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.band.is_none())
            .and_then(|r| r.counts.get(&test_id).copied())
    }
}

fn matrix_row(subset: String, band: Option<Band>, report: &CooccurrenceReport) -> MatrixRow {
    MatrixRow {
        subset,
        band,
        reviews: report.reviews,
        counts: report.counts.iter().map(|c| (c.test_id, c.hits)).collect(),
    }
}

pub fn subset_matrix(
    corpus: &Corpus,
    battery: &[WeatTest],
    axes: &[RatingAxis],
    workers: usize,
) -> Result<SubsetMatrix> {
    if battery.is_empty() {
        return Err(Error::Corpus("empty battery".into()));
    }
    let overall = scan(corpus, battery, workers);
    let mut rows = vec![matrix_row("overall".into(), None, &overall)];
    for &axis in axes {
        for band in Band::ALL {
            let subset = corpus.filter_subset(SubsetSpec { axis, band })?;
            let report = scan(&subset, battery, workers);
            rows.push(matrix_row(axis.to_string(), Some(band), &report));
        }
    }
    Ok(SubsetMatrix {
        test_ids: crate::report::display_order(battery.iter().map(|t| t.id)),
        rows,
    })
}
