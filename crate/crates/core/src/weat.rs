//! Word Embedding Association Test: association scores, effect size,
//! permutation significance, nine-test suites and before/after deltas.
//!
//! For a target word `w` and attribute lists `A`, `B`:
//!
//! ```text
//! s(w, A, B) = mean_{a in A} cos(w, a) - mean_{b in B} cos(w, b)
//! d = (mean_{x in X} s(x, A, B) - mean_{y in Y} s(y, A, B)) / std_{w in X ∪ Y} s(w, A, B)
//! ```
//!
//! `std` is the sample standard deviation (divisor n - 1). Effect sizes are
//! reported on the natural scale of the formula, bounded by 2 in magnitude
//! when the two target lists have equal size.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{dot, norm, EmbeddingTable, LookupPolicy};
use crate::error::{Error, Result};
use crate::wordlists::{Axis, ListRole, WeatTest, AXIS_ORDER};

/// Largest `|X| + |Y|` for which exact enumeration is allowed.
pub const EXACT_MAX_WORDS: usize = 16;

/// Associations whose sample std falls at or below this are degenerate.
const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum PValueMode {
    None,
    /// Enumerate every equal-size partition; only for `|X| + |Y| <= 16`.
    Exact,
    /// Draw `draws` random partitions; the observed partition is always counted.
    Sampled {
        draws: usize,
        seed: u64,
    },
    /// Exact when small enough, sampled otherwise.
    Auto {
        draws: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatOptions {
    pub lookup: LookupPolicy,
    pub p_value: PValueMode,
    /// Reject tests whose target lists differ in size after OOV removal.
    pub strict_sizes: bool,
}

impl Default for WeatOptions {
    fn default() -> Self {
        WeatOptions {
            lookup: LookupPolicy::Casefold,
            p_value: PValueMode::None,
            strict_sizes: false,
        }
    }
}

/// Why an association could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unscorable {
    OutOfVocabulary,
    EmptyAttributes,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OovWords {
    #[serde(default)]
    pub targets_x: Vec<String>,
    #[serde(default)]
    pub targets_y: Vec<String>,
    #[serde(default)]
    pub attributes_a: Vec<String>,
    #[serde(default)]
    pub attributes_b: Vec<String>,
}

impl OovWords {
    fn list_mut(&mut self, role: ListRole) -> &mut Vec<String> {
        match role {
            ListRole::TargetX => &mut self.targets_x,
            ListRole::TargetY => &mut self.targets_y,
            ListRole::AttributeA => &mut self.attributes_a,
            ListRole::AttributeB => &mut self.attributes_b,
        }
    }

    pub fn counts(&self) -> [usize; 4] {
        [
            self.targets_x.len(),
            self.targets_y.len(),
            self.attributes_a.len(),
            self.attributes_b.len(),
        ]
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatResult {
    pub test_id: u8,
    pub axis: Axis,
    #[serde(default)]
    pub name: String,
    pub effect_size: Option<f64>,
    #[serde(default)]
    pub p_value: Option<f64>,
    #[serde(default)]
    pub oov: OovWords,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub source: String,
}

impl WeatResult {
    fn invalid(test: &WeatTest, source: &str, oov: OovWords, reason: impl Into<String>) -> Self {
        WeatResult {
            test_id: test.id,
            axis: test.axis,
            name: test.name.clone(),
            effect_size: None,
            p_value: None,
            oov,
            valid: false,
            reason: Some(reason.into()),
            warnings: Vec::new(),
            source: source.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisAggregate {
    pub axis: Axis,
    pub valid_tests: usize,
    pub mean_effect: Option<f64>,
    pub mean_abs_effect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub source: String,
    pub results: Vec<WeatResult>,
    #[serde(default)]
    pub axis_aggregates: Vec<AxisAggregate>,
}

impl SuiteReport {
    /// Builds a report and computes its axis aggregates.
    pub fn from_results(source: impl Into<String>, results: Vec<WeatResult>) -> Self {
        let axis_aggregates = aggregate_axes(&results);
        SuiteReport {
            source: source.into(),
            results,
            axis_aggregates,
        }
    }

    pub fn result(&self, test_id: u8) -> Option<&WeatResult> {
        self.results.iter().find(|r| r.test_id == test_id)
    }

    pub fn valid_count(&self) -> usize {
        self.results.iter().filter(|r| r.valid).count()
    }

    /// Results in axis-grouped display order, then any ids outside 1..=9.
    pub fn ordered_results(&self) -> Vec<&WeatResult> {
        let mut out: Vec<&WeatResult> = AXIS_ORDER
            .iter()
            .filter_map(|&id| self.result(id))
            .collect();
        out.extend(
            self.results
                .iter()
                .filter(|r| !AXIS_ORDER.contains(&r.test_id)),
        );
        out
    }
}

pub fn aggregate_axes(results: &[WeatResult]) -> Vec<AxisAggregate> {
    Axis::ALL
        .into_iter()
        .map(|axis| {
            let ds: Vec<f64> = results
                .iter()
                .filter(|r| r.axis == axis && r.valid)
                .filter_map(|r| r.effect_size)
                .collect();
            let n = ds.len();
            AxisAggregate {
                axis,
                valid_tests: n,
                mean_effect: (n > 0).then(|| ds.iter().sum::<f64>() / n as f64),
                mean_abs_effect: (n > 0)
                    .then(|| ds.iter().map(|d| d.abs()).sum::<f64>() / n as f64),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub test_id: u8,
    pub axis: Axis,
    pub effect_before: Option<f64>,
    pub effect_after: Option<f64>,
    pub delta: Option<f64>,
    pub comparable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub before: String,
    pub after: String,
    pub rows: Vec<DeltaRow>,
}

impl DeltaReport {
    pub fn row(&self, test_id: u8) -> Option<&DeltaRow> {
        self.rows.iter().find(|r| r.test_id == test_id)
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// `s(w, A, B)` over unit vectors.
fn association_unit(w: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let ma = a.iter().map(|x| dot(w, x)).sum::<f64>() / a.len() as f64;
    let mb = b.iter().map(|x| dot(w, x)).sum::<f64>() / b.len() as f64;
    ma - mb
}

/// Association of one word with two attribute lists. Out-of-vocabulary
/// attribute words are skipped.
pub fn association(
    word: &str,
    a: &[String],
    b: &[String],
    table: &EmbeddingTable,
    policy: LookupPolicy,
) -> std::result::Result<f64, Unscorable> {
    let w = table
        .lookup(word, policy)
        .ok_or(Unscorable::OutOfVocabulary)?;
    let found = |list: &[String]| -> Vec<Vec<f64>> {
        list.iter()
            .filter_map(|x| table.lookup(x, policy))
            .map(unit)
            .collect()
    };
    let (va, vb) = (found(a), found(b));
    if va.is_empty() || vb.is_empty() {
        return Err(Unscorable::EmptyAttributes);
    }
    Ok(association_unit(&unit(w), &va, &vb))
}

/// Effect size from precomputed associations. `None` when the pooled
/// associations have (numerically) zero spread or a side is empty.
pub fn effect_size_from_associations(sx: &[f64], sy: &[f64]) -> Option<f64> {
    if sx.is_empty() || sy.is_empty() || sx.len() + sy.len() < 2 {
        return None;
    }
    let pooled: Vec<f64> = sx.iter().chain(sy).copied().collect();
    let std = sample_std(&pooled);
    if !(std > DEGENERATE_STD) {
        return None;
    }
    Some((mean(sx) - mean(sy)) / std)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn partition_stat(pooled: &[f64], mask: u32, nx: usize, total: f64) -> f64 {
    let mut sum_x = 0.0;
    for (i, v) in pooled.iter().enumerate() {
        if mask & (1 << i) != 0 {
            sum_x += v;
        }
    }
    sum_x / nx as f64 - (total - sum_x) / (pooled.len() - nx) as f64
}

/// One-sided permutation p-value of the mean-difference statistic: the share
/// of equal-size re-partitions of `X ∪ Y` whose statistic is at least the
/// observed one. Ties count.
pub fn permutation_pvalue_from_associations(
    sx: &[f64],
    sy: &[f64],
    mode: PValueMode,
) -> Result<f64> {
    let (nx, ny) = (sx.len(), sy.len());
    if nx == 0 || ny == 0 {
        return Err(Error::Weat(
            "permutation test needs two non-empty target lists".into(),
        ));
    }
    let n = nx + ny;
    let mode = match mode {
        PValueMode::Auto { draws, seed } if n > EXACT_MAX_WORDS => {
            PValueMode::Sampled { draws, seed }
        }
        PValueMode::Auto { .. } => PValueMode::Exact,
        m => m,
    };
    let pooled: Vec<f64> = sx.iter().chain(sy).copied().collect();
    let total: f64 = pooled.iter().sum();
    let scale: f64 = pooled.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    let tol = 1e-12 * scale;

    match mode {
        PValueMode::None => Err(Error::Weat("no p-value mode selected".into())),
        PValueMode::Exact => {
            if n > EXACT_MAX_WORDS {
                return Err(Error::Weat(format!(
                    "exact permutation test enumerates C({n}, {nx}) partitions; \
                     only |X|+|Y| <= {EXACT_MAX_WORDS} is allowed, use sampled mode"
                )));
            }
            let identity: u32 = (1u32 << nx) - 1;
            let observed = partition_stat(&pooled, identity, nx, total);
            let mut hits: u128 = 0;
            let mut count: u128 = 0;
            // Gosper's hack: every n-bit mask with exactly nx bits set
            let mut mask = identity;
            let limit = 1u32 << n;
            while mask < limit {
                count += 1;
                if partition_stat(&pooled, mask, nx, total) >= observed - tol {
                    hits += 1;
                }
                let c = mask & mask.wrapping_neg();
                let r = mask + c;
                mask = (((r ^ mask) >> 2) / c) | r;
            }
            debug_assert_eq!(count, binomial(n, nx));
            Ok(hits as f64 / count as f64)
        }
        PValueMode::Sampled { draws, seed } => {
            let observed = mean(sx) - mean(sy);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut hits: usize = 0;
            for _ in 0..draws {
                let idx = rand::seq::index::sample(&mut rng, n, nx);
                let sum_x: f64 = idx.iter().map(|i| pooled[i]).sum();
                let stat = sum_x / nx as f64 - (total - sum_x) / ny as f64;
                if stat >= observed - tol {
                    hits += 1;
                }
            }
            Ok((hits + 1) as f64 / (draws + 1) as f64)
        }
        PValueMode::Auto { .. } => unreachable!("resolved above"),
    }
}

struct Resolved {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    oov: OovWords,
}

fn resolve(test: &WeatTest, table: &EmbeddingTable, policy: LookupPolicy) -> Resolved {
    let mut oov = OovWords::default();
    let mut lists: Vec<Vec<Vec<f64>>> = Vec::with_capacity(4);
    for role in ListRole::ALL {
        let mut found = Vec::new();
        for w in &test.list(role).words {
            match table.lookup(w, policy) {
                Some(v) => found.push(unit(v)),
                None => oov.list_mut(role).push(w.clone()),
            }
        }
        lists.push(found);
    }
    let b = lists.pop().unwrap_or_default();
    let a = lists.pop().unwrap_or_default();
    let y = lists.pop().unwrap_or_default();
    let x = lists.pop().unwrap_or_default();
    Resolved { x, y, a, b, oov }
}

/// Associations of the in-vocabulary target words, or the reason the test
/// cannot be scored.
fn target_associations(
    test: &WeatTest,
    table: &EmbeddingTable,
    options: &WeatOptions,
) -> std::result::Result<(Vec<f64>, Vec<f64>, OovWords, Vec<String>), (OovWords, String)> {
    let r = resolve(test, table, options.lookup);
    let short: Vec<&str> = [
        ("targets_x", r.x.len()),
        ("targets_y", r.y.len()),
        ("attributes_a", r.a.len()),
        ("attributes_b", r.b.len()),
    ]
    .iter()
    .filter(|(_, n)| *n < 2)
    .map(|(name, _)| *name)
    .collect();
    if !short.is_empty() {
        return Err((
            r.oov,
            format!(
                "out of vocabulary: fewer than 2 words left in {}",
                short.join(", ")
            ),
        ));
    }
    let mut warnings = Vec::new();
    if r.x.len() != r.y.len() {
        let msg = format!(
            "unequal target sizes after OOV removal ({} vs {})",
            r.x.len(),
            r.y.len()
        );
        if options.strict_sizes {
            return Err((r.oov, msg));
        }
        warn!("test {}: {msg}", test.id);
        warnings.push(msg);
    }
    let sx =
        r.x.iter()
            .map(|w| association_unit(w, &r.a, &r.b))
            .collect();
    let sy =
        r.y.iter()
            .map(|w| association_unit(w, &r.a, &r.b))
            .collect();
    Ok((sx, sy, r.oov, warnings))
}

pub fn effect_size(test: &WeatTest, table: &EmbeddingTable, options: &WeatOptions) -> WeatResult {
    let (sx, sy, oov, mut warnings) = match target_associations(test, table, options) {
        Ok(parts) => parts,
        Err((oov, reason)) => return WeatResult::invalid(test, &table.source, oov, reason),
    };
    let Some(d) = effect_size_from_associations(&sx, &sy) else {
        return WeatResult::invalid(test, &table.source, oov, "degenerate associations");
    };
    let p_value = match options.p_value {
        PValueMode::None => None,
        mode => match permutation_pvalue_from_associations(&sx, &sy, mode) {
            Ok(p) => Some(p),
            Err(e) => {
                warnings.push(e.to_string());
                None
            }
        },
    };
    WeatResult {
        test_id: test.id,
        axis: test.axis,
        name: test.name.clone(),
        effect_size: Some(d),
        p_value,
        oov,
        valid: true,
        reason: None,
        warnings,
        source: table.source.clone(),
    }
}

pub fn permutation_pvalue(
    test: &WeatTest,
    table: &EmbeddingTable,
    lookup: LookupPolicy,
    mode: PValueMode,
) -> Result<f64> {
    let options = WeatOptions {
        lookup,
        p_value: PValueMode::None,
        strict_sizes: false,
    };
    let (sx, sy, _, _) = target_associations(test, table, &options)
        .map_err(|(_, reason)| Error::Weat(format!("test {}: {reason}", test.id)))?;
    permutation_pvalue_from_associations(&sx, &sy, mode)
}

/// Scores every test of the battery. Sampled p-values use `seed + test id`
/// so each test draws an independent, reproducible stream.
pub fn run_suite(
    battery: &[WeatTest],
    table: &EmbeddingTable,
    options: &WeatOptions,
) -> SuiteReport {
    let results = battery
        .iter()
        .map(|test| {
            let mut opts = *options;
            opts.p_value = match options.p_value {
                PValueMode::Sampled { draws, seed } => PValueMode::Sampled {
                    draws,
                    seed: seed.wrapping_add(u64::from(test.id)),
                },
                PValueMode::Auto { draws, seed } => PValueMode::Auto {
                    draws,
                    seed: seed.wrapping_add(u64::from(test.id)),
                },
                m => m,
            };
            effect_size(test, table, &opts)
        })
        .collect();
    SuiteReport::from_results(table.source.clone(), results)
}

pub fn diff_suites(before: &SuiteReport, after: &SuiteReport) -> Result<DeltaReport> {
    let mut ids_before: Vec<u8> = before.results.iter().map(|r| r.test_id).collect();
    let mut ids_after: Vec<u8> = after.results.iter().map(|r| r.test_id).collect();
    ids_before.sort_unstable();
    ids_after.sort_unstable();
    if ids_before != ids_after {
        return Err(Error::Weat(format!(
            "suites cover different tests: {ids_before:?} vs {ids_after:?}"
        )));
    }
    let rows = before
        .results
        .iter()
        .map(|b| {
            let a = after.result(b.test_id).expect("ids checked");
            let eb = b.effect_size.filter(|_| b.valid);
            let ea = a.effect_size.filter(|_| a.valid);
            let comparable = eb.is_some() && ea.is_some();
            DeltaRow {
                test_id: b.test_id,
                axis: b.axis,
                effect_before: eb,
                effect_after: ea,
                delta: match (eb, ea) {
                    (Some(x), Some(y)) => Some(y - x),
                    _ => None,
                },
                comparable,
            }
        })
        .collect();
    Ok(DeltaReport {
        before: before.source.clone(),
        after: after.source.clone(),
        rows,
    })
}
