//! Rendering of reports to JSON, CSV and Markdown, and run manifests.
//!
//! JSON is the lossless form. CSV column orders are fixed:
//!
//! | report | columns |
//! |---|---|
//! | suite | `test_id,axis,name,effect_size,p_value,oov_x,oov_y,oov_a,oov_b,valid,reason` |
//! | delta | `before,after,test_id,axis,effect_before,effect_after,delta,comparable` |
//! | co-occurrence | `test_id,axis,hits,sentences` |
//! | subset matrix | `subset,band,reviews,` then one column per test id in axis order |
//! | band counts | `axis,high,low,unrated,total` |
//!
//! Numbers in CSV and Markdown are rounded to 10 decimals with trailing zeros
//! trimmed.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cooccur::{CooccurrenceReport, SubsetMatrix};
use crate::corpus::BandCounts;
use crate::error::{Error, Result};
use crate::weat::{DeltaReport, SuiteReport};
use crate::wordlists::{Axis, AXIS_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl Format {
    /// `.csv` and `.md` select CSV and Markdown; anything else is JSON.
    pub fn from_path(path: &Path) -> Format {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => Format::Csv,
            Some("md") | Some("markdown") => Format::Markdown,
            _ => Format::Json,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(format!(
                "unknown format {other:?} (expected json|csv|markdown)"
            )),
        }
    }
}

pub trait Render: Serialize {
    fn to_csv(&self) -> Result<String>;
    fn to_markdown(&self) -> String;

    fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn render<R: Render + ?Sized>(report: &R, format: Format) -> Result<String> {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
        Format::Markdown => Ok(report.to_markdown()),
    }
}

/// Renders in the format implied by the file extension and writes the file.
pub fn write_report<R: Render + ?Sized>(path: impl AsRef<Path>, report: &R) -> Result<()> {
    let path = path.as_ref();
    let body = render(report, Format::from_path(path))?;
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Test ids in axis-grouped order (1, 2, 9, 3, 4, 5, 6, 7, 8), then the rest ascending.
pub fn display_order(ids: impl IntoIterator<Item = u8>) -> Vec<u8> {
    let mut ids: Vec<u8> = ids.into_iter().collect();
    ids.sort_by_key(|id| {
        AXIS_ORDER
            .iter()
            .position(|x| x == id)
            .map_or((1, *id as usize), |p| (0, p))
    });
    ids.dedup();
    ids
}

fn csv_string(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    rows(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

impl Render for SuiteReport {
    fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record([
                "test_id",
                "axis",
                "name",
                "effect_size",
                "p_value",
                "oov_x",
                "oov_y",
                "oov_a",
                "oov_b",
                "valid",
                "reason",
            ])?;
            for r in self.ordered_results() {
                let oov = r.oov.counts();
                w.write_record([
                    r.test_id.to_string(),
                    r.axis.to_string(),
                    r.name.clone(),
                    opt_num(r.effect_size),
                    opt_num(r.p_value),
                    oov[0].to_string(),
                    oov[1].to_string(),
                    oov[2].to_string(),
                    oov[3].to_string(),
                    r.valid.to_string(),
                    r.reason.clone().unwrap_or_default(),
                ])?;
            }
            Ok(())
        })
    }

    fn to_markdown(&self) -> String {
        let mut s = format!("# WEAT results: {}\n", self.source);
        for axis in Axis::ALL {
            s.push_str(&format!("\n## {axis}\n\n"));
            s.push_str("| # | Test | Effect size | p | OOV (X/Y/A/B) | Status |\n");
            s.push_str("|---|---|---|---|---|---|\n");
            for r in self
                .ordered_results()
                .into_iter()
                .filter(|r| r.axis == axis)
            {
                let oov = r.oov.counts();
                s.push_str(&format!(
                    "| {} | {} | {} | {} | {}/{}/{}/{} | {} |\n",
                    r.test_id,
                    r.name,
                    r.effect_size.map(fmt_num).unwrap_or_else(|| "-".into()),
                    r.p_value.map(fmt_num).unwrap_or_else(|| "-".into()),
                    oov[0],
                    oov[1],
                    oov[2],
                    oov[3],
                    if r.valid {
                        "valid".to_string()
                    } else {
                        r.reason.clone().unwrap_or_else(|| "invalid".into())
                    },
                ));
            }
            if let Some(agg) = self.axis_aggregates.iter().find(|a| a.axis == axis) {
                s.push_str(&format!(
                    "\nMean effect size: {} (mean |d|: {}, {} valid tests)\n",
                    agg.mean_effect.map(fmt_num).unwrap_or_else(|| "-".into()),
                    agg.mean_abs_effect
                        .map(fmt_num)
                        .unwrap_or_else(|| "-".into()),
                    agg.valid_tests
                ));
            }
        }
        s
    }
}

/// One or more before/after comparisons rendered as a single table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeltaTable(pub Vec<DeltaReport>);

impl Render for DeltaTable {
    fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record([
                "before",
                "after",
                "test_id",
                "axis",
                "effect_before",
                "effect_after",
                "delta",
                "comparable",
            ])?;
            for report in &self.0 {
                let ids = display_order(report.rows.iter().map(|r| r.test_id));
                for id in ids {
                    let r = report.row(id).expect("id from rows");
                    w.write_record([
                        report.before.clone(),
                        report.after.clone(),
                        r.test_id.to_string(),
                        r.axis.to_string(),
                        opt_num(r.effect_before),
                        opt_num(r.effect_after),
                        opt_num(r.delta),
                        r.comparable.to_string(),
                    ])?;
                }
            }
            Ok(())
        })
    }

    fn to_markdown(&self) -> String {
        let mut s = String::from("# Effect size deltas (after - before)\n");
        for report in &self.0 {
            s.push_str(&format!("\n## {} -> {}\n", report.before, report.after));
            for axis in Axis::ALL {
                s.push_str(&format!(
                    "\n### {axis}\n\n| # | Before | After | Delta |\n|---|---|---|---|\n"
                ));
                for id in display_order(
                    report
                        .rows
                        .iter()
                        .filter(|r| r.axis == axis)
                        .map(|r| r.test_id),
                ) {
                    let r = report.row(id).expect("id from rows");
                    let show = |x: Option<f64>| x.map(fmt_num).unwrap_or_else(|| "-".into());
                    s.push_str(&format!(
                        "| {} | {} | {} | {} |\n",
                        r.test_id,
                        show(r.effect_before),
                        show(r.effect_after),
                        if r.comparable {
                            show(r.delta)
                        } else {
                            "incomparable".into()
                        }
                    ));
                }
            }
        }
        s
    }
}

impl Render for DeltaReport {
    fn to_csv(&self) -> Result<String> {
        DeltaTable(vec![self.clone()]).to_csv()
    }

    fn to_markdown(&self) -> String {
        DeltaTable(vec![self.clone()]).to_markdown()
    }
}

impl Render for CooccurrenceReport {
    fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record(["test_id", "axis", "hits", "sentences"])?;
            for id in display_order(self.counts.iter().map(|c| c.test_id)) {
                let c = self
                    .counts
                    .iter()
                    .find(|c| c.test_id == id)
                    .expect("id from counts");
                w.write_record([
                    id.to_string(),
                    Axis::for_test_id(id)
                        .map(|a| a.to_string())
                        .unwrap_or_default(),
                    c.hits.to_string(),
                    c.sentences.to_string(),
                ])?;
            }
            Ok(())
        })
    }

    fn to_markdown(&self) -> String {
        let mut s = format!(
            "# Co-occurrence scan: {}\n\n{} reviews, {} sentences, {} hits\n",
            self.provenance.label(),
            self.reviews,
            self.sentences,
            self.total
        );
        for axis in Axis::ALL {
            s.push_str(&format!(
                "\n## {axis}\n\n| # | Hits | Sentences |\n|---|---|---|\n"
            ));
            for c in self
                .counts
                .iter()
                .filter(|c| Axis::for_test_id(c.test_id) == Some(axis))
            {
                s.push_str(&format!(
                    "| {} | {} | {} |\n",
                    c.test_id, c.hits, c.sentences
                ));
            }
        }
        if !self.hits.is_empty() {
            s.push_str("\n## Hits\n\n| Review | Sentence | Test | Target | Attribute |\n|---|---|---|---|---|\n");
            for h in &self.hits {
                s.push_str(&format!(
                    "| {} | {} | {} | {} ({:?}) | {} ({:?}) |\n",
                    h.review_id,
                    h.sentence_index,
                    h.test_id,
                    h.target_word,
                    h.target_list,
                    h.attribute_word,
                    h.attribute_list
                ));
            }
        }
        s
    }
}

impl Render for SubsetMatrix {
    fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            let mut header = vec!["subset".to_string(), "band".into(), "reviews".into()];
            header.extend(self.test_ids.iter().map(u8::to_string));
            w.write_record(&header)?;
            for row in &self.rows {
                let mut rec = vec![
                    row.subset.clone(),
                    row.band
                        .map(|b| b.to_string())
                        .unwrap_or_else(|| "all".into()),
                    row.reviews.to_string(),
                ];
                rec.extend(
                    self.test_ids
                        .iter()
                        .map(|id| row.counts.get(id).copied().unwrap_or(0).to_string()),
                );
                w.write_record(&rec)?;
            }
            Ok(())
        })
    }

    fn to_markdown(&self) -> String {
        let mut s =
            String::from("# Co-occurrence counts by rating subset\n\n| Subset | Band | Reviews |");
        for id in &self.test_ids {
            s.push_str(&format!(" {id} |"));
        }
        s.push_str("\n|---|---|---|");
        s.push_str(&"---|".repeat(self.test_ids.len()));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&format!(
                "| {} | {} | {} |",
                row.subset,
                row.band
                    .map(|b| b.to_string())
                    .unwrap_or_else(|| "all".into()),
                row.reviews
            ));
            for id in &self.test_ids {
                match row.counts.get(id).copied().unwrap_or(0) {
                    0 => s.push_str("  |"),
                    n => s.push_str(&format!(" {n} |")),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Band sizes for several rating axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandTable(pub Vec<BandCounts>);

impl Render for BandTable {
    fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record(["axis", "high", "low", "unrated", "total"])?;
            for c in &self.0 {
                w.write_record([
                    c.axis.to_string(),
                    c.high.to_string(),
                    c.low.to_string(),
                    c.unrated.to_string(),
                    c.total().to_string(),
                ])?;
            }
            Ok(())
        })
    }

    fn to_markdown(&self) -> String {
        let mut s =
            String::from("| Subset | High (>= 6) | Low (< 6) | Unrated |\n|---|---|---|---|\n");
        for c in &self.0 {
            s.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                c.axis, c.high, c.low, c.unrated
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileChecksum {
    pub fn of(path: impl AsRef<Path>) -> Result<FileChecksum> {
        let path = path.as_ref();
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 64 * 1024];
        let mut bytes = 0u64;
        loop {
            let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
            if n == 0 {
                break;
            }
            bytes += n as u64;
            hasher.update(&buf[..n]);
        }
        Ok(FileChecksum {
            path: path.display().to_string(),
            sha256: hex::encode(hasher.finalize()),
            bytes,
        })
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Everything needed to re-run a command with the same result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Resolved settings after applying flags, config file and defaults.
    pub config: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<FileChecksum>,
    pub outputs: Vec<FileChecksum>,
    /// SHA-256 of the battery document actually used.
    pub battery_sha256: Option<String>,
    pub stopwords_sha256: String,
    pub seed: u64,
    pub toolkit_version: String,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn new(
        command: impl Into<String>,
        argv: Vec<String>,
        seed: u64,
        started_at: String,
    ) -> Self {
        RunManifest {
            command: command.into(),
            argv,
            config: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            battery_sha256: None,
            stopwords_sha256: crate::text::STOPWORDS_DE_SHA256.to_string(),
            seed,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: String::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.config.insert(key.to_string(), v);
    }

    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.inputs.push(FileChecksum::of(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.outputs.push(FileChecksum::of(path)?);
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunManifest> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&raw)?)
    }

    /// Paths of inputs whose current checksum differs from the recorded one.
    pub fn stale_inputs(&self) -> Vec<String> {
        self.inputs
            .iter()
            .filter(|c| {
                FileChecksum::of(&c.path)
                    .map(|now| now.sha256 != c.sha256)
                    .unwrap_or(true)
            })
            .map(|c| c.path.clone())
            .collect()
    }
}
