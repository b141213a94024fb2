//! Rated peer-review corpus: loading, writing, and the rating/gender subsets.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};

/// Ratings at or above this value fall in the high band.
pub const HIGH_BAND_MIN: u8 = 6;

pub const RATING_MIN: u8 = 1;
pub const RATING_MAX: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingAxis {
    Helpful,
    Quality,
    Critical,
    Constructive,
}

impl RatingAxis {
    pub const ALL: [RatingAxis; 4] = [
        RatingAxis::Helpful,
        RatingAxis::Quality,
        RatingAxis::Critical,
        RatingAxis::Constructive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RatingAxis::Helpful => "helpful",
            RatingAxis::Quality => "quality",
            RatingAxis::Critical => "critical",
            RatingAxis::Constructive => "constructive",
        }
    }
}

impl std::str::FromStr for RatingAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        RatingAxis::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!(
                    "unknown rating axis {s:?} (expected helpful|quality|critical|constructive)"
                )
            })
    }
}

impl std::fmt::Display for RatingAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    High,
    Low,
}

impl Band {
    pub const ALL: [Band; 2] = [Band::High, Band::Low];

    pub fn contains(self, rating: u8) -> bool {
        match self {
            Band::High => rating >= HIGH_BAND_MIN,
            Band::Low => rating < HIGH_BAND_MIN,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::High => "high",
            Band::Low => "low",
        }
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub axis: RatingAxis,
    pub band: Band,
}

impl SubsetSpec {
    /// All eight rating subsets, axis-major.
    pub fn all() -> Vec<SubsetSpec> {
        RatingAxis::ALL
            .into_iter()
            .flat_map(|axis| {
                Band::ALL
                    .into_iter()
                    .map(move |band| SubsetSpec { axis, band })
            })
            .collect()
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.axis, self.band)
    }
}

/// Parses `axis:band`, e.g. `helpful:high`.
impl std::str::FromStr for SubsetSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (axis, band) = s
            .split_once(':')
            .ok_or_else(|| format!("subset {s:?} must look like axis:band"))?;
        let band = match band.to_ascii_lowercase().as_str() {
            "high" => Band::High,
            "low" => Band::Low,
            other => return Err(format!("unknown band {other:?} (expected high|low)")),
        };
        Ok(SubsetSpec {
            axis: axis.parse()?,
            band,
        })
    }
}

impl std::fmt::Display for SubsetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.axis, self.band)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    #[default]
    Unspecified,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unspecified => "unspecified",
        }
    }
}

impl std::str::FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            "" | "unspecified" => Ok(Gender::Unspecified),
            other => Err(format!(
                "unknown gender {other:?} (expected male|female|unspecified)"
            )),
        }
    }
}

impl std::fmt::Display for Gender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpful: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructive: Option<u8>,
}

impl Ratings {
    pub fn get(&self, axis: RatingAxis) -> Option<u8> {
        match axis {
            RatingAxis::Helpful => self.helpful,
            RatingAxis::Quality => self.quality,
            RatingAxis::Critical => self.critical,
            RatingAxis::Constructive => self.constructive,
        }
    }

    pub fn set(&mut self, axis: RatingAxis, value: Option<u8>) {
        let slot = match axis {
            RatingAxis::Helpful => &mut self.helpful,
            RatingAxis::Quality => &mut self.quality,
            RatingAxis::Critical => &mut self.critical,
            RatingAxis::Constructive => &mut self.constructive,
        };
        *slot = value;
    }

    fn is_empty(&self) -> bool {
        RatingAxis::ALL.iter().all(|&a| self.get(a).is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default)]
    pub author_gender: Gender,
    #[serde(default, skip_serializing_if = "Ratings::is_empty")]
    pub ratings: Ratings,
}

impl Review {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Review {
            id: id.into(),
            text: text.into(),
            year: None,
            author_gender: Gender::Unspecified,
            ratings: Ratings::default(),
        }
    }

    pub fn with_rating(mut self, axis: RatingAxis, value: u8) -> Self {
        self.ratings.set(axis, Some(value));
        self
    }

    pub fn with_gender(mut self, gender: Gender) -> Self {
        self.author_gender = gender;
        self
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.text.trim().is_empty() {
            return Err(format!("review {:?}: empty text", self.id));
        }
        for axis in RatingAxis::ALL {
            if let Some(r) = self.ratings.get(axis) {
                if !(RATING_MIN..=RATING_MAX).contains(&r) {
                    return Err(format!(
                        "review {:?}: {axis} rating {r} outside {RATING_MIN}..={RATING_MAX}",
                        self.id
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses from the file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!(
                "unknown corpus format {other:?} (expected jsonl|csv)"
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    /// Filters applied since loading, oldest first.
    pub filters: Vec<String>,
}

impl Provenance {
    pub fn label(&self) -> String {
        if self.filters.is_empty() {
            self.source.clone()
        } else {
            format!("{} [{}]", self.source, self.filters.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    reviews: Vec<Review>,
    pub provenance: Provenance,
}

/// Per-axis band sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandCounts {
    pub axis: RatingAxis,
    pub high: usize,
    pub low: usize,
    pub unrated: usize,
}

impl BandCounts {
    pub fn total(&self) -> usize {
        self.high + self.low + self.unrated
    }
}

impl Corpus {
    pub fn new(reviews: Vec<Review>, source: impl Into<String>) -> Result<Corpus> {
        let mut errors = Vec::new();
        let mut ids = HashSet::new();
        for (i, r) in reviews.iter().enumerate() {
            if let Err(message) = r.check() {
                errors.push(RowError {
                    line: i + 1,
                    message,
                });
            } else if !ids.insert(r.id.as_str()) {
                errors.push(RowError {
                    line: i + 1,
                    message: format!("duplicate review id {:?}", r.id),
                });
            }
        }
        if !errors.is_empty() {
            return Err(Error::CorpusRows(errors));
        }
        Ok(Corpus {
            reviews,
            provenance: Provenance {
                source: source.into(),
                filters: Vec::new(),
            },
        })
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    fn derive(&self, filter: String, keep: impl Fn(&Review) -> bool) -> Corpus {
        let mut provenance = self.provenance.clone();
        provenance.filters.push(filter);
        Corpus {
            reviews: self.reviews.iter().filter(|r| keep(r)).cloned().collect(),
            provenance,
        }
    }

    pub fn filter_subset(&self, spec: SubsetSpec) -> Result<Corpus> {
        if !self
            .reviews
            .iter()
            .any(|r| r.ratings.get(spec.axis).is_some())
        {
            return Err(Error::Corpus(format!(
                "no review carries a {} rating",
                spec.axis
            )));
        }
        Ok(self.derive(format!("subset:{spec}"), |r| {
            r.ratings
                .get(spec.axis)
                .is_some_and(|v| spec.band.contains(v))
        }))
    }

    pub fn filter_gender(&self, gender: Gender) -> Corpus {
        self.derive(format!("gender:{gender}"), |r| r.author_gender == gender)
    }

    pub fn band_counts(&self, axis: RatingAxis) -> BandCounts {
        let mut counts = BandCounts {
            axis,
            high: 0,
            low: 0,
            unrated: 0,
        };
        for r in &self.reviews {
            match r.ratings.get(axis) {
                Some(v) if Band::High.contains(v) => counts.high += 1,
                Some(_) => counts.low += 1,
                None => counts.unrated += 1,
            }
        }
        counts
    }

    /// Axes rated by at least one review.
    pub fn rated_axes(&self) -> Vec<RatingAxis> {
        RatingAxis::ALL
            .into_iter()
            .filter(|&a| self.reviews.iter().any(|r| r.ratings.get(a).is_some()))
            .collect()
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for r in &self.reviews {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
        }
        Ok(())
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.reviews {
            let rating = |a| {
                r.ratings
                    .get(a)
                    .map(|v: u8| v.to_string())
                    .unwrap_or_default()
            };
            out.write_record([
                r.id.clone(),
                r.text.clone(),
                r.year.map(|y| y.to_string()).unwrap_or_default(),
                match r.author_gender {
                    Gender::Unspecified => String::new(),
                    g => g.to_string(),
                },
                rating(RatingAxis::Helpful),
                rating(RatingAxis::Quality),
                rating(RatingAxis::Critical),
                rating(RatingAxis::Constructive),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>, format: CorpusFormat) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let w = std::io::BufWriter::new(file);
        match format {
            CorpusFormat::Jsonl => self.write_jsonl(w),
            CorpusFormat::Csv => self.write_csv(w),
        }
    }
}

const CSV_HEADER: [&str; 8] = [
    "id",
    "text",
    "year",
    "author_gender",
    "helpful",
    "quality",
    "critical",
    "constructive",
];

#[derive(Deserialize)]
struct JsonRow {
    id: serde_json::Value,
    text: String,
    #[serde(default)]
    year: Option<i32>,
    #[serde(default)]
    author_gender: Option<String>,
    #[serde(default)]
    ratings: Option<Ratings>,
}

fn id_string(v: &serde_json::Value) -> std::result::Result<String, String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(format!("id must be a string or number, found {other}")),
    }
}

pub fn parse_jsonl(reader: impl BufRead, source: &str) -> Result<Corpus> {
    let mut reviews = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<JsonRow>(&line)
            .map_err(|e| e.to_string())
            .and_then(|row| {
                let gender = row.author_gender.as_deref().unwrap_or("").parse()?;
                Ok(Review {
                    id: id_string(&row.id)?,
                    text: row.text,
                    year: row.year,
                    author_gender: gender,
                    ratings: row.ratings.unwrap_or_default(),
                })
            });
        match parsed {
            Ok(r) => reviews.push((i + 1, r)),
            Err(message) => errors.push(RowError {
                line: i + 1,
                message,
            }),
        }
    }
    finish(reviews, errors, source)
}

pub fn parse_csv(reader: impl std::io::Read, source: &str) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("id").ok_or_else(|| Error::Corpus("csv header lacks `id`".into()))?;
    let text_col = col("text").ok_or_else(|| Error::Corpus("csv header lacks `text`".into()))?;
    let year_col = col("year");
    let gender_col = col("author_gender");
    let rating_cols: Vec<(RatingAxis, usize)> = RatingAxis::ALL
        .into_iter()
        .filter_map(|a| col(a.as_str()).map(|c| (a, c)))
        .collect();

    let mut reviews = Vec::new();
    let mut errors = Vec::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |c: Option<usize>| c.and_then(|c| record.get(c)).map(str::trim).unwrap_or("");
        let parsed = (|| -> std::result::Result<Review, String> {
            let year = match field(year_col) {
                "" => None,
                y => Some(y.parse::<i32>().map_err(|_| format!("bad year {y:?}"))?),
            };
            let mut ratings = Ratings::default();
            for &(axis, c) in &rating_cols {
                let v = match field(Some(c)) {
                    "" => None,
                    v => Some(
                        v.parse::<u8>()
                            .map_err(|_| format!("bad {axis} rating {v:?}"))?,
                    ),
                };
                ratings.set(axis, v);
            }
            Ok(Review {
                id: field(Some(id_col)).to_string(),
                text: record.get(text_col).unwrap_or("").to_string(),
                year,
                author_gender: field(gender_col).parse()?,
                ratings,
            })
        })();
        match parsed {
            Ok(r) => reviews.push((line, r)),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    finish(reviews, errors, source)
}

fn finish(rows: Vec<(usize, Review)>, mut errors: Vec<RowError>, source: &str) -> Result<Corpus> {
    let mut ids = HashSet::new();
    for (line, r) in &rows {
        if let Err(message) = r.check() {
            errors.push(RowError {
                line: *line,
                message,
            });
        } else if !ids.insert(r.id.clone()) {
            errors.push(RowError {
                line: *line,
                message: format!("duplicate review id {:?}", r.id),
            });
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(Error::CorpusRows(errors));
    }
    Corpus::new(rows.into_iter().map(|(_, r)| r).collect(), source)
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let source = path.display().to_string();
    match format {
        CorpusFormat::Jsonl => parse_jsonl(BufReader::new(file), &source),
        CorpusFormat::Csv => parse_csv(BufReader::new(file), &source),
    }
}
