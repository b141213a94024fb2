//! The nine German WEAT tests and the battery file format.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize_word, tokenize, Profile};

/// The shipped battery, assembled from the German name adaptations plus
/// corrected translations of the remaining English lists.
pub const GERMAN_BATTERY_JSON: &str = include_str!("../data/german_battery.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    Conceptual,
    Racial,
    Gender,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Conceptual, Axis::Racial, Axis::Gender];

    /// Axis of a test id in the nine-test battery.
    pub fn for_test_id(id: u8) -> Option<Axis> {
        match id {
            1 | 2 | 9 => Some(Axis::Conceptual),
            3..=5 => Some(Axis::Racial),
            6..=8 => Some(Axis::Gender),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Conceptual => "Conceptual",
            Axis::Racial => "Racial",
            Axis::Gender => "Gender",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Display order of test ids, grouped by axis.
pub const AXIS_ORDER: [u8; 9] = [1, 2, 9, 3, 4, 5, 6, 7, 8];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordList {
    pub name: String,
    pub words: Vec<String>,
}

impl WordList {
    pub fn new(name: impl Into<String>, words: &[&str]) -> Self {
        WordList {
            name: name.into(),
            words: words.iter().map(|w| w.to_string()).collect(),
        }
    }
}

/// Which of the four lists of a test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ListRole {
    #[serde(rename = "X")]
    TargetX,
    #[serde(rename = "Y")]
    TargetY,
    #[serde(rename = "A")]
    AttributeA,
    #[serde(rename = "B")]
    AttributeB,
}

impl ListRole {
    pub const ALL: [ListRole; 4] = [
        ListRole::TargetX,
        ListRole::TargetY,
        ListRole::AttributeA,
        ListRole::AttributeB,
    ];

    fn field(self) -> &'static str {
        match self {
            ListRole::TargetX => "targets_x",
            ListRole::TargetY => "targets_y",
            ListRole::AttributeA => "attributes_a",
            ListRole::AttributeB => "attributes_b",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeatTest {
    pub id: u8,
    pub axis: Axis,
    pub name: String,
    pub targets_x: WordList,
    pub targets_y: WordList,
    pub attributes_a: WordList,
    pub attributes_b: WordList,
}

impl WeatTest {
    pub fn list(&self, role: ListRole) -> &WordList {
        match role {
            ListRole::TargetX => &self.targets_x,
            ListRole::TargetY => &self.targets_y,
            ListRole::AttributeA => &self.attributes_a,
            ListRole::AttributeB => &self.attributes_b,
        }
    }

    fn list_mut(&mut self, role: ListRole) -> &mut WordList {
        match role {
            ListRole::TargetX => &mut self.targets_x,
            ListRole::TargetY => &mut self.targets_y,
            ListRole::AttributeA => &mut self.attributes_a,
            ListRole::AttributeB => &mut self.attributes_b,
        }
    }

    /// Lowercases every word in place.
    pub fn normalize(&mut self) {
        for role in ListRole::ALL {
            for w in &mut self.list_mut(role).words {
                *w = normalize_word(w);
            }
        }
    }

    /// Checks every battery invariant; words are expected to be normalized already.
    pub fn validate(&self) -> Result<()> {
        let label = format!("test {}", self.id);
        let expected = Axis::for_test_id(self.id)
            .ok_or_else(|| Error::battery(&label, "id", "must be in 1..=9"))?;
        if expected != self.axis {
            return Err(Error::battery(
                &label,
                "axis",
                format!(
                    "test {} belongs to {expected}, found {}",
                    self.id, self.axis
                ),
            ));
        }
        for role in ListRole::ALL {
            let list = self.list(role);
            if list.words.len() < 2 {
                return Err(Error::battery(
                    &label,
                    role.field(),
                    "needs at least 2 words",
                ));
            }
            let mut seen = HashSet::new();
            for w in &list.words {
                if w.is_empty() || w.chars().any(char::is_whitespace) {
                    return Err(Error::battery(
                        &label,
                        role.field(),
                        format!("{w:?} is not a single token; pick a one-word variant"),
                    ));
                }
                if tokenize(w, Profile::Matching) != [w.as_str()] {
                    return Err(Error::battery(
                        &label,
                        role.field(),
                        format!("{w:?} does not tokenize to itself"),
                    ));
                }
                if !seen.insert(w) {
                    return Err(Error::battery(
                        &label,
                        role.field(),
                        format!("duplicate word {w:?}"),
                    ));
                }
            }
        }
        if self.targets_x.words.len() != self.targets_y.words.len() {
            return Err(Error::battery(
                &label,
                "targets_y",
                format!(
                    "target lists differ in size ({} vs {})",
                    self.targets_x.words.len(),
                    self.targets_y.words.len()
                ),
            ));
        }
        check_disjoint(&label, "targets_y", &self.targets_x, &self.targets_y)?;
        check_disjoint(
            &label,
            "attributes_b",
            &self.attributes_a,
            &self.attributes_b,
        )?;
        Ok(())
    }

    /// Every distinct word of the test.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        ListRole::ALL
            .into_iter()
            .flat_map(move |r| self.list(r).words.iter().map(String::as_str))
    }
}

fn check_disjoint(label: &str, field: &str, a: &WordList, b: &WordList) -> Result<()> {
    let left: HashSet<&String> = a.words.iter().collect();
    if let Some(w) = b.words.iter().find(|w| left.contains(w)) {
        return Err(Error::battery(
            label,
            field,
            format!("{w:?} appears in both {} and {}", a.name, b.name),
        ));
    }
    Ok(())
}

/// Parses and validates a battery document.
pub fn parse_tests(json: &str) -> Result<Vec<WeatTest>> {
    let mut tests: Vec<WeatTest> = serde_json::from_str(json)
        .map_err(|e| Error::battery("battery", "schema", e.to_string()))?;
    if tests.is_empty() {
        return Err(Error::battery("battery", "tests", "no tests defined"));
    }
    let mut ids = HashSet::new();
    for t in &mut tests {
        t.normalize();
        if !ids.insert(t.id) {
            return Err(Error::battery(
                format!("test {}", t.id),
                "id",
                "duplicate id",
            ));
        }
        t.validate()?;
    }
    Ok(tests)
}

pub fn load_tests(path: impl AsRef<Path>) -> Result<Vec<WeatTest>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if raw.trim().is_empty() {
        return Err(Error::battery("battery", "tests", "no tests defined"));
    }
    parse_tests(&raw)
}

pub fn write_tests(path: impl AsRef<Path>, tests: &[WeatTest]) -> Result<()> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(tests)?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn builtin_german_battery() -> Vec<WeatTest> {
    parse_tests(GERMAN_BATTERY_JSON).expect("shipped battery is valid")
}

/// Union of all battery words, sorted.
pub fn battery_vocabulary(tests: &[WeatTest]) -> Vec<String> {
    let mut words: Vec<String> = tests
        .iter()
        .flat_map(|t| t.vocabulary().map(str::to_string))
        .collect();
    words.sort();
    words.dedup();
    words
}
