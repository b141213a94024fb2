//! Sentence segmentation and tokenization for German review text.
//!
//! Segmentation is rule based: a run of `.`, `!` or `?` followed by
//! whitespace (or the end of the text) closes a sentence, unless the run is a
//! single period ending a guarded abbreviation (`z.B.`, `bzw.`, `Dr.`, ...)
//! or an ordinal number (`am 3. Mai`). A blank line always closes a sentence.
//!
//! Tokenization strips HTML tags and entities, lowercases, and splits on every
//! character that is not alphanumeric. The `training` profile additionally
//! drops the shipped German stop-words.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// The shipped stop-word list, one word per line.
pub const STOPWORDS_DE: &str = include_str!("../data/stopwords_de.txt");

/// SHA-256 of [`STOPWORDS_DE`]; recorded in run manifests.
pub const STOPWORDS_DE_SHA256: &str =
    "6342819d8ca69744977cc427fa2017345f539e929edae1ac2f008640e2d10a59";

const ABBREVIATIONS: &[&str] = &[
    "z.b.", "bzw.", "ca.", "dr.", "etc.", "usw.", "d.h.", "u.a.", "vgl.", "evtl.", "ggf.", "inkl.",
    "bspw.", "prof.", "nr.", "s.", "mio.", "mrd.", "u.ä.", "o.ä.", "z.t.", "sog.", "abs.", "bzgl.",
    "ggü.", "max.", "min.", "mind.", "u.u.", "v.a.", "zzgl.", "allg.", "jh.", "str.", "tel.",
    "uvm.", "lt.", "gem.", "o.g.", "u.v.m.", "hr.", "fr.", "z.zt.",
];

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    STOPWORDS_DE
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
});

static BLANK_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\n[ \t\r]*\n").expect("valid blank-line regex"));
static HTML_TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<[A-Za-z/!][^<>]*>").expect("valid tag regex"));
static HTML_ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(?:[A-Za-z]+|#[0-9]+|#[xX][0-9A-Fa-f]+);").expect("valid"));

/// Which tokens survive tokenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Keep stop-words. Used for co-occurrence scanning and word-list validation.
    #[default]
    Matching,
    /// Drop stop-words. Used for embedding training.
    Training,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "matching" => Ok(Profile::Matching),
            "training" => Ok(Profile::Training),
            other => Err(format!(
                "unknown profile {other:?} (expected matching|training)"
            )),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::Matching => "matching",
            Profile::Training => "training",
        })
    }
}

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(token)
}

/// Lowercase form used as the lookup key for every word in the toolkit.
pub fn normalize_word(word: &str) -> String {
    word.trim().to_lowercase()
}

pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    for paragraph in BLANK_LINE.split(text) {
        split_paragraph(paragraph, &mut sentences);
    }
    sentences
}

fn split_paragraph(text: &str, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '…') {
            j += 1;
        }
        // closing quotes and brackets stay with the sentence they end
        while j < chars.len()
            && matches!(chars[j].1, '"' | '\'' | ')' | ']' | '“' | '”' | '«' | '»')
        {
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
        let at_boundary = j >= chars.len() || chars[j].1.is_whitespace();
        let single_period = c == '.' && j == i + 1;
        if at_boundary && !(single_period && guarded(&text[start..pos + 1])) {
            push_sentence(&text[start..end], out);
            start = end;
        }
        i = j.max(i + 1);
    }
    push_sentence(&text[start..], out);
}

/// True when the word that ends in the period at the end of `head` is an
/// abbreviation or an ordinal number.
fn guarded(head: &str) -> bool {
    let word = head
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(['(', '"', '\'', '„', '“']);
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let stem = &word[..word.len() - 1];
    !stem.is_empty() && stem.chars().all(|c| c.is_ascii_digit())
}

fn push_sentence(s: &str, out: &mut Vec<String>) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

pub fn strip_html(text: &str) -> String {
    let no_tags = HTML_TAG.replace_all(text, " ");
    HTML_ENTITY.replace_all(&no_tags, " ").into_owned()
}

pub fn tokenize(sentence: &str, profile: Profile) -> Vec<String> {
    let cleaned = strip_html(sentence).to_lowercase();
    cleaned
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| profile == Profile::Matching || !is_stopword(t))
        .map(str::to_string)
        .collect()
}

pub fn stopwords_checksum() -> String {
    hex::encode(Sha256::digest(STOPWORDS_DE.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_terminal_marks() {
        assert_eq!(
            split_sentences("Gut gemacht. Aber die Struktur fehlt!"),
            vec!["Gut gemacht.", "Aber die Struktur fehlt!"]
        );
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(split_sentences("z.B. hier"), vec!["z.B. hier"]);
        assert_eq!(
            split_sentences("Siehe z.B. Kapitel zwei. Dann weiter."),
            vec!["Siehe z.B. Kapitel zwei.", "Dann weiter."]
        );
        assert_eq!(
            split_sentences("Am 3. Mai war es gut."),
            vec!["Am 3. Mai war es gut."]
        );
        assert_eq!(split_sentences("Das bzw. jenes."), vec!["Das bzw. jenes."]);
    }

    #[test]
    fn empty_and_whitespace() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("  \n\n ").is_empty());
    }

    #[test]
    fn lowercase_start_still_splits() {
        assert_eq!(split_sentences("a. b"), vec!["a.", "b"]);
    }

    #[test]
    fn blank_line_splits_paragraphs() {
        assert_eq!(
            split_sentences("Titel\n\nText hier"),
            vec!["Titel", "Text hier"]
        );
        assert_eq!(split_sentences("eins\nzwei"), vec!["eins\nzwei"]);
    }

    #[test]
    fn mid_token_periods_do_not_split() {
        assert_eq!(
            split_sentences("Version 2.5 ist da"),
            vec!["Version 2.5 ist da"]
        );
        assert_eq!(split_sentences("Wirklich?! Ja."), vec!["Wirklich?!", "Ja."]);
    }

    #[test]
    fn html_and_case_normalization() {
        assert_eq!(
            tokenize("<p>Die Idee ist GUT.</p>", Profile::Matching),
            vec!["die", "idee", "ist", "gut"]
        );
        assert_eq!(
            tokenize("<p>Die Idee ist GUT.</p>", Profile::Training),
            vec!["idee", "gut"]
        );
        assert_eq!(
            tokenize("Größe &amp; Maß", Profile::Matching),
            vec!["größe", "maß"]
        );
        assert!(tokenize("", Profile::Matching).is_empty());
    }

    #[test]
    fn stopword_file_checksum_is_pinned() {
        assert_eq!(stopwords_checksum(), STOPWORDS_DE_SHA256);
    }

    #[test]
    fn profile_parse() {
        assert_eq!("Training".parse::<Profile>().unwrap(), Profile::Training);
        assert!("stem".parse::<Profile>().is_err());
    }

    fn german_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                "[a-zA-ZäöüÄÖÜß0-9]{1,8}",
                Just(" ".to_string()),
                Just(". ".to_string()),
                Just("! ".to_string()),
                Just("<b>".to_string()),
                Just("</p>".to_string()),
                Just("&nbsp;".to_string()),
                Just(",".to_string()),
                Just("-".to_string()),
                Just("z.B. ".to_string()),
                Just("\n\n".to_string()),
            ],
            0..40,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(s in german_text()) {
            for profile in [Profile::Matching, Profile::Training] {
                let once = tokenize(&s, profile);
                let twice = tokenize(&once.join(" "), profile);
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn sentences_cover_input(s in german_text()) {
            let sentences = split_sentences(&s);
            prop_assert!(sentences.iter().all(|x| !x.trim().is_empty()));
            let joined: String = sentences.concat().chars().filter(|c| !c.is_whitespace()).collect();
            let original: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, original);
        }
    }
}
