//! Deterministic synthetic review corpora for tests, benchmarks and smoke runs.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Gender, RatingAxis, Review, RATING_MAX, RATING_MIN};
use crate::wordlists::{battery_vocabulary, builtin_german_battery};

const OPENERS: [&str; 8] = [
    "Die Arbeit",
    "Der Text",
    "Das Kapitel",
    "Die Einleitung",
    "Der Abschnitt",
    "Die Analyse",
    "Das Fazit",
    "Die Gliederung",
];
const VERBS: [&str; 8] = [
    "erwähnt",
    "beschreibt",
    "vergleicht",
    "diskutiert",
    "nennt",
    "betont",
    "erklärt",
    "zeigt",
];
const NEUTRAL: [&str; 16] = [
    "Beispiel",
    "Argument",
    "Quelle",
    "Methode",
    "Ergebnis",
    "Tabelle",
    "Grafik",
    "Struktur",
    "Sprache",
    "Logik",
    "Frage",
    "Idee",
    "Ansatz",
    "Modell",
    "Daten",
    "Literatur",
];

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

/// `sentences` sentences spread over reviews of one to six sentences. Roughly
/// a third of the sentences mention two battery words; ratings are missing
/// for about one review in ten per axis.
pub fn review_corpus(sentences: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = battery_vocabulary(&builtin_german_battery());
    let mut reviews = Vec::new();
    let mut left = sentences.max(1);
    while left > 0 {
        let n = rng.random_range(1..=6usize).min(left);
        left -= n;
        let text: Vec<String> = (0..n)
            .map(|_| {
                let opener = OPENERS.choose(&mut rng).unwrap();
                let verb = VERBS.choose(&mut rng).unwrap();
                let (w1, w2) = if rng.random_bool(0.35) {
                    (
                        vocab.choose(&mut rng).unwrap().as_str(),
                        vocab.choose(&mut rng).unwrap().as_str(),
                    )
                } else {
                    (
                        *NEUTRAL.choose(&mut rng).unwrap(),
                        *NEUTRAL.choose(&mut rng).unwrap(),
                    )
                };
                format!("{opener} {verb} {} und {}.", capitalize(w1), capitalize(w2))
            })
            .collect();
        let mut review = Review::new(format!("r{:06}", reviews.len()), text.join(" "));
        review.year = Some(rng.random_range(2019..=2021));
        review.author_gender = *[Gender::Male, Gender::Female, Gender::Unspecified]
            .choose(&mut rng)
            .unwrap();
        for axis in RatingAxis::ALL {
            if rng.random_bool(0.9) {
                review = review.with_rating(axis, rng.random_range(RATING_MIN..=RATING_MAX));
            }
        }
        reviews.push(review);
    }
    Corpus::new(reviews, format!("synthetic:{sentences}:{seed}"))
        .expect("generated reviews are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::split_sentences;

    #[test]
    fn exact_sentence_count_and_reproducible() {
        let c = review_corpus(500, 3);
        let n: usize = c
            .reviews()
            .iter()
            .map(|r| split_sentences(&r.text).len())
            .sum();
        assert_eq!(n, 500);
        assert_eq!(c, review_corpus(500, 3));
        assert_ne!(c, review_corpus(500, 4));
    }
}
