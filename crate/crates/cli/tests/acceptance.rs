//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. CLI-level criteria drive the built `weatkit` binary.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weatkit::weat::permutation_pvalue_from_associations;
use weatkit::wordlists::WordList;
use weatkit::{
    builtin_german_battery, effect_size, Axis, Corpus, CorpusFormat, EmbeddingTable, PValueMode,
    Review, SuiteReport, WeatOptions, WeatTest,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn bin(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_weatkit"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "weatkit {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn t6() -> WeatTest {
    builtin_german_battery()
        .into_iter()
        .find(|t| t.id == 6)
        .unwrap()
}

fn adhoc_test(x: &[&str], y: &[&str], a: &[&str], b: &[&str]) -> WeatTest {
    WeatTest {
        id: 1,
        axis: Axis::Conceptual,
        name: "fixture".into(),
        targets_x: WordList::new("X", x),
        targets_y: WordList::new("Y", y),
        attributes_a: WordList::new("A", a),
        attributes_b: WordList::new("B", b),
    }
}

fn ac1() -> Outcome {
    let start = Instant::now();
    // cos t - sin t = 0.5, so x-words sit at s = +0.5 and mirrored y-words at -0.5
    let t = (0.5f64 / 2f64.sqrt()).acos() - std::f64::consts::FRAC_PI_4;
    let mut table = EmbeddingTable::new(2, "eight").unwrap();
    let mut raw: BTreeMap<String, [f64; 2]> = BTreeMap::new();
    let mut put = |w: String, v: [f64; 2]| {
        table.insert(w.clone(), v.to_vec()).unwrap();
        raw.insert(w, v);
    };
    put("a1".into(), [1.0, 0.0]);
    put("a2".into(), [2.0, 0.0]);
    put("b1".into(), [0.0, 1.0]);
    put("b2".into(), [0.0, 3.0]);
    for (i, k) in [1.0, 2.5, 0.5, 4.0].into_iter().enumerate() {
        put(format!("x{i}"), [k * t.cos(), k * t.sin()]);
        put(format!("y{i}"), [k * t.sin(), k * t.cos()]);
    }
    let test = adhoc_test(
        &["x0", "x1", "x2", "x3"],
        &["y0", "y1", "y2", "y3"],
        &["a1", "a2"],
        &["b1", "b2"],
    );

    let cos = |u: [f64; 2], v: [f64; 2]| {
        (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]))
    };
    let assoc = |w: &str| {
        let v = raw[w];
        (cos(v, raw["a1"]) + cos(v, raw["a2"])) / 2.0
            - (cos(v, raw["b1"]) + cos(v, raw["b2"])) / 2.0
    };
    let sx = [assoc("x0"), assoc("x1"), assoc("x2"), assoc("x3")];
    let sy = [assoc("y0"), assoc("y1"), assoc("y2"), assoc("y3")];
    let all = [sx, sy].concat();
    let mean = all.iter().sum::<f64>() / 8.0;
    let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 7.0;
    let oracle = (sx.iter().sum::<f64>() / 4.0 - sy.iter().sum::<f64>() / 4.0) / var.sqrt();

    let d = effect_size(&test, &table, &WeatOptions::default())
        .effect_size
        .ok_or("engine returned no effect size")?;
    let elapsed = start.elapsed();
    ensure!((d - oracle).abs() <= 1e-10, "engine {d} vs oracle {oracle}");
    ensure!(
        (oracle - 1.8708286933869707).abs() <= 1e-10,
        "oracle {oracle} is not 1/sqrt(2/7)"
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("d = {d:.12} (oracle {oracle:.12}), {elapsed:?}"))
}

fn orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= p * ui);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240);
    let names: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
    let n: Vec<&str> = names.iter().map(String::as_str).collect();
    let (x, y, a, b) = (&n[0..5], &n[5..10], &n[10..15], &n[15..20]);
    let d = |test: &WeatTest, table: &EmbeddingTable| {
        effect_size(test, table, &WeatOptions::default())
            .effect_size
            .unwrap_or(f64::NAN)
    };
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let mut table = EmbeddingTable::new(10, "random").unwrap();
        for w in &n {
            table
                .insert(*w, (0..10).map(|_| rng.random_range(-1.0..1.0)).collect())
                .unwrap();
        }
        let base = d(&adhoc_test(x, y, a, b), &table);
        let k = rng.random_range(0.01..100.0);
        let q = orthogonal(&mut rng, 10);
        let scaled = table
            .map_vectors(|v| v.iter().map(|c| c * k).collect())
            .unwrap();
        let rotated = table
            .map_vectors(|v| {
                q.iter()
                    .map(|row| row.iter().zip(v).map(|(r, c)| r * c).sum())
                    .collect()
            })
            .unwrap();
        let same = effect_size(&adhoc_test(x, x, a, b), &table, &WeatOptions::default());
        let errors = [
            d(&adhoc_test(y, x, a, b), &table) + base,
            d(&adhoc_test(x, y, b, a), &table) + base,
            d(&adhoc_test(y, x, b, a), &table) - base,
            same.effect_size.unwrap_or(0.0),
            d(&adhoc_test(x, y, a, b), &scaled) - base,
            d(&adhoc_test(x, y, a, b), &rotated) - base,
        ];
        for e in errors {
            ensure!(e.is_finite(), "non-finite identity residual");
            worst = worst.max(e.abs());
        }
    }
    ensure!(worst <= 1e-9, "largest identity residual {worst:e}");
    Ok(format!("200 tables, largest residual {worst:.1e}"))
}

/// Enumerates every equal-size split by recursion.
fn enumerate_p(sx: &[f64], sy: &[f64]) -> f64 {
    let pooled: Vec<f64> = sx.iter().chain(sy).copied().collect();
    let stat = |xs: &[f64], ys: &[f64]| {
        xs.iter().sum::<f64>() / xs.len() as f64 - ys.iter().sum::<f64>() / ys.len() as f64
    };
    let observed = stat(sx, sy);
    let (mut hits, mut total) = (0usize, 0usize);
    for mask in 0u32..(1 << pooled.len()) {
        if mask.count_ones() as usize != sx.len() {
            continue;
        }
        let (xs, ys): (Vec<(usize, f64)>, Vec<(usize, f64)>) = pooled
            .iter()
            .copied()
            .enumerate()
            .partition(|(i, _)| mask & (1 << i) != 0);
        let xs: Vec<f64> = xs.into_iter().map(|p| p.1).collect();
        let ys: Vec<f64> = ys.into_iter().map(|p| p.1).collect();
        total += 1;
        if stat(&xs, &ys) >= observed - 1e-12 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn ac3() -> Outcome {
    let max_sep =
        permutation_pvalue_from_associations(&[0.9, 0.8, 0.7], &[0.1, 0.2, 0.3], PValueMode::Exact)
            .map_err(|e| e.to_string())?;
    ensure!(max_sep == 0.05, "maximal separation p = {max_sep}");
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut fixtures = 0;
    for n in 2..=6 {
        for k in 0..4 {
            let sx: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-0.5..0.5) + 0.15 * k as f64)
                .collect();
            let sy: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let exact = permutation_pvalue_from_associations(&sx, &sy, PValueMode::Exact)
                .map_err(|e| e.to_string())?;
            let oracle = enumerate_p(&sx, &sy);
            ensure!(
                (exact - oracle).abs() < 1e-12,
                "exact {exact} vs enumeration {oracle}"
            );
            let sampled = permutation_pvalue_from_associations(
                &sx,
                &sy,
                PValueMode::Sampled {
                    draws: 100_000,
                    seed: 2024,
                },
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max((sampled - exact).abs());
            fixtures += 1;
        }
    }
    ensure!(worst <= 0.01, "sampled vs exact gap {worst}");
    Ok(format!(
        "max-separation p = 0.05; {fixtures} fixtures, largest sampled gap {worst:.4}"
    ))
}

fn appendix(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data/appendix")
        .join(name)
}

fn ac4(dir: &Path) -> Outcome {
    let out = dir.join("deltas.csv");
    bin(&[
        "compare",
        s(&appendix("pretrained.json")),
        s(&appendix("finetuned.json")),
        "--out",
        s(&out),
    ])?;
    let got = fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let fixture = fs::read_to_string(appendix("deltas.csv")).map_err(|e| e.to_string())?;
    ensure!(
        got == fixture,
        "compare output differs from the 27-cell fixture"
    );

    // recompute every delta in integer hundredths from the two tables
    let load = |name: &str| -> Vec<SuiteReport> {
        serde_json::from_str(&fs::read_to_string(appendix(name)).unwrap()).unwrap()
    };
    let (pre, fin) = (load("pretrained.json"), load("finetuned.json"));
    let cents = |x: f64| (x * 100.0).round() as i64;
    let mut checked = 0;
    for line in got.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let model = pre
            .iter()
            .position(|r| r.source.to_string() == f[0])
            .ok_or("unknown model")?;
        let id: u8 = f[2].parse().map_err(|_| "bad id")?;
        let b = pre[model]
            .result(id)
            .and_then(|r| r.effect_size)
            .ok_or("missing before")?;
        let a = fin[model]
            .result(id)
            .and_then(|r| r.effect_size)
            .ok_or("missing after")?;
        let delta: f64 = f[6].parse().map_err(|_| "bad delta")?;
        ensure!(cents(delta) == cents(a) - cents(b), "{line}");
        ensure!(
            (delta * 100.0 - (cents(a) - cents(b)) as f64).abs() < 1e-6,
            "{line} is not exact"
        );
        checked += 1;
    }
    ensure!(checked == 27, "{checked} delta rows");
    for (row, expect) in [
        (
            "german-bert:pretrained,german-bert:finetuned,3,Racial,0.48,0.85,0.37,true",
            "BERT t3 +0.37",
        ),
        (
            "german-bert:pretrained,german-bert:finetuned,9,Conceptual,0.16,-0.37,-0.53,true",
            "BERT t9 -0.53",
        ),
        (
            "german-t5:pretrained,german-t5:finetuned,1,Conceptual,0.61,0.36,-0.25,true",
            "T5 t1 -0.25",
        ),
    ] {
        ensure!(got.lines().any(|l| l == row), "missing {expect}");
    }
    Ok("27/27 deltas exact (BERT t3 +0.37, BERT t9 -0.53, T5 t1 -0.25)".into())
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

const NEUTRAL: [&str; 30] = [
    "arbeit",
    "text",
    "thema",
    "abschnitt",
    "beispiel",
    "argument",
    "quelle",
    "fazit",
    "gliederung",
    "einleitung",
    "methode",
    "analyse",
    "ergebnis",
    "diskussion",
    "grafik",
    "tabelle",
    "zitat",
    "literatur",
    "aufbau",
    "sprache",
    "stil",
    "logik",
    "struktur",
    "kapitel",
    "frage",
    "antwort",
    "idee",
    "ansatz",
    "modell",
    "daten",
];

fn planted_corpus(path: &Path, mirrored: bool) -> usize {
    let t = t6();
    let (career, family) = (&t.attributes_a.words, &t.attributes_b.words);
    let (male_with, female_with) = if mirrored {
        (family, career)
    } else {
        (career, family)
    };
    let n = |k: usize| capitalize(NEUTRAL[k % NEUTRAL.len()]);
    let mut reviews = Vec::new();
    for i in 0..150 {
        let m = capitalize(&t.targets_x.words[i % 8]);
        let f = capitalize(&t.targets_y.words[(i * 3) % 8]);
        let (a1, a2) = (
            capitalize(&male_with[(i * 3) % 8]),
            capitalize(&male_with[(i * 5 + 1) % 8]),
        );
        let (b1, b2) = (
            capitalize(&female_with[(i * 3) % 8]),
            capitalize(&female_with[(i * 5 + 1) % 8]),
        );
        reviews.push(Review::new(
            format!("m{i}"),
            format!(
                "{m} lobt {} und {a1}, {} und {a2}.",
                n(i * 7),
                n(i * 11 + 3)
            ),
        ));
        reviews.push(Review::new(
            format!("f{i}"),
            format!(
                "{f} lobt {} und {b1}, {} und {b2}.",
                n(i * 13 + 5),
                n(i * 17 + 9)
            ),
        ));
    }
    let corpus = Corpus::new(reviews, "planted").unwrap();
    corpus.save(path, CorpusFormat::Jsonl).unwrap();
    corpus.len()
}

fn test6_effect(report: &Path) -> Result<f64, String> {
    let suite: SuiteReport =
        serde_json::from_str(&fs::read_to_string(report).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let r = suite.result(6).ok_or("no test 6")?;
    ensure!(r.valid, "test 6 invalid: {:?}", r.reason);
    r.effect_size.ok_or_else(|| "no effect size".to_string())
}

fn ac5(dir: &Path) -> Outcome {
    let mut ds = Vec::new();
    let start = Instant::now();
    for (tag, mirrored) in [("planted", false), ("mirrored", true)] {
        let corpus = dir.join(format!("{tag}.jsonl"));
        let sentences = planted_corpus(&corpus, mirrored);
        ensure!(sentences >= 200, "only {sentences} sentences");
        let out = dir.join(format!("glove-{tag}"));
        let t0 = Instant::now();
        bin(&[
            "glove-train",
            "--corpus",
            s(&corpus),
            "--workers",
            "1",
            "--seed",
            "7",
            "--out",
            s(&out),
        ])?;
        let took = t0.elapsed();
        ensure!(
            took < Duration::from_secs(120),
            "{tag} training took {took:?}"
        );
        let report = dir.join(format!("weat-{tag}.json"));
        bin(&[
            "weat",
            "--embeddings",
            s(&out.join("vectors.vec")),
            "--out",
            s(&report),
        ])?;
        ds.push(test6_effect(&report)?);
    }
    ensure!(ds[0] > 0.5, "planted d = {}", ds[0]);
    ensure!(ds[1] < -0.5, "mirrored d = {}", ds[1]);
    Ok(format!(
        "test 6 d = {:+.3}, mirrored {:+.3} (300-dim, 100 epochs, 1 worker, {:?} total)",
        ds[0],
        ds[1],
        start.elapsed()
    ))
}

/// Band counts straight from the raw JSONL, independent of the corpus module.
fn raw_band_counts(path: &Path) -> BTreeMap<String, (usize, usize, usize)> {
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for line in fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
    {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for axis in ["helpful", "quality", "critical", "constructive"] {
            let c = counts.entry(axis.into()).or_default();
            match v
                .get("ratings")
                .and_then(|r| r.get(axis))
                .and_then(|x| x.as_u64())
            {
                Some(r) if r >= 6 => c.0 += 1,
                Some(_) => c.1 += 1,
                None => c.2 += 1,
            }
        }
    }
    counts
}

fn bands_csv(stdout: &str) -> BTreeMap<String, Vec<usize>> {
    stdout
        .lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1..].iter().map(|x| x.parse().unwrap()).collect(),
            )
        })
        .collect()
}

fn ac6(dir: &Path) -> Outcome {
    for seed in 0..5u64 {
        let path = dir.join(format!("bands-{seed}.jsonl"));
        let corpus = weatkit::synth::review_corpus(400 + 150 * seed as usize, seed);
        corpus.save(&path, CorpusFormat::Jsonl).unwrap();
        let table = bands_csv(&bin(&["subsets", "--corpus", s(&path)])?);
        let raw = raw_band_counts(&path);
        for (axis, (h, l, u)) in &raw {
            let row = table.get(axis).ok_or(format!("no {axis} row"))?;
            ensure!(
                row[..3] == [*h, *l, *u],
                "{axis}: cli {row:?} vs raw {h}/{l}/{u}"
            );
            ensure!(
                h + l + u == corpus.len() && row[3] == corpus.len(),
                "{axis} does not sum to corpus size"
            );
        }
    }
    let clause = match std::env::var_os("WEATKIT_RELEASED_CORPUS") {
        None => "released-corpus clause SKIPPED (set WEATKIT_RELEASED_CORPUS to a corpus file)"
            .to_string(),
        Some(path) => {
            let table = bands_csv(&bin(&[
                "subsets",
                "--corpus",
                Path::new(&path).to_str().unwrap(),
            ])?);
            for (axis, h, l) in [
                ("helpful", 5886, 3279),
                ("quality", 5391, 3774),
                ("critical", 5514, 3651),
                ("constructive", 5656, 3509),
            ] {
                let row = table.get(axis).ok_or(format!("no {axis} row"))?;
                ensure!(
                    row[0] == h && row[1] == l,
                    "{axis}: {}/{} expected {h}/{l}",
                    row[0],
                    row[1]
                );
            }
            "released corpus matches 5886/3279, 5391/3774, 5514/3651, 5656/3509".to_string()
        }
    };
    Ok(format!("5 synthetic corpora partition exactly; {clause}"))
}

fn ac7(dir: &Path) -> Outcome {
    let path = dir.join("ten-k.jsonl");
    weatkit::synth::review_corpus(10_000, 99)
        .save(&path, CorpusFormat::Jsonl)
        .unwrap();
    let mut outputs = Vec::new();
    for w in ["1", "4", "8"] {
        let out = dir.join(format!("scan-{w}"));
        bin(&[
            "cooccur",
            "--corpus",
            s(&path),
            "--workers",
            w,
            "--out",
            s(&out),
        ])?;
        let json = fs::read(out.join("cooccur.json")).map_err(|e| e.to_string())?;
        let csv = fs::read(out.join("cooccur.csv")).map_err(|e| e.to_string())?;
        outputs.push((json, csv));
    }
    ensure!(
        outputs[0] == outputs[1] && outputs[1] == outputs[2],
        "scan output differs across worker counts"
    );
    let report: serde_json::Value = serde_json::from_slice(&outputs[0].0).unwrap();
    ensure!(
        report["sentences"] == 10_000,
        "corpus has {} sentences",
        report["sentences"]
    );

    let planted = dir.join("planted-hit.jsonl");
    let mut reviews: Vec<Review> = (0..40)
        .map(|i| {
            Review::new(
                format!("n{i}"),
                "Die Methode ist solide. Die Sprache wirkt knapp.",
            )
            .with_rating(weatkit::RatingAxis::Helpful, 1 + (i % 7) as u8)
        })
        .collect();
    reviews.push(
        Review::new("planted", "Gute Arbeit. Die Rose wirkt ehrlich.")
            .with_rating(weatkit::RatingAxis::Helpful, 7),
    );
    Corpus::new(reviews, "planted")
        .unwrap()
        .save(&planted, CorpusFormat::Jsonl)
        .unwrap();
    let out = dir.join("planted-subsets");
    bin(&["subsets", "--corpus", s(&planted), "--out", s(&out)])?;
    let matrix = fs::read_to_string(out.join("matrix.csv")).map_err(|e| e.to_string())?;
    let mut nonzero = Vec::new();
    let mut lines = matrix.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        for (col, v) in header.iter().zip(&f).skip(3) {
            if *v != "0" {
                nonzero.push(format!("{}:{} test {col} = {v}", f[0], f[1]));
            }
        }
    }
    ensure!(
        nonzero == ["overall:all test 1 = 1", "helpful:high test 1 = 1"],
        "unexpected cells: {nonzero:?}"
    );
    Ok(
        "1/4/8 workers byte-identical on 10k sentences; planted hit only in (test 1, helpful:high)"
            .into(),
    )
}

fn ac8(dir: &Path) -> Outcome {
    let path = dir.join("toy.jsonl");
    let texts = [
        "Die Einleitung ist klar und die Methode solide.",
        "Die Methode ist solide, die Auswertung knapp.",
        "Die Auswertung wirkt knapp, aber die Einleitung klar.",
        "Gute Struktur, klare Sprache und solide Quellen.",
        "Die Quellen sind knapp, die Sprache klar.",
    ];
    let reviews = (0..40)
        .map(|i| Review::new(format!("t{i}"), texts[i % 5]))
        .collect();
    Corpus::new(reviews, "toy")
        .unwrap()
        .save(&path, CorpusFormat::Jsonl)
        .unwrap();
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("toy-{k}"));
        bin(&[
            "glove-train",
            "--corpus",
            s(&path),
            "--workers",
            "1",
            "--seed",
            "21",
            "--dimension",
            "50",
            "--window",
            "5",
            "--out",
            s(&out),
        ])?;
        let vectors = fs::read(out.join("vectors.vec")).map_err(|e| e.to_string())?;
        let log = fs::read_to_string(out.join("train_log.csv")).map_err(|e| e.to_string())?;
        runs.push((vectors, log));
    }
    ensure!(runs[0] == runs[1], "single-worker runs differ");
    let losses: Vec<f64> = runs[0]
        .1
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    ensure!(losses.len() == 100, "{} epochs logged", losses.len());
    let (first, last) = (losses[0], losses[99]);
    ensure!(last < 0.1 * first, "loss {first} -> {last}");
    Ok(format!(
        "loss {first:.4} -> {last:.6} ({:.2}%), two runs bit-identical",
        100.0 * last / first
    ))
}

fn ac9(dir: &Path) -> Outcome {
    let vec = dir.join("t6-only.vec");
    let t = t6();
    let mut table = EmbeddingTable::new(4, "t6").unwrap();
    for (i, w) in t.vocabulary().enumerate() {
        let x = i as f64;
        table
            .insert(w, vec![1.0 + x.sin(), x.cos(), (0.7 * x).sin(), 0.2])
            .unwrap();
    }
    table.save(&vec).unwrap();
    let out = dir.join("t6.json");
    bin(&["weat", "--embeddings", s(&vec), "--out", s(&out)])?;
    let suite: SuiteReport =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).map_err(|e| e.to_string())?;
    ensure!(suite.results.len() == 9, "{} results", suite.results.len());
    ensure!(
        suite.valid_count() == 1 && suite.result(6).is_some_and(|r| r.valid),
        "valid tests != {{6}}"
    );
    let oov = suite
        .results
        .iter()
        .filter(|r| {
            !r.valid
                && r.effect_size.is_none()
                && r.reason
                    .as_deref()
                    .is_some_and(|m| m.starts_with("out of vocabulary"))
        })
        .count();
    ensure!(oov == 8, "{oov} OOV-invalid tests");
    Ok("1 valid (test 6), 8 out-of-vocabulary".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let criteria: Vec<(&str, &str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("AC1", "effect-size oracle", Box::new(ac1)),
        ("AC2", "WEAT symmetry suite", Box::new(ac2)),
        ("AC3", "permutation exactness", Box::new(ac3)),
        ("AC4", "delta fixture", Box::new(|| ac4(d))),
        ("AC5", "planted-bias pipeline", Box::new(|| ac5(d))),
        ("AC6", "subset arithmetic", Box::new(|| ac6(d))),
        ("AC7", "co-occurrence determinism", Box::new(|| ac7(d))),
        ("AC8", "GloVe convergence", Box::new(|| ac8(d))),
        ("AC9", "OOV semantics", Box::new(|| ac9(d))),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
