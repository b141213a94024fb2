use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use serde_json::json;
use weatkit::cooccur::scan_with_profile;
use weatkit::corpus::RatingAxis;
use weatkit::glove::{log_csv, train_labeled};
use weatkit::report::{display_order, fmt_num, sha256_hex, write_report, BandTable, DeltaTable};
use weatkit::wordlists::GERMAN_BATTERY_JSON;
use weatkit::{
    build_cooc, builtin_german_battery, diff_suites, load_table, load_tests, render, run_suite,
    subset_matrix, Corpus, CorpusFormat, Format, Gender, LookupPolicy, PValueMode, Profile, Render,
    RunManifest, SubsetSpec, SuiteReport, TrainConfig, WeatOptions, WeatTest,
};

use crate::settings::{ConfigFile, Resolver, Usage};
use crate::{
    AuditArgs, CommonArgs, CompareArgs, CooccurArgs, CorpusArgs, GloveArgs, GloveParams, ScoreArgs,
};
use crate::{Command, SubsetsArgs, WeatArgs};

pub const COOCCUR_JSON: &str = "cooccur.json";
pub const COOCCUR_CSV: &str = "cooccur.csv";
pub const VECTORS: &str = "vectors.vec";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const WEAT_JSON: &str = "weat.json";
pub const WEAT_CSV: &str = "weat.csv";
pub const MANIFEST: &str = "manifest.json";

const DEFAULT_WORKERS: usize = 8;

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// State shared by every command: resolved settings and the manifest skeleton.
struct Run<'a> {
    command: &'static str,
    config: &'a ConfigFile,
    res: Resolver<'a>,
    started: String,
}

impl<'a> Run<'a> {
    fn manifest(&self, seed: u64, battery: Option<&Battery>) -> Result<RunManifest> {
        let mut m = RunManifest::new(
            self.command,
            std::env::args().collect(),
            seed,
            self.started.clone(),
        );
        m.config = self.res.resolved.clone();
        if let Some(path) = &self.config.path {
            m.add_input(path)?;
        }
        if let Some(b) = battery {
            m.battery_sha256 = Some(b.sha256.clone());
            if let Some(path) = &b.path {
                m.add_input(path)?;
            }
        }
        Ok(m)
    }
}

fn finish(mut m: RunManifest, outputs: &[PathBuf], path: &Path) -> Result<()> {
    for o in outputs {
        m.add_output(o)?;
    }
    m.finished_at = now();
    m.save(path)?;
    info!("manifest written to {}", path.display());
    Ok(())
}

struct Battery {
    tests: Vec<WeatTest>,
    path: Option<PathBuf>,
    sha256: String,
}

fn load_battery(res: &mut Resolver, flag: Option<PathBuf>) -> Result<Battery> {
    match res.optional::<PathBuf>("battery", flag)? {
        Some(path) => {
            let bytes = fs::read(&path).map_err(|e| weatkit::Error::io(&path, e))?;
            let tests = load_tests(&path)?;
            Ok(Battery {
                tests,
                sha256: sha256_hex(&bytes),
                path: Some(path),
            })
        }
        None => {
            res.record("battery", "builtin");
            Ok(Battery {
                tests: builtin_german_battery(),
                path: None,
                sha256: sha256_hex(GERMAN_BATTERY_JSON.as_bytes()),
            })
        }
    }
}

fn load_corpus(res: &mut Resolver, args: &CorpusArgs) -> Result<(Corpus, PathBuf)> {
    let path: PathBuf = res.required("corpus", args.corpus.clone())?;
    let format = res.or("format", args.format, CorpusFormat::from_path(&path))?;
    let mut corpus = weatkit::load_corpus(&path, format)?;
    if let Some(spec) = res.optional::<SubsetSpec>("subset", args.subset)? {
        corpus = corpus.filter_subset(spec)?;
    }
    if let Some(gender) = res.optional::<Gender>("gender", args.gender)? {
        corpus = corpus.filter_gender(gender);
    }
    info!(
        "{} reviews from {}",
        corpus.len(),
        corpus.provenance.label()
    );
    Ok((corpus, path))
}

fn seed_and_workers(res: &mut Resolver, common: &CommonArgs) -> Result<(u64, usize)> {
    let seed = res.or("seed", common.seed, TrainConfig::default().seed)?;
    let workers = res.or("workers", common.workers, DEFAULT_WORKERS)?;
    if workers == 0 {
        return Err(Usage("--workers must be at least 1".into()).into());
    }
    Ok((seed, workers))
}

fn train_config(
    res: &mut Resolver,
    g: &GloveParams,
    seed: u64,
    workers: usize,
) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        dimension: res.or("dimension", g.dimension, d.dimension)?,
        window: res.or("window", g.window, d.window)?,
        epochs: res.or("epochs", g.epochs, d.epochs)?,
        workers,
        x_max: res.or("x_max", g.x_max, d.x_max)?,
        alpha: res.or("alpha", g.alpha, d.alpha)?,
        learning_rate: res.or("learning_rate", g.learning_rate, d.learning_rate)?,
        seed,
        min_word_count: res.or("min_count", g.min_count, d.min_word_count)?,
    };
    cfg.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(cfg)
}

fn score_options(res: &mut Resolver, s: &ScoreArgs, seed: u64) -> Result<WeatOptions> {
    let exact = res.switch("exact_p", s.exact_p)?;
    let sampled = res.optional::<usize>("sampled_p", s.sampled_p)?;
    let p_value = match (exact, sampled) {
        (true, Some(_)) => {
            return Err(Usage("--exact-p and --sampled-p are mutually exclusive".into()).into())
        }
        (false, Some(0)) => return Err(Usage("--sampled-p needs at least one draw".into()).into()),
        (true, None) => PValueMode::Exact,
        (false, Some(draws)) => PValueMode::Sampled { draws, seed },
        (false, None) => PValueMode::None,
    };
    Ok(WeatOptions {
        lookup: res.or("lookup", s.lookup, LookupPolicy::default())?,
        p_value,
        strict_sizes: res.switch("strict_sizes", s.strict_sizes)?,
    })
}

fn out_dir(res: &mut Resolver, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
    let dir = res.optional::<PathBuf>("out", flag)?;
    if let Some(d) = &dir {
        fs::create_dir_all(d).map_err(|e| weatkit::Error::io(d, e))?;
    }
    Ok(dir)
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| weatkit::Error::io(path, e))?;
    Ok(())
}

/// Manifest path for a single-file output: `r.json` -> `r.manifest.json`.
fn sidecar(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    path.with_file_name(format!("{stem}.manifest.json"))
}

fn cooccur_stage(
    dir: &Path,
    corpus: &Corpus,
    battery: &[WeatTest],
    profile: Profile,
    workers: usize,
) -> Result<(weatkit::CooccurrenceReport, Vec<PathBuf>)> {
    let report = scan_with_profile(corpus, battery, workers, profile);
    let (json, csv) = (dir.join(COOCCUR_JSON), dir.join(COOCCUR_CSV));
    write_report(&json, &report)?;
    write_report(&csv, &report)?;
    Ok((report, vec![json, csv]))
}

fn glove_stage(dir: &Path, corpus: &Corpus, cfg: &TrainConfig) -> Result<Vec<PathBuf>> {
    let cooc = build_cooc(corpus, cfg)?;
    info!(
        "co-occurrence matrix: {} words, {} cells",
        cooc.vocabulary.len(),
        cooc.nnz()
    );
    let out = train_labeled(&cooc, cfg, &corpus.provenance.label())?;
    let (vectors, log) = (dir.join(VECTORS), dir.join(TRAIN_LOG));
    out.table.save(&vectors)?;
    write_text(&log, &log_csv(&out.log))?;
    if let (Some(first), Some(last)) = (out.log.first(), out.log.last()) {
        info!("loss {:.6} -> {:.6}", first.mean_loss, last.mean_loss);
    }
    Ok(vec![vectors, log])
}

fn weat_stage(vectors: &Path, battery: &[WeatTest], opts: &WeatOptions) -> Result<SuiteReport> {
    let table = load_table(vectors)?;
    Ok(run_suite(battery, &table, opts))
}

fn emit<R: Render + ?Sized>(report: &R, format: Format) -> Result<()> {
    print!("{}", render(report, format)?);
    Ok(())
}

pub fn dispatch(command: Command, config: Option<&Path>, name: &'static str) -> Result<()> {
    let config = ConfigFile::load(config)?;
    let mut run = Run {
        command: name,
        config: &config,
        res: Resolver::new(&config),
        started: now(),
    };
    match command {
        Command::Cooccur(a) => cooccur(&mut run, a),
        Command::Subsets(a) => subsets(&mut run, a),
        Command::GloveTrain(a) => glove_train(&mut run, a),
        Command::Weat(a) => weat(&mut run, a),
        Command::Compare(a) => compare(&mut run, a),
        Command::Audit(a) => audit(&mut run, a),
    }
}

fn cooccur(run: &mut Run, a: CooccurArgs) -> Result<()> {
    let res = &mut run.res;
    let (corpus, corpus_path) = load_corpus(res, &a.corpus)?;
    let battery = load_battery(res, a.common.battery.clone())?;
    let (seed, workers) = seed_and_workers(res, &a.common)?;
    let profile = res.or("profile", a.profile, Profile::Matching)?;
    let Some(dir) = out_dir(res, a.out)? else {
        let format = res.or("emit", a.emit, Format::Csv)?;
        return emit(
            &scan_with_profile(&corpus, &battery.tests, workers, profile),
            format,
        );
    };
    let (report, outputs) = cooccur_stage(&dir, &corpus, &battery.tests, profile, workers)?;
    info!(
        "{} co-occurrences in {} sentences",
        report.total, report.sentences
    );
    let mut m = run.manifest(seed, Some(&battery))?;
    m.add_input(&corpus_path)?;
    finish(m, &outputs, &dir.join(MANIFEST))
}

fn subsets(run: &mut Run, a: SubsetsArgs) -> Result<()> {
    let res = &mut run.res;
    let (corpus, corpus_path) = load_corpus(res, &a.corpus)?;
    let battery = load_battery(res, a.common.battery.clone())?;
    let (seed, workers) = seed_and_workers(res, &a.common)?;
    let bands = BandTable(
        RatingAxis::ALL
            .iter()
            .map(|&axis| corpus.band_counts(axis))
            .collect(),
    );
    let matrix = subset_matrix(&corpus, &battery.tests, &corpus.rated_axes(), workers)?;
    let Some(dir) = out_dir(res, a.out)? else {
        let format = res.or("emit", a.emit, Format::Csv)?;
        emit(&bands, format)?;
        println!();
        return emit(&matrix, format);
    };
    let outputs = vec![
        dir.join("bands.csv"),
        dir.join("matrix.csv"),
        dir.join("matrix.json"),
    ];
    write_report(&outputs[0], &bands)?;
    write_report(&outputs[1], &matrix)?;
    write_report(&outputs[2], &matrix)?;
    let mut m = run.manifest(seed, Some(&battery))?;
    m.add_input(&corpus_path)?;
    finish(m, &outputs, &dir.join(MANIFEST))
}

fn glove_train(run: &mut Run, a: GloveArgs) -> Result<()> {
    let res = &mut run.res;
    let (corpus, corpus_path) = load_corpus(res, &a.corpus)?;
    let (seed, workers) = seed_and_workers(res, &a.common)?;
    let cfg = train_config(res, &a.glove, seed, workers)?;
    let dir = out_dir(res, a.out)?.ok_or_else(|| Usage("glove-train needs --out DIR".into()))?;
    if corpus.is_empty() {
        return Err(Usage(format!("{} has no reviews", corpus.provenance.label())).into());
    }
    let outputs = glove_stage(&dir, &corpus, &cfg)?;
    let mut m = run.manifest(seed, None)?;
    m.add_input(&corpus_path)?;
    finish(m, &outputs, &dir.join(MANIFEST))
}

fn weat(run: &mut Run, a: WeatArgs) -> Result<()> {
    let res = &mut run.res;
    let vectors: PathBuf = res.required("embeddings", a.embeddings)?;
    let battery = load_battery(res, a.common.battery.clone())?;
    let (seed, _) = seed_and_workers(res, &a.common)?;
    let opts = score_options(res, &a.score, seed)?;
    let report = weat_stage(&vectors, &battery.tests, &opts)?;
    info!(
        "{} of {} tests valid",
        report.valid_count(),
        report.results.len()
    );
    let Some(out) = res.optional::<PathBuf>("out", a.out)? else {
        let format = res.or("emit", a.emit, Format::Csv)?;
        return emit(&report, format);
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| weatkit::Error::io(parent, e))?;
    }
    write_report(&out, &report)?;
    let mut m = run.manifest(seed, Some(&battery))?;
    m.add_input(&vectors)?;
    finish(m, std::slice::from_ref(&out), &sidecar(&out))
}

/// A suite report file holds one report or an array of them.
fn read_suites(path: &Path) -> Result<Vec<SuiteReport>> {
    let raw = fs::read_to_string(path).map_err(|e| weatkit::Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(weatkit::Error::from)
        .with_context(|| format!("parsing {}", path.display()))?;
    let suites = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|s| vec![s])
    }
    .map_err(weatkit::Error::from)
    .with_context(|| format!("{} is not a suite report", path.display()))?;
    Ok(suites)
}

fn compare(run: &mut Run, a: CompareArgs) -> Result<()> {
    let before = read_suites(&a.before)?;
    let after = read_suites(&a.after)?;
    if before.len() != after.len() {
        return Err(weatkit::Error::Weat(format!(
            "{} holds {} reports but {} holds {}",
            a.before.display(),
            before.len(),
            a.after.display(),
            after.len()
        ))
        .into());
    }
    let deltas = DeltaTable(
        before
            .iter()
            .zip(&after)
            .map(|(b, a)| diff_suites(b, a))
            .collect::<weatkit::Result<_>>()?,
    );
    let res = &mut run.res;
    let Some(out) = res.optional::<PathBuf>("out", a.out)? else {
        let format = res.or("emit", a.emit, Format::Csv)?;
        return emit(&deltas, format);
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| weatkit::Error::io(parent, e))?;
    }
    write_report(&out, &deltas)?;
    let seed = res.or("seed", None, TrainConfig::default().seed)?;
    let mut m = run.manifest(seed, None)?;
    m.add_input(&a.before)?;
    m.add_input(&a.after)?;
    finish(m, std::slice::from_ref(&out), &sidecar(&out))
}

/// Subsets covered by `audit`, with the directory name used for each.
fn audit_plan(corpus: &Corpus) -> (Vec<(String, Corpus)>, Vec<serde_json::Value>) {
    let mut plan = vec![("overall".to_string(), corpus.clone())];
    let mut skipped = Vec::new();
    for spec in SubsetSpec::all() {
        match corpus.filter_subset(spec) {
            Ok(sub) => plan.push((spec.label(), sub)),
            Err(e) => skipped.push(json!({ "subset": spec.label(), "reason": e.to_string() })),
        }
    }
    for gender in [Gender::Male, Gender::Female] {
        plan.push((format!("gender-{gender}"), corpus.filter_gender(gender)));
    }
    plan.retain(|(label, sub)| {
        if sub.is_empty() {
            skipped.push(json!({ "subset": label, "reason": "no reviews" }));
            false
        } else {
            true
        }
    });
    (plan, skipped)
}

fn audit(run: &mut Run, a: AuditArgs) -> Result<()> {
    let res = &mut run.res;
    let corpus_args = CorpusArgs {
        corpus: a.corpus,
        format: a.format,
        ..CorpusArgs::default()
    };
    let (corpus, corpus_path) = load_corpus(res, &corpus_args)?;
    let battery = load_battery(res, a.common.battery.clone())?;
    let (seed, workers) = seed_and_workers(res, &a.common)?;
    let profile = res.or("profile", a.profile, Profile::Matching)?;
    let cfg = train_config(res, &a.glove, seed, workers)?;
    let opts = score_options(res, &a.score, seed)?;
    let root = out_dir(res, a.out)?.ok_or_else(|| Usage("audit needs --out DIR".into()))?;

    let mut outputs = Vec::new();
    let subsets_dir = root.join("subsets");
    fs::create_dir_all(&subsets_dir).map_err(|e| weatkit::Error::io(&subsets_dir, e))?;
    let bands = BandTable(
        RatingAxis::ALL
            .iter()
            .map(|&axis| corpus.band_counts(axis))
            .collect(),
    );
    let matrix = subset_matrix(&corpus, &battery.tests, &corpus.rated_axes(), workers)?;
    for (name, body) in [
        ("bands.csv", render(&bands, Format::Csv)?),
        ("matrix.csv", render(&matrix, Format::Csv)?),
        ("matrix.json", render(&matrix, Format::Json)?),
    ] {
        let path = subsets_dir.join(name);
        write_text(&path, &body)?;
        outputs.push(path);
    }

    let (plan, mut skipped) = audit_plan(&corpus);
    let ids = display_order(battery.tests.iter().map(|t| t.id));
    let mut summary = format!(
        "subset,reviews,sentences,cooccurrences,valid_tests,{}\n",
        ids.iter()
            .map(|id| format!("d_{id}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    for (label, sub) in &plan {
        info!("audit: {label} ({} reviews)", sub.len());
        let dir = root.join(label);
        fs::create_dir_all(&dir).map_err(|e| weatkit::Error::io(&dir, e))?;
        let (report, mut produced) = cooccur_stage(&dir, sub, &battery.tests, profile, workers)?;
        let suite = match glove_stage(&dir, sub, &cfg) {
            Ok(files) => {
                produced.extend(files);
                let suite = weat_stage(&dir.join(VECTORS), &battery.tests, &opts)?;
                for name in [WEAT_JSON, WEAT_CSV] {
                    write_report(dir.join(name), &suite)?;
                    produced.push(dir.join(name));
                }
                Some(suite)
            }
            Err(e)
                if matches!(
                    e.downcast_ref::<weatkit::Error>(),
                    Some(weatkit::Error::Training(_))
                ) =>
            {
                warn!("audit: {label}: no embeddings: {e:#}");
                skipped.push(
                    json!({ "subset": label, "stage": "glove-train", "reason": format!("{e:#}") }),
                );
                None
            }
            Err(e) => return Err(e),
        };
        let cells: Vec<String> = ids
            .iter()
            .map(|&id| {
                suite
                    .as_ref()
                    .and_then(|s| s.result(id))
                    .filter(|r| r.valid)
                    .and_then(|r| r.effect_size)
                    .map(fmt_num)
                    .unwrap_or_default()
            })
            .collect();
        summary.push_str(&format!(
            "{label},{},{},{},{},{}\n",
            sub.len(),
            report.sentences,
            report.total,
            suite.as_ref().map_or(0, SuiteReport::valid_count),
            cells.join(",")
        ));

        let mut m = run.manifest(seed, Some(&battery))?;
        m.add_input(&corpus_path)?;
        m.config.insert("audit_subset".into(), json!(label));
        m.config
            .insert("filters".into(), json!(sub.provenance.filters));
        finish(m, &produced, &dir.join(MANIFEST))?;
        outputs.extend(produced);
    }
    let summary_path = root.join("summary.csv");
    write_text(&summary_path, &summary)?;
    outputs.push(summary_path);

    let mut m = run.manifest(seed, Some(&battery))?;
    m.add_input(&corpus_path)?;
    m.config.insert("skipped".into(), json!(skipped));
    finish(m, &outputs, &root.join(MANIFEST))
}
