use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};

mod run;
mod settings;

use settings::Usage;

#[derive(Parser, Debug)]
#[command(
    name = "weatkit",
    version,
    about = "WEAT bias audits for German peer-review corpora"
)]
struct Cli {
    /// Flat TOML file supplying defaults for any flag (flags win).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count sentences where a target and an attribute word of a test co-occur.
    Cooccur(CooccurArgs),
    /// Per-axis rating band counts and the per-band co-occurrence matrix.
    Subsets(SubsetsArgs),
    /// Train GloVe vectors on a corpus or one of its subsets.
    GloveTrain(GloveArgs),
    /// Score a vector table against the nine-test battery.
    Weat(WeatArgs),
    /// Effect-size deltas (after - before) between suite reports.
    Compare(CompareArgs),
    /// Co-occurrence, GloVe and WEAT over the corpus and every subset.
    Audit(AuditArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CorpusArgs {
    /// Review corpus (JSONL or CSV).
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Corpus format; inferred from the extension when omitted.
    #[arg(long, value_name = "jsonl|csv")]
    pub format: Option<weatkit::CorpusFormat>,
    /// Restrict to one rating band, e.g. `helpful:high`.
    #[arg(long, value_name = "AXIS:BAND")]
    pub subset: Option<weatkit::SubsetSpec>,
    /// Restrict to reviews by authors of one gender.
    #[arg(long, value_name = "male|female|unspecified")]
    pub gender: Option<weatkit::Gender>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Battery JSON file; the built-in German battery when omitted.
    #[arg(long, value_name = "FILE")]
    pub battery: Option<PathBuf>,
    /// Top-level seed for every random draw.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GloveParams {
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Drop words seen fewer times than this.
    #[arg(long)]
    pub min_count: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ScoreArgs {
    /// Exact permutation p-values (at most 16 target words per test).
    #[arg(long, conflicts_with = "sampled_p")]
    pub exact_p: bool,
    /// Sampled permutation p-values with N draws.
    #[arg(long, value_name = "N")]
    pub sampled_p: Option<usize>,
    /// Vector lookup: `casefold` (default) or `strict`.
    #[arg(long)]
    pub lookup: Option<weatkit::LookupPolicy>,
    /// Reject tests whose target lists end up with different sizes.
    #[arg(long)]
    pub strict_sizes: bool,
}

#[derive(Args, Debug)]
pub struct CooccurArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Tokenizer profile: `matching` keeps stop-words, `training` drops them.
    #[arg(long)]
    pub profile: Option<weatkit::Profile>,
    /// Output directory; prints the count table when omitted.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Format for stdout output.
    #[arg(long, value_name = "json|csv|markdown")]
    pub emit: Option<weatkit::Format>,
}

#[derive(Args, Debug)]
pub struct SubsetsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory; prints the band table and matrix when omitted.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "json|csv|markdown")]
    pub emit: Option<weatkit::Format>,
}

#[derive(Args, Debug)]
pub struct GloveArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub glove: GloveParams,
    /// Output directory for `vectors.vec`, `train_log.csv` and the manifest.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WeatArgs {
    /// Vector table in the text vector format.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    /// Report file (.json, .csv or .md); prints when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "json|csv|markdown")]
    pub emit: Option<weatkit::Format>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Suite report (or JSON array of reports) before the change.
    pub before: PathBuf,
    /// Suite report (or array) after; paired with `before` by position.
    pub after: PathBuf,
    /// Delta file (.json, .csv or .md); prints CSV when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "json|csv|markdown")]
    pub emit: Option<weatkit::Format>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "jsonl|csv")]
    pub format: Option<weatkit::CorpusFormat>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub glove: GloveParams,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long)]
    pub profile: Option<weatkit::Profile>,
    /// Output directory, one sub-directory per subset.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause
            .downcast_ref::<weatkit::Error>()
            .is_some_and(weatkit::Error::is_io)
            || cause.downcast_ref::<std::io::Error>().is_some()
    });
    if io {
        2
    } else {
        1
    }
}

fn subcommand_name(command: &Command) -> &'static str {
    match command {
        Command::Cooccur(_) => "cooccur",
        Command::Subsets(_) => "subsets",
        Command::GloveTrain(_) => "glove-train",
        Command::Weat(_) => "weat",
        Command::Compare(_) => "compare",
        Command::Audit(_) => "audit",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    let name = subcommand_name(&cli.command);
    match run::dispatch(cli.command, cli.config.as_deref(), name) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<Usage>().is_some() {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
