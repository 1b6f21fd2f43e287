use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use fpvtrack_core::dataset::{auto_attributes, load_dataset, save_metadata};
use fpvtrack_core::metrics::LabelKey;
use fpvtrack_core::protocols::{Protocol, RteClock};
use fpvtrack_core::report::{
    breakdown_rows, evaluate, evaluate_tracks, format_score, ranking, recompute,
    write_report_files, BreakdownRow, EvaluateConfig, RankingRow,
};
use fpvtrack_core::synth::{demo_dataset, materialize, SynthDataset};
use fpvtrack_core::tracker::{RegistryOptions, TrackerSpec};
use fpvtrack_core::Error;

#[derive(Parser)]
#[command(
    name = "fpvtrack",
    version,
    about = "Evaluate single-object trackers on first-person video"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tracker over a dataset and store runs plus results.json
    Evaluate(EvaluateArgs),
    /// Recompute scores from stored runs and print tables
    Report(ReportArgs),
    /// Print automatic attributes, optionally writing them to meta.toml
    Attributes(AttributesArgs),
    /// Materialize a synthetic dataset
    Synth(SynthArgs),
    /// Score a tracker on interaction tracks built from detections
    TracksEval(TracksArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Ope,
    Mse,
    Rte,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Ope => Protocol::Ope,
            ProtocolArg::Mse => Protocol::Mse,
            ProtocolArg::Rte => Protocol::Rte,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KeyArg {
    Attribute,
    Verb,
    Noun,
}

impl From<KeyArg> for LabelKey {
    fn from(k: KeyArg) -> Self {
        match k {
            KeyArg::Attribute => LabelKey::Attribute,
            KeyArg::Verb => LabelKey::Verb,
            KeyArg::Noun => LabelKey::Noun,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct TrackerArgs {
    /// oracle, static, ncc, ltmu-mock, offset:<dx>,<dy>, fail-after:<frame>
    /// or external:<command>
    #[arg(long)]
    tracker: String,
    /// Seed passed to external adapters as TRACKER_SEED
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds to wait for any single adapter response
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
}

impl TrackerArgs {
    fn resolve(&self) -> Result<(TrackerSpec, RegistryOptions), Failure> {
        let spec = self
            .tracker
            .parse::<TrackerSpec>()
            .map_err(Failure::usage)?;
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(Failure::Usage(format!(
                "--timeout must be positive, got {}",
                self.timeout
            )));
        }
        let mut options = RegistryOptions::default();
        options.bridge.seed = self.seed;
        options.bridge.timeout = Duration::from_secs_f64(self.timeout);
        Ok((spec, options))
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    tracker: TrackerArgs,
    #[arg(long, value_enum)]
    protocol: ProtocolArg,
    /// Inject a constant per-frame latency (ms) instead of measuring (RTE)
    #[arg(long)]
    rte_latency: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Sequences evaluated in parallel (measured RTE always uses 1)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Name of the run directory and report rows
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum)]
    by: Option<KeyArg>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Only report this protocol
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
}

#[derive(Args)]
struct AttributesArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Store recomputed automatic attributes in each meta.toml
    #[arg(long)]
    write: bool,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["spec", "demo"]))]
struct SynthArgs {
    /// TOML file with [[sequences]] entries
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Generate this many random sequences instead of reading a spec
    #[arg(long)]
    demo: Option<usize>,
    /// Seed for --demo
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TracksArgs {
    /// CSV with sequence,frame,x,y,w,h,state rows
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    tracker: TrackerArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl Failure {
    fn usage(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::UnknownTracker(_)) => Failure::Usage(chain_message(&e)),
            _ => Failure::Runtime(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The error chain joined with `: `, skipping causes already spelled out by
/// the message above them.
fn chain_message(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let part = cause.to_string();
        if !out.contains(&part) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&part);
        }
    }
    one_line(&out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let body = text.split("\n\n").next().unwrap_or_default();
            let body = body.strip_prefix("error: ").unwrap_or(body);
            eprintln!("error: usage: {}", one_line(body));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: usage: {}", one_line(&m));
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {}", chain_message(&e));
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate(a) => run_evaluate(a),
        Command::Report(a) => run_report(a),
        Command::Attributes(a) => run_attributes(a),
        Command::Synth(a) => run_synth(a),
        Command::TracksEval(a) => run_tracks(a),
    }
}

fn print(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .context("writing to stdout")?;
    Ok(())
}

fn run_evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let (tracker, registry) = a.tracker.resolve()?;
    let protocol = Protocol::from(a.protocol);
    let clock = match a.rte_latency {
        None => RteClock::Measured,
        Some(ms) if protocol == Protocol::Rte && ms.is_finite() && ms > 0.0 => {
            RteClock::Constant(ms / 1000.0)
        }
        Some(ms) if protocol == Protocol::Rte => {
            return Err(Failure::Usage(format!(
                "--rte-latency must be positive, got {ms}"
            )));
        }
        Some(_) => {
            return Err(Failure::Usage(
                "--rte-latency only applies to --protocol rte".into(),
            ))
        }
    };
    if a.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let mut config = EvaluateConfig::new(tracker, protocol);
    config.clock = clock;
    config.jobs = a.jobs;
    config.registry = registry;
    config.label = a.label;
    let label = config.label();
    let entry = evaluate(&a.dataset, &config, &a.out)
        .with_context(|| format!("evaluating {} under {protocol}", config.tracker))?;
    let row = RankingRow {
        tracker: label,
        ss: entry.overall.ss,
        nps: entry.overall.nps,
        gsr: entry.overall.gsr,
        fps: entry.overall.fps,
    };
    print(&format!("{}\n{}\n", RankingRow::HEADER, row.to_csv()))
}

fn run_report(a: ReportArgs) -> Result<(), Failure> {
    let doc = recompute(&a.results).context("recomputing results")?;
    write_report_files(&doc, &a.results).context("writing report files")?;
    let protocols: Vec<Protocol> = match a.protocol {
        Some(p) => vec![p.into()],
        None => doc.protocols(),
    };
    let mut text = String::new();
    match (a.format, a.by.map(LabelKey::from)) {
        (Format::Csv, None) => {
            for p in protocols {
                text += &format!("# {p}\n{}\n", RankingRow::HEADER);
                for row in ranking(&doc, p) {
                    text += &(row.to_csv() + "\n");
                }
            }
        }
        (Format::Csv, Some(key)) => {
            for p in protocols {
                text += &format!("# {p}\n{}\n", BreakdownRow::header(key));
                for row in breakdown_rows(&doc, p, key) {
                    text += &(row.to_csv() + "\n");
                }
            }
        }
        (Format::Json, by) => {
            let tables: std::collections::BTreeMap<String, serde_json::Value> = protocols
                .iter()
                .map(|&p| {
                    let v = match by {
                        None => serde_json::to_value(ranking(&doc, p)),
                        Some(key) => serde_json::to_value(breakdown_rows(&doc, p, key)),
                    };
                    v.map(|v| (p.to_string(), v))
                })
                .collect::<Result<_, _>>()
                .context("serializing report")?;
            text = serde_json::to_string_pretty(&tables).context("serializing report")? + "\n";
        }
    }
    print(&text)
}

fn codes<'a>(it: impl Iterator<Item = &'a fpvtrack_core::dataset::Attribute>) -> String {
    it.map(|a| a.code()).collect::<Vec<_>>().join(" ")
}

fn run_attributes(a: AttributesArgs) -> Result<(), Failure> {
    let dataset = load_dataset(&a.dataset).context("loading dataset")?;
    let mut text = String::from("sequence,automatic,manual,changed\n");
    let mut updated = 0;
    for seq in &dataset.sequences {
        let computed = auto_attributes(seq);
        let stored = seq.attributes().iter().filter(|x| x.is_automatic());
        let changed = !stored.clone().eq(computed.iter());
        text += &format!(
            "{},{},{},{}\n",
            seq.name(),
            codes(computed.iter()),
            codes(seq.attributes().iter().filter(|x| !x.is_automatic())),
            changed
        );
        if a.write && changed {
            let fresh = seq.clone().with_auto_attributes();
            save_metadata(&dataset.root, &fresh).context("writing metadata")?;
            updated += 1;
        }
    }
    print(&text)?;
    if a.write {
        log::warn!("updated metadata of {updated} sequence(s)");
    }
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<(), Failure> {
    let spec = match (&a.spec, a.demo) {
        (Some(path), _) => read_spec(path)?,
        (None, Some(n)) => demo_dataset(n, a.seed),
        (None, None) => unreachable!("clap requires --spec or --demo"),
    };
    let seqs = materialize(&spec, &a.out).context("materializing synthetic dataset")?;
    let frames: usize = seqs.iter().map(|s| s.len()).sum();
    print(&format!(
        "wrote {} sequence(s), {frames} frame(s) to {}\n",
        seqs.len(),
        a.out.display()
    ))
}

fn read_spec(path: &Path) -> Result<SynthDataset, Failure> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SynthDataset::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn run_tracks(a: TracksArgs) -> Result<(), Failure> {
    let (tracker, registry) = a.tracker.resolve()?;
    let report = evaluate_tracks(&a.dataset, &a.detections, &tracker, &registry)
        .context("scoring interaction tracks")?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&report).context("serializing report")? + "\n",
        Format::Csv => {
            let mut t = String::from("sequence,tracks,score\n");
            for (name, s) in &report.sequences {
                t += &format!("{name},{},{}\n", s.per_track.len(), format_score(s.overall));
            }
            t + &format!(
                "overall,{},{}\n",
                report.tracks,
                format_score(report.overall)
            )
        }
    };
    print(&text)
}
