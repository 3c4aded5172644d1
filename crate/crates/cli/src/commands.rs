//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use turnwise::chat::ChatClient;
use turnwise::metrics::{report_csv, report_transcripts, survival_csv, survival_svg, MetricsReport};
use turnwise::script::{generate_script, qc_filter, write_script_jsonl, QcOutcome, ScriptError, TopicSpec, QC_WINDOW};
use turnwise::session::{
    run_session, session_id, ChatAdapter, ModelAdapter, OracleAgent, SessionConfig, SessionTranscript, Termination,
};

use crate::config::RunConfig;

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    DataError,
    TransportError,
}

/// An error the user can fix by changing the command line.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Serialize)]
struct QcEntry {
    seed: u64,
    #[serde(flatten)]
    outcome: QcOutcome,
}

/// The seed cohort after QC: rejected seeds are replaced by the next
/// unused seeds in order until the requested number pass.
struct Cohort {
    selected: Vec<u64>,
    requested: usize,
    log: Vec<QcEntry>,
}

fn qc_seed(corpus: &[TopicSpec], session: &SessionConfig, seed: u64) -> Result<QcOutcome> {
    let mut evolution = session.evolution.clone();
    evolution.max_turns_cap = evolution.max_turns_cap.max(QC_WINDOW as u32);
    match generate_script(corpus, &evolution, seed, QC_WINDOW as u32) {
        Ok(plans) => Ok(qc_filter(&plans)?),
        Err(ScriptError::SamplingExhausted(turn)) => Ok(QcOutcome::Reject {
            mean: 0.0,
            reason: format!("no admissible instruction change at turn {turn}"),
        }),
        Err(e) => Err(e.into()),
    }
}

fn select_cohort(config: &RunConfig, corpus: &[TopicSpec]) -> Result<Cohort> {
    let (initial, mut next) = config.seed_plan();
    let requested = initial.len();
    let budget = requested.max(10) * 20;
    let mut queue = initial.into_iter();
    let mut cohort = Cohort { selected: Vec::new(), requested, log: Vec::new() };
    let mut tried = 0;
    while cohort.selected.len() < requested && tried < requested + budget {
        let seed = queue.next().unwrap_or_else(|| {
            next += 1;
            next - 1
        });
        tried += 1;
        let outcome = qc_seed(corpus, &config.session, seed)?;
        if outcome.passed() {
            cohort.selected.push(seed);
        }
        cohort.log.push(QcEntry { seed, outcome });
    }
    Ok(cohort)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn generate(config: &RunConfig, turns: u32, out: &Path) -> Result<Status> {
    let cap = config.session.evolution.max_turns_cap;
    if turns == 0 || turns > cap {
        return Err(UsageError(format!("--turns must lie in 1..={cap}")).into());
    }
    let corpus = config.corpus()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cohort = select_cohort(config, &corpus)?;
    for entry in &cohort.log {
        match &entry.outcome {
            QcOutcome::Pass { mean } => println!("seed {}: pass (mean {mean:.2})", entry.seed),
            QcOutcome::Reject { reason, .. } => println!("seed {}: reject ({reason})", entry.seed),
        }
    }
    for seed in &cohort.selected {
        let plans = generate_script(&corpus, &config.session.evolution, *seed, turns)?;
        let mut buf = Vec::new();
        write_script_jsonl(&plans, &mut buf)?;
        write_file(&out.join(format!("script-{seed:06}.jsonl")), buf)?;
    }
    write_file(&out.join("qc.json"), serde_json::to_string_pretty(&cohort.log)? + "\n")?;
    println!("{} of {} requested scripts written to {}", cohort.selected.len(), cohort.requested, out.display());
    if cohort.selected.len() < cohort.requested {
        eprintln!("error: too many seeds were rejected by QC");
        return Ok(Status::DataError);
    }
    Ok(Status::Success)
}

fn build_adapter(name: &str, config: &RunConfig) -> Result<Box<dyn ModelAdapter>> {
    if let Ok(oracle) = OracleAgent::parse(name) {
        return Ok(Box::new(oracle));
    }
    match config.adapters.get(name) {
        Some(endpoint) => Ok(Box::new(ChatAdapter(ChatClient::new(endpoint.clone())))),
        None => Err(UsageError(format!(
            "unknown adapter {name:?}: expected always-pass, always-fail, bernoulli:P[:SEED], pattern:SF... or a name under [adapters]"
        ))
        .into()),
    }
}

fn transcript_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("{}.jsonl", session_id(seed)))
}

fn already_done(path: &Path, adapter: &str, session: &SessionConfig) -> bool {
    match SessionTranscript::load(path) {
        Ok(t) => {
            t.header.adapter == adapter
                && &t.header.config == session
                && !matches!(t.termination(), Termination::TransportFailure { .. })
        }
        Err(_) => false,
    }
}

#[derive(Debug, Default)]
struct RunSummary {
    skipped: usize,
    exhausted: usize,
    capped: usize,
    transport: usize,
    errors: usize,
}

fn run_sessions(config: &RunConfig, adapter_name: &str, out: &Path) -> Result<(RunSummary, Vec<PathBuf>)> {
    let corpus = config.corpus()?;
    let adapter = build_adapter(adapter_name, config)?;
    let paraphraser = config.paraphrase_endpoint.clone().map(ChatClient::new);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cohort = select_cohort(config, &corpus)?;
    if cohort.selected.len() < cohort.requested {
        bail!("only {} of {} seeds passed QC", cohort.selected.len(), cohort.requested);
    }
    write_file(&out.join("config.toml"), config.to_toml()?)?;
    let adapter_id = adapter.id();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build()?;
    let results: Vec<Result<Option<Termination>, String>> = pool.install(|| {
        cohort
            .selected
            .par_iter()
            .map(|seed| {
                let path = transcript_path(out, *seed);
                if already_done(&path, &adapter_id, &config.session) {
                    info!("seed {seed}: transcript exists, skipping");
                    return Ok(None);
                }
                let paraphraser = paraphraser.as_ref().map(|c| c as &dyn turnwise::chat::ChatBackend);
                let transcript = run_session(&corpus, &config.session, *seed, adapter.as_ref(), paraphraser)
                    .map_err(|e| format!("seed {seed}: {e}"))?;
                transcript.save(&path).map_err(|e| format!("seed {seed}: {e}"))?;
                info!("seed {seed}: {} turns, {:?}", transcript.records.len(), transcript.termination());
                Ok(Some(transcript.header.termination))
            })
            .collect()
    });
    let mut summary = RunSummary::default();
    for r in results {
        match r {
            Ok(None) => summary.skipped += 1,
            Ok(Some(Termination::PatienceExhausted)) => summary.exhausted += 1,
            Ok(Some(Termination::CapReached)) => summary.capped += 1,
            Ok(Some(Termination::TransportFailure { error })) => {
                warn!("transport failure: {error}");
                summary.transport += 1;
            }
            Err(e) => {
                eprintln!("error: {e}");
                summary.errors += 1;
            }
        }
    }
    let paths = cohort.selected.iter().map(|s| transcript_path(out, *s)).collect();
    Ok((summary, paths))
}

fn summary_status(s: &RunSummary) -> Status {
    if s.errors > 0 {
        Status::DataError
    } else if s.transport > 0 {
        Status::TransportError
    } else {
        Status::Success
    }
}

pub fn run(config: &RunConfig, adapter: &str, out: &Path) -> Result<Status> {
    let (s, _) = run_sessions(config, adapter, out)?;
    println!(
        "sessions: {} patience exhausted, {} reached cap, {} transport failures, {} errors, {} skipped",
        s.exhausted, s.capped, s.transport, s.errors, s.skipped
    );
    Ok(summary_status(&s))
}

fn load_transcripts(paths: &[PathBuf]) -> Result<Vec<SessionTranscript>> {
    paths
        .iter()
        .map(|p| SessionTranscript::load(p).with_context(|| format!("reading {}", p.display())))
        .collect()
}

fn transcripts_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("session-") && n.ends_with(".jsonl"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}

fn label_for(transcripts: &[SessionTranscript]) -> String {
    let first = transcripts.first().map(|t| t.header.adapter.clone()).unwrap_or_default();
    if transcripts.iter().all(|t| t.header.adapter == first) {
        first
    } else {
        "mixed".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScoreFormat {
    Json,
    Csv,
    Svg,
}

pub fn score(input: &Path, out: Option<&Path>, cap: Option<u32>, format: ScoreFormat) -> Result<Status> {
    let paths = transcripts_in(input)?;
    if paths.is_empty() {
        bail!("no session transcripts in {}", input.display());
    }
    let transcripts = load_transcripts(&paths)?;
    let cap = cap
        .or_else(|| transcripts.iter().map(|t| t.header.config.evolution.max_turns_cap).max())
        .unwrap_or(50);
    let excluded =
        transcripts.iter().filter(|t| matches!(t.termination(), Termination::TransportFailure { .. })).count();
    if excluded > 0 {
        warn!("{excluded} transcripts ended in a transport failure and are not scored");
    }
    let report = report_transcripts(&transcripts, cap)?;
    let label = label_for(&transcripts);
    let out = out.unwrap_or(input);
    fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    let csv = report_csv(&[(label.clone(), report.clone())]);
    write_file(&out.join("report.json"), &json)?;
    write_file(&out.join("report.csv"), &csv)?;
    write_file(&out.join("survival.csv"), survival_csv(&report.survival))?;
    match format {
        ScoreFormat::Json => print!("{json}"),
        ScoreFormat::Csv => print!("{csv}"),
        ScoreFormat::Svg => {
            let path = out.join("survival.svg");
            write_file(&path, survival_svg(&[(label, report.survival.clone())]))?;
            println!("{}", path.display());
        }
    }
    Ok(Status::Success)
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    patience_max: u32,
    report: MetricsReport,
}

pub fn sweep(config: &RunConfig, adapter: &str, patience: &[u32], out: &Path) -> Result<Status> {
    if patience.is_empty() {
        return Err(UsageError("--patience needs at least one value".into()).into());
    }
    let mut entries = Vec::new();
    let mut status = Status::Success;
    let cap = config.session.evolution.max_turns_cap;
    for p in patience {
        let mut cfg = config.clone();
        cfg.session.patience_max = *p;
        cfg.validate().with_context(|| format!("patience {p}"))?;
        let dir = out.join(format!("patience-{p}"));
        let (summary, paths) = run_sessions(&cfg, adapter, &dir)?;
        if summary_status(&summary) != Status::Success {
            status = summary_status(&summary);
        }
        let transcripts = load_transcripts(&paths.into_iter().filter(|p| p.exists()).collect::<Vec<_>>())?;
        let report = report_transcripts(&transcripts, cap)?;
        entries.push(SweepEntry { patience_max: *p, report });
    }
    println!("P_max  ACT_len  ACT_acc  ACT_succ");
    for e in &entries {
        println!("{:>5}  {:>7.2}  {:>7.2}  {:>8.2}", e.patience_max, e.report.act_len, e.report.act_acc, e.report.act_succ);
    }
    let rows: Vec<(String, MetricsReport)> =
        entries.iter().map(|e| (format!("{adapter} P={}", e.patience_max), e.report.clone())).collect();
    write_file(&out.join("sweep.csv"), report_csv(&rows))?;
    write_file(&out.join("sweep.json"), serde_json::to_string_pretty(&entries)? + "\n")?;
    let series: Vec<(String, Vec<f64>)> = rows.iter().map(|(l, r)| (l.clone(), r.survival.clone())).collect();
    write_file(&out.join("sweep_survival.svg"), survival_svg(&series))?;
    Ok(status)
}
