//! `pqeval`: evaluate, validate and rank panoptic segmentation submissions.
//!
//! Exit codes: 0 success, 1 evaluation faults, 2 usage errors.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pqeval::dataset::{write_synthetic, DatasetLayout};
use pqeval::evaluate::{evaluate_submission, EvalError, GroundTruth};
use pqeval::harness::{
    validate_submission, Harness, HarnessError, Phase, PhaseConfig, PhaseSetup,
    SubmissionArchive, SubmissionStatus,
};
use pqeval::labels::{load_manifest, CategoryTable, PanopticLabelMap};
use pqeval::matching::{match_pair, MatchError, MatchResult};
use pqeval::metrics::{rank_submissions, WeightConfig, WeightedScores};
use pqeval::oracle::{differential_check, Perturbation, SynthSpec};
use pqeval::render::{render_leaderboard, render_report, Format};

#[derive(Parser)]
#[command(name = "pqeval", version, about = "Panoptic quality evaluation with condition-weighted scoring")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PQEVAL_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
    Markdown,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Markdown => Format::Markdown,
        }
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Dataset {
    /// Ground-truth directory; manifest `gt_path`s are relative to it.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Category table JSON (default: the 19-class taxonomy).
    #[arg(long)]
    categories: Option<PathBuf>,
    /// Condition weights JSON (default: clear/day 0.5, others 1.0).
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Score a prediction directory or .zip against ground truth.
    Evaluate {
        #[command(flatten)]
        data: Dataset,
        /// Prediction directory or .zip archive.
        #[arg(long)]
        pred: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Rank teams from report files (full reports or {team, wpq, wsq, wrq}).
    Rank {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// List everything wrong with a submission.
    Validate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        categories: Option<PathBuf>,
        /// Also check prediction sizes against this ground-truth directory.
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Write a synthetic dataset: gt/, pred/, manifest.json, categories.json.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        scenes: usize,
        #[arg(long, default_value_t = 64)]
        width: u32,
        #[arg(long, default_value_t = 32)]
        height: u32,
        #[arg(long, default_value_t = 8)]
        segments: usize,
        #[arg(long, default_value_t = 19)]
        classes: u32,
        #[arg(long, default_value_t = 0.0)]
        void_fraction: f64,
        /// Prediction perturbation in [0, 1]; 0 copies the ground truth.
        #[arg(long, default_value_t = 0.0)]
        strength: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the matcher with the brute-force reference on random scenes.
    OracleCheck {
        #[arg(long, default_value_t = 1000)]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Self-test: break the matcher on purpose.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Run a submission through the challenge harness (quota, validation, scoring).
    Submit {
        /// Harness directory holding the ledger and reports.
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        team: String,
        #[arg(long)]
        phase: Phase,
        /// phase.json (default: the preset for --phase).
        #[arg(long)]
        phase_config: Option<PathBuf>,
        #[command(flatten)]
        data: Dataset,
        /// Prediction directory or .zip archive.
        submission: PathBuf,
    },
    /// Print the harness leaderboard of a phase.
    Leaderboard {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        phase: Phase,
        #[command(flatten)]
        output: Output,
    },
}

/// Bad input files or arguments; exits with 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn read_input(path: &Path, what: &str) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(usage(format!("{what} not found: {}", path.display())));
    }
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_categories(path: Option<&Path>) -> Result<CategoryTable> {
    match path {
        None => Ok(CategoryTable::default()),
        Some(p) => CategoryTable::from_json(&read_input(p, "categories")?)
            .map_err(|e| usage(format!("{}: {e}", p.display()))),
    }
}

fn load_weights(path: Option<&Path>) -> Result<WeightConfig> {
    match path {
        None => Ok(WeightConfig::default()),
        Some(p) => WeightConfig::from_json(&read_input(p, "weights")?)
            .map_err(|e| usage(format!("{}: {e}", p.display()))),
    }
}

fn load_ground_truth(data: &Dataset) -> Result<(GroundTruth, WeightConfig)> {
    let manifest = load_manifest(&read_input(&data.manifest, "manifest")?)
        .map_err(|e| usage(format!("{}: {e}", data.manifest.display())))?;
    if !data.gt.is_dir() {
        return Err(usage(format!("ground-truth directory not found: {}", data.gt.display())));
    }
    let cats = load_categories(data.categories.as_deref())?;
    Ok((GroundTruth::new(manifest, &data.gt, cats), load_weights(data.weights.as_deref())?))
}

fn open_archive(path: &Path) -> Result<SubmissionArchive> {
    if !path.exists() {
        return Err(usage(format!("submission not found: {}", path.display())));
    }
    SubmissionArchive::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_faults(faults: &[pqeval::harness::Fault]) {
    for f in faults {
        eprintln!("fault: {f}");
    }
    eprintln!("{} fault(s)", faults.len());
}

fn cmd_evaluate(data: &Dataset, pred: &Path, output: &Output) -> Result<ExitCode> {
    let (gt, weights) = load_ground_truth(data)?;
    let archive = open_archive(pred)?;
    match evaluate_submission(&gt, &archive, &weights) {
        Ok(eval) => {
            for w in &eval.warnings {
                eprintln!("warning: {w}");
            }
            emit(
                &render_report(&eval.report, Some(&gt.categories), output.format.into()),
                output.out.as_deref(),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Err(EvalError::Faults(faults)) => {
            print_faults(&faults);
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.into()),
    }
}

/// Reads `{team?, wpq, wsq, wrq}` out of a report file; the team falls back
/// to the file stem.
fn read_scores(path: &Path) -> Result<(String, WeightedScores)> {
    let bytes = read_input(path, "report")?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let field = |k: &str| {
        value
            .get(k)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| usage(format!("{}: missing numeric `{k}`", path.display())))
    };
    let scores = WeightedScores {
        wpq: field("wpq")?,
        wsq: field("wsq")?,
        wrq: field("wrq")?,
    };
    let team = match value.get("team").and_then(serde_json::Value::as_str) {
        Some(t) => t.to_string(),
        None => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| anyhow!("{}: no team name", path.display()))?,
    };
    Ok((team, scores))
}

fn cmd_rank(reports: &[PathBuf], output: &Output) -> Result<ExitCode> {
    let entries = reports.iter().map(|p| read_scores(p)).collect::<Result<Vec<_>>>()?;
    let rows = rank_submissions(&entries);
    emit(&render_leaderboard(&rows, output.format.into()), output.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(
    pred: &Path,
    manifest: &Path,
    categories: Option<&Path>,
    gt_dir: Option<&Path>,
) -> Result<ExitCode> {
    let scenes = load_manifest(&read_input(manifest, "manifest")?)
        .map_err(|e| usage(format!("{}: {e}", manifest.display())))?;
    let cats = load_categories(categories)?;
    let archive = open_archive(pred)?;
    let gt = gt_dir.map(|d| GroundTruth::new(scenes.clone(), d, cats.clone()));
    let faults = validate_submission(&archive, &scenes, &cats, gt.as_ref());
    if faults.is_empty() {
        println!("ok: {} scenes", scenes.len());
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &faults {
            println!("{f}");
        }
        eprintln!("{} fault(s)", faults.len());
        Ok(ExitCode::from(1))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    out: &Path,
    scenes: usize,
    width: u32,
    height: u32,
    segments: usize,
    classes: u32,
    void_fraction: f64,
    strength: f64,
    seed: u64,
) -> Result<ExitCode> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(usage(format!("--strength {strength} outside [0, 1]")));
    }
    let spec = SynthSpec {
        width,
        height,
        n_segments: segments,
        n_classes: classes,
        void_fraction,
        seed,
        perturbation: Perturbation::from_strength(strength, segments),
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let layout = DatasetLayout::new(out);
    let manifest = write_synthetic(&layout, &spec, scenes)?;
    eprintln!("wrote {} scenes to {}", manifest.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

/// Drops one true positive per class: a deliberately wrong matcher for
/// checking that `oracle-check` notices.
fn faulty_match(gt: &PanopticLabelMap, pred: &PanopticLabelMap) -> Result<MatchResult, MatchError> {
    let mut r = match_pair(gt, pred)?;
    for m in r.classes.values_mut() {
        if let Some(t) = m.tp.pop() {
            m.fn_.push(t.gt_id);
            m.fp.push(t.pred_id);
        }
    }
    Ok(r)
}

fn cmd_oracle_check(cases: u64, seed: u64, inject_fault: bool) -> Result<ExitCode> {
    if cases == 0 {
        eprintln!("warning: 0 cases requested, nothing checked");
    }
    let summary = if inject_fault {
        differential_check(cases, seed, faulty_match)
    } else {
        differential_check(cases, seed, match_pair)
    };
    for m in &summary.mismatches {
        println!("mismatch seed {}: {}", m.seed, m.detail);
    }
    println!(
        "{} cases, {} mismatches (TP {}, FP {}, FN {})",
        summary.cases,
        summary.mismatches.len(),
        summary.tp,
        summary.fp,
        summary.fn_
    );
    Ok(if summary.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_submit(
    root: &Path,
    team: &str,
    phase: Phase,
    phase_config: Option<&Path>,
    data: &Dataset,
    submission: &Path,
) -> Result<ExitCode> {
    let config = match phase_config {
        Some(p) => PhaseConfig::from_json(&read_input(p, "phase config")?)
            .map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => match phase {
            Phase::Validation => PhaseConfig::validation(),
            Phase::Final => PhaseConfig::final_phase(),
        },
    };
    if config.phase != phase {
        return Err(usage(format!("phase config is for {}, not {phase}", config.phase)));
    }
    let (ground_truth, weights) = load_ground_truth(data)?;
    let archive = open_archive(submission)?;
    let harness = Harness::open(
        root,
        vec![PhaseSetup {
            config,
            ground_truth,
            weights,
        }],
    )?;
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    match harness.submit(team, phase, &archive, ts) {
        Ok(record) => match record.status {
            SubmissionStatus::Scored => {
                let r = record.report.as_ref().expect("scored record has a report");
                println!(
                    "{team} {phase} #{}: wPQ {:.2} wSQ {:.2} wRQ {:.2}",
                    record.sequence_no, r.wpq, r.wsq, r.wrq
                );
                Ok(ExitCode::SUCCESS)
            }
            SubmissionStatus::Rejected(reason) => {
                eprintln!("rejected (quota not used): {reason}");
                Ok(ExitCode::from(1))
            }
            SubmissionStatus::Accepted => bail!("submission accepted but not scored"),
        },
        Err(e @ HarnessError::QuotaExhausted { .. }) => {
            eprintln!("denied: {e}");
            Ok(ExitCode::from(1))
        }
        Err(HarnessError::InvalidTeam(t)) => Err(usage(format!("invalid team name `{t}`"))),
        Err(e) => Err(e.into()),
    }
}

fn cmd_leaderboard(root: &Path, phase: Phase, output: &Output) -> Result<ExitCode> {
    if !root.is_dir() {
        return Err(usage(format!("harness directory not found: {}", root.display())));
    }
    let harness = Harness::open(root, Vec::new())?;
    let rows = harness.leaderboard(phase);
    emit(&render_leaderboard(&rows, output.format.into()), output.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Evaluate { data, pred, output } => cmd_evaluate(data, pred, output),
        Command::Rank { reports, output } => cmd_rank(reports, output),
        Command::Validate {
            pred,
            manifest,
            categories,
            gt,
        } => cmd_validate(pred, manifest, categories.as_deref(), gt.as_deref()),
        Command::Synth {
            out,
            scenes,
            width,
            height,
            segments,
            classes,
            void_fraction,
            strength,
            seed,
        } => cmd_synth(
            out,
            *scenes,
            *width,
            *height,
            *segments,
            *classes,
            *void_fraction,
            *strength,
            *seed,
        ),
        Command::OracleCheck {
            cases,
            seed,
            inject_fault,
        } => cmd_oracle_check(*cases, *seed, *inject_fault),
        Command::Submit {
            root,
            team,
            phase,
            phase_config,
            data,
            submission,
        } => cmd_submit(root, team, *phase, phase_config.as_deref(), data, submission),
        Command::Leaderboard {
            root,
            phase,
            output,
        } => cmd_leaderboard(root, *phase, output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
