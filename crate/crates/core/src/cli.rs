//! Command-line front end: `synth`, `label`, `features`, `fit`, `eval`,
//! `sweep` and `report`, each writing into its own output directory with a
//! `manifest.json`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver did not converge, 4 I/O.
//! Failures print a JSON object to stderr.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{build_cohort, Cohort, CohortCounts, ExclusionTally, LabeledEncounter, LabelingPolicy, MatchOutcome};
use crate::encounter::{read_jsonl, write_jsonl};
use crate::error::{Error, Result};
use crate::evaluate::{
    evaluate, read_differentials_csv, read_oof_csv, report_files, sensitivity_sweep, write_differentials_csv,
    write_oof_csv, EvalConfig, EvalReport, Evaluation, SweepConfig,
};
use crate::featurize::{build_matrix, FeatureDictionary, FeatureMatrix};
use crate::scoring::{score, write_scored_csv};
use crate::solver::{fit, ConstraintSet, FitConfig, ScoreModel};
use crate::synth::{generate, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fallrisk", version, about = "Constrained additive fall-risk scores from weakly labeled encounters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort and its latent-risk truth file.
    Synth(SynthArgs),
    /// Apply exclusions, label encounters and match fall encounters.
    Label(LabelArgs),
    /// Build the feature matrix of the binary cohort.
    Features(FeaturesArgs),
    /// Fit the constrained score on a feature matrix.
    Fit(FitArgs),
    /// Cross-validate against the published tool.
    Eval(EvalArgs),
    /// Relabel and refit across high-intensity thresholds.
    Sweep(SweepArgs),
    /// Render CSV tables and SVG figures from an eval directory.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// JSON generator configuration; `--n` and `--seed` override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LabelArgs {
    /// Encounters as JSON Lines.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub high_threshold: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    /// Directory written by `label`.
    #[arg(long)]
    pub cohort: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub augmented: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Directory written by `features`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Directory written by `label`.
    #[arg(long)]
    pub cohort: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub augmented: bool,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Encounters as JSON Lines.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "4,5,6,7,8")]
    pub thresholds: Vec<u32>,
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub augmented: bool,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Directory written by `eval`.
    #[arg(long)]
    pub eval: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// SHA-256 of the command's arguments as JSON.
    pub config_hash: String,
    pub arguments: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Collects outputs in memory, then writes each through a temporary file and a rename.
struct OutputDir {
    dir: PathBuf,
    command: &'static str,
    arguments: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    started: u64,
}

impl OutputDir {
    fn new<A: Serialize>(dir: &Path, command: &'static str, args: &A, seed: Option<u64>) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            arguments: serde_json::to_value(args)?,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: now_unix(),
        })
    }

    fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: hex_sha256(&bytes),
        });
        Ok(bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.dir.join(name), bytes)?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: hex_sha256(bytes),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn finish(self) -> Result<()> {
        let config_hash = hex_sha256(&serde_json::to_vec(&self.arguments)?);
        let manifest = RunManifest {
            command: self.command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            arguments: self.arguments,
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix: self.started,
            finished_unix: now_unix(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        atomic_write(&self.dir.join("manifest.json"), &bytes)
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Labeling outputs other than the per-encounter lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingSummary {
    pub policy: LabelingPolicy,
    pub counts: CohortCounts,
    pub exclusions: ExclusionTally,
    pub matches: MatchOutcome,
}

pub const COHORT_FILE: &str = "cohort.jsonl";
pub const LABELING_FILE: &str = "labeling.json";

fn read_cohort(out: &mut OutputDir, dir: &Path) -> Result<Cohort> {
    let summary: LabelingSummary = serde_json::from_slice(&out.read_input(&dir.join(LABELING_FILE))?)?;
    let lines = out.read_input(&dir.join(COHORT_FILE))?;
    let mut members = Vec::new();
    for (i, line) in lines.split(|&b| b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let m: LabeledEncounter = serde_json::from_slice(line)
            .map_err(|e| Error::invalid(format!("{COHORT_FILE} line {}: {e}", i + 1)))?;
        m.validate()?;
        members.push(m);
    }
    let cohort = Cohort::from_members(summary.policy, members, summary.exclusions, summary.matches);
    if cohort.counts != summary.counts {
        return Err(Error::invalid(format!("{COHORT_FILE} does not match the counts in {LABELING_FILE}")));
    }
    Ok(cohort)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut out = OutputDir::new(&args.out, "synth", args, Some(args.seed))?;
    let base = match &args.config {
        Some(path) => serde_json::from_slice(&out.read_input(path)?)?,
        None => SynthConfig::default(),
    };
    let config = SynthConfig {
        n_encounters: args.n,
        seed: args.seed,
        ..base
    };
    let cohort = generate(&config)?;
    let mut lines = Vec::new();
    write_jsonl(&mut lines, &cohort.encounters)?;
    out.write("encounters.jsonl", &lines)?;
    let mut truth = Vec::new();
    cohort.write_truth_csv(&mut truth)?;
    out.write("truth.csv", &truth)?;
    out.write_json("synth_config.json", &config)?;
    out.finish()
}

fn read_encounters(out: &mut OutputDir, path: &Path) -> Result<Vec<crate::encounter::Encounter>> {
    let bytes = out.read_input(path)?;
    let encounters = read_jsonl(BufReader::new(bytes.as_slice()))?;
    if encounters.is_empty() {
        return Err(Error::invalid(format!("{} contains no encounters", path.display())));
    }
    Ok(encounters)
}

fn cmd_label(args: &LabelArgs) -> Result<()> {
    let mut out = OutputDir::new(&args.out, "label", args, None)?;
    let encounters = read_encounters(&mut out, &args.input)?;
    let policy = LabelingPolicy::default().with_high_threshold(args.high_threshold);
    let cohort = build_cohort(&encounters, &policy)?;
    let mut lines = Vec::new();
    write_jsonl(&mut lines, &cohort.members)?;
    out.write(COHORT_FILE, &lines)?;
    let mut tally = Vec::new();
    cohort.exclusions.write_csv(&mut tally)?;
    out.write("exclusions.csv", &tally)?;
    out.write_json(
        LABELING_FILE,
        &LabelingSummary {
            policy: cohort.policy,
            counts: cohort.counts,
            exclusions: cohort.exclusions,
            matches: cohort.matches,
        },
    )?;
    out.finish()
}

fn cmd_features(args: &FeaturesArgs) -> Result<()> {
    let mut out = OutputDir::new(&args.out, "features", args, None)?;
    let cohort = read_cohort(&mut out, &args.cohort)?;
    let matrix = build_matrix(&cohort, args.augmented)?;
    let mut csv = Vec::new();
    matrix.write_csv(&mut csv)?;
    out.write("features.csv", &csv)?;
    out.write("dictionary.json", format!("{}\n", matrix.dictionary.to_json_pretty()?).as_bytes())?;
    out.finish()
}

fn read_features(out: &mut OutputDir, dir: &Path) -> Result<FeatureMatrix> {
    let dictionary: FeatureDictionary = serde_json::from_slice(&out.read_input(&dir.join("dictionary.json"))?)?;
    let csv = out.read_input(&dir.join("features.csv"))?;
    FeatureMatrix::read_csv(csv.as_slice(), dictionary)
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let mut out = OutputDir::new(&args.out, "fit", args, None)?;
    let matrix = read_features(&mut out, &args.features)?;
    let dict = &matrix.dictionary;
    let constraints = ConstraintSet::default_chains(dict)?;
    let mut config = FitConfig::default()
        .with_lambda(args.lambda)
        .with_init(dict.baseline_coefficients().to_vec());
    if let Some(max_iter) = args.max_iter {
        config.max_iter = max_iter;
    }
    let fitted = fit(matrix.x.view(), &matrix.y, &constraints, &config)?;
    let model = ScoreModel::from_fit(dict, &constraints, fitted)?;
    let mut json = Vec::new();
    model.write_json(&mut json)?;
    json.push(b'\n');
    out.write("model.json", &json)?;
    let mut scored = Vec::new();
    write_scored_csv(&score(&model, &matrix)?, &mut scored)?;
    out.write("scored.csv", &scored)?;
    let meta = model.fit.clone().expect("fitted model carries metadata");
    out.finish()?;
    if !meta.converged {
        return Err(Error::NotConverged {
            iterations: meta.iterations,
            projected_gradient: meta.projected_gradient,
        });
    }
    Ok(())
}

fn fit_config(lambda: f64) -> FitConfig {
    FitConfig::default().with_lambda(lambda)
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut out = OutputDir::new(&args.out, "eval", args, Some(args.seed))?;
    let cohort = read_cohort(&mut out, &args.cohort)?;
    let config = EvalConfig {
        folds: args.folds,
        seed: args.seed,
        augmented: args.augmented,
        fit: fit_config(args.lambda),
    };
    let eval = evaluate(&cohort, &config)?;
    out.write_json("metrics.json", &eval.report)?;
    out.write("oof_scores.csv", &write_oof_csv(&eval.oof)?)?;
    out.write("differentials.csv", &write_differentials_csv(&eval.differentials)?)?;
    let mut model = Vec::new();
    eval.report.final_model.write_json(&mut model)?;
    model.push(b'\n');
    out.write("model.json", &model)?;
    out.finish()?;
    let unconverged = eval
        .report
        .cross_validation
        .folds
        .iter()
        .map(|f| &f.fit)
        .chain(eval.report.final_model.fit.as_ref())
        .find(|m| !m.converged);
    if let Some(m) = unconverged {
        return Err(Error::NotConverged {
            iterations: m.iterations,
            projected_gradient: m.projected_gradient,
        });
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut out = OutputDir::new(&args.out, "sweep", args, Some(args.seed))?;
    let encounters = read_encounters(&mut out, &args.input)?;
    let config = SweepConfig {
        high_thresholds: args.thresholds.clone(),
        augmented: args.augmented,
        folds: args.folds,
        seed: args.seed,
        fit: fit_config(args.lambda),
        ..SweepConfig::default()
    };
    let sweep = sensitivity_sweep(&encounters, &config)?;
    out.write_json("sweep.json", &sweep)?;

    let mut counts = csv::Writer::from_writer(Vec::new());
    counts.write_record(["high_threshold", "low", "high", "high_labeled", "promoted", "indeterminate"])?;
    for p in &sweep.points {
        let c = p.counts;
        counts.write_record(
            [p.high_threshold as usize, c.low, c.high, c.high_labeled, c.promoted, c.indeterminate].map(|v| v.to_string()),
        )?;
    }
    out.write("sweep_counts.csv", &counts.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?)?;

    let mut coef = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["feature".to_string()];
    header.extend(sweep.points.iter().map(|p| format!("beta_t{}", p.high_threshold)));
    header.extend(["share_min", "share_max", "share_sd"].map(String::from));
    coef.write_record(&header)?;
    for (j, s) in sweep.across_cohorts.iter().enumerate() {
        let mut record = vec![s.name.clone()];
        record.extend(sweep.points.iter().map(|p| p.coefficients[j].beta.to_string()));
        record.extend([s.min, s.max, s.sd].map(|v| v.to_string()));
        coef.write_record(&record)?;
    }
    out.write("sweep_coefficients.csv", &coef.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?)?;
    let unconverged = sweep.points.iter().map(|p| &p.fit).find(|m| !m.converged);
    out.finish()?;
    if let Some(m) = unconverged {
        return Err(Error::NotConverged {
            iterations: m.iterations,
            projected_gradient: m.projected_gradient,
        });
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut out = OutputDir::new(&args.out, "report", args, None)?;
    let report = EvalReport::read_json(out.read_input(&args.eval.join("metrics.json"))?.as_slice())?;
    let oof = read_oof_csv(out.read_input(&args.eval.join("oof_scores.csv"))?.as_slice())?;
    let differentials = read_differentials_csv(out.read_input(&args.eval.join("differentials.csv"))?.as_slice())?;
    let eval = Evaluation {
        report,
        oof,
        differentials,
    };
    for (name, bytes) in report_files(&eval)? {
        out.write(&name, &bytes)?;
    }
    out.write_json("summary.json", &eval.report)?;
    out.finish()
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn error_kind(error: &Error) -> &'static str {
    match error {
        Error::InvalidInput(_) => "invalid_input",
        Error::InvariantViolation(_) => "invariant_violation",
        Error::EmptyCohort => "empty_cohort",
        Error::ShapeMismatch(_) => "shape_mismatch",
        Error::SingleClass => "single_class",
        Error::CyclicConstraints(_) => "cyclic_constraints",
        Error::UnsupportedConstraints(_) => "unsupported_constraints",
        Error::NonFinite(_) => "non_finite",
        Error::DictionaryMismatch(_) => "dictionary_mismatch",
        Error::NotConverged { .. } => "not_converged",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Label(a) => cmd_label(a),
        Command::Features(a) => cmd_features(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(error) => {
            let code = exit_code(&error);
            let body = serde_json::json!({
                "error": error_kind(&error),
                "message": error.to_string(),
                "exit_code": code,
            });
            eprintln!("{body}");
            code
        }
    }
}
