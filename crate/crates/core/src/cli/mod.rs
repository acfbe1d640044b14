//! The `stereolens` command line.
//!
//! Every subcommand writes its outputs plus a `manifest.json` under `--out`.
//! Exit codes: 0 success, 1 usage, 2 data, 3 remote or provider failure.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Parser, Serialize)]
#[command(name = "stereolens", version, about = "Stereotype classification, token attributions and LLM bias audits")]
pub struct Cli {
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "stereolens-out")]
    pub out: PathBuf,
    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Train the TF-IDF + logistic-regression classifier and score it on a held-out split.
    Train(TrainArgs),
    /// Token attributions for one or more texts.
    Explain(ExplainArgs),
    /// SHAP/LIME agreement scores and their significance over a set of texts.
    Confidence(ConfidenceArgs),
    /// Text-length KDE and label distribution tables.
    Eda(EdaArgs),
    /// Deterministic source filters.
    #[command(subcommand)]
    Filter(FilterCommand),
    /// Run the LLM prevalence audit.
    Audit(AuditArgs),
    /// Prevalence tables and charts from saved runs or a summary CSV.
    Report(ReportArgs),
    /// Serve a probe over the prediction protocol.
    Serve(ServeArgs),
    /// Write the synthetic separable corpus.
    Synth(SynthArgs),
    /// Generate or check the prediction-protocol golden suite.
    #[command(subcommand)]
    Conformance(ConformanceCommand),
    /// Render an augmentation prompt for a batch of items.
    AugmentPrompt(AugmentArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ProbeArgs {
    /// Local model file written by `train`.
    #[arg(long, conflicts_with = "url")]
    pub model: Option<PathBuf>,
    /// Prediction endpoint, e.g. http://127.0.0.1:8080.
    #[arg(long)]
    pub url: Option<String>,
    /// Texts per request for --url.
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Concurrent requests for --url.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyArg {
    None,
    L1,
    L2,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Labelled corpus (CSV or JSONL).
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write the model; defaults to <out>/model.json.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "l1")]
    pub penalty: PenaltyArg,
    /// Inverse regularisation strength.
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    /// Exact Shapley values up to the exact limit, sampled beyond it.
    Shap,
    ShapExact,
    ShapSampled,
    Lime,
}

#[derive(Debug, Args, Serialize)]
pub struct ExplainerArgs {
    /// Largest token count explained exactly.
    #[arg(long, default_value_t = crate::explain::DEFAULT_EXACT_LIMIT)]
    pub exact_limit: usize,
    /// Permutations (including reversals) for sampled SHAP.
    #[arg(long, default_value_t = 2048)]
    pub shap_samples: usize,
    #[arg(long, default_value_t = crate::explain::DEFAULT_NUM_SAMPLES)]
    pub lime_samples: usize,
    #[arg(long, default_value_t = crate::explain::DEFAULT_KERNEL_WIDTH)]
    pub kernel_width: f64,
    #[arg(long, default_value_t = crate::explain::DEFAULT_RIDGE_LAMBDA)]
    pub ridge_lambda: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExplainArgs {
    #[arg(long, conflicts_with = "file")]
    pub text: Option<String>,
    /// One text per line.
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "shap")]
    pub method: MethodArg,
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[command(flatten)]
    pub explainer: ExplainerArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ConfidenceArgs {
    /// One text per line.
    #[arg(long)]
    pub texts: PathBuf,
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[command(flatten)]
    pub explainer: ExplainerArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EdaArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// KDE bandwidth in characters, or "auto" for Silverman's rule.
    #[arg(long, default_value = "auto")]
    pub bandwidth: String,
    #[arg(long, default_value_t = 200)]
    pub grid_points: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum FilterCommand {
    /// Counterfactual, template-duplicate and overt-negativity removal.
    Winoqueer(FilterArgs),
    /// Offensiveness and dual-region stereotype majority gates.
    Seegull(FilterArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// TOML file overriding the filter lists and thresholds.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    /// Replay fixture (JSONL) standing in for a live provider.
    #[arg(long, conflicts_with_all = ["config", "provider"])]
    pub replay: Option<PathBuf>,
    /// Model name recorded for a replay run.
    #[arg(long, default_value = "replay")]
    pub model_name: String,
    /// Provider TOML with [provider.<name>] tables.
    #[arg(long, requires = "provider")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub provider: Option<String>,
    /// Prompt table; the bundled 35 stems when omitted.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub iterations: usize,
    #[command(flatten)]
    pub probe: ProbeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Run files written by `audit`.
    #[arg(long, num_args = 1.., conflicts_with = "summary")]
    pub runs: Vec<PathBuf>,
    /// Provider TOML supplying release dates.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra release dates as model=date.
    #[arg(long = "release-date")]
    pub release_dates: Vec<String>,
    /// CSV with columns model,P_M[,release_date] to chart directly.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long, conflicts_with = "constant")]
    pub model: Option<PathBuf>,
    /// Serve a stub that answers this probability for every text.
    #[arg(long)]
    pub constant: Option<f64>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Defaults to <out>/synthetic_corpus.csv.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum ConformanceCommand {
    /// Write the golden suite answered by a constant stub.
    Generate {
        #[arg(long, default_value_t = 0.7)]
        stub: f64,
        /// Defaults to <out>/conformance.jsonl.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Replay a golden suite against a running server.
    Check {
        #[arg(long)]
        url: String,
        #[arg(long)]
        suite: PathBuf,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct AugmentArgs {
    #[arg(long)]
    pub template: String,
    /// One item per line.
    #[arg(long)]
    pub batch: PathBuf,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let mut ctx = commands::Context::new(cli);
    match &cli.command {
        Command::Train(a) => commands::train(&mut ctx, a),
        Command::Explain(a) => commands::explain(&mut ctx, a),
        Command::Confidence(a) => commands::confidence(&mut ctx, a),
        Command::Eda(a) => commands::eda(&mut ctx, a),
        Command::Filter(f) => commands::filter(&mut ctx, f),
        Command::Audit(a) => commands::audit(&mut ctx, a),
        Command::Report(a) => commands::report(&mut ctx, a),
        Command::Serve(a) => commands::serve(&mut ctx, a),
        Command::Synth(a) => commands::synth(&mut ctx, a),
        Command::Conformance(c) => commands::conformance(&mut ctx, c),
        Command::AugmentPrompt(a) => commands::augment(&mut ctx, a),
    }?;
    ctx.write_manifest()
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if lines.is_empty() {
        return Err(Error::Data(format!("{}: no non-empty lines", path.display())));
    }
    Ok(lines)
}
