use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::*;
use crate::agreement::{aggregate, score_instance, write_scores_csv};
use crate::audit::{
    bundled_prompts, check_neutrality, emit_report, emit_summary_report, load_provider_configs, load_run,
    load_summary_csv, parse_prompts, prevalence, run_audit, save_run, AuditOptions, HttpProvider, Provider,
    ReplayProvider,
};
use crate::classifier::{
    evaluate, ConstantProbe, Penalty, Probe, RemoteConfig, RemoteProbe, TfidfLogisticClassifier, TrainConfig,
};
use crate::corpus::{
    distribution_report, filter_seegull, filter_winoqueer, kde_text_length, linear_grid, load_dataset,
    load_seegull_csv, render_augmentation_prompt, save_dataset_csv, silverman_bandwidth, stratified_split,
    synthetic::synthetic_corpus, write_removals, AugmentationTemplate, Bandwidth, DatasetFormat, FilterConfig,
    SplitSpec,
};
use crate::explain::{
    lime_explain, rank_tokens, shap_exact_limited, shap_sampled, Attribution, CoalitionCache, LimeConfig,
    MaskedInstance,
};
use crate::protocol::{check_conformance, conformance_suite, serve as serve_probe, write_conformance_suite, ConformanceCase};
use crate::{ProbeError, DECISION_THRESHOLD};

pub(super) struct Context<'a> {
    cli: &'a Cli,
    rng: ChaCha8Rng,
    outputs: Vec<PathBuf>,
    notes: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    out: &'a Path,
    config: &'a Command,
    resolved: &'a BTreeMap<String, serde_json::Value>,
    outputs: Vec<String>,
    created: String,
}

impl<'a> Context<'a> {
    pub(super) fn new(cli: &'a Cli) -> Self {
        Context { cli, rng: ChaCha8Rng::seed_from_u64(cli.seed), outputs: Vec::new(), notes: BTreeMap::new() }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cli.out.join(name)
    }

    /// Next seed from the run's single generator.
    fn next_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn note(&mut self, key: &str, value: impl Serialize) {
        self.notes.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    fn record(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    fn probe(&self, args: &ProbeArgs) -> Result<Box<dyn Probe>> {
        match (&args.model, &args.url) {
            (Some(path), _) => Ok(Box::new(TfidfLogisticClassifier::load(path)?)),
            (None, Some(url)) => Ok(Box::new(RemoteProbe::new(RemoteConfig {
                batch_size: args.batch_size.max(1),
                max_in_flight: args.max_in_flight.max(1),
                ..RemoteConfig::new(url.as_str(), url.as_str())
            }))),
            (None, None) => Err(Error::InvalidInput("one of --model or --url is required".into())),
        }
    }

    pub(super) fn write_manifest(&mut self) -> Result<()> {
        let outputs = self.outputs.iter().map(|p| p.display().to_string()).collect();
        let manifest = Manifest {
            tool: "stereolens",
            version: env!("CARGO_PKG_VERSION"),
            seed: self.cli.seed,
            out: &self.cli.out,
            config: &self.cli.command,
            resolved: &self.notes,
            outputs,
            created: humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string(),
        };
        let path = self.out("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))
    }
}

fn penalty(p: PenaltyArg) -> Penalty {
    match p {
        PenaltyArg::None => Penalty::None,
        PenaltyArg::L1 => Penalty::L1,
        PenaltyArg::L2 => Penalty::L2,
    }
}

pub(super) fn train(ctx: &mut Context, a: &TrainArgs) -> Result<()> {
    let ds = load_dataset(&a.data, DatasetFormat::from_path(&a.data))?;
    let spec = SplitSpec { test_fraction: a.test_fraction, seed: ctx.cli.seed, ..SplitSpec::default() };
    let (train, test) = stratified_split(&ds, &spec)?;
    let cfg = TrainConfig { penalty: penalty(a.penalty), strength_c: a.c, max_iter: a.max_iter, seed: ctx.cli.seed, ..TrainConfig::default() };
    let (clf, trace) = TfidfLogisticClassifier::train_traced(&train, &cfg)?;
    let model_path = a.model_out.clone().unwrap_or_else(|| ctx.out("model.json"));
    clf.save(&model_path)?;
    ctx.record(model_path.clone());
    let report = evaluate(&clf, &test, DECISION_THRESHOLD)?;
    ctx.write(ctx.out("eval_report.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    ctx.note("split", spec);
    ctx.note("train_config", cfg);
    ctx.note("iterations", trace.iterations);
    ctx.note("converged", trace.converged);
    println!(
        "trained {} on {} rows ({} held out); macro F1 {:.4}; sparsity {:.3}; model {}",
        clf.name,
        train.len(),
        test.len(),
        report.macro_f1,
        clf.model.sparsity(),
        model_path.display()
    );
    if !trace.converged {
        eprintln!("warning: optimizer stopped after {} iterations without converging", trace.iterations);
    }
    Ok(())
}

fn shap_auto(probe: &dyn Probe, text: &str, e: &ExplainerArgs, seed: u64, cache: &mut CoalitionCache) -> Result<Attribution> {
    if MaskedInstance::new(text).len() <= e.exact_limit {
        shap_exact_limited(probe, text, e.exact_limit, cache)
    } else {
        shap_sampled(probe, text, e.shap_samples, seed, cache)
    }
}

fn lime_cfg(e: &ExplainerArgs, seed: u64) -> LimeConfig {
    LimeConfig { num_samples: e.lime_samples, kernel_width: e.kernel_width, ridge_lambda: e.ridge_lambda, seed }
}

pub(super) fn explain(ctx: &mut Context, a: &ExplainArgs) -> Result<()> {
    let texts = match (&a.text, &a.file) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(f)) => read_lines(f)?,
        (None, None) => return Err(Error::InvalidInput("one of --text or --file is required".into())),
    };
    let probe = ctx.probe(&a.probe)?;
    let mut rankings = vec![vec!["text_id".to_string(), "rank".into(), "token".into(), "position".into(), "value".into()]];
    for (i, text) in texts.iter().enumerate() {
        let seed = ctx.next_seed();
        let mut cache = CoalitionCache::new();
        let e = &a.explainer;
        let attr = match a.method {
            MethodArg::Shap => shap_auto(&*probe, text, e, seed, &mut cache)?,
            MethodArg::ShapExact => shap_exact_limited(&*probe, text, e.exact_limit, &mut cache)?,
            MethodArg::ShapSampled => shap_sampled(&*probe, text, e.shap_samples, seed, &mut cache)?,
            MethodArg::Lime => lime_explain(&*probe, text, &lime_cfg(e, seed), &mut cache)?,
        };
        let id = i + 1;
        ctx.write(ctx.out(&format!("attribution_{id:03}.json")), &(attr.to_json()? + "\n"))?;
        ctx.write(ctx.out(&format!("attribution_{id:03}.svg")), &attr.to_svg())?;
        let ranking = rank_tokens(&attr);
        println!("[{id}] {text}\n{}{ranking}\n", ranking.to_table());
        for (r, t) in ranking.0.iter().enumerate() {
            rankings.push(vec![id.to_string(), (r + 1).to_string(), t.token.clone(), t.position.to_string(), t.value.to_string()]);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rankings {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    ctx.write(ctx.out("rankings.csv"), &String::from_utf8_lossy(&bytes))?;
    ctx.note("probe_id", probe.id());
    Ok(())
}

pub(super) fn confidence(ctx: &mut Context, a: &ConfidenceArgs) -> Result<()> {
    let texts = read_lines(&a.texts)?;
    let probe = ctx.probe(&a.probe)?;
    let mut scores = Vec::with_capacity(texts.len());
    for (i, text) in texts.iter().enumerate() {
        let seed = ctx.next_seed();
        let mut cache = CoalitionCache::new();
        let shap = shap_auto(&*probe, text, &a.explainer, seed, &mut cache)?;
        let lime = lime_explain(&*probe, text, &lime_cfg(&a.explainer, seed), &mut cache)?;
        scores.push(((i + 1).to_string(), score_instance(&shap, &lime)?));
    }
    let mut buf = Vec::new();
    write_scores_csv(&scores, &mut buf)?;
    ctx.write(ctx.out("agreement_scores.csv"), &String::from_utf8_lossy(&buf))?;
    let plain: Vec<_> = scores.iter().map(|(_, s)| s.clone()).collect();
    let report = aggregate(&plain)?;
    ctx.write(ctx.out("agreement_aggregate.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    println!("metric   mean (std)       K     z         p");
    for (name, m) in [("cosine", &report.cosine), ("pearson", &report.pearson), ("jsd", &report.jsd)] {
        println!("{name:<8} {:<16} {:<5} {:<9.3} {}", m.mean_std(), m.k, m.z, m.p_display());
    }
    if report.pearson_undefined > 0 {
        println!("pearson undefined for {} instance(s)", report.pearson_undefined);
    }
    ctx.note("probe_id", probe.id());
    Ok(())
}

pub(super) fn eda(ctx: &mut Context, a: &EdaArgs) -> Result<()> {
    let ds = load_dataset(&a.data, DatasetFormat::from_path(&a.data))?;
    let lengths: Vec<f64> = ds.iter().map(|t| t.char_len() as f64).collect();
    let h = match a.bandwidth.as_str() {
        "auto" => silverman_bandwidth(&lengths),
        s => match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => h,
            _ => return Err(Error::InvalidInput(format!("bandwidth must be \"auto\" or a positive number, got {s:?}"))),
        },
    };
    let lo = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lengths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let grid = linear_grid((lo - 3.0 * h).max(0.0), hi + 3.0 * h, a.grid_points.max(2));
    let density = kde_text_length(&ds, Bandwidth::Fixed(h), &grid)?;
    let mut kde = String::from("length,density\n");
    for (l, d) in density {
        kde.push_str(&format!("{l},{d}\n"));
    }
    ctx.write(ctx.out("kde_text_length.csv"), &kde)?;
    let report = distribution_report(&ds);
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    ctx.write(ctx.out("distribution.csv"), &String::from_utf8_lossy(&buf))?;
    ctx.note("bandwidth", h);
    println!("{} instances; KDE bandwidth {h:.4}", ds.len());
    for g in &report.groupings {
        for l in &g.levels {
            println!("{:<16} {:<28} {:>7} {:>7.3}", g.name, l.value, l.count, l.proportion);
        }
    }
    Ok(())
}

fn filter_config(path: &Option<PathBuf>) -> Result<FilterConfig> {
    match path {
        None => Ok(FilterConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", p.display())))
        }
    }
}

fn print_reason_counts<'a>(kept: usize, reasons: impl Iterator<Item = crate::corpus::RemovalReason>) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for r in reasons {
        *counts.entry(r.as_str()).or_insert(0) += 1;
    }
    println!("kept {kept}");
    for (r, c) in &counts {
        println!("removed {c} ({r})");
    }
    counts
}

pub(super) fn filter(ctx: &mut Context, f: &FilterCommand) -> Result<()> {
    let mut removals_csv = Vec::new();
    match f {
        FilterCommand::Winoqueer(a) => {
            let cfg = filter_config(&a.config)?;
            let ds = load_dataset(&a.data, DatasetFormat::from_path(&a.data))?;
            let outcome = filter_winoqueer(&ds, &cfg);
            let kept_path = ctx.out("kept.csv");
            save_dataset_csv(&outcome.kept, &kept_path)?;
            ctx.record(kept_path);
            write_removals(outcome.removals.iter().map(|(t, r)| (t.text.as_str(), *r)), &mut removals_csv)?;
            let counts = print_reason_counts(outcome.kept.len(), outcome.removals.iter().map(|(_, r)| *r));
            ctx.note("removal_counts", counts);
            ctx.note("filter_config", cfg);
        }
        FilterCommand::Seegull(a) => {
            let cfg = filter_config(&a.config)?;
            let rows = load_seegull_csv(&a.data)?;
            let outcome = filter_seegull(&rows, &cfg)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &outcome.kept {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
            ctx.write(ctx.out("kept.csv"), &String::from_utf8_lossy(&bytes))?;
            write_removals(outcome.removals.iter().map(|(t, r)| (t.phrase.as_str(), *r)), &mut removals_csv)?;
            let counts = print_reason_counts(outcome.kept.len(), outcome.removals.iter().map(|(_, r)| *r));
            ctx.note("removal_counts", counts);
            ctx.note("filter_config", cfg);
        }
    }
    ctx.write(ctx.out("removals.csv"), &String::from_utf8_lossy(&removals_csv))
}

pub(super) fn audit(ctx: &mut Context, a: &AuditArgs) -> Result<()> {
    let probe = ctx.probe(&a.probe)?;
    let prompts = match &a.prompts {
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
            let loaded = parse_prompts(file)?;
            for w in &loaded.warnings {
                eprintln!("warning: {w}");
            }
            loaded.prompts
        }
        None => bundled_prompts(),
    };
    check_neutrality(&prompts, &*probe)?;

    let mut release_dates = BTreeMap::new();
    let provider: Box<dyn Provider> = match (&a.replay, &a.config, &a.provider) {
        (Some(path), _, _) => Box::new(ReplayProvider::load(path, &a.model_name)?),
        (None, Some(cfg_path), Some(name)) => {
            let cfgs = load_provider_configs(cfg_path)?;
            let cfg = cfgs
                .get(name)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("provider {name:?} not found in {}", cfg_path.display())))?;
            if let Some(d) = &cfg.release_date {
                release_dates.insert(cfg.model.clone(), d.clone());
            }
            Box::new(HttpProvider::new(cfg)?)
        }
        _ => return Err(Error::InvalidInput("one of --replay or --config with --provider is required".into())),
    };
    let opts = AuditOptions { n_iter: a.iterations, seed: ctx.cli.seed, ..AuditOptions::default() };
    let run = run_audit(&*provider, &prompts, &*probe, &opts)?;
    let run_path = ctx.out("run.jsonl");
    save_run(&run, &run_path)?;
    ctx.record(run_path);
    let report = emit_report(std::slice::from_ref(&run), &release_dates, &ctx.cli.out)?;
    for p in &report.files {
        ctx.record(p.clone());
    }
    let p = prevalence(&run)?;
    println!(
        "{}: P_M {:.4} over {} parsed lines ({} unparsed, {} failed iterations)",
        p.model, p.p_m, p.n, p.unparsed, p.failed_iterations
    );
    ctx.note("run_id", &run.run_id);
    ctx.note("probe_id", probe.id());
    ctx.note("exclusion_rate", p.exclusion_rate());
    Ok(())
}

pub(super) fn report(ctx: &mut Context, a: &ReportArgs) -> Result<()> {
    if let Some(summary) = &a.summary {
        let rows = load_summary_csv(summary)?;
        let (warnings, files) = emit_summary_report(&rows, &ctx.cli.out)?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        for f in files {
            ctx.record(f);
        }
        return Ok(());
    }
    if a.runs.is_empty() {
        return Err(Error::InvalidInput("one of --runs or --summary is required".into()));
    }
    let mut dates = BTreeMap::new();
    if let Some(cfg) = &a.config {
        for c in load_provider_configs(cfg)?.into_values() {
            if let Some(d) = c.release_date {
                dates.insert(c.model, d);
            }
        }
    }
    for pair in &a.release_dates {
        let (m, d) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("--release-date expects model=date, got {pair:?}")))?;
        dates.insert(m.to_string(), d.to_string());
    }
    let runs = a.runs.iter().map(|p| load_run(p)).collect::<Result<Vec<_>>>()?;
    let report = emit_report(&runs, &dates, &ctx.cli.out)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for m in &report.models {
        println!("{:<32} P_M {:.4} (n = {})", m.model, m.p_m, m.n);
    }
    for p in report.files {
        ctx.record(p);
    }
    Ok(())
}

pub(super) fn serve(ctx: &mut Context, a: &ServeArgs) -> Result<()> {
    let probe: Arc<dyn Probe> = match (&a.model, a.constant) {
        (Some(p), _) => Arc::new(TfidfLogisticClassifier::load(p)?),
        (None, Some(c)) if (0.0..=1.0).contains(&c) => Arc::new(ConstantProbe(c)),
        (None, Some(c)) => return Err(Error::InvalidInput(format!("--constant must lie in [0, 1], got {c}"))),
        (None, None) => return Err(Error::InvalidInput("one of --model or --constant is required".into())),
    };
    let server = serve_probe(probe, &a.addr)?;
    println!("serving on {}", server.url());
    ctx.note("addr", server.addr().to_string());
    ctx.write_manifest()?;
    server.join();
    Ok(())
}

pub(super) fn synth(ctx: &mut Context, a: &SynthArgs) -> Result<()> {
    let ds = synthetic_corpus(a.n, ctx.cli.seed);
    let path = a.output.clone().unwrap_or_else(|| ctx.out("synthetic_corpus.csv"));
    save_dataset_csv(&ds, &path)?;
    ctx.record(path.clone());
    println!("wrote {} rows to {}", ds.len(), path.display());
    Ok(())
}

pub(super) fn conformance(ctx: &mut Context, c: &ConformanceCommand) -> Result<()> {
    match c {
        ConformanceCommand::Generate { stub, output } => {
            if !(0.0..=1.0).contains(stub) {
                return Err(Error::InvalidInput(format!("--stub must lie in [0, 1], got {stub}")));
            }
            let path = output.clone().unwrap_or_else(|| ctx.out("conformance.jsonl"));
            let suite = conformance_suite(*stub);
            ctx.write(path.clone(), &write_conformance_suite(&suite)?)?;
            println!("wrote {} cases to {}", suite.len(), path.display());
            Ok(())
        }
        ConformanceCommand::Check { url, suite } => {
            let text = std::fs::read_to_string(suite).map_err(|e| Error::io(suite, e))?;
            let cases = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str::<ConformanceCase>)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let outcome = check_conformance(url, &cases);
            println!("{} of {} cases passed", outcome.passed, cases.len());
            ctx.note("passed", outcome.passed);
            ctx.note("failures", &outcome.failures);
            if outcome.failures.is_empty() {
                Ok(())
            } else {
                Err(ProbeError::Protocol(outcome.failures.join("; ")).into())
            }
        }
    }
}

pub(super) fn augment(ctx: &mut Context, a: &AugmentArgs) -> Result<()> {
    let template: AugmentationTemplate = a.template.parse()?;
    let batch = read_lines(&a.batch)?;
    let prompt = render_augmentation_prompt(template, &batch)?;
    ctx.write(ctx.out("augment_prompt.txt"), &prompt)?;
    println!("{prompt}");
    Ok(())
}
