//! Subcommands of the `d4l` binary. `run` executes a parsed command line
//! against caller-supplied output streams and returns the exit code.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};

use d4l_core::analysis::{self, AnalysisError};
use d4l_core::config::RunConfig;
use d4l_core::context::{ContextBuilder, ContextBundle};
use d4l_core::dataset::{self, BenchmarkInstance, Manifest};
use d4l_core::evaluator::{
    self, predictions_jsonl, render_quadrants, render_report, PredictionRecord, ReportFormat, SettingResult,
    RULES_BASELINE,
};
use d4l_core::gateway::{Gateway, Mode};
use d4l_core::log_extractor::LogExtractor;
use d4l_core::prompt::{PromptEngine, PromptSettings, PromptTemplates};
use d4l_core::rules::rules_label;
use d4l_core::source_model::SourceUnit;
use d4l_core::taxonomy::Taxonomy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "d4l", version, about = "Logging-code defect analysis for Java sources")]
pub struct Cli {
    /// Configuration file. `./d4l.toml` is read when present and no path is given.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the static rules over a source tree.
    Lint(LintArgs),
    /// Fill the context section of every dataset record.
    Context(ContextArgs),
    /// Score model or rule predictions over a dataset.
    Evaluate(EvaluateArgs),
    /// List commits whose messages mention logging, with touched log lines.
    Mine(MineArgs),
    /// Check a dataset against its schema and an optional manifest.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct LintArgs {
    pub source_root: PathBuf,
    /// Emit one JSON finding per line.
    #[arg(long)]
    pub json: bool,
    /// Additional path globs to skip, relative to the root.
    #[arg(long)]
    pub exclude: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ContextArgs {
    pub dataset: PathBuf,
    /// Directory holding the instances' `file_path`s. Without it each
    /// function is analyzed on its own.
    #[arg(long)]
    pub source_root: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_path_len: Option<usize>,
    #[arg(long)]
    pub callee_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub dataset: PathBuf,
    /// Comma-separated settings, e.g. `Direct,CoT+K`. Defaults to all eight.
    #[arg(long, value_delimiter = ',')]
    pub settings: Vec<PromptSettings>,
    /// Score the static rules instead of a model.
    #[arg(long)]
    pub rules_baseline: bool,
    #[arg(long, default_value = "replay")]
    pub mode: Mode,
    #[arg(long)]
    pub cassette: Option<PathBuf>,
    #[arg(long)]
    pub source_root: Option<PathBuf>,
    /// Directory for per-setting prediction files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value = "markdown")]
    pub format: ReportFormat,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reasoning judgments for the quadrant table.
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    /// Setting the judgments refer to; defaults to the first evaluated one.
    #[arg(long)]
    pub judged_setting: Option<PromptSettings>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Leave clean instances out of scoring.
    #[arg(long)]
    pub exclude_no_defect: bool,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    pub repo: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub dataset: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Executes `cli`; diagnostics go to `err`, results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = load_config(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Lint(a) => cmd_lint(&a, cfg, out, err),
        Command::Context(a) => cmd_context(&a, cfg, out, err),
        Command::Evaluate(a) => cmd_evaluate(&a, cfg, out, err),
        Command::Mine(a) => cmd_mine(&a, cfg, out),
        Command::Validate(a) => cmd_validate(&a, cfg, out, err),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None if Path::new("d4l.toml").is_file() => RunConfig::load(Path::new("d4l.toml"))?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn taxonomy(cfg: &RunConfig) -> Result<Taxonomy> {
    Ok(match &cfg.taxonomy {
        Some(p) => Taxonomy::load(p)?,
        None => Taxonomy::builtin(),
    })
}

fn templates(cfg: &RunConfig) -> Result<PromptTemplates> {
    Ok(match &cfg.prompt.template_dir {
        Some(d) => PromptTemplates::load(d)?,
        None => PromptTemplates::builtin(),
    })
}

fn extractor(cfg: &RunConfig) -> Result<LogExtractor> {
    LogExtractor::new(&cfg.extractor).context("invalid [extractor] logger_pattern")
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => out.write_all(text.as_bytes()).context("cannot write output"),
    }
}

pub fn cmd_lint(args: &LintArgs, mut cfg: RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    cfg.extractor.exclude.extend(args.exclude.iter().cloned());
    let files = analysis::discover_sources(&args.source_root, &cfg.extractor.exclude)?;
    let (units, errors) = analysis::parse_sources(&args.source_root, &files);
    for e in &errors {
        writeln!(err, "warning: {e}")?;
    }
    let findings = analysis::lint_units(&units, &extractor(&cfg)?, &cfg.context, &cfg.rules, true);
    for f in &findings {
        if args.json {
            writeln!(out, "{}", serde_json::to_string(f)?)?;
        } else {
            let tag = if f.candidate { " (candidate)" } else { "" };
            writeln!(
                out,
                "{}:{}: {} {}{} in {}: {}",
                f.file, f.line, f.rule_id, f.scenario, tag, f.function, f.rationale
            )?;
        }
    }
    if !args.json {
        writeln!(out, "{} finding(s) in {} file(s)", findings.len(), units.len())?;
    }
    Ok(if findings.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
}

/// Parsed sources for a dataset: the whole tree under `source_root`, or one
/// synthetic unit per instance.
fn dataset_units(
    instances: &[BenchmarkInstance],
    source_root: Option<&Path>,
    cfg: &RunConfig,
    err: &mut dyn Write,
) -> Result<Vec<SourceUnit>> {
    match source_root {
        Some(root) => {
            let files = analysis::discover_sources(root, &cfg.extractor.exclude)?;
            let (units, errors) = analysis::parse_sources(root, &files);
            for e in &errors {
                writeln!(err, "warning: {e}")?;
            }
            Ok(units)
        }
        None => {
            let mut units = Vec::new();
            for inst in instances {
                match analysis::snippet_unit(inst) {
                    Ok(u) => units.push(u),
                    Err(e) => writeln!(err, "warning: instance {}: {e}", inst.id)?,
                }
            }
            Ok(units)
        }
    }
}

/// Bundles for every instance; an instance that already carries a context
/// keeps it.
fn bundles(
    instances: &[BenchmarkInstance],
    units: &[SourceUnit],
    cfg: &RunConfig,
) -> Result<Vec<Result<ContextBundle, AnalysisError>>> {
    let builder = ContextBuilder::new(units);
    let ex = extractor(cfg)?;
    Ok(d4l_core::parallel::par_map(instances, |inst| match &inst.context {
        Some(c) => Ok(c.clone()),
        None => analysis::analyze_instance(&builder, &ex, inst, &cfg.context, &cfg.rules).map(|a| a.bundle),
    }))
}

pub fn cmd_context(args: &ContextArgs, mut cfg: RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if let Some(n) = args.max_path_len {
        cfg.context.max_path_len = n;
    }
    if let Some(n) = args.callee_depth {
        cfg.context.callee_depth = n;
    }
    let tax = taxonomy(&cfg)?;
    let mut instances = dataset::load_dataset(&args.dataset, &tax)?;
    let units = dataset_units(&instances, args.source_root.as_deref(), &cfg, err)?;
    let results = bundles(&instances, &units, &cfg)?;
    let mut failed = 0;
    for (inst, r) in instances.iter_mut().zip(results) {
        match r {
            Ok(b) => inst.context = Some(b),
            Err(e) => {
                failed += 1;
                writeln!(err, "error: {e}")?;
            }
        }
    }
    write_output(args.out.as_deref(), &dataset::write_dataset(&instances), out)?;
    writeln!(err, "enriched {} of {} instance(s)", instances.len() - failed, instances.len())?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FINDINGS })
}

fn short_hash(bytes: &[u8]) -> String {
    d4l_core::sha256_hex(bytes)[..16].to_string()
}

pub fn cmd_evaluate(args: &EvaluateArgs, mut cfg: RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if let Some(m) = &args.model {
        cfg.model.model_name = m.clone();
    }
    if let Some(e) = &args.endpoint {
        cfg.model.endpoint_url = e.clone();
    }
    if let Some(p) = args.parallelism {
        cfg.evaluation.parallelism = p;
    }
    if args.exclude_no_defect {
        cfg.evaluation.include_no_defect = false;
    }
    cfg.validate()?;
    let tax = taxonomy(&cfg)?;
    let tpl = templates(&cfg)?;
    let dataset_bytes =
        std::fs::read(&args.dataset).with_context(|| format!("cannot read {}", args.dataset.display()))?;
    let instances = dataset::load_dataset(&args.dataset, &tax)?;
    let units = dataset_units(&instances, args.source_root.as_deref(), &cfg, err)?;
    let include_nd = cfg.evaluation.include_no_defect;

    let mut header = vec![
        ("tool".to_string(), format!("d4l {}", env!("CARGO_PKG_VERSION"))),
        ("dataset".to_string(), format!("{} instances, sha256 {}", instances.len(), short_hash(&dataset_bytes))),
        ("taxonomy".to_string(), tax.hash().to_string()),
        ("templates".to_string(), tpl.hash()),
    ];
    let mut results = Vec::new();
    let mut runs: Vec<(String, Vec<PredictionRecord>)> = Vec::new();

    if args.rules_baseline {
        header.push(("predictor".into(), RULES_BASELINE.into()));
        let builder = ContextBuilder::new(&units);
        let ex = extractor(&cfg)?;
        let preds = d4l_core::parallel::par_map(&instances, |inst| {
            match analysis::analyze_instance(&builder, &ex, inst, &cfg.context, &cfg.rules) {
                Ok(a) => PredictionRecord {
                    instance_id: inst.id.clone(),
                    predicted: Some(rules_label(&a.findings)),
                    explanation: a
                        .findings
                        .iter()
                        .map(|f| format!("{} {}", f.scenario, f.rationale))
                        .collect::<Vec<_>>()
                        .join("; "),
                    settings: RULES_BASELINE.into(),
                    error: None,
                },
                Err(e) => PredictionRecord {
                    instance_id: inst.id.clone(),
                    predicted: None,
                    explanation: String::new(),
                    settings: RULES_BASELINE.into(),
                    error: Some(e.to_string()),
                },
            }
        });
        runs.push((RULES_BASELINE.into(), preds));
    } else {
        let settings: Vec<PromptSettings> =
            if args.settings.is_empty() { PromptSettings::ALL.to_vec() } else { args.settings.clone() };
        header.push(("predictor".into(), format!("{} ({:?} mode)", cfg.model.model_name, args.mode)));
        if args.mode == Mode::Replay && args.cassette.is_none() {
            bail!("replay mode needs --cassette");
        }
        let gateway = Gateway::from_mode(cfg.model.clone(), args.mode, args.cassette.as_deref())?;
        let engine = PromptEngine::new(tpl.clone(), tax.clone(), &cfg.prompt);
        let needs_context = settings.iter().any(|s| s.with_interprocedural);
        let ctx: Vec<Result<ContextBundle, AnalysisError>> = if needs_context {
            bundles(&instances, &units, &cfg)?
        } else {
            instances
                .iter()
                .map(|i| Ok(i.context.clone().unwrap_or_else(|| ContextBundle::direct_only(i.function_source.clone()))))
                .collect()
        };
        for s in settings {
            let preds = run_setting(&engine, &gateway, &instances, &ctx, s, cfg.evaluation.parallelism)?;
            runs.push((s.to_string(), preds));
        }
    }

    for (name, preds) in &runs {
        results.push(SettingResult::compute(name.clone(), preds, &instances, include_nd)?);
        let failures = preds.iter().filter(|p| p.error.is_some()).count();
        if failures > 0 {
            writeln!(err, "{name}: {failures} prediction(s) failed and are scored incorrect")?;
        }
        if let Some(dir) = &args.out_dir {
            std::fs::create_dir_all(dir)?;
            let file = dir.join(format!("predictions-{}.jsonl", name.replace('+', "_")));
            std::fs::write(&file, predictions_jsonl(preds))?;
        }
    }
    header.push(("config".into(), cfg.echo()));
    let mut report = render_report(&results, &header, args.format);

    if let Some(jpath) = &args.judgments {
        let judged = match &args.judged_setting {
            Some(s) => s.to_string(),
            None => runs.first().map(|(n, _)| n.clone()).unwrap_or_default(),
        };
        let preds = runs
            .iter()
            .find(|(n, _)| *n == judged)
            .map(|(_, p)| p)
            .with_context(|| format!("setting {judged} was not evaluated"))?;
        let judgments = evaluator::load_judgments(jpath)?;
        let table = evaluator::quadrant_table(preds, &instances, &judgments, include_nd)?;
        report.push_str(&format!("\n# reasoning quadrants: {judged}\n"));
        report.push_str(&render_quadrants(&table));
    }
    write_output(args.out.as_deref(), &report, out)?;
    Ok(EXIT_OK)
}

fn run_setting(
    engine: &PromptEngine,
    gateway: &Gateway,
    instances: &[BenchmarkInstance],
    ctx: &[Result<ContextBundle, AnalysisError>],
    settings: PromptSettings,
    parallelism: usize,
) -> Result<Vec<PredictionRecord>> {
    let name = settings.to_string();
    let failed = |id: &str, e: String| PredictionRecord {
        instance_id: id.to_string(),
        predicted: None,
        explanation: String::new(),
        settings: name.clone(),
        error: Some(e),
    };
    let mut records: Vec<Option<PredictionRecord>> = vec![None; instances.len()];
    let mut prompts = Vec::new();
    let mut slots = Vec::new();
    for (i, (inst, c)) in instances.iter().zip(ctx).enumerate() {
        let fallback;
        let bundle = match c {
            Ok(b) => b,
            Err(_) if !settings.with_interprocedural => {
                fallback = ContextBundle::direct_only(inst.function_source.clone());
                &fallback
            }
            Err(e) => {
                records[i] = Some(failed(&inst.id, e.to_string()));
                continue;
            }
        };
        match engine.build_prompt(inst, bundle, settings) {
            Ok(p) => {
                prompts.push(p);
                slots.push(i);
            }
            Err(e) => records[i] = Some(failed(&inst.id, e.to_string())),
        }
    }
    let completions = gateway.complete_batch(&prompts, parallelism)?;
    for ((i, prompt), c) in slots.into_iter().zip(&prompts).zip(completions) {
        let rec = match c
            .map_err(|e| e.to_string())
            .and_then(|c| engine.parse_response(&c.text).map_err(|e| e.to_string()))
        {
            Ok(v) => PredictionRecord {
                instance_id: prompt.instance_id.clone(),
                predicted: Some(v.label),
                explanation: v.explanation,
                settings: name.clone(),
                error: None,
            },
            Err(e) => failed(&prompt.instance_id, e),
        };
        records[i] = Some(rec);
    }
    Ok(records.into_iter().map(|r| r.expect("every instance has a record")).collect())
}

pub fn cmd_mine(args: &MineArgs, cfg: RunConfig, out: &mut dyn Write) -> Result<i32> {
    let candidates = dataset::mine_commits(&args.repo, &cfg.mining, &extractor(&cfg)?)?;
    let mut text = String::new();
    for c in &candidates {
        text.push_str(&serde_json::to_string(c)?);
        text.push('\n');
    }
    write_output(args.out.as_deref(), &text, out)?;
    Ok(EXIT_OK)
}

pub fn cmd_validate(args: &ValidateArgs, cfg: RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let tax = taxonomy(&cfg)?;
    let instances = dataset::load_dataset(&args.dataset, &tax)?;
    let ex = extractor(&cfg)?;
    let mut ok = true;
    for inst in &instances {
        if !ex.line_has_logging_call(inst.log_line_text()) {
            ok = false;
            writeln!(err, "instance {}: line {} holds no logging call", inst.id, inst.log_line)?;
        }
    }
    writeln!(out, "{} instance(s) load", instances.len())?;
    if let Some(m) = &args.manifest {
        let manifest = Manifest::load(m)?;
        let report = dataset::validate_manifest(&instances, &manifest)?;
        write!(out, "{report}")?;
        ok &= report.passed();
    }
    Ok(if ok { EXIT_OK } else { EXIT_FINDINGS })
}
