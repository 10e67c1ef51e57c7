use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use argfair::classifier::{
    fixed_bias_labels, load_predictions, score, train_logreg, write_predictions, LabelAssignment,
    LogRegModel, TrainingParams,
};
use argfair::config::{RunSection, TableConfig};
use argfair::dataset::{bin_numeric, load_table, save_table, split, Dataset};
use argfair::dot::to_dot;
use argfair::{audit_batch, explain_row, AuditConfig, Execution, Polarity};

#[derive(Parser)]
#[command(
    name = "argfair",
    version,
    about = "Audit classifiers for individual fairness with weighted argumentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, clean, bin and split a raw table.
    Prepare(PrepareArgs),
    /// Train the built-in logistic regression.
    Train(TrainArgs),
    /// Write predictions of a trained model.
    Predict(PredictArgs),
    /// Explain the classification of one individual.
    Explain(ExplainArgs),
    /// Explain every queried individual and aggregate the weakest pairs.
    Audit(AuditArgs),
    /// Append a random binary `bias-attr` column.
    InjectBias(InjectArgs),
    /// Write the argumentation graph of one individual as DOT.
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
struct TableArgs {
    /// Table config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Data file (CSV).
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct PrepareArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Output directory for train.csv, test.csv and schema.toml.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Where to write the model (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Labelled data to report accuracy on.
    #[arg(long)]
    test_data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    params: TrainParamArgs,
}

#[derive(Args, Clone)]
struct TrainParamArgs {
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
}

impl TrainParamArgs {
    fn resolve(&self, seed: Option<u64>, run: &RunSection) -> TrainingParams {
        let d = TrainingParams::default();
        TrainingParams {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            epochs: self.epochs.unwrap_or(d.epochs),
            l2: self.l2.unwrap_or(d.l2),
            seed: seed.or(run.seed).unwrap_or(d.seed),
            threshold: self.threshold.unwrap_or(d.threshold),
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long)]
    model: PathBuf,
    /// Predictions file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinClassifier {
    /// `+` iff bias-attr = 1.
    FixedBias,
    /// Labels taken from the data file.
    GroundTruth,
}

#[derive(Args, Clone)]
struct LabelArgs {
    /// Predictions file (row_index,label).
    #[arg(long, group = "label_source")]
    predictions: Option<PathBuf>,
    /// Trained model (JSON) applied to the data.
    #[arg(long, group = "label_source")]
    model: Option<PathBuf>,
    #[arg(long, value_enum, group = "label_source")]
    classifier: Option<BuiltinClassifier>,
    /// Train a logistic regression on this labelled file first.
    #[arg(long, group = "label_source")]
    train_data: Option<PathBuf>,
    #[command(flatten)]
    params: TrainParamArgs,
}

#[derive(Args, Clone)]
struct AuditFlags {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    polarity: Option<Polarity>,
    /// Recorded in the output for reproducibility; also seeds `--train-data`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    jobs: Option<usize>,
}

impl AuditFlags {
    fn resolve(&self, run: &RunSection) -> Result<(AuditConfig, Execution)> {
        let d = AuditConfig::default();
        let polarity = match (self.polarity, &run.polarity) {
            (Some(p), _) => p,
            (None, Some(s)) => s
                .parse()
                .map_err(|e| usage(format!("config polarity: {e}")))?,
            (None, None) => d.polarity,
        };
        let config = AuditConfig {
            k: self.k.or(run.k).unwrap_or(d.k),
            epsilon: self.epsilon.or(run.epsilon).unwrap_or(d.epsilon),
            max_iter: self.max_iter.or(run.max_iter).unwrap_or(d.max_iter),
            polarity,
            seed: self.seed.or(run.seed),
        };
        if config.k == 0 {
            return Err(usage("--k must be at least 1"));
        }
        if !(config.epsilon.is_finite() && config.epsilon > 0.0) {
            return Err(usage("--epsilon must be a positive number"));
        }
        if config.max_iter == 0 {
            return Err(usage("--max-iter must be at least 1"));
        }
        let jobs = self.jobs.or(run.jobs);
        if jobs == Some(0) {
            return Err(usage("--jobs must be at least 1"));
        }
        Ok((config, Execution::with_jobs(jobs)))
    }
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Row of the queried individual (0-based).
    #[arg(long)]
    row: usize,
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    flags: AuditFlags,
    /// Also write the graph as DOT.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the explanation document (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportDotArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long)]
    row: usize,
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    flags: AuditFlags,
    /// DOT file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    table: TableArgs,
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    flags: AuditFlags,
    /// Write the report document (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InjectArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Output data file.
    #[arg(long)]
    out: PathBuf,
    /// Output config; defaults to the data path with a .toml extension.
    #[arg(long)]
    config_out: Option<PathBuf>,
}

/// Invalid invocation, reported with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

struct Loaded {
    config: TableConfig,
    data: Dataset,
}

fn load(args: &TableArgs) -> Result<Loaded> {
    let config = TableConfig::load(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let table = load_table(&args.data, &config.schema, &config.format)
        .with_context(|| format!("reading data {}", args.data.display()))?;
    if table.dropped_rows > 0 {
        eprintln!("dropped {} rows with missing values", table.dropped_rows);
    }
    let data = bin_numeric(table.dataset, &config.binning)?;
    Ok(Loaded { config, data })
}

fn load_with(config: &TableConfig, path: &Path) -> Result<Dataset> {
    let table = load_table(path, &config.schema, &config.format)
        .with_context(|| format!("reading data {}", path.display()))?;
    Ok(bin_numeric(table.dataset, &config.binning)?)
}

fn read_model(path: &Path) -> Result<LogRegModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))
}

fn labels_for(
    loaded: &Loaded,
    args: &LabelArgs,
    seed: Option<u64>,
    run: &RunSection,
) -> Result<(LabelAssignment, String)> {
    if let Some(path) = &args.predictions {
        let labels = load_predictions(path, &loaded.data)?;
        return Ok((labels, format!("predictions:{}", path.display())));
    }
    if let Some(path) = &args.model {
        let model = read_model(path)?;
        return Ok((
            model.predict_dataset(&loaded.data),
            format!("model:{}", path.display()),
        ));
    }
    if let Some(path) = &args.train_data {
        let train = load_with(&loaded.config, path)?;
        let model = train_logreg(&train, &args.params.resolve(seed, run))?;
        return Ok((
            model.predict_dataset(&loaded.data),
            format!("trained:{}", path.display()),
        ));
    }
    match args.classifier {
        Some(BuiltinClassifier::FixedBias) => {
            Ok((fixed_bias_labels(&loaded.data)?, "fixed-bias".into()))
        }
        Some(BuiltinClassifier::GroundTruth) => Ok((
            LabelAssignment::ground_truth(&loaded.data)?,
            "ground-truth".into(),
        )),
        None => Err(usage(
            "no labels: pass --predictions, --model, --train-data or --classifier",
        )),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn check_row(row: usize, data: &Dataset) -> Result<()> {
    if row >= data.len() {
        return Err(usage(format!(
            "row {row} out of range; valid rows are 0..={}",
            data.len().saturating_sub(1)
        )));
    }
    Ok(())
}

fn cmd_prepare(args: &PrepareArgs) -> Result<()> {
    let loaded = load(&args.table)?;
    let seed = args.seed.or(loaded.config.run.seed).unwrap_or(0);
    let fraction = args
        .test_fraction
        .or(loaded.config.run.test_fraction)
        .unwrap_or(0.2);
    let data = loaded.data.resolved();
    let (train, test) = split(&data, fraction, seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let delimiter = loaded.config.format.delimiter;
    save_table(&train, args.out.join("train.csv"), delimiter)?;
    save_table(&test, args.out.join("test.csv"), delimiter)?;
    let run = RunSection {
        seed: Some(seed),
        test_fraction: Some(fraction),
        ..loaded.config.run.clone()
    };
    let described = TableConfig::describe(data.schema(), &loaded.config.format, run);
    fs::write(
        args.out.join("schema.toml"),
        TableConfig::to_toml_string(&described)?,
    )?;
    println!(
        "rows: {}  train: {}  test: {}  seed: {seed}  test_fraction: {fraction}",
        data.len(),
        train.len(),
        test.len()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let loaded = load(&args.table)?;
    let params = args.params.resolve(args.seed, &loaded.config.run);
    let model = train_logreg(&loaded.data, &params)?;
    fs::write(&args.out, serde_json::to_string_pretty(&model)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let truth = LabelAssignment::ground_truth(&loaded.data)?;
    let s = score(truth.labels(), model.predict_dataset(&loaded.data).labels());
    println!("train accuracy: {:.4}  f1: {:.4}", s.accuracy, s.f1);
    if let Some(path) = &args.test_data {
        let test = load_with(&loaded.config, path)?;
        let truth = LabelAssignment::ground_truth(&test)?;
        let s = score(truth.labels(), model.predict_dataset(&test).labels());
        println!("test accuracy: {:.4}  f1: {:.4}", s.accuracy, s.f1);
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let loaded = load(&args.table)?;
    let model = read_model(&args.model)?;
    let labels = model.predict_dataset(&loaded.data);
    let mut buf = Vec::new();
    write_predictions(&labels, &mut buf)?;
    write_output(args.out.as_deref(), std::str::from_utf8(&buf)?)
}

fn cmd_explain(args: &ExplainArgs) -> Result<()> {
    let loaded = load(&args.table)?;
    let (config, _) = args.flags.resolve(&loaded.config.run)?;
    check_row(args.row, &loaded.data)?;
    let (labels, source) = labels_for(&loaded, &args.labels, args.flags.seed, &loaded.config.run)?;
    let data = &loaded.data;
    let schema = data.schema();
    let r = explain_row(data, &labels, args.row, &config)?;

    let names: Vec<&str> = schema
        .attributes()
        .iter()
        .map(|a| a.name.as_str())
        .collect();
    println!("queried row {} ({})", args.row, labels.labels()[args.row]);
    println!("neighbours:");
    println!(
        "  {:>6}  {:>4}  {:>5}  {}",
        "row",
        "dist",
        "label",
        names.join(", ")
    );
    for (n, l) in r.neighbors.neighbors.iter().zip(&r.neighbor_labels) {
        let values: Vec<&str> = (0..schema.arity())
            .map(|j| data.value_str(n.index, j))
            .collect();
        println!(
            "  {:>6}  {:>4}  {:>5}  {}",
            n.index,
            n.distance,
            l.symbol(),
            values.join(", ")
        );
    }
    println!("final weights ({} iterations):", r.weights.iterations);
    for (arg, w) in r.graph.arguments().iter().zip(&r.explanation.rounded) {
        println!("  {:<40} {}", arg.display(schema), w);
    }
    let weakest: Vec<String> = r
        .explanation
        .weakest
        .iter()
        .map(|a| a.display(schema))
        .collect();
    println!("Exp = {{{}}}", weakest.join(", "));
    println!("consistent: {}", r.explanation.consistent);

    if let Some(path) = &args.dot {
        fs::write(path, to_dot(&r.graph, schema, Some(&r.weights)))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.out {
        let doc = json!({
            "config": config,
            "labels": source,
            "row": args.row,
            "neighbors": r.neighbors.neighbors,
            "arguments": r.graph.arguments().iter().zip(&r.explanation.rounded).map(|(a, w)| {
                let (attribute, value) = a.name(schema);
                json!({ "attribute": attribute, "value": value, "weight": w })
            }).collect::<Vec<_>>(),
            "attacks": r.graph.attacks().iter().map(|t| json!({
                "attacker": r.graph.arguments()[t.attacker].display(schema),
                "target": r.graph.arguments()[t.target].display(schema),
                "votes": t.votes,
                "k": r.graph.k(),
            })).collect::<Vec<_>>(),
            "iterations": r.weights.iterations,
            "weakest": weakest,
            "consistent": r.explanation.consistent,
        });
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_export_dot(args: &ExportDotArgs) -> Result<()> {
    let loaded = load(&args.table)?;
    let (config, _) = args.flags.resolve(&loaded.config.run)?;
    check_row(args.row, &loaded.data)?;
    let (labels, _) = labels_for(&loaded, &args.labels, args.flags.seed, &loaded.config.run)?;
    let r = explain_row(&loaded.data, &labels, args.row, &config)?;
    write_output(
        args.out.as_deref(),
        &to_dot(&r.graph, loaded.data.schema(), Some(&r.weights)),
    )
}

fn cmd_audit(args: &AuditArgs) -> Result<()> {
    let loaded = load(&args.table)?;
    let (config, exec) = args.flags.resolve(&loaded.config.run)?;
    let (labels, source) = labels_for(&loaded, &args.labels, args.flags.seed, &loaded.config.run)?;
    let started = Instant::now();
    let mut report = audit_batch(&loaded.data, &labels, &config, exec)?;
    report
        .meta
        .insert("config".into(), args.table.config.display().to_string());
    report
        .meta
        .insert("data".into(), args.table.data.display().to_string());
    report.meta.insert("labels".into(), source);
    print!("{}", report.render_table());
    eprintln!(
        "audited {} individuals in {:.2?}",
        report.queried,
        started.elapsed()
    );
    if let Some(path) = &args.out {
        fs::write(path, report.to_json()? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_inject_bias(args: &InjectArgs) -> Result<()> {
    let loaded = load(&args.table)?;
    let seed = args.seed.or(loaded.config.run.seed).unwrap_or(0);
    let biased = argfair::inject_bias(&loaded.data.resolved(), seed)?;
    let delimiter = loaded.config.format.delimiter;
    save_table(&biased, &args.out, delimiter)?;
    let config_out = args
        .config_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("toml"));
    let run = RunSection {
        seed: Some(seed),
        ..loaded.config.run.clone()
    };
    let described = TableConfig::describe(biased.schema(), &loaded.config.format, run);
    fs::write(&config_out, TableConfig::to_toml_string(&described)?)
        .with_context(|| format!("writing {}", config_out.display()))?;
    println!(
        "wrote {} rows to {} and config to {}",
        biased.len(),
        args.out.display(),
        config_out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prepare(a) => cmd_prepare(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Audit(a) => cmd_audit(a),
        Command::InjectBias(a) => cmd_inject_bias(a),
        Command::ExportDot(a) => cmd_export_dot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
