//! The `rulecast` command line: train, predict, explain and evaluate.

mod error;
mod io;
pub mod model_file;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rulecast::data::{Dataset, FeatureMatrix, Schema, SplitPlan};
use rulecast::eval::{run_experiment, Baseline, ExperimentConfig};
use rulecast::pipeline::{train_pipeline, PipelineConfig};
use rulecast::predictor::WeightScheme;
use rulecast::seed::derive_seed;

pub use error::CliError;
pub use io::write_atomic;
use model_file::ModelFile;

pub const THREADS_ENV: &str = "RULECAST_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "rulecast",
    version,
    about = "Compact rule-set classifiers from random forests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a rule-set model and write it to a model file.
    Train(TrainArgs),
    /// Score samples with a trained model.
    Predict(PredictArgs),
    /// List a model's rules with their coefficients and training accuracy.
    Explain(ExplainArgs),
    /// Repeated stratified cross-validation against tree baselines.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Number of trees in the rule-generating forest.
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Weight of a rule predicted to be correct.
    #[arg(long, default_value_t = 2.0)]
    pub weight_correct: f64,
    /// Weight of a rule predicted to be incorrect.
    #[arg(long, default_value_t = 1.0)]
    pub weight_incorrect: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    /// Number of rules to keep (M).
    #[arg(long)]
    pub m_rules: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,5,10,15,20")]
    pub m_values: Vec<usize>,
    /// Comma-separated subset of rf, rf-simple, dt; or `none`.
    #[arg(long, default_value = "rf,rf-simple,dt")]
    pub baselines: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "report")]
    pub report_dir: PathBuf,
}

impl ModelArgs {
    fn pipeline_config(&self, m: usize) -> Result<PipelineConfig, CliError> {
        if self.trees == 0 {
            return Err(CliError::Usage("--trees must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(CliError::Usage("--max-depth must be at least 1".into()));
        }
        let weights = WeightScheme::new(self.weight_correct, self.weight_incorrect)
            .map_err(|_| CliError::Usage("weights must be positive and finite".into()))?;
        Ok(PipelineConfig {
            m,
            n_trees: self.trees,
            max_depth: self.max_depth,
            seed: self.seed,
            weights,
            ..PipelineConfig::default()
        })
    }
}

fn parse_baselines(text: &str) -> Result<Vec<Baseline>, CliError> {
    if text.trim() == "none" {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim().parse::<Baseline>().map_err(|_| {
                CliError::Usage(format!(
                    "unknown baseline `{}` (rf, rf-simple, dt or none)",
                    s.trim()
                ))
            })
        })
        .collect()
}

/// Sizes the global worker pool from `RULECAST_THREADS` (0 or unset = all cores).
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a non-negative integer, got `{raw}`"
        ))
    })?;
    if n > 0 {
        // Fails only if the pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn load_dataset(data: &Path, schema: &Path) -> Result<(Schema, Dataset), CliError> {
    let schema = Schema::from_file(schema).map_err(CliError::data)?;
    let dataset = Dataset::load_csv(data, &schema).map_err(CliError::data)?;
    Ok((schema, dataset))
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => return Err(CliError::Usage(e.render().to_string())),
        Err(e) => {
            write!(out, "{}", e.render()).map_err(stdout_error)?;
            return Ok(());
        }
    };
    configure_threads()?;
    match cli.command {
        Command::Train(a) => train(&a, out),
        Command::Predict(a) => predict(&a, out),
        Command::Explain(a) => explain(&a, out),
        Command::Evaluate(a) => evaluate(&a, out),
    }
}

fn stdout_error(e: std::io::Error) -> CliError {
    CliError::Output(format!("cannot write output: {e}"))
}

fn train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.m_rules == 0 {
        return Err(CliError::Usage("--m-rules must be at least 1".into()));
    }
    let config = args.model.pipeline_config(args.m_rules)?;
    let (schema, dataset) = load_dataset(&args.data, &args.schema)?;
    let fill = dataset.category_modes().map_err(CliError::data)?;
    let dataset = dataset.impute_mode().map_err(CliError::data)?;
    let x = FeatureMatrix::from_dataset(&dataset).map_err(CliError::data)?;
    let mut model = train_pipeline(&x, &dataset.labels, &config).map_err(CliError::training)?;
    model.class_names = [schema.negative_name.clone(), schema.positive_name.clone()];
    model.info.dataset = schema.name.clone();
    let file = ModelFile::new(schema, fill, model);
    file.save(&args.out)?;
    let mut text = String::new();
    for i in 0..file.model.m() {
        let _ = writeln!(text, "{}", file.model.rule_text(i));
    }
    out.write_all(text.as_bytes()).map_err(stdout_error)?;
    eprintln!(
        "{} rules selected from {} candidates; model written to {}",
        file.model.m(),
        file.model.info.candidate_rules,
        args.out.display()
    );
    Ok(())
}

fn predict(args: &PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ModelFile::load(&args.model)?;
    let model = &file.model;
    let raw = std::fs::read(&args.input)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.input.display())))?;
    let n_rows;
    let x = if raw.iter().all(u8::is_ascii_whitespace) {
        n_rows = 0;
        None
    } else {
        let x = FeatureMatrix::read_csv(raw.as_slice(), &model.features, Some(&file.fill))
            .map_err(CliError::data)?;
        n_rows = x.n_rows();
        Some(x)
    };
    let traces = (0..n_rows)
        .map(|i| model.predict(x.as_ref().expect("rows imply a matrix").row(i)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::data)?;
    let m = model.m();
    let bytes = match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["row".to_string(), "probability".into(), "class".into()];
            for r in 1..=m {
                header.extend([
                    format!("rule{r}_output"),
                    format!("rule{r}_correct"),
                    format!("rule{r}_weight"),
                ]);
            }
            w.write_record(&header)
                .map_err(|e| CliError::Output(e.to_string()))?;
            for (i, t) in traces.iter().enumerate() {
                let mut rec = vec![
                    (i + 1).to_string(),
                    t.probability.to_string(),
                    model.class_names[t.class() as usize].clone(),
                ];
                for r in 0..m {
                    rec.extend([
                        t.rule_outputs[r].to_string(),
                        t.correctness_flags[r].to_string(),
                        t.weights[r].to_string(),
                    ]);
                }
                w.write_record(&rec)
                    .map_err(|e| CliError::Output(e.to_string()))?;
            }
            w.into_inner()
                .map_err(|e| CliError::Output(e.to_string()))?
        }
        Format::Text => {
            let mut s = format!("{n_rows} samples, {m} rules\n");
            for (i, t) in traces.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "sample {}: probability {:.3} -> {}",
                    i + 1,
                    t.probability,
                    model.class_names[t.class() as usize]
                );
                for r in 0..m {
                    let _ = writeln!(
                        s,
                        "  rule {}: output {} correct {} weight {}",
                        r + 1,
                        model.class_names[t.rule_outputs[r] as usize],
                        t.correctness_flags[r],
                        t.weights[r]
                    );
                }
            }
            s.into_bytes()
        }
    };
    match &args.out {
        Some(path) => write_atomic(path, &bytes),
        None => out.write_all(&bytes).map_err(stdout_error),
    }
}

fn explain(args: &ExplainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ModelFile::load(&args.model)?;
    let model = &file.model;
    let mut s = String::new();
    for i in 0..model.m() {
        let _ = writeln!(
            s,
            "{}  [coefficient {:+.4}, training accuracy {:.3}]",
            model.rule_text(i),
            model.selected.coefficients[i],
            model.correctness_rates[i]
        );
    }
    out.write_all(s.as_bytes()).map_err(stdout_error)
}

fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    if args.folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }
    if args.m_values.is_empty() || args.m_values.contains(&0) {
        return Err(CliError::Usage("--m-values must be positive".into()));
    }
    let baselines = parse_baselines(&args.baselines)?;
    let pipeline = args.model.pipeline_config(args.m_values[0])?;
    let (schema, dataset) = load_dataset(&args.data, &args.schema)?;
    let dataset = dataset.impute_mode().map_err(CliError::data)?;
    let x = FeatureMatrix::from_dataset(&dataset).map_err(CliError::data)?;
    let y = &dataset.labels;
    let plan = SplitPlan::new(
        y,
        args.repeats,
        args.folds,
        derive_seed(args.model.seed, &[1]),
    )
    .map_err(CliError::data)?;
    let config = ExperimentConfig {
        m_values: args.m_values.clone(),
        baselines,
        pipeline,
        seed: args.model.seed,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&schema.name, &x, y, &plan, &config).map_err(CliError::training)?;

    std::fs::create_dir_all(&args.report_dir).map_err(|e| {
        CliError::Output(format!("cannot create {}: {e}", args.report_dir.display()))
    })?;
    let csv_err = |e: rulecast::Error| CliError::Output(e.to_string());
    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut buf = Vec::new();
    report.write_folds_csv(&mut buf).map_err(csv_err)?;
    files.push(("folds.csv", std::mem::take(&mut buf)));
    report.write_summary_csv(&mut buf).map_err(csv_err)?;
    files.push(("summary.csv", std::mem::take(&mut buf)));
    report.write_averaging_csv(&mut buf).map_err(csv_err)?;
    files.push(("averaging.csv", std::mem::take(&mut buf)));
    report.write_rule_counts_csv(&mut buf).map_err(csv_err)?;
    files.push(("rule_counts.csv", std::mem::take(&mut buf)));
    let json = serde_json::json!({ "report": report, "summary": report.summary() });
    let mut text = serde_json::to_string_pretty(&json).expect("report serializes");
    text.push('\n');
    files.push(("report.json", text.into_bytes()));
    for (name, bytes) in &files {
        write_atomic(&args.report_dir.join(name), bytes)?;
    }
    out.write_all(report.render_summary().as_bytes())
        .map_err(stdout_error)
}
