use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use token_bias::corpus::Corpus;
use token_bias::generator::{to_jsonl, from_jsonl, FallacyKind, GenerationConfig, Generator, RemoteCompleter, StubCompleter, TextCompleter};
use token_bias::model_client::{Feature, RemoteClient, SimulatedAgentSpec};
use token_bias::paired_stats::TestDirection;
use token_bias::perturbation::{generate_for, pair_instances, pairs_from_jsonl, pairs_to_jsonl, Hypothesis};
use token_bias::runner::exec::{records_from_jsonl, records_to_jsonl};
use token_bias::runner::simulate::CalibrationReport;
use token_bias::runner::{analyze, parse_csv, report, run_experiment, simulate_calibration, ExperimentPlan, PlanConfig, ReportFormat, ResultRow};

#[derive(Parser)]
#[command(name = "token-bias", version, about = "Matched-pair token-bias experiments on reasoning agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Hypothesis H1..H6.
    #[arg(long)]
    hypothesis: Option<Hypothesis>,
    /// Number of instances or pairs.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file mirroring the experiment plan and endpoint settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Never touch the network: stub generation, cache-only remote agents.
    #[arg(long)]
    offline: bool,
    #[arg(long)]
    alpha: Option<f64>,
    /// less, greater or two_sided.
    #[arg(long)]
    direction: Option<TestDirection>,
    /// csv, json or markdown.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate problem instances as JSONL.
    Generate {
        /// One fallacy kind (conj_v1..conj_v6, syllogism); defaults to the hypothesis mix.
        #[arg(long)]
        kind: Option<FallacyKind>,
        #[command(flatten)]
        common: Common,
    },
    /// Build matched pairs for a hypothesis, from an instance file or fresh generation.
    Pair {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Query the configured agents on a paired dataset and write run records.
    Run {
        #[arg(long)]
        pairs: PathBuf,
        /// Also write the result table here.
        #[arg(long)]
        results: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Test stored run records and print result rows.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate rejection rates of a simulated agent over many replications.
    Simulate {
        #[arg(long, default_value_t = 1000)]
        replications: usize,
        /// Base success probability.
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        /// Feature shift, e.g. contains_linda_exemplar=0.3. Repeatable.
        #[arg(long = "delta", value_parser = parse_delta)]
        deltas: Vec<(Feature, f64)>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-render a result table (CSV or JSON) in another format.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_delta(s: &str) -> Result<(Feature, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected feature=value")?;
    let feature = serde_json::from_value(serde_json::Value::String(name.trim().into()))
        .map_err(|_| format!("unknown feature `{name}`"))?;
    let value = value.trim().parse().map_err(|_| format!("bad delta `{value}`"))?;
    Ok((feature, value))
}

impl Common {
    fn config(&self) -> Result<PlanConfig> {
        Ok(match &self.config {
            Some(path) => PlanConfig::load(path)?,
            None => PlanConfig::default(),
        })
    }

    fn plan(&self) -> Result<(ExperimentPlan, Option<GenerationConfig>)> {
        let mut config = self.config()?;
        let generation = config.generator.take();
        let mut plan = config.into_plan(self.hypothesis)?;
        if let Some(n) = self.n {
            plan.n = n;
        }
        if let Some(seed) = self.seed {
            plan.seed = seed;
        }
        if let Some(alpha) = self.alpha {
            plan.alpha = alpha;
        }
        if let Some(direction) = self.direction {
            plan.direction = direction;
        }
        if let Some(p) = self.parallelism {
            plan.parallelism = p;
        }
        plan.validate()?;
        Ok((plan, generation))
    }

    fn format(&self) -> Result<ReportFormat> {
        Ok(self.format.as_deref().unwrap_or("csv").parse()?)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn completer(corpus: &Corpus, offline: bool, generation: Option<GenerationConfig>) -> Result<Box<dyn TextCompleter>> {
    if offline {
        return Ok(Box::new(StubCompleter::new(corpus.clone())));
    }
    match generation {
        Some(g) => Ok(Box::new(RemoteCompleter::new(RemoteClient::new(g.endpoint)?))),
        None => bail!("generation needs a [generator.endpoint] section in --config, or --offline for the bundled stub"),
    }
}

fn calibration_text(report: &CalibrationReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["prompting_method", "rejection_rate", "mean_z", "mean_n_star", "replications", "n", "alpha"])?;
            for c in &report.cells {
                w.write_record([
                    c.prompting_method.clone(),
                    format!("{:.6}", c.rejection_rate),
                    format!("{:.6}", c.mean_z),
                    format!("{:.3}", c.mean_n_star),
                    report.replications.to_string(),
                    report.n.to_string(),
                    report.alpha.to_string(),
                ])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        ReportFormat::Markdown => {
            let mut s = "| prompting_method | rejection_rate | mean_z | mean_n_star |\n|---|---|---|---|\n".to_string();
            for c in &report.cells {
                s += &format!("| {} | {:.6} | {:.6} | {:.3} |\n", c.prompting_method, c.rejection_rate, c.mean_z, c.mean_n_star);
            }
            s
        }
    })
}

fn read_rows(path: &PathBuf) -> Result<Vec<ResultRow>> {
    let text = read(path)?;
    if text.trim_start().starts_with('[') {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(parse_csv(&text)?)
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate { kind, common } => {
            let corpus = Corpus::bundled();
            let generation = common.config()?.generator;
            let completer = completer(&corpus, common.offline, generation)?;
            let generator = Generator::new(&corpus, completer.as_ref());
            let seed = common.seed.unwrap_or(0);
            let instances = match (kind, common.hypothesis) {
                (Some(kind), _) => generator.generate(kind, common.n.unwrap_or(100), seed)?,
                (None, Some(h)) => generate_for(h, common.n.unwrap_or(h.default_n()), seed, &generator)?,
                (None, None) => bail!("pass --kind or --hypothesis"),
            };
            common.emit(&to_jsonl(&instances))
        }
        Command::Pair { input, common } => {
            let (plan, generation) = common.plan()?;
            let corpus = Corpus::bundled();
            let instances = match input {
                Some(path) => from_jsonl(&read(&path)?)?,
                None => {
                    let completer = completer(&corpus, common.offline, generation)?;
                    generate_for(plan.hypothesis, plan.n, plan.seed, &Generator::new(&corpus, completer.as_ref()))?
                }
            };
            let pairs = pair_instances(plan.hypothesis, &instances, plan.seed, &corpus, &plan.pair_options)?;
            common.emit(&pairs_to_jsonl(&pairs))
        }
        Command::Run { pairs, results, common } => {
            let mut common = common;
            let pairs = pairs_from_jsonl(&read(&pairs)?)?;
            if common.hypothesis.is_none() {
                common.hypothesis = pairs.first().map(|p| p.hypothesis);
            }
            let (plan, _) = common.plan()?;
            if plan.agents.is_empty() {
                bail!("no agents configured; add [[agents]] entries to the --config file");
            }
            let output = run_experiment(&plan, pairs, common.offline)?;
            if let Some(path) = results {
                fs::write(&path, report(&output.rows, common.format()?)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            common.emit(&records_to_jsonl(&output.records))
        }
        Command::Analyze { records, common } => {
            let mut common = common;
            let records = records_from_jsonl(&read(&records)?)?;
            if common.hypothesis.is_none() {
                common.hypothesis = records.first().map(|r| r.hypothesis);
            }
            let (plan, _) = common.plan()?;
            let rows = analyze(&records, &plan)?;
            common.emit(&report(&rows, common.format()?)?)
        }
        Command::Simulate { replications, q, deltas, common } => {
            let (plan, _) = common.plan()?;
            let mut spec = SimulatedAgentSpec::null(q, common.seed.unwrap_or(0));
            for (feature, delta) in deltas {
                spec = spec.with_delta(feature, delta);
            }
            let calibration = simulate_calibration(&spec, &plan, replications)?;
            common.emit(&calibration_text(&calibration, common.format()?)?)
        }
        Command::Report { input, common } => {
            let rows = read_rows(&input)?;
            common.emit(&report(&rows, common.format()?)?)
        }
    }
}
