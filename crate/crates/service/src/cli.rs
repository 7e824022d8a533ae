//! The `jarvis` command line: `serve`, `ingest`, `adjudicate`, `eval`,
//! `gen` and `config`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use jarvis_core::canonical;
use jarvis_core::encoder::EndpointMode;
use jarvis_core::error::{Error, Result};
use jarvis_core::eval::{config_key, evaluate_engine, load_corpus, run_ablation, AblationRun, EvalReport};
use jarvis_core::pipeline::{Adjudicator, PipelineConfig};
use jarvis_core::synth::{generate_corpus, read_corpus, write_corpus, CorpusSpec};

use crate::api::{self, ApiOptions};
use crate::config::{Backends, RunConfig, ServiceConfig, Thresholds};
use crate::state::{unix_now, Service};

#[derive(Debug, Parser)]
#[command(name = "jarvis", version, about = "Evidence-graph review fraud adjudication")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Load a corpus directory into a data directory.
    Ingest(IngestArgs),
    /// Adjudicate stored reviews and persist the cases.
    Adjudicate(AdjudicateArgs),
    /// Score a labeled corpus, optionally over an ablation grid.
    Eval(EvalArgs),
    /// Generate a synthetic labeled corpus.
    Gen(GenArgs),
    /// Print the default configuration file.
    Config,
}

/// Pipeline settings: a `--config` file, then individual overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// JSON run configuration; see `jarvis config`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dense weight in the hybrid score, in [0, 1].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Candidates retrieved per review.
    #[arg(long)]
    pub topk: Option<usize>,
    /// Retrieval window in days.
    #[arg(long)]
    pub window_days: Option<u32>,
    /// Time window for entity-linked review expansion, in hours.
    #[arg(long)]
    pub delta_t_hours: Option<i64>,
    /// Reviews attached per entity during expansion.
    #[arg(long)]
    pub max_fanout: Option<usize>,
}

impl PipelineArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut run: RunConfig = match &self.config {
            Some(path) => {
                let bytes =
                    fs::read(path).map_err(|e| Error::validation("config", format!("{}: {e}", path.display())))?;
                serde_json::from_slice(&bytes)
                    .map_err(|e| Error::validation("config", format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        let p = &mut run.pipeline;
        if let Some(v) = self.lambda {
            p.index.lambda = v;
        }
        if let Some(v) = self.topk {
            p.index.k = v;
        }
        if let Some(v) = self.window_days {
            p.index.window_days = v;
        }
        if let Some(v) = self.delta_t_hours {
            p.graph.delta_t_seconds = v.saturating_mul(3600);
        }
        if let Some(v) = self.max_fanout {
            p.graph.max_reviews_per_entity = v;
        }
        p.validate()?;
        Ok(run)
    }
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Encoder backend; remote reads JARVIS_DENSE_URL, JARVIS_DESCRIBE_URL, JARVIS_SPARSE_URL.
    #[arg(long, default_value = "mock")]
    pub encoders: EndpointMode,
    /// Adjudicator backend; remote reads JARVIS_LLM_URL.
    #[arg(long, default_value = "mock")]
    pub adjudicator: EndpointMode,
}

impl BackendArgs {
    fn build(&self, pipeline: &PipelineConfig) -> Result<Backends> {
        Backends::from_modes(self.encoders, self.adjudicator, pipeline.index.dense_dim)
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    /// Static bearer token required on API routes.
    #[arg(long, env = "JARVIS_TOKEN")]
    pub token: Option<String>,
    /// Built console assets to serve under /console.
    #[arg(long, default_value = "console/dist")]
    pub console_dir: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub backends: BackendArgs,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    /// Directory holding reviews.jsonl and optionally behaviors.jsonl.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub backends: BackendArgs,
}

#[derive(Debug, Args)]
pub struct AdjudicateArgs {
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    /// Review to adjudicate; repeatable.
    #[arg(long = "review-id", required = true)]
    pub review_ids: Vec<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub backends: BackendArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Labeled corpus directory.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Report file, canonical JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub backends: BackendArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// JSON corpus spec. Without it a benchmark corpus is generated from
    /// --seed, --campaigns and --genuine.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub campaigns: usize,
    #[arg(long, default_value_t = 5000)]
    pub genuine: usize,
}

fn open_service(data_dir: &Path, pipeline: &PipelineArgs, backends: &BackendArgs) -> Result<Service> {
    let run = pipeline.resolve()?;
    let mut cfg = ServiceConfig::new(data_dir);
    cfg.pipeline = run.pipeline;
    cfg.mock_rules = run.mock_rules;
    Service::open(cfg.clone(), backends.build(&cfg.pipeline)?)
}

/// Writes to stdout; a closed pipe (`jarvis ... | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    emit(&format!("{}\n", canonical::to_string(v)?))
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let svc = Arc::new(open_service(&args.data_dir, &args.pipeline, &args.backends)?);
    let addr: SocketAddr = format!("{}:{}", args.bind, args.port)
        .parse()
        .map_err(|e| Error::validation("bind", format!("{e}")))?;
    let opts = ApiOptions {
        bearer_token: args.token,
        console_dir: Some(args.console_dir),
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!("listening on http://{}", listener.local_addr()?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        };
        api::serve(listener, svc, opts, shutdown).await
    })?;
    Ok(())
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let svc = open_service(&args.data_dir, &args.pipeline, &args.backends)?;
    let corpus = read_corpus(&args.corpus)?;
    let reviews = svc.ingest_batch(&corpus.reviews, unix_now())?;
    let behaviors = svc.add_behaviors(corpus.behaviors)?;
    print_json(&serde_json::json!({
        "reviews": reviews,
        "behaviors_added": behaviors,
        "stats": svc.stats(),
    }))
}

pub fn adjudicate(args: AdjudicateArgs) -> Result<()> {
    let svc = open_service(&args.data_dir, &args.pipeline, &args.backends)?;
    for id in &args.review_ids {
        print_json(&svc.adjudicate(id, unix_now())?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct EvalOutput {
    pub key: String,
    pub report: EvalReport,
    pub thresholds: Thresholds,
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ablation: Vec<AblationRun>,
}

/// Threshold misses, one message each.
pub fn check_thresholds(report: &EvalReport, t: &Thresholds) -> Vec<String> {
    let mut out = Vec::new();
    for (name, got, min) in [
        ("precision", report.precision, t.min_precision),
        ("recall", report.recall, t.min_recall),
        ("f1", report.f1, t.min_f1),
    ] {
        if let Some(min) = min {
            match got {
                Some(v) if v >= min => {}
                Some(v) => out.push(format!("{name} {v:.4} < {min}")),
                None => out.push(format!("{name} undefined, required >= {min}")),
            }
        }
    }
    out
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

pub fn render_table(output: &EvalOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<58} {:>9} {:>9} {:>9}  tp/fp/fn/tn",
        "run", "precision", "recall", "f1"
    );
    let mut row = |key: &str, r: &EvalReport| {
        let c = r.counts;
        let _ = writeln!(
            s,
            "{:<58} {:>9} {:>9} {:>9}  {}/{}/{}/{}",
            key,
            fmt_metric(r.precision),
            fmt_metric(r.recall),
            fmt_metric(r.f1),
            c.tp,
            c.fp,
            c.fn_,
            c.tn
        );
    };
    row(&output.key, &output.report);
    for run in &output.ablation {
        row(&run.key, &run.report);
    }
    s
}

/// Returns whether every threshold held.
pub fn eval(args: EvalArgs) -> Result<bool> {
    let run = args.pipeline.resolve()?;
    let corpus = read_corpus(&args.corpus)?;
    if corpus.labels.is_empty() {
        return Err(Error::validation("corpus", "labels.json is required for evaluation"));
    }
    let backends = args.backends.build(&run.pipeline)?;
    let engine = load_corpus(Arc::clone(&backends.encoder), &run.pipeline, &corpus)?;
    let adjudicator = match &backends.llm {
        Some(llm) => Adjudicator::Llm(llm.as_ref()),
        None => Adjudicator::Mock(run.mock_rules.clone()),
    };
    let (report, _) = evaluate_engine(&engine, &run.pipeline, &corpus, &adjudicator)?;
    let ablation = match &run.ablation {
        Some(a) => run_ablation(
            Arc::clone(&backends.encoder),
            &corpus,
            &run.pipeline,
            a,
            &run.mock_rules,
        )?,
        None => Vec::new(),
    };
    let output = EvalOutput {
        key: config_key(&run.pipeline),
        failures: check_thresholds(&report, &run.thresholds),
        report,
        thresholds: run.thresholds,
        ablation,
    };
    emit(&render_table(&output))?;
    for f in &output.failures {
        eprintln!("threshold missed: {f}");
    }
    if let Some(path) = &args.out {
        fs::write(path, canonical::to_vec(&output)?)?;
    }
    Ok(output.failures.is_empty())
}

pub fn gen(args: GenArgs) -> Result<()> {
    let spec: CorpusSpec = match &args.spec {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Error::validation("spec", format!("{}: {e}", path.display())))?;
            serde_json::from_slice(&bytes).map_err(|e| Error::validation("spec", format!("{}: {e}", path.display())))?
        }
        None => CorpusSpec::benchmark(args.seed, args.campaigns, args.genuine),
    };
    let corpus = generate_corpus(&spec)?;
    write_corpus(&args.out, &corpus)?;
    fs::write(args.out.join("spec.json"), canonical::to_vec(&spec)?)?;
    print_json(&serde_json::json!({
        "reviews": corpus.reviews.len(),
        "behaviors": corpus.behaviors.len(),
        "deceptive": corpus.deceptive_ids().count(),
        "out": args.out,
    }))
}

pub fn print_default_config() -> Result<()> {
    let run = RunConfig {
        ablation: Some(jarvis_core::eval::AblationConfig::default()),
        ..RunConfig::default()
    };
    emit(&format!("{}\n", serde_json::to_string_pretty(&run)?))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"pipeline":{"index":{"lambda":0.2,"k":10}}}"#).unwrap();
        let cli = Cli::try_parse_from([
            "jarvis",
            "eval",
            "--corpus",
            "c",
            "--config",
            path.to_str().unwrap(),
            "--topk",
            "7",
            "--delta-t-hours",
            "48",
        ])
        .unwrap();
        let Command::Eval(args) = cli.command else {
            panic!("expected eval")
        };
        let run = args.pipeline.resolve().unwrap();
        assert_eq!(run.pipeline.index.lambda, 0.2);
        assert_eq!(run.pipeline.index.k, 7);
        assert_eq!(run.pipeline.graph.delta_t_seconds, 48 * 3600);
    }

    #[test]
    fn out_of_range_lambda_is_rejected() {
        let args = PipelineArgs {
            lambda: Some(1.5),
            ..PipelineArgs::default()
        };
        assert!(args.resolve().is_err());
    }

    #[test]
    fn thresholds_report_each_miss() {
        let report = EvalReport::from_counts(jarvis_core::eval::Confusion {
            tp: 8,
            fp: 2,
            fn_: 2,
            tn: 88,
        });
        let t = Thresholds {
            min_precision: Some(0.95),
            min_recall: Some(0.8),
            min_f1: None,
        };
        let misses = check_thresholds(&report, &t);
        assert_eq!(misses.len(), 1);
        assert!(misses[0].starts_with("precision"));
    }
}
