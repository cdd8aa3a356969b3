use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use faasdag_core::events::to_jsonl;
use faasdag_core::graph::load_dag;
use faasdag_core::report::sink_digest;
use faasdag_core::{
    blocked_gemm, breakdown, engine, evaluate_sequential, trend, tree_reduction, ClockMode, EngineConfig,
    EngineKind, KvConfig, OpRegistry, PlatformConfig, RunReport, TaskGraph, TrendSpec, Value,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "faasdag", version, about = "Run DAG workloads on simulated serverless engines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one workload on one engine and write a run report.
    Run(RunArgs),
    /// Tree-reduction makespans over an engine x delay grid.
    Trend(TrendArgs),
    /// Per-phase latency CDFs from a run report, as CSV.
    Breakdown(BreakdownArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Workload {
    Tr,
    Gemm,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum Clock {
    Virtual,
    Wall,
}

#[derive(Args)]
struct PlatformArgs {
    #[arg(long, default_value_t = 50.0)]
    invoke_overhead_ms: f64,
    #[arg(long, default_value_t = 200.0)]
    cold_start_ms: f64,
    #[arg(long, default_value_t = 64)]
    warm_pool: usize,
    #[arg(long, default_value_t = 120_000.0)]
    timeout_ms: f64,
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
    /// Concurrent instance cap; unbounded when omitted.
    #[arg(long)]
    max_concurrency: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    fail_rate: f64,
    #[arg(long, default_value_t = 4)]
    shards: usize,
    #[arg(long, default_value_t = 1.0)]
    kv_base_latency_ms: f64,
    #[arg(long, default_value_t = 0.05)]
    kv_per_kib_ms: f64,
    /// Fan-outs wider than this are handed to the proxy.
    #[arg(long, default_value_t = 10)]
    max_task_fanout: usize,
    #[arg(long, default_value_t = 20)]
    num_invokers: usize,
    /// Per-notification cost of the strawman's direct connection.
    #[arg(long, default_value_t = 2.0)]
    tcp_notify_ms: f64,
    /// Largest value, in bytes, passed inline in invocation requests.
    #[arg(long, default_value_t = 1024)]
    inline_threshold: usize,
    #[arg(long, value_enum, default_value_t = Clock::Virtual)]
    clock: Clock,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl PlatformArgs {
    fn config(&self, engine: EngineKind) -> EngineConfig {
        EngineConfig {
            engine,
            clock: match self.clock {
                Clock::Virtual => ClockMode::Virtual,
                Clock::Wall => ClockMode::Wall,
            },
            platform: PlatformConfig {
                invoke_overhead_ms: self.invoke_overhead_ms,
                cold_start_ms: self.cold_start_ms,
                warm_pool_size: self.warm_pool,
                timeout_ms: self.timeout_ms,
                max_retries: self.max_retries,
                max_concurrency: self.max_concurrency,
                fail_rate: self.fail_rate,
                seed: self.seed,
                ..PlatformConfig::default()
            },
            kv: KvConfig {
                shards: self.shards,
                base_latency_ms: self.kv_base_latency_ms,
                per_kib_ms: self.kv_per_kib_ms,
            },
            max_task_fanout: self.max_task_fanout,
            num_invokers: self.num_invokers,
            tcp_notify_ms: self.tcp_notify_ms,
            inline_threshold: self.inline_threshold,
            ..EngineConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = Workload::Tr)]
    workload: Workload,
    /// Input length for `tr` (default 1024), matrix side for `gemm` (default 64).
    #[arg(long)]
    size: Option<usize>,
    /// Block side for `gemm`.
    #[arg(long, default_value_t = 4)]
    block: usize,
    /// Per-task compute delay for `tr`.
    #[arg(long, default_value_t = 0.0)]
    delay_ms: f64,
    /// DAG file for `--workload file`.
    #[arg(long, required_if_eq("workload", "file"))]
    dag: Option<PathBuf>,
    #[arg(long, default_value = "wukong")]
    engine: EngineKind,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the event log as JSON lines.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Skip validation against the sequential evaluator.
    #[arg(long)]
    no_oracle: bool,
    #[command(flatten)]
    platform: PlatformArgs,
}

#[derive(Args)]
struct TrendArgs {
    #[arg(long, default_value_t = 1024)]
    size: usize,
    #[arg(long, value_delimiter = ',', default_value = "wukong,parallel-invoker,pubsub,strawman")]
    engines: Vec<EngineKind>,
    #[arg(long, value_delimiter = ',', default_value = "0,100,250,500")]
    delays_ms: Vec<f64>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    platform: PlatformArgs,
}

#[derive(Args)]
struct BreakdownArgs {
    /// Run report produced by `faasdag run`.
    #[arg(long)]
    report: PathBuf,
}

fn registry() -> OpRegistry {
    fn ints(inputs: &[Value]) -> Result<i64, String> {
        inputs.iter().try_fold(0i64, |acc, v| {
            v.as_int()
                .map(|x| acc.wrapping_add(x))
                .ok_or_else(|| "expects integer inputs".to_string())
        })
    }
    let mut r = OpRegistry::new();
    r.register("double", |xs| ints(xs).map(|s| Value::Int(s.wrapping_mul(2))))
        .expect("fresh registry");
    r.register("negate", |xs| ints(xs).map(|s| Value::Int(s.wrapping_neg())))
        .expect("fresh registry");
    r
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn build_workload(args: &RunArgs, registry: &OpRegistry) -> Result<(TaskGraph, serde_json::Value)> {
    Ok(match args.workload {
        Workload::Tr => {
            let size = args.size.unwrap_or(1024);
            let g = tree_reduction(size, args.delay_ms)?;
            (g, json!({"kind": "tr", "size": size, "delay_ms": args.delay_ms}))
        }
        Workload::Gemm => {
            let size = args.size.unwrap_or(64);
            let w = blocked_gemm(size, args.block, args.platform.seed)?;
            (w.graph, json!({"kind": "gemm", "size": size, "block": args.block, "seed": args.platform.seed}))
        }
        Workload::File => {
            let path = args.dag.as_ref().expect("clap requires --dag for file workloads");
            let g = load_dag(path, registry).with_context(|| format!("loading {}", path.display()))?;
            (g, json!({"kind": "file", "path": path.display().to_string()}))
        }
    })
}

fn cmd_run(args: RunArgs) -> Result<bool> {
    let registry = registry();
    let (graph, workload) = build_workload(&args, &registry)?;
    let cfg = args.platform.config(args.engine);
    let outcome = engine::run(&graph, &registry, &cfg)?;
    let mut report = RunReport::from_outcome(&graph, &outcome, &cfg, workload);
    if !args.no_oracle {
        let expected = evaluate_sequential(&graph, &registry)?;
        report.oracle_match = Some(report.sink_digest.as_deref() == Some(sink_digest(&expected.sink_values).as_str()));
    }
    if let Some(p) = &args.events {
        fs::write(p, to_jsonl(&outcome.events)).with_context(|| format!("writing {}", p.display()))?;
    }
    emit(args.report.as_deref(), &report.to_json())?;
    eprintln!(
        "{}: makespan {:.1} ms, {} invocations, {} cold starts, {} retries",
        cfg.engine, report.makespan_ms, report.executors_invoked, report.cold_starts, report.retries
    );
    if let Some(e) = &report.error {
        eprintln!("run failed: {e}");
        return Ok(false);
    }
    if report.oracle_match == Some(false) {
        eprintln!("sink values differ from the sequential evaluation");
        return Ok(false);
    }
    Ok(true)
}

fn cmd_trend(args: TrendArgs) -> Result<bool> {
    if args.engines.is_empty() || args.delays_ms.is_empty() {
        bail!("at least one engine and one delay are required");
    }
    let spec = TrendSpec {
        size: args.size,
        engines: args.engines.clone(),
        delays_ms: args.delays_ms.clone(),
        repeats: args.repeats as usize,
        seed: args.platform.seed,
    };
    let base = args.platform.config(EngineKind::Wukong);
    let rep = trend(&spec, &base)?;
    let text = serde_json::to_string_pretty(&rep)?;
    emit(args.report.as_deref(), &text)?;
    for c in &rep.cells {
        eprintln!(
            "{:>16} delay {:>6} ms: mean {:>9.1} ms (min {:.1}, max {:.1})",
            c.engine.name(),
            c.delay_ms,
            c.mean_ms,
            c.min_ms,
            c.max_ms
        );
    }
    for o in rep.ordering.iter().filter(|o| !o.holds) {
        eprintln!("warning: engine ordering violated at delay {} ms", o.delay_ms);
    }
    Ok(true)
}

fn cmd_breakdown(args: BreakdownArgs) -> Result<bool> {
    let text = fs::read_to_string(&args.report).with_context(|| format!("reading {}", args.report.display()))?;
    let report: RunReport = serde_json::from_str(&text).context("not a run report")?;
    let b = breakdown(&report);
    println!("phase,value_ms,fraction");
    for (phase, points) in &b.phases {
        for p in points {
            println!("{phase},{},{}", p.value_ms, p.fraction);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Trend(a) => cmd_trend(a),
        Command::Breakdown(a) => cmd_breakdown(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
