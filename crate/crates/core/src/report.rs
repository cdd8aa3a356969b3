//! Machine-readable run reports, derived from the event log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{run, EngineConfig, EngineError, EngineKind};
use crate::events::{count, EventKind};
use crate::graph::{TaskGraph, TaskId};
use crate::workloads::{tree_reduction, OpRegistry, Value, WorkloadError};
use crate::engine::RunOutcome;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvSummary {
    pub reads: u64,
    pub writes: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub fanin_registrations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskBreakdown {
    pub task: TaskId,
    pub read_ms: f64,
    pub compute_ms: f64,
    pub write_ms: f64,
    /// Invocation to first task start on a fresh instance; 0 for tasks an
    /// executor reached by continuing its path.
    pub invoke_delay_ms: f64,
    /// False if the task never finished (failed run).
    pub executed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub engine: EngineKind,
    pub config: EngineConfig,
    /// Free-form description of what was run.
    pub workload: serde_json::Value,
    pub makespan_ms: f64,
    pub executors_invoked: usize,
    pub cold_starts: usize,
    pub retries: usize,
    pub kv: KvSummary,
    pub per_task: Vec<TaskBreakdown>,
    pub sink_digest: Option<String>,
    /// `None` when oracle validation was skipped.
    pub oracle_match: Option<bool>,
    pub error: Option<String>,
}

/// SHA-256 over the canonical JSON of the sink map.
pub fn sink_digest(values: &BTreeMap<TaskId, Value>) -> String {
    let text = serde_json::to_string(values).expect("values serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl RunReport {
    pub fn from_outcome(
        graph: &TaskGraph,
        outcome: &RunOutcome,
        cfg: &EngineConfig,
        workload: serde_json::Value,
    ) -> Self {
        let ev = &outcome.events;
        let mut kv = KvSummary::default();
        let mut last_end = BTreeMap::new();
        for e in ev {
            match e.kind {
                EventKind::KvRead => {
                    kv.reads += 1;
                    kv.bytes_read += e.detail.bytes.unwrap_or(0) as u64;
                }
                EventKind::KvWrite => {
                    kv.writes += 1;
                    kv.bytes_written += e.detail.bytes.unwrap_or(0) as u64;
                }
                EventKind::FaninRegister => kv.fanin_registrations += 1,
                EventKind::TaskEnd => {
                    if let Some(t) = &e.detail.task {
                        last_end.insert(t.clone(), &e.detail);
                    }
                }
                _ => {}
            }
        }
        let per_task = graph
            .ids()
            .map(|t| match last_end.get(t) {
                Some(d) => TaskBreakdown {
                    task: t.clone(),
                    read_ms: d.read_ms.unwrap_or(0.0),
                    compute_ms: d.compute_ms.unwrap_or(0.0),
                    write_ms: d.write_ms.unwrap_or(0.0),
                    invoke_delay_ms: d.invoke_delay_ms.unwrap_or(0.0),
                    executed: true,
                },
                None => TaskBreakdown {
                    task: t.clone(),
                    read_ms: 0.0,
                    compute_ms: 0.0,
                    write_ms: 0.0,
                    invoke_delay_ms: 0.0,
                    executed: false,
                },
            })
            .collect();
        let (sink_digest, error) = match &outcome.result {
            Ok(v) => (Some(sink_digest(v)), None),
            Err(e) => (None, Some(e.to_string())),
        };
        RunReport {
            schema_version: SCHEMA_VERSION,
            engine: cfg.engine,
            config: cfg.clone(),
            workload,
            makespan_ms: outcome.makespan_ms(),
            executors_invoked: count(ev, EventKind::Invoke),
            cold_starts: count(ev, EventKind::ColdStart),
            retries: count(ev, EventKind::Retry),
            kv,
            per_task,
            sink_digest,
            oracle_match: None,
            error,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value_ms: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub tasks: usize,
    /// `read`, `compute`, `write`, `invoke` → sorted CDF points.
    pub phases: BTreeMap<String, Vec<CdfPoint>>,
}

fn cdf(mut values: Vec<f64>) -> Vec<CdfPoint> {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| CdfPoint {
            value_ms: v,
            fraction: (i + 1) as f64 / n,
        })
        .collect()
}

/// Per-phase latency distribution over the executed tasks of a report.
pub fn breakdown(report: &RunReport) -> Breakdown {
    let done: Vec<&TaskBreakdown> = report.per_task.iter().filter(|t| t.executed).collect();
    let phase = |f: fn(&TaskBreakdown) -> f64| cdf(done.iter().map(|t| f(t)).collect());
    let mut phases = BTreeMap::new();
    phases.insert("read".to_string(), phase(|t| t.read_ms));
    phases.insert("compute".to_string(), phase(|t| t.compute_ms));
    phases.insert("write".to_string(), phase(|t| t.write_ms));
    phases.insert("invoke".to_string(), phase(|t| t.invoke_delay_ms));
    Breakdown {
        tasks: done.len(),
        phases,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSpec {
    /// Tree-reduction input length.
    pub size: usize,
    pub engines: Vec<EngineKind>,
    pub delays_ms: Vec<f64>,
    pub repeats: usize,
    /// Repeat `r` of every cell runs with platform seed `seed + r`.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCell {
    pub engine: EngineKind,
    pub delay_ms: f64,
    pub makespans_ms: Vec<f64>,
    pub min_ms: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub delay_ms: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub schema_version: u32,
    pub spec: TrendSpec,
    pub cells: Vec<TrendCell>,
    /// Per delay: mean makespans are non-decreasing in the order
    /// wukong, parallel-invoker, pubsub, strawman (engines present only).
    pub ordering: Vec<OrderingCheck>,
    /// The ordering holds at every non-zero delay.
    pub ordering_holds: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum TrendError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("repeats must be at least 1")]
    NoRepeats,
}

impl TrendReport {
    pub fn cell(&self, engine: EngineKind, delay_ms: f64) -> Option<&TrendCell> {
        self.cells
            .iter()
            .find(|c| c.engine == engine && c.delay_ms == delay_ms)
    }
}

/// Runs the full engine × delay cross product on tree reduction.
pub fn trend(spec: &TrendSpec, base: &EngineConfig) -> Result<TrendReport, TrendError> {
    if spec.repeats == 0 {
        return Err(TrendError::NoRepeats);
    }
    let registry = OpRegistry::new();
    let mut cells = Vec::new();
    for &delay in &spec.delays_ms {
        let graph = tree_reduction(spec.size, delay)?;
        for &engine in &spec.engines {
            let mut makespans = Vec::with_capacity(spec.repeats);
            let mut failures = 0;
            for r in 0..spec.repeats {
                let mut cfg = base.clone().with_engine(engine);
                cfg.platform.seed = spec.seed.wrapping_add(r as u64);
                let out = run(&graph, &registry, &cfg)?;
                if out.result.is_err() {
                    failures += 1;
                }
                makespans.push(out.makespan_ms());
            }
            let min = makespans.iter().copied().fold(f64::INFINITY, f64::min);
            let max = makespans.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = makespans.iter().sum::<f64>() / makespans.len() as f64;
            cells.push(TrendCell {
                engine,
                delay_ms: delay,
                makespans_ms: makespans,
                min_ms: min,
                mean_ms: mean,
                max_ms: max,
                failures,
            });
        }
    }
    let order = [
        EngineKind::Wukong,
        EngineKind::ParallelInvoker,
        EngineKind::PubSub,
        EngineKind::Strawman,
    ];
    let ordering: Vec<OrderingCheck> = spec
        .delays_ms
        .iter()
        .map(|&d| {
            let means: Vec<f64> = order
                .iter()
                .filter_map(|&e| cells.iter().find(|c| c.engine == e && c.delay_ms == d))
                .map(|c| c.mean_ms)
                .collect();
            OrderingCheck {
                delay_ms: d,
                holds: means.windows(2).all(|w| w[0] <= w[1]),
            }
        })
        .collect();
    let ordering_holds = ordering.iter().filter(|o| o.delay_ms > 0.0).all(|o| o.holds);
    Ok(TrendReport {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        cells,
        ordering,
        ordering_holds,
    })
}
