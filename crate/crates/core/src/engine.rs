//! One-call entry point: build the simulated platform and store, run a graph
//! on the chosen engine, and collect the event log.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use futures::channel::mpsc::unbounded;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{run_pubsub_scheduler, run_strawman_scheduler, Notify, TaskFunction};
use crate::events::{Actor, Event, EventLog};
use crate::executor::{Executor, ExecutorConfig};
use crate::graph::{GraphError, TaskGraph, TaskId};
use crate::kv::{completions_channel, spawn_proxy, KvClient, KvConfig, KvStats, KvStore, ProxyConfig};
use crate::platform::{Platform, PlatformConfig, PlatformError, PlatformStats};
use crate::schedule::{generate_schedules, launch, LaunchError, RunError, RunHandle};
use crate::sim::{Rt, VirtualRuntime, WallRuntime};
use crate::workloads::{OpRegistry, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EngineKind {
    #[serde(rename = "wukong")]
    Wukong,
    #[serde(rename = "strawman")]
    Strawman,
    #[serde(rename = "pubsub")]
    PubSub,
    #[serde(rename = "parallel-invoker")]
    ParallelInvoker,
}

impl EngineKind {
    pub const ALL: [EngineKind; 4] = [
        EngineKind::Wukong,
        EngineKind::ParallelInvoker,
        EngineKind::PubSub,
        EngineKind::Strawman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Wukong => "wukong",
            EngineKind::Strawman => "strawman",
            EngineKind::PubSub => "pubsub",
            EngineKind::ParallelInvoker => "parallel-invoker",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EngineKind::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown engine `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    Virtual,
    Wall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub engine: EngineKind,
    pub clock: ClockMode,
    pub platform: PlatformConfig,
    pub kv: KvConfig,
    pub max_task_fanout: usize,
    pub num_invokers: usize,
    pub tcp_notify_ms: f64,
    pub inline_threshold: usize,
    pub run_id: String,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            engine: EngineKind::Wukong,
            clock: ClockMode::Virtual,
            platform: PlatformConfig::default(),
            kv: KvConfig::default(),
            max_task_fanout: 10,
            num_invokers: 20,
            tcp_notify_ms: 2.0,
            inline_threshold: 1024,
            run_id: "r0".into(),
        }
    }
}

impl EngineConfig {
    pub fn with_engine(mut self, engine: EngineKind) -> Self {
        self.engine = engine;
        self
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Launch(#[from] LaunchError),
    #[error("invalid engine config: {0}")]
    Config(String),
    #[error("could not start the wall-clock runtime: {0}")]
    Runtime(#[from] std::io::Error),
}

#[derive(Debug)]
pub struct RunOutcome {
    pub result: Result<BTreeMap<TaskId, Value>, RunError>,
    pub events: Vec<Event>,
    pub kv: KvStats,
    pub platform: PlatformStats,
    /// Initial invocations per launcher worker (decentralized engine only).
    pub per_worker: Vec<usize>,
}

impl RunOutcome {
    /// Last event time minus first event time.
    pub fn makespan_ms(&self) -> f64 {
        let min = self.events.iter().map(|e| e.t_ms).fold(f64::INFINITY, f64::min);
        let max = self.events.iter().map(|e| e.t_ms).fold(f64::NEG_INFINITY, f64::max);
        if self.events.is_empty() {
            0.0
        } else {
            max - min
        }
    }
}

struct Env {
    cfg: EngineConfig,
    graph: Arc<TaskGraph>,
    registry: Arc<OpRegistry>,
    log: Arc<EventLog>,
    store: Arc<KvStore>,
    kv: KvClient,
    platform: Arc<Platform>,
}

impl Env {
    fn new(cfg: &EngineConfig, graph: Arc<TaskGraph>, registry: Arc<OpRegistry>, rt: Rt) -> Result<Self, EngineError> {
        let log = EventLog::new(rt.clone());
        let store = Arc::new(KvStore::new(cfg.kv.shards));
        let kv = KvClient::new(store.clone(), rt.clone(), log.clone(), cfg.kv.clone());
        let platform = Platform::new(cfg.platform.clone(), rt, log.clone())?;
        Ok(Self {
            cfg: cfg.clone(),
            graph,
            registry,
            log,
            store,
            kv,
            platform,
        })
    }

    async fn drive(self: Arc<Self>) -> (Result<BTreeMap<TaskId, Value>, RunError>, Vec<usize>) {
        let run = self.cfg.run_id.clone();
        let rt = self.platform.rt().clone();
        match self.cfg.engine {
            EngineKind::Wukong => {
                let schedules = Arc::new(generate_schedules(&self.graph));
                self.kv
                    .register_run(Actor::SERVICE, &run, self.graph.clone(), schedules.clone())
                    .await;
                spawn_proxy(
                    self.platform.clone(),
                    self.kv.clone(),
                    &run,
                    ProxyConfig {
                        max_task_fanout: self.cfg.max_task_fanout,
                        num_invokers: self.cfg.num_invokers,
                    },
                );
                self.platform.set_handler(Arc::new(Executor::new(
                    self.kv.clone(),
                    self.registry.clone(),
                    ExecutorConfig {
                        max_task_fanout: self.cfg.max_task_fanout,
                        inline_threshold: self.cfg.inline_threshold,
                    },
                )));
                let handle = launch(&schedules, &self.platform, &self.kv, &run, self.cfg.num_invokers)
                    .expect("run registered and invokers checked");
                let per_worker = handle.per_worker.clone();
                (handle.wait().await, per_worker)
            }
            EngineKind::Strawman => {
                let (tx, rx) = unbounded();
                self.platform.set_handler(Arc::new(TaskFunction::new(
                    self.kv.clone(),
                    self.registry.clone(),
                    self.graph.clone(),
                    Notify::Tcp {
                        inbox: tx,
                        cost_ms: self.cfg.tcp_notify_ms,
                    },
                )));
                let handle = RunHandle::new(&self.kv, &self.platform, &run, self.graph.sinks());
                rt.spawn(Box::pin(run_strawman_scheduler(
                    self.graph.clone(),
                    self.platform.clone(),
                    run,
                    rx,
                    self.cfg.tcp_notify_ms,
                )));
                (handle.wait().await, Vec::new())
            }
            EngineKind::PubSub | EngineKind::ParallelInvoker => {
                let workers = if self.cfg.engine == EngineKind::PubSub {
                    1
                } else {
                    self.cfg.num_invokers
                };
                self.platform.set_handler(Arc::new(TaskFunction::new(
                    self.kv.clone(),
                    self.registry.clone(),
                    self.graph.clone(),
                    Notify::PubSub,
                )));
                let handle = RunHandle::new(&self.kv, &self.platform, &run, self.graph.sinks());
                let completions = self.kv.subscribe(&completions_channel(&run));
                rt.spawn(Box::pin(run_pubsub_scheduler(
                    self.graph.clone(),
                    self.platform.clone(),
                    run,
                    completions,
                    workers,
                )));
                (handle.wait().await, Vec::new())
            }
        }
    }

    fn outcome(&self, result: Result<BTreeMap<TaskId, Value>, RunError>, per_worker: Vec<usize>) -> RunOutcome {
        RunOutcome {
            result,
            events: self.log.snapshot(),
            kv: self.store.metrics(),
            platform: self.platform.stats(),
            per_worker,
        }
    }
}

/// Runs `graph` to completion (or failure) on the configured engine.
pub fn run(graph: &TaskGraph, registry: &OpRegistry, cfg: &EngineConfig) -> Result<RunOutcome, EngineError> {
    graph.validate()?;
    if cfg.num_invokers == 0 {
        return Err(EngineError::Config("num_invokers must be at least 1".into()));
    }
    if cfg.kv.shards == 0 {
        return Err(EngineError::Config("shards must be at least 1".into()));
    }
    let graph = Arc::new(graph.clone());
    let registry = Arc::new(registry.clone());
    match cfg.clock {
        ClockMode::Virtual => {
            let vrt = VirtualRuntime::new();
            let env = Arc::new(Env::new(cfg, graph, registry, Arc::new(vrt.clone()))?);
            let (result, per_worker) = match vrt.block_on(env.clone().drive()) {
                Ok(r) => r,
                Err(stalled) => (Err(RunError::Stalled { at_ms: stalled.at_ms }), Vec::new()),
            };
            Ok(env.outcome(result, per_worker))
        }
        ClockMode::Wall => {
            let tokio_rt = tokio::runtime::Builder::new_multi_thread().enable_time().build()?;
            let wall = Arc::new(WallRuntime::new(tokio_rt.handle().clone()));
            let env = Arc::new(Env::new(cfg, graph, registry, wall)?);
            let (result, per_worker) = tokio_rt.block_on(env.clone().drive());
            tokio_rt.shutdown_background();
            Ok(env.outcome(result, per_worker))
        }
    }
}
