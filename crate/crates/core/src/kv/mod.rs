//! Sharded in-memory key-value store with per-fan-in dependency records and
//! pub/sub channels, plus the storage-manager roles built on top of it.
//!
//! [`KvStore`] is the synchronous, linearizable core: each shard sits behind
//! its own lock. [`KvClient`] is what simulated components use; it charges
//! latency on the runtime clock and writes the event log.

mod proxy;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use futures::channel::mpsc::{unbounded, UnboundedReceiver, UnboundedSender};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Actor, Detail, EventKind, EventLog};
use crate::graph::{TaskGraph, TaskId};
use crate::hash::fnv1a64;
use crate::schedule::{FanInId, FanOutId, ScheduleSet};
use crate::sim::{ms, Rt};
use crate::workloads::Value;

pub use proxy::{proxy_handle_fanout, spawn_proxy, ProxyConfig, ProxyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KvConfig {
    pub shards: usize,
    pub base_latency_ms: f64,
    pub per_kib_ms: f64,
}

impl Default for KvConfig {
    fn default() -> Self {
        Self {
            shards: 4,
            base_latency_ms: 1.0,
            per_kib_ms: 0.05,
        }
    }
}

impl KvConfig {
    /// Simulated cost of one operation moving `bytes`.
    pub fn latency(&self, bytes: usize) -> Duration {
        ms(self.base_latency_ms + self.per_kib_ms * bytes as f64 / 1024.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Namespace {
    Out,
    Dep,
    Schedules,
    Final,
}

impl Namespace {
    fn as_str(self) -> &'static str {
        match self {
            Namespace::Out => "out",
            Namespace::Dep => "dep",
            Namespace::Schedules => "schedules",
            Namespace::Final => "final",
        }
    }
}

/// `<ns>/<run_id>/<qualifier>`; the schedules namespace has no qualifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct KvKey {
    pub ns: Namespace,
    pub run: String,
    pub qualifier: String,
}

impl KvKey {
    pub fn out(run: &str, task: &TaskId) -> Self {
        Self::new(Namespace::Out, run, task.as_str())
    }

    pub fn dep(run: &str, fanin: &FanInId) -> Self {
        Self::new(Namespace::Dep, run, fanin.as_str())
    }

    pub fn schedules(run: &str) -> Self {
        Self::new(Namespace::Schedules, run, "")
    }

    pub fn final_result(run: &str, task: &TaskId) -> Self {
        Self::new(Namespace::Final, run, task.as_str())
    }

    fn new(ns: Namespace, run: &str, qualifier: &str) -> Self {
        Self {
            ns,
            run: run.to_string(),
            qualifier: qualifier.to_string(),
        }
    }
}

impl fmt::Display for KvKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.qualifier.is_empty() {
            write!(f, "{}/{}", self.ns.as_str(), self.run)
        } else {
            write!(f, "{}/{}/{}", self.ns.as_str(), self.run, self.qualifier)
        }
    }
}

pub fn shard_for(key: &str, shards: usize) -> usize {
    assert!(shards >= 1, "shard count must be at least 1");
    (fnv1a64(key.as_bytes()) % shards as u64) as usize
}

pub fn results_channel(run: &str) -> String {
    format!("results/{run}")
}

pub fn completions_channel(run: &str) -> String {
    format!("completions/{run}")
}

pub fn proxy_channel(run: &str) -> String {
    format!("proxy/{run}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum KvValue {
    Value(Value),
    Text(String),
}

impl KvValue {
    pub fn byte_size(&self) -> usize {
        match self {
            KvValue::Value(v) => v.byte_size(),
            KvValue::Text(s) => s.len(),
        }
    }

    pub fn into_value(self) -> Option<Value> {
        match self {
            KvValue::Value(v) => Some(v),
            KvValue::Text(_) => None,
        }
    }
}

/// How an upstream output reaches a newly invoked function: carried in the
/// request, or left in the store under a key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Inline(Value),
    Key(String),
}

impl Payload {
    pub fn byte_size(&self) -> usize {
        match self {
            Payload::Inline(v) => v.byte_size(),
            Payload::Key(k) => k.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanOutRequest {
    pub run: String,
    pub fanout: FanOutId,
    /// Leaf of the schedule the requesting executor was walking.
    pub leaf: TaskId,
    pub source_instance: Option<u64>,
    pub inputs: BTreeMap<TaskId, Payload>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    TaskCompleted { task: TaskId, instance: Option<u64> },
    FinalResult { task: TaskId, value: Value },
    FanOut(FanOutRequest),
}

impl Message {
    pub fn byte_size(&self) -> usize {
        match self {
            Message::TaskCompleted { task, .. } => task.as_str().len(),
            Message::FinalResult { task, value } => task.as_str().len() + value.byte_size(),
            Message::FanOut(r) => r.inputs.values().map(Payload::byte_size).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyRecord {
    pub fanin: FanInId,
    pub in_degree: usize,
    pub satisfied_edges: BTreeSet<TaskId>,
    /// The edge whose registration made the record complete.
    pub completed_by: Option<TaskId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registration {
    pub count_after: usize,
    /// True for exactly one call per fan-in: the first one that raised the
    /// count to the in-degree.
    pub completed_set: bool,
    /// The edge was already registered by an earlier call.
    pub duplicate: bool,
    pub completed_by: Option<TaskId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KvError {
    #[error("run `{0}` is not registered")]
    UnknownRun(String),
    #[error("fan-in `{0}` is not part of the registered schedules")]
    UnknownFanIn(FanInId),
    #[error("`{upstream}` is not an in-edge of fan-in `{fanin}`")]
    IllegalEdge { fanin: FanInId, upstream: TaskId },
}

/// What the storage manager knows about a run.
#[derive(Debug)]
pub struct RunInfo {
    pub graph: Arc<TaskGraph>,
    pub schedules: Arc<ScheduleSet>,
}

#[derive(Debug, Default)]
pub struct KvMetrics {
    reads: AtomicU64,
    writes: AtomicU64,
    bytes_read: AtomicU64,
    bytes_written: AtomicU64,
    fanin_registrations: AtomicU64,
    publishes: AtomicU64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvStats {
    pub reads: u64,
    pub writes: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub fanin_registrations: u64,
    pub publishes: u64,
}

impl KvMetrics {
    pub fn snapshot(&self) -> KvStats {
        KvStats {
            reads: self.reads.load(Ordering::SeqCst),
            writes: self.writes.load(Ordering::SeqCst),
            bytes_read: self.bytes_read.load(Ordering::SeqCst),
            bytes_written: self.bytes_written.load(Ordering::SeqCst),
            fanin_registrations: self.fanin_registrations.load(Ordering::SeqCst),
            publishes: self.publishes.load(Ordering::SeqCst),
        }
    }
}

#[derive(Default)]
struct Shard {
    data: BTreeMap<String, KvValue>,
    deps: BTreeMap<String, DependencyRecord>,
    channels: BTreeMap<String, Vec<UnboundedSender<Message>>>,
}

pub struct KvStore {
    shards: Vec<Mutex<Shard>>,
    runs: Mutex<BTreeMap<String, Arc<RunInfo>>>,
    metrics: KvMetrics,
}

impl KvStore {
    pub fn new(shards: usize) -> Self {
        assert!(shards >= 1, "shard count must be at least 1");
        Self {
            shards: (0..shards).map(|_| Mutex::new(Shard::default())).collect(),
            runs: Mutex::new(BTreeMap::new()),
            metrics: KvMetrics::default(),
        }
    }

    pub fn shard_count(&self) -> usize {
        self.shards.len()
    }

    fn shard(&self, key: &str) -> &Mutex<Shard> {
        &self.shards[shard_for(key, self.shards.len())]
    }

    /// Number of data keys held by shard `i`.
    pub fn shard_len(&self, i: usize) -> usize {
        self.shards[i].lock().data.len()
    }

    pub fn metrics(&self) -> KvStats {
        self.metrics.snapshot()
    }

    pub fn put(&self, key: &str, value: KvValue) -> usize {
        let bytes = value.byte_size();
        self.shard(key).lock().data.insert(key.to_string(), value);
        self.metrics.writes.fetch_add(1, Ordering::SeqCst);
        self.metrics.bytes_written.fetch_add(bytes as u64, Ordering::SeqCst);
        bytes
    }

    pub fn get(&self, key: &str) -> Option<KvValue> {
        let v = self.shard(key).lock().data.get(key).cloned();
        self.metrics.reads.fetch_add(1, Ordering::SeqCst);
        if let Some(v) = &v {
            self.metrics
                .bytes_read
                .fetch_add(v.byte_size() as u64, Ordering::SeqCst);
        }
        v
    }

    /// Size of the stored value without counting a read.
    pub fn peek_size(&self, key: &str) -> Option<usize> {
        self.shard(key).lock().data.get(key).map(KvValue::byte_size)
    }

    /// Makes the DAG and schedules of `run` known to the storage manager and
    /// stores the serialized schedules under `schedules/<run>`.
    pub fn register_run(&self, run: &str, graph: Arc<TaskGraph>, schedules: Arc<ScheduleSet>) -> usize {
        let text = schedules.to_json();
        self.runs
            .lock()
            .insert(run.to_string(), Arc::new(RunInfo { graph, schedules }));
        self.put(&KvKey::schedules(run).to_string(), KvValue::Text(text))
    }

    pub fn run_info(&self, run: &str) -> Option<Arc<RunInfo>> {
        self.runs.lock().get(run).cloned()
    }

    /// Idempotently marks the edge `upstream -> fanin` satisfied.
    pub fn register_dependency(
        &self,
        run: &str,
        fanin: &FanInId,
        upstream: &TaskId,
    ) -> Result<Registration, KvError> {
        let info = self
            .run_info(run)
            .ok_or_else(|| KvError::UnknownRun(run.to_string()))?;
        let pos = info
            .schedules
            .fanin(fanin)
            .ok_or_else(|| KvError::UnknownFanIn(fanin.clone()))?;
        if !pos.sources.contains(upstream) {
            return Err(KvError::IllegalEdge {
                fanin: fanin.clone(),
                upstream: upstream.clone(),
            });
        }
        let key = KvKey::dep(run, fanin).to_string();
        let mut shard = self.shard(&key).lock();
        let rec = shard.deps.entry(key).or_insert_with(|| DependencyRecord {
            fanin: fanin.clone(),
            in_degree: pos.in_degree(),
            satisfied_edges: BTreeSet::new(),
            completed_by: None,
        });
        let fresh = rec.satisfied_edges.insert(upstream.clone());
        let count_after = rec.satisfied_edges.len();
        let completed_set = fresh && count_after == rec.in_degree;
        if completed_set {
            rec.completed_by = Some(upstream.clone());
        }
        let out = Registration {
            count_after,
            completed_set,
            duplicate: !fresh,
            completed_by: rec.completed_by.clone(),
        };
        drop(shard);
        self.metrics.fanin_registrations.fetch_add(1, Ordering::SeqCst);
        Ok(out)
    }

    pub fn dependency(&self, run: &str, fanin: &FanInId) -> Option<DependencyRecord> {
        let key = KvKey::dep(run, fanin).to_string();
        self.shard(&key).lock().deps.get(&key).cloned()
    }

    /// Delivers to subscribers registered before this call; returns how many
    /// received it. Closed subscribers are pruned.
    pub fn publish(&self, channel: &str, msg: Message) -> usize {
        let mut shard = self.shard(channel).lock();
        let mut delivered = 0;
        if let Some(subs) = shard.channels.get_mut(channel) {
            subs.retain(|tx| tx.unbounded_send(msg.clone()).is_ok());
            delivered = subs.len();
        }
        drop(shard);
        self.metrics.publishes.fetch_add(1, Ordering::SeqCst);
        delivered
    }

    pub fn subscribe(&self, channel: &str) -> UnboundedReceiver<Message> {
        let (tx, rx) = unbounded();
        self.shard(channel)
            .lock()
            .channels
            .entry(channel.to_string())
            .or_default()
            .push(tx);
        rx
    }
}

/// Latency-charging, event-logging access to a [`KvStore`].
#[derive(Clone)]
pub struct KvClient {
    store: Arc<KvStore>,
    rt: Rt,
    log: Arc<EventLog>,
    cfg: KvConfig,
}

impl KvClient {
    pub fn new(store: Arc<KvStore>, rt: Rt, log: Arc<EventLog>, cfg: KvConfig) -> Self {
        Self { store, rt, log, cfg }
    }

    pub fn store(&self) -> &Arc<KvStore> {
        &self.store
    }

    pub fn config(&self) -> &KvConfig {
        &self.cfg
    }

    pub async fn get(&self, actor: Actor, key: &str) -> Option<KvValue> {
        let size = self.store.peek_size(key).unwrap_or(0);
        self.rt.sleep(self.cfg.latency(size)).await;
        let v = self.store.get(key);
        let bytes = v.as_ref().map_or(0, KvValue::byte_size);
        self.log.log(EventKind::KvRead, actor, Detail::key(key, bytes));
        v
    }

    pub async fn put(&self, actor: Actor, key: &str, value: KvValue) {
        self.rt.sleep(self.cfg.latency(value.byte_size())).await;
        let bytes = self.store.put(key, value);
        self.log.log(EventKind::KvWrite, actor, Detail::key(key, bytes));
    }

    pub async fn register_run(&self, actor: Actor, run: &str, graph: Arc<TaskGraph>, schedules: Arc<ScheduleSet>) {
        let key = KvKey::schedules(run).to_string();
        let bytes = self.store.register_run(run, graph, schedules);
        self.rt.sleep(self.cfg.latency(bytes)).await;
        self.log.log(EventKind::KvWrite, actor, Detail::key(&key, bytes));
    }

    pub async fn register_dependency(
        &self,
        actor: Actor,
        run: &str,
        fanin: &FanInId,
        upstream: &TaskId,
    ) -> Result<Registration, KvError> {
        self.rt.sleep(self.cfg.latency(0)).await;
        let r = self.store.register_dependency(run, fanin, upstream)?;
        self.log.log(
            EventKind::FaninRegister,
            actor,
            Detail {
                task: Some(upstream.clone()),
                fanin: Some(fanin.to_string()),
                count: Some(r.count_after),
                completed: Some(r.completed_set),
                ..Detail::default()
            },
        );
        Ok(r)
    }

    pub async fn publish(&self, actor: Actor, channel: &str, msg: Message) -> usize {
        let bytes = msg.byte_size();
        self.rt.sleep(self.cfg.latency(bytes)).await;
        let n = self.store.publish(channel, msg);
        self.log.log(
            EventKind::Publish,
            actor,
            Detail {
                key: Some(channel.to_string()),
                bytes: Some(bytes),
                count: Some(n),
                ..Detail::default()
            },
        );
        n
    }

    pub fn subscribe(&self, channel: &str) -> UnboundedReceiver<Message> {
        self.store.subscribe(channel)
    }

    /// Writes a sink value under `final/<run>/<task>` and relays it on the
    /// run's result channel.
    pub async fn store_final(&self, actor: Actor, run: &str, task: &TaskId, value: Value) {
        let key = KvKey::final_result(run, task).to_string();
        self.put(actor, &key, KvValue::Value(value.clone())).await;
        self.publish(
            actor,
            &results_channel(run),
            Message::FinalResult {
                task: task.clone(),
                value,
            },
        )
        .await;
    }
}
