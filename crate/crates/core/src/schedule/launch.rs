use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use futures::channel::mpsc::UnboundedReceiver;
use futures::stream::{self, StreamExt};
use thiserror::Error;

use super::ScheduleSet;
use crate::events::Actor;
use crate::graph::TaskId;
use crate::kv::{results_channel, KvClient, Message};
use crate::platform::{Platform, PlatformFailure, Position, RequestBody};
use crate::workloads::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaunchError {
    #[error("run `{0}` must be registered with the store before launch")]
    UnregisteredRun(String),
    #[error("at least one invoker is required")]
    NoInvokers,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Platform(#[from] PlatformFailure),
    #[error("result channel closed with {missing} sink(s) outstanding")]
    Closed { missing: usize },
    #[error("simulation stalled at t={at_ms} ms before all sinks completed")]
    Stalled { at_ms: u64 },
}

enum Incoming {
    Result(Message),
    Failure(PlatformFailure),
}

/// Collects the final values of a run. Subscribed to the result and failure
/// channels on construction, so nothing published afterwards is missed.
pub struct RunHandle {
    results: UnboundedReceiver<Message>,
    failures: UnboundedReceiver<PlatformFailure>,
    sinks: BTreeSet<TaskId>,
    /// Number of initial invocations given to each invoker worker.
    pub per_worker: Vec<usize>,
}

impl RunHandle {
    pub fn new(kv: &KvClient, platform: &Platform, run: &str, sinks: impl IntoIterator<Item = TaskId>) -> Self {
        Self {
            results: kv.subscribe(&results_channel(run)),
            failures: platform.subscribe_failures(),
            sinks: sinks.into_iter().collect(),
            per_worker: Vec::new(),
        }
    }

    /// Resolves once every sink has reported, or on the first run failure.
    /// Repeated reports for a sink are ignored.
    pub async fn wait(self) -> Result<BTreeMap<TaskId, Value>, RunError> {
        let mut out = BTreeMap::new();
        let mut remaining = self.sinks;
        if remaining.is_empty() {
            return Ok(out);
        }
        let mut incoming = stream::select(
            self.results.map(Incoming::Result),
            self.failures.map(Incoming::Failure),
        );
        while let Some(msg) = incoming.next().await {
            match msg {
                Incoming::Result(Message::FinalResult { task, value }) => {
                    if remaining.remove(&task) {
                        out.insert(task, value);
                        if remaining.is_empty() {
                            return Ok(out);
                        }
                    }
                }
                Incoming::Result(_) => {}
                Incoming::Failure(f) => return Err(f.into()),
            }
        }
        Err(RunError::Closed {
            missing: remaining.len(),
        })
    }
}

/// Starts one executor per leaf schedule. The leaves are dealt round-robin
/// to `num_invokers` workers that each invoke their share sequentially.
pub fn launch(
    set: &ScheduleSet,
    platform: &Arc<Platform>,
    kv: &KvClient,
    run: &str,
    num_invokers: usize,
) -> Result<RunHandle, LaunchError> {
    if num_invokers == 0 {
        return Err(LaunchError::NoInvokers);
    }
    let info = kv
        .store()
        .run_info(run)
        .ok_or_else(|| LaunchError::UnregisteredRun(run.to_string()))?;
    let mut handle = RunHandle::new(kv, platform, run, info.graph.sinks());
    let workers = num_invokers.min(set.schedules.len()).max(1);
    let mut shares: Vec<Vec<TaskId>> = vec![Vec::new(); workers];
    for (i, s) in set.schedules.iter().enumerate() {
        shares[i % workers].push(s.leaf.clone());
    }
    handle.per_worker = shares.iter().map(Vec::len).collect();
    for (w, leaves) in shares.into_iter().enumerate() {
        let platform = platform.clone();
        let run = run.to_string();
        let via = format!("invoker-{w}");
        platform.rt().clone().spawn(Box::pin(async move {
            for leaf in leaves {
                let body = RequestBody::Executor {
                    leaf: leaf.clone(),
                    entry: Position::Exec(leaf),
                    inputs: BTreeMap::new(),
                };
                // A rejection is reported to the run handle by the platform.
                if platform.invoke(Actor::SERVICE, &run, body, &via).await.is_err() {
                    break;
                }
            }
        }));
    }
    Ok(handle)
}
