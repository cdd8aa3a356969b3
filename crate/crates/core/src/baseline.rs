//! Centralized engines: a scheduler tracks readiness and invokes one
//! function per task. Functions read every input from the store, write their
//! output back, and notify the scheduler.
//!
//! * strawman: notification over a per-completion connection; the scheduler
//!   handles notifications one at a time on the same loop that invokes.
//! * pub/sub: notification through a store channel.
//! * parallel invoker: pub/sub plus a pool of invoker workers; with one
//!   worker it is the pub/sub engine.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use futures::channel::mpsc::{unbounded, UnboundedReceiver, UnboundedSender};
use futures::future::BoxFuture;
use futures::StreamExt;

use crate::events::{Actor, Detail, EventKind};
use crate::graph::{TaskGraph, TaskId};
use crate::kv::{completions_channel, KvClient, KvKey, KvValue, Message};
use crate::platform::{Action, FunctionError, FunctionHandler, InstanceContext, Platform, RequestBody};
use crate::sim::{as_ms, ms};
use crate::workloads::OpRegistry;

/// Readiness bookkeeping of a central scheduler.
#[derive(Debug, Clone)]
pub struct CentralSchedulerState {
    pending: BTreeMap<TaskId, usize>,
    done: BTreeSet<TaskId>,
    total: usize,
}

impl CentralSchedulerState {
    pub fn new(graph: &TaskGraph) -> Self {
        Self {
            pending: graph.nodes().map(|n| (n.id.clone(), n.deps.len())).collect(),
            done: BTreeSet::new(),
            total: graph.len(),
        }
    }

    /// Tasks with no dependencies, in id order.
    pub fn initial_ready(&self) -> Vec<TaskId> {
        self.pending
            .iter()
            .filter(|(_, &c)| c == 0)
            .map(|(t, _)| t.clone())
            .collect()
    }

    /// Records a completion and returns the successors it made ready.
    /// Duplicate notifications change nothing.
    pub fn complete(&mut self, graph: &TaskGraph, task: &TaskId) -> Vec<TaskId> {
        if !self.done.insert(task.clone()) {
            return Vec::new();
        }
        let mut ready = Vec::new();
        for succ in graph.out_edges(task) {
            let c = self.pending.get_mut(succ).expect("successor is in the graph");
            *c -= 1;
            if *c == 0 {
                ready.push(succ.clone());
            }
        }
        ready
    }

    pub fn all_done(&self) -> bool {
        self.done.len() == self.total
    }
}

#[derive(Clone)]
pub enum Notify {
    /// Direct connection to the scheduler, costing `cost_ms` per message.
    Tcp {
        inbox: UnboundedSender<TaskId>,
        cost_ms: f64,
    },
    PubSub,
}

/// Function body of the centralized engines: run one task.
pub struct TaskFunction {
    kv: KvClient,
    registry: Arc<OpRegistry>,
    graph: Arc<TaskGraph>,
    notify: Notify,
}

impl TaskFunction {
    pub fn new(kv: KvClient, registry: Arc<OpRegistry>, graph: Arc<TaskGraph>, notify: Notify) -> Self {
        Self {
            kv,
            registry,
            graph,
            notify,
        }
    }
}

impl FunctionHandler for TaskFunction {
    fn handle(&self, ctx: InstanceContext) -> BoxFuture<'static, Result<String, FunctionError>> {
        let (kv, registry, graph, notify) = (
            self.kv.clone(),
            self.registry.clone(),
            self.graph.clone(),
            self.notify.clone(),
        );
        Box::pin(async move {
            let RequestBody::Task { task } = ctx.request.body.clone() else {
                return Err(FunctionError::Fatal("task function invoked with a schedule".into()));
            };
            let node = graph
                .node(&task)
                .ok_or_else(|| FunctionError::Fatal(format!("`{task}` is not in the DAG")))?;
            let run = ctx.request.run.clone();
            let actor = ctx.actor();
            let rt = ctx.rt().clone();

            let t0 = rt.now();
            ctx.log(EventKind::TaskStart, Detail::task(&task));
            let mut args = Vec::with_capacity(node.deps.len() + node.inline_args.len());
            for dep in &node.deps {
                ctx.check(Action::KvGet)?;
                let v = kv
                    .get(actor, &KvKey::out(&run, dep).to_string())
                    .await
                    .and_then(KvValue::into_value)
                    .ok_or_else(|| FunctionError::Fatal(format!("missing input `{dep}` for `{task}`")))?;
                args.push(v);
            }
            args.extend(node.inline_args.iter().cloned());
            let t1 = rt.now();
            rt.sleep(ms(node.op.delay_ms())).await;
            let value = node
                .op
                .apply(&args, &registry)
                .map_err(|e| FunctionError::Retryable(format!("task `{task}` failed: {e}")))?;
            let t2 = rt.now();
            ctx.check(Action::KvPut)?;
            if graph.out_degree(&task) == 0 {
                ctx.check(Action::Publish)?;
                kv.store_final(actor, &run, &task, value).await;
            } else {
                kv.put(actor, &KvKey::out(&run, &task).to_string(), KvValue::Value(value))
                    .await;
            }
            let t3 = rt.now();
            ctx.log(
                EventKind::TaskEnd,
                Detail {
                    task: Some(task.clone()),
                    read_ms: Some(as_ms(t1 - t0)),
                    compute_ms: Some(as_ms(t2 - t1)),
                    write_ms: Some(as_ms(t3 - t2)),
                    invoke_delay_ms: Some(as_ms(t0.saturating_sub(ctx.request.invoked_at))),
                    ..Detail::default()
                },
            );
            match notify {
                Notify::Tcp { inbox, cost_ms } => {
                    ctx.check(Action::OutboundConnect)?;
                    rt.sleep(ms(cost_ms)).await;
                    ctx.log(EventKind::TcpNotify, Detail::task(&task));
                    let _ = inbox.unbounded_send(task);
                }
                Notify::PubSub => {
                    ctx.check(Action::Publish)?;
                    kv.publish(
                        actor,
                        &completions_channel(&run),
                        Message::TaskCompleted {
                            task,
                            instance: Some(ctx.instance),
                        },
                    )
                    .await;
                }
            }
            Ok("task_complete".into())
        })
    }
}

/// Scheduler loop of the strawman engine. The same loop invokes ready tasks
/// one after another and handles each completion notification serially,
/// paying `handling_ms` per notification.
pub async fn run_strawman_scheduler(
    graph: Arc<TaskGraph>,
    platform: Arc<Platform>,
    run: String,
    mut inbox: UnboundedReceiver<TaskId>,
    handling_ms: f64,
) {
    let mut state = CentralSchedulerState::new(&graph);
    let mut ready: VecDeque<TaskId> = state.initial_ready().into();
    let rt = platform.rt().clone();
    loop {
        while let Some(task) = ready.pop_front() {
            let body = RequestBody::Task { task };
            if platform.invoke(Actor::SERVICE, &run, body, "scheduler").await.is_err() {
                return;
            }
        }
        if state.all_done() {
            return;
        }
        let Some(task) = inbox.next().await else { return };
        rt.sleep(ms(handling_ms)).await;
        ready.extend(state.complete(&graph, &task));
    }
}

/// Scheduler of the pub/sub and parallel-invoker engines. Completions arrive
/// on the store channel; ready tasks are dealt round-robin to
/// `num_invokers` workers, each invoking its queue sequentially.
/// `completions` must be subscribed before any task can finish.
pub async fn run_pubsub_scheduler(
    graph: Arc<TaskGraph>,
    platform: Arc<Platform>,
    run: String,
    mut completions: UnboundedReceiver<Message>,
    num_invokers: usize,
) {
    let workers = num_invokers.max(1);
    let rt = platform.rt().clone();
    let mut queues = Vec::with_capacity(workers);
    for w in 0..workers {
        let (tx, mut rx) = unbounded::<TaskId>();
        queues.push(tx);
        let (platform, run) = (platform.clone(), run.clone());
        let via = format!("invoker-{w}");
        rt.spawn(Box::pin(async move {
            while let Some(task) = rx.next().await {
                let body = RequestBody::Task { task };
                if platform.invoke(Actor::SERVICE, &run, body, &via).await.is_err() {
                    return;
                }
            }
        }));
    }
    let mut next = 0usize;
    let mut dispatch = |tasks: Vec<TaskId>| {
        for t in tasks {
            let _ = queues[next % workers].unbounded_send(t);
            next += 1;
        }
    };
    let mut state = CentralSchedulerState::new(&graph);
    dispatch(state.initial_ready());
    while !state.all_done() {
        let Some(msg) = completions.next().await else { return };
        if let Message::TaskCompleted { task, .. } = msg {
            dispatch(state.complete(&graph, &task));
        }
    }
}
