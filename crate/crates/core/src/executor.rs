//! The task executor: a function body that walks one static schedule from
//! its entry position, executing tasks along a single path.
//!
//! At a fan-out of degree n it keeps one branch and invokes executors for
//! the other n - 1 (or hands the whole fan-out to the proxy above the
//! threshold). At a fan-in it registers its edge; the registration that
//! completes the record continues, every other one stops. Nothing ever
//! waits for another executor.

use std::collections::BTreeMap;
use std::sync::Arc;

use futures::future::{join_all, BoxFuture};

use crate::events::{Detail, EventKind};
use crate::graph::TaskId;
use crate::kv::{proxy_channel, FanOutRequest, KvClient, KvKey, KvValue, Message, Payload};
use crate::platform::{Action, FunctionError, FunctionHandler, InstanceContext, Position, RequestBody};
use crate::schedule::ScheduleOp;
use crate::sim::{as_ms, ms};
use crate::workloads::{OpRegistry, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutorConfig {
    /// Fan-outs with more out-edges than this go to the proxy.
    pub max_task_fanout: usize,
    /// Values up to this many bytes travel inside invocation requests.
    pub inline_threshold: usize,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self {
            max_task_fanout: 10,
            inline_threshold: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    PathComplete,
    LostFanin,
    DelegatedFanout,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::PathComplete => "path_complete",
            Termination::LostFanin => "lost_fanin",
            Termination::DelegatedFanout => "delegated_fanout",
        }
    }
}

/// The split at a fan-out: keep `become_edge`, invoke the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDecision {
    pub become_edge: TaskId,
    pub invoke_edges: Vec<TaskId>,
}

/// Keeps the smallest target id.
pub fn choose_path(targets: &[TaskId]) -> PathDecision {
    let mut sorted = targets.to_vec();
    sorted.sort();
    let become_edge = sorted.remove(0);
    PathDecision {
        become_edge,
        invoke_edges: sorted,
    }
}

pub struct Executor {
    kv: KvClient,
    registry: Arc<OpRegistry>,
    cfg: ExecutorConfig,
}

impl Executor {
    pub fn new(kv: KvClient, registry: Arc<OpRegistry>, cfg: ExecutorConfig) -> Self {
        Self { kv, registry, cfg }
    }
}

impl FunctionHandler for Executor {
    fn handle(&self, ctx: InstanceContext) -> BoxFuture<'static, Result<String, FunctionError>> {
        let (kv, registry, cfg) = (self.kv.clone(), self.registry.clone(), self.cfg.clone());
        Box::pin(async move {
            run_executor(&ctx, &kv, &registry, &cfg)
                .await
                .map(|t| t.as_str().to_string())
        })
    }
}

fn fatal(msg: impl Into<String>) -> FunctionError {
    FunctionError::Fatal(msg.into())
}

pub async fn run_executor(
    ctx: &InstanceContext,
    kv: &KvClient,
    registry: &OpRegistry,
    cfg: &ExecutorConfig,
) -> Result<Termination, FunctionError> {
    let RequestBody::Executor { leaf, entry, inputs } = ctx.request.body.clone() else {
        return Err(fatal("executor invoked without a schedule"));
    };
    let run = ctx.request.run.clone();
    let info = kv
        .store()
        .run_info(&run)
        .ok_or_else(|| fatal(format!("run `{run}` is not registered")))?;
    let graph = &info.graph;
    let schedule = info
        .schedules
        .schedule(&leaf)
        .ok_or_else(|| fatal(format!("no schedule for leaf `{leaf}`")))?;
    let rt = ctx.rt().clone();
    let actor = ctx.actor();

    let mut cache: BTreeMap<TaskId, Value> = BTreeMap::new();
    for (task, payload) in inputs {
        if let Payload::Inline(v) = payload {
            cache.insert(task, v);
        }
    }
    let mut first_task = true;
    let mut pos = entry;
    loop {
        let task = match pos {
            Position::Edge { from, to } => {
                if let Some(ScheduleOp::FanIn { id, .. }) = schedule.fanin_before(&to) {
                    ctx.check(Action::RegisterDependency)?;
                    let reg = kv
                        .register_dependency(actor, &run, id, &from)
                        .await
                        .map_err(|e| fatal(e.to_string()))?;
                    // A retried attempt whose earlier try already completed
                    // the record picks up where that try left off.
                    let resumed = reg.duplicate
                        && ctx.request.attempt > 1
                        && reg.completed_by.as_ref() == Some(&from);
                    if !(reg.completed_set || resumed) {
                        return Ok(Termination::LostFanin);
                    }
                }
                to
            }
            Position::Exec(t) => t,
        };
        if !schedule.contains_task(&task) {
            return Err(fatal(format!("`{task}` is not in the schedule of `{leaf}`")));
        }
        let node = graph
            .node(&task)
            .ok_or_else(|| fatal(format!("`{task}` is not in the DAG")))?;

        let t0 = rt.now();
        let invoke_delay = if first_task {
            as_ms(t0.saturating_sub(ctx.request.invoked_at))
        } else {
            0.0
        };
        first_task = false;
        ctx.log(EventKind::TaskStart, Detail::task(&task));

        let mut args = Vec::with_capacity(node.deps.len() + node.inline_args.len());
        for dep in &node.deps {
            match cache.get(dep) {
                Some(v) => args.push(v.clone()),
                None => {
                    ctx.check(Action::KvGet)?;
                    let key = KvKey::out(&run, dep).to_string();
                    let v = kv
                        .get(actor, &key)
                        .await
                        .and_then(KvValue::into_value)
                        .ok_or_else(|| fatal(format!("missing input `{dep}` for `{task}`")))?;
                    args.push(v);
                }
            }
        }
        args.extend(node.inline_args.iter().cloned());
        let t1 = rt.now();

        rt.sleep(ms(node.op.delay_ms())).await;
        let value = node
            .op
            .apply(&args, registry)
            .map_err(|e| FunctionError::Retryable(format!("task `{task}` failed: {e}")))?;
        let t2 = rt.now();
        cache.insert(task.clone(), value.clone());

        let outs = graph.out_edges(&task);
        let out_key = KvKey::out(&run, &task).to_string();
        let feeds_fanin = outs.iter().any(|o| graph.in_degree(o) >= 2);
        let too_big = value.byte_size() > cfg.inline_threshold;
        if outs.is_empty() {
            ctx.check(Action::KvPut)?;
            ctx.check(Action::Publish)?;
            kv.store_final(actor, &run, &task, value.clone()).await;
        } else if feeds_fanin || (outs.len() >= 2 && too_big) {
            ctx.check(Action::KvPut)?;
            kv.put(actor, &out_key, KvValue::Value(value.clone())).await;
        }
        let t3 = rt.now();
        ctx.log(
            EventKind::TaskEnd,
            Detail {
                task: Some(task.clone()),
                read_ms: Some(as_ms(t1 - t0)),
                compute_ms: Some(as_ms(t2 - t1)),
                write_ms: Some(as_ms(t3 - t2)),
                invoke_delay_ms: Some(invoke_delay),
                ..Detail::default()
            },
        );

        match outs.len() {
            0 => return Ok(Termination::PathComplete),
            // Trivial fan-out or a single edge into a fan-in: keep going.
            1 => {
                pos = Position::Edge {
                    from: task,
                    to: outs[0].clone(),
                };
                continue;
            }
            _ => {}
        }
        let Some(ScheduleOp::FanOut { id, .. }) = schedule.fanout_after(&task) else {
            return Err(fatal(format!("schedule has no fan-out after `{task}`")));
        };
        let payload = if too_big {
            Payload::Key(out_key)
        } else {
            Payload::Inline(value)
        };
        let forwarded = BTreeMap::from([(task.clone(), payload)]);
        if outs.len() > cfg.max_task_fanout {
            ctx.check(Action::Publish)?;
            let req = FanOutRequest {
                run: run.clone(),
                fanout: id.clone(),
                leaf: leaf.clone(),
                source_instance: Some(ctx.instance),
                inputs: forwarded,
            };
            kv.publish(actor, &proxy_channel(&run), Message::FanOut(req)).await;
            return Ok(Termination::DelegatedFanout);
        }
        let decision = choose_path(outs);
        ctx.log(
            EventKind::Fanout,
            Detail {
                task: Some(task.clone()),
                fanout: Some(id.to_string()),
                count: Some(decision.invoke_edges.len()),
                via: Some("executor".into()),
                ..Detail::default()
            },
        );
        let calls = decision.invoke_edges.iter().map(|target| {
            ctx.invoke(RequestBody::Executor {
                leaf: leaf.clone(),
                entry: Position::Edge {
                    from: task.clone(),
                    to: target.clone(),
                },
                inputs: forwarded.clone(),
            })
        });
        for r in join_all(calls).await {
            r.map_err(|e| fatal(e.to_string()))?;
        }
        pos = Position::Edge {
            from: task,
            to: decision.become_edge,
        };
    }
}
