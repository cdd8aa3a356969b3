//! Simulated function-as-a-service platform.
//!
//! Invocation is fire-and-forget: the caller pays the invocation overhead,
//! then an instance starts (warm from the pool or cold), runs the installed
//! [`FunctionHandler`] under a timeout, and is retried on failure up to
//! `max_retries` times. Functions may only open outbound connections.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock, Weak};
use std::time::Duration;

use futures::channel::mpsc::{unbounded, UnboundedReceiver, UnboundedSender};
use futures::future::{select, BoxFuture, Either};
use parking_lot::Mutex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Actor, Detail, EventKind, EventLog};
use crate::graph::TaskId;
use crate::hash::fnv1a64;
use crate::kv::Payload;
use crate::sim::{ms, Rt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformConfig {
    pub invoke_overhead_ms: f64,
    pub cold_start_ms: f64,
    pub warm_pool_size: usize,
    pub timeout_ms: f64,
    pub max_retries: u32,
    /// `None` means unbounded.
    pub max_concurrency: Option<usize>,
    pub fail_rate: f64,
    /// A successfully finished instance goes back to the warm pool.
    pub instance_reuse: bool,
    /// Connectivity violations abort the run instead of only being logged.
    pub strict_connectivity: bool,
    pub seed: u64,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        Self {
            invoke_overhead_ms: 50.0,
            cold_start_ms: 200.0,
            warm_pool_size: 64,
            timeout_ms: 120_000.0,
            max_retries: 2,
            max_concurrency: None,
            fail_rate: 0.0,
            instance_reuse: true,
            strict_connectivity: true,
            seed: 0,
        }
    }
}

impl PlatformConfig {
    pub fn validate(&self) -> Result<(), PlatformError> {
        let non_neg = [
            ("invoke_overhead_ms", self.invoke_overhead_ms),
            ("cold_start_ms", self.cold_start_ms),
            ("timeout_ms", self.timeout_ms),
        ];
        for (name, v) in non_neg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PlatformError::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.fail_rate) {
            return Err(PlatformError::InvalidConfig(format!(
                "fail_rate must be in [0, 1], got {}",
                self.fail_rate
            )));
        }
        Ok(())
    }
}

/// Where an executor starts walking its schedule: at a task, or on the edge
/// that follows a fan-out (which may lead into a fan-in).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Exec(TaskId),
    Edge { from: TaskId, to: TaskId },
}

impl Position {
    pub fn task(&self) -> &TaskId {
        match self {
            Position::Exec(t) => t,
            Position::Edge { to, .. } => to,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestBody {
    /// Walk the schedule of `leaf` from `entry`.
    Executor {
        leaf: TaskId,
        entry: Position,
        inputs: BTreeMap<TaskId, Payload>,
    },
    /// Run exactly one task (centralized engines).
    Task { task: TaskId },
}

impl RequestBody {
    pub fn task(&self) -> &TaskId {
        match self {
            RequestBody::Executor { entry, .. } => entry.task(),
            RequestBody::Task { task } => task,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvocationRequest {
    pub id: u64,
    pub run: String,
    /// 1 for the first attempt.
    pub attempt: u32,
    /// Clock time at which the invoke call was issued.
    pub invoked_at: Duration,
    pub body: RequestBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FunctionError {
    /// Handed back to the platform's retry policy.
    #[error("{0}")]
    Retryable(String),
    /// Protocol violation; retrying cannot help.
    #[error("fatal: {0}")]
    Fatal(String),
}

pub trait FunctionHandler: Send + Sync + 'static {
    /// Runs one instance to completion. `Ok` carries the termination reason.
    fn handle(&self, ctx: InstanceContext) -> BoxFuture<'static, Result<String, FunctionError>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    KvGet,
    KvPut,
    RegisterDependency,
    Publish,
    Subscribe,
    Invoke,
    /// Outbound connection to a long-lived service (e.g. a scheduler).
    OutboundConnect,
    ListenInbound,
    ReceiveFrom(u64),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::ReceiveFrom(i) => write!(f, "receive_from({i})"),
            other => write!(f, "{}", serde_json::to_string(other).unwrap_or_default().trim_matches('"')),
        }
    }
}

pub fn connectivity_allows(action: Action) -> bool {
    !matches!(action, Action::ListenInbound | Action::ReceiveFrom(_))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlatformError {
    #[error("invocation {request} rejected: concurrency limit reached")]
    Rejected { request: u64 },
    #[error("instance {instance} attempted {action}: only outbound communication is allowed")]
    ConnectivityViolation { instance: u64, action: Action },
    #[error("invalid platform config: {0}")]
    InvalidConfig(String),
}

/// Run-level failures reported to whoever is waiting on the run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlatformFailure {
    #[error("request {request} failed permanently after {attempts} attempt(s): {reason}")]
    PermanentFailure { request: u64, attempts: u32, reason: String },
    #[error("invocation {request} rejected: concurrency limit reached")]
    Rejected { request: u64 },
    #[error("instance {instance} attempted {action}: only outbound communication is allowed")]
    ConnectivityViolation { instance: u64, action: Action },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformStats {
    pub invocations: u64,
    pub starts: u64,
    pub cold_starts: u64,
    pub retries: u64,
    pub timeouts: u64,
    pub failures: u64,
    pub rejections: u64,
    pub permanent_failures: u64,
    pub max_running: usize,
}

#[derive(Default)]
struct State {
    warm: usize,
    running: usize,
    next_request: u64,
    next_instance: u64,
    stats: PlatformStats,
}

pub struct Platform {
    cfg: PlatformConfig,
    rt: Rt,
    log: Arc<EventLog>,
    state: Mutex<State>,
    handler: OnceLock<Arc<dyn FunctionHandler>>,
    failure_subs: Mutex<Vec<UnboundedSender<PlatformFailure>>>,
    me: Weak<Platform>,
}

impl Platform {
    pub fn new(cfg: PlatformConfig, rt: Rt, log: Arc<EventLog>) -> Result<Arc<Self>, PlatformError> {
        cfg.validate()?;
        Ok(Arc::new_cyclic(|me| Platform {
            state: Mutex::new(State {
                warm: cfg.warm_pool_size,
                ..State::default()
            }),
            cfg,
            rt,
            log,
            handler: OnceLock::new(),
            failure_subs: Mutex::new(Vec::new()),
            me: me.clone(),
        }))
    }

    pub fn config(&self) -> &PlatformConfig {
        &self.cfg
    }

    pub fn rt(&self) -> &Rt {
        &self.rt
    }

    pub fn log(&self) -> &Arc<EventLog> {
        &self.log
    }

    /// Installs the function body. Only the first call has an effect.
    pub fn set_handler(&self, handler: Arc<dyn FunctionHandler>) -> bool {
        self.handler.set(handler).is_ok()
    }

    /// Sets the warm pool to exactly `n` instances.
    pub fn warm_up(&self, n: usize) {
        self.state.lock().warm = n;
    }

    pub fn warm_pool(&self) -> usize {
        self.state.lock().warm
    }

    pub fn running(&self) -> usize {
        self.state.lock().running
    }

    pub fn stats(&self) -> PlatformStats {
        self.state.lock().stats.clone()
    }

    pub fn subscribe_failures(&self) -> UnboundedReceiver<PlatformFailure> {
        let (tx, rx) = unbounded();
        self.failure_subs.lock().push(tx);
        rx
    }

    fn report(&self, failure: PlatformFailure) {
        self.failure_subs
            .lock()
            .retain(|tx| tx.unbounded_send(failure.clone()).is_ok());
    }

    fn arc(&self) -> Arc<Platform> {
        self.me.upgrade().expect("platform alive while in use")
    }

    /// Checks an instance's communication attempt against the outbound-only
    /// rule.
    pub fn enforce_connectivity(&self, instance: u64, action: Action) -> Result<(), PlatformError> {
        if connectivity_allows(action) {
            return Ok(());
        }
        self.log.log(
            EventKind::Violation,
            Actor {
                instance: Some(instance),
                request: None,
            },
            Detail::reason(action.to_string()),
        );
        if self.cfg.strict_connectivity {
            self.report(PlatformFailure::ConnectivityViolation { instance, action });
        }
        Err(PlatformError::ConnectivityViolation { instance, action })
    }

    /// Invokes a function. Resolves once the invocation overhead has been
    /// charged to the caller and the instance has been admitted.
    pub fn invoke(
        &self,
        caller: Actor,
        run: &str,
        body: RequestBody,
        via: &str,
    ) -> BoxFuture<'static, Result<u64, PlatformError>> {
        let id = {
            let mut st = self.state.lock();
            st.next_request += 1;
            st.next_request
        };
        let req = InvocationRequest {
            id,
            run: run.to_string(),
            attempt: 1,
            invoked_at: Duration::ZERO,
            body,
        };
        self.arc().submit(caller, req, via.to_string())
    }

    fn submit(
        self: Arc<Self>,
        caller: Actor,
        mut req: InvocationRequest,
        via: String,
    ) -> BoxFuture<'static, Result<u64, PlatformError>> {
        Box::pin(async move {
            req.invoked_at = self.rt.now();
            self.state.lock().stats.invocations += 1;
            self.log.log(
                EventKind::Invoke,
                Actor {
                    instance: caller.instance,
                    request: Some(req.id),
                },
                Detail {
                    task: Some(req.body.task().clone()),
                    attempt: Some(req.attempt),
                    via: Some(via),
                    ..Detail::default()
                },
            );
            self.rt.sleep(ms(self.cfg.invoke_overhead_ms)).await;
            let admitted = {
                let mut st = self.state.lock();
                let full = self.cfg.max_concurrency.is_some_and(|cap| st.running >= cap);
                if full {
                    st.stats.rejections += 1;
                } else {
                    st.running += 1;
                    st.stats.max_running = st.stats.max_running.max(st.running);
                }
                !full
            };
            if !admitted {
                self.log.log(
                    EventKind::Reject,
                    Actor {
                        instance: None,
                        request: Some(req.id),
                    },
                    Detail::task(req.body.task()),
                );
                self.report(PlatformFailure::Rejected { request: req.id });
                return Err(PlatformError::Rejected { request: req.id });
            }
            let id = req.id;
            let me = self.clone();
            self.rt.spawn(Box::pin(me.run_instance(req)));
            Ok(id)
        })
    }

    fn injected_failure(&self, req: &InvocationRequest) -> bool {
        if self.cfg.fail_rate <= 0.0 {
            return false;
        }
        let mut seed_bytes = Vec::with_capacity(20);
        seed_bytes.extend_from_slice(&self.cfg.seed.to_le_bytes());
        seed_bytes.extend_from_slice(&req.id.to_le_bytes());
        seed_bytes.extend_from_slice(&req.attempt.to_le_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(&seed_bytes));
        rng.random_bool(self.cfg.fail_rate)
    }

    async fn run_instance(self: Arc<Self>, req: InvocationRequest) {
        let (instance, cold) = {
            let mut st = self.state.lock();
            st.next_instance += 1;
            st.stats.starts += 1;
            let cold = if st.warm > 0 {
                st.warm -= 1;
                false
            } else {
                st.stats.cold_starts += 1;
                true
            };
            (st.next_instance, cold)
        };
        let actor = Actor::instance(instance, req.id);
        self.log.log(
            EventKind::Start,
            actor,
            Detail {
                task: Some(req.body.task().clone()),
                attempt: Some(req.attempt),
                ..Detail::default()
            },
        );
        if cold {
            self.log.log(EventKind::ColdStart, actor, Detail::default());
            self.rt.sleep(ms(self.cfg.cold_start_ms)).await;
        }
        // Injected faults hit before the body has any side effect.
        if self.injected_failure(&req) {
            self.log.log(EventKind::Fail, actor, Detail::reason("injected failure"));
            self.finish(false);
            self.retry_or_fail(req, "injected failure".into());
            return;
        }
        let handler = self
            .handler
            .get()
            .cloned()
            .expect("a function handler is installed before invoking");
        let ctx = InstanceContext {
            platform: self.clone(),
            instance,
            request: req.clone(),
            cold,
            started_at: self.rt.now(),
        };
        let work = handler.handle(ctx);
        let deadline = self.rt.sleep(ms(self.cfg.timeout_ms));
        match select(work, deadline).await {
            Either::Left((Ok(reason), _)) => {
                self.log.log(EventKind::Done, actor, Detail::reason(reason));
                self.finish(true);
            }
            Either::Left((Err(FunctionError::Retryable(reason)), _)) => {
                self.log.log(EventKind::Fail, actor, Detail::reason(reason.clone()));
                self.finish(false);
                self.retry_or_fail(req, reason);
            }
            Either::Left((Err(FunctionError::Fatal(reason)), _)) => {
                self.log.log(EventKind::Fail, actor, Detail::reason(reason.clone()));
                self.finish(false);
                self.permanent(req, reason);
            }
            Either::Right(((), _)) => {
                self.log.log(EventKind::Timeout, actor, Detail::default());
                {
                    self.state.lock().stats.timeouts += 1;
                }
                self.finish(false);
                self.retry_or_fail(req, "timeout".into());
            }
        }
    }

    fn finish(&self, ok: bool) {
        let mut st = self.state.lock();
        st.running -= 1;
        if !ok {
            st.stats.failures += 1;
        }
        if ok && self.cfg.instance_reuse {
            st.warm += 1;
        }
    }

    fn retry_or_fail(self: &Arc<Self>, mut req: InvocationRequest, reason: String) {
        if req.attempt <= self.cfg.max_retries {
            req.attempt += 1;
            self.state.lock().stats.retries += 1;
            self.log.log(
                EventKind::Retry,
                Actor {
                    instance: None,
                    request: Some(req.id),
                },
                Detail {
                    task: Some(req.body.task().clone()),
                    attempt: Some(req.attempt),
                    reason: Some(reason),
                    ..Detail::default()
                },
            );
            let fut = self.clone().submit(Actor::SERVICE, req, "retry".into());
            self.rt.spawn(Box::pin(async move {
                let _ = fut.await;
            }));
        } else {
            self.permanent(req, reason);
        }
    }

    fn permanent(&self, req: InvocationRequest, reason: String) {
        self.state.lock().stats.permanent_failures += 1;
        self.log.log(
            EventKind::PermanentFailure,
            Actor {
                instance: None,
                request: Some(req.id),
            },
            Detail {
                task: Some(req.body.task().clone()),
                attempt: Some(req.attempt),
                reason: Some(reason.clone()),
                ..Detail::default()
            },
        );
        self.report(PlatformFailure::PermanentFailure {
            request: req.id,
            attempts: req.attempt,
            reason,
        });
    }
}

/// What a running function instance sees of the platform.
pub struct InstanceContext {
    pub platform: Arc<Platform>,
    pub instance: u64,
    pub request: InvocationRequest,
    pub cold: bool,
    /// When the body began running (after any cold start).
    pub started_at: Duration,
}

impl InstanceContext {
    pub fn actor(&self) -> Actor {
        Actor::instance(self.instance, self.request.id)
    }

    pub fn rt(&self) -> &Rt {
        &self.platform.rt
    }

    pub fn log(&self, kind: EventKind, detail: Detail) {
        self.platform.log.log(kind, self.actor(), detail);
    }

    pub fn check(&self, action: Action) -> Result<(), FunctionError> {
        self.platform
            .enforce_connectivity(self.instance, action)
            .map_err(|e| FunctionError::Fatal(e.to_string()))
    }

    pub fn invoke(&self, body: RequestBody) -> BoxFuture<'static, Result<u64, PlatformError>> {
        if let Err(e) = self.platform.enforce_connectivity(self.instance, Action::Invoke) {
            return Box::pin(async move { Err(e) });
        }
        self.platform
            .invoke(self.actor(), &self.request.run, body, "executor")
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use futures::StreamExt;

    use super::*;
    use crate::events::count;
    use crate::sim::{as_ms, VirtualRuntime};

    struct Sleeper {
        ms: f64,
        runs: AtomicUsize,
        fail: bool,
    }

    impl FunctionHandler for Sleeper {
        fn handle(&self, ctx: InstanceContext) -> BoxFuture<'static, Result<String, FunctionError>> {
            self.runs.fetch_add(1, Ordering::SeqCst);
            let d = ms(self.ms);
            let fail = self.fail;
            Box::pin(async move {
                ctx.rt().sleep(d).await;
                if fail {
                    Err(FunctionError::Retryable("boom".into()))
                } else {
                    Ok("ok".into())
                }
            })
        }
    }

    fn setup(cfg: PlatformConfig, ms_: f64, fail: bool) -> (VirtualRuntime, Arc<Platform>, Arc<Sleeper>) {
        let vrt = VirtualRuntime::new();
        let rt: Rt = Arc::new(vrt.clone());
        let p = Platform::new(cfg, rt.clone(), EventLog::new(rt)).unwrap();
        let h = Arc::new(Sleeper {
            ms: ms_,
            runs: AtomicUsize::new(0),
            fail,
        });
        p.set_handler(h.clone());
        (vrt, p, h)
    }

    fn body(i: usize) -> RequestBody {
        RequestBody::Task {
            task: TaskId::new(format!("t{i}")),
        }
    }

    #[test]
    fn sequential_invokes_charge_caller() {
        let (vrt, p, _) = setup(PlatformConfig::default(), 0.0, false);
        let p2 = p.clone();
        let elapsed = vrt
            .block_on(async move {
                for i in 0..10 {
                    p2.invoke(Actor::SERVICE, "r", body(i), "test").await.unwrap();
                }
                p2.rt().now()
            })
            .unwrap();
        assert!(as_ms(elapsed) >= 500.0);
        assert_eq!(as_ms(elapsed), 500.0);
    }

    #[test]
    fn warm_pool_then_cold() {
        let cfg = PlatformConfig {
            instance_reuse: false,
            ..PlatformConfig::default()
        };
        let (vrt, p, _) = setup(cfg, 10.0, false);
        let p2 = p.clone();
        vrt.block_on(async move {
            let calls = (0..65).map(|i| p2.invoke(Actor::SERVICE, "r", body(i), "test"));
            futures::future::join_all(calls).await;
        })
        .unwrap();
        let events = p.log().snapshot();
        assert_eq!(count(&events, EventKind::ColdStart), 1);
        // The cold one is the last instance to start.
        let last_start = events.iter().rev().find(|e| e.kind == EventKind::Start).unwrap();
        let cold = events.iter().find(|e| e.kind == EventKind::ColdStart).unwrap();
        assert_eq!(last_start.instance, cold.instance);
        assert_eq!(p.stats().cold_starts, 1);
    }

    #[test]
    fn warm_up_sets_pool() {
        let (_, p, _) = setup(PlatformConfig::default(), 0.0, false);
        p.warm_up(3);
        p.warm_up(0);
        assert_eq!(p.warm_pool(), 0);
    }

    #[test]
    fn concurrency_cap_rejects() {
        let cfg = PlatformConfig {
            max_concurrency: Some(1),
            ..PlatformConfig::default()
        };
        let (vrt, p, _) = setup(cfg, 100.0, false);
        let p2 = p.clone();
        let mut fails = p.subscribe_failures();
        let res = vrt
            .block_on(async move {
                let a = p2.invoke(Actor::SERVICE, "r", body(0), "test");
                let b = p2.invoke(Actor::SERVICE, "r", body(1), "test");
                futures::join!(a, b)
            })
            .unwrap();
        assert!(res.0.is_ok());
        assert_eq!(res.1, Err(PlatformError::Rejected { request: 2 }));
        assert_eq!(p.stats().max_running, 1);
        assert_eq!(
            futures::executor::block_on(fails.next()),
            Some(PlatformFailure::Rejected { request: 2 })
        );
    }

    #[test]
    fn retries_then_permanent_failure() {
        let cfg = PlatformConfig {
            fail_rate: 1.0,
            ..PlatformConfig::default()
        };
        let (vrt, p, h) = setup(cfg, 0.0, false);
        let p2 = p.clone();
        let mut fails = p.subscribe_failures();
        vrt.block_on(async move {
            p2.invoke(Actor::SERVICE, "r", body(0), "test").await.unwrap();
        })
        .unwrap();
        let events = p.log().snapshot();
        assert_eq!(count(&events, EventKind::Start), 3);
        assert_eq!(count(&events, EventKind::Retry), 2);
        assert_eq!(h.runs.load(Ordering::SeqCst), 0);
        match futures::executor::block_on(fails.next()) {
            Some(PlatformFailure::PermanentFailure { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn body_failures_also_retry() {
        let (vrt, p, h) = setup(PlatformConfig::default(), 1.0, true);
        let p2 = p.clone();
        vrt.block_on(async move {
            p2.invoke(Actor::SERVICE, "r", body(0), "test").await.unwrap();
        })
        .unwrap();
        assert_eq!(h.runs.load(Ordering::SeqCst), 3);
        assert_eq!(p.stats().permanent_failures, 1);
    }

    #[test]
    fn no_faults_single_attempt() {
        let (vrt, p, h) = setup(PlatformConfig::default(), 5.0, false);
        let p2 = p.clone();
        vrt.block_on(async move {
            for i in 0..5 {
                p2.invoke(Actor::SERVICE, "r", body(i), "test").await.unwrap();
            }
        })
        .unwrap();
        assert_eq!(h.runs.load(Ordering::SeqCst), 5);
        assert_eq!(count(&p.log().snapshot(), EventKind::Retry), 0);
        assert_eq!(p.warm_pool(), 64);
    }

    #[test]
    fn timeout_then_retry() {
        let cfg = PlatformConfig {
            timeout_ms: 10.0,
            max_retries: 1,
            ..PlatformConfig::default()
        };
        let (vrt, p, h) = setup(cfg, 50.0, false);
        let p2 = p.clone();
        vrt.block_on(async move {
            p2.invoke(Actor::SERVICE, "r", body(0), "test").await.unwrap();
        })
        .unwrap();
        let events = p.log().snapshot();
        assert_eq!(count(&events, EventKind::Timeout), 2);
        assert_eq!(count(&events, EventKind::Retry), 1);
        assert_eq!(h.runs.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn connectivity_rules() {
        let (_, p, _) = setup(PlatformConfig::default(), 0.0, false);
        assert!(p.enforce_connectivity(1, Action::KvGet).is_ok());
        assert!(p.enforce_connectivity(1, Action::KvPut).is_ok());
        assert!(p.enforce_connectivity(1, Action::Invoke).is_ok());
        assert_eq!(
            p.enforce_connectivity(1, Action::ListenInbound),
            Err(PlatformError::ConnectivityViolation {
                instance: 1,
                action: Action::ListenInbound
            })
        );
        assert!(p.enforce_connectivity(1, Action::ReceiveFrom(2)).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let vrt = VirtualRuntime::new();
        let rt: Rt = Arc::new(vrt);
        let cfg = PlatformConfig {
            fail_rate: 1.5,
            ..PlatformConfig::default()
        };
        assert!(Platform::new(cfg, rt.clone(), EventLog::new(rt)).is_err());
    }
}
