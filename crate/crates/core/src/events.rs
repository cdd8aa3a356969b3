//! The event log: one record per platform, executor, and KV action. Every
//! metric in a run report is derived from it.

use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::graph::TaskId;
use crate::sim::{as_ms, Rt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Invoke,
    Start,
    ColdStart,
    TaskStart,
    TaskEnd,
    KvRead,
    KvWrite,
    FaninRegister,
    Fanout,
    Publish,
    Retry,
    Timeout,
    Done,
    Fail,
    Reject,
    PermanentFailure,
    TcpNotify,
    Violation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Detail {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bytes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fanin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fanout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub read_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compute_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub write_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invoke_delay_ms: Option<f64>,
}

impl Detail {
    pub fn task(task: &TaskId) -> Self {
        Self {
            task: Some(task.clone()),
            ..Self::default()
        }
    }

    pub fn key(key: &str, bytes: usize) -> Self {
        Self {
            key: Some(key.to_string()),
            bytes: Some(bytes),
            ..Self::default()
        }
    }

    pub fn reason(reason: impl Into<String>) -> Self {
        Self {
            reason: Some(reason.into()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t_ms: f64,
    pub kind: EventKind,
    /// Function instance that acted; absent for the launcher, scheduler,
    /// proxy, and platform bookkeeping.
    pub instance: Option<u64>,
    pub request: Option<u64>,
    pub detail: Detail,
}

/// Who is performing an action, for attribution in the log.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Actor {
    pub instance: Option<u64>,
    pub request: Option<u64>,
}

impl Actor {
    pub const SERVICE: Actor = Actor {
        instance: None,
        request: None,
    };

    pub fn instance(instance: u64, request: u64) -> Self {
        Self {
            instance: Some(instance),
            request: Some(request),
        }
    }
}

pub struct EventLog {
    rt: Rt,
    events: Mutex<Vec<Event>>,
}

impl EventLog {
    pub fn new(rt: Rt) -> Arc<Self> {
        Arc::new(Self {
            rt,
            events: Mutex::new(Vec::new()),
        })
    }

    pub fn now_ms(&self) -> f64 {
        as_ms(self.rt.now())
    }

    pub fn log(&self, kind: EventKind, actor: Actor, detail: Detail) {
        let t_ms = self.now_ms();
        self.events.lock().push(Event {
            t_ms,
            kind,
            instance: actor.instance,
            request: actor.request,
            detail,
        });
    }

    pub fn snapshot(&self) -> Vec<Event> {
        self.events.lock().clone()
    }
}

pub fn to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn count(events: &[Event], kind: EventKind) -> usize {
    events.iter().filter(|e| e.kind == kind).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ms, Runtime, VirtualRuntime};

    #[test]
    fn jsonl_shape() {
        let vrt = VirtualRuntime::new();
        let log = EventLog::new(Arc::new(vrt.clone()));
        let (l, r) = (log.clone(), vrt.clone());
        vrt.block_on(async move {
            r.sleep(ms(12.5)).await;
            l.log(EventKind::KvWrite, Actor::instance(3, 9), Detail::key("out/r/T1", 8));
        })
        .unwrap();
        let line = to_jsonl(&log.snapshot());
        assert_eq!(
            line,
            "{\"t_ms\":12.5,\"kind\":\"kv_write\",\"instance\":3,\"request\":9,\"detail\":{\"key\":\"out/r/T1\",\"bytes\":8}}\n"
        );
        let back: Event = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back.kind, EventKind::KvWrite);
    }
}
