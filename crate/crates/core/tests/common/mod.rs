#![allow(dead_code)]

use std::collections::BTreeMap;

use faasdag_core::{
    engine, evaluate_sequential, EngineConfig, EngineKind, Event, EventKind, OpRegistry, RunOutcome, TaskGraph, TaskId,
    Value,
};

pub fn run(graph: &TaskGraph, cfg: &EngineConfig) -> RunOutcome {
    engine::run(graph, &OpRegistry::new(), cfg).expect("engine accepts the config")
}

pub fn run_on(graph: &TaskGraph, kind: EngineKind) -> RunOutcome {
    run(graph, &EngineConfig::default().with_engine(kind))
}

pub fn oracle(graph: &TaskGraph) -> BTreeMap<TaskId, Value> {
    evaluate_sequential(graph, &OpRegistry::new()).unwrap().sink_values
}

pub fn of_kind(events: &[Event], kind: EventKind) -> impl Iterator<Item = &Event> {
    events.iter().filter(move |e| e.kind == kind)
}

/// task → number of task_end events.
pub fn task_ends(events: &[Event]) -> BTreeMap<TaskId, usize> {
    let mut m = BTreeMap::new();
    for e in of_kind(events, EventKind::TaskEnd) {
        *m.entry(e.detail.task.clone().unwrap()).or_insert(0) += 1;
    }
    m
}

/// request id → tasks it finished, in order.
pub fn tasks_by_request(events: &[Event]) -> BTreeMap<u64, Vec<String>> {
    let mut m: BTreeMap<u64, Vec<String>> = BTreeMap::new();
    for e in of_kind(events, EventKind::TaskEnd) {
        m.entry(e.request.unwrap())
            .or_default()
            .push(e.detail.task.as_ref().unwrap().to_string());
    }
    m
}

pub fn invokes_via(events: &[Event], prefix: &str) -> usize {
    of_kind(events, EventKind::Invoke)
        .filter(|e| e.detail.via.as_deref().is_some_and(|v| v.starts_with(prefix)))
        .count()
}

/// fan-in id → number of registrations that reported completion.
pub fn fanin_completions(events: &[Event]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for e in of_kind(events, EventKind::FaninRegister) {
        let n = m.entry(e.detail.fanin.clone().unwrap()).or_insert(0);
        if e.detail.completed == Some(true) {
            *n += 1;
        }
    }
    m
}

/// Intermediate (`out/`) reads and writes.
pub fn intermediate_io(events: &[Event]) -> (usize, usize) {
    let touches = |k: EventKind| {
        of_kind(events, k)
            .filter(|e| e.detail.key.as_deref().is_some_and(|key| key.starts_with("out/")))
            .count()
    };
    (touches(EventKind::KvRead), touches(EventKind::KvWrite))
}

pub fn chain(n: usize) -> TaskGraph {
    use faasdag_core::{OpSpec, TaskNode};
    let mut g = TaskGraph::new();
    g.add_task(TaskNode::new("c00", OpSpec::Const { value: Value::Int(1) })).unwrap();
    for i in 1..n {
        let prev = format!("c{:02}", i - 1);
        g.add_task(TaskNode::new(format!("c{i:02}").as_str(), OpSpec::Add { addend: 1 }).with_deps([prev.as_str()]))
            .unwrap();
    }
    g
}
