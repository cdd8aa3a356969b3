mod common;

use std::collections::BTreeMap;

use faasdag_core::{events, random_dag, tree_reduction, EngineConfig, EngineKind, EventKind, Value};

use common::*;

const CENTRAL: [EngineKind; 3] = [EngineKind::Strawman, EngineKind::PubSub, EngineKind::ParallelInvoker];

#[test]
fn tree_reduction_is_correct_on_every_baseline() {
    let g = tree_reduction(64, 0.0).unwrap();
    for kind in CENTRAL {
        let out = run_on(&g, kind);
        assert_eq!(out.result.unwrap().into_values().next(), Some(Value::Int(64 * 65 / 2)), "{kind}");
    }
}

#[test]
fn one_invocation_per_task() {
    for seed in 0..50 {
        let g = random_dag(seed, 40, 3);
        for kind in CENTRAL {
            let out = run_on(&g, kind);
            assert_eq!(out.result.as_ref().unwrap(), &oracle(&g), "seed {seed} {kind}");
            assert_eq!(events::count(&out.events, EventKind::Invoke), g.len(), "seed {seed} {kind}");
        }
    }
}

#[test]
fn notification_mechanisms() {
    let g = tree_reduction(32, 0.0).unwrap();
    let pubsub = run_on(&g, EngineKind::PubSub);
    assert_eq!(events::count(&pubsub.events, EventKind::TcpNotify), 0);
    let completions = of_kind(&pubsub.events, EventKind::Publish)
        .filter(|e| e.detail.key.as_deref() == Some("completions/r0"))
        .count();
    assert_eq!(completions, g.len());
    let straw = run_on(&g, EngineKind::Strawman);
    assert_eq!(events::count(&straw.events, EventKind::TcpNotify), g.len());
    assert!(of_kind(&straw.events, EventKind::Publish).all(|e| e.detail.key.as_deref() != Some("completions/r0")));
}

#[test]
fn single_invoker_is_pubsub() {
    let g = tree_reduction(64, 3.0).unwrap();
    let mut cfg = EngineConfig::default().with_engine(EngineKind::ParallelInvoker);
    cfg.num_invokers = 1;
    let pi = run(&g, &cfg);
    let ps = run_on(&g, EngineKind::PubSub);
    assert_eq!(events::to_jsonl(&pi.events), events::to_jsonl(&ps.events));
}

#[test]
fn strawman_and_pubsub_are_close_without_delay() {
    let g = tree_reduction(1024, 0.0).unwrap();
    let s = run_on(&g, EngineKind::Strawman).makespan_ms();
    let p = run_on(&g, EngineKind::PubSub).makespan_ms();
    assert!((s - p).abs() / s <= 0.10, "strawman {s} pubsub {p}");
}

#[test]
fn pubsub_beats_strawman_with_long_tasks() {
    let g = tree_reduction(1024, 500.0).unwrap();
    let s = run_on(&g, EngineKind::Strawman).makespan_ms();
    let p = run_on(&g, EngineKind::PubSub).makespan_ms();
    assert!(p < s, "strawman {s} pubsub {p}");
}

#[test]
fn leaf_dispatch_is_balanced() {
    let g = tree_reduction(1024, 0.0).unwrap();
    let wk = run_on(&g, EngineKind::Wukong);
    assert_eq!(wk.per_worker.iter().sum::<usize>(), 512);
    assert!(wk.per_worker.iter().max().unwrap() - wk.per_worker.iter().min().unwrap() <= 1);

    let pi = run_on(&g, EngineKind::ParallelInvoker);
    let leaves: Vec<_> = g.leaves();
    let mut per: BTreeMap<String, usize> = BTreeMap::new();
    for e in of_kind(&pi.events, EventKind::Invoke) {
        if leaves.contains(e.detail.task.as_ref().unwrap()) {
            *per.entry(e.detail.via.clone().unwrap()).or_insert(0) += 1;
        }
    }
    assert_eq!(per.len(), 20);
    assert_eq!(per.values().sum::<usize>(), 512);
    assert!(per.values().max().unwrap() - per.values().min().unwrap() <= 1);
}
