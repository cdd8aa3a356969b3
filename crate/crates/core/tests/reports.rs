mod common;

use std::time::Instant;

use faasdag_core::report::TrendError;
use faasdag_core::{
    blocked_gemm, breakdown, events, random_dag, tree_reduction, trend, two_leaf_example, ClockMode, EngineConfig,
    EngineKind, EventKind, RunReport, TaskGraph, TrendSpec, Value,
};

use common::*;

fn report(g: &TaskGraph, cfg: &EngineConfig) -> (RunReport, Vec<faasdag_core::Event>) {
    let out = run(g, cfg);
    let rep = RunReport::from_outcome(g, &out, cfg, serde_json::json!({"test": true}));
    (rep, out.events)
}

#[test]
fn totals_reconcile_with_the_log() {
    let graphs = [two_leaf_example(), random_dag(5, 64, 4), blocked_gemm(16, 4, 0).unwrap().graph];
    for g in &graphs {
        for kind in EngineKind::ALL {
            let mut cfg = EngineConfig::default().with_engine(kind);
            cfg.platform.fail_rate = 0.1;
            cfg.platform.seed = 9;
            let (rep, ev) = report(g, &cfg);
            let bytes = |k| of_kind(&ev, k).map(|e| e.detail.bytes.unwrap_or(0) as u64).sum::<u64>();
            assert_eq!(rep.executors_invoked, events::count(&ev, EventKind::Invoke));
            assert_eq!(rep.cold_starts, events::count(&ev, EventKind::ColdStart));
            assert_eq!(rep.retries, events::count(&ev, EventKind::Retry));
            assert_eq!(rep.kv.reads as usize, events::count(&ev, EventKind::KvRead));
            assert_eq!(rep.kv.writes as usize, events::count(&ev, EventKind::KvWrite));
            assert_eq!(rep.kv.fanin_registrations as usize, events::count(&ev, EventKind::FaninRegister));
            assert_eq!(rep.kv.bytes_read, bytes(EventKind::KvRead));
            assert_eq!(rep.kv.bytes_written, bytes(EventKind::KvWrite));
            assert_eq!(rep.per_task.len(), g.len());
            assert_eq!(rep.sink_digest.is_some(), rep.error.is_none());
        }
    }
}

#[test]
fn report_round_trips() {
    let g = tree_reduction(16, 1.0).unwrap();
    let (rep, _) = report(&g, &EngineConfig::default());
    assert_eq!(rep.schema_version, 1);
    let back: RunReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn compute_phase_tracks_injected_delay() {
    let (rep, _) = report(&tree_reduction(1024, 100.0).unwrap(), &EngineConfig::default());
    let b = breakdown(&rep);
    assert_eq!(b.tasks, 1023);
    let compute = &b.phases["compute"];
    assert!(compute.iter().all(|p| p.value_ms == 100.0));
    assert_eq!(compute.last().unwrap().fraction, 1.0);

    let (flat, _) = report(&tree_reduction(64, 0.0).unwrap(), &EngineConfig::default());
    assert!(breakdown(&flat).phases["compute"].iter().all(|p| p.value_ms == 0.0));
}

#[test]
fn write_phase_follows_the_latency_model() {
    for block in [4usize, 8, 16] {
        let w = blocked_gemm(32, block, 1).unwrap();
        let cfg = EngineConfig::default();
        let (rep, _) = report(&w.graph, &cfg);
        let bytes = 16 + 8 * block * block;
        let expected = cfg.kv.base_latency_ms + cfg.kv.per_kib_ms * bytes as f64 / 1024.0;
        for t in rep.per_task.iter().filter(|t| t.task.as_str().starts_with("p-")) {
            assert!((t.write_ms - expected).abs() < 1e-6, "block {block}: {} vs {expected}", t.write_ms);
        }
    }
}

#[test]
fn trend_counts_and_reproducibility() {
    let spec = TrendSpec {
        size: 16,
        engines: EngineKind::ALL.to_vec(),
        delays_ms: vec![0.0, 100.0],
        repeats: 2,
        seed: 4,
    };
    let a = trend(&spec, &EngineConfig::default()).unwrap();
    assert_eq!(a.cells.len(), 8);
    assert_eq!(a.cells.iter().map(|c| c.makespans_ms.len()).sum::<usize>(), 16);
    assert!(a.cells.iter().all(|c| c.failures == 0 && c.min_ms <= c.mean_ms && c.mean_ms <= c.max_ms));
    assert_eq!(a, trend(&spec, &EngineConfig::default()).unwrap());

    let single = TrendSpec {
        engines: vec![EngineKind::Wukong],
        delays_ms: vec![0.0, 100.0, 250.0, 500.0],
        repeats: 1,
        ..spec.clone()
    };
    assert_eq!(trend(&single, &EngineConfig::default()).unwrap().cells.len(), 4);
    let none = TrendSpec { repeats: 0, ..spec };
    assert!(matches!(trend(&none, &EngineConfig::default()), Err(TrendError::NoRepeats)));
}

#[test]
fn wall_clock_smoke() {
    let g = tree_reduction(64, 0.0).unwrap();
    let cfg = EngineConfig {
        clock: ClockMode::Wall,
        ..EngineConfig::default()
    };
    let start = Instant::now();
    let out = run(&g, &cfg);
    assert!(start.elapsed().as_secs() < 30);
    assert_eq!(out.result.unwrap().into_values().next(), Some(Value::Int(64 * 65 / 2)));
    assert_eq!(events::count(&out.events, EventKind::Invoke), 32);
}
