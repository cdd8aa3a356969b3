mod common;

use faasdag_core::platform::PlatformFailure;
use faasdag_core::{events, random_dag, tree_reduction, EngineConfig, EngineKind, EventKind, RunError};

use common::*;

#[test]
fn baselines_survive_injected_faults() {
    let mut completed = 0;
    for seed in 0..40 {
        let g = random_dag(seed, 32, 3);
        for kind in EngineKind::ALL {
            let mut cfg = EngineConfig::default().with_engine(kind);
            cfg.platform.fail_rate = 0.1;
            cfg.platform.seed = seed;
            let out = run(&g, &cfg);
            let starts = of_kind(&out.events, EventKind::Start).map(|e| e.detail.attempt.unwrap());
            assert!(starts.into_iter().all(|a| (1..=3).contains(&a)));
            match out.result {
                Ok(sinks) => {
                    assert_eq!(sinks, oracle(&g), "seed {seed} {kind}");
                    assert!(task_ends(&out.events).values().all(|&n| n == 1));
                    completed += 1;
                }
                Err(e) => assert!(
                    matches!(e, RunError::Platform(PlatformFailure::PermanentFailure { .. })),
                    "{e}"
                ),
            }
        }
    }
    assert!(completed > 100, "{completed}");
}

#[test]
fn timeouts_are_retried_then_fail() {
    let g = tree_reduction(2, 300.0).unwrap();
    let mut cfg = EngineConfig::default();
    cfg.platform.timeout_ms = 200.0;
    let out = run(&g, &cfg);
    assert!(matches!(
        out.result,
        Err(RunError::Platform(PlatformFailure::PermanentFailure { attempts: 3, .. }))
    ));
    assert_eq!(events::count(&out.events, EventKind::Timeout), 3);
    assert_eq!(events::count(&out.events, EventKind::Retry), 2);
}

#[test]
fn concurrency_cap_is_respected() {
    let g = tree_reduction(64, 20.0).unwrap();
    let mut cfg = EngineConfig::default();
    cfg.platform.max_concurrency = Some(1000);
    let roomy = run(&g, &cfg);
    assert!(roomy.result.is_ok());
    assert!(roomy.platform.max_running <= 1000);

    cfg.platform.max_concurrency = Some(4);
    let tight = run(&g, &cfg);
    assert!(matches!(tight.result, Err(RunError::Platform(PlatformFailure::Rejected { .. }))));
    assert!(tight.platform.max_running <= 4);
    assert!(events::count(&tight.events, EventKind::Reject) >= 1);
}

#[test]
fn regular_runs_never_violate_connectivity() {
    let g = random_dag(3, 64, 4);
    for kind in EngineKind::ALL {
        let out = run_on(&g, kind);
        assert_eq!(events::count(&out.events, EventKind::Violation), 0, "{kind}");
    }
}
