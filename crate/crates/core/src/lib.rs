//! Decentralized DAG execution on a simulated serverless platform.
//!
//! A [`TaskGraph`] is split into one static schedule per leaf. Executors
//! walk those schedules, spawning peers at fan-outs and resolving fan-ins
//! through dependency records in a sharded KV store. Three centralized
//! engines run on the same platform for comparison.
//!
//! ```
//! use faasdag_core::{engine, tree_reduction, EngineConfig, OpRegistry, Value};
//!
//! let g = tree_reduction(8, 0.0).unwrap();
//! let out = engine::run(&g, &OpRegistry::new(), &EngineConfig::default()).unwrap();
//! let sinks = out.result.unwrap();
//! assert_eq!(sinks.values().next(), Some(&Value::Int(36)));
//! ```

pub mod baseline;
pub mod engine;
pub mod events;
pub mod executor;
pub mod graph;
mod hash;
pub mod kv;
pub mod platform;
pub mod report;
pub mod schedule;
pub mod sim;
pub mod workloads;

pub use engine::{ClockMode, EngineConfig, EngineError, EngineKind, RunOutcome};
pub use events::{Event, EventKind};
pub use graph::{evaluate_sequential, GraphError, OracleResult, TaskGraph, TaskId, TaskNode};
pub use kv::KvConfig;
pub use platform::PlatformConfig;
pub use report::{breakdown, trend, RunReport, TrendReport, TrendSpec};
pub use schedule::{generate_schedules, RunError, ScheduleSet, StaticSchedule};
pub use workloads::{
    blocked_gemm, random_dag, tree_reduction, two_leaf_example, Matrix, OpRegistry, OpSpec, Value,
};
