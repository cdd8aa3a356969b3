use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use faasdag_core::kv::KvStore;
use faasdag_core::{
    engine, generate_schedules, random_dag, tree_reduction, EngineConfig, EngineKind, OpRegistry, OpSpec, TaskGraph,
    TaskId, TaskNode, Value,
};

fn schedules(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_schedules");
    for n in [64usize, 256, 1024] {
        let g = tree_reduction(n, 0.0).unwrap();
        group.bench_with_input(BenchmarkId::new("tree_reduction", n), &g, |b, g| b.iter(|| generate_schedules(g)));
    }
    let g = random_dag(1, 64, 4);
    group.bench_function("random_dag_64", |b| b.iter(|| generate_schedules(&g)));
    group.finish();
}

fn virtual_runs(c: &mut Criterion) {
    let g = tree_reduction(256, 0.0).unwrap();
    let registry = OpRegistry::new();
    let mut group = c.benchmark_group("virtual_tree_reduction_256");
    group.sample_size(20);
    for kind in EngineKind::ALL {
        let cfg = EngineConfig::default().with_engine(kind);
        group.bench_function(kind.name(), |b| b.iter(|| engine::run(&g, &registry, &cfg).unwrap()));
    }
    group.finish();
}

fn fanin_registration(c: &mut Criterion) {
    let k = 256;
    let mut g = TaskGraph::new();
    let leaves: Vec<TaskId> = (0..k).map(|i| TaskId::new(format!("l{i:03}"))).collect();
    for l in &leaves {
        g.add_task(TaskNode::new(l.clone(), OpSpec::Const { value: Value::Int(1) })).unwrap();
    }
    g.add_task(TaskNode::new("sink", OpSpec::Sum).with_deps(leaves.clone())).unwrap();
    let g = Arc::new(g);
    let set = Arc::new(generate_schedules(&g));
    let fanin = set.coordination.fanin_for_target(&"sink".into()).unwrap().clone();
    c.bench_function("register_dependency_256", |b| {
        b.iter_batched(
            || {
                let store = KvStore::new(4);
                store.register_run("r", g.clone(), set.clone());
                store
            },
            |store| {
                for l in &leaves {
                    store.register_dependency("r", &fanin, l).unwrap();
                }
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, schedules, virtual_runs, fanin_registration);
criterion_main!(benches);
