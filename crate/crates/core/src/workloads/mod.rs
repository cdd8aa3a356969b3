//! Benchmark DAG generators and the op vocabulary they use.

mod ops;
mod value;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{TaskGraph, TaskId, TaskNode};

pub use ops::{CustomFn, DuplicateName, OpError, OpRegistry, OpSpec};
pub use value::{Matrix, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("tree reduction needs a power of two >= 2, got {0}")]
    NotPowerOfTwo(usize),
    #[error("block size {block} does not divide matrix size {n}")]
    IndivisibleBlock { n: usize, block: usize },
    #[error("matrix inputs must be square {n}x{n}")]
    BadInputShape { n: usize },
}

fn tr_id(level: u32, index: usize) -> TaskId {
    TaskId::new(format!("tr-{level:02}-{index:05}"))
}

/// Tree reduction over `1..=n`.
pub fn tree_reduction(n: usize, delay_ms: f64) -> Result<TaskGraph, WorkloadError> {
    let inputs: Vec<i64> = (1..=n as i64).collect();
    tree_reduction_over(&inputs, delay_ms)
}

/// Tree reduction: `n/2` leaves each add a pair of inline inputs, then every
/// level combines neighbours pairwise until one sink holds the total.
pub fn tree_reduction_over(inputs: &[i64], delay_ms: f64) -> Result<TaskGraph, WorkloadError> {
    let n = inputs.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(WorkloadError::NotPowerOfTwo(n));
    }
    let op = || OpSpec::SleepAdd { delay_ms };
    let mut g = TaskGraph::new();
    for (i, pair) in inputs.chunks(2).enumerate() {
        g.add_task(
            TaskNode::new(tr_id(0, i), op()).with_args(pair.iter().map(|v| Value::Int(*v))),
        )
        .expect("fresh ids");
    }
    let mut width = n / 2;
    let mut level = 0;
    while width > 1 {
        for i in 0..width / 2 {
            g.add_task(
                TaskNode::new(tr_id(level + 1, i), op())
                    .with_deps([tr_id(level, 2 * i), tr_id(level, 2 * i + 1)]),
            )
            .expect("fresh ids");
        }
        width /= 2;
        level += 1;
    }
    Ok(g)
}

/// Blocked `C = A * B` as a task graph.
#[derive(Debug, Clone)]
pub struct GemmWorkload {
    pub graph: TaskGraph,
    pub a: Matrix,
    pub b: Matrix,
    pub n: usize,
    pub block: usize,
}

impl GemmWorkload {
    pub fn blocks_per_side(&self) -> usize {
        self.n / self.block
    }

    /// Id of the sink holding block `(i, j)` of the product.
    pub fn output_id(i: usize, j: usize) -> TaskId {
        TaskId::new(format!("c-{i:03}-{j:03}"))
    }

    /// Reassembles `C` from sink values.
    pub fn assemble(&self, sinks: &BTreeMap<TaskId, Value>) -> Option<Matrix> {
        let nb = self.blocks_per_side();
        let mut c = Matrix::zeros(self.n, self.n);
        for i in 0..nb {
            for j in 0..nb {
                let blk = sinks.get(&Self::output_id(i, j))?.as_matrix()?;
                for r in 0..self.block {
                    for col in 0..self.block {
                        c.set(i * self.block + r, j * self.block + col, blk.get(r, col));
                    }
                }
            }
        }
        Some(c)
    }
}

/// Seeded blocked GEMM with entries uniform in `[-1, 1)`.
pub fn blocked_gemm(n: usize, block: usize, seed: u64) -> Result<GemmWorkload, WorkloadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let b = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    blocked_gemm_with(a, b, block)
}

/// Standard `(i, j, k)` decomposition: every input block is a `const` leaf,
/// each `p-i-j-k` multiplies `A[i,k]` by `B[k,j]`, and `c-i-j` sums the
/// `n/block` partial products. Every input block therefore fans out to
/// `n/block` products and every output block is a fan-in of that degree.
pub fn blocked_gemm_with(a: Matrix, b: Matrix, block: usize) -> Result<GemmWorkload, WorkloadError> {
    let n = a.rows;
    if a.cols != n || b.rows != n || b.cols != n {
        return Err(WorkloadError::BadInputShape { n });
    }
    if block == 0 || n == 0 || !n.is_multiple_of(block) {
        return Err(WorkloadError::IndivisibleBlock { n, block });
    }
    let nb = n / block;
    let a_id = |i: usize, k: usize| TaskId::new(format!("a-{i:03}-{k:03}"));
    let b_id = |k: usize, j: usize| TaskId::new(format!("b-{k:03}-{j:03}"));
    let p_id = |i: usize, j: usize, k: usize| TaskId::new(format!("p-{i:03}-{j:03}-{k:03}"));

    let mut g = TaskGraph::new();
    for i in 0..nb {
        for k in 0..nb {
            let blk = a.block(i * block, k * block, block, block);
            g.add_task(TaskNode::new(a_id(i, k), OpSpec::Const { value: blk.into() }))
                .expect("fresh ids");
            let blk = b.block(i * block, k * block, block, block);
            g.add_task(TaskNode::new(b_id(i, k), OpSpec::Const { value: blk.into() }))
                .expect("fresh ids");
        }
    }
    let mm = OpSpec::MatmulBlock {
        rows: block,
        inner: block,
        cols: block,
    };
    for i in 0..nb {
        for j in 0..nb {
            for k in 0..nb {
                g.add_task(TaskNode::new(p_id(i, j, k), mm.clone()).with_deps([a_id(i, k), b_id(k, j)]))
                    .expect("fresh ids");
            }
            g.add_task(
                TaskNode::new(GemmWorkload::output_id(i, j), OpSpec::Sum)
                    .with_deps((0..nb).map(|k| p_id(i, j, k))),
            )
            .expect("fresh ids");
        }
    }
    Ok(GemmWorkload {
        graph: g,
        a,
        b,
        n,
        block,
    })
}

/// Seven tasks, two leaves: `T1`, `T2 -> T3 -> {T5, T7}`, fan-ins
/// `{T1, T7} -> T4` and `{T4, T5} -> T6`. Every op is `add`; the leaves
/// carry the inline arguments 1 and 2.
pub fn two_leaf_example() -> TaskGraph {
    let add = || OpSpec::Add { addend: 0 };
    let mut g = TaskGraph::new();
    let nodes = [
        TaskNode::new("T1", add()).with_args([Value::Int(1)]),
        TaskNode::new("T2", add()).with_args([Value::Int(2)]),
        TaskNode::new("T3", add()).with_deps(["T2"]),
        TaskNode::new("T5", add()).with_deps(["T3"]),
        TaskNode::new("T7", add()).with_deps(["T3"]),
        TaskNode::new("T4", add()).with_deps(["T1", "T7"]),
        TaskNode::new("T6", add()).with_deps(["T4", "T5"]),
    ];
    for n in nodes {
        g.add_task(n).expect("fresh ids");
    }
    g
}

/// Random acyclic graph of integer `const`/`add`/`sum` tasks.
///
/// Node `i` only depends on nodes `< i`, so ids in creation order are a
/// topological order. Both in- and out-degree stay within `max_degree`.
pub fn random_dag(seed: u64, max_nodes: usize, max_degree: usize) -> TaskGraph {
    let max_nodes = max_nodes.max(1);
    let max_degree = max_degree.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(1..=max_nodes);
    let id = |i: usize| TaskId::new(format!("n{i:04}"));
    let mut out_deg = vec![0usize; count];
    let mut g = TaskGraph::new();
    for i in 0..count {
        let candidates: Vec<usize> = (0..i).filter(|&j| out_deg[j] < max_degree).collect();
        // Roughly a quarter of the later nodes are extra leaves.
        let want = if i == 0 || candidates.is_empty() || rng.random_bool(0.2) {
            0
        } else {
            rng.random_range(1..=max_degree.min(candidates.len()))
        };
        let mut pool = candidates;
        let mut deps = Vec::with_capacity(want);
        for _ in 0..want {
            let pick = pool.swap_remove(rng.random_range(0..pool.len()));
            deps.push(pick);
        }
        deps.sort_unstable();
        for &d in &deps {
            out_deg[d] += 1;
        }
        let node = if deps.is_empty() {
            TaskNode::new(id(i), OpSpec::Const {
                value: Value::Int(rng.random_range(-50..=50)),
            })
        } else {
            let op = if rng.random_bool(0.5) {
                OpSpec::Add {
                    addend: rng.random_range(-5..=5),
                }
            } else {
                OpSpec::Sum
            };
            TaskNode::new(id(i), op).with_deps(deps.into_iter().map(id))
        };
        g.add_task(node).expect("fresh ids");
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::evaluate_sequential;

    #[test]
    fn tr_counts() {
        let g = tree_reduction(1024, 0.0).unwrap();
        assert_eq!(g.len(), 1023);
        assert_eq!(g.leaves().len(), 512);
        assert_eq!(g.sinks().len(), 1);
        let g2 = tree_reduction(2, 0.0).unwrap();
        assert_eq!(g2.len(), 1);
        assert_eq!(tree_reduction(8, 0.0).unwrap().len(), 7);
    }

    #[test]
    fn tr_rejects_non_power_of_two() {
        assert_eq!(tree_reduction(6, 0.0).unwrap_err(), WorkloadError::NotPowerOfTwo(6));
        assert_eq!(tree_reduction(1, 0.0).unwrap_err(), WorkloadError::NotPowerOfTwo(1));
    }

    #[test]
    fn tr_sum_small() {
        let g = tree_reduction(8, 0.0).unwrap();
        let r = evaluate_sequential(&g, &OpRegistry::new()).unwrap();
        assert_eq!(r.sink_values.values().next(), Some(&Value::Int(36)));
        let node = g.node(&g.leaves()[0]).unwrap();
        assert_eq!(node.op, OpSpec::SleepAdd { delay_ms: 0.0 });
    }

    #[test]
    fn tr_internal_nodes_are_binary_fan_ins() {
        let g = tree_reduction(64, 5.0).unwrap();
        for n in g.nodes() {
            assert!(n.deps.is_empty() || n.deps.len() == 2);
            assert!(g.out_degree(&n.id) <= 1);
        }
    }

    #[test]
    fn gemm_identity() {
        let w = blocked_gemm_with(Matrix::identity(4), Matrix::identity(4), 2).unwrap();
        let r = evaluate_sequential(&w.graph, &OpRegistry::new()).unwrap();
        assert_eq!(w.assemble(&r.sink_values).unwrap(), Matrix::identity(4));
    }

    #[test]
    fn gemm_structure() {
        let w = blocked_gemm(64, 4, 1).unwrap();
        let nb = 16;
        assert_eq!(w.graph.leaves().len(), 2 * nb * nb);
        assert_eq!(w.graph.len(), 2 * nb * nb + nb * nb * nb + nb * nb);
        assert_eq!(w.graph.in_degree(&GemmWorkload::output_id(3, 5)), nb);
        assert_eq!(w.graph.out_degree(&TaskId::from("a-000-000")), nb);
        assert_eq!(
            blocked_gemm(10, 3, 0).unwrap_err(),
            WorkloadError::IndivisibleBlock { n: 10, block: 3 }
        );
    }

    #[test]
    fn random_dag_reproducible_and_bounded() {
        assert_eq!(random_dag(42, 64, 4), random_dag(42, 64, 4));
        let single = random_dag(7, 1, 3);
        assert_eq!(single.len(), 1);
        assert!(matches!(single.nodes().next().unwrap().op, OpSpec::Const { .. }));
        for seed in 0..1000 {
            let g = random_dag(seed, 64, 4);
            g.validate().unwrap();
            for n in g.nodes() {
                assert!(n.deps.len() <= 4);
                assert!(g.out_degree(&n.id) <= 4);
            }
        }
    }
}
