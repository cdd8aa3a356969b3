//! Global DAG model, validation and the sequential oracle evaluator.
//!
//! Every iteration order exposed here (leaves, sinks, out-edges, the
//! topological order) is lexicographic by [`TaskId`], so anything derived from
//! a graph is reproducible.

mod dagfile;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workloads::{OpError, OpRegistry, OpSpec, Value};

pub use dagfile::{load_dag, parse_dag, save_dag, to_dag_string, DagFileError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(String);

impl TaskId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TaskId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for TaskId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskNode {
    pub id: TaskId,
    pub op: OpSpec,
    /// Upstream tasks; the order is the argument order of `op`.
    pub deps: Vec<TaskId>,
    /// Literal inputs, only allowed on leaves.
    pub inline_args: Vec<Value>,
}

impl TaskNode {
    pub fn new(id: impl Into<TaskId>, op: OpSpec) -> Self {
        Self {
            id: id.into(),
            op,
            deps: Vec::new(),
            inline_args: Vec::new(),
        }
    }

    pub fn with_deps<I, T>(mut self, deps: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<TaskId>,
    {
        self.deps = deps.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_args(mut self, args: impl IntoIterator<Item = Value>) -> Self {
        self.inline_args = args.into_iter().collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("task `{0}` already exists")]
    DuplicateId(TaskId),
    #[error("task `{0}` lists dependency `{1}` more than once")]
    DuplicateDependency(TaskId, TaskId),
    #[error("task `{task}` depends on unknown task `{dep}`")]
    UnknownDependency { task: TaskId, dep: TaskId },
    #[error("cycle detected through {0:?}")]
    CycleDetected(Vec<TaskId>),
    #[error("task `{0}` has inline arguments but is not a leaf")]
    ArgsOnNonLeaf(TaskId),
    #[error("graph has no tasks")]
    Empty,
    #[error("task `{task}` failed: {source}")]
    OpFailure { task: TaskId, source: OpError },
    #[error("order is not a topological order of the graph: {0}")]
    BadOrder(String),
}

/// The global DAG. Immutable once validated; share it behind an `Arc`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskGraph {
    nodes: BTreeMap<TaskId, TaskNode>,
    // Sorted per source. May reference a source that is not (yet) a node
    // until `validate` rejects it.
    out_edges: BTreeMap<TaskId, Vec<TaskId>>,
}

impl TaskGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a node. Dependencies may be added later; `validate` reports
    /// any that never appear.
    pub fn add_task(&mut self, node: TaskNode) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateId(node.id));
        }
        let mut seen = BTreeSet::new();
        for d in &node.deps {
            if !seen.insert(d) {
                return Err(GraphError::DuplicateDependency(node.id.clone(), d.clone()));
            }
        }
        for d in &node.deps {
            let outs = self.out_edges.entry(d.clone()).or_default();
            let pos = outs.binary_search(&node.id).unwrap_or_else(|p| p);
            outs.insert(pos, node.id.clone());
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Builder-style variant of [`TaskGraph::add_task`].
    pub fn with_task(mut self, node: TaskNode) -> Result<Self, GraphError> {
        self.add_task(node)?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &TaskId) -> Option<&TaskNode> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &TaskId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TaskNode> {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &TaskId> {
        self.nodes.keys()
    }

    pub fn deps(&self, id: &TaskId) -> &[TaskId] {
        self.nodes.get(id).map(|n| n.deps.as_slice()).unwrap_or(&[])
    }

    /// Downstream tasks of `id`, sorted.
    pub fn out_edges(&self, id: &TaskId) -> &[TaskId] {
        self.out_edges.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn in_degree(&self, id: &TaskId) -> usize {
        self.deps(id).len()
    }

    pub fn out_degree(&self, id: &TaskId) -> usize {
        self.out_edges(id).len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.values().map(|n| n.deps.len()).sum()
    }

    /// Referential integrity, leaf-only arguments and acyclicity.
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        for node in self.nodes.values() {
            for d in &node.deps {
                if !self.nodes.contains_key(d) {
                    return Err(GraphError::UnknownDependency {
                        task: node.id.clone(),
                        dep: d.clone(),
                    });
                }
            }
            if !node.deps.is_empty() && !node.inline_args.is_empty() {
                return Err(GraphError::ArgsOnNonLeaf(node.id.clone()));
            }
        }
        if let Some(cycle) = self.find_cycle() {
            return Err(GraphError::CycleDetected(cycle));
        }
        Ok(())
    }

    // Iterative three-colour DFS over out-edges. The reported cycle starts at
    // its smallest id and follows edge direction.
    fn find_cycle(&self) -> Option<Vec<TaskId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut mark: BTreeMap<&TaskId, Mark> =
            self.nodes.keys().map(|k| (k, Mark::White)).collect();
        for root in self.nodes.keys() {
            if mark[root] != Mark::White {
                continue;
            }
            let mut stack: Vec<(&TaskId, usize)> = vec![(root, 0)];
            mark.insert(root, Mark::Grey);
            while let Some((node, next)) = stack.last_mut() {
                let outs = self.out_edges(node);
                if *next < outs.len() {
                    let child = &outs[*next];
                    *next += 1;
                    match mark.get(child).copied() {
                        Some(Mark::White) => {
                            mark.insert(child, Mark::Grey);
                            stack.push((child, 0));
                        }
                        Some(Mark::Grey) => {
                            let start = stack.iter().position(|(n, _)| *n == child).unwrap();
                            let mut cycle: Vec<TaskId> =
                                stack[start..].iter().map(|(n, _)| (*n).clone()).collect();
                            let min = cycle
                                .iter()
                                .enumerate()
                                .min_by(|a, b| a.1.cmp(b.1))
                                .map(|(i, _)| i)
                                .unwrap();
                            cycle.rotate_left(min);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    mark.insert(node, Mark::Black);
                    stack.pop();
                }
            }
        }
        None
    }

    /// Source nodes (in-degree zero), sorted.
    pub fn leaves(&self) -> Vec<TaskId> {
        self.nodes
            .values()
            .filter(|n| n.deps.is_empty())
            .map(|n| n.id.clone())
            .collect()
    }

    /// Nodes without out-edges, sorted.
    pub fn sinks(&self) -> Vec<TaskId> {
        self.nodes
            .keys()
            .filter(|id| self.out_degree(id) == 0)
            .cloned()
            .collect()
    }

    /// Kahn's algorithm with the smallest ready id first.
    pub fn topo_order(&self) -> Result<Vec<TaskId>, GraphError> {
        let mut indeg: BTreeMap<&TaskId, usize> =
            self.nodes.values().map(|n| (&n.id, n.deps.len())).collect();
        let mut ready: BTreeSet<&TaskId> = indeg
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(next) = ready.pop_first() {
            order.push(next.clone());
            for child in self.out_edges(next) {
                if let Some(d) = indeg.get_mut(child) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(child);
                    }
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(GraphError::CycleDetected(self.find_cycle().unwrap_or_default()));
        }
        Ok(order)
    }

    /// Inputs of `id` in argument order: upstream values then inline args.
    pub fn gather_inputs<'a>(
        &self,
        id: &TaskId,
        mut lookup: impl FnMut(&TaskId) -> Option<&'a Value>,
    ) -> Option<Vec<Value>> {
        let node = self.nodes.get(id)?;
        let mut inputs = Vec::with_capacity(node.deps.len() + node.inline_args.len());
        for d in &node.deps {
            inputs.push(lookup(d)?.clone());
        }
        inputs.extend(node.inline_args.iter().cloned());
        Some(inputs)
    }
}

/// Ground-truth values from a sequential evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub values: BTreeMap<TaskId, Value>,
    pub sink_values: BTreeMap<TaskId, Value>,
}

/// Evaluates every task once in the deterministic topological order.
pub fn evaluate_sequential(
    graph: &TaskGraph,
    registry: &OpRegistry,
) -> Result<OracleResult, GraphError> {
    graph.validate()?;
    let order = graph.topo_order()?;
    evaluate_in_order(graph, registry, &order)
}

/// Evaluates in a caller-supplied order, which must be topological.
pub fn evaluate_in_order(
    graph: &TaskGraph,
    registry: &OpRegistry,
    order: &[TaskId],
) -> Result<OracleResult, GraphError> {
    if order.len() != graph.len() {
        return Err(GraphError::BadOrder(format!(
            "{} tasks in order, {} in graph",
            order.len(),
            graph.len()
        )));
    }
    let mut values: BTreeMap<TaskId, Value> = BTreeMap::new();
    for id in order {
        if values.contains_key(id) {
            return Err(GraphError::BadOrder(format!("`{id}` appears twice")));
        }
        let node = graph
            .node(id)
            .ok_or_else(|| GraphError::BadOrder(format!("`{id}` is not in the graph")))?;
        let inputs = graph
            .gather_inputs(id, |d| values.get(d))
            .ok_or_else(|| GraphError::BadOrder(format!("`{id}` evaluated before its inputs")))?;
        let out = node
            .op
            .apply(&inputs, registry)
            .map_err(|source| GraphError::OpFailure {
                task: id.clone(),
                source,
            })?;
        values.insert(id.clone(), out);
    }
    let sink_values = graph
        .sinks()
        .into_iter()
        .map(|s| {
            let v = values[&s].clone();
            (s, v)
        })
        .collect();
    Ok(OracleResult {
        values,
        sink_values,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn add() -> OpSpec {
        OpSpec::Add { addend: 0 }
    }

    pub(crate) use crate::workloads::two_leaf_example;

    #[test]
    fn two_node_chain_out_edges() {
        let mut g = TaskGraph::new();
        g.add_task(TaskNode::new("T1", add())).unwrap();
        g.add_task(TaskNode::new("T4", add()).with_deps(["T1"])).unwrap();
        assert_eq!(g.out_edges(&"T1".into()), &[TaskId::from("T4")]);
        assert_eq!(
            g.add_task(TaskNode::new("T1", add())),
            Err(GraphError::DuplicateId("T1".into()))
        );
    }

    #[test]
    fn duplicate_deps_rejected() {
        let mut g = TaskGraph::new();
        g.add_task(TaskNode::new("a", add())).unwrap();
        assert!(matches!(
            g.add_task(TaskNode::new("b", add()).with_deps(["a", "a"])),
            Err(GraphError::DuplicateDependency(..))
        ));
    }

    #[test]
    fn example_validates_with_two_leaves() {
        let g = two_leaf_example();
        g.validate().unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g.leaves(), vec![TaskId::from("T1"), TaskId::from("T2")]);
        assert_eq!(g.sinks(), vec![TaskId::from("T6")]);
    }

    #[test]
    fn smallest_cycle_is_reported() {
        let mut g = TaskGraph::new();
        g.add_task(TaskNode::new("B", add()).with_deps(["A"])).unwrap();
        g.add_task(TaskNode::new("A", add()).with_deps(["B"])).unwrap();
        assert_eq!(
            g.validate(),
            Err(GraphError::CycleDetected(vec!["A".into(), "B".into()]))
        );
    }

    #[test]
    fn unknown_dependency() {
        let mut g = TaskGraph::new();
        g.add_task(TaskNode::new("x", add()).with_deps(["missing"])).unwrap();
        assert_eq!(
            g.validate(),
            Err(GraphError::UnknownDependency {
                task: "x".into(),
                dep: "missing".into()
            })
        );
    }

    #[test]
    fn deferred_insertion_order_is_fine() {
        let mut g = TaskGraph::new();
        g.add_task(TaskNode::new("c", add()).with_deps(["a", "b"])).unwrap();
        g.add_task(TaskNode::new("a", add()).with_args([Value::Int(1)])).unwrap();
        g.add_task(TaskNode::new("b", add()).with_args([Value::Int(2)])).unwrap();
        g.validate().unwrap();
        let r = evaluate_sequential(&g, &OpRegistry::new()).unwrap();
        assert_eq!(r.sink_values[&TaskId::from("c")], Value::Int(3));
    }

    #[test]
    fn args_only_on_leaves() {
        let mut g = TaskGraph::new();
        g.add_task(TaskNode::new("a", add())).unwrap();
        g.add_task(TaskNode::new("b", add()).with_deps(["a"]).with_args([Value::Int(1)]))
            .unwrap();
        assert_eq!(g.validate(), Err(GraphError::ArgsOnNonLeaf("b".into())));
    }

    #[test]
    fn single_node_graph() {
        let g = TaskGraph::new()
            .with_task(TaskNode::new("only", OpSpec::Const { value: Value::Int(9) }))
            .unwrap();
        assert_eq!(g.leaves(), vec![TaskId::from("only")]);
        let r = evaluate_sequential(&g, &OpRegistry::new()).unwrap();
        assert_eq!(r.sink_values.len(), 1);
    }

    #[test]
    fn const_then_identity_add() {
        let g = TaskGraph::new()
            .with_task(TaskNode::new("c", OpSpec::Const { value: Value::Int(5) }))
            .unwrap()
            .with_task(TaskNode::new("d", add()).with_deps(["c"]))
            .unwrap();
        let r = evaluate_sequential(&g, &OpRegistry::new()).unwrap();
        assert_eq!(r.sink_values[&TaskId::from("d")], Value::Int(5));
        assert_eq!(r.values.len(), 2);
    }

    #[test]
    fn op_failure_propagates() {
        let g = TaskGraph::new()
            .with_task(TaskNode::new("bad", OpSpec::Custom { name: "nope".into() }))
            .unwrap();
        assert!(matches!(
            evaluate_sequential(&g, &OpRegistry::new()),
            Err(GraphError::OpFailure { .. })
        ));
    }

    #[test]
    fn evaluate_in_order_rejects_non_topological() {
        let g = two_leaf_example();
        let mut order = g.topo_order().unwrap();
        order.reverse();
        assert!(matches!(
            evaluate_in_order(&g, &OpRegistry::new(), &order),
            Err(GraphError::BadOrder(_))
        ));
    }
}
