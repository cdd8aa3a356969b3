//! Static schedule generation.
//!
//! One schedule per leaf: every task reachable from the leaf, the edges into
//! and out of those tasks, and the fan-in / fan-out operations that separate
//! consecutive task executions. Schedules overlap wherever paths from
//! different leaves meet; executors resolve the overlap at run time through
//! fan-in dependency records.

mod launch;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{TaskGraph, TaskId};
use crate::hash::fnv1a64;

pub use launch::{launch, LaunchError, RunError, RunHandle};

/// Identifies a fan-out by its DAG position (source and sorted targets).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FanOutId(String);

/// Identifies a fan-in by its DAG position (target and sorted sources).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FanInId(String);

fn position_hash(anchor: &TaskId, others: &[TaskId]) -> u64 {
    let mut sorted: Vec<&TaskId> = others.iter().collect();
    sorted.sort();
    let mut buf = Vec::new();
    buf.extend_from_slice(anchor.as_str().as_bytes());
    for t in sorted {
        buf.push(0);
        buf.extend_from_slice(t.as_str().as_bytes());
    }
    fnv1a64(&buf)
}

impl FanOutId {
    pub fn for_position(source: &TaskId, targets: &[TaskId]) -> Self {
        Self(format!("fo-{:016x}", position_hash(source, targets)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FanInId {
    pub fn for_position(target: &TaskId, sources: &[TaskId]) -> Self {
        Self(format!("fi-{:016x}", position_hash(target, sources)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FanOutId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for FanInId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanOutInfo {
    pub source: TaskId,
    pub targets: Vec<TaskId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanInInfo {
    pub target: TaskId,
    pub sources: Vec<TaskId>,
}

impl FanInInfo {
    pub fn in_degree(&self) -> usize {
        self.sources.len()
    }
}

/// Every coordination position of a graph, keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "CoordinationRepr", into = "CoordinationRepr")]
pub struct CoordinationIds {
    pub fanins: BTreeMap<FanInId, FanInInfo>,
    pub fanouts: BTreeMap<FanOutId, FanOutInfo>,
    fanin_by_target: BTreeMap<TaskId, FanInId>,
    fanout_by_source: BTreeMap<TaskId, FanOutId>,
}

#[derive(Serialize, Deserialize)]
struct CoordinationRepr {
    fanins: BTreeMap<FanInId, FanInInfo>,
    fanouts: BTreeMap<FanOutId, FanOutInfo>,
}

impl From<CoordinationRepr> for CoordinationIds {
    fn from(r: CoordinationRepr) -> Self {
        let fanin_by_target = r
            .fanins
            .iter()
            .map(|(id, info)| (info.target.clone(), id.clone()))
            .collect();
        let fanout_by_source = r
            .fanouts
            .iter()
            .map(|(id, info)| (info.source.clone(), id.clone()))
            .collect();
        Self {
            fanins: r.fanins,
            fanouts: r.fanouts,
            fanin_by_target,
            fanout_by_source,
        }
    }
}

impl From<CoordinationIds> for CoordinationRepr {
    fn from(c: CoordinationIds) -> Self {
        Self {
            fanins: c.fanins,
            fanouts: c.fanouts,
        }
    }
}

impl CoordinationIds {
    pub fn fanin_for_target(&self, target: &TaskId) -> Option<&FanInId> {
        self.fanin_by_target.get(target)
    }

    pub fn fanout_for_source(&self, source: &TaskId) -> Option<&FanOutId> {
        self.fanout_by_source.get(source)
    }
}

/// True when `a -> b` needs a degree-1 fan-out to separate the two tasks.
fn needs_trivial_fanout(graph: &TaskGraph, a: &TaskId, b: &TaskId) -> bool {
    graph.out_degree(a) == 1 && graph.in_degree(b) == 1 && graph.out_edges(a)[0] == *b
}

/// Content-derived ids for every fan-in (in-degree >= 2), every real fan-out
/// (out-degree >= 2) and every trivial fan-out of the graph.
pub fn assign_coordination_ids(graph: &TaskGraph) -> CoordinationIds {
    let mut fanins = BTreeMap::new();
    let mut fanouts = BTreeMap::new();
    for node in graph.nodes() {
        if node.deps.len() >= 2 {
            let mut sources = node.deps.clone();
            sources.sort();
            let id = FanInId::for_position(&node.id, &sources);
            let prev = fanins.insert(
                id,
                FanInInfo {
                    target: node.id.clone(),
                    sources,
                },
            );
            assert!(prev.is_none(), "fan-in id collision at `{}`", node.id);
        }
        let outs = graph.out_edges(&node.id);
        let is_fanout = outs.len() >= 2
            || (outs.len() == 1 && needs_trivial_fanout(graph, &node.id, &outs[0]));
        if is_fanout {
            let id = FanOutId::for_position(&node.id, outs);
            let prev = fanouts.insert(
                id,
                FanOutInfo {
                    source: node.id.clone(),
                    targets: outs.to_vec(),
                },
            );
            assert!(prev.is_none(), "fan-out id collision at `{}`", node.id);
        }
    }
    CoordinationRepr { fanins, fanouts }.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleOp {
    TaskExec {
        task: TaskId,
    },
    FanOut {
        id: FanOutId,
        source: TaskId,
        out_targets: Vec<TaskId>,
    },
    /// `in_sources` lists every in-edge, including ones whose source lies
    /// outside this schedule; `in_degree` is the global in-degree.
    FanIn {
        id: FanInId,
        in_sources: Vec<TaskId>,
        in_degree: usize,
        out_target: TaskId,
    },
}

impl ScheduleOp {
    fn anchor(&self) -> &TaskId {
        match self {
            ScheduleOp::TaskExec { task } => task,
            ScheduleOp::FanOut { source, .. } => source,
            ScheduleOp::FanIn { out_target, .. } => out_target,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            ScheduleOp::FanIn { .. } => 0,
            ScheduleOp::TaskExec { .. } => 1,
            ScheduleOp::FanOut { .. } => 2,
        }
    }

    pub fn is_coordination(&self) -> bool {
        !matches!(self, ScheduleOp::TaskExec { .. })
    }

    pub fn out_degree(&self) -> Option<usize> {
        match self {
            ScheduleOp::FanOut { out_targets, .. } => Some(out_targets.len()),
            _ => None,
        }
    }
}

/// Sub-graph of schedule operations rooted at one leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct StaticSchedule {
    pub leaf: TaskId,
    /// In a bottom-up (topological) order.
    pub ops: Vec<ScheduleOp>,
    /// `(from, to)` indices into `ops`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub entry: usize,
    exec_index: BTreeMap<TaskId, usize>,
    fanout_index: BTreeMap<TaskId, usize>,
    fanin_index: BTreeMap<TaskId, usize>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    leaf: TaskId,
    ops: Vec<ScheduleOp>,
    edges: Vec<(usize, usize)>,
    entry: usize,
}

impl From<ScheduleRepr> for StaticSchedule {
    fn from(r: ScheduleRepr) -> Self {
        let mut s = StaticSchedule {
            leaf: r.leaf,
            ops: r.ops,
            edges: r.edges,
            entry: r.entry,
            exec_index: BTreeMap::new(),
            fanout_index: BTreeMap::new(),
            fanin_index: BTreeMap::new(),
        };
        s.reindex();
        s
    }
}

impl From<StaticSchedule> for ScheduleRepr {
    fn from(s: StaticSchedule) -> Self {
        Self {
            leaf: s.leaf,
            ops: s.ops,
            edges: s.edges,
            entry: s.entry,
        }
    }
}

impl StaticSchedule {
    fn from_ops(leaf: TaskId, ops: Vec<ScheduleOp>, edges: Vec<(usize, usize)>) -> Self {
        let mut s = StaticSchedule {
            leaf,
            ops,
            edges,
            entry: 0,
            exec_index: BTreeMap::new(),
            fanout_index: BTreeMap::new(),
            fanin_index: BTreeMap::new(),
        };
        s.canonicalize();
        s
    }

    fn reindex(&mut self) {
        self.exec_index.clear();
        self.fanout_index.clear();
        self.fanin_index.clear();
        for (i, op) in self.ops.iter().enumerate() {
            let map = match op {
                ScheduleOp::TaskExec { .. } => &mut self.exec_index,
                ScheduleOp::FanOut { .. } => &mut self.fanout_index,
                ScheduleOp::FanIn { .. } => &mut self.fanin_index,
            };
            map.insert(op.anchor().clone(), i);
        }
        self.entry = self.exec_index.get(&self.leaf).copied().unwrap_or(0);
    }

    // Reorders ops topologically (ties broken by anchor task then kind) and
    // remaps edges, so equal schedules have equal representations.
    fn canonicalize(&mut self) {
        let n = self.ops.len();
        let mut indeg = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            succ[a].push(b);
            indeg[b] += 1;
        }
        let key = |i: usize| (self.ops[i].anchor().clone(), self.ops[i].rank(), i);
        let mut ready: BTreeSet<(TaskId, u8, usize)> =
            (0..n).filter(|&i| indeg[i] == 0).map(key).collect();
        let mut order = Vec::with_capacity(n);
        while let Some((_, _, i)) = ready.pop_first() {
            order.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(key(j));
                }
            }
        }
        assert_eq!(order.len(), n, "schedule op graph must be acyclic");
        let mut new_pos = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            new_pos[old] = new;
        }
        let mut ops: Vec<Option<ScheduleOp>> = std::mem::take(&mut self.ops).into_iter().map(Some).collect();
        self.ops = order.iter().map(|&old| ops[old].take().unwrap()).collect();
        let mut edges: Vec<(usize, usize)> =
            self.edges.iter().map(|&(a, b)| (new_pos[a], new_pos[b])).collect();
        edges.sort_unstable();
        edges.dedup();
        self.edges = edges;
        self.reindex();
    }

    pub fn contains_task(&self, task: &TaskId) -> bool {
        self.exec_index.contains_key(task)
    }

    /// Tasks in schedule order.
    pub fn tasks(&self) -> impl Iterator<Item = &TaskId> {
        self.ops.iter().filter_map(|op| match op {
            ScheduleOp::TaskExec { task } => Some(task),
            _ => None,
        })
    }

    /// The fan-out (real or trivial) directly after `task`, if any.
    pub fn fanout_after(&self, task: &TaskId) -> Option<&ScheduleOp> {
        self.fanout_index.get(task).map(|&i| &self.ops[i])
    }

    /// The fan-in directly before `task`, if any.
    pub fn fanin_before(&self, task: &TaskId) -> Option<&ScheduleOp> {
        self.fanin_index.get(task).map(|&i| &self.ops[i])
    }

    pub fn successors(&self, op: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.edges.partition_point(|&(a, _)| a < op);
        self.edges[start..]
            .iter()
            .take_while(move |&&(a, _)| a == op)
            .map(|&(_, b)| b)
    }
}

/// Adds a degree-1 fan-out wherever one task op feeds another directly.
/// Applying it twice changes nothing.
pub fn insert_trivial_fanouts(mut schedule: StaticSchedule) -> StaticSchedule {
    let direct: Vec<(usize, usize)> = schedule
        .edges
        .iter()
        .copied()
        .filter(|&(a, b)| {
            matches!(schedule.ops[a], ScheduleOp::TaskExec { .. })
                && matches!(schedule.ops[b], ScheduleOp::TaskExec { .. })
        })
        .collect();
    if direct.is_empty() {
        return schedule;
    }
    let mut edges: Vec<(usize, usize)> = schedule
        .edges
        .iter()
        .copied()
        .filter(|e| !direct.contains(e))
        .collect();
    for (a, b) in direct {
        let source = schedule.ops[a].anchor().clone();
        let target = schedule.ops[b].anchor().clone();
        let targets = vec![target];
        schedule.ops.push(ScheduleOp::FanOut {
            id: FanOutId::for_position(&source, &targets),
            source,
            out_targets: targets,
        });
        let f = schedule.ops.len() - 1;
        edges.push((a, f));
        edges.push((f, b));
    }
    schedule.edges = edges;
    schedule.canonicalize();
    schedule
}

/// Tasks reachable from `leaf` by depth-first search over out-edges,
/// visiting children in id order.
pub fn reachable_from(graph: &TaskGraph, leaf: &TaskId) -> BTreeSet<TaskId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![leaf.clone()];
    while let Some(t) = stack.pop() {
        if !seen.insert(t.clone()) {
            continue;
        }
        for child in graph.out_edges(&t).iter().rev() {
            if !seen.contains(child) {
                stack.push(child.clone());
            }
        }
    }
    seen
}

fn raw_schedule(graph: &TaskGraph, ids: &CoordinationIds, leaf: &TaskId) -> StaticSchedule {
    let reach = reachable_from(graph, leaf);
    let mut ops = Vec::new();
    let mut exec = BTreeMap::new();
    let mut fanin = BTreeMap::new();
    let mut fanout = BTreeMap::new();
    for t in &reach {
        exec.insert(t.clone(), ops.len());
        ops.push(ScheduleOp::TaskExec { task: t.clone() });
        if let Some(id) = ids.fanin_for_target(t) {
            let info = &ids.fanins[id];
            fanin.insert(t.clone(), ops.len());
            ops.push(ScheduleOp::FanIn {
                id: id.clone(),
                in_sources: info.sources.clone(),
                in_degree: info.in_degree(),
                out_target: t.clone(),
            });
        }
        let outs = graph.out_edges(t);
        if outs.len() >= 2 {
            let id = ids.fanout_for_source(t).expect("fan-out position has an id");
            fanout.insert(t.clone(), ops.len());
            ops.push(ScheduleOp::FanOut {
                id: id.clone(),
                source: t.clone(),
                out_targets: outs.to_vec(),
            });
        }
    }
    let mut edges = Vec::new();
    for t in &reach {
        if let Some(&fi) = fanin.get(t) {
            edges.push((fi, exec[t]));
        }
        let from = fanout.get(t).copied().unwrap_or(exec[t]);
        if from != exec[t] {
            edges.push((exec[t], from));
        }
        for target in graph.out_edges(t) {
            let to = fanin.get(target).copied().unwrap_or(exec[target]);
            edges.push((from, to));
        }
    }
    StaticSchedule::from_ops(leaf.clone(), ops, edges)
}

/// One static schedule per leaf, plus the global coordination table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSet {
    pub schedules: Vec<StaticSchedule>,
    pub coordination: CoordinationIds,
}

impl ScheduleSet {
    pub fn schedule(&self, leaf: &TaskId) -> Option<&StaticSchedule> {
        self.schedules
            .binary_search_by(|s| s.leaf.cmp(leaf))
            .ok()
            .map(|i| &self.schedules[i])
    }

    pub fn fanin_degrees(&self) -> BTreeMap<FanInId, usize> {
        self.coordination
            .fanins
            .iter()
            .map(|(id, info)| (id.clone(), info.in_degree()))
            .collect()
    }

    pub fn fanin(&self, id: &FanInId) -> Option<&FanInInfo> {
        self.coordination.fanins.get(id)
    }

    pub fn fanout(&self, id: &FanOutId) -> Option<&FanOutInfo> {
        self.coordination.fanouts.get(id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule set serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Builds the schedule set of a validated graph. Pure: equal graphs give
/// byte-identical serialized output.
pub fn generate_schedules(graph: &TaskGraph) -> ScheduleSet {
    let coordination = assign_coordination_ids(graph);
    let schedules = graph
        .leaves()
        .iter()
        .map(|leaf| insert_trivial_fanouts(raw_schedule(graph, &coordination, leaf)))
        .collect();
    ScheduleSet {
        schedules,
        coordination,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use super::*;
    use crate::graph::TaskNode;
    use crate::workloads::{random_dag, tree_reduction, two_leaf_example, OpSpec};

    fn chain(ids: &[&str]) -> TaskGraph {
        let mut g = TaskGraph::new();
        for (i, id) in ids.iter().enumerate() {
            let node = TaskNode::new(*id, OpSpec::Add { addend: 1 });
            let node = if i == 0 { node } else { node.with_deps([ids[i - 1]]) };
            g.add_task(node).unwrap();
        }
        g
    }

    // Independent reachability oracle (breadth-first over deps reversed).
    fn bfs_reach(g: &TaskGraph, leaf: &TaskId) -> BTreeSet<TaskId> {
        let mut seen = BTreeSet::from([leaf.clone()]);
        let mut q = VecDeque::from([leaf.clone()]);
        while let Some(t) = q.pop_front() {
            for n in g.nodes() {
                if n.deps.contains(&t) && seen.insert(n.id.clone()) {
                    q.push_back(n.id.clone());
                }
            }
        }
        seen
    }

    fn trivial_fanouts(s: &StaticSchedule) -> usize {
        s.ops
            .iter()
            .filter(|op| op.out_degree() == Some(1))
            .count()
    }

    #[test]
    fn example_has_overlapping_schedules() {
        let g = two_leaf_example();
        let set = generate_schedules(&g);
        assert_eq!(set.schedules.len(), 2);
        for s in &set.schedules {
            assert!(s.contains_task(&"T4".into()));
            assert!(s.contains_task(&"T6".into()));
        }
        let s1 = set.schedule(&"T1".into()).unwrap();
        assert_eq!(s1.tasks().count(), 3);
        // T2 -> T3 gets a trivial fan-out.
        let s2 = set.schedule(&"T2".into()).unwrap();
        match s2.fanout_after(&"T2".into()) {
            Some(ScheduleOp::FanOut { out_targets, .. }) => assert_eq!(out_targets, &[TaskId::from("T3")]),
            other => panic!("expected trivial fan-out, got {other:?}"),
        }
        match s2.fanout_after(&"T3".into()) {
            Some(ScheduleOp::FanOut { out_targets, .. }) => assert_eq!(out_targets.len(), 2),
            other => panic!("expected fan-out, got {other:?}"),
        }
    }

    #[test]
    fn fanin_ids_shared_across_schedules() {
        let set = generate_schedules(&two_leaf_example());
        let id_in = |s: &StaticSchedule| match s.fanin_before(&"T4".into()) {
            Some(ScheduleOp::FanIn { id, in_degree, .. }) => (id.clone(), *in_degree),
            other => panic!("{other:?}"),
        };
        assert_eq!(id_in(&set.schedules[0]), id_in(&set.schedules[1]));
        assert_eq!(id_in(&set.schedules[0]).1, 2);
    }

    #[test]
    fn chain_has_one_schedule_with_trivial_fanouts() {
        let g = chain(&["A", "B", "C"]);
        let set = generate_schedules(&g);
        assert_eq!(set.schedules.len(), 1);
        let s = &set.schedules[0];
        assert_eq!(s.tasks().count(), 3);
        assert_eq!(trivial_fanouts(s), 2);
        let two = generate_schedules(&chain(&["A", "B"]));
        assert_eq!(trivial_fanouts(&two.schedules[0]), 1);
    }

    #[test]
    fn trivial_insertion_is_idempotent() {
        let set = generate_schedules(&two_leaf_example());
        for s in set.schedules {
            assert_eq!(insert_trivial_fanouts(s.clone()), s);
        }
    }

    #[test]
    fn tr8_root_in_every_schedule() {
        let g = tree_reduction(8, 0.0).unwrap();
        let set = generate_schedules(&g);
        assert_eq!(set.schedules.len(), 4);
        let root = &g.sinks()[0];
        assert!(set.schedules.iter().all(|s| s.contains_task(root)));
    }

    #[test]
    fn ids_distinguish_positions_and_are_stable() {
        let a = FanOutId::for_position(&"s".into(), &["x".into(), "y".into()]);
        let b = FanOutId::for_position(&"s".into(), &["x".into(), "z".into()]);
        assert_ne!(a, b);
        assert_eq!(a, FanOutId::for_position(&"s".into(), &["y".into(), "x".into()]));
        let g = two_leaf_example();
        assert_eq!(assign_coordination_ids(&g), assign_coordination_ids(&g));
    }

    #[test]
    fn serialized_form_round_trips_and_is_deterministic() {
        let g = random_dag(3, 40, 3);
        let a = generate_schedules(&g).to_json();
        let b = generate_schedules(&g).to_json();
        assert_eq!(a, b);
        let back = ScheduleSet::from_json(&a).unwrap();
        assert_eq!(back, generate_schedules(&g));
        assert_eq!(back.to_json(), a);
    }

    fn check_invariants(g: &TaskGraph) {
        let set = generate_schedules(g);
        assert_eq!(set.schedules.len(), g.leaves().len());
        let mut union = BTreeSet::new();
        for s in &set.schedules {
            let tasks: BTreeSet<TaskId> = s.tasks().cloned().collect();
            assert_eq!(tasks, bfs_reach(g, &s.leaf), "leaf {}", s.leaf);
            union.extend(tasks);
            assert!(matches!(&s.ops[s.entry], ScheduleOp::TaskExec { task } if *task == s.leaf));
            // Each task-to-task path crosses at most one fan-out and at most
            // one fan-in, and at least one of the two.
            for (i, op) in s.ops.iter().enumerate() {
                let ScheduleOp::TaskExec { task } = op else { continue };
                for target in g.out_edges(task) {
                    let mut path = Vec::new();
                    let mut cur = i;
                    loop {
                        let next = s
                            .successors(cur)
                            .find(|&j| match &s.ops[j] {
                                ScheduleOp::TaskExec { task } => task == target,
                                ScheduleOp::FanIn { out_target, .. } => out_target == target,
                                ScheduleOp::FanOut { .. } => true,
                            })
                            .expect("edge present in schedule");
                        if matches!(s.ops[next], ScheduleOp::TaskExec { .. }) {
                            break;
                        }
                        path.push(s.ops[next].rank());
                        cur = next;
                    }
                    assert!(path == vec![2] || path == vec![0] || path == vec![2, 0], "{path:?}");
                }
            }
            for op in &s.ops {
                if let ScheduleOp::FanIn { in_degree, out_target, in_sources, .. } = op {
                    assert_eq!(*in_degree, g.in_degree(out_target));
                    assert_eq!(in_sources.len(), *in_degree);
                    assert!(*in_degree >= 2);
                }
            }
        }
        assert_eq!(union.len(), g.len());
        for (id, deg) in set.fanin_degrees() {
            assert_eq!(deg, g.in_degree(&set.fanin(&id).unwrap().target));
        }
    }

    #[test]
    fn invariants_on_examples() {
        check_invariants(&two_leaf_example());
        check_invariants(&tree_reduction(64, 0.0).unwrap());
        check_invariants(&chain(&["a", "b", "c", "d"]));
    }

    proptest::proptest! {
        #[test]
        fn invariants_on_random_dags(seed in 0u64..10_000, nodes in 1usize..48, deg in 1usize..5) {
            check_invariants(&random_dag(seed, nodes, deg));
        }
    }
}
