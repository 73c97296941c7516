use std::collections::BTreeSet;

use super::{LsgIx, SwitchIx};

/// Undirected multigraph over LSGs. Edge `n` is switch `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LsgGraph {
    pub num_lsgs: usize,
    pub edges: Vec<(LsgIx, LsgIx)>,
    /// `adjacency[m]` lists `(neighbour, switch)` pairs incident to LSG `m`.
    pub adjacency: Vec<Vec<(LsgIx, SwitchIx)>>,
    pub root_candidates: Vec<LsgIx>,
}

impl LsgGraph {
    pub fn new(
        num_lsgs: usize,
        edges: impl IntoIterator<Item = (LsgIx, LsgIx)>,
        root_candidates: impl IntoIterator<Item = LsgIx>,
    ) -> Self {
        let edges: Vec<_> = edges.into_iter().collect();
        let mut adjacency = vec![Vec::new(); num_lsgs];
        for (n, &(a, b)) in edges.iter().enumerate() {
            adjacency[a.0].push((b, SwitchIx(n)));
            adjacency[b.0].push((a, SwitchIx(n)));
        }
        let mut root_candidates: Vec<_> = root_candidates.into_iter().collect();
        root_candidates.sort();
        root_candidates.dedup();
        Self { num_lsgs, edges, adjacency, root_candidates }
    }

    pub fn num_switches(&self) -> usize {
        self.edges.len()
    }

    pub fn is_root_candidate(&self, m: LsgIx) -> bool {
        self.root_candidates.binary_search(&m).is_ok()
    }

    /// Distinct neighbouring LSGs of `m` (the set `A_m`).
    pub fn neighbours(&self, m: LsgIx) -> BTreeSet<LsgIx> {
        self.adjacency[m.0].iter().map(|&(x, _)| x).collect()
    }
}

/// All simple cycles of an [`LsgGraph`], each given as its sorted switch set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoopSet {
    pub loops: Vec<Vec<SwitchIx>>,
}

impl LoopSet {
    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }
}

/// Enumerate every simple cycle of the LSG multigraph.
///
/// Each cycle is rooted at its smallest LSG and grown by DFS through larger LSGs only; both
/// traversal directions of a cycle reach the same switch set, which is deduplicated. Parallel
/// switches yield two-edge cycles. Output is sorted by size, then lexicographically.
pub fn enumerate_loops(graph: &LsgGraph) -> LoopSet {
    let mut found: BTreeSet<Vec<SwitchIx>> = BTreeSet::new();
    let mut on_path = vec![false; graph.num_lsgs];
    let mut path_edges: Vec<SwitchIx> = Vec::new();

    fn dfs(
        graph: &LsgGraph,
        start: usize,
        current: usize,
        on_path: &mut [bool],
        path_edges: &mut Vec<SwitchIx>,
        found: &mut BTreeSet<Vec<SwitchIx>>,
    ) {
        for &(next, edge) in &graph.adjacency[current] {
            if path_edges.contains(&edge) {
                continue;
            }
            if next.0 == start {
                let mut cycle = path_edges.clone();
                cycle.push(edge);
                cycle.sort();
                found.insert(cycle);
            } else if next.0 > start && !on_path[next.0] {
                on_path[next.0] = true;
                path_edges.push(edge);
                dfs(graph, start, next.0, on_path, path_edges, found);
                path_edges.pop();
                on_path[next.0] = false;
            }
        }
    }

    for start in 0..graph.num_lsgs {
        on_path[start] = true;
        dfs(graph, start, start, &mut on_path, &mut path_edges, &mut found);
        on_path[start] = false;
    }

    let mut loops: Vec<_> = found.into_iter().collect();
    loops.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    LoopSet { loops }
}
