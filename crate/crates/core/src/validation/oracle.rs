use std::collections::BTreeSet;

use super::{TopologySnapshot, ValidationError};
use crate::feeder::{LsgGraph, LsgIx, SwitchIx};

pub const ORACLE_MAX_LSGS: usize = 10;
pub const ORACLE_MAX_SWITCHES: usize = 14;

/// One single-step configuration: switch states, energized LSGs and root LSGs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopologyConfig {
    pub closed: Vec<bool>,
    pub energized: Vec<bool>,
    pub roots: Vec<bool>,
}

impl TopologyConfig {
    pub fn from_snapshot(snapshot: &TopologySnapshot, graph: &LsgGraph) -> Self {
        Self {
            closed: (0..graph.num_switches()).map(|n| snapshot.closed_switches.contains(&SwitchIx(n))).collect(),
            energized: (0..graph.num_lsgs).map(|m| snapshot.energized.contains(&LsgIx(m))).collect(),
            roots: (0..graph.num_lsgs).map(|m| snapshot.roots.contains(&LsgIx(m))).collect(),
        }
    }

    /// Switch states, then LSG states, then the root flags of the root candidates only: the order
    /// of `USW.n`, `ULSG.m` and `UR.c` in a status projection.
    pub fn status_bits(&self, graph: &LsgGraph) -> Vec<bool> {
        let roots = graph.root_candidates.iter().map(|m| self.roots[m.0]);
        self.closed.iter().copied().chain(self.energized.iter().copied()).chain(roots).collect()
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    r
}

/// Every valid configuration of `graph`: the closed-switch subgraph on the energized LSGs is a
/// forest, every closed switch joins two energized LSGs, and each energized component holds
/// exactly one root taken from the root candidates.
pub fn brute_force_topology_oracle(graph: &LsgGraph) -> Result<BTreeSet<TopologyConfig>, ValidationError> {
    let (lsgs, switches) = (graph.num_lsgs, graph.num_switches());
    if lsgs > ORACLE_MAX_LSGS || switches > ORACLE_MAX_SWITCHES {
        return Err(ValidationError::TooLarge { lsgs, switches, max_lsgs: ORACLE_MAX_LSGS, max_switches: ORACLE_MAX_SWITCHES });
    }
    let mut out = BTreeSet::new();
    for energized in 0u32..1 << lsgs {
        let on = |m: LsgIx| energized >> m.0 & 1 == 1;
        let inside: Vec<usize> = (0..switches).filter(|&n| on(graph.edges[n].0) && on(graph.edges[n].1)).collect();
        'subsets: for subset in 0u32..1 << inside.len() {
            let mut parent: Vec<usize> = (0..lsgs).collect();
            let mut closed = vec![false; switches];
            for (k, &n) in inside.iter().enumerate() {
                if subset >> k & 1 == 1 {
                    let (a, b) = graph.edges[n];
                    let (ra, rb) = (find(&mut parent, a.0), find(&mut parent, b.0));
                    if ra == rb {
                        continue 'subsets;
                    }
                    parent[ra] = rb;
                    closed[n] = true;
                }
            }
            // choose one root per component among its candidates
            let mut components: Vec<(usize, Vec<usize>)> = Vec::new();
            for m in (0..lsgs).filter(|&m| on(LsgIx(m))) {
                let r = find(&mut parent, m);
                if !components.iter().any(|(c, _)| *c == r) {
                    components.push((r, Vec::new()));
                }
                if graph.is_root_candidate(LsgIx(m)) {
                    components.iter_mut().find(|(c, _)| *c == r).unwrap().1.push(m);
                }
            }
            if components.iter().any(|(_, cands)| cands.is_empty()) {
                continue;
            }
            let mut choice = vec![0usize; components.len()];
            loop {
                let mut roots = vec![false; lsgs];
                for (k, (_, cands)) in components.iter().enumerate() {
                    roots[cands[choice[k]]] = true;
                }
                let energized = (0..lsgs).map(|m| on(LsgIx(m))).collect();
                out.insert(TopologyConfig { closed: closed.clone(), energized, roots });
                // odometer over the per-component choices
                let mut k = 0;
                while k < choice.len() {
                    choice[k] += 1;
                    if choice[k] < components[k].1.len() {
                        break;
                    }
                    choice[k] = 0;
                    k += 1;
                }
                if k == choice.len() {
                    break;
                }
            }
        }
    }
    Ok(out)
}
