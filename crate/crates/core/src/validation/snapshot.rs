use std::collections::{BTreeMap, BTreeSet};

use super::{Report, ValidationError};
use crate::feeder::{FeederModel, LsgGraph, LsgIx, SwitchIx};
use crate::formulation::{Symbol, VarKey};
use crate::milp::{Solution, BINARY_TOLERANCE};

/// Energized LSGs, closed switches, roots and β-derived parents at one step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopologySnapshot {
    pub t: usize,
    pub closed_switches: BTreeSet<SwitchIx>,
    pub energized: BTreeSet<LsgIx>,
    pub roots: BTreeSet<LsgIx>,
    /// Parent LSG and the switch leading to it, for every LSG with an incoming β.
    pub parents: BTreeMap<LsgIx, (LsgIx, SwitchIx)>,
}

impl TopologySnapshot {
    /// Sorted closed-switch and root ordinals, e.g. `S{2,5} R{1}`.
    pub fn canonical(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.closed_switches.iter().map(|s| s.ordinal()).collect(),
            self.roots.iter().map(|m| m.ordinal()).collect(),
        )
    }
}

fn binary(solution: &Solution, key: VarKey) -> Result<bool, ValidationError> {
    let name = key.name();
    let value = solution.value(&name).ok_or_else(|| ValidationError::MissingValue(name.clone()))?;
    let rounded = value.round();
    if (value - rounded).abs() > BINARY_TOLERANCE || !(rounded == 0.0 || rounded == 1.0) {
        return Err(ValidationError::NonIntegral { name, value });
    }
    Ok(rounded == 1.0)
}

/// One snapshot per step, with cross-field consistency enforced.
pub fn extract_snapshots(solution: &Solution, feeder: &FeederModel, steps: usize) -> Result<Vec<TopologySnapshot>, ValidationError> {
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        let bad = |message: String| ValidationError::Inconsistent { t, message };
        let mut snap = TopologySnapshot { t, ..TopologySnapshot::default() };
        for m in 0..feeder.lsgs.len() {
            if binary(solution, VarKey::ulsg(LsgIx(m), t))? {
                snap.energized.insert(LsgIx(m));
            }
        }
        for &m in feeder.root_candidates() {
            if binary(solution, VarKey::ur(m, t))? {
                if !snap.energized.contains(&m) {
                    return Err(bad(format!("LSG {} is a root but not energized", feeder.lsg(m).id)));
                }
                snap.roots.insert(m);
            }
        }
        for (n, sw) in feeder.switches.iter().enumerate() {
            let closed = binary(solution, VarKey::usw(SwitchIx(n), t))?;
            let fwd = binary(solution, VarKey::new(Symbol::BetaFwd, n, t))?;
            let bwd = binary(solution, VarKey::new(Symbol::BetaBwd, n, t))?;
            if !closed {
                if fwd || bwd {
                    return Err(bad(format!("open switch {} carries a direction", sw.id)));
                }
                continue;
            }
            if !(snap.energized.contains(&sw.from_lsg) && snap.energized.contains(&sw.to_lsg)) {
                return Err(bad(format!("switch {} is closed with a de-energized end", sw.id)));
            }
            let (parent, child) = match (fwd, bwd) {
                (true, false) => (sw.from_lsg, sw.to_lsg),
                (false, true) => (sw.to_lsg, sw.from_lsg),
                _ => return Err(bad(format!("closed switch {} needs exactly one direction", sw.id))),
            };
            snap.closed_switches.insert(SwitchIx(n));
            if snap.parents.insert(child, (parent, SwitchIx(n))).is_some() {
                return Err(bad(format!("LSG {} has more than one parent", feeder.lsg(child).id)));
            }
        }
        out.push(snap);
    }
    Ok(out)
}

struct Components(Vec<usize>);

impl Components {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let root = self.find(self.0[x]);
            self.0[x] = root;
        }
        self.0[x]
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
        ra != rb
    }
}

/// Forest, one root per energized component, the switch/root/served count identity, and a β
/// orientation forming an arborescence out of each root.
pub fn check_radiality(snapshot: &TopologySnapshot, graph: &LsgGraph) -> Report {
    let mut report = Report::default();
    let t = Some(snapshot.t);
    let on = |m: LsgIx| snapshot.energized.contains(&m);

    for &m in &snapshot.roots {
        report.check(graph.is_root_candidate(m), "root-not-candidate", t, format!("LSG{}", m.ordinal()), || {
            "root is not a grid-forming LSG".to_string()
        });
        report.check(on(m), "root-off", t, format!("LSG{}", m.ordinal()), || "root is not energized".to_string());
    }

    let mut comps = Components((0..graph.num_lsgs).collect());
    for &n in &snapshot.closed_switches {
        let (a, b) = graph.edges[n.0];
        let subject = format!("SW{}", n.ordinal());
        report.check(on(a) && on(b), "dead-switch", t, subject.clone(), || {
            "closed switch touches a de-energized LSG".to_string()
        });
        let joined = comps.union(a.0, b.0);
        report.check(joined, "cycle", t, subject, || "cycle detected".to_string());
    }

    let mut members: BTreeMap<usize, Vec<LsgIx>> = BTreeMap::new();
    for &m in &snapshot.energized {
        members.entry(comps.find(m.0)).or_default().push(m);
    }
    for lsgs in members.values() {
        let roots = lsgs.iter().filter(|m| snapshot.roots.contains(m)).count();
        let subject = lsgs.iter().map(|m| format!("LSG{}", m.ordinal())).collect::<Vec<_>>().join(",");
        report.check(roots > 0, "orphan", t, subject.clone(), || "orphan component".to_string());
        report.check(roots <= 1, "multiple-roots", t, subject, || format!("component has {roots} roots"));
    }

    let (closed, roots, served) = (snapshot.closed_switches.len(), snapshot.roots.len(), snapshot.energized.len());
    report.check(closed + roots == served, "count-identity", t, "topology", || {
        format!("{closed} closed switches + {roots} roots != {served} served LSGs")
    });

    for &m in &snapshot.energized {
        let subject = format!("LSG{}", m.ordinal());
        match (snapshot.roots.contains(&m), snapshot.parents.get(&m)) {
            (true, Some(_)) => report.check(false, "parent", t, subject, || "root has a parent".to_string()),
            (false, None) => report.check(false, "parent", t, subject, || "non-root LSG has no parent".to_string()),
            (true, None) => report.check(true, "parent", t, subject, String::new),
            (false, Some(&(parent, n))) => {
                let (a, b) = graph.edges[n.0];
                let fits = snapshot.closed_switches.contains(&n) && ((a, b) == (parent, m) || (a, b) == (m, parent));
                report.check(fits, "parent", t, subject.clone(), || format!("parent link via SW{} is not a closed switch", n.ordinal()));
                // the parent chain must reach a root
                let mut cur = m;
                let mut hops = 0;
                while let Some(&(p, _)) = snapshot.parents.get(&cur) {
                    cur = p;
                    hops += 1;
                    if hops > graph.num_lsgs {
                        break;
                    }
                }
                report.check(snapshot.roots.contains(&cur), "parent-chain", t, subject, || {
                    "parent chain does not end at a root".to_string()
                });
            }
        }
    }
    let used: BTreeSet<SwitchIx> = snapshot.parents.values().map(|&(_, n)| n).collect();
    report.check(used == snapshot.closed_switches, "orientation", t, "topology", || {
        "closed switches and parent links differ".to_string()
    });
    report
}
