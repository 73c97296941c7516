use std::collections::VecDeque;

use serde::Serialize;

use super::{FeederModel, LsgIx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    /// No findings at all.
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn with_code<'a>(&'a self, code: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.code == code)
    }
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Structural checks of the LSG partition: interiors must be connected trees, and every LSG
/// should be reachable from some root candidate through the switch graph.
pub fn validate_feeder(model: &FeederModel) -> ValidationReport {
    let mut findings = Vec::new();

    let mut dsu = DisjointSet::new(model.nodes.len());
    for b in &model.branches {
        if !dsu.union(b.from.0, b.to.0) {
            findings.push(Finding {
                severity: Severity::Error,
                code: "intra-lsg-cycle",
                subject: model.lsg(b.lsg).id.clone(),
                message: format!("intra-LSG cycle closed by branch `{}`", b.id),
            });
        }
    }
    for lsg in &model.lsgs {
        let mut roots: Vec<usize> = lsg.nodes.iter().map(|n| dsu.find(n.0)).collect();
        roots.sort_unstable();
        roots.dedup();
        if roots.len() > 1 {
            findings.push(Finding {
                severity: Severity::Error,
                code: "disconnected-lsg",
                subject: lsg.id.clone(),
                message: format!("LSG interior splits into {} disconnected parts", roots.len()),
            });
        }
    }

    let graph = &model.graph;
    if graph.root_candidates.is_empty() {
        findings.push(Finding {
            severity: Severity::Error,
            code: "no-root-candidate",
            subject: model.name.clone(),
            message: "feeder has no grid-forming DER, so no LSG can ever be energized".into(),
        });
    }
    let mut reached = vec![false; graph.num_lsgs];
    let mut queue: VecDeque<LsgIx> = graph.root_candidates.iter().copied().collect();
    for m in &queue {
        reached[m.0] = true;
    }
    while let Some(m) = queue.pop_front() {
        for &(next, _) in &graph.adjacency[m.0] {
            if !reached[next.0] {
                reached[next.0] = true;
                queue.push_back(next);
            }
        }
    }
    for (m, ok) in reached.iter().enumerate() {
        if !ok {
            findings.push(Finding {
                severity: Severity::Warning,
                code: "unreachable-lsg",
                subject: model.lsgs[m].id.clone(),
                message: "unreachable unless root candidate: no switch path to any grid-forming LSG".into(),
            });
        }
    }

    ValidationReport { findings }
}

#[cfg(test)]
mod tests {
    use crate::feeder::FeederModel;
    use serde_json::json;

    fn feeder() -> serde_json::Value {
        json!({
            "base_kv": 12.66, "base_kva": 1000.0,
            "nodes": [{"id": "a"}, {"id": "b"}, {"id": "c"}, {"id": "d"}, {"id": "e"}],
            "branches": [
                {"id": "ab", "from": "a", "to": "b", "r_ohm": 0.1, "x_ohm": 0.1, "capacity_kva": 100.0},
                {"id": "bc", "from": "b", "to": "c", "r_ohm": 0.1, "x_ohm": 0.1, "capacity_kva": 100.0}
            ],
            "switches": [{"id": "s", "from": "c", "to": "d", "r_ohm": 0.1, "x_ohm": 0.1, "capacity_kva": 100.0}],
            "lsgs": [{"id": "L1", "nodes": ["a", "b", "c"]}, {"id": "L2", "nodes": ["d"]}, {"id": "L3", "nodes": ["e"]}],
            "ders": [{"id": "pv", "node": "a", "kind": "pv-farm", "rated_kw": 10.0}]
        })
    }

    #[test]
    fn detects_cycle_inside_lsg() {
        let mut v = feeder();
        v["branches"].as_array_mut().unwrap().push(
            json!({"id": "ca", "from": "c", "to": "a", "r_ohm": 0.1, "x_ohm": 0.1, "capacity_kva": 100.0}),
        );
        let report = super::validate_feeder(&FeederModel::from_json(&v.to_string()).unwrap());
        let cycles: Vec<_> = report.with_code("intra-lsg-cycle").collect();
        assert_eq!(cycles.len(), 1);
        assert!(cycles[0].message.contains("intra-LSG cycle"));
        assert!(report.has_errors());
    }

    #[test]
    fn detects_disconnected_interior() {
        let mut v = feeder();
        v["branches"].as_array_mut().unwrap().pop();
        let report = super::validate_feeder(&FeederModel::from_json(&v.to_string()).unwrap());
        assert_eq!(report.with_code("disconnected-lsg").count(), 1);
    }

    #[test]
    fn warns_about_isolated_lsg() {
        let report = super::validate_feeder(&FeederModel::from_json(&feeder().to_string()).unwrap());
        let warnings: Vec<_> = report.with_code("unreachable-lsg").collect();
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].subject, "L3");
        assert!(warnings[0].message.contains("unreachable unless root candidate"));
        assert!(!report.has_errors());
    }
}
