//! Feeder model: load nodes, intra-LSG branches, tie switches, LSG partition and DER assets.
//!
//! A feeder is partitioned into load switching groups (LSGs). Each LSG is an internally radial
//! set of nodes that is energized or de-energized as a unit; LSGs are joined by remotely
//! controlled switches. The LSG-level multigraph ([`LsgGraph`]) is what the topology constraints
//! are written on.

mod graph;
pub mod schema;
mod validate;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

pub use graph::{enumerate_loops, LoopSet, LsgGraph};
pub use schema::FeederDefinition;
pub use validate::{validate_feeder, Finding, Severity, ValidationReport};

use schema::DerKindRecord;

/// Default PV inverter oversizing relative to the farm rating.
pub const PV_INVERTER_OVERSIZE: f64 = 1.1;
pub const DEFAULT_BESS_EFFICIENCY: f64 = 0.95;
pub const DEFAULT_SOC_MIN_FRAC: f64 = 0.2;
pub const DEFAULT_SOC_MAX_FRAC: f64 = 1.0;
pub const DEFAULT_DG_MIN_OUTPUT_FRAC: f64 = 0.25;

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub usize);

        impl $name {
            /// One-based position, as used in variable names and reports.
            pub fn ordinal(self) -> usize {
                self.0 + 1
            }
        }
    };
}

index_type!(
    /// Position of a node in [`FeederModel::nodes`].
    NodeIx
);
index_type!(
    /// Position of an intra-LSG branch in [`FeederModel::branches`].
    BranchIx
);
index_type!(
    /// Position of a switch in [`FeederModel::switches`]; also the LSG-graph edge index.
    SwitchIx
);
index_type!(
    /// Position of an LSG in [`FeederModel::lsgs`].
    LsgIx
);
index_type!(
    /// Position of a DER in [`FeederModel::ders`].
    DerIx
);

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("cannot read feeder file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid feeder document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{owner} references unknown node `{node}`")]
    DanglingNode { owner: String, node: String },
    #[error("node `{0}` is not a member of any LSG")]
    UnassignedNode(String),
    #[error("node `{node}` is listed in two LSGs (`{first}` and `{second}`)")]
    NodeInTwoLsgs { node: String, first: String, second: String },
    #[error("LSG `{0}` has no nodes")]
    EmptyLsg(String),
    #[error("branch `{branch}` joins nodes of different LSGs (`{from_lsg}`, `{to_lsg}`)")]
    BranchAcrossLsgs { branch: String, from_lsg: String, to_lsg: String },
    #[error("switch `{switch}` has both endpoints in LSG `{lsg}`")]
    SwitchWithinLsg { switch: String, lsg: String },
    #[error("{owner}: {message}")]
    InvalidParameter { owner: String, message: String },
}

#[derive(Debug, Clone)]
pub struct LoadNode {
    pub id: String,
    pub lsg: LsgIx,
    pub priority_weight: f64,
    pub is_critical: bool,
    pub peak_kw: f64,
    pub q_per_p: f64,
}

impl LoadNode {
    /// Nodes with a positive nominal peak are load nodes and must have a profile.
    pub fn is_load(&self) -> bool {
        self.peak_kw > 0.0
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub id: String,
    pub from: NodeIx,
    pub to: NodeIx,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub lsg: LsgIx,
    pub capacity_kva: f64,
}

#[derive(Debug, Clone)]
pub struct Switch {
    pub id: String,
    pub from_node: NodeIx,
    pub to_node: NodeIx,
    pub from_lsg: LsgIx,
    pub to_lsg: LsgIx,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub capacity_kva: f64,
}

impl Switch {
    /// The LSG at the other end of the switch, if `lsg` is one of its endpoints.
    pub fn other_end(&self, lsg: LsgIx) -> Option<LsgIx> {
        if lsg == self.from_lsg {
            Some(self.to_lsg)
        } else if lsg == self.to_lsg {
            Some(self.from_lsg)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LsgKind {
    PvPlant,
    Dg,
    LoadOnly,
}

#[derive(Debug, Clone)]
pub struct Lsg {
    pub id: String,
    pub nodes: Vec<NodeIx>,
    pub branches: Vec<BranchIx>,
    pub kind: LsgKind,
}

impl Lsg {
    pub fn is_root_candidate(&self) -> bool {
        self.kind != LsgKind::LoadOnly
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageSpec {
    pub energy_kwh: f64,
    pub charge_kw_max: f64,
    pub discharge_kw_max: f64,
    pub efficiency: f64,
    pub soc_min_frac: f64,
    pub soc_max_frac: f64,
    pub soc_init_frac: f64,
}

impl StorageSpec {
    pub fn soc_min_kwh(&self) -> f64 {
        self.soc_min_frac * self.energy_kwh
    }

    pub fn soc_max_kwh(&self) -> f64 {
        self.soc_max_frac * self.energy_kwh
    }

    pub fn soc_init_kwh(&self) -> f64 {
        self.soc_init_frac * self.energy_kwh
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerKind {
    PvFarm,
    Bess(StorageSpec),
    Dg { min_output_frac: f64 },
}

#[derive(Debug, Clone)]
pub struct DerAsset {
    pub id: String,
    pub node: NodeIx,
    pub kind: DerKind,
    pub rated_kw: f64,
    /// Apparent-power rating of the inverter (or machine) used for the reactive capability polygon.
    pub inverter_kva: f64,
}

impl DerAsset {
    pub fn is_grid_forming(&self) -> bool {
        matches!(self.kind, DerKind::PvFarm | DerKind::Dg { .. })
    }
}

#[derive(Debug, Clone)]
pub struct FeederModel {
    pub name: String,
    pub base_kv: f64,
    pub base_kva: f64,
    pub nodes: Vec<LoadNode>,
    pub branches: Vec<Branch>,
    pub switches: Vec<Switch>,
    pub lsgs: Vec<Lsg>,
    pub ders: Vec<DerAsset>,
    pub graph: LsgGraph,
    node_lookup: HashMap<String, NodeIx>,
}

impl FeederModel {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, FeederError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FeederError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, FeederError> {
        let definition: FeederDefinition = serde_json::from_str(text)?;
        build_feeder(&definition)
    }

    pub fn node_by_id(&self, id: &str) -> Option<NodeIx> {
        self.node_lookup.get(id).copied()
    }

    pub fn node(&self, ix: NodeIx) -> &LoadNode {
        &self.nodes[ix.0]
    }

    pub fn lsg(&self, ix: LsgIx) -> &Lsg {
        &self.lsgs[ix.0]
    }

    pub fn lsg_by_id(&self, id: &str) -> Option<LsgIx> {
        self.lsgs.iter().position(|l| l.id == id).map(LsgIx)
    }

    pub fn lsg_of(&self, node: NodeIx) -> LsgIx {
        self.nodes[node.0].lsg
    }

    pub fn root_candidates(&self) -> &[LsgIx] {
        &self.graph.root_candidates
    }

    /// DERs located in the given LSG, in declaration order.
    pub fn ders_in(&self, lsg: LsgIx) -> impl Iterator<Item = (DerIx, &DerAsset)> + '_ {
        self.ders
            .iter()
            .enumerate()
            .filter(move |(_, d)| self.lsg_of(d.node) == lsg)
            .map(|(i, d)| (DerIx(i), d))
    }

    /// The node whose voltage anchors a microgrid rooted at `lsg`: the PV farm node when the
    /// LSG hosts one, otherwise the first DG node.
    pub fn anchor_node(&self, lsg: LsgIx) -> Option<NodeIx> {
        let ders: Vec<_> = self.ders_in(lsg).map(|(_, d)| d).collect();
        ders.iter()
            .find(|d| matches!(d.kind, DerKind::PvFarm))
            .or_else(|| ders.iter().find(|d| matches!(d.kind, DerKind::Dg { .. })))
            .map(|d| d.node)
    }

    /// Per-unit impedance base in ohms.
    pub fn z_base_ohm(&self) -> f64 {
        self.base_kv * self.base_kv * 1000.0 / self.base_kva
    }
}

fn positive(owner: &str, what: &str, value: f64) -> Result<f64, FeederError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(FeederError::InvalidParameter {
            owner: owner.to_string(),
            message: format!("{what} must be positive, got {value}"),
        })
    }
}

fn non_negative(owner: &str, what: &str, value: f64) -> Result<f64, FeederError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(FeederError::InvalidParameter {
            owner: owner.to_string(),
            message: format!("{what} must be non-negative, got {value}"),
        })
    }
}

fn invalid(owner: &str, message: impl Into<String>) -> FeederError {
    FeederError::InvalidParameter { owner: owner.to_string(), message: message.into() }
}

/// Resolve a parsed feeder definition into a [`FeederModel`].
pub fn build_feeder(def: &FeederDefinition) -> Result<FeederModel, FeederError> {
    positive("feeder", "base_kv", def.base_kv)?;
    positive("feeder", "base_kva", def.base_kva)?;

    let mut node_lookup = HashMap::new();
    for (i, n) in def.nodes.iter().enumerate() {
        if node_lookup.insert(n.id.clone(), NodeIx(i)).is_some() {
            return Err(FeederError::DuplicateId { kind: "node", id: n.id.clone() });
        }
        let owner = format!("node `{}`", n.id);
        if !(n.priority_weight >= 1.0) {
            return Err(invalid(&owner, format!("priority_weight must be >= 1, got {}", n.priority_weight)));
        }
        non_negative(&owner, "peak_kw", n.peak_kw)?;
        if !n.q_per_p.is_finite() {
            return Err(invalid(&owner, "q_per_p must be finite"));
        }
    }
    let resolve = |owner: &str, id: &str| {
        node_lookup.get(id).copied().ok_or_else(|| FeederError::DanglingNode {
            owner: owner.to_string(),
            node: id.to_string(),
        })
    };

    let mut membership: Vec<Option<LsgIx>> = vec![None; def.nodes.len()];
    let mut lsg_ids = BTreeSet::new();
    for (m, l) in def.lsgs.iter().enumerate() {
        if !lsg_ids.insert(l.id.clone()) {
            return Err(FeederError::DuplicateId { kind: "LSG", id: l.id.clone() });
        }
        if l.nodes.is_empty() {
            return Err(FeederError::EmptyLsg(l.id.clone()));
        }
        for node_id in &l.nodes {
            let ix = resolve(&format!("LSG `{}`", l.id), node_id)?;
            if let Some(prev) = membership[ix.0] {
                return Err(FeederError::NodeInTwoLsgs {
                    node: node_id.clone(),
                    first: def.lsgs[prev.0].id.clone(),
                    second: l.id.clone(),
                });
            }
            membership[ix.0] = Some(LsgIx(m));
        }
    }
    let mut nodes = Vec::with_capacity(def.nodes.len());
    for (i, n) in def.nodes.iter().enumerate() {
        let lsg = membership[i].ok_or_else(|| FeederError::UnassignedNode(n.id.clone()))?;
        nodes.push(LoadNode {
            id: n.id.clone(),
            lsg,
            priority_weight: n.priority_weight,
            is_critical: n.critical,
            peak_kw: n.peak_kw,
            q_per_p: n.q_per_p,
        });
    }

    let mut lsgs: Vec<Lsg> = def
        .lsgs
        .iter()
        .map(|l| Lsg {
            id: l.id.clone(),
            nodes: l.nodes.iter().map(|n| node_lookup[n]).collect(),
            branches: Vec::new(),
            kind: LsgKind::LoadOnly,
        })
        .collect();

    let mut element_ids = BTreeSet::new();
    let mut branches = Vec::with_capacity(def.branches.len());
    for b in &def.branches {
        if !element_ids.insert(b.id.clone()) {
            return Err(FeederError::DuplicateId { kind: "branch/switch", id: b.id.clone() });
        }
        let owner = format!("branch `{}`", b.id);
        let from = resolve(&owner, &b.from)?;
        let to = resolve(&owner, &b.to)?;
        non_negative(&owner, "r_ohm", b.r_ohm)?;
        non_negative(&owner, "x_ohm", b.x_ohm)?;
        positive(&owner, "capacity_kva", b.capacity_kva)?;
        if from == to {
            return Err(invalid(&owner, "branch endpoints must differ"));
        }
        let (lf, lt) = (nodes[from.0].lsg, nodes[to.0].lsg);
        if lf != lt {
            return Err(FeederError::BranchAcrossLsgs {
                branch: b.id.clone(),
                from_lsg: lsgs[lf.0].id.clone(),
                to_lsg: lsgs[lt.0].id.clone(),
            });
        }
        lsgs[lf.0].branches.push(BranchIx(branches.len()));
        branches.push(Branch {
            id: b.id.clone(),
            from,
            to,
            r_ohm: b.r_ohm,
            x_ohm: b.x_ohm,
            lsg: lf,
            capacity_kva: b.capacity_kva,
        });
    }

    let mut switches = Vec::with_capacity(def.switches.len());
    for s in &def.switches {
        if !element_ids.insert(s.id.clone()) {
            return Err(FeederError::DuplicateId { kind: "branch/switch", id: s.id.clone() });
        }
        let owner = format!("switch `{}`", s.id);
        let from_node = resolve(&owner, &s.from)?;
        let to_node = resolve(&owner, &s.to)?;
        non_negative(&owner, "r_ohm", s.r_ohm)?;
        non_negative(&owner, "x_ohm", s.x_ohm)?;
        positive(&owner, "capacity_kva", s.capacity_kva)?;
        let (from_lsg, to_lsg) = (nodes[from_node.0].lsg, nodes[to_node.0].lsg);
        if from_lsg == to_lsg {
            return Err(FeederError::SwitchWithinLsg {
                switch: s.id.clone(),
                lsg: lsgs[from_lsg.0].id.clone(),
            });
        }
        switches.push(Switch {
            id: s.id.clone(),
            from_node,
            to_node,
            from_lsg,
            to_lsg,
            r_ohm: s.r_ohm,
            x_ohm: s.x_ohm,
            capacity_kva: s.capacity_kva,
        });
    }

    let mut ders = Vec::with_capacity(def.ders.len());
    let mut der_ids = BTreeSet::new();
    for d in &def.ders {
        if !der_ids.insert(d.id.clone()) || node_lookup.contains_key(&d.id) {
            return Err(FeederError::DuplicateId { kind: "DER (ids share the node namespace)", id: d.id.clone() });
        }
        let owner = format!("DER `{}`", d.id);
        let node = resolve(&owner, &d.node)?;
        let rated_kw = positive(&owner, "rated_kw", d.rated_kw)?;
        let storage_fields = [
            d.energy_kwh,
            d.charge_kw_max,
            d.discharge_kw_max,
            d.efficiency,
            d.soc_min_frac,
            d.soc_max_frac,
            d.soc_init_frac,
        ];
        if d.kind != DerKindRecord::Bess && storage_fields.iter().any(Option::is_some) {
            return Err(invalid(&owner, "storage fields are only valid for kind `bess`"));
        }
        if d.kind != DerKindRecord::Dg && d.min_output_frac.is_some() {
            return Err(invalid(&owner, "min_output_frac is only valid for kind `dg`"));
        }
        let (kind, default_kva) = match d.kind {
            DerKindRecord::PvFarm => (DerKind::PvFarm, PV_INVERTER_OVERSIZE * rated_kw),
            DerKindRecord::Dg => {
                let frac = d.min_output_frac.unwrap_or(DEFAULT_DG_MIN_OUTPUT_FRAC);
                if !(0.0..=1.0).contains(&frac) {
                    return Err(invalid(&owner, format!("min_output_frac must lie in [0, 1], got {frac}")));
                }
                (DerKind::Dg { min_output_frac: frac }, rated_kw / octagon_inner_factor())
            }
            DerKindRecord::Bess => {
                let spec = StorageSpec {
                    energy_kwh: positive(&owner, "energy_kwh", d.energy_kwh.unwrap_or(f64::NAN))?,
                    charge_kw_max: positive(&owner, "charge_kw_max", d.charge_kw_max.unwrap_or(rated_kw))?,
                    discharge_kw_max: positive(&owner, "discharge_kw_max", d.discharge_kw_max.unwrap_or(rated_kw))?,
                    efficiency: d.efficiency.unwrap_or(DEFAULT_BESS_EFFICIENCY),
                    soc_min_frac: d.soc_min_frac.unwrap_or(DEFAULT_SOC_MIN_FRAC),
                    soc_max_frac: d.soc_max_frac.unwrap_or(DEFAULT_SOC_MAX_FRAC),
                    soc_init_frac: d.soc_init_frac.unwrap_or(1.0),
                };
                if !(spec.efficiency > 0.0 && spec.efficiency <= 1.0) {
                    return Err(invalid(&owner, format!("efficiency must lie in (0, 1], got {}", spec.efficiency)));
                }
                if !(0.0 <= spec.soc_min_frac && spec.soc_min_frac < spec.soc_max_frac && spec.soc_max_frac <= 1.0) {
                    return Err(invalid(&owner, "require 0 <= soc_min_frac < soc_max_frac <= 1"));
                }
                if !(spec.soc_min_frac..=spec.soc_max_frac).contains(&spec.soc_init_frac) {
                    return Err(invalid(&owner, "soc_init_frac must lie within [soc_min_frac, soc_max_frac]"));
                }
                let kva = spec.charge_kw_max.max(spec.discharge_kw_max) / octagon_inner_factor();
                (DerKind::Bess(spec), kva)
            }
        };
        let inverter_kva = match d.inverter_kva {
            Some(kva) => positive(&owner, "inverter_kva", kva)?,
            None => default_kva,
        };
        ders.push(DerAsset { id: d.id.clone(), node, kind, rated_kw, inverter_kva });
    }

    for d in &ders {
        let lsg = nodes[d.node.0].lsg;
        let kind = match d.kind {
            DerKind::PvFarm => LsgKind::PvPlant,
            DerKind::Dg { .. } => LsgKind::Dg,
            DerKind::Bess(_) => continue,
        };
        // PV plant takes precedence over DG when both share an LSG.
        lsgs[lsg.0].kind = lsgs[lsg.0].kind.min(kind);
    }

    let graph = LsgGraph::new(
        lsgs.len(),
        switches.iter().map(|s| (s.from_lsg, s.to_lsg)),
        lsgs.iter().enumerate().filter(|(_, l)| l.is_root_candidate()).map(|(m, _)| LsgIx(m)),
    );

    Ok(FeederModel {
        name: def.name.clone(),
        base_kv: def.base_kv,
        base_kva: def.base_kva,
        nodes,
        branches,
        switches,
        lsgs,
        ders,
        graph,
        node_lookup,
    })
}

/// Ratio between the apothem and the circumradius of a regular octagon, `cos(22.5°)`.
pub fn octagon_inner_factor() -> f64 {
    (std::f64::consts::PI / 8.0).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    pub(crate) fn two_lsg_json() -> serde_json::Value {
        json!({
            "base_kv": 12.66, "base_kva": 1000.0,
            "nodes": [
                {"id": "a1", "peak_kw": 10.0},
                {"id": "a2", "peak_kw": 20.0, "critical": true, "priority_weight": 2.0},
                {"id": "b1", "peak_kw": 30.0}
            ],
            "branches": [{"id": "ba", "from": "a1", "to": "a2", "r_ohm": 0.1, "x_ohm": 0.1, "capacity_kva": 500.0}],
            "switches": [{"id": "s1", "from": "a2", "to": "b1", "r_ohm": 0.1, "x_ohm": 0.1, "capacity_kva": 500.0}],
            "lsgs": [{"id": "A", "nodes": ["a1", "a2"]}, {"id": "B", "nodes": ["b1"]}],
            "ders": [{"id": "pv", "node": "a1", "kind": "pv-farm", "rated_kw": 100.0}]
        })
    }

    fn build(value: serde_json::Value) -> Result<FeederModel, FeederError> {
        FeederModel::from_json(&value.to_string())
    }

    #[test]
    fn resolves_cross_references() {
        let f = build(two_lsg_json()).unwrap();
        assert_eq!(f.lsgs.len(), 2);
        assert_eq!(f.lsgs[0].kind, LsgKind::PvPlant);
        assert_eq!(f.lsgs[1].kind, LsgKind::LoadOnly);
        assert_eq!(f.root_candidates(), &[LsgIx(0)]);
        assert_eq!(f.switches[0].from_lsg, LsgIx(0));
        assert_eq!(f.switches[0].to_lsg, LsgIx(1));
        assert_eq!(f.branches[0].lsg, LsgIx(0));
        assert!((f.ders[0].inverter_kva - 110.0).abs() < 1e-12);
        assert_eq!(f.anchor_node(LsgIx(0)), f.node_by_id("a1"));
    }

    #[test]
    fn single_lsg_without_switches_is_valid() {
        let f = build(json!({
            "base_kv": 4.16, "base_kva": 100.0,
            "nodes": [{"id": "n"}],
            "lsgs": [{"id": "only", "nodes": ["n"]}],
            "ders": [{"id": "g", "node": "n", "kind": "dg", "rated_kw": 50.0}]
        }))
        .unwrap();
        assert!(f.switches.is_empty());
        assert_eq!(f.root_candidates(), &[LsgIx(0)]);
        assert!(validate_feeder(&f).is_clean());
    }

    #[test]
    fn rejects_unknown_fields() {
        let mut v = two_lsg_json();
        v["nodes"][0]["colour"] = json!("red");
        assert!(matches!(build(v), Err(FeederError::Parse(_))));
    }

    #[test]
    fn rejects_dangling_node() {
        let mut v = two_lsg_json();
        v["switches"][0]["to"] = json!("zz");
        assert!(matches!(build(v), Err(FeederError::DanglingNode { .. })));
    }

    #[test]
    fn rejects_node_in_zero_or_two_lsgs() {
        let mut v = two_lsg_json();
        v["lsgs"][1]["nodes"] = json!(["b1", "a1"]);
        assert!(matches!(build(v), Err(FeederError::NodeInTwoLsgs { .. })));
        let mut v = two_lsg_json();
        v["lsgs"][1]["nodes"] = json!([]);
        v["lsgs"].as_array_mut().unwrap().push(json!({"id": "C", "nodes": ["b1"]}));
        assert!(matches!(build(v), Err(FeederError::EmptyLsg(_))));
        let mut v = two_lsg_json();
        v["lsgs"] = json!([{"id": "A", "nodes": ["a1", "a2"]}]);
        assert!(matches!(build(v), Err(FeederError::UnassignedNode(_))));
    }

    #[test]
    fn rejects_switch_inside_lsg() {
        let mut v = two_lsg_json();
        v["switches"][0]["to"] = json!("a1");
        assert!(matches!(build(v), Err(FeederError::SwitchWithinLsg { .. })));
    }

    #[test]
    fn rejects_bad_storage_parameters() {
        let mut v = two_lsg_json();
        v["ders"].as_array_mut().unwrap().push(json!({
            "id": "bess", "node": "a1", "kind": "bess", "rated_kw": 50.0, "energy_kwh": 100.0,
            "efficiency": 1.2
        }));
        assert!(matches!(build(v), Err(FeederError::InvalidParameter { .. })));
    }

    #[test]
    fn pv_takes_precedence_over_dg() {
        let mut v = two_lsg_json();
        v["ders"].as_array_mut().unwrap().push(json!({"id": "dg", "node": "a2", "kind": "dg", "rated_kw": 50.0}));
        let f = build(v).unwrap();
        assert_eq!(f.lsgs[0].kind, LsgKind::PvPlant);
        assert_eq!(f.anchor_node(LsgIx(0)), f.node_by_id("a1"));
    }
}
