//! Raw feeder definition records, as they appear in the JSON feeder file.
//!
//! The file carries string identifiers everywhere; [`super::build_feeder`] resolves them into
//! index-based domain types. Unknown fields are rejected.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederDefinition {
    #[serde(default)]
    pub name: String,
    /// Line-to-line base voltage in kV.
    pub base_kv: f64,
    /// Three-phase power base in kVA.
    pub base_kva: f64,
    pub nodes: Vec<NodeRecord>,
    #[serde(default)]
    pub branches: Vec<BranchRecord>,
    #[serde(default)]
    pub switches: Vec<SwitchRecord>,
    pub lsgs: Vec<LsgRecord>,
    #[serde(default)]
    pub ders: Vec<DerRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    #[serde(default = "one")]
    pub priority_weight: f64,
    #[serde(default)]
    pub critical: bool,
    /// Nominal peak demand. Nodes with a zero peak carry no load and need no profile.
    #[serde(default)]
    pub peak_kw: f64,
    /// Reactive demand per unit of active demand (kvar/kW).
    #[serde(default)]
    pub q_per_p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchRecord {
    pub id: String,
    pub from: String,
    pub to: String,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub capacity_kva: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchRecord {
    pub id: String,
    pub from: String,
    pub to: String,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub capacity_kva: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsgRecord {
    pub id: String,
    pub nodes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerKindRecord {
    PvFarm,
    Bess,
    Dg,
}

/// One DER. Storage fields apply to `bess` only, `min_output_frac` to `dg` only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerRecord {
    pub id: String,
    pub node: String,
    pub kind: DerKindRecord,
    pub rated_kw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverter_kva: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_output_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_kwh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_kw_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discharge_kw_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_min_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_max_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_init_frac: Option<f64>,
}

fn one() -> f64 {
    1.0
}
