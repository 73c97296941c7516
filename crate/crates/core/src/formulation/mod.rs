//! The LSG energy-management MILP.
//!
//! [`assemble_model`] declares every decision variable once (see [`VarKey`] for naming) and then
//! adds the constraint blocks in a fixed order: status identities (aliasing only), topology,
//! switching actions, minimum service duration, must-serve pins, power flow and DER limits,
//! followed by the objective. Each builder is a pure function of the feeder, scenario, data and
//! index and returns its rows.

mod der;
mod index;
mod network;
mod scenario;
mod topology;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use der::build_der_constraints;
pub use index::{DecisionIndex, SolutionView, Symbol, VarKey};
pub use network::build_power_flow_constraints;
pub use scenario::{Mode, ScenarioConfig, ScenarioRecord, ScopedWindow, SolverRecord, WindowRecord};
pub use topology::{
    build_msd_constraints, build_must_serve_constraints, build_objective, build_status_identities,
    build_switching_action_constraints, build_topology_constraints,
};

use crate::feeder::{enumerate_loops, DerIx, DerKind, FeederModel, LoopSet, LsgIx, NodeIx};
use crate::milp::{LinearConstraint, MilpError, MilpModel, VarId, VarKind};
use crate::profile::{Profile, ProfileError};

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("feeder has no root-candidate LSG")]
    NoRootCandidate,
    #[error("unknown LSG `{0}` in must_serve_lsgs")]
    UnknownLsg(String),
    #[error("{0}")]
    Model(#[from] MilpError),
}

/// Load and PV series on the scheduling grid, indexed by node and DER.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    /// kW per node per step (index `t − 1`); zero for nodes without load.
    pub load_kw: Vec<Vec<f64>>,
    /// Available PV output per DER per step, already multiplied by the scenario's PV scale.
    pub pv_kw: Vec<Option<Vec<f64>>>,
}

impl ScenarioData {
    /// Pick the series for every load node and PV farm out of `profiles`.
    pub fn from_profiles(
        feeder: &FeederModel,
        scenario: &ScenarioConfig,
        profiles: &BTreeMap<String, Profile>,
    ) -> Result<Self, FormulationError> {
        let steps = scenario.steps;
        let series = |id: &str| -> Result<Vec<f64>, FormulationError> {
            let p = profiles.get(id).ok_or_else(|| ProfileError::MissingSubject(id.to_string()))?;
            if p.step_minutes != scenario.step_minutes || p.values_kw.len() < steps {
                return Err(ProfileError::Coverage {
                    subject: id.to_string(),
                    message: format!("needs {steps} steps of {} minutes", scenario.step_minutes),
                }
                .into());
            }
            Ok(p.values_kw[..steps].to_vec())
        };
        let load_kw = feeder
            .nodes
            .iter()
            .map(|n| if n.is_load() { series(&n.id) } else { Ok(vec![0.0; steps]) })
            .collect::<Result<_, _>>()?;
        let pv_kw = feeder
            .ders
            .iter()
            .map(|d| match d.kind {
                DerKind::PvFarm => series(&d.id).map(|v| Some(v.into_iter().map(|x| x * scenario.pv_scale).collect())),
                _ => Ok(None),
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { load_kw, pv_kw })
    }

    /// Zero load and zero PV everywhere.
    pub fn zeros(feeder: &FeederModel, steps: usize) -> Self {
        Self {
            load_kw: vec![vec![0.0; steps]; feeder.nodes.len()],
            pv_kw: feeder
                .ders
                .iter()
                .map(|d| matches!(d.kind, DerKind::PvFarm).then(|| vec![0.0; steps]))
                .collect(),
        }
    }

    pub fn load(&self, i: NodeIx, t: usize) -> f64 {
        self.load_kw[i.0][t - 1]
    }

    pub fn pv_available(&self, d: DerIx, t: usize) -> f64 {
        self.pv_kw[d.0].as_ref().map_or(0.0, |v| v[t - 1])
    }

    /// Σ load of the LSG's nodes at step `t`.
    pub fn lsg_load(&self, feeder: &FeederModel, m: LsgIx, t: usize) -> f64 {
        feeder.lsg(m).nodes.iter().map(|&i| self.load(i, t)).sum()
    }

    /// Weighted energy gained by serving LSG `m` during step `t`.
    pub fn service_value(&self, feeder: &FeederModel, scenario: &ScenarioConfig, m: LsgIx, t: usize) -> f64 {
        feeder
            .lsg(m)
            .nodes
            .iter()
            .map(|&i| {
                let node = feeder.node(i);
                node.priority_weight * scenario.preference_weight(&node.id, t) * self.load(i, t) * scenario.dt_hours()
            })
            .sum()
    }
}

/// Variable and row counts contributed by one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockAudit {
    pub block: &'static str,
    pub variables: usize,
    pub rows: usize,
}

#[derive(Debug, Clone)]
pub struct Formulation {
    pub model: MilpModel,
    pub index: DecisionIndex,
    pub loops: LoopSet,
    pub audit: Vec<BlockAudit>,
}

struct Declarer<'a> {
    model: &'a mut MilpModel,
    index: &'a mut DecisionIndex,
    count: usize,
}

impl Declarer<'_> {
    fn add(&mut self, key: VarKey, kind: VarKind, lower: f64, upper: f64) -> Result<(), MilpError> {
        let id = self.model.add_variable(key.name(), kind, lower, upper)?;
        self.index.insert(key, id);
        self.count += 1;
        Ok(())
    }

    fn binary(&mut self, key: VarKey) -> Result<(), MilpError> {
        self.add(key, VarKind::Binary, 0.0, 1.0)
    }

    fn continuous(&mut self, key: VarKey, lower: f64, upper: f64) -> Result<(), MilpError> {
        self.add(key, VarKind::Continuous, lower, upper)
    }

    fn take(&mut self) -> usize {
        std::mem::take(&mut self.count)
    }
}

/// `kw` (or kvar, kVA, kWh) in per unit of the feeder's kVA base.
pub fn per_unit(feeder: &FeederModel, kw: f64) -> f64 {
    kw / feeder.base_kva
}

/// Flow limit of an element: its capacity, further capped by the scenario's flow big-M.
pub fn flow_limit(scenario: &ScenarioConfig, capacity_kva: f64) -> f64 {
    scenario.big_m_flow_kw.map_or(capacity_kva, |m| capacity_kva.min(m))
}

/// Rating of a DER's active power after scenario scaling.
pub fn scaled_rating_kw(feeder: &FeederModel, scenario: &ScenarioConfig, d: DerIx) -> f64 {
    let der = &feeder.ders[d.0];
    match der.kind {
        DerKind::PvFarm => der.rated_kw * scenario.pv_scale,
        _ => der.rated_kw,
    }
}

/// Inverter rating of a DER after scenario scaling.
pub fn scaled_inverter_kva(feeder: &FeederModel, scenario: &ScenarioConfig, d: DerIx) -> f64 {
    let der = &feeder.ders[d.0];
    match der.kind {
        DerKind::PvFarm => der.inverter_kva * scenario.pv_scale,
        _ => der.inverter_kva,
    }
}

fn declare_topology(feeder: &FeederModel, steps: usize, d: &mut Declarer<'_>) -> Result<(), MilpError> {
    for t in 1..=steps {
        for m in 0..feeder.lsgs.len() {
            d.binary(VarKey::ulsg(LsgIx(m), t))?;
        }
        for &m in feeder.root_candidates() {
            d.binary(VarKey::ur(m, t))?;
        }
        for n in 0..feeder.switches.len() {
            d.binary(VarKey::new(Symbol::Usw, n, t))?;
            d.binary(VarKey::new(Symbol::BetaFwd, n, t))?;
            d.binary(VarKey::new(Symbol::BetaBwd, n, t))?;
        }
    }
    Ok(())
}

fn declare_switching(feeder: &FeederModel, steps: usize, d: &mut Declarer<'_>) -> Result<(), MilpError> {
    for t in 1..=steps {
        for n in 0..feeder.switches.len() {
            d.continuous(VarKey::new(Symbol::Uso, n, t), 0.0, 1.0)?;
        }
    }
    Ok(())
}

fn declare_network(feeder: &FeederModel, scenario: &ScenarioConfig, d: &mut Declarer<'_>) -> Result<(), MilpError> {
    let v_upper = scenario.v_max_pu * scenario.v_max_pu;
    for t in 1..=scenario.steps {
        for (b, branch) in feeder.branches.iter().enumerate() {
            let cap = per_unit(feeder, flow_limit(scenario, branch.capacity_kva));
            d.continuous(VarKey::new(Symbol::Pbr, b, t), -cap, cap)?;
            d.continuous(VarKey::new(Symbol::Qbr, b, t), -cap, cap)?;
        }
        for (n, switch) in feeder.switches.iter().enumerate() {
            let cap = per_unit(feeder, flow_limit(scenario, switch.capacity_kva));
            d.continuous(VarKey::new(Symbol::Psw, n, t), -cap, cap)?;
            d.continuous(VarKey::new(Symbol::Qsw, n, t), -cap, cap)?;
        }
        for i in 0..feeder.nodes.len() {
            d.continuous(VarKey::voltage(NodeIx(i), t), 0.0, v_upper)?;
        }
    }
    Ok(())
}

fn declare_ders(feeder: &FeederModel, scenario: &ScenarioConfig, data: &ScenarioData, d: &mut Declarer<'_>) -> Result<(), MilpError> {
    for t in 1..=scenario.steps {
        for (k, der) in feeder.ders.iter().enumerate() {
            let ix = DerIx(k);
            let s = per_unit(feeder, scaled_inverter_kva(feeder, scenario, ix));
            let pu = |kw| per_unit(feeder, kw);
            match der.kind {
                DerKind::PvFarm => {
                    d.continuous(VarKey::der(Symbol::Ppv, ix, t), 0.0, pu(data.pv_available(ix, t)))?;
                    d.continuous(VarKey::der(Symbol::Qpv, ix, t), 0.0, s)?;
                }
                DerKind::Bess(spec) => {
                    d.continuous(VarKey::der(Symbol::Pch, ix, t), 0.0, pu(spec.charge_kw_max))?;
                    d.continuous(VarKey::der(Symbol::Pdis, ix, t), 0.0, pu(spec.discharge_kw_max))?;
                    d.continuous(VarKey::der(Symbol::Qbs, ix, t), 0.0, s)?;
                    d.binary(VarKey::der(Symbol::Uch, ix, t))?;
                    d.binary(VarKey::der(Symbol::Udis, ix, t))?;
                    d.continuous(VarKey::der(Symbol::Soc, ix, t), pu(spec.soc_min_kwh()), pu(spec.soc_max_kwh()))?;
                }
                DerKind::Dg { .. } => {
                    d.continuous(VarKey::der(Symbol::Pdg, ix, t), 0.0, pu(der.rated_kw))?;
                    d.continuous(VarKey::der(Symbol::Qdg, ix, t), 0.0, s)?;
                    d.binary(VarKey::der(Symbol::Udg, ix, t))?;
                }
            }
            d.continuous(VarKey::der(Symbol::Rsv, ix, t), 0.0, f64::INFINITY)?;
        }
    }
    Ok(())
}

fn push_block(model: &mut MilpModel, audit: &mut Vec<BlockAudit>, block: &'static str, variables: usize, rows: Vec<LinearConstraint>) -> Result<(), MilpError> {
    audit.push(BlockAudit { block, variables, rows: rows.len() });
    for row in rows {
        model.add_constraint(row)?;
    }
    Ok(())
}

/// Build the full model for `scenario` on `feeder`.
pub fn assemble_model(feeder: &FeederModel, scenario: &ScenarioConfig, data: &ScenarioData) -> Result<Formulation, FormulationError> {
    if feeder.root_candidates().is_empty() {
        return Err(FormulationError::NoRootCandidate);
    }
    let k_msd = scenario.k_msd()?;
    let loops = enumerate_loops(&feeder.graph);
    let name = if scenario.name.is_empty() { "lsgems".to_string() } else { scenario.name.clone() };
    let mut model = MilpModel::new(name);
    let mut index = DecisionIndex::default();
    let mut audit = Vec::new();

    let mut d = Declarer { model: &mut model, index: &mut index, count: 0 };
    declare_topology(feeder, scenario.steps, &mut d)?;
    let topo_vars = d.take();
    declare_switching(feeder, scenario.steps, &mut d)?;
    let switching_vars = d.take();
    declare_network(feeder, scenario, &mut d)?;
    let network_vars = d.take();
    declare_ders(feeder, scenario, data, &mut d)?;
    let der_vars = d.take();

    let steps = scenario.steps;
    push_block(&mut model, &mut audit, "status-identities", 0, build_status_identities(feeder, steps))?;
    let rows = build_topology_constraints(feeder, scenario.mode, steps, &loops, &index)?;
    push_block(&mut model, &mut audit, "topology", topo_vars, rows)?;
    push_block(&mut model, &mut audit, "switching", switching_vars, build_switching_action_constraints(feeder, steps, &index))?;
    push_block(&mut model, &mut audit, "msd", 0, build_msd_constraints(feeder, steps, k_msd, &index))?;
    push_block(&mut model, &mut audit, "must-serve", 0, build_must_serve_constraints(feeder, scenario, &index)?)?;
    push_block(&mut model, &mut audit, "power-flow", network_vars, build_power_flow_constraints(feeder, scenario, data, &index))?;
    push_block(&mut model, &mut audit, "der", der_vars, build_der_constraints(feeder, scenario, data, &index))?;
    for (v, c) in build_objective(feeder, scenario, data, &index) {
        model.add_objective_term(v, c);
    }
    // with nothing forced on, the schedule that keeps every LSG dark is always feasible
    if scenario.must_serve_lsgs.is_empty() {
        let dark = model.variables().iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary).map(|(k, _)| (VarId(k), 0.0)).collect();
        model.set_start(dark);
    }
    Ok(Formulation { model, index, loops, audit })
}

/// Topology variables and rows only, for `steps` steps.
pub fn assemble_topology_model(feeder: &FeederModel, mode: Mode, steps: usize) -> Result<Formulation, FormulationError> {
    if feeder.root_candidates().is_empty() {
        return Err(FormulationError::NoRootCandidate);
    }
    let loops = enumerate_loops(&feeder.graph);
    let mut model = MilpModel::new("topology");
    let mut index = DecisionIndex::default();
    let mut audit = Vec::new();
    let mut d = Declarer { model: &mut model, index: &mut index, count: 0 };
    declare_topology(feeder, steps, &mut d)?;
    let vars = d.take();
    let rows = build_topology_constraints(feeder, mode, steps, &loops, &index)?;
    push_block(&mut model, &mut audit, "topology", vars, rows)?;
    Ok(Formulation { model, index, loops, audit })
}
