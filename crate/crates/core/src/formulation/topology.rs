//! Status, topology, switching-action, minimum-service-duration rows and the objective.

use super::{DecisionIndex, FormulationError, Mode, ScenarioConfig, ScenarioData, Symbol, VarKey};
use crate::feeder::{FeederModel, LoopSet, LsgIx, LsgKind, SwitchIx};
use crate::milp::{LinearConstraint, Sense, VarId};

/// Node, branch and edge statuses are aliases of LSG and switch variables, so this block is
/// always empty; it exists so the audit log reports it.
pub fn build_status_identities(_feeder: &FeederModel, _steps: usize) -> Vec<LinearConstraint> {
    Vec::new()
}

/// β variables pointing into LSG `m` at step `t`.
fn incoming(feeder: &FeederModel, index: &DecisionIndex, m: LsgIx, t: usize) -> Vec<VarId> {
    feeder
        .switches
        .iter()
        .enumerate()
        .filter_map(|(n, s)| {
            if s.to_lsg == m {
                Some(index.id(VarKey::new(Symbol::BetaFwd, n, t)))
            } else if s.from_lsg == m {
                Some(index.id(VarKey::new(Symbol::BetaBwd, n, t)))
            } else {
                None
            }
        })
        .collect()
}

/// Radial-forest rows: direction choice, single parent, root status, de-energized endpoints,
/// loop bans and the switch/root/served count identity.
pub fn build_topology_constraints(
    feeder: &FeederModel,
    mode: Mode,
    steps: usize,
    loops: &LoopSet,
    index: &DecisionIndex,
) -> Result<Vec<LinearConstraint>, FormulationError> {
    if feeder.root_candidates().is_empty() {
        return Err(FormulationError::NoRootCandidate);
    }
    let mut rows = Vec::new();
    let ulsg = |m: LsgIx, t| index.id(VarKey::ulsg(m, t));
    let usw = |n: usize, t| index.id(VarKey::usw(SwitchIx(n), t));
    for t in 1..=steps {
        for n in 0..feeder.switches.len() {
            let terms = [
                (index.id(VarKey::new(Symbol::BetaFwd, n, t)), 1.0),
                (index.id(VarKey::new(Symbol::BetaBwd, n, t)), 1.0),
                (usw(n, t), -1.0),
            ];
            rows.push(LinearConstraint::new(format!("dir.{}.{t}", n + 1), terms, Sense::Eq, 0.0));
        }
        for (m, lsg) in feeder.lsgs.iter().enumerate() {
            let m = LsgIx(m);
            let beta_in: Vec<(VarId, f64)> = incoming(feeder, index, m, t).into_iter().map(|v| (v, 1.0)).collect();
            let tag = m.ordinal();
            if lsg.kind == LsgKind::LoadOnly {
                let terms = beta_in.iter().copied().chain([(ulsg(m, t), -1.0)]);
                rows.push(LinearConstraint::new(format!("parent.{tag}.{t}"), terms, Sense::Eq, 0.0));
                continue;
            }
            let ur = index.id(VarKey::ur(m, t));
            match mode {
                Mode::Flexible => {
                    let lo = beta_in.iter().copied().chain([(ulsg(m, t), -1.0), (ur, 1.0)]);
                    rows.push(LinearConstraint::new(format!("rootlo.{tag}.{t}"), lo, Sense::Ge, 0.0));
                    let hi = beta_in.iter().copied().chain([(ulsg(m, t), -0.5), (ur, 0.5)]);
                    rows.push(LinearConstraint::new(format!("roothi.{tag}.{t}"), hi, Sense::Le, 0.5));
                    rows.push(LinearConstraint::new(format!("rootsrv.{tag}.{t}"), [(ur, 1.0), (ulsg(m, t), -1.0)], Sense::Le, 0.0));
                }
                Mode::Legacy => {
                    rows.push(LinearConstraint::new(format!("rootin.{tag}.{t}"), beta_in.iter().copied(), Sense::Eq, 0.0));
                    rows.push(LinearConstraint::new(format!("rootfix.{tag}.{t}"), [(ur, 1.0), (ulsg(m, t), -1.0)], Sense::Eq, 0.0));
                }
            }
        }
        for (n, s) in feeder.switches.iter().enumerate() {
            let terms = [(usw(n, t), 1.0), (ulsg(s.from_lsg, t), -0.5), (ulsg(s.to_lsg, t), -0.5)];
            rows.push(LinearConstraint::new(format!("deen.{}.{t}", n + 1), terms, Sense::Le, 0.0));
        }
        for (c, lp) in loops.loops.iter().enumerate() {
            let terms = lp.iter().map(|n| (usw(n.0, t), 1.0));
            rows.push(LinearConstraint::new(format!("loop.{}.{t}", c + 1), terms, Sense::Le, lp.len() as f64 - 1.0));
        }
        let terms = (0..feeder.switches.len())
            .map(|n| (usw(n, t), 1.0))
            .chain(feeder.root_candidates().iter().map(|&m| (index.id(VarKey::ur(m, t)), 1.0)))
            .chain((0..feeder.lsgs.len()).map(|m| (ulsg(LsgIx(m), t), -1.0)));
        rows.push(LinearConstraint::new(format!("count.{t}"), terms, Sense::Eq, 0.0));
    }
    Ok(rows)
}

/// `USO ≥ |USW_t − USW_{t−1}|` as two rows, with every switch open before step 1.
pub fn build_switching_action_constraints(feeder: &FeederModel, steps: usize, index: &DecisionIndex) -> Vec<LinearConstraint> {
    let mut rows = Vec::new();
    for t in 1..=steps {
        for n in 0..feeder.switches.len() {
            let n = SwitchIx(n);
            let uso = index.id(VarKey::uso(n, t));
            let now = index.id(VarKey::usw(n, t));
            let mut up = vec![(uso, 1.0), (now, -1.0)];
            let mut down = vec![(uso, 1.0), (now, 1.0)];
            if t > 1 {
                let before = index.id(VarKey::usw(n, t - 1));
                up.push((before, 1.0));
                down.push((before, -1.0));
            }
            rows.push(LinearConstraint::new(format!("soup.{}.{t}", n.ordinal()), up, Sense::Ge, 0.0));
            rows.push(LinearConstraint::new(format!("sodn.{}.{t}", n.ordinal()), down, Sense::Ge, 0.0));
        }
    }
    rows
}

/// Once switched on at step `t`, an LSG stays on for `min(k_msd, steps − t + 1)` steps.
/// Every LSG is off before step 1.
pub fn build_msd_constraints(feeder: &FeederModel, steps: usize, k_msd: usize, index: &DecisionIndex) -> Vec<LinearConstraint> {
    let mut rows = Vec::new();
    for m in 0..feeder.lsgs.len() {
        let m = LsgIx(m);
        for t in 1..=steps {
            let k_hat = k_msd.min(steps - t + 1);
            if k_hat <= 1 {
                continue;
            }
            let k = k_hat as f64;
            let mut terms: Vec<(VarId, f64)> = (0..k_hat).map(|z| (index.id(VarKey::ulsg(m, t + z)), 1.0)).collect();
            terms.push((index.id(VarKey::ulsg(m, t)), -k));
            if t > 1 {
                terms.push((index.id(VarKey::ulsg(m, t - 1)), k));
            }
            rows.push(LinearConstraint::new(format!("msd.{}.{t}", m.ordinal()), terms, Sense::Ge, 0.0));
        }
    }
    rows
}

/// Pin the scenario's must-serve LSGs on at every step.
pub fn build_must_serve_constraints(
    feeder: &FeederModel,
    scenario: &ScenarioConfig,
    index: &DecisionIndex,
) -> Result<Vec<LinearConstraint>, FormulationError> {
    let mut rows = Vec::new();
    for id in &scenario.must_serve_lsgs {
        let m = feeder.lsg_by_id(id).ok_or_else(|| FormulationError::UnknownLsg(id.clone()))?;
        for t in 1..=scenario.steps {
            let v = index.id(VarKey::ulsg(m, t));
            rows.push(LinearConstraint::new(format!("serve.{}.{t}", m.ordinal()), [(v, 1.0)], Sense::Eq, 1.0));
        }
    }
    Ok(rows)
}

/// Minimise `−Σ value(m,t)·ULSG_{m,t} + k1·Σ USO_{n,t}`.
pub fn build_objective(feeder: &FeederModel, scenario: &ScenarioConfig, data: &ScenarioData, index: &DecisionIndex) -> Vec<(VarId, f64)> {
    let mut terms = Vec::new();
    for t in 1..=scenario.steps {
        for m in 0..feeder.lsgs.len() {
            let m = LsgIx(m);
            let value = data.service_value(feeder, scenario, m, t);
            if value != 0.0 {
                terms.push((index.id(VarKey::ulsg(m, t)), -value));
            }
        }
        if scenario.k1 != 0.0 {
            for n in 0..feeder.switches.len() {
                terms.push((index.id(VarKey::uso(SwitchIx(n), t)), scenario.k1));
            }
        }
    }
    terms
}
