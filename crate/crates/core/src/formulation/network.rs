//! Linearised branch-flow rows with squared-voltage variables.
//!
//! Flows and injections are per unit on the feeder's kVA base and voltages are squared per-unit
//! magnitudes. A drop across an element with impedance `r + jx` ohms is `2(r·P + x·Q) / Z_base`.

use super::{flow_limit, per_unit, DecisionIndex, Mode, ScenarioConfig, ScenarioData, Symbol, VarKey};
use crate::feeder::{BranchIx, DerKind, FeederModel, LsgKind, NodeIx};
use crate::milp::{LinearConstraint, Sense, VarId};

/// Coefficients `(a, b)` such that the drop is `a·P + b·Q` for per-unit P and Q.
pub fn drop_coefficients(feeder: &FeederModel, r_ohm: f64, x_ohm: f64) -> (f64, f64) {
    let scale = 2.0 / feeder.z_base_ohm();
    (scale * r_ohm, scale * x_ohm)
}

fn flow_box(rows: &mut Vec<LinearConstraint>, name: &str, flow: VarId, status: VarId, cap: f64) {
    rows.push(LinearConstraint::new(format!("{name}_hi"), [(flow, 1.0), (status, -cap)], Sense::Le, 0.0));
    rows.push(LinearConstraint::new(format!("{name}_lo"), [(flow, 1.0), (status, cap)], Sense::Ge, 0.0));
}

pub fn build_power_flow_constraints(
    feeder: &FeederModel,
    scenario: &ScenarioConfig,
    data: &ScenarioData,
    index: &DecisionIndex,
) -> Vec<LinearConstraint> {
    let mut rows = Vec::new();
    let big_m = scenario.big_m_voltage;
    let v_min2 = scenario.v_min_pu * scenario.v_min_pu;
    let v_rate2 = scenario.v_rate_pu * scenario.v_rate_pu;
    for t in 1..=scenario.steps {
        let v = |i: NodeIx| index.id(VarKey::voltage(i, t));

        // balance: outflow − inflow − generation + load·status = 0
        let mut p_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); feeder.nodes.len()];
        let mut q_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); feeder.nodes.len()];
        let mut arc = |from: NodeIx, to: NodeIx, p: VarId, q: VarId| {
            p_terms[from.0].push((p, 1.0));
            p_terms[to.0].push((p, -1.0));
            q_terms[from.0].push((q, 1.0));
            q_terms[to.0].push((q, -1.0));
        };
        for (b, br) in feeder.branches.iter().enumerate() {
            arc(br.from, br.to, index.id(VarKey::new(Symbol::Pbr, b, t)), index.id(VarKey::new(Symbol::Qbr, b, t)));
        }
        for (n, sw) in feeder.switches.iter().enumerate() {
            arc(sw.from_node, sw.to_node, index.id(VarKey::new(Symbol::Psw, n, t)), index.id(VarKey::new(Symbol::Qsw, n, t)));
        }
        for (d, der) in feeder.ders.iter().enumerate() {
            let i = der.node.0;
            let key = |s| index.id(VarKey::new(s, d, t));
            match der.kind {
                DerKind::PvFarm => {
                    p_terms[i].push((key(Symbol::Ppv), -1.0));
                    q_terms[i].push((key(Symbol::Qpv), -1.0));
                }
                DerKind::Bess(_) => {
                    p_terms[i].push((key(Symbol::Pdis), -1.0));
                    p_terms[i].push((key(Symbol::Pch), 1.0));
                    q_terms[i].push((key(Symbol::Qbs), -1.0));
                }
                DerKind::Dg { .. } => {
                    p_terms[i].push((key(Symbol::Pdg), -1.0));
                    q_terms[i].push((key(Symbol::Qdg), -1.0));
                }
            }
        }
        for (i, node) in feeder.nodes.iter().enumerate() {
            let status = index.id(VarKey::ulsg(node.lsg, t));
            let load = per_unit(feeder, data.load(NodeIx(i), t));
            let mut p = std::mem::take(&mut p_terms[i]);
            let mut q = std::mem::take(&mut q_terms[i]);
            p.push((status, load));
            q.push((status, load * node.q_per_p));
            rows.push(LinearConstraint::new(format!("pbal.{}.{t}", i + 1), p, Sense::Eq, 0.0));
            rows.push(LinearConstraint::new(format!("qbal.{}.{t}", i + 1), q, Sense::Eq, 0.0));
        }

        for (b, br) in feeder.branches.iter().enumerate() {
            let p = index.id(VarKey::new(Symbol::Pbr, b, t));
            let q = index.id(VarKey::new(Symbol::Qbr, b, t));
            let status = index.id(VarKey::branch_status(feeder, BranchIx(b), t));
            let (a, c) = drop_coefficients(feeder, br.r_ohm, br.x_ohm);
            let terms = [(v(br.to), 1.0), (v(br.from), -1.0), (p, a), (q, c)];
            rows.push(LinearConstraint::new(format!("drop.{}.{t}", b + 1), terms, Sense::Eq, 0.0));
            let cap = per_unit(feeder, flow_limit(scenario, br.capacity_kva));
            flow_box(&mut rows, &format!("pbr.{}.{t}", b + 1), p, status, cap);
            flow_box(&mut rows, &format!("qbr.{}.{t}", b + 1), q, status, cap);
        }
        for (n, sw) in feeder.switches.iter().enumerate() {
            let p = index.id(VarKey::new(Symbol::Psw, n, t));
            let q = index.id(VarKey::new(Symbol::Qsw, n, t));
            let status = index.id(VarKey::new(Symbol::Usw, n, t));
            let (a, c) = drop_coefficients(feeder, sw.r_ohm, sw.x_ohm);
            let base = [(v(sw.to_node), 1.0), (v(sw.from_node), -1.0), (p, a), (q, c)];
            let hi = base.iter().copied().chain([(status, big_m)]);
            rows.push(LinearConstraint::new(format!("swdrop_hi.{}.{t}", n + 1), hi, Sense::Le, big_m));
            let lo = base.iter().copied().chain([(status, -big_m)]);
            rows.push(LinearConstraint::new(format!("swdrop_lo.{}.{t}", n + 1), lo, Sense::Ge, -big_m));
            let cap = per_unit(feeder, flow_limit(scenario, sw.capacity_kva));
            flow_box(&mut rows, &format!("psw.{}.{t}", n + 1), p, status, cap);
            flow_box(&mut rows, &format!("qsw.{}.{t}", n + 1), q, status, cap);
        }

        for (i, node) in feeder.nodes.iter().enumerate() {
            let status = index.id(VarKey::ulsg(node.lsg, t));
            let terms = [(v(NodeIx(i)), 1.0), (status, -v_min2)];
            rows.push(LinearConstraint::new(format!("vmin.{}.{t}", i + 1), terms, Sense::Ge, 0.0));
        }
        for &m in feeder.root_candidates() {
            let Some(anchor) = feeder.anchor_node(m) else { continue };
            let ur = index.id(VarKey::ur(m, t));
            let tag = m.ordinal();
            rows.push(LinearConstraint::new(format!("vref_lo.{tag}.{t}"), [(v(anchor), 1.0), (ur, -v_rate2)], Sense::Ge, 0.0));
            rows.push(LinearConstraint::new(
                format!("vref_hi.{tag}.{t}"),
                [(v(anchor), 1.0), (ur, big_m - v_rate2)],
                Sense::Le,
                big_m,
            ));
            // a served PV plant always regulates its own voltage
            if scenario.mode == Mode::Flexible && feeder.lsg(m).kind == LsgKind::PvPlant {
                let ulsg = index.id(VarKey::ulsg(m, t));
                rows.push(LinearConstraint::new(format!("pvroot.{tag}.{t}"), [(ur, 1.0), (ulsg, -1.0)], Sense::Eq, 0.0));
            }
        }
    }
    rows
}
