//! PV, battery and diesel-generator limits and the spinning-reserve requirement.
//!
//! Powers are per unit on the feeder's kVA base and stored energy is in per-unit hours.

use std::f64::consts::FRAC_PI_4;

use super::{per_unit, scaled_inverter_kva, scaled_rating_kw, DecisionIndex, ScenarioConfig, ScenarioData, Symbol, VarKey};
use crate::feeder::{octagon_inner_factor, DerIx, DerKind, FeederModel};
use crate::milp::{LinearConstraint, Sense, VarId};

/// Half-plane normals of the capability octagon, with exact zeros on the axes.
pub fn octagon_normals() -> [(f64, f64); 8] {
    let snap = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    std::array::from_fn(|k| {
        let angle = k as f64 * FRAC_PI_4;
        (snap(angle.cos()), snap(angle.sin()))
    })
}

/// `cos(kπ/4)·P + sin(kπ/4)·Q ≤ S·cos(π/8)` for k = 0..8, where P is the sum of `p` terms.
fn octagon(rows: &mut Vec<LinearConstraint>, name: &str, p: &[(VarId, f64)], q: VarId, rating: f64) {
    let rhs = rating * octagon_inner_factor();
    for (k, (c, s)) in octagon_normals().into_iter().enumerate() {
        let terms = p.iter().map(|&(v, w)| (v, c * w)).chain([(q, s)]);
        rows.push(LinearConstraint::new(format!("{name}.oct{k}"), terms, Sense::Le, rhs));
    }
}

pub fn build_der_constraints(
    feeder: &FeederModel,
    scenario: &ScenarioConfig,
    data: &ScenarioData,
    index: &DecisionIndex,
) -> Vec<LinearConstraint> {
    let mut rows = Vec::new();
    let dt = scenario.dt_hours();
    for t in 1..=scenario.steps {
        let mut reserve: Vec<(VarId, f64)> = Vec::new();
        for (k, der) in feeder.ders.iter().enumerate() {
            let d = DerIx(k);
            let key = |s| index.id(VarKey::der(s, d, t));
            let status = index.id(VarKey::ulsg(feeder.lsg_of(der.node), t));
            let rating = per_unit(feeder, scaled_inverter_kva(feeder, scenario, d));
            let rsv = key(Symbol::Rsv);
            reserve.push((rsv, 1.0));
            let tag = format!("{}.{t}", d.ordinal());
            match der.kind {
                DerKind::PvFarm => {
                    let (p, q) = (key(Symbol::Ppv), key(Symbol::Qpv));
                    let avail = per_unit(feeder, data.pv_available(d, t));
                    rows.push(LinearConstraint::new(format!("pvavail.{tag}"), [(p, 1.0), (status, -avail)], Sense::Le, 0.0));
                    rows.push(LinearConstraint::new(format!("pvq.{tag}"), [(q, 1.0), (status, -rating)], Sense::Le, 0.0));
                    octagon(&mut rows, &format!("pv.{tag}"), &[(p, 1.0)], q, rating);
                    rows.push(LinearConstraint::new(
                        format!("rsvpv.{tag}"),
                        [(rsv, 1.0), (p, 1.0), (status, -avail)],
                        Sense::Le,
                        0.0,
                    ));
                }
                DerKind::Bess(spec) => {
                    let (ch, dis, q) = (key(Symbol::Pch), key(Symbol::Pdis), key(Symbol::Qbs));
                    let (uch, udis, soc) = (key(Symbol::Uch), key(Symbol::Udis), key(Symbol::Soc));
                    let eta = spec.efficiency;
                    let (soc_min, soc_init) = (per_unit(feeder, spec.soc_min_kwh()), per_unit(feeder, spec.soc_init_kwh()));
                    rows.push(LinearConstraint::new(format!("bsmode.{tag}"), [(uch, 1.0), (udis, 1.0), (status, -1.0)], Sense::Le, 0.0));
                    rows.push(LinearConstraint::new(format!("bsch.{tag}"), [(ch, 1.0), (uch, -per_unit(feeder, spec.charge_kw_max))], Sense::Le, 0.0));
                    rows.push(LinearConstraint::new(format!("bsdis.{tag}"), [(dis, 1.0), (udis, -per_unit(feeder, spec.discharge_kw_max))], Sense::Le, 0.0));
                    rows.push(LinearConstraint::new(format!("bsq.{tag}"), [(q, 1.0), (status, -rating)], Sense::Le, 0.0));
                    octagon(&mut rows, &format!("bs.{tag}"), &[(dis, 1.0), (ch, -1.0)], q, rating);
                    // SOC_t − SOC_{t−1} − η·Δt·P_ch + Δt/η·P_dis = 0
                    let mut dynamics = vec![(soc, 1.0), (ch, -eta * dt), (dis, dt / eta)];
                    let mut soc_rhs = 0.0;
                    let mut energy_terms = vec![(rsv, 1.0), (dis, 1.0), (ch, -1.0)];
                    let mut energy_rhs = -eta * soc_min / dt;
                    if t == 1 {
                        soc_rhs = soc_init;
                        energy_rhs += eta * soc_init / dt;
                    } else {
                        let previous = index.id(VarKey::der(Symbol::Soc, d, t - 1));
                        dynamics.push((previous, -1.0));
                        energy_terms.push((previous, -eta / dt));
                    }
                    rows.push(LinearConstraint::new(format!("soc.{tag}"), dynamics, Sense::Eq, soc_rhs));
                    rows.push(LinearConstraint::new(
                        format!("rsvbp.{tag}"),
                        [(rsv, 1.0), (dis, 1.0), (ch, -1.0), (status, -per_unit(feeder, spec.discharge_kw_max))],
                        Sense::Le,
                        0.0,
                    ));
                    rows.push(LinearConstraint::new(format!("rsvbe.{tag}"), energy_terms, Sense::Le, energy_rhs));
                }
                DerKind::Dg { min_output_frac } => {
                    let (p, q, u) = (key(Symbol::Pdg), key(Symbol::Qdg), key(Symbol::Udg));
                    let rated = per_unit(feeder, scaled_rating_kw(feeder, scenario, d));
                    rows.push(LinearConstraint::new(format!("dgon.{tag}"), [(u, 1.0), (status, -1.0)], Sense::Le, 0.0));
                    rows.push(LinearConstraint::new(format!("dgmin.{tag}"), [(p, 1.0), (u, -min_output_frac * rated)], Sense::Ge, 0.0));
                    rows.push(LinearConstraint::new(format!("dgmax.{tag}"), [(p, 1.0), (u, -rated)], Sense::Le, 0.0));
                    rows.push(LinearConstraint::new(format!("dgq.{tag}"), [(q, 1.0), (u, -rating)], Sense::Le, 0.0));
                    octagon(&mut rows, &format!("dg.{tag}"), &[(p, 1.0)], q, rating);
                    rows.push(LinearConstraint::new(format!("rsvdg.{tag}"), [(rsv, 1.0), (p, 1.0), (u, -rated)], Sense::Le, 0.0));
                }
            }
        }
        // Σ headroom ≥ fraction · Σ served load
        for m in 0..feeder.lsgs.len() {
            let m = crate::feeder::LsgIx(m);
            let load = per_unit(feeder, data.lsg_load(feeder, m, t));
            if load != 0.0 {
                reserve.push((index.id(VarKey::ulsg(m, t)), -scenario.reserve_fraction * load));
            }
        }
        rows.push(LinearConstraint::new(format!("reserve.{t}"), reserve, Sense::Ge, 0.0));
    }
    rows
}
