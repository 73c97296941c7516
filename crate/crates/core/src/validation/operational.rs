use std::f64::consts::PI;

use super::{Report, ValidationError};
use crate::feeder::{DerIx, DerKind, FeederModel, LsgIx, LsgKind, NodeIx, SwitchIx};
use crate::formulation::{flow_limit, scaled_inverter_kva, scaled_rating_kw, ScenarioConfig, ScenarioData, Symbol, VarKey};
use crate::milp::{Solution, FEASIBILITY_TOLERANCE};

const TOL: f64 = FEASIBILITY_TOLERANCE;

struct Values<'a> {
    solution: &'a Solution,
    base_kva: f64,
}

impl Values<'_> {
    fn raw(&self, key: VarKey) -> Result<f64, ValidationError> {
        let name = key.name();
        self.solution.value(&name).ok_or(ValidationError::MissingValue(name))
    }

    /// kW, kvar or kWh.
    fn kw(&self, symbol: Symbol, element: usize, t: usize) -> Result<f64, ValidationError> {
        Ok(self.raw(VarKey::new(symbol, element, t))? * self.base_kva)
    }

    fn on(&self, key: VarKey) -> Result<bool, ValidationError> {
        Ok(self.raw(key)? > 0.5)
    }
}

/// `u ≤ S·cos(22.5°)` along the eight directions `k·45°`, with `q ≥ 0`.
fn inside_octagon(p: f64, q: f64, rating_kva: f64, tol: f64) -> bool {
    let apothem = rating_kva * (PI / 8.0).cos();
    q >= -tol && (0..8).all(|k| {
        let a = f64::from(k) * PI / 4.0;
        a.cos() * p + a.sin() * q <= apothem + tol
    })
}

/// Recompute every operating rule from the raw solution values.
///
/// Power tolerances are `1e-6` per unit of the feeder base, voltage tolerances `1e-6` per
/// unit and storage tolerances `1e-6` kWh.
pub fn check_operational(
    solution: &Solution,
    feeder: &FeederModel,
    scenario: &ScenarioConfig,
    data: &ScenarioData,
) -> Result<Report, ValidationError> {
    let mut r = Report::default();
    let x = Values { solution, base_kva: feeder.base_kva };
    let ptol = TOL * feeder.base_kva;
    let dt = scenario.dt_hours();
    let steps = scenario.steps;
    let z_base = feeder.base_kv * feeder.base_kv * 1000.0 / feeder.base_kva;

    let mut status = vec![vec![false; steps + 1]; feeder.lsgs.len()];
    for (m, row) in status.iter_mut().enumerate() {
        for t in 1..=steps {
            row[t] = x.on(VarKey::ulsg(LsgIx(m), t))?;
        }
    }
    let served = |m: LsgIx, t: usize| status[m.0][t];

    for t in 1..=steps {
        let ts = Some(t);
        // node balance in kW and kvar
        let mut p_net = vec![0.0; feeder.nodes.len()];
        let mut q_net = vec![0.0; feeder.nodes.len()];
        for (b, br) in feeder.branches.iter().enumerate() {
            let (p, q) = (x.kw(Symbol::Pbr, b, t)?, x.kw(Symbol::Qbr, b, t)?);
            p_net[br.from.0] -= p;
            p_net[br.to.0] += p;
            q_net[br.from.0] -= q;
            q_net[br.to.0] += q;
            let on = served(br.lsg, t);
            let cap = if on { flow_limit(scenario, br.capacity_kva) } else { 0.0 };
            r.check(p.abs() <= cap + ptol && q.abs() <= cap + ptol, "flow-limit", ts, br.id.clone(), || {
                format!("flow ({p:.6}, {q:.6}) exceeds {cap} kVA")
            });
            if on {
                let (vf, vt) = (x.raw(VarKey::voltage(br.from, t))?, x.raw(VarKey::voltage(br.to, t))?);
                let drop = 2.0 * (br.r_ohm * p + br.x_ohm * q) / (z_base * feeder.base_kva);
                let err = vt - (vf - drop);
                r.check(err.abs() <= TOL, "drop", ts, br.id.clone(), || format!("drop residual {err:e}"));
            }
        }
        for (n, sw) in feeder.switches.iter().enumerate() {
            let (p, q) = (x.kw(Symbol::Psw, n, t)?, x.kw(Symbol::Qsw, n, t)?);
            p_net[sw.from_node.0] -= p;
            p_net[sw.to_node.0] += p;
            q_net[sw.from_node.0] -= q;
            q_net[sw.to_node.0] += q;
            let closed = x.on(VarKey::usw(SwitchIx(n), t))?;
            let cap = if closed { flow_limit(scenario, sw.capacity_kva) } else { 0.0 };
            r.check(p.abs() <= cap + ptol && q.abs() <= cap + ptol, "flow-limit", ts, sw.id.clone(), || {
                format!("flow ({p:.6}, {q:.6}) exceeds {cap} kVA")
            });
            if closed {
                let (vf, vt) = (x.raw(VarKey::voltage(sw.from_node, t))?, x.raw(VarKey::voltage(sw.to_node, t))?);
                let drop = 2.0 * (sw.r_ohm * p + sw.x_ohm * q) / (z_base * feeder.base_kva);
                let err = vt - (vf - drop);
                r.check(err.abs() <= TOL, "drop", ts, sw.id.clone(), || format!("drop residual {err:e}"));
            }
        }

        let mut headroom = 0.0;
        for (k, der) in feeder.ders.iter().enumerate() {
            let d = DerIx(k);
            let on = served(feeder.lsg_of(der.node), t);
            let i = der.node.0;
            let rating = scaled_inverter_kva(feeder, scenario, d);
            match der.kind {
                DerKind::PvFarm => {
                    let (p, q) = (x.kw(Symbol::Ppv, k, t)?, x.kw(Symbol::Qpv, k, t)?);
                    let avail = if on { data.pv_available(d, t) } else { 0.0 };
                    p_net[i] += p;
                    q_net[i] += q;
                    r.check(p >= -ptol && p <= avail + ptol, "pv-limit", ts, der.id.clone(), || {
                        format!("output {p:.6} kW outside [0, {avail:.6}]")
                    });
                    r.check(q <= if on { rating } else { 0.0 } + ptol, "pv-limit", ts, der.id.clone(), || {
                        format!("reactive output {q:.6} kvar while offline or above rating")
                    });
                    r.check(inside_octagon(p, q, rating, ptol), "inverter", ts, der.id.clone(), || {
                        format!("({p:.3}, {q:.3}) outside the {rating:.3} kVA polygon")
                    });
                    headroom += (avail - p).max(0.0);
                }
                DerKind::Bess(spec) => {
                    let (ch, dis, q) = (x.kw(Symbol::Pch, k, t)?, x.kw(Symbol::Pdis, k, t)?, x.kw(Symbol::Qbs, k, t)?);
                    let (uch, udis) = (x.on(VarKey::der(Symbol::Uch, d, t))?, x.on(VarKey::der(Symbol::Udis, d, t))?);
                    p_net[i] += dis - ch;
                    q_net[i] += q;
                    r.check(!(uch && udis) && (on || !(uch || udis)), "bess-mode", ts, der.id.clone(), || {
                        "charging and discharging together, or active while offline".to_string()
                    });
                    let ch_max = if uch { spec.charge_kw_max } else { 0.0 };
                    let dis_max = if udis { spec.discharge_kw_max } else { 0.0 };
                    r.check(ch >= -ptol && ch <= ch_max + ptol && dis >= -ptol && dis <= dis_max + ptol, "bess-limit", ts, der.id.clone(), || {
                        format!("charge {ch:.6} / discharge {dis:.6} kW outside limits")
                    });
                    r.check(q <= if on { rating } else { 0.0 } + ptol, "bess-limit", ts, der.id.clone(), || {
                        format!("reactive output {q:.6} kvar while offline or above rating")
                    });
                    r.check(inside_octagon(dis - ch, q, rating, ptol), "inverter", ts, der.id.clone(), || {
                        format!("({:.3}, {q:.3}) outside the {rating:.3} kVA polygon", dis - ch)
                    });
                    let previous = if t == 1 { spec.soc_init_kwh() } else { x.kw(Symbol::Soc, k, t - 1)? };
                    let soc = x.kw(Symbol::Soc, k, t)?;
                    let expected = previous + (spec.efficiency * ch - dis / spec.efficiency) * dt;
                    r.check((soc - expected).abs() <= TOL, "soc-recursion", ts, der.id.clone(), || {
                        format!("SOC {soc:.9} kWh, recursion gives {expected:.9} kWh")
                    });
                    r.check(soc >= spec.soc_min_kwh() - TOL, "soc-floor", ts, der.id.clone(), || {
                        format!("SOC below {:.0}% ({soc:.6} kWh < {:.6} kWh)", spec.soc_min_frac * 100.0, spec.soc_min_kwh())
                    });
                    r.check(soc <= spec.soc_max_kwh() + TOL, "soc-ceiling", ts, der.id.clone(), || {
                        format!("SOC above {:.0}% ({soc:.6} kWh)", spec.soc_max_frac * 100.0)
                    });
                    if on {
                        let power = spec.discharge_kw_max - (dis - ch);
                        let energy = spec.efficiency * (previous - spec.soc_min_kwh()) / dt - (dis - ch);
                        headroom += power.min(energy).max(0.0);
                    }
                }
                DerKind::Dg { min_output_frac } => {
                    let (p, q) = (x.kw(Symbol::Pdg, k, t)?, x.kw(Symbol::Qdg, k, t)?);
                    let u = x.on(VarKey::der(Symbol::Udg, d, t))?;
                    let rated = scaled_rating_kw(feeder, scenario, d);
                    p_net[i] += p;
                    q_net[i] += q;
                    r.check(on || !u, "dg-limit", ts, der.id.clone(), || "committed while its LSG is off".to_string());
                    let (lo, hi) = if u { (min_output_frac * rated, rated) } else { (0.0, 0.0) };
                    r.check(p >= lo - ptol && p <= hi + ptol, "dg-limit", ts, der.id.clone(), || {
                        format!("output {p:.6} kW outside [{lo}, {hi}]")
                    });
                    r.check(q <= if u { rating } else { 0.0 } + ptol, "dg-limit", ts, der.id.clone(), || {
                        format!("reactive output {q:.6} kvar while off or above rating")
                    });
                    r.check(inside_octagon(p, q, rating, ptol), "inverter", ts, der.id.clone(), || {
                        format!("({p:.3}, {q:.3}) outside the {rating:.3} kVA polygon")
                    });
                    headroom += hi - p;
                }
            }
        }

        let mut served_load = 0.0;
        for (i, node) in feeder.nodes.iter().enumerate() {
            let on = served(node.lsg, t);
            let load = if on { data.load(NodeIx(i), t) } else { 0.0 };
            served_load += load;
            let (ep, eq) = (p_net[i] - load, q_net[i] - load * node.q_per_p);
            r.check(ep.abs() <= ptol && eq.abs() <= ptol, "balance", ts, node.id.clone(), || {
                format!("mismatch ({ep:e} kW, {eq:e} kvar)")
            });
            if on {
                let v = x.raw(VarKey::voltage(NodeIx(i), t))?.max(0.0).sqrt();
                r.check(v >= scenario.v_min_pu - TOL && v <= scenario.v_max_pu + TOL, "voltage", ts, node.id.clone(), || {
                    format!("voltage {v:.6} p.u. outside [{}, {}]", scenario.v_min_pu, scenario.v_max_pu)
                });
            }
        }
        let need = scenario.reserve_fraction * served_load;
        r.check(headroom >= need - ptol, "reserve", ts, "system", || {
            format!("headroom {headroom:.6} kW below {need:.6} kW")
        });

        for &m in feeder.root_candidates() {
            let lsg = feeder.lsg(m);
            let root = x.on(VarKey::ur(m, t))?;
            if lsg.kind == LsgKind::PvPlant && served(m, t) {
                r.check(root, "pv-root", ts, lsg.id.clone(), || "served PV plant is not a root".to_string());
            }
            if root {
                if let Some(anchor) = feeder.anchor_node(m) {
                    let v = x.raw(VarKey::voltage(anchor, t))?.max(0.0).sqrt();
                    r.check((v - scenario.v_rate_pu).abs() <= TOL, "anchor", ts, lsg.id.clone(), || {
                        format!("root voltage {v:.9} p.u. instead of {}", scenario.v_rate_pu)
                    });
                }
            }
        }
    }

    let k = scenario.k_msd().map_err(|e| ValidationError::Inconsistent { t: 0, message: e.to_string() })?;
    for (m, row) in status.iter().enumerate() {
        let lsg = &feeder.lsgs[m];
        let mut t = 1;
        while t <= steps {
            if !row[t] {
                t += 1;
                continue;
            }
            let start = t;
            while t <= steps && row[t] {
                t += 1;
            }
            let length = t - start;
            let need = k.min(steps - start + 1);
            r.check(length >= need, "msd", Some(start), lsg.id.clone(), || {
                format!("on for {length} steps, minimum {need}")
            });
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::assemble_model;
    use crate::milp::{solve, HighsBackend, SolveParams, SolveStatus};

    fn setup() -> (FeederModel, ScenarioConfig, ScenarioData) {
        let f = FeederModel::from_json(
            &serde_json::json!({
                "base_kv": 12.66, "base_kva": 1000.0,
                "nodes": [{"id": "a"}, {"id": "b", "peak_kw": 300.0, "q_per_p": 0.3}],
                "branches": [{"id": "ab", "from": "a", "to": "b", "r_ohm": 0.5, "x_ohm": 0.4, "capacity_kva": 2000.0}],
                "lsgs": [{"id": "only", "nodes": ["a", "b"]}],
                "ders": [
                    {"id": "pv", "node": "a", "kind": "pv-farm", "rated_kw": 200.0},
                    {"id": "bess", "node": "a", "kind": "bess", "rated_kw": 400.0, "energy_kwh": 600.0}
                ]
            })
            .to_string(),
        )
        .unwrap();
        let s = ScenarioConfig::from_json(r#"{"start": "2021-07-15T11:00", "steps": 4, "msd_hours": 1.0}"#).unwrap();
        let mut data = ScenarioData::zeros(&f, 4);
        data.load_kw[1] = vec![300.0, 280.0, 320.0, 300.0];
        data.pv_kw[0] = Some(vec![150.0, 160.0, 170.0, 150.0]);
        (f, s, data)
    }

    fn solved() -> (FeederModel, ScenarioConfig, ScenarioData, Solution) {
        let (f, s, data) = setup();
        let form = assemble_model(&f, &s, &data).unwrap();
        let sol = solve(&form.model, &HighsBackend, &SolveParams { relative_gap: 0.0, ..SolveParams::default() });
        assert_eq!(sol.status, SolveStatus::Optimal);
        (f, s, data, sol)
    }

    #[test]
    fn solved_schedule_passes() {
        let (f, s, data, sol) = solved();
        let r = check_operational(&sol, &f, &s, &data).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.checks > 50);
    }

    #[test]
    fn all_off_passes() {
        let (f, s, data, mut sol) = solved();
        for (name, v) in sol.values.iter_mut() {
            *v = if name.starts_with("SOC.") { 0.6 } else { 0.0 };
        }
        let r = check_operational(&sol, &f, &s, &data).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn soc_floor_violation_is_reported() {
        let (f, s, data, mut sol) = solved();
        sol.values.insert(VarKey::new(Symbol::Soc, 1, 3).name(), 0.1);
        let r = check_operational(&sol, &f, &s, &data).unwrap();
        let v = r.with_code("soc-floor").next().expect("floor violation");
        assert!(v.message.starts_with("SOC below 20%"), "{}", v.message);
        assert!(r.with_code("soc-recursion").next().is_some());
    }

    #[test]
    fn short_run_breaks_msd() {
        let (f, s, data, mut sol) = solved();
        for t in 1..=4 {
            let on = if t == 2 { 1.0 } else { 0.0 };
            sol.values.insert(VarKey::ulsg(LsgIx(0), t).name(), on);
        }
        let r = check_operational(&sol, &f, &s, &data).unwrap();
        assert!(r.with_code("msd").next().is_some());
    }

    #[test]
    fn octagon_contains_its_apothem_only() {
        let apothem = (PI / 8.0).cos();
        assert!(inside_octagon(apothem, 0.0, 1.0, 1e-12));
        assert!(!inside_octagon(apothem + 1e-6, 0.0, 1.0, 1e-12));
        assert!(!inside_octagon(0.5, -0.01, 1.0, 1e-12));
    }
}
