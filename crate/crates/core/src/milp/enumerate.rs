//! Exhaustive enumeration of the feasible points of small pure-binary models.
//!
//! [`enumerate_binary_points`] is a depth-first search with activity-bound propagation that
//! never calls a solver. [`enumerate_with_cuts`] asks a backend for one point at a time and
//! excludes each projected point with a no-good cut.

use std::collections::BTreeSet;

use super::{solve, LinearConstraint, MilpError, MilpModel, Sense, SolveParams, SolveStatus, SolverBackend, VarId, VarKind};

const EPS: f64 = 1e-9;

struct Search<'a> {
    rows: &'a [LinearConstraint],
    cols: Vec<Vec<(usize, f64)>>,
    value: Vec<Option<bool>>,
    min_act: Vec<f64>,
    max_act: Vec<f64>,
    trail: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel) -> Self {
        let rows = model.constraints();
        let mut cols = vec![Vec::new(); model.variables().len()];
        let mut min_act = vec![0.0; rows.len()];
        let mut max_act = vec![0.0; rows.len()];
        for (r, row) in rows.iter().enumerate() {
            for &(v, c) in &row.terms {
                cols[v.0].push((r, c));
                if c > 0.0 {
                    max_act[r] += c;
                } else {
                    min_act[r] += c;
                }
            }
        }
        Self { rows, cols, value: vec![None; model.variables().len()], min_act, max_act, trail: Vec::new() }
    }

    fn shift(&mut self, v: usize, on: bool, sign: f64) {
        for &(r, c) in &self.cols[v] {
            match (on, c > 0.0) {
                (true, true) => self.min_act[r] += sign * c,
                (false, true) => self.max_act[r] -= sign * c,
                (true, false) => self.max_act[r] += sign * c,
                (false, false) => self.min_act[r] -= sign * c,
            }
        }
    }

    fn assign(&mut self, v: usize, on: bool) {
        self.value[v] = Some(on);
        self.shift(v, on, 1.0);
        self.trail.push(v);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            let on = self.value[v].take().unwrap();
            self.shift(v, on, -1.0);
        }
    }

    fn violated(&self, r: usize) -> bool {
        let row = &self.rows[r];
        let lo_bad = self.max_act[r] < row.rhs - EPS;
        let hi_bad = self.min_act[r] > row.rhs + EPS;
        match row.sense {
            Sense::Le => hi_bad,
            Sense::Ge => lo_bad,
            Sense::Eq => lo_bad || hi_bad,
        }
    }

    /// Assign `v` and propagate to a fixpoint; false on conflict.
    fn assign_and_propagate(&mut self, v: usize, on: bool) -> bool {
        self.assign(v, on);
        let mut queue: Vec<usize> = self.cols[v].iter().map(|&(r, _)| r).collect();
        while let Some(r) = queue.pop() {
            if self.violated(r) {
                return false;
            }
            let row = &self.rows[r];
            let mut forced = Vec::new();
            for &(u, c) in &row.terms {
                if self.value[u.0].is_some() {
                    continue;
                }
                let upper_tight = matches!(row.sense, Sense::Le | Sense::Eq) && self.min_act[r] + c.abs() > row.rhs + EPS;
                let lower_tight = matches!(row.sense, Sense::Ge | Sense::Eq) && self.max_act[r] - c.abs() < row.rhs - EPS;
                // the value that would move the binding bound is excluded
                if upper_tight {
                    forced.push((u.0, c < 0.0));
                } else if lower_tight {
                    forced.push((u.0, c > 0.0));
                }
            }
            for (u, on) in forced {
                match self.value[u] {
                    Some(current) if current != on => return false,
                    Some(_) => {}
                    None => {
                        self.assign(u, on);
                        queue.extend(self.cols[u].iter().map(|&(r, _)| r));
                    }
                }
            }
        }
        true
    }

    fn dfs(&mut self, projection: &[VarId], found: &mut BTreeSet<Vec<bool>>, points: &mut usize, limit: usize) -> Result<(), MilpError> {
        let Some(next) = self.value.iter().position(Option::is_none) else {
            *points += 1;
            if *points > limit {
                return Err(MilpError::EnumerationLimit(limit));
            }
            found.insert(projection.iter().map(|v| self.value[v.0] == Some(true)).collect());
            return Ok(());
        };
        for on in [false, true] {
            let mark = self.trail.len();
            if self.assign_and_propagate(next, on) {
                self.dfs(projection, found, points, limit)?;
            }
            self.undo_to(mark);
        }
        Ok(())
    }
}

/// Every feasible point of a pure-binary `model`, projected onto `projection`.
///
/// Fails with [`MilpError::EnumerationLimit`] once more than `limit` full points are found.
pub fn enumerate_binary_points(model: &MilpModel, projection: &[VarId], limit: usize) -> Result<BTreeSet<Vec<bool>>, MilpError> {
    if let Some(v) = model.variables().iter().find(|v| v.kind != VarKind::Binary) {
        return Err(MilpError::NotPureBinary(v.name.clone()));
    }
    let mut search = Search::new(model);
    // rows without free variables must hold as written
    if (0..search.rows.len()).any(|r| search.violated(r)) {
        return Ok(BTreeSet::new());
    }
    // variables whose bounds pin them to one value
    for (k, v) in model.variables().iter().enumerate() {
        let pinned = if v.lower > 0.5 {
            true
        } else if v.upper < 0.5 {
            false
        } else {
            continue;
        };
        match search.value[k] {
            Some(current) if current != pinned => return Ok(BTreeSet::new()),
            Some(_) => {}
            None => {
                if !search.assign_and_propagate(k, pinned) {
                    return Ok(BTreeSet::new());
                }
            }
        }
    }
    let mut found = BTreeSet::new();
    let mut points = 0;
    search.dfs(projection, &mut found, &mut points, limit)?;
    Ok(found)
}

/// Projected feasible points found one solve at a time, each excluded by a no-good cut.
///
/// Works on any model whose projection variables are binary; at most `limit` points.
pub fn enumerate_with_cuts(
    model: &MilpModel,
    projection: &[VarId],
    backend: &dyn SolverBackend,
    params: &SolveParams,
    limit: usize,
) -> Result<BTreeSet<Vec<bool>>, MilpError> {
    if let Some(v) = projection.iter().map(|&v| model.variable(v)).find(|v| v.kind != VarKind::Binary) {
        return Err(MilpError::NotPureBinary(v.name.clone()));
    }
    let mut work = model.clone();
    work.clear_objective();
    let mut found = BTreeSet::new();
    loop {
        let sol = solve(&work, backend, params);
        match sol.status {
            SolveStatus::Infeasible => return Ok(found),
            SolveStatus::Error => return Err(MilpError::Backend(sol.diagnostic.unwrap_or_default())),
            _ => {}
        }
        let point: Vec<bool> = projection.iter().map(|&v| sol.value(&work.variable(v).name) == Some(1.0)).collect();
        // Σ_{on}(1 − x) + Σ_{off} x ≥ 1
        let ones = point.iter().filter(|&&b| b).count() as f64;
        let terms = projection.iter().zip(&point).map(|(&v, &on)| (v, if on { -1.0 } else { 1.0 }));
        let cut = LinearConstraint::new(format!("nogood~{}", found.len()), terms, Sense::Ge, 1.0 - ones);
        work.add_constraint(cut)?;
        if !found.insert(point) {
            return Err(MilpError::Backend("backend returned an excluded point".into()));
        }
        if found.len() > limit {
            return Err(MilpError::EnumerationLimit(limit));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::HighsBackend;
    use proptest::prelude::*;

    fn brute_force(model: &MilpModel) -> BTreeSet<Vec<bool>> {
        let n = model.variables().len();
        (0u32..1 << n)
            .map(|mask| (0..n).map(|k| mask >> k & 1 == 1).collect::<Vec<_>>())
            .filter(|x| {
                let vals: Vec<f64> = x.iter().map(|&b| f64::from(u8::from(b))).collect();
                model.constraints().iter().all(|row| row.excess(row.activity(&vals)) <= EPS)
            })
            .collect()
    }

    fn random_model(n: usize, coeffs: &[Vec<i8>], senses: &[u8], rhs: &[i8]) -> MilpModel {
        let mut m = MilpModel::new("rand");
        let vars: Vec<VarId> = (0..n).map(|k| m.add_binary(format!("x{k}")).unwrap()).collect();
        for (r, row) in coeffs.iter().enumerate() {
            let sense = [Sense::Le, Sense::Ge, Sense::Eq][senses[r] as usize % 3];
            let terms = row.iter().zip(&vars).map(|(&c, &v)| (v, f64::from(c)));
            m.add_constraint(LinearConstraint::new(format!("r{r}"), terms, sense, f64::from(rhs[r]))).unwrap();
        }
        m
    }

    #[test]
    fn cardinality_and_implication() {
        let mut m = MilpModel::new("t");
        let x: Vec<VarId> = (0..4).map(|k| m.add_binary(format!("x{k}")).unwrap()).collect();
        m.add_constraint(LinearConstraint::new("card", x.iter().map(|&v| (v, 1.0)), Sense::Eq, 2.0)).unwrap();
        m.add_constraint(LinearConstraint::new("imp", [(x[0], 1.0), (x[1], -1.0)], Sense::Le, 0.0)).unwrap();
        let all = enumerate_binary_points(&m, &x, 100).unwrap();
        assert_eq!(all, brute_force(&m));
        assert_eq!(all.len(), 4);
        let first_two = enumerate_binary_points(&m, &x[..2], 100).unwrap();
        assert_eq!(first_two.len(), 3);
    }

    #[test]
    fn limit_is_enforced() {
        let mut m = MilpModel::new("t");
        for k in 0..5 {
            m.add_binary(format!("x{k}")).unwrap();
        }
        assert!(matches!(enumerate_binary_points(&m, &[], 10), Err(MilpError::EnumerationLimit(10))));
    }

    #[test]
    fn cuts_agree_with_search() {
        let mut m = MilpModel::new("t");
        let x: Vec<VarId> = (0..4).map(|k| m.add_binary(format!("x{k}")).unwrap()).collect();
        m.add_constraint(LinearConstraint::new("knap", [(x[0], 3.0), (x[1], 2.0), (x[2], 2.0), (x[3], 1.0)], Sense::Le, 4.0)).unwrap();
        let by_search = enumerate_binary_points(&m, &x, 100).unwrap();
        let by_cuts = enumerate_with_cuts(&m, &x, &HighsBackend, &SolveParams::default(), 100).unwrap();
        assert_eq!(by_search, by_cuts);
        assert_eq!(by_search, brute_force(&m));
    }

    proptest! {
        #[test]
        fn search_matches_brute_force(
            n in 1usize..7,
            rows in prop::collection::vec((prop::collection::vec(-3i8..4, 7), 0u8..3, -3i8..5), 0..5),
        ) {
            let coeffs: Vec<Vec<i8>> = rows.iter().map(|(c, _, _)| c[..n].to_vec()).collect();
            let senses: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let rhs: Vec<i8> = rows.iter().map(|r| r.2).collect();
            let m = random_model(n, &coeffs, &senses, &rhs);
            let proj: Vec<VarId> = (0..n).map(VarId).collect();
            prop_assert_eq!(enumerate_binary_points(&m, &proj, 1 << 10).unwrap(), brute_force(&m));
        }
    }
}
