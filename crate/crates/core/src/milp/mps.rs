//! Free-format MPS emission.
//!
//! Rows and columns are written in insertion order and numbers use Rust's shortest
//! round-trip formatting, so identical models give identical bytes. Names longer than
//! [`MAX_NAME_LEN`] or containing characters free MPS cannot carry are shortened to a unique
//! replacement; the mapping is returned alongside the text.

use std::collections::HashSet;
use std::fmt::Write;

use super::{MilpModel, Sense, VarKind};

pub const MAX_NAME_LEN: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpsDocument {
    pub text: String,
    /// `(emitted name, original name)` for every shortened row or column.
    pub name_map: Vec<(String, String)>,
    /// Emitted column names in variable order.
    pub column_names: Vec<String>,
}

impl MpsDocument {
    /// Sidecar listing `emitted original` pairs, one per line.
    pub fn sidecar(&self) -> String {
        let mut s = String::new();
        for (short, long) in &self.name_map {
            let _ = writeln!(s, "{short}\t{long}");
        }
        s
    }
}

fn is_representable(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= MAX_NAME_LEN
        && !name.starts_with('$')
        && name.bytes().all(|b| b.is_ascii_graphic())
}

struct Namer<'a> {
    reserved: HashSet<&'a str>,
    generated: HashSet<String>,
    map: Vec<(String, String)>,
    counter: usize,
}

impl Namer<'_> {
    fn emit(&mut self, name: &str) -> String {
        if is_representable(name) {
            return name.to_string();
        }
        let stem: String = name
            .chars()
            .filter(char::is_ascii_graphic)
            .filter(|&c| c != '$')
            .take(MAX_NAME_LEN - 16)
            .collect();
        loop {
            self.counter += 1;
            let candidate = format!("{stem}~{}", self.counter);
            if !self.reserved.contains(candidate.as_str()) && self.generated.insert(candidate.clone()) {
                self.map.push((candidate.clone(), name.to_string()));
                return candidate;
            }
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Render `model` as a free-format MPS document.
pub fn emit_model_file(model: &MilpModel) -> MpsDocument {
    // Representable originals are kept verbatim; replacements must avoid all of them.
    let reserved: HashSet<&str> = model
        .variables()
        .iter()
        .map(|v| v.name.as_str())
        .chain(model.constraints().iter().map(|c| c.name.as_str()))
        .filter(|n| is_representable(n))
        .collect();
    let mut objective_name = "OBJ".to_string();
    let mut k = 0;
    while reserved.contains(objective_name.as_str()) {
        k += 1;
        objective_name = format!("OBJ_{k}");
    }
    let mut namer = Namer { reserved, generated: HashSet::from([objective_name.clone()]), map: Vec::new(), counter: 0 };
    let row_names: Vec<String> = model.constraints().iter().map(|c| namer.emit(&c.name)).collect();
    let col_names: Vec<String> = model.variables().iter().map(|v| namer.emit(&v.name)).collect();

    // column-wise view of the rows
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables().len()];
    for (r, row) in model.constraints().iter().enumerate() {
        for &(v, c) in &row.terms {
            columns[v.0].push((r, c));
        }
    }
    let mut objective = vec![0.0; model.variables().len()];
    for (v, c) in model.objective() {
        objective[v.0] = c;
    }

    let mut out = String::new();
    let title = if is_representable(&model.name) { model.name.as_str() } else { "MODEL" };
    let _ = writeln!(out, "NAME {title}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {objective_name}");
    for (row, name) in model.constraints().iter().zip(&row_names) {
        let tag = match row.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        let _ = writeln!(out, " {tag} {name}");
    }

    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    let mut marker = 0;
    for (k, var) in model.variables().iter().enumerate() {
        let integer = var.kind == VarKind::Binary;
        if integer != in_integer_block {
            marker += 1;
            let tag = if integer { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    M{marker} 'MARKER' '{tag}'");
            in_integer_block = integer;
        }
        let col = &col_names[k];
        if objective[k] != 0.0 || columns[k].is_empty() {
            let _ = writeln!(out, "    {col} {objective_name} {}", num(objective[k]));
        }
        for &(r, c) in &columns[k] {
            let _ = writeln!(out, "    {col} {} {}", row_names[r], num(c));
        }
    }
    if in_integer_block {
        marker += 1;
        let _ = writeln!(out, "    M{marker} 'MARKER' 'INTEND'");
    }

    out.push_str("RHS\n");
    for (row, name) in model.constraints().iter().zip(&row_names) {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {name} {}", num(row.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (var, col) in model.variables().iter().zip(&col_names) {
        if var.kind == VarKind::Binary {
            let _ = writeln!(out, " BV BND {col}");
            continue;
        }
        let (lo, up) = (var.lower, var.upper);
        if lo == up {
            let _ = writeln!(out, " FX BND {col} {}", num(lo));
        } else if lo == f64::NEG_INFINITY && up == f64::INFINITY {
            let _ = writeln!(out, " FR BND {col}");
        } else {
            if lo == f64::NEG_INFINITY {
                let _ = writeln!(out, " MI BND {col}");
            } else if lo != 0.0 {
                let _ = writeln!(out, " LO BND {col} {}", num(lo));
            }
            if up != f64::INFINITY {
                let _ = writeln!(out, " UP BND {col} {}", num(up));
            }
        }
    }
    out.push_str("ENDATA\n");

    MpsDocument { text: out, name_map: namer.map, column_names: col_names }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::LinearConstraint;

    fn minimal() -> MilpModel {
        let mut m = MilpModel::new("minimal");
        let x = m.add_binary("x").unwrap();
        m.add_constraint(LinearConstraint::new("c1", [(x, 1.0)], Sense::Le, 1.0)).unwrap();
        m
    }

    #[test]
    fn minimal_model_text() {
        let doc = emit_model_file(&minimal());
        let expected = "NAME minimal\nROWS\n N OBJ\n L c1\nCOLUMNS\n    M1 'MARKER' 'INTORG'\n    x c1 1.0\n    M2 'MARKER' 'INTEND'\nRHS\n    RHS c1 1.0\nBOUNDS\n BV BND x\nENDATA\n";
        assert_eq!(doc.text, expected);
        assert!(doc.name_map.is_empty());
    }

    #[test]
    fn emission_is_deterministic() {
        assert_eq!(emit_model_file(&minimal()).text, emit_model_file(&minimal()).text);
    }

    #[test]
    fn long_and_spaced_names_are_shortened_uniquely() {
        let mut m = MilpModel::new("names");
        let long = "v".repeat(300);
        let a = m.add_continuous(long.clone(), 0.0, 1.0).unwrap();
        let b = m.add_continuous("has space", -1.0, 1.0).unwrap();
        let c = m.add_continuous("has~1", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_constraint(LinearConstraint::new("r", [(a, 1.0), (b, 1.0), (c, 1.0)], Sense::Eq, 0.5)).unwrap();
        let doc = emit_model_file(&m);
        assert_eq!(doc.name_map.len(), 2);
        let shorts: HashSet<_> = doc.column_names.iter().collect();
        assert_eq!(shorts.len(), 3);
        assert!(doc.column_names.iter().all(|n| is_representable(n)));
        assert!(doc.sidecar().contains(&long));
        assert!(doc.text.contains(" FR BND has~1"));
        assert!(doc.text.contains(" LO BND hasspace~"));
    }

    #[test]
    fn objective_row_avoids_name_clash() {
        let mut m = MilpModel::new("clash");
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        m.add_constraint(LinearConstraint::new("OBJ", [(x, 1.0)], Sense::Ge, 0.0)).unwrap();
        m.add_objective_term(x, 1.0);
        let doc = emit_model_file(&m);
        assert!(doc.text.contains(" N OBJ_1\n"));
        assert!(doc.text.contains("    x OBJ_1 1.0\n"));
    }
}
