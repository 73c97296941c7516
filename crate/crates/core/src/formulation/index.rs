//! Variable naming: `SYM.k.t` with one-based element index `k` and step `t`.
//!
//! Node and branch statuses have no variables of their own; they resolve to the owning LSG's
//! `ULSG`, and edge statuses resolve to the switch's `USW`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::feeder::{BranchIx, DerIx, FeederModel, LsgIx, NodeIx, SwitchIx};
use crate::milp::{MilpModel, Solution, VarId};

macro_rules! symbols {
    ($($(#[$meta:meta])* $variant:ident => $text:literal,)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Symbol {
            $($(#[$meta])* $variant,)*
        }

        impl Symbol {
            pub const ALL: &'static [Symbol] = &[$(Symbol::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Symbol::$variant => $text,)*
                }
            }
        }

        impl FromStr for Symbol {
            type Err = ();

            fn from_str(s: &str) -> Result<Self, ()> {
                match s {
                    $($text => Ok(Symbol::$variant),)*
                    _ => Err(()),
                }
            }
        }
    };
}

symbols! {
    Ulsg => "ULSG",
    Usw => "USW",
    Ur => "UR",
    /// β from the switch's `from` LSG (parent) to its `to` LSG.
    BetaFwd => "BF",
    BetaBwd => "BB",
    Uso => "USO",
    Pbr => "PBR",
    Qbr => "QBR",
    Psw => "PSW",
    Qsw => "QSW",
    V => "V",
    Ppv => "PPV",
    Qpv => "QPV",
    Pch => "PCH",
    Pdis => "PDIS",
    Qbs => "QBS",
    Uch => "UCH",
    Udis => "UDIS",
    Soc => "SOC",
    Pdg => "PDG",
    Qdg => "QDG",
    Udg => "UDG",
    Rsv => "RSV",
}

impl Symbol {
    /// Powers and stored energy, which the model holds in per unit of the feeder's kVA base.
    pub fn is_per_unit(self) -> bool {
        use Symbol::*;
        matches!(self, Pbr | Qbr | Psw | Qsw | Ppv | Qpv | Pch | Pdis | Qbs | Soc | Pdg | Qdg | Rsv)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A symbol with its zero-based element index and one-based step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarKey {
    pub symbol: Symbol,
    pub element: usize,
    pub t: usize,
}

impl VarKey {
    pub fn new(symbol: Symbol, element: usize, t: usize) -> Self {
        Self { symbol, element, t }
    }

    pub fn ulsg(m: LsgIx, t: usize) -> Self {
        Self::new(Symbol::Ulsg, m.0, t)
    }

    pub fn usw(n: SwitchIx, t: usize) -> Self {
        Self::new(Symbol::Usw, n.0, t)
    }

    pub fn ur(m: LsgIx, t: usize) -> Self {
        Self::new(Symbol::Ur, m.0, t)
    }

    pub fn uso(n: SwitchIx, t: usize) -> Self {
        Self::new(Symbol::Uso, n.0, t)
    }

    pub fn voltage(i: NodeIx, t: usize) -> Self {
        Self::new(Symbol::V, i.0, t)
    }

    pub fn der(symbol: Symbol, d: DerIx, t: usize) -> Self {
        Self::new(symbol, d.0, t)
    }

    /// Status of a node: its LSG's status.
    pub fn node_status(feeder: &FeederModel, i: NodeIx, t: usize) -> Self {
        Self::ulsg(feeder.lsg_of(i), t)
    }

    /// Status of an intra-LSG branch: its LSG's status.
    pub fn branch_status(feeder: &FeederModel, b: BranchIx, t: usize) -> Self {
        Self::ulsg(feeder.branches[b.0].lsg, t)
    }

    /// Status of an LSG-graph edge: its switch's status.
    pub fn edge_status(n: SwitchIx, t: usize) -> Self {
        Self::usw(n, t)
    }

    pub fn name(&self) -> String {
        format!("{}.{}.{}", self.symbol, self.element + 1, self.t)
    }

    pub fn parse(name: &str) -> Option<Self> {
        let mut parts = name.split('.');
        let symbol = parts.next()?.parse().ok()?;
        let element: usize = parts.next()?.parse().ok()?;
        let t: usize = parts.next()?.parse().ok()?;
        if parts.next().is_some() || element == 0 || t == 0 {
            return None;
        }
        let key = Self::new(symbol, element - 1, t);
        // reject non-canonical spellings such as leading zeros
        (key.name() == name).then_some(key)
    }
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.symbol, self.element + 1, self.t)
    }
}

/// Map from [`VarKey`] to the declared model variable.
#[derive(Debug, Clone, Default)]
pub struct DecisionIndex {
    ids: HashMap<VarKey, VarId>,
}

impl DecisionIndex {
    pub fn insert(&mut self, key: VarKey, id: VarId) {
        self.ids.insert(key, id);
    }

    pub fn get(&self, key: VarKey) -> Option<VarId> {
        self.ids.get(&key).copied()
    }

    /// The variable for `key`; panics if the family was not declared.
    pub fn id(&self, key: VarKey) -> VarId {
        self.get(key).unwrap_or_else(|| panic!("variable {key} was not declared"))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Rebuild the index from model variable names.
    pub fn from_model(model: &MilpModel) -> Self {
        let mut index = Self::default();
        for (k, v) in model.variables().iter().enumerate() {
            if let Some(key) = VarKey::parse(&v.name) {
                index.insert(key, VarId(k));
            }
        }
        index
    }
}

/// Reads variable values from a [`Solution`] by key.
#[derive(Debug, Clone, Copy)]
pub struct SolutionView<'a> {
    pub solution: &'a Solution,
}

impl<'a> SolutionView<'a> {
    pub fn new(solution: &'a Solution) -> Self {
        Self { solution }
    }

    pub fn get(&self, key: VarKey) -> Option<f64> {
        self.solution.value(&key.name())
    }

    /// Value of `key`, or zero when the solution does not carry it.
    pub fn or_zero(&self, key: VarKey) -> f64 {
        self.get(key).unwrap_or(0.0)
    }

    /// Value of `key` in kW, kvar or kWh for per-unit symbols, unchanged otherwise.
    pub fn physical(&self, feeder: &FeederModel, key: VarKey) -> f64 {
        let x = self.or_zero(key);
        if key.symbol.is_per_unit() {
            x * feeder.base_kva
        } else {
            x
        }
    }

    pub fn is_on(&self, key: VarKey) -> bool {
        self.or_zero(key) > 0.5
    }
}
