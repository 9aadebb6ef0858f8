//! Answer sets `[R^n, R^k]_prop` and the stability-range inequalities.

mod stability;
mod table;

use std::fmt;
use std::sync::OnceLock;

use serde::{Serialize, Serializer};

pub use stability::{stability_check, StabilityReport};
pub use table::{parse_table, TableRow};

use crate::error::{Error, Result};

/// Largest `n` (and `k`) covered by the shipped table.
pub const TABLE_MAX_DIM: usize = 8;

const SHIPPED_TABLE: &str = include_str!("../../data/sphere_groups.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementCount {
    Finite(u64),
    Infinite,
}

impl Serialize for ElementCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ElementCount::Finite(c) => s.serialize_u64(*c),
            ElementCount::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl fmt::Display for ElementCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementCount::Finite(c) => write!(f, "{c}"),
            ElementCount::Infinite => f.write_str("infinite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbelianGroupDesc {
    pub rank: u32,
    pub torsion: Vec<u64>,
    pub source: String,
    pub element_count: ElementCount,
}

impl AbelianGroupDesc {
    pub fn new(rank: u32, torsion: Vec<u64>, source: impl Into<String>) -> Self {
        let element_count =
            if rank > 0 { ElementCount::Infinite } else { ElementCount::Finite(torsion.iter().product()) };
        Self { rank, torsion, source: source.into(), element_count }
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    pub fn is_integers(&self) -> bool {
        self.rank == 1 && self.torsion.is_empty()
    }
}

impl fmt::Display for AbelianGroupDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = vec!["Z".to_string(); self.rank as usize];
        parts.extend(self.torsion.iter().map(|t| format!("Z/{t}")));
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// What is known about `[R^n, R^k]_prop`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassSet {
    /// `pi_{n-1}(S^{k-1})` with its group structure.
    Group { group: AbelianGroupDesc, name: String },
    /// `k = 1`: classes are counted, no group structure is asserted.
    Count { count: u64, source: String },
    /// Outside the table coverage.
    Unknown { reason: String },
}

impl ClassSet {
    pub fn element_count(&self) -> Option<ElementCount> {
        match self {
            ClassSet::Group { group, .. } => Some(group.element_count),
            ClassSet::Count { count, .. } => Some(ElementCount::Finite(*count)),
            ClassSet::Unknown { .. } => None,
        }
    }

    pub fn group(&self) -> Option<&AbelianGroupDesc> {
        match self {
            ClassSet::Group { group, .. } => Some(group),
            _ => None,
        }
    }
}

fn shipped() -> &'static [TableRow] {
    static TABLE: OnceLock<Vec<TableRow>> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(SHIPPED_TABLE).expect("shipped sphere group table is well formed"))
}

/// Classes of proper maps `R^n -> R^k` up to proper homotopy.
pub fn group_lookup(n: usize, k: usize) -> Result<ClassSet> {
    lookup_in(shipped(), n, k)
}

/// As [`group_lookup`], against an explicit table.
pub fn lookup_in(rows: &[TableRow], n: usize, k: usize) -> Result<ClassSet> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput(format!("dimensions must be positive, got n = {n}, k = {k}")));
    }
    let group = |g: AbelianGroupDesc| ClassSet::Group { name: g.to_string(), group: g };
    if k == 1 {
        let (count, source) = if n == 1 {
            (4, "sign of f at each end of R: four sign pairs")
        } else {
            (2, "S^{n-1} is connected for n > 1: one end sign")
        };
        return Ok(ClassSet::Count { count, source: source.into() });
    }
    if n < k {
        return Ok(group(AbelianGroupDesc::new(0, vec![], "derived: S^{k-1} is (k-2)-connected")));
    }
    if n == k {
        return Ok(group(AbelianGroupDesc::new(1, vec![], "derived: degree, pi_{k-1}(S^{k-1}) = Z")));
    }
    match rows.iter().find(|r| r.n == n && r.k == k) {
        Some(r) => Ok(group(AbelianGroupDesc::new(r.rank, r.torsion.clone(), r.source.clone()))),
        None => Ok(ClassSet::Unknown {
            reason: format!("pi_{}(S^{}) is not in the table of this library", n - 1, k - 1),
        }),
    }
}

pub fn proper_class_count(n: usize, k: usize) -> Result<ElementCount> {
    let set = group_lookup(n, k)?;
    set.element_count().ok_or_else(|| match set {
        ClassSet::Unknown { reason } => Error::Table(format!("unknown: {reason}")),
        _ => unreachable!(),
    })
}
