//! Certification of the realizability and completeness counterexamples.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::invariants::{end_signs, hopf_invariant_at, HopfOptions, HopfReport, SignPair, HOPF_VALUE_PAIRS};
use crate::map_model::{MapSpec, SphereMapSpec};
use crate::pontryagin::{preimage_search, realizable_1d_at, Realizability, SearchBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteItem {
    /// `{-1, 1}`, both framed `+`.
    TwoPointSameSign,
    /// `{-2, -1, 1, 2}` framed `+ - - +`.
    FourPointNested,
    /// `x^2` against `-x^2`.
    SquareVersusNegativeSquare,
    /// The Hopf map against the Hopf map precomposed with a reflection.
    HopfPair,
}

impl SuiteItem {
    pub const ALL: [SuiteItem; 4] =
        [SuiteItem::TwoPointSameSign, SuiteItem::FourPointNested, SuiteItem::SquareVersusNegativeSquare, SuiteItem::HopfPair];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub items: Vec<SuiteItem>,
    /// Fiber tracing step for the Hopf item; `None` uses the tolerance default.
    pub fiber_step: Option<f64>,
    pub window: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { items: SuiteItem::ALL.to_vec(), fiber_step: None, window: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationDetail {
    /// Unattained value used for each map.
    pub values: [f64; 2],
    pub preimage_sizes: [usize; 2],
    pub classes: [SignPair; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemDetail {
    Realizability(Realizability),
    Separation(SeparationDetail),
    Hopf { plus: Box<HopfReport>, minus: Box<HopfReport> },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemResult {
    pub item: SuiteItem,
    pub passed: bool,
    pub summary: String,
    pub detail: ItemDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub items: Vec<ItemResult>,
    pub passed: bool,
}

fn non_realizable(item: SuiteItem, positions: &[f64], signs: &[i32]) -> Result<ItemResult> {
    let r = realizable_1d_at(positions, signs)?;
    let passed = !r.realizable && r.certificate.is_some();
    let summary = match &r.certificate {
        Some(c) => format!("not realizable: {}", c.explanation),
        None => "unexpectedly realizable".to_string(),
    };
    Ok(ItemResult { item, passed, summary, detail: ItemDetail::Realizability(r) })
}

fn separation(opts: &SuiteOptions, cfg: &Config) -> Result<ItemResult> {
    let maps = [MapSpec::polynomial(vec![0.0, 0.0, 1.0])?, MapSpec::polynomial(vec![0.0, 0.0, -1.0])?];
    // Each map misses one side of 0; the framed preimage of a missed value is empty.
    let values = [-1.0, 1.0];
    let mut preimage_sizes = [0; 2];
    let mut classes = [SignPair { minus: 0, plus: 0 }; 2];
    for i in 0..2 {
        let s = preimage_search(&maps[i], &[values[i]], &SearchBox::default(), &cfg.tol)?;
        preimage_sizes[i] = s.points.len();
        classes[i] = end_signs(&maps[i], opts.window, &cfg.tol)?;
    }
    let passed = preimage_sizes == [0, 0] && classes[0] != classes[1];
    let summary = format!(
        "preimages of unattained values have {} and {} points; classes {} and {}",
        preimage_sizes[0], preimage_sizes[1], classes[0], classes[1]
    );
    Ok(ItemResult {
        item: SuiteItem::SquareVersusNegativeSquare,
        passed,
        summary,
        detail: ItemDetail::Separation(SeparationDetail { values, preimage_sizes, classes }),
    })
}

fn hopf_pair(opts: &SuiteOptions, cfg: &Config) -> Result<ItemResult> {
    let mut hopts = HopfOptions::new(cfg);
    if let Some(step) = opts.fiber_step {
        hopts.trace.step = step;
    }
    let h = SphereMapSpec::hopf();
    let flipped = SphereMapSpec::compose(h.clone(), SphereMapSpec::reflection(3, 0)?)?;
    let [y1, y2] = HOPF_VALUE_PAIRS[0];
    let plus = hopf_invariant_at(&h, &y1, &y2, &hopts, cfg)?;
    let minus = hopf_invariant_at(&flipped, &y1, &y2, &hopts, cfg)?;
    let certified = plus.certified && minus.certified;
    let passed = certified && plus.value == 1 && minus.value == -1;
    let summary = if certified {
        format!("Hopf invariants {} and {}", plus.value, minus.value)
    } else {
        format!(
            "fiber residual check failed: midpoint residuals {:.3e} and {:.3e}",
            plus.fibers.iter().map(|f| f.max_midpoint_residual).fold(0.0, f64::max),
            minus.fibers.iter().map(|f| f.max_midpoint_residual).fold(0.0, f64::max)
        )
    };
    Ok(ItemResult {
        item: SuiteItem::HopfPair,
        passed,
        summary,
        detail: ItemDetail::Hopf { plus: Box::new(plus), minus: Box::new(minus) },
    })
}

/// Run the selected items; an item whose computation errors is reported as failed.
pub fn counterexample_suite(opts: &SuiteOptions, cfg: &Config) -> Result<SuiteReport> {
    if opts.items.is_empty() {
        return Err(Error::InvalidInput("the suite catalog is empty".into()));
    }
    let items: Vec<ItemResult> = opts
        .items
        .iter()
        .map(|&item| {
            let r = match item {
                SuiteItem::TwoPointSameSign => non_realizable(item, &[-1.0, 1.0], &[1, 1]),
                SuiteItem::FourPointNested => non_realizable(item, &[-2.0, -1.0, 1.0, 2.0], &[1, -1, -1, 1]),
                SuiteItem::SquareVersusNegativeSquare => separation(opts, cfg),
                SuiteItem::HopfPair => hopf_pair(opts, cfg),
            };
            r.unwrap_or_else(|e| ItemResult {
                item,
                passed: false,
                summary: format!("computation failed: {e}"),
                detail: ItemDetail::Failed { error: e.to_string() },
            })
        })
        .collect();
    let passed = items.iter().all(|i| i.passed);
    Ok(SuiteReport { items, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes() {
        let r = counterexample_suite(&SuiteOptions::default(), &Config::default()).unwrap();
        for i in &r.items {
            assert!(i.passed, "{:?}: {}", i.item, i.summary);
        }
        assert!(r.passed);
    }

    #[test]
    fn coarse_fiber_step_is_flagged() {
        let opts = SuiteOptions { items: vec![SuiteItem::HopfPair], fiber_step: Some(0.5), ..SuiteOptions::default() };
        let r = counterexample_suite(&opts, &Config::default()).unwrap();
        assert!(!r.passed);
        assert!(r.items[0].summary.contains("residual"), "{}", r.items[0].summary);
    }

    #[test]
    fn empty_catalog_is_an_error() {
        let opts = SuiteOptions { items: vec![], ..SuiteOptions::default() };
        assert!(counterexample_suite(&opts, &Config::default()).is_err());
    }
}
