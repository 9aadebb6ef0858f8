use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::map_model::properness::sample_directions;
use crate::map_model::MapSpec;
use crate::normalize::find_escape_radius;

/// Signs of a proper map `R -> R` near `-window` and `+window`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPair {
    pub minus: i32,
    pub plus: i32,
}

impl std::fmt::Display for SignPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = |s: i32| if s > 0 { '+' } else { '-' };
        write!(f, "({}, {})", c(self.minus), c(self.plus))
    }
}

fn settled_sign(f: &MapSpec, x: &[f64], window: f64) -> Result<i32> {
    let v = f.eval(x)?[0];
    if v.abs() <= 1.0 {
        return Err(Error::SignNotSettled { window });
    }
    Ok(if v > 0.0 { 1 } else { -1 })
}

fn settle(f: &MapSpec, window: f64, tol: &Tolerances) -> Result<f64> {
    match find_escape_radius(f, 1.0, window, tol) {
        Err(Error::EscapeWindowExhausted { .. }) => Err(Error::SignNotSettled { window }),
        other => other,
    }
}

/// Once `|f| > 1` beyond the escape radius, `f` keeps its sign on each end.
pub fn end_signs(f: &MapSpec, window: f64, tol: &Tolerances) -> Result<SignPair> {
    if f.domain_dim() != 1 || f.codomain_dim() != 1 {
        return Err(Error::InvalidInput("end signs need a map R -> R".into()));
    }
    settle(f, window, tol)?;
    Ok(SignPair { minus: settled_sign(f, &[-window], window)?, plus: settled_sign(f, &[window], window)? })
}

/// The single end sign of a proper map `R^n -> R` with `n > 1`; every
/// sampled direction at the window must agree.
pub fn end_sign(f: &MapSpec, window: f64, tol: &Tolerances) -> Result<i32> {
    if f.domain_dim() < 2 || f.codomain_dim() != 1 {
        return Err(Error::InvalidInput("a single end sign needs a map R^n -> R with n > 1".into()));
    }
    settle(f, window, tol)?;
    let mut sign = None;
    for d in sample_directions(f.domain_dim(), tol.directions_per_dim) {
        let x: Vec<f64> = d.iter().map(|c| c * window).collect();
        let s = settled_sign(f, &x, window)?;
        if sign.is_some_and(|p| p != s) {
            return Err(Error::SignNotSettled { window });
        }
        sign = Some(s);
    }
    Ok(sign.unwrap_or(1))
}
