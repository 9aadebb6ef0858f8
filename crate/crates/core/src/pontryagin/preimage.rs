//! Exhaustive preimage search for square maps on a box: coarse grid cell
//! filtering, damped Newton polishing, deterministic merging.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, dist, norm};
use crate::map_model::MapSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    /// The box is `[-half_width, half_width]^n`.
    pub half_width: f64,
    /// Grid cells per axis.
    pub cells: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self { half_width: 8.0, cells: 64 }
    }
}

impl SearchBox {
    pub fn new(half_width: f64) -> Self {
        Self { half_width, ..Self::default() }
    }
}

/// Largest dimension searched exhaustively.
pub const MAX_GRID_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconvergedCell {
    pub center: Vec<f64>,
    pub best_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreimageSearch {
    /// Polished preimage points, sorted lexicographically.
    pub points: Vec<Vec<f64>>,
    pub flagged_cells: usize,
    pub unconverged: Vec<UnconvergedCell>,
}

impl PreimageSearch {
    /// Unconverged cells whose best residual came close to `y`: a hint of a
    /// critical point near the fiber.
    pub fn near_misses(&self, y: &[f64]) -> impl Iterator<Item = &UnconvergedCell> {
        let cut = 1e-3 * norm(y).max(1.0);
        self.unconverged.iter().filter(move |c| c.best_residual < cut)
    }
}

pub(crate) struct Polished {
    pub x: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
}

/// Damped Newton on `f(x) = y` with a finite-difference Jacobian. After the
/// target residual is reached, a few extra steps run while they still halve
/// the residual, so slowly converging (singular) roots drift visibly close
/// to the critical point.
pub(crate) fn newton_polish(f: &MapSpec, y: &[f64], x0: &[f64], tol: &Tolerances) -> Polished {
    let mut x = x0.to_vec();
    let resid = |x: &[f64]| f.eval(x).map(|v| dist(&v, y)).unwrap_or(f64::INFINITY);
    let mut r = resid(&x);
    let mut best = (x.clone(), r);
    let mut extra = 0;
    for _ in 0..100 {
        if r < tol.polish_residual {
            extra += 1;
            if extra > 8 {
                break;
            }
        }
        let Ok(jac) = f.jacobian(&x, tol.fd_step) else { break };
        let Ok(fx) = f.eval(&x) else { break };
        let Some(dx) = linalg::solve(&jac, &linalg::sub(&fx, y)) else { break };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-4 {
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - lambda * d).collect();
            let rc = resid(&cand);
            if rc < r {
                let halved = rc <= 0.5 * r;
                x = cand;
                r = rc;
                accepted = true;
                if extra > 0 && !halved {
                    extra = 9;
                }
                break;
            }
            lambda *= 0.5;
        }
        if r < best.1 {
            best = (x.clone(), r);
        }
        if !accepted {
            break;
        }
    }
    let converged = best.1 < tol.polish_residual;
    Polished { x: best.0, residual: best.1, converged }
}

fn grid_index(mut idx: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for o in out.iter_mut() {
        *o = idx % base;
        idx /= base;
    }
    out
}

pub fn preimage_search(f: &MapSpec, y: &[f64], search: &SearchBox, tol: &Tolerances) -> Result<PreimageSearch> {
    let n = f.domain_dim();
    if f.codomain_dim() != n {
        return Err(Error::InvalidInput(format!(
            "preimage points need a square map, got R^{n} -> R^{}",
            f.codomain_dim()
        )));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if n > MAX_GRID_DIM {
        return Err(Error::Unsupported(format!("exhaustive preimage search is limited to n <= {MAX_GRID_DIM}")));
    }
    let m = search.cells;
    let hw = search.half_width;
    let width = 2.0 * hw / m as f64;
    let coord = |i: usize| -hw + width * i as f64;
    let verts = (m + 1).pow(n as u32);
    let values: Vec<Option<Vec<f64>>> = (0..verts)
        .into_par_iter()
        .map(|i| {
            let x: Vec<f64> = grid_index(i, m + 1, n).into_iter().map(coord).collect();
            f.eval(&x).ok()
        })
        .collect();
    let corners = 1usize << n;
    let strides: Vec<usize> = (0..n).map(|d| (m + 1).pow(d as u32)).collect();
    let flagged: Vec<Vec<f64>> = (0..m.pow(n as u32))
        .into_par_iter()
        .filter_map(|c| {
            let cell = grid_index(c, m, n);
            let base: usize = cell.iter().zip(&strides).map(|(i, s)| i * s).sum();
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            for k in 0..corners {
                let off: usize = (0..n).filter(|d| k >> d & 1 == 1).map(|d| strides[d]).sum();
                match &values[base + off] {
                    Some(v) => {
                        for d in 0..n {
                            lo[d] = lo[d].min(v[d]);
                            hi[d] = hi[d].max(v[d]);
                        }
                    }
                    // Evaluation failures: keep the cell so polishing reports it.
                    None => {
                        lo = vec![f64::NEG_INFINITY; n];
                        hi = vec![f64::INFINITY; n];
                        break;
                    }
                }
            }
            let hit = (0..n).all(|d| {
                let margin = 0.5 * (hi[d] - lo[d]);
                y[d] >= lo[d] - margin && y[d] <= hi[d] + margin
            });
            hit.then(|| cell.iter().map(|&i| coord(i) + 0.5 * width).collect())
        })
        .collect();
    let polished: Vec<(Vec<f64>, Polished)> = flagged
        .par_iter()
        .map(|c| (c.clone(), newton_polish(f, y, c, tol)))
        .collect();
    let slack = 1e-9 * hw.max(1.0);
    let mut raw = Vec::new();
    let mut unconverged = Vec::new();
    for (center, p) in polished {
        if p.converged {
            if p.x.iter().all(|c| c.abs() <= hw + slack) {
                raw.push(p.x);
            }
        } else {
            unconverged.push(UnconvergedCell { center, best_residual: p.residual });
        }
    }
    raw.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut points: Vec<Vec<f64>> = Vec::new();
    for p in raw {
        if !points.iter().any(|q| dist(q, &p) < tol.merge) {
            points.push(p);
        }
    }
    Ok(PreimageSearch { points, flagged_cells: flagged.len(), unconverged })
}

/// All solutions of `f(x) = y` in `[-half_width, half_width]^n`.
pub fn preimage_points(f: &MapSpec, y: &[f64], half_width: f64, tol: &Tolerances) -> Result<Vec<Vec<f64>>> {
    let s = preimage_search(f, y, &SearchBox::new(half_width), tol)?;
    if let Some(c) = s.near_misses(y).next() {
        return Err(Error::CertificationFailed(format!(
            "Newton did not converge in the cell at {:?} (best residual {:e})",
            c.center, c.best_residual
        )));
    }
    Ok(s.points)
}

/// Regular means well-conditioned relative to the unit scale: both
/// `cond(J)` and `1 / sigma_min(J)` stay below the configured bound.
pub fn jacobian_is_regular(jac: &DMatrix<f64>, tol: &Tolerances) -> (bool, f64) {
    let sv = jac.clone().singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cond = if smin > 0.0 { smax.max(1.0) / smin } else { f64::INFINITY };
    (cond < tol.condition_bound, cond)
}
