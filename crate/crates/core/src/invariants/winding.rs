use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::map_model::SphereMapSpec;

const MAX_DEPTH: u32 = 40;

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1])
}

fn point(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

fn accumulate(g: &SphereMapSpec, t0: f64, t1: f64, y0: &[f64], y1: &[f64], depth: u32) -> Result<f64> {
    let d = angle_between(y0, y1);
    if d.abs() < FRAC_PI_2 {
        return Ok(d);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::RefinementCap);
    }
    let tm = 0.5 * (t0 + t1);
    let ym = g.eval(&point(tm))?;
    Ok(accumulate(g, t0, tm, y0, &ym, depth + 1)? + accumulate(g, tm, t1, &ym, y1, depth + 1)?)
}

/// Degree of `g: S^1 -> S^1` by angle accumulation over `samples` equal
/// steps, bisecting any step whose angular increment reaches `pi/2`.
pub fn winding_number(g: &SphereMapSpec, samples: usize) -> Result<i64> {
    if g.domain_sphere_dim() != 1 || g.codomain_sphere_dim() != 1 {
        return Err(Error::InvalidInput("winding number needs a map S^1 -> S^1".into()));
    }
    if samples < 64 {
        return Err(Error::InvalidInput("winding number needs at least 64 samples".into()));
    }
    let ts: Vec<f64> = (0..=samples).map(|i| TAU * i as f64 / samples as f64).collect();
    let ys = ts.iter().map(|&t| g.eval(&point(t))).collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for i in 0..samples {
        total += accumulate(g, ts[i], ts[i + 1], &ys[i], &ys[i + 1], 0)?;
    }
    Ok((total / TAU).round() as i64)
}
