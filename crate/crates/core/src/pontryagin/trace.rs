//! Pseudo-arclength tracing of 1-dimensional fibers `f^{-1}(y)` for
//! `f: R^{k+1} -> R^k`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, dist, dot, norm};
use crate::map_model::MapSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Nominal predictor step.
    pub step: f64,
    /// Tracing stops with an error once a vertex leaves `|x| <= bound`.
    pub bound: f64,
    pub max_vertices: usize,
}

impl TraceOptions {
    pub fn new(tol: &Tolerances) -> Self {
        Self { step: tol.trace_step, bound: 16.0, max_vertices: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    /// Vertices; for a closed curve the last vertex repeats the first.
    pub vertices: Vec<Vec<f64>>,
    /// Per vertex, `k` normal frame vectors `J^+ e_i`.
    pub frames: Vec<Vec<Vec<f64>>>,
    pub closed: bool,
    pub max_vertex_residual: f64,
    pub max_midpoint_residual: f64,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| dist(&w[0], &w[1])).sum()
    }

    /// Distance from `p` to the nearest segment.
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramedCurve {
    pub polylines: Vec<Polyline>,
    pub regular_value: Vec<f64>,
    pub step: f64,
}

impl FramedCurve {
    pub fn max_vertex_residual(&self) -> f64 {
        self.polylines.iter().map(|p| p.max_vertex_residual).fold(0.0, f64::max)
    }

    pub fn max_midpoint_residual(&self) -> f64 {
        self.polylines.iter().map(|p| p.max_midpoint_residual).fold(0.0, f64::max)
    }

    /// All polylines closed and within both residual tolerances.
    pub fn certified(&self, tol: &Tolerances) -> bool {
        self.polylines.iter().all(|p| p.closed)
            && self.max_vertex_residual() < tol.fiber_vertex_residual
            && self.max_midpoint_residual() < tol.fiber_midpoint_residual
    }

    /// CSV with columns `polyline_id,vertex_index,x1..xn`.
    pub fn to_csv(&self) -> String {
        let n = self.regular_value.len() + 1;
        let mut out = String::from("polyline_id,vertex_index");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for (pid, pl) in self.polylines.iter().enumerate() {
            for (vi, v) in pl.vertices.iter().enumerate() {
                let _ = write!(out, "{pid},{vi}");
                for c in v {
                    let _ = write!(out, ",{c}");
                }
                out.push('\n');
            }
        }
        out
    }
}

pub(crate) fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = linalg::sub(b, a);
    let l2 = dot(&ab, &ab);
    let s = if l2 > 0.0 { (dot(&linalg::sub(p, a), &ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q: Vec<f64> = a.iter().zip(&ab).map(|(a, d)| a + s * d).collect();
    dist(p, &q)
}

fn pseudo_inverse(jac: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let jjt = jac * jac.transpose();
    jjt.try_inverse().map(|inv| jac.transpose() * inv)
}

/// Unit tangent with `(tangent, J^+ e_1, .., J^+ e_k)` positively oriented, plus the frames.
fn oriented_tangent(jac: &DMatrix<f64>) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let pinv = pseudo_inverse(jac)?;
    let mut t = linalg::normalized(&linalg::kernel_vector(jac))?;
    let frames: Vec<Vec<f64>> = (0..pinv.ncols()).map(|i| linalg::column(&pinv, i)).collect();
    let mut cols = vec![t.clone()];
    cols.extend(frames.iter().cloned());
    if linalg::from_columns(&cols).determinant() < 0.0 {
        t = linalg::scale(&t, -1.0);
    }
    Some((t, frames))
}

/// Gauss-Newton with minimum-norm steps onto `f = y`.
pub fn polish_onto_fiber(f: &MapSpec, y: &[f64], x0: &[f64], tol: &Tolerances) -> Option<Vec<f64>> {
    let mut x = x0.to_vec();
    for _ in 0..60 {
        let fx = f.eval(&x).ok()?;
        let r = linalg::sub(&fx, y);
        if norm(&r) < tol.corrector_residual {
            return Some(x);
        }
        let jac = f.jacobian(&x, tol.fd_step).ok()?;
        let dx = linalg::min_norm_solve(&jac, &r)?;
        if norm(&dx) > 1.0 {
            x = linalg::sub(&x, &linalg::scale(&dx, 1.0 / norm(&dx)));
        } else {
            x = linalg::sub(&x, &dx);
        }
    }
    let r = dist(&f.eval(&x).ok()?, y);
    (r < tol.corrector_residual).then_some(x)
}

/// Newton on the augmented system `[f(z) - y; tau . (z - x_pred)] = 0`.
fn correct(f: &MapSpec, y: &[f64], pred: &[f64], tau: &[f64], tol: &Tolerances) -> Option<Vec<f64>> {
    let n = pred.len();
    let mut z = pred.to_vec();
    for _ in 0..12 {
        let fz = f.eval(&z).ok()?;
        let r = linalg::sub(&fz, y);
        let plane = dot(tau, &linalg::sub(&z, pred));
        if norm(&r) < tol.corrector_residual && plane.abs() < tol.corrector_residual {
            return Some(z);
        }
        let jac = f.jacobian(&z, tol.fd_step).ok()?;
        let mut aug = jac.insert_row(n - 1, 0.0);
        for j in 0..n {
            aug[(n - 1, j)] = tau[j];
        }
        let mut rhs = r;
        rhs.push(plane);
        let dz = linalg::solve(&aug, &rhs)?;
        z = linalg::sub(&z, &dz);
    }
    None
}

fn trace_one(f: &MapSpec, y: &[f64], start: Vec<f64>, opts: &TraceOptions, tol: &Tolerances) -> Result<Polyline> {
    let h0 = opts.step;
    let jac = f.jacobian(&start, tol.fd_step)?;
    let (tau0, frame0) =
        oriented_tangent(&jac).ok_or_else(|| Error::SingularJacobian { point: start.clone(), condition: f64::INFINITY })?;
    let mut vertices = vec![start.clone()];
    let mut frames = vec![frame0];
    let (mut x, mut tau) = (start.clone(), tau0.clone());
    let mut h = h0;
    let mut travelled = 0.0;
    loop {
        if vertices.len() >= opts.max_vertices {
            return Err(Error::CertificationFailed(format!(
                "fiber did not close within {} vertices",
                opts.max_vertices
            )));
        }
        let pred: Vec<f64> = x.iter().zip(&tau).map(|(a, t)| a + h * t).collect();
        let step = correct(f, y, &pred, &tau, tol).and_then(|z| {
            let jac = f.jacobian(&z, tol.fd_step).ok()?;
            let (tz, fz) = oriented_tangent(&jac)?;
            let d = dist(&z, &x);
            (dot(&tz, &tau) > 0.5 && d < 2.0 * h && d > 0.25 * h).then_some((z, tz, fz))
        });
        let Some((z, tz, fz)) = step else {
            h *= 0.5;
            if h < 1e-6 {
                return Err(Error::StepCollapse { location: x });
            }
            continue;
        };
        travelled += dist(&z, &x);
        if travelled > 3.0 * h0 && segment_distance(&start, &x, &z) < 0.5 * h0 && dot(&tz, &tau0) > 0.0 {
            vertices.push(start.clone());
            frames.push(frames[0].clone());
            break;
        }
        if norm(&z) > opts.bound {
            return Err(Error::FiberEscaped { location: z });
        }
        vertices.push(z.clone());
        frames.push(fz);
        x = z;
        tau = tz;
        h = (2.0 * h).min(h0);
    }
    let resid = |p: &[f64]| f.eval(p).map(|v| dist(&v, y)).unwrap_or(f64::INFINITY);
    let max_vertex_residual = vertices.iter().map(|v| resid(v)).fold(0.0, f64::max);
    let max_midpoint_residual = vertices
        .windows(2)
        .map(|w| resid(&linalg::lerp(&w[0], &w[1], 0.5)))
        .fold(0.0, f64::max);
    Ok(Polyline { vertices, frames, closed: true, max_vertex_residual, max_midpoint_residual })
}

/// Trace every fiber component reached from `seeds`. Seeds already lying on
/// a traced component are skipped, so seeding every component once suffices.
pub fn trace_fiber(
    f: &MapSpec,
    y: &[f64],
    seeds: &[Vec<f64>],
    opts: &TraceOptions,
    tol: &Tolerances,
) -> Result<FramedCurve> {
    let k = f.codomain_dim();
    if f.domain_dim() != k + 1 {
        return Err(Error::InvalidInput(format!(
            "fiber tracing needs R^(k+1) -> R^k, got R^{} -> R^{k}",
            f.domain_dim()
        )));
    }
    if y.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: y.len() });
    }
    let mut polylines: Vec<Polyline> = Vec::new();
    for seed in seeds {
        let start = polish_onto_fiber(f, y, seed, tol).ok_or_else(|| Error::SeedNotOnFiber { seed: seed.clone() })?;
        if polylines.iter().any(|p| p.distance_to(&start) < opts.step) {
            continue;
        }
        polylines.push(trace_one(f, y, start, opts, tol)?);
    }
    Ok(FramedCurve { polylines, regular_value: y.to_vec(), step: opts.step })
}

/// Seeds for the fiber over `y`: the `keep` lowest-residual of `samples`
/// uniform points in `[-half_width, half_width]^n`, polished onto the fiber.
pub fn sample_fiber_seeds(
    f: &MapSpec,
    y: &[f64],
    half_width: f64,
    samples: usize,
    keep: usize,
    rng: &mut impl Rng,
    tol: &Tolerances,
) -> Result<Vec<Vec<f64>>> {
    let n = f.domain_dim();
    let mut scored = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-half_width..=half_width)).collect();
        scored.push((dist(&f.eval(&x)?, y), x));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for (_, x) in scored.into_iter().take(keep) {
        if let Some(p) = polish_onto_fiber(f, y, &x, tol) {
            if seeds.iter().all(|s| dist(s, &p) > 1e-6) {
                seeds.push(p);
            }
        }
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::map_model::{radial_extend, SphereMapSpec};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Hopf fiber over `y = (sin a cos b, sin a sin b, cos a)`:
    /// `(cos(a/2) e^{i t}, sin(a/2) e^{i (t - b)})`.
    fn hopf_fiber_point(a: f64, b: f64, t: f64) -> Vec<f64> {
        let (c, s) = ((a / 2.0).cos(), (a / 2.0).sin());
        vec![c * t.cos(), c * t.sin(), s * (t - b).cos(), s * (t - b).sin()]
    }

    fn sphere_point(a: f64, b: f64) -> Vec<f64> {
        vec![a.sin() * b.cos(), a.sin() * b.sin(), a.cos()]
    }

    #[test]
    fn explicit_fiber_is_on_the_fiber() {
        let h = MapSpec::hopf();
        for t in [0.0, 1.0, 2.5] {
            let v = hopf_fiber_point(1.1, 0.4, t);
            assert!(dist(&h.eval(&v).unwrap(), &sphere_point(1.1, 0.4)) < 1e-14);
        }
    }

    #[test]
    fn hopf_fiber_is_one_closed_circle() {
        let t = tol();
        let f = radial_extend(&SphereMapSpec::hopf());
        let y = sphere_point(1.1, 0.4);
        let seed = hopf_fiber_point(1.1, 0.4, 0.3);
        let c = trace_fiber(&f, &y, &[seed.clone(), hopf_fiber_point(1.1, 0.4, 2.0)], &TraceOptions::new(&t), &t).unwrap();
        assert_eq!(c.polylines.len(), 1);
        let pl = &c.polylines[0];
        assert!(pl.closed && pl.vertices.first() == pl.vertices.last());
        assert!((pl.length() - 2.0 * PI).abs() < 1e-3, "{}", pl.length());
        assert!(c.certified(&t));
        for v in &pl.vertices {
            assert!((norm(v) - 1.0).abs() < 1e-9);
        }
        // Consecutive vertices within the step bound; frames normal to the tangent.
        for (w, fr) in pl.vertices.windows(2).zip(&pl.frames) {
            let d = linalg::sub(&w[1], &w[0]);
            assert!(norm(&d) < 2.0 * t.trace_step);
            for u in fr {
                assert!(dot(u, &d).abs() < 0.02 * norm(u) * norm(&d));
            }
        }
        assert!(c.to_csv().starts_with("polyline_id,vertex_index,x1,x2,x3,x4\n0,0,"));
    }

    #[test]
    fn distinct_values_give_disjoint_fibers() {
        let t = tol();
        let f = radial_extend(&SphereMapSpec::hopf());
        let opts = TraceOptions::new(&t);
        let c1 = trace_fiber(&f, &sphere_point(1.0, 0.0), &[hopf_fiber_point(1.0, 0.0, 0.0)], &opts, &t).unwrap();
        let c2 = trace_fiber(&f, &sphere_point(2.0, 1.0), &[hopf_fiber_point(2.0, 1.0, 0.0)], &opts, &t).unwrap();
        let a = &c1.polylines[0];
        let gap = c2.polylines[0].vertices.iter().map(|v| a.distance_to(v)).fold(f64::INFINITY, f64::min);
        assert!(gap > 0.1);
    }

    #[test]
    fn coarse_step_fails_midpoint_certificate() {
        let t = tol();
        let f = radial_extend(&SphereMapSpec::hopf());
        let opts = TraceOptions { step: 0.5, ..TraceOptions::new(&t) };
        let c = trace_fiber(&f, &sphere_point(1.0, 0.0), &[hopf_fiber_point(1.0, 0.0, 0.0)], &opts, &t).unwrap();
        assert!(c.max_vertex_residual() < t.fiber_vertex_residual);
        assert!(c.max_midpoint_residual() > t.fiber_midpoint_residual);
        assert!(!c.certified(&t));
    }

    #[test]
    fn bad_seed_is_reported() {
        let t = tol();
        let f = MapSpec::hopf();
        let err = trace_fiber(&f, &[1.0, 0.0, 0.0], &[vec![0.0; 4]], &TraceOptions::new(&t), &t);
        assert!(matches!(err, Err(Error::SeedNotOnFiber { .. })));
    }
}
