//! Pontryagin-Thom collapse for framed points: a proper map whose preimage of
//! the regular value is exactly the given points, with the given frames.
//!
//! Away from the points the map is `y + W(x)`, where `W` is a proper map
//! vanishing exactly at the points with the prescribed local degree signs:
//! `W(x) = (P(z), x3 - h3(z), .., xn - hn(z))` with `z = x1 + i x2`,
//! `P(z) = prod w_j`, `w_j = z - pi_j` or its conjugate, and `h` interpolating
//! the remaining coordinates. In `R^1`, `W = kappa prod (x - p_j)`.
//!
//! Inside a tube of radius `rho` around `p_j`, with `s = |x - p_j| / rho`:
//! `s <= 1/2` is exactly linear with matrix `F_j^{-1}`; `1/2 .. 3/4` moves that
//! matrix to `dW(p_j)` inside `GL(n)` with fixed determinant sign; `3/4 .. 1`
//! blends the linearization into `W`.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::framing::FramedPoints;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, dist, mat_vec, norm, smoothstep};
use crate::map_model::properness::sample_directions;
use crate::map_model::MapSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Givens {
    i: usize,
    j: usize,
    angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub center: Vec<f64>,
    /// Effective radius after shrinking for the blend condition.
    pub radius: f64,
    /// `F^{-1}` for the prescribed frame `F`.
    inner: Vec<Vec<f64>>,
    /// `dW` at the center.
    outer: Vec<Vec<f64>>,
    /// `L^{-1} A = Q R`, with `Q` stored as Givens rotations and `pi`-rotation pairs.
    givens: Vec<Givens>,
    flips: Vec<(usize, usize)>,
    upper: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseMap {
    dim: usize,
    regular_value: Vec<f64>,
    /// Rows of the rotation applied before evaluating `W`.
    rotation: Vec<Vec<f64>>,
    projections: Vec<[f64; 2]>,
    conjugate: Vec<bool>,
    heights: Vec<Vec<f64>>,
    /// Roots of the far-field polynomial in `R^1`.
    roots: Vec<f64>,
    kappa: f64,
    tubes: Vec<Tube>,
}

fn rotation_matrix(n: usize, i: usize, j: usize, angle: f64) -> DMatrix<f64> {
    let mut g = DMatrix::identity(n, n);
    let (c, s) = (angle.cos(), angle.sin());
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = -s;
    g[(j, i)] = s;
    g
}

impl Tube {
    fn path_matrix(&self, tau: f64) -> DMatrix<f64> {
        let n = self.center.len();
        let mut q = DMatrix::identity(n, n);
        for g in &self.givens {
            q *= rotation_matrix(n, g.i, g.j, (1.0 - tau) * g.angle);
        }
        for &(i, j) in &self.flips {
            q *= rotation_matrix(n, i, j, (1.0 - tau) * std::f64::consts::PI);
        }
        let r = linalg::from_rows(&self.upper) * (1.0 - tau) + DMatrix::identity(n, n) * tau;
        linalg::from_rows(&self.outer) * q * r
    }
}

impl CollapseMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of framed points.
    pub fn len(&self) -> usize {
        self.tubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tubes.is_empty()
    }

    pub fn tubes(&self) -> &[Tube] {
        &self.tubes
    }

    /// The far-field map `W`.
    fn far(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        if self.projections.is_empty() && self.roots.is_empty() {
            let mut out = vec![0.0; n];
            out[0] = 1.0 + linalg::dot(x, x);
            return out;
        }
        if n == 1 {
            return vec![self.kappa * self.roots.iter().map(|r| x[0] - r).product::<f64>()];
        }
        let u: Vec<f64> = self.rotation.iter().map(|r| linalg::dot(r, x)).collect();
        let (zr, zi) = (u[0], u[1]);
        let (mut pr, mut pi) = (1.0, 0.0);
        for (p, &conj) in self.projections.iter().zip(&self.conjugate) {
            let (a, b) = (zr - p[0], if conj { p[1] - zi } else { zi - p[1] });
            (pr, pi) = (pr * a - pi * b, pr * b + pi * a);
        }
        let mut out = vec![pr, pi];
        if n > 2 {
            let weights: Vec<f64> = (0..self.projections.len())
                .map(|j| {
                    let pj = self.projections[j];
                    let mut w = 1.0;
                    for (i, pi) in self.projections.iter().enumerate() {
                        if i != j {
                            let num = (zr - pi[0]).powi(2) + (zi - pi[1]).powi(2);
                            let den = (pj[0] - pi[0]).powi(2) + (pj[1] - pi[1]).powi(2);
                            w *= num / den;
                        }
                    }
                    w
                })
                .collect();
            for m in 2..n {
                let h: f64 = weights.iter().zip(&self.heights).map(|(w, c)| w * c[m - 2]).sum();
                out.push(u[m] - h);
            }
        }
        out
    }

    fn offset(&self, x: &[f64]) -> Vec<f64> {
        for t in &self.tubes {
            let d = linalg::sub(x, &t.center);
            let s = norm(&d) / t.radius;
            if s >= 1.0 {
                continue;
            }
            if s <= 0.5 {
                return t.inner.iter().map(|r| linalg::dot(r, &d)).collect();
            }
            if s <= 0.75 {
                return mat_vec(&t.path_matrix(smoothstep((s - 0.5) * 4.0)), &d);
            }
            let beta = smoothstep((s - 0.75) * 4.0);
            let lin: Vec<f64> = t.outer.iter().map(|r| linalg::dot(r, &d)).collect();
            return linalg::lerp(&lin, &self.far(x), beta);
        }
        self.far(x)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        linalg::add(&self.regular_value, &self.offset(x))
    }
}

fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let h = 1e-6;
    let mut jac = DMatrix::zeros(n, n);
    let mut z = x.to_vec();
    for j in 0..n {
        z[j] = x[j] + h;
        let a = f(&z);
        z[j] = x[j] - h;
        let b = f(&z);
        z[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    jac
}

/// `Q = G_1 .. G_m D` by Givens elimination; `D` has an even number of `-1`s
/// when `det Q = 1`, paired into `pi`-rotations.
fn givens_decomposition(q: &DMatrix<f64>) -> Result<(Vec<Givens>, Vec<(usize, usize)>)> {
    let n = q.nrows();
    let mut m = q.clone();
    let mut gs = Vec::new();
    for j in 0..n {
        for i in j + 1..n {
            let (a, b) = (m[(j, j)], m[(i, j)]);
            if b == 0.0 {
                continue;
            }
            let r = a.hypot(b);
            let (c, s) = (a / r, b / r);
            for k in 0..n {
                let (rj, ri) = (m[(j, k)], m[(i, k)]);
                m[(j, k)] = c * rj + s * ri;
                m[(i, k)] = -s * rj + c * ri;
            }
            gs.push(Givens { i: j, j: i, angle: s.atan2(c) });
        }
    }
    let negs: Vec<usize> = (0..n).filter(|&i| m[(i, i)] < 0.0).collect();
    if negs.len() % 2 == 1 {
        return Err(Error::Degenerate("orientation mismatch between frame and far-field map".into()));
    }
    let flips = negs.chunks(2).map(|p| (p[0], p[1])).collect();
    Ok((gs, flips))
}

fn random_rotation(n: usize, cfg: &Config, attempt: usize) -> DMatrix<f64> {
    let mut rng = cfg.rng(&format!("pt_construct/rotation/{attempt}"));
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            let col = -q.column(i);
            q.set_column(i, &col);
        }
    }
    if q.determinant() < 0.0 {
        let col = -q.column(0);
        q.set_column(0, &col);
    }
    q
}

fn min_pairwise(points: &[Vec<f64>]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            m = m.min(dist(&points[i], &points[j]));
        }
    }
    m
}

/// Signs at sorted positions in `R^1` must alternate for a proper realization.
fn kappa_1d(points: &[Vec<f64>], signs: &[i32]) -> Result<f64> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a][0].partial_cmp(&points[b][0]).unwrap_or(std::cmp::Ordering::Equal));
    for w in idx.windows(2) {
        if signs[w[0]] == signs[w[1]] {
            return Err(Error::NotRealizable(format!(
                "adjacent points {} and {} carry the same sign; the intermediate value theorem forces another preimage between them",
                points[w[0]][0], points[w[1]][0]
            )));
        }
    }
    let l = points.len() as i32;
    Ok(signs[idx[0]] as f64 * if (l - 1) % 2 == 0 { 1.0 } else { -1.0 })
}

/// Build the collapse map for `fp`. `tube_radius` must be below half the
/// minimum pairwise distance of the points.
pub fn pt_construct(fp: &FramedPoints, tube_radius: f64, cfg: &Config) -> Result<MapSpec> {
    let n = fp.dim();
    if n == 0 {
        return Err(Error::InvalidInput("regular value must be non-empty".into()));
    }
    let sep = min_pairwise(&fp.points);
    if !(tube_radius > 0.0) || tube_radius >= 0.5 * sep {
        return Err(Error::TubeOverlap { radius: tube_radius, separation: sep });
    }
    let mut signs = Vec::with_capacity(fp.len());
    let mut inners = Vec::with_capacity(fp.len());
    for (p, fr) in fp.points.iter().zip(&fp.frames) {
        if p.len() != n || fr.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        let f = linalg::from_columns(fr);
        let det = f.determinant();
        let inv = f
            .try_inverse()
            .filter(|_| det.abs() > 1e-12)
            .ok_or_else(|| Error::InvalidInput("frame vectors are linearly dependent".into()))?;
        signs.push(if det > 0.0 { 1 } else { -1 });
        inners.push(inv);
    }
    let mut map = CollapseMap {
        dim: n,
        regular_value: fp.regular_value.clone(),
        rotation: linalg::to_rows(&DMatrix::identity(n, n)),
        projections: vec![],
        conjugate: vec![],
        heights: vec![],
        roots: vec![],
        kappa: 1.0,
        tubes: vec![],
    };
    if fp.is_empty() {
        return Ok(MapSpec::collapse(map));
    }
    if n == 1 {
        map.kappa = kappa_1d(&fp.points, &signs)?;
        map.roots = fp.points.iter().map(|p| p[0]).collect();
    } else {
        // Pick the rotation whose planar projections are best separated.
        let mut best: Option<(f64, DMatrix<f64>)> = None;
        for attempt in 0..=32 {
            let rot = if attempt == 0 { DMatrix::identity(n, n) } else { random_rotation(n, cfg, attempt) };
            let proj: Vec<Vec<f64>> =
                fp.points.iter().map(|p| mat_vec(&rot, p)[..2].to_vec()).collect();
            let score = if proj.len() < 2 { f64::INFINITY } else { min_pairwise(&proj) };
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, rot));
            }
            if score >= 0.5 * sep {
                break;
            }
        }
        let (score, rot) = best.expect("at least one rotation candidate");
        if fp.len() > 1 && !(score > 1e-6 * sep) {
            return Err(Error::Degenerate("could not separate the planar projections of the points".into()));
        }
        for (p, &s) in fp.points.iter().zip(&signs) {
            let u = mat_vec(&rot, p);
            map.projections.push([u[0], u[1]]);
            map.conjugate.push(s < 0);
            map.heights.push(u[2..].to_vec());
        }
        map.rotation = linalg::to_rows(&rot);
    }
    let dirs = sample_directions(n, 16);
    for ((p, a), &sign) in fp.points.iter().zip(&inners).zip(&signs) {
        let l = fd_jacobian(|x| map.far(x), p);
        if l.determinant().signum() as i32 != sign {
            return Err(Error::Degenerate("far-field map has the wrong local degree".into()));
        }
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("far-field map is singular at a framed point".into()))?;
        let b0 = &l_inv * a;
        let qr = b0.qr();
        let (mut q, mut r) = (qr.q(), qr.r());
        for i in 0..n {
            if r[(i, i)] < 0.0 {
                let col = -q.column(i);
                q.set_column(i, &col);
                let row = -r.row(i);
                r.set_row(i, &row);
            }
        }
        let (givens, flips) = givens_decomposition(&q)?;
        let mut rho = tube_radius;
        let blend_ok = |rho: f64| {
            dirs.iter().all(|d| {
                (0..=4).all(|i| {
                    let s = 0.75 + 0.0625 * i as f64;
                    let off = linalg::scale(d, s * rho);
                    let x = linalg::add(p, &off);
                    let lin = mat_vec(&l, &off);
                    dist(&map.far(&x), &lin) < 0.5 * norm(&lin)
                })
            })
        };
        let mut tries = 0;
        while !blend_ok(rho) {
            rho *= 0.7;
            tries += 1;
            if tries > 60 {
                return Err(Error::Degenerate("no tube radius satisfies the blend condition".into()));
            }
        }
        map.tubes.push(Tube {
            center: p.clone(),
            radius: rho,
            inner: linalg::to_rows(a),
            outer: linalg::to_rows(&l),
            givens,
            flips,
            upper: linalg::to_rows(&r),
        });
    }
    Ok(MapSpec::collapse(map))
}
