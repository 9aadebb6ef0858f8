//! Turn a proper map `g: R^n -> R^k` into a radial map `Pf` through explicit
//! proper homotopies, and extract the boundary sphere map `f`.
//!
//! Stages, each reparametrized to be constant near `t = 0` and `t = 1`:
//!
//! 1. rescale: `g((1 + s (R - 1)) v)`, from `g` to `g(R .)`;
//! 2. clamp: `(1 - s) g(R v) + s h(g(R v))`, ending at `g1 = h ∘ g(R .)`;
//! 3. retract: the norm-preserving `G1`, ending at `g2`;
//! 4. straighten: `(1 - s) g2 + s Pf`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, norm, smoothstep};
use crate::map_model::properness::{escape_search, properness_check_with, sample_directions, ProperReport};
use crate::map_model::{self, radial_extend, MapSpec, SphereMapSpec};

/// A map `[0, 1] x R^n -> R^k`.
pub trait Homotopy: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn codomain_dim(&self) -> usize;
    fn eval(&self, t: f64, v: &[f64]) -> Result<Vec<f64>>;
}

/// Smooth reparametrization, constant on `[0, 0.1]` and `[0.9, 1]`.
pub fn ramp(t: f64) -> f64 {
    smoothstep((t - 0.1) / 0.8)
}

pub use map_model::clamp;

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Rescale { g: MapSpec, radius: f64 },
    Clamp { g: MapSpec, radius: f64, bound: f64 },
    Retract { g1: MapSpec },
    Straighten { g2: MapSpec, pf: MapSpec },
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Rescale { .. } => "rescale",
            Stage::Clamp { .. } => "clamp",
            Stage::Retract { .. } => "retract",
            Stage::Straighten { .. } => "straighten",
        }
    }
}

impl Homotopy for Stage {
    fn domain_dim(&self) -> usize {
        match self {
            Stage::Rescale { g, .. } | Stage::Clamp { g, .. } => g.domain_dim(),
            Stage::Retract { g1 } => g1.domain_dim(),
            Stage::Straighten { g2, .. } => g2.domain_dim(),
        }
    }

    fn codomain_dim(&self) -> usize {
        match self {
            Stage::Rescale { g, .. } | Stage::Clamp { g, .. } => g.codomain_dim(),
            Stage::Retract { g1 } => g1.codomain_dim(),
            Stage::Straighten { g2, .. } => g2.codomain_dim(),
        }
    }

    fn eval(&self, t: f64, v: &[f64]) -> Result<Vec<f64>> {
        let s = ramp(t);
        match self {
            Stage::Rescale { g, radius } => g.eval(&linalg::scale(v, 1.0 + s * (radius - 1.0))),
            Stage::Clamp { g, radius, bound } => {
                let y = g.eval(&linalg::scale(v, *radius))?;
                Ok(linalg::lerp(&y, &clamp(&y, *bound), s))
            }
            Stage::Retract { g1 } => retract_eval(g1, s, v),
            Stage::Straighten { g2, pf } => Ok(linalg::lerp(&g2.eval(v)?, &pf.eval(v)?, s)),
        }
    }
}

/// `G1(s, v)`: `g1(v)` on the unit ball, otherwise `g1(w)` rescaled to norm
/// `|g1(v)|` with `w = (1 - s) v + s v/|v|`.
fn retract_eval(g1: &MapSpec, s: f64, v: &[f64]) -> Result<Vec<f64>> {
    let nv = norm(v);
    let gv = g1.eval(v)?;
    if nv <= 1.0 {
        return Ok(gv);
    }
    let w = linalg::scale(v, (1.0 - s) + s / nv);
    let gw = g1.eval(&w)?;
    let ngw = norm(&gw);
    if ngw < 1e-12 {
        return Err(Error::Degenerate(format!("|g1| = {ngw:e} outside the unit ball at {w:?}")));
    }
    Ok(linalg::scale(&gw, norm(&gv) / ngw))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub t: f64,
    pub report: ProperReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCertificate {
    pub stage: String,
    pub slices: Vec<SliceReport>,
    /// Per radius, the largest escape radius over all slices (`None` on failure).
    pub uniform_escape_radius: Vec<Option<f64>>,
}

impl StageCertificate {
    pub fn passed(&self) -> bool {
        self.slices.iter().all(|s| s.report.passed())
    }
}

pub const CERTIFICATE_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Sample the homotopy slices at `t ∈ {0, .25, .5, .75, 1}` and certify each.
pub fn certify_homotopy(
    name: &str,
    h: &dyn Homotopy,
    radii: &[f64],
    window: f64,
    tol: &Tolerances,
) -> Result<StageCertificate> {
    let slices = CERTIFICATE_TIMES
        .par_iter()
        .map(|&t| {
            properness_check_with(h.domain_dim(), |v| h.eval(t, v), radii, window, tol)
                .map(|report| SliceReport { t, report })
        })
        .collect::<Result<Vec<_>>>()?;
    let uniform_escape_radius = (0..radii.len())
        .map(|i| {
            slices
                .iter()
                .map(|s| s.report.certificates[i].escape_radius)
                .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
        })
        .collect();
    Ok(StageCertificate { stage: name.to_string(), slices, uniform_escape_radius })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyTrack {
    pub stages: Vec<Stage>,
    pub start: MapSpec,
    pub end: MapSpec,
    pub certificates: Vec<StageCertificate>,
}

impl HomotopyTrack {
    /// The concatenated homotopy: stage `i` runs on `t ∈ [i/m, (i+1)/m]`.
    pub fn eval(&self, t: f64, v: &[f64]) -> Result<Vec<f64>> {
        let m = self.stages.len() as f64;
        let x = (t.clamp(0.0, 1.0) * m).min(m - 1e-12);
        let i = x.floor() as usize;
        self.stages[i].eval(x - i as f64, v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationResult {
    pub escape_radius: f64,
    pub sphere_bound: f64,
    pub boundary_map: SphereMapSpec,
    pub track: HomotopyTrack,
    /// Largest sampled `|g1(v)|` over the closed unit ball; at most 1 when
    /// `g1` maps the unit ball into the unit ball.
    pub g1_ball_max_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    pub window: f64,
    pub radii: Vec<f64>,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self { window: 50.0, radii: vec![1.0, 2.0, 4.0] }
    }
}

/// Smallest sampled `R` with `|g(v)| > r` for sampled `|v| ∈ [R, window]`.
pub fn find_escape_radius(g: &MapSpec, r: f64, window: f64, tol: &Tolerances) -> Result<f64> {
    if !g.is_proper() {
        return Err(Error::NotProper("escape radius needs a proper map".into()));
    }
    if !(r >= 1.0) || !(window > 0.0) {
        return Err(Error::InvalidInput(format!("need r >= 1 and a positive window, got r = {r}, window = {window}")));
    }
    escape_search(g.domain_dim(), &|v: &[f64]| g.eval(v), r, window, tol)
        .escape_radius
        .ok_or(Error::EscapeWindowExhausted { r, window })
}

/// `r = max(1, max |g| on the R-sphere)`, padded.
pub fn sphere_bound(g: &MapSpec, radius: f64, tol: &Tolerances) -> Result<f64> {
    let mut m: f64 = 1.0;
    for d in sample_directions(g.domain_dim(), tol.directions_per_dim) {
        m = m.max(norm(&g.eval(&linalg::scale(&d, radius))?));
    }
    Ok(m * (1.0 + tol.sphere_bound_pad))
}

/// `g1 = h ∘ g(R .)`.
pub fn stage_g1(g: &MapSpec, radius: f64, bound: f64) -> Result<MapSpec> {
    let inner = MapSpec::compose(g.clone(), MapSpec::scale(g.domain_dim(), radius))?;
    MapSpec::compose(MapSpec::clamp(g.codomain_dim(), bound)?, inner)
}

pub fn stage_big_g1(g1: &MapSpec) -> Stage {
    Stage::Retract { g1: g1.clone() }
}

pub fn stage_big_g2(g2: &MapSpec, f: &SphereMapSpec) -> Result<Stage> {
    let pf = radial_extend(f);
    if pf.domain_dim() != g2.domain_dim() || pf.codomain_dim() != g2.codomain_dim() {
        return Err(Error::DimensionMismatch { expected: g2.codomain_dim(), got: pf.codomain_dim() });
    }
    Ok(Stage::Straighten { g2: g2.clone(), pf })
}

fn ball_max_norm(g1: &MapSpec, tol: &Tolerances) -> Result<f64> {
    let dirs = sample_directions(g1.domain_dim(), tol.directions_per_dim);
    let mut m = norm(&g1.eval(&vec![0.0; g1.domain_dim()])?);
    for i in 1..=tol.shells {
        let rho = i as f64 / tol.shells as f64;
        for d in &dirs {
            m = m.max(norm(&g1.eval(&linalg::scale(d, rho))?));
        }
    }
    Ok(m)
}

pub fn normalize(g: &MapSpec, opts: &NormalizeOptions, tol: &Tolerances) -> Result<NormalizationResult> {
    if !g.is_proper() {
        return Err(Error::NotProper("normalize needs a proper map".into()));
    }
    let radius = find_escape_radius(g, 1.0, opts.window, tol)?;
    let bound = sphere_bound(g, radius, tol)?;
    let g1 = stage_g1(g, radius, bound)?;
    let g2 = MapSpec::norm_retract(g1.clone());
    let f = SphereMapSpec::restriction(g, radius)?;
    let stages = vec![
        Stage::Rescale { g: g.clone(), radius },
        Stage::Clamp { g: g.clone(), radius, bound },
        stage_big_g1(&g1),
        stage_big_g2(&g2, &f)?,
    ];
    let certificates = stages
        .iter()
        .map(|s| certify_homotopy(s.name(), s, &opts.radii, opts.window, tol))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = certificates.iter().find(|c| !c.passed()) {
        return Err(Error::CertificationFailed(format!("stage `{}` failed the properness check", bad.stage)));
    }
    let g1_ball_max_norm = ball_max_norm(&g1, tol)?;
    let end = radial_extend(&f);
    Ok(NormalizationResult {
        escape_radius: radius,
        sphere_bound: bound,
        boundary_map: f,
        track: HomotopyTrack { stages, start: g.clone(), end, certificates },
        g1_ball_max_norm,
    })
}

/// `F(t, x) = G(t, R x) / |G(t, R x)|` on `[0, 1] x S^{n-1}`.
pub struct BoundaryHomotopy {
    inner: Arc<dyn Homotopy>,
    radius: f64,
}

impl BoundaryHomotopy {
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let nx = norm(x);
        if (nx - 1.0).abs() > map_model::UNIT_NORM_TOL {
            return Err(Error::NotUnit { norm: nx });
        }
        let y = self.inner.eval(t, &linalg::scale(x, self.radius))?;
        let ny = norm(&y);
        if ny < 1e-12 {
            return Err(Error::Degenerate(format!(
                "|G(t, Rx)| = {ny:e} at t = {t}; R = {} is too small, retry with a larger radius",
                self.radius
            )));
        }
        Ok(linalg::scale(&y, 1.0 / ny))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

pub fn boundary_homotopy_from_proper_pair(g: Arc<dyn Homotopy>, radius: f64) -> Result<BoundaryHomotopy> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    Ok(BoundaryHomotopy { inner: g, radius })
}
