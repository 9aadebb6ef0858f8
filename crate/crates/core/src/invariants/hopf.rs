use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::linking::{linking_number, stereographic};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, dist};
use crate::map_model::{radial_extend, MapSpec, SphereMapSpec};
use crate::pontryagin::{polish_onto_fiber, trace_fiber, FramedCurve, TraceOptions};

/// Regular-value pairs on `S^2`, kept away from both poles.
pub const HOPF_VALUE_PAIRS: [[[f64; 3]; 2]; 3] = [
    [[1.0, 0.2, 0.3], [-0.3, 1.0, -0.4]],
    [[0.2, -1.0, 0.5], [0.9, 0.5, -0.2]],
    [[-1.0, -0.4, 0.1], [0.1, 0.7, 0.6]],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfOptions {
    pub trace: TraceOptions,
    /// Points sampled on `S^3` to seed the fibers.
    pub samples: usize,
    /// Samples farther than this from the value (in `S^2`) are not used as seeds.
    pub seed_residual: f64,
}

impl HopfOptions {
    pub fn new(cfg: &Config) -> Self {
        Self { trace: TraceOptions::new(&cfg.tol), samples: 4096, seed_residual: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSummary {
    pub regular_value: Vec<f64>,
    pub components: usize,
    pub vertices: usize,
    pub length: f64,
    pub max_vertex_residual: f64,
    pub max_midpoint_residual: f64,
    pub certified: bool,
}

impl FiberSummary {
    fn of(c: &FramedCurve, cfg: &Config) -> Self {
        Self {
            regular_value: c.regular_value.clone(),
            components: c.polylines.len(),
            vertices: c.polylines.iter().map(|p| p.vertices.len()).sum(),
            length: c.polylines.iter().map(|p| p.length()).sum(),
            max_vertex_residual: c.max_vertex_residual(),
            max_midpoint_residual: c.max_midpoint_residual(),
            certified: c.certified(&cfg.tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfReport {
    pub value: i64,
    /// Linking number of component `i` of the first fiber with component `j` of the second.
    pub component_linking: Vec<Vec<i64>>,
    pub fibers: [FiberSummary; 2],
    /// Both fibers closed and within the residual tolerances.
    pub certified: bool,
}

fn seeds_for(g: &SphereMapSpec, pg: &MapSpec, y: &[f64], opts: &HopfOptions, cfg: &Config) -> Result<Vec<Vec<f64>>> {
    let mut rng = cfg.rng("hopf/seeds");
    let mut candidates = Vec::new();
    for _ in 0..opts.samples {
        let v: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
        let Some(x) = linalg::normalized(&v) else { continue };
        let r = dist(&g.eval(&x)?, y);
        if r < opts.seed_residual {
            candidates.push((r, x));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for (_, x) in candidates {
        if let Some(p) = polish_onto_fiber(pg, y, &x, &cfg.tol) {
            if seeds.iter().all(|s| dist(s, &p) > 1e-6) {
                seeds.push(p);
            }
        }
    }
    Ok(seeds)
}

/// Every component of `g^{-1}(y)` reached by the sampled seeds, traced on the
/// radial extension. The orientation comes from the pulled-back frames. No
/// sample near `y` means an empty fiber.
pub fn hopf_fiber(g: &SphereMapSpec, y: &[f64], opts: &HopfOptions, cfg: &Config) -> Result<FramedCurve> {
    let pg = radial_extend(g);
    let seeds = seeds_for(g, &pg, y, opts, cfg)?;
    trace_fiber(&pg, y, &seeds, &opts.trace, &cfg.tol)
}

/// Hopf invariant as the linking number of the fibers over `y1` and `y2`
/// after stereographic projection to `R^3`.
pub fn hopf_invariant_at(g: &SphereMapSpec, y1: &[f64], y2: &[f64], opts: &HopfOptions, cfg: &Config) -> Result<HopfReport> {
    if g.domain_sphere_dim() != 3 || g.codomain_sphere_dim() != 2 {
        return Err(Error::InvalidInput("Hopf invariant needs a map S^3 -> S^2".into()));
    }
    let unit = |y: &[f64]| {
        if y.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: y.len() });
        }
        linalg::normalized(y).ok_or_else(|| Error::InvalidInput("regular value must be nonzero".into()))
    };
    let (y1, y2) = (unit(y1)?, unit(y2)?);
    if dist(&y1, &y2) < 1e-3 {
        return Err(Error::InvalidInput("the two regular values must be distinct".into()));
    }
    let (a, b) = rayon::join(|| hopf_fiber(g, &y1, opts, cfg), || hopf_fiber(g, &y2, opts, cfg));
    let (a, b) = (a?, b?);
    let curves: Vec<&[Vec<f64>]> =
        a.polylines.iter().chain(&b.polylines).map(|p| p.vertices.as_slice()).collect();
    let projected = stereographic(&curves, cfg.tol.pole_clearance, &mut cfg.rng("hopf/pole"))?;
    let (pa, pb) = projected.split_at(a.polylines.len());
    let mut rng = cfg.rng("hopf/linking");
    let component_linking = pa
        .iter()
        .map(|ca| pb.iter().map(|cb| linking_number(ca, cb, &mut rng)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let value = component_linking.iter().flatten().sum();
    let fibers = [FiberSummary::of(&a, cfg), FiberSummary::of(&b, cfg)];
    let certified = fibers.iter().all(|f| f.certified);
    Ok(HopfReport { value, component_linking, fibers, certified })
}

/// Hopf invariant at the first default pair; fails unless both fibers certify.
pub fn hopf_invariant(g: &SphereMapSpec, cfg: &Config) -> Result<i64> {
    let [y1, y2] = HOPF_VALUE_PAIRS[0];
    let r = hopf_invariant_at(g, &y1, &y2, &HopfOptions::new(cfg), cfg)?;
    if !r.certified {
        return Err(Error::CertificationFailed("traced fibers failed the residual checks".into()));
    }
    Ok(r.value)
}
