//! Job dispatch. Input problems are schema errors; failures inside a
//! computation are reported as structured errors.

use std::fs;

use serde_json::{json, Value};

use properclass::classify::{group_lookup, stability_check};
use properclass::invariants::{proper_class, sphere_invariant, ClassOptions};
use properclass::map_model::certify_proper;
use properclass::normalize::{normalize, NormalizeOptions};
use properclass::pontryagin::{
    extract_framing, format_signs, framed_preimage, parse_signs, preimage_points, pt_construct, realizable_1d,
    realizable_1d_at, sample_fiber_seeds, signed_count, standard_basis, trace_fiber, FramedPoints, SearchBox,
    TraceOptions,
};
use properclass::suite::{counterexample_suite, SuiteItem, SuiteOptions};
use properclass::{Config, Error, MapSpec, SphereMapSpec};

use crate::job::{InvariantName, Job};

#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

/// Successful run: the report, and whether the result counts as a pass.
pub struct Outcome {
    pub report: Value,
    pub ok: bool,
}

fn schema(e: impl std::fmt::Display) -> Failure {
    Failure::Schema(e.to_string())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

fn parse_map(src: &str, hint: Option<usize>) -> Result<MapSpec, Failure> {
    MapSpec::parse(src, hint).map_err(schema)
}

fn parse_sphere_map(src: &str, domain: usize, codomain: usize) -> Result<SphereMapSpec, Failure> {
    let g = SphereMapSpec::parse(src, Some(domain)).map_err(schema)?;
    if g.domain_sphere_dim() != domain || g.codomain_sphere_dim() != codomain {
        return Err(Failure::Schema(format!(
            "expected a map S^{domain} -> S^{codomain}, got S^{} -> S^{}",
            g.domain_sphere_dim(),
            g.codomain_sphere_dim()
        )));
    }
    Ok(g)
}

/// Expression maps carry no properness flag until they pass the check.
fn proper(f: MapSpec, window: f64) -> Result<MapSpec, Failure> {
    if f.is_proper() {
        Ok(f)
    } else {
        Ok(certify_proper(f, window)?)
    }
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Failure::Schema(format!("`{name}` must be a positive number, got {v}")))
    }
}

pub fn run(job: &Job, cfg: &Config) -> Result<Outcome, Failure> {
    let done = |report: Value| Ok(Outcome { report, ok: true });
    match job {
        Job::Classify { m, n, k } => {
            if *n == 0 || *k == 0 {
                return Err(schema("n and k must be positive"));
            }
            let stability = stability_check(*m, *n, *k)?;
            let classes = group_lookup(*n as usize, *k as usize)?;
            done(json!({ "stability": to_value(&stability), "classes": to_value(&classes) }))
        }
        Job::Normalize { map, window, radii } => {
            let window = positive("window", *window)?;
            if radii.is_empty() {
                return Err(schema("`radii` must not be empty"));
            }
            let g = proper(parse_map(map, None)?, window)?;
            let res = normalize(&g, &NormalizeOptions { window, radii: radii.clone() }, &cfg.tol)?;
            done(json!({
                "map": g.to_string(),
                "R": res.escape_radius,
                "r": res.sphere_bound,
                "boundary_map": res.boundary_map.to_string(),
                "g1_ball_max_norm": res.g1_ball_max_norm,
                "certificates": to_value(&res.track.certificates),
            }))
        }
        Job::Invariant { name, map, window, samples, value_pair } => {
            let window = positive("window", *window)?;
            let mut opts = ClassOptions { window, ..ClassOptions::default() };
            if let Some(s) = samples {
                opts.winding_samples = *s;
            }
            if let Some(p) = value_pair {
                opts.hopf_pair = *p;
            }
            let report = match name {
                InvariantName::Winding => sphere_invariant(&parse_sphere_map(map, 1, 1)?, &opts, cfg)?,
                InvariantName::Degree2 => sphere_invariant(&parse_sphere_map(map, 2, 2)?, &opts, cfg)?,
                InvariantName::Hopf => sphere_invariant(&parse_sphere_map(map, 3, 2)?, &opts, cfg)?,
                InvariantName::EndSigns => {
                    let f = parse_map(map, Some(1))?;
                    if f.domain_dim() != 1 || f.codomain_dim() != 1 {
                        return Err(schema("end_signs needs a map R -> R"));
                    }
                    proper_class(&proper(f, window)?, &opts, cfg)?
                }
                InvariantName::Class => proper_class(&proper(parse_map(map, None)?, window)?, &opts, cfg)?,
            };
            done(to_value(&report))
        }
        Job::PontryaginExtract { map, value, perturbation, half_width, step, csv } => {
            let f = parse_map(map, None)?;
            let (n, k) = (f.domain_dim(), f.codomain_dim());
            if let Some(y) = value {
                if y.len() != k {
                    return Err(schema(format!("`value` must have {k} entries")));
                }
            }
            if n == k {
                let f = proper(f, DEFAULT_EXTRACT_WINDOW)?;
                let y0 = value.clone().unwrap_or_else(|| vec![0.0; k]);
                let hw = positive("half_width", half_width.unwrap_or(8.0))?;
                let fp = framed_preimage(&f, &y0, perturbation.unwrap_or(0.05), &SearchBox::new(hw), &cfg.tol)?;
                done(json!({
                    "dimension": 0,
                    "signed_count": signed_count(&fp),
                    "framed_points": to_value(&fp),
                }))
            } else if n == k + 1 {
                let y = value.clone().ok_or_else(|| schema("fiber extraction needs `value`"))?;
                let hw = positive("half_width", half_width.unwrap_or(2.0))?;
                let mut opts = TraceOptions::new(&cfg.tol);
                if let Some(s) = step {
                    opts.step = positive("step", *s)?;
                }
                let mut rng = cfg.rng("extract/seeds");
                let seeds = sample_fiber_seeds(&f, &y, hw, 20_000, 256, &mut rng, &cfg.tol)?;
                let curve = trace_fiber(&f, &y, &seeds, &opts, &cfg.tol)?;
                if let Some(path) = csv {
                    fs::write(path, curve.to_csv())
                        .map_err(|e| Failure::Compute(Error::InvalidInput(format!("cannot write {}: {e}", path.display()))))?;
                }
                done(json!({
                    "dimension": 1,
                    "regular_value": y,
                    "components": curve.polylines.len(),
                    "vertices": curve.polylines.iter().map(|p| p.vertices.len()).collect::<Vec<_>>(),
                    "lengths": curve.polylines.iter().map(|p| p.length()).collect::<Vec<_>>(),
                    "closed": curve.polylines.iter().all(|p| p.closed),
                    "max_vertex_residual": curve.max_vertex_residual(),
                    "max_midpoint_residual": curve.max_midpoint_residual(),
                    "certified": curve.certified(&cfg.tol),
                    "csv": csv.as_ref().map(|p| p.display().to_string()),
                }))
            } else {
                Err(schema(format!("extraction supports n = k or n = k + 1, got R^{n} -> R^{k}")))
            }
        }
        Job::PontryaginConstruct { points, frames, regular_value, tube_radius } => {
            let tube_radius = positive("tube_radius", *tube_radius)?;
            let fp = FramedPoints::from_frames(points.clone(), frames.clone(), regular_value.clone()).map_err(schema)?;
            let f = pt_construct(&fp, tube_radius, cfg)?;
            let reach = points.iter().flatten().fold(0.0f64, |m, c| m.max(c.abs()));
            let pts = preimage_points(&f, regular_value, reach + tube_radius + 1.0, &cfg.tol)?;
            let back = extract_framing(&f, &pts, regular_value, &standard_basis(fp.dim()), &cfg.tol)?;
            let ok = signed_count(&back) == signed_count(&fp) && back.len() == fp.len();
            Ok(Outcome {
                report: json!({
                    "map": f.to_string(),
                    "signed_count": signed_count(&fp),
                    "extracted_signed_count": signed_count(&back),
                    "extracted": to_value(&back),
                    "round_trip": ok,
                }),
                ok,
            })
        }
        Job::PontryaginRealizable { signs, positions } => {
            let s = parse_signs(signs).map_err(schema)?;
            let r = match positions {
                Some(p) => realizable_1d_at(p, &s).map_err(schema)?,
                None => realizable_1d(&s)?,
            };
            done(json!({
                "signs": format_signs(&r.signs),
                "positions": r.positions,
                "realizable": r.realizable,
                "certificate": to_value(&r.certificate),
                "witness": r.witness.as_ref().map(|w| w.to_string()),
            }))
        }
        Job::Counterexamples { items, fiber_step, window } => {
            let items = items.clone().unwrap_or_else(|| SuiteItem::ALL.to_vec());
            if items.is_empty() {
                return Err(schema("the suite catalog is empty"));
            }
            if let Some(s) = fiber_step {
                positive("fiber_step", *s)?;
            }
            let opts = SuiteOptions { items, fiber_step: *fiber_step, window: positive("window", *window)? };
            let r = counterexample_suite(&opts, cfg)?;
            Ok(Outcome { ok: r.passed, report: to_value(&r) })
        }
    }
}

const DEFAULT_EXTRACT_WINDOW: f64 = 50.0;
