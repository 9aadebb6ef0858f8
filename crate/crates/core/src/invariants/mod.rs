//! Complete proper-homotopy invariants for the small `(n, k)` cases.

mod degree;
mod end_signs;
mod hopf;
mod linking;
mod winding;

pub use degree::{degree_s2, degree_s2_count, DegreeCount, DEFAULT_DEGREE_TARGET};
pub use end_signs::{end_sign, end_signs, SignPair};
pub use hopf::{hopf_fiber, hopf_invariant, hopf_invariant_at, FiberSummary, HopfOptions, HopfReport, HOPF_VALUE_PAIRS};
pub use linking::{linking_number, stereographic};
pub use winding::winding_number;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{group_lookup, ClassSet};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::map_model::{MapSpec, SphereMapSpec};
use crate::normalize::{normalize, NormalizeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantCase {
    Winding,
    Degree2,
    Hopf,
    EndSigns,
    TrivialRange,
    /// No element computation for this `(n, k)`; only the class set is reported.
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ClassValue {
    Integer(i64),
    SignPair(SignPair),
    /// The end sign of a map `R^n -> R`, `n > 1`.
    Sign(i32),
    /// The only class.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub case: InvariantCase,
    pub n: usize,
    pub k: usize,
    pub value: Option<ClassValue>,
    pub method: String,
    pub certificates: BTreeMap<String, f64>,
    pub classes: ClassSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassOptions {
    pub window: f64,
    pub winding_samples: usize,
    pub degree_target: [f64; 3],
    /// Index into [`HOPF_VALUE_PAIRS`].
    pub hopf_pair: usize,
    pub radii: Vec<f64>,
}

impl Default for ClassOptions {
    fn default() -> Self {
        Self {
            window: 50.0,
            winding_samples: 4096,
            degree_target: DEFAULT_DEGREE_TARGET,
            hopf_pair: 0,
            radii: vec![1.0, 2.0, 4.0],
        }
    }
}

fn sign_of(v: f64) -> Result<i32> {
    if v > 0.0 {
        Ok(1)
    } else if v < 0.0 {
        Ok(-1)
    } else {
        Err(Error::Degenerate("sphere map value is zero".into()))
    }
}

fn report(case: InvariantCase, n: usize, k: usize, value: Option<ClassValue>, method: &str) -> Result<InvariantReport> {
    Ok(InvariantReport {
        case,
        n,
        k,
        value,
        method: method.into(),
        certificates: BTreeMap::new(),
        classes: group_lookup(n, k)?,
    })
}

/// The invariant of a sphere map `S^{n-1} -> S^{k-1}`, which is also the
/// class of its radial extension.
pub fn sphere_invariant(g: &SphereMapSpec, opts: &ClassOptions, cfg: &Config) -> Result<InvariantReport> {
    let (n, k) = (g.domain_sphere_dim() + 1, g.codomain_sphere_dim() + 1);
    match (n, k) {
        (1, 1) => {
            let pair = SignPair { minus: sign_of(g.eval(&[-1.0])?[0])?, plus: sign_of(g.eval(&[1.0])?[0])? };
            report(InvariantCase::EndSigns, n, k, Some(ClassValue::SignPair(pair)), "values at -1 and +1 read as signs")
        }
        (_, 1) => {
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            let s = sign_of(g.eval(&x)?[0])?;
            report(InvariantCase::EndSigns, n, k, Some(ClassValue::Sign(s)), "sign at e1 (the domain sphere is connected)")
        }
        _ if n < k => report(InvariantCase::TrivialRange, n, k, Some(ClassValue::Trivial), "n < k: a single class"),
        (2, 2) => {
            let w = winding_number(g, opts.winding_samples)?;
            let mut r = report(InvariantCase::Winding, n, k, Some(ClassValue::Integer(w)), "winding number by angle accumulation")?;
            r.certificates.insert("samples".into(), opts.winding_samples as f64);
            Ok(r)
        }
        (3, 3) => {
            let c = degree_s2_count(g, &opts.degree_target, &cfg.tol)?;
            let mut r = report(
                InvariantCase::Degree2,
                n,
                k,
                Some(ClassValue::Integer(c.degree)),
                "signed preimage count of a regular value on S^2",
            )?;
            r.certificates.insert("preimage_points".into(), c.points as f64);
            r.certificates.insert("regular_value_attempts".into(), c.attempts as f64);
            Ok(r)
        }
        (4, 3) => {
            let [y1, y2] = *HOPF_VALUE_PAIRS
                .get(opts.hopf_pair)
                .ok_or_else(|| Error::InvalidInput(format!("no regular value pair {}", opts.hopf_pair)))?;
            let h = hopf_invariant_at(g, &y1, &y2, &HopfOptions::new(cfg), cfg)?;
            if !h.certified {
                return Err(Error::CertificationFailed("traced fibers failed the residual checks".into()));
            }
            let mut r = report(
                InvariantCase::Hopf,
                n,
                k,
                Some(ClassValue::Integer(h.value)),
                "linking number of two traced regular fibers after stereographic projection",
            )?;
            for (i, f) in h.fibers.iter().enumerate() {
                r.certificates.insert(format!("fiber{}_components", i + 1), f.components as f64);
                r.certificates.insert(format!("fiber{}_vertices", i + 1), f.vertices as f64);
                r.certificates.insert(format!("fiber{}_max_vertex_residual", i + 1), f.max_vertex_residual);
                r.certificates.insert(format!("fiber{}_max_midpoint_residual", i + 1), f.max_midpoint_residual);
            }
            Ok(r)
        }
        _ => report(InvariantCase::Unsupported, n, k, None, "no element computation for this (n, k)"),
    }
}

/// Class of a proper map `R^n -> R^k`: computed directly for `k = 1` and
/// `n < k`, otherwise through the boundary map of the normalized map.
pub fn proper_class(f: &MapSpec, opts: &ClassOptions, cfg: &Config) -> Result<InvariantReport> {
    if !f.is_proper() {
        return Err(Error::NotProper("proper_class needs a map flagged proper".into()));
    }
    let (n, k) = (f.domain_dim(), f.codomain_dim());
    if n < k {
        return report(InvariantCase::TrivialRange, n, k, Some(ClassValue::Trivial), "n < k: a single class");
    }
    if k == 1 {
        let (value, method) = if n == 1 {
            (ClassValue::SignPair(end_signs(f, opts.window, &cfg.tol)?), "signs of f near -window and +window")
        } else {
            (ClassValue::Sign(end_sign(f, opts.window, &cfg.tol)?), "sign of f on the window sphere")
        };
        let mut r = report(InvariantCase::EndSigns, n, k, Some(value), method)?;
        r.certificates.insert("window".into(), opts.window);
        return Ok(r);
    }
    if !matches!((n, k), (2, 2) | (3, 3) | (4, 3)) {
        return report(InvariantCase::Unsupported, n, k, None, "no element computation for this (n, k)");
    }
    let norm = normalize(f, &NormalizeOptions { window: opts.window, radii: opts.radii.clone() }, &cfg.tol)?;
    let mut r = sphere_invariant(&norm.boundary_map, opts, cfg)?;
    r.method = format!("{} of the boundary map x -> g(Rx)/|g(Rx)|", r.method);
    r.certificates.insert("escape_radius".into(), norm.escape_radius);
    r.certificates.insert("sphere_bound".into(), norm.sphere_bound);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::radial_extend;

    #[test]
    fn one_dimensional_examples() {
        let cfg = Config::default();
        let o = ClassOptions::default();
        let sq = MapSpec::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
        let neg = MapSpec::polynomial(vec![0.0, 0.0, -1.0]).unwrap();
        let a = proper_class(&sq, &o, &cfg).unwrap();
        let b = proper_class(&neg, &o, &cfg).unwrap();
        assert_eq!(a.value, Some(ClassValue::SignPair(SignPair { minus: 1, plus: 1 })));
        assert_eq!(b.value, Some(ClassValue::SignPair(SignPair { minus: -1, plus: -1 })));
        assert_eq!(a.case, InvariantCase::EndSigns);
    }

    #[test]
    fn trivial_and_unsupported_ranges() {
        let cfg = Config::default();
        let o = ClassOptions::default();
        let mut rows = vec![vec![0.0, 0.0]; 5];
        rows[0][0] = 1.0;
        rows[1][1] = 1.0;
        let f = MapSpec::linear(rows).unwrap();
        let r = proper_class(&f, &o, &cfg).unwrap();
        assert_eq!((r.case, r.value), (InvariantCase::TrivialRange, Some(ClassValue::Trivial)));
        let g = radial_extend(&crate::map_model::suspend_sphere(&SphereMapSpec::hopf()));
        let r = proper_class(&g, &o, &cfg).unwrap();
        assert_eq!(r.case, InvariantCase::Unsupported);
        assert!(r.value.is_none());
        assert_eq!(r.classes.group().unwrap().to_string(), "Z/2");
    }

    #[test]
    fn planar_powers_through_normalization() {
        let cfg = Config::default();
        let o = ClassOptions::default();
        for d in [-2, 0, 3] {
            let f = radial_extend(&SphereMapSpec::circle_power(d));
            assert_eq!(proper_class(&f, &o, &cfg).unwrap().value, Some(ClassValue::Integer(d as i64)));
        }
    }

    #[test]
    fn zero_sphere_maps() {
        let cfg = Config::default();
        let o = ClassOptions::default();
        let anti = SphereMapSpec::antipodal(0);
        let r = sphere_invariant(&anti, &o, &cfg).unwrap();
        assert_eq!(r.value, Some(ClassValue::SignPair(SignPair { minus: 1, plus: -1 })));
        let r = proper_class(&radial_extend(&anti), &o, &cfg).unwrap();
        assert_eq!(r.value, Some(ClassValue::SignPair(SignPair { minus: 1, plus: -1 })));
    }
}
