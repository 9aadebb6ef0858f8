//! Sampling-based properness certificates.
//!
//! For each target radius `r` we look for the smallest sampled `R` such that
//! every sample with `|v|` in `[R, window]` maps outside the closed `r`-ball.
//! A pass is evidence from a finite sample, not a proof.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::MapSpec;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{norm, scale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusCertificate {
    pub r: f64,
    /// Smallest sampled escape radius, `None` when the window was exhausted.
    pub escape_radius: Option<f64>,
    /// Smallest sampled `|g(v)|` on the outermost shell.
    pub min_norm_at_window: f64,
}

impl RadiusCertificate {
    pub fn passed(&self) -> bool {
        self.escape_radius.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperReport {
    pub window: f64,
    pub shells: usize,
    pub directions: usize,
    pub certificates: Vec<RadiusCertificate>,
}

impl ProperReport {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(RadiusCertificate::passed)
    }
}

/// Unit sample directions in `R^n`: `{±1}` for `n = 1`, equally spaced angles
/// for `n = 2`, and a fixed pseudo-random set plus the coordinate axes otherwise.
pub fn sample_directions(n: usize, per_dim: usize) -> Vec<Vec<f64>> {
    let count = per_dim * n;
    match n {
        0 => vec![],
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..count)
            .map(|i| {
                let a = std::f64::consts::TAU * (i as f64 + 0.5) / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut dirs = Vec::with_capacity(count);
            for i in 0..n {
                for s in [-1.0, 1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = s;
                    dirs.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1ab1e ^ n as u64);
            while dirs.len() < count {
                let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let ng = norm(&g);
                if ng > 1e-6 {
                    dirs.push(scale(&g, 1.0 / ng));
                }
            }
            dirs
        }
    }
}

/// Log-spaced shell radii from `window * 1e-3` up to `window`.
pub fn shell_radii(window: f64, shells: usize) -> Vec<f64> {
    let lo = (window * 1e-3).ln();
    let hi = window.ln();
    let m = shells.max(2);
    (0..m).map(|i| (lo + (hi - lo) * i as f64 / (m - 1) as f64).exp()).collect()
}

fn shell_min_norm<F>(eval: &F, dirs: &[Vec<f64>], rho: f64) -> f64
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    dirs.iter()
        .map(|d| match eval(&scale(d, rho)) {
            Ok(y) if y.iter().all(|c| c.is_finite()) => norm(&y),
            _ => f64::NAN,
        })
        .fold(f64::INFINITY, |acc, x| if x.is_nan() || acc.is_nan() { f64::NAN } else { acc.min(x) })
}

/// Escape search for a single `r` over an arbitrary evaluator.
pub fn escape_search<F>(n: usize, eval: &F, r: f64, window: f64, tol: &Tolerances) -> RadiusCertificate
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dirs = sample_directions(n, tol.directions_per_dim);
    let radii = shell_radii(window, tol.shells);
    let passes = |rho: f64| {
        let m = shell_min_norm(eval, &dirs, rho);
        (m > r, m)
    };
    let mut outer_min = f64::NAN;
    let mut first_pass: Option<usize> = None;
    for (i, &rho) in radii.iter().enumerate().rev() {
        let (ok, m) = passes(rho);
        if i + 1 == radii.len() {
            outer_min = m;
        }
        if !ok {
            break;
        }
        first_pass = Some(i);
    }
    let escape_radius = match first_pass {
        None => None,
        Some(0) => Some(radii[0]),
        Some(i) => {
            let (mut lo, mut hi) = (radii[i - 1], radii[i]);
            for _ in 0..48 {
                let mid = 0.5 * (lo + hi);
                if passes(mid).0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-12 * hi {
                    break;
                }
            }
            Some(hi)
        }
    };
    RadiusCertificate { r, escape_radius, min_norm_at_window: outer_min }
}

fn validate(radii: &[f64], window: f64) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidInput("properness check needs at least one radius".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("radii must be positive and increasing".into()));
    }
    if !(window > radii[radii.len() - 1]) {
        return Err(Error::InvalidInput("window must exceed the largest radius".into()));
    }
    Ok(())
}

/// Properness report for an arbitrary evaluator on `R^n`.
pub fn properness_check_with<F>(n: usize, eval: F, radii: &[f64], window: f64, tol: &Tolerances) -> Result<ProperReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    validate(radii, window)?;
    let certificates = radii.iter().map(|&r| escape_search(n, &eval, r, window, tol)).collect();
    Ok(ProperReport {
        window,
        shells: tol.shells,
        directions: sample_directions(n, tol.directions_per_dim).len(),
        certificates,
    })
}

pub fn properness_check(spec: &MapSpec, radii: &[f64], window: f64) -> Result<ProperReport> {
    properness_check_with(spec.domain_dim(), |v| spec.eval(v), radii, window, &Tolerances::default())
}

/// Flag a map proper after it passes `properness_check` at `r ∈ {1, 2, 4}`.
pub fn certify_proper(spec: MapSpec, window: f64) -> Result<MapSpec> {
    let report = properness_check(&spec, &[1.0, 2.0, 4.0], window)?;
    if report.passed() {
        Ok(spec.with_proper_flag(true))
    } else {
        let failed = report.certificates.iter().find(|c| !c.passed()).map_or(0.0, |c| c.r);
        Err(Error::NotProper(format!("no escape radius for r = {failed} within window {window}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::{radial_extend, SphereMapSpec};

    #[test]
    fn identity_escapes_at_r() {
        let rep = properness_check(&MapSpec::identity(2), &[1.0], 10.0).unwrap();
        let big_r = rep.certificates[0].escape_radius.unwrap();
        assert!((big_r - 1.0).abs() < 1e-9, "{big_r}");
    }

    #[test]
    fn radial_maps_escape_at_r() {
        for g in [SphereMapSpec::circle_power(3), SphereMapSpec::hopf(), SphereMapSpec::antipodal(0)] {
            let p = radial_extend(&g);
            let rep = properness_check(&p, &[1.0, 2.0, 4.0], 20.0).unwrap();
            for c in &rep.certificates {
                let big_r = c.escape_radius.unwrap();
                assert!((big_r - c.r).abs() < 1e-8 * c.r, "{g}: r={} R={big_r}", c.r);
            }
        }
    }

    #[test]
    fn non_proper_family_shows_escape_radius_growth() {
        // Slices x -> (1-s) x^2 + x have a second root at x = -1/(1-s), so the
        // escape radius for r = 1 blows up as s -> 1. The bad interval around
        // that root is narrow, so the shells must be finer than the default.
        let tol = Tolerances { shells: 512, ..Tolerances::default() };
        let mut last = 0.0;
        for eps in [0.1, 0.05, 0.025] {
            let m: MapSpec = format!("{eps} * x1^2 + x1").parse().unwrap();
            let rep = properness_check_with(1, |v| m.eval(v), &[1.0], 200.0, &tol).unwrap();
            let big_r = rep.certificates[0].escape_radius.unwrap();
            assert!(big_r > 1.0 / eps && big_r > last, "eps={eps} R={big_r}");
            last = big_r;
        }
        // The family itself, (x, s) -> ((1-s) x^2 + x, s), sends (-n, 1 - 1/n) to (0, 1 - 1/n).
        let m: MapSpec = "[(1 - x2) * x1^2 + x1, x2]".parse().unwrap();
        for n in [10.0, 100.0, 1000.0] {
            let y = m.eval(&[-n, 1.0 - 1.0 / n]).unwrap();
            assert!(norm(&y) < 1.0 + 1e-9);
        }
        // A constant map is never proper.
        let c = MapSpec::constant(2, vec![5.0, 0.0]);
        assert!(!properness_check(&c, &[1.0, 10.0], 50.0).unwrap().passed());
    }

    #[test]
    fn escape_radius_grows_with_r() {
        let sq: MapSpec = "x1^2".parse().unwrap();
        let rep = properness_check(&sq, &[1.0, 4.0, 9.0], 100.0).unwrap();
        let rs: Vec<f64> = rep.certificates.iter().map(|c| c.escape_radius.unwrap()).collect();
        assert!((rs[0] - 1.0).abs() < 1e-9 && (rs[1] - 2.0).abs() < 1e-9 && (rs[2] - 3.0).abs() < 1e-9);
        assert!(certify_proper(sq, 100.0).unwrap().is_proper());
    }

    #[test]
    fn rejects_bad_arguments() {
        let id = MapSpec::identity(1);
        assert!(properness_check(&id, &[], 10.0).is_err());
        assert!(properness_check(&id, &[2.0, 1.0], 10.0).is_err());
        assert!(properness_check(&id, &[1.0], 0.5).is_err());
    }
}
