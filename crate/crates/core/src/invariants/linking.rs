//! Linking numbers of closed polylines by signed crossings in a generic
//! projection, and stereographic projection of curves in `S^3`.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, dist, dot};

const RETRIES: usize = 32;
const EPS: f64 = 1e-9;

fn random_rotation3(rng: &mut impl Rng) -> Matrix3<f64> {
    loop {
        let q: Vec<f64> = (0..4).map(|_| StandardNormal.sample(rng)).collect();
        let n = linalg::norm(&q);
        if n < 1e-6 {
            continue;
        }
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        return Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
    }
}

/// Segments of a closed curve; a missing closing segment is added.
fn segments(curve: &[Vec<f64>]) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    let pts: Vec<Vector3<f64>> = curve.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect();
    let mut segs: Vec<_> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
        if (first - last).norm() > 0.0 {
            segs.push((*last, *first));
        }
    }
    segs
}

fn cross2(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Distance between segments `p0 p1` and `q0 q1` in `R^3`.
fn segment_gap(p0: &Vector3<f64>, p1: &Vector3<f64>, q0: &Vector3<f64>, q1: &Vector3<f64>) -> f64 {
    let (d1, d2, r) = (p1 - p0, q1 - q0, p0 - q0);
    let (a, e, f) = (d1.dot(&d1), d2.dot(&d2), d2.dot(&r));
    let (c, b) = (d1.dot(&r), d1.dot(&d2));
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = if e > 0.0 { (b * s + f) / e } else { 0.0 };
    if t < 0.0 {
        t = 0.0;
        s = if a > 0.0 { (-c / a).clamp(0.0, 1.0) } else { 0.0 };
    } else if t > 1.0 {
        t = 1.0;
        s = if a > 0.0 { ((b - c) / a).clamp(0.0, 1.0) } else { 0.0 };
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

enum Outcome {
    Count(i64),
    Degenerate,
    Touching,
}

fn count_crossings(a: &[(Vector3<f64>, Vector3<f64>)], b: &[(Vector3<f64>, Vector3<f64>)], scale: f64) -> Outcome {
    let mut a_over = 0i64;
    let mut b_over = 0i64;
    for (p0, p1) in a {
        let r = p1 - p0;
        let (ax0, ax1) = (p0.x.min(p1.x), p0.x.max(p1.x));
        let (ay0, ay1) = (p0.y.min(p1.y), p0.y.max(p1.y));
        for (q0, q1) in b {
            if q0.x.max(q1.x) < ax0 || q0.x.min(q1.x) > ax1 || q0.y.max(q1.y) < ay0 || q0.y.min(q1.y) > ay1 {
                continue;
            }
            let w = q1 - q0;
            let denom = cross2(&r, &w);
            let d = q0 - p0;
            if denom.abs() <= EPS * r.xy().norm() * w.xy().norm() {
                // Parallel in projection: only a problem if the shadows overlap.
                if cross2(&d, &r).abs() <= EPS * r.xy().norm() * scale {
                    return Outcome::Degenerate;
                }
                continue;
            }
            let s = cross2(&d, &w) / denom;
            let u = cross2(&d, &r) / denom;
            let inside = |t: f64| t > -EPS && t < 1.0 + EPS;
            if !inside(s) || !inside(u) {
                continue;
            }
            let near_end = |t: f64| t < EPS || t > 1.0 - EPS;
            if near_end(s) || near_end(u) {
                return Outcome::Degenerate;
            }
            let za = p0.z + s * r.z;
            let zb = q0.z + u * w.z;
            if (za - zb).abs() <= 1e-12 * scale {
                return Outcome::Touching;
            }
            // Right-handed crossings count +1: (over x under) points at the viewer.
            if za > zb {
                a_over += cross2(&r, &w).signum() as i64;
            } else {
                b_over += cross2(&w, &r).signum() as i64;
            }
        }
    }
    if a_over == b_over {
        Outcome::Count(a_over)
    } else {
        Outcome::Degenerate
    }
}

/// Linking number of two disjoint closed polylines in `R^3`.
pub fn linking_number(a: &[Vec<f64>], b: &[Vec<f64>], rng: &mut impl Rng) -> Result<i64> {
    if a.iter().chain(b).any(|p| p.len() != 3) {
        return Err(Error::InvalidInput("linking number needs curves in R^3".into()));
    }
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::InvalidInput("each curve needs at least three vertices".into()));
    }
    let scale = a.iter().chain(b).map(|p| linalg::norm(p)).fold(1.0, f64::max);
    let (sa, sb) = (segments(a), segments(b));
    let touch = 1e-9 * scale;
    if sa.iter().any(|(p0, p1)| sb.iter().any(|(q0, q1)| segment_gap(p0, p1, q0, q1) <= touch)) {
        return Err(Error::CurvesIntersect);
    }
    let mut touching = 0;
    for _ in 0..RETRIES {
        let rot = random_rotation3(rng);
        let ra: Vec<_> = sa.iter().map(|(p, q)| (rot * p, rot * q)).collect();
        let rb: Vec<_> = sb.iter().map(|(p, q)| (rot * p, rot * q)).collect();
        match count_crossings(&ra, &rb, scale) {
            Outcome::Count(c) => return Ok(c),
            Outcome::Touching => touching += 1,
            Outcome::Degenerate => {}
        }
    }
    if touching > RETRIES / 2 {
        return Err(Error::CurvesIntersect);
    }
    Err(Error::Degenerate("no generic projection found for the linking number".into()))
}

/// Stereographic projection of curves on `S^3` from a pole clearing every
/// vertex by `clearance`, oriented so `S^3` (outward normal first) maps
/// orientation-preservingly onto `R^3`.
pub fn stereographic(curves: &[&[Vec<f64>]], clearance: f64, rng: &mut impl Rng) -> Result<Vec<Vec<Vec<f64>>>> {
    for _ in 0..256 {
        let g: Vec<f64> = (0..4).map(|_| StandardNormal.sample(rng)).collect();
        let Some(p) = linalg::normalized(&g) else { continue };
        let clear = curves.iter().flat_map(|c| c.iter()).all(|v| {
            let u = linalg::normalized(v).unwrap_or_else(|| v.clone());
            dist(&u, &p) >= clearance
        });
        if !clear {
            continue;
        }
        // Orthonormal basis (p, b1, b2, b3) with det = -1; this matches the
        // standard projection from e4, which is orientation-preserving.
        let mut m = DMatrix::from_fn(4, 4, |i, j| if j == 0 { p[i] } else if i + 1 == j { 1.0 } else { 0.0 });
        if p[0].abs() > 0.9 {
            m[(3, 3)] = 0.0;
            m[(0, 3)] = 0.0;
            m[(3, 1)] = 1.0;
        }
        let q = m.qr().q();
        let mut basis: Vec<Vec<f64>> = (1..4).map(|j| linalg::column(&q, j)).collect();
        let mut full = vec![p.clone()];
        full.extend(basis.iter().cloned());
        if linalg::from_columns(&full).determinant() > 0.0 {
            basis[2] = linalg::scale(&basis[2], -1.0);
        }
        let project = |v: &Vec<f64>| {
            let u = linalg::normalized(v).unwrap_or_else(|| v.clone());
            let den = 1.0 - dot(&u, &p);
            basis.iter().map(|b| dot(b, &u) / den).collect::<Vec<f64>>()
        };
        return Ok(curves.iter().map(|c| c.iter().map(project).collect()).collect());
    }
    Err(Error::Degenerate("no stereographic pole clears the curves".into()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Gauss linking integral by the midpoint rule over segment pairs.
    fn gauss_linking(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let sa = segments(a);
        let sb = segments(b);
        let mut total = 0.0;
        for (p0, p1) in &sa {
            let da = p1 - p0;
            let ma = (p0 + p1) * 0.5;
            for (q0, q1) in &sb {
                let db = q1 - q0;
                let mb = (q0 + q1) * 0.5;
                let r = ma - mb;
                total += r.dot(&da.cross(&db)) / r.norm().powi(3);
            }
        }
        total / (4.0 * PI)
    }

    fn circle(center: [f64; 3], u: [f64; 3], v: [f64; 3], radius: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                (0..3).map(|k| center[k] + radius * (t.cos() * u[k] + t.sin() * v[k])).collect()
            })
            .collect()
    }

    fn torus_knot(p: f64, q: f64, phase: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                let r = 2.0 + 0.7 * (q * t + phase).cos();
                vec![r * (p * t).cos(), r * (p * t).sin(), 0.7 * (q * t + phase).sin()]
            })
            .collect()
    }

    #[test]
    fn separated_circles_do_not_link() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = circle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 200);
        let b = circle([5.0, 0.0, 2.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 200);
        assert_eq!(linking_number(&a, &b, &mut rng).unwrap(), 0);
        assert!(gauss_linking(&a, &b).abs() < 1e-3);
    }

    #[test]
    fn hopf_link_sign_matches_gauss_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = circle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 400);
        let b = circle([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0, 400);
        let g = gauss_linking(&a, &b);
        let lk = linking_number(&a, &b, &mut rng).unwrap();
        assert_eq!(lk.abs(), 1);
        assert!((g - lk as f64).abs() < 1e-2, "gauss {g} vs crossings {lk}");
        let rev: Vec<Vec<f64>> = b.iter().rev().cloned().collect();
        assert_eq!(linking_number(&a, &rev, &mut rng).unwrap(), -lk);
        assert_eq!(linking_number(&b, &a, &mut rng).unwrap(), lk);
    }

    #[test]
    fn doubled_fiber_links_twice() {
        // Two parallel (1,2) torus curves on the same torus: a (2,4) torus link.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = torus_knot(1.0, 2.0, 0.0, 600);
        let b = torus_knot(1.0, 2.0, PI, 600);
        let lk = linking_number(&a, &b, &mut rng).unwrap();
        assert_eq!(lk.abs(), 2);
        assert!((gauss_linking(&a, &b) - lk as f64).abs() < 2e-2);
    }

    #[test]
    fn intersecting_curves_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = circle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 64);
        // Both circles pass through (1, 0, 0) and (-1, 0, 0).
        let b = circle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0, 64);
        assert_eq!(linking_number(&a, &b, &mut rng), Err(Error::CurvesIntersect));
    }

    #[test]
    fn stereographic_projection_preserves_orientation() {
        // Positively oriented tangent frame of S^3 at -e4 is (e1, e2, e3); its
        // image frame under projection must be positive in R^3 for any pole.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let h = 1e-4;
            let base = vec![0.3, -0.2, 0.5, 0.0];
            let base = linalg::normalized(&{
                let mut b = base.clone();
                b[3] = (1.0 - linalg::dot(&b, &b)).sqrt();
                b
            })
            .unwrap();
            // Tangent frame t1..t3 at `base` with det[base, t1, t2, t3] > 0.
            let m = DMatrix::from_fn(4, 4, |i, j| if j == 0 { base[i] } else if i + 1 == j { 1.0 } else { 0.0 });
            let q = m.qr().q();
            let mut ts: Vec<Vec<f64>> = (1..4).map(|j| linalg::column(&q, j)).collect();
            let mut cols = vec![base.clone()];
            cols.extend(ts.iter().cloned());
            if linalg::from_columns(&cols).determinant() < 0.0 {
                ts[2] = linalg::scale(&ts[2], -1.0);
            }
            let mut curve = vec![base.clone()];
            for t in &ts {
                curve.push(linalg::add(&base, &linalg::scale(t, h)));
            }
            let out = stereographic(&[&curve], 0.1, &mut rng).unwrap();
            let img: Vec<Vec<f64>> = (1..4).map(|i| linalg::sub(&out[0][i], &out[0][0])).collect();
            assert!(linalg::from_columns(&img).determinant() > 0.0);
        }
    }
}
