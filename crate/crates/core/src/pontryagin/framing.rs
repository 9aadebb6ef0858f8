//! Regular values and framed preimage points (`n = k`).

use serde::{Deserialize, Serialize};

use super::preimage::{jacobian_is_regular, preimage_search, PreimageSearch, SearchBox};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, low_discrepancy};
use crate::map_model::MapSpec;

/// A 0-dimensional Pontryagin manifold: points with pulled-back frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramedPoints {
    pub points: Vec<Vec<f64>>,
    /// Per point, the frame vectors `u_i` with `J u_i = b_i`.
    pub frames: Vec<Vec<Vec<f64>>>,
    pub signs: Vec<i32>,
    pub regular_value: Vec<f64>,
}

impl FramedPoints {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.regular_value.len()
    }

    /// Points with frames given as matrices whose columns are the frame vectors.
    pub fn from_frames(points: Vec<Vec<f64>>, frames: Vec<Vec<Vec<f64>>>, regular_value: Vec<f64>) -> Result<Self> {
        let n = regular_value.len();
        if points.len() != frames.len() {
            return Err(Error::InvalidInput("one frame per point is required".into()));
        }
        let mut signs = Vec::with_capacity(points.len());
        for (p, fr) in points.iter().zip(&frames) {
            if p.len() != n || fr.len() != n || fr.iter().any(|u| u.len() != n) {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            let det = linalg::from_columns(fr).determinant();
            if det.abs() < 1e-12 {
                return Err(Error::InvalidInput("frame vectors are linearly dependent".into()));
            }
            signs.push(if det > 0.0 { 1 } else { -1 });
        }
        Ok(Self { points, frames, signs, regular_value })
    }
}

pub fn signed_count(fp: &FramedPoints) -> i64 {
    fp.signs.iter().map(|&s| s as i64).sum()
}

/// Frames `u_i = J^{-1} b_i` at each point; sign from `det[u_1 .. u_n]`.
pub fn extract_framing(
    f: &MapSpec,
    points: &[Vec<f64>],
    y: &[f64],
    basis: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<FramedPoints> {
    let n = f.domain_dim();
    if basis.len() != n || basis.iter().any(|b| b.len() != n) {
        return Err(Error::InvalidInput("basis must have n vectors of length n".into()));
    }
    let mut order: Vec<&Vec<f64>> = points.iter().collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = FramedPoints { points: vec![], frames: vec![], signs: vec![], regular_value: y.to_vec() };
    for p in order {
        let jac = f.jacobian(p, tol.fd_step)?;
        let (ok, condition) = jacobian_is_regular(&jac, tol);
        if !ok {
            return Err(Error::SingularJacobian { point: p.clone(), condition });
        }
        let frame = basis
            .iter()
            .map(|b| linalg::solve(&jac, b))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::SingularJacobian { point: p.clone(), condition })?;
        let det = linalg::from_columns(&frame).determinant();
        out.points.push(p.clone());
        out.frames.push(frame);
        out.signs.push(if det > 0.0 { 1 } else { -1 });
    }
    Ok(out)
}

pub fn standard_basis(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularValue {
    pub value: Vec<f64>,
    pub attempts: usize,
    pub search: PreimageSearch,
}

/// Whether every located preimage has a well-conditioned Jacobian and no
/// flagged cell failed close to the fiber.
pub fn check_regular(f: &MapSpec, y: &[f64], search: &SearchBox, tol: &Tolerances) -> Result<(bool, PreimageSearch)> {
    let s = preimage_search(f, y, search, tol)?;
    if s.near_misses(y).next().is_some() {
        return Ok((false, s));
    }
    for p in &s.points {
        let jac = f.jacobian(p, tol.fd_step)?;
        if !jacobian_is_regular(&jac, tol).0 {
            return Ok((false, s));
        }
    }
    Ok((true, s))
}

pub const REGULAR_VALUE_ATTEMPTS: usize = 64;

/// First regular candidate among `y0` and the low-discrepancy perturbations
/// `y0 + radius (2 u_j - 1)`. With `on_sphere`, candidates are projected to the unit sphere.
pub fn find_regular_value(
    f: &MapSpec,
    y0: &[f64],
    radius: f64,
    on_sphere: bool,
    search: &SearchBox,
    tol: &Tolerances,
) -> Result<RegularValue> {
    if !f.is_proper() {
        return Err(Error::NotProper("regular values are searched for proper maps".into()));
    }
    let k = f.codomain_dim();
    if y0.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: y0.len() });
    }
    for j in 0..REGULAR_VALUE_ATTEMPTS {
        let mut y: Vec<f64> = if j == 0 {
            y0.to_vec()
        } else {
            let u = low_discrepancy(j, k);
            y0.iter().zip(&u).map(|(a, u)| a + radius * (2.0 * u - 1.0)).collect()
        };
        if on_sphere {
            match linalg::normalized(&y) {
                Some(u) => y = u,
                None => continue,
            }
        }
        let (ok, s) = check_regular(f, &y, search, tol)?;
        if ok {
            return Ok(RegularValue { value: y, attempts: j + 1, search: s });
        }
    }
    Err(Error::NoRegularValue { attempts: REGULAR_VALUE_ATTEMPTS })
}

/// Framed preimage of a regular value near `y0`, with the standard basis.
pub fn framed_preimage(f: &MapSpec, y0: &[f64], radius: f64, search: &SearchBox, tol: &Tolerances) -> Result<FramedPoints> {
    let rv = find_regular_value(f, y0, radius, false, search, tol)?;
    let n = f.domain_dim();
    extract_framing(f, &rv.search.points, &rv.value, &standard_basis(n), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::{radial_extend, SphereMapSpec};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn identity_frame_is_standard() {
        let id = MapSpec::identity(2);
        let fp = extract_framing(&id, &[vec![0.3, 0.4]], &[0.3, 0.4], &standard_basis(2), &tol()).unwrap();
        assert_eq!(fp.signs, vec![1]);
        for (u, e) in fp.frames[0].iter().zip(standard_basis(2)) {
            assert!(linalg::dist(u, &e) < 1e-9);
        }
    }

    #[test]
    fn square_signs_follow_derivative() {
        let sq = MapSpec::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
        let neg = MapSpec::polynomial(vec![0.0, 0.0, -1.0]).unwrap();
        let t = tol();
        let b = standard_basis(1);
        let fp = extract_framing(&neg, &[vec![2.0], vec![-2.0]], &[-4.0], &b, &t).unwrap();
        assert_eq!(fp.points, vec![vec![-2.0], vec![2.0]]);
        assert_eq!(fp.signs, vec![1, -1]);
        let fp = extract_framing(&sq, &[vec![-2.0], vec![2.0]], &[4.0], &b, &t).unwrap();
        assert_eq!(fp.signs, vec![-1, 1]);
        assert!(matches!(
            extract_framing(&sq, &[vec![0.0]], &[0.0], &b, &t),
            Err(Error::SingularJacobian { .. })
        ));
    }

    #[test]
    fn signed_count_examples() {
        let mk = |pts: &[f64], signs: &[i32]| FramedPoints {
            points: pts.iter().map(|&p| vec![p]).collect(),
            frames: signs.iter().map(|&s| vec![vec![s as f64]]).collect(),
            signs: signs.to_vec(),
            regular_value: vec![0.0],
        };
        assert_eq!(signed_count(&mk(&[1.0], &[1])), 1);
        assert_eq!(signed_count(&mk(&[-2.0, -1.0, 1.0, 2.0], &[1, -1, -1, 1])), 0);
        assert_eq!(signed_count(&mk(&[-1.0, 1.0], &[1, 1])), 2);
    }

    #[test]
    fn regular_value_examples() {
        let t = tol();
        let sb = SearchBox::default();
        let id = MapSpec::identity(2);
        let rv = find_regular_value(&id, &[0.5, -0.25], 0.1, false, &sb, &t).unwrap();
        assert_eq!(rv.value, vec![0.5, -0.25]);

        let sq = MapSpec::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
        let rv = find_regular_value(&sq, &[0.0], 0.1, false, &sb, &t).unwrap();
        assert!(rv.value[0] != 0.0 && rv.attempts > 1);
        if rv.value[0] < 0.0 {
            assert!(rv.search.points.is_empty());
        } else {
            assert_eq!(rv.search.points.len(), 2);
        }

        let p2 = radial_extend(&SphereMapSpec::circle_power(2));
        let rv = find_regular_value(&p2, &[1.0, 0.0], 0.1, false, &sb, &t).unwrap();
        assert_eq!(rv.value, vec![1.0, 0.0]);
        assert_eq!(rv.search.points.len(), 2);
    }
}
