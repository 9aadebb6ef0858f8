use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::map_model::{radial_extend, SphereMapSpec};
use crate::pontryagin::{extract_framing, find_regular_value, signed_count, standard_basis, SearchBox};

/// Signed preimage count of a regular value, with the points it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeCount {
    pub degree: i64,
    pub regular_value: Vec<f64>,
    pub points: usize,
    pub attempts: usize,
}

/// Degree of `g: S^2 -> S^2` as a signed count over `g^{-1}(y)`, with `y`
/// perturbed on the sphere until regular.
///
/// The count runs on the radial extension: its Jacobian maps the outward
/// normal to the outward normal, so its determinant sign is the local degree.
pub fn degree_s2_count(g: &SphereMapSpec, y: &[f64], tol: &Tolerances) -> Result<DegreeCount> {
    if g.domain_sphere_dim() != 2 || g.codomain_sphere_dim() != 2 {
        return Err(Error::InvalidInput("degree needs a map S^2 -> S^2".into()));
    }
    if y.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: y.len() });
    }
    let f = radial_extend(g);
    let rv = find_regular_value(&f, y, 0.05, true, &SearchBox::new(1.5), tol)?;
    let fp = extract_framing(&f, &rv.search.points, &rv.value, &standard_basis(3), tol)?;
    Ok(DegreeCount { degree: signed_count(&fp), regular_value: rv.value, points: fp.len(), attempts: rv.attempts })
}

pub fn degree_s2(g: &SphereMapSpec, y: &[f64], tol: &Tolerances) -> Result<i64> {
    degree_s2_count(g, y, tol).map(|c| c.degree)
}

/// Default target point, away from the coordinate axes.
pub const DEFAULT_DEGREE_TARGET: [f64; 3] = [0.36, 0.48, 0.8];
