//! Symbolic maps `R^n -> R^k` and sphere maps `S^{n-1} -> S^{k-1}`.
//!
//! Every generator has a closed-form evaluator. Maps carry a `proper` flag
//! that is set structurally by the constructors (or by
//! [`properness::certify_proper`] for free-form expressions).

pub mod expr;
pub mod properness;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, norm};
use crate::pontryagin::construct::CollapseMap;

pub use expr::Expr;
use expr::{parse, parse_err, Syntax};
pub use properness::{certify_proper, properness_check, ProperReport, RadiusCertificate};

/// Absolute tolerance on `|x| = 1` for sphere-map inputs.
pub const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    domain_dim: usize,
    codomain_dim: usize,
    proper: bool,
    node: MapNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapNode {
    Identity,
    Constant { value: Vec<f64> },
    Linear { rows: Vec<Vec<f64>> },
    /// Ascending coefficients of a polynomial `R -> R`.
    Polynomial { coeffs: Vec<f64> },
    /// `z -> z^d` on `C = R^2`; negative degrees use `conj(z)^|d|`.
    PlanarPower { degree: i32 },
    /// Quadratic Hopf map `(z1, z2) -> (2 z1 conj(z2), |z1|^2 - |z2|^2)`, with `|H(v)| = |v|^2`.
    Hopf,
    /// The clamp `h`: identity on the unit ball, radial projection on `1 <= |x| <= r`, `x/r` beyond.
    Clamp { r: f64 },
    Scale { factor: f64 },
    /// `Pf(v) = |v| f(v/|v|)`, `Pf(0) = 0`.
    Radial { sphere: SphereMapSpec },
    /// `Sf(x, s) = (f(x), s)`.
    Suspend { inner: Box<MapSpec> },
    /// `outer ∘ inner`.
    Compose { outer: Box<MapSpec>, inner: Box<MapSpec> },
    Expr { components: Vec<Expr> },
    /// Continuous piecewise-linear map `R -> R`.
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64>, left_slope: f64, right_slope: f64 },
    /// `g2 = G1(1, .)` for the wrapped `g1`: `g1` inside the unit ball,
    /// `|g1(v)| g1(v/|v|) / |g1(v/|v|)|` outside.
    NormRetract { inner: Box<MapSpec> },
    Collapse { map: Box<CollapseMap> },
}

impl MapSpec {
    fn new(domain_dim: usize, codomain_dim: usize, proper: bool, node: MapNode) -> Self {
        Self { domain_dim, codomain_dim, proper, node }
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn is_proper(&self) -> bool {
        self.proper
    }

    pub fn node(&self) -> &MapNode {
        &self.node
    }

    pub(crate) fn with_proper_flag(mut self, proper: bool) -> Self {
        self.proper = proper;
        self
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, true, MapNode::Identity)
    }

    pub fn constant(domain_dim: usize, value: Vec<f64>) -> Self {
        Self::new(domain_dim, value.len(), false, MapNode::Constant { value })
    }

    pub fn linear(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if k == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMap("linear map needs a non-empty rectangular matrix".into()));
        }
        let m = linalg::from_rows(&rows);
        let sv = m.singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > 1e-12 * smax.max(1e-300)).count();
        // Injective linear maps are proper; anything with a kernel is not.
        Ok(Self::new(n, k, rank == n, MapNode::Linear { rows }))
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidMap("polynomial needs at least one coefficient".into()));
        }
        let degree = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        Ok(Self::new(1, 1, degree >= 1, MapNode::Polynomial { coeffs }))
    }

    pub fn planar_power(degree: i32) -> Self {
        Self::new(2, 2, degree != 0, MapNode::PlanarPower { degree })
    }

    pub fn hopf() -> Self {
        Self::new(4, 3, true, MapNode::Hopf)
    }

    pub fn clamp(dim: usize, r: f64) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::InvalidMap(format!("clamp needs r >= 1, got {r}")));
        }
        Ok(Self::new(dim, dim, true, MapNode::Clamp { r }))
    }

    pub fn scale(dim: usize, factor: f64) -> Self {
        Self::new(dim, dim, factor != 0.0, MapNode::Scale { factor })
    }

    pub fn compose(outer: MapSpec, inner: MapSpec) -> Result<Self> {
        if outer.domain_dim != inner.codomain_dim {
            return Err(Error::DimensionMismatch { expected: outer.domain_dim, got: inner.codomain_dim });
        }
        let proper = outer.proper && inner.proper;
        Ok(Self::new(
            inner.domain_dim,
            outer.codomain_dim,
            proper,
            MapNode::Compose { outer: Box::new(outer), inner: Box::new(inner) },
        ))
    }

    /// A free-form map from coordinate expressions. Not flagged proper until certified.
    pub fn from_exprs(domain_dim: usize, components: Vec<Expr>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMap("expression map needs at least one component".into()));
        }
        let arity = components.iter().map(Expr::arity).max().unwrap_or(0);
        if arity > domain_dim {
            return Err(Error::InvalidMap(format!("expression uses x{arity} but the domain is R^{domain_dim}")));
        }
        Ok(Self::new(domain_dim, components.len(), false, MapNode::Expr { components }))
    }

    pub fn piecewise_linear(knots: Vec<f64>, values: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() || knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMap("piecewise-linear map needs strictly increasing knots with one value each".into()));
        }
        let proper = left_slope != 0.0 && right_slope != 0.0;
        Ok(Self::new(1, 1, proper, MapNode::PiecewiseLinear { knots, values, left_slope, right_slope }))
    }

    pub fn norm_retract(g1: MapSpec) -> Self {
        let (n, k, proper) = (g1.domain_dim, g1.codomain_dim, g1.proper);
        Self::new(n, k, proper, MapNode::NormRetract { inner: Box::new(g1) })
    }

    pub(crate) fn collapse(map: CollapseMap) -> Self {
        let n = map.dim();
        Self::new(n, n, true, MapNode::Collapse { map: Box::new(map) })
    }

    /// Evaluate at `v`.
    pub fn eval(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.domain_dim {
            return Err(Error::DimensionMismatch { expected: self.domain_dim, got: v.len() });
        }
        let out = self.eval_raw(v)?;
        if out.iter().all(|x| x.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub(crate) fn eval_raw(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(match &self.node {
            MapNode::Identity => v.to_vec(),
            MapNode::Constant { value } => value.clone(),
            MapNode::Linear { rows } => rows.iter().map(|r| linalg::dot(r, v)).collect(),
            MapNode::Polynomial { coeffs } => {
                vec![coeffs.iter().rev().fold(0.0, |acc, c| acc * v[0] + c)]
            }
            MapNode::PlanarPower { degree } => complex_power(v[0], v[1], *degree).to_vec(),
            MapNode::Hopf => hopf_quadratic(v).to_vec(),
            MapNode::Clamp { r } => clamp(v, *r),
            MapNode::Scale { factor } => linalg::scale(v, *factor),
            MapNode::Radial { sphere } => {
                let nv = norm(v);
                if nv == 0.0 {
                    vec![0.0; self.codomain_dim]
                } else {
                    let u = linalg::scale(v, 1.0 / nv);
                    linalg::scale(&sphere.eval_raw(&u)?, nv)
                }
            }
            MapNode::Suspend { inner } => {
                let (x, s) = v.split_at(inner.domain_dim);
                let mut out = inner.eval_raw(x)?;
                out.push(s[0]);
                out
            }
            MapNode::Compose { outer, inner } => outer.eval_raw(&inner.eval_raw(v)?)?,
            MapNode::Expr { components } => components.iter().map(|e| e.eval(v)).collect(),
            MapNode::PiecewiseLinear { knots, values, left_slope, right_slope } => {
                vec![piecewise_linear(knots, values, *left_slope, *right_slope, v[0])]
            }
            MapNode::NormRetract { inner } => {
                let nv = norm(v);
                let g1v = inner.eval_raw(v)?;
                if nv <= 1.0 {
                    g1v
                } else {
                    let on_sphere = inner.eval_raw(&linalg::scale(v, 1.0 / nv))?;
                    let ns = norm(&on_sphere);
                    if ns < 1e-12 {
                        return Err(Error::Degenerate("g1 vanishes on the unit sphere".into()));
                    }
                    linalg::scale(&on_sphere, norm(&g1v) / ns)
                }
            }
            MapNode::Collapse { map } => map.eval(v),
        })
    }

    /// Central finite-difference Jacobian (`k x n`) at `v`.
    pub fn jacobian(&self, v: &[f64], step: f64) -> Result<DMatrix<f64>> {
        jacobian_of(self.domain_dim, self.codomain_dim, |x| self.eval(x), v, step)
    }

    /// Parse map text; `domain_hint` fixes the domain dimension of
    /// dimension-polymorphic generators such as `id` or `clamp(r)`.
    pub fn parse(src: &str, domain_hint: Option<usize>) -> Result<Self> {
        build_map(&parse(src)?, domain_hint)
    }
}

impl FromStr for MapSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MapSpec::parse(s, None)
    }
}

/// Central finite differences of an arbitrary evaluator.
pub fn jacobian_of(
    n: usize,
    k: usize,
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    v: &[f64],
    step: f64,
) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(k, n);
    let mut x = v.to_vec();
    for j in 0..n {
        x[j] = v[j] + step;
        let plus = f(&x)?;
        x[j] = v[j] - step;
        let minus = f(&x)?;
        x[j] = v[j];
        for i in 0..k {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Radial extension `Pf(v) = |v| f(v/|v|)`; always proper, `|Pf(v)| = |v|`.
pub fn radial_extend(f: &SphereMapSpec) -> MapSpec {
    MapSpec::new(
        f.domain_sphere_dim + 1,
        f.codomain_sphere_dim + 1,
        true,
        MapNode::Radial { sphere: f.clone() },
    )
}

/// Proper suspension `Sf(x, s) = (f(x), s)`.
pub fn suspend_proper(f: &MapSpec) -> Result<MapSpec> {
    if !f.proper {
        return Err(Error::NotProper("suspension needs a proper map".into()));
    }
    Ok(MapSpec::new(
        f.domain_dim + 1,
        f.codomain_dim + 1,
        true,
        MapNode::Suspend { inner: Box::new(f.clone()) },
    ))
}

/// Sphere suspension `Sg(v, s) = (|v| g(v/|v|), s)`, `(0, s)` at `v = 0`.
pub fn suspend_sphere(g: &SphereMapSpec) -> SphereMapSpec {
    SphereMapSpec::new(
        g.domain_sphere_dim + 1,
        g.codomain_sphere_dim + 1,
        SphereNode::Suspend { inner: Box::new(g.clone()) },
    )
}

pub fn clamp(x: &[f64], r: f64) -> Vec<f64> {
    let nx = norm(x);
    if nx <= 1.0 {
        x.to_vec()
    } else if nx <= r {
        linalg::scale(x, 1.0 / nx)
    } else {
        linalg::scale(x, 1.0 / r)
    }
}

fn complex_power(re: f64, im: f64, degree: i32) -> [f64; 2] {
    let (a, b) = if degree < 0 { (re, -im) } else { (re, im) };
    let (mut pr, mut pi) = (1.0, 0.0);
    for _ in 0..degree.unsigned_abs() {
        (pr, pi) = (pr * a - pi * b, pr * b + pi * a);
    }
    [pr, pi]
}

fn hopf_quadratic(v: &[f64]) -> [f64; 3] {
    let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
    [2.0 * (a * c + b * d), 2.0 * (b * c - a * d), a * a + b * b - c * c - d * d]
}

fn piecewise_linear(knots: &[f64], values: &[f64], left: f64, right: f64, x: f64) -> f64 {
    let last = knots.len() - 1;
    if x <= knots[0] {
        return values[0] + left * (x - knots[0]);
    }
    if x >= knots[last] {
        return values[last] + right * (x - knots[last]);
    }
    let i = knots.partition_point(|&k| k <= x) - 1;
    let s = (x - knots[i]) / (knots[i + 1] - knots[i]);
    values[i] + s * (values[i + 1] - values[i])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMapSpec {
    domain_sphere_dim: usize,
    codomain_sphere_dim: usize,
    node: SphereNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereNode {
    Identity,
    Antipodal,
    Constant { value: Vec<f64> },
    CirclePower { degree: i32 },
    Hopf,
    Suspend { inner: Box<SphereMapSpec> },
    Compose { outer: Box<SphereMapSpec>, inner: Box<SphereMapSpec> },
    Orthogonal { rows: Vec<Vec<f64>> },
    /// `x -> g(R x) / |g(R x)|`, the boundary map of a proper `g` at escape radius `R`.
    Restrict { map: Box<MapSpec>, radius: f64 },
}

impl SphereMapSpec {
    fn new(domain_sphere_dim: usize, codomain_sphere_dim: usize, node: SphereNode) -> Self {
        Self { domain_sphere_dim, codomain_sphere_dim, node }
    }

    pub fn domain_sphere_dim(&self) -> usize {
        self.domain_sphere_dim
    }

    pub fn codomain_sphere_dim(&self) -> usize {
        self.codomain_sphere_dim
    }

    pub fn node(&self) -> &SphereNode {
        &self.node
    }

    pub fn identity(d: usize) -> Self {
        Self::new(d, d, SphereNode::Identity)
    }

    pub fn antipodal(d: usize) -> Self {
        Self::new(d, d, SphereNode::Antipodal)
    }

    pub fn constant(domain_sphere_dim: usize, value: Vec<f64>) -> Result<Self> {
        if value.is_empty() || (norm(&value) - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidMap("constant sphere map needs a unit vector".into()));
        }
        let k = value.len() - 1;
        Ok(Self::new(domain_sphere_dim, k, SphereNode::Constant { value }))
    }

    pub fn circle_power(degree: i32) -> Self {
        Self::new(1, 1, SphereNode::CirclePower { degree })
    }

    pub fn hopf() -> Self {
        Self::new(3, 2, SphereNode::Hopf)
    }

    pub fn orthogonal(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMap("orthogonal map needs a square matrix".into()));
        }
        let m = linalg::from_rows(&rows);
        let defect = (&m * m.transpose() - DMatrix::identity(n, n)).abs().max();
        if defect > 1e-9 {
            return Err(Error::InvalidMap(format!("matrix is not orthogonal (defect {defect:e})")));
        }
        Ok(Self::new(n - 1, n - 1, SphereNode::Orthogonal { rows }))
    }

    /// Reflection of coordinate `axis` (zero-based) on `S^d`; a degree −1 self-map.
    pub fn reflection(d: usize, axis: usize) -> Result<Self> {
        if axis > d {
            return Err(Error::InvalidMap(format!("axis {axis} out of range for S^{d}")));
        }
        let rows = (0..=d)
            .map(|i| (0..=d).map(|j| if i != j { 0.0 } else if i == axis { -1.0 } else { 1.0 }).collect())
            .collect();
        Self::orthogonal(rows)
    }

    pub fn compose(outer: SphereMapSpec, inner: SphereMapSpec) -> Result<Self> {
        if outer.domain_sphere_dim != inner.codomain_sphere_dim {
            return Err(Error::DimensionMismatch {
                expected: outer.domain_sphere_dim,
                got: inner.codomain_sphere_dim,
            });
        }
        Ok(Self::new(
            inner.domain_sphere_dim,
            outer.codomain_sphere_dim,
            SphereNode::Compose { outer: Box::new(outer), inner: Box::new(inner) },
        ))
    }

    /// The normalized restriction `x -> g(R x)/|g(R x)|` to the unit sphere.
    pub fn restriction(g: &MapSpec, radius: f64) -> Result<Self> {
        if g.domain_dim == 0 || g.codomain_dim == 0 || !(radius > 0.0) {
            return Err(Error::InvalidMap("restriction needs positive dimensions and radius".into()));
        }
        Ok(Self::new(
            g.domain_dim - 1,
            g.codomain_dim - 1,
            SphereNode::Restrict { map: Box::new(g.clone()), radius },
        ))
    }

    /// Evaluate at a unit vector `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.domain_sphere_dim + 1 {
            return Err(Error::DimensionMismatch { expected: self.domain_sphere_dim + 1, got: x.len() });
        }
        let nx = norm(x);
        if (nx - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotUnit { norm: nx });
        }
        let out = self.eval_raw(x)?;
        if out.iter().all(|c| c.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub(crate) fn eval_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match &self.node {
            SphereNode::Identity => x.to_vec(),
            SphereNode::Antipodal => linalg::scale(x, -1.0),
            SphereNode::Constant { value } => value.clone(),
            SphereNode::CirclePower { degree } => {
                let [a, b] = complex_power(x[0], x[1], *degree);
                let n = (a * a + b * b).sqrt();
                vec![a / n, b / n]
            }
            SphereNode::Hopf => hopf_quadratic(x).to_vec(),
            SphereNode::Suspend { inner } => {
                let (v, s) = x.split_at(inner.domain_sphere_dim + 1);
                let nv = norm(v);
                let mut out = if nv == 0.0 {
                    vec![0.0; inner.codomain_sphere_dim + 1]
                } else {
                    linalg::scale(&inner.eval_raw(&linalg::scale(v, 1.0 / nv))?, nv)
                };
                out.push(s[0]);
                out
            }
            SphereNode::Compose { outer, inner } => outer.eval_raw(&inner.eval_raw(x)?)?,
            SphereNode::Orthogonal { rows } => rows.iter().map(|r| linalg::dot(r, x)).collect(),
            SphereNode::Restrict { map, radius } => {
                let y = map.eval_raw(&linalg::scale(x, *radius))?;
                let ny = norm(&y);
                if ny < 1e-12 {
                    return Err(Error::Degenerate(format!(
                        "|g(Rx)| = {ny:e} at R = {radius}; choose a larger escape radius"
                    )));
                }
                linalg::scale(&y, 1.0 / ny)
            }
        })
    }

    /// Parse sphere-map text; `hint` is the dimension of the domain sphere.
    pub fn parse(src: &str, hint: Option<usize>) -> Result<Self> {
        build_sphere(&parse(src)?, hint)
    }
}

impl FromStr for SphereMapSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SphereMapSpec::parse(s, None)
    }
}

fn call_parts(s: &Syntax) -> Option<(&str, &[Syntax], usize)> {
    match s {
        Syntax::Ident(name, pos) => Some((name.as_str(), &[], *pos)),
        Syntax::Call(name, args, pos) => Some((name.as_str(), args.as_slice(), *pos)),
        _ => None,
    }
}

fn check_hint(hint: Option<usize>, actual: usize, pos: usize) -> Result<()> {
    match hint {
        Some(h) if h != actual => Err(parse_err(pos, format!("dimension {actual} does not match the expected {h}"))),
        _ => Ok(()),
    }
}

fn dim_arg(args: &[Syntax], idx: usize, hint: Option<usize>, pos: usize) -> Result<usize> {
    match args.get(idx) {
        Some(a) => {
            let d = usize::try_from(a.as_integer()?).map_err(|_| parse_err(a.pos(), "negative dimension"))?;
            check_hint(hint, d, pos)?;
            Ok(d)
        }
        None => hint.ok_or_else(|| parse_err(pos, "cannot infer the dimension here; pass it explicitly")),
    }
}

fn arity(args: &[Syntax], allowed: &[usize], name: &str, pos: usize) -> Result<()> {
    if allowed.contains(&args.len()) {
        Ok(())
    } else {
        Err(parse_err(pos, format!("`{name}` takes {allowed:?} arguments, got {}", args.len())))
    }
}

/// Domain dimension of a map term, when it can be read off without context.
fn infer_map_domain(s: &Syntax) -> Option<usize> {
    if let Syntax::List(items, _) = s {
        let exprs: Option<Vec<Expr>> = items.iter().map(|e| Expr::from_syntax(e).ok()).collect();
        return exprs.map(|es| es.iter().map(Expr::arity).max().unwrap_or(0).max(1));
    }
    let Some((name, args, _)) = call_parts(s) else {
        return Expr::from_syntax(s).ok().map(|e| e.arity().max(1));
    };
    let explicit = |i: usize| args.get(i).and_then(|a| a.as_integer().ok()).map(|d| d as usize);
    match name {
        "id" | "scale" => explicit(if name == "id" { 0 } else { 1 }),
        "clamp" => explicit(1),
        "hopf" => Some(4),
        "power" => Some(2),
        "poly" | "pl" => Some(1),
        "linear" => args.first().and_then(|m| m.as_matrix().ok()).map(|m| m[0].len()),
        "radial" => args.first().and_then(infer_sphere_domain).map(|d| d + 1),
        "suspend" => args.first().and_then(infer_map_domain).map(|d| d + 1),
        "compose" => {
            let inner = args.get(1)?;
            infer_map_domain(inner).or_else(|| {
                let endo = matches!(call_parts(inner), Some(("id" | "scale" | "clamp", _, _)));
                if endo {
                    args.first().and_then(infer_map_domain)
                } else {
                    None
                }
            })
        }
        _ => Expr::from_syntax(s).ok().map(|e| e.arity().max(1)),
    }
}

fn build_map(s: &Syntax, hint: Option<usize>) -> Result<MapSpec> {
    let hint = hint.or_else(|| infer_map_domain(s));
    if let Syntax::List(items, pos) = s {
        let comps = items.iter().map(Expr::from_syntax).collect::<Result<Vec<_>>>()?;
        let n = hint.ok_or_else(|| parse_err(*pos, "cannot infer the domain dimension"))?;
        return MapSpec::from_exprs(n, comps).map_err(|e| parse_err(*pos, e.to_string()));
    }
    let Some((name, args, pos)) = call_parts(s) else {
        let e = Expr::from_syntax(s)?;
        return MapSpec::from_exprs(hint.unwrap_or(1), vec![e]).map_err(|e| parse_err(s.pos(), e.to_string()));
    };
    let wrap = |r: Result<MapSpec>| r.map_err(|e| parse_err(pos, e.to_string()));
    let spec = match name {
        "id" => {
            arity(args, &[0, 1], name, pos)?;
            MapSpec::identity(dim_arg(args, 0, hint, pos)?)
        }
        "hopf" => {
            arity(args, &[0], name, pos)?;
            MapSpec::hopf()
        }
        "power" => {
            arity(args, &[1], name, pos)?;
            MapSpec::planar_power(args[0].as_integer()? as i32)
        }
        "clamp" => {
            arity(args, &[1, 2], name, pos)?;
            wrap(MapSpec::clamp(dim_arg(args, 1, hint, pos)?, args[0].as_number()?))?
        }
        "scale" => {
            arity(args, &[1, 2], name, pos)?;
            MapSpec::scale(dim_arg(args, 1, hint, pos)?, args[0].as_number()?)
        }
        "const" => {
            let value = args.iter().map(Syntax::as_number).collect::<Result<Vec<_>>>()?;
            if value.is_empty() {
                return Err(parse_err(pos, "`const` needs at least one value"));
            }
            let n = hint.ok_or_else(|| parse_err(pos, "cannot infer the domain of `const`"))?;
            MapSpec::constant(n, value)
        }
        "poly" => {
            let coeffs = args.iter().map(Syntax::as_number).collect::<Result<Vec<_>>>()?;
            wrap(MapSpec::polynomial(coeffs))?
        }
        "linear" => {
            arity(args, &[1], name, pos)?;
            wrap(MapSpec::linear(args[0].as_matrix()?))?
        }
        "pl" => {
            arity(args, &[4], name, pos)?;
            let list = |a: &Syntax| match a {
                Syntax::List(items, _) => items.iter().map(Syntax::as_number).collect::<Result<Vec<_>>>(),
                other => Err(parse_err(other.pos(), "expected a list of numbers")),
            };
            wrap(MapSpec::piecewise_linear(
                list(&args[0])?,
                list(&args[1])?,
                args[2].as_number()?,
                args[3].as_number()?,
            ))?
        }
        "radial" => {
            arity(args, &[1], name, pos)?;
            let sphere = build_sphere(&args[0], hint.and_then(|n| n.checked_sub(1)))?;
            radial_extend(&sphere)
        }
        "suspend" => {
            arity(args, &[1], name, pos)?;
            let inner = build_map(&args[0], hint.and_then(|n| n.checked_sub(1)))?;
            wrap(suspend_proper(&inner))?
        }
        "compose" => {
            arity(args, &[2], name, pos)?;
            let inner = build_map(&args[1], hint)?;
            let outer = build_map(&args[0], Some(inner.codomain_dim))?;
            wrap(MapSpec::compose(outer, inner))?
        }
        _ => {
            let e = Expr::from_syntax(s)?;
            return MapSpec::from_exprs(hint.unwrap_or(1).max(e.arity()), vec![e]).map_err(|e| parse_err(pos, e.to_string()));
        }
    };
    check_hint(hint, spec.domain_dim, pos)?;
    Ok(spec)
}

fn infer_sphere_domain(s: &Syntax) -> Option<usize> {
    let (name, args, _) = call_parts(s)?;
    let explicit = |i: usize| args.get(i).and_then(|a| a.as_integer().ok()).map(|d| d as usize);
    match name {
        "id" | "antipodal" => explicit(0),
        "reflect" => explicit(1),
        "power" => Some(1),
        "hopf" => Some(3),
        "linear" => args.first().and_then(|m| m.as_matrix().ok()).map(|m| m.len() - 1),
        "suspend" => args.first().and_then(infer_sphere_domain).map(|d| d + 1),
        "restrict" => args.first().and_then(infer_map_domain).map(|n| n.saturating_sub(1)),
        "compose" => {
            let inner = args.get(1)?;
            infer_sphere_domain(inner).or_else(|| {
                let endo = matches!(call_parts(inner), Some(("id" | "antipodal" | "reflect", _, _)));
                if endo {
                    args.first().and_then(infer_sphere_domain)
                } else {
                    None
                }
            })
        }
        _ => None,
    }
}

fn build_sphere(s: &Syntax, hint: Option<usize>) -> Result<SphereMapSpec> {
    let hint = hint.or_else(|| infer_sphere_domain(s));
    let Some((name, args, pos)) = call_parts(s) else {
        return Err(parse_err(s.pos(), "expected a sphere-map generator"));
    };
    let wrap = |r: Result<SphereMapSpec>| r.map_err(|e| parse_err(pos, e.to_string()));
    let spec = match name {
        "id" => {
            arity(args, &[0, 1], name, pos)?;
            SphereMapSpec::identity(dim_arg(args, 0, hint, pos)?)
        }
        "antipodal" => {
            arity(args, &[0, 1], name, pos)?;
            SphereMapSpec::antipodal(dim_arg(args, 0, hint, pos)?)
        }
        "const" => {
            let value = args.iter().map(Syntax::as_number).collect::<Result<Vec<_>>>()?;
            let d = hint.ok_or_else(|| parse_err(pos, "cannot infer the domain of `const`"))?;
            wrap(SphereMapSpec::constant(d, value))?
        }
        "power" => {
            arity(args, &[1], name, pos)?;
            SphereMapSpec::circle_power(args[0].as_integer()? as i32)
        }
        "hopf" => {
            arity(args, &[0], name, pos)?;
            SphereMapSpec::hopf()
        }
        "reflect" => {
            arity(args, &[1, 2], name, pos)?;
            let axis = args[0].as_integer()?;
            if axis < 1 {
                return Err(parse_err(pos, "reflect axis is 1-based"));
            }
            wrap(SphereMapSpec::reflection(dim_arg(args, 1, hint, pos)?, axis as usize - 1))?
        }
        "linear" => {
            arity(args, &[1], name, pos)?;
            wrap(SphereMapSpec::orthogonal(args[0].as_matrix()?))?
        }
        "suspend" => {
            arity(args, &[1], name, pos)?;
            suspend_sphere(&build_sphere(&args[0], hint.and_then(|d| d.checked_sub(1)))?)
        }
        "compose" => {
            arity(args, &[2], name, pos)?;
            let inner = build_sphere(&args[1], hint)?;
            let outer = build_sphere(&args[0], Some(inner.codomain_sphere_dim))?;
            wrap(SphereMapSpec::compose(outer, inner))?
        }
        "restrict" => {
            arity(args, &[2], name, pos)?;
            let g = build_map(&args[0], hint.map(|d| d + 1))?;
            wrap(SphereMapSpec::restriction(&g, args[1].as_number()?))?
        }
        other => return Err(parse_err(pos, format!("unknown sphere-map generator `{other}`"))),
    };
    check_hint(hint, spec.domain_sphere_dim, pos)?;
    Ok(spec)
}

fn write_list(f: &mut fmt::Formatter<'_>, v: &[f64]) -> fmt::Result {
    write!(f, "[")?;
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "]")
}

fn write_matrix(f: &mut fmt::Formatter<'_>, rows: &[Vec<f64>]) -> fmt::Result {
    write!(f, "[")?;
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write_list(f, r)?;
    }
    write!(f, "]")
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.domain_dim;
        match &self.node {
            MapNode::Identity => write!(f, "id({n})"),
            MapNode::Constant { value } => {
                write!(f, "const(")?;
                for (i, x) in value.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            MapNode::Linear { rows } => {
                write!(f, "linear(")?;
                write_matrix(f, rows)?;
                write!(f, ")")
            }
            MapNode::Polynomial { coeffs } => {
                write!(f, "poly(")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            MapNode::PlanarPower { degree } => write!(f, "power({degree})"),
            MapNode::Hopf => write!(f, "hopf"),
            MapNode::Clamp { r } => write!(f, "clamp({r}, {n})"),
            MapNode::Scale { factor } => write!(f, "scale({factor}, {n})"),
            MapNode::Radial { sphere } => write!(f, "radial({sphere})"),
            MapNode::Suspend { inner } => write!(f, "suspend({inner})"),
            MapNode::Compose { outer, inner } => write!(f, "compose({outer}, {inner})"),
            MapNode::Expr { components } => {
                write!(f, "[")?;
                for (i, e) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "]")
            }
            MapNode::PiecewiseLinear { knots, values, left_slope, right_slope } => {
                write!(f, "pl(")?;
                write_list(f, knots)?;
                write!(f, ", ")?;
                write_list(f, values)?;
                write!(f, ", {left_slope}, {right_slope})")
            }
            MapNode::NormRetract { inner } => write!(f, "retract({inner})"),
            MapNode::Collapse { map } => write!(f, "collapse(<{} framed points in R^{}>)", map.len(), map.dim()),
        }
    }
}

impl fmt::Display for SphereMapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.domain_sphere_dim;
        match &self.node {
            SphereNode::Identity => write!(f, "id({d})"),
            SphereNode::Antipodal => write!(f, "antipodal({d})"),
            SphereNode::Constant { value } => {
                write!(f, "const(")?;
                for (i, x) in value.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            SphereNode::CirclePower { degree } => write!(f, "power({degree})"),
            SphereNode::Hopf => write!(f, "hopf"),
            SphereNode::Suspend { inner } => write!(f, "suspend({inner})"),
            SphereNode::Compose { outer, inner } => write!(f, "compose({outer}, {inner})"),
            SphereNode::Orthogonal { rows } => {
                write!(f, "linear(")?;
                write_matrix(f, rows)?;
                write!(f, ")")
            }
            SphereNode::Restrict { map, radius } => write!(f, "restrict({map}, {radius})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && linalg::dist(a, b) <= tol
    }

    #[test]
    fn eval_identity_and_square() {
        let id = MapSpec::identity(2);
        assert_eq!(id.eval(&[0.3, 0.4]).unwrap(), vec![0.3, 0.4]);
        let sq: MapSpec = "x1^2".parse().unwrap();
        assert_eq!(sq.eval(&[-2.0]).unwrap(), vec![4.0]);
        let poly = MapSpec::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(poly.eval(&[-2.0]).unwrap(), vec![4.0]);
        assert!(poly.is_proper());
    }

    #[test]
    fn circle_cube_sends_pi_over_six_to_pi_over_two() {
        let g = SphereMapSpec::circle_power(3);
        let out = g.eval(&[(PI / 6.0).cos(), (PI / 6.0).sin()]).unwrap();
        // (e^{i pi/6})^3 = e^{i pi/2} by direct multiplication.
        assert!(close(&out, &[0.0, 1.0], 1e-12));
    }

    #[test]
    fn eval_errors() {
        let id = MapSpec::identity(2);
        assert_eq!(id.eval(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 }));
        let g = SphereMapSpec::identity(1);
        assert!(matches!(g.eval(&[1.0, 1.0]), Err(Error::NotUnit { .. })));
        assert!(matches!(g.eval(&[1.0, 0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
        let div: MapSpec = "1 / x1".parse().unwrap();
        assert_eq!(div.eval(&[0.0]), Err(Error::NonFinite));
    }

    #[test]
    fn radial_extension_examples() {
        let p = radial_extend(&SphereMapSpec::identity(1));
        assert!(close(&p.eval(&[0.3, -1.2]).unwrap(), &[0.3, -1.2], 1e-15));
        let a = radial_extend(&SphereMapSpec::antipodal(0));
        assert_eq!(a.eval(&[2.5]).unwrap(), vec![-2.5]);
        assert_eq!(a.eval(&[-0.5]).unwrap(), vec![0.5]);
        let h = radial_extend(&SphereMapSpec::hopf());
        assert_eq!(h.eval(&[0.0; 4]).unwrap(), vec![0.0; 3]);
        assert!(h.is_proper());
    }

    #[test]
    fn proper_suspension_passes_last_coordinate() {
        let sq = MapSpec::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
        let s = suspend_proper(&sq).unwrap();
        assert_eq!(s.eval(&[2.0, 5.0]).unwrap(), vec![4.0, 5.0]);
        let id2 = suspend_proper(&MapSpec::identity(1)).unwrap();
        assert_eq!(id2.eval(&[-1.0, 3.0]).unwrap(), vec![-1.0, 3.0]);
        let c = MapSpec::constant(1, vec![1.0]);
        assert!(matches!(suspend_proper(&c), Err(Error::NotProper(_))));
    }

    #[test]
    fn sphere_suspension_of_identity_is_identity() {
        let s = suspend_sphere(&SphereMapSpec::identity(0));
        for x in [[1.0, 0.0], [-1.0, 0.0], [0.6, 0.8], [-0.6, -0.8]] {
            assert!(close(&s.eval(&x).unwrap(), &x, 1e-15));
        }
    }

    #[test]
    fn sphere_suspension_of_constant_has_constant_latitude() {
        let c = SphereMapSpec::constant(1, vec![1.0, 0.0]).unwrap();
        let s = suspend_sphere(&c);
        let x = [0.48, 0.64, 0.6];
        let y = s.eval(&x).unwrap();
        assert!(close(&y, &[0.8, 0.0, 0.6], 1e-12));
    }

    #[test]
    fn jacobian_examples() {
        let id = MapSpec::identity(2);
        let j = id.jacobian(&[0.7, -0.2], 1e-5).unwrap();
        assert!((j - DMatrix::identity(2, 2)).abs().max() < 1e-9);

        let sq = MapSpec::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
        let j = sq.jacobian(&[3.0], 1e-5).unwrap();
        assert!((j[(0, 0)] - 6.0).abs() < 10.0 * 1e-10);

        // d/dz z^2 = 2z, so at z = 1 the real Jacobian is 2 I.
        let p2 = MapSpec::planar_power(2);
        let j = p2.jacobian(&[1.0, 0.0], 1e-5).unwrap();
        assert!((j - DMatrix::identity(2, 2) * 2.0).abs().max() < 10.0 * 1e-10);
    }

    #[test]
    fn clamp_three_regimes() {
        assert_eq!(clamp(&[0.5, 0.0], 2.0), vec![0.5, 0.0]);
        assert_eq!(clamp(&[1.5, 0.0], 2.0), vec![1.0, 0.0]);
        assert_eq!(clamp(&[4.0, 0.0], 2.0), vec![2.0, 0.0]);
    }

    #[test]
    fn properness_flags() {
        assert!(MapSpec::linear(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap().is_proper());
        assert!(!MapSpec::linear(vec![vec![1.0, 1.0]]).unwrap().is_proper());
        assert!(!MapSpec::polynomial(vec![3.0, 0.0]).unwrap().is_proper());
        assert!(!MapSpec::planar_power(0).is_proper());
        assert!(!MapSpec::scale(2, 0.0).is_proper());
        let c = MapSpec::compose(MapSpec::hopf(), MapSpec::identity(4)).unwrap();
        assert!(c.is_proper());
        assert!(MapSpec::compose(MapSpec::hopf(), MapSpec::identity(3)).is_err());
    }

    #[test]
    fn negative_planar_power_is_conjugate_power() {
        let p = MapSpec::planar_power(-2);
        // conj(1 + i)^2 = (1 - i)^2 = -2i
        assert!(close(&p.eval(&[1.0, 1.0]).unwrap(), &[0.0, -2.0], 1e-15));
    }

    #[test]
    fn piecewise_linear_eval() {
        let f = MapSpec::piecewise_linear(vec![0.0, 1.0], vec![1.0, -1.0], -1.0, 2.0).unwrap();
        assert_eq!(f.eval(&[-2.0]).unwrap(), vec![3.0]);
        assert_eq!(f.eval(&[0.5]).unwrap(), vec![0.0]);
        assert_eq!(f.eval(&[3.0]).unwrap(), vec![3.0]);
        assert!(MapSpec::piecewise_linear(vec![1.0, 0.0], vec![0.0, 0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn parse_generators_with_inferred_dimensions() {
        let m: MapSpec = "compose(clamp(2), power(3))".parse().unwrap();
        assert_eq!((m.domain_dim(), m.codomain_dim()), (2, 2));
        let m: MapSpec = "radial(compose(hopf, reflect(1)))".parse().unwrap();
        assert_eq!((m.domain_dim(), m.codomain_dim()), (4, 3));
        let m: MapSpec = "suspend(radial(power(2)))".parse().unwrap();
        assert_eq!((m.domain_dim(), m.codomain_dim()), (3, 3));
        let m: MapSpec = "[x1^2 - x2^2, 2*x1*x2]".parse().unwrap();
        assert_eq!(m.eval(&[1.0, 1.0]).unwrap(), vec![0.0, 2.0]);
        let m = MapSpec::parse("id", Some(3)).unwrap();
        assert_eq!(m.domain_dim(), 3);
        assert!("id".parse::<MapSpec>().is_err());
        assert!(MapSpec::parse("hopf", Some(3)).is_err());
        let g: SphereMapSpec = "suspend(suspend(power(2)))".parse().unwrap();
        assert_eq!((g.domain_sphere_dim(), g.codomain_sphere_dim()), (3, 3));
        let g: SphereMapSpec = "compose(hopf, linear([[0,1,0,0],[1,0,0,0],[0,0,1,0],[0,0,0,1]]))".parse().unwrap();
        assert_eq!(g.domain_sphere_dim(), 3);
        assert!("linear([[1,1],[0,1]])".parse::<SphereMapSpec>().is_err());
    }

    #[test]
    fn display_is_reparseable() {
        for src in [
            "radial(compose(hopf, suspend(suspend(power(2)))))",
            "compose(clamp(2, 2), radial(power(-3)))",
            "suspend(poly(0, 0, -1))",
            "pl([0, 1], [1, -1], -1, 2)",
            "[(x1 * x2), norm(x1, x2)]",
        ] {
            let m: MapSpec = src.parse().unwrap();
            let again: MapSpec = m.to_string().parse().unwrap();
            assert_eq!(m, again, "{src}");
        }
        let g: SphereMapSpec = "restrict(radial(power(2)), 1.5)".parse().unwrap();
        assert_eq!(g.to_string().parse::<SphereMapSpec>().unwrap(), g);
    }
}
