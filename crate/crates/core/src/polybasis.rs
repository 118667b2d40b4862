//! Quadrature rules and polynomial bases on triangles and edges.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules, so all weights are positive and any exactness degree is available.
//! Bases are monomials centred at the element centroid and scaled by the
//! element diameter.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::mesh::{cross, norm, sub, Point};

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`, exact to `degree`.
fn gauss_legendre_unit(degree: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(degree / 2 + 1).expect("positive point count");
    GaussLegendre::new(n)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}`.
#[derive(Clone, Debug)]
pub struct ReferenceTriangleRule {
    pub degree: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl ReferenceTriangleRule {
    pub fn new(degree: usize) -> Self {
        // the collapsed direction carries the extra Jacobian factor (1 - ξ)
        let outer = gauss_legendre_unit(degree + 1);
        let inner = gauss_legendre_unit(degree);
        let mut points = Vec::with_capacity(outer.len() * inner.len());
        let mut weights = Vec::with_capacity(outer.len() * inner.len());
        for &(xi, wx) in &outer {
            for &(eta, we) in &inner {
                points.push([xi, eta * (1.0 - xi)]);
                weights.push(wx * we * (1.0 - xi));
            }
        }
        Self {
            degree,
            points,
            weights,
        }
    }

    /// Maps the rule onto a physical triangle.
    pub fn map(&self, tri: &[Point; 3]) -> QuadRule {
        let e1 = sub(tri[1], tri[0]);
        let e2 = sub(tri[2], tri[0]);
        let jac = cross(e1, e2).abs();
        QuadRule {
            points: self
                .points
                .iter()
                .map(|&[r, s]| {
                    [
                        tri[0][0] + r * e1[0] + s * e2[0],
                        tri[0][1] + r * e1[1] + s * e2[1],
                    ]
                })
                .collect(),
            weights: self.weights.iter().map(|w| w * jac).collect(),
        }
    }
}

/// Quadrature on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct ReferenceEdgeRule {
    pub degree: usize,
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ReferenceEdgeRule {
    pub fn new(degree: usize) -> Self {
        let (params, weights) = gauss_legendre_unit(degree).into_iter().unzip();
        Self {
            degree,
            params,
            weights,
        }
    }

    pub fn map(&self, seg: &[Point; 2]) -> EdgeQuadRule {
        let d = sub(seg[1], seg[0]);
        let len = norm(d);
        EdgeQuadRule {
            params: self.params.clone(),
            points: self
                .params
                .iter()
                .map(|&s| [seg[0][0] + s * d[0], seg[0][1] + s * d[1]])
                .collect(),
            weights: self.weights.iter().map(|w| w * len).collect(),
        }
    }
}

/// Physical-space quadrature on a triangle.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Physical-space quadrature on a segment; `params` are positions in `[0, 1]`
/// measured from the first endpoint.
#[derive(Clone, Debug)]
pub struct EdgeQuadRule {
    pub params: Vec<f64>,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl EdgeQuadRule {
    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Rule integrating bivariate polynomials up to `exactness_degree` exactly.
pub fn triangle_quadrature(exactness_degree: usize, triangle: [Point; 3]) -> Result<QuadRule> {
    let e1 = sub(triangle[1], triangle[0]);
    let e2 = sub(triangle[2], triangle[0]);
    let scale = norm(e1).max(norm(e2)).max(norm(sub(triangle[2], triangle[1])));
    if !(cross(e1, e2).abs() > 1e-14 * scale * scale) {
        return Err(Error::Geometry {
            polygon: usize::MAX,
            message: "zero-area triangle".into(),
        });
    }
    Ok(ReferenceTriangleRule::new(exactness_degree).map(&triangle))
}

pub fn edge_quadrature(exactness_degree: usize, segment: [Point; 2]) -> Result<EdgeQuadRule> {
    if !(norm(sub(segment[1], segment[0])) > 0.0) {
        return Err(Error::Geometry {
            polygon: usize::MAX,
            message: "zero-length segment".into(),
        });
    }
    Ok(ReferenceEdgeRule::new(exactness_degree).map(&segment))
}

/// Dimension of `P^k` on a triangle.
pub const fn triangle_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponents `(a, b)` of `x^a y^b`, ordered by total degree.
pub fn monomial_exponents(k: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::with_capacity(triangle_dim(k));
    for d in 0..=k as i32 {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Monomials `((x - c)/s)^a ((y - c)/s)^b` of total degree `≤ k`.
#[derive(Clone, Debug)]
pub struct ScaledMonomials {
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
    exponents: Vec<(i32, i32)>,
}

impl ScaledMonomials {
    pub fn new(degree: usize, center: Point, scale: f64) -> Self {
        Self {
            degree,
            center,
            scale,
            exponents: monomial_exponents(degree),
        }
    }

    /// Centred at the centroid of `tri`, scaled by its diameter.
    pub fn on_triangle(degree: usize, tri: &[Point; 3]) -> Self {
        let c = [
            (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0,
            (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0,
        ];
        let d = norm(sub(tri[0], tri[1]))
            .max(norm(sub(tri[1], tri[2])))
            .max(norm(sub(tri[2], tri[0])));
        Self::new(degree, c, d)
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[(i32, i32)] {
        &self.exponents
    }

    /// Writes values and gradients at `x`.
    pub fn eval(&self, x: Point, values: &mut [f64], grads: &mut [[f64; 2]]) {
        let u = (x[0] - self.center[0]) / self.scale;
        let v = (x[1] - self.center[1]) / self.scale;
        let k = self.degree;
        let mut pu = [1.0; 8];
        let mut pv = [1.0; 8];
        for i in 1..=k {
            pu[i] = pu[i - 1] * u;
            pv[i] = pv[i - 1] * v;
        }
        for (m, &(a, b)) in self.exponents.iter().enumerate() {
            let (a, b) = (a as usize, b as usize);
            values[m] = pu[a] * pv[b];
            let dx = if a > 0 { a as f64 * pu[a - 1] * pv[b] } else { 0.0 };
            let dy = if b > 0 { b as f64 * pu[a] * pv[b - 1] } else { 0.0 };
            grads[m] = [dx / self.scale, dy / self.scale];
        }
    }

    pub fn values(&self, x: Point) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        let mut g = vec![[0.0; 2]; self.dim()];
        self.eval(x, &mut v, &mut g);
        v
    }
}

/// Legendre polynomials `P_j(2s - 1)` for `j ≤ k` and their `s`-derivatives.
pub fn legendre_unit(k: usize, s: f64, values: &mut [f64], derivs: &mut [f64]) {
    let x = 2.0 * s - 1.0;
    values[0] = 1.0;
    derivs[0] = 0.0;
    if k == 0 {
        return;
    }
    values[1] = x;
    derivs[1] = 2.0;
    for j in 1..k {
        let jf = j as f64;
        values[j + 1] = ((2.0 * jf + 1.0) * x * values[j] - jf * values[j - 1]) / (jf + 1.0);
        // d/ds = 2 d/dx; P'_{j+1} = P'_{j-1} + (2j+1) P_j
        derivs[j + 1] = derivs[j - 1] + 2.0 * (2.0 * jf + 1.0) * values[j];
    }
}

pub fn legendre_values(k: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; k + 1];
    let mut d = vec![0.0; k + 1];
    legendre_unit(k, s, &mut v, &mut d);
    v
}

/// Element for [`eval_basis`].
#[derive(Clone, Copy, Debug)]
pub enum Element {
    Triangle([Point; 3]),
    Edge([Point; 2]),
}

/// Values and gradients of a basis at a list of points.
///
/// `values[i * npts + q]` is basis function `i` at point `q`. For edges the
/// gradient is the tangential derivative expressed as a planar vector.
#[derive(Clone, Debug)]
pub struct BasisSet {
    pub degree: usize,
    pub dim: usize,
    pub npts: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl BasisSet {
    pub fn value(&self, i: usize, q: usize) -> f64 {
        self.values[i * self.npts + q]
    }

    pub fn grad(&self, i: usize, q: usize) -> [f64; 2] {
        self.grads[i * self.npts + q]
    }
}

pub fn eval_basis(k: usize, element: Element, points: &[Point]) -> BasisSet {
    let npts = points.len();
    match element {
        Element::Triangle(tri) => {
            let mono = ScaledMonomials::on_triangle(k, &tri);
            let dim = mono.dim();
            let mut values = vec![0.0; dim * npts];
            let mut grads = vec![[0.0; 2]; dim * npts];
            let mut v = vec![0.0; dim];
            let mut g = vec![[0.0; 2]; dim];
            for (q, &x) in points.iter().enumerate() {
                mono.eval(x, &mut v, &mut g);
                for i in 0..dim {
                    values[i * npts + q] = v[i];
                    grads[i * npts + q] = g[i];
                }
            }
            BasisSet {
                degree: k,
                dim,
                npts,
                values,
                grads,
            }
        }
        Element::Edge(seg) => {
            let d = sub(seg[1], seg[0]);
            let len = norm(d);
            let t = [d[0] / len, d[1] / len];
            let dim = k + 1;
            let mut values = vec![0.0; dim * npts];
            let mut grads = vec![[0.0; 2]; dim * npts];
            let mut v = vec![0.0; dim];
            let mut dv = vec![0.0; dim];
            for (q, &x) in points.iter().enumerate() {
                let s = crate::mesh::dot(sub(x, seg[0]), t) / len;
                legendre_unit(k, s, &mut v, &mut dv);
                for i in 0..dim {
                    values[i * npts + q] = v[i];
                    grads[i * npts + q] = [t[0] * dv[i] / len, t[1] * dv[i] / len];
                }
            }
            BasisSet {
                degree: k,
                dim,
                npts,
                values,
                grads,
            }
        }
    }
}

/// Gram matrix of the scaled monomial basis on a triangle (row-major).
pub fn gram_matrix(k: usize, tri: [Point; 3]) -> Vec<f64> {
    let rule = ReferenceTriangleRule::new(2 * k).map(&tri);
    let basis = eval_basis(k, Element::Triangle(tri), &rule.points);
    let n = basis.dim;
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..basis.npts)
                .map(|q| rule.weights[q] * basis.value(i, q) * basis.value(j, q))
                .sum();
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    fn factorial(n: i32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    fn exact_monomial(a: i32, b: i32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn constant_on_reference() {
        let q = triangle_quadrature(0, REF).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert!(q.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn x2y_on_reference() {
        let q = triangle_quadrature(3, REF).unwrap();
        let v = q.integrate(|p| p[0] * p[0] * p[1]);
        assert!((v - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_triangle_constant() {
        let big = [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]];
        let q = triangle_quadrature(2, big).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn monomial_exactness_up_to_12() {
        for deg in 0..=12 {
            let q = triangle_quadrature(deg, REF).unwrap();
            for (a, b) in monomial_exponents(deg) {
                let v = q.integrate(|p| p[0].powi(a) * p[1].powi(b));
                let e = exact_monomial(a, b);
                assert!(((v - e) / e).abs() < 1e-12, "deg {deg} x^{a} y^{b}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn zero_area_triangle_rejected() {
        let flat = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(triangle_quadrature(2, flat).is_err());
    }

    #[test]
    fn edge_rules() {
        let q = edge_quadrature(0, [[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let q = edge_quadrature(3, [[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!((q.integrate(|p| p[0].powi(3)) - 0.25).abs() < 1e-15);
        let q = edge_quadrature(7, [[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 5.0).abs() < 1e-14);
        let n = q.params.len();
        for i in 0..n {
            assert!((q.params[i] + q.params[n - 1 - i] - 1.0).abs() < 1e-15);
            assert!((q.weights[i] - q.weights[n - 1 - i]).abs() < 1e-15);
        }
        assert!(edge_quadrature(1, [[1.0, 1.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn degree_zero_basis() {
        let pts = [[0.2, 0.3], [0.1, 0.1]];
        let b = eval_basis(0, Element::Triangle(REF), &pts);
        assert_eq!(b.dim, 1);
        for q in 0..2 {
            assert_eq!(b.value(0, q), 1.0);
            assert_eq!(b.grad(0, q), [0.0, 0.0]);
        }
    }

    #[test]
    fn linear_basis_dimension() {
        let b = eval_basis(1, Element::Triangle(REF), &[[0.25, 0.25]]);
        assert_eq!(b.dim, 3);
        assert_eq!(eval_basis(3, Element::Edge([[0.0, 0.0], [1.0, 0.0]]), &[[0.5, 0.0]]).dim, 4);
    }

    #[test]
    fn gram_is_spd() {
        let tri = [[0.1, 0.0], [3.0, 0.2], [0.4, 0.05]];
        for k in 0..=4 {
            let g = gram_matrix(k, tri);
            let n = triangle_dim(k);
            let m = faer::Mat::<f64>::from_fn(n, n, |i, j| g[i * n + j]);
            assert!(m.llt(faer::Side::Lower).is_ok(), "k = {k}");
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(g[i * n + j], g[j * n + i]);
                }
            }
        }
    }

    #[test]
    fn legendre_derivatives() {
        let k = 5;
        let h = 1e-6;
        for &s in &[0.1, 0.37, 0.9] {
            let mut v = vec![0.0; k + 1];
            let mut d = vec![0.0; k + 1];
            legendre_unit(k, s, &mut v, &mut d);
            let vp = legendre_values(k, s + h);
            let vm = legendre_values(k, s - h);
            for j in 0..=k {
                assert!(((vp[j] - vm[j]) / (2.0 * h) - d[j]).abs() < 1e-6);
            }
        }
    }
}
