//! Manufactured solution, error norms and observed convergence orders.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::forms::{rich_degree, NonlinearCoefficients};
use crate::mesh::{EdgeClass, Point, StaggeredMesh};
use crate::polybasis::{ReferenceEdgeRule, ReferenceTriangleRule};
use crate::spaces::{DofSpace, FieldCoefficients, SpaceKind};

/// Which right-hand side drives the problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Forcing {
    /// Forcing built from the closed-form solution below.
    Manufactured,
    /// `f = 0`; the exact solution is then identically zero.
    Zero,
}

/// The smooth test solution on the unit square:
///
/// ```text
/// u1 =  π a(x) sin(2πy) s(t),   a(x) = x²(1-x)²,  s(t) = sin(2πt)
/// u2 = -a'(x) sin²(πy) s(t)
/// p  = (sin x cos y + sin 1 (cos 1 - 1)) cos(2πt)
/// ```
///
/// `u` is divergence free, vanishes on the boundary and at `t = 0`, and `p`
/// has zero mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedProblem {
    pub coeffs: NonlinearCoefficients,
    pub forcing: Forcing,
}

fn a0(x: f64) -> f64 {
    x * x * (1.0 - x) * (1.0 - x)
}
fn a1(x: f64) -> f64 {
    2.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
}
fn a2(x: f64) -> f64 {
    2.0 - 12.0 * x + 12.0 * x * x
}
fn a3(x: f64) -> f64 {
    -12.0 + 24.0 * x
}

impl ManufacturedProblem {
    pub fn new(coeffs: NonlinearCoefficients, forcing: Forcing) -> Self {
        Self { coeffs, forcing }
    }

    fn active(&self) -> f64 {
        match self.forcing {
            Forcing::Manufactured => 1.0,
            Forcing::Zero => 0.0,
        }
    }

    pub fn velocity(&self, x: Point, t: f64) -> [f64; 2] {
        let s = self.active() * (2.0 * PI * t).sin();
        let (sy, s2y) = ((PI * x[1]).sin(), (2.0 * PI * x[1]).sin());
        [PI * a0(x[0]) * s2y * s, -a1(x[0]) * sy * sy * s]
    }

    /// `∇u` as `[∂x u1, ∂y u1, ∂x u2, ∂y u2]`.
    pub fn velocity_gradient(&self, x: Point, t: f64) -> [f64; 4] {
        let s = self.active() * (2.0 * PI * t).sin();
        let (sy, s2y, c2y) = (
            (PI * x[1]).sin(),
            (2.0 * PI * x[1]).sin(),
            (2.0 * PI * x[1]).cos(),
        );
        [
            PI * a1(x[0]) * s2y * s,
            2.0 * PI * PI * a0(x[0]) * c2y * s,
            -a2(x[0]) * sy * sy * s,
            -a1(x[0]) * PI * s2y * s,
        ]
    }

    /// `L = √ε ∇u`, in the tensor layout `c = 2 i + j`.
    pub fn gradient_variable(&self, x: Point, t: f64) -> [f64; 4] {
        let g = self.velocity_gradient(x, t);
        let r = self.coeffs.epsilon.sqrt();
        [r * g[0], r * g[1], r * g[2], r * g[3]]
    }

    pub fn pressure(&self, x: Point, t: f64) -> f64 {
        let c = 1f64.sin() * (1f64.cos() - 1.0);
        self.active() * (x[0].sin() * x[1].cos() + c) * (2.0 * PI * t).cos()
    }

    pub fn pressure_gradient(&self, x: Point, t: f64) -> [f64; 2] {
        let c = self.active() * (2.0 * PI * t).cos();
        [x[0].cos() * x[1].cos() * c, -x[0].sin() * x[1].sin() * c]
    }

    pub fn velocity_laplacian(&self, x: Point, t: f64) -> [f64; 2] {
        let s = self.active() * (2.0 * PI * t).sin();
        let (sy, s2y, c2y) = (
            (PI * x[1]).sin(),
            (2.0 * PI * x[1]).sin(),
            (2.0 * PI * x[1]).cos(),
        );
        let xx = x[0];
        [
            PI * s * (a2(xx) * s2y - 4.0 * PI * PI * a0(xx) * s2y),
            -s * (a3(xx) * sy * sy + a1(xx) * 2.0 * PI * PI * c2y),
        ]
    }

    pub fn velocity_dt(&self, x: Point, t: f64) -> [f64; 2] {
        let ds = self.active() * 2.0 * PI * (2.0 * PI * t).cos();
        let (sy, s2y) = ((PI * x[1]).sin(), (2.0 * PI * x[1]).sin());
        [PI * a0(x[0]) * s2y * ds, -a1(x[0]) * sy * sy * ds]
    }

    /// `f = u_t - ε Δu + α u + β |u| u + ∇p`.
    pub fn forcing(&self, x: Point, t: f64) -> [f64; 2] {
        if self.forcing == Forcing::Zero {
            return [0.0, 0.0];
        }
        let u = self.velocity(x, t);
        let ut = self.velocity_dt(x, t);
        let lap = self.velocity_laplacian(x, t);
        let gp = self.pressure_gradient(x, t);
        let nl = self.coeffs.apply(u);
        let e = self.coeffs.epsilon;
        [
            ut[0] - e * lap[0] + nl[0] + gp[0],
            ut[1] - e * lap[1] + nl[1] + gp[1],
        ]
    }
}

/// `‖exact - u_h‖` over the mesh with a rule of exactness `2k + 4`.
pub fn error_l2<const N: usize>(
    mesh: &StaggeredMesh,
    space: &DofSpace,
    coeffs: &FieldCoefficients,
    exact: impl Fn(Point) -> [f64; N],
) -> Result<f64> {
    space.check(coeffs)?;
    if space.ncomp() != N {
        return Err(Error::DimensionMismatch {
            expected: space.ncomp(),
            got: N,
            context: "exact field components".into(),
        });
    }
    let rule = ReferenceTriangleRule::new(rich_degree(space.degree));
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = rule.map(&tri.coords);
        let table = space.local[t].table(N, &quad.points);
        let vals = space.eval_table(t, &table, &coeffs.values);
        for (q, (&x, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
            let ex = exact(x);
            for c in 0..N {
                let d = ex[c] - vals[q * N + c];
                sum += w * d * d;
            }
        }
    }
    Ok(sum.sqrt())
}

/// `‖u_h‖` in L².
pub fn l2_norm(mesh: &StaggeredMesh, space: &DofSpace, coeffs: &FieldCoefficients) -> Result<f64> {
    match space.ncomp() {
        1 => error_l2(mesh, space, coeffs, |_| [0.0]),
        2 => error_l2(mesh, space, coeffs, |_| [0.0; 2]),
        _ => error_l2(mesh, space, coeffs, |_| [0.0; 4]),
    }
}

/// One row of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub inv_h: usize,
    pub steps: usize,
    pub error_u: f64,
    pub error_l: f64,
    pub error_p: f64,
}

/// Errors for a sequence of refinements and the orders between them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceRecord {
    pub rows: Vec<ConvergenceRow>,
}

/// Orders of the three error columns; `None` on the first row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderRow {
    pub u: Option<f64>,
    pub l: Option<f64>,
    pub p: Option<f64>,
}

fn rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    let r = h0 / h1;
    if (r - 2.0).abs() < 1e-12 {
        (e0 / e1).log2()
    } else {
        (e0 / e1).ln() / r.ln()
    }
}

impl ConvergenceRecord {
    pub fn push(&mut self, row: ConvergenceRow) {
        self.rows.push(row);
    }

    pub fn observed_orders(&self) -> Vec<OrderRow> {
        let mut out = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if i == 0 {
                out.push(OrderRow { u: None, l: None, p: None });
                continue;
            }
            let prev = &self.rows[i - 1];
            out.push(OrderRow {
                u: Some(rate(prev.error_u, row.error_u, prev.h, row.h)),
                l: Some(rate(prev.error_l, row.error_l, prev.h, row.h)),
                p: Some(rate(prev.error_p, row.error_p, prev.h, row.h)),
            });
        }
        out
    }
}

/// Observed orders for a plain list of `(h, error)` pairs.
pub fn observed_orders(h: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| (i > 0).then(|| rate(errors[i - 1], errors[i], h[i - 1], h[i])))
        .collect()
}

/// The discrete `Z_2` norm of a velocity field: broken gradient in `L³`,
/// plus `h_e^{-2}`-weighted `L³` jumps of `v` on primal edges and of the
/// tangential part `(v·t)t` on dual edges, all cubed, then the cube root.
pub fn z2_norm(mesh: &StaggeredMesh, space: &DofSpace, coeffs: &FieldCoefficients) -> Result<f64> {
    space.check(coeffs)?;
    if space.kind != SpaceKind::Velocity {
        return Err(Error::InvalidArgument("Z2 norm needs a velocity field".into()));
    }
    let deg = rich_degree(space.degree) + 2;
    let trule = ReferenceTriangleRule::new(deg);
    let erule = ReferenceEdgeRule::new(deg);
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = trule.map(&tri.coords);
        let table = space.local[t].table(2, &quad.points);
        let g = space.eval_grad_table(t, &table, &coeffs.values);
        for (q, &w) in quad.weights.iter().enumerate() {
            let f2 = g[2 * q][0].powi(2) + g[2 * q][1].powi(2) + g[2 * q + 1][0].powi(2) + g[2 * q + 1][1].powi(2);
            sum += w * f2.powf(1.5);
        }
    }
    for edge in &mesh.edges {
        let quad = erule.map(&[edge.start, edge.end]);
        let mut jump = vec![[0.0; 2]; quad.weights.len()];
        for &(t, d) in &edge.triangles {
            let table = space.local[t].table(2, &quad.points);
            let v = space.eval_table(t, &table, &coeffs.values);
            for q in 0..quad.weights.len() {
                let vq = [v[2 * q], v[2 * q + 1]];
                let add = if edge.class == EdgeClass::Dual {
                    let vt = vq[0] * edge.tangent[0] + vq[1] * edge.tangent[1];
                    [vt * edge.tangent[0], vt * edge.tangent[1]]
                } else {
                    vq
                };
                jump[q][0] += d * add[0];
                jump[q][1] += d * add[1];
            }
        }
        let s: f64 = jump
            .iter()
            .zip(&quad.weights)
            .map(|(j, w)| w * j[0].hypot(j[1]).powi(3))
            .sum();
        sum += s / (edge.length * edge.length);
    }
    Ok(sum.cbrt())
}

/// The discrete `3/2` norm of a pressure field: broken gradient in `L^{3/2}`
/// plus `h_e^{-1/2}`-weighted jumps on dual edges, then the `2/3` power.
pub fn three_halves_norm(mesh: &StaggeredMesh, space: &DofSpace, coeffs: &FieldCoefficients) -> Result<f64> {
    space.check(coeffs)?;
    if space.kind != SpaceKind::Pressure {
        return Err(Error::InvalidArgument("3/2 norm needs a pressure field".into()));
    }
    let deg = rich_degree(space.degree) + 2;
    let trule = ReferenceTriangleRule::new(deg);
    let erule = ReferenceEdgeRule::new(deg);
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = trule.map(&tri.coords);
        let table = space.local[t].table(1, &quad.points);
        let g = space.eval_grad_table(t, &table, &coeffs.values);
        for (q, &w) in quad.weights.iter().enumerate() {
            sum += w * g[q][0].hypot(g[q][1]).powf(1.5);
        }
    }
    for e in mesh.dual_edge_ids() {
        let edge = &mesh.edges[e];
        let quad = erule.map(&[edge.start, edge.end]);
        let mut jump = vec![0.0; quad.weights.len()];
        for &(t, d) in &edge.triangles {
            let table = space.local[t].table(1, &quad.points);
            let v = space.eval_table(t, &table, &coeffs.values);
            for q in 0..jump.len() {
                jump[q] += d * v[q];
            }
        }
        let s: f64 = jump.iter().zip(&quad.weights).map(|(j, w)| w * j.abs().powf(1.5)).sum();
        sum += s / edge.length.sqrt();
    }
    Ok(sum.powf(2.0 / 3.0))
}
