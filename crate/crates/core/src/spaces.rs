//! Staggered degree-of-freedom spaces over a [`StaggeredMesh`].
//!
//! | kind       | local space          | single-valued across             |
//! |------------|----------------------|----------------------------------|
//! | `Velocity` | `P^k(τ)^2`           | `v·n` moments on dual edges      |
//! | `Gradient` | `P^k(τ)^{2×2}`       | `G n` moments on interior primal |
//! | `Pressure` | `P^k(τ)`             | trace moments on interior primal |
//! | `Trace`    | `P^k(e) t_e`         | (lives on dual edges only)       |
//!
//! Each triangle carries a local basis dual to a unisolvent set of
//! functionals. Edge functionals use the edge's parameter frame, so the two
//! triangles sharing an edge see the same functional and the shared global
//! degree of freedom enforces continuity exactly.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use crate::error::{Error, Result};
use crate::mesh::{dot, EdgeClass, Point, StaggeredMesh, Triangle};
use crate::polybasis::{
    legendre_unit, legendre_values, triangle_dim, ReferenceEdgeRule, ReferenceTriangleRule,
    ScaledMonomials,
};

pub const MAX_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Velocity,
    Gradient,
    Pressure,
    Trace,
}

impl SpaceKind {
    /// Number of scalar components of a field in this space.
    pub fn components(self) -> usize {
        match self {
            SpaceKind::Velocity | SpaceKind::Trace => 2,
            SpaceKind::Gradient => 4,
            SpaceKind::Pressure => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Velocity => "velocity-U",
            SpaceKind::Gradient => "gradient-W",
            SpaceKind::Pressure => "pressure-P",
            SpaceKind::Trace => "trace-Uhat",
        }
    }
}

/// Basis on one triangle. Function `l` is
/// `Σ_{c,m} coeffs[l * ncomp * nm + c * nm + m] · monomial_m · e_c`.
#[derive(Clone, Debug)]
pub struct LocalBasis {
    pub monomials: ScaledMonomials,
    pub coeffs: Vec<f64>,
    /// Global index of each local function.
    pub dofs: Vec<usize>,
}

/// Values and gradients of a local basis at a set of points.
///
/// Index `(l * npts + q) * ncomp + c` for value of component `c` of function
/// `l` at point `q`.
#[derive(Clone, Debug)]
pub struct LocalTable {
    pub nloc: usize,
    pub ncomp: usize,
    pub npts: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl LocalTable {
    #[inline]
    pub fn value(&self, l: usize, q: usize) -> &[f64] {
        let o = (l * self.npts + q) * self.ncomp;
        &self.values[o..o + self.ncomp]
    }

    #[inline]
    pub fn grad(&self, l: usize, q: usize) -> &[[f64; 2]] {
        let o = (l * self.npts + q) * self.ncomp;
        &self.grads[o..o + self.ncomp]
    }
}

impl LocalBasis {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn table(&self, ncomp: usize, points: &[Point]) -> LocalTable {
        let nm = self.monomials.dim();
        let nloc = self.dofs.len();
        let npts = points.len();
        let mut values = vec![0.0; nloc * npts * ncomp];
        let mut grads = vec![[0.0; 2]; nloc * npts * ncomp];
        let mut mv = vec![0.0; nm];
        let mut mg = vec![[0.0; 2]; nm];
        for (q, &x) in points.iter().enumerate() {
            self.monomials.eval(x, &mut mv, &mut mg);
            for l in 0..nloc {
                for c in 0..ncomp {
                    let row = &self.coeffs[(l * ncomp + c) * nm..(l * ncomp + c + 1) * nm];
                    let mut v = 0.0;
                    let mut g = [0.0; 2];
                    for m in 0..nm {
                        v += row[m] * mv[m];
                        g[0] += row[m] * mg[m][0];
                        g[1] += row[m] * mg[m][1];
                    }
                    let o = (l * npts + q) * ncomp + c;
                    values[o] = v;
                    grads[o] = g;
                }
            }
        }
        LocalTable {
            nloc,
            ncomp,
            npts,
            values,
            grads,
        }
    }
}

/// A staggered finite element space.
#[derive(Clone, Debug)]
pub struct DofSpace {
    pub kind: SpaceKind,
    pub degree: usize,
    /// Global dimension after continuity identification.
    pub dim: usize,
    /// Sum of local dimensions over elements.
    pub broken_dim: usize,
    /// Per triangle; empty for `Trace`.
    pub local: Vec<LocalBasis>,
    /// Per mesh edge, the degrees of freedom attached to it (moment or trace).
    pub edge_dofs: Vec<Vec<usize>>,
}

impl DofSpace {
    pub fn ncomp(&self) -> usize {
        self.kind.components()
    }

    /// Number of independent matching constraints removed from the broken space.
    pub fn num_constraints(&self) -> usize {
        self.broken_dim - self.dim
    }

    pub fn zeros(&self) -> FieldCoefficients {
        FieldCoefficients::zeros(self)
    }

    pub(crate) fn check(&self, coeffs: &FieldCoefficients) -> Result<()> {
        if coeffs.kind != self.kind || coeffs.values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coeffs.values.len(),
                context: format!("{} coefficients ({})", self.kind.name(), coeffs.kind.name()),
            });
        }
        Ok(())
    }

    /// Local coefficient vector of triangle `t`.
    pub fn gather(&self, t: usize, global: &[f64]) -> Vec<f64> {
        self.local[t].dofs.iter().map(|&d| global[d]).collect()
    }

    /// Evaluates a field at `x` inside triangle `t`.
    pub fn eval_at(&self, t: usize, x: Point, global: &[f64]) -> Vec<f64> {
        let ncomp = self.ncomp();
        let table = self.local[t].table(ncomp, &[x]);
        let mut out = vec![0.0; ncomp];
        for (l, &d) in self.local[t].dofs.iter().enumerate() {
            for c in 0..ncomp {
                out[c] += global[d] * table.value(l, 0)[c];
            }
        }
        out
    }

    /// Field values at every point of a table, `out[q * ncomp + c]`.
    pub fn eval_table(&self, t: usize, table: &LocalTable, global: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; table.npts * table.ncomp];
        for (l, &d) in self.local[t].dofs.iter().enumerate() {
            let w = global[d];
            if w == 0.0 {
                continue;
            }
            for q in 0..table.npts {
                for (c, v) in table.value(l, q).iter().enumerate() {
                    out[q * table.ncomp + c] += w * v;
                }
            }
        }
        out
    }

    /// Gradients at every point of a table, `out[q * ncomp + c]`.
    pub fn eval_grad_table(&self, t: usize, table: &LocalTable, global: &[f64]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; table.npts * table.ncomp];
        for (l, &d) in self.local[t].dofs.iter().enumerate() {
            let w = global[d];
            for q in 0..table.npts {
                for (c, g) in table.grad(l, q).iter().enumerate() {
                    out[q * table.ncomp + c][0] += w * g[0];
                    out[q * table.ncomp + c][1] += w * g[1];
                }
            }
        }
        out
    }

    /// Value of a trace-space field at parameter `s` of dual edge `e`.
    pub fn eval_trace(&self, mesh: &StaggeredMesh, e: usize, s: f64, global: &[f64]) -> Point {
        let t = mesh.edges[e].frame_tangent();
        let psi = legendre_values(self.degree, s);
        let mut a = 0.0;
        for (j, &d) in self.edge_dofs[e].iter().enumerate() {
            a += global[d] * psi[j];
        }
        [a * t[0], a * t[1]]
    }
}

/// Coefficients of a discrete field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldCoefficients {
    pub kind: SpaceKind,
    pub values: Vec<f64>,
    pub time: Option<f64>,
}

impl FieldCoefficients {
    pub fn zeros(space: &DofSpace) -> Self {
        Self {
            kind: space.kind,
            values: vec![0.0; space.dim],
            time: None,
        }
    }

    pub fn new(space: &DofSpace, values: Vec<f64>) -> Result<Self> {
        let c = Self {
            kind: space.kind,
            values,
            time: None,
        };
        space.check(&c)?;
        Ok(c)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }
}

/// Which edges carry shared moment degrees of freedom.
fn carries_edge_dofs(kind: SpaceKind, class: EdgeClass) -> bool {
    match kind {
        SpaceKind::Velocity | SpaceKind::Trace => class == EdgeClass::Dual,
        SpaceKind::Gradient | SpaceKind::Pressure => class.is_primal(),
    }
}

fn edge_dofs_per_edge(kind: SpaceKind, k: usize) -> usize {
    match kind {
        SpaceKind::Gradient => 2 * (k + 1),
        _ => k + 1,
    }
}

/// Builds one of the four staggered spaces.
pub fn build_space(mesh: &StaggeredMesh, kind: SpaceKind, k: usize) -> Result<DofSpace> {
    if k > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "polynomial degree {k} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    let per_edge = edge_dofs_per_edge(kind, k);
    let mut next = 0;
    let mut edge_dofs = vec![Vec::new(); mesh.edges.len()];
    for (e, edge) in mesh.edges.iter().enumerate() {
        if carries_edge_dofs(kind, edge.class) {
            edge_dofs[e] = (next..next + per_edge).collect();
            next += per_edge;
        }
    }

    if kind == SpaceKind::Trace {
        return Ok(DofSpace {
            kind,
            degree: k,
            dim: next,
            broken_dim: next,
            local: Vec::new(),
            edge_dofs,
        });
    }

    let ncomp = kind.components();
    let local_dim = ncomp * triangle_dim(k);
    let mut local = Vec::with_capacity(mesh.num_triangles());
    for tri in &mesh.triangles {
        let functionals = match kind {
            SpaceKind::Velocity => velocity_functionals(mesh, tri, k),
            SpaceKind::Pressure => pressure_functionals(mesh, tri, k),
            SpaceKind::Gradient => gradient_functionals(mesh, tri, k),
            SpaceKind::Trace => unreachable!(),
        };
        let n_edge = functionals.edge_rows.len() / local_dim;
        let mut dofs = Vec::with_capacity(local_dim);
        for (e, count) in &functionals.edge_blocks {
            debug_assert_eq!(*count, per_edge);
            dofs.extend_from_slice(&edge_dofs[*e]);
        }
        debug_assert_eq!(dofs.len(), n_edge);
        let n_interior = local_dim - n_edge;
        dofs.extend(next..next + n_interior);
        next += n_interior;

        let mut f = Mat::<f64>::zeros(local_dim, local_dim);
        for i in 0..local_dim {
            let row = if i < n_edge {
                &functionals.edge_rows[i * local_dim..(i + 1) * local_dim]
            } else {
                let j = i - n_edge;
                &functionals.interior_rows[j * local_dim..(j + 1) * local_dim]
            };
            for b in 0..local_dim {
                f[(i, b)] = row[b];
            }
        }
        let inv = f.partial_piv_lu().inverse();
        // basis l has coefficient vector = column l of F^{-1}
        let mut coeffs = vec![0.0; local_dim * local_dim];
        for l in 0..local_dim {
            for b in 0..local_dim {
                coeffs[l * local_dim + b] = inv[(b, l)];
            }
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry {
                polygon: tri.polygon,
                message: format!("{} degrees of freedom are not unisolvent", kind.name()),
            });
        }
        local.push(LocalBasis {
            monomials: ScaledMonomials::on_triangle(k, &tri.coords),
            coeffs,
            dofs,
        });
    }

    Ok(DofSpace {
        kind,
        degree: k,
        dim: next,
        broken_dim: local_dim * mesh.num_triangles(),
        local,
        edge_dofs,
    })
}

/// Rows of the local functional matrix, split into shared edge rows and
/// element-interior rows. Columns index the raw basis `c * nm + m`.
struct Functionals {
    edge_blocks: Vec<(usize, usize)>,
    edge_rows: Vec<f64>,
    interior_rows: Vec<f64>,
}

/// Averages `(1/|e|) ∫_e mono_m ψ_j` on edge `e` for all `m`, `j`.
/// Returns `out[j * nm + m]`.
fn edge_moments(mesh: &StaggeredMesh, e: usize, mono: &ScaledMonomials, k: usize) -> Vec<f64> {
    let edge = &mesh.edges[e];
    let rule = ReferenceEdgeRule::new(2 * k);
    let nm = mono.dim();
    let mut out = vec![0.0; (k + 1) * nm];
    let mut mv = vec![0.0; nm];
    let mut mg = vec![[0.0; 2]; nm];
    let mut psi = vec![0.0; k + 1];
    let mut dpsi = vec![0.0; k + 1];
    for (&s, &w) in rule.params.iter().zip(&rule.weights) {
        mono.eval(edge.point_at(s), &mut mv, &mut mg);
        legendre_unit(k, s, &mut psi, &mut dpsi);
        for j in 0..=k {
            for m in 0..nm {
                out[j * nm + m] += w * psi[j] * mv[m];
            }
        }
    }
    out
}

/// Averages `(1/|τ|) ∫_τ mono_a mono_b`, row-major `nm × nm`.
fn element_gram(tri: &Triangle, mono: &ScaledMonomials, k: usize) -> Vec<f64> {
    let rule = ReferenceTriangleRule::new(2 * k).map(&tri.coords);
    let nm = mono.dim();
    let mut g = vec![0.0; nm * nm];
    let mut mv = vec![0.0; nm];
    let mut mg = vec![[0.0; 2]; nm];
    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
        mono.eval(x, &mut mv, &mut mg);
        for a in 0..nm {
            for b in 0..nm {
                g[a * nm + b] += w * mv[a] * mv[b] / tri.area;
            }
        }
    }
    g
}

fn interior_moment_rows(tri: &Triangle, mono: &ScaledMonomials, k: usize, ncomp: usize) -> Vec<f64> {
    let nm = mono.dim();
    let n = ncomp * nm;
    if k == 0 {
        return Vec::new();
    }
    let gram = element_gram(tri, mono, k);
    let nlow = triangle_dim(k - 1);
    let mut rows = Vec::with_capacity(ncomp * nlow * n);
    for c in 0..ncomp {
        for mp in 0..nlow {
            let mut row = vec![0.0; n];
            for m in 0..nm {
                row[c * nm + m] = gram[mp * nm + m];
            }
            rows.extend(row);
        }
    }
    rows
}

/// Normal moments on the two dual edges plus interior moments of degree `k-1`.
fn velocity_functionals(mesh: &StaggeredMesh, tri: &Triangle, k: usize) -> Functionals {
    let mono = ScaledMonomials::on_triangle(k, &tri.coords);
    let nm = mono.dim();
    let n = 2 * nm;
    let mut edge_rows = Vec::new();
    let mut edge_blocks = Vec::new();
    for &e in &tri.dual_edges() {
        let normal = mesh.edges[e].frame_normal();
        let mom = edge_moments(mesh, e, &mono, k);
        for j in 0..=k {
            let mut row = vec![0.0; n];
            for c in 0..2 {
                for m in 0..nm {
                    row[c * nm + m] = normal[c] * mom[j * nm + m];
                }
            }
            edge_rows.extend(row);
        }
        edge_blocks.push((e, k + 1));
    }
    Functionals {
        edge_blocks,
        edge_rows,
        interior_rows: interior_moment_rows(tri, &mono, k, 2),
    }
}

/// Trace moments on the primal edge plus interior moments of degree `k-1`.
fn pressure_functionals(mesh: &StaggeredMesh, tri: &Triangle, k: usize) -> Functionals {
    let mono = ScaledMonomials::on_triangle(k, &tri.coords);
    let e = tri.primal_edge();
    Functionals {
        edge_blocks: vec![(e, k + 1)],
        edge_rows: edge_moments(mesh, e, &mono, k),
        interior_rows: interior_moment_rows(tri, &mono, k, 1),
    }
}

/// Moments of `G n` on the primal edge; the remaining functionals are
/// `L²(τ)` moments against an orthonormal basis of the kernel of the edge
/// functionals, which makes the set unisolvent.
fn gradient_functionals(mesh: &StaggeredMesh, tri: &Triangle, k: usize) -> Functionals {
    let mono = ScaledMonomials::on_triangle(k, &tri.coords);
    let nm = mono.dim();
    let n = 4 * nm;
    let e = tri.primal_edge();
    let normal = mesh.edges[e].frame_normal();
    let mom = edge_moments(mesh, e, &mono, k);
    let n_edge = 2 * (k + 1);
    let mut edge_rows = vec![0.0; n_edge * n];
    for i in 0..2 {
        for j in 0..=k {
            let r = i * (k + 1) + j;
            for col in 0..2 {
                let c = 2 * i + col;
                for m in 0..nm {
                    edge_rows[r * n + c * nm + m] = normal[col] * mom[j * nm + m];
                }
            }
        }
    }

    let f = Mat::<f64>::from_fn(n_edge, n, |r, b| edge_rows[r * n + b]);
    let svd = f.svd().expect("svd of edge functionals");
    let v = svd.V();
    let gram = element_gram(tri, &mono, k);
    let mut interior_rows = Vec::with_capacity((n - n_edge) * n);
    for kcol in n_edge..n {
        // functional G ↦ (1/|τ|) ∫ G : K with K = column kcol of V
        let mut row = vec![0.0; n];
        for c in 0..4 {
            for a in 0..nm {
                let mut s = 0.0;
                for b in 0..nm {
                    s += gram[a * nm + b] * v[(c * nm + b, kcol)];
                }
                row[c * nm + a] = s;
            }
        }
        interior_rows.extend(row);
    }
    Functionals {
        edge_blocks: vec![(e, n_edge)],
        edge_rows,
        interior_rows,
    }
}

/// Builds all four spaces of degree `k`.
#[derive(Clone, Debug)]
pub struct SpaceSet {
    pub velocity: DofSpace,
    pub gradient: DofSpace,
    pub pressure: DofSpace,
    pub trace: DofSpace,
}

impl SpaceSet {
    pub fn new(mesh: &StaggeredMesh, k: usize) -> Result<Self> {
        Ok(Self {
            velocity: build_space(mesh, SpaceKind::Velocity, k)?,
            gradient: build_space(mesh, SpaceKind::Gradient, k)?,
            pressure: build_space(mesh, SpaceKind::Pressure, k)?,
            trace: build_space(mesh, SpaceKind::Trace, k)?,
        })
    }
}

fn interior_interpolation(
    space: &DofSpace,
    mesh: &StaggeredMesh,
    values: &mut [f64],
    ncomp: usize,
    field: &dyn Fn(Point) -> Vec<f64>,
) {
    let k = space.degree;
    if k == 0 {
        return;
    }
    let nlow = triangle_dim(k - 1);
    let rule = ReferenceTriangleRule::new(2 * k + 10);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let q = rule.map(&tri.coords);
        let mono = &space.local[t].monomials;
        let mut acc = vec![0.0; ncomp * nlow];
        for (&x, &w) in q.points.iter().zip(&q.weights) {
            let f = field(x);
            let mv = mono.values(x);
            for c in 0..ncomp {
                for m in 0..nlow {
                    acc[c * nlow + m] += w * f[c] * mv[m] / tri.area;
                }
            }
        }
        let dofs = &space.local[t].dofs;
        let first_interior = dofs.len() - ncomp * nlow;
        for (i, a) in acc.into_iter().enumerate() {
            values[dofs[first_interior + i]] = a;
        }
    }
}

/// Velocity interpolant `J_h`: matches normal moments on every dual edge and
/// interior moments of degree `k - 1`.
pub fn interpolate_jh(
    space: &DofSpace,
    mesh: &StaggeredMesh,
    field: impl Fn(Point) -> [f64; 2],
) -> Result<FieldCoefficients> {
    if space.kind != SpaceKind::Velocity {
        return Err(Error::InvalidArgument(format!(
            "J_h needs a velocity space, got {}",
            space.kind.name()
        )));
    }
    let k = space.degree;
    let mut values = vec![0.0; space.dim];
    let rule = ReferenceEdgeRule::new(2 * k + 10);
    for e in mesh.dual_edge_ids() {
        let edge = &mesh.edges[e];
        let n = edge.frame_normal();
        for (&s, &w) in rule.params.iter().zip(&rule.weights) {
            let f = field(edge.point_at(s));
            let psi = legendre_values(k, s);
            for j in 0..=k {
                values[space.edge_dofs[e][j]] += w * dot(f, n) * psi[j];
            }
        }
    }
    interior_interpolation(space, mesh, &mut values, 2, &|x| field(x).to_vec());
    FieldCoefficients::new(space, values)
}

/// Pressure interpolant `I_h`: matches trace moments on every primal edge and
/// interior moments of degree `k - 1`.
pub fn interpolate_ih(
    space: &DofSpace,
    mesh: &StaggeredMesh,
    field: impl Fn(Point) -> f64,
) -> Result<FieldCoefficients> {
    if space.kind != SpaceKind::Pressure {
        return Err(Error::InvalidArgument(format!(
            "I_h needs a pressure space, got {}",
            space.kind.name()
        )));
    }
    let k = space.degree;
    let mut values = vec![0.0; space.dim];
    let rule = ReferenceEdgeRule::new(2 * k + 10);
    for e in mesh.primal_edge_ids() {
        let edge = &mesh.edges[e];
        for (&s, &w) in rule.params.iter().zip(&rule.weights) {
            let f = field(edge.point_at(s));
            let psi = legendre_values(k, s);
            for j in 0..=k {
                values[space.edge_dofs[e][j]] += w * f * psi[j];
            }
        }
    }
    interior_interpolation(space, mesh, &mut values, 1, &|x| vec![field(x)]);
    FieldCoefficients::new(space, values)
}

/// Evaluates a triangle-based field at `(triangle, point)` pairs.
pub fn evaluate_field(
    space: &DofSpace,
    coeffs: &FieldCoefficients,
    points: &[(usize, Point)],
) -> Result<Vec<Vec<f64>>> {
    space.check(coeffs)?;
    if space.kind == SpaceKind::Trace {
        return Err(Error::InvalidArgument(
            "trace fields live on edges; use DofSpace::eval_trace".into(),
        ));
    }
    points
        .iter()
        .map(|&(t, x)| {
            if t >= space.local.len() {
                return Err(Error::OutOfRange {
                    index: t,
                    len: space.local.len(),
                });
            }
            Ok(space.eval_at(t, x, &coeffs.values))
        })
        .collect()
}

/// Largest absolute jump moment across the edges where the space is required
/// to be continuous: `[v·n]` on dual edges (velocity), `[G n]` and `[q]` on
/// interior primal edges (gradient, pressure).
pub fn max_jump_moment(space: &DofSpace, mesh: &StaggeredMesh, coeffs: &FieldCoefficients) -> Result<f64> {
    space.check(coeffs)?;
    let k = space.degree;
    let ncomp = space.ncomp();
    let rule = ReferenceEdgeRule::new(2 * k + 2);
    let mut worst: f64 = 0.0;
    for edge in &mesh.edges {
        let relevant = match space.kind {
            SpaceKind::Velocity => edge.class == EdgeClass::Dual,
            SpaceKind::Gradient | SpaceKind::Pressure => edge.class == EdgeClass::PrimalInterior,
            SpaceKind::Trace => false,
        };
        if !relevant {
            continue;
        }
        let q = rule.map(&[edge.start, edge.end]);
        let mut moments = vec![0.0; 2 * (k + 1)];
        for &(t, sign) in &edge.triangles {
            let table = space.local[t].table(ncomp, &q.points);
            let vals = space.eval_table(t, &table, &coeffs.values);
            for (qi, (&s, &w)) in q.params.iter().zip(&q.weights).enumerate() {
                let v = &vals[qi * ncomp..(qi + 1) * ncomp];
                let n = edge.normal;
                let jumps: Vec<f64> = match space.kind {
                    SpaceKind::Velocity => vec![v[0] * n[0] + v[1] * n[1]],
                    SpaceKind::Gradient => vec![v[0] * n[0] + v[1] * n[1], v[2] * n[0] + v[3] * n[1]],
                    _ => vec![v[0]],
                };
                let psi = legendre_values(k, s);
                for (c, jv) in jumps.iter().enumerate() {
                    for j in 0..=k {
                        moments[c * (k + 1) + j] += sign * w * jv * psi[j];
                    }
                }
            }
        }
        worst = moments.iter().fold(worst, |a, m| a.max(m.abs()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rectangle_mesh, build_staggered, InteriorPointRule, Rectangle};

    fn unit(n: usize) -> StaggeredMesh {
        build_staggered(
            build_rectangle_mesh(n, n, Rectangle::unit_square()).unwrap(),
            &InteriorPointRule::Centroid,
        )
        .unwrap()
    }

    #[test]
    fn dimensions_on_two_by_two() {
        let m = unit(2);
        let s = SpaceSet::new(&m, 1).unwrap();
        assert_eq!((s.velocity.broken_dim, s.velocity.dim), (96, 64));
        assert_eq!((s.pressure.broken_dim, s.pressure.dim), (48, 40));
        assert_eq!((s.gradient.broken_dim, s.gradient.dim), (192, 176));
        assert_eq!(s.trace.dim, 32);
    }

    #[test]
    fn dimension_formulas_on_grids() {
        for n in 1..=5usize {
            let m = unit(n);
            let nt = 4 * n * n;
            let n_dual = 4 * n * n;
            let n_primal = 2 * n * (n + 1);
            let n_int = 2 * n * (n - 1);
            for k in 0..=2usize {
                let s = SpaceSet::new(&m, k).unwrap();
                let d = triangle_dim(k);
                assert_eq!(s.velocity.dim, 2 * d * nt - (k + 1) * n_dual);
                assert_eq!(s.pressure.dim, d * nt - (k + 1) * n_int);
                assert_eq!(s.gradient.dim, 4 * d * nt - 2 * (k + 1) * n_int);
                assert_eq!(s.trace.dim, (k + 1) * n_dual);
                assert_eq!(s.pressure.edge_dofs.iter().filter(|d| !d.is_empty()).count(), n_primal);
            }
        }
    }

    #[test]
    fn degree_cap() {
        let m = unit(1);
        assert!(build_space(&m, SpaceKind::Velocity, MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn constant_velocity_is_reproduced() {
        let m = unit(3);
        let s = build_space(&m, SpaceKind::Velocity, 1).unwrap();
        let c = interpolate_jh(&s, &m, |_| [1.0, 0.0]).unwrap();
        for t in 0..m.num_triangles() {
            let x = m.triangles[t].centroid;
            let v = s.eval_at(t, x, &c.values);
            assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_reproduction() {
        let m = unit(2);
        for k in 1..=3 {
            let u = build_space(&m, SpaceKind::Velocity, k).unwrap();
            let p = build_space(&m, SpaceKind::Pressure, k).unwrap();
            let f = move |x: Point| [x[0].powi(k as i32) - x[1], 2.0 * x[0] * x[1].powi(k as i32 - 1)];
            let g = move |x: Point| 1.0 + x[0].powi(k as i32) + 0.5 * x[1];
            let cu = interpolate_jh(&u, &m, f).unwrap();
            let cp = interpolate_ih(&p, &m, g).unwrap();
            for (t, tri) in m.triangles.iter().enumerate() {
                for x in tri.coords.iter().chain(std::iter::once(&tri.centroid)) {
                    let v = u.eval_at(t, *x, &cu.values);
                    let e = f(*x);
                    assert!((v[0] - e[0]).abs() < 1e-11 && (v[1] - e[1]).abs() < 1e-11);
                    assert!((p.eval_at(t, *x, &cp.values)[0] - g(*x)).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn normal_component_matches_across_dual_edges() {
        let m = unit(2);
        let s = build_space(&m, SpaceKind::Velocity, 1).unwrap();
        let values: Vec<f64> = (0..s.dim).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        for e in m.dual_edge_ids() {
            let edge = &m.edges[e];
            let x = edge.midpoint();
            let vals: Vec<f64> = edge
                .triangles
                .iter()
                .map(|&(t, _)| dot_n(&s.eval_at(t, x, &values), edge.normal))
                .collect();
            assert!((vals[0] - vals[1]).abs() < 1e-12);
        }
    }

    fn dot_n(v: &[f64], n: Point) -> f64 {
        v[0] * n[0] + v[1] * n[1]
    }

    #[test]
    fn evaluate_field_checks_triangle_index() {
        let m = unit(1);
        let s = build_space(&m, SpaceKind::Pressure, 1).unwrap();
        let z = s.zeros();
        assert!(matches!(
            evaluate_field(&s, &z, &[(99, [0.5, 0.5])]),
            Err(Error::OutOfRange { index: 99, .. })
        ));
        let v = evaluate_field(&s, &z, &[(0, [0.5, 0.2])]).unwrap();
        assert_eq!(v, vec![vec![0.0]]);
    }

    #[test]
    fn interpolation_rejects_wrong_space() {
        let m = unit(1);
        let p = build_space(&m, SpaceKind::Pressure, 1).unwrap();
        assert!(interpolate_jh(&p, &m, |_| [0.0, 0.0]).is_err());
    }
}
