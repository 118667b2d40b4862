//! Assembly of the bilinear forms of the staggered scheme.
//!
//! Every operator is returned with rows indexed by the test space and columns
//! by the trial space. Conventions for tensors: component `c = 2 i + j` holds
//! `G_ij`, `(G n)_i = Σ_j G_ij n_j` and `(∇v)_ij = ∂_j v_i`.
//!
//! | form        | rows | cols |
//! |-------------|------|------|
//! | `B_h*(v,G)` | W    | U    |
//! | `B_h(G,v)`  | U    | W    |
//! | `b_h(v,q)`  | P    | U    |
//! | `b_h*(q,v)` | U    | P    |
//! | `T_h(G,v̂)`  | Û    | W    |
//! | `T_h*(v̂,G)` | W    | Û    |

use crate::error::{Error, Result};
use crate::mesh::{dot, EdgeClass, Point, StaggeredMesh};
use crate::polybasis::{legendre_values, ReferenceEdgeRule, ReferenceTriangleRule};
use crate::sparse::{SparseOperator, TripletBuilder};
use crate::spaces::{DofSpace, LocalTable, SpaceKind};

/// Coefficients of the zeroth-order and diffusive terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl NonlinearCoefficients {
    pub fn new(alpha: f64, beta: f64, epsilon: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("epsilon", epsilon)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self { alpha, beta, epsilon })
    }

    /// `α u + β |u| u`.
    pub fn apply(&self, u: [f64; 2]) -> [f64; 2] {
        let s = self.alpha + self.beta * u[0].hypot(u[1]);
        [s * u[0], s * u[1]]
    }
}

fn expect_kind(space: &DofSpace, kind: SpaceKind) -> Result<()> {
    if space.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "expected {} space, got {}",
            kind.name(),
            space.kind.name()
        )));
    }
    Ok(())
}

fn edge_points(mesh: &StaggeredMesh, e: usize, rule: &ReferenceEdgeRule) -> crate::polybasis::EdgeQuadRule {
    let edge = &mesh.edges[e];
    rule.map(&[edge.start, edge.end])
}

#[inline]
fn gn(g: &[f64], n: Point) -> Point {
    [g[0] * n[0] + g[1] * n[1], g[2] * n[0] + g[3] * n[1]]
}

fn check_single_valued(mesh: &StaggeredMesh, e: usize) -> Result<()> {
    let edge = &mesh.edges[e];
    let expected = if edge.class == EdgeClass::PrimalBoundary { 1 } else { 2 };
    if edge.triangles.len() != expected {
        return Err(Error::Geometry {
            polygon: mesh.triangles[edge.triangles[0].0].polygon,
            message: format!("edge {e} has {} adjacent triangles", edge.triangles.len()),
        });
    }
    Ok(())
}

/// Mass matrix weighted by a function given at the quadrature points of each
/// triangle: `∫ w φ_j · φ_i`.
pub fn assemble_weighted_mass(
    mesh: &StaggeredMesh,
    space: &DofSpace,
    degree: usize,
    mut weight: impl FnMut(usize, &[Point]) -> Vec<f64>,
) -> Result<SparseOperator> {
    if space.kind == SpaceKind::Trace {
        return Err(Error::InvalidArgument("mass matrix of the trace space".into()));
    }
    let ncomp = space.ncomp();
    let rule = ReferenceTriangleRule::new(degree);
    let mut b = TripletBuilder::new(space.dim, space.dim);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = rule.map(&tri.coords);
        let w = weight(t, &quad.points);
        let lb = &space.local[t];
        let table = lb.table(ncomp, &quad.points);
        for i in 0..lb.len() {
            for j in 0..lb.len() {
                let mut s = 0.0;
                for q in 0..table.npts {
                    let vi = table.value(i, q);
                    let vj = table.value(j, q);
                    let mut p = 0.0;
                    for c in 0..ncomp {
                        p += vi[c] * vj[c];
                    }
                    s += quad.weights[q] * w[q] * p;
                }
                b.push(lb.dofs[i], lb.dofs[j], s);
            }
        }
    }
    Ok(b.build().with_spaces(space.kind, space.kind))
}

/// `M_ij = ∫ φ_j · φ_i`, exact for the polynomial spaces.
pub fn assemble_mass(mesh: &StaggeredMesh, space: &DofSpace) -> Result<SparseOperator> {
    assemble_weighted_mass(mesh, space, 2 * space.degree + 2, |_, pts| vec![1.0; pts.len()])
}

/// Quadrature degree used for weighted masses, loads and errors.
pub fn rich_degree(k: usize) -> usize {
    2 * k + 4
}

/// Values of a velocity field at the points of a table on triangle `t`.
fn velocity_at(space: &DofSpace, t: usize, table: &LocalTable, u: &[f64]) -> Vec<[f64; 2]> {
    let v = space.eval_table(t, table, u);
    v.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// `(α + β |u_old|) M`, the frozen operator of one Picard iteration.
pub fn assemble_picard_nonlinearity(
    mesh: &StaggeredMesh,
    space: &DofSpace,
    u_old: &[f64],
    coeffs: &NonlinearCoefficients,
) -> Result<SparseOperator> {
    assemble_picard_with_shift(mesh, space, u_old, coeffs, 0.0)
}

/// `(shift + α + β |u_old|) M` in a single pass.
pub fn assemble_picard_with_shift(
    mesh: &StaggeredMesh,
    space: &DofSpace,
    u_old: &[f64],
    coeffs: &NonlinearCoefficients,
    shift: f64,
) -> Result<SparseOperator> {
    expect_kind(space, SpaceKind::Velocity)?;
    if u_old.len() != space.dim {
        return Err(Error::DimensionMismatch {
            expected: space.dim,
            got: u_old.len(),
            context: "frozen velocity".into(),
        });
    }
    let a = shift + coeffs.alpha;
    let beta = coeffs.beta;
    assemble_weighted_mass(mesh, space, rich_degree(space.degree), |t, pts| {
        if beta == 0.0 {
            return vec![a; pts.len()];
        }
        let table = space.local[t].table(2, pts);
        velocity_at(space, t, &table, u_old)
            .into_iter()
            .map(|u| a + beta * u[0].hypot(u[1]))
            .collect()
    })
}

/// `B_h*(v, G) = -∫ v·div G + Σ_{dual} ∫ (v·n) n·[G n]`.
pub fn assemble_bh_star(mesh: &StaggeredMesh, u: &DofSpace, w: &DofSpace) -> Result<SparseOperator> {
    expect_kind(u, SpaceKind::Velocity)?;
    expect_kind(w, SpaceKind::Gradient)?;
    let k = u.degree;
    let trule = ReferenceTriangleRule::new(2 * k);
    let erule = ReferenceEdgeRule::new(2 * k + 2);
    let mut b = TripletBuilder::new(w.dim, u.dim);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = trule.map(&tri.coords);
        let tu = u.local[t].table(2, &quad.points);
        let tw = w.local[t].table(4, &quad.points);
        for l in 0..tw.nloc {
            for m in 0..tu.nloc {
                let mut s = 0.0;
                for q in 0..quad.weights.len() {
                    let gg = tw.grad(l, q);
                    let div = [gg[0][0] + gg[1][1], gg[2][0] + gg[3][1]];
                    let v = tu.value(m, q);
                    s -= quad.weights[q] * (v[0] * div[0] + v[1] * div[1]);
                }
                b.push(w.local[t].dofs[l], u.local[t].dofs[m], s);
            }
        }
    }
    for e in mesh.dual_edge_ids() {
        check_single_valued(mesh, e)?;
        let edge = &mesh.edges[e];
        let n = edge.normal;
        let quad = edge_points(mesh, e, &erule);
        for &(tv, _) in &edge.triangles {
            let tu = u.local[tv].table(2, &quad.points);
            for &(tg, dg) in &edge.triangles {
                let tw = w.local[tg].table(4, &quad.points);
                for l in 0..tw.nloc {
                    for m in 0..tu.nloc {
                        let mut s = 0.0;
                        for q in 0..quad.weights.len() {
                            let vn = dot(tu.value(m, q).try_into().unwrap(), n);
                            let ngn = dot(n, gn(tw.value(l, q), n));
                            s += quad.weights[q] * 0.5 * vn * dg * ngn;
                        }
                        b.push(w.local[tg].dofs[l], u.local[tv].dofs[m], s);
                    }
                }
            }
        }
    }
    Ok(b.build().with_spaces(SpaceKind::Gradient, SpaceKind::Velocity))
}

/// `B_h(G, v) = ∫ G:∇v - Σ_{primal} ∫ [v]·(G n) - Σ_{dual} ∫ [(v·t)(t·G n)]`.
pub fn assemble_bh(mesh: &StaggeredMesh, w: &DofSpace, u: &DofSpace) -> Result<SparseOperator> {
    expect_kind(u, SpaceKind::Velocity)?;
    expect_kind(w, SpaceKind::Gradient)?;
    let k = u.degree;
    let trule = ReferenceTriangleRule::new(2 * k);
    let erule = ReferenceEdgeRule::new(2 * k + 2);
    let mut b = TripletBuilder::new(u.dim, w.dim);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = trule.map(&tri.coords);
        let tu = u.local[t].table(2, &quad.points);
        let tw = w.local[t].table(4, &quad.points);
        for m in 0..tu.nloc {
            for l in 0..tw.nloc {
                let mut s = 0.0;
                for q in 0..quad.weights.len() {
                    let gv = tu.grad(m, q);
                    let g = tw.value(l, q);
                    s += quad.weights[q]
                        * (g[0] * gv[0][0] + g[1] * gv[0][1] + g[2] * gv[1][0] + g[3] * gv[1][1]);
                }
                b.push(u.local[t].dofs[m], w.local[t].dofs[l], s);
            }
        }
    }
    for e in mesh.primal_edge_ids() {
        check_single_valued(mesh, e)?;
        let edge = &mesh.edges[e];
        let n = edge.normal;
        let avg = if edge.triangles.len() == 2 { 0.5 } else { 1.0 };
        let quad = edge_points(mesh, e, &erule);
        for &(tv, dv) in &edge.triangles {
            let tu = u.local[tv].table(2, &quad.points);
            for &(tg, _) in &edge.triangles {
                let tw = w.local[tg].table(4, &quad.points);
                for m in 0..tu.nloc {
                    for l in 0..tw.nloc {
                        let mut s = 0.0;
                        for q in 0..quad.weights.len() {
                            let v = tu.value(m, q);
                            let g = gn(tw.value(l, q), n);
                            s -= quad.weights[q] * dv * avg * (v[0] * g[0] + v[1] * g[1]);
                        }
                        b.push(u.local[tv].dofs[m], w.local[tg].dofs[l], s);
                    }
                }
            }
        }
    }
    for e in mesh.dual_edge_ids() {
        check_single_valued(mesh, e)?;
        let edge = &mesh.edges[e];
        let (n, tg) = (edge.normal, edge.tangent);
        let quad = edge_points(mesh, e, &erule);
        for &(t, d) in &edge.triangles {
            let tu = u.local[t].table(2, &quad.points);
            let tw = w.local[t].table(4, &quad.points);
            for m in 0..tu.nloc {
                for l in 0..tw.nloc {
                    let mut s = 0.0;
                    for q in 0..quad.weights.len() {
                        let vt = dot(tu.value(m, q).try_into().unwrap(), tg);
                        let tgn = dot(tg, gn(tw.value(l, q), n));
                        s -= quad.weights[q] * d * vt * tgn;
                    }
                    b.push(u.local[t].dofs[m], w.local[t].dofs[l], s);
                }
            }
        }
    }
    Ok(b.build().with_spaces(SpaceKind::Velocity, SpaceKind::Gradient))
}

/// `b_h(v, q) = ∫ v·∇q - Σ_{dual} ∫ (v·n)[q]`.
pub fn assemble_b(mesh: &StaggeredMesh, u: &DofSpace, p: &DofSpace) -> Result<SparseOperator> {
    expect_kind(u, SpaceKind::Velocity)?;
    expect_kind(p, SpaceKind::Pressure)?;
    let k = u.degree;
    let trule = ReferenceTriangleRule::new(2 * k);
    let erule = ReferenceEdgeRule::new(2 * k + 2);
    let mut b = TripletBuilder::new(p.dim, u.dim);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = trule.map(&tri.coords);
        let tu = u.local[t].table(2, &quad.points);
        let tp = p.local[t].table(1, &quad.points);
        for l in 0..tp.nloc {
            for m in 0..tu.nloc {
                let mut s = 0.0;
                for q in 0..quad.weights.len() {
                    let v = tu.value(m, q);
                    let g = tp.grad(l, q)[0];
                    s += quad.weights[q] * (v[0] * g[0] + v[1] * g[1]);
                }
                b.push(p.local[t].dofs[l], u.local[t].dofs[m], s);
            }
        }
    }
    for e in mesh.dual_edge_ids() {
        check_single_valued(mesh, e)?;
        let edge = &mesh.edges[e];
        let n = edge.normal;
        let quad = edge_points(mesh, e, &erule);
        for &(tv, _) in &edge.triangles {
            let tu = u.local[tv].table(2, &quad.points);
            for &(tq, dq) in &edge.triangles {
                let tp = p.local[tq].table(1, &quad.points);
                for l in 0..tp.nloc {
                    for m in 0..tu.nloc {
                        let mut s = 0.0;
                        for q in 0..quad.weights.len() {
                            let vn = dot(tu.value(m, q).try_into().unwrap(), n);
                            s -= quad.weights[q] * 0.5 * vn * dq * tp.value(l, q)[0];
                        }
                        b.push(p.local[tq].dofs[l], u.local[tv].dofs[m], s);
                    }
                }
            }
        }
    }
    Ok(b.build().with_spaces(SpaceKind::Pressure, SpaceKind::Velocity))
}

/// `b_h*(q, v) = -∫ q div v + Σ_{primal} ∫ q [v·n]`.
pub fn assemble_b_star(mesh: &StaggeredMesh, p: &DofSpace, u: &DofSpace) -> Result<SparseOperator> {
    expect_kind(u, SpaceKind::Velocity)?;
    expect_kind(p, SpaceKind::Pressure)?;
    let k = u.degree;
    let trule = ReferenceTriangleRule::new(2 * k);
    let erule = ReferenceEdgeRule::new(2 * k + 2);
    let mut b = TripletBuilder::new(u.dim, p.dim);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = trule.map(&tri.coords);
        let tu = u.local[t].table(2, &quad.points);
        let tp = p.local[t].table(1, &quad.points);
        for m in 0..tu.nloc {
            for l in 0..tp.nloc {
                let mut s = 0.0;
                for q in 0..quad.weights.len() {
                    let g = tu.grad(m, q);
                    s -= quad.weights[q] * tp.value(l, q)[0] * (g[0][0] + g[1][1]);
                }
                b.push(u.local[t].dofs[m], p.local[t].dofs[l], s);
            }
        }
    }
    for e in mesh.primal_edge_ids() {
        check_single_valued(mesh, e)?;
        let edge = &mesh.edges[e];
        let n = edge.normal;
        let avg = if edge.triangles.len() == 2 { 0.5 } else { 1.0 };
        let quad = edge_points(mesh, e, &erule);
        for &(tv, dv) in &edge.triangles {
            let tu = u.local[tv].table(2, &quad.points);
            for &(tq, _) in &edge.triangles {
                let tp = p.local[tq].table(1, &quad.points);
                for m in 0..tu.nloc {
                    for l in 0..tp.nloc {
                        let mut s = 0.0;
                        for q in 0..quad.weights.len() {
                            let vn = dot(tu.value(m, q).try_into().unwrap(), n);
                            s += quad.weights[q] * avg * tp.value(l, q)[0] * dv * vn;
                        }
                        b.push(u.local[tv].dofs[m], p.local[tq].dofs[l], s);
                    }
                }
            }
        }
    }
    Ok(b.build().with_spaces(SpaceKind::Velocity, SpaceKind::Pressure))
}

fn trace_setup(mesh: &StaggeredMesh, e: usize, k: usize, rule: &ReferenceEdgeRule) -> (crate::polybasis::EdgeQuadRule, Vec<Vec<f64>>, Point) {
    let quad = edge_points(mesh, e, rule);
    let psi = quad.params.iter().map(|&s| legendre_values(k, s)).collect();
    (quad, psi, mesh.edges[e].frame_tangent())
}

/// `T_h(G, v̂) = Σ_{dual} ∫ [G n]·v̂`, rows in the trace space.
pub fn assemble_th(mesh: &StaggeredMesh, w: &DofSpace, trace: &DofSpace) -> Result<SparseOperator> {
    expect_kind(w, SpaceKind::Gradient)?;
    expect_kind(trace, SpaceKind::Trace)?;
    let erule = ReferenceEdgeRule::new(2 * w.degree + 2);
    let mut b = TripletBuilder::new(trace.dim, w.dim);
    for e in mesh.dual_edge_ids() {
        check_single_valued(mesh, e)?;
        let n = mesh.edges[e].normal;
        let (quad, psi, tt) = trace_setup(mesh, e, trace.degree, &erule);
        for &(tg, dg) in &mesh.edges[e].triangles {
            let tw = w.local[tg].table(4, &quad.points);
            for (j, &dj) in trace.edge_dofs[e].iter().enumerate() {
                for l in 0..tw.nloc {
                    let mut s = 0.0;
                    for q in 0..quad.weights.len() {
                        s += quad.weights[q] * dg * dot(gn(tw.value(l, q), n), tt) * psi[q][j];
                    }
                    b.push(dj, w.local[tg].dofs[l], s);
                }
            }
        }
    }
    Ok(b.build().with_spaces(SpaceKind::Trace, SpaceKind::Gradient))
}

/// `T_h*(v̂, G)`, the same pairing with rows in the gradient space.
pub fn assemble_th_star(mesh: &StaggeredMesh, trace: &DofSpace, w: &DofSpace) -> Result<SparseOperator> {
    expect_kind(w, SpaceKind::Gradient)?;
    expect_kind(trace, SpaceKind::Trace)?;
    let erule = ReferenceEdgeRule::new(2 * w.degree + 2);
    let mut b = TripletBuilder::new(w.dim, trace.dim);
    for e in mesh.dual_edge_ids() {
        check_single_valued(mesh, e)?;
        let n = mesh.edges[e].normal;
        let (quad, psi, tt) = trace_setup(mesh, e, trace.degree, &erule);
        for &(tg, dg) in &mesh.edges[e].triangles {
            let tw = w.local[tg].table(4, &quad.points);
            for l in 0..tw.nloc {
                for (j, &dj) in trace.edge_dofs[e].iter().enumerate() {
                    let mut s = 0.0;
                    for q in 0..quad.weights.len() {
                        let jump = [dg * tt[0] * psi[q][j], dg * tt[1] * psi[q][j]];
                        s += quad.weights[q] * dot(gn(tw.value(l, q), n), jump);
                    }
                    b.push(w.local[tg].dofs[l], dj, s);
                }
            }
        }
    }
    Ok(b.build().with_spaces(SpaceKind::Gradient, SpaceKind::Trace))
}

/// `m_i = ∫ q_i`, used to pin the pressure mean.
pub fn pressure_mean_vector(mesh: &StaggeredMesh, p: &DofSpace) -> Result<Vec<f64>> {
    expect_kind(p, SpaceKind::Pressure)?;
    let rule = ReferenceTriangleRule::new(p.degree);
    let mut m = vec![0.0; p.dim];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = rule.map(&tri.coords);
        let tp = p.local[t].table(1, &quad.points);
        for (l, &d) in p.local[t].dofs.iter().enumerate() {
            for q in 0..quad.weights.len() {
                m[d] += quad.weights[q] * tp.value(l, q)[0];
            }
        }
    }
    Ok(m)
}

/// `(f(·, t), v_i)` for every velocity basis function.
pub fn assemble_load(
    mesh: &StaggeredMesh,
    u: &DofSpace,
    f: impl Fn(Point, f64) -> [f64; 2],
    t: f64,
) -> Result<Vec<f64>> {
    expect_kind(u, SpaceKind::Velocity)?;
    let rule = ReferenceTriangleRule::new(rich_degree(u.degree));
    let mut out = vec![0.0; u.dim];
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let quad = rule.map(&tri.coords);
        let fv: Vec<[f64; 2]> = quad.points.iter().map(|&x| f(x, t)).collect();
        let tu = u.local[ti].table(2, &quad.points);
        for (l, &d) in u.local[ti].dofs.iter().enumerate() {
            let mut s = 0.0;
            for q in 0..quad.weights.len() {
                let v = tu.value(l, q);
                s += quad.weights[q] * (fv[q][0] * v[0] + fv[q][1] * v[1]);
            }
            out[d] += s;
        }
    }
    Ok(out)
}

/// `b_h(v, q_i)` for a smooth field `v`, one entry per pressure basis function.
pub fn apply_b_to_field(
    mesh: &StaggeredMesh,
    p: &DofSpace,
    v: impl Fn(Point) -> [f64; 2],
) -> Result<Vec<f64>> {
    expect_kind(p, SpaceKind::Pressure)?;
    let deg = rich_degree(p.degree) + 8;
    let trule = ReferenceTriangleRule::new(deg);
    let erule = ReferenceEdgeRule::new(deg);
    let mut out = vec![0.0; p.dim];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = trule.map(&tri.coords);
        let tp = p.local[t].table(1, &quad.points);
        let vals: Vec<_> = quad.points.iter().map(|&x| v(x)).collect();
        for (l, &d) in p.local[t].dofs.iter().enumerate() {
            for q in 0..quad.weights.len() {
                let g = tp.grad(l, q)[0];
                out[d] += quad.weights[q] * (vals[q][0] * g[0] + vals[q][1] * g[1]);
            }
        }
    }
    for e in mesh.dual_edge_ids() {
        let edge = &mesh.edges[e];
        let quad = edge_points(mesh, e, &erule);
        let vn: Vec<f64> = quad.points.iter().map(|&x| dot(v(x), edge.normal)).collect();
        for &(tq, dq) in &edge.triangles {
            let tp = p.local[tq].table(1, &quad.points);
            for (l, &d) in p.local[tq].dofs.iter().enumerate() {
                for q in 0..quad.weights.len() {
                    out[d] -= quad.weights[q] * vn[q] * dq * tp.value(l, q)[0];
                }
            }
        }
    }
    Ok(out)
}

/// `b_h*(q, v_i)` for a smooth field `q`, one entry per velocity basis function.
pub fn apply_b_star_to_field(
    mesh: &StaggeredMesh,
    u: &DofSpace,
    qf: impl Fn(Point) -> f64,
) -> Result<Vec<f64>> {
    expect_kind(u, SpaceKind::Velocity)?;
    let deg = rich_degree(u.degree) + 8;
    let trule = ReferenceTriangleRule::new(deg);
    let erule = ReferenceEdgeRule::new(deg);
    let mut out = vec![0.0; u.dim];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let quad = trule.map(&tri.coords);
        let tu = u.local[t].table(2, &quad.points);
        let vals: Vec<f64> = quad.points.iter().map(|&x| qf(x)).collect();
        for (m, &d) in u.local[t].dofs.iter().enumerate() {
            for q in 0..quad.weights.len() {
                let g = tu.grad(m, q);
                out[d] -= quad.weights[q] * vals[q] * (g[0][0] + g[1][1]);
            }
        }
    }
    for e in mesh.primal_edge_ids() {
        let edge = &mesh.edges[e];
        let quad = edge_points(mesh, e, &erule);
        let vals: Vec<f64> = quad.points.iter().map(|&x| qf(x)).collect();
        for &(tv, dv) in &edge.triangles {
            let tu = u.local[tv].table(2, &quad.points);
            for (m, &d) in u.local[tv].dofs.iter().enumerate() {
                for q in 0..quad.weights.len() {
                    let vn = dot(tu.value(m, q).try_into().unwrap(), edge.normal);
                    out[d] += quad.weights[q] * vals[q] * dv * vn;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rectangle_mesh, build_staggered, InteriorPointRule, Rectangle};
    use crate::spaces::{interpolate_ih, interpolate_jh, SpaceSet};

    fn setup(n: usize, k: usize) -> (StaggeredMesh, SpaceSet) {
        let primal = build_rectangle_mesh(n, n, Rectangle::unit_square()).unwrap();
        let mesh = build_staggered(primal, &InteriorPointRule::Centroid).unwrap();
        let spaces = SpaceSet::new(&mesh, k).unwrap();
        (mesh, spaces)
    }

    #[test]
    fn mass_integrates_constants() {
        let (mesh, s) = setup(2, 1);
        let m = assemble_mass(&mesh, &s.velocity).unwrap();
        let one = interpolate_jh(&s.velocity, &mesh, |_| [1.0, 0.0]).unwrap();
        let v = m.bilinear(&one.values, &one.values);
        assert!((v - 1.0).abs() < 1e-13, "{v}");
        let mp = assemble_mass(&mesh, &s.pressure).unwrap();
        let c = interpolate_ih(&s.pressure, &mesh, |_| 2.0).unwrap();
        assert!((mp.bilinear(&c.values, &c.values) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn adjoint_pairs_match() {
        let (mesh, s) = setup(3, 1);
        let bs = assemble_bh_star(&mesh, &s.velocity, &s.gradient).unwrap();
        let bh = assemble_bh(&mesh, &s.gradient, &s.velocity).unwrap();
        assert!(bh.max_abs_diff(&bs.transpose()).unwrap() < 1e-12 * bh.max_abs());
        let b = assemble_b(&mesh, &s.velocity, &s.pressure).unwrap();
        let b_star = assemble_b_star(&mesh, &s.pressure, &s.velocity).unwrap();
        assert!(b.max_abs_diff(&b_star.transpose()).unwrap() < 1e-12 * b.max_abs());
        let th = assemble_th(&mesh, &s.gradient, &s.trace).unwrap();
        let ths = assemble_th_star(&mesh, &s.trace, &s.gradient).unwrap();
        assert!(th.max_abs_diff(&ths.transpose()).unwrap() < 1e-12 * th.max_abs());
    }

    #[test]
    fn constant_pressure_is_in_kernel_of_b() {
        let (mesh, s) = setup(3, 1);
        let b = assemble_b(&mesh, &s.velocity, &s.pressure).unwrap();
        let c = interpolate_ih(&s.pressure, &mesh, |_| 1.0).unwrap();
        let r = b.matvec_transpose(&c.values);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn weighted_mass_scales_by_field_norm() {
        let (mesh, s) = setup(2, 1);
        let u = interpolate_jh(&s.velocity, &mesh, |_| [3.0, 4.0]).unwrap();
        let c = NonlinearCoefficients::new(0.0, 1.0, 1.0).unwrap();
        let a = assemble_picard_nonlinearity(&mesh, &s.velocity, &u.values, &c).unwrap();
        let m = assemble_mass(&mesh, &s.velocity).unwrap();
        assert!(a.max_abs_diff(&m.scaled(5.0)).unwrap() < 1e-12);
    }

    #[test]
    fn load_matches_mass_for_polynomial_forcing() {
        let (mesh, s) = setup(2, 1);
        let f = |x: Point| [x[0] + 2.0 * x[1], 1.0 - x[0]];
        let fi = interpolate_jh(&s.velocity, &mesh, f).unwrap();
        let m = assemble_mass(&mesh, &s.velocity).unwrap();
        let load = assemble_load(&mesh, &s.velocity, |x, _| f(x), 0.0).unwrap();
        let mf = m.matvec(&fi.values);
        for (a, b) in load.iter().zip(&mf) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_wrong_spaces() {
        let (mesh, s) = setup(2, 1);
        assert!(assemble_b(&mesh, &s.pressure, &s.velocity).is_err());
        assert!(assemble_mass(&mesh, &s.trace).is_err());
        assert!(NonlinearCoefficients::new(-1.0, 0.0, 1.0).is_err());
    }
}
