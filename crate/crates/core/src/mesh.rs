//! Primal polygonal meshes and the staggered simplicial submesh.
//!
//! Every polygon `S(ν)` is split into triangles by joining an interior point
//! `ν` to its vertices. Each triangle then owns exactly one primal edge (a side
//! of the polygon) and two dual edges (incident to `ν`). Edges carry a global
//! unit normal `n_e` and every adjacent triangle records the sign
//! `δ = n_τ · n_e`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Relative tolerance for orientation and containment tests, scaled by the
/// polygon diameter.
pub const GEOMETRY_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn distance(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Twice the signed area of a vertex cycle (positive when counterclockwise).
fn signed_area2(points: &[Point]) -> f64 {
    let m = points.len();
    (0..m).map(|i| cross(points[i], points[(i + 1) % m])).sum()
}

fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            d = d.max(distance(p, q));
        }
    }
    d
}

/// Axis-aligned rectangle `[min.x, max.x] × [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rectangle {
    pub min: Point,
    pub max: Point,
}

impl Rectangle {
    pub fn unit_square() -> Self {
        Self {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

/// A side of the primal mesh, with the polygons that use it.
#[derive(Clone, Debug)]
pub struct PrimalEdge {
    /// Vertex indices, sorted ascending.
    pub vertices: [usize; 2],
    /// `(polygon, side)` pairs; one entry on the boundary, two in the interior.
    pub polygons: Vec<(usize, usize)>,
}

impl PrimalEdge {
    pub fn is_boundary(&self) -> bool {
        self.polygons.len() == 1
    }
}

/// A validated polygonal partition of a planar domain.
#[derive(Clone, Debug)]
pub struct PrimalMesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex cycles.
    pub polygons: Vec<Vec<usize>>,
    pub edges: Vec<PrimalEdge>,
    /// `polygon_edges[p][i]` is the edge joining vertex `i` and `i + 1` of polygon `p`.
    pub polygon_edges: Vec<Vec<usize>>,
}

impl PrimalMesh {
    /// Builds a mesh from raw vertex and polygon lists and validates it eagerly.
    pub fn new(vertices: Vec<Point>, polygons: Vec<Vec<usize>>) -> Result<Self> {
        if polygons.is_empty() {
            return Err(Error::InvalidArgument("mesh has no polygons".into()));
        }
        for (p, poly) in polygons.iter().enumerate() {
            validate_polygon(p, poly, &vertices)?;
        }

        let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<PrimalEdge> = Vec::new();
        let mut polygon_edges = Vec::with_capacity(polygons.len());
        for (p, poly) in polygons.iter().enumerate() {
            let m = poly.len();
            let mut sides = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (poly[i], poly[(i + 1) % m]);
                let key = [a.min(b), a.max(b)];
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(PrimalEdge {
                        vertices: key,
                        polygons: Vec::new(),
                    });
                    edges.len() - 1
                });
                edges[id].polygons.push((p, i));
                sides.push(id);
            }
            polygon_edges.push(sides);
        }

        for (id, edge) in edges.iter().enumerate() {
            if edge.polygons.len() > 2 {
                return Err(Error::NonManifold {
                    edge: id,
                    a: edge.vertices[0],
                    b: edge.vertices[1],
                    count: edge.polygons.len(),
                });
            }
            if let [(p, i), (q, j)] = edge.polygons[..] {
                // neighbours must traverse a shared side in opposite directions
                let forward = |poly: usize, side: usize| {
                    let cyc = &polygons[poly];
                    cyc[side] == edge.vertices[0]
                };
                if p == q || forward(p, i) == forward(q, j) {
                    return Err(Error::Geometry {
                        polygon: q,
                        message: format!("edge {id} is traversed inconsistently by polygons {p} and {q}"),
                    });
                }
            }
        }

        Ok(Self {
            vertices,
            polygons,
            edges,
            polygon_edges,
        })
    }

    pub fn num_polygons(&self) -> usize {
        self.polygons.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    pub fn polygon_points(&self, p: usize) -> Vec<Point> {
        self.polygons[p].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn polygon_area(&self, p: usize) -> f64 {
        0.5 * signed_area2(&self.polygon_points(p))
    }

    /// Area-weighted centroid of polygon `p`.
    pub fn polygon_centroid(&self, p: usize) -> Point {
        let pts = self.polygon_points(p);
        let m = pts.len();
        let a2 = signed_area2(&pts);
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..m {
            let (a, b) = (pts[i], pts[(i + 1) % m]);
            let c = cross(a, b);
            cx += (a[0] + b[0]) * c;
            cy += (a[1] + b[1]) * c;
        }
        [cx / (3.0 * a2), cy / (3.0 * a2)]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_polygons()).map(|p| self.polygon_area(p)).sum()
    }

    /// Area enclosed by the boundary edges (shoelace over the boundary only).
    pub fn boundary_area(&self) -> f64 {
        let mut a2 = 0.0;
        for edge in self.edges.iter().filter(|e| e.is_boundary()) {
            let (p, i) = edge.polygons[0];
            let cyc = &self.polygons[p];
            let (a, b) = (cyc[i], cyc[(i + 1) % cyc.len()]);
            a2 += cross(self.vertices[a], self.vertices[b]);
        }
        0.5 * a2
    }
}

fn validate_polygon(p: usize, poly: &[usize], vertices: &[Point]) -> Result<()> {
    let geom = |message: String| Error::Geometry { polygon: p, message };
    if poly.len() < 3 {
        return Err(geom(format!("polygon has {} vertices", poly.len())));
    }
    if let Some(&v) = poly.iter().find(|&&v| v >= vertices.len()) {
        return Err(Error::OutOfRange {
            index: v,
            len: vertices.len(),
        });
    }
    let pts: Vec<Point> = poly.iter().map(|&v| vertices[v]).collect();
    let diam = diameter(&pts);
    let m = pts.len();
    for i in 0..m {
        if distance(pts[i], pts[(i + 1) % m]) <= GEOMETRY_TOL * diam {
            return Err(geom(format!("side {i} has zero length")));
        }
    }
    let a2 = signed_area2(&pts);
    if a2 <= GEOMETRY_TOL * diam * diam {
        return Err(geom("vertex cycle is clockwise or degenerate".into()));
    }
    // simplicity: non-adjacent sides must not touch
    for i in 0..m {
        for j in i + 1..m {
            if j == i + 1 || (i == 0 && j == m - 1) {
                continue;
            }
            if segments_touch(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m], diam) {
                return Err(geom(format!("sides {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

fn segments_touch(a: Point, b: Point, c: Point, d: Point, scale: f64) -> bool {
    let tol = GEOMETRY_TOL * scale * scale;
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    let on = |o: f64, p: Point, q: Point, r: Point| {
        o.abs() <= tol
            && r[0] >= p[0].min(q[0]) - tol.sqrt()
            && r[0] <= p[0].max(q[0]) + tol.sqrt()
            && r[1] >= p[1].min(q[1]) - tol.sqrt()
            && r[1] <= p[1].max(q[1]) + tol.sqrt()
    };
    if ((o1 > tol && o2 < -tol) || (o1 < -tol && o2 > tol))
        && ((o3 > tol && o4 < -tol) || (o3 < -tol && o4 > tol))
    {
        return true;
    }
    on(o1, a, b, c) || on(o2, a, b, d) || on(o3, c, d, a) || on(o4, c, d, b)
}

/// Uniform `nx × ny` grid of rectangles over `domain`.
pub fn build_rectangle_mesh(nx: usize, ny: usize, domain: Rectangle) -> Result<PrimalMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "rectangle mesh needs positive counts, got {nx}x{ny}"
        )));
    }
    let (w, h) = (domain.max[0] - domain.min[0], domain.max[1] - domain.min[1]);
    if !(w > 0.0 && h > 0.0) || !w.is_finite() || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "degenerate rectangle {:?}",
            domain
        )));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                domain.min[0] + w * i as f64 / nx as f64,
                domain.min[1] + h * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut polygons = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            polygons.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PrimalMesh::new(vertices, polygons)
}

/// Reads the plain-text polygon format:
///
/// ```text
/// # comment
/// NV NP
/// x y          (NV lines)
/// m i1 ... im  (NP lines, counterclockwise, 0-based)
/// ```
pub fn read_polygon_mesh<R: Read>(source: R) -> Result<PrimalMesh> {
    let reader = BufReader::new(source);
    let mut lines = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((n + 1, trimmed.to_string()));
    }
    let mut it = lines.into_iter();
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let (hline, header) = it
        .next()
        .ok_or_else(|| parse_err(0, "missing `NV NP` header".into()))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(hline, format!("bad header: {e}")))?;
    let [nv, np] = counts[..] else {
        return Err(parse_err(hline, "header must be `NV NP`".into()));
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, text) = it
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {nv} vertex lines")))?;
        let xy: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad coordinate: {e}")))?;
        match xy[..] {
            [x, y] if x.is_finite() && y.is_finite() => vertices.push([x, y]),
            _ => return Err(parse_err(ln, "vertex line must be `x y`".into())),
        }
    }

    let mut polygons = Vec::with_capacity(np);
    for _ in 0..np {
        let (ln, text) = it
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {np} polygon lines")))?;
        let ids: Vec<usize> = text
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad polygon index: {e}")))?;
        let Some((&m, rest)) = ids.split_first() else {
            return Err(parse_err(ln, "empty polygon line".into()));
        };
        if rest.len() != m {
            return Err(parse_err(
                ln,
                format!("polygon declares {m} vertices but lists {}", rest.len()),
            ));
        }
        if let Some(&bad) = rest.iter().find(|&&v| v >= nv) {
            return Err(parse_err(ln, format!("vertex index {bad} out of range")));
        }
        polygons.push(rest.to_vec());
    }
    if let Some((ln, _)) = it.next() {
        return Err(parse_err(ln, "trailing data after polygon list".into()));
    }
    PrimalMesh::new(vertices, polygons)
}

/// Choice of the interior point `ν` of each polygon.
#[derive(Clone, Debug, Default)]
pub enum InteriorPointRule {
    #[default]
    Centroid,
    /// One point per polygon.
    Custom(Vec<Point>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    PrimalInterior,
    PrimalBoundary,
    Dual,
}

impl EdgeClass {
    pub fn is_primal(self) -> bool {
        !matches!(self, EdgeClass::Dual)
    }

    pub fn is_interior(self) -> bool {
        !matches!(self, EdgeClass::PrimalBoundary)
    }
}

/// An edge of the simplicial submesh.
#[derive(Clone, Debug)]
pub struct Edge {
    /// Point indices sorted ascending; `start → end` is the parameter direction
    /// used for edge polynomials and degree-of-freedom frames.
    pub points: [usize; 2],
    pub start: Point,
    pub end: Point,
    pub class: EdgeClass,
    /// Global unit normal `n_e`; outward on the domain boundary.
    pub normal: Point,
    /// Unit tangent `t_e`, `n_e` rotated counterclockwise.
    pub tangent: Point,
    pub length: f64,
    /// Adjacent triangles with their signs `δ_i = n_i · n_e`.
    pub triangles: Vec<(usize, f64)>,
}

impl Edge {
    /// Tangent along the parameter direction, independent of `n_e`.
    pub fn frame_tangent(&self) -> Point {
        let d = sub(self.end, self.start);
        [d[0] / self.length, d[1] / self.length]
    }

    /// Normal attached to the parameter direction, independent of `n_e`.
    pub fn frame_normal(&self) -> Point {
        let t = self.frame_tangent();
        [t[1], -t[0]]
    }

    /// Point at parameter `s ∈ [0, 1]`.
    pub fn point_at(&self, s: f64) -> Point {
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }

    pub fn midpoint(&self) -> Point {
        self.point_at(0.5)
    }
}

/// A triangle `(a, b, ν)` of the submesh, counterclockwise.
#[derive(Clone, Debug)]
pub struct Triangle {
    pub points: [usize; 3],
    pub coords: [Point; 3],
    pub polygon: usize,
    /// Local edge 0 is the primal side `a-b`, 1 is `b-ν`, 2 is `ν-a`.
    pub edges: [usize; 3],
    /// Sign `δ` of each local edge with respect to its global normal.
    pub signs: [f64; 3],
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
}

impl Triangle {
    pub fn primal_edge(&self) -> usize {
        self.edges[0]
    }

    pub fn dual_edges(&self) -> [usize; 2] {
        [self.edges[1], self.edges[2]]
    }

    /// Outward unit normal of local edge `i`.
    pub fn outward_normal(&self, i: usize) -> Point {
        let (p, q) = (self.coords[i], self.coords[(i + 1) % 3]);
        let d = sub(q, p);
        let l = norm(d);
        [d[1] / l, -d[0] / l]
    }

    pub fn local_edge(&self, edge: usize) -> Option<usize> {
        self.edges.iter().position(|&e| e == edge)
    }

    pub fn contains(&self, x: Point, tol: f64) -> bool {
        (0..3).all(|i| {
            let (p, q) = (self.coords[i], self.coords[(i + 1) % 3]);
            cross(sub(q, p), sub(x, p)) >= -tol * self.diameter * self.diameter
        })
    }
}

/// The primal mesh together with its simplicial submesh, dual regions and
/// classified, oriented edges.
#[derive(Clone, Debug)]
pub struct StaggeredMesh {
    pub primal: PrimalMesh,
    /// Primal vertices followed by one interior point per polygon.
    pub points: Vec<Point>,
    pub interior_points: Vec<Point>,
    pub triangles: Vec<Triangle>,
    /// Primal edges first (sharing the primal edge ids), dual edges after.
    pub edges: Vec<Edge>,
    /// `dual_regions[e]` lists the triangles of `D(e)` for primal edge `e`.
    pub dual_regions: Vec<Vec<usize>>,
    /// Maximum triangle diameter.
    pub h: f64,
}

impl StaggeredMesh {
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_primal_edges(&self) -> usize {
        self.primal.num_edges()
    }

    pub fn num_dual_edges(&self) -> usize {
        self.edges.len() - self.primal.num_edges()
    }

    pub fn primal_edge_ids(&self) -> std::ops::Range<usize> {
        0..self.primal.num_edges()
    }

    pub fn dual_edge_ids(&self) -> std::ops::Range<usize> {
        self.primal.num_edges()..self.edges.len()
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }

    /// Finds a triangle containing `x`.
    pub fn locate(&self, x: Point) -> Option<usize> {
        self.triangles.iter().position(|t| t.contains(x, 1e-10))
    }

    /// Same mesh with every interior normal `n_e` reversed (and the
    /// corresponding signs `δ`). Used to check that assembled forms do not
    /// depend on the orientation convention.
    pub fn with_flipped_interior_normals(&self) -> Self {
        let mut out = self.clone();
        for (id, edge) in out.edges.iter_mut().enumerate() {
            if !edge.class.is_interior() {
                continue;
            }
            edge.normal = [-edge.normal[0], -edge.normal[1]];
            edge.tangent = [-edge.tangent[0], -edge.tangent[1]];
            for (t, sign) in edge.triangles.iter_mut() {
                *sign = -*sign;
                let tri = &mut out.triangles[*t];
                let local = tri.local_edge(id).expect("edge/triangle incidence");
                tri.signs[local] = -tri.signs[local];
            }
        }
        out
    }
}

/// Splits every polygon into triangles around its interior point and builds
/// the oriented edge sets.
pub fn build_staggered(primal: PrimalMesh, rule: &InteriorPointRule) -> Result<StaggeredMesh> {
    let np = primal.num_polygons();
    let interior_points: Vec<Point> = match rule {
        InteriorPointRule::Centroid => (0..np).map(|p| primal.polygon_centroid(p)).collect(),
        InteriorPointRule::Custom(pts) => {
            if pts.len() != np {
                return Err(Error::DimensionMismatch {
                    expected: np,
                    got: pts.len(),
                    context: "custom interior points".into(),
                });
            }
            pts.clone()
        }
    };

    let nv = primal.vertices.len();
    let mut points = primal.vertices.clone();
    points.extend_from_slice(&interior_points);

    let n_primal = primal.num_edges();
    let mut edges: Vec<Edge> = primal
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (primal.vertices[e.vertices[0]], primal.vertices[e.vertices[1]]);
            Edge {
                points: e.vertices,
                start: a,
                end: b,
                class: if e.is_boundary() {
                    EdgeClass::PrimalBoundary
                } else {
                    EdgeClass::PrimalInterior
                },
                normal: [0.0, 0.0],
                tangent: [0.0, 0.0],
                length: distance(a, b),
                triangles: Vec::new(),
            }
        })
        .collect();

    let mut dual_lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::new();
    for (p, poly) in primal.polygons.iter().enumerate() {
        let nu = interior_points[p];
        let nu_id = nv + p;
        let poly_pts = primal.polygon_points(p);
        let diam = diameter(&poly_pts);
        let m = poly.len();
        let mut dual_edge = |v: usize| -> usize {
            *dual_lookup.entry((p, v)).or_insert_with(|| {
                let (a, b) = (points[v], nu);
                edges.push(Edge {
                    points: [v, nu_id],
                    start: a,
                    end: b,
                    class: EdgeClass::Dual,
                    normal: [0.0, 0.0],
                    tangent: [0.0, 0.0],
                    length: distance(a, b),
                    triangles: Vec::new(),
                });
                edges.len() - 1
            })
        };
        for i in 0..m {
            let (a, b) = (poly[i], poly[(i + 1) % m]);
            let coords = [points[a], points[b], nu];
            let area = 0.5 * cross(sub(coords[1], coords[0]), sub(coords[2], coords[0]));
            if !(area > GEOMETRY_TOL * diam * diam) {
                return Err(Error::Geometry {
                    polygon: p,
                    message: format!(
                        "interior point ({}, {}) is outside the polygon or the polygon is not star-shaped with respect to it (side {i})",
                        nu[0], nu[1]
                    ),
                });
            }
            let edges_local = [primal.polygon_edges[p][i], dual_edge(b), dual_edge(a)];
            triangles.push(Triangle {
                points: [a, b, nu_id],
                coords,
                polygon: p,
                edges: edges_local,
                signs: [0.0; 3],
                area,
                centroid: [
                    (coords[0][0] + coords[1][0] + coords[2][0]) / 3.0,
                    (coords[0][1] + coords[1][1] + coords[2][1]) / 3.0,
                ],
                diameter: diameter(&coords),
            });
        }
    }

    for (t, tri) in triangles.iter().enumerate() {
        for &e in &tri.edges {
            edges[e].triangles.push((t, 0.0));
        }
    }
    for (e, edge) in edges.iter_mut().enumerate() {
        // lowest triangle index first; on the boundary this is the only one
        edge.triangles.sort_by_key(|&(t, _)| t);
        let t0 = &triangles[edge.triangles[0].0];
        let n = t0.outward_normal(t0.local_edge(e).expect("triangle owns edge"));
        edge.normal = n;
        edge.tangent = [-n[1], n[0]];
    }
    for (e, edge) in edges.iter_mut().enumerate() {
        for (t, sign) in edge.triangles.iter_mut() {
            let tri = &mut triangles[*t];
            let local = tri.local_edge(e).expect("triangle owns edge");
            let s = dot(tri.outward_normal(local), edge.normal);
            *sign = s.signum();
            tri.signs[local] = s.signum();
        }
        let expected = if edge.class == EdgeClass::PrimalBoundary { 1 } else { 2 };
        if edge.triangles.len() != expected {
            return Err(Error::Geometry {
                polygon: triangles[edge.triangles[0].0].polygon,
                message: format!(
                    "edge {e} has {} adjacent triangles, expected {expected}",
                    edge.triangles.len()
                ),
            });
        }
    }

    let dual_regions = (0..n_primal)
        .map(|e| edges[e].triangles.iter().map(|&(t, _)| t).collect())
        .collect();
    let h = triangles.iter().map(|t| t.diameter).fold(0.0, f64::max);

    Ok(StaggeredMesh {
        primal,
        points,
        interior_points,
        triangles,
        edges,
        dual_regions,
        h,
    })
}

/// Shape-regularity indicators of a staggered mesh.
#[derive(Clone, Debug)]
pub struct MeshQualityReport {
    pub h: f64,
    /// Distance from `ν` to the nearest polygon side over the polygon diameter.
    pub star_ratio: Vec<f64>,
    /// Shortest polygon side over the polygon diameter.
    pub edge_ratio: Vec<f64>,
}

impl MeshQualityReport {
    pub fn min_star_ratio(&self) -> f64 {
        self.star_ratio.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_edge_ratio(&self) -> f64 {
        self.edge_ratio.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn mesh_quality(mesh: &StaggeredMesh) -> MeshQualityReport {
    let primal = &mesh.primal;
    let mut star_ratio = Vec::with_capacity(primal.num_polygons());
    let mut edge_ratio = Vec::with_capacity(primal.num_polygons());
    for p in 0..primal.num_polygons() {
        let pts = primal.polygon_points(p);
        let diam = diameter(&pts);
        let nu = mesh.interior_points[p];
        let m = pts.len();
        let mut min_dist = f64::INFINITY;
        let mut min_side = f64::INFINITY;
        for i in 0..m {
            let (a, b) = (pts[i], pts[(i + 1) % m]);
            let side = distance(a, b);
            min_side = min_side.min(side);
            min_dist = min_dist.min(cross(sub(b, a), sub(nu, a)).abs() / side);
        }
        star_ratio.push(min_dist / diam);
        edge_ratio.push(min_side / diam);
    }
    MeshQualityReport {
        h: mesh.h,
        star_ratio,
        edge_ratio,
    }
}
