#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use sdg_core::mesh::Point;
use sdg_core::solver::Discretization;
use sdg_core::{build_rectangle_mesh, build_staggered, InteriorPointRule, PrimalMesh, Rectangle, StaggeredMesh};

pub fn square(n: usize) -> StaggeredMesh {
    let primal = build_rectangle_mesh(n, n, Rectangle::unit_square()).unwrap();
    build_staggered(primal, &InteriorPointRule::Centroid).unwrap()
}

/// Uniform `n×n` grid with interior vertices moved by up to `amount·h` in
/// each direction.
pub fn perturbed(n: usize, amount: f64, seed: u64) -> StaggeredMesh {
    let base = build_rectangle_mesh(n, n, Rectangle::unit_square()).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    let h = 1.0 / n as f64;
    let vertices: Vec<Point> = base
        .vertices
        .iter()
        .map(|&[x, y]| {
            let interior = x > 1e-12 && x < 1.0 - 1e-12 && y > 1e-12 && y < 1.0 - 1e-12;
            if interior {
                [
                    x + amount * h * rng.gen_range(-1.0..1.0),
                    y + amount * h * rng.gen_range(-1.0..1.0),
                ]
            } else {
                [x, y]
            }
        })
        .collect();
    let primal = PrimalMesh::new(vertices, base.polygons.clone()).unwrap();
    build_staggered(primal, &InteriorPointRule::Centroid).unwrap()
}

pub fn disc(n: usize) -> Discretization {
    Discretization::new(square(n), 1).unwrap()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
