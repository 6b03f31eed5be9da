#![allow(dead_code)]

use isoforge::graph::{GeometricGraph, VertexFn, VertexSet};
use isoforge::lattices::{generate, product, subdivide, LatticeBundle, LatticeKind, Subdivision};
use isoforge::linalg::dist;
use isoforge::pde::NeumannSolution;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn honeycomb(window: usize) -> LatticeBundle {
    generate(LatticeKind::Honeycomb(None), window).unwrap()
}

pub fn deformed(window: usize) -> LatticeBundle {
    generate(LatticeKind::Honeycomb(Some([[1.0, 0.3], [0.0, 1.2]])), window).unwrap()
}

pub fn triangular(window: usize) -> LatticeBundle {
    generate(LatticeKind::Triangular, window).unwrap()
}

pub fn grid(window: usize) -> LatticeBundle {
    generate(LatticeKind::ProductGrid(vec![1.0, 1.0]), window).unwrap()
}

pub fn bcc(window: usize) -> LatticeBundle {
    generate(LatticeKind::Bcc, window).unwrap()
}

pub fn fcc(window: usize) -> LatticeBundle {
    generate(LatticeKind::FccSubdivided { ell1: 1.0 }, window).unwrap()
}

pub fn honeycomb_prism() -> LatticeBundle {
    let seg = generate(LatticeKind::ProductGrid(vec![1.0]), 3).unwrap();
    product(&honeycomb(2), &seg).unwrap()
}

pub fn subdivided_honeycomb() -> LatticeBundle {
    subdivide(&honeycomb(2), &Subdivision::default()).unwrap()
}

pub fn subdivided_bcc() -> LatticeBundle {
    subdivide(&bcc(1), &Subdivision::default()).unwrap()
}

/// Every lattice example, labelled.
pub fn all_bundles() -> Vec<(&'static str, LatticeBundle)> {
    vec![
        ("honeycomb", honeycomb(3)),
        ("deformed honeycomb", deformed(3)),
        ("triangular", triangular(3)),
        ("grid", grid(3)),
        ("bcc", bcc(2)),
        ("fcc", fcc(2)),
        ("honeycomb x segment", honeycomb_prism()),
        ("subdivided honeycomb", subdivided_honeycomb()),
        ("subdivided bcc", subdivided_bcc()),
    ]
}

pub fn planar_bundles() -> Vec<(&'static str, LatticeBundle)> {
    vec![
        ("honeycomb", honeycomb(3)),
        ("deformed honeycomb", deformed(3)),
        ("triangular", triangular(3)),
        ("grid", grid(3)),
        ("subdivided honeycomb", subdivided_honeycomb()),
    ]
}

/// Grows a connected subset of `n` vertices from the center by random frontier
/// picks. Only vertices whose neighborhood lies inside the window are used.
pub fn random_connected<R: Rng>(b: &LatticeBundle, n: usize, rng: &mut R) -> VertexSet {
    let mut set = VertexSet::from([b.center()]);
    while set.len() < n {
        let mut frontier: Vec<usize> = set
            .iter()
            .flat_map(|&x| b.graph.neighbors(x).iter().map(|(y, _)| *y))
            .filter(|y| !set.contains(y) && b.complete[*y])
            .collect();
        frontier.sort_unstable();
        frontier.dedup();
        match frontier.choose(rng) {
            Some(&y) => {
                set.insert(y);
            }
            None => break,
        }
    }
    set
}

/// Hamamuki boundary condition: every in-edge satisfies u(y) − u(x) ≤ g/A and
/// every outer vertex has one with equality. Returns the worst violation.
pub fn hamamuki_defect(g: &GeometricGraph, omega: &VertexSet, u: &VertexFn) -> f64 {
    let view = isoforge::graph::subset_view(g, omega).unwrap();
    let mut worst: f64 = 0.0;
    for y in view.outer() {
        let mut closest = f64::INFINITY;
        for b in view.in_edges(y) {
            let e = g.edge(b.edge);
            let gap = e.g / e.a - (u[&y] - u[&b.x]);
            worst = worst.max(-gap);
            closest = closest.min(gap.abs());
        }
        worst = worst.max(closest);
    }
    worst
}

pub fn neumann_checks(g: &GeometricGraph, omega: &VertexSet, sol: &NeumannSolution) -> Result<(), String> {
    let view = isoforge::graph::subset_view(g, omega).unwrap();
    let lap = isoforge::pde::laplacian(g, omega, &sol.u).unwrap();
    let bound = view.flux / omega.len() as f64 + 1e-9;
    if sol.divergence_residual > 1e-9 {
        return Err(format!("divergence residual {}", sol.divergence_residual));
    }
    let defect = hamamuki_defect(g, omega, &sol.u);
    if defect > 1e-9 {
        return Err(format!("boundary condition defect {defect}"));
    }
    if let Some((x, l)) = lap.iter().find(|(_, &l)| l > bound) {
        return Err(format!("Δu({x}) = {l} exceeds {bound}"));
    }
    Ok(())
}

/// Symmetric Hausdorff distance between two vertex lists.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let one = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.iter()
            .map(|x| q.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}
