//! Barycentric subdivision of simplicial reciprocal bundles.

use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::linalg::{add, centroid, dist, dot, norm, scale, solve, sub};

use super::{assemble, Cell, LatticeBundle, LatticeKind};

#[derive(Clone, Debug)]
pub struct Subdivision {
    /// New vertices sit at x + t·s·(m_F − c_x), with m_F the facet circumcenter,
    /// c_x the cell circumcenter and s the graph-to-cell scale. Must lie in (0, 1).
    pub shrink: f64,
    /// Explicit (A, g) for edges inside one old cell; `None` derives them from conststuf.
    pub internal_weights: Option<(f64, f64)>,
    /// Explicit (A, g) for edges crossing an old facet.
    pub external_weights: Option<(f64, f64)>,
}

impl Default for Subdivision {
    fn default() -> Self {
        Subdivision {
            shrink: 0.5,
            internal_weights: None,
            external_weights: None,
        }
    }
}

fn circumcenter(points: &[Vec<f64>], dim: usize) -> Option<Vec<f64>> {
    // Affine hull of `points` (k+1 points spanning k dims, k ≤ dim).
    let p0 = &points[0];
    let dirs: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, p0)).collect();
    let k = dirs.len();
    // c = p0 + Σ λ_j dirs_j with 2 dirs_i·(c − p0) = |dirs_i|².
    let rows: Vec<Vec<f64>> = dirs
        .iter()
        .map(|a| dirs.iter().map(|b| 2.0 * dot(a, b)).collect())
        .collect();
    let rhs: Vec<f64> = dirs.iter().map(|a| dot(a, a)).collect();
    let lambda = solve(&rows, &rhs, 1e-12)?;
    let mut c = p0.clone();
    for j in 0..k {
        c = add(&c, &scale(&dirs[j], lambda[j]));
    }
    debug_assert_eq!(c.len(), dim);
    Some(c)
}

pub fn subdivide(b: &LatticeBundle, spec: &Subdivision) -> Result<LatticeBundle> {
    let d = b.dim();
    let t = spec.shrink;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::input("shrink factor must lie in (0, 1)"));
    }
    let mut cc = Vec::with_capacity(b.graph.len());
    for (x, c) in b.dual_cells.iter().enumerate() {
        if c.vertices.len() != d + 1 || c.facets.len() != d + 1 {
            return Err(Error::input(format!("dual cell of vertex {x} is not a simplex")));
        }
        cc.push(circumcenter(&c.vertices, d).ok_or_else(|| Error::input("degenerate simplex"))?);
    }
    // The graph must be a scaled copy of the cell circumcenters.
    let e0 = b.graph.edge(0);
    let s = dist(b.graph.coords(e0.u), b.graph.coords(e0.v)) / dist(&cc[e0.u], &cc[e0.v]);
    for e in b.graph.edges() {
        let gx = sub(b.graph.coords(e.v), b.graph.coords(e.u));
        let cx = scale(&sub(&cc[e.v], &cc[e.u]), s);
        if dist(&gx, &cx) > crate::EPS_GEOM * (1.0 + norm(&gx)) {
            return Err(Error::input(
                "graph vertices are not a scaled copy of the dual circumcenters",
            ));
        }
    }
    let mut cells = Vec::new();
    for x in 0..b.graph.len() {
        let cell = &b.dual_cells[x];
        let mid = centroid(&cell.vertices, d);
        for f in &cell.facets {
            let fv: Vec<Vec<f64>> = f.vertices.iter().map(|&i| cell.vertices[i].clone()).collect();
            let m = circumcenter(&fv, d).ok_or_else(|| Error::input("degenerate facet"))?;
            let mut pts = fv;
            pts.push(mid.clone());
            cells.push(Cell {
                site: add(b.graph.coords(x), &scale(&sub(&m, &cc[x]), t * s)),
                cell: Polytope::hull(&pts, d),
                orbit: b.orbit[x] * (d + 1) + cells.len() % (d + 1),
            });
        }
    }
    let (c1, c2) = b.ratios(0);
    let mut out = assemble(LatticeKind::Subdivided, d, cells, c1, c2, b.window)?;
    for (k, e) in out.graph.edges().iter().enumerate() {
        let dir = sub(out.graph.coords(e.v), out.graph.coords(e.u));
        let n = &out.facets[k].normal;
        if (dot(&dir, n) - norm(&dir)).abs() > crate::EPS_GEOM * (1.0 + norm(&dir)) {
            return Err(Error::input(
                "subdivision is not reciprocal: cells need coinciding centroid and circumcenter",
            ));
        }
    }
    if spec.internal_weights.is_some() || spec.external_weights.is_some() {
        let origin = |v: usize| v / (d + 1);
        for k in 0..out.graph.edges().len() {
            let e = out.graph.edge(k).clone();
            let w = if origin(e.u) == origin(e.v) {
                spec.internal_weights
            } else {
                spec.external_weights
            };
            if let Some((a, g)) = w {
                if !(a > 0.0 && g >= 0.0) {
                    return Err(Error::input("subdivision weights must be positive"));
                }
                let em = out.graph.edge_mut(k);
                em.a = a;
                em.g = g;
            }
        }
        let (r1, r2) = out.ratios(0);
        for k in 0..out.graph.edges().len() {
            let (q1, q2) = out.ratios(k);
            for (q, r, name) in [(q1, r1, "F/(|x-y|A^2)"), (q2, r2, "F|x-y|/g^2")] {
                if (q - r).abs() > 1e-9 * r.abs() {
                    return Err(Error::input(format!(
                        "conststuf violated on edge {k}: {name} = {q} against {r} (ratio {})",
                        q / r
                    )));
                }
            }
        }
    }
    Ok(out)
}
