//! Lattice examples with their reciprocal tessellations, plus product and
//! subdivision combinators.
//!
//! Every bundle is assembled the same way: a list of dual cells with one graph
//! site each; cells sharing a facet become adjacent, and edge weights follow
//! A² = F/(|x−y|·C₁), g² = F·|x−y|/C₂ so both ratios are constant by construction.

mod product;
mod reference;
mod subdivide;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Halfspace, Polytope};
use crate::graph::{GeometricGraph, GraphJson, VertexId};
use crate::linalg::{add, centroid, dist, dot, inverse, mat_vec, norm, scale, transpose};

pub use product::{product, product_with, ProductWeighting};
pub use reference::{reference_subset, ReferenceKind};
pub use subdivide::{subdivide, Subdivision};

#[derive(Clone, Debug, PartialEq)]
pub enum LatticeKind {
    /// Hamamuki box lattice diag(λ)·Z^d.
    ProductGrid(Vec<f64>),
    /// Honeycomb graph, optionally deformed by a 2×2 matrix (row-major).
    Honeycomb(Option<[[f64; 2]; 2]>),
    Triangular,
    Bcc,
    /// FCC tessellation with octahedra quartered; `ell1` is the free edge length.
    FccSubdivided { ell1: f64 },
    Product,
    Subdivided,
}

impl LatticeKind {
    pub fn label(&self) -> String {
        match self {
            LatticeKind::ProductGrid(l) => format!(
                "grid:{}",
                l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
            LatticeKind::Honeycomb(None) => "honeycomb".into(),
            LatticeKind::Honeycomb(Some(m)) => {
                format!("honeycomb:{},{},{},{}", m[0][0], m[0][1], m[1][0], m[1][1])
            }
            LatticeKind::Triangular => "triangular".into(),
            LatticeKind::Bcc => "bcc".into(),
            LatticeKind::FccSubdivided { ell1 } => format!("fcc:{ell1}"),
            LatticeKind::Product => "product".into(),
            LatticeKind::Subdivided => "subdivided".into(),
        }
    }
}

/// Shared facet of two adjacent dual cells; `normal` points from `edge.u` to `edge.v`.
#[derive(Clone, Debug, Serialize)]
pub struct DualFacet {
    pub area: f64,
    pub normal: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LatticeBundle {
    pub kind: LatticeKind,
    pub graph: GeometricGraph,
    pub dual_cells: Vec<Polytope>,
    /// Indexed by edge id.
    pub facets: Vec<DualFacet>,
    pub window: usize,
    /// Vertices whose dual cell is surrounded on every facet inside the window.
    pub complete: Vec<bool>,
    /// Translation orbit of each vertex.
    pub orbit: Vec<usize>,
    /// Cell vertices in the undeformed frame, for reference subsets.
    pub(crate) reference_cells: Vec<Vec<Vec<f64>>>,
    lookup: HashMap<Vec<i64>, VertexId>,
}

fn key(p: &[f64]) -> Vec<i64> {
    p.iter().map(|x| (x * 1e6).round() as i64).collect()
}

/// A dual cell with its graph site and orbit label.
pub(crate) struct Cell {
    pub site: Vec<f64>,
    pub cell: Polytope,
    pub orbit: usize,
}

impl LatticeBundle {
    pub fn dim(&self) -> usize {
        self.graph.dim
    }

    pub fn vertex_at(&self, p: &[f64]) -> Option<VertexId> {
        self.lookup.get(&key(p)).copied()
    }

    pub fn orbit_count(&self) -> usize {
        self.orbit.iter().max().map_or(0, |m| m + 1)
    }

    /// Per orbit, the complete vertex closest to the origin.
    pub fn orbit_roots(&self) -> Vec<VertexId> {
        let mut roots: Vec<Option<VertexId>> = vec![None; self.orbit_count()];
        for x in 0..self.graph.len() {
            if !self.complete[x] {
                continue;
            }
            let r = &mut roots[self.orbit[x]];
            let better = match r {
                None => true,
                Some(y) => {
                    let (dx, dy) = (norm(self.graph.coords(x)), norm(self.graph.coords(*y)));
                    dx < dy - 1e-9 || (dx <= dy + 1e-9 && key(self.graph.coords(x)) < key(self.graph.coords(*y)))
                }
            };
            if better {
                *r = Some(x);
            }
        }
        roots.into_iter().flatten().collect()
    }

    /// The complete vertex closest to the origin.
    pub fn center(&self) -> VertexId {
        *self
            .orbit_roots()
            .iter()
            .min_by(|a, b| {
                norm(self.graph.coords(**a))
                    .partial_cmp(&norm(self.graph.coords(**b)))
                    .unwrap()
            })
            .expect("bundle has a complete vertex")
    }

    /// Errors unless every vertex of Ω has its full neighborhood in the window.
    pub fn check_inside(&self, omega: &crate::graph::VertexSet) -> Result<()> {
        match omega.iter().find(|&&x| x >= self.complete.len() || !self.complete[x]) {
            Some(x) => Err(Error::Window(format!(
                "vertex {x} touches the window edge (window {})",
                self.window
            ))),
            None => Ok(()),
        }
    }

    /// Conststuf ratios F/(|x−y|A²) and F|x−y|/g² for one edge.
    pub fn ratios(&self, edge: usize) -> (f64, f64) {
        let e = self.graph.edge(edge);
        let l = dist(self.graph.coords(e.u), self.graph.coords(e.v));
        let f = self.facets[edge].area;
        (f / (l * e.a * e.a), f * l / (e.g * e.g))
    }

    pub fn to_json(&self) -> BundleJson {
        BundleJson {
            graph: self.graph.to_json(),
            cells: self
                .dual_cells
                .iter()
                .enumerate()
                .map(|(i, c)| (i.to_string(), c.clone()))
                .collect(),
            facets: self
                .graph
                .edges()
                .iter()
                .zip(&self.facets)
                .map(|(e, f)| FacetJson {
                    u: e.u,
                    v: e.v,
                    area: f.area,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BundleJson {
    #[serde(flatten)]
    pub graph: GraphJson,
    pub cells: std::collections::BTreeMap<String, Polytope>,
    pub facets: Vec<FacetJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FacetJson {
    pub u: usize,
    pub v: usize,
    pub area: f64,
}

/// Builds the reciprocal graph of a face-to-face tessellation.
pub(crate) fn assemble(
    kind: LatticeKind,
    dim: usize,
    cells: Vec<Cell>,
    c1: f64,
    c2: f64,
    window: usize,
) -> Result<LatticeBundle> {
    let coords: Vec<Vec<f64>> = cells.iter().map(|c| c.site.clone()).collect();
    let mut graph = GeometricGraph::new(dim, coords)?;
    let mut open: HashMap<Vec<i64>, (usize, usize)> = HashMap::new();
    let mut matched: Vec<Vec<bool>> = cells.iter().map(|c| vec![false; c.cell.facets.len()]).collect();
    let mut facets = Vec::new();
    for (ci, c) in cells.iter().enumerate() {
        for (fi, f) in c.cell.facets.iter().enumerate() {
            let mut k: Vec<Vec<i64>> = f.vertices.iter().map(|&v| key(&c.cell.vertices[v])).collect();
            k.sort();
            let k: Vec<i64> = k.concat();
            match open.remove(&k) {
                Some((cj, fj)) => {
                    let l = dist(&cells[cj].site, &c.site);
                    let area = cells[cj].cell.facets[fj].area;
                    let a = (area / (l * c1)).sqrt();
                    let g = (area * l / c2).sqrt();
                    graph.add_edge(cj, ci, a, g)?;
                    facets.push(DualFacet {
                        area,
                        normal: cells[cj].cell.facets[fj].normal.clone(),
                    });
                    matched[ci][fi] = true;
                    matched[cj][fj] = true;
                }
                None => {
                    open.insert(k, (ci, fi));
                }
            }
        }
    }
    let complete = matched.iter().map(|m| m.iter().all(|b| *b)).collect();
    let lookup = cells
        .iter()
        .enumerate()
        .map(|(i, c)| (key(&c.site), i))
        .collect();
    Ok(LatticeBundle {
        kind,
        orbit: cells.iter().map(|c| c.orbit).collect(),
        reference_cells: cells.iter().map(|c| c.cell.vertices.clone()).collect(),
        dual_cells: cells.into_iter().map(|c| c.cell).collect(),
        graph,
        facets,
        window,
        complete,
        lookup,
    })
}

pub(crate) fn translate(p: &Polytope, t: &[f64]) -> Polytope {
    let mut q = p.clone();
    for h in q.halfspaces.iter_mut() {
        h.offset += dot(&h.normal, t);
    }
    for v in q.vertices.iter_mut() {
        *v = add(v, t);
    }
    q
}

/// All integer vectors in [−r, r]^d.
fn box_points(d: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

/// Fractional coordinates of `p` in the lattice basis, reduced to [0, 1).
fn reduced(basis_inv: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    mat_vec(basis_inv, p)
        .into_iter()
        .map(|t| t - (t + 1e-9).floor())
        .collect()
}

/// Replicates orbit representatives over the window. `basis` holds lattice
/// vectors (rows) in cell space; `graph_map` carries a cell translation to the
/// corresponding graph translation.
fn replicate(
    reps: &[(Vec<f64>, Polytope)],
    basis: &[Vec<f64>],
    graph_map: &[Vec<f64>],
    window: usize,
) -> Vec<Cell> {
    let d = basis.len();
    let mut out = Vec::new();
    for m in box_points(d, window as i64 + 1) {
        let mut t = vec![0.0; d];
        for (k, b) in basis.iter().enumerate() {
            for i in 0..d {
                t[i] += m[k] as f64 * b[i];
            }
        }
        let gt = mat_vec(graph_map, &t);
        for (orbit, (site, cell)) in reps.iter().enumerate() {
            out.push(Cell {
                site: add(site, &gt),
                cell: translate(cell, &t),
                orbit,
            });
        }
    }
    out
}

/// A family of parallel hyperplanes {n·x = offset + k·spacing}, crossed by graph
/// edges of length `ell`.
struct Family {
    normal: Vec<f64>,
    spacing: f64,
    offset: f64,
    ell: f64,
}

/// Orbit representatives of a periodic hyperplane arrangement: one cell per
/// translation class, with graph site Σ ℓ_f n_f k_f.
fn arrangement_reps(families: &[Family], basis: &[Vec<f64>]) -> Result<Vec<(Vec<f64>, Polytope)>> {
    let d = basis.len();
    let binv = inverse(&transpose(basis)).ok_or_else(|| Error::input("singular lattice basis"))?;
    let steps = 36;
    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    let mut reps = Vec::new();
    let mut total = 0.0;
    let grid = box_points(d, steps);
    for g in grid {
        // θ ∈ [−0.25, 1.25]^d covers a period with margin.
        let theta: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, k)| 0.5 + *k as f64 / (48.0) + 0.0123 * (i as f64 + 1.0))
            .collect();
        let mut x = vec![0.0; d];
        for (k, b) in basis.iter().enumerate() {
            for i in 0..d {
                x[i] += theta[k] * b[i];
            }
        }
        let idx: Vec<i64> = families
            .iter()
            .map(|f| ((dot(&f.normal, &x) - f.offset) / f.spacing).floor() as i64)
            .collect();
        if seen.insert(idx.clone(), ()).is_some() {
            continue;
        }
        let mut hs = Vec::new();
        for (f, k) in families.iter().zip(&idx) {
            hs.push(Halfspace::new(f.normal.clone(), f.offset + (*k + 1) as f64 * f.spacing));
            hs.push(Halfspace::new(scale(&f.normal, -1.0), -(f.offset + *k as f64 * f.spacing)));
        }
        let cell = crate::geometry::intersect_halfspaces(&hs, d);
        if cell.volume <= 1e-12 {
            continue;
        }
        let c = centroid(&cell.vertices, d);
        let th = reduced(&binv, &c);
        if th.iter().any(|t| *t < -1e-9 || *t >= 1.0 - 1e-9) || th != reduced(&binv, &c) {
            continue;
        }
        // Keep only the translate whose centroid lies in the fundamental domain.
        let raw = mat_vec(&binv, &c);
        if raw.iter().zip(&th).any(|(r, t)| (r - t).abs() > 1e-6) {
            continue;
        }
        let mut site = vec![0.0; d];
        for (f, k) in families.iter().zip(&idx) {
            for i in 0..d {
                site[i] += f.ell * f.normal[i] * *k as f64;
            }
        }
        total += cell.volume;
        reps.push((site, cell));
    }
    let period = crate::linalg::determinant(basis).abs();
    if (total - period).abs() > 1e-9 * period {
        return Err(Error::invariant(format!(
            "arrangement cells cover {total} of a period of volume {period}"
        )));
    }
    Ok(reps)
}

/// Linear map taking a lattice translation t of the arrangement to the graph translation.
fn arrangement_graph_map(families: &[Family], d: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; d]; d];
    for f in families {
        for i in 0..d {
            for j in 0..d {
                g[i][j] += f.ell / f.spacing * f.normal[i] * f.normal[j];
            }
        }
    }
    g
}

fn unit(v: &[f64]) -> Vec<f64> {
    scale(v, 1.0 / norm(v))
}

pub fn generate(kind: LatticeKind, window: usize) -> Result<LatticeBundle> {
    if window < 1 {
        return Err(Error::input("window must be at least 1"));
    }
    match &kind {
        LatticeKind::ProductGrid(lambda) => grid(lambda, window),
        LatticeKind::Honeycomb(m) => {
            let b = honeycomb(window)?;
            match m {
                None => Ok(b),
                Some(m) => deform(b, m),
            }
        }
        LatticeKind::Triangular => triangular(window),
        LatticeKind::Bcc => bcc(window),
        LatticeKind::FccSubdivided { ell1 } => fcc(*ell1, window),
        LatticeKind::Product | LatticeKind::Subdivided => Err(Error::input(
            "product and subdivided bundles come from their combinators",
        )),
    }
}

fn grid(lambda: &[f64], window: usize) -> Result<LatticeBundle> {
    let d = lambda.len();
    if d == 0 || lambda.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::input("grid spacings must be positive"));
    }
    let families: Vec<Family> = (0..d)
        .map(|i| {
            let mut n = vec![0.0; d];
            n[i] = 1.0;
            Family {
                normal: n,
                spacing: lambda[i],
                offset: -lambda[i] / 2.0,
                ell: lambda[i],
            }
        })
        .collect();
    let basis: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut b = vec![0.0; d];
            b[i] = lambda[i];
            b
        })
        .collect();
    let reps = arrangement_reps(&families, &basis)?;
    let gm = arrangement_graph_map(&families, d);
    let cells = replicate(&reps, &basis, &gm, window);
    // A_i = 1/λ_i and g ≡ 1 make both ratios equal the cell volume.
    let vol: f64 = lambda.iter().product();
    assemble(LatticeKind::ProductGrid(lambda.to_vec()), d, cells, vol, vol, window)
}

fn honeycomb_families() -> Vec<Family> {
    let s3 = 3f64.sqrt();
    [[0.0, 1.0], [-s3 / 2.0, -0.5], [s3 / 2.0, -0.5]]
        .iter()
        .map(|n| Family {
            normal: n.to_vec(),
            spacing: s3 / 2.0,
            offset: 0.0,
            ell: s3 / 3.0,
        })
        .collect()
}

fn triangular_basis() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]
}

fn honeycomb(window: usize) -> Result<LatticeBundle> {
    let families = honeycomb_families();
    let basis = triangular_basis();
    let reps = arrangement_reps(&families, &basis)?;
    let gm = arrangement_graph_map(&families, 2);
    let cells = replicate(&reps, &basis, &gm, window);
    let s3 = 3f64.sqrt();
    assemble(LatticeKind::Honeycomb(None), 2, cells, s3, s3 / 3.0, window)
}

/// Graph coordinates move by M, dual cells by the cofactor |det M|·M^{-T}, which
/// keeps every edge perpendicular to its dual facet.
fn deform(b: LatticeBundle, m: &[[f64; 2]; 2]) -> Result<LatticeBundle> {
    let mm = vec![m[0].to_vec(), m[1].to_vec()];
    let det = crate::linalg::determinant(&mm);
    if det.abs() < 1e-12 || !det.is_finite() {
        return Err(Error::input("affine deformation matrix is singular"));
    }
    let minv = inverse(&mm).unwrap();
    let t: Vec<Vec<f64>> = transpose(&minv)
        .into_iter()
        .map(|r| scale(&r, det.abs()))
        .collect();
    let tinv_t = transpose(&inverse(&t).unwrap());
    let s3 = 3f64.sqrt();
    let reference = b.reference_cells.clone();
    let cells: Vec<Cell> = (0..b.graph.len())
        .map(|x| {
            let hs: Vec<Halfspace> = b.dual_cells[x]
                .halfspaces
                .iter()
                .map(|h| Halfspace::new(mat_vec(&tinv_t, &h.normal), h.offset))
                .collect();
            Cell {
                site: mat_vec(&mm, b.graph.coords(x)),
                cell: crate::geometry::intersect_halfspaces(&hs, 2),
                orbit: b.orbit[x],
            }
        })
        .collect();
    let mut out = assemble(LatticeKind::Honeycomb(Some(*m)), 2, cells, s3, s3 / 3.0, b.window)?;
    out.reference_cells = reference;
    Ok(out)
}

fn triangular(window: usize) -> Result<LatticeBundle> {
    let basis = triangular_basis();
    // Voronoi cell of the origin: x·v ≤ 1/2 over the six unit neighbors.
    let hs: Vec<Halfspace> = (0..6)
        .map(|k| {
            let t = std::f64::consts::PI / 3.0 * k as f64;
            Halfspace::new(vec![t.cos(), t.sin()], 0.5)
        })
        .collect();
    let hex = crate::geometry::intersect_halfspaces(&hs, 2);
    let reps = vec![(vec![0.0, 0.0], hex)];
    let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let cells = replicate(&reps, &basis, &id, window);
    let r = 1.0 / 3f64.sqrt();
    assemble(LatticeKind::Triangular, 2, cells, r, r, window)
}

fn bcc(window: usize) -> Result<LatticeBundle> {
    // Λ = {0, (1,1,1)} + 2Z³; Delone cells are the disphenoids around each Voronoi
    // vertex, which are the permutations of (0, ±1/2, ±1) about a lattice point.
    let basis = vec![vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![1.0, 1.0, 1.0]];
    let binv = inverse(&transpose(&basis)).unwrap();
    let lattice: Vec<Vec<f64>> = box_points(3, 2)
        .into_iter()
        .flat_map(|m| {
            let p: Vec<f64> = m.iter().map(|k| 2.0 * *k as f64).collect();
            let q = add(&p, &[1.0, 1.0, 1.0]);
            [p, q]
        })
        .collect();
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        for s1 in [0.5, -0.5] {
            for s2 in [1.0, -1.0] {
                let vals = [0.0, s1, s2];
                let w: Vec<f64> = (0..3).map(|i| vals[perm[i]]).collect();
                let th = reduced(&binv, &w);
                if !centers.iter().any(|c| reduced(&binv, c) == th) {
                    centers.push(w);
                }
            }
        }
    }
    let r = (5f64).sqrt() / 2.0;
    let reps: Vec<(Vec<f64>, Polytope)> = centers
        .iter()
        .map(|w| {
            let pts: Vec<Vec<f64>> = lattice
                .iter()
                .filter(|p| (dist(p, w) - r).abs() < 1e-9)
                .cloned()
                .collect();
            debug_assert_eq!(pts.len(), 4);
            (scale(w, 2.0), Polytope::hull(&pts, 3))
        })
        .collect();
    let total: f64 = reps.iter().map(|(_, c)| c.volume).sum();
    if (total - 4.0).abs() > 1e-9 {
        return Err(Error::invariant(format!("BCC cells cover {total} of 4")));
    }
    let two = vec![vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 2.0]];
    let cells = replicate(&reps, &basis, &two, window);
    // Facet √2, edge √2: A = g = 1.
    assemble(LatticeKind::Bcc, 3, cells, 1.0, 2.0, window)
}

fn fcc(ell1: f64, window: usize) -> Result<LatticeBundle> {
    if !(ell1 > 0.0 && ell1.is_finite()) {
        return Err(Error::input("FCC edge length must be positive"));
    }
    let s3 = 3f64.sqrt();
    let mut families = vec![
        Family {
            normal: vec![1.0, 0.0, 0.0],
            spacing: 1.0,
            offset: 0.0,
            ell: 1.0,
        },
        Family {
            normal: vec![0.0, 1.0, 0.0],
            spacing: 1.0,
            offset: 0.0,
            ell: 1.0,
        },
    ];
    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        families.push(Family {
            normal: unit(&[1.0, a, b]),
            spacing: 2.0 / s3,
            offset: 0.0,
            ell: ell1,
        });
    }
    let basis = vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]];
    let reps = arrangement_reps(&families, &basis)?;
    let gm = arrangement_graph_map(&families, 3);
    let cells = replicate(&reps, &basis, &gm, window);
    // A₂ = g₂ = ℓ₂ = 1 and ℓ₁A₁² = g₁²/ℓ₁ = √3/2 both give ratio 1.
    assemble(LatticeKind::FccSubdivided { ell1 }, 3, cells, 1.0, 1.0, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_linear_precision, neighbor_fan};

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn honeycomb_degrees_and_cells() {
        let b = generate(LatticeKind::Honeycomb(None), 2).unwrap();
        let s3 = 3f64.sqrt();
        for x in 0..b.graph.len() {
            assert!(approx(b.dual_cells[x].volume, s3 / 4.0, 1e-12));
            if b.complete[x] {
                assert_eq!(b.graph.degree(x), 3);
            }
        }
        assert_eq!(b.orbit_count(), 2);
        for e in b.graph.edges() {
            assert!(approx(e.a, 1.0, 1e-12) && approx(e.g, 1.0, 1e-12));
            assert!(approx(dist(b.graph.coords(e.u), b.graph.coords(e.v)), s3 / 3.0, 1e-12));
        }
        let c = b.center();
        let fan = neighbor_fan(&b.graph, c).unwrap();
        assert!(fan.vectors.iter().all(|v| approx(norm(v), s3 / 3.0, 1e-12)));
    }

    #[test]
    fn triangular_fan_is_six_unit_vectors() {
        let b = generate(LatticeKind::Triangular, 1).unwrap();
        let fan = neighbor_fan(&b.graph, b.center()).unwrap();
        assert_eq!(fan.vectors.len(), 6);
        assert!(fan.vectors.iter().all(|v| approx(norm(v), 1.0, 1e-12)));
        for i in 0..6 {
            for j in i + 1..6 {
                let c = dot(&fan.vectors[i], &fan.vectors[j]);
                assert!([0.5, -0.5, -1.0].iter().any(|t| approx(c, *t, 1e-12)));
            }
        }
    }

    #[test]
    fn bcc_disphenoids() {
        let b = generate(LatticeKind::Bcc, 1).unwrap();
        for x in 0..b.graph.len() {
            let c = &b.dual_cells[x];
            assert_eq!(c.vertices.len(), 4);
            assert!(approx(c.volume, 2.0 / 3.0, 1e-12));
            assert!(c.facets.iter().all(|f| approx(f.area, 2f64.sqrt(), 1e-12)));
        }
        // The example disphenoid (0,0,±1),(1,±1,0) up to translation and symmetry:
        // edge lengths {2, 2, √3 ×4}.
        let c = &b.dual_cells[b.center()];
        let mut lens: Vec<f64> = (0..4)
            .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
            .map(|(i, j)| dist(&c.vertices[i], &c.vertices[j]))
            .collect();
        lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(approx(lens[0], 3f64.sqrt(), 1e-12) && approx(lens[5], 2.0, 1e-12));
        let lp = check_linear_precision(&b.graph);
        for x in 0..b.graph.len() {
            if b.complete[x] {
                assert_eq!(b.graph.degree(x), 4);
                assert!(norm(&lp[&x]) < 1e-9);
            }
        }
    }

    #[test]
    fn fcc_facet_areas() {
        let b = generate(LatticeKind::FccSubdivided { ell1: 1.0 }, 1).unwrap();
        let s3 = 3f64.sqrt();
        assert_eq!(b.orbit_count(), 6);
        for f in &b.facets {
            assert!(approx(f.area, s3 / 2.0, 1e-12) || approx(f.area, 1.0, 1e-12));
        }
        for x in 0..b.graph.len() {
            assert!(approx(b.dual_cells[x].volume, 1.0 / 3.0, 1e-12));
        }
        for e in 0..b.graph.edges().len() {
            let (r1, r2) = b.ratios(e);
            assert!(approx(r1, 1.0, 1e-9) && approx(r2, 1.0, 1e-9));
        }
    }

    #[test]
    fn fcc_target_ignores_the_free_length() {
        let vols: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&ell1| {
                let b = generate(LatticeKind::FccSubdivided { ell1 }, 1).unwrap();
                crate::subdifferential::lattice_target(&b.graph).volume
            })
            .collect();
        assert!(vols.iter().all(|v| approx(*v, vols[0], 1e-9)));
        assert!(vols[0].is_finite() && vols[0] > 0.0);
    }

    #[test]
    fn grid_reproduces_hamamuki_fan() {
        let b = generate(LatticeKind::ProductGrid(vec![1.0, 2.0]), 1).unwrap();
        let fan = neighbor_fan(&b.graph, b.center()).unwrap();
        let mut got: Vec<Vec<f64>> = fan.vectors.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = vec![vec![-1.0, 0.0], vec![0.0, -0.5], vec![0.0, 0.5], vec![1.0, 0.0]];
        for (g, w) in got.iter().zip(&want) {
            assert!(dist(g, w) < 1e-12);
        }
    }

    #[test]
    fn deformation_keeps_reciprocity_and_area() {
        let b = generate(LatticeKind::Honeycomb(Some([[1.3, 0.4], [-0.2, 0.9]])), 1).unwrap();
        let base = generate(LatticeKind::Honeycomb(None), 1).unwrap();
        assert_eq!(b.graph.edges().len(), base.graph.edges().len());
        for (e, f) in b.graph.edges().iter().zip(&b.facets) {
            let d = crate::linalg::sub(b.graph.coords(e.v), b.graph.coords(e.u));
            assert!((dot(&d, &f.normal) - norm(&d)).abs() < 1e-9);
        }
        let v0 = b.dual_cells[0].volume;
        assert!(b.dual_cells.iter().all(|c| approx(c.volume, v0, 1e-9)));
        assert!(generate(LatticeKind::Honeycomb(Some([[1.0, 2.0], [2.0, 4.0]])), 1).is_err());
    }

    #[test]
    fn window_zero_rejected() {
        assert!(generate(LatticeKind::Triangular, 0).is_err());
    }
}
