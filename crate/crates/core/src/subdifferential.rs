//! Subdifferential cells, the target body H_g and the isoperimetric chain
//!
//!   |H_g| ≤ |∂u(Ω)| ≤ Σ|∂^prox u(x)| ≤ Σ C_𝒱x·(Δ_A u)^d ≤ max C_𝒱x·(c_g)^d/(#Ω)^{d−1}.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{intersect_halfspaces, minkowski_constant, Halfspace, Polytope};
use crate::graph::{neighbor_fan, subset_view, GeometricGraph, VertexFn, VertexId, VertexSet};
use crate::linalg::sub;
use crate::pde::laplacian;
use crate::EPS_EQUAL;

fn value(u: &VertexFn, x: VertexId) -> Result<f64> {
    u.get(&x)
        .copied()
        .ok_or_else(|| Error::input(format!("u is undefined at vertex {x}")))
}

fn cell<'a>(
    graph: &GeometricGraph,
    u: &VertexFn,
    x: VertexId,
    others: impl Iterator<Item = &'a VertexId>,
) -> Result<Polytope> {
    let ux = value(u, x)?;
    let mut hs = Vec::new();
    for &z in others {
        if z != x {
            hs.push(Halfspace::new(sub(graph.coords(z), graph.coords(x)), value(u, z)? - ux));
        }
    }
    Ok(intersect_halfspaces(&hs, graph.dim))
}

/// {p : p·(z − x) ≤ u(z) − u(x) for every neighbor z of x}.
pub fn prox_subdifferential(graph: &GeometricGraph, omega: &VertexSet, u: &VertexFn, x: VertexId) -> Result<Polytope> {
    if !omega.contains(&x) {
        return Err(Error::input(format!("vertex {x} is not in Ω")));
    }
    let nbrs: Vec<VertexId> = graph.neighbors(x).iter().map(|(y, _)| *y).collect();
    cell(graph, u, x, nbrs.iter())
}

/// {p : p·(z − x) ≤ u(z) − u(x) for every z ∈ Ω̄}.
pub fn full_subdifferential(graph: &GeometricGraph, omega: &VertexSet, u: &VertexFn, x: VertexId) -> Result<Polytope> {
    if !omega.contains(&x) {
        return Err(Error::input(format!("vertex {x} is not in Ω")));
    }
    let view = subset_view(graph, omega)?;
    cell(graph, u, x, view.closure.iter())
}

/// H_g = ∩ over boundary edges of {p : p·(y − x) ≤ g/A}.
pub fn target_polytope(graph: &GeometricGraph, omega: &VertexSet) -> Result<Polytope> {
    let view = subset_view(graph, omega)?;
    if view.boundary.is_empty() {
        return Err(Error::input("Ω has no boundary"));
    }
    let hs: Vec<Halfspace> = view
        .boundary
        .iter()
        .map(|b| {
            let e = graph.edge(b.edge);
            Halfspace::new(sub(graph.coords(b.y), graph.coords(b.x)), e.g / e.a)
        })
        .collect();
    Ok(intersect_halfspaces(&dedupe(hs), graph.dim))
}

/// Lattice-wide H: ∩ over all edges, both orientations, of {p : A(y − x)·p ≤ g}.
pub fn lattice_target(graph: &GeometricGraph) -> Polytope {
    let mut hs = Vec::new();
    for e in graph.edges() {
        let d = sub(graph.coords(e.v), graph.coords(e.u));
        hs.push(Halfspace::new(d.clone(), e.g / e.a));
        hs.push(Halfspace::new(d.iter().map(|c| -c).collect(), e.g / e.a));
    }
    intersect_halfspaces(&dedupe(hs), graph.dim)
}

/// Keeps the tightest halfspace per normal direction.
fn dedupe(hs: Vec<Halfspace>) -> Vec<Halfspace> {
    let mut best: BTreeMap<Vec<i64>, Halfspace> = BTreeMap::new();
    for h in hs {
        let n = h.normalized();
        let key: Vec<i64> = n.normal.iter().map(|c| (c * 1e9).round() as i64).collect();
        match best.get(&key) {
            Some(old) if old.offset <= n.offset => {}
            _ => {
                best.insert(key, n);
            }
        }
    }
    best.into_values().collect()
}

/// Is every vertex of `inner` inside `outer` within `tol`?
pub fn polytope_contains(outer: &Polytope, inner: &Polytope, tol: f64) -> bool {
    inner.vertices.iter().all(|p| outer.contains(p, tol))
}

/// Minkowski constants of neighbor fans, cached by fan shape.
#[derive(Default)]
pub struct FanConstants {
    cache: Mutex<HashMap<Vec<i64>, f64>>,
}

impl FanConstants {
    pub fn get(&self, graph: &GeometricGraph, x: VertexId) -> Result<f64> {
        let fan = neighbor_fan(graph, x)?;
        let mut key: Vec<Vec<i64>> = fan
            .vectors
            .iter()
            .map(|v| v.iter().map(|c| (c * 1e9).round() as i64).collect())
            .collect();
        key.sort();
        let key = key.concat();
        if let Some(c) = self.cache.lock().unwrap().get(&key) {
            return Ok(*c);
        }
        let c = minkowski_constant(&fan.vectors)?.constant;
        self.cache.lock().unwrap().insert(key, c);
        Ok(c)
    }
}

#[derive(Clone, Debug)]
pub struct ChainOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            samples: 100_000,
            seed: 0,
        }
    }
}

impl ChainOptions {
    /// Default options with the seed taken from ISOFORGE_SEED when set.
    pub fn from_env() -> Self {
        let seed = std::env::var("ISOFORGE_SEED")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(0);
        ChainOptions {
            seed,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexDiagnostics {
    pub vertex: VertexId,
    pub laplacian: f64,
    pub prox_volume: f64,
    pub full_volume: f64,
    pub c_v: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapCheck {
    pub samples: usize,
    /// Samples falling in H_g.
    pub in_body: usize,
    /// Samples of H_g inside two or more full cells.
    pub overlapping: usize,
    /// Samples of H_g inside no full cell.
    pub uncovered: usize,
    pub overlap_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub vol_hg: f64,
    pub hg_bounded: bool,
    pub vol_union: f64,
    pub sum_prox: f64,
    pub sum_bound: f64,
    pub rhs: f64,
    /// Links (a)–(d) hold with equality at relative tolerance 1e-6.
    pub equality: [bool; 4],
    /// Every link holds as an inequality up to rounding slack.
    pub monotone: bool,
    pub c_v_constant: bool,
    pub laplacian_constant: bool,
    /// Every boundary edge saturates u(y) − u(x) = g/A.
    pub saturated_boundary: bool,
    pub vertices: Vec<VertexDiagnostics>,
    pub overlap: OverlapCheck,
}

impl ChainReport {
    pub fn values(&self) -> [f64; 5] {
        [self.vol_hg, self.vol_union, self.sum_prox, self.sum_bound, self.rhs]
    }

    pub fn all_equal(&self) -> bool {
        self.equality.iter().all(|b| *b)
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Evaluates the whole chain for u on Ω̄. u must satisfy Δ_A u ≤ c_g/#Ω on Ω and
/// have at least one saturated in-edge at every outer vertex.
pub fn chain_report(graph: &GeometricGraph, omega: &VertexSet, u: &VertexFn, opts: &ChainOptions) -> Result<ChainReport> {
    chain_report_with(graph, omega, u, opts, &FanConstants::default())
}

pub fn chain_report_with(
    graph: &GeometricGraph,
    omega: &VertexSet,
    u: &VertexFn,
    opts: &ChainOptions,
    constants: &FanConstants,
) -> Result<ChainReport> {
    let view = subset_view(graph, omega)?;
    for &y in &view.closure {
        value(u, y)?;
    }
    let d = graph.dim as i32;
    let n = omega.len() as f64;
    let lap = laplacian(graph, omega, u)?;
    let bound = view.flux / n;
    let scale = 1.0 + bound.abs();
    if let Some((x, l)) = lap.iter().find(|(_, l)| **l > bound + 1e-9 * scale) {
        return Err(Error::input(format!(
            "Δ_A u({x}) = {l} exceeds c_g/#Ω = {bound}"
        )));
    }
    let mut saturated_boundary = true;
    for y in view.outer() {
        let gaps: Vec<f64> = view
            .in_edges(y)
            .iter()
            .map(|b| {
                let e = graph.edge(b.edge);
                u[&b.y] - u[&b.x] - e.g / e.a
            })
            .collect();
        let tol = 1e-9 * (1.0 + u[&y].abs());
        if !gaps.iter().any(|g| g.abs() <= tol) {
            let worst = gaps.iter().fold(f64::INFINITY, |a, g| a.min(g.abs()));
            return Err(Error::input(format!(
                "no saturated boundary edge at outer vertex {y} (closest gap {worst})"
            )));
        }
        saturated_boundary &= gaps.iter().all(|g| g.abs() <= tol);
    }
    let hg = target_polytope(graph, omega)?;
    let xs: Vec<VertexId> = omega.iter().copied().collect();
    let cells: Vec<Result<(Polytope, Polytope, f64)>> = xs
        .par_iter()
        .map(|&x| {
            let prox = cell(
                graph,
                u,
                x,
                graph.neighbors(x).iter().map(|(y, _)| y).collect::<Vec<_>>().into_iter(),
            )?;
            let full = cell(graph, u, x, view.closure.iter())?;
            Ok((prox, full, constants.get(graph, x)?))
        })
        .collect();
    let cells: Vec<(Polytope, Polytope, f64)> = cells.into_iter().collect::<Result<_>>()?;
    let vol = |p: &Polytope| if p.is_empty() { 0.0 } else { p.volume };
    let mut vertices = Vec::new();
    let (mut vol_union, mut sum_prox, mut sum_bound) = (0.0, 0.0, 0.0);
    let mut cmax: f64 = 0.0;
    for (x, (prox, full, c)) in xs.iter().zip(&cells) {
        let l = lap[x];
        vol_union += vol(full);
        sum_prox += vol(prox);
        sum_bound += c * l.max(0.0).powi(d);
        cmax = cmax.max(*c);
        vertices.push(VertexDiagnostics {
            vertex: *x,
            laplacian: l,
            prox_volume: vol(prox),
            full_volume: vol(full),
            c_v: *c,
        });
    }
    let rhs = cmax * view.flux.powi(d) / n.powi(d - 1);
    let vol_hg = hg.volume;
    let values = [vol_hg, vol_union, sum_prox, sum_bound, rhs];
    let equality = [0, 1, 2, 3].map(|i| close(values[i], values[i + 1], EPS_EQUAL));
    let monotone = (0..4).all(|i| {
        (i == 0 && !hg.bounded) || values[i] <= values[i + 1] + 1e-8 * (1.0 + values[i + 1].abs())
    });
    let cs: Vec<f64> = cells.iter().map(|c| c.2).collect();
    let ls: Vec<f64> = lap.values().copied().collect();
    let spread = |v: &[f64]| {
        let (a, b) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        close(a, b, EPS_EQUAL)
    };
    let full_cells: Vec<&Polytope> = cells.iter().map(|c| &c.1).collect();
    let overlap = overlap_check(&hg, &full_cells, opts);
    Ok(ChainReport {
        vol_hg,
        hg_bounded: hg.bounded,
        vol_union,
        sum_prox,
        sum_bound,
        rhs,
        equality,
        monotone,
        c_v_constant: spread(&cs),
        laplacian_constant: spread(&ls),
        saturated_boundary,
        vertices,
        overlap,
    })
}

/// Samples H_g uniformly and counts points lying in the interior of several full
/// cells, which essential disjointness of subdifferentials rules out.
fn overlap_check(hg: &Polytope, cells: &[&Polytope], opts: &ChainOptions) -> OverlapCheck {
    let mut out = OverlapCheck {
        samples: opts.samples,
        in_body: 0,
        overlapping: 0,
        uncovered: 0,
        overlap_fraction: 0.0,
    };
    if !hg.bounded || hg.is_empty() || opts.samples == 0 {
        return out;
    }
    let (lo, hi) = hg.bounding_box();
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = cells.iter().map(|c| c.bounding_box()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<Vec<f64>> = (0..opts.samples)
        .map(|_| lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect())
        .collect();
    let tol = 1e-9 * (1.0 + hi.iter().chain(&lo).fold(0.0f64, |a, b| a.max(b.abs())));
    let counts: Vec<Option<usize>> = points
        .par_iter()
        .map(|p| {
            if !hg.contains(p, 0.0) {
                return None;
            }
            let k = cells
                .iter()
                .zip(&boxes)
                .filter(|(c, (l, h))| {
                    !c.is_empty()
                        && p.iter().zip(l.iter().zip(h)).all(|(x, (a, b))| *x >= a - tol && *x <= b + tol)
                        && c.contains(p, -tol)
                })
                .count();
            let covered = k > 0 || cells.iter().any(|c| !c.is_empty() && c.contains(p, tol));
            Some(if covered { k.max(1) } else { 0 })
        })
        .collect();
    for k in counts.into_iter().flatten() {
        out.in_body += 1;
        match k {
            0 => out.uncovered += 1,
            1 => {}
            _ => out.overlapping += 1,
        }
    }
    if out.in_body > 0 {
        out.overlap_fraction = out.overlapping as f64 / out.in_body as f64;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityCertificate {
    pub convex: bool,
    /// First vertex where ∂^prox u(x) ≠ ∂_Ω u(x).
    pub witness: Option<VertexId>,
    /// Vertices whose cells coincide but have empty interior.
    pub degenerate: Vec<VertexId>,
}

/// True iff ∂^prox u(x) = ∂_Ω u(x) with nonempty interior at every x ∈ Ω.
pub fn convexity_certificate(graph: &GeometricGraph, omega: &VertexSet, u: &VertexFn) -> Result<ConvexityCertificate> {
    let view = subset_view(graph, omega)?;
    let mut degenerate = Vec::new();
    for &x in omega {
        let prox = prox_subdifferential(graph, omega, u, x)?;
        let full = cell(graph, u, x, view.closure.iter())?;
        if !polytope_contains(&full, &prox, crate::EPS_VERT * (1.0 + prox_scale(&prox))) {
            return Ok(ConvexityCertificate {
                convex: false,
                witness: Some(x),
                degenerate,
            });
        }
        if prox.is_empty() || prox.volume <= 0.0 {
            degenerate.push(x);
        }
    }
    Ok(ConvexityCertificate {
        convex: degenerate.is_empty(),
        witness: None,
        degenerate,
    })
}

fn prox_scale(p: &Polytope) -> f64 {
    p.vertices
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |a, b| a.max(b.abs()))
}
