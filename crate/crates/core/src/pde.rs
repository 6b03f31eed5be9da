//! Discrete Laplacian, Neumann problems, the directed dual vector and the
//! optimal constant C(g, Ω).
//!
//! Sign convention: Δ_A u(x) = Σ_y A²(x,y)(u(y) − u(x)), so restrictions of convex
//! functions have nonnegative Laplacian.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{subset_view, BoundaryEdge, GeometricGraph, SubsetView, VertexFn, VertexId, VertexSet};
use crate::linalg::solve;
use crate::simplex::{LinearProgram, LpOutcome, Relation};

pub const DEFAULT_SELECTION_CAP: usize = 100_000;

pub fn laplacian(graph: &GeometricGraph, omega: &VertexSet, u: &VertexFn) -> Result<VertexFn> {
    let mut out = VertexFn::new();
    for &x in omega {
        let ux = value(u, x)?;
        let mut s = 0.0;
        for &(y, e) in graph.neighbors(x) {
            s += graph.edge(e).a.powi(2) * (value(u, y)? - ux);
        }
        out.insert(x, s);
    }
    Ok(out)
}

fn value(u: &VertexFn, x: VertexId) -> Result<f64> {
    u.get(&x)
        .copied()
        .ok_or_else(|| Error::input(format!("u is undefined at vertex {x}")))
}

/// Boundary contribution A·(g/A)·A = A·g of one edge at saturation.
fn edge_flux(graph: &GeometricGraph, b: &BoundaryEdge) -> f64 {
    let e = graph.edge(b.edge);
    e.a * e.g
}

fn jump(graph: &GeometricGraph, b: &BoundaryEdge) -> f64 {
    let e = graph.edge(b.edge);
    e.g / e.a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NeumannMode {
    Naive,
    Hamamuki,
}

/// Right-hand side of the Neumann problem.
#[derive(Clone, Debug, Default)]
pub enum Rhs {
    /// Per component, the boundary flux divided by the component size.
    #[default]
    Balanced,
    Constant(f64),
    Values(VertexFn),
}

#[derive(Clone, Debug, Serialize)]
pub struct NeumannSolution {
    pub u: VertexFn,
    /// One saturated boundary edge per outer vertex, ordered by outer vertex.
    pub selection: Vec<BoundaryEdge>,
    /// Achieved Laplacian on Ω.
    pub f: VertexFn,
    pub mode: NeumannMode,
    /// |Σ_Ω Δu − Σ_∂Ω A²(u(y) − u(x))|.
    pub divergence_residual: f64,
    /// Largest |u(y) − u(x) − g/A| over the selection.
    pub saturation_residual: f64,
    /// Outer vertices with some in-edge strictly below saturation.
    pub slack_outer: Vec<VertexId>,
}

/// Solves Δ_A u = f on Ω with u(y) − u(x) = g/A on every boundary edge of an
/// auxiliary graph where each boundary edge gets its own copy of the outer vertex.
/// The copies are eliminated exactly; folding back by u(y) = min over in-edges of
/// u(x) + g/A yields Δ_A u ≤ f with one saturated edge per outer vertex.
pub fn neumann_solve(graph: &GeometricGraph, omega: &VertexSet, rhs: &Rhs) -> Result<NeumannSolution> {
    let view = subset_view(graph, omega)?;
    let index: BTreeMap<VertexId, usize> = omega.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let n = omega.len();
    let mut flux_at = vec![0.0; n];
    for b in &view.boundary {
        flux_at[index[&b.x]] += edge_flux(graph, b);
    }
    let f: Vec<f64> = match rhs {
        Rhs::Balanced => {
            let mut f = vec![0.0; n];
            for comp in &view.components {
                let total: f64 = comp.iter().map(|x| flux_at[index[x]]).sum();
                for x in comp {
                    f[index[x]] = total / comp.len() as f64;
                }
            }
            f
        }
        Rhs::Constant(c) => vec![*c; n],
        Rhs::Values(m) => omega
            .iter()
            .map(|&x| value(m, x))
            .collect::<Result<Vec<f64>>>()?,
    };
    for (ci, comp) in view.components.iter().enumerate() {
        let lhs: f64 = comp.iter().map(|x| f[index[x]]).sum();
        let flux: f64 = comp.iter().map(|x| flux_at[index[x]]).sum();
        let defect = lhs - flux;
        if defect.abs() > 1e-9 * (1.0 + flux.abs()) {
            return Err(Error::Compatibility { component: ci, defect });
        }
    }
    // Induced Laplacian on Ω: Σ_{z∈Ω} A²(u(z) − u(x)) = f(x) − Σ_∂ A·g.
    let mut m = vec![vec![0.0; n]; n];
    let mut b: Vec<f64> = (0..n).map(|i| f[i] - flux_at[i]).collect();
    for &x in omega {
        let i = index[&x];
        for &(z, e) in graph.neighbors(x) {
            if let Some(&j) = index.get(&z) {
                let a2 = graph.edge(e).a.powi(2);
                m[i][j] += a2;
                m[i][i] -= a2;
            }
        }
    }
    for comp in &view.components {
        let i = index[&comp[0]];
        m[i] = vec![0.0; n];
        m[i][i] = 1.0;
        b[i] = 0.0;
    }
    let sol = solve(&m, &b, 1e-13)
        .ok_or_else(|| Error::invariant("Neumann system singular beyond its kernel"))?;
    let mut u: VertexFn = omega.iter().map(|&x| (x, sol[index[&x]])).collect();
    let mut selection = Vec::new();
    let mut slack_outer = Vec::new();
    let mut naive = true;
    for y in view.outer() {
        let ins = view.in_edges(y);
        naive &= ins.len() == 1;
        let vals: Vec<f64> = ins.iter().map(|be| u[&be.x] + jump(graph, be)).collect();
        let (k, &best) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(ins[a.0].x.cmp(&ins[b.0].x)))
            .unwrap();
        u.insert(y, best);
        selection.push(ins[k].clone());
        let scale = 1.0 + best.abs();
        if vals.iter().any(|v| *v > best + 1e-10 * scale) {
            slack_outer.push(y);
        }
    }
    let achieved = laplacian(graph, omega, &u)?;
    let divergence_residual = divergence_residual(graph, &view, &u, &achieved);
    let saturation_residual = selection
        .iter()
        .map(|be| (u[&be.y] - u[&be.x] - jump(graph, be)).abs())
        .fold(0.0, f64::max);
    Ok(NeumannSolution {
        u,
        selection,
        f: achieved,
        mode: if naive { NeumannMode::Naive } else { NeumannMode::Hamamuki },
        divergence_residual,
        saturation_residual,
        slack_outer,
    })
}

/// |Σ_Ω Δu − Σ_∂Ω A²(u(y) − u(x))|; zero up to rounding for every u.
pub fn divergence_residual(graph: &GeometricGraph, view: &SubsetView, u: &VertexFn, lap: &VertexFn) -> f64 {
    let inside: f64 = lap.values().sum();
    let across: f64 = view
        .boundary
        .iter()
        .map(|b| graph.edge(b.edge).a.powi(2) * (u[&b.y] - u[&b.x]))
        .sum();
    (inside - across).abs()
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectedSystem {
    pub vertices: Vec<VertexId>,
    /// Weighted directed edges (from, to, weight): A² from Ω to every neighbor, 1 from an
    /// outer vertex to its selected interior neighbor.
    pub edges: Vec<(VertexId, VertexId, f64)>,
    pub out_degree: BTreeMap<VertexId, f64>,
    /// Solves d_out(x)·v(x) = Σ_{y→x} w(y,x)·v(y), normalized to min_Ω v = 1 per component.
    pub v: VertexFn,
    pub residual: f64,
    /// max v / min v over Ω̄.
    pub spread: f64,
}

/// Null vector of the adjoint of u ↦ (Δ_A u on Ω, u(y) − u(x) on the selection).
pub fn dual_vector(graph: &GeometricGraph, omega: &VertexSet, selection: &[BoundaryEdge]) -> Result<DirectedSystem> {
    let view = subset_view(graph, omega)?;
    let outer: BTreeSet<VertexId> = view.outer().into_iter().collect();
    let chosen: BTreeSet<VertexId> = selection.iter().map(|b| b.y).collect();
    if chosen != outer || selection.len() != outer.len() {
        return Err(Error::input("selection must pick exactly one in-edge per outer vertex"));
    }
    for b in selection {
        if !omega.contains(&b.x) || graph.edge_between(b.x, b.y).is_none() {
            return Err(Error::input(format!("({}, {}) is not a boundary edge", b.x, b.y)));
        }
    }
    let vertices: Vec<VertexId> = view.closure.iter().copied().collect();
    let index: BTreeMap<VertexId, usize> = vertices.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut edges = Vec::new();
    for &x in omega {
        for &(y, e) in graph.neighbors(x) {
            edges.push((x, y, graph.edge(e).a.powi(2)));
        }
    }
    for b in selection {
        edges.push((b.y, b.x, 1.0));
    }
    let n = vertices.len();
    let mut out_degree: BTreeMap<VertexId, f64> = vertices.iter().map(|&x| (x, 0.0)).collect();
    // Row w: d_out(w)·v(w) − Σ_{z→w} wt·v(z).
    let mut m = vec![vec![0.0; n]; n];
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        if p[i] != i {
            let r = find(p, p[i]);
            p[i] = r;
        }
        p[i]
    }
    for &(from, to, w) in &edges {
        *out_degree.get_mut(&from).unwrap() += w;
        let (i, j) = (index[&from], index[&to]);
        m[i][i] += w;
        m[j][i] -= w;
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        parent[ri] = rj;
    }
    let mut rhs = vec![0.0; n];
    let mut roots = BTreeMap::new();
    for (i, x) in vertices.iter().enumerate() {
        let r = find(&mut parent, i);
        if omega.contains(x) && !roots.contains_key(&r) {
            roots.insert(r, i);
            m[i] = vec![0.0; n];
            m[i][i] = 1.0;
            rhs[i] = 1.0;
        }
    }
    let sol = solve(&m, &rhs, 1e-12).ok_or_else(|| {
        Error::invariant("adjoint directed Laplacian has nullity other than one on a component")
    })?;
    // Residual of the dropped equations too.
    let mut residual: f64 = 0.0;
    let mut check = vec![0.0; n];
    for &(from, to, w) in &edges {
        let (i, j) = (index[&from], index[&to]);
        check[i] += w * sol[i];
        check[j] -= w * sol[i];
    }
    for c in check {
        residual = residual.max(c.abs());
    }
    let mut v = VertexFn::new();
    for &r in roots.keys() {
        let members: Vec<usize> = (0..n).filter(|&i| find(&mut parent, i) == r).collect();
        let min = members
            .iter()
            .filter(|&&i| omega.contains(&vertices[i]))
            .map(|&i| sol[i])
            .fold(f64::INFINITY, f64::min);
        for i in members {
            v.insert(vertices[i], sol[i] / min);
        }
    }
    let scale = v.values().fold(0.0f64, |a, b| a.max(b.abs()));
    let vmin = v.values().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(DirectedSystem {
        vertices,
        edges,
        out_degree,
        spread: scale / vmin,
        residual: residual / scale.max(1.0),
        v,
    })
}

/// C(g, Ω, E') = Σ_y v(y)·g/A / Σ_Ω v.
pub fn selection_constant(graph: &GeometricGraph, omega: &VertexSet, selection: &[BoundaryEdge], v: &VertexFn) -> f64 {
    let num: f64 = selection.iter().map(|b| v[&b.y] * jump(graph, b)).sum();
    let den: f64 = omega.iter().map(|x| v[x]).sum();
    num / den
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionValue {
    /// Selected (x, y) pairs ordered by outer vertex.
    pub selection: Vec<(VertexId, VertexId)>,
    pub constant: f64,
    pub v_min_on_omega: f64,
    pub spread: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimalConstant {
    pub constant: f64,
    pub best_selection: Vec<BoundaryEdge>,
    pub per_selection: Vec<SelectionValue>,
    pub lp_crosscheck: f64,
    pub truncated: bool,
    /// c_g / #Ω.
    pub upper_bound: f64,
    /// min{0, −Σ g v(y) / (#Ω·min_Ω v)} for the best selection.
    pub lower_bound: f64,
}

/// All choices of one in-edge per outer vertex, lexicographic by outer vertex id.
pub fn selections(view: &SubsetView, cap: usize) -> (Vec<Vec<BoundaryEdge>>, bool) {
    let options: Vec<Vec<BoundaryEdge>> = view
        .outer()
        .into_iter()
        .map(|y| view.in_edges(y).into_iter().cloned().collect())
        .collect();
    let total = options
        .iter()
        .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
        .unwrap_or(usize::MAX);
    let count = total.min(cap);
    let out = (0..count)
        .map(|mut k| {
            let mut sel = vec![BoundaryEdge { x: 0, y: 0, edge: 0 }; options.len()];
            for i in (0..options.len()).rev() {
                let m = options[i].len();
                sel[i] = options[i][k % m].clone();
                k /= m;
            }
            sel
        })
        .collect();
    (out, total > cap)
}

pub fn optimal_constant(graph: &GeometricGraph, omega: &VertexSet, selection_cap: usize) -> Result<OptimalConstant> {
    let view = subset_view(graph, omega)?;
    if view.components.len() != 1 {
        return Err(Error::input("optimal constant needs a connected Ω"));
    }
    let (all, truncated) = selections(&view, selection_cap);
    let per: Vec<Result<(SelectionValue, VertexFn)>> = all
        .par_iter()
        .map(|sel| {
            let sys = dual_vector(graph, omega, sel)?;
            let c = selection_constant(graph, omega, sel, &sys.v);
            let vmin = omega.iter().map(|x| sys.v[x]).fold(f64::INFINITY, f64::min);
            Ok((
                SelectionValue {
                    selection: sel.iter().map(|b| (b.x, b.y)).collect(),
                    constant: c,
                    v_min_on_omega: vmin,
                    spread: sys.spread,
                },
                sys.v,
            ))
        })
        .collect();
    let per: Vec<(SelectionValue, VertexFn)> = per.into_iter().collect::<Result<_>>()?;
    for (s, v) in &per {
        if omega.iter().any(|x| v[x] <= 0.0) {
            return Err(Error::invariant(format!(
                "dual vector changes sign on Ω for selection {:?}",
                s.selection
            )));
        }
    }
    let (best, _) = per
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.constant.partial_cmp(&b.1 .0.constant).unwrap().then(a.0.cmp(&b.0)))
        .unwrap();
    let best_sel = all[best].clone();
    let constant = per[best].0.constant;
    let lp = lp_oracle(graph, omega, &best_sel)?;
    if (lp - constant).abs() > 1e-9 * (1.0 + constant.abs()) {
        return Err(Error::invariant(format!(
            "LP value {lp} disagrees with the dual-vector formula {constant}"
        )));
    }
    let upper_bound = view.flux / omega.len() as f64;
    if constant > upper_bound + 1e-9 * (1.0 + upper_bound.abs()) {
        return Err(Error::invariant(format!("C = {constant} exceeds c_g/#Ω = {upper_bound}")));
    }
    let v = &per[best].1;
    let vmin = per[best].0.v_min_on_omega;
    let gv: f64 = best_sel.iter().map(|b| v[&b.y] * jump(graph, b)).sum();
    let lower_bound = f64::min(0.0, -gv / (omega.len() as f64 * vmin));
    Ok(OptimalConstant {
        constant,
        best_selection: best_sel,
        per_selection: per.into_iter().map(|(s, _)| s).collect(),
        lp_crosscheck: lp,
        truncated,
        upper_bound,
        lower_bound,
    })
}

/// Minimizes z subject to u(y) − u(x) = g/A on the selection and z ≥ Δ_A u on Ω, by
/// the dense simplex. The optimizer must have constant Laplacian on Ω.
pub fn lp_oracle(graph: &GeometricGraph, omega: &VertexSet, selection: &[BoundaryEdge]) -> Result<f64> {
    Ok(lp_solve(graph, omega, selection)?.0)
}

/// LP value together with the optimizer ū.
pub fn lp_solve(graph: &GeometricGraph, omega: &VertexSet, selection: &[BoundaryEdge]) -> Result<(f64, VertexFn)> {
    let view = subset_view(graph, omega)?;
    let vertices: Vec<VertexId> = view.closure.iter().copied().collect();
    let index: BTreeMap<VertexId, usize> = vertices.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let n = vertices.len();
    let mut lp = LinearProgram::new(n + 1);
    lp.free = vec![true; n + 1];
    lp.objective[n] = 1.0;
    for b in selection {
        let mut row = vec![0.0; n + 1];
        row[index[&b.y]] += 1.0;
        row[index[&b.x]] -= 1.0;
        lp.add(row, Relation::Eq, jump(graph, b));
    }
    for &x in omega {
        let mut row = vec![0.0; n + 1];
        row[n] = 1.0;
        for &(y, e) in graph.neighbors(x) {
            let a2 = graph.edge(e).a.powi(2);
            row[index[&y]] -= a2;
            row[index[&x]] += a2;
        }
        lp.add(row, Relation::Ge, 0.0);
    }
    let mut pin = vec![0.0; n + 1];
    pin[index[omega.iter().next().unwrap()]] = 1.0;
    lp.add(pin, Relation::Eq, 0.0);
    let (x, z) = match lp.solve() {
        LpOutcome::Optimal { x, value } => (x, value),
        LpOutcome::Unbounded => return Err(Error::invariant("LP for C(g,Ω,E') is unbounded")),
        LpOutcome::Infeasible => return Err(Error::invariant("LP for C(g,Ω,E') is infeasible")),
    };
    let u: VertexFn = vertices.iter().map(|&v| (v, x[index[&v]])).collect();
    let lap = laplacian(graph, omega, &u)?;
    let (lo, hi) = lap
        .values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
    if hi - lo > 1e-8 * (1.0 + z.abs()) {
        return Err(Error::invariant(format!(
            "LP optimizer has nonconstant Laplacian (spread {})",
            hi - lo
        )));
    }
    Ok((z, u))
}
