//! Connected-subset enumeration, isoperimetric scans and the triangular census.
//!
//! Enumeration is Redelmeier's algorithm grown from one root per translation
//! orbit. The root is the lexicographically smallest vertex of every subset it
//! grows, so each translation class is produced exactly once.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{components, neighbor_fan, GeometricGraph, VertexId, VertexSet};
use crate::geometry::minkowski_constant;
use crate::lattices::{LatticeBundle, LatticeKind};
use crate::linalg::{add, sub};
use crate::subdifferential::lattice_target;
use crate::transport::verify_sufficiency;

/// Hard cap on subset size for exhaustive enumeration.
pub const MAX_N_CAP: usize = 16;

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 {
            return x.partial_cmp(y).unwrap();
        }
    }
    Ordering::Equal
}

fn quantize(p: &[f64]) -> Vec<i64> {
    p.iter().map(|x| (x * 1e6).round() as i64).collect()
}

/// Translation-invariant form of a subset: (orbit, offset from the smallest vertex), sorted.
pub fn canonical_form(bundle: &LatticeBundle, set: &[VertexId]) -> Vec<(usize, Vec<i64>)> {
    let g = &bundle.graph;
    let Some(&m) = set.iter().min_by(|a, b| lex(g.coords(**a), g.coords(**b))) else {
        return Vec::new();
    };
    let mut out: Vec<_> = set
        .iter()
        .map(|&x| (bundle.orbit[x], quantize(&sub(g.coords(x), g.coords(m)))))
        .collect();
    out.sort();
    out
}

/// Σ g over the oriented edge boundary.
pub fn subset_boundary(graph: &GeometricGraph, set: &[VertexId]) -> f64 {
    let inside: BTreeSet<VertexId> = set.iter().copied().collect();
    let mut total = 0.0;
    for &x in set {
        for &(y, e) in graph.neighbors(x) {
            if !inside.contains(&y) {
                total += graph.edge(e).g;
            }
        }
    }
    total
}

/// One unit of parallel work: a root and one branch of its first extension.
#[derive(Clone, Debug)]
struct Task {
    root: VertexId,
    /// `None` emits the singleton; `Some(i)` grows the i-th first-level branch.
    branch: Option<usize>,
    first: Vec<VertexId>,
}

type Keep<'a> = Option<&'a (dyn Fn(&[VertexId]) -> bool + Sync)>;

struct Walker<'a> {
    graph: &'a GeometricGraph,
    /// Monotone filter: a rejected subset is neither emitted nor grown.
    keep: Keep<'a>,
    root: VertexId,
    max_n: usize,
    marked: Vec<bool>,
    current: Vec<VertexId>,
}

impl Walker<'_> {
    fn allowed(&self, v: VertexId) -> bool {
        lex(self.graph.coords(v), self.graph.coords(self.root)) == Ordering::Greater
    }

    fn grow(&mut self, mut untried: Vec<VertexId>, visit: &mut dyn FnMut(&[VertexId])) {
        while let Some(v) = untried.pop() {
            self.step(untried.clone(), v, visit);
        }
    }

    fn step(&mut self, untried: Vec<VertexId>, v: VertexId, visit: &mut dyn FnMut(&[VertexId])) {
        self.current.push(v);
        if self.keep.is_some_and(|k| !k(&self.current)) {
            self.current.pop();
            return;
        }
        visit(&self.current);
        if self.current.len() < self.max_n {
            let mut added = Vec::new();
            for &(w, _) in self.graph.neighbors(v) {
                if !self.marked[w] && self.allowed(w) {
                    self.marked[w] = true;
                    added.push(w);
                }
            }
            let mut next = untried;
            next.extend(&added);
            self.grow(next, visit);
            for w in added {
                self.marked[w] = false;
            }
        }
        self.current.pop();
    }
}

fn plan(bundle: &LatticeBundle, max_n: usize) -> Result<Vec<Task>> {
    if max_n == 0 || max_n > MAX_N_CAP {
        return Err(Error::input(format!("max_n must lie in 1..={MAX_N_CAP}, got {max_n}")));
    }
    let g = &bundle.graph;
    let roots = bundle.orbit_roots();
    if roots.len() != bundle.orbit_count() {
        return Err(Error::Window("some orbit has no complete vertex".into()));
    }
    let mut tasks = Vec::new();
    for &root in &roots {
        // Every vertex a subset can reach must carry its full neighborhood.
        let mut depth = BTreeMap::from([(root, 0usize)]);
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            if !bundle.complete[x] {
                return Err(Error::Window(format!(
                    "subsets of size {max_n} reach the window edge (window {})",
                    bundle.window
                )));
            }
            let d = depth[&x];
            if d + 1 >= max_n {
                continue;
            }
            for &(y, _) in g.neighbors(x) {
                if lex(g.coords(y), g.coords(root)) == Ordering::Greater && !depth.contains_key(&y) {
                    depth.insert(y, d + 1);
                    queue.push_back(y);
                }
            }
        }
        let first: Vec<VertexId> = g
            .neighbors(root)
            .iter()
            .map(|(y, _)| *y)
            .filter(|&y| lex(g.coords(y), g.coords(root)) == Ordering::Greater)
            .collect();
        tasks.push(Task { root, branch: None, first: first.clone() });
        if max_n > 1 {
            for i in (0..first.len()).rev() {
                tasks.push(Task { root, branch: Some(i), first: first.clone() });
            }
        }
    }
    Ok(tasks)
}

fn run(bundle: &LatticeBundle, max_n: usize, task: &Task, visit: &mut dyn FnMut(&[VertexId])) {
    run_filtered(bundle, max_n, task, None, visit)
}

fn run_filtered(bundle: &LatticeBundle, max_n: usize, task: &Task, keep: Keep, visit: &mut dyn FnMut(&[VertexId])) {
    let g = &bundle.graph;
    let Some(i) = task.branch else {
        if keep.map_or(true, |k| k(&[task.root])) {
            visit(&[task.root]);
        }
        return;
    };
    let mut w = Walker {
        graph: g,
        keep,
        root: task.root,
        max_n,
        marked: vec![false; g.len()],
        current: vec![task.root],
    };
    w.marked[task.root] = true;
    for &y in &task.first {
        w.marked[y] = true;
    }
    w.step(task.first[..i].to_vec(), task.first[i], visit);
}

/// Every translation class of connected subsets with at most `max_n` vertices,
/// each as the representative whose smallest vertex is an orbit root.
pub fn enumerate_connected_subsets(bundle: &LatticeBundle, max_n: usize) -> Result<Vec<Vec<VertexId>>> {
    let tasks = plan(bundle, max_n)?;
    let parts: Vec<Vec<Vec<VertexId>>> = tasks
        .par_iter()
        .map(|t| {
            let mut out = Vec::new();
            run(bundle, max_n, t, &mut |s| out.push(s.to_vec()));
            out
        })
        .collect();
    Ok(parts.concat())
}

/// Number of translation classes per size, index n − 1.
pub fn count_connected_subsets(bundle: &LatticeBundle, max_n: usize) -> Result<Vec<usize>> {
    let tasks = plan(bundle, max_n)?;
    let parts: Vec<Vec<usize>> = tasks
        .par_iter()
        .map(|t| {
            let mut counts = vec![0; max_n];
            run(bundle, max_n, t, &mut |s| counts[s.len() - 1] += 1);
            counts
        })
        .collect();
    Ok(parts.iter().fold(vec![0; max_n], |mut acc, c| {
        for (a, b) in acc.iter_mut().zip(c) {
            *a += b;
        }
        acc
    }))
}

/// Constants of |H|·n^{d−1} ≤ C·∂^d for a lattice.
#[derive(Clone, Debug, Serialize)]
pub struct IsoConstants {
    pub dim: usize,
    pub h_volume: f64,
    /// max C_𝒱x over the vertex orbits.
    pub constant: f64,
    /// |H|/C as p/q when it is rational with a small denominator.
    pub ratio: Option<(u64, u64)>,
    /// Every edge has integral g, so boundaries are integers.
    pub integral_g: bool,
}

fn rationalize(r: f64) -> Option<(u64, u64)> {
    (1..=1000u64).find_map(|q| {
        let p = (r * q as f64).round();
        ((r * q as f64 - p).abs() <= 1e-9 * (1.0 + r * q as f64) && p > 0.0).then_some((p as u64, q))
    })
}

pub fn iso_constants(bundle: &LatticeBundle) -> Result<IsoConstants> {
    let h = lattice_target(&bundle.graph);
    if !h.bounded {
        return Err(Error::input("lattice-wide H is unbounded"));
    }
    let mut constant: f64 = 0.0;
    for x in bundle.orbit_roots() {
        let fan = neighbor_fan(&bundle.graph, x)?;
        constant = constant.max(minkowski_constant(&fan.vectors)?.constant);
    }
    let integral_g = bundle
        .graph
        .edges()
        .iter()
        .all(|e| (e.g - e.g.round()).abs() <= 1e-9);
    Ok(IsoConstants {
        dim: bundle.dim(),
        h_volume: h.volume,
        constant,
        ratio: rationalize(h.volume / constant),
        integral_g,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityCheck {
    pub n: usize,
    pub boundary: f64,
    pub holds: bool,
    pub equality: bool,
    /// Decided in integer arithmetic.
    pub exact: bool,
}

impl IsoConstants {
    /// Rounds a boundary sum to the nearest integer when every g is integral.
    pub fn snap(&self, boundary: f64) -> f64 {
        if self.integral_g {
            boundary.round()
        } else {
            boundary
        }
    }

    /// Evaluates |H|·n^{d−1} ≤ C·∂^d.
    pub fn check(&self, n: usize, boundary: f64) -> InequalityCheck {
        let d = self.dim as u32;
        if let (Some((p, q)), true) = (self.ratio, self.integral_g) {
            let b = boundary.round() as u128;
            let lhs = p as u128 * (n as u128).pow(d - 1);
            let rhs = q as u128 * b.pow(d);
            return InequalityCheck { n, boundary, holds: lhs <= rhs, equality: lhs == rhs, exact: true };
        }
        let lhs = self.h_volume * (n as f64).powi(d as i32 - 1);
        let rhs = self.constant * boundary.powi(d as i32);
        let tol = crate::EPS_EQUAL * lhs.max(rhs);
        InequalityCheck {
            n,
            boundary,
            holds: lhs <= rhs + tol,
            equality: (lhs - rhs).abs() <= tol,
            exact: false,
        }
    }
}

/// Checks the inequality for one subset inside the window.
pub fn check_subset(bundle: &LatticeBundle, omega: &VertexSet) -> Result<InequalityCheck> {
    bundle.check_inside(omega)?;
    let set: Vec<VertexId> = omega.iter().copied().collect();
    let c = iso_constants(bundle)?;
    Ok(c.check(set.len(), c.snap(subset_boundary(&bundle.graph, &set))))
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub n: usize,
    /// Translation classes of connected subsets of this size.
    pub classes: usize,
    pub min_boundary: f64,
    /// Lexicographically smallest minimizer among the orbit-root representatives.
    pub argmin: Vec<VertexId>,
    pub holds: bool,
    pub equality: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub lattice: String,
    pub constants: IsoConstants,
    /// False when verify_sufficiency fails; the scan is then observational.
    pub sufficient: bool,
    pub exact: bool,
    pub rows: Vec<ScanRow>,
    pub equality_sizes: Vec<usize>,
}

impl ScanResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,min_boundary,equality_flag,example_subset\n");
        for r in &self.rows {
            let ids: Vec<String> = r.argmin.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.n,
                crate::fmt_float(r.min_boundary),
                r.equality,
                ids.join(" ")
            ));
        }
        s
    }
}

fn better(a: &(f64, Vec<VertexId>), b: &(f64, Vec<VertexId>)) -> bool {
    if (a.0 - b.0).abs() > 1e-9 {
        a.0 < b.0
    } else {
        a.1 < b.1
    }
}

/// Minimizes Σg over the boundary among connected subsets of each size. A
/// disconnected subset never does better: gluing its components by lattice
/// translations (see [`connectedness_reduction`]) strictly lowers the boundary.
pub fn scan(bundle: &LatticeBundle, max_n: usize) -> Result<ScanResult> {
    let tasks = plan(bundle, max_n)?;
    let constants = iso_constants(bundle)?;
    let g = &bundle.graph;
    type Best = Vec<Option<(f64, Vec<VertexId>)>>;
    let parts: Vec<(Best, Vec<usize>)> = tasks
        .par_iter()
        .map(|t| {
            let mut best: Best = vec![None; max_n];
            let mut counts = vec![0; max_n];
            run(bundle, max_n, t, &mut |s| {
                let n = s.len();
                counts[n - 1] += 1;
                let mut ids = s.to_vec();
                ids.sort_unstable();
                let cand = (constants.snap(subset_boundary(g, s)), ids);
                let slot = &mut best[n - 1];
                if slot.as_ref().map_or(true, |b| better(&cand, b)) {
                    *slot = Some(cand);
                }
            });
            (best, counts)
        })
        .collect();
    let mut best: Best = vec![None; max_n];
    let mut counts = vec![0; max_n];
    for (b, c) in parts {
        for n in 0..max_n {
            counts[n] += c[n];
            if let Some(cand) = &b[n] {
                if best[n].as_ref().map_or(true, |cur| better(cand, cur)) {
                    best[n] = Some(cand.clone());
                }
            }
        }
    }
    let mut rows = Vec::new();
    for (i, b) in best.into_iter().enumerate() {
        let (boundary, argmin) = b.ok_or_else(|| Error::invariant(format!("no subset of size {}", i + 1)))?;
        let c = constants.check(i + 1, boundary);
        rows.push(ScanRow {
            n: i + 1,
            classes: counts[i],
            min_boundary: boundary,
            argmin,
            holds: c.holds,
            equality: c.equality,
        });
    }
    Ok(ScanResult {
        lattice: bundle.kind.label(),
        exact: constants.ratio.is_some() && constants.integral_g,
        sufficient: verify_sufficiency(bundle).passed(),
        equality_sizes: rows.iter().filter(|r| r.equality).map(|r| r.n).collect(),
        constants,
        rows,
    })
}

/// Glues the components of Ω by lattice translations until it is connected.
/// Each step moves one component so it touches the first, keeping #Ω and
/// strictly lowering Σg over the boundary. Among valid moves the one with the
/// smallest resulting boundary is taken.
pub fn connectedness_reduction(bundle: &LatticeBundle, omega: &VertexSet) -> Result<VertexSet> {
    bundle.check_inside(omega)?;
    let g = &bundle.graph;
    let mut omega = omega.clone();
    loop {
        let comps = components(g, &omega);
        if comps.len() <= 1 {
            return Ok(omega);
        }
        let current: Vec<VertexId> = omega.iter().copied().collect();
        let current_b = subset_boundary(g, &current);
        let base: BTreeSet<VertexId> = comps[0].iter().copied().collect();
        let mut targets = BTreeSet::new();
        for &x in &base {
            for &(y, _) in g.neighbors(x) {
                if !omega.contains(&y) {
                    targets.insert(y);
                }
            }
        }
        let mut best: Option<(f64, Vec<VertexId>)> = None;
        for comp in &comps[1..] {
            let rest: VertexSet = omega.iter().filter(|x| !comp.contains(x)).copied().collect();
            let mut tried = BTreeSet::new();
            for &x in comp {
                for &y in &targets {
                    if bundle.orbit[x] != bundle.orbit[y] {
                        continue;
                    }
                    let t = sub(g.coords(y), g.coords(x));
                    if !tried.insert(quantize(&t)) {
                        continue;
                    }
                    let image: Option<Vec<VertexId>> = comp
                        .iter()
                        .map(|&z| {
                            bundle
                                .vertex_at(&add(g.coords(z), &t))
                                .filter(|&w| bundle.complete[w] && !rest.contains(&w))
                        })
                        .collect();
                    let Some(image) = image else { continue };
                    let mut next: Vec<VertexId> = rest.iter().copied().chain(image).collect();
                    next.sort_unstable();
                    let b = subset_boundary(g, &next);
                    let set: VertexSet = next.iter().copied().collect();
                    if b < current_b - 1e-9 && components(g, &set).len() < comps.len() {
                        let cand = (b, next);
                        if best.as_ref().map_or(true, |cur| better(&cand, cur)) {
                            best = Some(cand);
                        }
                    }
                }
            }
        }
        match best {
            Some((_, next)) => omega = next.into_iter().collect(),
            None => {
                return Err(Error::Window(
                    "no translation glues the components inside the window".into(),
                ))
            }
        }
    }
}

/// Boundary-vertex classification of a union of triangles in the triangular graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TriangularCensus {
    /// a_i for i ∈ {1, 2, 3, 4}: boundary vertices with i + 1 neighbors in Ω;
    /// a_6: interior vertices.
    pub a: BTreeMap<usize, usize>,
    #[serde(rename = "X")]
    pub x: usize,
    /// Oriented boundary edges.
    #[serde(rename = "Y")]
    pub y: usize,
    /// Triangles of Ω (vertices of the dual honeycomb set).
    #[serde(rename = "X_star")]
    pub x_star: usize,
    /// Edges of the boundary cycle (boundary of the dual set).
    #[serde(rename = "Y_star")]
    pub y_star: usize,
    #[serde(rename = "E")]
    pub e_count: usize,
}

impl TriangularCensus {
    /// ((Y − 6)², 4X − Y + 2).
    pub fn ratio_parts(&self) -> (i64, i64) {
        let (x, y) = (self.x as i64, self.y as i64);
        ((y - 6) * (y - 6), 4 * x - y + 2)
    }

    /// (Y − 6)² = 12(4X − Y + 2), decided in integers.
    pub fn is_equality(&self) -> bool {
        let (num, den) = self.ratio_parts();
        num == 12 * den
    }
}

fn hypothesis(msg: impl Into<String>) -> Error {
    Error::input(format!("census hypothesis violated: {}", msg.into()))
}

pub fn triangular_census(bundle: &LatticeBundle, omega: &VertexSet) -> Result<TriangularCensus> {
    if bundle.kind != LatticeKind::Triangular {
        return Err(Error::input(format!(
            "the census needs the triangular lattice, got {}",
            bundle.kind.label()
        )));
    }
    if omega.is_empty() {
        return Err(hypothesis("Ω is empty"));
    }
    bundle.check_inside(omega)?;
    let g = &bundle.graph;
    let inner = |x: VertexId| -> Vec<VertexId> {
        g.neighbors(x)
            .iter()
            .map(|(y, _)| *y)
            .filter(|y| omega.contains(y))
            .collect()
    };

    let mut triangles = BTreeSet::new();
    let mut edge_use: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    for &x in omega {
        for y in inner(x) {
            if x < y {
                edge_use.insert((x, y), 0);
            }
        }
    }
    for &x in omega {
        let nb = inner(x);
        for &y in &nb {
            for &z in &nb {
                if x < y && y < z && g.edge_between(y, z).is_some() {
                    triangles.insert((x, y, z));
                    for e in [(x, y), (x, z), (y, z)] {
                        *edge_use.get_mut(&e).unwrap() += 1;
                    }
                }
            }
        }
    }
    if let Some((e, _)) = edge_use.iter().find(|(_, &c)| c == 0) {
        return Err(hypothesis(format!("edge {}-{} lies in no triangle of Ω", e.0, e.1)));
    }
    if let Some(&x) = omega.iter().find(|&&x| inner(x).is_empty()) {
        return Err(hypothesis(format!("vertex {x} lies in no triangle of Ω")));
    }

    // The region's boundary: triangle edges used exactly once.
    let mut cycle_adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for (&(a, b), &c) in &edge_use {
        if c == 1 {
            cycle_adj.entry(a).or_default().push(b);
            cycle_adj.entry(b).or_default().push(a);
        }
    }
    if let Some((v, n)) = cycle_adj.iter().find(|(_, n)| n.len() != 2) {
        return Err(hypothesis(format!(
            "boundary vertex {v} is visited {} times by the boundary",
            n.len() / 2
        )));
    }
    let y_star = cycle_adj.values().map(Vec::len).sum::<usize>() / 2;
    let start = *cycle_adj.keys().next().ok_or_else(|| hypothesis("Ω has no boundary"))?;
    let (mut prev, mut cur, mut steps) = (start, cycle_adj[&start][0], 1);
    while cur != start {
        let next = cycle_adj[&cur].iter().copied().find(|&w| w != prev).unwrap();
        prev = cur;
        cur = next;
        steps += 1;
    }
    if steps != y_star {
        return Err(hypothesis("the boundary has several cycles (a hole or several pieces)"));
    }

    let mut a: BTreeMap<usize, usize> = [1, 2, 3, 4, 6].iter().map(|&i| (i, 0)).collect();
    let mut y = 0;
    for &x in omega {
        let k = inner(x).len();
        y += g.degree(x) - k;
        let on_cycle = cycle_adj.contains_key(&x);
        if k == g.degree(x) {
            if on_cycle {
                return Err(hypothesis(format!("interior vertex {x} lies on the boundary cycle")));
            }
            *a.get_mut(&6).unwrap() += 1;
        } else {
            if !on_cycle || !(2..=5).contains(&k) {
                return Err(hypothesis(format!("boundary vertex {x} is off the boundary cycle")));
            }
            *a.get_mut(&(k - 1)).unwrap() += 1;
        }
    }
    let census = TriangularCensus {
        a,
        x: omega.len(),
        y,
        x_star: triangles.len(),
        y_star,
        e_count: edge_use.len(),
    };
    check_identities(&census)?;
    Ok(census)
}

fn check_identities(c: &TriangularCensus) -> Result<()> {
    let a = |i: usize| c.a[&i] as i64;
    let (x, y, xs, ys, e) = (c.x as i64, c.y as i64, c.x_star as i64, c.y_star as i64, c.e_count as i64);
    let checks = [
        ("Y = 4a1 + 3a2 + 2a3 + a4", y == 4 * a(1) + 3 * a(2) + 2 * a(3) + a(4)),
        ("2a1 + a2 - a4 = 6", 2 * a(1) + a(2) - a(4) == 6),
        ("2Y* = Y - 6", 2 * ys == y - 6),
        ("2X* = 4X - Y + 2", 2 * xs == 4 * x - y + 2),
        ("2E = 6X - Y", 2 * e == 6 * x - y),
    ];
    match checks.iter().find(|(_, ok)| !ok) {
        Some((name, _)) => Err(Error::invariant(format!("census identity {name} fails: {c:?}"))),
        None => Ok(()),
    }
}

/// (Y − 6)²/(4X − Y + 2), at least 12 on every valid Ω.
pub fn triangular_inequality(bundle: &LatticeBundle, omega: &VertexSet) -> Result<f64> {
    let (num, den) = triangular_census(bundle, omega)?.ratio_parts();
    Ok(num as f64 / den as f64)
}

#[derive(Clone, Debug)]
pub struct TriangleUnions {
    /// One vertex set per translation class.
    pub sets: Vec<VertexSet>,
    /// Some union of exactly `max_triangles` triangles still had at most
    /// `max_x` vertices, so larger unions may have been missed.
    pub saturated: bool,
}

/// Vertex sets of unions of edge-connected triangles with at most `max_x`
/// vertices, grown up to `max_triangles` triangles. Triangles are honeycomb
/// vertices; their corners are looked up in the triangular bundle. Growth stops
/// once a union exceeds `max_x` vertices, since supersets only add vertices.
pub fn triangle_unions(
    honeycomb: &LatticeBundle,
    triangular: &LatticeBundle,
    max_triangles: usize,
    max_x: usize,
) -> Result<TriangleUnions> {
    if honeycomb.kind != LatticeKind::Honeycomb(None) || triangular.kind != LatticeKind::Triangular {
        return Err(Error::input("triangle_unions needs the honeycomb and triangular bundles"));
    }
    let corners = |s: &[VertexId]| -> Option<VertexSet> {
        let mut set = VertexSet::new();
        for &tri in s {
            for p in &honeycomb.reference_cells[tri] {
                set.insert(triangular.vertex_at(p)?);
            }
        }
        Some(set)
    };
    let keep = |s: &[VertexId]| corners(s).map_or(true, |set| set.len() <= max_x);
    let tasks = plan(honeycomb, max_triangles)?;
    let parts: Vec<Result<(Vec<VertexSet>, bool)>> = tasks
        .par_iter()
        .map(|t| {
            let (mut out, mut saturated, mut missing) = (Vec::new(), false, false);
            run_filtered(honeycomb, max_triangles, t, Some(&keep), &mut |s| match corners(s) {
                Some(set) => {
                    saturated |= s.len() == max_triangles;
                    out.push(set);
                }
                None => missing = true,
            });
            if missing {
                return Err(Error::Window("triangle corner outside the triangular window".into()));
            }
            Ok((out, saturated))
        })
        .collect();
    let mut seen = BTreeMap::new();
    let mut saturated = false;
    for p in parts {
        let (sets, sat) = p?;
        saturated |= sat;
        for set in sets {
            let ids: Vec<VertexId> = set.iter().copied().collect();
            seen.entry(canonical_form(triangular, &ids)).or_insert(set);
        }
    }
    Ok(TriangleUnions {
        sets: seen.into_values().collect(),
        saturated,
    })
}
