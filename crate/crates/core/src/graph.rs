//! Weighted geometric graphs, subset combinatorics and structural checks.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, norm, rank, sub};
use crate::simplex::in_convex_hull;
use crate::EPS_GEOM;

pub type VertexId = usize;
pub type VertexSet = BTreeSet<VertexId>;
/// A real function on a vertex set.
pub type VertexFn = BTreeMap<VertexId, f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub a: f64,
    pub g: f64,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeometricGraph {
    pub dim: usize,
    coords: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(VertexId, usize)>>,
}

impl GeometricGraph {
    pub fn new(dim: usize, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.iter().any(|c| c.len() != dim) {
            return Err(Error::input("coordinate dimension mismatch"));
        }
        let n = coords.len();
        Ok(GeometricGraph {
            dim,
            coords,
            edges: vec![],
            adj: vec![vec![]; n],
        })
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, a: f64, g: f64) -> Result<usize> {
        let n = self.coords.len();
        if u >= n || v >= n {
            return Err(Error::input(format!("edge ({u},{v}) names an unknown vertex")));
        }
        if u == v {
            return Err(Error::input(format!("self-loop at {u}")));
        }
        if !(a > 0.0 && a.is_finite()) || !(g >= 0.0 && g.is_finite()) {
            return Err(Error::input(format!("edge ({u},{v}) needs A > 0 and g ≥ 0")));
        }
        if self.edge_between(u, v).is_some() {
            return Err(Error::input(format!("duplicate edge ({u},{v})")));
        }
        let id = self.edges.len();
        self.edges.push(Edge { u, v, a, g });
        self.adj[u].push((v, id));
        self.adj[v].push((u, id));
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self, x: VertexId) -> &[f64] {
        &self.coords[x]
    }

    pub fn all_coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn edge_mut(&mut self, id: usize) -> &mut Edge {
        &mut self.edges[id]
    }

    /// `(neighbor, edge id)` pairs.
    pub fn neighbors(&self, x: VertexId) -> &[(VertexId, usize)] {
        &self.adj[x]
    }

    pub fn degree(&self, x: VertexId) -> usize {
        self.adj[x].len()
    }

    pub fn edge_between(&self, x: VertexId, y: VertexId) -> Option<usize> {
        self.adj
            .get(x)?
            .iter()
            .find(|(z, _)| *z == y)
            .map(|(_, e)| *e)
    }

    /// Replaces the coordinate table, e.g. for an affine deformation.
    pub fn set_coords(&mut self, coords: Vec<Vec<f64>>) -> Result<()> {
        if coords.len() != self.coords.len() || coords.iter().any(|c| c.len() != self.dim) {
            return Err(Error::input("coordinate table shape mismatch"));
        }
        self.coords = coords;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(x) = (0..self.len()).find(|&x| self.degree(x) == 0) {
            return Err(Error::input(format!("vertex {x} is isolated")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            dim: self.dim,
            vertices: self
                .coords
                .iter()
                .enumerate()
                .map(|(i, c)| (i.to_string(), c.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    u: e.u,
                    v: e.v,
                    a: e.a,
                    g: Some(e.g),
                })
                .collect(),
        }
    }

    /// Loads and validates; vertex ids must be `0..n`.
    pub fn from_json(j: &GraphJson) -> Result<Self> {
        let n = j.vertices.len();
        let mut coords = vec![None; n];
        for (k, c) in &j.vertices {
            let id: usize = k
                .parse()
                .map_err(|_| Error::input(format!("vertex id {k:?} is not an integer")))?;
            if id >= n || coords[id].is_some() {
                return Err(Error::input("vertex ids must be 0..n without gaps"));
            }
            coords[id] = Some(c.clone());
        }
        let coords: Vec<Vec<f64>> = coords.into_iter().map(|c| c.unwrap()).collect();
        let mut g = GeometricGraph::new(j.dim, coords)?;
        for e in &j.edges {
            g.add_edge(e.u, e.v, e.a, e.g.unwrap_or(1.0))?;
        }
        g.validate()?;
        Ok(g)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub dim: usize,
    pub vertices: BTreeMap<String, Vec<f64>>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeJson {
    pub u: usize,
    pub v: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(default)]
    pub g: Option<f64>,
}

/// Oriented boundary edge `(x, y)` with `x ∈ Ω`, `y ∉ Ω`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryEdge {
    pub x: VertexId,
    pub y: VertexId,
    pub edge: usize,
}

#[derive(Clone, Debug)]
pub struct SubsetView {
    pub omega: VertexSet,
    pub closure: VertexSet,
    pub boundary: Vec<BoundaryEdge>,
    /// Σ g over the boundary.
    pub weighted_boundary: f64,
    /// Σ A·g over the boundary: the compatibility sum c_g of the Neumann problem.
    pub flux: f64,
    pub components: Vec<Vec<VertexId>>,
}

impl SubsetView {
    /// Ω̄ ∖ Ω in increasing id order.
    pub fn outer(&self) -> Vec<VertexId> {
        self.closure.difference(&self.omega).copied().collect()
    }

    /// Boundary edges ending at the outer vertex `y`.
    pub fn in_edges(&self, y: VertexId) -> Vec<&BoundaryEdge> {
        self.boundary.iter().filter(|b| b.y == y).collect()
    }

    /// Equality case of #(Ω̄∖Ω) ≤ #∂Ω: every outer vertex has a unique in-edge.
    pub fn is_naive(&self) -> bool {
        self.outer().len() == self.boundary.len()
    }

    pub fn component_of(&self, x: VertexId) -> Option<usize> {
        self.components.iter().position(|c| c.contains(&x))
    }
}

pub fn subset_view(graph: &GeometricGraph, omega: &VertexSet) -> Result<SubsetView> {
    if omega.is_empty() {
        return Err(Error::input("Ω is empty"));
    }
    if let Some(x) = omega.iter().find(|&&x| x >= graph.len()) {
        return Err(Error::input(format!("unknown vertex id {x}")));
    }
    let mut closure = omega.clone();
    let mut boundary = Vec::new();
    for &x in omega {
        for &(y, e) in graph.neighbors(x) {
            closure.insert(y);
            if !omega.contains(&y) {
                boundary.push(BoundaryEdge { x, y, edge: e });
            }
        }
    }
    let weighted_boundary = boundary.iter().map(|b| graph.edge(b.edge).g).sum();
    let flux = boundary
        .iter()
        .map(|b| {
            let e = graph.edge(b.edge);
            e.a * e.g
        })
        .sum();
    let components = components(graph, omega);
    Ok(SubsetView {
        omega: omega.clone(),
        closure,
        boundary,
        weighted_boundary,
        flux,
        components,
    })
}

/// Connected components of the induced subgraph, each sorted, ordered by first vertex.
pub fn components(graph: &GeometricGraph, omega: &VertexSet) -> Vec<Vec<VertexId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &s in omega {
        if seen.contains(&s) {
            continue;
        }
        let mut comp = vec![];
        let mut queue = VecDeque::from([s]);
        seen.insert(s);
        while let Some(x) = queue.pop_front() {
            comp.push(x);
            for &(y, _) in graph.neighbors(x) {
                if omega.contains(&y) && seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct NeighborFan {
    pub center: VertexId,
    pub neighbors: Vec<VertexId>,
    /// (y − x)·A(x,y)², one per incident edge.
    pub vectors: Vec<Vec<f64>>,
}

pub fn neighbor_fan(graph: &GeometricGraph, x: VertexId) -> Result<NeighborFan> {
    if x >= graph.len() {
        return Err(Error::input(format!("unknown vertex id {x}")));
    }
    if graph.degree(x) == 0 {
        return Err(Error::input(format!("vertex {x} is isolated")));
    }
    let (neighbors, vectors) = graph
        .neighbors(x)
        .iter()
        .map(|&(y, e)| {
            let a2 = graph.edge(e).a.powi(2);
            let v = sub(graph.coords(y), graph.coords(x))
                .into_iter()
                .map(|c| c * a2)
                .collect();
            (y, v)
        })
        .unzip();
    Ok(NeighborFan {
        center: x,
        neighbors,
        vectors,
    })
}

/// Vertices whose neighbors fail to span R^d or whose neighbor hull contains a foreign vertex.
pub fn check_local_convexity(graph: &GeometricGraph) -> Vec<VertexId> {
    let coords = graph.all_coords();
    (0..graph.len())
        .into_par_iter()
        .filter(|&x| {
            let nbrs: Vec<VertexId> = graph.neighbors(x).iter().map(|(y, _)| *y).collect();
            if nbrs.is_empty() {
                return true;
            }
            let dirs: Vec<Vec<f64>> = nbrs.iter().map(|&y| sub(&coords[y], &coords[x])).collect();
            if rank(&dirs, graph.dim, 1e-9) < graph.dim {
                return true;
            }
            let pts: Vec<Vec<f64>> = nbrs.iter().map(|&y| coords[y].clone()).collect();
            let c = crate::linalg::centroid(&pts, graph.dim);
            let r = pts.iter().map(|p| dist(p, &c)).fold(0.0, f64::max);
            (0..graph.len()).any(|z| {
                z != x
                    && !nbrs.contains(&z)
                    && dist(&coords[z], &c) <= r * (1.0 + 1e-9)
                    && in_convex_hull(&pts, &coords[z], 1e-9 * (1.0 + r))
            })
        })
        .collect()
}

/// Σ A²(y − x) per vertex; zero exactly where Δ_A has linear precision.
pub fn check_linear_precision(graph: &GeometricGraph) -> BTreeMap<VertexId, Vec<f64>> {
    (0..graph.len())
        .map(|x| {
            let mut r = vec![0.0; graph.dim];
            for &(y, e) in graph.neighbors(x) {
                let a2 = graph.edge(e).a.powi(2);
                for (k, rk) in r.iter_mut().enumerate() {
                    *rk += a2 * (graph.coords(y)[k] - graph.coords(x)[k]);
                }
            }
            (x, r)
        })
        .collect()
}

pub fn has_linear_precision(graph: &GeometricGraph, x: VertexId) -> bool {
    let fan = match neighbor_fan(graph, x) {
        Ok(f) => f,
        Err(_) => return false,
    };
    let mut s = vec![0.0; graph.dim];
    let mut total = 0.0;
    for v in &fan.vectors {
        total += norm(v);
        for (si, vi) in s.iter_mut().zip(v) {
            *si += vi;
        }
    }
    norm(&s) <= EPS_GEOM * total.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> GeometricGraph {
        let mut g = GeometricGraph::new(1, vec![vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        g.add_edge(0, 1, 1.0, 1.0).unwrap();
        g.add_edge(1, 2, 1.0, 1.0).unwrap();
        g
    }

    #[test]
    fn rejects_bad_edges() {
        let mut g = path3();
        assert!(g.add_edge(0, 0, 1.0, 1.0).is_err());
        assert!(g.add_edge(0, 1, 1.0, 1.0).is_err());
        assert!(g.add_edge(0, 2, 0.0, 1.0).is_err());
        assert!(g.add_edge(0, 7, 1.0, 1.0).is_err());
    }

    #[test]
    fn path_subset_view() {
        let g = path3();
        let v = subset_view(&g, &VertexSet::from([1])).unwrap();
        assert_eq!(v.boundary.len(), 2);
        assert_eq!(v.closure.len(), 3);
        assert!(v.is_naive());
        let all = subset_view(&g, &VertexSet::from([0, 1, 2])).unwrap();
        assert!(all.boundary.is_empty());
        assert_eq!(all.weighted_boundary, 0.0);
        assert!(subset_view(&g, &VertexSet::from([9])).is_err());
    }

    #[test]
    fn single_edge_is_locally_convex() {
        let mut g = GeometricGraph::new(1, vec![vec![0.0], vec![1.0]]).unwrap();
        g.add_edge(0, 1, 1.0, 1.0).unwrap();
        assert!(check_local_convexity(&g).is_empty());
    }

    #[test]
    fn residual_of_two_vector_fan() {
        let mut g =
            GeometricGraph::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        g.add_edge(0, 1, 1.0, 1.0).unwrap();
        g.add_edge(0, 2, 1.0, 1.0).unwrap();
        let r = check_linear_precision(&g);
        assert_eq!(r[&0], vec![1.0, 1.0]);
        let fan = neighbor_fan(&g, 0).unwrap();
        let s: Vec<f64> = (0..2).map(|k| fan.vectors.iter().map(|v| v[k]).sum()).collect();
        assert_eq!(s, r[&0]);
    }

    #[test]
    fn json_round_trip() {
        let g = path3();
        let j = serde_json::to_string(&g.to_json()).unwrap();
        let back = GeometricGraph::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back.edges(), g.edges());
        let bad = r#"{"dim":1,"vertices":{"0":[0.0],"1":[1.0],"2":[2.0]},"edges":[{"u":0,"v":1,"A":1.0}]}"#;
        assert!(GeometricGraph::from_json(&serde_json::from_str(bad).unwrap()).is_err());
    }
}
