//! Power diagrams clipped to a convex body, equal-volume weight fitting and the
//! sufficiency verifier for equality in the isoperimetric chain.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{intersect_halfspaces, minkowski_constant, Halfspace, Polytope};
use crate::graph::{neighbor_fan, subset_view, GeometricGraph, VertexFn, VertexSet};
use crate::lattices::LatticeBundle;
use crate::linalg::{dist, dot, norm, sub};

pub const FIT_MAX_ITER: usize = 5000;

#[derive(Clone, Debug, Serialize)]
pub struct PowerDiagram {
    pub sites: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub body: Polytope,
    pub cells: Vec<Polytope>,
    pub volumes: Vec<f64>,
    /// Sites whose cell has empty interior.
    pub empty: Vec<usize>,
}

/// Laguerre cells {x ∈ body : |p−x|² − w(p) ≤ |q−x|² − w(q) ∀q}.
pub fn power_diagram(sites: &[Vec<f64>], weights: &[f64], body: &Polytope) -> Result<PowerDiagram> {
    if sites.is_empty() || sites.len() != weights.len() {
        return Err(Error::input("need one weight per site and at least one site"));
    }
    if !body.bounded {
        return Err(Error::input("the body must be bounded"));
    }
    let d = body.dim;
    for (i, p) in sites.iter().enumerate() {
        if p.len() != d {
            return Err(Error::input(format!("site {i} has the wrong dimension")));
        }
        if sites[..i].iter().any(|q| dist(p, q) <= crate::EPS_VERT) {
            return Err(Error::input(format!("site {i} duplicates an earlier site")));
        }
    }
    let cells: Vec<Polytope> = (0..sites.len())
        .into_par_iter()
        .map(|i| {
            let p = &sites[i];
            let mut hs = body.halfspaces.clone();
            for (j, q) in sites.iter().enumerate() {
                if j != i {
                    let n: Vec<f64> = q.iter().zip(p).map(|(a, b)| 2.0 * (a - b)).collect();
                    hs.push(Halfspace::new(n, dot(q, q) - dot(p, p) - weights[j] + weights[i]));
                }
            }
            intersect_halfspaces(&hs, d)
        })
        .collect();
    let volumes: Vec<f64> = cells.iter().map(|c| if c.is_empty() { 0.0 } else { c.volume }).collect();
    let empty = (0..sites.len()).filter(|&i| volumes[i] <= 1e-14 * body.volume).collect();
    Ok(PowerDiagram {
        sites: sites.to_vec(),
        weights: weights.to_vec(),
        body: body.clone(),
        cells,
        volumes,
        empty,
    })
}

impl PowerDiagram {
    /// Kantorovich dual Σ_p [∫_{C(p)} |x−p|² − w(p) dx + w(p)·target].
    pub fn dual_objective(&self, target: f64) -> f64 {
        (0..self.sites.len())
            .map(|i| {
                let c = &self.cells[i];
                let cost = if self.volumes[i] > 0.0 {
                    c.moments().squared_distance_integral(&self.sites[i])
                } else {
                    0.0
                };
                cost - self.weights[i] * self.volumes[i] + self.weights[i] * target
            })
            .sum()
    }

    pub fn volume_residual(&self) -> f64 {
        let target = self.body.volume / self.sites.len() as f64;
        self.volumes.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
    }
}

/// u_Alek(p) = c_p = (|p|² − w(p))/2; the Laguerre cell of p is the subdifferential
/// of u_Alek at p, clipped to the body.
#[derive(Clone, Debug, Serialize)]
pub struct AleksandrovSolution {
    pub values: Vec<f64>,
}

impl AleksandrovSolution {
    pub fn from_diagram(d: &PowerDiagram) -> Self {
        AleksandrovSolution {
            values: d
                .sites
                .iter()
                .zip(&d.weights)
                .map(|(p, w)| (dot(p, p) - w) / 2.0)
                .collect(),
        }
    }

    /// Legendre transform of the Pogorelov potential φ(x) = max_p (x·p − c_p) on the
    /// body, evaluated at z. It agrees with c_p at each site with a nonempty cell.
    pub fn legendre(&self, d: &PowerDiagram, z: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (i, cell) in d.cells.iter().enumerate() {
            for y in &cell.vertices {
                best = best.max(dot(z, y) - dot(y, &d.sites[i]) + self.values[i]);
            }
        }
        best
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportFit {
    pub diagram: PowerDiagram,
    pub solution: AleksandrovSolution,
    pub iterations: usize,
    /// max |vol − |H|/N|.
    pub residual: f64,
}

pub fn fit_equal_volumes(sites: &[Vec<f64>], body: &Polytope) -> Result<TransportFit> {
    fit_equal_volumes_with(sites, body, FIT_MAX_ITER)
}

/// Gradient ascent on the concave Kantorovich dual with backtracking and
/// Barzilai-Borwein steps; w(site₀) is pinned to zero.
pub fn fit_equal_volumes_with(sites: &[Vec<f64>], body: &Polytope, max_iter: usize) -> Result<TransportFit> {
    let n = sites.len();
    if n == 0 {
        return Err(Error::input("no sites"));
    }
    let target = body.volume / n as f64;
    let tol = 1e-9 * body.volume;
    let mut w = vec![0.0; n];
    let mut diag = power_diagram(sites, &w, body)?;
    let mut obj = diag.dual_objective(target);
    let grad_of = |d: &PowerDiagram| -> Vec<f64> { d.volumes.iter().map(|v| target - v).collect() };
    let mut grad = grad_of(&diag);
    let diam = {
        let (lo, hi) = body.bounding_box();
        dist(&lo, &hi)
    };
    // Initial step: a weight change of diam² shifts an interface by about diam/2.
    let gmax = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let mut eta = if gmax > 0.0 { 0.1 * diam * diam / (gmax * n as f64).max(body.volume) } else { 1.0 };
    let mut iter = 0;
    while diag.volume_residual() > tol {
        if iter >= max_iter {
            return Err(Error::IterationLimit {
                iterations: iter,
                residual: diag.volume_residual(),
                best: w,
            });
        }
        iter += 1;
        let mut accepted = None;
        for _ in 0..80 {
            let mut trial: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a + eta * g).collect();
            let shift = trial[0];
            trial.iter_mut().for_each(|t| *t -= shift);
            let td = power_diagram(sites, &trial, body)?;
            // Concavity: f(w+s) − f(w) ≥ ∇f(w+s)·s, so a nonnegative slope at the trial
            // point certifies ascent without comparing nearly equal objective values.
            let slope: f64 = grad_of(&td).iter().zip(&trial).zip(&w).map(|((g, a), b)| g * (a - b)).sum();
            if slope >= 0.0 {
                let to = td.dual_objective(target);
                accepted = Some((trial, td, to));
                break;
            }
            eta *= 0.5;
        }
        let Some((trial, td, to)) = accepted else {
            return Err(Error::IterationLimit {
                iterations: iter,
                residual: diag.volume_residual(),
                best: w,
            });
        };
        if to < obj - 1e-9 * (1.0 + obj.abs()) {
            return Err(Error::invariant("dual objective decreased on an accepted step"));
        }
        let gn = grad_of(&td);
        let s: Vec<f64> = trial.iter().zip(&w).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        eta = if sy < 0.0 { dot(&s, &s) / -sy } else { eta * 2.0 };
        w = trial;
        diag = td;
        obj = to;
        grad = gn;
    }
    let residual = diag.volume_residual();
    Ok(TransportFit {
        solution: AleksandrovSolution::from_diagram(&diag),
        diagram: diag,
        iterations: iter,
        residual,
    })
}

/// Aleksandrov values on Ω̄ for a fit whose sites are the coordinates of Ω in
/// increasing id order; outer vertices get the Legendre extension.
pub fn aleksandrov_on_closure(graph: &GeometricGraph, omega: &VertexSet, fit: &TransportFit) -> Result<VertexFn> {
    if omega.len() != fit.diagram.sites.len() {
        return Err(Error::input("fit sites do not match Ω"));
    }
    let view = subset_view(graph, omega)?;
    let mut u = VertexFn::new();
    for (i, &x) in omega.iter().enumerate() {
        if dist(graph.coords(x), &fit.diagram.sites[i]) > crate::EPS_VERT {
            return Err(Error::input(format!("site {i} is not at vertex {x}")));
        }
        u.insert(x, fit.solution.values[i]);
    }
    for y in view.outer() {
        u.insert(y, fit.solution.legendre(&fit.diagram, graph.coords(y)));
    }
    Ok(u)
}

#[derive(Clone, Debug, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub passed: bool,
    pub min: f64,
    pub max: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SufficiencyReport {
    pub conditions: Vec<Condition>,
    /// Constant value of F/(|x−y|A²).
    pub c1: f64,
    /// Constant value of F·|x−y|/g².
    pub c2: f64,
    pub cell_volume: f64,
    /// C_𝒱x per vertex orbit.
    pub orbit_constants: Vec<f64>,
}

impl SufficiencyReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<String> {
        self.conditions
            .iter()
            .find(|c| !c.passed)
            .map(|c| format!("{} ({})", c.name, c.detail))
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn spread_condition(name: &'static str, values: &[f64], rel: f64) -> Condition {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let passed = values.is_empty() || max - min <= rel * max.abs().max(min.abs());
    Condition {
        name,
        passed,
        min,
        max,
        detail: format!("range [{min}, {max}]"),
    }
}

/// Checks the hypotheses under which the Aleksandrov solution gives equality:
/// reciprocity, equal cell volumes, constant conststuf ratios, constant C_𝒱x and
/// simplicial dual cells (each cell a translate of a face of the lattice-wide H).
pub fn verify_sufficiency(b: &LatticeBundle) -> SufficiencyReport {
    let g = &b.graph;
    let mut recip = Vec::new();
    for (k, e) in g.edges().iter().enumerate() {
        let dir = sub(g.coords(e.v), g.coords(e.u));
        recip.push(1.0 - dot(&dir, &b.facets[k].normal) / norm(&dir));
    }
    let worst = recip.iter().fold(0.0f64, |a, &r| a.max(r.abs()));
    let reciprocity = Condition {
        name: "reciprocity",
        passed: worst <= crate::EPS_GEOM,
        min: 0.0,
        max: worst,
        detail: format!("max 1 - cos(edge, facet normal) = {worst}"),
    };
    let volumes: Vec<f64> = b.dual_cells.iter().map(|c| c.volume).collect();
    let (r1, r2): (Vec<f64>, Vec<f64>) = (0..g.edges().len()).map(|k| b.ratios(k)).unzip();
    let roots = b.orbit_roots();
    let orbit_constants: Vec<f64> = roots
        .iter()
        .map(|&x| {
            neighbor_fan(g, x)
                .and_then(|f| minkowski_constant(&f.vectors))
                .map(|s| s.constant)
                .unwrap_or(f64::NAN)
        })
        .collect();
    let d = b.dim();
    let non_simplices = b.dual_cells.iter().filter(|c| c.vertices.len() != d + 1).count();
    let simplicial = Condition {
        name: "simplicial_cells",
        passed: non_simplices == 0,
        min: 0.0,
        max: non_simplices as f64,
        detail: format!("{non_simplices} dual cells are not simplices"),
    };
    let cv = {
        let mut c = spread_condition("c_v_constant", &orbit_constants, 1e-7);
        c.passed &= orbit_constants.iter().all(|v| v.is_finite());
        c
    };
    SufficiencyReport {
        conditions: vec![
            reciprocity,
            spread_condition("equal_volumes", &volumes, 1e-9),
            spread_condition("conststuf_a", &r1, 1e-9),
            spread_condition("conststuf_g", &r2, 1e-9),
            cv,
            simplicial,
        ],
        c1: r1.first().copied().unwrap_or(f64::NAN),
        c2: r2.first().copied().unwrap_or(f64::NAN),
        cell_volume: volumes.first().copied().unwrap_or(f64::NAN),
        orbit_constants,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Halfspace;

    fn square() -> Polytope {
        let hs = vec![
            Halfspace::new(vec![1.0, 0.0], 1.0),
            Halfspace::new(vec![-1.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, 1.0], 1.0),
            Halfspace::new(vec![0.0, -1.0], 0.0),
        ];
        intersect_halfspaces(&hs, 2)
    }

    #[test]
    fn symmetric_bisector() {
        let sites = vec![vec![0.25, 0.5], vec![0.75, 0.5]];
        let d = power_diagram(&sites, &[0.0, 0.0], &square()).unwrap();
        assert!((d.volumes[0] - 0.5).abs() < 1e-12 && (d.volumes[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weight_shifts_interface() {
        // Interface moves by δ/(2·distance) toward the lighter site.
        let sites = vec![vec![0.25, 0.5], vec![0.75, 0.5]];
        let delta = 0.05;
        let d = power_diagram(&sites, &[0.0, delta], &square()).unwrap();
        assert!((d.volumes[0] - (0.5 - delta / (2.0 * 0.5))).abs() < 1e-12);
    }

    #[test]
    fn weight_shift_invariance() {
        let sites = vec![vec![0.2, 0.3], vec![0.7, 0.6], vec![0.4, 0.9]];
        let a = power_diagram(&sites, &[0.0, 0.1, -0.05], &square()).unwrap();
        let b = power_diagram(&sites, &[1.0, 1.1, 0.95], &square()).unwrap();
        for (x, y) in a.volumes.iter().zip(&b.volumes) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn single_site_takes_the_body() {
        let sites = vec![vec![0.3, 0.4]];
        let f = fit_equal_volumes(&sites, &square()).unwrap();
        assert!((f.diagram.volumes[0] - 1.0).abs() < 1e-12);
        assert!((f.solution.values[0] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_fit_converges() {
        let sites = vec![vec![0.1, 0.1], vec![0.2, 0.15], vec![0.9, 0.8], vec![0.5, 0.5]];
        let f = fit_equal_volumes(&sites, &square()).unwrap();
        assert!(f.residual <= 1e-6);
        for v in &f.diagram.volumes {
            assert!((v - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicate_sites_rejected() {
        let sites = vec![vec![0.1, 0.1], vec![0.1, 0.1]];
        assert!(power_diagram(&sites, &[0.0, 0.0], &square()).is_err());
    }
}
