use serde::Serialize;

use super::polytope::{intersect_halfspaces, Halfspace, Polytope};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, rank, scale};
use crate::EPS_GEOM;

pub const MAX_ITER: usize = 10_000;
const RATIO_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct MinkowskiSolution {
    /// Fan after merging parallel vectors.
    pub fan: Vec<Vec<f64>>,
    pub feasible: bool,
    /// Offsets aligned with `fan`, summing to one.
    pub c: Vec<f64>,
    pub polytope: Option<Polytope>,
    pub constant: f64,
    pub alpha: f64,
    pub iterations: usize,
}

/// Merges vectors with the same direction by summing their lengths.
pub fn merge_fan(fan: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in fan {
        let len = norm(v);
        let u = scale(v, 1.0 / len);
        match out.iter_mut().find(|w| {
            let wl = norm(w);
            w.iter().zip(&u).all(|(a, b)| (a / wl - b).abs() < 1e-12)
        }) {
            Some(w) => {
                let wl = norm(w);
                *w = scale(&u, wl + len);
            }
            None => out.push(v.clone()),
        }
    }
    out
}

/// Feasibility per the existence lemma: the fan spans and sums to zero.
pub fn fan_feasible(fan: &[Vec<f64>], dim: usize) -> bool {
    let total: f64 = fan.iter().map(|v| norm(v)).sum();
    let mut s = vec![0.0; dim];
    for v in fan {
        for (si, vi) in s.iter_mut().zip(v) {
            *si += vi;
        }
    }
    rank(fan, dim, 1e-9) == dim && norm(&s) <= EPS_GEOM * total.max(1.0)
}

fn region(fan: &[Vec<f64>], c: &[f64], dim: usize) -> Polytope {
    let hs: Vec<Halfspace> = fan
        .iter()
        .zip(c)
        .map(|(v, ci)| Halfspace::new(v.clone(), *ci))
        .collect();
    intersect_halfspaces(&hs, dim)
}

/// Ratios area(F_v)/|v|, the partial derivatives of the volume in c_v.
fn ratios(fan: &[Vec<f64>], p: &Polytope) -> Vec<f64> {
    fan.iter()
        .enumerate()
        .map(|(k, v)| p.facet_area_of(k) / norm(v))
        .collect()
}

fn spread(r: &[f64]) -> f64 {
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let dev = r.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if mean > 0.0 {
        dev / mean
    } else {
        f64::INFINITY
    }
}

fn centered(r: &[f64]) -> Vec<f64> {
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    r.iter().map(|x| x - mean).collect()
}

/// Maximizes |∩ {p·v ≤ c_v}| over Σ c_v = 1 by projected gradient ascent.
pub fn minkowski_constant(fan: &[Vec<f64>]) -> Result<MinkowskiSolution> {
    minkowski_constant_with(fan, MAX_ITER)
}

pub fn minkowski_constant_with(fan: &[Vec<f64>], max_iter: usize) -> Result<MinkowskiSolution> {
    if fan.is_empty() {
        return Err(Error::input("empty fan"));
    }
    let dim = fan[0].len();
    if fan.iter().any(|v| v.len() != dim || norm(v) == 0.0) {
        return Err(Error::input("fan vectors must be nonzero and of equal dimension"));
    }
    let fan = merge_fan(fan);
    let n = fan.len();
    if !fan_feasible(&fan, dim) {
        return Ok(MinkowskiSolution {
            fan,
            feasible: false,
            c: vec![1.0 / n as f64; n],
            polytope: None,
            constant: f64::INFINITY,
            alpha: f64::INFINITY,
            iterations: 0,
        });
    }
    let mut c = vec![1.0 / n as f64; n];
    let mut poly = region(&fan, &c, dim);
    let mut r = ratios(&fan, &poly);
    let mut grad = centered(&r);
    // Initial step moves the largest offset by a tenth of its size.
    let gmax = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let mut eta = if gmax > 0.0 { 0.1 / (n as f64 * gmax) } else { 1.0 };
    let mut iter = 0;
    while spread(&r) > RATIO_TOL {
        if iter >= max_iter {
            return Err(Error::IterationLimit {
                iterations: iter,
                residual: spread(&r),
                best: c,
            });
        }
        iter += 1;
        // Backtracking keeps the volume nondecreasing up to rounding.
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = c.iter().zip(&grad).map(|(ci, gi)| ci + eta * gi).collect();
            let tp = region(&fan, &trial, dim);
            if tp.bounded && tp.volume >= poly.volume * (1.0 - 1e-14) {
                accepted = Some((trial, tp));
                break;
            }
            eta *= 0.5;
        }
        let Some((trial, tp)) = accepted else {
            return Err(Error::IterationLimit {
                iterations: iter,
                residual: spread(&r),
                best: c,
            });
        };
        let rn = ratios(&fan, &tp);
        let gn = centered(&rn);
        // Barzilai-Borwein step for the next iteration.
        let s: Vec<f64> = trial.iter().zip(&c).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        eta = if sy < 0.0 { dot(&s, &s) / -sy } else { eta * 2.0 };
        c = trial;
        poly = tp;
        r = rn;
        grad = gn;
    }
    let alpha = r.iter().sum::<f64>() / n as f64;
    Ok(MinkowskiSolution {
        fan,
        feasible: true,
        constant: poly.volume,
        c,
        polytope: Some(poly),
        alpha,
        iterations: iter,
    })
}

/// ∩_v {p·v/|v| ≤ 1}.
pub fn wulff_shape(fan: &[Vec<f64>]) -> Polytope {
    let dim = fan.first().map_or(0, |v| v.len());
    let hs: Vec<Halfspace> = fan
        .iter()
        .map(|v| Halfspace::new(scale(v, 1.0 / norm(v)), 1.0))
        .collect();
    intersect_halfspaces(&hs, dim)
}
