use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::linalg::{affine_rank, centroid, complement_basis, dot, norm, scale, solve};
use crate::{EPS_GEOM, EPS_VERT};

/// `{p : p·normal ≤ offset}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    #[serde(rename = "n")]
    pub normal: Vec<f64>,
    #[serde(rename = "b")]
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, offset }
    }

    pub fn contains(&self, p: &[f64], slack: f64) -> bool {
        dot(&self.normal, p) <= self.offset + slack
    }

    /// Same set with unit normal.
    pub fn normalized(&self) -> Halfspace {
        let n = norm(&self.normal);
        Halfspace {
            normal: scale(&self.normal, 1.0 / n),
            offset: self.offset / n,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Facet {
    #[serde(rename = "n")]
    pub normal: Vec<f64>,
    pub area: f64,
    #[serde(skip)]
    pub vertices: Vec<usize>,
    /// Indices into the input halfspace list lying on this facet's plane.
    #[serde(skip)]
    pub halfspaces: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
    /// `f64::INFINITY` when unbounded.
    #[serde(serialize_with = "ser_volume", deserialize_with = "de_volume")]
    pub volume: f64,
    pub bounded: bool,
}

fn ser_volume<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn de_volume<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let v: Option<f64> = Option::deserialize(d)?;
    Ok(v.unwrap_or(f64::INFINITY))
}

fn eps_feas(offset: f64) -> f64 {
    1e-9 * (1.0 + offset.abs())
}

/// Distinct supporting planes after normalization; parallel copies keep the tightest offset.
struct Plane {
    normal: Vec<f64>,
    offset: f64,
    sources: Vec<usize>,
}

fn distinct_planes(halfspaces: &[Halfspace]) -> Vec<Plane> {
    let mut planes: Vec<Plane> = Vec::new();
    for (i, h) in halfspaces.iter().enumerate() {
        let h = h.normalized();
        match planes
            .iter_mut()
            .find(|p| p.normal.iter().zip(&h.normal).all(|(a, b)| (a - b).abs() < 1e-12))
        {
            Some(p) => {
                if (h.offset - p.offset).abs() <= eps_feas(p.offset) {
                    p.sources.push(i);
                } else if h.offset < p.offset {
                    p.offset = h.offset;
                    p.sources = vec![i];
                }
            }
            None => planes.push(Plane {
                normal: h.normal,
                offset: h.offset,
                sources: vec![i],
            }),
        }
    }
    planes
}

impl Polytope {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Σ area·normal, which vanishes for bounded polytopes.
    pub fn closure_residual(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.dim];
        for f in &self.facets {
            for (ri, ni) in r.iter_mut().zip(&f.normal) {
                *ri += f.area * ni;
            }
        }
        r
    }

    pub fn contains(&self, p: &[f64], slack: f64) -> bool {
        self.halfspaces.iter().all(|h| {
            let n = norm(&h.normal);
            dot(&h.normal, p) <= h.offset + slack * n
        })
    }

    pub fn vertex_centroid(&self) -> Vec<f64> {
        centroid(&self.vertices, self.dim)
    }

    /// Area of the facet supported by input halfspace `index`, zero if it is redundant.
    pub fn facet_area_of(&self, index: usize) -> f64 {
        self.facets
            .iter()
            .find(|f| f.halfspaces.contains(&index))
            .map_or(0.0, |f| f.area)
    }

    /// Axis-aligned bounding box of the vertex set.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in &self.vertices {
            for k in 0..self.dim {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Hull of a finite point set, through its supporting hyperplanes.
    pub fn hull(points: &[Vec<f64>], dim: usize) -> Polytope {
        let mut halfspaces = Vec::new();
        if dim == 1 {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            halfspaces.push(Halfspace::new(vec![1.0], hi));
            halfspaces.push(Halfspace::new(vec![-1.0], -lo));
            return intersect_halfspaces(&halfspaces, 1);
        }
        for combo in (0..points.len()).combinations(dim) {
            let base = &points[combo[0]];
            let dirs: Vec<Vec<f64>> = combo[1..]
                .iter()
                .map(|&i| crate::linalg::sub(&points[i], base))
                .collect();
            let Some(n) = normal_of(&dirs, dim) else {
                continue;
            };
            let b = dot(&n, base);
            let side: Vec<f64> = points.iter().map(|p| dot(&n, p) - b).collect();
            let scale_b = 1e-9 * (1.0 + b.abs());
            if side.iter().all(|s| *s <= scale_b) {
                halfspaces.push(Halfspace::new(n, b));
            } else if side.iter().all(|s| *s >= -scale_b) {
                halfspaces.push(Halfspace::new(scale(&n, -1.0), -b));
            }
        }
        intersect_halfspaces(&halfspaces, dim)
    }
}

/// Unit normal to the span of `dim - 1` direction vectors (generalized cross product).
fn normal_of(dirs: &[Vec<f64>], dim: usize) -> Option<Vec<f64>> {
    let mut n = vec![0.0; dim];
    for k in 0..dim {
        let minor: Vec<Vec<f64>> = dirs
            .iter()
            .map(|d| (0..dim).filter(|&j| j != k).map(|j| d[j]).collect())
            .collect();
        let det = if minor.is_empty() {
            1.0
        } else {
            crate::linalg::determinant(&minor)
        };
        n[k] = if k % 2 == 0 { det } else { -det };
    }
    let len = norm(&n);
    let size: f64 = dirs.iter().map(|d| norm(d)).product();
    if len <= 1e-12 * size.max(1e-300) {
        None
    } else {
        Some(scale(&n, 1.0 / len))
    }
}

/// Intersection of halfspaces with vertex enumeration over every `dim`-subset of planes.
pub fn intersect_halfspaces(halfspaces: &[Halfspace], dim: usize) -> Polytope {
    let planes = distinct_planes(halfspaces);
    let core = build(&planes, dim);
    let facets = core
        .facets
        .into_iter()
        .map(|(pi, area, verts)| Facet {
            normal: planes[pi].normal.clone(),
            area,
            vertices: verts,
            halfspaces: planes[pi].sources.clone(),
        })
        .collect();
    Polytope {
        dim,
        halfspaces: halfspaces.to_vec(),
        vertices: core.vertices,
        facets,
        volume: core.volume,
        bounded: core.bounded,
    }
}

struct Core {
    vertices: Vec<Vec<f64>>,
    /// (plane index, area, incident vertices)
    facets: Vec<(usize, f64, Vec<usize>)>,
    volume: f64,
    bounded: bool,
}

fn build(planes: &[Plane], dim: usize) -> Core {
    if dim == 1 {
        return build_interval(planes);
    }
    let scale_b = planes.iter().map(|p| p.offset.abs()).fold(0.0, f64::max);
    let big = 1e7 * (1.0 + scale_b);
    // A bounding box detects unboundedness: a bounded body never touches it.
    let mut all: Vec<(Vec<f64>, f64)> = planes
        .iter()
        .map(|p| (p.normal.clone(), p.offset))
        .collect();
    for k in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[k] = s;
            all.push((e, big));
        }
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut touches_box = false;
    for combo in (0..all.len()).combinations(dim) {
        let rows: Vec<Vec<f64>> = combo.iter().map(|&i| all[i].0.clone()).collect();
        let rhs: Vec<f64> = combo.iter().map(|&i| all[i].1).collect();
        let Some(x) = solve(&rows, &rhs, 1e-12) else {
            continue;
        };
        if !all
            .iter()
            .all(|(n, b)| dot(n, &x) <= b + eps_feas(*b))
        {
            continue;
        }
        if vertices
            .iter()
            .any(|v| crate::linalg::dist(v, &x) <= EPS_VERT * (1.0 + norm(&x)))
        {
            continue;
        }
        if combo.iter().any(|&i| i >= planes.len()) {
            touches_box = true;
        }
        vertices.push(x);
    }
    if touches_box {
        let vertices = vertices
            .into_iter()
            .filter(|v| v.iter().all(|c| c.abs() < big * (1.0 - 1e-9)))
            .collect();
        return Core {
            vertices,
            facets: vec![],
            volume: f64::INFINITY,
            bounded: false,
        };
    }
    if vertices.is_empty() {
        return Core {
            vertices,
            facets: vec![],
            volume: 0.0,
            bounded: true,
        };
    }
    let tight = |p: &Plane, v: &[f64]| (dot(&p.normal, v) - p.offset).abs() <= eps_feas(p.offset);
    let mut facets = Vec::new();
    for (pi, plane) in planes.iter().enumerate() {
        let on: Vec<usize> = (0..vertices.len())
            .filter(|&i| tight(plane, &vertices[i]))
            .collect();
        if on.len() < dim {
            continue;
        }
        let pts: Vec<Vec<f64>> = on.iter().map(|&i| vertices[i].clone()).collect();
        if affine_rank(&pts, dim, 1e-9) < dim - 1 {
            continue;
        }
        // Planes tight at no facet vertex are redundant on the facet.
        let neighbours: Vec<&Plane> = planes
            .iter()
            .enumerate()
            .filter(|(qi, q)| *qi != pi && pts.iter().any(|v| tight(q, v)))
            .map(|(_, q)| q)
            .collect();
        let area = facet_measure(plane, &neighbours, dim);
        facets.push((pi, area, on));
    }
    let volume = if affine_rank(&vertices, dim, 1e-9) < dim {
        0.0
    } else {
        let c = centroid(&vertices, dim);
        facets
            .iter()
            .map(|(pi, area, _)| area * (planes[*pi].offset - dot(&planes[*pi].normal, &c)))
            .sum::<f64>()
            / dim as f64
    };
    Core {
        vertices,
        facets,
        volume: volume.max(0.0),
        bounded: true,
    }
}

/// (d−1)-volume of `plane ∩ others`, computed in an orthonormal frame of the plane.
fn facet_measure(plane: &Plane, others: &[&Plane], dim: usize) -> f64 {
    let basis = complement_basis(&plane.normal);
    let origin = scale(&plane.normal, plane.offset);
    let mut sub: Vec<Halfspace> = Vec::new();
    for q in others {
        let n: Vec<f64> = basis.iter().map(|b| dot(b, &q.normal)).collect();
        let b = q.offset - dot(&q.normal, &origin);
        if norm(&n) < 1e-12 {
            if b < -eps_feas(q.offset) {
                return 0.0;
            }
            continue;
        }
        sub.push(Halfspace::new(n, b));
    }
    let planes = distinct_planes(&sub);
    let core = build(&planes, dim - 1);
    if core.bounded {
        core.volume
    } else {
        f64::INFINITY
    }
}

fn build_interval(planes: &[Plane]) -> Core {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut lo_p, mut hi_p) = (None, None);
    for (i, p) in planes.iter().enumerate() {
        let a = p.normal[0];
        if a > 0.0 {
            let t = p.offset / a;
            if t < hi {
                hi = t;
                hi_p = Some(i);
            }
        } else {
            let t = p.offset / a;
            if t > lo {
                lo = t;
                lo_p = Some(i);
            }
        }
    }
    if lo > hi + eps_feas(hi) {
        return Core {
            vertices: vec![],
            facets: vec![],
            volume: 0.0,
            bounded: true,
        };
    }
    match (lo_p, hi_p) {
        (Some(l), Some(h)) => {
            let mut vertices = vec![vec![hi]];
            let mut facets = vec![(h, 1.0, vec![0])];
            if hi - lo > EPS_VERT * (1.0 + hi.abs()) {
                vertices.push(vec![lo]);
                facets.push((l, 1.0, vec![1]));
            } else {
                facets.push((l, 1.0, vec![0]));
            }
            Core {
                vertices,
                facets,
                volume: (hi - lo).max(0.0),
                bounded: true,
            }
        }
        _ => {
            let vertices = [lo, hi]
                .iter()
                .filter(|t| t.is_finite())
                .map(|t| vec![*t])
                .collect();
            Core {
                vertices,
                facets: vec![],
                volume: f64::INFINITY,
                bounded: false,
            }
        }
    }
}

/// Volume, first and second moments `(∫1, ∫x, ∫x xᵀ)` of a bounded polytope.
pub struct Moments {
    pub mass: f64,
    pub first: Vec<f64>,
    pub second: Vec<Vec<f64>>,
}

impl Moments {
    fn zero(d: usize) -> Self {
        Moments {
            mass: 0.0,
            first: vec![0.0; d],
            second: vec![vec![0.0; d]; d],
        }
    }

    /// ∫ |x − p|² over the body.
    pub fn squared_distance_integral(&self, p: &[f64]) -> f64 {
        let tr: f64 = (0..p.len()).map(|i| self.second[i][i]).sum();
        tr - 2.0 * dot(p, &self.first) + dot(p, p) * self.mass
    }
}

impl Polytope {
    /// Moments by cone decomposition from the vertex centroid, recursing into facets.
    pub fn moments(&self) -> Moments {
        let planes = distinct_planes(&self.halfspaces);
        moments_of(&planes, &self.vertices, self.dim)
    }
}

fn moments_of(planes: &[Plane], vertices: &[Vec<f64>], d: usize) -> Moments {
    if vertices.is_empty() {
        return Moments::zero(d);
    }
    if d == 1 {
        let lo = vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        return Moments {
            mass: hi - lo,
            first: vec![(hi * hi - lo * lo) / 2.0],
            second: vec![vec![(hi.powi(3) - lo.powi(3)) / 3.0]],
        };
    }
    let c = centroid(vertices, d);
    let mut out = Moments::zero(d);
    let tight = |p: &Plane, v: &[f64]| (dot(&p.normal, v) - p.offset).abs() <= eps_feas(p.offset);
    for (pi, plane) in planes.iter().enumerate() {
        let on: Vec<Vec<f64>> = vertices
            .iter()
            .filter(|v| tight(plane, v))
            .cloned()
            .collect();
        if on.len() < d || affine_rank(&on, d, 1e-9) < d - 1 {
            continue;
        }
        let h = plane.offset - dot(&plane.normal, &c);
        if h.abs() < 1e-15 {
            continue;
        }
        // Facet moments in local coordinates, lifted to the ambient space.
        let basis = complement_basis(&plane.normal);
        let origin = scale(&plane.normal, plane.offset);
        let mut sub = Vec::new();
        for (qi, q) in planes.iter().enumerate() {
            if qi == pi || !on.iter().any(|v| tight(q, v)) {
                continue;
            }
            let n: Vec<f64> = basis.iter().map(|b| dot(b, &q.normal)).collect();
            if norm(&n) < 1e-12 {
                continue;
            }
            sub.push(Halfspace::new(n, q.offset - dot(&q.normal, &origin)));
        }
        let local_vertices: Vec<Vec<f64>> = on
            .iter()
            .map(|v| {
                let w = crate::linalg::sub(v, &origin);
                basis.iter().map(|b| dot(b, &w)).collect()
            })
            .collect();
        let sub_planes = distinct_planes(&sub);
        let m = moments_of(&sub_planes, &local_vertices, d - 1);
        // Ambient moments of the facet: x = origin + B t.
        let bm1: Vec<f64> = (0..d)
            .map(|i| (0..d - 1).map(|k| basis[k][i] * m.first[k]).sum())
            .collect();
        let m0 = m.mass;
        let m1: Vec<f64> = (0..d).map(|i| origin[i] * m0 + bm1[i]).collect();
        let mut m2 = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut b2 = 0.0;
                for k in 0..d - 1 {
                    for l in 0..d - 1 {
                        b2 += basis[k][i] * m.second[k][l] * basis[l][j];
                    }
                }
                m2[i][j] = origin[i] * origin[j] * m0 + origin[i] * bm1[j] + bm1[i] * origin[j] + b2;
            }
        }
        // Cone from c over the facet: x = c + t(y − c), dx = h t^{d−1} dt dy.
        let df = d as f64;
        let d1: Vec<f64> = (0..d).map(|i| m1[i] - c[i] * m0).collect();
        out.mass += h * m0 / df;
        for i in 0..d {
            out.first[i] += h * (c[i] * m0 / df + d1[i] / (df + 1.0));
        }
        for i in 0..d {
            for j in 0..d {
                let d2 = m2[i][j] - c[i] * m1[j] - m1[i] * c[j] + m0 * c[i] * c[j];
                out.second[i][j] += h
                    * (c[i] * c[j] * m0 / df
                        + (c[i] * d1[j] + d1[i] * c[j]) / (df + 1.0)
                        + d2 / (df + 2.0));
            }
        }
    }
    out
}

/// Residual check shared by tests and reports: |Σ area·n| relative to Σ area.
pub fn closure_ok(p: &Polytope) -> bool {
    if !p.bounded || p.is_empty() {
        return true;
    }
    let total: f64 = p.facets.iter().map(|f| f.area).sum();
    norm(&p.closure_residual()) <= EPS_GEOM * total.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(half: f64) -> Vec<Halfspace> {
        let mut hs = Vec::new();
        for k in 0..3 {
            for s in [1.0, -1.0] {
                let mut n = vec![0.0; 3];
                n[k] = s;
                hs.push(Halfspace::new(n, half));
            }
        }
        hs
    }

    #[test]
    fn unit_cube() {
        let p = intersect_halfspaces(&cube(0.5), 3);
        assert!(p.bounded);
        assert_eq!(p.vertices.len(), 8);
        assert_eq!(p.facets.len(), 6);
        assert!((p.volume - 1.0).abs() < 1e-12);
        for f in &p.facets {
            assert!((f.area - 1.0).abs() < 1e-12);
        }
        assert!(closure_ok(&p));
    }

    #[test]
    fn honeycomb_hexagon() {
        let l = 3f64.sqrt() / 3.0;
        let hs: Vec<Halfspace> = (0..6)
            .map(|k| {
                let t = std::f64::consts::PI / 3.0 * k as f64 + std::f64::consts::PI / 6.0;
                Halfspace::new(vec![l * t.cos(), l * t.sin()], 1.0)
            })
            .collect();
        let p = intersect_halfspaces(&hs, 2);
        assert_eq!(p.vertices.len(), 6);
        assert!((p.volume - 6.0 * 3f64.sqrt()).abs() < 1e-10);
        for f in &p.facets {
            assert!((f.area - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn strip_is_unbounded() {
        let hs = vec![
            Halfspace::new(vec![1.0, 0.0], 1.0),
            Halfspace::new(vec![-1.0, 0.0], 1.0),
        ];
        let p = intersect_halfspaces(&hs, 2);
        assert!(!p.bounded);
        assert!(p.volume.is_infinite());
    }

    #[test]
    fn degenerate_point_has_zero_volume() {
        let hs = vec![
            Halfspace::new(vec![1.0, 0.0], 0.0),
            Halfspace::new(vec![-1.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, 1.0], 0.0),
            Halfspace::new(vec![0.0, -1.0], 0.0),
        ];
        let p = intersect_halfspaces(&hs, 2);
        assert!(p.bounded);
        assert_eq!(p.vertices.len(), 1);
        assert_eq!(p.volume, 0.0);
    }

    #[test]
    fn empty_intersection() {
        let hs = vec![
            Halfspace::new(vec![1.0], -1.0),
            Halfspace::new(vec![-1.0], -1.0),
        ];
        let p = intersect_halfspaces(&hs, 1);
        assert!(p.is_empty());
        assert_eq!(p.volume, 0.0);
    }

    #[test]
    fn duplicate_planes_counted_once() {
        let mut hs = cube(0.5);
        hs.push(Halfspace::new(vec![2.0, 0.0, 0.0], 1.0));
        hs.push(Halfspace::new(vec![1.0, 0.0, 0.0], 3.0));
        let p = intersect_halfspaces(&hs, 3);
        assert_eq!(p.facets.len(), 6);
        assert!((p.volume - 1.0).abs() < 1e-12);
        assert_eq!(p.facet_area_of(6), 1.0);
        assert_eq!(p.facet_area_of(7), 0.0);
    }

    #[test]
    fn hull_of_tetrahedron() {
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let p = Polytope::hull(&pts, 3);
        assert_eq!(p.facets.len(), 4);
        assert!((p.volume - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn moments_of_square_and_simplex() {
        // Unit square [0,1]^2: ∫x = (1/2,1/2), ∫x² = 1/3, ∫xy = 1/4.
        let hs = vec![
            Halfspace::new(vec![1.0, 0.0], 1.0),
            Halfspace::new(vec![-1.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, 1.0], 1.0),
            Halfspace::new(vec![0.0, -1.0], 0.0),
        ];
        let m = intersect_halfspaces(&hs, 2).moments();
        assert!((m.mass - 1.0).abs() < 1e-12);
        assert!((m.first[0] - 0.5).abs() < 1e-12);
        assert!((m.second[0][0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.second[0][1] - 0.25).abs() < 1e-12);
        // Standard 3-simplex: ∫x_i² = 1/60, ∫x_i x_j = 1/120.
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let m = Polytope::hull(&pts, 3).moments();
        assert!((m.mass - 1.0 / 6.0).abs() < 1e-12);
        assert!((m.first[1] - 1.0 / 24.0).abs() < 1e-12);
        assert!((m.second[2][2] - 1.0 / 60.0).abs() < 1e-12);
        assert!((m.second[0][2] - 1.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn four_dimensional_cube() {
        let mut hs = Vec::new();
        for k in 0..4 {
            for s in [1.0, -1.0] {
                let mut n = vec![0.0; 4];
                n[k] = s;
                hs.push(Halfspace::new(n, 1.0));
            }
        }
        let p = intersect_halfspaces(&hs, 4);
        assert_eq!(p.vertices.len(), 16);
        assert!((p.volume - 16.0).abs() < 1e-9);
        assert!(p.facets.iter().all(|f| (f.area - 8.0).abs() < 1e-9));
    }
}
