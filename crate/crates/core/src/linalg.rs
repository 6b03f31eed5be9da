//! Small dense vector helpers on `&[f64]` plus thin wrappers over nalgebra.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn centroid(points: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    if !points.is_empty() {
        let n = points.len() as f64;
        c.iter_mut().for_each(|x| *x /= n);
    }
    c
}

/// Solves the square system `rows · x = rhs` by LU with partial pivoting.
/// Returns `None` when the smallest pivot is below `rel_tol` times the largest.
pub fn solve(rows: &[Vec<f64>], rhs: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let n = rhs.len();
    debug_assert_eq!(rows.len(), n);
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = m.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if n > 0 && (hi == 0.0 || lo <= rel_tol * hi) {
        return None;
    }
    lu.solve(&DVector::from_column_slice(rhs))
        .map(|x| x.iter().copied().collect())
}

/// Numerical rank of the row set.
pub fn rank(rows: &[Vec<f64>], dim: usize, tol: f64) -> usize {
    if rows.is_empty() || dim == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol * top.max(1.0)).count()
}

/// Dimension of the affine hull of a point set.
pub fn affine_rank(points: &[Vec<f64>], dim: usize, tol: f64) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let rows: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    rank(&rows, dim, tol)
}

/// Orthonormal basis of the orthogonal complement of a unit vector, as `dim - 1` vectors.
pub fn complement_basis(unit: &[f64]) -> Vec<Vec<f64>> {
    let d = unit.len();
    let mut basis: Vec<Vec<f64>> = vec![unit.to_vec()];
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        for b in &basis {
            let t = dot(&e, b);
            for (ei, bi) in e.iter_mut().zip(b) {
                *ei -= t * bi;
            }
        }
        let n = norm(&e);
        if n > 1e-6 {
            basis.push(scale(&e, 1.0 / n));
        }
    }
    basis.remove(0);
    basis
}

pub fn determinant(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if m.is_empty() {
        return vec![];
    }
    (0..m[0].len())
        .map(|j| m.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn inverse(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j])
        .try_inverse()
        .map(|inv| (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        let n = scale(&[1.0, 2.0, -2.0], 1.0 / 3.0);
        let b = complement_basis(&n);
        assert_eq!(b.len(), 2);
        for v in &b {
            assert!(dot(v, &n).abs() < 1e-12);
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        assert!(dot(&b[0], &b[1]).abs() < 1e-12);
    }

    #[test]
    fn solve_detects_singular() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(&rows, &[1.0, 2.0], 1e-12).is_none());
        let rows = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&rows, &[3.0, 5.0], 1e-12).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn affine_rank_of_collinear_points() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(affine_rank(&pts, 2, 1e-9), 1);
    }
}
