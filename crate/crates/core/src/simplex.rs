//! Dense two-phase simplex with Bland's rule. Small instances only; used as an
//! independent oracle and for point-in-hull tests.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Minimize `objective · x` subject to `constraints`; variables flagged `free` are unrestricted,
/// the others nonnegative.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const TOL: f64 = 1e-11;

impl LinearProgram {
    pub fn new(nvars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; nvars],
            constraints: vec![],
            free: vec![false; nvars],
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpOutcome {
        let n = self.objective.len();
        // Column map: free variables split into x⁺ − x⁻.
        let mut cols: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            cols.push((j, 1.0));
            if self.free[j] {
                cols.push((j, -1.0));
            }
        }
        let nx = cols.len();
        let m = self.constraints.len();
        let nslack = self
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let ntot = nx + nslack + m;
        let art0 = nx + nslack;
        let mut t = vec![vec![0.0; ntot + 1]; m];
        let mut basis = vec![0usize; m];
        let mut s = 0;
        for (i, con) in self.constraints.iter().enumerate() {
            for (k, &(j, sign)) in cols.iter().enumerate() {
                t[i][k] = sign * con.coeffs.get(j).copied().unwrap_or(0.0);
            }
            match con.relation {
                Relation::Le => {
                    t[i][nx + s] = 1.0;
                    s += 1;
                }
                Relation::Ge => {
                    t[i][nx + s] = -1.0;
                    s += 1;
                }
                Relation::Eq => {}
            }
            t[i][ntot] = con.rhs;
            if con.rhs < 0.0 {
                for v in t[i].iter_mut() {
                    *v = -*v;
                }
            }
            t[i][art0 + i] = 1.0;
            basis[i] = art0 + i;
        }
        // Phase 1: minimize the sum of artificials.
        let mut cost1 = vec![0.0; ntot];
        for c in cost1.iter_mut().skip(art0) {
            *c = 1.0;
        }
        if run(&mut t, &mut basis, &cost1, ntot).is_err() {
            return LpOutcome::Unbounded;
        }
        let infeas: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= art0)
            .map(|(i, _)| t[i][ntot])
            .sum();
        let scale = 1.0 + self.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..m {
            if basis[i] >= art0 {
                if let Some(j) = (0..art0).find(|&j| t[i][j].abs() > 1e-9) {
                    pivot(&mut t, &mut basis, i, j);
                }
            }
        }
        // Phase 2 with artificial columns barred.
        let mut cost2 = vec![0.0; ntot];
        for (k, &(j, sign)) in cols.iter().enumerate() {
            cost2[k] = sign * self.objective[j];
        }
        for row in t.iter_mut() {
            for v in row.iter_mut().take(ntot).skip(art0) {
                *v = 0.0;
            }
        }
        if run(&mut t, &mut basis, &cost2, art0).is_err() {
            return LpOutcome::Unbounded;
        }
        let mut z = vec![0.0; ntot];
        for (i, &b) in basis.iter().enumerate() {
            z[b] = t[i][ntot];
        }
        let mut x = vec![0.0; n];
        for (k, &(j, sign)) in cols.iter().enumerate() {
            x[j] += sign * z[k];
        }
        let value = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal { x, value }
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let row = t[r].clone();
    for (i, ti) in t.iter_mut().enumerate() {
        if i != r {
            let f = ti[c];
            if f != 0.0 {
                for (a, b) in ti.iter_mut().zip(&row) {
                    *a -= f * b;
                }
            }
        }
    }
    basis[r] = c;
}

/// Primal simplex over columns `0..allowed`, Bland's rule for entering and leaving.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> Result<(), ()> {
    let m = t.len();
    let rhs = cost.len();
    loop {
        // Reduced costs c_j − c_B B⁻¹ A_j.
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let mut rc = cost[j];
            for i in 0..m {
                rc -= cost[basis[i]] * t[i][j];
            }
            rc < -TOL
        });
        let Some(j) = entering else {
            return Ok(());
        };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][j] > TOL {
                let ratio = t[i][rhs] / t[i][j];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 || (ratio <= br + 1e-12 && basis[i] < basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = best else {
            return Err(());
        };
        pivot(t, basis, r, j);
    }
}

/// Is `p` a convex combination of `points`? Solved as an LP feasibility problem.
pub fn in_convex_hull(points: &[Vec<f64>], p: &[f64], tol: f64) -> bool {
    let k = points.len();
    if k == 0 {
        return false;
    }
    let d = p.len();
    // Minimize total slack of |Σλ y − p| per coordinate.
    let mut lp = LinearProgram::new(k + 2 * d);
    for i in 0..2 * d {
        lp.objective[k + i] = 1.0;
    }
    for a in 0..d {
        let mut row = vec![0.0; k + 2 * d];
        for (i, y) in points.iter().enumerate() {
            row[i] = y[a];
        }
        row[k + 2 * a] = 1.0;
        row[k + 2 * a + 1] = -1.0;
        lp.add(row, Relation::Eq, p[a]);
    }
    let mut row = vec![0.0; k + 2 * d];
    row[..k].iter_mut().for_each(|v| *v = 1.0);
    lp.add(row, Relation::Eq, 1.0);
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => value <= tol,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // max 3x + 5y st x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2,6), 36.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add(vec![3.0, 2.0], Relation::Le, 18.0);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert!((value + 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn free_variables_and_equalities() {
        // min z st z ≥ x, z ≥ −x, x = −3 → 3.
        let mut lp = LinearProgram::new(2);
        lp.free = vec![true, true];
        lp.objective = vec![0.0, 1.0];
        lp.add(vec![-1.0, 1.0], Relation::Ge, 0.0);
        lp.add(vec![1.0, 1.0], Relation::Ge, 0.0);
        lp.add(vec![1.0, 0.0], Relation::Eq, -3.0);
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert!((value - 3.0).abs() < 1e-9),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![1.0], Relation::Le, -1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.add(vec![-1.0], Relation::Le, 0.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn hull_membership() {
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(in_convex_hull(&tri, &[0.2, 0.2], 1e-9));
        assert!(in_convex_hull(&tri, &[0.5, 0.5], 1e-9));
        assert!(!in_convex_hull(&tri, &[0.6, 0.6], 1e-9));
    }
}
