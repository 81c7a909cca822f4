//! Exact linear programming over the rationals.
//!
//! Dense two-phase simplex with Bland's rule on problems in standard form
//! `max cᵀx  s.t.  Ax = b, x ≥ 0`. Sizes here are tiny (a handful of rows),
//! so exact arithmetic is cheap.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite float.
pub fn q_from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

pub fn q_to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<Q>,
        value: Q,
        /// Multipliers `y` with `yᵀA_j ≥ c_j` for every column and `yᵀb = value`.
        dual: Vec<Q>,
    },
    /// `dual` satisfies `yᵀA_j ≥ 0` for every column and `yᵀb < 0`.
    Infeasible { dual: Vec<Q> },
    Unbounded,
}

struct Tableau {
    /// `m` rows of `cols + 1` entries, last is the right-hand side.
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = &*v - &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[Q], j: usize) -> Q {
        let mut z = cost[j].clone();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if !row[j].is_zero() && !cost[b].is_zero() {
                z -= &cost[b] * &row[j];
            }
        }
        z
    }

    /// Runs simplex iterations on columns `allowed`; `false` if unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: usize) -> bool {
        loop {
            let entering = (0..allowed).find(|&j| {
                !self.basis.contains(&j) && self.reduced_cost(cost, j).is_positive()
            });
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[self.cols] / &row[c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    /// `c_Bᵀ B⁻¹`, read off the artificial block (columns `n..n+m`).
    fn multipliers(&self, cost: &[Q], n: usize, signs: &[Q]) -> Vec<Q> {
        let m = self.rows.len();
        (0..m)
            .map(|i| {
                let mut y = Q::zero();
                for (row, &b) in self.rows.iter().zip(&self.basis) {
                    if !cost[b].is_zero() && !row[n + i].is_zero() {
                        y += &cost[b] * &row[n + i];
                    }
                }
                y * &signs[i]
            })
            .collect()
    }
}

/// Solves `max cᵀx, Ax = b, x ≥ 0` exactly.
pub fn solve(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    let signs: Vec<Q> = b
        .iter()
        .map(|v| if v.is_negative() { -Q::one() } else { Q::one() })
        .collect();
    let cols = n + m;
    let rows: Vec<Vec<Q>> = (0..m)
        .map(|i| {
            let mut row = Vec::with_capacity(cols + 1);
            row.extend(a[i].iter().map(|v| v * &signs[i]));
            for k in 0..m {
                row.push(if k == i { Q::one() } else { Q::zero() });
            }
            row.push(&b[i] * &signs[i]);
            row
        })
        .collect();
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        cols,
    };

    let mut phase1 = vec![Q::zero(); cols];
    for v in phase1.iter_mut().skip(n) {
        *v = -Q::one();
    }
    t.optimize(&phase1, cols);
    let infeasibility: Q = t
        .rows
        .iter()
        .zip(&t.basis)
        .filter(|(_, &bv)| bv >= n)
        .map(|(row, _)| row[cols].clone())
        .sum();
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible {
            dual: t.multipliers(&phase1, n, &signs),
        };
    }
    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(c) = (0..n).find(|&j| !t.rows[r][j].is_zero()) {
                t.pivot(r, c);
            }
        }
    }

    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat(Q::zero()).take(m));
    // redundant rows keep a zero-level artificial, which never re-enters
    if !t.optimize(&cost, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Q::zero(); n];
    for (row, &bv) in t.rows.iter().zip(&t.basis) {
        if bv < n {
            x[bv] = row[cols].clone();
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    let dual = t.multipliers(&cost, n, &signs);
    LpOutcome::Optimal { x, value, dual }
}

/// Result of probing how deep a point sits inside a convex hull.
#[derive(Clone, Debug, PartialEq)]
pub enum Depth {
    /// `v ± t·e_j` lies in the hull for every axis `j`, with `t = margin`.
    Interior { margin: Q },
    /// `v` is in the hull but on its boundary; `normal·x ≥ normal·v` on the hull.
    Boundary { normal: Vec<Q> },
    /// `v` is outside; `normal·x > normal·v` on the hull.
    Outside { normal: Vec<Q> },
}

/// Largest `t` with `v + t·dir` in the hull of `points`, or a separating
/// normal when `v` is not in the hull.
pub fn ray_depth(points: &[Vec<Q>], v: &[Q], dir: &[Q]) -> Result<(Q, Vec<Q>, Vec<Q>), Vec<Q>> {
    let d = v.len();
    let k = points.len();
    // unknowns λ_1..λ_k, t ; rows: Σλ x - t dir = v ; Σλ = 1
    let mut a = vec![vec![Q::zero(); k + 1]; d + 1];
    for (i, p) in points.iter().enumerate() {
        for j in 0..d {
            a[j][i] = p[j].clone();
        }
        a[d][i] = Q::one();
    }
    for j in 0..d {
        a[j][k] = -dir[j].clone();
    }
    let mut b: Vec<Q> = v.to_vec();
    b.push(Q::one());
    let mut c = vec![Q::zero(); k + 1];
    c[k] = Q::one();
    match solve(&a, &b, &c) {
        LpOutcome::Optimal { x, value, dual } => {
            let lambda = x[..k].to_vec();
            Ok((value, lambda, dual[..d].to_vec()))
        }
        LpOutcome::Infeasible { dual } => Err(dual[..d].to_vec()),
        // bounded hull: only reachable with dir = 0
        LpOutcome::Unbounded => Ok((Q::zero(), Vec::new(), vec![Q::zero(); d])),
    }
}

/// Exact depth of `v` in `conv(points)` along the coordinate axes.
pub fn hull_depth(points: &[Vec<Q>], v: &[Q]) -> Depth {
    let d = v.len();
    let mut margin: Option<Q> = None;
    for j in 0..d {
        for s in [1, -1] {
            let mut dir = vec![Q::zero(); d];
            dir[j] = q(s);
            match ray_depth(points, v, &dir) {
                Err(normal) => return Depth::Outside { normal },
                Ok((t, _, normal)) => {
                    if !t.is_positive() {
                        return Depth::Boundary { normal };
                    }
                    margin = Some(match margin {
                        None => t,
                        Some(m) => m.min(t),
                    });
                }
            }
        }
    }
    Depth::Interior {
        margin: margin.unwrap_or_else(Q::zero),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> Vec<Q> {
        xs.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn small_lp() {
        // max x + y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = vec![v(&[1, 2, 1, 0]), v(&[3, 1, 0, 1])];
        let b = v(&[4, 6]);
        let c = v(&[1, 1, 0, 0]);
        match solve(&a, &b, &c) {
            LpOutcome::Optimal { x, value, dual } => {
                assert_eq!(value, Q::new(14.into(), 5.into()));
                assert_eq!(x[0], Q::new(8.into(), 5.into()));
                assert_eq!(x[1], Q::new(6.into(), 5.into()));
                let yb: Q = dual.iter().zip(&b).map(|(y, b)| y * b).sum();
                assert_eq!(yb, value);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_has_farkas_certificate() {
        // x1 + x2 = -1 with x ≥ 0
        let a = vec![v(&[1, 1])];
        let b = v(&[-1]);
        match solve(&a, &b, &v(&[0, 0])) {
            LpOutcome::Infeasible { dual } => {
                assert!(dual[0].is_positive());
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let a = vec![v(&[1, -1])];
        assert_eq!(solve(&a, &v(&[0]), &v(&[1, 0])), LpOutcome::Unbounded);
    }

    #[test]
    fn square_depth() {
        let pts = vec![v(&[1, 1]), v(&[-1, 1]), v(&[1, -1]), v(&[-1, -1])];
        assert_eq!(hull_depth(&pts, &v(&[0, 0])), Depth::Interior { margin: q(1) });
        assert!(matches!(hull_depth(&pts, &v(&[1, 0])), Depth::Boundary { .. }));
        match hull_depth(&pts, &v(&[3, 0])) {
            Depth::Outside { normal } => {
                let nv: Q = normal.iter().zip(&v(&[3, 0])).map(|(a, b)| a * b).sum();
                for p in &pts {
                    let np: Q = normal.iter().zip(p).map(|(a, b)| a * b).sum();
                    assert!(np > nv);
                }
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn degenerate_columns_and_redundant_rows() {
        // duplicate constraint row
        let a = vec![v(&[1, 1, 1]), v(&[2, 2, 2])];
        match solve(&a, &v(&[3, 6]), &v(&[1, 2, 0])) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, q(6)),
            o => panic!("{o:?}"),
        }
    }
}
