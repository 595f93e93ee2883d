//! Phase-one simplex in exact arithmetic with Bland's rule.
//!
//! Minimizes the sum of artificials for `A x = b`, `x ≥ 0`, `b ≥ 0`, and
//! returns the primal point together with the optimal duals `y`, which
//! satisfy `Aᵀ y ≤ 0` and `y ≤ 1` with `bᵀ y` equal to the optimum.

use super::rational::{Exact, Q};

/// Sparse column-major constraint matrix: `columns[j]` lists `(row, value)`.
pub struct EqualitySystem {
    pub n_rows: usize,
    pub columns: Vec<Vec<(usize, Q)>>,
    pub rhs: Vec<Q>,
}

pub struct PhaseOne {
    pub optimum: Q,
    pub x: Vec<Q>,
    pub y: Vec<Q>,
    pub pivots: usize,
}

/// Arithmetic overflowed the scalar type.
#[derive(Debug)]
pub struct Overflow;

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    /// Reduced costs, one per column.
    cost: Vec<T>,
    value: T,
    basis: Vec<usize>,
}

fn sub_mul<T: Exact>(a: &T, f: &T, b: &T) -> Result<T, Overflow> {
    a.sub(&f.mul(b).ok_or(Overflow)?).ok_or(Overflow)
}

impl<T: Exact> Tableau<T> {
    fn build(sys: &EqualitySystem) -> Result<Self, Overflow> {
        let m = sys.n_rows;
        let n = sys.columns.len();
        let mut rows = vec![vec![T::zero(); n + m]; m];
        for (j, col) in sys.columns.iter().enumerate() {
            for (i, v) in col {
                rows[*i][j] = T::from_q(v).ok_or(Overflow)?;
            }
        }
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in rows.iter_mut().enumerate() {
            row[n + i] = T::one();
            rhs.push(T::from_q(&sys.rhs[i]).ok_or(Overflow)?);
        }
        let mut cost = vec![T::zero(); n + m];
        let mut value = T::zero();
        for (i, row) in rows.iter().enumerate() {
            for j in 0..n {
                if !row[j].is_zero() {
                    cost[j] = cost[j].sub(&row[j]).ok_or(Overflow)?;
                }
            }
            value = value.add(&rhs[i]).ok_or(Overflow)?;
        }
        Ok(Self { rows, rhs, cost, value, basis: (n..n + m).collect() })
    }

    fn pivot(&mut self, p: usize, q: usize) -> Result<(), Overflow> {
        let piv = self.rows[p][q].clone();
        let nz: Vec<usize> = (0..self.rows[p].len()).filter(|&k| !self.rows[p][k].is_zero()).collect();
        for &k in &nz {
            self.rows[p][k] = self.rows[p][k].div(&piv).ok_or(Overflow)?;
        }
        self.rhs[p] = self.rhs[p].div(&piv).ok_or(Overflow)?;
        let (prow, prhs) = (self.rows[p].clone(), self.rhs[p].clone());
        for r in 0..self.rows.len() {
            if r == p || self.rows[r][q].is_zero() {
                continue;
            }
            let f = self.rows[r][q].clone();
            for &k in &nz {
                self.rows[r][k] = sub_mul(&self.rows[r][k], &f, &prow[k])?;
            }
            self.rhs[r] = sub_mul(&self.rhs[r], &f, &prhs)?;
        }
        let f = self.cost[q].clone();
        if !f.is_zero() {
            for &k in &nz {
                self.cost[k] = sub_mul(&self.cost[k], &f, &prow[k])?;
            }
            self.value = self.value.add(&f.mul(&prhs).ok_or(Overflow)?).ok_or(Overflow)?;
        }
        self.basis[p] = q;
        Ok(())
    }

    fn run(&mut self) -> Result<usize, Overflow> {
        let mut pivots = 0;
        // Bland: lowest-index improving column, lowest basis index on ratio ties.
        while let Some(q) = self.cost.iter().position(|c| c.is_negative()) {
            let mut best: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                if !self.rows[r][q].is_positive() {
                    continue;
                }
                let ratio = self.rhs[r].div(&self.rows[r][q]).ok_or(Overflow)?;
                let better = match &best {
                    None => true,
                    Some((b, br)) => ratio < *br || (ratio == *br && self.basis[r] < self.basis[*b]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            // Phase one is bounded below by zero, so some row always qualifies.
            let (p, _) = best.expect("phase-one objective is bounded");
            self.pivot(p, q)?;
            pivots += 1;
        }
        Ok(pivots)
    }
}

fn solve_with<T: Exact>(sys: &EqualitySystem) -> Result<PhaseOne, Overflow> {
    let mut t = Tableau::<T>::build(sys)?;
    let pivots = t.run()?;
    let n = sys.columns.len();
    let mut x = vec![Q::from_integer(0.into()); n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[r].to_q();
        }
    }
    // Artificial i has cost 1, so its reduced cost is 1 − y_i.
    let y = (0..sys.n_rows).map(|i| T::one().sub(&t.cost[n + i]).map(|v| v.to_q()).ok_or(Overflow)).collect::<Result<_, _>>()?;
    Ok(PhaseOne { optimum: t.value.to_q(), x, y, pivots })
}

/// Solves in `Ratio<i128>` and repeats in big rationals on overflow.
pub fn phase_one(sys: &EqualitySystem) -> PhaseOne {
    match solve_with::<num::rational::Ratio<i128>>(sys) {
        Ok(r) => r,
        Err(Overflow) => solve_with::<Q>(sys).expect("big rationals do not overflow"),
    }
}

/// Forces the big-rational path.
pub fn phase_one_big(sys: &EqualitySystem) -> PhaseOne {
    solve_with::<Q>(sys).expect("big rationals do not overflow")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn q(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn feasible_system_reaches_zero() {
        // x0 + x1 = 1, x1 − x2 = 1/2.
        let sys = EqualitySystem {
            n_rows: 2,
            columns: vec![vec![(0, q(1, 1))], vec![(0, q(1, 1)), (1, q(1, 1))], vec![(1, q(-1, 1))]],
            rhs: vec![q(1, 1), q(1, 2)],
        };
        let r = phase_one(&sys);
        assert_eq!(r.optimum, q(0, 1));
        assert_eq!(&r.x[0] + &r.x[1], q(1, 1));
        assert_eq!(&r.x[1] - &r.x[2], q(1, 2));
    }

    #[test]
    fn infeasible_system_has_dual_witness() {
        // x0 = 1 and x0 = 2 cannot both hold.
        let sys = EqualitySystem { n_rows: 2, columns: vec![vec![(0, q(1, 1)), (1, q(1, 1))]], rhs: vec![q(1, 1), q(2, 1)] };
        let r = phase_one(&sys);
        assert!(r.optimum > q(0, 1));
        let by: Q = r.y.iter().zip(&sys.rhs).map(|(a, b)| a * b).sum();
        assert_eq!(by, r.optimum);
        let aty: Q = sys.columns[0].iter().map(|(i, v)| v * &r.y[*i]).sum();
        assert!(aty <= q(0, 1));
        assert_eq!(phase_one_big(&sys).optimum, r.optimum);
    }
}
