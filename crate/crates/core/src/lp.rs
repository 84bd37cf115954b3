//! Dense two-phase primal simplex over any [`Scalar`].
//!
//! Solves `min c.x  s.t.  A x = b, x >= 0` and reports primal values, dual
//! values (`A^T y <= c` at optimality) or a Farkas ray when infeasible.

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    /// Row-major constraint matrix, `rows x cols`.
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome<T> {
    Optimal {
        x: Vec<T>,
        objective: T,
        /// Dual vector with `A^T y <= c` and `b.y = objective`.
        duals: Vec<T>,
    },
    /// `farkas` satisfies `A^T y <= 0` and `b.y > 0`.
    Infeasible {
        farkas: Vec<T>,
    },
    Unbounded,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(cols: usize) -> Self {
        LinearProgram { a: Vec::new(), b: Vec::new(), c: vec![T::zero(); cols] }
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    pub fn add_row(&mut self, row: Vec<T>, rhs: T) {
        debug_assert_eq!(row.len(), self.cols());
        self.a.push(row);
        self.b.push(rhs);
    }

    pub fn solve(&self) -> LpOutcome<T> {
        Tableau::build(self).run(&self.c).0
    }

    /// Starts from the basis `hint` (original column indices) when it is
    /// primal feasible, otherwise from scratch. The result does not depend on
    /// the hint beyond the choice among alternative optima.
    pub fn solve_from(&self, hint: &[usize]) -> LpOutcome<T> {
        let mut tab = Tableau::build(self);
        if tab.warm_start(hint) {
            tab.run(&self.c).0
        } else {
            self.solve()
        }
    }

    /// Solves and also returns the final basis (original columns only).
    pub fn solve_with_basis(&self) -> (LpOutcome<T>, Vec<usize>) {
        Tableau::build(self).run(&self.c)
    }

    pub fn to_f64(&self) -> LinearProgram<f64> {
        let conv = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
        LinearProgram { a: self.a.iter().map(|r| conv(r)).collect(), b: conv(&self.b), c: conv(&self.c) }
    }

    /// Exact solve guided by a floating-point pass that proposes the basis.
    pub fn solve_guided(&self) -> LpOutcome<T> {
        if !T::EXACT {
            return self.solve();
        }
        let (_, basis) = self.to_f64().solve_with_basis();
        self.certify_basis(&basis).unwrap_or_else(|| self.solve_from(&basis))
    }

    /// Checks directly whether `basis` is optimal: solves `B x_B = b` and
    /// `B^T y = c_B`, then requires `x_B >= 0` and `c - A^T y >= 0`.
    fn certify_basis(&self, basis: &[usize]) -> Option<LpOutcome<T>> {
        let rows = self.a.len();
        if basis.len() != rows {
            return None;
        }
        let b_mat: Vec<Vec<T>> = (0..rows).map(|r| basis.iter().map(|&j| self.a[r][j].clone()).collect()).collect();
        let b_t: Vec<Vec<T>> = (0..rows).map(|k| (0..rows).map(|r| b_mat[r][k].clone()).collect()).collect();
        let xb = solve_square(b_mat, self.b.clone())?;
        if xb.iter().any(|v| v < &T::zero()) {
            return None;
        }
        let y = solve_square(b_t, basis.iter().map(|&j| self.c[j].clone()).collect())?;
        for j in 0..self.cols() {
            let mut reduced = self.c[j].clone();
            for (r, yr) in y.iter().enumerate() {
                if !yr.is_zero() && !self.a[r][j].is_zero() {
                    let mut step = yr.clone();
                    step *= &self.a[r][j];
                    reduced -= &step;
                }
            }
            if reduced < T::zero() {
                return None;
            }
        }
        let mut x = vec![T::zero(); self.cols()];
        for (&j, v) in basis.iter().zip(xb) {
            x[j] = v;
        }
        let objective = x.iter().zip(&self.c).fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
        Some(LpOutcome::Optimal { x, objective, duals: y })
    }
}

/// Solves `m z = rhs` by Gaussian elimination; `None` when `m` is singular.
fn solve_square<T: Scalar>(mut m: Vec<Vec<T>>, mut rhs: Vec<T>) -> Option<Vec<T>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).expect("comparable"))?;
        if !T::EXACT && m[piv][col].abs() <= T::pivot_eps() {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone() / m[col][col].clone();
            for k in col..n {
                if !m[col][k].is_zero() {
                    let mut step = f.clone();
                    step *= &m[col][k];
                    m[r][k] -= &step;
                }
            }
            let mut step = f;
            step *= &rhs[col];
            rhs[r] -= &step;
        }
    }
    let mut z = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r].clone();
        for k in r + 1..n {
            if !m[r][k].is_zero() {
                let mut step = m[r][k].clone();
                step *= &z[k];
                acc -= &step;
            }
        }
        acc /= &m[r][r];
        z[r] = acc;
    }
    Some(z)
}

struct Tableau<T> {
    rows: usize,
    cols: usize,
    /// `rows x (cols + rows + 1)`: original columns, artificial columns, rhs.
    t: Vec<Vec<T>>,
    basis: Vec<usize>,
    /// +1 or -1 per row, for rows negated to make the rhs nonnegative.
    sign: Vec<T>,
    eps: T,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let rows = lp.a.len();
        let cols = lp.cols();
        let width = cols + rows + 1;
        let mut t = Vec::with_capacity(rows);
        let mut sign = Vec::with_capacity(rows);
        for (r, (row, rhs)) in lp.a.iter().zip(&lp.b).enumerate() {
            let s = if rhs < &T::zero() { -T::one() } else { T::one() };
            let mut line = Vec::with_capacity(width);
            line.extend(row.iter().map(|v| v.clone() * s.clone()));
            line.extend((0..rows).map(|k| if k == r { T::one() } else { T::zero() }));
            line.push(rhs.clone() * s.clone());
            t.push(line);
            sign.push(s);
        }
        Tableau { rows, cols, t, basis: (cols..cols + rows).collect(), sign, eps: T::pivot_eps() }
    }

    fn rhs(&self, r: usize) -> &T {
        &self.t[r][self.cols + self.rows]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col].clone();
        for v in self.t[row].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        let pivot_row = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pv) in line.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    let mut step = f.clone();
                    step *= pv;
                    *v -= &step;
                }
            }
            line[col] = T::zero();
        }
        self.basis[row] = col;
    }

    /// Reduced costs `c_j - c_B . column_j` over all tableau columns.
    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let width = self.cols + self.rows;
        let mut d: Vec<T> = (0..width).map(|j| cost[j].clone()).collect();
        for (r, &bv) in self.basis.iter().enumerate() {
            let cb = &cost[bv];
            if cb.is_zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                let v = &self.t[r][j];
                if !v.is_zero() {
                    *dj = dj.clone() - cb.clone() * v.clone();
                }
            }
        }
        d
    }

    /// `y_j = c_B . (B^{-1})_{., j}`, mapped back through the row signs.
    fn duals(&self, cost: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|k| {
                let mut acc = T::zero();
                for (r, &bv) in self.basis.iter().enumerate() {
                    let v = &self.t[r][self.cols + k];
                    if !v.is_zero() && !cost[bv].is_zero() {
                        acc = acc + cost[bv].clone() * v.clone();
                    }
                }
                acc * self.sign[k].clone()
            })
            .collect()
    }

    /// Pivots the hinted columns into the basis in place of artificials.
    /// Returns false when the resulting basic solution is not feasible.
    fn warm_start(&mut self, hint: &[usize]) -> bool {
        for &j in hint {
            if j >= self.cols || self.basis.contains(&j) {
                continue;
            }
            let row = (0..self.rows)
                .filter(|&r| self.basis[r] >= self.cols && self.t[r][j].abs() > self.eps)
                .max_by(|&a, &b| self.t[a][j].abs().partial_cmp(&self.t[b][j].abs()).expect("comparable"));
            if let Some(r) = row {
                self.pivot(r, j);
            }
        }
        (0..self.rows).all(|r| self.rhs(r) >= &T::zero())
    }

    /// Runs simplex iterations with `cost`; only columns in `allowed` may enter.
    ///
    /// Entering columns follow the most negative reduced cost until a run of
    /// degenerate pivots suggests cycling; Bland's rule takes over from then on.
    fn optimize(&mut self, cost: &[T], allowed: usize) -> bool {
        const STALL_LIMIT: usize = 50;
        let mut stalled = 0;
        loop {
            let d = self.reduced_costs(cost);
            let neg_eps = -self.eps.clone();
            let candidates = (0..allowed).filter(|&j| d[j] < neg_eps && !self.basis.contains(&j));
            let entering = if stalled < STALL_LIMIT {
                candidates.min_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("comparable"))
            } else {
                candidates.min()
            };
            let Some(enter) = entering else {
                return true;
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows {
                let a = &self.t[r][enter];
                if a > &self.eps {
                    let ratio = self.rhs(r).clone() / a.clone();
                    let better = match &leave {
                        None => true,
                        Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, ratio)) => {
                    if ratio.is_zero() {
                        stalled += 1;
                    } else if stalled < STALL_LIMIT {
                        stalled = 0;
                    }
                    self.pivot(r, enter)
                }
                None => return false,
            }
        }
    }

    fn run(mut self, c: &[T]) -> (LpOutcome<T>, Vec<usize>) {
        let width = self.cols + self.rows;
        let phase1: Vec<T> = (0..width).map(|j| if j >= self.cols { T::one() } else { T::zero() }).collect();
        self.optimize(&phase1, width);
        let infeasibility =
            (0..self.rows).filter(|&r| self.basis[r] >= self.cols).fold(T::zero(), |acc, r| acc + self.rhs(r).clone());
        let feas_tol = if T::EXACT { T::zero() } else { self.eps.clone() * T::from_f64(1e3).unwrap() };
        if infeasibility > feas_tol {
            return (LpOutcome::Infeasible { farkas: self.duals(&phase1) }, Vec::new());
        }

        // Drive zero-level artificials out of the basis where possible.
        for r in 0..self.rows {
            if self.basis[r] < self.cols {
                continue;
            }
            if let Some(j) = (0..self.cols).find(|&j| self.t[r][j].abs() > self.eps && !self.basis.contains(&j)) {
                self.pivot(r, j);
            }
        }

        let mut cost: Vec<T> = c.to_vec();
        cost.extend((0..self.rows).map(|_| T::zero()));
        if !self.optimize(&cost, self.cols) {
            return (LpOutcome::Unbounded, Vec::new());
        }
        let mut x = vec![T::zero(); self.cols];
        for (r, &bv) in self.basis.iter().enumerate() {
            if bv < self.cols {
                x[bv] = self.rhs(r).clone();
            }
        }
        let objective = x.iter().zip(c).fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
        let basis = self.basis.iter().copied().filter(|&b| b < self.cols).collect();
        (LpOutcome::Optimal { x, objective, duals: self.duals(&cost) }, basis)
    }
}
