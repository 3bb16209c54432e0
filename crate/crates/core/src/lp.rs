//! Dense two-phase simplex for the small linear programs that arise when
//! linearized relaxations of the objective and constraints are minimized over
//! a node's box. Bland's rule keeps it cycle-free.

const TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    eligible: Vec<bool>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        *self.rows[i].last().unwrap()
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Minimize the objective row (reduced costs, last entry = -value).
    /// Returns false when unbounded.
    fn optimize(&mut self, obj: &mut [f64]) -> bool {
        for _ in 0..MAX_PIVOTS {
            let ncols = obj.len() - 1;
            let Some(enter) = (0..ncols).find(|&j| self.eligible[j] && obj[j] < -TOL) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((l, best)) => {
                            if ratio < best - TOL
                                || (ratio <= best + TOL && self.basis[i] < self.basis[l])
                            {
                                Some((i, ratio))
                            } else {
                                Some((l, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, enter, obj),
            }
        }
        true
    }
}

/// Minimize `c·x` subject to `A x <= b` and `0 <= x <= upper`.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64], upper: &[f64]) -> LpOutcome {
    let n = c.len();
    assert_eq!(upper.len(), n);
    assert_eq!(a.len(), b.len());

    // Constraint rows followed by the variable upper bounds.
    let mut rows_a: Vec<Vec<f64>> = a.to_vec();
    let mut rhs: Vec<f64> = b.to_vec();
    for (j, u) in upper.iter().enumerate() {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        rows_a.push(r);
        rhs.push(*u);
    }
    let m = rows_a.len();
    let n_art = rhs.iter().filter(|v| **v < 0.0).count();
    let width = n + m + n_art + 1;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = n + m;
    for i in 0..m {
        let mut row = vec![0.0; width];
        let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * rows_a[i][j];
        }
        row[n + i] = sign;
        row[width - 1] = sign * rhs[i];
        if sign < 0.0 {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        basis,
        eligible: vec![true; width - 1],
    };

    if n_art > 0 {
        // Phase 1: minimize the sum of artificials, expressed in the nonbasic columns.
        let mut obj = vec![0.0; width];
        for j in n + m..n + m + n_art {
            obj[j] = 1.0;
        }
        for (i, &bj) in tab.basis.iter().enumerate() {
            if bj >= n + m {
                for (o, v) in obj.iter_mut().zip(&tab.rows[i]) {
                    *o -= v;
                }
            }
        }
        tab.optimize(&mut obj);
        if -obj[width - 1] > 1e-9 {
            return LpOutcome::Infeasible;
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n + m {
                match (0..n + m).find(|&j| tab.rows[i][j].abs() > TOL) {
                    Some(j) => tab.pivot(i, j, &mut obj),
                    None => {
                        // redundant row
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for j in n + m..n + m + n_art {
            tab.eligible[j] = false;
        }
    }

    // Phase 2 objective in reduced form.
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(c);
    for i in 0..tab.rows.len() {
        let bj = tab.basis[i];
        let f = obj[bj];
        if f != 0.0 {
            let row = tab.rows[i].clone();
            for (o, v) in obj.iter_mut().zip(&row) {
                *o -= f * v;
            }
        }
    }
    if !tab.optimize(&mut obj) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.rhs(i).max(0.0).min(upper[bj]);
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}
