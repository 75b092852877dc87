//! Dense tableau simplex for `max cᵀy  s.t.  A y <= b, y >= 0` with `b >= 0`,
//! so the slack basis is feasible from the start. Pivoting follows Bland's
//! rule, which cannot cycle on degenerate problems.

use crate::error::{DmocError, Result};

const PIVOT_EPS: f64 = 1e-11;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    #[allow(dead_code)]
    pub values: Vec<f64>,
    /// Optimal multipliers of the constraint rows.
    pub shadow_prices: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

pub(crate) struct Tableau {
    rows: usize,
    vars: usize,
    width: usize,
    /// `rows` constraint rows followed by the reduced-cost row; the last
    /// column holds the right-hand side (objective value in the cost row).
    cells: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    /// `matrix` is row-major with `rows * objective.len()` entries.
    pub fn new(objective: &[f64], matrix: &[f64], rhs: &[f64]) -> Result<Self> {
        let vars = objective.len();
        let rows = rhs.len();
        if matrix.len() != rows * vars {
            return Err(DmocError::DimensionMismatch {
                expected: rows * vars,
                found: matrix.len(),
            });
        }
        if let Some(b) = rhs.iter().find(|b| !(**b >= 0.0)) {
            return Err(DmocError::InvalidParameter(format!(
                "simplex right-hand side must be nonnegative, got {b}"
            )));
        }
        let width = vars + rows + 1;
        let mut cells = vec![0.0; (rows + 1) * width];
        for i in 0..rows {
            let row = &mut cells[i * width..(i + 1) * width];
            row[..vars].copy_from_slice(&matrix[i * vars..(i + 1) * vars]);
            row[vars + i] = 1.0;
            row[width - 1] = rhs[i];
        }
        let cost = &mut cells[rows * width..];
        for (r, c) in cost.iter_mut().zip(objective) {
            *r = -c;
        }
        Ok(Self {
            rows,
            vars,
            width,
            cells,
            basis: (vars..vars + rows).collect(),
        })
    }

    fn entering(&self) -> Option<usize> {
        let cost = &self.cells[self.rows * self.width..self.rows * self.width + self.width - 1];
        cost.iter().position(|&r| r < -PIVOT_EPS)
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let a = self.cells[i * self.width + col];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = self.cells[i * self.width + self.width - 1] / a;
            best = match best {
                None => Some((i, ratio)),
                Some((j, r)) => {
                    if ratio < r || (ratio == r && self.basis[i] < self.basis[j]) {
                        Some((i, ratio))
                    } else {
                        Some((j, r))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let inv = 1.0 / self.cells[row * w + col];
        for v in &mut self.cells[row * w..(row + 1) * w] {
            *v *= inv;
        }
        self.cells[row * w + col] = 1.0;
        let (before, rest) = self.cells.split_at_mut(row * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        let eliminate = |target: &mut [f64]| {
            let factor = target[col];
            if factor != 0.0 {
                for (t, p) in target.iter_mut().zip(pivot_row.iter()) {
                    *t -= factor * p;
                }
                target[col] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        self.basis[row] = col;
    }

    pub fn solve(mut self, max_pivots: usize) -> Result<LpSolution> {
        let mut pivots = 0;
        while let Some(col) = self.entering() {
            if pivots >= max_pivots {
                return Err(DmocError::Solver(format!(
                    "simplex exceeded {max_pivots} pivots"
                )));
            }
            let row = self
                .leaving(col)
                .ok_or_else(|| DmocError::Solver("linear program is unbounded".into()))?;
            self.pivot(row, col);
            pivots += 1;
        }
        let w = self.width;
        let mut values = vec![0.0; self.vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.vars {
                values[b] = self.cells[i * w + w - 1];
            }
        }
        let cost = &self.cells[self.rows * w..];
        Ok(LpSolution {
            values,
            shadow_prices: cost[self.vars..self.vars + self.rows].to_vec(),
            objective: cost[w - 1],
            pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
        let lp = Tableau::new(&[3.0, 5.0], &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0], &[4.0, 12.0, 18.0]).unwrap();
        let sol = lp.solve(100).unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-12);
        assert!((sol.values[0] - 2.0).abs() < 1e-12);
        assert!((sol.values[1] - 6.0).abs() < 1e-12);
        // dual: min 4u + 12v + 18w s.t. u + 3w >= 3, 2v + 2w >= 5 -> (0, 1.5, 1)
        let expected = [0.0, 1.5, 1.0];
        for (s, e) in sol.shadow_prices.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_unbounded() {
        let lp = Tableau::new(&[1.0, 1.0], &[1.0, -1.0], &[1.0]).unwrap();
        assert!(matches!(lp.solve(100), Err(DmocError::Solver(_))));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale cycling example (maximization form).
        let c = [0.75, -150.0, 0.02, -6.0];
        let a = [
            0.25, -60.0, -0.04, 9.0, //
            0.5, -90.0, -0.02, 3.0, //
            0.0, 0.0, 1.0, 0.0,
        ];
        let sol = Tableau::new(&c, &a, &[0.0, 0.0, 1.0]).unwrap().solve(1000).unwrap();
        assert!((sol.objective - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_rhs() {
        assert!(Tableau::new(&[1.0], &[1.0], &[-1.0]).is_err());
    }
}
