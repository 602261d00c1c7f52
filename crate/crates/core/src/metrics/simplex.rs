//! Dense primal simplex on a condensed (Tucker) tableau.
//!
//! Solves `maximize c·x  s.t.  A x ≤ b, x ≥ 0` for `b ≥ 0`, so the slack
//! basis is feasible from the start. Bland's rule picks both the entering
//! and the leaving variable, which rules out cycling on degenerate
//! vertices.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("right-hand side must be nonnegative (row {0})")]
    InfeasibleStart(usize),
    #[error("objective is unbounded")]
    Unbounded,
    #[error("no optimum after {0} pivots")]
    IterationLimit(usize),
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
}

const TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

/// `a` is row-major with `b.len()` rows and `c.len()` columns.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> Result<LpSolution, SimplexError> {
    let n = c.len();
    let m = b.len();
    if a.len() != n * m {
        return Err(SimplexError::Shape(format!(
            "constraint matrix has {} entries, expected {m}x{n}",
            a.len()
        )));
    }
    if let Some(i) = b.iter().position(|&v| !(v >= 0.0)) {
        return Err(SimplexError::InfeasibleStart(i));
    }
    let w = n + 1;
    // rows 0..m: x_B = b - A x_N ; row m: z = z0 - (-c) x_N
    let mut t = vec![0.0; (m + 1) * w];
    for i in 0..m {
        t[i * w..i * w + n].copy_from_slice(&a[i * n..(i + 1) * n]);
        t[i * w + n] = b[i];
    }
    for j in 0..n {
        t[m * w + j] = -c[j];
    }
    let mut nonbasic: Vec<usize> = (0..n).collect();
    let mut basic: Vec<usize> = (n..n + m).collect();

    let mut pivots = 0;
    loop {
        let entering = (0..n).filter(|&j| t[m * w + j] < -TOL).min_by_key(|&j| nonbasic[j]);
        let Some(col) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = t[i * w + col];
            if aij > TOL {
                let ratio = t[i * w + n] / aij;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - TOL * (1.0 + best.abs())
                            || (ratio <= best + TOL * (1.0 + best.abs()) && basic[i] < basic[r])
                        {
                            Some((i, ratio.min(best)))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(SimplexError::Unbounded);
        };
        pivot(&mut t, m + 1, w, row, col);
        std::mem::swap(&mut basic[row], &mut nonbasic[col]);
        pivots += 1;
        if pivots >= MAX_PIVOTS {
            return Err(SimplexError::IterationLimit(pivots));
        }
    }

    let mut x = vec![0.0; n];
    for (i, &var) in basic.iter().enumerate() {
        if var < n {
            x[var] = t[i * w + n].max(0.0);
        }
    }
    Ok(LpSolution {
        objective: t[m * w + n],
        x,
        pivots,
    })
}

fn pivot(t: &mut [f64], rows: usize, w: usize, r: usize, s: usize) {
    let p = t[r * w + s];
    for j in 0..w {
        if j != s {
            t[r * w + j] /= p;
        }
    }
    t[r * w + s] = 1.0 / p;
    let (before, rest) = t.split_at_mut(r * w);
    let (pivot_row, after) = rest.split_at_mut(w);
    let update = |row: &mut [f64]| {
        let f = row[s];
        if f != 0.0 {
            for j in 0..w {
                if j != s {
                    row[j] -= f * pivot_row[j];
                }
            }
            row[s] = -f * pivot_row[s];
        }
    };
    before.chunks_exact_mut(w).for_each(update);
    after.chunks_exact_mut(w).for_each(update);
    debug_assert_eq!(before.len() / w + 1 + after.len() / w, rows);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → 36 at (2, 6)
        let sol = maximize(&[3.0, 5.0], &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0], &[4.0, 12.0, 18.0]).unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example (as a max problem)
        let c = [0.75, -150.0, 0.02, -6.0];
        let a = [
            0.25, -60.0, -0.04, 9.0, //
            0.5, -90.0, -0.02, 3.0, //
            0.0, 0.0, 1.0, 0.0,
        ];
        let sol = maximize(&c, &a, &[0.0, 0.0, 1.0]).unwrap();
        assert!((sol.objective - 0.05).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_bad_rhs() {
        assert_eq!(maximize(&[1.0], &[-1.0], &[1.0]), Err(SimplexError::Unbounded));
        assert_eq!(maximize(&[1.0], &[1.0], &[-1.0]), Err(SimplexError::InfeasibleStart(0)));
    }
}
