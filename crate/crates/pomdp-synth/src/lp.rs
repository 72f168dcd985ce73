//! Small dense linear programming: the max-min action-distribution problem
//!
//! ```text
//! max_{d in Δ(actions)}  min_{s in rows}  sum_a d(a) * q[s][a]
//! ```
//!
//! solved as a matrix game. After shifting the payoffs positive, the game
//! value `v` and optimal mixture `d` come from the standard LP pair
//!
//! ```text
//! (D)  max 1'y   s.t.  Q'ᵀ y <= 1,  y >= 0        (one constraint per action)
//! ```
//!
//! whose optimum satisfies `v = 1 / (1'y)`, with `d` read off the duals of
//! (D). The tableau simplex below uses Bland's rule, so it cannot cycle; the
//! problems here have at most a few dozen rows and columns.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("empty payoff matrix")]
    Empty,
    #[error("payoff matrix is ragged")]
    Ragged,
    #[error("simplex did not terminate within {0} pivots")]
    PivotLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    /// Optimal distribution over columns (actions).
    pub dist: Vec<f64>,
    /// Game value: the maximized worst-row expectation.
    pub value: f64,
}

const PIVOT_TOL: f64 = 1e-9;

/// Worst-row expectation of mixture `d` on payoff matrix `q`.
pub fn min_backup(q: &[Vec<f64>], d: &[f64]) -> f64 {
    q.iter()
        .map(|row| row.iter().zip(d).map(|(x, p)| x * p).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Solves the max-min game for payoff matrix `q[row][col]`.
pub fn solve_maxmin_game(q: &[Vec<f64>]) -> Result<GameSolution, LpError> {
    let rows = q.len();
    if rows == 0 || q[0].is_empty() {
        return Err(LpError::Empty);
    }
    let cols = q[0].len();
    if q.iter().any(|r| r.len() != cols) {
        return Err(LpError::Ragged);
    }
    if cols == 1 {
        let value = q.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
        return Ok(GameSolution { dist: vec![1.0], value });
    }

    let qmin = q.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - qmin;

    // Tableau for (D): `cols` constraints over `rows` variables plus slacks.
    // Column layout: [y_0 .. y_{rows-1} | slack_0 .. slack_{cols-1} | rhs].
    let width = rows + cols + 1;
    let mut tab = vec![vec![0.0; width]; cols];
    for a in 0..cols {
        for s in 0..rows {
            tab[a][s] = q[s][a] + shift;
        }
        tab[a][rows + a] = 1.0;
        tab[a][width - 1] = 1.0;
    }
    let mut basis: Vec<usize> = (rows..rows + cols).collect();
    let cost = |j: usize| -> f64 {
        if j < rows {
            1.0
        } else {
            0.0
        }
    };

    let max_pivots = 100 * (rows + cols).max(64);
    for pivots in 0.. {
        if pivots > max_pivots {
            return Err(LpError::PivotLimit(max_pivots));
        }
        // Reduced costs from the current basis; Bland: first improving column.
        let mut enter = None;
        for j in 0..rows + cols {
            if basis.contains(&j) {
                continue;
            }
            let z: f64 = (0..cols).map(|i| cost(basis[i]) * tab[i][j]).sum();
            if cost(j) - z > PIVOT_TOL {
                enter = Some(j);
                break;
            }
        }
        let Some(enter) = enter else { break };
        // Ratio test; Bland tie-break on the smallest basic variable index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..cols {
            if tab[i][enter] > PIVOT_TOL {
                let ratio = tab[i][width - 1] / tab[i][enter];
                let better = ratio < best - PIVOT_TOL
                    || (ratio < best + PIVOT_TOL
                        && leave.map_or(true, |l| basis[i] < basis[l]));
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // The feasible region of (D) is bounded; reaching this means the
            // payoffs were degenerate beyond tolerance.
            return Err(LpError::PivotLimit(max_pivots));
        };
        let pivot = tab[leave][enter];
        for j in 0..width {
            tab[leave][j] /= pivot;
        }
        for i in 0..cols {
            if i != leave {
                let factor = tab[i][enter];
                if factor != 0.0 {
                    for j in 0..width {
                        tab[i][j] -= factor * tab[leave][j];
                    }
                }
            }
        }
        basis[leave] = enter;
    }

    let objective: f64 = (0..cols).map(|i| cost(basis[i]) * tab[i][width - 1]).sum();
    // objective = 1/v' with v' = v + shift > 0.
    let v_shifted = 1.0 / objective.max(PIVOT_TOL);
    // Duals of (D) live in the slack columns' reduced costs.
    let mut dist = vec![0.0; cols];
    for a in 0..cols {
        let dual: f64 = (0..cols).map(|i| cost(basis[i]) * tab[i][rows + a]).sum();
        dist[a] = (dual * v_shifted).max(0.0);
    }
    let total: f64 = dist.iter().sum();
    if total > 0.0 {
        for p in &mut dist {
            *p /= total;
        }
    } else {
        dist.fill(1.0 / cols as f64);
    }
    // Report the achieved value of the returned mixture rather than the
    // tableau objective; they agree up to round-off.
    let value = min_backup(q, &dist);
    Ok(GameSolution { dist, value })
}
