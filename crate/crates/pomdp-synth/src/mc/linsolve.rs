//! Linear solves for value computation: Gauss-Seidel first (the chains here
//! are sparse and fast-mixing), dense LU with partial pivoting as the
//! fallback for ill-conditioned systems.

/// Target residual for value systems.
pub const SOLVE_TOL: f64 = 1e-10;
/// Sweep cap for the iterative solver.
pub const MAX_SWEEPS: usize = 1_000_000;
/// Above this dimension the dense fallback is not attempted.
const DENSE_LIMIT: usize = 2_000;

/// Solves `x = c + M x` where `M` is sparse and substochastic (spectral
/// radius below one). Returns the solution and the final residual.
pub fn solve_fixpoint(m_rows: &[Vec<(usize, f64)>], c: &[f64]) -> (Vec<f64>, f64) {
    let n = c.len();
    let mut x = vec![0.0; n];
    if n == 0 {
        return (x, 0.0);
    }
    let mut residual = f64::INFINITY;
    let mut sweeps = 0usize;
    while sweeps < MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for _ in 0..32 {
            delta = 0.0;
            for s in 0..n {
                let mut val = c[s];
                for &(t, p) in &m_rows[s] {
                    val += p * x[t];
                }
                delta = delta.max((val - x[s]).abs());
                x[s] = val;
            }
            sweeps += 1;
            if sweeps >= MAX_SWEEPS {
                break;
            }
        }
        residual = true_residual(m_rows, c, &x);
        if residual < SOLVE_TOL || (delta == 0.0 && residual < 1e-8) {
            break;
        }
    }
    if residual >= SOLVE_TOL && n <= DENSE_LIMIT {
        if let Some(direct) = dense_solve(m_rows, c) {
            let direct_res = true_residual(m_rows, c, &direct);
            if direct_res < residual {
                return (direct, direct_res);
            }
        }
    }
    (x, residual)
}

fn true_residual(m_rows: &[Vec<(usize, f64)>], c: &[f64], x: &[f64]) -> f64 {
    let mut res: f64 = 0.0;
    for s in 0..c.len() {
        let mut val = c[s];
        for &(t, p) in &m_rows[s] {
            val += p * x[t];
        }
        res = res.max((val - x[s]).abs());
    }
    res
}

/// Dense LU with partial pivoting on `(I - M) x = c`.
fn dense_solve(m_rows: &[Vec<(usize, f64)>], c: &[f64]) -> Option<Vec<f64>> {
    let n = c.len();
    let mut a = vec![vec![0.0; n]; n];
    for s in 0..n {
        a[s][s] = 1.0;
        for &(t, p) in &m_rows[s] {
            a[s][t] -= p;
        }
    }
    let mut b = c.to_vec();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot_row][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut val = b[row];
        for k in row + 1..n {
            val -= a[row][k] * x[k];
        }
        x[row] = val / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_geometric_series() {
        // x = 1 + 0.5 x  =>  x = 2.
        let rows = vec![vec![(0usize, 0.5)]];
        let (x, res) = solve_fixpoint(&rows, &[1.0]);
        assert!((x[0] - 2.0).abs() < 1e-9);
        assert!(res < SOLVE_TOL);
    }

    #[test]
    fn solves_coupled_system() {
        // x0 = 0.5 x1, x1 = 0.5 x0 + 0.5  =>  x0 = 1/3, x1 = 2/3.
        let rows = vec![vec![(1usize, 0.5)], vec![(0usize, 0.5)]];
        let (x, _) = solve_fixpoint(&rows, &[0.0, 0.5]);
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((x[1] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn empty_system_is_fine() {
        let (x, res) = solve_fixpoint(&[], &[]);
        assert!(x.is_empty());
        assert_eq!(res, 0.0);
    }
}
