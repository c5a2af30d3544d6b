//! Dense Gaussian elimination with partial pivoting.

use crate::error::{Error, Result};

/// Solve `A X = B` for square `A` (row-major, `n × n`) and `B` with `m`
/// right-hand-side columns (row-major, `n × m`). Returns `X` row-major.
pub fn solve(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) || b.len() != n {
        return Err(Error::Numerical("dimension mismatch in linear solve".into()));
    }
    let m = b.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut x: Vec<Vec<f64>> = b.to_vec();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() <= scale * 1e-14 {
            return Err(Error::Numerical(format!("singular system at column {col}")));
        }
        a.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            for k in 0..m {
                x[row][k] -= factor * x[col][k];
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..m {
            let mut acc = x[col][k];
            for j in col + 1..n {
                acc -= a[col][j] * x[j][k];
            }
            x[col][k] = acc / a[col][col];
        }
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    Ok(x)
}
