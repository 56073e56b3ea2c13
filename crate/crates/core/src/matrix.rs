//! Small helpers for row-major matrices stored as `Vec<Vec<f64>>`.

use crate::error::{Error, Result};

/// Checks that `m` is a well-formed, finite `rows x cols` matrix.
pub(crate) fn validate(m: &[Vec<f64>], context: &'static str) -> Result<(usize, usize)> {
    if m.is_empty() {
        return Err(Error::EmptyInput(context));
    }
    let cols = m[0].len();
    if cols == 0 {
        return Err(Error::EmptyInput(context));
    }
    for row in m {
        if row.len() != cols {
            return Err(Error::DimensionMismatch {
                context,
                expected: cols,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(context));
        }
    }
    Ok((m.len(), cols))
}

pub(crate) fn matvec(m: &[Vec<f64>], x: &[f64], context: &'static str) -> Result<Vec<f64>> {
    let cols = m.first().map_or(0, |r| r.len());
    if cols != x.len() {
        return Err(Error::DimensionMismatch {
            context,
            expected: cols,
            got: x.len(),
        });
    }
    Ok(m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect())
}

/// Induced 1-norm (maximum absolute column sum), the Lipschitz constant of
/// `x -> M x` between l1 spaces.
pub(crate) fn induced_one_norm(m: &[Vec<f64>]) -> f64 {
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols)
        .map(|j| m.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols)
        .map(|j| (0..rows).map(|i| m[i][j]).collect())
        .collect()
}
