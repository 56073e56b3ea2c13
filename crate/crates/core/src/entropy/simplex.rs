//! A small dense two-phase simplex for the feasibility LPs of this module.
//! Problems here have a handful of rows and a few dozen columns, so a plain
//! tableau with Bland's rule is enough.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const REDUCED_COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

pub(crate) enum LpOutcome {
    Optimal { value: f64 },
    Infeasible,
}

/// Solves `max c.x` subject to `A x = b`, `x >= 0`.
pub(crate) fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpOutcome> {
    let m = a.len();
    let n = c.len();
    if m == 0 || a.iter().any(|row| row.len() != n) || b.len() != m {
        return Err(Error::InvalidParameter("malformed LP".into()));
    }

    // Tableau with artificial columns n..n+m appended.
    let total = n + m;
    let mut t = vec![vec![0.0_f64; total]; m];
    let mut rhs = vec![0.0_f64; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * a[i][j];
        }
        t[i][n + i] = 1.0;
        rhs[i] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..total).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, rhs: &mut Vec<f64>, row: usize, col: usize| {
        let scale = t[row][col];
        for v in t[row].iter_mut() {
            *v /= scale;
        }
        rhs[row] /= scale;
        for i in 0..t.len() {
            if i != row && t[i][col].abs() > 0.0 {
                let factor = t[i][col];
                let pivot_row = t[row].clone();
                for (v, pv) in t[i].iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                rhs[i] -= factor * rhs[row];
            }
        }
    };

    // One simplex phase with explicit cost vector; artificial columns may be
    // barred from entering. Bland's rule keeps it finite.
    let run_phase = |t: &mut Vec<Vec<f64>>,
                     rhs: &mut Vec<f64>,
                     basis: &mut Vec<usize>,
                     cost: &[f64],
                     allow_artificial: bool|
     -> Result<()> {
        for _ in 0..20_000 {
            let mut entering = None;
            for j in 0..total {
                if !allow_artificial && j >= n {
                    continue;
                }
                if basis.contains(&j) {
                    continue;
                }
                let reduced = cost[j]
                    - basis
                        .iter()
                        .enumerate()
                        .map(|(i, &bj)| cost[bj] * t[i][j])
                        .sum::<f64>();
                if reduced > REDUCED_COST_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..m {
                if t[i][col] > PIVOT_TOL {
                    let ratio = rhs[i] / t[i][col];
                    match leaving {
                        None => leaving = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || ((ratio - lr).abs() <= PIVOT_TOL && basis[i] < basis[li])
                            {
                                leaving = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Err(Error::SolverFailure("unbounded LP phase".into()));
            };
            pivot(t, rhs, row, col);
            basis[row] = col;
        }
        Err(Error::SolverFailure("simplex iteration budget".into()))
    };

    // Phase 1: drive artificials to zero.
    let mut phase1_cost = vec![0.0_f64; total];
    for item in phase1_cost.iter_mut().skip(n) {
        *item = -1.0;
    }
    run_phase(&mut t, &mut rhs, &mut basis, &phase1_cost, true)?;
    let infeasibility: f64 = basis
        .iter()
        .enumerate()
        .filter(|&(_, &bj)| bj >= n)
        .map(|(i, _)| rhs[i])
        .sum();
    if infeasibility > FEAS_TOL {
        return Ok(LpOutcome::Infeasible);
    }
    // Pivot remaining artificials out where a nonzero original column exists;
    // rows without one are redundant and their artificial stays at zero.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut rhs, i, col);
                basis[i] = col;
            }
        }
    }

    // Phase 2 on the original objective.
    let mut phase2_cost = vec![0.0_f64; total];
    phase2_cost[..n].copy_from_slice(c);
    run_phase(&mut t, &mut rhs, &mut basis, &phase2_cost, false)?;

    let mut x = vec![0.0_f64; n];
    for (i, &bj) in basis.iter().enumerate() {
        if bj < n {
            x[bj] = rhs[i];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpOutcome::Optimal { value })
}

/// Largest `eps` such that `target` is a convex combination of `columns`
/// with every coefficient at least `eps`. Positive iff the target lies in
/// the relative interior of the convex hull; `Infeasible` when the target is
/// outside the affine hull entirely.
pub(crate) fn relint_margin(columns: &[Vec<f64>], target: &[f64]) -> Result<Option<f64>> {
    let n = columns.len();
    if n == 0 {
        return Err(Error::EmptyInput("hull columns"));
    }
    let l = target.len();
    // variables: beta_1..beta_n, eps; rows: l moment constraints + mass
    let mut a = vec![vec![0.0_f64; n + 1]; l + 1];
    let mut b = vec![0.0_f64; l + 1];
    for r in 0..l {
        for (j, col) in columns.iter().enumerate() {
            if col.len() != l {
                return Err(Error::DimensionMismatch {
                    context: "hull column",
                    expected: l,
                    got: col.len(),
                });
            }
            a[r][j] = col[r];
        }
        a[r][n] = columns.iter().map(|col| col[r]).sum();
        b[r] = target[r];
    }
    for entry in a[l].iter_mut().take(n) {
        *entry = 1.0;
    }
    a[l][n] = n as f64;
    b[l] = 1.0;

    let mut c = vec![0.0_f64; n + 1];
    c[n] = 1.0;

    match simplex_max(&a, &b, &c)? {
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Optimal { value, .. } => Ok(Some(value)),
    }
}
