//! Entropy functionals, the maximum-entropy characterization of the
//! Boltzmann-Gibbs reweighting, and KL projections onto exponential families.
//!
//! Every measure in this module lives on a shared explicit support list, so
//! absolute continuity is decidable by index. Dual problems are solved by a
//! damped Newton iteration on the log-partition function; existence and
//! uniqueness are classical, the solver is ours.

mod simplex;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{l1_distance, DiscreteMeasure};
use crate::rng::seeded;

/// Feasibility margin for targets inside the feature hull; boundary targets
/// make the dual diverge and are rejected.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

/// Minimum Monte Carlo budget for the smoothed projection experiment.
pub const MIN_SAMPLES: usize = 10_000;

/// `KL(mu || nu) = sum_i mu_i ln(mu_i / nu_i)` over a shared support list,
/// with `0 ln 0 = 0`; `+inf` when `mu` puts mass where `nu` has none.
pub fn kl(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.len() != nu.len() || mu.points() != nu.points() {
        return Err(Error::SupportMismatch);
    }
    let mut total = 0.0_f64;
    for i in 0..mu.len() {
        let p = mu.weight(i);
        let q = nu.weight(i);
        if p > 0.0 {
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            total += p * (p / q).ln();
        }
    }
    Ok(total.max(0.0))
}

/// The generalized entropy `H_nu(mu) = -KL(mu || nu)`; `-inf` off the
/// absolutely continuous cone.
pub fn entropy_functional(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(-kl(mu, nu)?)
}

/// A maximum-entropy problem: find the measure absolutely continuous with
/// respect to `base` that matches the feature moments `target` and maximizes
/// `H_base`. `features` holds one row per feature, evaluated on the support
/// of `base` (shape `l x N`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxEntProblem {
    pub base: DiscreteMeasure,
    pub features: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

impl MaxEntProblem {
    /// Indices carrying base mass; constraints only see these columns.
    fn active_columns(&self) -> Vec<usize> {
        (0..self.base.len())
            .filter(|&j| self.base.weight(j) > 0.0)
            .collect()
    }

    fn feature_column(&self, j: usize) -> Vec<f64> {
        self.features.iter().map(|row| row[j]).collect()
    }

    /// Structural checks plus LP feasibility: the target must lie in the
    /// relative interior of the hull of active feature columns.
    pub fn validate(&self) -> Result<()> {
        let l = self.features.len();
        if l == 0 {
            return Err(Error::EmptyInput("feature rows"));
        }
        for row in &self.features {
            if row.len() != self.base.len() {
                return Err(Error::DimensionMismatch {
                    context: "feature row",
                    expected: self.base.len(),
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature matrix"));
            }
        }
        if self.target.len() != l {
            return Err(Error::DimensionMismatch {
                context: "target moments",
                expected: l,
                got: self.target.len(),
            });
        }
        if self.target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target moments"));
        }
        let active = self.active_columns();
        let columns: Vec<Vec<f64>> = active.iter().map(|&j| self.feature_column(j)).collect();
        match simplex::relint_margin(&columns, &self.target)? {
            None => Err(Error::Infeasible("target outside the feature hull".into())),
            Some(margin) if margin < FEASIBILITY_MARGIN => Err(Error::Infeasible(format!(
                "target within {margin:e} of the feature hull boundary"
            ))),
            Some(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxEntSolution {
    pub lambda: Vec<f64>,
    /// The maximizer: a Gibbs reweighting of the base measure.
    pub solution_weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub regularized: bool,
    pub residual_inf: f64,
    /// Dual objective at the start of each iteration and after the last
    /// step; backtracking keeps this non-increasing.
    pub dual_values: Vec<f64>,
}

impl MaxEntSolution {
    pub fn solution(&self, problem: &MaxEntProblem) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(
            problem.base.points().to_vec(),
            self.solution_weights.clone(),
        )
    }
}

struct NewtonOutcome {
    lambda: Vec<f64>,
    weights: Vec<f64>,
    iterations: usize,
    converged: bool,
    regularized: bool,
    grad_inf: f64,
    dual_values: Vec<f64>,
}

fn gibbs_weights(log_base: &[f64], cols: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let scores: Vec<f64> = log_base
        .iter()
        .zip(cols)
        .map(|(lb, col)| {
            if lb.is_finite() {
                lb + col.iter().zip(lambda).map(|(k, l)| k * l).sum::<f64>()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = scores
        .iter()
        .map(|s| if s.is_finite() { (s - max).exp() } else { 0.0 })
        .collect();
    let z: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= z;
    }
    weights
}

fn dual_value(log_base: &[f64], cols: &[Vec<f64>], target: &[f64], lambda: &[f64]) -> f64 {
    let scores: Vec<f64> = log_base
        .iter()
        .zip(cols)
        .map(|(lb, col)| {
            if lb.is_finite() {
                lb + col.iter().zip(lambda).map(|(k, l)| k * l).sum::<f64>()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores
        .iter()
        .map(|s| if s.is_finite() { (s - max).exp() } else { 0.0 })
        .sum();
    max + sum.ln() - target.iter().zip(lambda).map(|(t, l)| t * l).sum::<f64>()
}

/// Damped Newton on the strictly convex dual
/// `phi(lambda) = log sum_j base_j exp<lambda, k_j> - <lambda, target>`.
fn gibbs_dual_newton(
    log_base: &[f64],
    cols: &[Vec<f64>],
    target: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let l = target.len();
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    let mut lambda = vec![0.0_f64; l];
    let mut regularized = false;
    let mut iterations = 0;
    let converged = false;
    let mut dual_values = Vec::new();

    loop {
        let weights = gibbs_weights(log_base, cols, &lambda);
        let mut mean = vec![0.0_f64; l];
        for (w, col) in weights.iter().zip(cols) {
            for (m, k) in mean.iter_mut().zip(col) {
                *m += w * k;
            }
        }
        let grad: Vec<f64> = mean.iter().zip(target).map(|(m, t)| m - t).collect();
        let grad_inf = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        dual_values.push(dual_value(log_base, cols, target, &lambda));
        if grad_inf <= tol {
            return Ok(NewtonOutcome {
                lambda,
                weights,
                iterations,
                converged: true,
                regularized,
                grad_inf,
                dual_values,
            });
        }
        if iterations >= max_iter {
            return Ok(NewtonOutcome {
                lambda,
                weights,
                iterations,
                converged,
                regularized,
                grad_inf,
                dual_values,
            });
        }
        iterations += 1;

        // Hessian = covariance of the features under the current weights.
        let mut h = DMatrix::<f64>::zeros(l, l);
        for (w, col) in weights.iter().zip(cols) {
            for r in 0..l {
                let cr = col[r] - mean[r];
                for s in 0..l {
                    h[(r, s)] += w * cr * (col[s] - mean[s]);
                }
            }
        }
        let g = DVector::from_column_slice(&grad);
        // Minimum-norm Newton direction through the pseudo-inverse. With
        // fewer atoms than features the Hessian is rank-deficient and the
        // multiplier is only determined up to the null space; the min-norm
        // solve keeps the iterate from drifting along it, which would wreck
        // the score precision.
        let svd = h.clone().svd(true, true);
        let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cutoff = (1e-12 * sigma_max).max(1e-300);
        if svd.singular_values.iter().any(|&s| s <= cutoff) {
            regularized = true;
        }
        let mut direction = match svd.solve(&(-&g), cutoff) {
            Ok(solved) => solved,
            Err(_) => {
                regularized = true;
                -g.clone()
            }
        };
        let mut slope: f64 = g.dot(&direction);
        if slope.is_nan() || slope >= 0.0 {
            // fall back to steepest descent
            regularized = true;
            direction = -g.clone();
            slope = g.dot(&direction);
        }

        let phi0 = *dual_values.last().expect("pushed this iteration");
        if slope.abs() <= 1e-13 * phi0.abs().max(1.0) && direction.amax() <= 1.0 {
            // The predicted decrease is below the resolution of the dual
            // value; a sufficient-decrease test cannot see progress anymore,
            // but the quadratic model still does. Take the full Newton step.
            for (l0, d) in lambda.iter_mut().zip(direction.iter()) {
                *l0 += d;
            }
            continue;
        }
        let mut step = 1.0_f64;
        loop {
            let candidate: Vec<f64> = lambda
                .iter()
                .zip(direction.iter())
                .map(|(l0, d)| l0 + step * d)
                .collect();
            let phi = dual_value(log_base, cols, target, &candidate);
            if phi <= phi0 + 0.25 * step * slope {
                lambda = candidate;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                lambda = candidate;
                break;
            }
        }
    }
}

/// Solves the maximum-entropy problem. `MaxIterExceeded` and a regularized
/// Hessian are reported through flags on the best iterate rather than hard
/// errors.
pub fn maxent_solve(problem: &MaxEntProblem, tol: f64, max_iter: usize) -> Result<MaxEntSolution> {
    problem.validate()?;
    let n = problem.base.len();
    let log_base: Vec<f64> = (0..n)
        .map(|j| {
            let w = problem.base.weight(j);
            if w > 0.0 {
                w.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| problem.feature_column(j)).collect();
    let outcome = gibbs_dual_newton(&log_base, &cols, &problem.target, tol, max_iter)?;
    Ok(MaxEntSolution {
        lambda: outcome.lambda,
        solution_weights: outcome.weights,
        iterations: outcome.iterations,
        converged: outcome.converged,
        regularized: outcome.regularized,
        residual_inf: outcome.grad_inf,
        dual_values: outcome.dual_values,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxEntVerify {
    pub holds: bool,
    /// Largest `H(sample) - H(solution)` over feasible samples; optimality
    /// means this never climbs above zero (up to tolerance).
    pub worst_gap: f64,
    pub feasible_samples: usize,
    /// Largest violation of the decomposition
    /// `H_nu(gamma) = -KL(gamma || mu*) + H_nu(mu*)` over the samples.
    pub decomposition_max_err: f64,
}

/// Samples feasible competitors by projecting random reweightings of the base
/// onto the moment constraints (least squares on weights, negatives
/// rejected), and checks none of them beats the solution's entropy.
pub fn maxent_verify(
    problem: &MaxEntProblem,
    solution: &MaxEntSolution,
    n_samples: usize,
    seed: u64,
) -> Result<MaxEntVerify> {
    let active = problem.active_columns();
    let l = problem.features.len();
    let rows = l + 1;
    let cols_n = active.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols_n);
    for (cj, &j) in active.iter().enumerate() {
        for r in 0..l {
            a[(r, cj)] = problem.features[r][j];
        }
        a[(l, cj)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(rows);
    for r in 0..l {
        b[r] = problem.target[r];
    }
    b[l] = 1.0;

    let gram = &a * a.transpose();
    let gram_lu = gram.clone().lu();
    let svd_fallback = if gram_lu.is_invertible() {
        None
    } else {
        Some(gram.svd(true, true))
    };
    let solve_gram = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
        match &svd_fallback {
            None => gram_lu.solve(rhs),
            Some(svd) => svd.solve(rhs, 1e-12).ok(),
        }
    };

    let solution_measure = solution.solution(problem)?;
    let h_solution = entropy_functional(&solution_measure, &problem.base)?;

    let mut rng = seeded(seed, 0x5EED);
    let mut feasible = 0usize;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut decomposition_max_err = 0.0_f64;
    let mut holds = true;

    let solution_vec =
        DVector::from_iterator(cols_n, active.iter().map(|&j| solution.solution_weights[j]));
    for _ in 0..n_samples {
        let raw: Vec<f64> = active
            .iter()
            .map(|&j| {
                let z: f64 = rng.sample(StandardNormal);
                problem.base.weight(j) * (0.5 * z).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let w0 = DVector::from_iterator(cols_n, raw.iter().map(|w| w / total));
        let residual = &a * &w0 - &b;
        let Some(correction) = solve_gram(&residual) else {
            continue;
        };
        let mut w = &w0 - a.transpose() * correction;
        if w.iter().any(|&v| v < 0.0) {
            // The constraint set is affine and the Gibbs solution lies in its
            // strictly positive interior, so shrinking toward it restores
            // nonnegativity while keeping the moments.
            let mut t: f64 = 1.0;
            for (wi, si) in w.iter().zip(solution_vec.iter()) {
                if *wi < *si {
                    t = t.min(si / (si - wi));
                }
            }
            let t = 0.9 * t;
            w = &solution_vec + (&w - &solution_vec) * t;
            if w.iter().any(|&v| v < 0.0) {
                continue;
            }
        }
        let check = (&a * &w - &b).amax();
        if check > 1e-9 {
            continue;
        }
        let mut full = vec![0.0_f64; problem.base.len()];
        for (cj, &j) in active.iter().enumerate() {
            full[j] = w[cj];
        }
        let Ok(gamma) = DiscreteMeasure::new(problem.base.points().to_vec(), full) else {
            continue;
        };
        feasible += 1;
        let h_gamma = entropy_functional(&gamma, &problem.base)?;
        let gap = h_gamma - h_solution;
        worst_gap = worst_gap.max(gap);
        if gap > 1e-9 {
            holds = false;
        }
        let kl_to_solution = kl(&gamma, &solution_measure)?;
        if kl_to_solution.is_finite() {
            let err = (h_gamma - (h_solution - kl_to_solution)).abs();
            decomposition_max_err = decomposition_max_err.max(err);
        }
    }

    if feasible == 0 {
        return Err(Error::NoFeasibleSamples);
    }
    Ok(MaxEntVerify {
        holds,
        worst_gap,
        feasible_samples: feasible,
        decomposition_max_err,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpFamProjection {
    pub theta: Vec<f64>,
    /// The projected measure, supported on the full grid.
    pub projected_weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ExpFamProjection {
    pub fn projected(&self, grid: &[Vec<f64>]) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(grid.to_vec(), self.projected_weights.clone())
    }
}

/// KL projection of a grid-supported measure onto the exponential family
/// `exp(<theta, x> - A(theta))` over counting measure on the grid. By moment
/// matching this reduces to a dual Newton solve with the measure's mean as
/// the target.
pub fn expfam_project(mu: &DiscreteMeasure, grid: &[Vec<f64>]) -> Result<ExpFamProjection> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("grid"));
    }
    let d = grid[0].len();
    for g in grid {
        if g.len() != d {
            return Err(Error::DimensionMismatch {
                context: "grid point",
                expected: d,
                got: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid point"));
        }
    }
    if mu.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "measure vs grid",
            expected: d,
            got: mu.dim(),
        });
    }
    for p in mu.points() {
        if !grid.iter().any(|g| g.as_slice() == p.as_slice()) {
            return Err(Error::SupportMismatch);
        }
    }
    // The grid must span the full dimension once centered.
    let n = grid.len();
    let centroid: Vec<f64> = (0..d)
        .map(|k| grid.iter().map(|g| g[k]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, k| grid[i][k] - centroid[k]);
    let svd = centered.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > smax * 1e-10 && s > 1e-300)
        .count();
    if rank < d {
        return Err(Error::DegenerateGrid);
    }

    let target = mu.mean();
    match simplex::relint_margin(grid, &target)? {
        None => return Err(Error::Infeasible("mean outside the grid hull".into())),
        Some(margin) if margin < FEASIBILITY_MARGIN => {
            return Err(Error::Infeasible(
                "mean on the boundary of the grid hull".into(),
            ))
        }
        Some(_) => {}
    }

    let log_base = vec![0.0_f64; n];
    let outcome = gibbs_dual_newton(&log_base, grid, &target, 1e-12, 200)?;
    Ok(ExpFamProjection {
        theta: outcome.lambda,
        projected_weights: outcome.weights,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

/// One sigma level of the smoothed projection experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothedStep {
    pub sigma: f64,
    pub argmin: Vec<f64>,
    pub distance_to_mean: f64,
    pub kl_estimate: f64,
    pub kl_stderr: f64,
}

/// Monte Carlo version of the vanishing-bandwidth projection: for each sigma,
/// estimate `KL(N(0, sigma^2 I) * mu || N(x, sigma^2 I))` over a grid of
/// candidate centers `x` and return the minimizer. As sigma shrinks the
/// minimizers approach the mean of `mu`.
pub fn smoothed_projection_experiment(
    mu: &DiscreteMeasure,
    sigmas: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<SmoothedStep>> {
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("sigma schedule"));
    }
    for w in sigmas.windows(2) {
        if w[1].is_nan() || w[1] >= w[0] {
            return Err(Error::InvalidParameter(
                "sigmas must be strictly decreasing".into(),
            ));
        }
    }
    if sigmas
        .iter()
        .any(|s| s.is_nan() || *s <= 0.0 || !s.is_finite())
    {
        return Err(Error::InvalidParameter("sigmas must be positive".into()));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::SampleBudgetTooSmall {
            given: n_samples,
            minimum: MIN_SAMPLES,
        });
    }

    let d = mu.dim();
    let mean = mu.mean();
    let cumulative: Vec<f64> = mu
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();

    const GRID_POINTS: usize = 41;
    let mut steps = Vec::with_capacity(sigmas.len());
    for (index, &sigma) in sigmas.iter().enumerate() {
        let mut rng = seeded(seed, index as u64);
        let mut samples = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let u: f64 = rng.random();
            let atom = cumulative.partition_point(|&c| c < u).min(mu.len() - 1);
            let point: Vec<f64> = mu
                .point(atom)
                .iter()
                .map(|&x| {
                    let z: f64 = rng.sample(StandardNormal);
                    x + sigma * z
                })
                .collect();
            samples.push(point);
        }

        // Candidate centers: per-coordinate grid over the support box padded
        // by sigma. The quadratic sample objective separates per coordinate.
        let mut argmin = vec![0.0_f64; d];
        for k in 0..d {
            let lo = mu
                .points()
                .iter()
                .map(|p| p[k])
                .fold(f64::INFINITY, f64::min)
                - sigma;
            let hi = mu
                .points()
                .iter()
                .map(|p| p[k])
                .fold(f64::NEG_INFINITY, f64::max)
                + sigma;
            let sum: f64 = samples.iter().map(|s| s[k]).sum();
            let sum_sq: f64 = samples.iter().map(|s| s[k] * s[k]).sum();
            let mut best = f64::INFINITY;
            let mut best_c = lo;
            for g in 0..GRID_POINTS {
                let c = lo + (hi - lo) * g as f64 / (GRID_POINTS - 1) as f64;
                let obj = sum_sq - 2.0 * c * sum + n_samples as f64 * c * c;
                if obj < best {
                    best = obj;
                    best_c = c;
                }
            }
            argmin[k] = best_c;
        }

        // KL estimate at the minimizer; Gaussian normalizers cancel.
        let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
        let log_weights: Vec<f64> = mu
            .weights()
            .iter()
            .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
            .collect();
        let mut sum_term = 0.0_f64;
        let mut sum_term_sq = 0.0_f64;
        for z in &samples {
            let mut max_score = f64::NEG_INFINITY;
            let mut scores = Vec::with_capacity(mu.len());
            for (p, lw) in mu.points().iter().zip(&log_weights) {
                let s = if lw.is_finite() {
                    let sq: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                    lw - sq * inv_two_sigma_sq
                } else {
                    f64::NEG_INFINITY
                };
                max_score = max_score.max(s);
                scores.push(s);
            }
            let log_p = max_score
                + scores
                    .iter()
                    .map(|s| {
                        if s.is_finite() {
                            (s - max_score).exp()
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
                    .ln();
            let sq_q: f64 = argmin.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            let log_q = -sq_q * inv_two_sigma_sq;
            let term = log_p - log_q;
            sum_term += term;
            sum_term_sq += term * term;
        }
        let nf = n_samples as f64;
        let estimate = sum_term / nf;
        let variance = (sum_term_sq / nf - estimate * estimate).max(0.0);
        let stderr = (variance / nf).sqrt();
        steps.push(SmoothedStep {
            sigma,
            argmin: argmin.clone(),
            distance_to_mean: l1_distance(&argmin, &mean),
            kl_estimate: estimate,
            kl_stderr: stderr,
        });
    }
    Ok(steps)
}

/// CSV rendering of an experiment run: `sigma,estimate,stderr` rows.
pub fn smoothed_csv(steps: &[SmoothedStep]) -> String {
    let mut out = String::from("sigma,estimate,stderr\n");
    for s in steps {
        out.push_str(&format!("{},{},{}\n", s.sigma, s.kl_estimate, s.kl_stderr));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_01() -> DiscreteMeasure {
        DiscreteMeasure::empirical(vec![vec![0.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn kl_basics() {
        let nu = uniform_01();
        assert_eq!(kl(&nu, &nu).unwrap(), 0.0);

        // scalar oracle: 0.75 ln 1.5 + 0.25 ln 0.5
        let mu = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.75, 0.25]).unwrap();
        let expected = 0.75 * 1.5_f64.ln() + 0.25 * 0.5_f64.ln();
        assert!((kl(&mu, &nu).unwrap() - expected).abs() <= 1e-15);
        assert!((expected - 0.130812).abs() < 1e-6);
        assert!((entropy_functional(&mu, &nu).unwrap() + expected).abs() <= 1e-15);

        let point_a = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0, 0.0]).unwrap();
        let point_b = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        assert_eq!(kl(&point_a, &point_b).unwrap(), f64::INFINITY);
        assert_eq!(
            entropy_functional(&point_a, &point_b).unwrap(),
            f64::NEG_INFINITY
        );

        let other = DiscreteMeasure::empirical(vec![vec![0.0], vec![2.0]]).unwrap();
        assert!(matches!(kl(&nu, &other), Err(Error::SupportMismatch)));
    }

    #[test]
    fn maxent_unconstrained_keeps_base() {
        // target equal to the base's own feature mean: lambda = 0
        let base = uniform_01();
        let problem = MaxEntProblem {
            base: base.clone(),
            features: vec![vec![0.0, 1.0]],
            target: vec![0.5],
        };
        let sol = maxent_solve(&problem, 1e-10, 100).unwrap();
        assert!(sol.converged);
        assert!(sol.lambda[0].abs() <= 1e-8);
        for (w, b) in sol.solution_weights.iter().zip(base.weights()) {
            assert!((w - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn maxent_logit_closed_form() {
        // closed form: lambda = logit(target); with target = e/(1+e) the
        // answer is exactly 1
        let e = std::f64::consts::E;
        let target = e / (1.0 + e);
        let problem = MaxEntProblem {
            base: uniform_01(),
            features: vec![vec![0.0, 1.0]],
            target: vec![target],
        };
        let sol = maxent_solve(&problem, 1e-12, 100).unwrap();
        assert!(sol.converged);
        assert!((sol.lambda[0] - 1.0).abs() <= 1e-8, "{}", sol.lambda[0]);
        assert!(sol.residual_inf <= 1e-12);
        // Gibbs reconstruction from the returned multiplier
        let z = 1.0 + e;
        assert!((sol.solution_weights[1] - e / z).abs() <= 1e-12);
    }

    #[test]
    fn maxent_symmetric_three_point() {
        let base = DiscreteMeasure::empirical(vec![vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let problem = MaxEntProblem {
            base,
            features: vec![vec![-1.0, 0.0, 1.0]],
            target: vec![0.0],
        };
        let sol = maxent_solve(&problem, 1e-12, 100).unwrap();
        assert!(sol.lambda[0].abs() <= 1e-10);
        for w in &sol.solution_weights {
            assert!((w - 1.0 / 3.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn dual_descent_is_monotone() {
        let base = DiscreteMeasure::empirical(
            (0..12)
                .map(|i| vec![(i as f64) / 3.0 - 2.0, (i as f64).sin()])
                .collect(),
        )
        .unwrap();
        let features = vec![
            (0..12).map(|i| base.point(i)[0]).collect::<Vec<f64>>(),
            (0..12).map(|i| base.point(i)[1]).collect::<Vec<f64>>(),
        ];
        // an off-center but interior target
        let target = vec![
            0.7 * features[0].iter().sum::<f64>() / 12.0 + 0.3 * features[0][2],
            0.7 * features[1].iter().sum::<f64>() / 12.0 + 0.3 * features[1][2],
        ];
        let problem = MaxEntProblem {
            base,
            features,
            target,
        };
        let sol = maxent_solve(&problem, 1e-10, 100).unwrap();
        assert!(sol.converged);
        for pair in sol.dual_values.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{:?}", sol.dual_values);
        }
        assert!(sol.residual_inf <= 1e-10);
    }

    #[test]
    fn maxent_rejects_boundary_and_outside_targets() {
        let problem = MaxEntProblem {
            base: uniform_01(),
            features: vec![vec![0.0, 1.0]],
            target: vec![1.0],
        };
        assert!(matches!(problem.validate(), Err(Error::Infeasible(_))));
        let outside = MaxEntProblem {
            base: uniform_01(),
            features: vec![vec![0.0, 1.0]],
            target: vec![1.5],
        };
        assert!(matches!(outside.validate(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn verify_unconstrained_solution_dominates_samples() {
        // the base measure is the unconstrained maximizer; every feasible
        // competitor has lower entropy
        let base = uniform_01();
        let problem = MaxEntProblem {
            base: base.clone(),
            features: vec![vec![0.0, 1.0]],
            target: vec![0.5],
        };
        let sol = maxent_solve(&problem, 1e-12, 100).unwrap();
        let verify = maxent_verify(&problem, &sol, 200, 17).unwrap();
        assert!(verify.holds);
        assert!(verify.worst_gap <= 1e-9);
    }

    #[test]
    fn duplicated_features_take_the_regularized_path() {
        // two identical feature rows make the dual Hessian singular; the
        // solver flags the fallback and still meets the residual
        let base = uniform_01();
        let problem = MaxEntProblem {
            base,
            features: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            target: vec![0.6, 0.6],
        };
        let sol = maxent_solve(&problem, 1e-10, 200).unwrap();
        assert!(sol.regularized);
        assert!(sol.residual_inf <= 1e-8, "{}", sol.residual_inf);
        assert!((sol.solution_weights[1] - 0.6).abs() <= 1e-8);
    }

    #[test]
    fn verify_logit_solution_dominates_samples() {
        let e = std::f64::consts::E;
        let problem = MaxEntProblem {
            base: uniform_01(),
            features: vec![vec![0.0, 1.0]],
            target: vec![e / (1.0 + e)],
        };
        let sol = maxent_solve(&problem, 1e-12, 100).unwrap();
        let verify = maxent_verify(&problem, &sol, 500, 42).unwrap();
        assert!(verify.holds, "worst gap {}", verify.worst_gap);
        assert!(verify.worst_gap <= 1e-9);
        assert!(verify.feasible_samples > 0);
        assert!(verify.decomposition_max_err <= 1e-9);
    }

    #[test]
    fn expfam_roundtrip_recovers_planted_theta() {
        let grid: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.5 - 1.0]).collect();
        let theta0 = 0.8_f64;
        let scores: Vec<f64> = grid.iter().map(|g| theta0 * g[0]).collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= z;
        }
        let mu = DiscreteMeasure::new(grid.clone(), w).unwrap();
        let proj = expfam_project(&mu, &grid).unwrap();
        assert!(proj.converged);
        assert!((proj.theta[0] - theta0).abs() <= 1e-8);
    }

    #[test]
    fn expfam_uniform_gives_zero_theta() {
        let grid: Vec<Vec<f64>> = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let mu = DiscreteMeasure::empirical(grid.clone()).unwrap();
        let proj = expfam_project(&mu, &grid).unwrap();
        assert!(proj.theta[0].abs() <= 1e-10);
    }

    #[test]
    fn expfam_logit_grid() {
        // logit closed form on the two-point grid
        let grid = vec![vec![0.0], vec![1.0]];
        let p1 = 0.731059_f64;
        let mu = DiscreteMeasure::new(grid.clone(), vec![1.0 - p1, p1]).unwrap();
        let proj = expfam_project(&mu, &grid).unwrap();
        let expected = (p1 / (1.0 - p1)).ln();
        assert!((proj.theta[0] - expected).abs() <= 1e-8);
    }

    #[test]
    fn expfam_degenerate_grid_rejected() {
        let grid = vec![vec![0.0, 0.0], vec![1.0, 0.0]]; // spans only one axis
        let mu = DiscreteMeasure::empirical(grid.clone()).unwrap();
        assert!(matches!(
            expfam_project(&mu, &grid),
            Err(Error::DegenerateGrid)
        ));
    }

    #[test]
    fn expfam_pythagorean_identity() {
        let grid: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let mu = DiscreteMeasure::new(grid.clone(), vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let proj = expfam_project(&mu, &grid).unwrap();
        let nu_star = proj.projected(&grid).unwrap();
        for theta in [-0.5, -0.1, 0.3, 0.9] {
            let scores: Vec<f64> = grid.iter().map(|g| theta * g[0]).collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut w: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let z: f64 = w.iter().sum();
            for wi in &mut w {
                *wi /= z;
            }
            let nu_theta = DiscreteMeasure::new(grid.clone(), w).unwrap();
            let lhs = kl(&mu, &nu_theta).unwrap() - kl(&mu, &nu_star).unwrap();
            let rhs = kl(&nu_star, &nu_theta).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9, "theta {theta}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn smoothing_validates_inputs() {
        let mu = uniform_01();
        assert!(matches!(
            smoothed_projection_experiment(&mu, &[1.0, 2.0], 20_000, 1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            smoothed_projection_experiment(&mu, &[1.0, 0.5], 100, 1),
            Err(Error::SampleBudgetTooSmall { .. })
        ));
    }

    #[test]
    fn smoothing_dirac_recovers_atom() {
        let mu = DiscreteMeasure::dirac(vec![2.0]).unwrap();
        let steps = smoothed_projection_experiment(&mu, &[1.0, 0.5], 20_000, 3).unwrap();
        for step in &steps {
            assert!(step.distance_to_mean <= 0.1, "{:?}", step);
        }
    }

    #[test]
    fn smoothing_symmetric_measure_centers() {
        let mu = DiscreteMeasure::empirical(vec![vec![-1.0], vec![1.0]]).unwrap();
        let steps = smoothed_projection_experiment(&mu, &[2.0, 1.0, 0.5, 0.25], 50_000, 9).unwrap();
        let last = steps.last().unwrap();
        assert!(last.distance_to_mean <= 0.05, "{:?}", last);
        let csv = smoothed_csv(&steps);
        assert!(csv.starts_with("sigma,estimate,stderr\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
