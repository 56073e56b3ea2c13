//! Downstream uses of the transport view: sensitivity of attention to
//! neighborhood mis-specification, fixed points of weight-shared transformer
//! iteration, and cross-length perturbation of token sequences.

use serde::{Deserialize, Serialize};

use crate::attention::{attention_kernel_apply, transformer_step, AttentionSpec, TransformerSpec};
use crate::error::{Error, Result};
use crate::kernels::{potential_constants, potential_pointwise_lip, Potential};
use crate::matrix;
use crate::measure::{l1_distance, BoundingBox, DiscreteMeasure};
use crate::regularity::bound_gaussian_unbounded;
use crate::transport::w1_exact;

/// Observed versus bounded output gap when the same anchor attends over two
/// different neighborhoods.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborhoodGap {
    /// l1 distance between the two attention outputs.
    pub lhs: f64,
    /// `d K_l 2 ||G(x_t, .)||_Lip diam_1(E) / eps(G) * W1` of the
    /// neighborhood configurations.
    pub rhs: f64,
    /// `lhs / rhs`, zero when both vanish.
    pub ratio: f64,
    /// W1 distance between the two neighborhood configurations.
    pub neighborhood_w1: f64,
}

/// Compares attention at anchor `t` over two neighborhoods that both contain
/// it. The right-hand side uses the pointwise Lipschitz constant of the
/// potential at the anchor.
pub fn neighborhood_gap(
    points: &[Vec<f64>],
    t: usize,
    neighborhood: &[usize],
    alternative: &[usize],
    spec: &AttentionSpec,
    bx: &BoundingBox,
) -> Result<NeighborhoodGap> {
    let len = points.len();
    for &i in neighborhood.iter().chain(alternative) {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
    }
    if t >= len {
        return Err(Error::IndexOutOfRange { index: t, len });
    }
    if !neighborhood.contains(&t) || !alternative.contains(&t) {
        return Err(Error::TNotInNeighborhood(t));
    }
    let gather = |idx: &[usize]| -> Result<DiscreteMeasure> {
        DiscreteMeasure::empirical(idx.iter().map(|&i| points[i].clone()).collect())
    };
    let mu = gather(neighborhood)?;
    let mu_hat = gather(alternative)?;
    let anchor = &points[t];

    let out = attention_kernel_apply(anchor, &mu, spec)?;
    let out_hat = attention_kernel_apply(anchor, &mu_hat, spec)?;
    let lhs = l1_distance(&out, &out_hat);

    let (neighborhood_w1, _) = w1_exact(&mu, &mu_hat)?;
    let constants = potential_constants(&spec.potential, bx)?;
    if constants.eps <= 0.0 || constants.eps.is_subnormal() {
        return Err(Error::ZeroEps {
            log_eps: constants.log_eps,
        });
    }
    let lip_at_anchor = potential_pointwise_lip(&spec.potential, anchor, bx)?;
    let d = mu.dim() as f64;
    let rhs = d * spec.lookup.lip_l1() * 2.0 * lip_at_anchor * bx.diam_l1() / constants.eps
        * neighborhood_w1;

    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(NeighborhoodGap {
        lhs,
        rhs,
        ratio,
        neighborhood_w1,
    })
}

/// Trace of a fixed-point iteration of one transformer layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub final_weights: Vec<f64>,
    pub final_points: Vec<Vec<f64>>,
    /// `W1(mu^{k+1}, mu^k)` for every step taken.
    pub history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Composed contraction bound of the layer when available (Gaussian
    /// heads); geometric decay of the history is checked against it when it
    /// is below one.
    pub contraction_bound: Option<f64>,
    pub geometric_decay_ok: Option<bool>,
}

impl FixedPointResult {
    pub fn final_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.final_points.clone(), self.final_weights.clone())
    }
}

/// Composed one-step contraction bound of a transformer layer applied to
/// configurations of `n_atoms` atoms, available when every head uses the
/// Gaussian potential: the unbounded per-head constants weighted by the
/// output-matrix norms, times the feedforward Lipschitz constant.
pub fn composed_contraction_bound(spec: &TransformerSpec, n_atoms: usize) -> Option<f64> {
    let mut total = 0.0;
    for head in &spec.heads {
        if !matches!(head.attention.potential, Potential::Gaussian) {
            return None;
        }
        let d = head.output.first().map_or(0, |r| r.len());
        let per_head =
            bound_gaussian_unbounded(n_atoms, n_atoms, d, head.attention.lookup.lip_l1());
        total += matrix::induced_one_norm(&head.output) * per_head;
    }
    Some(total * spec.ffn_lip_l1())
}

/// Iterates the layer until consecutive configurations are within `tol` in
/// W1 or the iteration budget runs out. Convergence is measured in W1, not
/// pointwise, because atoms may permute while the configuration settles.
pub fn fixed_point_iterate(
    mu0: &DiscreteMeasure,
    spec: &TransformerSpec,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    if tol.is_nan() || tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    spec.validate()?;
    let contraction_bound = composed_contraction_bound(spec, mu0.len());

    let mut current = mu0.clone();
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let next = transformer_step(&current, spec)?;
        let (step, _) = w1_exact(&next, &current)?;
        history.push(step);
        current = next;
        if step <= tol {
            converged = true;
            break;
        }
    }

    let geometric_decay_ok = contraction_bound.and_then(|q| {
        if q < 1.0 {
            Some(
                history
                    .windows(2)
                    .all(|w| w[1] <= q * w[0] + crate::regularity::AUDIT_TOL),
            )
        } else {
            None
        }
    });

    Ok(FixedPointResult {
        final_weights: current.weights().to_vec(),
        final_points: current.points().to_vec(),
        iterations: history.len(),
        history,
        converged,
        contraction_bound,
        geometric_decay_ok,
    })
}

/// Input/output transport distances of two token sequences pushed through the
/// same depth of transformer flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequencePerturbation {
    pub input_w1: f64,
    pub output_w1: f64,
    /// `output / input`; absent when the inputs are indistinguishable as
    /// measures, in which case determinism forces the outputs to coincide.
    pub amplification: Option<f64>,
}

/// Measures how a perturbation of the token multiset (deletion, negation,
/// substitution — sequences may differ in length) is amplified by `depth`
/// steps of the flow.
pub fn sequence_perturbation(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    spec: &TransformerSpec,
    depth: usize,
) -> Result<SequencePerturbation> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let mu = DiscreteMeasure::empirical(a.to_vec())?;
    let nu = DiscreteMeasure::empirical(b.to_vec())?;
    let (input_w1, _) = w1_exact(&mu, &nu)?;

    let mut flow_a = mu;
    let mut flow_b = nu;
    for _ in 0..depth {
        flow_a = transformer_step(&flow_a, spec)?;
        flow_b = transformer_step(&flow_b, spec)?;
    }
    let (output_w1, _) = w1_exact(&flow_a, &flow_b)?;

    let amplification = if input_w1 < 1e-12 {
        None
    } else {
        Some(output_w1 / input_w1)
    };
    Ok(SequencePerturbation {
        input_w1,
        output_w1,
        amplification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::LookupMap;
    use crate::measure::bounding_box_of_points;

    fn gaussian_identity() -> AttentionSpec {
        AttentionSpec {
            potential: Potential::Gaussian,
            lookup: LookupMap::Identity,
        }
    }

    #[test]
    fn identical_neighborhoods_give_zero_gap() {
        let points: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, -(i as f64)]).collect();
        let bx = bounding_box_of_points(&[points.as_slice()], 0.1).unwrap();
        let idx = [0usize, 1, 2];
        let gap = neighborhood_gap(&points, 1, &idx, &idx, &gaussian_identity(), &bx).unwrap();
        assert_eq!(gap.lhs, 0.0);
        assert_eq!(gap.rhs, 0.0);
        assert_eq!(gap.ratio, 0.0);
    }

    #[test]
    fn neighborhood_gap_bounded_on_swap() {
        let points: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![0.4, 0.2],
            vec![-0.3, 0.5],
            vec![0.8, -0.1],
            vec![0.1, 0.9],
        ];
        let bx = bounding_box_of_points(&[points.as_slice()], 0.1).unwrap();
        let gap = neighborhood_gap(
            &points,
            0,
            &[0, 1, 2],
            &[0, 1, 3],
            &gaussian_identity(),
            &bx,
        )
        .unwrap();
        assert!(gap.lhs <= gap.rhs + 1e-9, "{gap:?}");
        assert!(gap.neighborhood_w1 > 0.0);

        // cross-check: lhs equals the W1 between the two Dirac outputs
        let mu = DiscreteMeasure::empirical(vec![
            points[0].clone(),
            points[1].clone(),
            points[2].clone(),
        ])
        .unwrap();
        let mu_hat = DiscreteMeasure::empirical(vec![
            points[0].clone(),
            points[1].clone(),
            points[3].clone(),
        ])
        .unwrap();
        let d1 = DiscreteMeasure::dirac(
            attention_kernel_apply(&points[0], &mu, &gaussian_identity()).unwrap(),
        )
        .unwrap();
        let d2 = DiscreteMeasure::dirac(
            attention_kernel_apply(&points[0], &mu_hat, &gaussian_identity()).unwrap(),
        )
        .unwrap();
        let (w1, _) = w1_exact(&d1, &d2).unwrap();
        assert!((w1 - gap.lhs).abs() <= 1e-10);
    }

    #[test]
    fn neighborhood_gap_seeded_suite() {
        // 8-point sets, one neighbor swapped, Gaussian + identity lookup
        use crate::rng::seeded;
        use rand::Rng;
        for trial in 0..100u64 {
            let mut rng = seeded(31, trial);
            let points: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..2).map(|_| rng.random_range(-1.0..=1.0)).collect())
                .collect();
            let bx = bounding_box_of_points(&[points.as_slice()], 0.1).unwrap();
            let neighborhood = [0usize, 1, 2, 3];
            let alternative = [0usize, 1, 2, 4];
            let gap = neighborhood_gap(
                &points,
                0,
                &neighborhood,
                &alternative,
                &gaussian_identity(),
                &bx,
            )
            .unwrap();
            assert!(
                gap.lhs <= gap.rhs + 1e-9,
                "trial {trial}: lhs {} rhs {}",
                gap.lhs,
                gap.rhs
            );
        }
    }

    #[test]
    fn neighborhood_validation() {
        let points = vec![vec![0.0], vec![1.0]];
        let bx = bounding_box_of_points(&[points.as_slice()], 0.0).unwrap();
        assert!(matches!(
            neighborhood_gap(&points, 0, &[1], &[0, 1], &gaussian_identity(), &bx),
            Err(Error::TNotInNeighborhood(0))
        ));
        assert!(matches!(
            neighborhood_gap(&points, 0, &[0, 7], &[0], &gaussian_identity(), &bx),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn single_atom_identity_is_exact_fixed_point() {
        let mu = DiscreteMeasure::dirac(vec![0.7, -0.2]).unwrap();
        let spec = TransformerSpec::single_head(gaussian_identity(), 2);
        let result = fixed_point_iterate(&mu, &spec, 1e-8, 50).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
        assert_eq!(result.history, vec![0.0]);
    }

    #[test]
    fn coincident_atoms_behave_as_single_atom() {
        let mu = DiscreteMeasure::empirical(vec![vec![0.5], vec![0.5]]).unwrap();
        let spec = TransformerSpec::single_head(gaussian_identity(), 1);
        let result = fixed_point_iterate(&mu, &spec, 1e-8, 50).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn contractive_scale_converges_geometrically() {
        let n = 4;
        let d = 2;
        let base = bound_gaussian_unbounded(n, n, d, 1.0);
        let alpha = 0.5 / base;
        let spec = TransformerSpec::single_head(
            AttentionSpec {
                potential: Potential::Gaussian,
                lookup: LookupMap::Scale { alpha },
            },
            d,
        );
        let mu = DiscreteMeasure::empirical(vec![
            vec![1.0, -0.5],
            vec![0.2, 0.8],
            vec![-1.2, 0.1],
            vec![0.4, 0.4],
        ])
        .unwrap();
        let result = fixed_point_iterate(&mu, &spec, 1e-10, 200).unwrap();
        assert!(result.converged, "history {:?}", result.history);
        let q = result.contraction_bound.unwrap();
        assert!(q < 1.0);
        assert_eq!(result.geometric_decay_ok, Some(true));
    }

    #[test]
    fn iteration_is_bitwise_deterministic() {
        let mu = DiscreteMeasure::empirical(vec![vec![0.3, 0.1], vec![-0.4, 0.9]]).unwrap();
        let spec = TransformerSpec::single_head(
            AttentionSpec {
                potential: Potential::Gaussian,
                lookup: LookupMap::Scale { alpha: 0.01 },
            },
            2,
        );
        let a = fixed_point_iterate(&mu, &spec, 1e-9, 100).unwrap();
        let b = fixed_point_iterate(&mu, &spec, 1e-9, 100).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.final_points, b.final_points);
    }

    #[test]
    fn permuted_sequences_are_identical_as_measures() {
        let a = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]];
        let b = vec![a[2].clone(), a[0].clone(), a[1].clone()];
        let spec = TransformerSpec::single_head(gaussian_identity(), 2);
        let out = sequence_perturbation(&a, &b, &spec, 3).unwrap();
        assert_eq!(out.input_w1, 0.0);
        assert!(out.output_w1 <= 1e-9);
        assert!(out.amplification.is_none());
    }

    #[test]
    fn deletion_amplification_within_composed_bound() {
        // one deleted token; the per-step unbounded constant composes over
        // depth and caps the observed amplification
        use crate::rng::seeded;
        use rand::Rng;
        let depth = 3usize;
        for trial in 0..100u64 {
            let mut rng = seeded(77, trial);
            let n = rng.random_range(2..=8usize);
            let d = rng.random_range(1..=3usize);
            let a: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.5..=1.5)).collect())
                .collect();
            let b: Vec<Vec<f64>> = a[..n - 1].to_vec();
            let spec = TransformerSpec::single_head(gaussian_identity(), d);
            let out = sequence_perturbation(&a, &b, &spec, depth).unwrap();
            let Some(amplification) = out.amplification else {
                continue;
            };
            let per_step = bound_gaussian_unbounded(n, n - 1, d, 1.0);
            assert!(
                amplification <= per_step.powi(depth as i32) + 1e-9,
                "trial {trial}: {amplification} vs {per_step}^{depth}"
            );
        }
    }

    #[test]
    fn negation_amplification_regression_baseline() {
        // sign-flip of one token; deterministic, recorded as a baseline
        let a = vec![
            vec![0.25, -0.5],
            vec![1.0, 0.75],
            vec![-0.4, 0.3],
            vec![0.6, -0.9],
        ];
        let mut b = a.clone();
        for coordinate in &mut b[1] {
            *coordinate = -*coordinate;
        }
        let spec = TransformerSpec::single_head(gaussian_identity(), 2);
        let out = sequence_perturbation(&a, &b, &spec, 4).unwrap();
        assert!((out.input_w1 - 0.875).abs() <= 1e-12);
        let amplification = out.amplification.unwrap();
        let baseline = 0.8493426570495994;
        assert!(
            (amplification - baseline).abs() <= 1e-9,
            "recorded {amplification}"
        );
    }

    #[test]
    fn deletion_has_finite_amplification() {
        let a = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]];
        let b = vec![a[0].clone(), a[1].clone()];
        let spec = TransformerSpec::single_head(gaussian_identity(), 2);
        let out = sequence_perturbation(&a, &b, &spec, 2).unwrap();
        assert!(out.input_w1 > 0.0);
        assert!(out.amplification.is_some());
        // symmetry in the two sequences
        let rev = sequence_perturbation(&b, &a, &spec, 2).unwrap();
        assert!((out.input_w1 - rev.input_w1).abs() <= 1e-9);
        assert!((out.output_w1 - rev.output_w1).abs() <= 1e-9);
    }
}
