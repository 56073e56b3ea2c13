//! The acceptance criteria, each runnable on its own. Trial counts and
//! tolerances are pinned here; the suite runner and the acceptance test
//! target both execute this list.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::applications::{composed_contraction_bound, fixed_point_iterate};
use crate::attention::{
    attention_classical, attention_kernel_apply, particle_flow, self_attention_step,
    transformer_step, Activation, AttentionSpec, FfnLayer, Head, TransformerSpec,
};
use crate::entropy::{
    expfam_project, kl, maxent_solve, maxent_verify, smoothed_projection_experiment, MaxEntProblem,
};
use crate::error::Result;
use crate::kernels::{LookupMap, Potential};
use crate::measure::{l1_distance, DiscreteMeasure};
use crate::regularity::bound_gaussian_unbounded;
use crate::regularity::{
    empirical_ratio, evaluate_pair, ratio_lemma_max, AuditMode, PairData, TrialConfig, AUDIT_TOL,
};
use crate::rng::seeded;
use crate::suite::{LookupFamily, PotentialFamily, SuiteConfig};
use crate::transport::{check_tensorization, w1_assignment, w1_exact};

pub struct CriterionOutcome {
    pub passed: bool,
    pub details: serde_json::Value,
}

pub struct Criterion {
    pub name: &'static str,
    pub asserted: bool,
    pub run: fn(&SuiteConfig) -> Result<CriterionOutcome>,
}

/// Every acceptance criterion, in report order.
pub fn all() -> Vec<Criterion> {
    vec![
        Criterion {
            name: "01_equivalence",
            asserted: true,
            run: equivalence,
        },
        Criterion {
            name: "02_discrete_recovery",
            asserted: true,
            run: discrete_recovery,
        },
        Criterion {
            name: "03_transport_metric",
            asserted: true,
            run: transport_metric,
        },
        Criterion {
            name: "04_maxent",
            asserted: true,
            run: maxent,
        },
        Criterion {
            name: "05_kl_projections",
            asserted: true,
            run: kl_projections,
        },
        Criterion {
            name: "06_query_lipschitz",
            asserted: true,
            run: query_lipschitz,
        },
        Criterion {
            name: "07_gaussian_unbounded",
            asserted: true,
            run: gaussian_unbounded,
        },
        Criterion {
            name: "08_ratio_lemma",
            asserted: true,
            run: ratio_lemma,
        },
        Criterion {
            name: "09_fixed_point",
            asserted: true,
            run: fixed_point,
        },
        Criterion {
            name: "10_permutation_tensorization",
            asserted: true,
            run: permutation_tensorization,
        },
        Criterion {
            name: "11_degenerate_probe",
            asserted: true,
            run: degenerate_probe,
        },
    ]
}

fn stream(master: u64, criterion: u64, trial: usize) -> ChaCha8Rng {
    seeded(master, (criterion << 32) | trial as u64)
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

fn normal_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z
                })
                .collect()
        })
        .collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| rng.random_range(-scale..=scale))
                .collect()
        })
        .collect()
}

fn random_potential(rng: &mut ChaCha8Rng, family: usize, d: usize) -> Potential {
    match family % 4 {
        0 => Potential::ExpDot {
            scale: rng.random_range(0.3..=1.5),
        },
        1 => {
            let dp = (d / 2).max(1);
            Potential::ScaledDotProjected {
                wq: random_matrix(rng, dp, d, 0.7),
                wk: random_matrix(rng, dp, d, 0.7),
            }
        }
        2 => Potential::Gaussian,
        _ => Potential::Constant {
            c: rng.random_range(0.5..=3.0),
        },
    }
}

fn random_base_lookup(rng: &mut ChaCha8Rng, kind: usize, d: usize) -> LookupMap {
    match kind % 3 {
        0 => LookupMap::Identity,
        1 => LookupMap::Linear {
            wv: random_matrix(rng, d, d, 0.6),
        },
        _ => LookupMap::Scale {
            alpha: rng.random_range(-1.2..=1.2),
        },
    }
}

/// Criterion 1: the classical matrix path and the measure-kernel path
/// coincide for plain attention, self-attention, and the multi-head
/// transformer, to 1e-10 over 1000 seeded instances.
fn equivalence(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const TRIALS: usize = 1000;
    const TOL: f64 = 1e-10;
    let mut max_dev = 0.0_f64;
    for trial in 0..TRIALS {
        let mut rng = stream(config.master_seed, 1, trial);
        let d = rng.random_range(1..=8);
        let n_queries = rng.random_range(1..=16);
        let n_keys = rng.random_range(1..=16);
        let potential = random_potential(&mut rng, trial, d);
        let lookup = random_base_lookup(&mut rng, trial / 4, d);
        let spec = AttentionSpec {
            potential: potential.clone(),
            lookup: lookup.clone(),
        };

        // Cross-attention: distinct queries, keys and values; the kernel path
        // realizes the key-value correspondence as an exact-match table.
        let queries = uniform_points(&mut rng, n_queries, d);
        let keys = uniform_points(&mut rng, n_keys, d);
        let values = uniform_points(&mut rng, n_keys, d);
        let classical = attention_classical(&queries, &keys, &values, &spec)?;
        let images: Vec<Vec<f64>> = values
            .iter()
            .map(|v| lookup.apply(v))
            .collect::<Result<_>>()?;
        let table_spec = AttentionSpec {
            potential: potential.clone(),
            lookup: LookupMap::Table {
                keys: keys.clone(),
                values: images,
            },
        };
        let key_measure = DiscreteMeasure::empirical(keys.clone())?;
        for (q, reference) in queries.iter().zip(&classical) {
            let kernel = attention_kernel_apply(q, &key_measure, &table_spec)?;
            max_dev = max_dev.max(l1_inf(&kernel, reference));
        }

        // Self-attention: the lookup acts on the attended configuration
        // directly in both paths.
        let x = uniform_points(&mut rng, n_keys, d);
        let classical_self = attention_classical(&x, &x, &x, &spec)?;
        let kernel_self = self_attention_step(&DiscreteMeasure::empirical(x.clone())?, &spec)?;
        for (reference, atom) in classical_self.iter().zip(kernel_self.points()) {
            max_dev = max_dev.max(l1_inf(atom, reference));
        }

        // Transformer with one or two heads and an optional relu layer.
        let n_heads = 1 + trial % 2;
        let heads: Vec<Head> = (0..n_heads)
            .map(|h| Head {
                attention: AttentionSpec {
                    potential: random_potential(&mut rng, trial + h, d),
                    lookup: random_base_lookup(&mut rng, trial + h, d),
                },
                output: random_matrix(&mut rng, d, d, 0.5),
            })
            .collect();
        let ffn = if trial % 3 == 0 {
            vec![FfnLayer {
                weight: random_matrix(&mut rng, d, d, 0.5),
                bias: (0..d).map(|_| rng.random_range(-0.3..=0.3)).collect(),
                activation: Activation::Relu,
            }]
        } else {
            Vec::new()
        };
        let tspec = TransformerSpec {
            heads: heads.clone(),
            ffn,
        };
        let mu = DiscreteMeasure::empirical(x.clone())?;
        let stepped = transformer_step(&mu, &tspec)?;
        for (i, xi) in x.iter().enumerate() {
            let mut combined = vec![0.0_f64; d];
            for head in &heads {
                let y = attention_classical(std::slice::from_ref(xi), &x, &x, &head.attention)?;
                let projected = matvec(&head.output, &y[0]);
                for (c, p) in combined.iter_mut().zip(&projected) {
                    *c += p;
                }
            }
            let reference = tspec.apply_ffn(&combined)?;
            max_dev = max_dev.max(l1_inf(stepped.point(i), &reference));
        }
    }
    Ok(CriterionOutcome {
        passed: max_dev <= TOL,
        details: json!({ "trials": TRIALS, "max_deviation": max_dev, "tolerance": TOL }),
    })
}

fn l1_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Criterion 2: the stochastic-matrix formulation matches the kernel path to
/// 1e-10 on 200 seeded instances.
fn discrete_recovery(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const TRIALS: usize = 200;
    const TOL: f64 = 1e-10;
    let mut max_dev = 0.0_f64;
    for trial in 0..TRIALS {
        let mut rng = stream(config.master_seed, 2, trial);
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=8);
        let n_queries = rng.random_range(1..=5);
        let queries = uniform_points(&mut rng, n_queries, d);
        let keys = uniform_points(&mut rng, n, d);
        let values = uniform_points(&mut rng, n, d);
        let dev = crate::attention::discrete_recovery_check(
            &queries,
            &keys,
            &values,
            &Potential::ExpDot { scale: 1.0 },
        )?;
        max_dev = max_dev.max(dev);
    }
    // one-hot query against orthonormal keys as a closed-form spot check
    let eye: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let dev = crate::attention::discrete_recovery_check(
        &[eye[0].clone()],
        &eye,
        &eye,
        &Potential::ExpDot { scale: 1.0 },
    )?;
    max_dev = max_dev.max(dev);
    Ok(CriterionOutcome {
        passed: max_dev <= TOL,
        details: json!({ "trials": TRIALS, "max_deviation": max_dev, "tolerance": TOL }),
    })
}

/// Criterion 3: metric axioms with dual certificates on 1000 seeded triples,
/// assignment agreement on the uniform equal-size cases, and exact Dirac
/// distances.
fn transport_metric(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const TRIALS: usize = 1000;
    const TOL: f64 = 1e-9;
    let mut worst_symmetry = 0.0_f64;
    let mut worst_triangle = 0.0_f64;
    let mut worst_assignment = 0.0_f64;
    let mut identity_ok = true;
    let mut dirac_ok = true;
    for trial in 0..TRIALS {
        let mut rng = stream(config.master_seed, 3, trial);
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=10);
        let m = rng.random_range(1..=10);
        let mu = DiscreteMeasure::empirical(uniform_points(&mut rng, n, d))?;
        let nu = DiscreteMeasure::empirical(uniform_points(&mut rng, n, d))?;
        let rho = if trial % 2 == 0 {
            DiscreteMeasure::empirical(uniform_points(&mut rng, m, d))?
        } else {
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..=1.0)).collect();
            let total: f64 = raw.iter().sum();
            DiscreteMeasure::new(
                uniform_points(&mut rng, m, d),
                raw.into_iter().map(|w| w / total).collect(),
            )?
        };

        let (ab, plan) = w1_exact(&mu, &nu)?;
        plan.verify(&mu, &nu)?;
        let (ba, _) = w1_exact(&nu, &mu)?;
        worst_symmetry = worst_symmetry.max((ab - ba).abs());

        if w1_exact(&mu, &mu)?.0 != 0.0 {
            identity_ok = false;
        }

        let (ar, _) = w1_exact(&mu, &rho)?;
        let (br, _) = w1_exact(&nu, &rho)?;
        worst_triangle = worst_triangle.max(ar - (ab + br));

        let assigned = w1_assignment(&mu, &nu)?;
        worst_assignment = worst_assignment.max((assigned - ab).abs());

        // Dirac distances are bit-exact l1 distances
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let dx = DiscreteMeasure::dirac(x.clone())?;
        let dy = DiscreteMeasure::dirac(y.clone())?;
        if w1_exact(&dx, &dy)?.0 != l1_distance(&x, &y) {
            dirac_ok = false;
        }
    }
    let passed = worst_symmetry <= TOL
        && worst_triangle <= TOL
        && worst_assignment <= TOL
        && identity_ok
        && dirac_ok;
    Ok(CriterionOutcome {
        passed,
        details: json!({
            "trials": TRIALS,
            "worst_symmetry": worst_symmetry,
            "worst_triangle_violation": worst_triangle,
            "worst_assignment_gap": worst_assignment,
            "identity_exact": identity_ok,
            "dirac_exact": dirac_ok,
        }),
    })
}

/// Criterion 4: the max-entropy solver on 200 seeded feasible problems —
/// residuals, Gibbs reconstruction, sampled optimality — plus the logit
/// closed form.
fn maxent(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const TRIALS: usize = 200;
    let mut worst_residual = 0.0_f64;
    let mut worst_reconstruction = 0.0_f64;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_decomposition = 0.0_f64;
    let mut all_hold = true;
    for trial in 0..TRIALS {
        let mut rng = stream(config.master_seed, 4, trial);
        let n = rng.random_range(2..=20);
        let l = rng.random_range(1..=4);
        let points = uniform_points(&mut rng, n, 2);
        let base = if trial % 2 == 0 {
            DiscreteMeasure::empirical(points)?
        } else {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=1.5)).collect();
            let total: f64 = raw.iter().sum();
            DiscreteMeasure::new(points, raw.into_iter().map(|w| w / total).collect())?
        };
        let features = random_matrix(&mut rng, l, n, 1.0);
        // plant a multiplier and aim at its Gibbs moment: strictly feasible
        let planted: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let scores: Vec<f64> = (0..n)
            .map(|j| base.weight(j).ln() + (0..l).map(|r| planted[r] * features[r][j]).sum::<f64>())
            .collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= z;
        }
        let target: Vec<f64> = (0..l)
            .map(|r| (0..n).map(|j| w[j] * features[r][j]).sum())
            .collect();
        let problem = MaxEntProblem {
            base,
            features,
            target,
        };
        let sol = maxent_solve(&problem, 1e-10, 100)?;
        worst_residual = worst_residual.max(sol.residual_inf);

        // Gibbs reconstruction from the returned multiplier
        let recon: Vec<f64> = {
            let scores: Vec<f64> = (0..problem.base.len())
                .map(|j| {
                    let b = problem.base.weight(j);
                    if b > 0.0 {
                        b.ln()
                            + (0..problem.target.len())
                                .map(|r| sol.lambda[r] * problem.features[r][j])
                                .sum::<f64>()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut w: Vec<f64> = scores
                .iter()
                .map(|s| if s.is_finite() { (s - max).exp() } else { 0.0 })
                .collect();
            let z = crate::measure::stable_sum(&mut w.clone());
            for wi in &mut w {
                *wi /= z;
            }
            w
        };
        for (a, b) in recon.iter().zip(&sol.solution_weights) {
            worst_reconstruction = worst_reconstruction.max((a - b).abs());
        }

        let verify = maxent_verify(&problem, &sol, 500, config.master_seed ^ trial as u64)?;
        if !verify.holds {
            all_hold = false;
        }
        // the entropy decomposition holds up to the solver's own certified
        // residual scaled by the multiplier
        let lambda_l1: f64 = sol.lambda.iter().map(|v| v.abs()).sum();
        let decomposition_allowance = 1e-9 + lambda_l1 * (sol.residual_inf + 1e-9);
        if verify.decomposition_max_err > decomposition_allowance {
            all_hold = false;
        }
        worst_decomposition = worst_decomposition.max(verify.decomposition_max_err);
        worst_gap = worst_gap.max(verify.worst_gap);
    }

    // logit closed form
    let e = std::f64::consts::E;
    let logit_problem = MaxEntProblem {
        base: DiscreteMeasure::empirical(vec![vec![0.0], vec![1.0]])?,
        features: vec![vec![0.0, 1.0]],
        target: vec![e / (1.0 + e)],
    };
    let logit = maxent_solve(&logit_problem, 1e-12, 100)?;
    let logit_err = (logit.lambda[0] - 1.0).abs();

    let passed =
        worst_residual <= 1e-8 && worst_reconstruction <= 1e-12 && all_hold && logit_err <= 1e-6;
    Ok(CriterionOutcome {
        passed,
        details: json!({
            "trials": TRIALS,
            "worst_residual": worst_residual,
            "worst_gibbs_reconstruction": worst_reconstruction,
            "worst_entropy_gap": worst_gap,
            "worst_decomposition_err": worst_decomposition,
            "logit_lambda_error": logit_err,
        }),
    })
}

/// Criterion 5: exponential-family projection round-trips a planted
/// parameter and beats a 41-point parameter grid; the smoothed projection
/// experiment lands near the mean.
fn kl_projections(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const TRIALS: usize = 50;
    let mut worst_roundtrip = 0.0_f64;
    let mut grid_beaten = true;
    for trial in 0..TRIALS {
        let mut rng = stream(config.master_seed, 5, trial);
        let d = 1 + trial % 2;
        let grid: Vec<Vec<f64>> = if d == 1 {
            let k = rng.random_range(5..=9);
            (0..k)
                .map(|i| {
                    vec![i as f64 / (k - 1) as f64 * 2.0 - 1.0 + rng.random_range(-0.05..=0.05)]
                })
                .collect()
        } else {
            let mut pts = Vec::new();
            for i in 0..3 {
                for j in 0..3 {
                    pts.push(vec![
                        i as f64 - 1.0 + rng.random_range(-0.1..=0.1),
                        j as f64 - 1.0 + rng.random_range(-0.1..=0.1),
                    ]);
                }
            }
            pts
        };
        let theta0: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let scores: Vec<f64> = grid
            .iter()
            .map(|g| g.iter().zip(&theta0).map(|(x, t)| x * t).sum())
            .collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= z;
        }
        let mu = DiscreteMeasure::new(grid.clone(), w)?;
        let projection = expfam_project(&mu, &grid)?;
        for (a, b) in projection.theta.iter().zip(&theta0) {
            worst_roundtrip = worst_roundtrip.max((a - b).abs());
        }

        // the projection beats a 41-point grid along every parameter axis
        let nu_star = projection.projected(&grid)?;
        let kl_star = kl(&mu, &nu_star)?;
        for axis in 0..d {
            for step in 0..41 {
                let mut theta = projection.theta.clone();
                theta[axis] += (step as f64 - 20.0) / 20.0;
                let scores: Vec<f64> = grid
                    .iter()
                    .map(|g| g.iter().zip(&theta).map(|(x, t)| x * t).sum())
                    .collect();
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut w: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                let z: f64 = w.iter().sum();
                for wi in &mut w {
                    *wi /= z;
                }
                let nu_theta = DiscreteMeasure::new(grid.clone(), w)?;
                if kl(&mu, &nu_theta)? < kl_star - AUDIT_TOL {
                    grid_beaten = false;
                }
            }
        }
    }

    let mu = DiscreteMeasure::empirical(vec![vec![-1.0], vec![1.0]])?;
    let steps =
        smoothed_projection_experiment(&mu, &[2.0, 1.0, 0.5, 0.25], 100_000, config.master_seed)?;
    let final_distance = steps.last().map(|s| s.distance_to_mean).unwrap_or(f64::NAN);

    let passed = worst_roundtrip <= 1e-8 && grid_beaten && final_distance <= 0.05;
    Ok(CriterionOutcome {
        passed,
        details: json!({
            "trials": TRIALS,
            "worst_roundtrip": worst_roundtrip,
            "grid_minimum_at_solution": grid_beaten,
            "smoothed_final_distance": final_distance,
            "smoothed_steps": steps.iter().map(|s| json!({
                "sigma": s.sigma,
                "distance_to_mean": s.distance_to_mean,
                "kl_estimate": s.kl_estimate,
                "kl_stderr": s.kl_stderr,
            })).collect::<Vec<_>>(),
        }),
    })
}

/// Criterion 6: the query-Lipschitz corollary holds with zero violations on
/// 1000 seeded instances with Gaussian and bilinear potentials. The config's
/// family selectors narrow the rotation; the defaults cover everything the
/// criterion pins.
fn query_lipschitz(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const TRIALS: usize = 1000;
    let mut potentials: Vec<PotentialFamily> = config
        .potentials
        .iter()
        .copied()
        .filter(|f| matches!(f, PotentialFamily::Gaussian | PotentialFamily::ExpDot))
        .collect();
    if potentials.is_empty() {
        potentials = vec![PotentialFamily::Gaussian, PotentialFamily::ExpDot];
    }
    let lookups = if config.lookups.is_empty() {
        super::default_lookups()
    } else {
        config.lookups.clone()
    };
    let mut violations = 0usize;
    let mut degenerate = 0usize;
    let mut worst_margin = 0.0_f64;
    for trial in 0..TRIALS {
        let mut rng = stream(config.master_seed, 6, trial);
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=16);
        let potential = match potentials[trial % potentials.len()] {
            PotentialFamily::Gaussian => Potential::Gaussian,
            _ => Potential::ExpDot {
                scale: rng.random_range(0.5..=1.5),
            },
        };
        let keys = uniform_points(&mut rng, n, d);
        let lookup = match lookups[trial % lookups.len()] {
            LookupFamily::Identity => LookupMap::Identity,
            LookupFamily::Scale => LookupMap::Scale {
                alpha: rng.random_range(-1.0..=1.0),
            },
            LookupFamily::Linear => LookupMap::Linear {
                wv: random_matrix(&mut rng, d, d, 0.6),
            },
            LookupFamily::Table => LookupMap::Table {
                keys: keys.clone(),
                values: uniform_points(&mut rng, n, d),
            },
        };
        let spec = AttentionSpec { potential, lookup };
        let pair = PairData::Query {
            q1: uniform_points(&mut rng, 1, d).pop().unwrap(),
            q2: uniform_points(&mut rng, 1, d).pop().unwrap(),
            keys,
        };
        match evaluate_pair(&spec, AuditMode::Query, &pair, config.box_padding)? {
            None => degenerate += 1,
            Some(eval) => {
                if eval.observed > eval.theoretical + AUDIT_TOL {
                    violations += 1;
                }
                if eval.theoretical > 0.0 {
                    worst_margin = worst_margin.max(eval.observed / eval.theoretical);
                }
            }
        }
    }
    Ok(CriterionOutcome {
        passed: violations == 0,
        details: json!({
            "trials": TRIALS,
            "violations": violations,
            "degenerate": degenerate,
            "worst_observed_over_bound": worst_margin,
        }),
    })
}

/// Criterion 7: the unbounded Gaussian self-attention bound, including
/// cross-length pairs, holds with zero violations on 1000 seeded pairs.
fn gaussian_unbounded(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const TRIALS: usize = 1000;
    let mut violations = 0usize;
    let mut degenerate = 0usize;
    let mut worst_margin = 0.0_f64;
    let mut cross_length = 0usize;
    for trial in 0..TRIALS {
        let mut rng = stream(config.master_seed, 7, trial);
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=12);
        let m = rng.random_range(1..=12);
        if n != m {
            cross_length += 1;
        }
        let lookup = if trial % 3 == 0 {
            LookupMap::Scale {
                alpha: rng.random_range(0.2..=1.5),
            }
        } else {
            LookupMap::Identity
        };
        let spec = AttentionSpec {
            potential: Potential::Gaussian,
            lookup,
        };
        let pair = PairData::Measures {
            a: normal_points(&mut rng, n, d),
            b: normal_points(&mut rng, m, d),
            query: None,
        };
        match evaluate_pair(
            &spec,
            AuditMode::GaussianUnbounded,
            &pair,
            config.box_padding,
        )? {
            None => degenerate += 1,
            Some(eval) => {
                if eval.observed > eval.theoretical + AUDIT_TOL {
                    violations += 1;
                }
                worst_margin = worst_margin.max(eval.observed / eval.theoretical);
            }
        }
    }
    Ok(CriterionOutcome {
        passed: violations == 0,
        details: json!({
            "trials": TRIALS,
            "violations": violations,
            "degenerate": degenerate,
            "cross_length_pairs": cross_length,
            "worst_observed_over_bound": worst_margin,
        }),
    })
}

/// Criterion 8: the one-variable ratio maximization stays under its
/// closed-form bound for the pinned sizes.
fn ratio_lemma(_config: &SuiteConfig) -> Result<CriterionOutcome> {
    let sizes = [1u64, 2, 10, 100, 1000, 1_000_000];
    let reports: Vec<_> = sizes.iter().map(|&n| ratio_lemma_max(n)).collect();
    let passed = reports.iter().all(|r| r.holds);
    Ok(CriterionOutcome {
        passed,
        details: json!({
            "cases": reports.iter().map(|r| json!({
                "n": r.n,
                "sup_estimate": r.sup_estimate,
                "bound": r.bound,
                "holds": r.holds,
            })).collect::<Vec<_>>(),
        }),
    })
}

/// Criterion 9: with a scale lookup chosen so the composed bound is below
/// one, iteration converges from 20 seeded starts with geometric step decay,
/// and all final configurations agree within the Banach radius.
fn fixed_point(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const STARTS: usize = 20;
    const TOL: f64 = 1e-8;
    const MAX_ITER: usize = 500;
    let d = 2usize;
    let n = 5usize;
    let alpha = 0.5 / bound_gaussian_unbounded(n, n, d, 1.0);
    let spec = TransformerSpec::single_head(
        AttentionSpec {
            potential: Potential::Gaussian,
            lookup: LookupMap::Scale { alpha },
        },
        d,
    );
    let q = composed_contraction_bound(&spec, n).expect("gaussian head");
    let mut finals = Vec::new();
    let mut all_converged = true;
    let mut decay_ok = true;
    let mut worst_decay_ratio = 0.0_f64;
    for start in 0..STARTS {
        let mut rng = stream(config.master_seed, 9, start);
        let mu0 = DiscreteMeasure::empirical(uniform_points(&mut rng, n, d))?;
        let result = fixed_point_iterate(&mu0, &spec, TOL, MAX_ITER)?;
        if !result.converged {
            all_converged = false;
        }
        if result.geometric_decay_ok != Some(true) {
            decay_ok = false;
        }
        for window in result.history.windows(2) {
            if window[0] > 1e-13 {
                worst_decay_ratio = worst_decay_ratio.max(window[1] / window[0]);
            }
        }
        finals.push(result.final_measure()?);
    }
    let radius = 2.0 * TOL / (1.0 - q);
    let mut worst_pairwise = 0.0_f64;
    for i in 0..finals.len() {
        for j in (i + 1)..finals.len() {
            worst_pairwise = worst_pairwise.max(w1_exact(&finals[i], &finals[j])?.0);
        }
    }
    let passed =
        all_converged && decay_ok && worst_decay_ratio <= q + AUDIT_TOL && worst_pairwise <= radius;
    Ok(CriterionOutcome {
        passed,
        details: json!({
            "starts": STARTS,
            "contraction_bound": q,
            "alpha": alpha,
            "all_converged": all_converged,
            "worst_decay_ratio": worst_decay_ratio,
            "worst_pairwise_final_w1": worst_pairwise,
            "banach_radius": radius,
        }),
    })
}

/// Criterion 10: permuted inputs give identically permuted trajectories,
/// bitwise, and W1 tensorizes subadditively on seeded product instances.
fn permutation_tensorization(config: &SuiteConfig) -> Result<CriterionOutcome> {
    const PERM_TRIALS: usize = 200;
    const TENSOR_TRIALS: usize = 1000;
    let mut permutation_exact = true;
    for trial in 0..PERM_TRIALS {
        let mut rng = stream(config.master_seed, 10, trial);
        let d = rng.random_range(1..=3);
        let n = rng.random_range(2..=6);
        let points = uniform_points(&mut rng, n, d);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| points[i].clone()).collect();
        let spec = TransformerSpec::single_head(
            AttentionSpec {
                potential: if trial % 2 == 0 {
                    Potential::Gaussian
                } else {
                    Potential::ExpDot { scale: 1.0 }
                },
                lookup: if trial % 3 == 0 {
                    LookupMap::Scale { alpha: 0.7 }
                } else {
                    LookupMap::Identity
                },
            },
            d,
        );
        let base = particle_flow(&DiscreteMeasure::empirical(points)?, &spec, 3)?;
        let shuffled = particle_flow(&DiscreteMeasure::empirical(permuted)?, &spec, 3)?;
        for (step_base, step_shuffled) in base.iter().zip(&shuffled) {
            for (i, &src) in perm.iter().enumerate() {
                if step_shuffled.point(i) != step_base.point(src) {
                    permutation_exact = false;
                }
            }
        }
    }

    let mut tensor_holds = true;
    let mut worst_tensor_gap = f64::NEG_INFINITY;
    for trial in 0..TENSOR_TRIALS {
        let mut rng = stream(config.master_seed, 11, trial);
        let d1 = rng.random_range(1..=2);
        let d2 = rng.random_range(1..=2);
        let make = |rng: &mut ChaCha8Rng, d: usize| -> Result<DiscreteMeasure> {
            let n = rng.random_range(1..=4);
            DiscreteMeasure::empirical(uniform_points(rng, n, d))
        };
        let mu1 = make(&mut rng, d1)?;
        let nu1 = make(&mut rng, d1)?;
        let mu2 = make(&mut rng, d2)?;
        let nu2 = make(&mut rng, d2)?;
        let t = check_tensorization(&mu1, &mu2, &nu1, &nu2)?;
        if !t.holds {
            tensor_holds = false;
        }
        worst_tensor_gap = worst_tensor_gap.max(t.lhs - t.rhs);
    }
    Ok(CriterionOutcome {
        passed: permutation_exact && tensor_holds,
        details: json!({
            "permutation_trials": PERM_TRIALS,
            "permutation_exact": permutation_exact,
            "tensorization_trials": TENSOR_TRIALS,
            "tensorization_holds": tensor_holds,
            "worst_tensorization_gap": worst_tensor_gap,
        }),
    })
}

/// Criterion 11: the constant-potential probe of the measure inequality is
/// executed and recorded as a finding (stated bound zero, observed ratio
/// one) without failing the suite.
fn degenerate_probe(config: &SuiteConfig) -> Result<CriterionOutcome> {
    if !config.potentials.contains(&PotentialFamily::Constant) {
        return Ok(CriterionOutcome {
            passed: true,
            details: json!({
                "skipped": "constant potential not selected in this configuration",
            }),
        });
    }
    let spec = AttentionSpec {
        potential: Potential::Constant { c: 2.0 },
        lookup: LookupMap::Identity,
    };
    let cfg = TrialConfig {
        trials: 50,
        master_seed: config.master_seed,
        hill_climb_steps: 10,
        ..TrialConfig::default()
    };
    let report = empirical_ratio(&spec, AuditMode::Measure, &cfg)?;
    // The probe is expected to violate the stated bound; the criterion
    // passes when the finding matches that expectation and is recorded.
    let finding_as_expected = !report.holds
        && report.theoretical == 0.0
        && (report.empirical_max_ratio - 1.0).abs() <= AUDIT_TOL;
    Ok(CriterionOutcome {
        passed: finding_as_expected,
        details: json!({
            "finding": {
                "bound_name": report.bound_name,
                "theoretical": report.theoretical,
                "empirical_max_ratio": report.empirical_max_ratio,
                "holds": report.holds,
                "asserted": false,
                "note": "constant potentials leave the reweighting fixed while the stated bound vanishes; recorded, not asserted",
            },
            "n_trials": report.n_trials,
        }),
    })
}
