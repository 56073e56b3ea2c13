//! Interaction potentials, the Boltzmann-Gibbs reweighting, lookup
//! pushforwards and the Dirac moment projection — the factorization of
//! attention into maps on discrete measures — together with the closed-form
//! regularity constants of each potential family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix;
use crate::measure::{check_point, BoundingBox, DiscreteMeasure};
use crate::rng::seeded;
use rand::Rng;

/// Exponent guard: evaluations whose exponent exceeds this magnitude in
/// natural-log units are rejected instead of producing Inf or a silent zero.
pub const EXP_GUARD: f64 = 700.0;

/// Global Lipschitz constant of `z -> exp(-z^2)` effects: max of
/// `2 z exp(-z^2)`, attained at `z = 1/sqrt(2)`.
pub fn gaussian_global_lip() -> f64 {
    (2.0_f64 / std::f64::consts::E).sqrt()
}

/// A strictly positive interaction potential `G(x, y) = exp(a(x, y))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Potential {
    /// `exp(scale * <x, y>)`
    ExpDot { scale: f64 },
    /// `exp(<Wq x, Wk y> / sqrt(d'))` with `Wq, Wk` of shape `d' x d`.
    ScaledDotProjected {
        wq: Vec<Vec<f64>>,
        wk: Vec<Vec<f64>>,
    },
    /// `exp(-||x - y||_2^2)`
    Gaussian,
    /// Constant positive potential; only useful for probing degenerate
    /// regimes in the regularity audits.
    Constant { c: f64 },
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::ExpDot { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "exp_dot scale must be positive and finite, got {scale}"
                    )));
                }
            }
            Potential::ScaledDotProjected { wq, wk } => {
                let (rq, cq) = matrix::validate(wq, "wq")?;
                let (rk, ck) = matrix::validate(wk, "wk")?;
                if rq != rk || cq != ck {
                    return Err(Error::DimensionMismatch {
                        context: "wq/wk shapes",
                        expected: rq.max(cq),
                        got: rk.max(ck),
                    });
                }
            }
            Potential::Gaussian => {}
            Potential::Constant { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "constant potential must be positive and finite, got {c}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The exponent `a(x, y)` with `G = exp(a)`.
    pub fn log_eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "potential arguments",
                expected: x.len(),
                got: y.len(),
            });
        }
        let value = match self {
            Potential::ExpDot { scale } => scale * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>(),
            Potential::ScaledDotProjected { wq, wk } => {
                let qx = matrix::matvec(wq, x, "wq projection")?;
                let ky = matrix::matvec(wk, y, "wk projection")?;
                let dp = qx.len() as f64;
                qx.iter().zip(&ky).map(|(a, b)| a * b).sum::<f64>() / dp.sqrt()
            }
            Potential::Gaussian => -x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            Potential::Constant { c } => c.ln(),
        };
        if !value.is_finite() {
            return Err(Error::NonFinite("potential exponent"));
        }
        Ok(value)
    }

    /// `G(x, y)` in linear scale; errors instead of overflowing or
    /// underflowing to a non-positive value.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let log = self.log_eval(x, y)?;
        if log.abs() > EXP_GUARD {
            return Err(Error::Overflow(log));
        }
        Ok(log.exp())
    }
}

/// Normalized weights `w_i exp(l_i) / sum_j w_j exp(l_j)`, computed in log
/// domain with max subtraction so linear-scale formulas that would overflow
/// stay usable. Atoms with zero base weight keep weight zero.
pub fn softmax_weights(logits: &[f64], base: &[f64]) -> Result<Vec<f64>> {
    if logits.len() != base.len() {
        return Err(Error::UnequalSizes {
            left: logits.len(),
            right: base.len(),
        });
    }
    let mut shifted = vec![f64::NEG_INFINITY; base.len()];
    let mut max = f64::NEG_INFINITY;
    for (i, (&l, &w)) in logits.iter().zip(base).enumerate() {
        if !l.is_finite() {
            return Err(Error::NonFinite("softmax logit"));
        }
        if w > 0.0 {
            shifted[i] = w.ln() + l;
            max = max.max(shifted[i]);
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptyInput("softmax base weights"));
    }
    let mut out = vec![0.0; base.len()];
    for (o, s) in out.iter_mut().zip(&shifted) {
        if *s > f64::NEG_INFINITY {
            *o = (s - max).exp();
        }
    }
    // order-canonical normalizer: atom permutations must not perturb weights
    let z = crate::measure::stable_sum(&mut out.clone());
    for o in &mut out {
        *o /= z;
    }
    Ok(out)
}

/// The Boltzmann-Gibbs transformation of `nu` by `G(x, .)`: the support stays
/// put and weight `w_i` becomes `w_i G(x, k_i) / sum_j w_j G(x, k_j)`.
pub fn boltzmann_gibbs(
    potential: &Potential,
    x: &[f64],
    nu: &DiscreteMeasure,
) -> Result<DiscreteMeasure> {
    check_point(x, "query point")?;
    let logits = nu
        .points()
        .iter()
        .map(|k| potential.log_eval(x, k))
        .collect::<Result<Vec<_>>>()?;
    let weights = softmax_weights(&logits, nu.weights())?;
    DiscreteMeasure::new(nu.points().to_vec(), weights)
}

/// A deterministic lookup function with a computable l1 Lipschitz constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LookupMap {
    Identity,
    /// `x -> Wv x` with a square matrix.
    Linear {
        wv: Vec<Vec<f64>>,
    },
    /// `x -> alpha * x`
    Scale {
        alpha: f64,
    },
    /// Exact-match table; every queried point must equal one of the keys.
    Table {
        keys: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
    },
}

impl LookupMap {
    pub fn validate(&self) -> Result<()> {
        match self {
            LookupMap::Identity => Ok(()),
            LookupMap::Linear { wv } => {
                let (r, c) = matrix::validate(wv, "wv")?;
                if r != c {
                    return Err(Error::DimensionMismatch {
                        context: "wv must be square",
                        expected: r,
                        got: c,
                    });
                }
                Ok(())
            }
            LookupMap::Scale { alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::NonFinite("scale lookup factor"));
                }
                Ok(())
            }
            LookupMap::Table { keys, values } => {
                if keys.is_empty() {
                    return Err(Error::EmptyInput("lookup table"));
                }
                if keys.len() != values.len() {
                    return Err(Error::UnequalSizes {
                        left: keys.len(),
                        right: values.len(),
                    });
                }
                for k in keys {
                    check_point(k, "table key")?;
                }
                for v in values {
                    check_point(v, "table value")?;
                }
                for a in 0..keys.len() {
                    for b in (a + 1)..keys.len() {
                        if keys[a] == keys[b] {
                            return Err(Error::KeyCollision);
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            LookupMap::Identity => Ok(x.to_vec()),
            LookupMap::Linear { wv } => matrix::matvec(wv, x, "lookup matrix"),
            LookupMap::Scale { alpha } => Ok(x.iter().map(|v| alpha * v).collect()),
            LookupMap::Table { keys, values } => keys
                .iter()
                .position(|k| k.as_slice() == x)
                .map(|i| values[i].clone())
                .ok_or_else(|| Error::KeyNotFound(x.to_vec())),
        }
    }

    /// Lipschitz constant of the induced map in the 1-norm. Tables take the
    /// max slope over key pairs; a single-key table is constant on its
    /// domain.
    pub fn lip_l1(&self) -> f64 {
        match self {
            LookupMap::Identity => 1.0,
            LookupMap::Linear { wv } => matrix::induced_one_norm(wv),
            LookupMap::Scale { alpha } => alpha.abs(),
            LookupMap::Table { keys, values } => {
                let mut lip = 0.0_f64;
                for a in 0..keys.len() {
                    for b in (a + 1)..keys.len() {
                        let dk: f64 = keys[a]
                            .iter()
                            .zip(&keys[b])
                            .map(|(x, y)| (x - y).abs())
                            .sum();
                        let dv: f64 = values[a]
                            .iter()
                            .zip(&values[b])
                            .map(|(x, y)| (x - y).abs())
                            .sum();
                        if dk > 0.0 {
                            lip = lip.max(dv / dk);
                        }
                    }
                }
                lip
            }
        }
    }
}

/// Pushforward of a measure through a lookup map: atoms move, weights stay,
/// collisions are not merged.
pub fn lookup_push(mu: &DiscreteMeasure, lookup: &LookupMap) -> Result<DiscreteMeasure> {
    lookup.validate()?;
    mu.map_points(|p| lookup.apply(p))
}

/// Moment projection onto Dirac measures: the single atom at the mean.
pub fn project_dirac(mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    DiscreteMeasure::dirac(mu.mean())
}

/// Closed-form regularity constants of a potential over a box domain.
///
/// Lipschitz semi-norms are taken with respect to the 1-norm on inputs (so
/// gradients are measured in the max-norm), matching the l1 ground metric of
/// the transport layer. `conservative` marks families where the extremes are
/// interval bounds rather than attained values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialConstants {
    pub eps: f64,
    pub log_eps: f64,
    pub sup: f64,
    pub lip_first: f64,
    pub lip_second: f64,
    pub conservative: bool,
}

/// Per-coordinate extremes of `x_i * y_i` for `x_i, y_i` ranging over the
/// same interval `[l, u]`; attained at interval endpoints.
fn same_interval_product_range(l: f64, u: f64) -> (f64, f64) {
    let candidates = [l * l, l * u, u * u];
    let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Extremes of `x * y` for `x in [lx, ux]`, `y in [ly, uy]` independent.
fn interval_product_range(lx: f64, ux: f64, ly: f64, uy: f64) -> (f64, f64) {
    let candidates = [lx * ly, lx * uy, ux * ly, ux * uy];
    let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn max_abs_coordinate(bx: &BoundingBox) -> f64 {
    bx.lower
        .iter()
        .zip(&bx.upper)
        .map(|(l, u)| l.abs().max(u.abs()))
        .fold(0.0, f64::max)
}

/// Largest value of `2 z exp(-z^2)` over `0 <= z <= cap`.
fn gaussian_lip_capped(cap: f64) -> f64 {
    let z = cap.min(std::f64::consts::FRAC_1_SQRT_2);
    2.0 * z * (-z * z).exp()
}

/// Closed-form `eps(G)`, `sup G`, and both Lipschitz semi-norms of a
/// potential over `bx`. Bilinear exponents are extremized per coordinate,
/// which reproduces the corner-enumeration value without walking `2^d`
/// corners; the projected dot-product family falls back to interval
/// arithmetic and is flagged `conservative`.
pub fn potential_constants(potential: &Potential, bx: &BoundingBox) -> Result<PotentialConstants> {
    potential.validate()?;
    match potential {
        Potential::Constant { c } => Ok(PotentialConstants {
            eps: *c,
            log_eps: c.ln(),
            sup: *c,
            lip_first: 0.0,
            lip_second: 0.0,
            conservative: false,
        }),
        Potential::Gaussian => {
            let diam2 = bx.diam_l2();
            let log_eps = -diam2 * diam2;
            let lip = gaussian_lip_capped(bx.diam_linf());
            Ok(PotentialConstants {
                eps: log_eps.exp(),
                log_eps,
                sup: 1.0,
                lip_first: lip,
                lip_second: lip,
                conservative: false,
            })
        }
        Potential::ExpDot { scale } => {
            let mut ip_lo = 0.0;
            let mut ip_hi = 0.0;
            for (l, u) in bx.lower.iter().zip(&bx.upper) {
                let (lo, hi) = same_interval_product_range(*l, *u);
                ip_lo += lo;
                ip_hi += hi;
            }
            let log_sup = scale * ip_hi;
            let log_eps = scale * ip_lo;
            if log_sup > EXP_GUARD {
                return Err(Error::Overflow(log_sup));
            }
            let sup = log_sup.exp();
            let lip = scale * max_abs_coordinate(bx) * sup;
            Ok(PotentialConstants {
                eps: log_eps.exp(),
                log_eps,
                sup,
                lip_first: lip,
                lip_second: lip,
                conservative: false,
            })
        }
        Potential::ScaledDotProjected { wq, wk } => {
            let d = bx.dim();
            let (rows, cols) = matrix::validate(wq, "wq")?;
            if cols != d {
                return Err(Error::DimensionMismatch {
                    context: "projection matrix vs box",
                    expected: d,
                    got: cols,
                });
            }
            let scale = 1.0 / (rows as f64).sqrt();
            // b = wq^T wk / sqrt(d'): exponent is x^T b y
            let wqt = matrix::transpose(wq);
            let b: Vec<Vec<f64>> = wqt
                .iter()
                .map(|wq_row| {
                    (0..d)
                        .map(|j| (0..rows).map(|r| wq_row[r] * wk[r][j]).sum::<f64>() * scale)
                        .collect()
                })
                .collect();
            let mut ip_lo = 0.0;
            let mut ip_hi = 0.0;
            for (i, row) in b.iter().enumerate() {
                for (j, &bij) in row.iter().enumerate() {
                    let (lo, hi) =
                        interval_product_range(bx.lower[i], bx.upper[i], bx.lower[j], bx.upper[j]);
                    let scaled = [bij * lo, bij * hi];
                    ip_lo += scaled[0].min(scaled[1]);
                    ip_hi += scaled[0].max(scaled[1]);
                }
            }
            if ip_hi > EXP_GUARD {
                return Err(Error::Overflow(ip_hi));
            }
            let sup = ip_hi.exp();
            // gradient in x is b y * G; row-wise interval extremes are exact
            let row_max = |m: &[Vec<f64>]| -> f64 {
                m.iter()
                    .map(|row| {
                        let (mut lo, mut hi) = (0.0_f64, 0.0_f64);
                        for (j, &mij) in row.iter().enumerate() {
                            let a = mij * bx.lower[j];
                            let b2 = mij * bx.upper[j];
                            lo += a.min(b2);
                            hi += a.max(b2);
                        }
                        lo.abs().max(hi.abs())
                    })
                    .fold(0.0, f64::max)
            };
            let bt = matrix::transpose(&b);
            Ok(PotentialConstants {
                eps: ip_lo.exp(),
                log_eps: ip_lo,
                sup,
                lip_first: row_max(&b) * sup,
                lip_second: row_max(&bt) * sup,
                conservative: true,
            })
        }
    }
}

/// Lipschitz constant of `y -> G(x, y)` for a fixed first argument, used by
/// the neighborhood bound where the anchor point is known.
pub fn potential_pointwise_lip(potential: &Potential, x: &[f64], bx: &BoundingBox) -> Result<f64> {
    potential.validate()?;
    check_point(x, "anchor point")?;
    match potential {
        Potential::Constant { .. } => Ok(0.0),
        Potential::Gaussian => {
            let reach = x
                .iter()
                .zip(bx.lower.iter().zip(&bx.upper))
                .map(|(xi, (l, u))| (xi - l).abs().max((xi - u).abs()))
                .fold(0.0, f64::max);
            Ok(gaussian_lip_capped(reach))
        }
        Potential::ExpDot { scale } => {
            let max_ip: f64 = x
                .iter()
                .zip(bx.lower.iter().zip(&bx.upper))
                .map(|(xi, (l, u))| (xi * l).max(xi * u))
                .sum();
            let log_sup = scale * max_ip;
            if log_sup > EXP_GUARD {
                return Err(Error::Overflow(log_sup));
            }
            let max_abs = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
            Ok(scale * max_abs * log_sup.exp())
        }
        Potential::ScaledDotProjected { .. } => {
            // fall back to the box-uniform constant
            Ok(potential_constants(potential, bx)?.lip_second)
        }
    }
}

/// Sampled lower estimates of both Lipschitz semi-norms over the box, from
/// random pairs plus central finite differences. Estimates must stay below
/// the closed-form constants.
pub fn sampled_lip_estimates(
    potential: &Potential,
    bx: &BoundingBox,
    pairs: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut rng = seeded(seed, 0xA11D);
    let d = bx.dim();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..d)
            .map(|k| rng.random_range(bx.lower[k]..=bx.upper[k]))
            .collect()
    };
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for _ in 0..pairs {
        let x = draw(&mut rng);
        let x2 = draw(&mut rng);
        let y = draw(&mut rng);
        let y2 = draw(&mut rng);
        let dxy: f64 = x.iter().zip(&x2).map(|(a, b)| (a - b).abs()).sum();
        if dxy > 1e-12 {
            let diff = (potential.eval(&x, &y)? - potential.eval(&x2, &y)?).abs();
            first = first.max(diff / dxy);
        }
        let dyy: f64 = y.iter().zip(&y2).map(|(a, b)| (a - b).abs()).sum();
        if dyy > 1e-12 {
            let diff = (potential.eval(&x, &y)? - potential.eval(&x, &y2)?).abs();
            second = second.max(diff / dyy);
        }
        // central differences along a random coordinate
        let k = rng.random_range(0..d);
        let h = 1e-6 * (bx.upper[k] - bx.lower[k]).max(1e-6);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] = (x[k] + h).min(bx.upper[k]);
        xm[k] = (x[k] - h).max(bx.lower[k]);
        let span = xp[k] - xm[k];
        if span > 0.0 {
            let g = ((potential.eval(&xp, &y)? - potential.eval(&xm, &y)?) / span).abs();
            first = first.max(g);
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[k] = (y[k] + h).min(bx.upper[k]);
            ym[k] = (y[k] - h).max(bx.lower[k]);
            let span_y = yp[k] - ym[k];
            if span_y > 0.0 {
                let g2 = ((potential.eval(&x, &yp)? - potential.eval(&x, &ym)?) / span_y).abs();
                second = second.max(g2);
            }
        }
    }
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::bounding_box;

    fn unit_box_1d() -> BoundingBox {
        BoundingBox::new(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn potential_eval_basics() {
        let g = Potential::Gaussian;
        assert_eq!(g.eval(&[0.3, -0.7], &[0.3, -0.7]).unwrap(), 1.0);

        let e = Potential::ExpDot { scale: 1.0 };
        assert_eq!(e.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let got = e.eval(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((got - std::f64::consts::E).abs() <= 1e-12);

        assert!(matches!(
            e.eval(&[1000.0], &[1000.0]),
            Err(Error::Overflow(_))
        ));
        assert!(e.eval(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn boltzmann_gibbs_matches_scalar_oracle() {
        // high-precision scalar oracle: weights (e/(e+1), 1/(e+1))
        let nu = DiscreteMeasure::empirical(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let out = boltzmann_gibbs(&Potential::ExpDot { scale: 1.0 }, &[1.0, 0.0], &nu).unwrap();
        let e = std::f64::consts::E;
        assert!((out.weight(0) - e / (e + 1.0)).abs() <= 1e-12);
        assert!((out.weight(1) - 1.0 / (e + 1.0)).abs() <= 1e-12);
        assert_eq!(out.points(), nu.points());
    }

    #[test]
    fn constant_potential_leaves_measure_unchanged() {
        let nu =
            DiscreteMeasure::new(vec![vec![0.0, 2.0], vec![5.0, -1.0]], vec![0.75, 0.25]).unwrap();
        let out = boltzmann_gibbs(&Potential::Constant { c: 42.0 }, &[9.0, 9.0], &nu).unwrap();
        assert!((out.weight(0) - 0.75).abs() <= 1e-15);
        assert!((out.weight(1) - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn equal_potential_values_keep_weights() {
        // both keys equidistant from the query
        let nu = DiscreteMeasure::new(vec![vec![1.0], vec![-1.0]], vec![0.75, 0.25]).unwrap();
        let out = boltzmann_gibbs(&Potential::Gaussian, &[0.0], &nu).unwrap();
        assert!((out.weight(0) - 0.75).abs() <= 1e-15);
        assert!((out.weight(1) - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn softmax_rescaling_invariance() {
        let logits = [0.3, -2.0, 5.5, 1.0];
        let base = [0.25; 4];
        let w1 = softmax_weights(&logits, &base).unwrap();
        let c = 12345.0_f64.ln();
        let shifted: Vec<f64> = logits.iter().map(|l| l + c).collect();
        let w2 = softmax_weights(&shifted, &base).unwrap();
        for (a, b) in w1.iter().zip(&w2) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn lookup_maps() {
        let mu = DiscreteMeasure::empirical(vec![vec![0.0], vec![1.0]]).unwrap();
        let id = lookup_push(&mu, &LookupMap::Identity).unwrap();
        assert_eq!(id, mu);

        let zero = lookup_push(&mu, &LookupMap::Scale { alpha: 0.0 }).unwrap();
        assert!(zero.points().iter().all(|p| p == &[0.0]));
        assert_eq!(zero.weights(), mu.weights());

        let table = LookupMap::Table {
            keys: vec![vec![0.0], vec![1.0]],
            values: vec![vec![5.0], vec![7.0]],
        };
        let pushed = lookup_push(&mu, &table).unwrap();
        assert_eq!(pushed.points(), &[vec![5.0], vec![7.0]]);

        let missing = lookup_push(&DiscreteMeasure::dirac(vec![2.0]).unwrap(), &table);
        assert!(matches!(missing, Err(Error::KeyNotFound(_))));

        let dup = LookupMap::Table {
            keys: vec![vec![0.0], vec![0.0]],
            values: vec![vec![1.0], vec![2.0]],
        };
        assert!(matches!(dup.validate(), Err(Error::KeyCollision)));
    }

    #[test]
    fn lookup_lipschitz_constants() {
        assert_eq!(LookupMap::Identity.lip_l1(), 1.0);
        assert_eq!(LookupMap::Scale { alpha: -0.5 }.lip_l1(), 0.5);
        let linear = LookupMap::Linear {
            wv: vec![vec![1.0, -4.0], vec![2.0, 0.5]],
        };
        assert_eq!(linear.lip_l1(), 4.5);
        let table = LookupMap::Table {
            keys: vec![vec![0.0], vec![1.0]],
            values: vec![vec![0.0], vec![3.0]],
        };
        assert_eq!(table.lip_l1(), 3.0);
    }

    #[test]
    fn dirac_projection() {
        let d = DiscreteMeasure::dirac(vec![2.0, -1.0]).unwrap();
        assert_eq!(project_dirac(&d).unwrap(), d);

        let m = DiscreteMeasure::empirical(vec![vec![0.0, 0.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(
            project_dirac(&m).unwrap(),
            DiscreteMeasure::dirac(vec![1.0, 2.0]).unwrap()
        );

        let w = DiscreteMeasure::new(vec![vec![0.0], vec![4.0]], vec![0.75, 0.25]).unwrap();
        assert_eq!(
            project_dirac(&w).unwrap(),
            DiscreteMeasure::dirac(vec![1.0]).unwrap()
        );
    }

    #[test]
    fn gaussian_constants_on_unit_interval() {
        // corner evaluation: eps = exp(-1), sup = 1
        let c = potential_constants(&Potential::Gaussian, &unit_box_1d()).unwrap();
        assert_eq!(c.sup, 1.0);
        assert!((c.eps - (-1.0_f64).exp()).abs() <= 1e-15);
        // 1-d maximization oracle of 2 z exp(-z^2) on [0, 1]
        let grid_max = (0..=100_000)
            .map(|i| {
                let z = i as f64 / 100_000.0;
                2.0 * z * (-z * z).exp()
            })
            .fold(0.0, f64::max);
        assert!((c.lip_first - grid_max).abs() <= 1e-9);
        assert!((c.lip_first - gaussian_global_lip()).abs() <= 1e-10);
    }

    #[test]
    fn constant_family_constants() {
        let c = potential_constants(&Potential::Constant { c: 2.0 }, &unit_box_1d()).unwrap();
        assert_eq!(
            (c.eps, c.sup, c.lip_first, c.lip_second),
            (2.0, 2.0, 0.0, 0.0)
        );
    }

    #[test]
    fn expdot_constants_match_corner_enumeration() {
        let bx = BoundingBox::new(vec![-1.0, 0.5], vec![2.0, 1.5]).unwrap();
        let c = potential_constants(&Potential::ExpDot { scale: 0.7 }, &bx).unwrap();
        // brute-force corner pairs
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for xm in 0..4usize {
            for ym in 0..4usize {
                let x: Vec<f64> = (0..2)
                    .map(|k| {
                        if xm & (1 << k) == 0 {
                            bx.lower[k]
                        } else {
                            bx.upper[k]
                        }
                    })
                    .collect();
                let y: Vec<f64> = (0..2)
                    .map(|k| {
                        if ym & (1 << k) == 0 {
                            bx.lower[k]
                        } else {
                            bx.upper[k]
                        }
                    })
                    .collect();
                let ip: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
                hi = hi.max(ip);
                lo = lo.min(ip);
            }
        }
        assert!((c.sup - (0.7 * hi).exp()).abs() <= 1e-12 * c.sup);
        assert!((c.eps - (0.7 * lo).exp()).abs() <= 1e-12);
    }

    #[test]
    fn sampled_estimates_stay_below_closed_form() {
        let bx = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        for potential in [
            Potential::Gaussian,
            Potential::ExpDot { scale: 1.0 },
            Potential::Constant { c: 3.0 },
            Potential::ScaledDotProjected {
                wq: vec![vec![0.6, -0.2], vec![0.1, 0.4]],
                wk: vec![vec![0.3, 0.5], vec![-0.4, 0.2]],
            },
        ] {
            let c = potential_constants(&potential, &bx).unwrap();
            let (f, s) = sampled_lip_estimates(&potential, &bx, 2000, 11).unwrap();
            assert!(f <= c.lip_first * (1.0 + 1e-6) + 1e-12, "{potential:?}");
            assert!(s <= c.lip_second * (1.0 + 1e-6) + 1e-12, "{potential:?}");
        }
    }

    #[test]
    fn pointwise_lip_below_uniform() {
        let a = DiscreteMeasure::empirical(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let bx = bounding_box(&[&a], 0.25).unwrap();
        for potential in [Potential::Gaussian, Potential::ExpDot { scale: 0.5 }] {
            let uniform = potential_constants(&potential, &bx).unwrap().lip_second;
            let pt = potential_pointwise_lip(&potential, &[0.5, 0.5], &bx).unwrap();
            assert!(pt <= uniform + 1e-12);
        }
    }
}
