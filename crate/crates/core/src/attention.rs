//! Attention as nonlinear Markov transport.
//!
//! One attention layer is the composition: Boltzmann-Gibbs reweighting of the
//! key configuration by the query, pushforward through the lookup map, then
//! projection onto Dirac measures. Applied atom-by-atom to a configuration it
//! reproduces self-attention; stacking steps simulates the deterministic
//! interacting particle system of a deep weight-shared encoder.
//!
//! The classical matrix/softmax path is kept alongside the measure path so
//! their agreement can be asserted rather than assumed. Layer normalization
//! and residual connections are deliberately out of scope, which is the chief
//! deviation from production transformers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{boltzmann_gibbs, lookup_push, project_dirac, LookupMap, Potential};
use crate::matrix;
use crate::measure::{check_point, DiscreteMeasure};

/// One attention layer: a potential over queries/keys and a lookup from keys
/// to values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttentionSpec {
    pub potential: Potential,
    pub lookup: LookupMap,
}

impl AttentionSpec {
    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.lookup.validate()
    }
}

/// A single head of a transformer layer: attention plus its output matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Head {
    pub attention: AttentionSpec,
    /// Row-major `d x d` output matrix applied to the head result.
    pub output: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(&self, x: &mut [f64]) {
        if let Activation::Relu = self {
            for v in x.iter_mut() {
                *v = v.max(0.0);
            }
        }
    }
}

/// One affine layer of the feedforward map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FfnLayer {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// A transformer layer: one or more heads combined by summation of their
/// output-matrix images, followed by a pointwise feedforward map. Activations
/// are limited to relu/identity so the layer's Lipschitz constant is exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformerSpec {
    pub heads: Vec<Head>,
    #[serde(default)]
    pub ffn: Vec<FfnLayer>,
}

impl TransformerSpec {
    /// Single head, identity output matrix, no feedforward.
    pub fn single_head(attention: AttentionSpec, dim: usize) -> Self {
        let eye = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            heads: vec![Head {
                attention,
                output: eye,
            }],
            ffn: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads.is_empty() {
            return Err(Error::EmptyInput("transformer heads"));
        }
        let mut dim = None;
        for head in &self.heads {
            head.attention.validate()?;
            let (r, c) = matrix::validate(&head.output, "head output matrix")?;
            if r != c {
                return Err(Error::DimensionMismatch {
                    context: "head output matrix must be square",
                    expected: r,
                    got: c,
                });
            }
            match dim {
                None => dim = Some(r),
                Some(d) if d != r => {
                    return Err(Error::DimensionMismatch {
                        context: "head output matrices",
                        expected: d,
                        got: r,
                    })
                }
                _ => {}
            }
        }
        for layer in &self.ffn {
            let (r, _) = matrix::validate(&layer.weight, "ffn weight")?;
            if layer.bias.len() != r {
                return Err(Error::DimensionMismatch {
                    context: "ffn bias",
                    expected: r,
                    got: layer.bias.len(),
                });
            }
            if layer.bias.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("ffn bias"));
            }
        }
        Ok(())
    }

    /// l1 Lipschitz constant of the feedforward map: product of induced
    /// 1-norms (relu is 1-Lipschitz).
    pub fn ffn_lip_l1(&self) -> f64 {
        self.ffn
            .iter()
            .map(|layer| matrix::induced_one_norm(&layer.weight))
            .product()
    }

    pub fn apply_ffn(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = x.to_vec();
        for layer in &self.ffn {
            let mut next = matrix::matvec(&layer.weight, &z, "ffn layer")?;
            for (n, b) in next.iter_mut().zip(&layer.bias) {
                *n += b;
            }
            layer.activation.apply(&mut next);
            z = next;
        }
        Ok(z)
    }
}

/// The classical definition: for each query, softmax the similarity scores
/// against the keys and average the looked-up values. Pure matrix/softmax
/// arithmetic, no measure machinery.
pub fn attention_classical(
    queries: &[Vec<f64>],
    keys: &[Vec<f64>],
    values: &[Vec<f64>],
    spec: &AttentionSpec,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if keys.is_empty() || queries.is_empty() {
        return Err(Error::EmptyInput("attention inputs"));
    }
    if keys.len() != values.len() {
        return Err(Error::UnequalSizes {
            left: keys.len(),
            right: values.len(),
        });
    }
    for p in queries.iter().chain(keys).chain(values) {
        check_point(p, "attention input point")?;
    }
    if matches!(spec.lookup, LookupMap::Table { .. }) {
        for a in 0..keys.len() {
            for b in (a + 1)..keys.len() {
                if keys[a] == keys[b] {
                    return Err(Error::KeyCollision);
                }
            }
        }
    }
    let looked: Vec<Vec<f64>> = values
        .iter()
        .map(|v| spec.lookup.apply(v))
        .collect::<Result<_>>()?;
    let out_dim = looked[0].len();

    let mut outputs = Vec::with_capacity(queries.len());
    for q in queries {
        let mut logits = Vec::with_capacity(keys.len());
        for k in keys {
            logits.push(spec.potential.log_eval(q, k)?);
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= z;
        }
        let mut out = vec![0.0; out_dim];
        for (w, v) in weights.iter().zip(&looked) {
            for (o, vi) in out.iter_mut().zip(v) {
                *o += w * vi;
            }
        }
        outputs.push(out);
    }
    Ok(outputs)
}

/// One application of the attention kernel to a query point: reweight the key
/// configuration, push through the lookup, project to the mean. Returns the
/// location of the resulting Dirac atom.
pub fn attention_kernel_apply(
    query: &[f64],
    keys: &DiscreteMeasure,
    spec: &AttentionSpec,
) -> Result<Vec<f64>> {
    let reweighted = boltzmann_gibbs(&spec.potential, query, keys)?;
    let pushed = lookup_push(&reweighted, &spec.lookup)?;
    let projected = project_dirac(&pushed)?;
    Ok(projected.point(0).to_vec())
}

/// Self-attention as transport of the configuration by its own kernel: each
/// atom moves to its attention output, weights are carried unchanged.
pub fn self_attention_step(mu: &DiscreteMeasure, spec: &AttentionSpec) -> Result<DiscreteMeasure> {
    let points = mu
        .points()
        .iter()
        .map(|x| attention_kernel_apply(x, mu, spec))
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(points, mu.weights().to_vec())
}

/// One transformer layer on a configuration: per atom, sum the head outputs
/// through their output matrices and apply the feedforward map pointwise.
pub fn transformer_step(mu: &DiscreteMeasure, spec: &TransformerSpec) -> Result<DiscreteMeasure> {
    spec.validate()?;
    let mut points = Vec::with_capacity(mu.len());
    for x in mu.points() {
        let mut combined = vec![0.0; mu.dim()];
        for head in &spec.heads {
            let y = attention_kernel_apply(x, mu, &head.attention)?;
            let projected = matrix::matvec(&head.output, &y, "head output")?;
            if projected.len() != combined.len() {
                return Err(Error::DimensionMismatch {
                    context: "head output dimension",
                    expected: combined.len(),
                    got: projected.len(),
                });
            }
            for (c, p) in combined.iter_mut().zip(&projected) {
                *c += p;
            }
        }
        points.push(spec.apply_ffn(&combined)?);
    }
    DiscreteMeasure::new(points, mu.weights().to_vec())
}

/// The full trajectory `[mu^0, ..., mu^depth]` of repeated transformer steps.
pub fn particle_flow(
    mu0: &DiscreteMeasure,
    spec: &TransformerSpec,
    depth: usize,
) -> Result<Vec<DiscreteMeasure>> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let mut trajectory = Vec::with_capacity(depth + 1);
    trajectory.push(mu0.clone());
    for _ in 0..depth {
        let next = transformer_step(trajectory.last().expect("nonempty"), spec)?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// Computes attention twice for the same inputs — once as stochastic-matrix
/// products over the index space (probability rows times the value matrix),
/// once through the measure kernel with an exact-match table — and returns
/// the largest absolute coordinate deviation.
pub fn discrete_recovery_check(
    queries: &[Vec<f64>],
    keys: &[Vec<f64>],
    values: &[Vec<f64>],
    potential: &Potential,
) -> Result<f64> {
    if keys.len() != values.len() {
        return Err(Error::UnequalSizes {
            left: keys.len(),
            right: values.len(),
        });
    }
    if queries.is_empty() || keys.is_empty() {
        return Err(Error::EmptyInput("recovery check inputs"));
    }

    // Index-space path: rows of softmax(QK^T) times the value matrix.
    let n = keys.len();
    let d_out = values[0].len();
    let mut matrix_path = Vec::with_capacity(queries.len());
    for q in queries {
        let mut row = Vec::with_capacity(n);
        for k in keys {
            row.push(potential.log_eval(q, k)?);
        }
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = row.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= z;
        }
        let mut out = vec![0.0; d_out];
        for (p, v) in probs.iter().zip(values) {
            for (o, vi) in out.iter_mut().zip(v) {
                *o += p * vi;
            }
        }
        matrix_path.push(out);
    }

    // Measure path: empirical key configuration with a key->value table.
    let spec = AttentionSpec {
        potential: potential.clone(),
        lookup: LookupMap::Table {
            keys: keys.to_vec(),
            values: values.to_vec(),
        },
    };
    spec.validate()?;
    let key_measure = DiscreteMeasure::empirical(keys.to_vec())?;
    let mut max_dev = 0.0_f64;
    for (q, reference) in queries.iter().zip(&matrix_path) {
        let kernel_out = attention_kernel_apply(q, &key_measure, &spec)?;
        for (a, b) in kernel_out.iter().zip(reference) {
            max_dev = max_dev.max((a - b).abs());
        }
    }
    Ok(max_dev)
}
