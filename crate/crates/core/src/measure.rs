//! Finitely supported probability measures on R^d.
//!
//! A [`DiscreteMeasure`] is a list of support points together with
//! nonnegative weights summing to one. Atoms are never merged: a point that
//! appears twice contributes two atoms, so support size always equals the
//! length of the originating point list. All ground distances on the ambient
//! space use the 1-norm.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix;

/// Constructors renormalize weight sums that deviate from 1 by at most this
/// amount and reject anything worse.
pub const WEIGHT_TOL: f64 = 1e-12;

/// l1 distance between two points of equal dimension.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// l2 distance between two points of equal dimension.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sums after sorting by total order, so the result depends only on the
/// multiset of summands. Atom order must not leak into attention outputs:
/// permutation equivariance of the flow is asserted bitwise.
pub(crate) fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    values.iter().sum()
}

pub(crate) fn check_point(p: &[f64], context: &'static str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::EmptyInput(context));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(context));
    }
    Ok(())
}

/// A finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from points and weights, validating every invariant:
    /// nonempty support, one shared dimension, finite coordinates,
    /// nonnegative weights with sum within [`WEIGHT_TOL`] of 1.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("measure support"));
        }
        if weights.len() != points.len() {
            return Err(Error::UnequalSizes {
                left: points.len(),
                right: weights.len(),
            });
        }
        let dim = points[0].len();
        for p in &points {
            check_point(p, "measure support point")?;
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "measure support point",
                    expected: dim,
                    got: p.len(),
                });
            }
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite("measure weight"));
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        // order-canonical total so atom permutations renormalize identically
        let sum = stable_sum(&mut weights.clone());
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::WeightSum {
                sum,
                tol: WEIGHT_TOL,
            });
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { points, weights })
    }

    /// The empirical measure of a point list: uniform weight `1/len` on each
    /// atom, duplicates kept as distinct atoms.
    pub fn empirical(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("empirical point list"));
        }
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// The Dirac measure at a single point.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        Self::new(vec![point], vec![1.0])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least one atom by construction
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// True when every weight equals `1/len` within [`WEIGHT_TOL`].
    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&x| (x - w).abs() <= WEIGHT_TOL)
    }

    /// The weighted mean of the support, invariant under atom permutation.
    pub fn mean(&self) -> Vec<f64> {
        let mut terms = vec![0.0_f64; self.len()];
        (0..self.dim())
            .map(|k| {
                for (t, (p, &w)) in terms.iter_mut().zip(self.points.iter().zip(&self.weights)) {
                    *t = w * p[k];
                }
                stable_sum(&mut terms)
            })
            .collect()
    }

    /// Moves every atom through `f`, keeping weights. Atoms are not merged on
    /// collision.
    pub fn map_points<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let points = self
            .points
            .iter()
            .map(|p| f(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, self.weights.clone())
    }

    /// Reads an instance file (see [`InstanceFile`]).
    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let file: InstanceFile = serde_json::from_reader(reader)?;
        file.into_measure()
    }

    pub fn from_json_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_json_reader(std::fs::File::open(path)?)
    }

    /// Writes the instance file with weights stated explicitly.
    pub fn to_json_writer<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &InstanceFile::from_measure(self))?;
        Ok(())
    }

    pub fn to_json_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.to_json_writer(std::fs::File::create(path)?)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(InstanceFile::from_measure(self)).expect("instance serializes")
    }
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        InstanceFile::from_measure(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        InstanceFile::deserialize(deserializer)?
            .into_measure()
            .map_err(serde::de::Error::custom)
    }
}

/// On-disk instance schema: `{"dim": d, "points": [[..]], "weights": [..]}`.
/// `weights` may be omitted on input (uniform weights are assumed); writers
/// always emit it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl InstanceFile {
    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        Self {
            dim: m.dim(),
            points: m.points().to_vec(),
            weights: Some(m.weights().to_vec()),
        }
    }

    pub fn into_measure(self) -> Result<DiscreteMeasure> {
        let measure = match self.weights {
            Some(w) => DiscreteMeasure::new(self.points, w)?,
            None => DiscreteMeasure::empirical(self.points)?,
        };
        if measure.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "instance dim field",
                expected: self.dim,
                got: measure.dim(),
            });
        }
        Ok(measure)
    }
}

/// Feature maps accepted by [`moment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureMap {
    Identity,
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
}

impl FeatureMap {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeatureMap::Identity => Ok(x.to_vec()),
            FeatureMap::Affine { matrix, offset } => {
                matrix::validate(matrix, "affine feature matrix")?;
                let mut y = matrix::matvec(matrix, x, "affine feature map")?;
                if offset.len() != y.len() {
                    return Err(Error::DimensionMismatch {
                        context: "affine feature offset",
                        expected: y.len(),
                        got: offset.len(),
                    });
                }
                for (yi, oi) in y.iter_mut().zip(offset) {
                    *yi += oi;
                }
                Ok(y)
            }
        }
    }
}

/// The moment vector `mu(F) = sum_i w_i F(x_i)`.
pub fn moment(mu: &DiscreteMeasure, feature: &FeatureMap) -> Result<Vec<f64>> {
    let first = feature.apply(mu.point(0))?;
    let mut acc = vec![0.0; first.len()];
    for i in 0..mu.len() {
        let fx = if i == 0 {
            first.clone()
        } else {
            feature.apply(mu.point(i))?
        };
        if fx.len() != acc.len() {
            return Err(Error::DimensionMismatch {
                context: "feature image",
                expected: acc.len(),
                got: fx.len(),
            });
        }
        let w = mu.weight(i);
        for (a, v) in acc.iter_mut().zip(&fx) {
            *a += w * v;
        }
    }
    Ok(acc)
}

/// Mean of the Gaussian smoothing `N(0, sigma^2 I) * mu`. Centered noise
/// leaves first moments untouched, so for the identity feature this equals
/// `moment(mu, id)` exactly; the operation exists so that statement stays an
/// executable assertion.
pub fn gaussian_convolve_moment(mu: &DiscreteMeasure, sigma: f64) -> Result<Vec<f64>> {
    if sigma.is_nan() || sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be a positive real, got {sigma}"
        )));
    }
    moment(mu, &FeatureMap::Identity)
}

/// Componentwise bounds of a compact axis-aligned domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_point(&lower, "box lower corner")?;
        check_point(&upper, "box upper corner")?;
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "box corners",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter(
                "box lower corner exceeds upper corner".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// `sum_i (upper_i - lower_i)`, the diameter in the 1-norm.
    pub fn diam_l1(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).sum()
    }

    /// Corner-to-corner Euclidean diameter.
    pub fn diam_l2(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest single-coordinate extent.
    pub fn diam_linf(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *x >= *l && *x <= *u)
    }
}

/// Componentwise min/max over all support points, expanded by `padding` on
/// each side. The domain is data-driven because the regularity constants
/// depend on its diameter and no fixed universe is assumed.
pub fn bounding_box(measures: &[&DiscreteMeasure], padding: f64) -> Result<BoundingBox> {
    if measures.is_empty() {
        return Err(Error::EmptyInput("bounding box measure list"));
    }
    if padding.is_nan() || padding < 0.0 || !padding.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "padding must be a nonnegative real, got {padding}"
        )));
    }
    let dim = measures[0].dim();
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for m in measures {
        if m.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "bounding box measures",
                expected: dim,
                got: m.dim(),
            });
        }
        for p in m.points() {
            for k in 0..dim {
                lower[k] = lower[k].min(p[k]);
                upper[k] = upper[k].max(p[k]);
            }
        }
    }
    for k in 0..dim {
        lower[k] -= padding;
        upper[k] += padding;
    }
    BoundingBox::new(lower, upper)
}

/// Bounding box over raw point lists.
pub fn bounding_box_of_points(point_sets: &[&[Vec<f64>]], padding: f64) -> Result<BoundingBox> {
    let measures: Vec<DiscreteMeasure> = point_sets
        .iter()
        .filter(|ps| !ps.is_empty())
        .map(|ps| DiscreteMeasure::empirical(ps.to_vec()))
        .collect::<Result<_>>()?;
    let refs: Vec<&DiscreteMeasure> = measures.iter().collect();
    bounding_box(&refs, padding)
}
