//! Attention and the Transformer encoder as transport of discrete measures.
//!
//! The crate represents token configurations as finitely supported
//! probability measures, implements attention as a composition of a
//! Boltzmann-Gibbs reweighting, a lookup pushforward and a mean projection,
//! and provides the machinery to audit the quantitative side of that view:
//! exact 1-Wasserstein distances with dual certificates, maximum-entropy and
//! KL-projection solvers, closed-form Lipschitz/contraction constants, and
//! randomized worst-case searches against those constants.
//!
//! ```
//! use attn_transport::attention::{self_attention_step, AttentionSpec};
//! use attn_transport::kernels::{LookupMap, Potential};
//! use attn_transport::measure::DiscreteMeasure;
//! use attn_transport::transport::w1_exact;
//!
//! let tokens = DiscreteMeasure::empirical(vec![vec![0.0, 0.0], vec![1.0, 2.0]])?;
//! let spec = AttentionSpec {
//!     potential: Potential::Gaussian,
//!     lookup: LookupMap::Identity,
//! };
//! let moved = self_attention_step(&tokens, &spec)?;
//!
//! // attention pulls the configuration together, never apart
//! let (shift, plan) = w1_exact(&tokens, &moved)?;
//! plan.verify(&tokens, &moved)?;
//! assert!(shift > 0.0);
//! # Ok::<(), attn_transport::Error>(())
//! ```

pub mod applications;
pub mod attention;
pub mod entropy;
pub mod error;
pub mod kernels;
mod matrix;
pub mod measure;
pub mod regularity;
pub mod rng;
pub mod suite;
pub mod transport;

pub use error::{Error, Result};
pub use measure::{BoundingBox, DiscreteMeasure};
