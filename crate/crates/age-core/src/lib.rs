//! Desk-scale adversarial generator-encoder laboratory.
//!
//! The crate pairs a small trainable system with an exact verifier:
//!
//! - [`tensor`] / [`optim`]: dense f64 tensors with reverse-mode autodiff
//!   and a bias-corrected Adam optimizer;
//! - [`latent`]: the uniform-sphere prior, projection, and slerp;
//! - [`divergence`]: batch divergence statistics against the prior, both
//!   the differentiable diagonal-Gaussian KL and a k-NN estimator;
//! - [`nets`]: encoder/generator MLPs with checkpointing;
//! - [`game`]: the adversarial objectives and alternating training loop;
//! - [`theory`]: exhaustive saddle-point and reciprocity certification on
//!   finite spaces;
//! - [`data`]: synthetic benchmark datasets, CSV and PPM output, and the
//!   mode-coverage metric.

pub mod data;
pub mod divergence;
pub mod error;
pub mod game;
pub mod latent;
pub mod nets;
pub mod optim;
pub mod tensor;
pub mod theory;

pub use error::{Error, Result};
pub use tensor::Tensor;
