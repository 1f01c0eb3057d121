//! Reduced-set kernel PCA.
//!
//! Kernel PCA normally diagonalises the n×n Gram matrix of the training
//! sample. This crate replaces that matrix by an m×m density-weighted
//! surrogate built from a reduced-set density estimate, most notably the
//! single-pass shadow estimate, where every point closer than σ/ℓ to an
//! earlier center is absorbed into that center's weight.
//!
//! Modules:
//! - [`numerics`]: dense matrices, symmetric eigendecomposition, least squares
//! - [`kernels`]: Gaussian and Laplacian kernels, Gram matrices
//! - [`rsde`]: shadow, k-means, paring and herding reduced sets
//! - [`kpca`]: full, reduced-set, subsampled, Nyström and WNyström models
//! - [`metrics`]: MMD, eigenvalue/operator/eigenspace distances and their bounds
//! - [`eval`]: k-NN classification, cross-validation, timing
//! - [`dataio`]: loaders, splits, synthetic data
//! - [`experiment`]: the experiment runners behind the `rskpca` binary

pub mod dataio;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod kernels;
pub mod kpca;
pub mod metrics;
pub mod numerics;
pub mod rsde;

pub use error::{Error, Result};
pub use kernels::{KernelConfig, KernelFamily};
pub use kpca::{KpcaModel, Variant};
pub use numerics::DenseMatrix;
pub use rsde::ReducedSet;
