//! Radially symmetric kernels and the Gram matrices built from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::rsde::ReducedSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// exp(-‖x−y‖² / (2σ²))
    Gaussian,
    /// exp(-‖x−y‖ / σ)
    Laplacian,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(KernelFamily::Gaussian),
            "laplacian" | "laplace" => Ok(KernelFamily::Laplacian),
            other => Err(Error::InvalidParameter(format!(
                "unknown kernel family `{other}`"
            ))),
        }
    }
}

/// Kernel family plus bandwidth. The profile exponent, the maximum value κ
/// and the profile constant are determined by the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    sigma: f64,
}

impl KernelConfig {
    pub fn new(family: KernelFamily, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be positive, got {sigma}"
            )));
        }
        Ok(Self { family, sigma })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, sigma)
    }

    pub fn laplacian(sigma: f64) -> Result<Self> {
        Self::new(KernelFamily::Laplacian, sigma)
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Exponent p of the profile argument (‖x−y‖/σ)^p.
    pub fn profile_exponent(&self) -> i32 {
        match self.family {
            KernelFamily::Gaussian => 2,
            KernelFamily::Laplacian => 1,
        }
    }

    /// κ = k(x, x).
    pub fn kappa(&self) -> f64 {
        1.0
    }

    /// C^k_X: 1/(2σ²) for the Gaussian, 1/σ² for the Laplacian.
    pub fn profile_constant(&self) -> f64 {
        match self.family {
            KernelFamily::Gaussian => 0.5 / (self.sigma * self.sigma),
            KernelFamily::Laplacian => 1.0 / (self.sigma * self.sigma),
        }
    }

    /// φ(1/ℓ^p) with φ(s) = e^{-s}: the profile value at the shadow boundary.
    pub fn boundary_profile(&self, ell: f64) -> f64 {
        (-ell.powi(-self.profile_exponent())).exp()
    }

    /// Kernel value from a squared Euclidean distance.
    #[inline]
    pub fn from_sq_dist(&self, d2: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-d2 / (2.0 * self.sigma * self.sigma)).exp(),
            KernelFamily::Laplacian => (-d2.sqrt() / self.sigma).exp(),
        }
    }

    /// k(x, y) without a dimension check.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.from_sq_dist(sq_dist(x, y))
    }
}

#[inline]
pub fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// k(x, y).
pub fn eval(cfg: &KernelConfig, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(cfg.eval_unchecked(x, y))
}

/// n×n matrix K_ij = k(x_i, x_j) over the rows of `points`.
pub fn gram(cfg: &KernelConfig, points: &DenseMatrix) -> Result<DenseMatrix> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::Empty("gram matrix of an empty point set"));
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = points.row(i);
            (i..n)
                .map(|j| cfg.eval_unchecked(xi, points.row(j)))
                .collect()
        })
        .collect();
    let mut k = DenseMatrix::zeros(n, n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            k[(i, i + off)] = v;
            k[(i + off, i)] = v;
        }
    }
    Ok(k)
}

/// n×m matrix of k(x_i, c_j).
pub fn cross_gram(cfg: &KernelConfig, x: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    if x.rows() == 0 || c.rows() == 0 {
        return Err(Error::Empty("cross gram with an empty point set"));
    }
    if x.cols() != c.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            found: c.cols(),
        });
    }
    let m = c.rows();
    let rows: Vec<f64> = (0..x.rows())
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = x.row(i);
            (0..m).map(move |j| cfg.eval_unchecked(xi, c.row(j)))
        })
        .collect();
    DenseMatrix::new(x.rows(), m, rows)
}

/// diag(√w_1, …, √w_m).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    sqrt_weights: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive, got {w}"
            )));
        }
        Ok(Self {
            sqrt_weights: weights.iter().map(|w| w.sqrt()).collect(),
        })
    }

    pub fn diag(&self) -> &[f64] {
        &self.sqrt_weights
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_diag(&self.sqrt_weights)
    }
}

/// Density-weighted surrogate K̃ = W K^C W, K̃_ij = √w_i k(c_i, c_j) √w_j.
pub fn weighted_gram(cfg: &KernelConfig, rs: &ReducedSet) -> Result<DenseMatrix> {
    weighted_gram_from(cfg, &rs.centers, &rs.weights)
}

pub fn weighted_gram_from(
    cfg: &KernelConfig,
    centers: &DenseMatrix,
    weights: &[f64],
) -> Result<DenseMatrix> {
    if centers.rows() != weights.len() {
        return Err(Error::CardinalityMismatch {
            left: centers.rows(),
            right: weights.len(),
        });
    }
    let w = WeightMatrix::from_weights(weights)?;
    let mut k = gram(cfg, centers)?;
    let s = w.diag();
    let m = k.rows();
    for i in 0..m {
        for j in 0..m {
            k[(i, j)] *= s[i] * s[j];
        }
    }
    Ok(k)
}

/// Shadow radius ε = σ/ℓ.
pub fn shadow_radius(cfg: &KernelConfig, ell: f64) -> Result<f64> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "shadow parameter must be positive, got {ell}"
        )));
    }
    Ok(cfg.sigma() / ell)
}
