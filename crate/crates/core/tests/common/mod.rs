//! Test-side oracles built independently of the library's closed forms.
#![allow(dead_code)]

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rskpca::kernels::{gram, KernelConfig, KernelFamily};
use rskpca::metrics::quantized_dataset;
use rskpca::numerics::{seeded_rng, sym_eig, DenseMatrix, Rng};
use rskpca::ReducedSet;

/// A random instance: points, kernel and shadow parameter.
pub struct Instance {
    pub x: DenseMatrix,
    pub cfg: KernelConfig,
    pub ell: f64,
}

/// Clustered points with random cluster count and spread, so shadows
/// absorb anywhere from nothing to whole clusters.
pub fn clustered(rng: &mut Rng, n: usize, d: usize) -> DenseMatrix {
    let k = rng.random_range(1..=6);
    let spread: f64 = 10f64.powf(rng.random_range(-2.0..0.5));
    let means: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    DenseMatrix::from_fn(n, d, |i, j| {
        let z: f64 = StandardNormal.sample(rng);
        means[i % k][j] + spread * z
    })
}

pub fn random_instance(seed: u64, max_n: usize, max_d: usize, ell_range: (f64, f64)) -> Instance {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(2..=max_n);
    let d = rng.random_range(1..=max_d);
    let x = clustered(&mut rng, n, d);
    let sigma = 10f64.powf(rng.random_range(-0.5..1.0));
    let family = if rng.random_bool(0.5) {
        KernelFamily::Gaussian
    } else {
        KernelFamily::Laplacian
    };
    let cfg = KernelConfig::new(family, sigma).unwrap();
    let ell = rng.random_range(ell_range.0..ell_range.1);
    Instance { x, cfg, ell }
}

/// Explicit n×n Gram matrix of the quantized dataset C̄, divided by n.
pub fn explicit_quantized_gram(cfg: &KernelConfig, rs: &ReducedSet) -> DenseMatrix {
    let q = quantized_dataset(rs).unwrap();
    gram(cfg, &q).unwrap().scale(1.0 / q.rows() as f64)
}

/// Finite-dimensional coordinates of the empirical covariance operators of
/// X and C̄ in the span of all feature vectors involved.
pub struct JointSpan {
    pub data_op: DenseMatrix,
    pub quant_op: DenseMatrix,
}

pub fn joint_span(cfg: &KernelConfig, x: &DenseMatrix, rs: &ReducedSet) -> JointSpan {
    let n = x.rows();
    let q = quantized_dataset(rs).unwrap();
    let d = x.cols();
    let all = DenseMatrix::from_fn(
        2 * n,
        d,
        |i, j| if i < n { x[(i, j)] } else { q[(i - n, j)] },
    );
    // G = U Λ Uᵀ; row i of U Λ^{1/2} are orthonormal coordinates of k_{z_i}
    let eig = sym_eig(&gram(cfg, &all).unwrap()).unwrap();
    let top = eig.eigenvalues[0];
    let keep: Vec<usize> = (0..2 * n)
        .filter(|&k| eig.eigenvalues[k] > 1e-13 * top)
        .collect();
    let coords = DenseMatrix::from_fn(2 * n, keep.len(), |i, c| {
        eig.eigenvectors[(i, keep[c])] * eig.eigenvalues[keep[c]].sqrt()
    });
    let op = |offset: usize| {
        DenseMatrix::from_fn(keep.len(), keep.len(), |a, b| {
            (0..n)
                .map(|i| coords[(offset + i, a)] * coords[(offset + i, b)])
                .sum::<f64>()
                / n as f64
        })
    };
    JointSpan {
        data_op: op(0),
        quant_op: op(n),
    }
}

/// ‖K_n − K̄_n‖_HS from explicit operator matrices.
pub fn hs_oracle(cfg: &KernelConfig, x: &DenseMatrix, rs: &ReducedSet) -> f64 {
    let js = joint_span(cfg, x, rs);
    js.data_op.sub(&js.quant_op).unwrap().frobenius_norm()
}

fn top_projector(op: &DenseMatrix, dim: usize) -> DenseMatrix {
    let eig = sym_eig(op).unwrap();
    let keep: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k] > 1e-12).collect();
    DenseMatrix::from_fn(op.rows(), op.rows(), |a, b| {
        keep.iter()
            .map(|&k| eig.eigenvectors[(a, k)] * eig.eigenvectors[(b, k)])
            .sum()
    })
}

/// ‖P^D(K_n) − P^D(K̄_n)‖_HS from explicit operator matrices.
pub fn projection_oracle(cfg: &KernelConfig, x: &DenseMatrix, rs: &ReducedSet, dim: usize) -> f64 {
    let js = joint_span(cfg, x, rs);
    top_projector(&js.data_op, dim)
        .sub(&top_projector(&js.quant_op, dim))
        .unwrap()
        .frobenius_norm()
}

/// Smallest pairwise Euclidean distance.
pub fn min_pairwise_distance(x: &DenseMatrix) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..x.rows() {
        for j in 0..i {
            best = best.min(rskpca::kernels::sq_dist(x.row(i), x.row(j)).sqrt());
        }
    }
    best
}
