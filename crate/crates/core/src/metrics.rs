//! Discrepancies between a sample and its quantized reduced set, and the
//! worst-case bounds they are checked against.
//!
//! The quantized dataset C̄ replaces each point x_i by its center c_α(i).
//! Everything here is computed exactly from Gram matrices. Sums over C̄ are
//! folded onto the centers using the assignment counts, so costs are
//! O(nm) rather than O(n²) except where the full spectrum of K/n is needed.

use std::fmt;

use crate::error::{Error, Result};
use crate::kernels::{cross_gram, gram, weighted_gram_from, KernelConfig};
use crate::numerics::{lstsq, sym_eig, sym_eigenvalues, DenseMatrix};
use crate::rsde::ReducedSet;

/// Slack allowed when comparing an empirical value with its bound.
pub const BOUND_SLACK: f64 = 1e-10;
/// Eigengaps smaller than this are refused by [`projection_distance`].
pub const MIN_EIGENGAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    Mmd,
    Eigen,
    Hs,
    Projection,
}

impl TheoremId {
    pub fn name(self) -> &'static str {
        match self {
            TheoremId::Mmd => "MMD",
            TheoremId::Eigen => "Eigen",
            TheoremId::Hs => "HS",
            TheoremId::Projection => "Projection",
        }
    }
}

/// One empirical quantity next to its theoretical bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub ell: f64,
    pub sigma: f64,
    pub n: usize,
    pub m: usize,
    /// Eigenspace dimension, projection reports only.
    pub dim: Option<usize>,
    pub empirical: f64,
    pub bound: f64,
    /// `None` when the bound's precondition does not hold and nothing is
    /// asserted.
    pub satisfied: Option<bool>,
    /// For projection reports: the same bound evaluated with the observed
    /// maximal centroid error ‖ε′‖ instead of its worst case.
    pub alt_bound: Option<f64>,
}

impl BoundReport {
    fn checked(
        theorem: TheoremId,
        ell: f64,
        cfg: &KernelConfig,
        n: usize,
        m: usize,
        empirical: f64,
        bound: f64,
    ) -> Self {
        Self {
            theorem,
            ell,
            sigma: cfg.sigma(),
            n,
            m,
            dim: None,
            empirical,
            bound,
            satisfied: Some(empirical <= bound + BOUND_SLACK),
            alt_bound: None,
        }
    }

    pub fn precondition_met(&self) -> bool {
        self.satisfied.is_some()
    }

    pub const CSV_HEADER: &'static str = "theorem_id,ell,sigma,n,m,D,empirical,bound,satisfied";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:e},{:e},{}",
            self.theorem.name(),
            self.ell,
            self.sigma,
            self.n,
            self.m,
            self.dim.map(|d| d.to_string()).unwrap_or_default(),
            self.empirical,
            self.bound,
            match self.satisfied {
                Some(true) => "true",
                Some(false) => "false",
                None => "na",
            }
        )
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.csv_row())
    }
}

/// Biased MMD between two equally sized samples.
pub fn mmd_biased(cfg: &KernelConfig, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::CardinalityMismatch {
            left: x.rows(),
            right: y.rows(),
        });
    }
    let n = x.rows() as f64;
    let kxx: f64 = gram(cfg, x)?.as_slice().iter().sum();
    let kyy: f64 = gram(cfg, y)?.as_slice().iter().sum();
    let kxy: f64 = cross_gram(cfg, x, y)?.as_slice().iter().sum();
    Ok(((kxx + kyy - 2.0 * kxy) / (n * n)).max(0.0).sqrt())
}

/// (c_α(1), …, c_α(n)).
pub fn quantized_dataset(rs: &ReducedSet) -> Result<DenseMatrix> {
    let alpha = rs.assignment.as_ref().ok_or(Error::MissingAssignment)?;
    Ok(rs.centers.select_rows(alpha))
}

/// sqrt(2(κ − φ(1/ℓ^p))).
pub fn bound_mmd(cfg: &KernelConfig, ell: f64) -> f64 {
    (2.0 * (cfg.kappa() - cfg.boundary_profile(ell)))
        .max(0.0)
        .sqrt()
}

/// 2 C^k_X (σ/ℓ)².
pub fn bound_eigen(cfg: &KernelConfig, ell: f64) -> f64 {
    let eps = cfg.sigma() / ell;
    2.0 * cfg.profile_constant() * eps * eps
}

/// 2κ sqrt(2(κ − φ(1/ℓ^p))).
pub fn bound_hs(cfg: &KernelConfig, ell: f64) -> f64 {
    2.0 * cfg.kappa() * bound_mmd(cfg, ell)
}

/// 2 sqrt(2κ(κ − φ(1/ℓ^p))) / δ_D.
pub fn bound_projection(cfg: &KernelConfig, ell: f64, delta: f64) -> f64 {
    let k = cfg.kappa();
    2.0 * (2.0 * k * (k - cfg.boundary_profile(ell))).max(0.0).sqrt() / delta
}

/// Centers actually used by the assignment and how many points each holds.
struct Quantization<'a> {
    x: &'a DenseMatrix,
    centers: DenseMatrix,
    counts: Vec<f64>,
    /// Per point, index into `centers`.
    alpha: Vec<usize>,
    m: usize,
}

impl<'a> Quantization<'a> {
    fn new(x: &'a DenseMatrix, rs: &ReducedSet) -> Result<Self> {
        let alpha = rs.assignment.as_ref().ok_or(Error::MissingAssignment)?;
        if alpha.len() != x.rows() {
            return Err(Error::CardinalityMismatch {
                left: x.rows(),
                right: alpha.len(),
            });
        }
        if x.rows() == 0 {
            return Err(Error::Empty("quantization of an empty dataset"));
        }
        if x.cols() != rs.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.cols(),
                found: rs.dim(),
            });
        }
        let mut remap = vec![usize::MAX; rs.m()];
        let mut used = Vec::new();
        let mut counts = Vec::new();
        let mut local = Vec::with_capacity(alpha.len());
        for &a in alpha {
            if a >= rs.m() {
                return Err(Error::InvalidParameter(
                    "assignment points past the last center".into(),
                ));
            }
            if remap[a] == usize::MAX {
                remap[a] = used.len();
                used.push(a);
                counts.push(0.0);
            }
            counts[remap[a]] += 1.0;
            local.push(remap[a]);
        }
        Ok(Self {
            x,
            centers: rs.centers.select_rows(&used),
            counts,
            alpha: local,
            m: rs.m(),
        })
    }

    fn n(&self) -> usize {
        self.x.rows()
    }

    /// Σ_ab w_a w_b f(k(c_a, c_b)).
    fn center_sum(&self, cfg: &KernelConfig, f: impl Fn(f64) -> f64) -> Result<f64> {
        let kc = gram(cfg, &self.centers)?;
        let mut s = 0.0;
        for (a, wa) in self.counts.iter().enumerate() {
            for (b, wb) in self.counts.iter().enumerate() {
                s += wa * wb * f(kc[(a, b)]);
            }
        }
        Ok(s)
    }

    /// Σ_i Σ_b w_b f(k(x_i, c_b)).
    fn cross_sum(&self, cfg: &KernelConfig, f: impl Fn(f64) -> f64) -> Result<f64> {
        let kxc = cross_gram(cfg, self.x, &self.centers)?;
        let mut s = 0.0;
        for i in 0..self.n() {
            for (b, wb) in self.counts.iter().enumerate() {
                s += wb * f(kxc[(i, b)]);
            }
        }
        Ok(s)
    }

    /// max_i ‖k_{x_i} − k_{c̄_i}‖_H.
    fn max_centroid_error(&self, cfg: &KernelConfig) -> f64 {
        (0..self.n())
            .map(|i| {
                let k = cfg.eval_unchecked(self.x.row(i), self.centers.row(self.alpha[i]));
                (2.0 * (cfg.kappa() - k)).max(0.0).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// MMD(X, C̄) against sqrt(2(κ − φ(1/ℓ^p))).
pub fn mmd_report(
    cfg: &KernelConfig,
    x: &DenseMatrix,
    rs: &ReducedSet,
    ell: f64,
) -> Result<BoundReport> {
    let q = Quantization::new(x, rs)?;
    let n = q.n() as f64;
    let kxx: f64 = gram(cfg, x)?.as_slice().iter().sum();
    let kcc = q.center_sum(cfg, |k| k)?;
    let kxc = q.cross_sum(cfg, |k| k)?;
    let empirical = ((kxx + kcc - 2.0 * kxc) / (n * n)).max(0.0).sqrt();
    Ok(BoundReport::checked(
        TheoremId::Mmd,
        ell,
        cfg,
        q.n(),
        q.m,
        empirical,
        bound_mmd(cfg, ell),
    ))
}

/// Σ_i (λ_i − λ̄_i)² over the sorted spectra of K/n and K̄/n, against
/// 2 C^k_X (σ/ℓ)².
///
/// The nonzero spectrum of K̄/n is taken from the m×m matrix
/// √w_a k(c_a, c_b) √w_b / n, which shares it.
pub fn eigen_deviation(
    cfg: &KernelConfig,
    x: &DenseMatrix,
    rs: &ReducedSet,
    ell: f64,
) -> Result<BoundReport> {
    let q = Quantization::new(x, rs)?;
    let n = q.n() as f64;
    let full = sym_eigenvalues(&gram(cfg, x)?.scale(1.0 / n))?;
    let quant = sym_eigenvalues(&weighted_gram_from(cfg, &q.centers, &q.counts)?.scale(1.0 / n))?;
    let empirical = full
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let lb = quant.get(i).copied().unwrap_or(0.0);
            (l - lb) * (l - lb)
        })
        .sum();
    Ok(BoundReport::checked(
        TheoremId::Eigen,
        ell,
        cfg,
        q.n(),
        q.m,
        empirical,
        bound_eigen(cfg, ell),
    ))
}

/// ‖K_n − K̄_n‖_HS between the empirical operators of X and C̄:
/// sqrt((Σ k(x_i,x_j)² + Σ k(c̄_i,c̄_j)² − 2 Σ k(x_i,c̄_j)²) / n²).
pub fn hs_distance(
    cfg: &KernelConfig,
    x: &DenseMatrix,
    rs: &ReducedSet,
    ell: f64,
) -> Result<BoundReport> {
    let q = Quantization::new(x, rs)?;
    let n = q.n() as f64;
    let kxx: f64 = gram(cfg, x)?.as_slice().iter().map(|k| k * k).sum();
    let kcc = q.center_sum(cfg, |k| k * k)?;
    let kxc = q.cross_sum(cfg, |k| k * k)?;
    let empirical = ((kxx + kcc - 2.0 * kxc) / (n * n)).max(0.0).sqrt();
    Ok(BoundReport::checked(
        TheoremId::Hs,
        ell,
        cfg,
        q.n(),
        q.m,
        empirical,
        bound_hs(cfg, ell),
    ))
}

/// ‖P^D(K_n) − P^D(K̄_n)‖_HS for the projections onto the top-D eigenspaces.
///
/// The bound is only asserted when 2√κ‖ε′‖ < δ_D/2 with
/// δ_D = (λ_D − λ_{D+1})/2; otherwise `satisfied` is `None`.
pub fn projection_distance(
    cfg: &KernelConfig,
    x: &DenseMatrix,
    rs: &ReducedSet,
    ell: f64,
    dim: usize,
) -> Result<BoundReport> {
    let q = Quantization::new(x, rs)?;
    let n = q.n();
    if dim == 0 || dim > n {
        return Err(Error::InvalidParameter(format!(
            "eigenspace dimension must be in 1..={n}, got {dim}"
        )));
    }
    let nf = n as f64;
    let kx = gram(cfg, x)?;
    let full = sym_eig(&kx.scale(1.0 / nf))?;
    let lam_d = full.eigenvalues[dim - 1];
    let lam_next = full.eigenvalues.get(dim).copied().unwrap_or(0.0).max(0.0);
    if lam_d <= crate::kpca::SPECTRUM_FLOOR {
        return Err(Error::RankDeficient {
            requested: dim,
            available: full
                .eigenvalues
                .iter()
                .filter(|&&l| l > crate::kpca::SPECTRUM_FLOOR)
                .count(),
        });
    }
    if lam_d - lam_next < MIN_EIGENGAP {
        return Err(Error::DegenerateGap {
            d: dim,
            gap: lam_d - lam_next,
        });
    }
    let delta = 0.5 * (lam_d - lam_next);

    // eigenfunctions of K_n: a_i = u_i / √(n λ_i) over k_{x_j}
    let a = DenseMatrix::from_fn(n, dim, |j, i| {
        full.eigenvectors[(j, i)] / (nf * full.eigenvalues[i]).sqrt()
    });
    // eigenfunctions of K̄_n: β_i = √w ⊙ v_i / √(n λ̄_i) over k_{c_b}
    let quant = sym_eig(&weighted_gram_from(cfg, &q.centers, &q.counts)?.scale(1.0 / nf))?;
    let dbar = quant
        .eigenvalues
        .iter()
        .take(dim)
        .filter(|&&l| l > crate::kpca::SPECTRUM_FLOOR)
        .count();
    let beta = DenseMatrix::from_fn(q.centers.rows(), dbar, |b, i| {
        q.counts[b].sqrt() * quant.eigenvectors[(b, i)] / (nf * quant.eigenvalues[i]).sqrt()
    });
    let kxc = cross_gram(cfg, x, &q.centers)?;
    let inner = a.transpose().matmul(&kxc)?.matmul(&beta)?;
    let overlap: f64 = inner.as_slice().iter().map(|v| v * v).sum();
    let empirical = ((dim + dbar) as f64 - 2.0 * overlap).max(0.0).sqrt();

    let kappa = cfg.kappa();
    let eps_prime = q.max_centroid_error(cfg);
    let gap_ok = 2.0 * kappa.sqrt() * eps_prime < delta / 2.0;
    let bound = bound_projection(cfg, ell, delta);
    Ok(BoundReport {
        theorem: TheoremId::Projection,
        ell,
        sigma: cfg.sigma(),
        n,
        m: q.m,
        dim: Some(dim),
        empirical,
        bound,
        satisfied: gap_ok.then_some(empirical <= bound + BOUND_SLACK),
        alt_bound: Some(2.0 * kappa.sqrt() * eps_prime / delta),
    })
}

/// All four reports for one reduction.
pub fn bound_reports(
    cfg: &KernelConfig,
    x: &DenseMatrix,
    rs: &ReducedSet,
    ell: f64,
    dim: usize,
) -> Result<Vec<BoundReport>> {
    let mut out = vec![
        mmd_report(cfg, x, rs, ell)?,
        eigen_deviation(cfg, x, rs, ell)?,
        hs_distance(cfg, x, rs, ell)?,
    ];
    match projection_distance(cfg, x, rs, ell, dim) {
        Ok(r) => out.push(r),
        Err(Error::DegenerateGap { .. }) | Err(Error::RankDeficient { .. }) => {
            out.push(BoundReport {
                theorem: TheoremId::Projection,
                ell,
                sigma: cfg.sigma(),
                n: x.rows(),
                m: rs.m(),
                dim: Some(dim),
                empirical: f64::NAN,
                bound: f64::NAN,
                satisfied: None,
                alt_bound: None,
            })
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Least-squares alignment of an approximate embedding onto a reference.
#[derive(Debug, Clone)]
pub struct Alignment {
    /// argmin_A ‖O − Õ A‖_F.
    pub transform: DenseMatrix,
    /// ‖O − Õ A‖_F at the minimiser.
    pub error: f64,
    pub rank_deficient: bool,
}

/// Unconstrained least-squares alignment (not orthogonal Procrustes).
pub fn align_embeddings(reference: &DenseMatrix, approx: &DenseMatrix) -> Result<Alignment> {
    if reference.rows() != approx.rows() || reference.cols() != approx.cols() {
        return Err(Error::Shape(format!(
            "embeddings differ in shape: {}x{} vs {}x{}",
            reference.rows(),
            reference.cols(),
            approx.rows(),
            approx.cols()
        )));
    }
    let sol = lstsq(approx, reference)?;
    let fitted = approx.matmul(&sol.solution)?;
    Ok(Alignment {
        error: reference.sub(&fitted)?.frobenius_norm(),
        transform: sol.solution,
        rank_deficient: sol.rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;
    use crate::rsde::{pare_select, shadow_select};
    use rand::Rng;

    fn line(xs: &[f64]) -> DenseMatrix {
        DenseMatrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    fn random_points(seed: u64, n: usize, d: usize) -> DenseMatrix {
        let mut rng = seeded_rng(seed);
        DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn mmd_cases() {
        let g = KernelConfig::gaussian(1.0).unwrap();
        let x = random_points(1, 8, 2);
        assert!(mmd_biased(&g, &x, &x).unwrap() < 1e-7);
        let perm: Vec<usize> = (0..8).rev().collect();
        assert!(mmd_biased(&g, &x, &x.select_rows(&perm)).unwrap() < 1e-7);
        let want = (2.0 - 2.0 * (-0.5f64).exp()).sqrt();
        assert!((mmd_biased(&g, &line(&[0.0]), &line(&[1.0])).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.8871).abs() < 1e-4);
        assert!(mmd_biased(&g, &x, &random_points(2, 7, 2)).is_err());
    }

    #[test]
    fn quantized_dataset_cases() {
        let g = KernelConfig::gaussian(1.0).unwrap();
        let rs = shadow_select(&line(&[0.0, 0.1, 5.0]), &g, 4.0).unwrap();
        assert_eq!(quantized_dataset(&rs).unwrap().as_slice(), &[0.0, 0.0, 5.0]);

        let x = random_points(3, 6, 2);
        let id = shadow_select(&x, &g, 1e6).unwrap();
        assert_eq!(quantized_dataset(&id).unwrap(), x);

        let one = ReducedSet {
            centers: line(&[2.0]),
            weights: vec![4.0],
            assignment: Some(vec![0; 4]),
            center_indices: None,
            source_n: 4,
        };
        assert_eq!(quantized_dataset(&one).unwrap().as_slice(), &[2.0; 4]);
        let missing = ReducedSet {
            assignment: None,
            ..one
        };
        assert!(matches!(
            quantized_dataset(&missing),
            Err(Error::MissingAssignment)
        ));
    }

    #[test]
    fn bound_closed_forms() {
        let g = KernelConfig::gaussian(1.0).unwrap();
        let l = KernelConfig::laplacian(1.0).unwrap();
        assert!((bound_mmd(&g, 4.0) - (2.0 * (1.0 - (-1.0f64 / 16.0).exp())).sqrt()).abs() < 1e-15);
        assert!((bound_mmd(&g, 4.0) - 0.34810).abs() < 1e-5);
        assert!((bound_mmd(&l, 4.0) - 0.6651).abs() < 1e-4);
        assert!(bound_mmd(&g, 1e9) < 1e-8);
        assert!((bound_eigen(&g, 4.0) - 0.0625).abs() < 1e-15);
        assert!((bound_eigen(&KernelConfig::gaussian(7.0).unwrap(), 4.0) - 0.0625).abs() < 1e-15);
        assert!((bound_eigen(&l, 4.0) - 0.125).abs() < 1e-15);
        assert!((bound_hs(&g, 4.0) - 0.69620).abs() < 1e-5);
        let mut last = f64::INFINITY;
        for i in 1..100 {
            let b = bound_mmd(&l, 0.25 * i as f64);
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn identity_reduction_is_exact() {
        let g = KernelConfig::gaussian(0.6).unwrap();
        let x = random_points(4, 20, 3);
        let rs = shadow_select(&x, &g, 1e6).unwrap();
        for r in bound_reports(&g, &x, &rs, 1e6, 2).unwrap() {
            assert!(r.empirical.abs() < 1e-6, "{r}");
        }
    }

    #[test]
    fn folded_sums_match_explicit_quantized_set() {
        let l = KernelConfig::laplacian(0.8).unwrap();
        let x = random_points(5, 40, 2);
        for rs in [
            shadow_select(&x, &l, 2.0).unwrap(),
            pare_select(&x, 9, 3).unwrap(),
        ] {
            let cbar = quantized_dataset(&rs).unwrap();
            let direct = mmd_biased(&l, &x, &cbar).unwrap();
            let folded = mmd_report(&l, &x, &rs, 2.0).unwrap().empirical;
            assert!((direct - folded).abs() < 1e-10);

            let kx = gram(&l, &x).unwrap();
            let kc = gram(&l, &cbar).unwrap();
            let kxc = cross_gram(&l, &x, &cbar).unwrap();
            let sq = |m: &DenseMatrix| m.as_slice().iter().map(|v| v * v).sum::<f64>();
            let hs = ((sq(&kx) + sq(&kc) - 2.0 * sq(&kxc)) / 1600.0).sqrt();
            assert!((hs - hs_distance(&l, &x, &rs, 2.0).unwrap().empirical).abs() < 1e-10);

            let a = sym_eigenvalues(&kx.scale(1.0 / 40.0)).unwrap();
            let b = sym_eigenvalues(&kc.scale(1.0 / 40.0)).unwrap();
            let dev: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum();
            assert!((dev - eigen_deviation(&l, &x, &rs, 2.0).unwrap().empirical).abs() < 1e-10);
        }
    }

    #[test]
    fn eigen_bound_holds_on_random_set() {
        let g = KernelConfig::gaussian(1.0).unwrap();
        let x = random_points(6, 50, 2);
        let rs = shadow_select(&x, &g, 3.0).unwrap();
        let r = eigen_deviation(&g, &x, &rs, 3.0).unwrap();
        assert_eq!(r.satisfied, Some(true));
        assert!((r.bound - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn hs_distance_is_symmetric() {
        // swapping the roles of X and C̄ gives the same operator distance
        let g = KernelConfig::gaussian(0.9).unwrap();
        let x = random_points(7, 15, 2);
        let rs = shadow_select(&x, &g, 2.0).unwrap();
        let cbar = quantized_dataset(&rs).unwrap();
        let swapped = ReducedSet {
            centers: x.clone(),
            weights: vec![1.0; 15],
            assignment: Some((0..15).collect()),
            center_indices: None,
            source_n: 15,
        };
        let a = hs_distance(&g, &x, &rs, 2.0).unwrap().empirical;
        let b = hs_distance(&g, &cbar, &swapped, 2.0).unwrap().empirical;
        assert!(a >= 0.0);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn projection_two_clusters() {
        let g = KernelConfig::gaussian(1.0).unwrap();
        let mut rng = seeded_rng(8);
        let mut rows = Vec::new();
        for i in 0..30 {
            let c = if i < 20 { 0.0 } else { 6.0 };
            rows.push([
                c + rng.random_range(-0.02..0.02),
                rng.random_range(-0.02..0.02),
            ]);
        }
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let rs = shadow_select(&x, &g, 40.0).unwrap();
        let r = projection_distance(&g, &x, &rs, 40.0, 1).unwrap();
        assert_eq!(r.satisfied, Some(true), "{r}");
        let id = shadow_select(&x, &g, 1e6).unwrap();
        assert!(projection_distance(&g, &x, &id, 1e6, 1).unwrap().empirical < 1e-6);
    }

    #[test]
    fn projection_gap_failure_is_flagged() {
        let g = KernelConfig::gaussian(1.0).unwrap();
        let x = random_points(9, 30, 2);
        let rs = shadow_select(&x, &g, 1.0).unwrap();
        let r = projection_distance(&g, &x, &rs, 1.0, 1).unwrap();
        assert_eq!(r.satisfied, None);
        assert!(r.csv_row().ends_with(",na"));
    }

    #[test]
    fn projection_degenerate_gap_refused() {
        // two far-apart identical clusters: λ_1 = λ_2
        let g = KernelConfig::gaussian(1.0).unwrap();
        let x = line(&[0.0, 0.0, 100.0, 100.0]);
        let rs = shadow_select(&x, &g, 4.0).unwrap();
        assert!(matches!(
            projection_distance(&g, &x, &rs, 4.0, 1),
            Err(Error::DegenerateGap { d: 1, .. })
        ));
    }

    #[test]
    fn alignment_cases() {
        let o = random_points(10, 12, 3);
        let al = align_embeddings(&o, &o).unwrap();
        assert!(al.error < 1e-10);
        assert!(
            al.transform
                .sub(&DenseMatrix::identity(3))
                .unwrap()
                .max_abs()
                < 1e-10
        );

        let flipped =
            DenseMatrix::from_fn(12, 3, |i, j| if j == 1 { -o[(i, j)] } else { o[(i, j)] });
        let al = align_embeddings(&o, &flipped).unwrap();
        assert!(al.error < 1e-10);
        assert!(
            al.transform
                .sub(&DenseMatrix::from_diag(&[1.0, -1.0, 1.0]))
                .unwrap()
                .max_abs()
                < 1e-10
        );

        let r =
            DenseMatrix::from_rows(&[[2.0, 0.5, 0.0], [0.0, 1.0, -1.0], [1.0, 0.0, 3.0]]).unwrap();
        let planted = o.matmul(&r).unwrap();
        let al = align_embeddings(&o, &planted).unwrap();
        assert!(al.error < 1e-9);
        let back = r.matmul(&al.transform).unwrap();
        assert!(back.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-9);

        assert!(align_embeddings(&o, &random_points(1, 11, 3)).is_err());
        let flat = DenseMatrix::from_fn(12, 3, |i, j| if j == 2 { o[(i, 0)] } else { o[(i, j)] });
        assert!(align_embeddings(&o, &flat).unwrap().rank_deficient);
    }

    #[test]
    fn csv_row_layout() {
        let g = KernelConfig::gaussian(2.0).unwrap();
        let x = random_points(11, 10, 2);
        let rs = shadow_select(&x, &g, 3.0).unwrap();
        let r = mmd_report(&g, &x, &rs, 3.0).unwrap();
        let row = r.csv_row();
        assert_eq!(
            row.split(',').count(),
            BoundReport::CSV_HEADER.split(',').count()
        );
        assert!(row.starts_with("MMD,3,2,10,"));
    }
}
