//! Kernel PCA models.
//!
//! Every fit decomposes a Gram-type matrix normalised by the number of
//! samples it stands for, keeps the top `r` eigenpairs, and stores a
//! projection rule of the form
//!
//! ```text
//! embed(x)_i = Σ_j coeff[j, i] · basis_weight[j] · k(basis[j], x)
//! ```
//!
//! Full and reduced-set models scale coefficient column `i` by
//! 1/√(n λ_i), which makes each principal direction a unit vector in the
//! feature space. A reduced-set model built from an identity reduction (every
//! point its own center with weight 1) is the full model exactly.

use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{cross_gram, gram, weighted_gram, KernelConfig, KernelFamily};
use crate::numerics::{seeded_rng, sym_eig, DenseMatrix, EigenDecomposition};
use crate::rsde::{kmeans_select, ReducedSet};

/// Eigenvalues of the normalised Gram matrix below this are treated as zero.
pub const SPECTRUM_FLOOR: f64 = 1e-12;
/// Ridge added to a numerically singular landmark Gram matrix.
pub const NYSTROM_RIDGE: f64 = 1e-10;

const MODEL_MAGIC: &str = "rskpca-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    ReducedSet,
    Subsampled,
    Nystrom,
    WNystrom,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::ReducedSet => "reduced_set",
            Variant::Subsampled => "subsampled",
            Variant::Nystrom => "nystrom",
            Variant::WNystrom => "wnystrom",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => Variant::Full,
            "reduced_set" => Variant::ReducedSet,
            "subsampled" => Variant::Subsampled,
            "nystrom" => Variant::Nystrom,
            "wnystrom" => Variant::WNystrom,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown model variant `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    pub variant: Variant,
    pub kernel: KernelConfig,
    /// Points the projection sums over (m for reduced-set models, n for
    /// full and Nyström models).
    pub basis_points: DenseMatrix,
    /// Multiplier applied to k(basis_j, ·) at projection time.
    pub basis_weights: Vec<f64>,
    /// RSDE weights the model was trained from (reduced-set and WNyström).
    pub density_weights: Option<Vec<f64>>,
    /// Top-r eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// basis × r projection coefficients.
    pub coeff: DenseMatrix,
    /// A ridge was added to a singular landmark matrix.
    pub regularized: bool,
}

impl KpcaModel {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.basis_points.cols()
    }

    pub fn basis_len(&self) -> usize {
        self.basis_points.rows()
    }
}

fn check_rank(r: usize, available: usize) -> Result<()> {
    if r == 0 || r > available {
        return Err(Error::InvalidParameter(format!(
            "rank must be in 1..={available}, got {r}"
        )));
    }
    Ok(())
}

/// Keeps the top `r` pairs and checks they are numerically nonzero.
fn leading_pairs(
    eig: &EigenDecomposition,
    r: usize,
    floor: f64,
) -> Result<(Vec<f64>, DenseMatrix)> {
    let available = eig.eigenvalues.iter().filter(|&&l| l >= floor).count();
    if eig.eigenvalues[r - 1] < floor {
        return Err(Error::RankDeficient {
            requested: r,
            available,
        });
    }
    Ok((
        eig.eigenvalues[..r].to_vec(),
        eig.eigenvectors.leading_columns(r),
    ))
}

/// Coefficients u_i / √(n λ_i).
fn scaled_coeff(vectors: &DenseMatrix, values: &[f64], n: f64) -> DenseMatrix {
    let scale: Vec<f64> = values.iter().map(|l| 1.0 / (n * l).sqrt()).collect();
    DenseMatrix::from_fn(vectors.rows(), values.len(), |j, i| {
        vectors[(j, i)] * scale[i]
    })
}

/// Full KPCA: top `r` eigenpairs of K/n.
pub fn fit_full(points: &DenseMatrix, cfg: &KernelConfig, r: usize) -> Result<KpcaModel> {
    check_rank(r, points.rows())?;
    full_from_gram(points, cfg, gram(cfg, points)?, r)
}

/// [`fit_full`] with the Gram matrix of `points` supplied by the caller.
pub fn full_from_gram(
    points: &DenseMatrix,
    cfg: &KernelConfig,
    k: DenseMatrix,
    r: usize,
) -> Result<KpcaModel> {
    let n = points.rows();
    check_rank(r, n)?;
    if k.rows() != n || k.cols() != n {
        return Err(Error::Shape(format!("Gram matrix must be {n}x{n}")));
    }
    let k = k.scale(1.0 / n as f64);
    let eig = sym_eig(&k)?;
    let (values, vectors) = leading_pairs(&eig, r, SPECTRUM_FLOOR)?;
    Ok(KpcaModel {
        variant: Variant::Full,
        kernel: *cfg,
        basis_points: points.clone(),
        basis_weights: vec![1.0; n],
        density_weights: None,
        coeff: scaled_coeff(&vectors, &values, n as f64),
        eigenvalues: values,
        regularized: false,
    })
}

/// Reduced-set KPCA: decomposes K̃/n = W K^C W / n and projects through the
/// √w-weighted kernel features of the centers. Only the reduced set is read.
pub fn fit_reduced(rs: &ReducedSet, cfg: &KernelConfig, r: usize) -> Result<KpcaModel> {
    rs.validate()?;
    check_rank(r, rs.m())?;
    reduced_from_gram(rs, cfg, weighted_gram(cfg, rs)?, r)
}

/// [`fit_reduced`] with the weighted center Gram matrix W K^C W supplied by
/// the caller.
pub fn reduced_from_gram(
    rs: &ReducedSet,
    cfg: &KernelConfig,
    kt: DenseMatrix,
    r: usize,
) -> Result<KpcaModel> {
    rs.validate()?;
    check_rank(r, rs.m())?;
    if kt.rows() != rs.m() || kt.cols() != rs.m() {
        return Err(Error::Shape(format!(
            "weighted Gram matrix must be {0}x{0}",
            rs.m()
        )));
    }
    let n = rs.source_n as f64;
    let kt = kt.scale(1.0 / n);
    let eig = sym_eig(&kt)?;
    let (values, vectors) = leading_pairs(&eig, r, SPECTRUM_FLOOR)?;
    Ok(KpcaModel {
        variant: Variant::ReducedSet,
        kernel: *cfg,
        basis_points: rs.centers.clone(),
        basis_weights: rs.weights.iter().map(|w| w.sqrt()).collect(),
        density_weights: Some(rs.weights.clone()),
        coeff: scaled_coeff(&vectors, &values, n),
        eigenvalues: values,
        regularized: false,
    })
}

/// Sorted uniform sample of `m` indices out of `n`.
pub fn sorted_sample(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded_rng(seed);
    let mut idx = sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    idx
}

fn check_sizes(n: usize, m: usize, r: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "subset size must be in 1..={n}, got {m}"
        )));
    }
    check_rank(r, m)
}

/// Full KPCA on a uniform random subset of `m` points (kept in input order).
pub fn fit_subsampled(
    points: &DenseMatrix,
    cfg: &KernelConfig,
    m: usize,
    r: usize,
    seed: u64,
) -> Result<KpcaModel> {
    check_sizes(points.rows(), m, r)?;
    let idx = sorted_sample(points.rows(), m, seed);
    let mut model = fit_full(&points.select_rows(&idx), cfg, r)?;
    model.variant = Variant::Subsampled;
    Ok(model)
}

/// Eigendecomposition of a landmark matrix, adding a small ridge when it is
/// numerically singular.
fn landmark_eig(mut k: DenseMatrix, r: usize) -> Result<(Vec<f64>, DenseMatrix, bool)> {
    let mut eig = sym_eig(&k)?;
    let mut regularized = false;
    if eig.eigenvalues.last().is_some_and(|&l| l < NYSTROM_RIDGE) {
        for i in 0..k.rows() {
            k[(i, i)] += NYSTROM_RIDGE;
        }
        eig = sym_eig(&k)?;
        regularized = true;
    }
    // components carried only by the ridge are not signal
    let floor = if regularized {
        10.0 * NYSTROM_RIDGE
    } else {
        SPECTRUM_FLOOR
    };
    let (values, vectors) = leading_pairs(&eig, r, floor)?;
    Ok((values, vectors, regularized))
}

/// Extends landmark eigenvectors to all `n` points:
/// û_i = (cross · v_i) / (scale · λ_i), then folds in 1/√(n λ_i).
#[allow(clippy::too_many_arguments)]
fn nystrom_model(
    variant: Variant,
    points: &DenseMatrix,
    cfg: &KernelConfig,
    cross: &DenseMatrix,
    values: Vec<f64>,
    vectors: &DenseMatrix,
    extension_scale: f64,
    density_weights: Option<Vec<f64>>,
    regularized: bool,
) -> Result<KpcaModel> {
    let n = points.rows() as f64;
    let mut ext = cross.matmul(vectors)?;
    for row in 0..ext.rows() {
        for (i, l) in values.iter().enumerate() {
            ext[(row, i)] /= extension_scale * l;
        }
    }
    Ok(KpcaModel {
        variant,
        kernel: *cfg,
        basis_points: points.clone(),
        basis_weights: vec![1.0; points.rows()],
        density_weights,
        coeff: scaled_coeff(&ext, &values, n),
        eigenvalues: values,
        regularized,
    })
}

/// Nyström KPCA with `m` uniformly sampled landmarks.
///
/// The m×m landmark Gram matrix divided by m is decomposed; its eigenvalues
/// estimate those of K/n, and its eigenvectors are extended to the training
/// set through the n×m cross-Gram matrix (Williams–Seeger extension). The
/// model keeps all `n` training points as its projection basis.
pub fn fit_nystrom(
    points: &DenseMatrix,
    cfg: &KernelConfig,
    m: usize,
    r: usize,
    seed: u64,
) -> Result<KpcaModel> {
    let n = points.rows();
    check_sizes(n, m, r)?;
    let idx = sorted_sample(n, m, seed);
    let landmarks = points.select_rows(&idx);
    let kmm = gram(cfg, &landmarks)?.scale(1.0 / m as f64);
    let (values, vectors, regularized) = landmark_eig(kmm, r)?;
    let cross = cross_gram(cfg, points, &landmarks)?;
    // û = √(m/n) K_nm u / (m λ) = K_nm u / (√(nm) λ)
    let scale = (n as f64 * m as f64).sqrt();
    nystrom_model(
        Variant::Nystrom,
        points,
        cfg,
        &cross,
        values,
        &vectors,
        scale,
        None,
        regularized,
    )
}

/// Density-weighted Nyström: k-means landmarks weighted by cluster size.
/// Decomposes √w_i k(c_i, c_j) √w_j / n and extends through the √w-weighted
/// cross-Gram matrix; all `n` training points are kept for projection.
pub fn fit_wnystrom(
    points: &DenseMatrix,
    cfg: &KernelConfig,
    m: usize,
    r: usize,
    seed: u64,
) -> Result<KpcaModel> {
    let n = points.rows();
    check_sizes(n, m, r)?;
    let rs = kmeans_select(points, m, seed)?;
    let kt = weighted_gram(cfg, &rs)?.scale(1.0 / n as f64);
    let (values, vectors, regularized) = landmark_eig(kt, r)?;
    let mut cross = cross_gram(cfg, points, &rs.centers)?;
    for row in 0..cross.rows() {
        for (j, w) in rs.weights.iter().enumerate() {
            cross[(row, j)] *= w.sqrt();
        }
    }
    nystrom_model(
        Variant::WNystrom,
        points,
        cfg,
        &cross,
        values,
        &vectors,
        n as f64,
        Some(rs.weights),
        regularized,
    )
}

/// Embeds each row of `points` into the model's r-dimensional eigenspace.
/// Cost per point is O(r · basis_len).
pub fn project(model: &KpcaModel, points: &DenseMatrix) -> Result<DenseMatrix> {
    if points.cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: points.cols(),
        });
    }
    let r = model.rank();
    let cfg = model.kernel;
    let data: Vec<f64> = (0..points.rows())
        .into_par_iter()
        .flat_map_iter(|t| {
            let x = points.row(t);
            let mut out = vec![0.0; r];
            for (j, b) in model.basis_points.row_iter().enumerate() {
                let f = model.basis_weights[j] * cfg.eval_unchecked(b, x);
                for (o, c) in out.iter_mut().zip(model.coeff.row(j)) {
                    *o += f * c;
                }
            }
            out
        })
        .collect();
    DenseMatrix::new(points.rows(), r, data)
}

fn write_values<W: Write>(w: &mut W, label: &str, values: &[f64]) -> std::io::Result<()> {
    write!(w, "{label}")?;
    for v in values {
        write!(w, " {v:e}")?;
    }
    writeln!(w)
}

/// Writes the model in the versioned text format described in the README.
pub fn save_model<W: Write>(model: &KpcaModel, mut w: W) -> Result<()> {
    writeln!(w, "{MODEL_MAGIC} {MODEL_VERSION}")?;
    writeln!(w, "variant {}", model.variant.name())?;
    writeln!(
        w,
        "kernel {} {:e}",
        model.kernel.family.name(),
        model.kernel.sigma()
    )?;
    writeln!(
        w,
        "shape {} {} {}",
        model.basis_len(),
        model.dim(),
        model.rank()
    )?;
    writeln!(w, "regularized {}", u8::from(model.regularized))?;
    write_values(&mut w, "eigenvalues", &model.eigenvalues)?;
    write_values(&mut w, "basis_weights", &model.basis_weights)?;
    match &model.density_weights {
        Some(dw) => write_values(&mut w, "density_weights", dw)?,
        None => writeln!(w, "density_weights -")?,
    }
    writeln!(w, "basis")?;
    for row in model.basis_points.row_iter() {
        write_values(&mut w, "p", row)?;
    }
    writeln!(w, "coeff")?;
    for row in model.coeff.row_iter() {
        write_values(&mut w, "c", row)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_fields(&mut self, key: &str) -> Result<Vec<String>> {
        self.line += 1;
        let line = self.inner.next().ok_or_else(|| Error::Parse {
            line: self.line,
            msg: format!("unexpected end of model, expected `{key}`"),
        })??;
        let mut it = line.split_whitespace().map(str::to_owned);
        match it.next() {
            Some(k) if k == key => Ok(it.collect()),
            other => Err(Error::Parse {
                line: self.line,
                msg: format!("expected `{key}`, found {other:?}"),
            }),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn floats(&mut self, key: &str, expect: usize) -> Result<Vec<f64>> {
        let fields = self.next_fields(key)?;
        if fields.len() != expect {
            return Err(self.err(format!(
                "`{key}` has {} values, expected {expect}",
                fields.len()
            )));
        }
        fields
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| self.err(format!("bad number `{s}`")))
            })
            .collect()
    }
}

/// Reads a model written by [`save_model`].
pub fn load_model<R: BufRead>(r: R) -> Result<KpcaModel> {
    let mut lines = Lines {
        inner: r.lines(),
        line: 0,
    };
    let header = lines.next_fields(MODEL_MAGIC)?;
    if header.first().map(String::as_str) != Some("1") {
        return Err(lines.err(format!("unsupported model version {header:?}")));
    }
    let variant = Variant::parse(lines.next_fields("variant")?.first().map_or("", |s| s))?;
    let kernel = lines.next_fields("kernel")?;
    if kernel.len() != 2 {
        return Err(lines.err("kernel line needs family and sigma"));
    }
    let family: KernelFamily = kernel[0].parse()?;
    let sigma: f64 = kernel[1].parse().map_err(|_| lines.err("bad sigma"))?;
    let shape: Vec<usize> = lines
        .next_fields("shape")?
        .iter()
        .map(|s| s.parse().map_err(|_| lines.err("bad shape")))
        .collect::<Result<_>>()?;
    let [b, d, r] = shape[..] else {
        return Err(lines.err("shape needs three counts"));
    };
    let regularized = lines
        .next_fields("regularized")?
        .first()
        .map(String::as_str)
        == Some("1");
    let eigenvalues = lines.floats("eigenvalues", r)?;
    let basis_weights = lines.floats("basis_weights", b)?;
    let dw = lines.next_fields("density_weights")?;
    let density_weights = if dw.len() == 1 && dw[0] == "-" {
        None
    } else {
        Some(
            dw.iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| lines.err(format!("bad number `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?,
        )
    };
    lines.next_fields("basis")?;
    let mut basis = Vec::with_capacity(b * d);
    for _ in 0..b {
        basis.extend(lines.floats("p", d)?);
    }
    lines.next_fields("coeff")?;
    let mut coeff = Vec::with_capacity(b * r);
    for _ in 0..b {
        coeff.extend(lines.floats("c", r)?);
    }
    Ok(KpcaModel {
        variant,
        kernel: KernelConfig::new(family, sigma)?,
        basis_points: DenseMatrix::new(b, d, basis)?,
        basis_weights,
        density_weights,
        eigenvalues,
        coeff: DenseMatrix::new(b, r, coeff)?,
        regularized,
    })
}
