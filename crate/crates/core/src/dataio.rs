//! Dataset loading, splitting, scaling, synthetic generators and the flat
//! JSON experiment config.
//!
//! Two on-disk formats are read: the sparse `label index:value` text format
//! (1-based indices, missing entries are zero) and plain numeric CSV with an
//! optional header row. Loaders reject NaN and infinities.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::numerics::{seeded_rng, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub points: DenseMatrix,
    pub labels: Option<Vec<i64>>,
    pub name: String,
}

impl DataSet {
    pub fn new(
        points: DenseMatrix,
        labels: Option<Vec<i64>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.rows() {
                return Err(Error::CardinalityMismatch {
                    left: points.rows(),
                    right: l.len(),
                });
            }
        }
        Ok(Self {
            points,
            labels,
            name: name.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.points.rows()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn labels(&self) -> Result<&[i64]> {
        self.labels.as_deref().ok_or(Error::MissingLabels)
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> DataSet {
        DataSet {
            points: self.points.select_rows(idx),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
            name: self.name.clone(),
        }
    }
}

fn parse_label(tok: &str, line: usize) -> Result<i64> {
    if let Ok(v) = tok.parse::<i64>() {
        return Ok(v);
    }
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 9e15 => Ok(v as i64),
        _ => Err(Error::Parse {
            line,
            msg: format!("label `{tok}` is not an integer"),
        }),
    }
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    match tok.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::Parse {
            line,
            msg: format!("non-finite value `{tok}`"),
        }),
        Err(_) => Err(Error::Parse {
            line,
            msg: format!("non-numeric value `{tok}`"),
        }),
    }
}

/// Parses the sparse format. `min_dim` pads the dimension when trailing
/// features are zero everywhere. Blank lines and `#` comments are skipped.
pub fn read_sparse<R: BufRead>(reader: R, name: &str, min_dim: Option<usize>) -> Result<DataSet> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = min_dim.unwrap_or(0);
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        let label = parse_label(toks.next().unwrap_or_default(), lineno)?;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for tok in toks {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected index:value, got `{tok}`"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad feature index `{idx}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "feature indices are 1-based".into(),
                });
            }
            if entries.iter().any(|&(j, _)| j == idx - 1) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("feature index {idx} repeated"),
                });
            }
            entries.push((idx - 1, parse_value(val, lineno)?));
            dim = dim.max(idx);
        }
        rows.push(entries);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::Empty("sparse file holds no samples"));
    }
    let mut data = vec![0.0; rows.len() * dim];
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            data[i * dim + j] = v;
        }
    }
    DataSet::new(DenseMatrix::new(rows.len(), dim, data)?, Some(labels), name)
}

pub fn load_sparse(path: impl AsRef<Path>) -> Result<DataSet> {
    let path = path.as_ref();
    read_sparse(BufReader::new(File::open(path)?), &stem(path), None)
}

/// Writes nonzero entries only, using the shortest round-tripping decimal
/// representation of each value.
pub fn write_sparse<W: Write>(ds: &DataSet, mut w: W) -> Result<()> {
    let labels = ds.labels()?;
    for (i, row) in ds.points.row_iter().enumerate() {
        write!(w, "{}", labels[i])?;
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                write!(w, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_sparse(ds: &DataSet, path: impl AsRef<Path>) -> Result<()> {
    write_sparse(ds, BufWriter::new(File::create(path)?))
}

/// Parses numeric CSV. A first row containing any non-numeric cell is taken
/// as a header. `label_column` (0-based) is removed from the features and
/// read as integer labels.
pub fn read_csv<R: Read>(reader: R, name: &str, label_column: Option<usize>) -> Result<DataSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| match e.position() {
            Some(p) => Error::Parse {
                line: p.line() as usize,
                msg: e.to_string(),
            },
            None => Error::Csv(e),
        })?;
        let lineno = rec.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if i == 0 && rec.iter().any(|c| c.parse::<f64>().is_err()) {
            width = Some(rec.len());
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {w} fields, found {}", rec.len()),
            });
        }
        if let Some(c) = label_column {
            if c >= w {
                return Err(Error::InvalidParameter(format!(
                    "label column {c} out of range for {w} columns"
                )));
            }
        }
        let mut row = Vec::with_capacity(w);
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == label_column {
                labels.push(parse_label(cell, lineno)?);
            } else {
                row.push(parse_value(cell, lineno)?);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("CSV file holds no samples"));
    }
    let points = DenseMatrix::from_rows(&rows)?;
    DataSet::new(points, label_column.map(|_| labels), name)
}

pub fn load_csv(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<DataSet> {
    let path = path.as_ref();
    read_csv(File::open(path)?, &stem(path), label_column)
}

/// `.csv` files go through [`load_csv`], everything else through
/// [`load_sparse`].
pub fn load_any(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<DataSet> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        load_csv(path, label_column)
    } else {
        load_sparse(path)
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Random train/test index split; each side keeps the original row order.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidParameter(format!(
            "split of {n} samples at {fraction} leaves one side empty"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeded_rng(seed));
    let mut train = perm[..n_train].to_vec();
    let mut test = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(ds: &DataSet, fraction: f64, seed: u64) -> Result<(DataSet, DataSet)> {
    let (tr, te) = split_indices(ds.n(), fraction, seed)?;
    Ok((ds.subset(&tr), ds.subset(&te)))
}

/// Rescales every feature to [0, 1]; constant features map to 0.
pub fn min_max_scale(ds: &DataSet) -> DataSet {
    let (n, d) = (ds.n(), ds.dim());
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in ds.points.row_iter() {
        for j in 0..d {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }
    let points = DenseMatrix::from_fn(n, d, |i, j| {
        let span = hi[j] - lo[j];
        if span > 0.0 {
            (ds.points[(i, j)] - lo[j]) / span
        } else {
            0.0
        }
    });
    DataSet {
        points,
        labels: ds.labels.clone(),
        name: ds.name.clone(),
    }
}

/// Isotropic Gaussian blobs around the given means. Point i belongs to blob
/// `i % k`, which keeps the label histogram balanced to within one.
pub fn blobs_around(means: &DenseMatrix, n: usize, spread: f64, seed: u64) -> DataSet {
    let k = means.rows();
    let d = means.cols();
    let mut rng = seeded_rng(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            data.push(means[(c, j)] + spread * z);
        }
        labels.push(c as i64);
    }
    DataSet {
        points: DenseMatrix::new(n, d, data).expect("finite blob coordinates"),
        labels: Some(labels),
        name: "blobs".into(),
    }
}

/// Blob means are drawn uniformly from [-10, 10]^d.
pub fn synth_blobs(n: usize, d: usize, clusters: usize, spread: f64, seed: u64) -> Result<DataSet> {
    if clusters == 0 {
        return Err(Error::InvalidParameter(
            "at least one cluster is required".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let means = DenseMatrix::from_fn(clusters, d, |_, _| rng.random_range(-10.0..10.0));
    Ok(blobs_around(&means, n, spread, seed.wrapping_add(1)))
}

/// Random d×k matrix with orthonormal columns (Gram–Schmidt on Gaussians).
fn orthonormal_frame(d: usize, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            cols.push(v);
        }
    }
    cols
}

/// Stand-in for the 24-feature credit data: a curved 3-dimensional latent
/// manifold embedded in ℝ²⁴ with small isotropic noise, at a scale where the
/// default bandwidth σ = 30 is meaningful. Labels split the latent cube.
pub fn german_like(n: usize, seed: u64) -> DataSet {
    const D: usize = 24;
    const SIDE: f64 = 60.0;
    const NOISE: f64 = 0.5;
    let mut rng = seeded_rng(seed);
    let frame = orthonormal_frame(D, 5, &mut rng);
    let mut data = Vec::with_capacity(n * D);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let z: [f64; 3] = [
            rng.random_range(0.0..SIDE),
            rng.random_range(0.0..SIDE),
            rng.random_range(0.0..SIDE),
        ];
        let bend = [
            (z[0] - SIDE / 2.0).powi(2) / SIDE,
            (z[1] - SIDE / 2.0) * (z[2] - SIDE / 2.0) / SIDE,
        ];
        let latent = [z[0], z[1], z[2], bend[0], bend[1]];
        for j in 0..D {
            let mut v: f64 = frame.iter().zip(&latent).map(|(f, l)| f[j] * l).sum();
            let e: f64 = rng.sample(StandardNormal);
            v += NOISE * e;
            data.push(v);
        }
        labels.push(i64::from(z[0] + 0.5 * z[1] > 0.75 * SIDE));
    }
    DataSet {
        points: DenseMatrix::new(n, D, data).expect("finite coordinates"),
        labels: Some(labels),
        name: "german_like".into(),
    }
}

/// Heavily duplicated data: 200 tight clusters (spread 0.002) on a grid of
/// spacing 1 in ℝ⁵, so with σ = 1 every ℓ up to 40 keeps one center per
/// cluster.
pub fn redundant(n: usize, seed: u64) -> DataSet {
    const CLUSTERS: usize = 200;
    const D: usize = 5;
    let mut rng = seeded_rng(seed);
    let mut means = Vec::with_capacity(CLUSTERS);
    let mut taken = std::collections::BTreeSet::new();
    while means.len() < CLUSTERS {
        let cell: [i32; D] = std::array::from_fn(|_| rng.random_range(0..4));
        if taken.insert(cell) {
            means.push(cell.map(f64::from));
        }
    }
    let means = DenseMatrix::from_rows(&means).expect("finite means");
    let mut ds = blobs_around(&means, n, 0.002, seed.wrapping_add(1));
    ds.name = "redundant".into();
    ds
}

/// Labelled multi-blob benchmark: 6 classes in ℝ⁴, each a pair of
/// overlapping sub-blobs, used with σ = 8.
pub fn multi_blob(n: usize, seed: u64) -> DataSet {
    const CLASSES: usize = 6;
    const D: usize = 4;
    let mut rng = seeded_rng(seed);
    let means = DenseMatrix::from_fn(2 * CLASSES, D, |_, _| rng.random_range(-6.0..6.0));
    let mut ds = blobs_around(&means, n, 1.2, seed.wrapping_add(1));
    if let Some(l) = ds.labels.as_mut() {
        l.iter_mut().for_each(|c| *c %= CLASSES as i64);
    }
    ds.name = "multi_blob".into();
    ds
}

/// Six tight, well-separated classes in ℝ⁴ (spread 0.1, means at least 7
/// apart) with unequal sizes 35/25/15/12/8/5 %, used with σ = 2. At small ℓ
/// only a handful of centers survive, so whether a reduced set covers every
/// class decides the accuracy.
pub fn separated_blobs(n: usize, seed: u64) -> DataSet {
    const SHARES: [f64; 6] = [0.35, 0.25, 0.15, 0.12, 0.08, 0.05];
    let means = DenseMatrix::from_rows(&[
        [0.0, 0.0, 0.0, 0.0],
        [7.0, 0.0, 0.0, 0.0],
        [0.0, 7.0, 0.0, 0.0],
        [0.0, 0.0, 7.0, 0.0],
        [0.0, 0.0, 0.0, 7.0],
        [7.0, 7.0, 0.0, 0.0],
    ])
    .expect("finite means");
    let mut rng = seeded_rng(seed);
    let mut data = Vec::with_capacity(n * 4);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // exact class shares; rows are shuffled below
        let u = (i as f64 + 0.5) / n as f64;
        let mut acc = 0.0;
        let c = SHARES
            .iter()
            .position(|s| {
                acc += s;
                u < acc
            })
            .unwrap_or(SHARES.len() - 1);
        for j in 0..4 {
            let z: f64 = rng.sample(StandardNormal);
            data.push(means[(c, j)] + 0.1 * z);
        }
        labels.push(c as i64);
    }
    let ds = DataSet {
        points: DenseMatrix::new(n, 4, data).expect("finite coordinates"),
        labels: Some(labels),
        name: "separated_blobs".into(),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    ds.subset(&order)
}

/// Named synthetic generators, also reachable from configs.
pub fn synthetic(name: &str, n: usize, seed: u64) -> Result<DataSet> {
    match name {
        "german" | "german_like" => Ok(german_like(n, seed)),
        "redundant" => Ok(redundant(n, seed)),
        "blobs" | "multi_blob" => Ok(multi_blob(n, seed)),
        "separated" | "separated_blobs" => Ok(separated_blobs(n, seed)),
        other => Err(Error::InvalidParameter(format!(
            "unknown synthetic dataset `{other}`"
        ))),
    }
}

/// Bandwidths shipped with the toolkit, keyed by dataset name.
pub fn default_sigma(name: &str) -> Option<f64> {
    let table: BTreeMap<&str, f64> = [
        ("german", 30.0),
        ("german_like", 30.0),
        ("pendigits", 120.0),
        ("usps", 18.0),
        ("yale", 17.0),
        ("redundant", 1.0),
        ("multi_blob", 8.0),
        ("blobs", 8.0),
        ("separated_blobs", 2.0),
    ]
    .into_iter()
    .collect();
    table.get(name).copied()
}

/// Flat key-value experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "defaults::experiment")]
    pub experiment: String,
    #[serde(rename = "dataset.path", default)]
    pub dataset_path: Option<PathBuf>,
    /// Name of a built-in generator, used when no path is given.
    #[serde(rename = "dataset.synthetic", default)]
    pub dataset_synthetic: Option<String>,
    #[serde(rename = "dataset.n", default)]
    pub dataset_n: Option<usize>,
    #[serde(rename = "dataset.label_column", default)]
    pub label_column: Option<usize>,
    #[serde(rename = "dataset.min_max_scale", default)]
    pub min_max_scale: bool,
    #[serde(rename = "kernel.family", default = "defaults::family")]
    pub kernel_family: KernelFamily,
    #[serde(rename = "kernel.sigma", default)]
    pub kernel_sigma: Option<f64>,
    #[serde(rename = "sweep.ell_min", default = "defaults::ell_min")]
    pub ell_min: f64,
    #[serde(rename = "sweep.ell_max", default = "defaults::ell_max")]
    pub ell_max: f64,
    #[serde(rename = "sweep.ell_step", default = "defaults::ell_step")]
    pub ell_step: f64,
    #[serde(default = "defaults::rank")]
    pub rank: usize,
    #[serde(rename = "knn.k", default = "defaults::knn_k")]
    pub knn_k: usize,
    #[serde(rename = "cv.folds", default = "defaults::folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub methods: Option<Vec<String>>,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
    #[serde(rename = "split.fraction", default = "defaults::fraction")]
    pub split_fraction: f64,
    /// Eigenspace dimension for the projection bound.
    #[serde(rename = "bounds.dim", default = "defaults::bounds_dim")]
    pub bounds_dim: usize,
    /// Wall-clock measurement of every trial; serializes repetitions.
    #[serde(rename = "timing.enabled", default = "defaults::timing_enabled")]
    pub timing_enabled: bool,
    /// Timed runs per measurement; the median is kept.
    #[serde(rename = "timing.runs", default = "defaults::timing_runs")]
    pub timing_runs: usize,
}

mod defaults {
    use crate::kernels::KernelFamily;
    pub fn experiment() -> String {
        "embedding".into()
    }
    pub fn family() -> KernelFamily {
        KernelFamily::Gaussian
    }
    pub fn ell_min() -> f64 {
        3.0
    }
    pub fn ell_max() -> f64 {
        5.0
    }
    pub fn ell_step() -> f64 {
        0.1
    }
    pub fn rank() -> usize {
        5
    }
    pub fn knn_k() -> usize {
        3
    }
    pub fn folds() -> usize {
        10
    }
    pub fn repetitions() -> usize {
        10
    }
    pub fn fraction() -> f64 {
        0.8
    }
    pub fn bounds_dim() -> usize {
        1
    }
    pub fn timing_enabled() -> bool {
        true
    }
    pub fn timing_runs() -> usize {
        3
    }
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all keys have defaults")
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    /// Loads or generates the dataset and applies optional scaling.
    pub fn dataset(&self) -> Result<DataSet> {
        let ds = match (&self.dataset_path, &self.dataset_synthetic) {
            (Some(p), _) => load_any(p, self.label_column)?,
            (None, Some(name)) => synthetic(name, self.dataset_n.unwrap_or(1000), self.seed)?,
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "config needs `dataset.path` or `dataset.synthetic`".into(),
                ))
            }
        };
        Ok(if self.min_max_scale {
            min_max_scale(&ds)
        } else {
            ds
        })
    }

    /// Explicit `kernel.sigma`, else the shipped default for the dataset.
    pub fn sigma_for(&self, ds: &DataSet) -> Result<f64> {
        self.kernel_sigma
            .or_else(|| default_sigma(&ds.name))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no `kernel.sigma` given and no default for `{}`",
                    ds.name
                ))
            })
    }
}
