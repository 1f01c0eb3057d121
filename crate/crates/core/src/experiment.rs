//! Experiment runners behind the `rskpca` binary: embedding fidelity,
//! classification, RSDE comparison and bound verification over an ℓ sweep,
//! plus CSV and plot-data emission.
//!
//! Comparison methods that need a subset size use, at each ℓ, the mean
//! number of shadow centers obtained across all repetitions (and folds) at
//! that ℓ, rounded to the nearest integer.
//!
//! `<kind>.csv` holds only quantities reproducible from (spec, seed).
//! Wall-clock timings and speedups go to `<kind>_timing.csv`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataio::{split_indices, Config, DataSet};
use crate::error::{Error, Result};
use crate::eval::{
    kfold_cv, kfold_indices, knn_classify, mean, speedup, time_phases, Phase, PhaseClock,
    PhaseTiming, TimingPlan, TrialResult,
};
use crate::kernels::{gram, weighted_gram, KernelConfig};
use crate::kpca::{
    fit_nystrom, fit_wnystrom, full_from_gram, project, reduced_from_gram, sorted_sample,
    KpcaModel, Variant,
};
use crate::metrics::{align_embeddings, bound_reports, BoundReport, TheoremId};
use crate::numerics::DenseMatrix;
use crate::rsde::{herd_select, kmeans_select, pare_select, shadow_select};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Embedding,
    Classification,
    RsdeCompare,
    Bounds,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Embedding => "embedding",
            ExperimentKind::Classification => "classification",
            ExperimentKind::RsdeCompare => "rsde_compare",
            ExperimentKind::Bounds => "bounds",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "embedding" => ExperimentKind::Embedding,
            "classification" => ExperimentKind::Classification,
            "rsde_compare" => ExperimentKind::RsdeCompare,
            "bounds" => ExperimentKind::Bounds,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown experiment `{other}`"
                )))
            }
        })
    }

    fn default_methods(self) -> &'static [Method] {
        use Method::*;
        match self {
            ExperimentKind::Embedding | ExperimentKind::Classification => {
                &[Full, Shadow, Subsampled, Nystrom, WNystrom]
            }
            ExperimentKind::RsdeCompare => &[Shadow, KMeans, Paring, Herding],
            ExperimentKind::Bounds => &[Shadow],
        }
    }
}

/// A KPCA pipeline: full, one of the Nyström-type baselines, or reduced-set
/// KPCA on top of a particular RSDE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Full,
    Shadow,
    Subsampled,
    Nystrom,
    WNystrom,
    KMeans,
    Paring,
    Herding,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::Shadow => "shadow",
            Method::Subsampled => "subsampled",
            Method::Nystrom => "nystrom",
            Method::WNystrom => "wnystrom",
            Method::KMeans => "kmeans",
            Method::Paring => "paring",
            Method::Herding => "herding",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => Method::Full,
            "shadow" => Method::Shadow,
            "subsampled" => Method::Subsampled,
            "nystrom" => Method::Nystrom,
            "wnystrom" => Method::WNystrom,
            "kmeans" => Method::KMeans,
            "paring" => Method::Paring,
            "herding" => Method::Herding,
            other => return Err(Error::UnknownMethod(other.to_string())),
        })
    }

    fn index(self) -> u64 {
        self as u64
    }
}

/// Validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub config: Config,
    pub methods: Vec<Method>,
    pub ells: Vec<f64>,
    pub repetitions: usize,
    pub rank: usize,
    pub knn_k: usize,
    pub folds: usize,
    pub split_fraction: f64,
    pub bounds_dim: usize,
    pub seed: u64,
    /// `None` disables wall-clock measurement.
    pub timing: Option<TimingPlan>,
}

/// Inclusive grid min, min + step, … ≤ max (values rounded to 1e-9 so they
/// print cleanly).
pub fn ell_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min > 0.0 && max.is_finite() && max >= min) {
        return Err(Error::InvalidParameter(format!(
            "ℓ range [{min}, {max}] must be positive and ascending"
        )));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ℓ step must be positive, got {step}"
        )));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((min + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

impl ExperimentSpec {
    pub fn from_config(config: Config) -> Result<Self> {
        let kind = ExperimentKind::parse(&config.experiment)?;
        let methods = match &config.methods {
            Some(names) => names
                .iter()
                .map(|n| Method::parse(n))
                .collect::<Result<Vec<_>>>()?,
            None => kind.default_methods().to_vec(),
        };
        if methods.is_empty() {
            return Err(Error::InvalidParameter("method list is empty".into()));
        }
        if config.repetitions == 0 {
            return Err(Error::InvalidParameter(
                "repetitions must be at least 1".into(),
            ));
        }
        if config.rank == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        let ells = ell_grid(config.ell_min, config.ell_max, config.ell_step)?;
        Ok(Self {
            kind,
            methods,
            ells,
            repetitions: config.repetitions,
            rank: config.rank,
            knn_k: config.knn_k,
            folds: config.cv_folds,
            split_fraction: config.split_fraction,
            bounds_dim: config.bounds_dim,
            seed: config.seed,
            timing: config.timing_enabled.then_some(TimingPlan {
                runs: config.timing_runs,
                warmup: true,
            }),
            config,
        })
    }

    pub fn kernel_for(&self, ds: &DataSet) -> Result<KernelConfig> {
        KernelConfig::new(self.config.kernel_family, self.config.sigma_for(ds)?)
    }
}

/// splitmix64 over the parts, so every (repetition, ℓ, method) stream is
/// independent and stable.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Fits `method` on `train`, marking RSDE, Gram and eigen phases. Nyström
/// variants do not expose their Gram step, so their whole fit is booked as
/// the eigen phase (the k-means step of WNyström included).
#[allow(clippy::too_many_arguments)]
fn fit_method(
    method: Method,
    train: &DenseMatrix,
    cfg: &KernelConfig,
    ell: f64,
    m: usize,
    r: usize,
    seed: u64,
    clock: &mut PhaseClock,
) -> Result<KpcaModel> {
    let reduced =
        |rs: Result<crate::rsde::ReducedSet>, clock: &mut PhaseClock| -> Result<KpcaModel> {
            let rs = rs?;
            let kt = clock.time(Phase::Gram, || weighted_gram(cfg, &rs))?;
            clock.time(Phase::Eig, || reduced_from_gram(&rs, cfg, kt, r))
        };
    match method {
        Method::Full => {
            let k = clock.time(Phase::Gram, || gram(cfg, train))?;
            clock.time(Phase::Eig, || full_from_gram(train, cfg, k, r))
        }
        Method::Subsampled => {
            if m == 0 || m > train.rows() {
                return Err(Error::InvalidParameter(format!(
                    "subset size {m} out of range"
                )));
            }
            let sub = clock.time(Phase::Rsde, || {
                train.select_rows(&sorted_sample(train.rows(), m, seed))
            });
            let k = clock.time(Phase::Gram, || gram(cfg, &sub))?;
            let mut model = clock.time(Phase::Eig, || full_from_gram(&sub, cfg, k, r))?;
            model.variant = Variant::Subsampled;
            Ok(model)
        }
        Method::Nystrom => clock.time(Phase::Eig, || fit_nystrom(train, cfg, m, r, seed)),
        Method::WNystrom => clock.time(Phase::Eig, || fit_wnystrom(train, cfg, m, r, seed)),
        Method::Shadow => {
            let rs = clock.time(Phase::Rsde, || shadow_select(train, cfg, ell));
            reduced(rs, clock)
        }
        Method::KMeans => {
            let rs = clock.time(Phase::Rsde, || kmeans_select(train, m, seed));
            reduced(rs, clock)
        }
        Method::Paring => {
            let rs = clock.time(Phase::Rsde, || pare_select(train, m, seed));
            reduced(rs, clock)
        }
        Method::Herding => {
            let rs = clock.time(Phase::Rsde, || herd_select(train, cfg, m));
            reduced(rs, clock)
        }
    }
}

/// Fits one method outside any timing harness. `ell` is read by the shadow
/// selector, `m` by every other non-full method.
pub fn fit_by_method(
    method: Method,
    train: &DenseMatrix,
    cfg: &KernelConfig,
    ell: f64,
    m: usize,
    r: usize,
    seed: u64,
) -> Result<KpcaModel> {
    fit_method(
        method,
        train,
        cfg,
        ell,
        m,
        r,
        seed,
        &mut PhaseClock::default(),
    )
}

/// Number of centers the model was built from.
fn model_size(method: Method, model: &KpcaModel, m: usize) -> usize {
    match method {
        Method::Nystrom | Method::WNystrom => m,
        _ => model.basis_len(),
    }
}

/// Fit failures caused by too few centers for the requested rank become
/// empty result cells instead of aborting the sweep.
fn soften<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::RankDeficient { .. }) | Err(Error::InvalidParameter(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Fit plus test projection, timed when a plan is given.
#[allow(clippy::too_many_arguments)]
fn timed_pipeline(
    method: Method,
    train: &DenseMatrix,
    test: &DenseMatrix,
    cfg: &KernelConfig,
    ell: f64,
    m: usize,
    r: usize,
    seed: u64,
    plan: Option<TimingPlan>,
) -> Result<Option<(KpcaModel, DenseMatrix, Option<PhaseTiming>)>> {
    let run = |clock: &mut PhaseClock| -> Result<(KpcaModel, DenseMatrix)> {
        let model = fit_method(method, train, cfg, ell, m, r, seed, clock)?;
        let emb = clock.time(Phase::Project, || project(&model, test))?;
        clock.set_sizes(train.rows(), model_size(method, &model, m), r);
        Ok((model, emb))
    };
    match plan {
        None => Ok(soften(run(&mut PhaseClock::default()))?.map(|(model, emb)| (model, emb, None))),
        Some(plan) => Ok(soften(time_phases(plan, run))?
            .map(|((model, emb), rep)| (model, emb, Some(rep.timing)))),
    }
}

fn eigenvalue_error(reference: &[f64], approx: &[f64]) -> f64 {
    reference
        .iter()
        .zip(approx)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Rounded mean of positive counts.
fn mean_count(counts: &[usize]) -> usize {
    let m = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    (m.round() as usize).max(1)
}

/// Runs `f` over repetitions, concurrently unless trials are timed.
fn over_reps<T: Send>(
    spec: &ExperimentSpec,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if spec.timing.is_some() {
        (0..spec.repetitions).map(f).collect()
    } else {
        (0..spec.repetitions).into_par_iter().map(f).collect()
    }
}

/// Embedding fidelity: per repetition a fresh train/test split; every method
/// is trained on the train part and its test embedding is aligned to full
/// KPCA's.
pub fn run_embedding_experiment(spec: &ExperimentSpec, ds: &DataSet) -> Result<Vec<TrialResult>> {
    let cfg = spec.kernel_for(ds)?;
    let r = spec.rank;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..spec.repetitions)
        .map(|rep| {
            split_indices(
                ds.n(),
                spec.split_fraction,
                derive_seed(spec.seed, &[rep as u64]),
            )
        })
        .collect::<Result<_>>()?;

    // mean shadow size per ℓ over repetitions
    let shadow_m: Vec<usize> = spec
        .ells
        .par_iter()
        .map(|&ell| {
            let counts = splits
                .iter()
                .map(|(tr, _)| Ok(shadow_select(&ds.points.select_rows(tr), &cfg, ell)?.m()))
                .collect::<Result<Vec<_>>>()?;
            Ok(mean_count(&counts))
        })
        .collect::<Result<_>>()?;

    let per_rep = over_reps(spec, |rep| {
        let (tr, te) = &splits[rep];
        let train = ds.points.select_rows(tr);
        let test = ds.points.select_rows(te);
        let n_train = train.rows();
        let (full, full_emb, full_t) = timed_pipeline(
            Method::Full,
            &train,
            &test,
            &cfg,
            0.0,
            n_train,
            r,
            0,
            spec.timing,
        )?
        .ok_or(Error::RankDeficient {
            requested: r,
            available: 0,
        })?;
        let mut rows = Vec::new();
        for (li, &ell) in spec.ells.iter().enumerate() {
            for &method in &spec.methods {
                let seed = derive_seed(spec.seed, &[rep as u64, li as u64, method.index()]);
                let target = if method == Method::Full {
                    n_train
                } else {
                    shadow_m[li].min(n_train)
                };
                let outcome = if method == Method::Full {
                    Some((full.clone(), full_emb.clone(), full_t))
                } else {
                    timed_pipeline(
                        method,
                        &train,
                        &test,
                        &cfg,
                        ell,
                        target,
                        r,
                        seed,
                        spec.timing,
                    )?
                };
                let mut row = TrialResult {
                    method: method.name().into(),
                    ell: Some(ell),
                    m: target,
                    repetition: rep,
                    accuracy: None,
                    embedding_error: None,
                    eigenvalue_error: None,
                    retained_fraction: target as f64 / n_train as f64,
                    timing: None,
                    speedup: None,
                };
                if let Some((model, emb, timing)) = outcome {
                    row.m = model_size(method, &model, target);
                    row.retained_fraction = row.m as f64 / n_train as f64;
                    row.embedding_error = Some(align_embeddings(&full_emb, &emb)?.error);
                    row.eigenvalue_error =
                        Some(eigenvalue_error(&full.eigenvalues, &model.eigenvalues));
                    row.timing = timing;
                    if let (Some(base), Some(t)) = (full_t, timing) {
                        row.speedup = speedup(&base, &t).ok();
                    }
                }
                rows.push(row);
            }
        }
        Ok(rows)
    })?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Embeds train and test with `model` and classifies the test rows by k-NN.
fn classify_with(
    model: &KpcaModel,
    train: &DataSet,
    test_emb: &DenseMatrix,
    k: usize,
) -> Result<Vec<i64>> {
    let train_emb = project(model, &train.points)?;
    knn_classify(&train_emb, train.labels()?, test_emb, k)
}

/// k-fold CV accuracy of KPCA embedding + k-NN for every method and ℓ.
/// Also used by the RSDE comparison, which differs only in its methods.
pub fn run_classification_experiment(
    spec: &ExperimentSpec,
    ds: &DataSet,
) -> Result<Vec<TrialResult>> {
    let labels = ds.labels()?;
    let cfg = spec.kernel_for(ds)?;
    let r = spec.rank;
    let k = spec.knn_k;
    let fold_sets: Vec<Vec<Vec<usize>>> = (0..spec.repetitions)
        .map(|rep| {
            kfold_indices(
                ds.n(),
                Some(labels),
                spec.folds,
                derive_seed(spec.seed, &[rep as u64]),
            )
        })
        .collect::<Result<_>>()?;
    let complement = |test: &[usize]| -> Vec<usize> {
        let mut keep = vec![true; ds.n()];
        test.iter().for_each(|&i| keep[i] = false);
        (0..ds.n()).filter(|&i| keep[i]).collect()
    };

    // shadow sizes per ℓ over every (repetition, fold) training set
    let shadow_m: Vec<usize> = spec
        .ells
        .par_iter()
        .map(|&ell| {
            let counts = fold_sets
                .iter()
                .flatten()
                .map(|te| {
                    Ok(shadow_select(&ds.points.select_rows(&complement(te)), &cfg, ell)?.m())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(mean_count(&counts))
        })
        .collect::<Result<_>>()?;

    let per_rep = over_reps(spec, |rep| {
        let rep_seed = derive_seed(spec.seed, &[rep as u64]);
        // timing runs on the first fold only, after the accuracy pass
        let first_test = ds.subset(&fold_sets[rep][0]);
        let first_train = ds.subset(&complement(&fold_sets[rep][0]));
        let n_train = first_train.n();
        let full_t = match spec.timing {
            Some(plan) => timed_pipeline(
                Method::Full,
                &first_train.points,
                &first_test.points,
                &cfg,
                0.0,
                n_train,
                r,
                0,
                Some(plan),
            )?
            .and_then(|o| o.2),
            None => None,
        };
        let mut full_acc = None;
        let mut rows = Vec::new();
        for (li, &ell) in spec.ells.iter().enumerate() {
            for &method in &spec.methods {
                let seed = derive_seed(spec.seed, &[rep as u64, li as u64, method.index()]);
                let target = if method == Method::Full {
                    usize::MAX
                } else {
                    shadow_m[li]
                };
                let sizes = std::sync::Mutex::new(Vec::new());
                let pipeline = |tr: &DataSet, te: &DataSet| -> Result<Vec<i64>> {
                    let m = target.min(tr.n());
                    let model = fit_method(
                        method,
                        &tr.points,
                        &cfg,
                        ell,
                        m,
                        r,
                        seed,
                        &mut PhaseClock::default(),
                    )?;
                    sizes
                        .lock()
                        .expect("unpoisoned")
                        .push((model_size(method, &model, m), tr.n()));
                    let test_emb = project(&model, &te.points)?;
                    classify_with(&model, tr, &test_emb, k)
                };
                let cv = if method == Method::Full && full_acc.is_some() {
                    full_acc.clone()
                } else {
                    soften(kfold_cv(ds, spec.folds, rep_seed, pipeline))?
                };
                if method == Method::Full {
                    full_acc = cv.clone();
                }
                let sizes = sizes.into_inner().expect("unpoisoned");
                let (m, retained) = if sizes.is_empty() {
                    let m = if method == Method::Full {
                        n_train
                    } else {
                        shadow_m[li]
                    };
                    (m, m as f64 / n_train as f64)
                } else {
                    let ms: Vec<usize> = sizes.iter().map(|s| s.0).collect();
                    let fr: Vec<f64> = sizes.iter().map(|&(m, n)| m as f64 / n as f64).collect();
                    (mean_count(&ms), mean(&fr))
                };
                let mut row = TrialResult {
                    method: method.name().into(),
                    ell: Some(ell),
                    m,
                    repetition: rep,
                    accuracy: cv.map(|c| c.mean_accuracy),
                    embedding_error: None,
                    eigenvalue_error: None,
                    retained_fraction: retained,
                    timing: None,
                    speedup: None,
                };
                if let Some(plan) = spec.timing {
                    let timing = if method == Method::Full {
                        full_t
                    } else {
                        timed_pipeline(
                            method,
                            &first_train.points,
                            &first_test.points,
                            &cfg,
                            ell,
                            target.min(n_train),
                            r,
                            seed,
                            Some(plan),
                        )?
                        .and_then(|o| o.2)
                    };
                    row.timing = timing;
                    if let (Some(base), Some(t)) = (full_t, timing) {
                        row.speedup = speedup(&base, &t).ok();
                    }
                }
                rows.push(row);
            }
        }
        Ok(rows)
    })?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Classification harness with the RSDE selectors as methods.
pub fn run_rsde_compare(spec: &ExperimentSpec, ds: &DataSet) -> Result<Vec<TrialResult>> {
    run_classification_experiment(spec, ds)
}

/// All four bound reports per ℓ for the shadow reduction of the whole
/// dataset. ℓ values are evaluated concurrently.
pub fn run_bounds_experiment(spec: &ExperimentSpec, ds: &DataSet) -> Result<Vec<BoundReport>> {
    let cfg = spec.kernel_for(ds)?;
    let dim = spec.bounds_dim.min(ds.n());
    let per_ell = spec
        .ells
        .par_iter()
        .map(|&ell| {
            let rs = shadow_select(&ds.points, &cfg, ell)?;
            bound_reports(&cfg, &ds.points, &rs, ell, dim)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_ell.into_iter().flatten().collect())
}

#[derive(Debug, Clone)]
pub enum Table {
    Trials(Vec<TrialResult>),
    Bounds(Vec<BoundReport>),
}

#[derive(Debug, Clone)]
pub struct Report {
    pub kind: ExperimentKind,
    pub table: Table,
    pub methods: Vec<Method>,
    pub ells: Vec<f64>,
    pub timed: bool,
}

impl Report {
    /// Rows whose bound precondition holds but whose value exceeds it.
    pub fn violations(&self) -> Vec<&BoundReport> {
        match &self.table {
            Table::Bounds(b) => b.iter().filter(|r| r.satisfied == Some(false)).collect(),
            Table::Trials(_) => Vec::new(),
        }
    }
}

pub fn run(spec: &ExperimentSpec, ds: &DataSet) -> Result<Report> {
    let table = match spec.kind {
        ExperimentKind::Embedding => Table::Trials(run_embedding_experiment(spec, ds)?),
        ExperimentKind::Classification => Table::Trials(run_classification_experiment(spec, ds)?),
        ExperimentKind::RsdeCompare => Table::Trials(run_rsde_compare(spec, ds)?),
        ExperimentKind::Bounds => Table::Bounds(run_bounds_experiment(spec, ds)?),
    };
    Ok(Report {
        kind: spec.kind,
        table,
        methods: spec.methods.clone(),
        ells: spec.ells.clone(),
        timed: spec.timing.is_some(),
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

/// Mean over repetitions of `value` per (ℓ, method); "nan" where no
/// repetition produced a value.
fn panel(
    report: &Report,
    trials: &[TrialResult],
    value: impl Fn(&TrialResult) -> Option<f64>,
) -> String {
    let mut out = String::from("# ell");
    for m in &report.methods {
        out.push(' ');
        out.push_str(m.name());
    }
    out.push('\n');
    for &ell in &report.ells {
        out.push_str(&ell.to_string());
        for m in &report.methods {
            let vals: Vec<f64> = trials
                .iter()
                .filter(|t| t.method == m.name() && t.ell == Some(ell))
                .filter_map(&value)
                .collect();
            out.push(' ');
            out.push_str(&if vals.is_empty() {
                "nan".to_string()
            } else {
                mean(&vals).to_string()
            });
        }
        out.push('\n');
    }
    out
}

type Panel = Box<dyn Fn(&TrialResult) -> Option<f64>>;

/// Writes `<kind>.csv`, `<kind>_timing.csv` for timed runs, and one
/// whitespace-separated plot-data file `<kind>_<panel>.dat` per figure
/// panel (x = ℓ, one column per method). Returns the written paths.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let kind = report.kind.name();
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
        Ok(())
    };
    match &report.table {
        Table::Trials(trials) => {
            let mut csv = format!("{}\n", TrialResult::CSV_HEADER);
            trials
                .iter()
                .for_each(|t| csv.push_str(&format!("{}\n", t.csv_row())));
            emit(format!("{kind}.csv"), csv)?;
            let mut panels: Vec<(&str, Panel)> = Vec::new();
            if report.kind == ExperimentKind::Embedding {
                panels.push(("embedding_error", Box::new(|t| t.embedding_error)));
                panels.push(("eigenvalue_error", Box::new(|t| t.eigenvalue_error)));
            } else {
                panels.push(("accuracy", Box::new(|t| t.accuracy)));
            }
            panels.push(("retained", Box::new(|t| Some(t.retained_fraction))));
            if report.timed {
                let mut timing = format!("{}\n", TrialResult::TIMING_HEADER);
                trials
                    .iter()
                    .for_each(|t| timing.push_str(&format!("{}\n", t.timing_row())));
                emit(format!("{kind}_timing.csv"), timing)?;
                panels.push(("training_speedup", Box::new(|t| t.speedup.map(|s| s.train))));
                panels.push(("testing_speedup", Box::new(|t| t.speedup.map(|s| s.test))));
            }
            for (name, f) in panels {
                emit(format!("{kind}_{name}.dat"), panel(report, trials, f))?;
            }
        }
        Table::Bounds(rows) => {
            let mut csv = format!("{}\n", BoundReport::CSV_HEADER);
            rows.iter()
                .for_each(|r| csv.push_str(&format!("{}\n", r.csv_row())));
            emit(format!("{kind}.csv"), csv)?;
            for th in [
                TheoremId::Mmd,
                TheoremId::Eigen,
                TheoremId::Hs,
                TheoremId::Projection,
            ] {
                let mut body = String::from("# ell empirical bound\n");
                for r in rows.iter().filter(|r| r.theorem == th) {
                    body.push_str(&format!("{} {:e} {:e}\n", r.ell, r.empirical, r.bound));
                }
                emit(format!("{kind}_{}.dat", th.name().to_lowercase()), body)?;
            }
        }
    }
    Ok(written)
}
