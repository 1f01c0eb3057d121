//! Downstream evaluation: k-NN on embeddings, stratified k-fold
//! cross-validation, wall-clock phase timing and speedups.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataio::DataSet;
use crate::error::{Error, Result};
use crate::kernels::sq_dist;
use crate::numerics::{seeded_rng, DenseMatrix};

/// Majority vote among the `k` nearest training rows (Euclidean). Vote ties
/// go to the label with the smallest summed neighbour distance, then to the
/// lowest label. Equidistant neighbours are ranked by training index.
pub fn knn_classify(
    train: &DenseMatrix,
    labels: &[i64],
    test: &DenseMatrix,
    k: usize,
) -> Result<Vec<i64>> {
    let n = train.rows();
    if n == 0 {
        return Err(Error::Empty("k-NN training set"));
    }
    if labels.len() != n {
        return Err(Error::CardinalityMismatch {
            left: n,
            right: labels.len(),
        });
    }
    if train.cols() != test.cols() {
        return Err(Error::DimensionMismatch {
            expected: train.cols(),
            found: test.cols(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }
    let predict = |x: &[f64]| {
        let mut d: Vec<(f64, usize)> = train
            .row_iter()
            .enumerate()
            .map(|(i, t)| (sq_dist(t, x), i))
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < n {
            d.select_nth_unstable_by(k - 1, by_dist);
        }
        // label -> (votes, summed distance)
        let mut votes: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
        for &(dist, i) in &d[..k] {
            let e = votes.entry(labels[i]).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += dist.sqrt();
        }
        votes
            .into_iter()
            .min_by(|a, b| {
                b.1 .0
                    .cmp(&a.1 .0)
                    .then(a.1 .1.total_cmp(&b.1 .1))
                    .then(a.0.cmp(&b.0))
            })
            .map(|(label, _)| label)
            .expect("k >= 1")
    };
    Ok((0..test.rows())
        .into_par_iter()
        .map(|t| predict(test.row(t)))
        .collect())
}

pub fn accuracy(predicted: &[i64], truth: &[i64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::CardinalityMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("accuracy over no samples"));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Fold index sets. With labels, each class is shuffled and dealt round-robin
/// continuing across classes, which stratifies and keeps fold sizes within
/// one of each other. Each fold is returned sorted.
pub fn kfold_indices(
    n: usize,
    labels: Option<&[i64]>,
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if n < folds {
        return Err(Error::InvalidParameter(format!(
            "{n} samples cannot fill {folds} folds"
        )));
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        groups
            .entry(labels.map_or(0, |l| l[i]))
            .or_default()
            .push(i);
    }
    let mut rng = seeded_rng(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for (_, mut idx) in groups {
        idx.shuffle(&mut rng);
        for i in idx {
            out[next % folds].push(i);
            next += 1;
        }
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Runs `pipeline(train, test) -> predicted test labels` on every fold,
/// folds in parallel.
pub fn kfold_cv<F>(ds: &DataSet, folds: usize, seed: u64, pipeline: F) -> Result<CvResult>
where
    F: Fn(&DataSet, &DataSet) -> Result<Vec<i64>> + Sync,
{
    let labels = ds.labels()?;
    let parts = kfold_indices(ds.n(), Some(labels), folds, seed)?;
    let fold_accuracies = parts
        .par_iter()
        .map(|test_idx| {
            let mut in_test = vec![false; ds.n()];
            test_idx.iter().for_each(|&i| in_test[i] = true);
            let train_idx: Vec<usize> = (0..ds.n()).filter(|&i| !in_test[i]).collect();
            let test = ds.subset(test_idx);
            let predicted = pipeline(&ds.subset(&train_idx), &test)?;
            accuracy(&predicted, test.labels()?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CvResult {
        mean_accuracy: mean(&fold_accuracies),
        fold_accuracies,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Rsde,
    Gram,
    Eig,
    Project,
}

/// Wall-clock durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTiming {
    pub rsde_ms: f64,
    pub gram_ms: f64,
    pub eig_ms: f64,
    pub project_ms: f64,
    pub n: usize,
    pub m: usize,
    pub r: usize,
}

impl PhaseTiming {
    pub fn train_ms(&self) -> f64 {
        self.rsde_ms + self.gram_ms + self.eig_ms
    }

    pub fn total_ms(&self) -> f64 {
        self.train_ms() + self.project_ms
    }
}

/// Accumulates time per phase during one pipeline run.
#[derive(Debug, Default)]
pub struct PhaseClock {
    spent: [Duration; 4],
    sizes: (usize, usize, usize),
}

impl PhaseClock {
    pub fn time<T>(&mut self, phase: Phase, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.spent[phase as usize] += start.elapsed();
        out
    }

    pub fn set_sizes(&mut self, n: usize, m: usize, r: usize) {
        self.sizes = (n, m, r);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingPlan {
    /// Measured runs; each phase reports its median.
    pub runs: usize,
    /// One unmeasured run first.
    pub warmup: bool,
}

impl Default for TimingPlan {
    fn default() -> Self {
        Self {
            runs: 3,
            warmup: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingReport {
    pub timing: PhaseTiming,
    /// Coefficient of variation of the total time across measured runs.
    pub total_cv: f64,
}

/// Times a pipeline that marks its phases on the supplied clock. Returns the
/// output of the last run.
pub fn time_phases<T>(
    plan: TimingPlan,
    mut run: impl FnMut(&mut PhaseClock) -> Result<T>,
) -> Result<(T, TimingReport)> {
    if plan.runs == 0 {
        return Err(Error::InvalidParameter(
            "timing needs at least one run".into(),
        ));
    }
    if plan.warmup {
        run(&mut PhaseClock::default())?;
    }
    let mut samples: Vec<[f64; 4]> = Vec::with_capacity(plan.runs);
    let mut last = None;
    let mut sizes = (0, 0, 0);
    for _ in 0..plan.runs {
        let mut clock = PhaseClock::default();
        last = Some(run(&mut clock)?);
        sizes = clock.sizes;
        samples.push(clock.spent.map(|d| d.as_secs_f64() * 1e3));
    }
    let med = |p: usize| median(&samples.iter().map(|s| s[p]).collect::<Vec<_>>());
    let totals: Vec<f64> = samples.iter().map(|s| s.iter().sum()).collect();
    let m = mean(&totals);
    let timing = PhaseTiming {
        rsde_ms: med(0),
        gram_ms: med(1),
        eig_ms: med(2),
        project_ms: med(3),
        n: sizes.0,
        m: sizes.1,
        r: sizes.2,
    };
    let total_cv = if m > 0.0 { std_dev(&totals) / m } else { 0.0 };
    Ok((last.expect("runs >= 1"), TimingReport { timing, total_cv }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speedup {
    pub train: f64,
    pub test: f64,
    pub total: f64,
}

/// base / other per phase group: train = rsde + gram + eig, test = project.
pub fn speedup(base: &PhaseTiming, other: &PhaseTiming) -> Result<Speedup> {
    let ratio = |a: f64, b: f64, what: &'static str| {
        if b > 0.0 && a > 0.0 {
            Ok(a / b)
        } else {
            Err(Error::ZeroDuration(what))
        }
    };
    Ok(Speedup {
        train: ratio(base.train_ms(), other.train_ms(), "train")?,
        test: ratio(base.project_ms, other.project_ms, "test")?,
        total: ratio(base.total_ms(), other.total_ms(), "total")?,
    })
}

/// One (method, ℓ, repetition) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub method: String,
    pub ell: Option<f64>,
    pub m: usize,
    pub repetition: usize,
    pub accuracy: Option<f64>,
    pub embedding_error: Option<f64>,
    pub eigenvalue_error: Option<f64>,
    /// m / n.
    pub retained_fraction: f64,
    pub timing: Option<PhaseTiming>,
    pub speedup: Option<Speedup>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl TrialResult {
    /// Columns that are reproducible from (spec, seed).
    pub const CSV_HEADER: &'static str =
        "method,ell,m,repetition,accuracy,embedding_error,eigenvalue_error,retained_fraction";
    /// Wall-clock columns, kept in a separate file.
    pub const TIMING_HEADER: &'static str =
        "method,ell,m,repetition,rsde_ms,gram_ms,eig_ms,project_ms,train_speedup,test_speedup,total_speedup";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            opt(self.ell),
            self.m,
            self.repetition,
            opt(self.accuracy),
            opt(self.embedding_error),
            opt(self.eigenvalue_error),
            self.retained_fraction
        )
    }

    pub fn timing_row(&self) -> String {
        let t = self.timing.unwrap_or_default();
        format!(
            "{},{},{},{},{:.3},{:.3},{:.3},{:.3},{},{},{}",
            self.method,
            opt(self.ell),
            self.m,
            self.repetition,
            t.rsde_ms,
            t.gram_ms,
            t.eig_ms,
            t.project_ms,
            opt(self.speedup.map(|s| s.train)),
            opt(self.speedup.map(|s| s.test)),
            opt(self.speedup.map(|s| s.total)),
        )
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (zero for fewer than two values).
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => s[n / 2],
        _ => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    }
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        idx[i..=j].iter().for_each(|&k| out[k] = r);
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; NaN when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman inputs differ in length");
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synth_blobs;
    use proptest::prelude::*;

    fn col(xs: &[f64]) -> DenseMatrix {
        DenseMatrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn knn_cases() {
        let train = col(&[-1.1, -1.0, -0.9, 0.9, 1.0, 1.1]);
        let labels = [0, 0, 0, 1, 1, 1];
        assert_eq!(
            knn_classify(&train, &labels, &col(&[0.9]), 3).unwrap(),
            vec![1]
        );
        assert_eq!(
            knn_classify(&train, &labels, &col(&[-1.0]), 1).unwrap(),
            vec![0]
        );

        let skewed = [0, 1, 1, 1, 1, 0];
        assert_eq!(
            knn_classify(&train, &skewed, &col(&[-5.0, 5.0, 0.0]), 6).unwrap(),
            vec![1, 1, 1]
        );

        // 1 vote each: nearer neighbour wins, exact tie goes to lower label
        let two = col(&[0.0, 1.0]);
        assert_eq!(
            knn_classify(&two, &[7, 3], &col(&[0.2]), 2).unwrap(),
            vec![7]
        );
        assert_eq!(
            knn_classify(&two, &[7, 3], &col(&[0.5]), 2).unwrap(),
            vec![3]
        );

        assert!(knn_classify(&DenseMatrix::zeros(0, 1), &[], &col(&[0.0]), 1).is_err());
        assert!(knn_classify(&train, &labels, &col(&[0.0]), 7).is_err());
        assert!(knn_classify(&train, &labels, &DenseMatrix::zeros(1, 2), 1).is_err());
    }

    #[test]
    fn folds_partition_and_balance() {
        let labels: Vec<i64> = (0..53).map(|i| (i % 3 == 0) as i64).collect();
        let folds = kfold_indices(53, Some(&labels), 10, 4).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
        for f in &folds {
            let pos = f.iter().filter(|&&i| labels[i] == 1).count();
            assert!((1..=2).contains(&pos), "{pos}");
        }
        assert_eq!(kfold_indices(53, Some(&labels), 10, 4).unwrap(), folds);
        assert!(kfold_indices(5, None, 10, 0).is_err());
        assert!(kfold_indices(5, None, 1, 0).is_err());
    }

    #[test]
    fn cv_cases() {
        let mut ds = synth_blobs(60, 2, 3, 0.3, 1).unwrap();
        let knn =
            |tr: &DataSet, te: &DataSet| knn_classify(&tr.points, tr.labels()?, &te.points, 3);
        let cv = kfold_cv(&ds, 5, 2, knn).unwrap();
        assert_eq!(cv.fold_accuracies.len(), 5);
        assert_eq!(cv, kfold_cv(&ds, 5, 2, knn).unwrap());

        ds.labels = Some(vec![4; 60]);
        assert_eq!(kfold_cv(&ds, 5, 2, knn).unwrap().mean_accuracy, 1.0);
        ds.labels = None;
        assert!(matches!(
            kfold_cv(&ds, 5, 2, knn),
            Err(Error::MissingLabels)
        ));
    }

    #[test]
    fn timing_cases() {
        let (out, rep) = time_phases(TimingPlan::default(), |clock| {
            clock.set_sizes(10, 2, 1);
            Ok(clock.time(Phase::Gram, || 41) + 1)
        })
        .unwrap();
        assert_eq!(out, 42);
        assert!(rep.timing.total_ms() < 1.0);
        assert_eq!((rep.timing.n, rep.timing.m, rep.timing.r), (10, 2, 1));
        assert!(rep.total_cv >= 0.0);
        assert!(time_phases(
            TimingPlan {
                runs: 0,
                warmup: false
            },
            |_| Ok(())
        )
        .is_err());

        let (_, rep) = time_phases(
            TimingPlan {
                runs: 3,
                warmup: false,
            },
            |clock| {
                clock.time(Phase::Eig, || std::thread::sleep(Duration::from_millis(5)));
                Ok(())
            },
        )
        .unwrap();
        assert!(rep.timing.eig_ms >= 5.0 && rep.timing.rsde_ms == 0.0);
    }

    #[test]
    fn speedup_cases() {
        let a = PhaseTiming {
            rsde_ms: 0.0,
            gram_ms: 40.0,
            eig_ms: 60.0,
            project_ms: 10.0,
            ..Default::default()
        };
        let s = speedup(&a, &a).unwrap();
        assert_eq!((s.train, s.test, s.total), (1.0, 1.0, 1.0));
        let b = PhaseTiming {
            rsde_ms: 5.0,
            gram_ms: 2.0,
            eig_ms: 3.0,
            project_ms: 1.0,
            ..Default::default()
        };
        let s = speedup(&a, &b).unwrap();
        assert_eq!((s.train, s.test, s.total), (10.0, 10.0, 10.0));
        assert!(matches!(
            speedup(&a, &PhaseTiming::default()),
            Err(Error::ZeroDuration("train"))
        ));
    }

    #[test]
    fn stats_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((std_dev(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 25.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman(&[1.0, 2.0], &[1.0, 1.0]).is_nan());
    }

    #[test]
    fn csv_rows_match_headers() {
        let t = TrialResult {
            method: "shadow".into(),
            ell: Some(3.5),
            m: 12,
            repetition: 0,
            accuracy: Some(0.75),
            embedding_error: None,
            eigenvalue_error: None,
            retained_fraction: 0.25,
            timing: None,
            speedup: None,
        };
        assert_eq!(t.csv_row(), "shadow,3.5,12,0,0.75,,,0.25");
        assert_eq!(
            t.csv_row().split(',').count(),
            TrialResult::CSV_HEADER.split(',').count()
        );
        assert_eq!(
            t.timing_row().split(',').count(),
            TrialResult::TIMING_HEADER.split(',').count()
        );
    }

    proptest! {
        #[test]
        fn knn_isometry_invariant(
            pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 8..30),
            theta in 0.0..6.3f64, shift in (-10.0..10.0f64, -10.0..10.0f64), k in 1usize..5,
        ) {
            let n = pts.len();
            let all = DenseMatrix::from_fn(n, 2, |i, j| if j == 0 { pts[i].0 } else { pts[i].1 });
            let (c, s) = (theta.cos(), theta.sin());
            let moved = DenseMatrix::from_fn(n, 2, |i, j| {
                let (x, y) = (all[(i, 0)], all[(i, 1)]);
                if j == 0 { c * x - s * y + shift.0 } else { s * x + c * y + shift.1 }
            });
            let labels: Vec<i64> = (0..n - 4).map(|i| (i % 3) as i64).collect();
            let tr: Vec<usize> = (0..n - 4).collect();
            let te: Vec<usize> = (n - 4..n).collect();
            let a = knn_classify(&all.select_rows(&tr), &labels, &all.select_rows(&te), k).unwrap();
            let b = knn_classify(&moved.select_rows(&tr), &labels, &moved.select_rows(&te), k).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn folds_always_partition(n in 2usize..200, folds in 2usize..12, seed in any::<u64>(), classes in 1i64..5) {
            prop_assume!(n >= folds);
            let labels: Vec<i64> = (0..n as i64).map(|i| i % classes).collect();
            let f = kfold_indices(n, Some(&labels), folds, seed).unwrap();
            let mut all = f.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = f.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
