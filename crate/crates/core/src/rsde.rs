//! Reduced-set density estimates: shadow selection plus the k-means, paring
//! and herding alternatives, and density evaluation for KDEs and RSDEs.
//!
//! Every selector returns weights summing to the original sample count `n`
//! together with a data-to-center assignment, so downstream code can build
//! the quantized dataset regardless of which selector produced the set.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{shadow_radius, sq_dist, KernelConfig};
use crate::numerics::{seeded_rng, DenseMatrix};

/// Lloyd iterations stop once no centroid moves further than this (squared,
/// relative to the data's squared spread).
pub const KMEANS_MOVE_TOL: f64 = 1e-18;
pub const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSet {
    /// m×d center coordinates.
    pub centers: DenseMatrix,
    /// Positive weights summing to `source_n`.
    pub weights: Vec<f64>,
    /// α: index of the center that represents each original point.
    pub assignment: Option<Vec<usize>>,
    /// Row of the source data each center was copied from, when centers are
    /// data points.
    pub center_indices: Option<Vec<usize>>,
    pub source_n: usize,
}

impl ReducedSet {
    pub fn m(&self) -> usize {
        self.centers.rows()
    }

    pub fn dim(&self) -> usize {
        self.centers.cols()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// m / n.
    pub fn retained_fraction(&self) -> f64 {
        self.m() as f64 / self.source_n as f64
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.m() == 0 {
            return Err(Error::Empty("reduced set without centers"));
        }
        if self.weights.len() != self.m() {
            return Err(Error::CardinalityMismatch {
                left: self.m(),
                right: self.weights.len(),
            });
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive, got {w}"
            )));
        }
        let sum = self.weight_sum();
        if (sum - self.source_n as f64).abs() > 1e-9 * (self.source_n as f64).max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {sum}, expected {}",
                self.source_n
            )));
        }
        if let Some(a) = &self.assignment {
            if a.len() != self.source_n {
                return Err(Error::CardinalityMismatch {
                    left: a.len(),
                    right: self.source_n,
                });
            }
            if a.iter().any(|&j| j >= self.m()) {
                return Err(Error::InvalidParameter(
                    "assignment points past the last center".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_count(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Empty("reduced set of an empty dataset"));
    }
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "reduced set size must be in 1..={n}, got {m}"
        )));
    }
    Ok(())
}

/// Index of the nearest center for every point (lowest index on ties).
pub fn nearest_assignment(points: &DenseMatrix, centers: &DenseMatrix) -> Vec<usize> {
    (0..points.rows())
        .into_par_iter()
        .map(|i| nearest(points.row(i), centers).0)
        .collect()
}

fn nearest(x: &[f64], centers: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.row_iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Shadow selection. Walks the points in their given order: the first
/// remaining point becomes a center, every remaining point strictly within
/// ε = σ/ℓ of it joins its shadow set and is removed, and the center's weight
/// is the shadow set's size.
///
/// The result depends on the input order; shuffling the rows changes it.
pub fn shadow_select(points: &DenseMatrix, cfg: &KernelConfig, ell: f64) -> Result<ReducedSet> {
    let eps = shadow_radius(cfg, ell)?;
    let n = points.rows();
    if n == 0 {
        return Err(Error::Empty("shadow selection of an empty dataset"));
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut assignment = vec![usize::MAX; n];
    let mut center_indices = Vec::new();
    let mut weights = Vec::new();
    while let Some(&c) = remaining.first() {
        let center = points.row(c);
        let j = center_indices.len();
        let mut absorbed = 0usize;
        remaining.retain(|&y| {
            if sq_dist(points.row(y), center).sqrt() < eps {
                assignment[y] = j;
                absorbed += 1;
                false
            } else {
                true
            }
        });
        center_indices.push(c);
        weights.push(absorbed as f64);
    }
    Ok(ReducedSet {
        centers: points.select_rows(&center_indices),
        weights,
        assignment: Some(assignment),
        center_indices: Some(center_indices),
        source_n: n,
    })
}

fn kmeans_pp_init(points: &DenseMatrix, m: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = points.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < m {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // floating leftovers may land on a zero-distance tail
            if d2[pick] == 0.0 {
                pick = d2
                    .iter()
                    .enumerate()
                    .fold(0, |b, (i, &d)| if d > d2[b] { i } else { b });
            }
            pick
        } else {
            // all remaining mass sits on chosen points: take any unchosen index
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(next)));
        }
    }
    chosen
}

/// k-means RSDE: Lloyd's iterations from a k-means++ start; centers are the
/// centroids and weights the cluster sizes. A cluster that empties is
/// reseeded with the point farthest from its own centroid.
pub fn kmeans_select(points: &DenseMatrix, m: usize, seed: u64) -> Result<ReducedSet> {
    let n = points.rows();
    check_count(n, m)?;
    let d = points.cols();
    if m == n {
        return Ok(ReducedSet {
            centers: points.clone(),
            weights: vec![1.0; n],
            assignment: Some((0..n).collect()),
            center_indices: Some((0..n).collect()),
            source_n: n,
        });
    }
    let mut rng = seeded_rng(seed);
    let init = kmeans_pp_init(points, m, &mut rng);
    let mut centers = points.select_rows(&init);
    let spread = {
        let mean = column_mean(points, &(0..n).collect::<Vec<_>>());
        points.row_iter().map(|x| sq_dist(x, &mean)).sum::<f64>() / n as f64
    };
    let mut assignment = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut dist = vec![0.0; n];
        for i in 0..n {
            let (j, d2) = nearest(points.row(i), &centers);
            assignment[i] = j;
            dist[i] = d2;
        }
        let mut sizes = vec![0usize; m];
        for &j in &assignment {
            sizes[j] += 1;
        }
        // reseed empty clusters from the worst-fitting point of a cluster that
        // can spare one
        for j in 0..m {
            if sizes[j] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[assignment[i]] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dist[b] >= dist[i] => Some(b),
                    _ => Some(i),
                })
                .expect("m <= n leaves a cluster with at least two points");
            sizes[assignment[donor]] -= 1;
            assignment[donor] = j;
            sizes[j] = 1;
            dist[donor] = 0.0;
        }
        let mut next = DenseMatrix::zeros(m, d);
        for (i, &j) in assignment.iter().enumerate() {
            for (acc, &v) in next.row_mut(j).iter_mut().zip(points.row(i)) {
                *acc += v;
            }
        }
        let mut moved: f64 = 0.0;
        for (j, &size) in sizes.iter().enumerate() {
            let inv = 1.0 / size as f64;
            next.row_mut(j).iter_mut().for_each(|v| *v *= inv);
            moved = moved.max(sq_dist(next.row(j), centers.row(j)));
        }
        centers = next;
        if moved <= KMEANS_MOVE_TOL * spread.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let mut weights = vec![0.0; m];
    for &j in &assignment {
        weights[j] += 1.0;
    }
    Ok(ReducedSet {
        centers,
        weights,
        assignment: Some(assignment),
        center_indices: None,
        source_n: n,
    })
}

fn column_mean(points: &DenseMatrix, idx: &[usize]) -> Vec<f64> {
    let mut mean = vec![0.0; points.cols()];
    for &i in idx {
        for (a, &v) in mean.iter_mut().zip(points.row(i)) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= idx.len() as f64);
    mean
}

/// Paring RSDE: a uniform sample of `m` points without replacement, each
/// carrying weight n/m.
pub fn pare_select(points: &DenseMatrix, m: usize, seed: u64) -> Result<ReducedSet> {
    let n = points.rows();
    check_count(n, m)?;
    let mut rng = seeded_rng(seed);
    let idx = sample(&mut rng, n, m).into_vec();
    let centers = points.select_rows(&idx);
    let assignment = nearest_assignment(points, &centers);
    Ok(ReducedSet {
        centers,
        weights: vec![n as f64 / m as f64; m],
        assignment: Some(assignment),
        center_indices: Some(idx),
        source_n: n,
    })
}

/// Kernel herding restricted to the data points. Step t+1 picks the point
/// maximising the KDE minus the mean kernel value to the points already
/// chosen. Points are drawn without replacement; while a point that does not
/// coincide with an earlier pick remains, coincident copies are skipped.
/// Ties go to the lowest index. Weights are uniform n/m.
pub fn herd_select(points: &DenseMatrix, cfg: &KernelConfig, m: usize) -> Result<ReducedSet> {
    let n = points.rows();
    check_count(n, m)?;
    let kde: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = points.row(i);
            points
                .row_iter()
                .map(|xj| cfg.eval_unchecked(xi, xj))
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let mut penalty = vec![0.0; n];
    let mut selected = vec![false; n];
    let mut shadowed = vec![false; n];
    let mut picks = Vec::with_capacity(m);
    for t in 0..m {
        let any_fresh = (0..n).any(|i| !selected[i] && !shadowed[i]);
        let denom = (t + 1) as f64;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if selected[i] || (any_fresh && shadowed[i]) {
                continue;
            }
            let score = kde[i] - penalty[i] / denom;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("m <= n leaves an unselected point");
        selected[pick] = true;
        picks.push(pick);
        let xp = points.row(pick);
        for (i, p) in penalty.iter_mut().enumerate() {
            let xi = points.row(i);
            *p += cfg.eval_unchecked(xi, xp);
            if xi == xp {
                shadowed[i] = true;
            }
        }
    }
    let centers = points.select_rows(&picks);
    let assignment = nearest_assignment(points, &centers);
    Ok(ReducedSet {
        centers,
        weights: vec![n as f64 / m as f64; m],
        assignment: Some(assignment),
        center_indices: Some(picks),
        source_n: n,
    })
}

/// What a density is estimated from.
#[derive(Debug, Clone, Copy)]
pub enum DensitySource<'a> {
    /// Kernel density estimate over all samples, each weighted 1/n.
    Sample(&'a DenseMatrix),
    /// Reduced set estimate (1/n) Σ w_j k(c_j, x).
    Reduced(&'a ReducedSet),
}

/// Unnormalised kernel-sum density (no bandwidth volume factor).
pub fn density_eval(source: DensitySource<'_>, cfg: &KernelConfig, x: &[f64]) -> Result<f64> {
    let (pts, weights, n) = match source {
        DensitySource::Sample(p) => (p, None, p.rows()),
        DensitySource::Reduced(rs) => (&rs.centers, Some(&rs.weights), rs.source_n),
    };
    if pts.cols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: pts.cols(),
            found: x.len(),
        });
    }
    if n == 0 {
        return Err(Error::Empty("density of an empty sample"));
    }
    let sum: f64 = match weights {
        None => pts.row_iter().map(|c| cfg.eval_unchecked(c, x)).sum(),
        Some(w) => pts
            .row_iter()
            .zip(w)
            .map(|(c, w)| w * cfg.eval_unchecked(c, x))
            .sum(),
    };
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelConfig;
    use rand_distr::{Distribution, Normal};

    fn line(xs: &[f64]) -> DenseMatrix {
        DenseMatrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    fn random_points(seed: u64, n: usize, d: usize, scale: f64) -> DenseMatrix {
        let mut rng = seeded_rng(seed);
        DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-scale..scale))
    }

    fn min_pairwise(points: &DenseMatrix) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.rows() {
            for j in (i + 1)..points.rows() {
                best = best.min(sq_dist(points.row(i), points.row(j)).sqrt());
            }
        }
        best
    }

    #[test]
    fn shadow_hand_trace() {
        let cfg = KernelConfig::gaussian(1.0).unwrap();
        let rs = shadow_select(&line(&[0.0, 0.1, 5.0]), &cfg, 4.0).unwrap();
        assert_eq!(rs.centers.as_slice(), &[0.0, 5.0]);
        assert_eq!(rs.weights, vec![2.0, 1.0]);
        assert_eq!(rs.assignment, Some(vec![0, 0, 1]));
        rs.validate().unwrap();
    }

    #[test]
    fn shadow_identity_and_degenerate() {
        let cfg = KernelConfig::gaussian(1.0).unwrap();
        let x = random_points(3, 20, 2, 1.0);
        let ell = 1.01 / min_pairwise(&x);
        let rs = shadow_select(&x, &cfg, ell).unwrap();
        assert_eq!(rs.centers, x);
        assert!(rs.weights.iter().all(|&w| w == 1.0));

        let same = DenseMatrix::from_fn(7, 3, |_, j| j as f64);
        let rs = shadow_select(&same, &cfg, 2.0).unwrap();
        assert_eq!(rs.m(), 1);
        assert_eq!(rs.weights, vec![7.0]);
        assert!(shadow_select(&same, &cfg, 0.0).is_err());
        assert!(shadow_select(&DenseMatrix::zeros(0, 1), &cfg, 1.0).is_err());
    }

    #[test]
    fn shadow_is_order_dependent() {
        let cfg = KernelConfig::gaussian(1.0).unwrap();
        let a = shadow_select(&line(&[0.0, 0.2, 0.4]), &cfg, 1.0 / 0.3).unwrap();
        let b = shadow_select(&line(&[0.2, 0.0, 0.4]), &cfg, 1.0 / 0.3).unwrap();
        assert_eq!(a.m(), 2);
        assert_eq!(b.m(), 1);
    }

    /// Greedy covering is not monotone in ℓ: a smaller radius can merge
    /// what a larger one split.
    #[test]
    fn shadow_count_can_drop_as_ell_grows() {
        let cfg = KernelConfig::gaussian(1.0).unwrap();
        let x =
            DenseMatrix::from_rows(&[[0.5, 0.5], [1.5, 2.0], [2.5, 2.0], [0.0, 0.5], [0.5, 2.5]])
                .unwrap();
        assert_eq!(shadow_select(&x, &cfg, 0.5).unwrap().m(), 3);
        assert_eq!(shadow_select(&x, &cfg, 0.75).unwrap().m(), 2);
    }

    #[test]
    fn kmeans_cases() {
        let x = random_points(4, 9, 2, 1.0);
        let rs = kmeans_select(&x, 9, 0).unwrap();
        assert_eq!(rs.centers, x);
        assert!(rs.weights.iter().all(|&w| w == 1.0));

        let rs = kmeans_select(&x, 1, 0).unwrap();
        let mean = column_mean(&x, &(0..9).collect::<Vec<_>>());
        assert!(sq_dist(rs.centers.row(0), &mean) < 1e-24);
        assert_eq!(rs.weights, vec![9.0]);
        assert!(kmeans_select(&x, 10, 0).is_err());
        assert!(kmeans_select(&x, 0, 0).is_err());
    }

    #[test]
    fn kmeans_recovers_blobs() {
        let mut rng = seeded_rng(8);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rows = Vec::new();
        for i in 0..50 {
            let base = if i < 30 { [0.0, 0.0] } else { [5.0, 5.0] };
            rows.push([
                base[0] + noise.sample(&mut rng),
                base[1] + noise.sample(&mut rng),
            ]);
        }
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let rs = kmeans_select(&x, 2, 1).unwrap();
        rs.validate().unwrap();
        let mut found: Vec<(f64, f64)> = (0..2)
            .map(|j| (rs.centers[(j, 0)], rs.weights[j]))
            .collect();
        found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let lo = column_mean(&x, &(0..30).collect::<Vec<_>>());
        let hi = column_mean(&x, &(30..50).collect::<Vec<_>>());
        assert!((found[0].0 - lo[0]).abs() < 1e-12);
        assert!((found[1].0 - hi[0]).abs() < 1e-12);
        assert_eq!((found[0].1, found[1].1), (30.0, 20.0));
    }

    #[test]
    fn kmeans_with_duplicates_keeps_clusters_nonempty() {
        let x = line(&[1.0, 1.0, 1.0, 2.0, 2.0]);
        let rs = kmeans_select(&x, 4, 3).unwrap();
        rs.validate().unwrap();
        assert!(rs.weights.iter().all(|&w| w >= 1.0));
    }

    #[test]
    fn paring_cases() {
        let x = random_points(5, 12, 2, 1.0);
        let rs = pare_select(&x, 12, 9).unwrap();
        let mut idx = rs.center_indices.clone().unwrap();
        idx.sort_unstable();
        assert_eq!(idx, (0..12).collect::<Vec<_>>());
        assert!(rs.weights.iter().all(|&w| w == 1.0));

        let rs = pare_select(&x, 5, 9).unwrap();
        assert!((rs.weight_sum() - 12.0).abs() < 1e-12);
        rs.validate().unwrap();
        assert_eq!(rs, pare_select(&x, 5, 9).unwrap());
        assert!(pare_select(&x, 13, 9).is_err());
    }

    fn herd_brute_force(x: &DenseMatrix, cfg: &KernelConfig, m: usize) -> Vec<usize> {
        let n = x.rows();
        let k = |i: usize, j: usize| cfg.eval_unchecked(x.row(i), x.row(j));
        let mut picks: Vec<usize> = Vec::new();
        for t in 0..m {
            let fresh: Vec<usize> = (0..n)
                .filter(|i| !picks.contains(i))
                .filter(|&i| picks.iter().all(|&p| x.row(p) != x.row(i)))
                .collect();
            let pool: Vec<usize> = if fresh.is_empty() {
                (0..n).filter(|i| !picks.contains(i)).collect()
            } else {
                fresh
            };
            let score = |i: usize| {
                (0..n).map(|j| k(i, j)).sum::<f64>() / n as f64
                    - picks.iter().map(|&s| k(i, s)).sum::<f64>() / (t + 1) as f64
            };
            let mut best = pool[0];
            for &i in &pool[1..] {
                if score(i) > score(best) {
                    best = i;
                }
            }
            picks.push(best);
        }
        picks
    }

    #[test]
    fn herding_first_pick_is_kde_mode() {
        let cfg = KernelConfig::gaussian(0.7).unwrap();
        let x = random_points(6, 15, 2, 1.5);
        let rs = herd_select(&x, &cfg, 1).unwrap();
        let kde = |i: usize| density_eval(DensitySource::Sample(&x), &cfg, x.row(i)).unwrap();
        let mode = (0..15).fold(0, |b, i| if kde(i) > kde(b) { i } else { b });
        assert_eq!(rs.center_indices, Some(vec![mode]));
        assert_eq!(rs.weights, vec![15.0]);
    }

    #[test]
    fn herding_symmetric_pair_and_full_sweep() {
        let cfg = KernelConfig::gaussian(1.0).unwrap();
        let rs = herd_select(&line(&[-1.0, 1.0]), &cfg, 2).unwrap();
        assert_eq!(rs.center_indices, Some(vec![0, 1]));

        let x = random_points(7, 10, 2, 1.0);
        let rs = herd_select(&x, &cfg, 10).unwrap();
        let mut idx = rs.center_indices.unwrap();
        idx.sort_unstable();
        assert_eq!(idx, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn herding_matches_brute_force_with_duplicates() {
        let cfg = KernelConfig::gaussian(0.8).unwrap();
        let x = line(&[0.0, 0.0, 0.1, 0.1, 0.1, 1.5, 2.0, 2.0, -1.0, 0.05]);
        let distinct = 6;
        for m in 1..=10 {
            let got = herd_select(&x, &cfg, m).unwrap().center_indices.unwrap();
            assert_eq!(got, herd_brute_force(&x, &cfg, m));
            let first: Vec<f64> = got.iter().take(distinct).map(|&i| x[(i, 0)]).collect();
            for (a, va) in first.iter().enumerate() {
                for vb in &first[a + 1..] {
                    assert_ne!(va, vb, "duplicate picked before distinct points ran out");
                }
            }
        }
    }

    #[test]
    fn density_cases() {
        let cfg = KernelConfig::gaussian(1.0).unwrap();
        let rs = ReducedSet {
            centers: line(&[2.0]),
            weights: vec![5.0],
            assignment: None,
            center_indices: None,
            source_n: 5,
        };
        assert!(
            (density_eval(DensitySource::Reduced(&rs), &cfg, &[2.0]).unwrap() - 1.0).abs() < 1e-15
        );

        let x = line(&[0.0, 1.0, 3.0]);
        let got = density_eval(DensitySource::Sample(&x), &cfg, &[1.0]).unwrap();
        let want = ((-0.5f64).exp() + 1.0 + (-2.0f64).exp()) / 3.0;
        assert!((got - want).abs() < 1e-15);
        assert!(density_eval(DensitySource::Sample(&x), &cfg, &[1.0, 2.0]).is_err());

        let x = random_points(9, 25, 2, 2.0);
        let ell = 1.01 / min_pairwise(&x);
        let rs = shadow_select(&x, &cfg, ell).unwrap();
        for gx in -4..=4 {
            for gy in -4..=4 {
                let p = [gx as f64 * 0.5, gy as f64 * 0.5];
                let a = density_eval(DensitySource::Sample(&x), &cfg, &p).unwrap();
                let b = density_eval(DensitySource::Reduced(&rs), &cfg, &p).unwrap();
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn shadow_partitions_within_radius(
                seed in any::<u64>(), n in 1usize..80, d in 1usize..5, ell in 0.5f64..8.0,
            ) {
                let cfg = KernelConfig::gaussian(1.0).unwrap();
                let x = random_points(seed, n, d, 2.0);
                let rs = shadow_select(&x, &cfg, ell).unwrap();
                rs.validate().unwrap();
                let eps = 1.0 / ell;
                let alpha = rs.assignment.as_ref().unwrap();
                let idx = rs.center_indices.as_ref().unwrap();
                for (i, &a) in alpha.iter().enumerate() {
                    prop_assert!(sq_dist(x.row(i), rs.centers.row(a)).sqrt() < eps);
                }
                for (j, &c) in idx.iter().enumerate() {
                    prop_assert_eq!(x.row(c), rs.centers.row(j));
                    prop_assert_eq!(alpha[c], j);
                }
                let mut counts = vec![0.0; rs.m()];
                for &a in alpha {
                    counts[a] += 1.0;
                }
                prop_assert_eq!(&counts, &rs.weights);
            }

            #[test]
            fn shadow_centers_are_eps_separated(
                seed in any::<u64>(), n in 2usize..60, ell in 0.5f64..8.0,
            ) {
                let cfg = KernelConfig::laplacian(1.0).unwrap();
                let x = random_points(seed, n, 2, 2.0);
                let rs = shadow_select(&x, &cfg, ell).unwrap();
                let eps = 1.0 / ell;
                for i in 0..rs.m() {
                    for j in (i + 1)..rs.m() {
                        prop_assert!(sq_dist(rs.centers.row(i), rs.centers.row(j)).sqrt() >= eps);
                    }
                }
            }

            #[test]
            fn selector_weights_sum_to_n(seed in any::<u64>(), n in 1usize..40, frac in 0.05f64..1.0) {
                let cfg = KernelConfig::gaussian(0.9).unwrap();
                let x = random_points(seed, n, 3, 1.5);
                let m = ((n as f64 * frac).ceil() as usize).clamp(1, n);
                for rs in [
                    kmeans_select(&x, m, seed).unwrap(),
                    pare_select(&x, m, seed).unwrap(),
                    herd_select(&x, &cfg, m).unwrap(),
                ] {
                    rs.validate().unwrap();
                    prop_assert_eq!(rs.m(), m);
                    prop_assert!((rs.weight_sum() - n as f64).abs() < 1e-9);
                }
            }
        }
    }
}
