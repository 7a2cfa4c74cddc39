//! Lloyd's k-means with k-means++ seeding and restarts, followed by a
//! Hartigan single-point transfer pass.
//!
//! Each restart draws from its own ChaCha stream derived from `(seed, restart)`,
//! so restarts can run on any number of threads and the best result (lowest
//! objective, ties to the lower restart index) is the same regardless.
//! The assignment step runs row-parallel; centroid sums always accumulate in
//! row order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub n_restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: 2,
            seed: 0,
            max_iter: 300,
            n_restarts: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KMeansError {
    #[error("need at least {k} distinct rows, found {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },
    #[error("rows are not rectangular or contain non-finite values")]
    BadMatrix,
    #[error("k and n_restarts must be at least 1")]
    BadParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances of each row to its assigned centroid.
    pub objective: f64,
    pub n_iterations: usize,
    /// Objective after every assignment step of the winning restart, plus one
    /// final entry when the transfer pass moved rows.
    pub trace: Vec<f64>,
    pub restart: usize,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn distinct_rows(rows: &[Vec<f64>], cap: usize) -> usize {
    let mut seen: Vec<&Vec<f64>> = Vec::new();
    for r in rows {
        if !seen.contains(&r) {
            seen.push(r);
            if seen.len() >= cap {
                break;
            }
        }
    }
    seen.len()
}

/// Sum of squared distances under the given labels and centroids.
pub fn objective(rows: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    rows.iter()
        .zip(labels)
        .map(|(r, &l)| sq_dist(r, &centroids[l]))
        .sum()
}

/// Mean of the rows carrying each label; `None` for an empty cluster.
fn cluster_means(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let d = rows[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (r, &l) in rows.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(r) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| (n > 0).then(|| s.into_iter().map(|x| x / n as f64).collect()))
        .collect()
}

fn plus_plus_seed(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            // never re-pick a zero-weight row from rounding at the tail
            if d2[idx] == 0.0 {
                idx = d2.iter().rposition(|&w| w > 0.0).expect("total > 0");
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centroids.push(rows[pick].clone());
        for (w, r) in d2.iter_mut().zip(rows) {
            *w = w.min(sq_dist(r, centroids.last().expect("just pushed")));
        }
    }
    centroids
}

fn lloyd(
    rows: &[Vec<f64>],
    k: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
    exec: Exec,
) -> KMeansFit {
    let mut centroids = plus_plus_seed(rows, k, rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let assigned = exec.map(rows, |r| nearest(r, &centroids));
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        trace.push(assigned.iter().map(|a| a.1).sum());
        let converged = new_labels == labels;
        labels = new_labels;
        if converged {
            break;
        }
        let means = cluster_means(rows, &labels, k);
        for (j, m) in means.into_iter().enumerate() {
            match m {
                Some(m) => centroids[j] = m,
                None => {
                    // re-seed the empty cluster at the row farthest from its centroid
                    let far = rows
                        .iter()
                        .zip(&labels)
                        .enumerate()
                        .map(|(i, (r, &l))| (i, sq_dist(r, &centroids[l])))
                        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                    centroids[j] = rows[far.0].clone();
                    labels[far.0] = j;
                }
            }
        }
    }
    if refine(rows, &mut labels, &mut centroids) {
        trace.push(objective(rows, &labels, &centroids));
    }
    let objective = objective(rows, &labels, &centroids);
    KMeansFit {
        labels,
        centroids,
        objective,
        n_iterations: iterations,
        trace,
        restart: 0,
    }
}

/// Moves single rows between clusters while a move strictly lowers the
/// objective, accounting for the centroid shift on both sides. Lloyd stops at
/// partitions where no row is closer to another centroid; this also escapes
/// those where moving a row would still pay off once the means update.
/// Returns whether anything moved.
fn refine(rows: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for (i, r) in rows.iter().enumerate() {
            let a = labels[i];
            if sizes[a] <= 1 {
                continue;
            }
            let na = sizes[a] as f64;
            let removal_gain = na / (na - 1.0) * sq_dist(r, &centroids[a]);
            let mut best: Option<(usize, f64)> = None;
            for (b, c) in centroids.iter().enumerate() {
                if b == a {
                    continue;
                }
                let nb = sizes[b] as f64;
                let cost = nb / (nb + 1.0) * sq_dist(r, c);
                if best.is_none_or(|(_, bc)| cost < bc) {
                    best = Some((b, cost));
                }
            }
            let Some((b, cost)) = best else { continue };
            // relative margin keeps rounding noise from cycling a row back and forth
            if cost < removal_gain * (1.0 - 1e-12) {
                let (na, nb) = (sizes[a] as f64, sizes[b] as f64);
                for (ca, x) in centroids[a].iter_mut().zip(r) {
                    *ca = (*ca * na - x) / (na - 1.0);
                }
                for (cb, x) in centroids[b].iter_mut().zip(r) {
                    *cb = (*cb * nb + x) / (nb + 1.0);
                }
                sizes[a] -= 1;
                sizes[b] += 1;
                labels[i] = b;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    if moved_any {
        // recompute exactly instead of carrying the incremental updates
        for (j, m) in cluster_means(rows, labels, k).into_iter().enumerate() {
            if let Some(m) = m {
                centroids[j] = m;
            }
        }
    }
    moved_any
}

fn check_input(rows: &[Vec<f64>], k: usize) -> Result<(), KMeansError> {
    if k == 0 {
        return Err(KMeansError::BadParams);
    }
    let d = rows.first().map(Vec::len).unwrap_or(0);
    if rows
        .iter()
        .any(|r| r.len() != d || r.iter().any(|x| !x.is_finite()))
    {
        return Err(KMeansError::BadMatrix);
    }
    let distinct = distinct_rows(rows, k);
    if distinct < k {
        return Err(KMeansError::TooFewDistinct { k, distinct });
    }
    Ok(())
}

/// Best-of-`n_restarts` k-means.
pub fn kmeans(
    rows: &[Vec<f64>],
    params: &KMeansParams,
    exec: Exec,
) -> Result<KMeansFit, KMeansError> {
    if params.n_restarts == 0 {
        return Err(KMeansError::BadParams);
    }
    check_input(rows, params.k)?;
    // restarts fan out; the row-level step inside each stays sequential
    let fits = exec.map_range(params.n_restarts, |restart| {
        let stream = crate::seed::derive(params.seed, &format!("kmeans-restart-{restart}"));
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let mut fit = lloyd(rows, params.k, params.max_iter, &mut rng, Exec::Sequential);
        fit.restart = restart;
        fit
    });
    Ok(fits
        .into_iter()
        .reduce(|best, f| {
            if f.objective < best.objective {
                f
            } else {
                best
            }
        })
        .expect("n_restarts >= 1"))
}

/// Single restart with a row-parallel assignment step; used when one long
/// run matters more than many short ones.
pub fn kmeans_single(
    rows: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    exec: Exec,
) -> Result<KMeansFit, KMeansError> {
    check_input(rows, k)?;
    let stream = crate::seed::derive(seed, "kmeans-restart-0");
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    Ok(lloyd(rows, k, max_iter, &mut rng, exec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_well_separated_pairs() {
        let rows = col(&[0.0, 1.0, 10.0, 11.0]);
        let fit = kmeans(&rows, &KMeansParams::default(), Exec::Sequential).unwrap();
        assert_eq!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.labels[2], fit.labels[3]);
        assert_ne!(fit.labels[0], fit.labels[2]);
        let mut cs: Vec<f64> = fit.centroids.iter().map(|c| c[0]).collect();
        cs.sort_by(f64::total_cmp);
        assert_eq!(cs, vec![0.5, 10.5]);
        assert!((fit.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_points_rejected_for_k2_and_fine_for_k1() {
        let rows = col(&[3.0, 3.0, 3.0]);
        assert_eq!(
            kmeans(&rows, &KMeansParams::default(), Exec::Sequential),
            Err(KMeansError::TooFewDistinct { k: 2, distinct: 1 })
        );
        let k1 = KMeansParams {
            k: 1,
            ..Default::default()
        };
        assert_eq!(kmeans(&rows, &k1, Exec::Sequential).unwrap().objective, 0.0);
    }

    #[test]
    fn two_distinct_points() {
        let rows = col(&[-2.0, 5.0]);
        let fit = kmeans(&rows, &KMeansParams::default(), Exec::Sequential).unwrap();
        assert_ne!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.objective, 0.0);
    }

    #[test]
    fn objective_matches_recomputation_and_centroids_are_means() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                vec![
                    (i as f64 * 0.37).sin() * 3.0 + (i % 2) as f64 * 8.0,
                    (i as f64).cos(),
                ]
            })
            .collect();
        let fit = kmeans(&rows, &KMeansParams::default(), Exec::Sequential).unwrap();
        assert!((objective(&rows, &fit.labels, &fit.centroids) - fit.objective).abs() < 1e-9);
        for (j, m) in cluster_means(&rows, &fit.labels, 2).into_iter().enumerate() {
            let m = m.unwrap();
            assert!(sq_dist(&m, &fit.centroids[j]) < 1e-18);
        }
        assert!(
            fit.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            "{:?}",
            fit.trace
        );
    }

    #[test]
    fn deterministic_across_exec_modes() {
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| vec![((i * 7919) % 101) as f64, ((i * 31) % 17) as f64])
            .collect();
        let p = KMeansParams {
            seed: 11,
            ..Default::default()
        };
        let a = kmeans(&rows, &p, Exec::Parallel).unwrap();
        let b = kmeans(&rows, &p, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        let s1 = kmeans_single(&rows, 2, 3, 300, Exec::Parallel).unwrap();
        let s2 = kmeans_single(&rows, 2, 3, 300, Exec::Sequential).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn rejects_ragged_rows() {
        let rows = vec![vec![1.0, 2.0], vec![1.0]];
        assert_eq!(
            kmeans(&rows, &KMeansParams::default(), Exec::Sequential),
            Err(KMeansError::BadMatrix)
        );
    }

    proptest::proptest! {
        #[test]
        fn no_single_row_move_improves_the_fit(
            rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 2), 3..30),
            k in 1usize..4,
            seed in 0u64..1000,
        ) {
            proptest::prop_assume!(distinct_rows(&rows, k) >= k);
            let p = KMeansParams { k, seed, max_iter: 300, n_restarts: 3 };
            let fit = kmeans(&rows, &p, Exec::Sequential).unwrap();
            let base = objective(&rows, &fit.labels, &fit.centroids);
            proptest::prop_assert!((base - fit.objective).abs() <= 1e-9 * (1.0 + base));
            for i in 0..rows.len() {
                for b in 0..k {
                    if b == fit.labels[i] {
                        continue;
                    }
                    let mut labels = fit.labels.clone();
                    labels[i] = b;
                    let means = cluster_means(&rows, &labels, k);
                    if means.iter().any(Option::is_none) {
                        continue;
                    }
                    let centroids: Vec<Vec<f64>> = means.into_iter().flatten().collect();
                    let moved = objective(&rows, &labels, &centroids);
                    proptest::prop_assert!(moved >= base - 1e-9 * (1.0 + base), "moving row {} to {} gives {} < {}", i, b, moved, base);
                }
            }
        }
    }
}
