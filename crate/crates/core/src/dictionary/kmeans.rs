use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct KMeansResult {
    /// d×k centroid matrix.
    pub centroids: DMatrix<f64>,
    /// Nearest centroid of each input column.
    pub assignments: Vec<usize>,
    /// Sum of squared distances after each assignment step.
    pub inertia: Vec<f64>,
}

fn sq_dist(m: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    m.column(i)
        .iter()
        .zip(c.column(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Index of the nearest centroid for every column of `y`; ties go to the
/// lower index.
pub fn assign_nearest(centroids: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Vec<usize>> {
    if centroids.nrows() != y.nrows() {
        return Err(Error::shape(format!(
            "centroids have {} rows, data has {}",
            centroids.nrows(),
            y.nrows()
        )));
    }
    if centroids.ncols() == 0 {
        return Err(Error::shape("no centroids"));
    }
    Ok(nearest(centroids, y).into_iter().map(|(j, _)| j).collect())
}

fn nearest(centroids: &DMatrix<f64>, y: &DMatrix<f64>) -> Vec<(usize, f64)> {
    (0..y.ncols())
        .into_par_iter()
        .map(|i| {
            (0..centroids.ncols())
                .map(|j| (j, sq_dist(y, i, centroids, j)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        })
        .collect()
}

/// Lloyd's k-means with k-means++ seeding.
///
/// Iterates until assignments stop changing or `iters` updates have run.
/// A cluster left empty is moved onto the point farthest from its current
/// centroid.
pub fn kmeans_vq(y: &DMatrix<f64>, k: usize, seed: u64, iters: usize) -> Result<KMeansResult> {
    let n = y.ncols();
    if k == 0 {
        return Err(Error::config("k-means needs at least one centroid"));
    }
    if n < k {
        return Err(Error::NotEnoughData { needed: k, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = DMatrix::zeros(y.nrows(), k);
    let first = rng.random_range(0..n);
    centroids.set_column(0, &y.column(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(y, i, &centroids, 0)).collect();
    for j in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.set_column(j, &y.column(pick));
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(y, i, &centroids, j));
        }
    }

    let mut assignments: Vec<usize> = Vec::new();
    let mut inertia = Vec::new();
    for _ in 0..iters.max(1) {
        let near = nearest(&centroids, y);
        inertia.push(near.iter().map(|&(_, d)| d).sum());
        let next: Vec<usize> = near.iter().map(|&(j, _)| j).collect();
        if next == assignments {
            break;
        }
        assignments = next;

        let mut sums = DMatrix::zeros(y.nrows(), k);
        let mut counts = vec![0usize; k];
        for (i, &j) in assignments.iter().enumerate() {
            sums.column_mut(j).axpy(1.0, &y.column(i), 1.0);
            counts[j] += 1;
        }
        let mut taken = vec![false; n];
        for j in 0..k {
            if counts[j] > 0 {
                centroids.set_column(j, &(sums.column(j) / counts[j] as f64));
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .map(|i| (i, sq_dist(y, i, &centroids, assignments[i])))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0;
                taken[far] = true;
                centroids.set_column(j, &y.column(far));
            }
        }
    }
    if assignments.is_empty() {
        assignments = nearest(&centroids, y).into_iter().map(|(j, _)| j).collect();
    }
    Ok(KMeansResult {
        centroids,
        assignments,
        inertia,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let means = [[0.0, 0.0], [6.0, 4.0]];
        let y = DMatrix::from_fn(2, 400, |r, c| means[c % 2][r] + noise.sample(&mut rng));
        let res = kmeans_vq(&y, 2, 42, 100).unwrap();
        for m in means {
            let best = res
                .centroids
                .column_iter()
                .map(|c| ((c[0] - m[0]).powi(2) + (c[1] - m[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.1, "{best}");
        }
        for w in res.inertia.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn identical_points() {
        let y = DMatrix::from_fn(3, 10, |r, _| r as f64);
        let res = kmeans_vq(&y, 1, 0, 10).unwrap();
        assert_eq!(res.centroids.column(0), y.column(0));
        assert_eq!(*res.inertia.last().unwrap(), 0.0);
        assert!(res.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn duplicate_points_more_clusters() {
        // Seeding collapses; empty clusters must still end up somewhere.
        let y = DMatrix::from_fn(1, 6, |_, c| if c < 3 { 0.0 } else { 1.0 });
        let res = kmeans_vq(&y, 3, 7, 20).unwrap();
        assert_eq!(res.assignments.len(), 6);
        assert!(res.centroids.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn errors() {
        let y = DMatrix::from_element(2, 3, 1.0);
        assert!(matches!(kmeans_vq(&y, 4, 0, 5), Err(Error::NotEnoughData { .. })));
        assert!(assign_nearest(&DMatrix::zeros(3, 2), &y).is_err());
    }
}
