use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const MAX_ITER: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assign: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid.
    pub objective_sq: f64,
    /// Sum of (un-squared) Euclidean distances to the assigned centroid.
    pub objective: f64,
    /// Squared objective after each Lloyd iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus(points: &[Vec<f64>], m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < m {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target just past the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
        centroids.push(points[next].clone());
    }
    centroids
}

fn nearest(p: &[f64], centroids: &[Vec<f64>], current: Option<usize>) -> usize {
    let mut best = current.unwrap_or(0);
    let mut best_d = sq_dist(p, &centroids[best]);
    for (l, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best = l;
            best_d = d;
        }
    }
    best
}

fn means(points: &[Vec<f64>], assign: &[usize], m: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; m];
    let mut counts = vec![0usize; m];
    for (p, &l) in points.iter().zip(assign) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    (sums, counts)
}

/// Moves the point farthest from its own centroid (among clusters with more
/// than one member) into each empty cluster.
fn repair_empty(points: &[Vec<f64>], assign: &mut [usize], centroids: &[Vec<f64>], counts: &mut [usize]) -> bool {
    let mut repaired = false;
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[assign[i]] > 1 {
                let d = sq_dist(p, &centroids[assign[i]]);
                if far.is_none_or(|(_, b)| d > b) {
                    far = Some((i, d));
                }
            }
        }
        let (i, _) = far.expect("m <= n leaves a donor cluster");
        counts[assign[i]] -= 1;
        assign[i] = empty;
        counts[empty] = 1;
        repaired = true;
    }
    repaired
}

fn objectives(points: &[Vec<f64>], assign: &[usize], centroids: &[Vec<f64>]) -> (f64, f64) {
    points.iter().zip(assign).fold((0.0, 0.0), |(sq, lin), (p, &l)| {
        let d = sq_dist(p, &centroids[l]);
        (sq + d, lin + d.sqrt())
    })
}

/// Lloyd's algorithm with k-means++ seeding. Deterministic for a given seed.
pub fn kmeans(points: &[Vec<f64>], m: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.len();
    if m == 0 || m > n {
        return Err(invalid(format!("cannot form {m} clusters from {n} points")));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(invalid("points must share a positive dimension"));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("points must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus(points, m, &mut rng);
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids, None)).collect();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (c, mut counts) = means(points, &assign, m, dim);
        centroids = c;
        if repair_empty(points, &mut assign, &centroids, &mut counts) {
            centroids = means(points, &assign, m, dim).0;
        }
        history.push(objectives(points, &assign, &centroids).0);
        if iterations >= MAX_ITER {
            break;
        }
        let next: Vec<usize> = points
            .iter()
            .zip(&assign)
            .map(|(p, &l)| nearest(p, &centroids, Some(l)))
            .collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    let (objective_sq, objective) = objectives(points, &assign, &centroids);
    Ok(KMeansResult { assign, centroids, objective_sq, objective, history, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(vec![i as f64 * 0.01, 0.0]);
            pts.push(vec![100.0 + i as f64 * 0.01, 5.0]);
        }
        let r = kmeans(&pts, 2, 3).unwrap();
        for i in (0..20).step_by(2) {
            assert_eq!(r.assign[i], r.assign[0]);
            assert_eq!(r.assign[i + 1], r.assign[1]);
        }
        assert_ne!(r.assign[0], r.assign[1]);
    }

    #[test]
    fn m_equals_n_is_exact() {
        let pts: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let r = kmeans(&pts, 7, 0).unwrap();
        assert_eq!(r.objective, 0.0);
        let mut a = r.assign.clone();
        a.sort_unstable();
        assert_eq!(a, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn duplicates_still_fill_every_cluster() {
        let pts = vec![vec![1.0]; 5];
        let r = kmeans(&pts, 3, 9).unwrap();
        for l in 0..3 {
            assert!(r.assign.contains(&l));
        }
        assert_eq!(r.objective_sq, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(kmeans(&[vec![1.0]], 2, 0).is_err());
        assert!(kmeans(&[vec![1.0], vec![1.0, 2.0]], 1, 0).is_err());
        assert!(kmeans(&[vec![]], 1, 0).is_err());
    }
}
