//! Group strategies by their (work, heat variance) signature.
//!
//! Work scales like T and the variance term like T^3, so raw Euclidean
//! distance would be dominated by whichever axis has the bigger numbers.
//! Features are standardized before Lloyd iteration; reported centroids are
//! mapped back to original units.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Cluster centers in the units of the input points.
    pub centroids: Vec<(f64, f64)>,
    pub iterations: usize,
    /// False only when the iteration cap was hit before assignments settled.
    pub converged: bool,
}

impl Clustering {
    /// Mean squared distance from each point to its centroid, original units.
    pub fn within_cluster_variance(&self, points: &[(f64, f64)]) -> f64 {
        let total: f64 = points
            .iter()
            .zip(&self.assignments)
            .map(|(p, &a)| {
                let c = self.centroids[a];
                let dx = p.0 - c.0;
                let dy = p.1 - c.1;
                dx * dx + dy * dy
            })
            .sum();
        total / points.len() as f64
    }
}

const MAX_ITERATIONS: usize = 200;

/// Lloyd's algorithm with a seeded start: initial centroids are drawn
/// without replacement from the distinct input points, a cluster that loses
/// all members is reseeded at the point farthest from its centroid, and the
/// loop stops once assignments repeat.
pub fn cluster_strategies(points: &[(f64, f64)], k: usize, seed: u64) -> Result<Clustering> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points to cluster".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("need at least one cluster".into()));
    }
    if k > points.len() {
        return Err(Error::InvalidInput(format!(
            "asked for {k} clusters from {} points",
            points.len()
        )));
    }
    for p in points {
        if !(p.0.is_finite() && p.1.is_finite()) {
            return Err(Error::InvalidInput(format!("points must be finite, got {p:?}")));
        }
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let (mx, sx) = feature_scale(&xs);
    let (my, sy) = feature_scale(&ys);
    let scaled: Vec<(f64, f64)> =
        points.iter().map(|p| ((p.0 - mx) / sx, (p.1 - my) / sy)).collect();

    // distinct points in first-occurrence order, so installation order never
    // depends on hash iteration
    let mut distinct: Vec<usize> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, p) in points.iter().enumerate() {
        if seen.insert((p.0.to_bits(), p.1.to_bits())) {
            distinct.push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: &[usize] = if distinct.len() >= k { &distinct } else { &(0..points.len()).collect::<Vec<_>>() };
    let picks = rand::seq::index::sample(&mut rng, pool.len(), k);
    let mut centroids: Vec<(f64, f64)> = picks.iter().map(|i| scaled[pool[i]]).collect();

    let mut assignments = vec![0usize; points.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let next: Vec<usize> = scaled.iter().map(|p| nearest(p, &centroids)).collect();

        let mut counts = vec![0usize; k];
        for &a in &next {
            counts[a] += 1;
        }
        if counts.iter().any(|&c| c == 0) {
            let mut taken = vec![false; points.len()];
            for j in 0..k {
                if counts[j] > 0 {
                    continue;
                }
                if let Some(far) = farthest_point(&scaled, &next, &centroids, &taken) {
                    centroids[j] = scaled[far];
                    taken[far] = true;
                }
            }
            continue;
        }

        let stable = next == assignments && iterations > 1;
        assignments = next;
        if stable {
            converged = true;
            break;
        }
        let mut sums = vec![(0.0f64, 0.0f64); k];
        for (p, &a) in scaled.iter().zip(&assignments) {
            sums[a].0 += p.0;
            sums[a].1 += p.1;
        }
        for j in 0..k {
            centroids[j] = (sums[j].0 / counts[j] as f64, sums[j].1 / counts[j] as f64);
        }
    }

    let centroids = centroids.into_iter().map(|c| (c.0 * sx + mx, c.1 * sy + my)).collect();
    Ok(Clustering { assignments, centroids, iterations, converged })
}

/// Mean and sample standard deviation; a constant feature gets scale 1 so
/// dividing by it is a no-op.
fn feature_scale(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 1.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

fn nearest(p: &(f64, f64), centroids: &[(f64, f64)]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let dx = p.0 - c.0;
        let dy = p.1 - c.1;
        let d = dx * dx + dy * dy;
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn farthest_point(
    scaled: &[(f64, f64)],
    assignments: &[usize],
    centroids: &[(f64, f64)],
    taken: &[bool],
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in scaled.iter().enumerate() {
        if taken[i] {
            continue;
        }
        let c = centroids[assignments[i]];
        let dx = p.0 - c.0;
        let dy = p.1 - c.1;
        let d = dx * dx + dy * dy;
        if best.map_or(true, |(_, bd)| d > bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn two_blobs() -> (Vec<(f64, f64)>, Vec<usize>) {
        // centers ten standard deviations apart on both axes after scaling
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut points = Vec::new();
        let mut truth = Vec::new();
        for i in 0..60 {
            let (cx, cy, label) = if i % 2 == 0 { (1.0, 300.0, 0) } else { (4.0, 1800.0, 1) };
            let jx: f64 = rng.gen_range(-0.1..0.1);
            let jy: f64 = rng.gen_range(-40.0..40.0);
            points.push((cx + jx, cy + jy));
            truth.push(label);
        }
        (points, truth)
    }

    #[test]
    fn separated_blobs_recovered_exactly() {
        let (points, truth) = two_blobs();
        let result = cluster_strategies(&points, 2, 11).unwrap();
        assert!(result.converged);
        // labels may be swapped; membership must match
        let flip = result.assignments[0] != truth[0];
        for (a, t) in result.assignments.iter().zip(&truth) {
            let mapped = if flip { 1 - a } else { *a };
            assert_eq!(mapped, *t);
        }
        let c0 = result.centroids[result.assignments[0]];
        assert!((c0.0 - 1.0).abs() < 0.1 && (c0.1 - 300.0).abs() < 40.0);
    }

    #[test]
    fn single_cluster_centroid_is_the_mean() {
        let points = vec![(1.0, 10.0), (2.0, 14.0), (4.0, 30.0), (0.5, 2.0)];
        let result = cluster_strategies(&points, 1, 3).unwrap();
        let mx = points.iter().map(|p| p.0).sum::<f64>() / 4.0;
        let my = points.iter().map(|p| p.1).sum::<f64>() / 4.0;
        assert!((result.centroids[0].0 - mx).abs() < 1e-12);
        assert!((result.centroids[0].1 - my).abs() < 1e-12);
        assert!(result.assignments.iter().all(|&a| a == 0));
        assert!(result.converged);
    }

    #[test]
    fn duplicates_with_k_equal_to_distinct_points() {
        let mut points = Vec::new();
        for _ in 0..5 {
            points.push((1.0, 2.0));
        }
        for _ in 0..7 {
            points.push((3.0, 40.0));
        }
        for _ in 0..3 {
            points.push((5.0, 6.0));
        }
        let result = cluster_strategies(&points, 3, 9).unwrap();
        assert!(result.converged);
        assert!(result.within_cluster_variance(&points) < 1e-24);
        // duplicate points always land together
        for i in 0..5 {
            assert_eq!(result.assignments[i], result.assignments[0]);
        }
        for i in 5..12 {
            assert_eq!(result.assignments[i], result.assignments[5]);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let (points, _) = two_blobs();
        let a = cluster_strategies(&points, 4, 42).unwrap();
        let b = cluster_strategies(&points, 4, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_errors() {
        let points = vec![(0.0, 0.0), (1.0, 1.0)];
        assert!(cluster_strategies(&[], 1, 0).is_err());
        assert!(cluster_strategies(&points, 0, 0).is_err());
        assert!(cluster_strategies(&points, 3, 0).is_err());
        assert!(cluster_strategies(&[(f64::NAN, 0.0)], 1, 0).is_err());
    }

    #[test]
    fn more_clusters_than_distinct_points_still_terminates() {
        let points = vec![(1.0, 1.0), (1.0, 1.0), (1.0, 1.0), (2.0, 2.0)];
        let result = cluster_strategies(&points, 3, 5).unwrap();
        assert_eq!(result.assignments.len(), 4);
        assert!(result.iterations <= MAX_ITERATIONS);
    }
}
