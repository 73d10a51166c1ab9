//! Brute-force and textbook reference computations.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Central difference with step `h`.
pub fn central(h: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// `|a − b| <= max(rel·max(|a|,|b|), abs)` elementwise.
pub fn close(a: &[f64], b: &[f64], rel: f64, abs: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| (x - y).abs() <= (rel * x.abs().max(y.abs())).max(abs))
}

pub fn gaussian_columns<R: Rng>(rng: &mut R, dim: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best accuracy over all `k!` relabelings of `pred`.
pub fn brute_force_accuracy(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    permutations(k)
        .iter()
        .map(|perm| pred.iter().zip(truth).filter(|&(&p, &t)| perm[p] == t).count())
        .max()
        .unwrap_or(0) as f64
        / pred.len() as f64
}

/// Adjusted Rand index from explicit pair counts over all `n(n−1)/2` pairs.
pub fn pair_counting_ari(pred: &[usize], truth: &[usize]) -> f64 {
    let (mut both, mut only_p, mut only_t, mut neither) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..pred.len() {
        for j in i + 1..pred.len() {
            match (pred[i] == pred[j], truth[i] == truth[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_p += 1.0,
                (false, true) => only_t += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let num = 2.0 * (both * neither - only_p * only_t);
    let den = (both + only_p) * (only_p + neither) + (both + only_t) * (only_t + neither);
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Lloyd's algorithm from `restarts` random initial centers; returns the
/// labels of the lowest-inertia run.
pub fn kmeans<R: Rng>(points: &[Vec<f64>], k: usize, restarts: usize, rng: &mut R) -> Vec<usize> {
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut best = (f64::INFINITY, vec![0; points.len()]);
    for _ in 0..restarts {
        let mut centers: Vec<Vec<f64>> = (0..k).map(|_| points[rng.gen_range(0..points.len())].clone()).collect();
        let mut labels = vec![0; points.len()];
        for _ in 0..100 {
            for (l, p) in labels.iter_mut().zip(points) {
                *l = (0..k)
                    .min_by(|&a, &b| dist2(p, &centers[a]).total_cmp(&dist2(p, &centers[b])))
                    .unwrap();
            }
            for (c, center) in centers.iter_mut().enumerate() {
                let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
                if !members.is_empty() {
                    for (j, v) in center.iter_mut().enumerate() {
                        *v = members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64;
                    }
                }
            }
        }
        let inertia: f64 = points.iter().zip(&labels).map(|(p, &l)| dist2(p, &centers[l])).sum();
        if inertia < best.0 {
            best = (inertia, labels);
        }
    }
    best.1
}
