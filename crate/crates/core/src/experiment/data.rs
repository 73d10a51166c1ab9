//! Synthetic and file-backed labeled datasets. Labels are carried for
//! evaluation only.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::federated::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample<f64>>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample<f64>>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let dim = first.x.len();
        if let Some(bad) = samples.iter().find(|s| s.x.len() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                found: bad.x.len(),
            });
        }
        let classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
        Ok(Self { samples, classes })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// `label,x0,x1,...` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        (0..self.dim()).for_each(|j| out.push_str(&format!(",x{j}")));
        out.push('\n');
        for s in &self.samples {
            out.push_str(&s.label.to_string());
            s.x.iter().for_each(|v| out.push_str(&format!(",{v:?}")));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim_start().starts_with("label") => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected a header row starting with `label`".into(),
                })
            }
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let bad = |message: String| Error::Parse { line: i + 1, message };
            let mut fields = line.split(',').map(str::trim);
            let label = fields
                .next()
                .unwrap_or_default()
                .parse::<usize>()
                .map_err(|e| bad(format!("label: {e}")))?;
            let x = fields
                .map(|f| f.parse::<f64>().map_err(|e| bad(format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite feature".into()));
            }
            samples.push(Sample { x, label });
        }
        Self::new(samples)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gram–Schmidt on the given vectors; returns the orthonormal ones in order,
/// skipping any that are (numerically) dependent on earlier ones.
fn orthonormalize(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

/// A uniformly random orthonormal frame of `R^dim` (columns).
fn random_frame<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    loop {
        let draws = (0..dim).map(|_| (0..dim).map(|_| gaussian(rng)).collect()).collect();
        let frame = orthonormalize(draws);
        if frame.len() == dim {
            return frame;
        }
    }
}

/// `k` points with every pairwise distance equal to `sep`, in `R^(k-1)`.
fn simplex(k: usize, sep: f64) -> Vec<Vec<f64>> {
    let centered: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| sep / 2f64.sqrt() * (f64::from(u8::from(i == j)) - 1.0 / k as f64))
                .collect()
        })
        .collect();
    let basis = orthonormalize(centered[..k - 1].to_vec());
    centered
        .iter()
        .map(|v| basis.iter().map(|b| b.iter().zip(v).map(|(x, y)| x * y).sum()).collect())
        .collect()
}

/// Isotropic unit-variance Gaussian clusters around fixed means.
#[derive(Debug, Clone, PartialEq)]
pub struct Blobs {
    pub means: Vec<Vec<f64>>,
}

impl Blobs {
    /// Means on a regular simplex of edge `sep` when `dim >= k - 1`,
    /// otherwise evenly spaced with adjacent distance `sep` on a circle
    /// (or a line when `dim == 1`); then rotated by a random frame.
    pub fn new<R: Rng + ?Sized>(k: usize, dim: usize, sep: f64, rng: &mut R) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!("need at least 2 clusters, got {k}"),
            });
        }
        if !(sep > 0.0) || !sep.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sep",
                reason: format!("must be > 0, got {sep}"),
            });
        }
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be >= 1".into(),
            });
        }
        let local: Vec<Vec<f64>> = if dim + 1 >= k {
            simplex(k, sep)
        } else if dim == 1 {
            (0..k).map(|i| vec![sep * i as f64]).collect()
        } else {
            let r = sep / (2.0 * (std::f64::consts::PI / k as f64).sin());
            (0..k)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                    vec![r * a.cos(), r * a.sin()]
                })
                .collect()
        };
        let frame = random_frame(dim, rng);
        let means = local
            .iter()
            .map(|c| {
                (0..dim)
                    .map(|row| c.iter().zip(&frame).map(|(ci, col)| ci * col[row]).sum())
                    .collect()
            })
            .collect();
        Ok(Self { means })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// `n_per_class` points per cluster, class-major order.
    pub fn sample<R: Rng + ?Sized>(&self, n_per_class: usize, rng: &mut R) -> Result<Dataset> {
        let mut samples = Vec::with_capacity(self.k() * n_per_class);
        for (label, mean) in self.means.iter().enumerate() {
            for _ in 0..n_per_class {
                let x = mean.iter().map(|m| m + gaussian(rng)).collect();
                samples.push(Sample { x, label });
            }
        }
        Dataset::new(samples)
    }
}

/// `k` Gaussian blobs of unit variance whose means are `sep` apart.
pub fn make_blobs<R: Rng + ?Sized>(k: usize, n_per_class: usize, dim: usize, sep: f64, rng: &mut R) -> Result<Dataset> {
    Blobs::new(k, dim, sep, rng)?.sample(n_per_class, rng)
}

/// Concentric rings in a random 2-plane of `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rings {
    pub radii: Vec<f64>,
    pub noise: f64,
    plane: [Vec<f64>; 2],
}

impl Rings {
    /// Ring `c` has radius `(c + 1) * sep`; points get Gaussian noise of
    /// standard deviation `noise` in every coordinate.
    pub fn new<R: Rng + ?Sized>(k: usize, dim: usize, sep: f64, noise: f64, rng: &mut R) -> Result<Self> {
        if k < 2 || dim < 2 || !(sep > 0.0) || !(noise >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "rings",
                reason: format!("need k >= 2, dim >= 2, sep > 0, noise >= 0; got k={k} dim={dim} sep={sep} noise={noise}"),
            });
        }
        let mut frame = random_frame(dim, rng);
        frame.truncate(2);
        let plane = [frame[0].clone(), frame[1].clone()];
        Ok(Self {
            radii: (1..=k).map(|c| c as f64 * sep).collect(),
            noise,
            plane,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, n_per_class: usize, rng: &mut R) -> Result<Dataset> {
        let dim = self.plane[0].len();
        let mut samples = Vec::with_capacity(self.radii.len() * n_per_class);
        for (label, &r) in self.radii.iter().enumerate() {
            for _ in 0..n_per_class {
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let (c, s) = (r * a.cos(), r * a.sin());
                let x = (0..dim)
                    .map(|j| c * self.plane[0][j] + s * self.plane[1][j] + self.noise * gaussian(rng))
                    .collect();
                samples.push(Sample { x, label });
            }
        }
        Dataset::new(samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn simplex_means_are_equidistant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (k, dim) in [(2, 1), (3, 2), (4, 7), (5, 4)] {
            let b = Blobs::new(k, dim, 6.0, &mut rng).unwrap();
            for i in 0..k {
                assert_eq!(b.means[i].len(), dim);
                for j in 0..i {
                    assert!((dist(&b.means[i], &b.means[j]) - 6.0).abs() < 1e-9, "k={k} dim={dim}");
                }
            }
        }
    }

    #[test]
    fn low_dim_fallback_keeps_neighbors_sep_apart() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = Blobs::new(6, 2, 3.0, &mut rng).unwrap();
        for i in 0..6 {
            assert!((dist(&b.means[i], &b.means[(i + 1) % 6]) - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_blobs() {
        let a = make_blobs(3, 10, 4, 5.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = make_blobs(3, 10, 4, 5.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
        assert_eq!(a.classes, 3);
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let d = make_blobs(2, 5, 3, 2.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(Dataset::from_csv(&d.to_csv()).unwrap(), d);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = Dataset::from_csv("label,x0\n0,1.0\n1,abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        assert!(Dataset::from_csv("0,1.0\n").is_err());
    }

    #[test]
    fn rings_have_their_radii() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = Rings::new(3, 4, 2.0, 0.0, &mut rng).unwrap();
        let d = r.sample(20, &mut rng).unwrap();
        for s in &d.samples {
            let norm = s.x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 2.0 * (s.label + 1) as f64).abs() < 1e-9);
        }
    }
}
