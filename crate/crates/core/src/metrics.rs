//! Clustering scores: accuracy under the best cluster-to-class matching,
//! normalized mutual information, adjusted Rand index.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{Error, Result};

/// Counts `n_ij` of points with predicted label `i` and true label `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: pred.len(),
                right: truth.len(),
            });
        }
        let rows = pred.iter().max().map_or(0, |m| m + 1);
        let cols = truth.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0u64; cols]; rows];
        for (&p, &t) in pred.iter().zip(truth) {
            counts[p][t] += 1;
        }
        Ok(Self {
            counts,
            total: pred.len() as u64,
        })
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let cols = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged contingency table".into()));
        }
        let total = counts.iter().flatten().sum();
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Largest number of points matched by a one-to-one assignment of
    /// predicted labels to true labels. The table is padded to square.
    pub fn best_matching(&self) -> u64 {
        let k = self.counts.len().max(self.counts.first().map_or(0, Vec::len));
        if k == 0 {
            return 0;
        }
        let weights = Matrix::from_fn(k, k, |(i, j)| {
            self.counts.get(i).and_then(|r| r.get(j)).map_or(0i64, |&c| c as i64)
        });
        kuhn_munkres(&weights).0 as u64
    }
}

/// Fraction of points correctly labeled under the best matching.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(pred, truth)?;
    if t.total == 0 {
        return Ok(0.0);
    }
    Ok(t.best_matching() as f64 / t.total as f64)
}

fn plogp_entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(pred; true) / sqrt(H(pred) H(true))`, taken as 0 when either entropy is 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(nmi_from_table(&ContingencyTable::new(pred, truth)?))
}

pub fn nmi_from_table(t: &ContingencyTable) -> f64 {
    if t.total == 0 {
        return 0.0;
    }
    let n = t.total as f64;
    let (a, b) = (t.row_sums(), t.col_sums());
    let (ha, hb) = (plogp_entropy(&a, n), plogp_entropy(&b, n));
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (a[i] as f64 * b[j] as f64)).ln();
            }
        }
    }
    (mi / (ha * hb).sqrt()).clamp(0.0, 1.0)
}

fn pairs(c: u64) -> f64 {
    (c as f64) * (c.saturating_sub(1) as f64) / 2.0
}

/// Adjusted Rand index. When the expected and maximal index coincide (both
/// partitions trivial) the partitions agree and the score is 1.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() < 2 {
        return Err(Error::BatchTooSmall { n: pred.len() });
    }
    let t = ContingencyTable::new(pred, truth)?;
    let index: f64 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sa: f64 = t.row_sums().into_iter().map(pairs).sum();
    let sb: f64 = t.col_sums().into_iter().map(pairs).sum();
    let expected = sa * sb / pairs(t.total);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// All three scores on one labeling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

pub fn score(pred: &[usize], truth: &[usize]) -> Result<Scores> {
    Ok(Scores {
        acc: clustering_accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        ari: ari(pred, truth)?,
    })
}
