//! Dense vector primitives and the cosine-similarity kernel.
//!
//! Vectors are plain slices. A [`RepBatch`] stores a batch of equal-length
//! column vectors contiguously (column-major), which is the shape every loss
//! and gradient routine consumes.
//!
//! All reductions run left to right over the index so results are
//! bit-reproducible.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which representation a batch holds. Cluster batches are stored
/// column-per-cluster: each column has one entry per sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Instance,
    Cluster,
}

#[inline]
pub fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter()
        .zip(v)
        .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

#[inline]
pub fn norm<T: Scalar>(u: &[T]) -> T {
    dot(u, u).sqrt()
}

/// Sum of absolute entries.
#[inline]
pub fn l1_norm<T: Scalar>(u: &[T]) -> T {
    u.iter().fold(T::zero(), |acc, &a| acc + a.abs())
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::ZeroNormVector);
    }
    Ok(clamp_unit(dot(u, v) / (nu * nv)))
}

#[inline]
pub(crate) fn clamp_unit<T: Scalar>(s: T) -> T {
    s.max(-T::one()).min(T::one())
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

/// A batch of `n` column vectors, each of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepBatch<T> {
    dim: usize,
    n: usize,
    data: Vec<T>,
    layout: Layout,
}

impl<T: Scalar> RepBatch<T> {
    pub fn zeros(dim: usize, n: usize, layout: Layout) -> Self {
        Self {
            dim,
            n,
            data: vec![T::zero(); dim * n],
            layout,
        }
    }

    /// Builds a batch whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[T]>>(columns: &[C], layout: Layout) -> Result<Self> {
        let first = columns.first().ok_or(Error::BatchTooSmall { n: 0 })?;
        let dim = first.as_ref().len();
        if dim == 0 {
            return Err(Error::DimMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut data = Vec::with_capacity(dim * columns.len());
        for c in columns {
            let c = c.as_ref();
            if c.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Self::from_column_major(dim, columns.len(), data, layout)
    }

    /// Builds a batch from per-sample rows, transposing so that column `j`
    /// collects entry `j` of every row. This is how per-sample cluster
    /// outputs `y_i` become the cluster matrix whose columns are clusters.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R], layout: Layout) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let width = first.as_ref().len();
        let n_rows = rows.len();
        let mut data = vec![T::zero(); width * n_rows];
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != width {
                return Err(Error::DimMismatch {
                    expected: width,
                    found: r.len(),
                });
            }
            for (j, &x) in r.iter().enumerate() {
                data[j * n_rows + i] = x;
            }
        }
        Self::from_column_major(n_rows, width, data, layout)
    }

    /// `data` holds `n` columns of length `dim` back to back.
    pub fn from_column_major(dim: usize, n: usize, data: Vec<T>, layout: Layout) -> Result<Self> {
        if data.len() != dim * n {
            return Err(Error::DimMismatch {
                expected: dim * n,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("representation batch"));
        }
        Ok(Self { dim, n, data, layout })
    }

    /// Number of columns.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of each column.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn column_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim)
    }

    /// Entry `r` of every column, i.e. row `r` of the matrix.
    pub fn row(&self, r: usize) -> Vec<T> {
        (0..self.n).map(|j| self.data[j * self.dim + r]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[col * self.dim + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[col * self.dim + row] = value;
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            data: self.data.iter().map(|&x| x * c).collect(),
            ..self.clone()
        }
    }

    /// Sum of column L1 norms.
    pub fn total_l1(&self) -> T {
        self.columns().fold(T::zero(), |acc, c| acc + l1_norm(c))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}
