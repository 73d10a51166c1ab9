//! Contrastive loss, cluster entropy, and the composite objectives built from them.
//!
//! The contrastive loss of two batches `U`, `V` (columns `u_i`, `v_i`) is
//!
//! ```text
//! L(U, V; τ) = (1/n) Σ_i −log[ exp(s(u_i,v_i)/τ) / ξ_i ]
//! ξ_i        = Σ_{j≠i} exp(s(u_i,u_j)/τ) + exp(s(u_i,v_j)/τ)
//! ```
//!
//! The positive pair is deliberately absent from `ξ_i`, and so is the self
//! term `j = i`. This differs from NT-Xent and must not be "fixed".

use crate::error::{Error, Result};
use crate::numerics::{clamp_unit, dot, l1_norm, norm, RepBatch};
use crate::scalar::Scalar;

/// A strictly positive softmax temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature<T>(T);

impl<T: Scalar> Temperature<T> {
    pub fn new(value: T) -> Result<Self> {
        if value > T::zero() && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter {
                name: "temperature",
                reason: format!("must be > 0, got {value}"),
            })
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// Which objective a training step optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Instance and cluster terms together.
    FullMcc,
    /// Instance-level contrastive term only (representation-learning stage).
    InstanceOnly,
    /// Cluster-level contrastive term plus entropies (clustering stage).
    ClusterOnly,
}

/// The eight representation batches produced by feeding both augmented views
/// through both the online (`o`) and target (`t`) networks.
#[derive(Debug, Clone)]
pub struct FourViewBatch<T> {
    pub z_a_o: RepBatch<T>,
    pub z_b_o: RepBatch<T>,
    pub z_a_t: RepBatch<T>,
    pub z_b_t: RepBatch<T>,
    pub c_a_o: RepBatch<T>,
    pub c_b_o: RepBatch<T>,
    pub c_a_t: RepBatch<T>,
    pub c_b_t: RepBatch<T>,
}

impl<T: Scalar> FourViewBatch<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        z_a_o: RepBatch<T>,
        z_b_o: RepBatch<T>,
        z_a_t: RepBatch<T>,
        z_b_t: RepBatch<T>,
        c_a_o: RepBatch<T>,
        c_b_o: RepBatch<T>,
        c_a_t: RepBatch<T>,
        c_b_t: RepBatch<T>,
    ) -> Result<Self> {
        let zs = [&z_a_o, &z_b_o, &z_a_t, &z_b_t];
        let cs = [&c_a_o, &c_b_o, &c_a_t, &c_b_t];
        if zs.iter().any(|z| !z.same_shape(zs[0])) {
            return Err(Error::ShapeMismatch("instance batches differ in shape".into()));
        }
        if cs.iter().any(|c| !c.same_shape(cs[0])) {
            return Err(Error::ShapeMismatch("cluster batches differ in shape".into()));
        }
        // cluster columns carry one entry per sample
        if cs[0].dim() != zs[0].n() {
            return Err(Error::ShapeMismatch(format!(
                "instance batch has {} samples but cluster columns have length {}",
                zs[0].n(),
                cs[0].dim()
            )));
        }
        Ok(Self {
            z_a_o,
            z_b_o,
            z_a_t,
            z_b_t,
            c_a_o,
            c_b_o,
            c_a_t,
            c_b_t,
        })
    }

    /// Batch size.
    pub fn n(&self) -> usize {
        self.z_a_o.n()
    }
}

/// Pairwise cosine similarities of two batches plus the per-row log
/// normalizers `log ξ_i`. Shared by the loss and its closed-form gradients.
#[derive(Debug, Clone)]
pub(crate) struct PairKernel<T> {
    pub n: usize,
    pub inv_tau: T,
    pub u_norm: Vec<T>,
    pub v_norm: Vec<T>,
    /// Unit columns of `U` and `V`, column-major.
    pub u_hat: Vec<T>,
    pub v_hat: Vec<T>,
    dim: usize,
    /// `s(u_i, u_j)`, row-major n×n.
    pub s_uu: Vec<T>,
    /// `s(u_i, v_j)`, row-major n×n.
    pub s_uv: Vec<T>,
    pub log_xi: Vec<T>,
}

impl<T: Scalar> PairKernel<T> {
    pub fn new(u: &RepBatch<T>, v: &RepBatch<T>, tau: Temperature<T>) -> Result<Self> {
        if !u.same_shape(v) {
            return Err(Error::ShapeMismatch(format!(
                "U is {}x{} but V is {}x{}",
                u.dim(),
                u.n(),
                v.dim(),
                v.n()
            )));
        }
        let n = u.n();
        if n < 2 {
            return Err(Error::BatchTooSmall { n });
        }
        let dim = u.dim();
        let (u_norm, u_hat) = unit_columns(u)?;
        let (v_norm, v_hat) = unit_columns(v)?;
        let col = |i: usize| i * dim..(i + 1) * dim;
        let mut s_uu = vec![T::zero(); n * n];
        let mut s_uv = vec![T::zero(); n * n];
        for i in 0..n {
            let ui = &u_hat[col(i)];
            for j in 0..n {
                s_uu[i * n + j] = clamp_unit(dot(ui, &u_hat[col(j)]));
                s_uv[i * n + j] = clamp_unit(dot(ui, &v_hat[col(j)]));
            }
        }
        let inv_tau = T::one() / tau.value();
        let log_xi = (0..n)
            .map(|i| {
                let logits = (0..n)
                    .filter(|&j| j != i)
                    .flat_map(|j| [s_uu[i * n + j] * inv_tau, s_uv[i * n + j] * inv_tau]);
                log_sum_exp(logits)
            })
            .collect();
        Ok(Self {
            n,
            inv_tau,
            u_norm,
            v_norm,
            u_hat,
            v_hat,
            dim,
            s_uu,
            s_uv,
            log_xi,
        })
    }

    #[inline]
    pub fn u_hat(&self, i: usize) -> &[T] {
        &self.u_hat[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn v_hat(&self, i: usize) -> &[T] {
        &self.v_hat[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn suu(&self, i: usize, j: usize) -> T {
        self.s_uu[i * self.n + j]
    }

    #[inline]
    pub fn suv(&self, i: usize, j: usize) -> T {
        self.s_uv[i * self.n + j]
    }

    /// `exp(s/τ) / ξ_row`, evaluated in log space.
    #[inline]
    pub fn weight(&self, s: T, row: usize) -> T {
        (s * self.inv_tau - self.log_xi[row]).exp()
    }

    pub fn loss(&self) -> T {
        let n = self.n;
        let mut total = T::zero();
        for i in 0..n {
            // −log(exp(a)/ξ_i) with every exponent shifted by the row max
            let a = self.suv(i, i) * self.inv_tau;
            let row_max = (0..n)
                .filter(|&j| j != i)
                .map(|j| (self.suu(i, j) * self.inv_tau).max(self.suv(i, j) * self.inv_tau))
                .fold(a, T::max);
            let denom = (0..n).filter(|&j| j != i).fold(T::zero(), |acc, j| {
                acc + (self.suu(i, j) * self.inv_tau - row_max).exp()
                    + (self.suv(i, j) * self.inv_tau - row_max).exp()
            });
            total = total + (denom.ln() - (a - row_max));
        }
        total / T::of_usize(n)
    }
}

fn unit_columns<T: Scalar>(b: &RepBatch<T>) -> Result<(Vec<T>, Vec<T>)> {
    let mut norms = Vec::with_capacity(b.n());
    let mut hat = Vec::with_capacity(b.dim() * b.n());
    for c in b.columns() {
        let nc = norm(c);
        if nc == T::zero() {
            return Err(Error::ZeroNormVector);
        }
        norms.push(nc);
        hat.extend(c.iter().map(|&x| x / nc));
    }
    Ok((norms, hat))
}

pub(crate) fn log_sum_exp<T: Scalar>(xs: impl Iterator<Item = T> + Clone) -> T {
    let m = xs.clone().fold(T::neg_infinity(), T::max);
    let s = xs.fold(T::zero(), |acc, x| acc + (x - m).exp());
    m + s.ln()
}

/// Per-row normalizers `ξ_i` of the contrastive loss.
#[derive(Debug, Clone, PartialEq)]
pub struct XiTable<T> {
    log_xi: Vec<T>,
}

impl<T: Scalar> XiTable<T> {
    pub fn compute(u: &RepBatch<T>, v: &RepBatch<T>, tau: Temperature<T>) -> Result<Self> {
        Ok(Self {
            log_xi: PairKernel::new(u, v, tau)?.log_xi,
        })
    }

    pub fn len(&self) -> usize {
        self.log_xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_xi.is_empty()
    }

    pub fn xi(&self, i: usize) -> T {
        self.log_xi[i].exp()
    }

    pub fn log_xi(&self, i: usize) -> T {
        self.log_xi[i]
    }
}

/// `L(U, V; τ)`.
pub fn contrastive_loss<T: Scalar>(
    u: &RepBatch<T>,
    v: &RepBatch<T>,
    tau: Temperature<T>,
) -> Result<T> {
    Ok(PairKernel::new(u, v, tau)?.loss())
}

/// L1 mass of each column and the total mass.
pub(crate) fn column_masses<T: Scalar>(c: &RepBatch<T>) -> Result<(Vec<T>, T)> {
    let masses: Vec<T> = c.columns().map(l1_norm).collect();
    let total = masses.iter().fold(T::zero(), |acc, &m| acc + m);
    if total == T::zero() {
        return Err(Error::AllZeroMatrix);
    }
    Ok((masses, total))
}

/// Entropy of the column L1-mass distribution, `−Σ p_j log p_j`.
/// Columns with zero mass contribute nothing.
pub fn entropy<T: Scalar>(c: &RepBatch<T>) -> Result<T> {
    let (masses, total) = column_masses(c)?;
    Ok(entropy_of_masses(&masses, total))
}

pub(crate) fn entropy_of_masses<T: Scalar>(masses: &[T], total: T) -> T {
    masses.iter().fold(T::zero(), |acc, &m| {
        if m == T::zero() {
            acc
        } else {
            let p = m / total;
            acc - p * p.ln()
        }
    })
}

/// Two-view contrastive clustering loss:
/// `½(L(z_a,z_b;τ_I) + L(c_a,c_b;τ_C)) + H(c_a) + H(c_b)`.
pub fn cc_loss<T: Scalar>(
    z_a: &RepBatch<T>,
    z_b: &RepBatch<T>,
    c_a: &RepBatch<T>,
    c_b: &RepBatch<T>,
    tau_i: Temperature<T>,
    tau_c: Temperature<T>,
) -> Result<T> {
    let li = contrastive_loss(z_a, z_b, tau_i)?;
    let lc = contrastive_loss(c_a, c_b, tau_c)?;
    Ok(T::half() * (li + lc) + entropy(c_a)? + entropy(c_b)?)
}

/// The momentum objective over all four views.
pub fn mcc_loss<T: Scalar>(
    views: &FourViewBatch<T>,
    tau_i: Temperature<T>,
    tau_c: Temperature<T>,
) -> Result<T> {
    let v = views;
    let pairs = contrastive_loss(&v.z_a_o, &v.z_b_t, tau_i)?
        + contrastive_loss(&v.z_a_t, &v.z_b_o, tau_i)?
        + contrastive_loss(&v.c_a_o, &v.c_b_t, tau_c)?
        + contrastive_loss(&v.c_a_t, &v.c_b_o, tau_c)?;
    Ok(T::half() * pairs
        + entropy(&v.c_a_o)?
        + entropy(&v.c_b_o)?
        + entropy(&v.c_a_t)?
        + entropy(&v.c_b_t)?)
}

/// Instance-level loss of one client: `½(L(z_aO,z_bT) + L(z_aT,z_bO))`.
pub fn instance_loss_k<T: Scalar>(
    z_a_o: &RepBatch<T>,
    z_b_t: &RepBatch<T>,
    z_a_t: &RepBatch<T>,
    z_b_o: &RepBatch<T>,
    tau_i: Temperature<T>,
) -> Result<T> {
    Ok(T::half() * (contrastive_loss(z_a_o, z_b_t, tau_i)? + contrastive_loss(z_a_t, z_b_o, tau_i)?))
}

/// Cluster-level loss of one client: the two cluster contrastive terms plus
/// the four entropies.
pub fn cluster_loss_k<T: Scalar>(
    c_a_o: &RepBatch<T>,
    c_b_t: &RepBatch<T>,
    c_a_t: &RepBatch<T>,
    c_b_o: &RepBatch<T>,
    tau_c: Temperature<T>,
) -> Result<T> {
    let pairs = contrastive_loss(c_a_o, c_b_t, tau_c)? + contrastive_loss(c_a_t, c_b_o, tau_c)?;
    Ok(T::half() * pairs
        + entropy(c_a_o)?
        + entropy(c_b_o)?
        + entropy(c_a_t)?
        + entropy(c_b_t)?)
}

/// The loss selected by `mode` on a four-view batch.
pub fn mcc_objective<T: Scalar>(
    views: &FourViewBatch<T>,
    tau_i: Temperature<T>,
    tau_c: Temperature<T>,
    mode: LossMode,
) -> Result<T> {
    let v = views;
    match mode {
        LossMode::FullMcc => mcc_loss(v, tau_i, tau_c),
        LossMode::InstanceOnly => instance_loss_k(&v.z_a_o, &v.z_b_t, &v.z_a_t, &v.z_b_o, tau_i),
        LossMode::ClusterOnly => cluster_loss_k(&v.c_a_o, &v.c_b_t, &v.c_a_t, &v.c_b_o, tau_c),
    }
}
