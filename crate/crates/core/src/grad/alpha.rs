use crate::error::{Error, Result};
use crate::losses::{FourViewBatch, LossMode, Temperature};
use crate::numerics::RepBatch;
use crate::scalar::Scalar;

use super::closed_form::{contrastive_grads, entropy_grads};

/// Which loss a cache was built for; decides which parameters pass two
/// writes gradients into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheKind {
    /// Two-view loss without a target network; both views are trainable.
    Cc,
    /// Online branch of the momentum objective.
    Mcc(LossMode),
}

/// Representation-space gradients for every sample of one batch.
///
/// Slot `j` (1-based, as in `alpha(i, j)`) holds:
///
/// | j | gradient of                          | w.r.t.      | dim |
/// |---|--------------------------------------|-------------|-----|
/// | 1 | ½ instance contrastive term (view a) | `z_i^a`     | d1  |
/// | 2 | ½ instance contrastive term (view b) | `z_i^b`     | d1  |
/// | 3 | ½ cluster contrastive term (view a)  | `y_i^a`     | d2  |
/// | 4 | ½ cluster contrastive term (view b)  | `y_i^b`     | d2  |
/// | 5 | entropy of cluster matrix a          | `y_i^a`     | d2  |
/// | 6 | entropy of cluster matrix b          | `y_i^b`     | d2  |
///
/// Cluster-side slots come from the column gradients of the cluster matrix
/// read back row by row (`y_i` is row `i`).
///
/// Pass two scales slots 5 and 6 by [`entropy_weight`](Self::entropy_weight),
/// 1 unless changed with [`with_entropy_weight`](Self::with_entropy_weight).
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCache<T> {
    n: usize,
    d1: usize,
    d2: usize,
    slots: [Vec<T>; 6],
    kind: CacheKind,
    version: u64,
    entropy_weight: T,
}

impl<T: Scalar> AlphaCache<T> {
    /// All-zero cache; pass two then yields a zero gradient.
    pub fn zeros(n: usize, d1: usize, d2: usize, kind: CacheKind, version: u64) -> Self {
        let z = |d: usize| vec![T::zero(); n * d];
        Self {
            n,
            d1,
            d2,
            slots: [z(d1), z(d1), z(d2), z(d2), z(d2), z(d2)],
            kind,
            version,
            entropy_weight: T::one(),
        }
    }

    /// Weight `λ` of the entropy terms in the objective being differentiated:
    /// `λ = 1` is the plain sum, `λ = -1` rewards spread-out cluster masses.
    pub fn with_entropy_weight(mut self, weight: T) -> Self {
        self.entropy_weight = weight;
        self
    }

    pub fn entropy_weight(&self) -> T {
        self.entropy_weight
    }

    /// Cache for `½(L(z_a,z_b;τ_I) + L(c_a,c_b;τ_C)) + H(c_a) + H(c_b)`.
    pub fn for_cc(
        z_a: &RepBatch<T>,
        z_b: &RepBatch<T>,
        c_a: &RepBatch<T>,
        c_b: &RepBatch<T>,
        tau_i: Temperature<T>,
        tau_c: Temperature<T>,
        version: u64,
    ) -> Result<Self> {
        check_pairing(z_a, c_a)?;
        let mut cache = Self::zeros(z_a.n(), z_a.dim(), c_a.n(), CacheKind::Cc, version);
        let (gu, gv) = contrastive_grads(z_a, z_b, tau_i)?;
        cache.fill_instance(1, &gu);
        cache.fill_instance(2, &gv);
        let (cu, cv) = contrastive_grads(c_a, c_b, tau_c)?;
        cache.fill_cluster(3, &cu, T::half());
        cache.fill_cluster(4, &cv, T::half());
        cache.fill_cluster(5, &entropy_grads(c_a)?, T::one());
        cache.fill_cluster(6, &entropy_grads(c_b)?, T::one());
        Ok(cache)
    }

    /// Cache for the online-network gradient of the objective selected by
    /// `mode`. Target representations are constants.
    pub fn for_mcc(
        views: &FourViewBatch<T>,
        tau_i: Temperature<T>,
        tau_c: Temperature<T>,
        mode: LossMode,
        version: u64,
    ) -> Result<Self> {
        let v = views;
        let mut cache = Self::zeros(v.n(), v.z_a_o.dim(), v.c_a_o.n(), CacheKind::Mcc(mode), version);
        if mode != LossMode::ClusterOnly {
            // z^{aO} is the first argument of L(z^{aO}, z^{bT}); z^{bO} the
            // second argument of L(z^{aT}, z^{bO})
            let (gu, _) = contrastive_grads(&v.z_a_o, &v.z_b_t, tau_i)?;
            let (_, gv) = contrastive_grads(&v.z_a_t, &v.z_b_o, tau_i)?;
            cache.fill_instance(1, &gu);
            cache.fill_instance(2, &gv);
        }
        if mode != LossMode::InstanceOnly {
            let (cu, _) = contrastive_grads(&v.c_a_o, &v.c_b_t, tau_c)?;
            let (_, cv) = contrastive_grads(&v.c_a_t, &v.c_b_o, tau_c)?;
            cache.fill_cluster(3, &cu, T::half());
            cache.fill_cluster(4, &cv, T::half());
            cache.fill_cluster(5, &entropy_grads(&v.c_a_o)?, T::one());
            cache.fill_cluster(6, &entropy_grads(&v.c_b_o)?, T::one());
        }
        Ok(cache)
    }

    fn fill_instance(&mut self, slot: usize, grads: &RepBatch<T>) {
        let d = self.d1;
        let dst = &mut self.slots[slot - 1];
        for (i, col) in grads.columns().enumerate() {
            for (o, &g) in dst[i * d..(i + 1) * d].iter_mut().zip(col) {
                *o = T::half() * g;
            }
        }
    }

    fn fill_cluster(&mut self, slot: usize, grads: &RepBatch<T>, scale: T) {
        let d = self.d2;
        let dst = &mut self.slots[slot - 1];
        for i in 0..self.n {
            for (o, g) in dst[i * d..(i + 1) * d].iter_mut().zip(grads.row(i)) {
                *o = scale * g;
            }
        }
    }

    /// `α_{i,j}` for sample `i` (0-based) and slot `j` in `1..=6`.
    pub fn alpha(&self, i: usize, j: usize) -> &[T] {
        let d = if j <= 2 { self.d1 } else { self.d2 };
        &self.slots[j - 1][i * d..(i + 1) * d]
    }

    pub fn alpha_mut(&mut self, i: usize, j: usize) -> &mut [T] {
        let d = if j <= 2 { self.d1 } else { self.d2 };
        &mut self.slots[j - 1][i * d..(i + 1) * d]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn kind(&self) -> CacheKind {
        self.kind
    }

    /// Online-parameter version the cache was built against.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn is_finite(&self) -> bool {
        self.slots.iter().flatten().all(|x| x.is_finite())
    }
}

fn check_pairing<T: Scalar>(z: &RepBatch<T>, c: &RepBatch<T>) -> Result<()> {
    if c.dim() != z.n() {
        return Err(Error::ShapeMismatch(format!(
            "instance batch has {} samples but cluster columns have length {}",
            z.n(),
            c.dim()
        )));
    }
    Ok(())
}
