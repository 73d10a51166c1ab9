//! Second pass of the memory-efficient scheme: with the representation
//! gradients cached, the batch-coupled loss gradient becomes a plain sum of
//! per-sample backward passes, so only one sample's activations are alive
//! at any time.

use crate::error::{Error, Result};
use crate::losses::LossMode;
use crate::model::mlp::softmax_backward;
use crate::model::{Network, ParamGrad, Trainable, ViewPair};
use crate::numerics::axpy;
use crate::scalar::Scalar;

use super::alpha::{AlphaCache, CacheKind};

/// Parameters that receive gradient for a given cache kind. The clustering
/// stage trains the cluster head only; the encoder stays frozen.
pub fn trainable_for(kind: CacheKind) -> Trainable {
    match kind {
        CacheKind::Cc | CacheKind::Mcc(LossMode::FullMcc) => Trainable::ALL,
        CacheKind::Mcc(LossMode::InstanceOnly) => Trainable {
            f: true,
            g_i: true,
            g_c: false,
        },
        CacheKind::Mcc(LossMode::ClusterOnly) => Trainable {
            f: false,
            g_i: false,
            g_c: true,
        },
    }
}

/// `Σ_i ⟨α_{i,1}, ∂z_i^a/∂θ⟩ + ⟨α_{i,2}, ∂z_i^b/∂θ⟩ + ⟨α_{i,3}+λα_{i,5}, ∂y_i^a/∂θ⟩ + ⟨α_{i,4}+λα_{i,6}, ∂y_i^b/∂θ⟩`,
/// with `λ` the cache's entropy weight, accumulated one sample and one view
/// at a time in index order.
///
/// Stacks outside [`trainable_for`] get a zero gradient.
pub fn two_pass_gradient<T: Scalar>(
    net: &Network<T>,
    views: &ViewPair<T>,
    cache: &AlphaCache<T>,
) -> Result<ParamGrad<T>> {
    if cache.version() != net.version() {
        return Err(Error::StaleCache {
            cache: cache.version(),
            model: net.version(),
        });
    }
    if cache.n() != views.n() {
        return Err(Error::LengthMismatch {
            left: cache.n(),
            right: views.n(),
        });
    }
    if cache.d1() != net.d1() || cache.d2() != net.d2() {
        return Err(Error::ShapeMismatch(format!(
            "cache is for d1={}, d2={} but network has d1={}, d2={}",
            cache.d1(),
            cache.d2(),
            net.d1(),
            net.d2()
        )));
    }
    let train = trainable_for(cache.kind());
    let mut grad = ParamGrad::zeros_like(net);
    let hidden = net.f.output_dim();
    for i in 0..views.n() {
        for (x, slot_z, slot_c, slot_h) in [(&views.a[i], 1, 3, 5), (&views.b[i], 2, 4, 6)] {
            let f_trace = net.f.forward_trace(x)?;
            let mut dh = vec![T::zero(); hidden];
            if train.g_i {
                let trace = net.g_i.forward_trace(f_trace.output())?;
                let d = net.g_i.backward_trace(&trace, cache.alpha(i, slot_z), &mut grad.g_i)?;
                axpy(T::one(), &d, &mut dh);
            }
            if train.g_c {
                let trace = net.g_c.forward_trace(f_trace.output())?;
                let y = crate::model::mlp::softmax(trace.output());
                let mut up = cache.alpha(i, slot_c).to_vec();
                axpy(cache.entropy_weight(), cache.alpha(i, slot_h), &mut up);
                let d_logits = softmax_backward(&y, &up);
                let d = net.g_c.backward_trace(&trace, &d_logits, &mut grad.g_c)?;
                axpy(T::one(), &d, &mut dh);
            }
            if train.f {
                net.f.backward_trace(&f_trace, &dh, &mut grad.f)?;
            }
        }
    }
    Ok(grad)
}
