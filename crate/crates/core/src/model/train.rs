use rand::Rng;

use crate::error::{Error, Result};
use crate::grad::{trainable_for, two_pass_gradient, AlphaCache, CacheKind};
use crate::losses::{contrastive_loss, entropy, instance_loss_k, FourViewBatch, LossMode, Temperature};
use crate::numerics::{Layout, RepBatch};
use crate::scalar::Scalar;

use super::augment::{augment, AugmentConfig};
use super::network::{ema_update, EmaMomentum, MccModel, Network};
use super::optim::Optimizer;

/// Floor applied to exactly-zero soft assignments so the entropy gradient
/// is defined.
pub const ZERO_ASSIGNMENT_FLOOR: f64 = 1e-12;

/// Two augmented views of each sample in a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewPair<T> {
    pub a: Vec<Vec<T>>,
    pub b: Vec<Vec<T>>,
}

impl<T: Scalar> ViewPair<T> {
    pub fn new(a: Vec<Vec<T>>, b: Vec<Vec<T>>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        Ok(Self { a, b })
    }

    /// Draws `t^a(x)` and `t^b(x)` for every sample, view a first.
    pub fn augmented<X: AsRef<[T]>, R: Rng + ?Sized>(batch: &[X], cfg: &AugmentConfig<T>, rng: &mut R) -> Self {
        let mut a = Vec::with_capacity(batch.len());
        let mut b = Vec::with_capacity(batch.len());
        for x in batch {
            a.push(augment(x.as_ref(), cfg, rng));
            b.push(augment(x.as_ref(), cfg, rng));
        }
        Self { a, b }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }
}

/// Instance and cluster batches of one network on both views.
#[derive(Debug, Clone)]
pub struct Representations<T> {
    pub z_a: RepBatch<T>,
    pub z_b: RepBatch<T>,
    pub c_a: RepBatch<T>,
    pub c_b: RepBatch<T>,
}

fn floor_zeros<T: Scalar>(mut y: Vec<T>) -> Vec<T> {
    let floor = T::of(ZERO_ASSIGNMENT_FLOOR);
    y.iter_mut().filter(|v| **v == T::zero()).for_each(|v| *v = floor);
    y
}

fn represent_view<T: Scalar>(net: &Network<T>, xs: &[Vec<T>]) -> Result<(RepBatch<T>, RepBatch<T>)> {
    let mut zs = Vec::with_capacity(xs.len());
    let mut ys = Vec::with_capacity(xs.len());
    for x in xs {
        let h = net.embed(x)?;
        zs.push(net.instance_rep(&h)?);
        ys.push(floor_zeros(net.cluster_rep(&h)?));
    }
    Ok((
        RepBatch::from_columns(&zs, Layout::Instance)?,
        RepBatch::from_rows(&ys, Layout::Cluster)?,
    ))
}

pub fn represent<T: Scalar>(net: &Network<T>, views: &ViewPair<T>) -> Result<Representations<T>> {
    if views.n() < 2 {
        return Err(Error::BatchTooSmall { n: views.n() });
    }
    let (z_a, c_a) = represent_view(net, &views.a)?;
    let (z_b, c_b) = represent_view(net, &views.b)?;
    Ok(Representations { z_a, z_b, c_a, c_b })
}

/// Both views through both networks.
pub fn four_view_batch<T: Scalar>(model: &MccModel<T>, views: &ViewPair<T>) -> Result<FourViewBatch<T>> {
    let o = represent(&model.online, views)?;
    let t = represent(&model.target, views)?;
    FourViewBatch::new(o.z_a, o.z_b, t.z_a, t.z_b, o.c_a, o.c_b, t.c_a, t.c_b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig<T> {
    pub tau_i: Temperature<T>,
    pub tau_c: Temperature<T>,
    pub momentum: EmaMomentum<T>,
    pub mode: LossMode,
    /// Multiplier on the entropy terms; 1 is the plain sum.
    pub entropy_weight: T,
}

/// Pre-step loss values. `instance + cluster` is the full objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLoss<T> {
    pub instance: T,
    pub cluster: T,
}

impl<T: Scalar> StepLoss<T> {
    pub fn total(&self) -> T {
        self.instance + self.cluster
    }

    /// The part optimized under `mode`.
    pub fn objective(&self, mode: LossMode) -> T {
        match mode {
            LossMode::FullMcc => self.total(),
            LossMode::InstanceOnly => self.instance,
            LossMode::ClusterOnly => self.cluster,
        }
    }
}

/// Loss values of the momentum objective on one batch, without training.
/// With `entropy_weight = 1` the parts are the instance and cluster losses
/// of a client; their sum is the full momentum loss.
pub fn mcc_losses<T: Scalar>(
    views: &FourViewBatch<T>,
    tau_i: Temperature<T>,
    tau_c: Temperature<T>,
    entropy_weight: T,
) -> Result<StepLoss<T>> {
    let v = views;
    let contrast = T::half() * (contrastive_loss(&v.c_a_o, &v.c_b_t, tau_c)? + contrastive_loss(&v.c_a_t, &v.c_b_o, tau_c)?);
    let h = entropy(&v.c_a_o)? + entropy(&v.c_b_o)? + entropy(&v.c_a_t)? + entropy(&v.c_b_t)?;
    Ok(StepLoss {
        instance: instance_loss_k(&v.z_a_o, &v.z_b_t, &v.z_a_t, &v.z_b_o, tau_i)?,
        cluster: contrast + entropy_weight * h,
    })
}

/// One descent step on the online network followed by the EMA update of the
/// target. Returns the loss before the step.
pub fn mcc_train_step<T: Scalar>(
    model: &mut MccModel<T>,
    views: &ViewPair<T>,
    cfg: &StepConfig<T>,
    opt: &mut Optimizer<T>,
) -> Result<StepLoss<T>> {
    let batch = four_view_batch(model, views)?;
    let loss = mcc_losses(&batch, cfg.tau_i, cfg.tau_c, cfg.entropy_weight)?;
    let cache = AlphaCache::for_mcc(&batch, cfg.tau_i, cfg.tau_c, cfg.mode, model.online_version())?
        .with_entropy_weight(cfg.entropy_weight);
    let grad = two_pass_gradient(&model.online, views, &cache)?;
    opt.step(&mut model.online, &grad, trainable_for(cache.kind()));
    ema_update(model, cfg.momentum);
    Ok(loss)
}

/// Two-view losses without a target network: `instance` is
/// `½L(z_a,z_b)`, `cluster` is `½L(c_a,c_b) + λ(H(c_a) + H(c_b))`.
pub fn cc_losses<T: Scalar>(
    r: &Representations<T>,
    tau_i: Temperature<T>,
    tau_c: Temperature<T>,
    entropy_weight: T,
) -> Result<StepLoss<T>> {
    Ok(StepLoss {
        instance: T::half() * contrastive_loss(&r.z_a, &r.z_b, tau_i)?,
        cluster: T::half() * contrastive_loss(&r.c_a, &r.c_b, tau_c)?
            + entropy_weight * (entropy(&r.c_a)? + entropy(&r.c_b)?),
    })
}

/// One descent step on the two-view objective (no momentum branch).
pub fn cc_train_step<T: Scalar>(
    net: &mut Network<T>,
    views: &ViewPair<T>,
    tau_i: Temperature<T>,
    tau_c: Temperature<T>,
    entropy_weight: T,
    opt: &mut Optimizer<T>,
) -> Result<StepLoss<T>> {
    let r = represent(net, views)?;
    let loss = cc_losses(&r, tau_i, tau_c, entropy_weight)?;
    let cache = AlphaCache::for_cc(&r.z_a, &r.z_b, &r.c_a, &r.c_b, tau_i, tau_c, net.version())?
        .with_entropy_weight(entropy_weight);
    let grad = two_pass_gradient(net, views, &cache)?;
    opt.step(net, &grad, trainable_for(CacheKind::Cc));
    Ok(loss)
}
