use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Vector augmentation family: additive Gaussian noise, random coordinate
/// masking, then a random global rescale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig<T> {
    pub noise_sigma: T,
    pub mask_prob: T,
    pub scale_range: (T, T),
}

impl<T: Scalar> AugmentConfig<T> {
    pub fn new(noise_sigma: T, mask_prob: T, scale_range: (T, T)) -> Result<Self> {
        let cfg = Self {
            noise_sigma,
            mask_prob,
            scale_range,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The identity transform.
    pub fn identity() -> Self {
        Self {
            noise_sigma: T::zero(),
            mask_prob: T::zero(),
            scale_range: (T::one(), T::one()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.noise_sigma >= T::zero()) {
            return bad("noise_sigma", "must be >= 0");
        }
        if !(self.mask_prob >= T::zero() && self.mask_prob < T::one()) {
            return bad("mask_prob", "must lie in [0, 1)");
        }
        let (lo, hi) = self.scale_range;
        if !(lo > T::zero() && lo <= hi) {
            return bad("scale_range", "must satisfy 0 < lo <= hi");
        }
        Ok(())
    }
}

/// One random draw `t(x)` from the augmentation family.
pub fn augment<T: Scalar, R: Rng + ?Sized>(x: &[T], cfg: &AugmentConfig<T>, rng: &mut R) -> Vec<T> {
    let sigma = cfg.noise_sigma.as_f64();
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("validated sigma");
    let p = cfg.mask_prob.as_f64();
    let mut out: Vec<T> = x
        .iter()
        .map(|&xi| {
            let noisy = if sigma > 0.0 { xi + T::of(noise.sample(rng)) } else { xi };
            if p > 0.0 && rng.gen_bool(p) {
                T::zero()
            } else {
                noisy
            }
        })
        .collect();
    let (lo, hi) = (cfg.scale_range.0.as_f64(), cfg.scale_range.1.as_f64());
    let scale = if lo < hi { T::of(rng.gen_range(lo..hi)) } else { T::of(lo) };
    out.iter_mut().for_each(|v| *v = *v * scale);
    out
}
