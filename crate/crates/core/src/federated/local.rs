use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{AugmentConfig, StepLoss, ViewPair};
use crate::scalar::Scalar;

/// One pass over `inputs` in shuffled batches of `batch`, calling `step` on
/// two augmented views of each batch. A trailing partial batch is dropped,
/// unless the data is smaller than one batch, in which case it is used
/// whole. Returns the mean of the per-batch losses.
pub fn run_epoch<T: Scalar, X: AsRef<[T]>, R: Rng + ?Sized>(
    inputs: &[X],
    batch: usize,
    aug: &AugmentConfig<T>,
    rng: &mut R,
    mut step: impl FnMut(&ViewPair<T>) -> Result<StepLoss<T>>,
) -> Result<StepLoss<T>> {
    if inputs.len() < 2 || batch < 2 {
        return Err(Error::BatchTooSmall {
            n: inputs.len().min(batch),
        });
    }
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.shuffle(rng);
    let size = batch.min(inputs.len());
    let mut sum = StepLoss {
        instance: T::zero(),
        cluster: T::zero(),
    };
    let mut count = 0usize;
    for idx in order.chunks_exact(size) {
        let xs: Vec<&[T]> = idx.iter().map(|&i| inputs[i].as_ref()).collect();
        let views = ViewPair::augmented(&xs, aug, rng);
        let l = step(&views)?;
        sum.instance = sum.instance + l.instance;
        sum.cluster = sum.cluster + l.cluster;
        count += 1;
    }
    let c = T::of_usize(count);
    Ok(StepLoss {
        instance: sum.instance / c,
        cluster: sum.cluster / c,
    })
}
