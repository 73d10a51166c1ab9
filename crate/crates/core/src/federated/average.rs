use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::model::MlpParams;
use crate::scalar::Scalar;

/// `|D_k| / |D|` as exact rationals, converted to floating point once.
pub fn aggregation_weights<T: Scalar>(sizes: &[u64]) -> Result<Vec<T>> {
    let total: u64 = sizes.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "total weight must be > 0".into(),
        });
    }
    let ratios: Vec<Ratio<u64>> = sizes.iter().map(|&s| Ratio::new(s, total)).collect();
    debug_assert_eq!(ratios.iter().sum::<Ratio<u64>>(), Ratio::from_integer(1));
    Ok(ratios
        .iter()
        .map(|r| T::of(*r.numer() as f64 / *r.denom() as f64))
        .collect())
}

/// Size-weighted average of shape-identical parameter stacks.
///
/// Each slot sums its weighted terms in sorted order, so the result does not
/// depend on the order of `parts`.
pub fn federated_average<T: Scalar>(parts: &[(&MlpParams<T>, u64)]) -> Result<MlpParams<T>> {
    let (first, _) = parts.first().ok_or(Error::EmptyDataset)?;
    if let Some((bad, _)) = parts.iter().find(|(p, _)| !p.same_shape(first)) {
        return Err(Error::ShapeMismatch(format!(
            "cannot average stacks with {} and {} parameters",
            first.param_count(),
            bad.param_count()
        )));
    }
    let sizes: Vec<u64> = parts.iter().map(|(_, w)| *w).collect();
    let weights = aggregation_weights::<T>(&sizes)?;
    let flats: Vec<Vec<T>> = parts.iter().map(|(p, _)| p.flat()).collect();
    let mut terms = vec![T::zero(); parts.len()];
    let averaged: Vec<T> = (0..first.param_count())
        .map(|slot| {
            for ((t, f), &w) in terms.iter_mut().zip(&flats).zip(&weights) {
                *t = w * f[slot];
            }
            terms.sort_by(|a, b| a.as_f64().total_cmp(&b.as_f64()));
            terms.iter().fold(T::zero(), |acc, &t| acc + t)
        })
        .collect();
    let mut out = (*first).clone();
    out.set_flat(&averaged)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Layer};

    fn stack(values: &[f64]) -> MlpParams<f64> {
        let w = values[..values.len() - 1].to_vec();
        let b = vec![values[values.len() - 1]];
        MlpParams::new(vec![Layer::new(w.len(), 1, w, b, Activation::Identity).unwrap()]).unwrap()
    }

    #[test]
    fn single_part_is_returned_unchanged() {
        let p = stack(&[0.1, -0.7, 3.3]);
        assert_eq!(federated_average(&[(&p, 17)]).unwrap().flat(), p.flat());
    }

    #[test]
    fn opposite_equal_parts_cancel() {
        let p = stack(&[0.1, -0.7, 3.3]);
        let q = stack(&[-0.1, 0.7, -3.3]);
        assert!(federated_average(&[(&p, 5), (&q, 5)]).unwrap().flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quarter_three_quarter_weights() {
        let p = stack(&[4.0, 4.0]);
        let q = stack(&[0.0, 0.0]);
        assert_eq!(federated_average(&[(&p, 1), (&q, 3)]).unwrap().flat(), vec![1.0, 1.0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let p = stack(&[1.0, 2.0]);
        let q = stack(&[1.0, 2.0, 3.0]);
        assert!(matches!(federated_average(&[(&p, 1), (&q, 1)]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn weights_are_exact_fractions() {
        assert_eq!(aggregation_weights::<f64>(&[1, 3]).unwrap(), vec![0.25, 0.75]);
        assert!(aggregation_weights::<f64>(&[0, 0]).is_err());
    }
}
