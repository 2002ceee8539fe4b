//! Two-pass descriptive statistics. Every variance here uses the
//! `count - 1` divisor.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn mean<T: Scalar>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::InsufficientLength { needed: 1, got: 0 });
    }
    Ok(values.iter().copied().sum::<T>() / T::count(values.len()))
}

/// Sample variance: mean first, then the sum of squared deviations over `n - 1`.
pub fn sample_variance<T: Scalar>(values: &[T]) -> Result<T> {
    if values.len() < 2 {
        return Err(Error::InsufficientLength { needed: 2, got: values.len() });
    }
    let mu = mean(values)?;
    let ss: T = values.iter().map(|&v| (v - mu) * (v - mu)).sum();
    Ok(ss / T::count(values.len() - 1))
}

pub fn sample_std<T: Scalar>(values: &[T]) -> Result<T> {
    sample_variance(values).map(Float::sqrt)
}

/// `(mean, sample std)`; errors when the values are constant.
pub(crate) fn standardizer<T: Scalar>(values: &[T], what: impl FnOnce() -> String) -> Result<(T, T)> {
    let mu = mean(values)?;
    let sd = sample_std(values)?;
    if !(sd > T::zero()) {
        return Err(Error::ZeroVariance(what()));
    }
    Ok((mu, sd))
}
