//! Scalar abstraction for the numeric modules (metrics, statistics).

use num_traits::{Float, FromPrimitive, NumCast};
use std::fmt::{Debug, Display};

/// Floating point scalar used by the metric and statistics code: f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 representable")
    }

    fn hundred() -> Self {
        Self::from_count(100)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let sum = xs.iter().fold(T::zero(), |acc, &x| acc + x);
    Some(sum / T::from_count(xs.len()))
}

/// Population standard deviation (divisor n); `None` for an empty slice.
pub fn population_std<T: Scalar>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    let ss = xs.iter().fold(T::zero(), |acc, &x| acc + (x - m) * (x - m));
    Some((ss / T::from_count(xs.len())).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_std() {
        assert_eq!(mean::<f64>(&[]), None);
        assert_eq!(mean(&[1.0f64, 2.0, 3.0]), Some(2.0));
        assert_eq!(population_std(&[5.0f32, 5.0, 5.0]), Some(0.0));
        let s = population_std(&[1.0f64, 3.0]).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }
}
