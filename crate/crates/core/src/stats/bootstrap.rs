use super::StatsError;
use crate::num::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_RESAMPLES: usize = 1000;

/// Standard deviation (divisor B - 1) of the means of `resamples` seeded
/// bootstrap resamples of `outcomes`.
pub fn bootstrap_std<T: Scalar>(
    outcomes: &[bool],
    resamples: usize,
    seed: u64,
) -> Result<T, StatsError> {
    if outcomes.is_empty() {
        return Err(StatsError::TooFew { need: 1, got: 0 });
    }
    if resamples < 2 {
        return Err(StatsError::TooFew { need: 2, got: resamples });
    }
    let n = outcomes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<T> = (0..resamples)
        .map(|_| {
            let hits = (0..n).filter(|_| outcomes[rng.gen_range(0..n)]).count();
            T::from_count(hits) / T::from_count(n)
        })
        .collect();
    let b = T::from_count(resamples);
    let m = means.iter().fold(T::zero(), |a, &v| a + v) / b;
    let ss = means.iter().fold(T::zero(), |a, &v| a + (v - m) * (v - m));
    Ok((ss / (b - T::one())).sqrt())
}

/// sqrt(p (1 - p) / n).
pub fn binomial_std<T: Scalar>(p: T, n: usize) -> T {
    if n == 0 {
        return T::zero();
    }
    (p * (T::one() - p) / T::from_count(n)).sqrt()
}
