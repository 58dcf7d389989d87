use super::MetricError;
use crate::num::Scalar;
use std::collections::HashMap;
use std::hash::Hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    None,
    /// The k-th order with zero matches gets precision 1 / (2^k * total).
    #[default]
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BleuParams {
    pub max_order: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuParams {
    fn default() -> Self {
        BleuParams {
            max_order: 4,
            smoothing: Smoothing::Exp,
        }
    }
}

/// exp(1 - r/h) when the hypothesis is shorter than the reference, else 1.
pub fn brevity_penalty<T: Scalar>(hyp_len: usize, ref_len: usize) -> T {
    if hyp_len >= ref_len {
        T::one()
    } else if hyp_len == 0 {
        T::zero()
    } else {
        (T::one() - T::from_count(ref_len) / T::from_count(hyp_len)).exp()
    }
}

fn counts<S: Eq + Hash>(seq: &[S], n: usize) -> HashMap<&[S], usize> {
    let mut m = HashMap::new();
    if seq.len() >= n {
        for w in seq.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Sentence BLEU on the 0..=100 scale over pre-tokenized sequences.
pub fn bleu<T: Scalar, S: Eq + Hash>(
    hyp: &[S],
    reference: &[S],
    params: &BleuParams,
) -> Result<T, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let order = params.max_order.min(hyp.len());
    if order == 0 {
        return Ok(T::zero());
    }
    let mut matches = Vec::with_capacity(order);
    for n in 1..=order {
        let r = counts(reference, n);
        let m: usize = counts(hyp, n)
            .iter()
            .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
            .sum();
        matches.push((m, hyp.len() + 1 - n));
    }
    if matches.iter().all(|(m, _)| *m == 0) {
        return Ok(T::zero());
    }
    let mut log_sum = T::zero();
    let mut zero_run = 0i32;
    for &(m, total) in &matches {
        let p = if m > 0 {
            T::from_count(m) / T::from_count(total)
        } else {
            match params.smoothing {
                Smoothing::None => return Ok(T::zero()),
                Smoothing::Exp => {
                    zero_run += 1;
                    T::one() / (T::from_count(2).powi(zero_run) * T::from_count(total))
                }
            }
        };
        log_sum = log_sum + p.ln();
    }
    let bp: T = brevity_penalty(hyp.len(), reference.len());
    Ok(T::hundred() * bp * (log_sum / T::from_count(order)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identity() {
        let t = toks("de Mann gesäit den Hond");
        assert_eq!(bleu::<f64, _>(&t, &t, &BleuParams::default()).unwrap(), 100.0);
    }

    #[test]
    fn no_overlap() {
        let p = BleuParams { max_order: 4, smoothing: Smoothing::None };
        assert_eq!(bleu::<f64, _>(&toks("a b c"), &toks("x y z"), &p).unwrap(), 0.0);
        assert_eq!(bleu::<f64, _>(&toks("a b c"), &toks("x y z"), &BleuParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn half_length_prefix() {
        let r = toks("a b c d e f g h");
        let v: f64 = bleu(&r[..4], &r, &BleuParams::default()).unwrap();
        assert!((v - 100.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn exp_smoothing_value() {
        // unigrams 2/3, bigrams 1/2,
        // trigram "a b z" no match → first zero → 1/(2*1).
        let v: f64 = bleu(&toks("a b z"), &toks("a b c d"), &BleuParams::default()).unwrap();
        let expected = 100.0 * (1.0f64 - 4.0 / 3.0).exp() * (2.0f64 / 3.0 * 0.5 * 0.5).powf(1.0 / 3.0);
        assert!((v - expected).abs() < 1e-12);
        let none = BleuParams { max_order: 4, smoothing: Smoothing::None };
        assert_eq!(bleu::<f64, _>(&toks("a b z"), &toks("a b c d"), &none).unwrap(), 0.0);
    }

    #[test]
    fn empty_reference() {
        let e: Vec<&str> = vec![];
        assert_eq!(bleu::<f64, _>(&toks("a"), &e, &BleuParams::default()), Err(MetricError::EmptyReference));
    }

    #[test]
    fn bp_values() {
        assert_eq!(brevity_penalty::<f64>(5, 5), 1.0);
        assert_eq!(brevity_penalty::<f64>(0, 5), 0.0);
        assert!((brevity_penalty::<f64>(4, 8) - (-1.0f64).exp()).abs() < 1e-15);
    }
}
