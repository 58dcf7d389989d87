use super::MetricError;
use crate::num::Scalar;
use std::collections::HashMap;
use std::hash::Hash;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChrfParams {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfParams {
    fn default() -> Self {
        ChrfParams {
            char_order: 6,
            word_order: 2,
            beta: 2.0,
        }
    }
}

/// Whitespace tokens; a token longer than one character has one ASCII
/// punctuation mark split off its end, or failing that its start.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut chars = word.chars();
        let (first, last) = (chars.next(), chars.next_back());
        match (first, last) {
            (Some(_), Some(l)) if l.is_ascii_punctuation() => {
                out.push(word[..word.len() - l.len_utf8()].to_string());
                out.push(l.to_string());
            }
            (Some(f), Some(_)) if f.is_ascii_punctuation() => {
                out.push(f.to_string());
                out.push(word[f.len_utf8()..].to_string());
            }
            _ => out.push(word.to_string()),
        }
    }
    out
}

fn ngram_counts<S: Eq + Hash>(seq: &[S], n: usize) -> HashMap<&[S], usize> {
    let mut m = HashMap::new();
    if n == 0 || seq.len() < n {
        return m;
    }
    for w in seq.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// (matches, hypothesis total, reference total) for one order.
fn order_stats<S: Eq + Hash>(hyp: &[S], reference: &[S], n: usize) -> (usize, usize, usize) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matches = h
        .iter()
        .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (
        matches,
        hyp.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

/// chrF++ on the 0..=100 scale.
pub fn chrf_pp<T: Scalar>(
    hypothesis: &str,
    reference: &str,
    params: &ChrfParams,
) -> Result<T, MetricError> {
    let ref_chars: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if ref_chars.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let hyp_chars: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    if hyp_chars.is_empty() {
        return Ok(T::zero());
    }
    let hyp_words = word_tokens(hypothesis);
    let ref_words = word_tokens(reference);

    let mut stats = Vec::with_capacity(params.char_order + params.word_order);
    for n in 1..=params.char_order {
        stats.push(order_stats(&hyp_chars, &ref_chars, n));
    }
    for n in 1..=params.word_order {
        stats.push(order_stats(&hyp_words, &ref_words, n));
    }

    let (mut p_sum, mut r_sum, mut effective) = (T::zero(), T::zero(), 0usize);
    for (m, h, r) in stats {
        if h > 0 && r > 0 {
            p_sum = p_sum + T::from_count(m) / T::from_count(h);
            r_sum = r_sum + T::from_count(m) / T::from_count(r);
            effective += 1;
        }
    }
    if effective == 0 {
        return Ok(T::zero());
    }
    let p = p_sum / T::from_count(effective);
    let r = r_sum / T::from_count(effective);
    if p + r == T::zero() {
        return Ok(T::zero());
    }
    let b2 = T::from_f64_lossy(params.beta * params.beta);
    let f = (T::one() + b2) * p * r / (b2 * p + r);
    Ok(T::hundred() * f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_empty() {
        let p = ChrfParams::default();
        assert_eq!(chrf_pp::<f64>("Moien Welt", "Moien Welt", &p).unwrap(), 100.0);
        assert_eq!(chrf_pp::<f32>("Moien Welt", "Moien Welt", &p).unwrap(), 100.0);
        assert_eq!(chrf_pp::<f64>("", "Moien Welt", &p).unwrap(), 0.0);
        assert_eq!(chrf_pp::<f64>("x", "  ", &p), Err(MetricError::EmptyReference));
    }

    #[test]
    fn punctuation_split() {
        assert_eq!(word_tokens("Moien, Welt!"), ["Moien", ",", "Welt", "!"]);
        assert_eq!(word_tokens("(a.b)"), ["(a.b", ")"]);
        assert_eq!(word_tokens("(hi"), ["(", "hi"]);
        assert_eq!(word_tokens("... ."), ["..", ".", "."]);
    }

    #[test]
    fn partial_overlap_in_range() {
        let v: f64 = chrf_pp("hello there", "hello here", &ChrfParams::default()).unwrap();
        assert!((v - 46.299818456525784).abs() < 1e-9, "{v}");
    }
}
