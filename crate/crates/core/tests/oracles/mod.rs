//! Brute-force reference implementations used only by tests.
#![allow(dead_code)]

const PUNCTS: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

fn bag(items: Vec<String>) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for it in items {
        match out.iter_mut().find(|(k, _)| *k == it) {
            Some(e) => e.1 += 1,
            None => out.push((it, 1)),
        }
    }
    out
}

fn grams(units: &[String], n: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= units.len() {
        out.push(units[i..i + n].join("\u{1}"));
        i += 1;
    }
    out
}

fn overlap(h: &[String], r: &[String]) -> (f64, f64, f64) {
    let hb = bag(h.to_vec());
    let rb = bag(r.to_vec());
    let mut m = 0usize;
    for (g, c) in &hb {
        for (g2, c2) in &rb {
            if g == g2 {
                m += (*c).min(*c2);
            }
        }
    }
    (m as f64, h.len() as f64, r.len() as f64)
}

pub fn oracle_words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in s.split_whitespace() {
        let cs: Vec<char> = w.chars().collect();
        if cs.len() == 1 {
            out.push(w.to_string());
        } else if PUNCTS.contains(cs[cs.len() - 1]) {
            out.push(cs[..cs.len() - 1].iter().collect());
            out.push(cs[cs.len() - 1].to_string());
        } else if PUNCTS.contains(cs[0]) {
            out.push(cs[0].to_string());
            out.push(cs[1..].iter().collect());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

/// chrF++ with char order 6, word order 2, beta 2.
pub fn chrf_oracle(hyp: &str, reference: &str) -> f64 {
    let hc: Vec<String> = hyp.chars().filter(|c| !c.is_whitespace()).map(String::from).collect();
    let rc: Vec<String> = reference.chars().filter(|c| !c.is_whitespace()).map(String::from).collect();
    if hc.is_empty() {
        return 0.0;
    }
    let hw = oracle_words(hyp);
    let rw = oracle_words(reference);
    let mut ps = Vec::new();
    let mut rs = Vec::new();
    let mut orders: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for n in 1..=6 {
        orders.push((grams(&hc, n), grams(&rc, n)));
    }
    for n in 1..=2 {
        orders.push((grams(&hw, n), grams(&rw, n)));
    }
    for (h, r) in &orders {
        let (m, ht, rt) = overlap(h, r);
        if ht > 0.0 && rt > 0.0 {
            ps.push(m / ht);
            rs.push(m / rt);
        }
    }
    if ps.is_empty() {
        return 0.0;
    }
    let p = ps.iter().sum::<f64>() / ps.len() as f64;
    let r = rs.iter().sum::<f64>() / rs.len() as f64;
    if p + r == 0.0 {
        return 0.0;
    }
    100.0 * 5.0 * p * r / (4.0 * p + r)
}

/// Sentence BLEU, max order 4, effective order, exponential smoothing
/// unless `smooth` is false.
pub fn bleu_oracle(hyp: &[String], reference: &[String], smooth: bool) -> f64 {
    let mut precisions = Vec::new();
    let mut any_match = false;
    let mut zeros = 0;
    for n in 1..=4 {
        let h = grams(hyp, n);
        if h.is_empty() {
            break;
        }
        let (m, ht, _) = overlap(&h, &grams(reference, n));
        any_match |= m > 0.0;
        if m > 0.0 {
            precisions.push(m / ht);
        } else if smooth {
            zeros += 1;
            precisions.push(1.0 / (2f64.powi(zeros) * ht));
        } else {
            precisions.push(0.0);
        }
    }
    if precisions.is_empty() || !any_match || precisions.contains(&0.0) {
        return 0.0;
    }
    let (h, r) = (hyp.len() as f64, reference.len() as f64);
    let bp = if h < r { (1.0 - r / h).exp() } else { 1.0 };
    let geo = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
    100.0 * bp * geo.exp()
}

/// Sample Pearson r by the textbook formula.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// 1-based ranks, ties receive the mean of their positions.
pub fn rank_oracle(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    pearson_oracle(&rank_oracle(x), &rank_oracle(y))
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
