use super::Dataset;
use crate::atelier::PairStatus;
use crate::forge::FilterPolicy;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, HashSet};

/// Verified pairs expected per grammar point.
pub const PAIRS_PER_POINT_BAND: (usize, usize) = (3, 4);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub points: usize,
    pub pairs: usize,
    pub verified_pairs: usize,
    pub rejected_pairs: usize,
    pub unchecked_pairs: usize,
    pub verdicts: usize,
    pub minimal_pairs: usize,
    /// verified / (verified + rejected); `None` before any back-check.
    pub retention: Option<f64>,
    /// Number of points by their count of verified pairs.
    pub verified_pairs_per_point: BTreeMap<usize, usize>,
    pub points_in_band: usize,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "points={} pairs={} verified={} rejected={} minimal_pairs={} retention={} points_in_band={}/{}",
            self.points,
            self.pairs,
            self.verified_pairs,
            self.rejected_pairs,
            self.minimal_pairs,
            self.retention.map_or_else(|| "NA".to_string(), |r| format!("{r:.4}")),
            self.points_in_band,
            self.points
        )
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dup: Vec<&str> = ids.filter(|id| !seen.insert(*id)).collect();
    dup.sort();
    dup.dedup();
    dup
}

/// Count records and check every cross-record invariant of a dataset.
pub fn validate(ds: &Dataset, policy: &FilterPolicy) -> ValidationReport {
    let mut v = Vec::new();
    let points = ds.point_index();

    for id in duplicates(ds.points.iter().map(|g| g.gp_id.as_str())) {
        v.push(format!("duplicate gp_id {id}"));
    }
    for g in &ds.points {
        if g.description.trim().is_empty() {
            v.push(format!("{}: empty description", g.gp_id));
        }
        if !g.id_is_canonical() {
            v.push(format!("{}: id does not match description hash", g.gp_id));
        }
    }

    for id in duplicates(ds.pairs.iter().map(|p| p.pair_id.as_str())) {
        v.push(format!("duplicate pair_id {id}"));
    }
    let pairs: HashMap<&str, _> = ds.pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    for p in &ds.pairs {
        if p.english.trim().is_empty() || p.luxembourgish.trim().is_empty() {
            v.push(format!("{}: empty sentence", p.pair_id));
        }
        if p.gp_ids.is_empty() {
            v.push(format!("{}: no grammar point", p.pair_id));
        }
        for gp in &p.gp_ids {
            if !points.contains_key(gp.as_str()) {
                v.push(format!("{}: unknown grammar point {gp}", p.pair_id));
            }
        }
    }

    let mut verdict_for = HashMap::new();
    for d in &ds.verdicts {
        if !pairs.contains_key(d.pair_id.as_str()) {
            v.push(format!("verdict for unknown pair {}", d.pair_id));
        }
        if !(0.0..=10.0).contains(&d.translation_score) {
            v.push(format!("{}: translation_score {} outside 0..=10", d.pair_id, d.translation_score));
        }
        if verdict_for.insert(d.pair_id.as_str(), d).is_some() {
            v.push(format!("{}: more than one verdict", d.pair_id));
        }
    }
    for p in &ds.pairs {
        match (p.status, verdict_for.get(p.pair_id.as_str())) {
            (PairStatus::Unchecked, Some(_)) => {
                v.push(format!("{}: has a verdict but is unchecked", p.pair_id))
            }
            (PairStatus::Verified | PairStatus::Rejected, None) => {
                v.push(format!("{}: {:?} without a verdict", p.pair_id, p.status))
            }
            (s @ (PairStatus::Verified | PairStatus::Rejected), Some(d)) => {
                let expect = if policy.passes(d) { PairStatus::Verified } else { PairStatus::Rejected };
                if s != expect {
                    v.push(format!("{}: status {s:?} disagrees with its verdict", p.pair_id));
                }
            }
            (PairStatus::Unchecked, None) => {}
        }
    }

    for id in duplicates(ds.minimal_pairs.iter().map(|m| m.mp_id.as_str())) {
        v.push(format!("duplicate mp_id {id}"));
    }
    for m in &ds.minimal_pairs {
        if m.correct.trim().is_empty() || m.incorrect.trim().is_empty() {
            v.push(format!("{}: empty sentence", m.mp_id));
        }
        if m.correct == m.incorrect {
            v.push(format!("{}: correct equals incorrect", m.mp_id));
        }
        if !points.contains_key(m.gp_id.as_str()) {
            v.push(format!("{}: unknown grammar point {}", m.mp_id, m.gp_id));
        }
        match pairs.get(m.pair_id.as_str()) {
            Some(p) if p.status == PairStatus::Verified && p.gp_ids.contains(&m.gp_id) => {}
            Some(_) => v.push(format!("{}: source pair {} is not a verified pair of {}", m.mp_id, m.pair_id, m.gp_id)),
            None => v.push(format!("{}: unknown source pair {}", m.mp_id, m.pair_id)),
        }
    }

    let count = |s: PairStatus| ds.pairs.iter().filter(|p| p.status == s).count();
    let (verified, rejected) = (count(PairStatus::Verified), count(PairStatus::Rejected));
    let mut per_point: HashMap<&str, usize> = ds.points.iter().map(|g| (g.gp_id.as_str(), 0)).collect();
    for p in ds.verified_pairs() {
        for gp in &p.gp_ids {
            if let Some(n) = per_point.get_mut(gp.as_str()) {
                *n += 1;
            }
        }
    }
    let mut hist = BTreeMap::new();
    for n in per_point.values() {
        *hist.entry(*n).or_insert(0) += 1;
    }
    let (lo, hi) = PAIRS_PER_POINT_BAND;
    ValidationReport {
        points: ds.points.len(),
        pairs: ds.pairs.len(),
        verified_pairs: verified,
        rejected_pairs: rejected,
        unchecked_pairs: count(PairStatus::Unchecked),
        verdicts: ds.verdicts.len(),
        minimal_pairs: ds.minimal_pairs.len(),
        retention: (verified + rejected > 0).then(|| verified as f64 / (verified + rejected) as f64),
        points_in_band: per_point.values().filter(|n| (lo..=hi).contains(*n)).count(),
        verified_pairs_per_point: hist,
        violations: v,
    }
}
