//! Password-space accounting and the observation attack.
//!
//! The attack model is the strongest observer: the whole crossed-image
//! sequence of a login was recorded, the attacker knows `n` and the rules,
//! but not which crossed images were decoys. Every ordered `n`-tuple of
//! distinct images that occurs in order in the recording remains a candidate.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ImageId;

/// Enumeration is refused above this many ordered tuples to try.
pub const MAX_SEARCH: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("search space of {tuples} ordered tuples exceeds the limit of {limit}")]
    SearchTooLarge { tuples: u128, limit: u128 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceReport {
    pub catalog_size: u64,
    pub password_length: u64,
    /// Ordered selections without repetition, `N! / (N − n)!`.
    #[serde(with = "decimal")]
    pub space: BigUint,
    pub bits: f64,
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| de::Error::custom("not a decimal integer"))
    }
}

/// Number of ordered `n`-image passwords over a catalog of `catalog_size`.
pub fn password_space(catalog_size: u64, n: u64) -> Result<SpaceReport, AnalysisError> {
    if n == 0 || n > catalog_size {
        return Err(AnalysisError::InvalidArgs(format!(
            "need 1 <= n <= N, got N={catalog_size}, n={n}"
        )));
    }
    let factors = (catalog_size - n + 1)..=catalog_size;
    let space = factors.clone().fold(BigUint::one(), |acc, f| acc * f);
    let bits = factors.map(|f| (f as f64).log2()).sum();
    Ok(SpaceReport {
        catalog_size,
        password_length: n,
        space,
        bits,
    })
}

/// How many times larger the image-password space is than a PIN space
/// of `alphabet^pin_length`.
pub fn pin_space_ratio(report: &SpaceReport, alphabet: u64, pin_length: u32) -> Result<f64, AnalysisError> {
    if alphabet < 2 || pin_length == 0 {
        return Err(AnalysisError::InvalidArgs(format!(
            "need alphabet >= 2 and pin length >= 1, got {alphabet} and {pin_length}"
        )));
    }
    let pins = BigUint::from(alphabet).pow(pin_length);
    match (report.space.to_f64(), pins.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => Ok(a / b),
        _ => Ok((report.bits - f64::from(pin_length) * (alphabet as f64).log2()).exp2()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub observed_trace: Vec<ImageId>,
    pub n: usize,
    pub candidate_count: u64,
    pub contains_truth: bool,
    /// `log2(candidate_count)`; zero when there are no candidates.
    pub residual_bits: f64,
}

/// Candidate passwords left to an observer of the full crossed-image sequence.
///
/// `truth`, when given, is checked for membership in the candidate set.
pub fn observation_candidates(
    observed: &[ImageId],
    n: usize,
    truth: Option<&[ImageId]>,
) -> Result<AttackReport, AnalysisError> {
    let search = CandidateSearch::new(observed, n)?;
    let mut count = 0u64;
    search.for_each(|_| count += 1);
    let contains_truth = truth.is_some_and(|t| search.is_candidate(t));
    Ok(AttackReport {
        observed_trace: observed.to_vec(),
        n,
        candidate_count: count,
        contains_truth,
        residual_bits: if count == 0 { 0.0 } else { (count as f64).log2() },
    })
}

/// All candidate tuples, in lexicographic order of first appearance.
pub fn list_candidates(observed: &[ImageId], n: usize) -> Result<Vec<Vec<ImageId>>, AnalysisError> {
    let search = CandidateSearch::new(observed, n)?;
    let mut out = Vec::new();
    search.for_each(|tuple| out.push(tuple.iter().map(|&i| search.ids[i].clone()).collect()));
    Ok(out)
}

/// Depth-first walk over tuples of distinct ids, matching each prefix at its
/// earliest possible position. Greedy earliest matching is canonical, so
/// every distinct candidate tuple is produced exactly once.
struct CandidateSearch<'a> {
    ids: Vec<&'a ImageId>,
    /// Ascending positions in the observed sequence, per distinct id.
    positions: Vec<Vec<usize>>,
    n: usize,
}

impl<'a> CandidateSearch<'a> {
    fn new(observed: &'a [ImageId], n: usize) -> Result<Self, AnalysisError> {
        if n == 0 {
            return Err(AnalysisError::InvalidArgs("n must be at least 1".into()));
        }
        if observed.is_empty() {
            return Err(AnalysisError::InvalidArgs("observed trace is empty".into()));
        }
        let mut index: HashMap<&ImageId, usize> = HashMap::new();
        let mut ids = Vec::new();
        let mut positions: Vec<Vec<usize>> = Vec::new();
        for (pos, id) in observed.iter().enumerate() {
            let slot = *index.entry(id).or_insert_with(|| {
                ids.push(id);
                positions.push(Vec::new());
                ids.len() - 1
            });
            positions[slot].push(pos);
        }
        let distinct = ids.len() as u128;
        let tuples = (0..n as u128).try_fold(1u128, |acc, k| {
            acc.checked_mul(distinct.saturating_sub(k))
        });
        match tuples {
            Some(t) if t <= MAX_SEARCH => {}
            _ => {
                return Err(AnalysisError::SearchTooLarge {
                    tuples: tuples.unwrap_or(u128::MAX),
                    limit: MAX_SEARCH,
                })
            }
        }
        Ok(Self { ids, positions, n })
    }

    fn next_position(&self, id: usize, after: Option<usize>) -> Option<usize> {
        let list = &self.positions[id];
        let start = match after {
            None => 0,
            Some(p) => list.partition_point(|&q| q <= p),
        };
        list.get(start).copied()
    }

    fn for_each(&self, mut visit: impl FnMut(&[usize])) {
        let mut used = vec![false; self.ids.len()];
        let mut prefix = Vec::with_capacity(self.n);
        self.extend(None, &mut used, &mut prefix, &mut visit);
    }

    fn extend(&self, after: Option<usize>, used: &mut [bool], prefix: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if prefix.len() == self.n {
            visit(prefix);
            return;
        }
        for id in 0..self.ids.len() {
            if used[id] {
                continue;
            }
            if let Some(pos) = self.next_position(id, after) {
                used[id] = true;
                prefix.push(id);
                self.extend(Some(pos), used, prefix, visit);
                prefix.pop();
                used[id] = false;
            }
        }
    }

    fn is_candidate(&self, tuple: &[ImageId]) -> bool {
        if tuple.len() != self.n {
            return false;
        }
        let mut after = None;
        let mut used = vec![false; self.ids.len()];
        for id in tuple {
            let Some(slot) = self.ids.iter().position(|&x| x == id) else {
                return false;
            };
            if std::mem::replace(&mut used[slot], true) {
                return false;
            }
            match self.next_position(slot, after) {
                Some(p) => after = Some(p),
                None => return false,
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Vec<ImageId> {
        s.chars().map(|c| ImageId::new(c.to_string())).collect()
    }

    #[test]
    fn space_examples() {
        assert_eq!(password_space(3, 2).unwrap().space, BigUint::from(6u32));
        assert_eq!(password_space(24, 5).unwrap().space, BigUint::from(5_100_480u32));
        assert_eq!(password_space(6, 6).unwrap().space, BigUint::from(720u32));
        assert!(password_space(3, 4).is_err());
        assert!(password_space(3, 0).is_err());
    }

    #[test]
    fn bits_match_log_of_space() {
        for (big_n, n) in [(24, 5), (100, 10), (1000, 40)] {
            let r = password_space(big_n, n).unwrap();
            let direct = r.space.to_f64().unwrap().log2();
            assert!((r.bits - direct).abs() <= 1e-9 * direct);
        }
    }

    #[test]
    fn pin_ratios() {
        let r = password_space(24, 5).unwrap();
        let vs_alnum = pin_space_ratio(&r, 36, 4).unwrap();
        assert!((vs_alnum - 5_100_480.0 / 1_679_616.0).abs() < 1e-12);
        assert!(vs_alnum > 1.0);
        assert!((pin_space_ratio(&r, 10, 4).unwrap() - 510.048).abs() < 1e-9);
        let equal = password_space(4, 4).unwrap(); // 24 = 24^1
        assert_eq!(pin_space_ratio(&equal, 24, 1).unwrap(), 1.0);
        assert!(pin_space_ratio(&r, 1, 4).is_err());
        assert!(pin_space_ratio(&r, 10, 0).is_err());
    }

    #[test]
    fn huge_ratio_falls_back_to_logs() {
        let r = password_space(1000, 200).unwrap();
        let ratio = pin_space_ratio(&r, 10, 400).unwrap();
        let expected = (r.bits - 400.0 * 10f64.log2()).exp2();
        assert!((ratio - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn single_image_candidates() {
        let r = observation_candidates(&seq("hat"), 1, None).unwrap();
        assert_eq!(r.candidate_count, 3);
        assert!((r.residual_bits - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn revisits_are_deduplicated() {
        let list = list_candidates(&seq("habat"), 2).unwrap();
        let expected: Vec<Vec<ImageId>> = ["ha", "hb", "ht", "ab", "at", "ba", "bt"].iter().map(|s| seq(s)).collect();
        let mut got = list.clone();
        got.sort();
        let mut want = expected;
        want.sort();
        assert_eq!(got, want);
        assert_eq!(observation_candidates(&seq("habat"), 2, None).unwrap().candidate_count, 7);
    }

    #[test]
    fn truth_membership() {
        let r = observation_candidates(&seq("hxaybczt"), 3, Some(&seq("abc"))).unwrap();
        assert!(r.contains_truth);
        let r = observation_candidates(&seq("hxaybczt"), 3, Some(&seq("cba"))).unwrap();
        assert!(!r.contains_truth);
        let r = observation_candidates(&seq("aab"), 2, Some(&seq("aa"))).unwrap();
        assert!(!r.contains_truth);
    }

    #[test]
    fn argument_checks() {
        assert!(observation_candidates(&seq("abc"), 0, None).is_err());
        assert!(observation_candidates(&[], 1, None).is_err());
        assert_eq!(observation_candidates(&seq("ab"), 3, None).unwrap().candidate_count, 0);
        let wide: Vec<ImageId> = (0..60).map(|i| ImageId::new(format!("i{i}"))).collect();
        assert!(matches!(observation_candidates(&wide, 5, None), Err(AnalysisError::SearchTooLarge { .. })));
    }
}
