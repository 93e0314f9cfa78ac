//! Margin-based voting methods: Borda, Minimax, leximax, Ranked Pairs and Split Cycle.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::MethodError;
use crate::margins::MarginMatrix;
use crate::profile::{format_set, Candidate, Profile};

/// Default bound on the number of Ranked Pairs tie-breaking universes.
pub const DEFAULT_RANKED_PAIRS_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodId {
    Borda,
    Minimax,
    Leximax,
    RankedPairs,
    SplitCycle,
}

impl MethodId {
    pub const ALL: [MethodId; 5] = [
        MethodId::Borda,
        MethodId::Minimax,
        MethodId::Leximax,
        MethodId::RankedPairs,
        MethodId::SplitCycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Borda => "borda",
            MethodId::Minimax => "minimax",
            MethodId::Leximax => "leximax",
            MethodId::RankedPairs => "ranked-pairs",
            MethodId::SplitCycle => "split-cycle",
        }
    }

    /// Winners computed from a margin matrix, as a bitmask over its candidate indices.
    pub fn winner_mask(self, m: &MarginMatrix) -> Result<u64, MethodError> {
        self.winner_mask_with_cap(m, DEFAULT_RANKED_PAIRS_CAP)
    }

    pub fn winner_mask_with_cap(self, m: &MarginMatrix, cap: usize) -> Result<u64, MethodError> {
        Ok(match self {
            MethodId::Borda => borda_mask(m),
            MethodId::Minimax => minimax_mask(m),
            MethodId::Leximax => leximax_mask(m),
            MethodId::RankedPairs => ranked_pairs_mask(m, cap)?,
            MethodId::SplitCycle => split_cycle_mask(m),
        })
    }

    pub fn winners_of_matrix(self, m: &MarginMatrix) -> Result<WinnerSet, MethodError> {
        Ok(WinnerSet(m.mask_to_set(self.winner_mask(m)?)))
    }

    pub fn winners(self, p: &Profile) -> Result<WinnerSet, MethodError> {
        self.winners_of_matrix(&MarginMatrix::from_profile(p))
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = MethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| MethodError::UnknownMethod(s.to_string()))
    }
}

/// Nonempty set of winning candidates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WinnerSet(pub BTreeSet<Candidate>);

impl WinnerSet {
    pub fn contains(&self, c: &Candidate) -> bool {
        self.0.contains(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_singleton(&self, c: &Candidate) -> bool {
        self.0.len() == 1 && self.0.contains(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Candidate> {
        self.0.iter()
    }
}

impl fmt::Display for WinnerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_set(&self.0))
    }
}

fn argmax_mask<K: Ord>(n: usize, key: impl Fn(usize) -> K) -> u64 {
    let keys: Vec<K> = (0..n).map(&key).collect();
    let Some(best) = keys.iter().max() else {
        return 0;
    };
    keys.iter()
        .enumerate()
        .filter(|(_, k)| *k == best)
        .fold(0u64, |m, (i, _)| m | 1 << i)
}

/// Symmetric Borda: score is the sum of a candidate's margins.
fn borda_mask(m: &MarginMatrix) -> u64 {
    let n = m.size();
    argmax_mask(n, |x| (0..n).map(|y| m.get(x, y)).sum::<i64>())
}

/// Minimizes the largest margin against the candidate.
fn minimax_mask(m: &MarginMatrix) -> u64 {
    let n = m.size();
    argmax_mask(n, |x| -(0..n).filter(|&y| y != x).map(|y| m.get(y, x)).max().unwrap_or(0))
}

/// Lexicographically largest ascending vector of a candidate's margins.
fn leximax_mask(m: &MarginMatrix) -> u64 {
    let n = m.size();
    argmax_mask(n, |x| {
        let mut v: Vec<i64> = (0..n).filter(|&y| y != x).map(|y| m.get(x, y)).collect();
        v.sort_unstable();
        v
    })
}

/// Pairs (x, y) where x defeats y: a positive margin beating every return path.
pub fn split_cycle_defeats(m: &MarginMatrix) -> Vec<(usize, usize)> {
    let n = m.size();
    let s = m.path_strengths();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let w = m.get(x, y);
            if x != y && w > 0 && w > s[y * n + x] {
                out.push((x, y));
            }
        }
    }
    out
}

fn split_cycle_mask(m: &MarginMatrix) -> u64 {
    let n = m.size();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    split_cycle_defeats(m)
        .into_iter()
        .fold(all, |mask, (_, y)| mask & !(1 << y))
}

fn reaches(locked: &[u64], from: usize, to: usize) -> bool {
    let mut seen = 1u64 << from;
    let mut frontier = 1u64 << from;
    while frontier != 0 {
        let mut next = 0u64;
        let mut f = frontier;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= locked[v];
        }
        next &= !seen;
        seen |= next;
        frontier = next;
    }
    seen >> to & 1 == 1
}

/// Ranked Pairs with parallel-universe tie-breaking.
///
/// Edges are locked in descending margin order, skipping any that would close a
/// cycle. Every order of equal-weight edges is explored; the winners are the
/// undominated candidates of every resulting locked graph. Distinct locked graphs
/// are tracked instead of raw priority orders, and `cap` bounds their number.
fn ranked_pairs_mask(m: &MarginMatrix, cap: usize) -> Result<u64, MethodError> {
    let n = m.size();
    let mut edges: Vec<(i64, usize, usize)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if m.get(x, y) > 0 {
                edges.push((m.get(x, y), x, y));
            }
        }
    }
    edges.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut universes: HashSet<Vec<u64>> = HashSet::from([vec![0u64; n]]);
    let mut start = 0;
    while start < edges.len() {
        let weight = edges[start].0;
        let end = start + edges[start..].iter().take_while(|e| e.0 == weight).count();
        let class: Vec<(usize, usize)> = edges[start..end].iter().map(|e| (e.1, e.2)).collect();
        if class.len() > 63 {
            return Err(MethodError::TieExplosion { cap });
        }
        let mut next: HashSet<Vec<u64>> = HashSet::new();
        let mut visited: HashSet<(Vec<u64>, u64)> = HashSet::new();
        for locked in &universes {
            let full = (1u64 << class.len()) - 1;
            let mut stack = vec![(locked.clone(), full)];
            while let Some((locked, remaining)) = stack.pop() {
                if remaining == 0 {
                    next.insert(locked);
                    if next.len() > cap {
                        return Err(MethodError::TieExplosion { cap });
                    }
                    continue;
                }
                if !visited.insert((locked.clone(), remaining)) {
                    continue;
                }
                if visited.len() > cap.saturating_mul(64) {
                    return Err(MethodError::TieExplosion { cap });
                }
                let mut r = remaining;
                while r != 0 {
                    let e = r.trailing_zeros() as usize;
                    r &= r - 1;
                    let (x, y) = class[e];
                    let mut child = locked.clone();
                    if !reaches(&child, y, x) {
                        child[x] |= 1 << y;
                    }
                    stack.push((child, remaining & !(1 << e)));
                }
            }
        }
        universes = next;
        start = end;
    }

    let mut mask = 0u64;
    for locked in &universes {
        let dominated = locked.iter().fold(0u64, |acc, out| acc | out);
        for v in 0..n {
            if dominated >> v & 1 == 0 {
                mask |= 1 << v;
            }
        }
    }
    Ok(mask)
}

pub fn borda(p: &Profile) -> WinnerSet {
    MethodId::Borda.winners(p).expect("borda is total")
}

pub fn minimax(p: &Profile) -> WinnerSet {
    MethodId::Minimax.winners(p).expect("minimax is total")
}

pub fn leximax(p: &Profile) -> WinnerSet {
    MethodId::Leximax.winners(p).expect("leximax is total")
}

pub fn ranked_pairs(p: &Profile) -> Result<WinnerSet, MethodError> {
    MethodId::RankedPairs.winners(p)
}

pub fn ranked_pairs_with_cap(p: &Profile, cap: usize) -> Result<WinnerSet, MethodError> {
    let m = MarginMatrix::from_profile(p);
    Ok(WinnerSet(m.mask_to_set(ranked_pairs_mask(&m, cap)?)))
}

pub fn split_cycle(p: &Profile) -> WinnerSet {
    MethodId::SplitCycle.winners(p).expect("split cycle is total")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::alphabet;

    fn c(s: &str) -> Candidate {
        Candidate::new(s).unwrap()
    }

    fn profile(ballots: &[(&str, u64)]) -> Profile {
        Profile::from_ballots(ballots.iter().map(|(r, k)| (r.parse().unwrap(), *k))).unwrap()
    }

    fn set(items: &[&str]) -> WinnerSet {
        WinnerSet(items.iter().map(|s| c(s)).collect())
    }

    fn three_cycle(w: i64) -> MarginMatrix {
        MarginMatrix::from_edges(alphabet(3), &[(c("a"), c("b"), w), (c("b"), c("c"), w), (c("c"), c("a"), w)]).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.name().parse::<MethodId>().unwrap(), m);
        }
        assert!("copeland".parse::<MethodId>().is_err());
    }

    #[test]
    fn single_candidate() {
        let p = profile(&[("a", 2)]);
        for m in MethodId::ALL {
            assert_eq!(m.winners(&p).unwrap(), set(&["a"]));
        }
    }

    #[test]
    fn symmetric_cycle_ties_everyone() {
        let m = three_cycle(3);
        for method in MethodId::ALL {
            assert_eq!(method.winners_of_matrix(&m).unwrap(), set(&["a", "b", "c"]), "{method}");
        }
    }

    #[test]
    fn condorcet_winner_wins() {
        let p = profile(&[("a>b>c", 3), ("b>c>a", 2), ("c>a>b", 1)]);
        for m in [MethodId::Minimax, MethodId::Leximax, MethodId::RankedPairs, MethodId::SplitCycle] {
            assert_eq!(m.winners(&p).unwrap(), set(&["a"]), "{m}");
        }
    }

    #[test]
    fn ranked_pairs_locks_in_order() {
        // a>b 5, b>c 3, c>a 1: the last edge closes a cycle
        let m = MarginMatrix::from_edges(alphabet(3), &[(c("a"), c("b"), 5), (c("b"), c("c"), 3), (c("c"), c("a"), 1)])
            .unwrap();
        assert_eq!(MethodId::RankedPairs.winners_of_matrix(&m).unwrap(), set(&["a"]));
        assert_eq!(MethodId::SplitCycle.winners_of_matrix(&m).unwrap(), set(&["a"]));
    }

    #[test]
    fn ranked_pairs_cap_is_reported() {
        let m = three_cycle(2);
        assert!(matches!(
            ranked_pairs_mask(&m, 2),
            Err(MethodError::TieExplosion { cap: 2 })
        ));
        assert_eq!(ranked_pairs_mask(&m, 3).unwrap(), 0b111);
    }

    #[test]
    fn borda_sums_margins() {
        let p = profile(&[("a>b>c", 2), ("b>a>c", 1)]);
        assert_eq!(borda(&p), set(&["a"]));
    }
}
