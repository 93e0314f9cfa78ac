//! Spaces of added ballots: single-ballot modes, multisets of ballots, and the
//! distinct margin perturbations they produce.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::margins::MarginMatrix;
use crate::profile::{enumerate_linear_orders, enumerate_weak_orders, Candidate, Ranking};

/// Which rankings an added voter may submit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallotMode {
    Linear,
    Weak,
}

impl BallotMode {
    pub fn ballots(self, xs: &[Candidate]) -> Vec<Ranking> {
        match self {
            BallotMode::Linear => enumerate_linear_orders(xs),
            BallotMode::Weak => enumerate_weak_orders(xs),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BallotMode::Linear => "linear",
            BallotMode::Weak => "weak",
        }
    }
}

impl fmt::Display for BallotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BallotMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(BallotMode::Linear),
            "weak" => Ok(BallotMode::Weak),
            other => Err(format!("unknown ballot mode {other:?} (expected linear or weak)")),
        }
    }
}

/// Number of multisets of size at most `max` over `kinds` kinds, the empty multiset included.
pub fn multisets_up_to(kinds: u64, max: u64) -> u128 {
    // C(kinds + k - 1, k) summed over k = 0..=max
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for k in 0..=max {
        if k > 0 {
            term = term * (kinds as u128 + k as u128 - 1) / k as u128;
        }
        total += term;
    }
    total
}

/// Visits every multiset of at most `max` indices from `0..kinds` as a nondecreasing
/// sequence, shortest first and lexicographic within a size.
pub fn for_each_multiset(kinds: usize, max: usize, mut f: impl FnMut(&[usize])) {
    let mut current = Vec::with_capacity(max);
    for size in 0..=max {
        if size > 0 && kinds == 0 {
            break;
        }
        fill(kinds, size, 0, &mut current, &mut f);
    }
}

fn fill(kinds: usize, size: usize, from: usize, current: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if current.len() == size {
        f(current);
        return;
    }
    for i in from..kinds {
        current.push(i);
        fill(kinds, size, i, current, f);
        current.pop();
    }
}

/// Upper-triangle margin perturbation of a set of added ballots.
pub type Effect = Box<[i16]>;

fn upper_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

pub fn effect_of(candidates: &[Candidate], r: &Ranking) -> Effect {
    let m = MarginMatrix::of_ranking(candidates, r);
    let n = candidates.len();
    let mut out = Vec::with_capacity(upper_len(n));
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(m.get(i, j) as i16);
        }
    }
    out.into_boxed_slice()
}

/// Expands an upper-triangle effect into a full row-major antisymmetric matrix.
pub fn expand(n: usize, e: &[i16]) -> Vec<i64> {
    let mut v = vec![0i64; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            v[i * n + j] = e[k] as i64;
            v[j * n + i] = -(e[k] as i64);
            k += 1;
        }
    }
    v
}

fn add_effects(a: &[i16], b: &[i16]) -> Effect {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Distinct perturbations produced by adding at most `max` ballots whose single-ballot
/// effects are `unit`. Returns `None` as soon as more than `budget` are found.
pub fn reachable_effects(unit: &[Effect], max: usize, budget: usize) -> Option<Vec<Effect>> {
    let width = unit.first().map(|e| e.len()).unwrap_or(0);
    let zero: Effect = vec![0i16; width].into_boxed_slice();
    let mut seen: HashSet<Effect> = HashSet::from([zero.clone()]);
    let mut order = vec![zero.clone()];
    let mut frontier = vec![zero];
    for _ in 0..max {
        let mut next = Vec::new();
        for base in &frontier {
            for u in unit {
                let e = add_effects(base, u);
                if seen.insert(e.clone()) {
                    if seen.len() > budget {
                        return None;
                    }
                    order.push(e.clone());
                    next.push(e);
                }
            }
        }
        frontier = next;
    }
    Some(order)
}
