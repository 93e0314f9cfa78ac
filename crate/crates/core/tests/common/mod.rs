//! Independent reference implementations used as oracles by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prefvote::profile::{alphabet, enumerate_linear_orders, enumerate_weak_orders};
use prefvote::{Candidate, MarginMatrix, Profile, Ranking};

pub fn prof(lines: &[(u64, &str)]) -> Profile {
    let ballots: Vec<(Ranking, u64)> = lines.iter().map(|(k, s)| (s.parse().unwrap(), *k)).collect();
    Profile::from_ballots(ballots).unwrap()
}

pub fn cand(s: &str) -> Candidate {
    Candidate::new(s).unwrap()
}

pub fn set(s: &[&str]) -> BTreeSet<Candidate> {
    s.iter().map(|x| cand(x)).collect()
}

/// Seeded profile on 3..=max_k candidates with 1..=max_voters voters.
pub fn seeded_profile(seed: u64, max_k: usize, max_voters: u64, weak: bool) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(3..=max_k);
    let xs = alphabet(k);
    let pool = if weak { enumerate_weak_orders(&xs) } else { enumerate_linear_orders(&xs) };
    let voters = rng.gen_range(1..=max_voters);
    let ballots = (0..voters).map(|_| (pool.choose(&mut rng).unwrap().clone(), 1));
    Profile::new(xs.iter().cloned(), ballots).unwrap()
}

pub fn arb_profile(min_k: usize, max_k: usize, max_voters: u64, weak: bool) -> impl Strategy<Value = Profile> {
    (min_k..=max_k, any::<u64>(), 1..=max_voters).prop_map(move |(k, seed, voters)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = alphabet(k);
        let pool = if weak { enumerate_weak_orders(&xs) } else { enumerate_linear_orders(&xs) };
        let ballots = (0..voters).map(|_| (pool.choose(&mut rng).unwrap().clone(), 1));
        Profile::new(xs.iter().cloned(), ballots).unwrap()
    })
}

/// Margin counted voter by voter from tier positions.
pub fn margin_oracle(p: &Profile, x: &Candidate, y: &Candidate) -> i64 {
    let mut m = 0i64;
    for (r, k) in p.ballots() {
        let tx = r.tier_of(x).unwrap();
        let ty = r.tier_of(y).unwrap();
        if tx < ty {
            m += k as i64;
        } else if ty < tx {
            m -= k as i64;
        }
    }
    m
}

fn simple_paths(m: &MarginMatrix, from: usize, to: usize, visited: &mut Vec<bool>, weakest: i64, best: &mut i64) {
    if from == to {
        *best = (*best).max(weakest);
        return;
    }
    visited[from] = true;
    for next in 0..m.size() {
        let w = m.get(from, next);
        if !visited[next] && w > 0 {
            simple_paths(m, next, to, visited, weakest.min(w), best);
        }
    }
    visited[from] = false;
}

/// Widest path strength by enumerating every simple path; 0 when none exists.
pub fn widest_oracle(m: &MarginMatrix, from: usize, to: usize) -> i64 {
    if from == to {
        return 0;
    }
    let mut best = 0;
    let mut visited = vec![false; m.size()];
    simple_paths(m, from, to, &mut visited, i64::MAX, &mut best);
    best
}

/// Split Cycle from simple cycles: x defeats y when m(x,y) > 0 and is not the weakest
/// edge (ties included) of any simple cycle through x -> y.
pub fn split_cycle_oracle(m: &MarginMatrix) -> BTreeSet<usize> {
    let n = m.size();
    let mut defeated = BTreeSet::new();
    for x in 0..n {
        for y in 0..n {
            let w = m.get(x, y);
            if x == y || w <= 0 {
                continue;
            }
            let mut cycle_min = 0;
            let mut visited = vec![false; n];
            simple_paths(m, y, x, &mut visited, i64::MAX, &mut cycle_min);
            if w > cycle_min {
                defeated.insert(y);
            }
        }
    }
    (0..n).filter(|v| !defeated.contains(v)).collect()
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn reachable(adj: &[Vec<bool>], from: usize, to: usize) -> bool {
    let mut stack = vec![from];
    let mut seen = vec![false; adj.len()];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if seen[v] {
            continue;
        }
        seen[v] = true;
        for (w, &e) in adj[v].iter().enumerate() {
            if e {
                stack.push(w);
            }
        }
    }
    false
}

/// Ranked Pairs over every priority order of the positive edges consistent with the
/// margins; the union of the resulting winners.
pub fn ranked_pairs_oracle(m: &MarginMatrix) -> BTreeSet<usize> {
    let n = m.size();
    let mut weights: Vec<i64> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if m.get(x, y) > 0 && !weights.contains(&m.get(x, y)) {
                weights.push(m.get(x, y));
            }
        }
    }
    weights.sort_unstable_by(|a, b| b.cmp(a));
    let classes: Vec<Vec<(usize, usize)>> = weights
        .iter()
        .map(|&w| {
            (0..n)
                .flat_map(|x| (0..n).map(move |y| (x, y)))
                .filter(|&(x, y)| m.get(x, y) == w)
                .collect()
        })
        .collect();
    let mut orders: Vec<Vec<(usize, usize)>> = vec![vec![]];
    for class in &classes {
        let perms = permutations(class);
        orders = orders
            .iter()
            .flat_map(|o| {
                perms.iter().map(move |p| {
                    let mut o = o.clone();
                    o.extend(p.iter().cloned());
                    o
                })
            })
            .collect();
    }
    let mut winners = BTreeSet::new();
    for order in orders {
        let mut adj = vec![vec![false; n]; n];
        for (x, y) in order {
            if !reachable(&adj, y, x) {
                adj[x][y] = true;
            }
        }
        for v in 0..n {
            if (0..n).all(|u| !adj[u][v]) {
                winners.insert(v);
            }
        }
    }
    winners
}

/// Borda from positions: each voter gives a candidate one point per candidate ranked
/// strictly below it and takes one per candidate strictly above.
pub fn borda_oracle(p: &Profile) -> BTreeSet<usize> {
    let xs = p.candidates();
    let mut score = vec![0i64; xs.len()];
    for (r, k) in p.ballots() {
        for (i, x) in xs.iter().enumerate() {
            let t = r.tier_of(x).unwrap();
            let below: usize = r.tiers()[t + 1..].iter().map(Vec::len).sum();
            let above: usize = r.tiers()[..t].iter().map(Vec::len).sum();
            score[i] += k as i64 * (below as i64 - above as i64);
        }
    }
    let best = *score.iter().max().unwrap();
    (0..xs.len()).filter(|&i| score[i] == best).collect()
}

/// Classic positional Borda on linear ballots: k - 1 - position points.
pub fn classic_borda(p: &Profile) -> BTreeSet<usize> {
    let xs = p.candidates();
    let k = xs.len() as i64;
    let mut score = vec![0i64; xs.len()];
    for (r, c) in p.ballots() {
        for (i, x) in xs.iter().enumerate() {
            score[i] += c as i64 * (k - 1 - r.tier_of(x).unwrap() as i64);
        }
    }
    let best = *score.iter().max().unwrap();
    (0..xs.len()).filter(|&i| score[i] == best).collect()
}

pub fn minimax_oracle(m: &MarginMatrix) -> BTreeSet<usize> {
    let n = m.size();
    let worst: Vec<i64> = (0..n)
        .map(|x| (0..n).filter(|&y| y != x).map(|y| m.get(y, x)).max().unwrap_or(0))
        .collect();
    let best = *worst.iter().min().unwrap();
    (0..n).filter(|&x| worst[x] == best).collect()
}

/// Clone sets straight from the definition: every outside candidate sits strictly above
/// or strictly below every member on every ballot.
pub fn clone_sets_oracle(p: &Profile) -> BTreeSet<BTreeSet<Candidate>> {
    let xs = p.candidates();
    let n = xs.len();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<&Candidate> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &xs[i]).collect();
        if members.len() < 2 || members.len() == n {
            continue;
        }
        let ok = p.ballots().all(|(r, _)| {
            xs.iter().filter(|z| !members.contains(z)).all(|z| {
                let tz = r.tier_of(z).unwrap();
                let above = members.iter().all(|c| tz < r.tier_of(c).unwrap());
                let below = members.iter().all(|c| tz > r.tier_of(c).unwrap());
                above || below
            })
        });
        if ok {
            out.insert(members.into_iter().cloned().collect());
        }
    }
    out
}

/// Number of ordered set partitions of an n-set.
pub fn fubini(n: usize) -> u64 {
    let mut a = vec![1u64];
    for m in 1..=n {
        let mut s = 0u64;
        for k in 1..=m {
            s += binom(m, k) * a[m - k];
        }
        a.push(s);
    }
    a[n]
}

pub fn binom(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Weak orders as surjections onto tier indices, counted by brute force.
pub fn weak_orders_brute(xs: &[Candidate]) -> BTreeSet<Vec<BTreeSet<Candidate>>> {
    let n = xs.len();
    let mut out = BTreeSet::new();
    let total = (n as u64).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let tier: Vec<usize> = (0..n)
            .map(|_| {
                let t = (c % n as u64) as usize;
                c /= n as u64;
                t
            })
            .collect();
        let used: BTreeSet<usize> = tier.iter().copied().collect();
        if used.len() != used.iter().max().map_or(0, |m| m + 1) {
            continue;
        }
        let tiers: Vec<BTreeSet<Candidate>> = (0..used.len())
            .map(|t| (0..n).filter(|&i| tier[i] == t).map(|i| xs[i].clone()).collect())
            .collect();
        out.insert(tiers);
    }
    out
}

/// Smallest total over every count vector with at most `cap` voters.
pub fn brute_minimum(target: &MarginMatrix, pool: &[Ranking], cap: u64) -> Option<u64> {
    let xs = target.candidates();
    let effects: Vec<MarginMatrix> = pool.iter().map(|r| MarginMatrix::of_ranking(xs, r)).collect();
    let mut best: Option<u64> = None;
    let mut counts = vec![0u64; pool.len()];
    fn walk(
        i: usize,
        left: u64,
        counts: &mut Vec<u64>,
        effects: &[MarginMatrix],
        target: &MarginMatrix,
        best: &mut Option<u64>,
    ) {
        if i == counts.len() {
            let total: u64 = counts.iter().sum();
            if total == 0 {
                return;
            }
            let n = target.size();
            let ok = (0..n * n).all(|c| {
                let v: i64 = effects.iter().zip(counts.iter()).map(|(e, &k)| e.values()[c] * k as i64).sum();
                v == target.values()[c]
            });
            if ok && best.is_none_or(|b| total < b) {
                *best = Some(total);
            }
            return;
        }
        for k in 0..=left {
            counts[i] = k;
            walk(i + 1, left - k, counts, effects, target, best);
        }
        counts[i] = 0;
    }
    walk(0, cap, &mut counts, &effects, target, &mut best);
    best
}
