//! Realizing target margins as profiles: the McGarvey–Debord construction and an
//! exact branch-and-bound search for small profiles over a ranking pool.

use std::collections::BTreeMap;

use serde::Serialize;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ProfileError, SynthError};
use crate::margins::MarginMatrix;
use crate::profile::{block_of_all_linear_orders, enumerate_linear_orders, Candidate, Profile, Ranking};

pub const DEFAULT_CAP: u64 = 500;
pub const DEFAULT_NODE_LIMIT: u64 = 2_000_000;

/// An antisymmetric margin matrix whose off-diagonal entries share one parity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetMargins {
    matrix: MarginMatrix,
}

impl TargetMargins {
    pub fn new(matrix: MarginMatrix) -> Result<Self, SynthError> {
        let n = matrix.size();
        let mut parity = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let p = matrix.get(i, j).rem_euclid(2);
                match parity {
                    None => parity = Some(p),
                    Some(q) if q != p => return Err(SynthError::Parity),
                    _ => {}
                }
            }
        }
        Ok(TargetMargins { matrix })
    }

    pub fn matrix(&self) -> &MarginMatrix {
        &self.matrix
    }

    pub fn candidates(&self) -> &[Candidate] {
        self.matrix.candidates()
    }

    pub fn is_odd(&self) -> bool {
        self.matrix.size() >= 2 && self.matrix.get(0, 1).rem_euclid(2) == 1
    }
}

/// Builds a profile whose margins equal the target exactly.
pub fn mcgarvey_debord_realize(t: &TargetMargins) -> Profile {
    let xs = t.candidates().to_vec();
    let n = xs.len();
    let mut ballots: BTreeMap<Ranking, u64> = BTreeMap::new();
    let mut residual = t.matrix().values().to_vec();

    if t.is_odd() {
        let seed = Ranking::linear(xs.iter().cloned()).expect("candidates are distinct");
        let e = MarginMatrix::of_ranking(&xs, &seed);
        for (r, v) in residual.iter_mut().zip(e.values()) {
            *r -= v;
        }
        *ballots.entry(seed).or_default() += 1;
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let r = residual[i * n + j];
            if r == 0 {
                continue;
            }
            let (x, y) = if r > 0 { (i, j) } else { (j, i) };
            let k = r.unsigned_abs() / 2;
            let rest: Vec<Candidate> = (0..n).filter(|&z| z != x && z != y).map(|z| xs[z].clone()).collect();
            let first = std::iter::once(xs[x].clone())
                .chain(std::iter::once(xs[y].clone()))
                .chain(rest.iter().cloned());
            let second = rest
                .iter()
                .rev()
                .cloned()
                .chain(std::iter::once(xs[x].clone()))
                .chain(std::iter::once(xs[y].clone()));
            *ballots.entry(Ranking::linear(first).expect("distinct")).or_default() += k;
            *ballots.entry(Ranking::linear(second).expect("distinct")).or_default() += k;
        }
    }

    if ballots.is_empty() {
        let forward = Ranking::linear(xs.iter().cloned()).expect("distinct");
        let backward = forward.reverse();
        if forward == backward {
            ballots.insert(forward, 1);
        } else {
            ballots.insert(forward, 1);
            ballots.insert(backward, 1);
        }
    }
    Profile::new(xs, ballots).expect("construction ranks every candidate")
}

/// Adds `copies` voters with each linear order of the profile's candidates.
pub fn pad_with_blocks(p: &Profile, copies: u64) -> Profile {
    assert!(copies >= 1, "copies must be positive");
    p.add(&block_of_all_linear_orders(p.candidates(), copies))
        .expect("same candidates")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SynthesisResult {
    pub profile: Profile,
    pub total_voters: u64,
    /// True when the search tree was exhausted, so no smaller profile over the pool exists.
    pub optimal: bool,
    pub explored: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthOptions {
    pub cap: u64,
    pub node_limit: u64,
    /// Seed the incumbent with a greedy profile when the pool holds every linear order.
    pub warm_start: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            cap: DEFAULT_CAP,
            node_limit: DEFAULT_NODE_LIMIT,
            warm_start: true,
        }
    }
}

/// Smallest profile over `pool` whose margins equal `target`, with at most `cap` voters.
pub fn minimize_profile(target: &MarginMatrix, pool: &[Ranking], cap: u64) -> Result<SynthesisResult, SynthError> {
    minimize_profile_with(target, pool, SynthOptions { cap, ..SynthOptions::default() })
}

struct Search {
    // coef[p][r] in {-1, 0, 1}
    coef: Vec<Vec<i8>>,
    target: Vec<i64>,
    node_limit: u64,
    explored: u64,
    aborted: bool,
    best: Option<(u64, Vec<u64>)>,
    order: Vec<usize>,
}

impl Search {
    fn bound(&self, cap: u64) -> u64 {
        match &self.best {
            Some((total, _)) => total.saturating_sub(1).min(cap),
            None => cap,
        }
    }

    /// Tightens `[lo, hi]` until a fixed point; false when infeasible.
    fn propagate(&self, lo: &mut [u64], hi: &mut [u64], limit: u64) -> bool {
        let rankings = lo.len();
        loop {
            let mut changed = false;
            let low_total: u64 = lo.iter().sum();
            if low_total > limit {
                return false;
            }
            for r in 0..rankings {
                let room = limit - (low_total - lo[r]);
                if hi[r] > room {
                    hi[r] = room;
                    changed = true;
                }
                if hi[r] < lo[r] {
                    return false;
                }
            }
            for (p, row) in self.coef.iter().enumerate() {
                let t = self.target[p];
                let mut smin = 0i64;
                let mut smax = 0i64;
                for r in 0..rankings {
                    match row[r] {
                        1 => {
                            smin += lo[r] as i64;
                            smax += hi[r] as i64;
                        }
                        -1 => {
                            smin -= hi[r] as i64;
                            smax -= lo[r] as i64;
                        }
                        _ => {}
                    }
                }
                if t < smin || t > smax {
                    return false;
                }
                for r in 0..rankings {
                    let (new_lo, new_hi) = match row[r] {
                        1 => {
                            let omin = smin - lo[r] as i64;
                            let omax = smax - hi[r] as i64;
                            (t - omax, t - omin)
                        }
                        -1 => {
                            let omin = smin + hi[r] as i64;
                            let omax = smax + lo[r] as i64;
                            (omin - t, omax - t)
                        }
                        _ => continue,
                    };
                    let new_lo = new_lo.max(0) as u64;
                    let new_hi = new_hi.max(-1);
                    if new_hi < 0 {
                        return false;
                    }
                    let new_hi = new_hi as u64;
                    if new_lo > lo[r] {
                        lo[r] = new_lo;
                        changed = true;
                    }
                    if new_hi < hi[r] {
                        hi[r] = new_hi;
                        changed = true;
                    }
                    if lo[r] > hi[r] {
                        return false;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn dfs(&mut self, mut lo: Vec<u64>, mut hi: Vec<u64>, cap: u64) {
        if self.aborted {
            return;
        }
        self.explored += 1;
        if self.explored > self.node_limit {
            self.aborted = true;
            return;
        }
        let limit = self.bound(cap);
        if self.best.is_some() && self.best.as_ref().unwrap().0 == 0 {
            return;
        }
        if !self.propagate(&mut lo, &mut hi, limit) {
            return;
        }
        let Some(&r) = self.order.iter().find(|&&r| lo[r] < hi[r]) else {
            let total: u64 = lo.iter().sum();
            if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                self.best = Some((total, lo));
            }
            return;
        };
        let (from, to) = (lo[r], hi[r]);
        for v in (from..=to).rev() {
            let mut l = lo.clone();
            let mut h = hi.clone();
            l[r] = v;
            h[r] = v;
            self.dfs(l, h, cap);
            if self.aborted {
                return;
            }
        }
    }

}

/// Branch-and-bound with explicit options.
pub fn minimize_profile_with(
    target: &MarginMatrix,
    pool: &[Ranking],
    opts: SynthOptions,
) -> Result<SynthesisResult, SynthError> {
    let xs = target.candidates().to_vec();
    let n = xs.len();
    let mut pool: Vec<Ranking> = pool.to_vec();
    pool.sort();
    pool.dedup();
    if pool.is_empty() {
        return Err(SynthError::EmptyPool);
    }
    let expected: std::collections::BTreeSet<Candidate> = xs.iter().cloned().collect();
    for r in &pool {
        if r.candidates() != expected || r.len() != xs.len() {
            return Err(ProfileError::CandidateMismatch { ranking: r.to_string() }.into());
        }
    }

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let effects: Vec<MarginMatrix> = pool.iter().map(|r| MarginMatrix::of_ranking(&xs, r)).collect();
    let coef: Vec<Vec<i8>> = pairs
        .iter()
        .map(|&(i, j)| effects.iter().map(|e| e.get(i, j) as i8).collect())
        .collect();
    let tvec: Vec<i64> = pairs.iter().map(|&(i, j)| target.get(i, j)).collect();

    // rankings best aligned with the target first
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let alignment = |r: usize| -> i64 { (0..pairs.len()).map(|p| coef[p][r] as i64 * tvec[p]).sum() };
    order.sort_by_key(|&r| (std::cmp::Reverse(alignment(r)), r));

    let mut search = Search {
        coef,
        target: tvec.clone(),
        node_limit: opts.node_limit,
        explored: 0,
        aborted: false,
        best: None,
        order,
    };

    let lower = tvec.iter().map(|t| t.unsigned_abs()).max().unwrap_or(0);
    if lower > opts.cap {
        return Err(SynthError::Infeasible { cap: opts.cap });
    }

    if opts.warm_start {
        if let Some(counts) = greedy_start(&xs, &pool, &search, opts.cap) {
            let total = counts.iter().sum();
            search.best = Some((total, counts));
        }
    }

    let lo = vec![0u64; pool.len()];
    let hi = vec![opts.cap; pool.len()];
    search.dfs(lo, hi, opts.cap);

    let optimal = !search.aborted;
    let explored = search.explored;
    match search.best {
        Some((total, counts)) => {
            let ballots = pool.iter().cloned().zip(counts).filter(|(_, k)| *k > 0);
            let profile = Profile::new(xs.clone(), ballots).map_err(|e| match e {
                // an all-zero target over a pool that realizes it with no voters
                ProfileError::NoVoters => SynthError::Infeasible { cap: opts.cap },
                other => other.into(),
            })?;
            Ok(SynthesisResult {
                profile,
                total_voters: total,
                optimal,
                explored,
            })
        }
        None if optimal => Err(SynthError::Infeasible { cap: opts.cap }),
        None => Err(SynthError::BudgetExhausted { explored }),
    }
}

/// A move adds one ballot, or two ballots that agree exactly on the pairs inside an
/// ordered subset of candidates.
struct Move {
    cost: u64,
    effect: Vec<i64>,
    rankings: Vec<usize>,
}

fn completion_moves(xs: &[Candidate], index: &BTreeMap<&Ranking, usize>, search: &Search) -> Option<Vec<Move>> {
    let n = xs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let mut moves = Vec::new();
    for r in enumerate_linear_orders(xs) {
        let k = *index.get(&r)?;
        let effect = (0..pairs.len()).map(|p| search.coef[p][k] as i64).collect();
        moves.push(Move { cost: 1, effect, rankings: vec![k] });
    }
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    for size in 1..n {
        let mut next = Vec::new();
        for s in &subsets {
            for z in 0..n {
                if !s.contains(&z) {
                    let mut t = s.clone();
                    t.push(z);
                    next.push(t);
                }
            }
        }
        subsets = next;
        if size < 2 {
            continue;
        }
        for s in &subsets {
            let rest: Vec<usize> = (0..n).filter(|z| !s.contains(z)).collect();
            let name = |v: &[usize]| v.iter().map(|&z| xs[z].clone()).collect::<Vec<_>>();
            let first = Ranking::linear(name(s).into_iter().chain(name(&rest))).ok()?;
            let second = Ranking::linear(name(&rest).into_iter().rev().chain(name(s))).ok()?;
            let effect = pairs
                .iter()
                .map(|&(i, j)| match (s.iter().position(|&z| z == i), s.iter().position(|&z| z == j)) {
                    (Some(a), Some(b)) if a < b => 2,
                    (Some(_), Some(_)) => -2,
                    _ => 0,
                })
                .collect();
            moves.push(Move {
                cost: 2,
                effect,
                rankings: vec![index[&first], index[&second]],
            });
        }
    }
    Some(moves)
}

/// Repeatedly applies the move with the best residual reduction per voter.
fn greedy_descent(moves: &[Move], target: &[i64], pool_len: usize, noise: Option<&mut ChaCha8Rng>, cap: u64) -> Option<Vec<u64>> {
    let mut rng = noise;
    let mut counts = vec![0u64; pool_len];
    let mut residual = target.to_vec();
    let mut total = 0u64;
    while residual.iter().any(|&v| v != 0) {
        let mut best: Option<(f64, i64, usize)> = None;
        for (m, mv) in moves.iter().enumerate() {
            let gain: i64 = residual
                .iter()
                .zip(&mv.effect)
                .map(|(v, e)| v.abs() - (v - e).abs())
                .sum();
            if gain <= 0 {
                continue;
            }
            let jitter = rng.as_mut().map_or(0.0, |r| r.gen::<f64>() * 0.5);
            let score = gain as f64 / mv.cost as f64 + jitter;
            if best.is_none_or(|(s, g, _)| (score, gain) > (s, g)) {
                best = Some((score, gain, m));
            }
        }
        let (_, _, m) = best?;
        let mv = &moves[m];
        total += mv.cost;
        if total > cap {
            return None;
        }
        for &r in &mv.rankings {
            counts[r] += 1;
        }
        for (v, e) in residual.iter_mut().zip(&mv.effect) {
            *v -= e;
        }
    }
    (total > 0).then_some(counts)
}

const GREEDY_RESTARTS: u64 = 32;

/// Best of a deterministic greedy and a few seeded noisy restarts. Needs every
/// linear order in the pool.
fn greedy_start(xs: &[Candidate], pool: &[Ranking], search: &Search, cap: u64) -> Option<Vec<u64>> {
    let index: BTreeMap<&Ranking, usize> = pool.iter().enumerate().map(|(i, r)| (r, i)).collect();
    if xs.len() < 2 {
        return None;
    }
    let moves = completion_moves(xs, &index, search)?;
    let mut best = greedy_descent(&moves, &search.target, pool.len(), None, cap);
    for seed in 0..GREEDY_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = best.as_ref().map_or(cap, |c| c.iter().sum::<u64>().saturating_sub(1));
        if let Some(c) = greedy_descent(&moves, &search.target, pool.len(), Some(&mut rng), bound) {
            best = Some(c);
        }
    }
    best
}
