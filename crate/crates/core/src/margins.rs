//! Margin matrices, margin graphs and the margin-level predicates used by the proofs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::ProfileError;
use crate::profile::{Candidate, Profile, Ranking};

/// Antisymmetric matrix of pairwise margins, indexed by the sorted candidate list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarginMatrix {
    candidates: Arc<[Candidate]>,
    values: Vec<i64>,
}

impl MarginMatrix {
    pub fn from_profile(p: &Profile) -> Self {
        let cands = p.candidates();
        let n = cands.len();
        let mut values = vec![0i64; n * n];
        for (r, k) in p.ballots() {
            let k = k as i64;
            let pos = r.positions(cands);
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = match pos[i].cmp(&pos[j]) {
                        std::cmp::Ordering::Less => k,
                        std::cmp::Ordering::Greater => -k,
                        std::cmp::Ordering::Equal => 0,
                    };
                    values[i * n + j] += d;
                    values[j * n + i] -= d;
                }
            }
        }
        MarginMatrix {
            candidates: cands.into(),
            values,
        }
    }

    /// Margin contribution of a single ballot over `candidates` (which must be sorted).
    pub fn of_ranking(candidates: &[Candidate], r: &Ranking) -> Self {
        let n = candidates.len();
        let pos = r.positions(candidates);
        let mut values = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = match pos[i].cmp(&pos[j]) {
                    std::cmp::Ordering::Less => 1,
                    std::cmp::Ordering::Greater => -1,
                    std::cmp::Ordering::Equal => 0,
                };
            }
        }
        MarginMatrix {
            candidates: candidates.into(),
            values,
        }
    }

    /// Row-major values; `candidates` is sorted and deduplicated by the caller.
    pub fn from_values(candidates: Vec<Candidate>, values: Vec<i64>) -> Result<Self, ProfileError> {
        let n = candidates.len();
        if values.len() != n * n {
            return Err(ProfileError::NotAntisymmetric);
        }
        let mut sorted = candidates.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != candidates {
            return Err(ProfileError::NotAntisymmetric);
        }
        for i in 0..n {
            if values[i * n + i] != 0 {
                return Err(ProfileError::NotAntisymmetric);
            }
            for j in 0..n {
                if values[i * n + j] != -values[j * n + i] {
                    return Err(ProfileError::NotAntisymmetric);
                }
            }
        }
        Ok(MarginMatrix {
            candidates: candidates.into(),
            values,
        })
    }

    /// Builds a matrix from `x y weight` edges; unlisted pairs get margin zero.
    pub fn from_edges(
        candidates: impl IntoIterator<Item = Candidate>,
        edges: &[(Candidate, Candidate, i64)],
    ) -> Result<Self, ProfileError> {
        let mut cands: Vec<Candidate> = candidates.into_iter().collect();
        cands.sort();
        cands.dedup();
        let n = cands.len();
        let mut values = vec![0i64; n * n];
        let idx = |c: &Candidate| cands.binary_search(c).map_err(|_| ProfileError::UnknownCandidate(c.clone()));
        for (x, y, w) in edges {
            let (i, j) = (idx(x)?, idx(y)?);
            if i == j {
                return Err(ProfileError::NotAntisymmetric);
            }
            values[i * n + j] = *w;
            values[j * n + i] = -*w;
        }
        MarginMatrix::from_values(cands, values)
    }

    pub fn size(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn index_of(&self, c: &Candidate) -> Result<usize, ProfileError> {
        self.candidates
            .binary_search(c)
            .map_err(|_| ProfileError::UnknownCandidate(c.clone()))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.values[i * self.candidates.len() + j]
    }

    pub fn margin(&self, x: &Candidate, y: &Candidate) -> Result<i64, ProfileError> {
        Ok(self.get(self.index_of(x)?, self.index_of(y)?))
    }

    /// Entrywise sum; both matrices must share the candidate list.
    pub fn plus(&self, other: &MarginMatrix) -> MarginMatrix {
        assert_eq!(self.candidates, other.candidates, "candidate lists differ");
        self.plus_values(&other.values)
    }

    pub fn plus_values(&self, delta: &[i64]) -> MarginMatrix {
        MarginMatrix {
            candidates: Arc::clone(&self.candidates),
            values: self.values.iter().zip(delta).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scaled(&self, n: i64) -> MarginMatrix {
        MarginMatrix {
            candidates: Arc::clone(&self.candidates),
            values: self.values.iter().map(|v| v * n).collect(),
        }
    }

    pub fn max_margin(&self) -> i64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Positive entries as `(x, y, weight)`, in candidate order.
    pub fn edges(&self) -> Vec<(Candidate, Candidate, i64)> {
        let n = self.size();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = self.get(i, j);
                if w > 0 {
                    out.push((self.candidates[i].clone(), self.candidates[j].clone(), w));
                }
            }
        }
        out
    }

    pub fn graph(&self) -> MarginGraph {
        MarginGraph {
            candidates: self.candidates.to_vec(),
            edges: self
                .edges()
                .into_iter()
                .map(|(x, y, w)| ((x, y), w as u64))
                .collect(),
        }
    }

    pub fn condorcet_winner_index(&self) -> Option<usize> {
        let n = self.size();
        (0..n).find(|&x| (0..n).all(|y| y == x || self.get(x, y) > 0))
    }

    pub fn condorcet_loser_index(&self) -> Option<usize> {
        let n = self.size();
        (0..n).find(|&x| (0..n).all(|y| y == x || self.get(y, x) > 0))
    }

    /// Bitmask of defensible candidates: x such that every y is matched by some z
    /// with `margin(z, y) >= margin(y, x)`, z ranging over all candidates.
    pub fn defensible_mask(&self) -> u64 {
        let n = self.size();
        let mut best_against = vec![0i64; n];
        for (y, slot) in best_against.iter_mut().enumerate() {
            *slot = (0..n).map(|z| self.get(z, y)).max().unwrap_or(0);
        }
        let mut mask = 0u64;
        for x in 0..n {
            if (0..n).all(|y| best_against[y] >= self.get(y, x)) {
                mask |= 1 << x;
            }
        }
        mask
    }

    pub fn defensible_set(&self) -> BTreeSet<Candidate> {
        self.mask_to_set(self.defensible_mask())
    }

    pub fn mask_to_set(&self, mask: u64) -> BTreeSet<Candidate> {
        (0..self.size())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.candidates[i].clone())
            .collect()
    }

    pub fn set_to_mask(&self, set: &BTreeSet<Candidate>) -> Result<u64, ProfileError> {
        set.iter().try_fold(0u64, |m, c| Ok(m | 1 << self.index_of(c)?))
    }

    /// Margins over ordered pairs of distinct candidates.
    fn off_diagonal(&self) -> Vec<i64> {
        let n = self.size();
        let mut vals = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    vals.push(self.get(i, j));
                }
            }
        }
        vals
    }

    /// Whenever one margin exceeds another, it does so by at least two.
    pub fn separation_holds(&self) -> bool {
        let mut vals = self.off_diagonal();
        vals.sort_unstable();
        vals.dedup();
        vals.windows(2).all(|w| w[1] - w[0] >= 2)
    }

    /// All margins over distinct ordered pairs are pairwise distinct.
    pub fn uniquely_weighted(&self) -> bool {
        let mut vals = self.off_diagonal();
        let len = vals.len();
        vals.sort_unstable();
        vals.dedup();
        vals.len() == len
    }

    /// Smallest difference between the weights of two distinct margin-graph edges.
    pub fn min_edge_gap(&self) -> Option<i64> {
        let mut ws: Vec<i64> = self.values.iter().copied().filter(|w| *w > 0).collect();
        ws.sort_unstable();
        ws.windows(2).map(|w| w[1] - w[0]).min()
    }

    /// All-pairs widest-path strengths over the margin graph; 0 when no path exists.
    pub fn path_strengths(&self) -> Vec<i64> {
        let n = self.size();
        let mut s: Vec<i64> = self.values.iter().map(|&v| v.max(0)).collect();
        for i in 0..n {
            s[i * n + i] = 0;
        }
        for k in 0..n {
            for i in 0..n {
                if i == k {
                    continue;
                }
                let ik = s[i * n + k];
                if ik == 0 {
                    continue;
                }
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let via = ik.min(s[k * n + j]);
                    if via > s[i * n + j] {
                        s[i * n + j] = via;
                    }
                }
            }
        }
        s
    }

    /// `x y weight` lines for every positive margin.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (x, y, w) in self.edges() {
            let _ = writeln!(out, "{x} {y} {w}");
        }
        out
    }

    /// Fixed-width table with row candidate vs column candidate.
    pub fn to_table(&self) -> String {
        let n = self.size();
        let width = self
            .values
            .iter()
            .map(|v| v.to_string().len())
            .chain(self.candidates.iter().map(|c| c.as_str().len()))
            .max()
            .unwrap_or(1)
            + 1;
        let mut out = String::new();
        let _ = write!(out, "{:>width$}", "");
        for c in self.candidates.iter() {
            let _ = write!(out, "{:>width$}", c.as_str());
        }
        out.push('\n');
        for i in 0..n {
            let _ = write!(out, "{:>width$}", self.candidates[i].as_str());
            for j in 0..n {
                let _ = write!(out, "{:>width$}", self.get(i, j));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize)]
struct EdgeRecord<'a> {
    from: &'a str,
    to: &'a str,
    weight: i64,
}

#[derive(Serialize)]
struct MatrixRecord<'a> {
    candidates: Vec<&'a str>,
    matrix: Vec<Vec<i64>>,
    edges: Vec<EdgeRecord<'a>>,
}

impl Serialize for MarginMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = self.size();
        let edges = self.edges();
        let rec = MatrixRecord {
            candidates: self.candidates.iter().map(Candidate::as_str).collect(),
            matrix: (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect(),
            edges: edges
                .iter()
                .map(|(x, y, w)| EdgeRecord {
                    from: x.as_str(),
                    to: y.as_str(),
                    weight: *w,
                })
                .collect(),
        };
        rec.serialize(serializer)
    }
}

/// Directed graph with an edge x→y weighted by the margin whenever it is positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginGraph {
    candidates: Vec<Candidate>,
    edges: BTreeMap<(Candidate, Candidate), u64>,
}

impl MarginGraph {
    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn edges(&self) -> &BTreeMap<(Candidate, Candidate), u64> {
        &self.edges
    }

    pub fn weight(&self, x: &Candidate, y: &Candidate) -> Option<u64> {
        self.edges.get(&(x.clone(), y.clone())).copied()
    }

    pub fn to_matrix(&self) -> MarginMatrix {
        let edges: Vec<(Candidate, Candidate, i64)> = self
            .edges
            .iter()
            .map(|((x, y), w)| (x.clone(), y.clone(), *w as i64))
            .collect();
        MarginMatrix::from_edges(self.candidates.iter().cloned(), &edges)
            .expect("graph edges are antisymmetric by construction")
    }
}

/// Maximum over directed paths from `x` to `y` of the path's weakest edge; 0 if unreachable.
pub fn widest_path_strength(g: &MarginGraph, x: &Candidate, y: &Candidate) -> Result<i64, ProfileError> {
    let m = g.to_matrix();
    let (i, j) = (m.index_of(x)?, m.index_of(y)?);
    if i == j {
        return Ok(0);
    }
    Ok(m.path_strengths()[i * m.size() + j])
}

pub fn margin(p: &Profile, x: &Candidate, y: &Candidate) -> Result<i64, ProfileError> {
    let (i, j) = (p.index_of(x)?, p.index_of(y)?);
    if i == j {
        return Ok(0);
    }
    let mut total = 0i64;
    for (r, k) in p.ballots() {
        let (tx, ty) = (r.tier_of(x).expect("ranked"), r.tier_of(y).expect("ranked"));
        total += match tx.cmp(&ty) {
            std::cmp::Ordering::Less => k as i64,
            std::cmp::Ordering::Greater => -(k as i64),
            std::cmp::Ordering::Equal => 0,
        };
    }
    Ok(total)
}

pub fn margin_matrix(p: &Profile) -> MarginMatrix {
    MarginMatrix::from_profile(p)
}

pub fn margin_graph(p: &Profile) -> MarginGraph {
    MarginMatrix::from_profile(p).graph()
}

pub fn condorcet_winner(p: &Profile) -> Option<Candidate> {
    let m = MarginMatrix::from_profile(p);
    m.condorcet_winner_index().map(|i| m.candidates()[i].clone())
}

pub fn condorcet_loser(p: &Profile) -> Option<Candidate> {
    let m = MarginMatrix::from_profile(p);
    m.condorcet_loser_index().map(|i| m.candidates()[i].clone())
}

pub fn defensible_set(p: &Profile) -> BTreeSet<Candidate> {
    MarginMatrix::from_profile(p).defensible_set()
}

pub fn margin_separation_holds(p: &Profile) -> bool {
    MarginMatrix::from_profile(p).separation_holds()
}

pub fn uniquely_weighted(p: &Profile) -> bool {
    MarginMatrix::from_profile(p).uniquely_weighted()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{alphabet, block_of_all_linear_orders};

    fn c(s: &str) -> Candidate {
        Candidate::new(s).unwrap()
    }

    fn profile(ballots: &[(&str, u64)]) -> Profile {
        Profile::from_ballots(ballots.iter().map(|(r, k)| (r.parse().unwrap(), *k))).unwrap()
    }

    #[test]
    fn single_voter_margins() {
        let p = profile(&[("a>b>c", 1)]);
        assert_eq!(margin(&p, &c("a"), &c("b")).unwrap(), 1);
        assert_eq!(margin(&p, &c("a"), &c("a")).unwrap(), 0);
        assert_eq!(condorcet_winner(&p), Some(c("a")));
        assert_eq!(condorcet_loser(&p), Some(c("c")));
        assert!(matches!(margin(&p, &c("a"), &c("z")), Err(ProfileError::UnknownCandidate(_))));
    }

    #[test]
    fn matrix_matches_pairwise_margin() {
        let p = profile(&[("a>b=c", 2), ("c>a>b", 3), ("b>c>a", 1)]);
        let m = margin_matrix(&p);
        for x in p.candidates() {
            for y in p.candidates() {
                assert_eq!(m.margin(x, y).unwrap(), margin(&p, x, y).unwrap());
            }
        }
    }

    #[test]
    fn block_has_no_edges() {
        let b = block_of_all_linear_orders(&alphabet(4), 1);
        assert!(margin_graph(&b).edges().is_empty());
    }

    #[test]
    fn separation_examples() {
        let m = MarginMatrix::from_edges(alphabet(3), &[(c("a"), c("b"), 3), (c("b"), c("c"), 4)]).unwrap();
        assert!(!m.separation_holds());
        let even = MarginMatrix::from_edges(alphabet(3), &[(c("a"), c("b"), 2), (c("b"), c("c"), 2), (c("c"), c("a"), 2)])
            .unwrap();
        assert!(even.separation_holds());
        // 1 and -1 on the same pair are two apart
        let one = MarginMatrix::from_edges(alphabet(2), &[(c("a"), c("b"), 1)]).unwrap();
        assert!(one.separation_holds());
    }

    #[test]
    fn uniquely_weighted_examples() {
        assert!(uniquely_weighted(&profile(&[("a>b", 1)])));
        assert!(!uniquely_weighted(&profile(&[("a>b>c", 1)])));
        assert!(!uniquely_weighted(&profile(&[("a>b", 1), ("b>a", 1)])));
    }

    #[test]
    fn defensible_contains_condorcet_winner() {
        let p = profile(&[("a>b>c", 3), ("b>c>a", 2)]);
        assert_eq!(condorcet_winner(&p), Some(c("a")));
        assert!(defensible_set(&p).contains(&c("a")));
    }

    #[test]
    fn widest_path_simple() {
        let m = MarginMatrix::from_edges(alphabet(3), &[(c("a"), c("b"), 5), (c("b"), c("c"), 3)]).unwrap();
        let g = m.graph();
        assert_eq!(widest_path_strength(&g, &c("a"), &c("b")).unwrap(), 5);
        assert_eq!(widest_path_strength(&g, &c("a"), &c("c")).unwrap(), 3);
        assert_eq!(widest_path_strength(&g, &c("c"), &c("a")).unwrap(), 0);
    }

    #[test]
    fn edges_round_trip_through_graph() {
        let p = profile(&[("a>b>c>d", 3), ("d>c>a>b", 2), ("b>d>a=c", 2)]);
        let m = margin_matrix(&p);
        assert_eq!(m.graph().to_matrix(), m);
    }

    #[test]
    fn edge_gap() {
        let m = MarginMatrix::from_edges(alphabet(3), &[(c("a"), c("b"), 14), (c("b"), c("c"), 18), (c("a"), c("c"), 22)])
            .unwrap();
        assert_eq!(m.min_edge_gap(), Some(4));
    }
}
