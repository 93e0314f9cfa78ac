//! Candidates, rankings (strict weak orders) and anonymous profiles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ProfileError;

/// A candidate label such as `a`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Candidate(String);

impl Candidate {
    pub fn new(label: impl Into<String>) -> Result<Self, ProfileError> {
        let label = label.into();
        if label.is_empty() {
            return Err(ProfileError::EmptyLabel);
        }
        if label
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | '|' | '>' | '=' | ':' | '#' | '{' | '}'))
        {
            return Err(ProfileError::InvalidLabel(label));
        }
        Ok(Candidate(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Candidate {
    type Error = ProfileError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Candidate::new(value)
    }
}

impl From<Candidate> for String {
    fn from(c: Candidate) -> String {
        c.0
    }
}

impl FromStr for Candidate {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Candidate::new(s.trim())
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Builds the candidates `a, b, c, ...` used by enumeration and search.
pub fn alphabet(k: usize) -> Vec<Candidate> {
    assert!(k <= 26, "at most 26 single-letter candidates");
    (0..k)
        .map(|i| Candidate(((b'a' + i as u8) as char).to_string()))
        .collect()
}

/// Parses a comma-separated candidate list.
pub fn parse_candidate_list(s: &str) -> Result<Vec<Candidate>, ProfileError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(Candidate::new)
        .collect()
}

/// Formats a candidate set as `{a, d}`.
pub fn format_set<'a>(set: impl IntoIterator<Item = &'a Candidate>) -> String {
    let items: Vec<&str> = set.into_iter().map(Candidate::as_str).collect();
    format!("{{{}}}", items.join(", "))
}

/// A strict weak order stored as a sequence of tie tiers, most preferred first.
///
/// Each tier is kept sorted by label so that equal orders compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ranking {
    tiers: Vec<Vec<Candidate>>,
}

impl Ranking {
    pub fn new(tiers: Vec<Vec<Candidate>>) -> Result<Self, ProfileError> {
        let mut seen = BTreeSet::new();
        let mut canonical = Vec::with_capacity(tiers.len());
        for mut tier in tiers {
            if tier.is_empty() {
                return Err(ProfileError::EmptyTier);
            }
            for c in &tier {
                if !seen.insert(c.clone()) {
                    return Err(ProfileError::DuplicateCandidate(c.clone()));
                }
            }
            tier.sort();
            canonical.push(tier);
        }
        if canonical.is_empty() {
            return Err(ProfileError::EmptyRanking);
        }
        Ok(Ranking { tiers: canonical })
    }

    /// A linear order listing candidates from best to worst.
    pub fn linear(order: impl IntoIterator<Item = Candidate>) -> Result<Self, ProfileError> {
        Ranking::new(order.into_iter().map(|c| vec![c]).collect())
    }

    /// Compact notation for single-letter candidates: `daceb` is d > a > c > e > b.
    pub fn from_compact(s: &str) -> Result<Self, ProfileError> {
        Ranking::linear(
            s.chars()
                .map(|c| Candidate::new(c.to_string()))
                .collect::<Result<Vec<_>, _>>()?,
        )
    }

    pub fn tiers(&self) -> &[Vec<Candidate>] {
        &self.tiers
    }

    pub fn is_linear(&self) -> bool {
        self.tiers.iter().all(|t| t.len() == 1)
    }

    pub fn candidates(&self) -> BTreeSet<Candidate> {
        self.tiers.iter().flatten().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.tiers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tiers.is_empty()
    }

    /// Index of the tier holding `c`.
    pub fn tier_of(&self, c: &Candidate) -> Option<usize> {
        self.tiers.iter().position(|t| t.contains(c))
    }

    /// The candidate ranked uniquely first, if the top tier is a singleton.
    pub fn unique_top(&self) -> Option<&Candidate> {
        match self.tiers.first() {
            Some(t) if t.len() == 1 => Some(&t[0]),
            _ => None,
        }
    }

    /// The candidate ranked uniquely last, if the bottom tier is a singleton.
    pub fn unique_bottom(&self) -> Option<&Candidate> {
        match self.tiers.last() {
            Some(t) if t.len() == 1 => Some(&t[0]),
            _ => None,
        }
    }

    /// The candidate ranked uniquely second-to-last, if that tier is a singleton.
    pub fn unique_second_to_last(&self) -> Option<&Candidate> {
        let n = self.tiers.len();
        if n < 2 {
            return None;
        }
        match &self.tiers[n - 2] {
            t if t.len() == 1 => Some(&t[0]),
            _ => None,
        }
    }

    pub fn reverse(&self) -> Ranking {
        Ranking {
            tiers: self.tiers.iter().rev().cloned().collect(),
        }
    }

    /// Drops `c` from its tier, removing the tier if it becomes empty.
    /// Returns `None` when `c` was the only candidate.
    pub fn without(&self, c: &Candidate) -> Option<Ranking> {
        let tiers: Vec<Vec<Candidate>> = self
            .tiers
            .iter()
            .map(|t| t.iter().filter(|x| *x != c).cloned().collect::<Vec<_>>())
            .filter(|t| !t.is_empty())
            .collect();
        if tiers.is_empty() {
            None
        } else {
            Some(Ranking { tiers })
        }
    }

    pub fn relabel(&self, map: &BTreeMap<Candidate, Candidate>) -> Result<Ranking, ProfileError> {
        Ranking::new(
            self.tiers
                .iter()
                .map(|t| t.iter().map(|c| map.get(c).cloned().unwrap_or_else(|| c.clone())).collect())
                .collect(),
        )
    }

    /// Tier position of each candidate, indexed like `candidates`.
    pub(crate) fn positions(&self, candidates: &[Candidate]) -> Vec<usize> {
        let mut pos = vec![usize::MAX; candidates.len()];
        for (k, tier) in self.tiers.iter().enumerate() {
            for c in tier {
                if let Ok(i) = candidates.binary_search(c) {
                    pos[i] = k;
                }
            }
        }
        pos
    }

    /// Tiers written in the profile file syntax, e.g. `d | a,c | b`.
    pub fn to_file_syntax(&self) -> String {
        self.tiers
            .iter()
            .map(|t| t.iter().map(Candidate::as_str).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self
            .tiers
            .iter()
            .map(|t| t.iter().map(Candidate::as_str).collect::<Vec<_>>().join("="))
            .collect::<Vec<_>>()
            .join(">");
        f.write_str(&s)
    }
}

/// Accepts `a>b=c>d` and the file syntax `a | b,c | d`.
impl FromStr for Ranking {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tier_sep, tie_seps): (char, &[char]) = if s.contains('|') {
            ('|', &[','])
        } else {
            ('>', &['=', ','])
        };
        let tiers = s
            .split(tier_sep)
            .map(|tier| {
                tier.split(tie_seps)
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(Candidate::new)
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ranking::new(tiers)
    }
}

impl Serialize for Ranking {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.tiers.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Ranking {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let tiers = Vec::<Vec<Candidate>>::deserialize(deserializer)?;
        Ranking::new(tiers).map_err(serde::de::Error::custom)
    }
}

/// An anonymous profile: a candidate set and a multiset of rankings over it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Profile {
    candidates: Vec<Candidate>,
    ballots: BTreeMap<Ranking, u64>,
}

impl Profile {
    /// Builds a profile, merging repeated rankings and dropping zero counts.
    pub fn new(
        candidates: impl IntoIterator<Item = Candidate>,
        ballots: impl IntoIterator<Item = (Ranking, u64)>,
    ) -> Result<Self, ProfileError> {
        let mut cands: Vec<Candidate> = Vec::new();
        for c in candidates {
            if cands.contains(&c) {
                return Err(ProfileError::DuplicateCandidate(c));
            }
            cands.push(c);
        }
        if cands.is_empty() {
            return Err(ProfileError::NoCandidates);
        }
        cands.sort();
        let expected: BTreeSet<Candidate> = cands.iter().cloned().collect();
        let mut map: BTreeMap<Ranking, u64> = BTreeMap::new();
        for (r, k) in ballots {
            if r.candidates() != expected {
                return Err(ProfileError::CandidateMismatch {
                    ranking: r.to_string(),
                });
            }
            if k > 0 {
                *map.entry(r).or_insert(0) += k;
            }
        }
        if map.is_empty() {
            return Err(ProfileError::NoVoters);
        }
        Ok(Profile {
            candidates: cands,
            ballots: map,
        })
    }

    /// Infers the candidate set from the first ranking.
    pub fn from_ballots(ballots: impl IntoIterator<Item = (Ranking, u64)>) -> Result<Self, ProfileError> {
        let ballots: Vec<(Ranking, u64)> = ballots.into_iter().collect();
        let first = ballots.first().ok_or(ProfileError::NoVoters)?;
        let cands = first.0.candidates();
        Profile::new(cands, ballots)
    }

    /// Sorted candidate list.
    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn candidate_set(&self) -> BTreeSet<Candidate> {
        self.candidates.iter().cloned().collect()
    }

    pub fn index_of(&self, c: &Candidate) -> Result<usize, ProfileError> {
        self.candidates
            .binary_search(c)
            .map_err(|_| ProfileError::UnknownCandidate(c.clone()))
    }

    pub fn ballots(&self) -> impl Iterator<Item = (&Ranking, u64)> + '_ {
        self.ballots.iter().map(|(r, k)| (r, *k))
    }

    pub fn num_rankings(&self) -> usize {
        self.ballots.len()
    }

    pub fn count(&self, r: &Ranking) -> u64 {
        self.ballots.get(r).copied().unwrap_or(0)
    }

    pub fn num_voters(&self) -> u64 {
        self.ballots.values().sum()
    }

    pub fn is_linear(&self) -> bool {
        self.ballots.keys().all(Ranking::is_linear)
    }

    fn check_ranking(&self, r: &Ranking) -> Result<(), ProfileError> {
        if r.len() != self.candidates.len() || r.candidates() != self.candidate_set() {
            return Err(ProfileError::CandidateMismatch {
                ranking: r.to_string(),
            });
        }
        Ok(())
    }

    /// Multiset union of the two ballot collections.
    pub fn add(&self, other: &Profile) -> Result<Profile, ProfileError> {
        if self.candidates != other.candidates {
            return Err(ProfileError::CandidateSetMismatch);
        }
        let mut ballots = self.ballots.clone();
        for (r, k) in &other.ballots {
            *ballots.entry(r.clone()).or_insert(0) += k;
        }
        Ok(Profile {
            candidates: self.candidates.clone(),
            ballots,
        })
    }

    /// Adds `k` voters with ranking `r`. Adding zero voters is a no-op.
    pub fn with_ballots(&self, r: &Ranking, k: u64) -> Result<Profile, ProfileError> {
        self.check_ranking(r)?;
        let mut out = self.clone();
        if k > 0 {
            *out.ballots.entry(r.clone()).or_insert(0) += k;
        }
        Ok(out)
    }

    /// Removes `k` voters whose ranking is exactly `r`.
    pub fn remove_ballots(&self, r: &Ranking, k: u64) -> Result<Profile, ProfileError> {
        self.check_ranking(r)?;
        let available = self.count(r);
        if available < k {
            return Err(ProfileError::InsufficientBallots {
                ranking: r.to_string(),
                requested: k,
                available,
            });
        }
        let mut out = self.clone();
        if available == k {
            out.ballots.remove(r);
        } else {
            *out.ballots.get_mut(r).expect("present") -= k;
        }
        if out.ballots.is_empty() {
            return Err(ProfileError::NoVoters);
        }
        Ok(out)
    }

    /// Replaces every voter by `n` copies.
    pub fn scale(&self, n: u64) -> Profile {
        assert!(n >= 1, "scale factor must be positive");
        Profile {
            candidates: self.candidates.clone(),
            ballots: self.ballots.iter().map(|(r, k)| (r.clone(), k * n)).collect(),
        }
    }

    /// Restricts every ballot to the remaining candidates, merging rankings that coincide.
    pub fn remove_candidate(&self, c: &Candidate) -> Result<Profile, ProfileError> {
        self.index_of(c)?;
        if self.candidates.len() < 2 {
            return Err(ProfileError::LastCandidate);
        }
        let mut ballots: BTreeMap<Ranking, u64> = BTreeMap::new();
        for (r, k) in &self.ballots {
            let restricted = r.without(c).expect("at least one candidate remains");
            *ballots.entry(restricted).or_insert(0) += k;
        }
        Ok(Profile {
            candidates: self.candidates.iter().filter(|x| *x != c).cloned().collect(),
            ballots,
        })
    }

    /// Renames candidates; `map` must be injective on the candidate set.
    pub fn relabel(&self, map: &BTreeMap<Candidate, Candidate>) -> Result<Profile, ProfileError> {
        let cands: Vec<Candidate> = self
            .candidates
            .iter()
            .map(|c| map.get(c).cloned().unwrap_or_else(|| c.clone()))
            .collect();
        let ballots = self
            .ballots
            .iter()
            .map(|(r, k)| Ok((r.relabel(map)?, *k)))
            .collect::<Result<Vec<_>, ProfileError>>()?;
        Profile::new(cands, ballots)
    }
}

#[derive(Serialize)]
struct BallotOut<'a> {
    count: u64,
    tiers: &'a [Vec<Candidate>],
}

impl Serialize for Profile {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let ballots: Vec<BallotOut<'_>> = self
            .ballots
            .iter()
            .map(|(r, k)| BallotOut {
                count: *k,
                tiers: r.tiers(),
            })
            .collect();
        let mut st = serializer.serialize_struct("Profile", 2)?;
        st.serialize_field("candidates", &self.candidates)?;
        st.serialize_field("ballots", &ballots)?;
        st.end()
    }
}

/// `P + Q` for profiles over the same candidates.
pub fn add_profiles(p: &Profile, q: &Profile) -> Result<Profile, ProfileError> {
    p.add(q)
}

pub fn reverse_ranking(r: &Ranking) -> Ranking {
    r.reverse()
}

/// All linear orders of `xs`, sorted by canonical form.
pub fn enumerate_linear_orders(xs: &[Candidate]) -> Vec<Ranking> {
    let mut items: Vec<Candidate> = xs.to_vec();
    items.sort();
    items.dedup();
    let mut out = Vec::new();
    permute(&mut items, 0, &mut out);
    out.sort();
    out
}

fn permute(items: &mut Vec<Candidate>, k: usize, out: &mut Vec<Ranking>) {
    if k == items.len() {
        out.push(Ranking {
            tiers: items.iter().map(|c| vec![c.clone()]).collect(),
        });
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// All strict weak orders (ordered set partitions) of `xs`, sorted by canonical form.
pub fn enumerate_weak_orders(xs: &[Candidate]) -> Vec<Ranking> {
    let mut items: Vec<Candidate> = xs.to_vec();
    items.sort();
    items.dedup();
    assert!(items.len() < 32, "too many candidates to enumerate");
    let mut out = Vec::new();
    let full: u32 = if items.is_empty() { 0 } else { (1u32 << items.len()) - 1 };
    let mut tiers = Vec::new();
    partitions(&items, full, &mut tiers, &mut out);
    out.sort();
    out
}

fn partitions(items: &[Candidate], rest: u32, tiers: &mut Vec<Vec<Candidate>>, out: &mut Vec<Ranking>) {
    if rest == 0 {
        if !tiers.is_empty() {
            out.push(Ranking { tiers: tiers.clone() });
        }
        return;
    }
    // iterate over the nonempty submasks of `rest`
    let mut sub = rest;
    while sub > 0 {
        let tier: Vec<Candidate> = (0..items.len())
            .filter(|i| sub >> i & 1 == 1)
            .map(|i| items[i].clone())
            .collect();
        tiers.push(tier);
        partitions(items, rest & !sub, tiers, out);
        tiers.pop();
        sub = (sub - 1) & rest;
    }
}

/// `copies` voters for every linear order of `xs`.
pub fn block_of_all_linear_orders(xs: &[Candidate], copies: u64) -> Profile {
    assert!(copies >= 1, "block needs at least one copy");
    Profile::new(
        xs.iter().cloned(),
        enumerate_linear_orders(xs).into_iter().map(|r| (r, copies)),
    )
    .expect("a block of linear orders is a valid profile")
}
