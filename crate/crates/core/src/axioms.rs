//! Instance checkers and bounded violation searches for voting axioms.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deltas::{effect_of, expand, BallotMode, Effect};
use crate::error::{AxiomError, MethodError, ProfileError};
use crate::format::ProfileDocument;
use crate::margins::MarginMatrix;
use crate::methods::{MethodId, WinnerSet};
use crate::profile::{alphabet, block_of_all_linear_orders, format_set, Candidate, Profile, Ranking};
use crate::synth::{mcgarvey_debord_realize, TargetMargins};

/// Largest number of added voters accepted by the n-voter resolvability check.
pub const DEFAULT_RESOLVABILITY_LIMIT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxiomId {
    CondorcetWinner,
    CondorcetLoser,
    PositiveInvolvement,
    NegativeInvolvement,
    Resolvability,
    NResolvability,
    QuasiResoluteness,
    StrictPositiveInvolvement,
    IndependenceOfClones,
    BlockPreservation,
    PositiveNegativeInvolvement,
    BulletVotePositiveInvolvement,
}

impl AxiomId {
    pub const ALL: [AxiomId; 12] = [
        AxiomId::CondorcetWinner,
        AxiomId::CondorcetLoser,
        AxiomId::PositiveInvolvement,
        AxiomId::NegativeInvolvement,
        AxiomId::Resolvability,
        AxiomId::NResolvability,
        AxiomId::QuasiResoluteness,
        AxiomId::StrictPositiveInvolvement,
        AxiomId::IndependenceOfClones,
        AxiomId::BlockPreservation,
        AxiomId::PositiveNegativeInvolvement,
        AxiomId::BulletVotePositiveInvolvement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxiomId::CondorcetWinner => "condorcet-winner",
            AxiomId::CondorcetLoser => "condorcet-loser",
            AxiomId::PositiveInvolvement => "positive-involvement",
            AxiomId::NegativeInvolvement => "negative-involvement",
            AxiomId::Resolvability => "resolvability",
            AxiomId::NResolvability => "n-resolvability",
            AxiomId::QuasiResoluteness => "quasi-resoluteness",
            AxiomId::StrictPositiveInvolvement => "strict-positive-involvement",
            AxiomId::IndependenceOfClones => "independence-of-clones",
            AxiomId::BlockPreservation => "block-preservation",
            AxiomId::PositiveNegativeInvolvement => "positive-negative-involvement",
            AxiomId::BulletVotePositiveInvolvement => "bullet-vote-positive-involvement",
        }
    }

    /// Axioms whose instances add a single ballot to the base profile.
    pub fn takes_ballot(self) -> bool {
        matches!(
            self,
            AxiomId::PositiveInvolvement
                | AxiomId::NegativeInvolvement
                | AxiomId::StrictPositiveInvolvement
                | AxiomId::PositiveNegativeInvolvement
                | AxiomId::BulletVotePositiveInvolvement
        )
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxiomId {
    type Err = AxiomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxiomId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| AxiomError::UnknownAxiom(s.to_string()))
    }
}

/// A change applied to a base profile by an axiom instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Perturbation {
    AddBallots(Profile),
    RemoveCandidate { candidate: Candidate, clones: BTreeSet<Candidate> },
    AddBlock,
}

impl Perturbation {
    pub fn apply(&self, p: &Profile) -> Result<Profile, ProfileError> {
        match self {
            Perturbation::AddBallots(d) => p.add(d),
            Perturbation::RemoveCandidate { candidate, .. } => p.remove_candidate(candidate),
            Perturbation::AddBlock => p.add(&block_of_all_linear_orders(p.candidates(), 1)),
        }
    }

    /// The ballot of a one-voter delta.
    pub fn single_ballot(&self) -> Option<&Ranking> {
        match self {
            Perturbation::AddBallots(d) if d.num_voters() == 1 => d.ballots().next().map(|(r, _)| r),
            _ => None,
        }
    }

    pub fn ballot(candidates: &[Candidate], r: Ranking) -> Result<Perturbation, ProfileError> {
        Ok(Perturbation::AddBallots(Profile::new(candidates.iter().cloned(), [(r, 1)])?))
    }
}

/// Extra parameters of resolvability checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CheckOptions {
    pub mode: BallotMode,
    pub n: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            mode: BallotMode::Linear,
            n: 1,
        }
    }
}

/// A concrete instance on which a method violates an axiom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViolationWitness {
    pub axiom: AxiomId,
    pub method: MethodId,
    pub base: Profile,
    pub delta: Option<Perturbation>,
    pub before: WinnerSet,
    pub after: Option<WinnerSet>,
    pub focus: Option<Candidate>,
    pub partner: Option<Candidate>,
    pub options: CheckOptions,
}

impl ViolationWitness {
    /// Re-runs the instance check; true when the violation reproduces.
    pub fn replay(&self) -> Result<bool, AxiomError> {
        let v = check_instance(self.axiom, self.method, &self.base, self.delta.as_ref(), self.options)?;
        Ok(v.is_violation())
    }

    pub fn to_document(&self) -> ProfileDocument {
        ProfileDocument {
            profile: self.base.clone(),
            delta: self.delta.clone(),
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} violates {}: winners {}", self.method, self.axiom, self.before);
        if let Some(after) = &self.after {
            s.push_str(&format!(" become {after}"));
        }
        if let Some(x) = &self.focus {
            s.push_str(&format!(" (focus {x}"));
            if let Some(y) = &self.partner {
                s.push_str(&format!(", partner {y}"));
            }
            s.push(')');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict", content = "witness")]
pub enum Verdict {
    Pass,
    /// The axiom's antecedent does not apply.
    Vacuous,
    Violation(Box<ViolationWitness>),
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violation(_))
    }

    pub fn witness(&self) -> Option<&ViolationWitness> {
        match self {
            Verdict::Violation(w) => Some(w),
            _ => None,
        }
    }
}

struct Instance<'a> {
    axiom: AxiomId,
    method: MethodId,
    base: &'a Profile,
    options: CheckOptions,
}

impl Instance<'_> {
    fn violation(
        &self,
        delta: Option<Perturbation>,
        before: WinnerSet,
        after: Option<WinnerSet>,
        focus: Option<Candidate>,
        partner: Option<Candidate>,
    ) -> Verdict {
        Verdict::Violation(Box::new(ViolationWitness {
            axiom: self.axiom,
            method: self.method,
            base: self.base.clone(),
            delta,
            before,
            after,
            focus,
            partner,
            options: self.options,
        }))
    }
}

fn instance(axiom: AxiomId, method: MethodId, base: &Profile) -> Instance<'_> {
    Instance {
        axiom,
        method,
        base,
        options: CheckOptions::default(),
    }
}

fn check_ballot(p: &Profile, b: &Ranking) -> Result<(), AxiomError> {
    if b.candidates() != p.candidate_set() || b.len() != p.candidates().len() {
        return Err(AxiomError::MalformedBallot(format!(
            "{b} does not rank exactly the profile's candidates"
        )));
    }
    Ok(())
}

pub fn check_condorcet_winner(f: MethodId, p: &Profile) -> Result<Verdict, AxiomError> {
    let m = MarginMatrix::from_profile(p);
    let Some(x) = m.condorcet_winner_index() else {
        return Ok(Verdict::Vacuous);
    };
    let x = m.candidates()[x].clone();
    let won = f.winners_of_matrix(&m)?;
    if won.is_singleton(&x) {
        Ok(Verdict::Pass)
    } else {
        Ok(instance(AxiomId::CondorcetWinner, f, p).violation(None, won, None, Some(x), None))
    }
}

pub fn check_condorcet_loser(f: MethodId, p: &Profile) -> Result<Verdict, AxiomError> {
    let m = MarginMatrix::from_profile(p);
    if m.size() < 2 {
        return Ok(Verdict::Vacuous);
    }
    let Some(x) = m.condorcet_loser_index() else {
        return Ok(Verdict::Vacuous);
    };
    let x = m.candidates()[x].clone();
    let won = f.winners_of_matrix(&m)?;
    if won.contains(&x) {
        Ok(instance(AxiomId::CondorcetLoser, f, p).violation(None, won, None, Some(x), None))
    } else {
        Ok(Verdict::Pass)
    }
}

fn with_one(p: &Profile, b: &Ranking) -> Result<Profile, AxiomError> {
    Ok(p.with_ballots(b, 1)?)
}

/// Adding a ballot that ranks a winner uniquely first keeps that candidate winning.
pub fn check_positive_involvement_instance(f: MethodId, p: &Profile, b: &Ranking) -> Result<Verdict, AxiomError> {
    check_ballot(p, b)?;
    let x = b
        .unique_top()
        .ok_or_else(|| AxiomError::MalformedBallot(format!("{b} has no unique first candidate")))?
        .clone();
    let before = f.winners(p)?;
    if !before.contains(&x) {
        return Ok(Verdict::Vacuous);
    }
    let after = f.winners(&with_one(p, b)?)?;
    if after.contains(&x) {
        return Ok(Verdict::Pass);
    }
    let delta = Perturbation::ballot(p.candidates(), b.clone())?;
    Ok(instance(AxiomId::PositiveInvolvement, f, p).violation(Some(delta), before, Some(after), Some(x), None))
}

/// Adding a ballot that ranks a loser uniquely last keeps that candidate losing.
pub fn check_negative_involvement_instance(f: MethodId, p: &Profile, b: &Ranking) -> Result<Verdict, AxiomError> {
    check_ballot(p, b)?;
    let x = b
        .unique_bottom()
        .ok_or_else(|| AxiomError::MalformedBallot(format!("{b} has no unique last candidate")))?
        .clone();
    let before = f.winners(p)?;
    if before.contains(&x) {
        return Ok(Verdict::Vacuous);
    }
    let after = f.winners(&with_one(p, b)?)?;
    if !after.contains(&x) {
        return Ok(Verdict::Pass);
    }
    let delta = Perturbation::ballot(p.candidates(), b.clone())?;
    Ok(instance(AxiomId::NegativeInvolvement, f, p).violation(Some(delta), before, Some(after), Some(x), None))
}

/// Like positive involvement, but the focus must become the unique winner.
pub fn check_strict_positive_involvement(f: MethodId, p: &Profile, b: &Ranking) -> Result<Verdict, AxiomError> {
    check_ballot(p, b)?;
    let x = b
        .unique_top()
        .ok_or_else(|| AxiomError::MalformedBallot(format!("{b} has no unique first candidate")))?
        .clone();
    let before = f.winners(p)?;
    if !before.contains(&x) {
        return Ok(Verdict::Vacuous);
    }
    let after = f.winners(&with_one(p, b)?)?;
    if after.is_singleton(&x) {
        return Ok(Verdict::Pass);
    }
    let delta = Perturbation::ballot(p.candidates(), b.clone())?;
    Ok(instance(AxiomId::StrictPositiveInvolvement, f, p).violation(Some(delta), before, Some(after), Some(x), None))
}

/// A ballot ranking a winner x uniquely first and a loser y uniquely last must not
/// leave x losing and y winning.
pub fn check_positive_negative_involvement(f: MethodId, p: &Profile, b: &Ranking) -> Result<Verdict, AxiomError> {
    check_ballot(p, b)?;
    let (Some(x), Some(y)) = (b.unique_top(), b.unique_bottom()) else {
        return Err(AxiomError::MalformedBallot(format!(
            "{b} needs a unique first and a unique last candidate"
        )));
    };
    if x == y {
        return Err(AxiomError::MalformedBallot(format!("{b} ranks a single candidate")));
    }
    let before = f.winners(p)?;
    if !before.contains(x) || before.contains(y) {
        return Ok(Verdict::Vacuous);
    }
    let after = f.winners(&with_one(p, b)?)?;
    if !after.contains(x) && after.contains(y) {
        let delta = Perturbation::ballot(p.candidates(), b.clone())?;
        return Ok(instance(AxiomId::PositiveNegativeInvolvement, f, p).violation(
            Some(delta),
            before,
            Some(after),
            Some(x.clone()),
            Some(y.clone()),
        ));
    }
    Ok(Verdict::Pass)
}

/// The ballot ranking `x` first and every other candidate tied below it.
pub fn bullet_ballot(candidates: &[Candidate], x: &Candidate) -> Result<Ranking, ProfileError> {
    let rest: Vec<Candidate> = candidates.iter().filter(|c| *c != x).cloned().collect();
    let mut tiers = vec![vec![x.clone()]];
    if !rest.is_empty() {
        tiers.push(rest);
    }
    Ranking::new(tiers)
}

/// Positive involvement restricted to bullet ballots.
pub fn check_bullet_vote_positive_involvement(f: MethodId, p: &Profile, b: &Ranking) -> Result<Verdict, AxiomError> {
    check_ballot(p, b)?;
    let bullet = b.tiers().len() <= 2 && b.tiers()[0].len() == 1;
    if !bullet {
        return Err(AxiomError::MalformedBallot(format!("{b} is not a bullet ballot")));
    }
    let x = b.tiers()[0][0].clone();
    let before = f.winners(p)?;
    if !before.contains(&x) {
        return Ok(Verdict::Vacuous);
    }
    let after = f.winners(&with_one(p, b)?)?;
    if after.contains(&x) {
        return Ok(Verdict::Pass);
    }
    let delta = Perturbation::ballot(p.candidates(), b.clone())?;
    Ok(instance(AxiomId::BulletVotePositiveInvolvement, f, p).violation(
        Some(delta),
        before,
        Some(after),
        Some(x),
        None,
    ))
}

pub fn check_resolvability(f: MethodId, p: &Profile, mode: BallotMode) -> Result<Verdict, AxiomError> {
    check_n_voter_resolvability(f, p, 1, mode)
}

/// Every tied winner can be made the unique winner by adding at most `n` ballots.
pub fn check_n_voter_resolvability(f: MethodId, p: &Profile, n: usize, mode: BallotMode) -> Result<Verdict, AxiomError> {
    if n > DEFAULT_RESOLVABILITY_LIMIT {
        return Err(AxiomError::BoundExceeded {
            requested: n,
            limit: DEFAULT_RESOLVABILITY_LIMIT,
        });
    }
    if n == 0 {
        return Err(AxiomError::BoundExceeded { requested: 0, limit: DEFAULT_RESOLVABILITY_LIMIT });
    }
    let m = MarginMatrix::from_profile(p);
    let before_mask = f.winner_mask(&m)?;
    if before_mask.count_ones() <= 1 {
        return Ok(Verdict::Vacuous);
    }
    let unresolved = resolvable_mask(f, &m, n, mode)?;
    let axiom = if n == 1 { AxiomId::Resolvability } else { AxiomId::NResolvability };
    match (0..m.size()).find(|i| unresolved >> i & 1 == 1) {
        None => Ok(Verdict::Pass),
        Some(i) => {
            let mut inst = instance(axiom, f, p);
            inst.options = CheckOptions { mode, n };
            let before = WinnerSet(m.mask_to_set(before_mask));
            Ok(inst.violation(None, before, None, Some(m.candidates()[i].clone()), None))
        }
    }
}

/// Winners of `m` that no multiset of at most `n` added ballots makes the unique winner.
fn resolvable_mask(f: MethodId, m: &MarginMatrix, n: usize, mode: BallotMode) -> Result<u64, MethodError> {
    let size = m.size();
    let mut want = f.winner_mask(m)?;
    let unit: Vec<Effect> = mode.ballots(m.candidates()).iter().map(|r| effect_of(m.candidates(), r)).collect();
    let width = unit.first().map(|e| e.len()).unwrap_or(0);
    let zero: Effect = vec![0i16; width].into_boxed_slice();
    let mut seen: HashSet<Effect> = HashSet::from([zero.clone()]);
    let mut frontier = vec![zero];
    for _ in 0..n {
        let mut next = Vec::new();
        for base in &frontier {
            for u in &unit {
                let e: Effect = base.iter().zip(u.iter()).map(|(a, b)| a + b).collect();
                if !seen.insert(e.clone()) {
                    continue;
                }
                let mask = f.winner_mask(&m.plus_values(&expand(size, &e)))?;
                if mask.count_ones() == 1 && want & mask != 0 {
                    want &= !mask;
                    if want == 0 {
                        return Ok(0);
                    }
                }
                next.push(e);
            }
        }
        frontier = next;
    }
    Ok(want)
}

/// A uniquely weighted profile has a single winner.
pub fn check_quasi_resoluteness(f: MethodId, p: &Profile) -> Result<Verdict, AxiomError> {
    let m = MarginMatrix::from_profile(p);
    if !m.uniquely_weighted() {
        return Ok(Verdict::Vacuous);
    }
    let won = f.winners_of_matrix(&m)?;
    if won.len() == 1 {
        Ok(Verdict::Pass)
    } else {
        Ok(instance(AxiomId::QuasiResoluteness, f, p).violation(None, won, None, None, None))
    }
}

fn clone_mask_holds(p: &Profile, mask: u64) -> bool {
    let n = p.candidates().len();
    let size = mask.count_ones() as usize;
    if size < 2 || size >= n {
        return false;
    }
    p.ballots().all(|(r, _)| {
        let pos = r.positions(p.candidates());
        let inside = (0..n).filter(|i| mask >> i & 1 == 1);
        let lo = inside.clone().map(|i| pos[i]).min().unwrap_or(0);
        let hi = inside.map(|i| pos[i]).max().unwrap_or(0);
        (0..n).filter(|i| mask >> i & 1 == 0).all(|i| pos[i] < lo || pos[i] > hi)
    })
}

/// Whether every voter ranks each outside candidate above all of `set` or below all of it.
pub fn is_clone_set(p: &Profile, set: &BTreeSet<Candidate>) -> Result<bool, AxiomError> {
    let mut mask = 0u64;
    for c in set {
        mask |= 1 << p.index_of(c)?;
    }
    Ok(clone_mask_holds(p, mask))
}

/// Every clone set of the profile, smallest first.
pub fn all_clone_sets(p: &Profile) -> Vec<BTreeSet<Candidate>> {
    let n = p.candidates().len();
    assert!(n <= 20, "clone enumeration is exponential in the number of candidates");
    let mut masks: Vec<u64> = (0u64..1 << n).filter(|&m| clone_mask_holds(p, m)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks.into_iter().map(|m| mask_set(p.candidates(), m)).collect()
}

fn mask_set(xs: &[Candidate], mask: u64) -> BTreeSet<Candidate> {
    (0..xs.len()).filter(|i| mask >> i & 1 == 1).map(|i| xs[i].clone()).collect()
}

/// Clone sets not contained in a larger clone set.
pub fn detect_clone_sets(p: &Profile) -> Vec<BTreeSet<Candidate>> {
    if p.candidates().len() < 3 {
        return Vec::new();
    }
    let all = all_clone_sets(p);
    all.iter()
        .filter(|c| !all.iter().any(|d| d.len() > c.len() && c.is_subset(d)))
        .cloned()
        .collect()
}

/// Removing clone `c` leaves non-clone winners unchanged and keeps whether some clone wins.
pub fn check_independence_of_clones(
    f: MethodId,
    p: &Profile,
    c: &Candidate,
    clones: &BTreeSet<Candidate>,
) -> Result<Verdict, AxiomError> {
    if !clones.contains(c) || !is_clone_set(p, clones)? {
        return Err(AxiomError::NotCloneSet(format_set(clones)));
    }
    let before = f.winners(p)?;
    let after = f.winners(&p.remove_candidate(c)?)?;
    let outside_same = p
        .candidates()
        .iter()
        .filter(|x| !clones.contains(*x))
        .find(|x| before.contains(x) != after.contains(x));
    let clone_wins = |w: &WinnerSet| w.iter().any(|x| clones.contains(x));
    if outside_same.is_none() && clone_wins(&before) == clone_wins(&after) {
        return Ok(Verdict::Pass);
    }
    let delta = Perturbation::RemoveCandidate {
        candidate: c.clone(),
        clones: clones.clone(),
    };
    Ok(instance(AxiomId::IndependenceOfClones, f, p).violation(
        Some(delta),
        before,
        Some(after),
        outside_same.cloned(),
        Some(c.clone()),
    ))
}

/// Adding one copy of every linear order never removes a winner.
pub fn check_block_preservation(f: MethodId, p: &Profile) -> Result<Verdict, AxiomError> {
    let before = f.winners(p)?;
    let after = f.winners(&Perturbation::AddBlock.apply(p)?)?;
    if before.0.is_subset(&after.0) {
        return Ok(Verdict::Pass);
    }
    Ok(instance(AxiomId::BlockPreservation, f, p).violation(Some(Perturbation::AddBlock), before, Some(after), None, None))
}

/// Dispatches to the checker for `axiom`, taking the instance's extra input from `delta`.
pub fn check_instance(
    axiom: AxiomId,
    f: MethodId,
    p: &Profile,
    delta: Option<&Perturbation>,
    options: CheckOptions,
) -> Result<Verdict, AxiomError> {
    let ballot = || -> Result<&Ranking, AxiomError> {
        let d = delta.ok_or_else(|| AxiomError::MissingInput(format!("{axiom} needs a one-ballot delta")))?;
        d.single_ballot()
            .ok_or_else(|| AxiomError::MissingInput(format!("{axiom} needs exactly one added ballot")))
    };
    match axiom {
        AxiomId::CondorcetWinner => check_condorcet_winner(f, p),
        AxiomId::CondorcetLoser => check_condorcet_loser(f, p),
        AxiomId::PositiveInvolvement => check_positive_involvement_instance(f, p, ballot()?),
        AxiomId::NegativeInvolvement => check_negative_involvement_instance(f, p, ballot()?),
        AxiomId::StrictPositiveInvolvement => check_strict_positive_involvement(f, p, ballot()?),
        AxiomId::PositiveNegativeInvolvement => check_positive_negative_involvement(f, p, ballot()?),
        AxiomId::BulletVotePositiveInvolvement => check_bullet_vote_positive_involvement(f, p, ballot()?),
        AxiomId::Resolvability => check_resolvability(f, p, options.mode),
        AxiomId::NResolvability => check_n_voter_resolvability(f, p, options.n, options.mode),
        AxiomId::QuasiResoluteness => check_quasi_resoluteness(f, p),
        AxiomId::BlockPreservation => check_block_preservation(f, p),
        AxiomId::IndependenceOfClones => match delta {
            Some(Perturbation::RemoveCandidate { candidate, clones }) => {
                check_independence_of_clones(f, p, candidate, clones)
            }
            _ => Err(AxiomError::MissingInput(
                "independence-of-clones needs a `remove c clones ...` delta".into(),
            )),
        },
    }
}

/// Every violation of `axiom` on base profile `p`, over all single-ballot deltas of
/// the right shape (or clone removals); returns the first in canonical order.
pub fn find_violation(axiom: AxiomId, f: MethodId, p: &Profile, options: CheckOptions) -> Result<Option<ViolationWitness>, AxiomError> {
    let xs = p.candidates();
    let first = |v: Verdict| match v {
        Verdict::Violation(w) => Some(*w),
        _ => None,
    };
    let ballots = || options.mode.ballots(xs);
    match axiom {
        AxiomId::PositiveInvolvement | AxiomId::StrictPositiveInvolvement => {
            for b in ballots().into_iter().filter(|b| b.unique_top().is_some()) {
                if let Some(w) = first(check_instance(axiom, f, p, Some(&Perturbation::ballot(xs, b)?), options)?) {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
        AxiomId::NegativeInvolvement => {
            for b in ballots().into_iter().filter(|b| b.unique_bottom().is_some()) {
                if let Some(w) = first(check_instance(axiom, f, p, Some(&Perturbation::ballot(xs, b)?), options)?) {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
        AxiomId::PositiveNegativeInvolvement => {
            let shaped = ballots()
                .into_iter()
                .filter(|b| b.len() >= 2 && b.unique_top().is_some() && b.unique_bottom().is_some());
            for b in shaped {
                if let Some(w) = first(check_instance(axiom, f, p, Some(&Perturbation::ballot(xs, b)?), options)?) {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
        AxiomId::BulletVotePositiveInvolvement => {
            for x in xs {
                let b = bullet_ballot(xs, x)?;
                if let Some(w) = first(check_instance(axiom, f, p, Some(&Perturbation::ballot(xs, b)?), options)?) {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
        AxiomId::IndependenceOfClones => {
            if xs.len() < 3 {
                return Ok(None);
            }
            for clones in all_clone_sets(p) {
                for c in &clones {
                    if let Some(w) = first(check_independence_of_clones(f, p, c, &clones)?) {
                        return Ok(Some(w));
                    }
                }
            }
            Ok(None)
        }
        _ => Ok(first(check_instance(axiom, f, p, None, options)?)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SearchStrategy {
    /// Profiles in order of candidates, voters, then lexicographic ballot multisets.
    Exhaustive,
    Random { samples: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SearchSpace {
    Profiles,
    /// Same-parity margin matrices with entries bounded by `max_weight`, realized as profiles.
    MarginGraphs { max_weight: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    pub min_candidates: usize,
    pub max_candidates: usize,
    pub max_voters: u64,
    pub strategy: SearchStrategy,
    pub seed: u64,
    pub mode: BallotMode,
    pub space: SearchSpace,
    /// Added-voter bound for n-voter resolvability.
    pub n: usize,
    /// Stop after this many base profiles.
    pub max_instances: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            min_candidates: 3,
            max_candidates: 3,
            max_voters: 9,
            strategy: SearchStrategy::Exhaustive,
            seed: 0,
            mode: BallotMode::Linear,
            space: SearchSpace::Profiles,
            n: 2,
            max_instances: 2_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HuntOutcome {
    pub witness: Option<ViolationWitness>,
    pub instances: u64,
    /// Instances skipped because Ranked Pairs tie-breaking exceeded its cap.
    pub skipped: u64,
    /// The search stopped on its budget without a witness.
    pub budget_exhausted: bool,
    pub seed: u64,
}

enum Probe {
    Clean,
    Skipped,
    Found(Box<ViolationWitness>),
}

fn probe(axiom: AxiomId, f: MethodId, p: &Profile, options: CheckOptions) -> Result<Probe, AxiomError> {
    match find_violation(axiom, f, p, options) {
        Ok(Some(w)) => Ok(Probe::Found(Box::new(w))),
        Ok(None) => Ok(Probe::Clean),
        Err(AxiomError::Method(MethodError::TieExplosion { .. })) => Ok(Probe::Skipped),
        Err(e) => Err(e),
    }
}

/// Searches for a violation of `axiom` by `f`. Deterministic for a given budget, and
/// the witness is the first in search order (fewest voters first).
pub fn hunt_violations(f: MethodId, axiom: AxiomId, budget: &SearchBudget) -> Result<HuntOutcome, AxiomError> {
    let options = CheckOptions {
        mode: budget.mode,
        n: if axiom == AxiomId::Resolvability { 1 } else { budget.n },
    };
    if axiom == AxiomId::NResolvability && options.n > DEFAULT_RESOLVABILITY_LIMIT {
        return Err(AxiomError::BoundExceeded {
            requested: options.n,
            limit: DEFAULT_RESOLVABILITY_LIMIT,
        });
    }
    let mut out = HuntOutcome {
        witness: None,
        instances: 0,
        skipped: 0,
        budget_exhausted: false,
        seed: budget.seed,
    };
    match budget.strategy {
        SearchStrategy::Random { samples } => {
            let samples = samples.min(budget.max_instances);
            let results: Vec<(u64, Probe)> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let p = random_profile(budget, i);
                    probe(axiom, f, &p, options).map(|r| (p.num_voters(), r))
                })
                .collect::<Result<_, _>>()?;
            out.instances = samples;
            let mut best: Option<(u64, u64, Box<ViolationWitness>)> = None;
            for (i, (voters, r)) in results.into_iter().enumerate() {
                match r {
                    Probe::Found(w) => {
                        if best.as_ref().is_none_or(|(v, _, _)| voters < *v) {
                            best = Some((voters, i as u64, w));
                        }
                    }
                    Probe::Skipped => out.skipped += 1,
                    Probe::Clean => {}
                }
            }
            out.witness = best.map(|(_, _, w)| *w);
            // sampling never proves absence
            out.budget_exhausted = out.witness.is_none();
        }
        SearchStrategy::Exhaustive => {
            for k in budget.min_candidates..=budget.max_candidates {
                let graphs = match budget.space {
                    SearchSpace::Profiles => None,
                    SearchSpace::MarginGraphs { max_weight } => Some(margin_graph_layers(k, max_weight, budget.max_voters)),
                };
                let layer_count = graphs.as_ref().map_or(budget.max_voters as usize, |g| g.len());
                for li in 0..layer_count {
                    let remaining = budget.max_instances - out.instances;
                    let (layer, truncated) = match &graphs {
                        None => profile_layer(k, li as u64 + 1, budget.mode, remaining),
                        Some(g) => {
                            let take = g[li].len().min(remaining as usize);
                            (g[li][..take].to_vec(), take < g[li].len())
                        }
                    };
                    let found = layer
                        .par_iter()
                        .map(|p| probe(axiom, f, p, options))
                        .collect::<Result<Vec<_>, _>>()?;
                    out.instances += layer.len() as u64;
                    for r in found {
                        match r {
                            Probe::Found(w) => {
                                out.witness = Some(*w);
                                return Ok(out);
                            }
                            Probe::Skipped => out.skipped += 1,
                            Probe::Clean => {}
                        }
                    }
                    if truncated {
                        out.budget_exhausted = true;
                        return Ok(out);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Profiles on `k` candidates with exactly `v` voters in lexicographic order, at most
/// `limit` of them; the flag reports truncation.
fn profile_layer(k: usize, v: u64, mode: BallotMode, limit: u64) -> (Vec<Profile>, bool) {
    let xs = alphabet(k);
    let ballots = mode.ballots(&xs);
    let mut layer = Vec::new();
    let mut truncated = false;
    let mut current = Vec::with_capacity(v as usize);
    multisets_of_size(ballots.len(), v as usize, 0, &mut current, &mut |m: &[usize]| {
        if layer.len() as u64 >= limit {
            truncated = true;
            return false;
        }
        let mut counts: Vec<(Ranking, u64)> = Vec::new();
        for &i in m {
            match counts.last_mut() {
                Some((r, c)) if *r == ballots[i] => *c += 1,
                _ => counts.push((ballots[i].clone(), 1)),
            }
        }
        layer.push(Profile::new(xs.iter().cloned(), counts).expect("valid ballots"));
        true
    });
    (layer, truncated)
}

fn multisets_of_size(
    kinds: usize,
    size: usize,
    from: usize,
    current: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    if current.len() == size {
        return f(current);
    }
    for i in from..kinds {
        current.push(i);
        let go = multisets_of_size(kinds, size, i, current, f);
        current.pop();
        if !go {
            return false;
        }
    }
    true
}

/// Realizations of every same-parity margin matrix with entries in `[-w, w]`,
/// grouped by voter count.
fn margin_graph_layers(k: usize, w: u32, max_voters: u64) -> Vec<Vec<Profile>> {
    let xs = alphabet(k);
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j))).collect();
    let w = w as i64;
    let mut realized: Vec<(u64, usize, Profile)> = Vec::new();
    let mut counter = 0usize;
    for parity in [0i64, 1] {
        let values: Vec<i64> = (-w..=w).filter(|v| v.rem_euclid(2) == parity).collect();
        if values.is_empty() {
            continue;
        }
        let total = values.len().pow(pairs.len() as u32);
        for code in 0..total {
            let mut c = code;
            let mut m = vec![0i64; k * k];
            for &(i, j) in &pairs {
                let v = values[c % values.len()];
                c /= values.len();
                m[i * k + j] = v;
                m[j * k + i] = -v;
            }
            let matrix = MarginMatrix::from_values(xs.clone(), m).expect("antisymmetric");
            let p = mcgarvey_debord_realize(&TargetMargins::new(matrix).expect("same parity"));
            if p.num_voters() <= max_voters {
                realized.push((p.num_voters(), counter, p));
            }
            counter += 1;
        }
    }
    realized.sort_by_key(|(v, i, _)| (*v, *i));
    let mut layers: Vec<Vec<Profile>> = Vec::new();
    let mut last = None;
    for (v, _, p) in realized {
        if last != Some(v) {
            layers.push(Vec::new());
            last = Some(v);
        }
        layers.last_mut().expect("pushed").push(p);
    }
    layers
}

/// The `index`-th random profile of a seeded sweep; independent of worker scheduling.
pub fn random_profile(budget: &SearchBudget, index: u64) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    rng.set_stream(index);
    let k = rng.gen_range(budget.min_candidates..=budget.max_candidates.max(budget.min_candidates));
    let xs = alphabet(k);
    let voters = rng.gen_range(1..=budget.max_voters.max(1));
    let ballots = budget.mode.ballots(&xs);
    let picks = (0..voters).map(|_| (ballots.choose(&mut rng).expect("nonempty").clone(), 1));
    Profile::new(xs.iter().cloned(), picks).expect("valid ballots")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(lines: &[(u64, &str)]) -> Profile {
        let ballots: Vec<(Ranking, u64)> = lines.iter().map(|(k, s)| (s.parse().unwrap(), *k)).collect();
        Profile::from_ballots(ballots).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for a in AxiomId::ALL {
            assert_eq!(a.name().parse::<AxiomId>().unwrap(), a);
        }
    }

    #[test]
    fn malformed_ballots_rejected() {
        let p = prof(&[(1, "a>b>c")]);
        let tied_top: Ranking = "a=b>c".parse().unwrap();
        assert!(matches!(
            check_positive_involvement_instance(MethodId::Minimax, &p, &tied_top),
            Err(AxiomError::MalformedBallot(_))
        ));
        let tied_bottom: Ranking = "a>b=c".parse().unwrap();
        assert!(matches!(
            check_negative_involvement_instance(MethodId::Minimax, &p, &tied_bottom),
            Err(AxiomError::MalformedBallot(_))
        ));
    }

    #[test]
    fn three_cycle_resolvable() {
        let p = prof(&[(1, "a>b>c"), (1, "b>c>a"), (1, "c>a>b")]);
        let v = check_resolvability(MethodId::SplitCycle, &p, BallotMode::Linear).unwrap();
        assert_eq!(v, Verdict::Pass);
    }

    #[test]
    fn clone_sets_of_small_profile() {
        let p = prof(&[(2, "a>b>c"), (1, "c>b>a")]);
        let sets = all_clone_sets(&p);
        assert!(sets.contains(&["a", "b"].iter().map(|c| c.parse().unwrap()).collect()));
        assert!(sets.contains(&["b", "c"].iter().map(|c| c.parse().unwrap()).collect()));
        assert!(!sets.contains(&["a", "c"].iter().map(|c| c.parse().unwrap()).collect()));
    }

    #[test]
    fn random_profiles_are_stable() {
        let b = SearchBudget {
            min_candidates: 3,
            max_candidates: 5,
            ..SearchBudget::default()
        };
        assert_eq!(random_profile(&b, 17), random_profile(&b, 17));
    }
}
