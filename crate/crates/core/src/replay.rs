//! Reference profile sequences and mechanical checks of the combinatorial facts
//! the impossibility arguments rely on.
//!
//! Each argument walks a five-stage sequence of profiles. Consecutive stages differ
//! by adding or removing voters whose ballots rank a focus candidate uniquely first
//! (the positive-involvement form) or uniquely last (the negative-involvement form,
//! where the base is padded with blocks of every linear order and each step uses
//! reversed ballots with the opposite sign). The replay checks the margin matrices,
//! defensible sets, margin separation, Condorcet statuses and ballot availability
//! at every stage, quantifying over the added ballots the argument allows.
//!
//! Steps that quantify over all voting methods are not checkable as such; only
//! their combinatorial premises are.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::axioms::is_clone_set;
use crate::deltas::{effect_of, expand, multisets_up_to, reachable_effects, BallotMode, Effect};
use crate::error::ReplayError;
use crate::margins::MarginMatrix;
use crate::profile::{alphabet, block_of_all_linear_orders, format_set, Candidate, Profile, Ranking};

/// Largest scale factor accepted by the scaled replays.
pub const DEFAULT_MAX_N: u32 = 3;
/// Distinct margin perturbations enumerated before falling back to an interval certificate.
pub const DEFAULT_EFFECT_BUDGET: usize = 2_000_000;
/// Copies of each linear order added in the negative-involvement sequences.
pub const BLOCK_COPIES: u64 = 147;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SequenceId {
    /// Positive involvement with the Condorcet criteria.
    Positive,
    /// The same sequence with every voter copied `n` times, against n-voter resolvability.
    PositiveScaled(u32),
    /// Negative involvement: padded base, reversed ballots.
    Negative,
    NegativeScaled(u32),
    /// Clone sequence, positive-involvement form.
    ClonesPositive,
    /// Clone sequence, negative-involvement form.
    ClonesNegative,
}

impl SequenceId {
    pub fn name(self) -> &'static str {
        match self {
            SequenceId::Positive => "pi",
            SequenceId::PositiveScaled(_) => "pi-scaled",
            SequenceId::Negative => "ni",
            SequenceId::NegativeScaled(_) => "ni-scaled",
            SequenceId::ClonesPositive => "clones-pi",
            SequenceId::ClonesNegative => "clones-ni",
        }
    }

    /// Parses a name, attaching `n` to the scaled variants.
    pub fn parse(name: &str, n: u32) -> Result<SequenceId, ReplayError> {
        Ok(match name {
            "pi" => SequenceId::Positive,
            "pi-scaled" => SequenceId::PositiveScaled(n),
            "ni" => SequenceId::Negative,
            "ni-scaled" => SequenceId::NegativeScaled(n),
            "clones-pi" => SequenceId::ClonesPositive,
            "clones-ni" => SequenceId::ClonesNegative,
            other => return Err(ReplayError::UnknownSequence(other.to_string())),
        })
    }

    pub fn scale(self) -> u32 {
        match self {
            SequenceId::PositiveScaled(n) | SequenceId::NegativeScaled(n) => n,
            _ => 1,
        }
    }

    fn family(self) -> Family {
        match self {
            SequenceId::ClonesPositive | SequenceId::ClonesNegative => Family::Q,
            _ => Family::P,
        }
    }

    fn variant(self) -> Variant {
        match self {
            SequenceId::Positive | SequenceId::PositiveScaled(_) | SequenceId::ClonesPositive => Variant::Positive,
            _ => Variant::Negative,
        }
    }

    pub fn all_default() -> Vec<SequenceId> {
        vec![
            SequenceId::Positive,
            SequenceId::PositiveScaled(2),
            SequenceId::Negative,
            SequenceId::NegativeScaled(2),
            SequenceId::ClonesPositive,
            SequenceId::ClonesNegative,
        ]
    }
}

impl fmt::Display for SequenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceId::PositiveScaled(n) | SequenceId::NegativeScaled(n) => write!(f, "{}(n={n})", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for SequenceId {
    type Err = ReplayError;

    /// Accepts `pi-scaled` (n = 1) or `pi-scaled:3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((name, n)) => {
                let n = n.parse().map_err(|_| ReplayError::UnknownSequence(s.to_string()))?;
                SequenceId::parse(name, n)
            }
            None => SequenceId::parse(s, 1),
        }
    }
}

impl Serialize for SequenceId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    P,
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Variant {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BaseProfileId {
    P1,
    Q1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssertionKind {
    MarginEquality,
    DefensibleSubset,
    Separation,
    CondorcetStatus,
    Availability,
    CloneSet,
    QuantifiedOverDeltas,
    DeltaShape,
}

impl AssertionKind {
    pub fn name(self) -> &'static str {
        match self {
            AssertionKind::MarginEquality => "margin-equality",
            AssertionKind::DefensibleSubset => "defensible-subset",
            AssertionKind::Separation => "separation",
            AssertionKind::CondorcetStatus => "condorcet-status",
            AssertionKind::Availability => "availability",
            AssertionKind::CloneSet => "clone-set",
            AssertionKind::QuantifiedOverDeltas => "quantified-over-deltas",
            AssertionKind::DeltaShape => "delta-shape",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
}

/// How a quantified assertion covered its delta space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Coverage {
    /// Number of delta choices the assertion quantifies over.
    pub cardinality: u128,
    /// Margin perturbations actually evaluated.
    pub evaluated: u64,
    pub strategy: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepAssertion {
    pub label: String,
    pub kind: AssertionKind,
    pub status: Status,
    /// Counterexample or supporting data.
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<Coverage>,
}

impl StepAssertion {
    fn new(kind: AssertionKind, label: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        StepAssertion {
            label: label.into(),
            kind,
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
            coverage: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub sequence: SequenceId,
    pub mode: BallotMode,
    pub assertions: Vec<StepAssertion>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl ReplayReport {
    pub fn verified(&self) -> bool {
        self.assertions.iter().all(StepAssertion::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &StepAssertion> {
        self.assertions.iter().filter(|a| !a.passed())
    }

    pub fn to_text(&self, timings: bool) -> String {
        let mut out = String::new();
        let verdict = if self.verified() { "verified" } else { "FAILED" };
        let _ = write!(out, "{} [{} deltas]: {verdict}", self.sequence, self.mode);
        if timings {
            let _ = write!(out, " in {:.2}s", self.elapsed.as_secs_f64());
        }
        out.push('\n');
        for a in &self.assertions {
            let mark = if a.passed() { "pass" } else { "FAIL" };
            let _ = writeln!(out, "  [{mark}] {:<22} {}", a.kind.name(), a.label);
            if !a.detail.is_empty() {
                let _ = writeln!(out, "         {}", a.detail);
            }
            if let Some(c) = &a.coverage {
                let _ = writeln!(
                    out,
                    "         {} deltas, {} evaluated by {}",
                    c.cardinality, c.evaluated, c.strategy
                );
            }
        }
        out
    }

    pub fn to_json(&self, timings: bool) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["verified"] = serde_json::Value::Bool(self.verified());
        if timings {
            v["elapsed_ms"] = serde_json::Value::from(self.elapsed.as_millis() as u64);
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplayOptions {
    pub mode: BallotMode,
    pub effect_budget: usize,
    /// Skip the remaining assertions after the first failure.
    pub stop_at_first_failure: bool,
    pub max_n: u32,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            mode: BallotMode::Linear,
            effect_budget: DEFAULT_EFFECT_BUDGET,
            stop_at_first_failure: false,
            max_n: DEFAULT_MAX_N,
        }
    }
}

impl ReplayOptions {
    pub fn with_mode(mode: BallotMode) -> Self {
        ReplayOptions {
            mode,
            ..ReplayOptions::default()
        }
    }
}

/// A reference five-stage sequence in its positive-involvement form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceData {
    pub base: Profile,
    /// Signed counts: positive adds voters, negative removes them.
    pub steps: Vec<Vec<(Ranking, i64)>>,
    pub expected: Vec<MarginMatrix>,
    pub shading: Vec<BTreeSet<Candidate>>,
    /// Candidate each step's ballots must rank uniquely first.
    pub focus: Vec<Candidate>,
    /// Lower bound on copies of every linear order in the padded sequence at stages 3 and 5.
    pub floor: u64,
}

fn r(s: &str) -> Ranking {
    Ranking::from_compact(s).expect("valid compact ranking")
}

fn c(s: &str) -> Candidate {
    Candidate::new(s).expect("valid label")
}

fn set(s: &str) -> BTreeSet<Candidate> {
    s.chars().map(|ch| c(&ch.to_string())).collect()
}

fn profile_of(entries: &[(u64, &str)]) -> Profile {
    Profile::new(alphabet(5), entries.iter().map(|(k, s)| (r(s), *k))).expect("valid profile")
}

fn matrix_of(edges: &[(&str, &str, i64)]) -> MarginMatrix {
    let edges: Vec<(Candidate, Candidate, i64)> = edges.iter().map(|(x, y, w)| (c(x), c(y), *w)).collect();
    MarginMatrix::from_edges(alphabet(5), &edges).expect("valid edges")
}

pub fn base_profile(id: BaseProfileId) -> Profile {
    match id {
        BaseProfileId::P1 => profile_of(&[
            (69, "daceb"),
            (64, "ebacd"),
            (46, "bcaed"),
            (20, "cdeba"),
            (18, "dbace"),
            (2, "edcba"),
        ]),
        BaseProfileId::Q1 => profile_of(&[
            (62, "dbaec"),
            (60, "cbaed"),
            (42, "deacb"),
            (23, "aecbd"),
            (19, "ecbad"),
            (3, "cebad"),
        ]),
    }
}

/// The five margin matrices of the first sequence.
pub fn p_matrices() -> Vec<MarginMatrix> {
    vec![
        matrix_of(&[
            ("a", "c", 83),
            ("a", "d", 1),
            ("a", "e", 47),
            ("b", "a", 81),
            ("b", "c", 37),
            ("b", "d", 1),
            ("c", "d", 41),
            ("c", "e", 87),
            ("e", "b", 91),
            ("e", "d", 5),
        ]),
        matrix_of(&[
            ("a", "c", 109),
            ("a", "d", 27),
            ("a", "e", 73),
            ("b", "a", 55),
            ("b", "c", 63),
            ("c", "d", 15),
            ("c", "e", 61),
            ("d", "b", 25),
            ("d", "e", 21),
            ("e", "b", 65),
        ]),
        matrix_of(&[
            ("a", "c", 102),
            ("a", "d", 34),
            ("a", "e", 66),
            ("b", "a", 62),
            ("b", "c", 70),
            ("c", "d", 22),
            ("c", "e", 54),
            ("d", "b", 18),
            ("d", "e", 14),
            ("e", "b", 58),
        ]),
        matrix_of(&[
            ("a", "c", 125),
            ("a", "d", 11),
            ("a", "e", 43),
            ("b", "a", 85),
            ("b", "c", 93),
            ("b", "d", 5),
            ("c", "e", 31),
            ("d", "c", 1),
            ("d", "e", 37),
            ("e", "b", 35),
        ]),
        matrix_of(&[
            ("a", "c", 118),
            ("a", "d", 18),
            ("a", "e", 36),
            ("b", "a", 78),
            ("b", "c", 86),
            ("b", "d", 12),
            ("c", "d", 6),
            ("c", "e", 24),
            ("d", "e", 30),
            ("e", "b", 42),
        ]),
    ]
}

/// The five margin matrices of the clone sequence.
pub fn q_matrices() -> Vec<MarginMatrix> {
    vec![
        matrix_of(&[
            ("a", "c", 45),
            ("a", "d", 1),
            ("a", "e", 81),
            ("b", "a", 79),
            ("b", "d", 1),
            ("b", "e", 35),
            ("c", "b", 85),
            ("c", "d", 1),
            ("e", "c", 83),
            ("e", "d", 1),
        ]),
        matrix_of(&[
            ("a", "c", 70),
            ("a", "d", 26),
            ("a", "e", 106),
            ("b", "a", 54),
            ("b", "e", 42),
            ("c", "b", 60),
            ("d", "b", 20),
            ("d", "c", 24),
            ("d", "e", 6),
            ("e", "c", 76),
        ]),
        matrix_of(&[
            ("a", "c", 65),
            ("a", "d", 31),
            ("a", "e", 111),
            ("b", "a", 59),
            ("b", "e", 47),
            ("c", "b", 55),
            ("d", "b", 15),
            ("d", "c", 19),
            ("d", "e", 1),
            ("e", "c", 71),
        ]),
        matrix_of(&[
            ("a", "c", 45),
            ("a", "d", 11),
            ("a", "e", 131),
            ("b", "a", 79),
            ("b", "d", 5),
            ("b", "e", 67),
            ("c", "b", 35),
            ("d", "c", 39),
            ("d", "e", 21),
            ("e", "c", 51),
        ]),
        matrix_of(&[
            ("a", "c", 34),
            ("a", "d", 22),
            ("a", "e", 120),
            ("b", "a", 68),
            ("b", "d", 16),
            ("b", "e", 56),
            ("c", "b", 46),
            ("d", "c", 28),
            ("d", "e", 10),
            ("e", "c", 40),
        ]),
    ]
}

fn shading() -> Vec<BTreeSet<Candidate>> {
    ["ad", "abd", "bd", "bd", "d"].iter().map(|s| set(s)).collect()
}

fn focus() -> Vec<Candidate> {
    ["a", "d", "b", "d"].iter().map(|s| c(s)).collect()
}

pub fn p_sequence() -> SequenceData {
    SequenceData {
        base: base_profile(BaseProfileId::P1),
        steps: vec![
            vec![(r("adbec"), 26)],
            vec![(r("daceb"), -7)],
            vec![(r("bdeac"), 23)],
            vec![(r("dbace"), -7)],
        ],
        expected: p_matrices(),
        shading: shading(),
        focus: focus(),
        floor: 121,
    }
}

pub fn q_sequence() -> SequenceData {
    SequenceData {
        base: base_profile(BaseProfileId::Q1),
        steps: vec![
            vec![(r("adbce"), 16), (r("aedbc"), 7), (r("aebdc"), 2)],
            vec![(r("deacb"), -5)],
            vec![(r("bdcae"), 20)],
            vec![(r("dbaec"), -11)],
        ],
        expected: q_matrices(),
        shading: shading(),
        focus: focus(),
        floor: 127,
    }
}

/// The reference data a sequence's replay starts from.
pub fn sequence_data(sequence: SequenceId) -> SequenceData {
    match sequence.family() {
        Family::P => p_sequence(),
        Family::Q => q_sequence(),
    }
}

/// The sequence actually walked: padded and reversed for the negative-involvement form,
/// then scaled.
fn realized(data: &SequenceData, variant: Variant, n: u64) -> (Profile, Vec<Vec<(Ranking, i64)>>) {
    let (base, steps) = match variant {
        Variant::Positive => (data.base.clone(), data.steps.clone()),
        Variant::Negative => {
            let padded = data
                .base
                .add(&block_of_all_linear_orders(data.base.candidates(), BLOCK_COPIES))
                .expect("same candidates");
            let steps = data
                .steps
                .iter()
                .map(|s| s.iter().map(|(r, k)| (r.reverse(), -k)).collect())
                .collect();
            (padded, steps)
        }
    };
    let steps = steps
        .into_iter()
        .map(|s: Vec<(Ranking, i64)>| s.into_iter().map(|(r, k)| (r, k * n as i64)).collect())
        .collect();
    (base.scale(n), steps)
}

fn apply_step(p: &Profile, step: &[(Ranking, i64)]) -> Result<Profile, ReplayError> {
    let mut out = p.clone();
    for (r, k) in step {
        out = if *k >= 0 {
            out.with_ballots(r, *k as u64)?
        } else {
            out.remove_ballots(r, k.unsigned_abs())?
        };
    }
    Ok(out)
}

/// Stage profiles of a sequence paired with the expected margin matrices.
pub fn derive_sequence(sequence: SequenceId) -> Result<Vec<(Profile, MarginMatrix)>, ReplayError> {
    derive_sequence_from(&sequence_data(sequence), sequence)
}

pub fn derive_sequence_from(data: &SequenceData, sequence: SequenceId) -> Result<Vec<(Profile, MarginMatrix)>, ReplayError> {
    let n = sequence.scale() as u64;
    let (base, steps) = realized(data, sequence.variant(), n);
    let mut stages = vec![base];
    for step in &steps {
        let next = apply_step(stages.last().expect("nonempty"), step)?;
        stages.push(next);
    }
    Ok(stages
        .into_iter()
        .zip(data.expected.iter().map(|m| m.scaled(n as i64)))
        .collect())
}

pub fn verify_positive(mode: BallotMode) -> ReplayReport {
    verify(SequenceId::Positive, &ReplayOptions::with_mode(mode)).expect("n within bounds")
}

pub fn verify_positive_scaled(n: u32, mode: BallotMode) -> Result<ReplayReport, ReplayError> {
    verify(SequenceId::PositiveScaled(n), &ReplayOptions::with_mode(mode))
}

pub fn verify_negative(mode: BallotMode) -> ReplayReport {
    verify(SequenceId::Negative, &ReplayOptions::with_mode(mode)).expect("n within bounds")
}

pub fn verify_negative_scaled(n: u32, mode: BallotMode) -> Result<ReplayReport, ReplayError> {
    verify(SequenceId::NegativeScaled(n), &ReplayOptions::with_mode(mode))
}

/// `negative` selects the negative-involvement variant.
pub fn verify_clones(negative: bool, mode: BallotMode) -> ReplayReport {
    let t = if negative { SequenceId::ClonesNegative } else { SequenceId::ClonesPositive };
    verify(t, &ReplayOptions::with_mode(mode)).expect("n within bounds")
}

pub fn verify(sequence: SequenceId, opts: &ReplayOptions) -> Result<ReplayReport, ReplayError> {
    verify_data(sequence, &sequence_data(sequence), opts)
}

/// Replays `sequence` on the given (possibly mutated) data.
pub fn verify_data(sequence: SequenceId, data: &SequenceData, opts: &ReplayOptions) -> Result<ReplayReport, ReplayError> {
    let n = sequence.scale();
    if n == 0 || n > opts.max_n {
        return Err(ReplayError::BoundExceeded {
            requested: n as u64,
            limit: opts.max_n as u64,
        });
    }
    let start = Instant::now();
    let mut run = Run {
        assertions: Vec::new(),
        stop: opts.stop_at_first_failure,
    };
    replay(sequence, data, opts, &mut run);
    Ok(ReplayReport {
        sequence,
        mode: opts.mode,
        assertions: run.assertions,
        elapsed: start.elapsed(),
    })
}

struct Run {
    assertions: Vec<StepAssertion>,
    stop: bool,
}

impl Run {
    /// Records an assertion; false when the run should end here.
    fn push(&mut self, a: StepAssertion) -> bool {
        let ok = a.passed();
        self.assertions.push(a);
        ok || !self.stop
    }
}

fn replay(sequence: SequenceId, data: &SequenceData, opts: &ReplayOptions, run: &mut Run) {
    let n = sequence.scale() as u64;
    let variant = sequence.variant();
    let (base, steps) = realized(data, variant, n);
    let xs = base.candidates().to_vec();

    // step shapes
    for (i, step) in steps.iter().enumerate() {
        let x = &data.focus[i];
        let bad: Vec<String> = step
            .iter()
            .filter(|(r, _)| match variant {
                Variant::Positive => r.unique_top() != Some(x),
                Variant::Negative => r.unique_bottom() != Some(x),
            })
            .map(|(r, _)| r.to_string())
            .collect();
        let place = match variant {
            Variant::Positive => "first",
            Variant::Negative => "last",
        };
        let label = format!("step {}: every changed ballot ranks {x} uniquely {place}", i + 1);
        let detail = if bad.is_empty() { String::new() } else { format!("offending ballots: {}", bad.join(", ")) };
        if !run.push(StepAssertion::new(AssertionKind::DeltaShape, label, bad.is_empty(), detail)) {
            return;
        }
    }

    // stages, with availability of every removal
    let mut stages = vec![base];
    for (i, step) in steps.iter().enumerate() {
        let mut cur = stages.last().expect("nonempty").clone();
        for (r, k) in step {
            if *k >= 0 {
                cur = cur.with_ballots(r, *k as u64).expect("ranking over the candidates");
                continue;
            }
            let need = k.unsigned_abs();
            let have = cur.count(r);
            let label = format!("step {}: {need} voters with {r} available for removal", i + 1);
            let ok = have >= need;
            if !run.push(StepAssertion::new(AssertionKind::Availability, label, ok, format!("present: {have}"))) {
                return;
            }
            if !ok {
                // later stages do not exist
                return;
            }
            cur = cur.remove_ballots(r, need).expect("availability checked");
        }
        stages.push(cur);
    }

    let matrices: Vec<MarginMatrix> = stages.iter().map(MarginMatrix::from_profile).collect();

    for (k, m) in matrices.iter().enumerate() {
        let expected = data.expected[k].scaled(n as i64);
        let label = format!("stage {} margins equal the reference matrix x{n}", k + 1);
        let detail = first_difference(m, &expected);
        if !run.push(StepAssertion::new(AssertionKind::MarginEquality, label, detail.is_empty(), detail)) {
            return;
        }
    }

    for (k, m) in matrices.iter().enumerate() {
        let d = m.defensible_set();
        let want = &data.shading[k];
        let label = format!("stage {} defensible set is {}", k + 1, format_set(want));
        let detail = format!("computed {}", format_set(&d));
        if !run.push(StepAssertion::new(AssertionKind::DefensibleSubset, label, &d == want, detail)) {
            return;
        }
    }

    // stage 1
    let m1 = &matrices[0];
    let a = c("a");
    let d = c("d");
    match sequence.family() {
        Family::P => {
            let cl = m1.condorcet_loser_index().map(|i| m1.candidates()[i].clone());
            let detail = format!("computed {}", cl.as_ref().map_or("none".to_string(), |c| c.to_string()));
            if !run.push(StepAssertion::new(
                AssertionKind::CondorcetStatus,
                "stage 1 Condorcet loser is d",
                cl.as_ref() == Some(&d),
                detail,
            )) {
                return;
            }
        }
        Family::Q => {
            let raw = data.base.scale(n);
            let clones = set("abce");
            let ok = is_clone_set(&raw, &clones).unwrap_or(false);
            if !run.push(StepAssertion::new(
                AssertionKind::CloneSet,
                "{a, b, c, e} is a set of clones in the unpadded stage 1 profile",
                ok,
                "",
            )) {
                return;
            }
            let cw = raw
                .remove_candidate(&c("b"))
                .ok()
                .and_then(|p| crate::margins::condorcet_winner(&p));
            let detail = format!("computed {}", cw.as_ref().map_or("none".to_string(), |c| c.to_string()));
            if !run.push(StepAssertion::new(
                AssertionKind::CondorcetStatus,
                "Condorcet winner of the unpadded stage 1 profile without b is a",
                cw.as_ref() == Some(&a),
                detail,
            )) {
                return;
            }
        }
    }
    let sep1 = m1.separation_holds();
    if !run.push(StepAssertion::new(AssertionKind::Separation, "stage 1 margins are separated", sep1, "")) {
        return;
    }
    let ad: u64 = m1.set_to_mask(&set("ad")).expect("known candidates");
    let ok = m1.defensible_mask() & !ad == 0;
    if !run.push(StepAssertion::new(
        AssertionKind::DefensibleSubset,
        "stage 1 defensible set is within {a, d}",
        ok,
        "",
    )) {
        return;
    }

    // edge gaps scale with n
    for (k, factor) in [(2usize, 4i64), (4, 6)] {
        let gap = matrices[k].min_edge_gap().unwrap_or(i64::MAX);
        let label = format!("stage {} distinct edge weights differ by at least {}", k + 1, factor * n as i64);
        if !run.push(StepAssertion::new(
            AssertionKind::Separation,
            label,
            gap >= factor * n as i64,
            format!("minimum gap {gap}"),
        )) {
            return;
        }
    }

    let negative = variant == Variant::Negative;
    if negative {
        let tails = tail_counts(&stages[0]);
        let detail = trailing_failure(m1, m1.defensible_mask(), &tails, 0);
        if !run.push(StepAssertion::new(
            AssertionKind::Availability,
            "stage 1 has enough voters ending with each dominating pair",
            detail.is_none(),
            detail.unwrap_or_default(),
        )) {
            return;
        }
        for k in [2usize, 4] {
            let radius = if k == 2 { n } else { 2 * n };
            let min = min_linear_count(&stages[k]);
            let floor = data.floor * n;
            let max_margin = matrices[k].max_margin() + radius as i64;
            let label = format!("stage {} holds at least {floor} copies of every linear order", k + 1);
            if !run.push(StepAssertion::new(AssertionKind::Availability, label, min >= floor, format!("minimum {min}"))) {
                return;
            }
            let label = format!(
                "stage {}: {floor} exceeds every margin after adding up to {radius} voters",
                k + 1
            );
            if !run.push(StepAssertion::new(
                AssertionKind::Availability,
                label,
                (floor as i64) > max_margin,
                format!("largest margin {max_margin}"),
            )) {
                return;
            }
        }
    }

    let units: Vec<Effect> = opts.mode.ballots(&xs).iter().map(|r| effect_of(&xs, r)).collect();
    let bd = matrices[2].set_to_mask(&set("bd")).expect("known");
    let only_d = matrices[4].set_to_mask(&set("d")).expect("known");
    let checks = [
        (2usize, Target::Within(bd), 1u64),
        (4usize, Target::Exactly(only_d), 2u64),
    ];
    for (k, target, copies) in checks {
        let tails = negative.then(|| tail_counts(&stages[k]));
        let check = StageCheck {
            base: &matrices[k],
            target,
            tails: tails.as_deref(),
        };
        let (label_target, nominal) = match target {
            Target::Within(_) => ("within {b, d}", multisets_up_to(units.len() as u64, n)),
            Target::Exactly(_) => ("exactly {d}", multisets_up_to(units.len() as u64, n).pow(2)),
        };
        let what = if copies == 1 { "each added delta" } else { "each pair of added deltas" };
        let extra = if negative { ", with enough trailing voters" } else { "" };
        let label = format!(
            "stage {} defensible set is {label_target} and margins stay separated for {what} of at most {n} {} ballots{extra}",
            k + 1,
            opts.mode
        );
        let (failure, coverage) = quantify(&check, &units, n as usize, copies as usize, nominal, opts);
        let mut a = StepAssertion::new(
            AssertionKind::QuantifiedOverDeltas,
            label,
            failure.is_none(),
            failure.unwrap_or_default(),
        );
        a.coverage = Some(coverage);
        if !run.push(a) {
            return;
        }
    }
}

fn first_difference(m: &MarginMatrix, expected: &MarginMatrix) -> String {
    let n = m.size();
    for i in 0..n {
        for j in 0..n {
            if m.get(i, j) != expected.get(i, j) {
                return format!(
                    "margin({}, {}) is {} but {} was expected",
                    m.candidates()[i],
                    m.candidates()[j],
                    m.get(i, j),
                    expected.get(i, j)
                );
            }
        }
    }
    String::new()
}

fn min_linear_count(p: &Profile) -> u64 {
    crate::profile::enumerate_linear_orders(p.candidates())
        .iter()
        .map(|r| p.count(r))
        .min()
        .unwrap_or(0)
}

/// `t[y * n + x]`: voters ranking y uniquely second-to-last and x uniquely last.
fn tail_counts(p: &Profile) -> Vec<u64> {
    let n = p.candidates().len();
    let mut t = vec![0u64; n * n];
    for (r, k) in p.ballots() {
        if let (Some(y), Some(x)) = (r.unique_second_to_last(), r.unique_bottom()) {
            let (yi, xi) = (p.index_of(y).expect("known"), p.index_of(x).expect("known"));
            t[yi * n + xi] += k;
        }
    }
    t
}

/// Whether every non-defensible x has a dominating y with more than
/// `max_z margin(z, y) + slack` trailing voters ending `y, x`. Returns the failure.
fn trailing_failure(m: &MarginMatrix, d_mask: u64, tails: &[u64], slack: i64) -> Option<String> {
    let n = m.size();
    for x in (0..n).filter(|x| d_mask >> x & 1 == 0) {
        let ok = (0..n).filter(|&y| y != x).any(|y| {
            let dominates = (0..n).all(|z| m.get(z, y) < m.get(y, x));
            let k = (0..n).filter(|&z| z != y).map(|z| m.get(z, y)).max().unwrap_or(0) + slack;
            dominates && tails[y * n + x] as i64 > k
        });
        if !ok {
            return Some(format!("no dominating candidate with enough trailing voters for {}", m.candidates()[x]));
        }
    }
    None
}

#[derive(Clone, Copy, Debug)]
enum Target {
    Within(u64),
    Exactly(u64),
}

struct StageCheck<'a> {
    base: &'a MarginMatrix,
    target: Target,
    /// Present in the negative-involvement form.
    tails: Option<&'a [u64]>,
}

impl StageCheck<'_> {
    fn check(&self, delta: &[i64]) -> Result<(), String> {
        let m = self.base.plus_values(delta);
        let mask = m.defensible_mask();
        let ok = match self.target {
            Target::Within(t) => mask & !t == 0,
            Target::Exactly(t) => mask == t,
        };
        if !ok {
            return Err(format!("defensible set {}", format_set(&m.defensible_set())));
        }
        if !m.separation_holds() {
            return Err("margins not separated".to_string());
        }
        if let Some(tails) = self.tails {
            // deltas only add voters, so the stage's own counts are lower bounds
            if let Some(e) = trailing_failure(&m, mask, tails, 0) {
                return Err(e);
            }
        }
        Ok(())
    }

    /// Sound check over every matrix within `radius` of the base in each entry.
    /// `uniform_parity` holds when all added ballots are linear.
    fn certify(&self, radius: i64, uniform_parity: bool) -> Result<(), String> {
        let m = self.base;
        let n = m.size();
        let r = radius;
        let member = |x: usize| {
            (0..n).filter(|&y| y != x).all(|y| {
                m.get(y, x) + r <= 0 || (0..n).filter(|&z| z != x && z != y).any(|z| m.get(z, y) - r >= m.get(y, x) + r)
            })
        };
        let dominator = |x: usize| {
            (0..n).filter(|&y| y != x).find(|&y| {
                m.get(y, x) - r > 0 && (0..n).filter(|&z| z != x && z != y).all(|z| m.get(z, y) + r < m.get(y, x) - r)
            })
        };
        let want = match self.target {
            Target::Within(t) | Target::Exactly(t) => t,
        };
        for x in 0..n {
            let inside = want >> x & 1 == 1;
            if matches!(self.target, Target::Exactly(_)) && inside && !member(x) {
                return Err(format!("cannot certify {} stays defensible", m.candidates()[x]));
            }
            if !inside {
                let Some(y) = dominator(x) else {
                    return Err(format!("cannot certify {} stays indefensible", m.candidates()[x]));
                };
                if let Some(tails) = self.tails {
                    let k = (0..n).filter(|&z| z != y).map(|z| m.get(z, y)).max().unwrap_or(0) + r;
                    if tails[y * n + x] as i64 <= k {
                        return Err(format!("cannot certify trailing voters for {}", m.candidates()[x]));
                    }
                }
            }
        }
        if uniform_parity {
            let parity = m.get(0, 1).rem_euclid(2);
            let same = (0..n).all(|i| (0..n).all(|j| i == j || m.get(i, j).rem_euclid(2) == parity));
            if !same {
                return Err("base margins do not share a parity".to_string());
            }
        } else {
            let vals: Vec<(usize, usize, i64)> = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, m.get(i, j)))
                .collect();
            for &(i, j, v) in &vals {
                for &(k, l, w) in &vals {
                    let reverse = i == l && j == k;
                    if (i, j) == (k, l) || reverse {
                        continue;
                    }
                    if (v - w).abs() < 2 * r + 2 {
                        return Err("cannot certify separation under weak ballots".to_string());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Checks `check` on the base plus every sum of `copies` deltas, each delta being
/// no ballots or a multiset of at most `n` unit ballots.
fn quantify(
    check: &StageCheck<'_>,
    units: &[Effect],
    n: usize,
    copies: usize,
    nominal: u128,
    opts: &ReplayOptions,
) -> (Option<String>, Coverage) {
    let size = check.base.size();
    let coverage = |evaluated: u64, strategy: String| Coverage {
        cardinality: nominal,
        evaluated,
        strategy,
    };
    if n == 1 {
        // enumerate the delta choices themselves
        let full: Vec<Vec<i64>> = std::iter::once(vec![0i64; size * size])
            .chain(units.iter().map(|e| expand(size, e)))
            .collect();
        let k = full.len();
        let total = k.pow(copies as u32);
        let at = |idx: usize| -> Vec<i64> {
            let mut v = vec![0i64; size * size];
            let mut rest = idx;
            for _ in 0..copies {
                let e = &full[rest % k];
                rest /= k;
                for (a, b) in v.iter_mut().zip(e) {
                    *a += b;
                }
            }
            v
        };
        let bad = (0..total).into_par_iter().find_first(|&i| check.check(&at(i)).is_err());
        let failure = bad.map(|i| describe(check, &at(i), &decode(i, k, copies)));
        return (failure, coverage(total as u64, "explicit enumeration".into()));
    }
    let max_ballots = n * copies;
    match reachable_effects(units, max_ballots, opts.effect_budget) {
        Some(effects) => {
            let bad = effects
                .par_iter()
                .find_first(|e| check.check(&expand(size, e)).is_err());
            let failure = bad.map(|e| describe(check, &expand(size, e), &format!("margin change {:?}", e)));
            let strategy = format!("distinct margin changes of up to {max_ballots} ballots");
            (failure, coverage(effects.len() as u64, strategy))
        }
        None => {
            let uniform = opts.mode == BallotMode::Linear;
            let failure = check.certify(max_ballots as i64, uniform).err();
            let strategy = format!("interval certificate over margin changes of at most {max_ballots}");
            (failure, coverage(0, strategy))
        }
    }
}

fn decode(idx: usize, k: usize, copies: usize) -> String {
    let mut parts = Vec::new();
    let mut rest = idx;
    for _ in 0..copies {
        let i = rest % k;
        rest /= k;
        parts.push(if i == 0 { "none".to_string() } else { format!("ballot #{i}") });
    }
    parts.join(" + ")
}

fn describe(check: &StageCheck<'_>, delta: &[i64], which: &str) -> String {
    let why = check.check(delta).err().unwrap_or_default();
    format!("{which}: {why}")
}

/// Where a mutation changes one reference count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MutationSite {
    Base(Ranking),
    Step { step: usize, ranking: Ranking },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutation {
    pub label: String,
    pub site: MutationSite,
    pub shift: i64,
}

impl Mutation {
    pub fn apply(&self, data: &SequenceData) -> SequenceData {
        let mut out = data.clone();
        match &self.site {
            MutationSite::Base(r) => {
                let count = out.base.count(r) as i64 + self.shift;
                let ballots = out
                    .base
                    .ballots()
                    .filter(|(q, _)| *q != r)
                    .map(|(q, k)| (q.clone(), k))
                    .chain(std::iter::once((r.clone(), count.max(0) as u64)));
                out.base = Profile::new(out.base.candidates().iter().cloned(), ballots).expect("still nonempty");
            }
            MutationSite::Step { step, ranking } => {
                for (q, k) in out.steps[*step].iter_mut() {
                    if q == ranking {
                        *k += self.shift * k.signum();
                    }
                }
            }
        }
        out
    }
}

/// Single-count perturbations of a sequence's reference data: every base count and every
/// step count moved by one.
pub fn shipped_mutations(sequence: SequenceId) -> Vec<Mutation> {
    let data = sequence_data(sequence);
    let mut out = Vec::new();
    for (r, k) in data.base.ballots() {
        for shift in [1i64, -1] {
            out.push(Mutation {
                label: format!("stage 1 count of {r} {} -> {}", k, k as i64 + shift),
                site: MutationSite::Base(r.clone()),
                shift,
            });
        }
    }
    for (i, step) in data.steps.iter().enumerate() {
        for (r, k) in step {
            out.push(Mutation {
                label: format!("step {} count of {r} {} -> {}", i + 1, k.abs(), k.abs() + 1),
                site: MutationSite::Step {
                    step: i,
                    ranking: r.clone(),
                },
                shift: 1,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_one_margins() {
        let m = MarginMatrix::from_profile(&base_profile(BaseProfileId::P1));
        assert_eq!(m, p_matrices()[0]);
        let m = MarginMatrix::from_profile(&base_profile(BaseProfileId::Q1));
        assert_eq!(m, q_matrices()[0]);
    }

    #[test]
    fn sequence_reaches_final_stage() {
        let seq = derive_sequence(SequenceId::Positive).unwrap();
        assert_eq!(seq.len(), 5);
        for (p, m) in &seq {
            assert_eq!(&MarginMatrix::from_profile(p), m);
        }
    }

    #[test]
    fn sequence_names() {
        assert_eq!("ni-scaled:2".parse::<SequenceId>().unwrap(), SequenceId::NegativeScaled(2));
        assert_eq!(SequenceId::NegativeScaled(2).to_string(), "ni-scaled(n=2)");
        assert!("unknown".parse::<SequenceId>().is_err());
    }

    #[test]
    fn certificate_matches_enumeration_on_small_radius() {
        let m = &p_matrices()[2];
        let bd = m.set_to_mask(&set("bd")).unwrap();
        let check = StageCheck {
            base: m,
            target: Target::Within(bd),
            tails: None,
        };
        assert!(check.certify(1, true).is_ok());
    }
}
