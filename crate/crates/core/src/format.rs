//! Text and structured file formats for profiles, witnesses and target margins.
//!
//! Profile text format:
//!
//! ```text
//! candidates: a,b,c
//! 3: a | b,c
//! 2: c | a | b
//! ```
//!
//! A witness file is a profile followed by an optional `delta:` section, which is
//! either a list of ballot lines, `delta: block`, or `delta: remove c clones a,c`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::axioms::Perturbation;
use crate::error::{ParseError, ProfileError};
use crate::margins::MarginMatrix;
use crate::profile::{parse_candidate_list, Candidate, Profile, Ranking};

/// A parsed profile file, possibly with a delta section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileDocument {
    pub profile: Profile,
    pub delta: Option<Perturbation>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

fn parse_ballot_line(line: &str, lineno: usize) -> Result<(Ranking, u64), ParseError> {
    let (count, tiers) = line
        .split_once(':')
        .ok_or_else(|| ParseError::new(lineno, "expected `COUNT: tier | tier | ...`"))?;
    let count: u64 = count
        .trim()
        .parse()
        .map_err(|_| ParseError::new(lineno, format!("invalid count {:?}", count.trim())))?;
    if count == 0 {
        return Err(ParseError::new(lineno, "ballot count must be positive"));
    }
    if !tiers.contains('|') && tiers.contains('>') {
        return Err(ParseError::new(lineno, "tiers are separated by `|`"));
    }
    let tiers = tiers.trim();
    let ranking = if tiers.contains('|') {
        tiers.parse::<Ranking>()
    } else {
        // a single tier, possibly tied
        parse_candidate_list(tiers).and_then(|t| Ranking::new(vec![t]))
    }
    .map_err(|e| ParseError::new(lineno, e.to_string()))?;
    Ok((ranking, count))
}

fn build_profile(
    candidates: &[Candidate],
    ballots: Vec<(Ranking, u64, usize)>,
    header_line: usize,
) -> Result<Profile, ParseError> {
    let expected: BTreeSet<Candidate> = candidates.iter().cloned().collect();
    for (r, _, line) in &ballots {
        if r.candidates() != expected || r.len() != expected.len() {
            return Err(ParseError::new(
                *line,
                format!("ranking {r} does not rank exactly the declared candidates"),
            ));
        }
    }
    let last_line = ballots.last().map(|b| b.2).unwrap_or(header_line);
    Profile::new(candidates.iter().cloned(), ballots.into_iter().map(|(r, k, _)| (r, k))).map_err(|e| match e {
        ProfileError::NoVoters => ParseError::new(last_line, "profile has no ballots"),
        other => ParseError::new(header_line, other.to_string()),
    })
}

/// Parses the text format, including an optional delta section.
pub fn parse_document(text: &str) -> Result<ProfileDocument, ParseError> {
    let mut candidates: Option<(Vec<Candidate>, usize)> = None;
    let mut ballots = Vec::new();
    let mut delta_ballots: Option<Vec<(Ranking, u64, usize)>> = None;
    let mut delta_other: Option<Perturbation> = None;
    let mut last = 0;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last = lineno;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("candidates:") {
            if candidates.is_some() {
                return Err(ParseError::new(lineno, "duplicate candidates header"));
            }
            let list = parse_candidate_list(rest).map_err(|e| ParseError::new(lineno, e.to_string()))?;
            let set: BTreeSet<&Candidate> = list.iter().collect();
            if set.len() != list.len() {
                return Err(ParseError::new(lineno, "duplicate candidate in header"));
            }
            if list.is_empty() {
                return Err(ParseError::new(lineno, "empty candidate list"));
            }
            candidates = Some((list, lineno));
            continue;
        }
        if let Some(rest) = line.strip_prefix("delta:") {
            if delta_ballots.is_some() || delta_other.is_some() {
                return Err(ParseError::new(lineno, "duplicate delta section"));
            }
            let rest = rest.trim();
            let words: Vec<&str> = rest.split_whitespace().collect();
            match words.as_slice() {
                [] => delta_ballots = Some(Vec::new()),
                ["block"] => delta_other = Some(Perturbation::AddBlock),
                ["remove", c, "clones", list] => {
                    let candidate = Candidate::new(*c).map_err(|e| ParseError::new(lineno, e.to_string()))?;
                    let clones = parse_candidate_list(list)
                        .map_err(|e| ParseError::new(lineno, e.to_string()))?
                        .into_iter()
                        .collect();
                    delta_other = Some(Perturbation::RemoveCandidate { candidate, clones });
                }
                _ => return Err(ParseError::new(lineno, format!("unrecognized delta section {rest:?}"))),
            }
            continue;
        }
        if candidates.is_none() {
            return Err(ParseError::new(lineno, "expected `candidates:` header before ballots"));
        }
        if delta_other.is_some() {
            return Err(ParseError::new(lineno, "unexpected line after delta directive"));
        }
        let (r, k) = parse_ballot_line(line, lineno)?;
        match delta_ballots.as_mut() {
            Some(d) => d.push((r, k, lineno)),
            None => ballots.push((r, k, lineno)),
        }
    }

    let (cands, header) = candidates.ok_or_else(|| ParseError::new(last.max(1), "missing `candidates:` header"))?;
    let profile = build_profile(&cands, ballots, header)?;
    let delta = match (delta_ballots, delta_other) {
        (Some(d), _) => {
            let line = d.first().map(|b| b.2).unwrap_or(last);
            let delta = build_profile(&cands, d, line)?;
            Some(Perturbation::AddBallots(delta))
        }
        (None, other) => other,
    };
    Ok(ProfileDocument { profile, delta })
}

/// Parses a profile file; a delta section is rejected.
pub fn parse_profile(text: &str) -> Result<Profile, ParseError> {
    let doc = parse_document(text)?;
    if doc.delta.is_some() {
        let line = text
            .lines()
            .position(|l| strip_comment(l).starts_with("delta:"))
            .map(|i| i + 1)
            .unwrap_or(1);
        return Err(ParseError::new(line, "unexpected delta section in a profile file"));
    }
    Ok(doc.profile)
}

pub fn profile_to_text(p: &Profile) -> String {
    let mut out = String::new();
    let names: Vec<&str> = p.candidates().iter().map(Candidate::as_str).collect();
    let _ = writeln!(out, "candidates: {}", names.join(","));
    let mut ballots: Vec<(&Ranking, u64)> = p.ballots().collect();
    // largest groups first, then canonical order
    ballots.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    for (r, k) in ballots {
        let _ = writeln!(out, "{k}: {}", r.to_file_syntax());
    }
    out
}

pub fn document_to_text(doc: &ProfileDocument) -> String {
    let mut out = profile_to_text(&doc.profile);
    match &doc.delta {
        None => {}
        Some(Perturbation::AddBallots(d)) => {
            out.push_str("delta:\n");
            for (r, k) in d.ballots() {
                let _ = writeln!(out, "{k}: {}", r.to_file_syntax());
            }
        }
        Some(Perturbation::AddBlock) => out.push_str("delta: block\n"),
        Some(Perturbation::RemoveCandidate { candidate, clones }) => {
            let list: Vec<&str> = clones.iter().map(Candidate::as_str).collect();
            let _ = writeln!(out, "delta: remove {candidate} clones {}", list.join(","));
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct RawBallot {
    count: u64,
    tiers: Vec<Vec<String>>,
}

#[derive(Deserialize)]
struct RawProfile {
    candidates: toml::Spanned<Vec<String>>,
    ballots: Vec<toml::Spanned<RawBallot>>,
}

#[derive(Serialize)]
struct RawProfileOut {
    candidates: Vec<String>,
    ballots: Vec<RawBallot>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses the structured (TOML) profile form with `candidates` and `[[ballots]]` tables.
pub fn parse_structured_profile(text: &str) -> Result<Profile, ParseError> {
    let raw: RawProfile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
        ParseError::new(line, e.message().to_string())
    })?;
    let header = line_of(text, raw.candidates.span().start);
    let cands = raw
        .candidates
        .get_ref()
        .iter()
        .map(|c| Candidate::new(c.as_str()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ParseError::new(header, e.to_string()))?;
    if cands.is_empty() {
        return Err(ParseError::new(header, "empty candidate list"));
    }
    let mut ballots = Vec::new();
    for b in &raw.ballots {
        let line = line_of(text, b.span().start);
        let inner = b.get_ref();
        if inner.count == 0 {
            return Err(ParseError::new(line, "ballot count must be positive"));
        }
        let tiers = inner
            .tiers
            .iter()
            .map(|t| t.iter().map(|c| Candidate::new(c.as_str())).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ParseError::new(line, e.to_string()))?;
        let r = Ranking::new(tiers).map_err(|e| ParseError::new(line, e.to_string()))?;
        ballots.push((r, inner.count, line));
    }
    build_profile(&cands, ballots, header)
}

pub fn profile_to_structured(p: &Profile) -> String {
    let out = RawProfileOut {
        candidates: p.candidates().iter().map(|c| c.to_string()).collect(),
        ballots: p
            .ballots()
            .map(|(r, k)| RawBallot {
                count: k,
                tiers: r.tiers().iter().map(|t| t.iter().map(|c| c.to_string()).collect()).collect(),
            })
            .collect(),
    };
    toml::to_string(&out).expect("profile serializes")
}

/// Parses either format, choosing structured when the text has a `[[ballots]]` table.
pub fn parse_profile_any(text: &str) -> Result<Profile, ParseError> {
    if text.contains("[[ballots]]") {
        parse_structured_profile(text)
    } else {
        parse_profile(text)
    }
}

/// Parses a target-margin edge list: `x y weight` lines and an optional `candidates:` header.
pub fn parse_edge_list(text: &str) -> Result<MarginMatrix, ParseError> {
    let mut declared: Option<Vec<Candidate>> = None;
    let mut edges: Vec<(Candidate, Candidate, i64)> = Vec::new();
    let mut seen_pairs = BTreeSet::new();
    let mut last = 1;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last = lineno;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("candidates:") {
            declared = Some(parse_candidate_list(rest).map_err(|e| ParseError::new(lineno, e.to_string()))?);
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [x, y, w] = parts.as_slice() else {
            return Err(ParseError::new(lineno, "expected `x y weight`"));
        };
        let x = Candidate::new(*x).map_err(|e| ParseError::new(lineno, e.to_string()))?;
        let y = Candidate::new(*y).map_err(|e| ParseError::new(lineno, e.to_string()))?;
        let w: i64 = w
            .parse()
            .map_err(|_| ParseError::new(lineno, format!("invalid weight {w:?}")))?;
        if x == y {
            return Err(ParseError::new(lineno, "self-loop"));
        }
        let key = if x < y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
        if !seen_pairs.insert(key) {
            return Err(ParseError::new(lineno, format!("pair {x} {y} listed twice")));
        }
        edges.push((x, y, w));
    }
    let mut cands: BTreeSet<Candidate> = declared.clone().unwrap_or_default().into_iter().collect();
    if let Some(d) = &declared {
        for (x, y, _) in &edges {
            if !d.contains(x) || !d.contains(y) {
                return Err(ParseError::new(last, format!("edge {x} {y} uses an undeclared candidate")));
            }
        }
    }
    for (x, y, _) in &edges {
        cands.insert(x.clone());
        cands.insert(y.clone());
    }
    if cands.is_empty() {
        return Err(ParseError::new(last, "no candidates"));
    }
    MarginMatrix::from_edges(cands, &edges).map_err(|e| ParseError::new(last, e.to_string()))
}

pub fn edge_list_with_header(m: &MarginMatrix) -> String {
    let names: Vec<&str> = m.candidates().iter().map(Candidate::as_str).collect();
    format!("candidates: {}\n{}", names.join(","), m.to_edge_list())
}
