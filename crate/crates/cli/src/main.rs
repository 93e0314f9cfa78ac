use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use prefvote::axioms::{
    check_instance, find_violation, hunt_violations, CheckOptions, SearchBudget, SearchSpace, SearchStrategy,
};
use prefvote::format::{document_to_text, parse_document, parse_edge_list, parse_profile_any, profile_to_text};
use prefvote::methods::DEFAULT_RANKED_PAIRS_CAP;
use prefvote::profile::{alphabet, format_set};
use prefvote::replay::{verify, ReplayOptions};
use prefvote::synth::{mcgarvey_debord_realize, minimize_profile_with, SynthOptions, TargetMargins};
use prefvote::{
    AxiomId, BallotMode, MethodId, ParseError, Perturbation, Profile, Ranking, SequenceId, SynthError, Verdict,
};

#[derive(Parser)]
#[command(name = "prefvote", version, about = "Preferential voting profiles, methods and axiom checks")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Worker threads for parallel searches.
    #[arg(long, env = "PREFVOTE_JOBS", global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Space {
    Profiles,
    MarginGraphs,
}

#[derive(Subcommand)]
enum Command {
    /// Replay the reference stage sequences and check every step assertion.
    Replay {
        /// pi, pi-scaled, ni, ni-scaled, clones-pi or clones-ni; repeatable. Defaults to all.
        #[arg(long = "sequence")]
        sequences: Vec<String>,
        #[arg(long, default_value = "linear")]
        mode: BallotMode,
        /// Voter multiplier for the scaled sequences.
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long)]
        timings: bool,
    },
    /// Print the margin matrix and its positive edges.
    Margins { file: PathBuf },
    /// Print the defensible set.
    Defensible { file: PathBuf },
    /// Print the winner set of a method.
    Winners {
        #[arg(long)]
        method: MethodId,
        /// Parallel-universe cap for ranked pairs.
        #[arg(long, default_value_t = DEFAULT_RANKED_PAIRS_CAP)]
        cap: usize,
        file: PathBuf,
    },
    /// Check one axiom instance. Without a delta, every delta of the right shape is tried.
    CheckAxiom {
        #[arg(long)]
        method: MethodId,
        #[arg(long)]
        axiom: AxiomId,
        file: PathBuf,
        /// Ballots to add, or a file with a `delta:` section.
        #[arg(long)]
        delta: Option<PathBuf>,
        #[arg(long, default_value = "linear")]
        mode: BallotMode,
        /// Added-voter bound for n-resolvability.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Search for a violation of an axiom.
    Hunt {
        #[arg(long)]
        method: MethodId,
        #[arg(long)]
        axiom: AxiomId,
        #[arg(long, default_value_t = 3)]
        min_candidates: usize,
        #[arg(long, default_value_t = 3)]
        max_candidates: usize,
        #[arg(long, default_value_t = 9)]
        max_voters: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample this many random profiles instead of enumerating.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value = "linear")]
        mode: BallotMode,
        #[arg(long, value_enum, default_value_t = Space::Profiles)]
        space: Space,
        /// Largest absolute margin when enumerating margin graphs.
        #[arg(long, default_value_t = 2)]
        max_weight: u32,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2_000_000)]
        max_instances: u64,
        /// Write the witness file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a smallest profile over a ranking pool with the target margins.
    Synthesize {
        /// Edge list of `x y weight` lines.
        #[arg(long)]
        target: PathBuf,
        /// One ranking per line; defaults to every linear order.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = prefvote::synth::DEFAULT_CAP)]
        cap: u64,
        #[arg(long, default_value_t = prefvote::synth::DEFAULT_NODE_LIMIT)]
        node_limit: u64,
        #[arg(long)]
        no_warm_start: bool,
        /// Use the McGarvey-Debord construction instead of searching.
        #[arg(long, conflicts_with = "pool")]
        construction: bool,
    },
    /// Stream every ranking of the first K letters.
    Enumerate {
        #[arg(long)]
        candidates: usize,
        #[arg(long, default_value = "linear")]
        kind: BallotMode,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn located(path: &Path, e: ParseError) -> anyhow::Error {
    anyhow!("{}:{}: {}", path.display(), e.line, e.message)
}

fn read_profile(path: &Path) -> Result<Profile> {
    parse_profile_any(&read(path)?).map_err(|e| located(path, e))
}

/// Rankings one per line; `candidates:` headers and `COUNT:` prefixes are ignored, so
/// a profile file also works as a pool.
fn read_pool(path: &Path) -> Result<Vec<Ranking>> {
    let text = read(path)?;
    let mut pool = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with("candidates:") {
            continue;
        }
        let body = match line.split_once(':') {
            Some((count, rest)) if count.trim().parse::<u64>().is_ok() => rest.trim(),
            _ => line,
        };
        let r: Ranking = body
            .parse()
            .map_err(|e| located(path, ParseError::new(i + 1, format!("{e}"))))?;
        pool.push(r);
    }
    if pool.is_empty() {
        return Err(located(path, ParseError::new(text.lines().count().max(1), "pool has no rankings")));
    }
    Ok(pool)
}

fn names<'a>(xs: impl IntoIterator<Item = &'a prefvote::Candidate>) -> Vec<String> {
    xs.into_iter().map(|c| c.to_string()).collect()
}

fn emit_json(out: &mut dyn Write, v: &serde_json::Value) -> io::Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json"))
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    let structured = cli.format == Format::Structured;
    match cli.command {
        Command::Replay {
            sequences,
            mode,
            n,
            timings,
        } => {
            let ids: Vec<SequenceId> = if sequences.is_empty() {
                ["pi", "pi-scaled", "ni", "ni-scaled", "clones-pi", "clones-ni"]
                    .iter()
                    .map(|s| SequenceId::parse(s, n))
                    .collect::<Result<_, _>>()?
            } else {
                sequences
                    .iter()
                    .map(|s| if s.contains(':') { s.parse() } else { SequenceId::parse(s, n) })
                    .collect::<Result<_, _>>()?
            };
            let opts = ReplayOptions::with_mode(mode);
            let mut reports = Vec::new();
            for id in ids {
                reports.push(verify(id, &opts)?);
            }
            let ok = reports.iter().all(|r| r.verified());
            if structured {
                let v = json!({
                    "verified": ok,
                    "reports": reports.iter().map(|r| r.to_json(timings)).collect::<Vec<_>>(),
                });
                emit_json(out, &v)?;
            } else {
                for r in &reports {
                    write!(out, "{}", r.to_text(timings))?;
                }
                writeln!(out, "{}", if ok { "all sequences verified" } else { "replay FAILED" })?;
            }
            Ok(ok)
        }
        Command::Margins { file } => {
            let p = read_profile(&file)?;
            let m = prefvote::margins::margin_matrix(&p);
            if structured {
                let n = m.size();
                let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
                let edges: Vec<_> = m
                    .edges()
                    .into_iter()
                    .map(|(x, y, w)| json!({"from": x.to_string(), "to": y.to_string(), "weight": w}))
                    .collect();
                emit_json(
                    out,
                    &json!({"candidates": names(m.candidates()), "matrix": rows, "edges": edges}),
                )?;
            } else {
                write!(out, "{}\n{}", m.to_table(), m.to_edge_list())?;
            }
            Ok(true)
        }
        Command::Defensible { file } => {
            let p = read_profile(&file)?;
            let d = prefvote::margins::defensible_set(&p);
            if structured {
                emit_json(out, &json!({ "defensible": names(&d) }))?;
            } else {
                writeln!(out, "{}", format_set(&d))?;
            }
            Ok(true)
        }
        Command::Winners { method, cap, file } => {
            let p = read_profile(&file)?;
            let m = prefvote::margins::margin_matrix(&p);
            let w = m.mask_to_set(method.winner_mask_with_cap(&m, cap)?);
            if structured {
                emit_json(out, &json!({"method": method.name(), "winners": names(&w)}))?;
            } else {
                writeln!(out, "{}", format_set(&w))?;
            }
            Ok(true)
        }
        Command::CheckAxiom {
            method,
            axiom,
            file,
            delta,
            mode,
            n,
        } => {
            let text = read(&file)?;
            let doc = if text.contains("[[ballots]]") {
                prefvote::format::ProfileDocument {
                    profile: parse_profile_any(&text).map_err(|e| located(&file, e))?,
                    delta: None,
                }
            } else {
                parse_document(&text).map_err(|e| located(&file, e))?
            };
            let delta = match delta {
                Some(path) => {
                    let d = parse_document(&read(&path)?).map_err(|e| located(&path, e))?;
                    Some(d.delta.unwrap_or(Perturbation::AddBallots(d.profile)))
                }
                None => doc.delta,
            };
            let options = CheckOptions { mode, n };
            let verdict = match &delta {
                Some(d) => check_instance(axiom, method, &doc.profile, Some(d), options)?,
                None if axiom.takes_ballot() || axiom == AxiomId::IndependenceOfClones => {
                    match find_violation(axiom, method, &doc.profile, options)? {
                        Some(w) => Verdict::Violation(Box::new(w)),
                        None => Verdict::Pass,
                    }
                }
                None => check_instance(axiom, method, &doc.profile, None, options)?,
            };
            if structured {
                let mut v = serde_json::to_value(&verdict)?;
                v["method"] = json!(method.name());
                v["axiom"] = json!(axiom.name());
                emit_json(out, &v)?;
            } else {
                match &verdict {
                    Verdict::Pass => writeln!(out, "{method} {axiom}: pass")?,
                    Verdict::Vacuous => writeln!(out, "{method} {axiom}: vacuous")?,
                    Verdict::Violation(w) => {
                        writeln!(out, "{method} {axiom}: violation")?;
                        writeln!(out, "# {}", w.summary())?;
                        write!(out, "{}", document_to_text(&w.to_document()))?;
                    }
                }
            }
            Ok(!verdict.is_violation())
        }
        Command::Hunt {
            method,
            axiom,
            min_candidates,
            max_candidates,
            max_voters,
            seed,
            samples,
            mode,
            space,
            max_weight,
            n,
            max_instances,
            out: witness_path,
        } => {
            if min_candidates < 2 || min_candidates > max_candidates || max_candidates > 6 {
                bail!("candidate range must satisfy 2 <= min <= max <= 6");
            }
            let budget = SearchBudget {
                min_candidates,
                max_candidates,
                max_voters,
                strategy: match samples {
                    Some(samples) => SearchStrategy::Random { samples },
                    None => SearchStrategy::Exhaustive,
                },
                seed,
                mode,
                space: match space {
                    Space::Profiles => SearchSpace::Profiles,
                    Space::MarginGraphs => SearchSpace::MarginGraphs { max_weight },
                },
                n,
                max_instances,
            };
            let outcome = hunt_violations(method, axiom, &budget)?;
            if let (Some(path), Some(w)) = (&witness_path, &outcome.witness) {
                fs::write(path, document_to_text(&w.to_document()))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            if structured {
                let mut v = serde_json::to_value(&outcome)?;
                v["method"] = json!(method.name());
                v["axiom"] = json!(axiom.name());
                v["budget"] = serde_json::to_value(budget)?;
                emit_json(out, &v)?;
            } else {
                writeln!(
                    out,
                    "seed {}: {} instances searched, {} skipped",
                    outcome.seed, outcome.instances, outcome.skipped
                )?;
                match &outcome.witness {
                    Some(w) => {
                        writeln!(out, "found: {}", w.summary())?;
                        write!(out, "{}", document_to_text(&w.to_document()))?;
                    }
                    None if outcome.budget_exhausted => writeln!(out, "not found (budget exhausted)")?,
                    None => writeln!(out, "not found (search space exhausted)")?,
                }
            }
            Ok(outcome.witness.is_some())
        }
        Command::Synthesize {
            target,
            pool,
            cap,
            node_limit,
            no_warm_start,
            construction,
        } => {
            let m = parse_edge_list(&read(&target)?).map_err(|e| located(&target, e))?;
            let t = TargetMargins::new(m.clone()).map_err(|e| anyhow!("{}: {e}", target.display()))?;
            if construction {
                let p = mcgarvey_debord_realize(&t);
                if structured {
                    emit_json(out, &json!({"profile": p, "total_voters": p.num_voters(), "construction": true}))?;
                } else {
                    writeln!(out, "# voters {}, McGarvey-Debord construction", p.num_voters())?;
                    write!(out, "{}", profile_to_text(&p))?;
                }
                return Ok(true);
            }
            let pool = match &pool {
                Some(path) => read_pool(path)?,
                None => BallotMode::Linear.ballots(m.candidates()),
            };
            let opts = SynthOptions {
                cap,
                node_limit,
                warm_start: !no_warm_start,
            };
            match minimize_profile_with(&m, &pool, opts) {
                Ok(r) => {
                    if structured {
                        emit_json(out, &serde_json::to_value(&r)?)?;
                    } else {
                        writeln!(
                            out,
                            "# voters {}, optimal {}, explored {} nodes",
                            r.total_voters, r.optimal, r.explored
                        )?;
                        write!(out, "{}", profile_to_text(&r.profile))?;
                    }
                    Ok(true)
                }
                Err(e @ (SynthError::Infeasible { .. } | SynthError::BudgetExhausted { .. })) => {
                    if structured {
                        emit_json(out, &json!({"found": false, "reason": e.to_string()}))?;
                    } else {
                        writeln!(out, "not found: {e}")?;
                    }
                    Ok(false)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Enumerate { candidates, kind } => {
            if !(1..=8).contains(&candidates) {
                bail!("--candidates must be between 1 and 8");
            }
            for r in kind.ballots(&alphabet(candidates)) {
                if structured {
                    writeln!(out, "{}", serde_json::to_string(&r)?)?;
                } else {
                    writeln!(out, "{r}")?;
                }
            }
            Ok(true)
        }
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    e.downcast_ref::<io::Error>()
        .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("prefvote: --jobs must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool configured once");
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli, &mut out).and_then(|ok| {
        out.flush()?;
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("prefvote: {e:#}");
            ExitCode::from(2)
        }
    }
}
