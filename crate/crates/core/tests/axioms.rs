mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::*;
use prefvote::axioms::{
    all_clone_sets, check_instance, check_n_voter_resolvability, check_resolvability, detect_clone_sets,
    hunt_violations, is_clone_set, CheckOptions, SearchBudget, SearchSpace, SearchStrategy,
};
use prefvote::format::{document_to_text, parse_document, parse_edge_list};
use prefvote::synth::{mcgarvey_debord_realize, TargetMargins};
use prefvote::{AxiomError, AxiomId, BallotMode, MethodId, Perturbation, Verdict};

fn data(path: &str) -> String {
    std::fs::read_to_string(format!("{}/../../data/{path}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn stored_witnesses_reproduce() {
    let cases = [
        ("witnesses/borda-condorcet-winner.txt", MethodId::Borda, AxiomId::CondorcetWinner),
        ("witnesses/minimax-condorcet-loser.txt", MethodId::Minimax, AxiomId::CondorcetLoser),
        ("witnesses/split-cycle-resolvability.txt", MethodId::SplitCycle, AxiomId::Resolvability),
    ];
    for (path, f, a) in cases {
        let doc = parse_document(&data(path)).unwrap();
        let v = check_instance(a, f, &doc.profile, doc.delta.as_ref(), CheckOptions::default()).unwrap();
        assert!(v.is_violation(), "{path}");
        assert!(v.witness().unwrap().replay().unwrap());
    }
}

#[test]
fn borda_fails_condorcet_winner_with_three_voters() {
    let p = prof(&[(2, "a>b>c"), (1, "b>c>a")]);
    let v = check_instance(AxiomId::CondorcetWinner, MethodId::Borda, &p, None, CheckOptions::default()).unwrap();
    let w = v.witness().unwrap();
    assert_eq!(w.focus, Some(cand("a")));
    assert_eq!(w.before.0, set(&["a", "b"]));
}

#[test]
fn involvement_needs_a_ballot() {
    let p = prof(&[(1, "a>b>c")]);
    let err = check_instance(AxiomId::PositiveInvolvement, MethodId::Minimax, &p, None, CheckOptions::default());
    assert!(matches!(err, Err(AxiomError::MissingInput(_))));
    let tied = Perturbation::AddBallots(prof(&[(1, "a=b>c")]));
    let err = check_instance(AxiomId::PositiveInvolvement, MethodId::Minimax, &p, Some(&tied), CheckOptions::default());
    assert!(matches!(err, Err(AxiomError::MalformedBallot(_))));
}

#[test]
fn resolvability_bound_is_enforced() {
    let p = prof(&[(1, "a>b>c")]);
    assert!(matches!(
        check_n_voter_resolvability(MethodId::SplitCycle, &p, 4, BallotMode::Linear),
        Err(AxiomError::BoundExceeded { requested: 4, limit: 3 })
    ));
}

#[test]
fn split_cycle_resolvability_counterexample_on_four() {
    // ab -2, ac -2, ad 2, bc -2, bd -2, cd 0: winners {c, d}, d cannot be made unique
    let target = parse_edge_list("candidates: a,b,c,d\nb a 2\nc a 2\na d 2\nc b 2\nd b 2\n").unwrap();
    let p = mcgarvey_debord_realize(&TargetMargins::new(target.clone()).unwrap());
    assert_eq!(prefvote::MarginMatrix::from_profile(&p), target);
    assert_eq!(MethodId::SplitCycle.winners(&p).unwrap().0, set(&["c", "d"]));
    let v = check_resolvability(MethodId::SplitCycle, &p, BallotMode::Linear).unwrap();
    assert_eq!(v.witness().unwrap().focus, Some(cand("d")));
    // with two added voters d can win outright
    let v = check_n_voter_resolvability(MethodId::SplitCycle, &p, 2, BallotMode::Linear).unwrap();
    assert_eq!(v, Verdict::Pass);
}

#[test]
fn clone_sets_of_a_simple_profile() {
    let p = prof(&[(2, "a>b>c>d"), (1, "d>b>a>c"), (1, "c>d>a>b")]);
    assert!(is_clone_set(&p, &set(&["a", "b"])).unwrap());
    assert!(!is_clone_set(&p, &set(&["a", "c"])).unwrap());
    assert!(!is_clone_set(&p, &set(&["a", "b", "c", "d"])).unwrap());
    assert_eq!(detect_clone_sets(&p), vec![set(&["a", "b"])]);
}

#[test]
fn exhaustive_small_satisfactions() {
    let budget = SearchBudget {
        max_voters: 6,
        ..SearchBudget::default()
    };
    for (f, a) in [
        (MethodId::SplitCycle, AxiomId::CondorcetWinner),
        (MethodId::SplitCycle, AxiomId::CondorcetLoser),
        (MethodId::Minimax, AxiomId::CondorcetWinner),
        (MethodId::Minimax, AxiomId::PositiveInvolvement),
        (MethodId::SplitCycle, AxiomId::PositiveInvolvement),
        (MethodId::SplitCycle, AxiomId::NegativeInvolvement),
        (MethodId::RankedPairs, AxiomId::CondorcetLoser),
        (MethodId::Leximax, AxiomId::Resolvability),
    ] {
        let out = hunt_violations(f, a, &budget).unwrap();
        assert!(out.witness.is_none(), "{f} {a}: {}", out.witness.unwrap().summary());
        assert!(!out.budget_exhausted);
    }
}

#[test]
fn hunting_is_deterministic() {
    let budget = SearchBudget {
        min_candidates: 3,
        max_candidates: 4,
        max_voters: 7,
        strategy: SearchStrategy::Random { samples: 300 },
        seed: 11,
        ..SearchBudget::default()
    };
    let a = hunt_violations(MethodId::Borda, AxiomId::CondorcetWinner, &budget).unwrap();
    let b = hunt_violations(MethodId::Borda, AxiomId::CondorcetWinner, &budget).unwrap();
    assert_eq!(a, b);
    let w = a.witness.expect("borda fails quickly");
    assert_eq!(a.seed, 11);
    let doc = parse_document(&document_to_text(&w.to_document())).unwrap();
    assert_eq!(doc.profile, w.base);
}

#[test]
fn margin_graph_space_finds_minimax_loser_failure() {
    let budget = SearchBudget {
        min_candidates: 4,
        max_candidates: 4,
        space: SearchSpace::MarginGraphs { max_weight: 2 },
        ..SearchBudget::default()
    };
    let out = hunt_violations(MethodId::Minimax, AxiomId::CondorcetLoser, &budget).unwrap();
    let w = out.witness.unwrap();
    assert!(w.replay().unwrap());
    assert!(w.before.contains(w.focus.as_ref().unwrap()));
}

#[test]
fn random_search_without_witness_reports_budget() {
    let budget = SearchBudget {
        strategy: SearchStrategy::Random { samples: 50 },
        ..SearchBudget::default()
    };
    let out = hunt_violations(MethodId::SplitCycle, AxiomId::CondorcetWinner, &budget).unwrap();
    assert!(out.witness.is_none());
    assert!(out.budget_exhausted);
    assert_eq!(out.instances, 50);
}

proptest! {
    #[test]
    fn clone_sets_match_definition(p in arb_profile(2, 5, 4, true)) {
        let ours: BTreeSet<_> = all_clone_sets(&p).into_iter().collect();
        prop_assert_eq!(ours, clone_sets_oracle(&p));
    }

    #[test]
    fn detected_sets_are_maximal(p in arb_profile(3, 5, 3, false)) {
        let all = all_clone_sets(&p);
        for c in detect_clone_sets(&p) {
            prop_assert!(all.contains(&c));
            prop_assert!(!all.iter().any(|d| d.len() > c.len() && c.is_subset(d)));
        }
    }

    #[test]
    fn block_preservation_holds(p in arb_profile(3, 4, 8, false)) {
        for f in [MethodId::Borda, MethodId::Minimax, MethodId::SplitCycle, MethodId::RankedPairs] {
            let v = check_instance(AxiomId::BlockPreservation, f, &p, None, CheckOptions::default()).unwrap();
            prop_assert!(!v.is_violation(), "{}", f);
        }
    }
}
