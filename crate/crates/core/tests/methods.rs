mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::*;
use prefvote::methods::{ranked_pairs_with_cap, split_cycle_defeats};
use prefvote::profile::alphabet;
use prefvote::{MarginMatrix, MethodError, MethodId};

fn mask_indices(mask: u64) -> BTreeSet<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

fn arb_matrix(max_n: usize) -> impl Strategy<Value = MarginMatrix> {
    (2usize..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-4i64..=4, n * (n - 1) / 2).prop_map(move |u| {
            let mut v = vec![0i64; n * n];
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    v[i * n + j] = 2 * u[k];
                    v[j * n + i] = -2 * u[k];
                    k += 1;
                }
            }
            MarginMatrix::from_values(alphabet(n), v).unwrap()
        })
    })
}

#[test]
fn method_names_round_trip() {
    for f in MethodId::ALL {
        assert_eq!(f.name().parse::<MethodId>().unwrap(), f);
    }
    assert!(matches!("plurality".parse::<MethodId>(), Err(MethodError::UnknownMethod(_))));
}

#[test]
fn condorcet_cycle_ties_everyone() {
    let p = prof(&[(1, "a>b>c"), (1, "b>c>a"), (1, "c>a>b")]);
    for f in MethodId::ALL {
        assert_eq!(f.winners(&p).unwrap().len(), 3, "{f}");
    }
}

#[test]
fn weighted_cycle() {
    // a>b 5, b>c 3, c>a 1
    let p = prof(&[(4, "a>b>c"), (2, "b>c>a"), (3, "c>a>b")]);
    let m = MarginMatrix::from_profile(&p);
    assert_eq!(m.condorcet_winner_index(), None);
    assert_eq!(m.get(0, 1), 5);
    assert_eq!(m.get(1, 2), 3);
    assert_eq!(m.get(2, 0), 1);
    assert_eq!(MethodId::RankedPairs.winners(&p).unwrap().0, set(&["a"]));
    assert_eq!(MethodId::SplitCycle.winners(&p).unwrap().0, set(&["a"]));
    assert_eq!(MethodId::Minimax.winners(&p).unwrap().0, set(&["a"]));
    assert_eq!(split_cycle_defeats(&m), vec![(0, 1), (1, 2)]);
}

#[test]
fn ranked_pairs_cap_is_enforced() {
    let p = prof(&[(1, "a>b>c>d>e"), (1, "e>d>c>b>a")]);
    // all margins zero: a single universe with no edges
    assert_eq!(ranked_pairs_with_cap(&p, 1).unwrap().len(), 5);
    let q = prof(&[(1, "a>b>c"), (1, "b>c>a"), (1, "c>a>b")]);
    assert!(matches!(ranked_pairs_with_cap(&q, 1), Err(MethodError::TieExplosion { cap: 1 })));
    assert_eq!(ranked_pairs_with_cap(&q, 3).unwrap().len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn borda_matches_positional_scores(p in arb_profile(2, 5, 12, true)) {
        let m = MarginMatrix::from_profile(&p);
        prop_assert_eq!(mask_indices(MethodId::Borda.winner_mask(&m).unwrap()), borda_oracle(&p));
    }

    #[test]
    fn borda_matches_classic_on_linear(p in arb_profile(2, 5, 12, false)) {
        let m = MarginMatrix::from_profile(&p);
        prop_assert_eq!(mask_indices(MethodId::Borda.winner_mask(&m).unwrap()), classic_borda(&p));
    }

    #[test]
    fn minimax_matches_definition(m in arb_matrix(6)) {
        prop_assert_eq!(mask_indices(MethodId::Minimax.winner_mask(&m).unwrap()), minimax_oracle(&m));
    }

    #[test]
    fn split_cycle_matches_cycle_enumeration(m in arb_matrix(6)) {
        prop_assert_eq!(mask_indices(MethodId::SplitCycle.winner_mask(&m).unwrap()), split_cycle_oracle(&m));
    }

    #[test]
    fn ranked_pairs_matches_all_tiebreaks(m in arb_matrix(4)) {
        prop_assert_eq!(mask_indices(MethodId::RankedPairs.winner_mask(&m).unwrap()), ranked_pairs_oracle(&m));
    }

    #[test]
    fn ranked_pairs_matches_on_profiles(p in arb_profile(3, 5, 9, false)) {
        let m = MarginMatrix::from_profile(&p);
        // the oracle enumerates priority orders; keep its input small
        prop_assume!(m.edges().len() <= 8);
        prop_assert_eq!(mask_indices(MethodId::RankedPairs.winner_mask(&m).unwrap()), ranked_pairs_oracle(&m));
    }

    #[test]
    fn winners_nonempty_and_condorcet_consistent(p in arb_profile(2, 5, 11, true)) {
        let m = MarginMatrix::from_profile(&p);
        let cw = m.condorcet_winner_index();
        for f in MethodId::ALL {
            let mask = f.winner_mask(&m).unwrap();
            prop_assert!(mask != 0);
            if let (Some(w), true) = (cw, f != MethodId::Borda) {
                prop_assert_eq!(mask, 1 << w, "{}", f);
            }
        }
    }

    #[test]
    fn minimax_and_split_cycle_within_defensible(m in arb_matrix(6)) {
        let d = m.defensible_mask();
        prop_assert_eq!(MethodId::Minimax.winner_mask(&m).unwrap() & !d, 0);
        prop_assert_eq!(MethodId::SplitCycle.winner_mask(&m).unwrap() & !d, 0);
    }

    #[test]
    fn leximax_refines_minimax(m in arb_matrix(6)) {
        let lex = MethodId::Leximax.winner_mask(&m).unwrap();
        prop_assert_eq!(lex & !MethodId::Minimax.winner_mask(&m).unwrap(), 0);
    }
}
