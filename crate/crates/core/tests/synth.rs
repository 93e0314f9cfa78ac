mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prefvote::profile::{alphabet, enumerate_linear_orders, enumerate_weak_orders};
use prefvote::replay::{base_profile, p_matrices, BaseProfileId};
use prefvote::synth::{
    mcgarvey_debord_realize, minimize_profile, minimize_profile_with, pad_with_blocks, SynthOptions, TargetMargins,
};
use common::brute_minimum;
use prefvote::{MarginMatrix, Ranking, SynthError};

fn matrix(n: usize, upper: &[i64]) -> MarginMatrix {
    let mut v = vec![0i64; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            v[i * n + j] = upper[k];
            v[j * n + i] = -upper[k];
            k += 1;
        }
    }
    MarginMatrix::from_values(alphabet(n), v).unwrap()
}

fn arb_target() -> impl Strategy<Value = MarginMatrix> {
    (2usize..=5, any::<bool>()).prop_flat_map(|(n, odd)| {
        prop::collection::vec(-5i64..=5, n * (n - 1) / 2)
            .prop_map(move |u| matrix(n, &u.iter().map(|x| 2 * x + odd as i64).collect::<Vec<_>>()))
    })
}

#[test]
fn reference_pool_reaches_the_stated_size() {
    let p1 = base_profile(BaseProfileId::P1);
    let pool: Vec<Ranking> = p1.ballots().map(|(r, _)| r.clone()).collect();
    let m1 = &p_matrices()[0];
    let r = minimize_profile(m1, &pool, 219).unwrap();
    assert!(r.total_voters <= 219);
    assert_eq!(&MarginMatrix::from_profile(&r.profile), m1);
    assert!(r.optimal);
    // nothing smaller over this pool
    assert!(matches!(minimize_profile(m1, &pool, 218), Err(SynthError::Infeasible { .. })));
}

#[test]
fn full_pool_returns_exact_margins() {
    let m1 = &p_matrices()[0];
    let pool = enumerate_linear_orders(m1.candidates());
    let opts = SynthOptions {
        cap: 400,
        node_limit: 20_000,
        warm_start: true,
    };
    let r = minimize_profile_with(m1, &pool, opts).unwrap();
    assert_eq!(&MarginMatrix::from_profile(&r.profile), m1);
    assert!(r.total_voters <= 400);
}

#[test]
fn branch_and_bound_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..60 {
        let k = rng.gen_range(3..=4);
        let xs = alphabet(k);
        let all = if case % 3 == 0 { enumerate_weak_orders(&xs) } else { enumerate_linear_orders(&xs) };
        let size = rng.gen_range(1..=4);
        let pool: Vec<Ranking> = all.choose_multiple(&mut rng, size).cloned().collect();
        // half the targets are realizable by construction
        let target = if case % 2 == 0 {
            let ballots: Vec<(Ranking, u64)> = pool.iter().map(|r| (r.clone(), rng.gen_range(0..8))).collect();
            match prefvote::Profile::new(xs.clone(), ballots) {
                Ok(p) => MarginMatrix::from_profile(&p),
                Err(_) => continue,
            }
        } else {
            let u: Vec<i64> = (0..k * (k - 1) / 2).map(|_| rng.gen_range(-3..=3) * 2 + 1).collect();
            matrix(k, &u)
        };
        let expected = brute_minimum(&target, &pool, 30);
        let got = minimize_profile(&target, &pool, 30);
        match (expected, got) {
            (Some(e), Ok(r)) => {
                assert_eq!(r.total_voters, e, "case {case}");
                assert!(r.optimal);
                assert_eq!(MarginMatrix::from_profile(&r.profile), target);
            }
            (None, Err(SynthError::Infeasible { .. })) => {}
            (e, g) => panic!("case {case}: enumeration {e:?}, search {g:?}"),
        }
    }
}

#[test]
fn padding_keeps_margins() {
    let m1 = &p_matrices()[0];
    let p = mcgarvey_debord_realize(&TargetMargins::new(m1.clone()).unwrap());
    let padded = pad_with_blocks(&p, 3);
    assert_eq!(padded.num_voters(), p.num_voters() + 3 * 120);
    assert_eq!(&MarginMatrix::from_profile(&padded), m1);
}

proptest! {
    #[test]
    fn debord_realizes_exactly(t in arb_target()) {
        let target = TargetMargins::new(t.clone()).unwrap();
        let p = mcgarvey_debord_realize(&target);
        prop_assert!(p.is_linear());
        prop_assert_eq!(MarginMatrix::from_profile(&p), t);
    }

    #[test]
    fn mixed_parity_is_rejected(n in 3usize..=5, at in 0usize..3) {
        let mut u = vec![2i64; n * (n - 1) / 2];
        u[at] = 1;
        prop_assert_eq!(TargetMargins::new(matrix(n, &u)), Err(SynthError::Parity));
    }
}
