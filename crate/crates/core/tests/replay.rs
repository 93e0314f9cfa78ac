use prefvote::format::{parse_edge_list, parse_profile, parse_structured_profile};
use prefvote::replay::{
    base_profile, derive_sequence, p_matrices, q_matrices, sequence_data, shipped_mutations, verify, verify_data,
    BaseProfileId, ReplayOptions,
};
use prefvote::{BallotMode, MarginMatrix, ReplayError, SequenceId};

fn data(path: &str) -> String {
    std::fs::read_to_string(format!("{}/../../data/{path}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn shipped_files_match_built_in_data() {
    for (family, id, matrices) in [("p", BaseProfileId::P1, p_matrices()), ("q", BaseProfileId::Q1, q_matrices())] {
        assert_eq!(parse_profile(&data(&format!("{family}/base.txt"))).unwrap(), base_profile(id));
        assert_eq!(parse_structured_profile(&data(&format!("{family}/base.toml"))).unwrap(), base_profile(id));
        for (k, m) in matrices.iter().enumerate() {
            let file = parse_edge_list(&data(&format!("{family}/stage{}.edges", k + 1))).unwrap();
            assert_eq!(&file, m, "{family} stage {}", k + 1);
        }
    }
}

#[test]
fn base_margins_are_the_first_reference_matrix() {
    assert_eq!(MarginMatrix::from_profile(&base_profile(BaseProfileId::P1)), p_matrices()[0]);
    assert_eq!(MarginMatrix::from_profile(&base_profile(BaseProfileId::Q1)), q_matrices()[0]);
}

#[test]
fn unscaled_sequences_verify() {
    for id in [SequenceId::Positive, SequenceId::Negative, SequenceId::ClonesPositive, SequenceId::ClonesNegative] {
        let r = verify(id, &ReplayOptions::default()).unwrap();
        assert!(r.verified(), "{id}: {:?}", r.failures().next());
        assert!(r.to_text(false).contains("verified"));
    }
}

#[test]
fn scale_factor_is_bounded() {
    for n in [0, 4] {
        let err = verify(SequenceId::PositiveScaled(n), &ReplayOptions::default());
        assert!(matches!(err, Err(ReplayError::BoundExceeded { .. })), "n = {n}");
    }
    let opts = ReplayOptions {
        max_n: 1,
        ..ReplayOptions::default()
    };
    assert!(verify(SequenceId::NegativeScaled(2), &opts).is_err());
}

#[test]
fn sequence_names_parse() {
    assert_eq!("pi-scaled:3".parse::<SequenceId>().unwrap(), SequenceId::PositiveScaled(3));
    assert_eq!("clones-ni".parse::<SequenceId>().unwrap(), SequenceId::ClonesNegative);
    assert!(matches!("theta".parse::<SequenceId>(), Err(ReplayError::UnknownSequence(_))));
    for id in SequenceId::all_default() {
        assert_eq!(SequenceId::parse(id.name(), id.scale()).unwrap(), id);
    }
}

#[test]
fn derived_stages_scale() {
    let one = derive_sequence(SequenceId::Positive).unwrap();
    let two = derive_sequence(SequenceId::PositiveScaled(2)).unwrap();
    for ((p, _), (q, _)) in one.iter().zip(&two) {
        assert_eq!(MarginMatrix::from_profile(q), MarginMatrix::from_profile(p).scaled(2));
        assert_eq!(q.num_voters(), 2 * p.num_voters());
    }
}

#[test]
fn first_mutations_are_caught_in_both_modes() {
    for mode in [BallotMode::Linear, BallotMode::Weak] {
        let opts = ReplayOptions {
            stop_at_first_failure: true,
            ..ReplayOptions::with_mode(mode)
        };
        for id in [SequenceId::Positive, SequenceId::ClonesNegative] {
            let reference = sequence_data(id);
            for m in shipped_mutations(id).iter().take(4) {
                let caught = verify_data(id, &m.apply(&reference), &opts).map_or(true, |r| !r.verified());
                assert!(caught, "{id} {}", m.label);
            }
        }
    }
}
