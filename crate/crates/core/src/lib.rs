//! Preferential-voting profiles, margins, voting methods, axiom checkers, profile
//! synthesis and replays of reference profile sequences.

pub mod axioms;
pub mod deltas;
pub mod error;
pub mod format;
pub mod margins;
pub mod methods;
pub mod profile;
pub mod replay;
pub mod synth;

pub use axioms::{AxiomId, Perturbation, Verdict, ViolationWitness};
pub use deltas::BallotMode;
pub use error::{AxiomError, MethodError, ParseError, ProfileError, ReplayError, SynthError};
pub use margins::{MarginGraph, MarginMatrix};
pub use methods::{MethodId, WinnerSet};
pub use profile::{Candidate, Profile, Ranking};
pub use replay::{ReplayReport, SequenceId};
