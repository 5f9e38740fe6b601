//! Optimal classical, quantum and non-signaling values of biased nonlocal
//! games: the two-party CHSH game with independent or joint setting biases,
//! and the `n`-party Svetlichny family with a common bias `p`.

pub mod analysis;
pub mod classical;
pub mod error;
pub mod game;
pub mod nonsignaling;
pub mod optimize;
pub mod quantum;
pub mod qubit;
pub mod svetlichny;

pub use error::{GameError, Result};
pub use game::{
    chsh_score, expand_svetlichny, expectation_to_success, joint_score, BiasPair, CorrelatorExpansion,
    CorrelatorTable, JointBias,
};
pub use optimize::OptimizerConfig;
