//! Shared fixtures for the benchmarks.

use polybell_core::discovery::{full_support, DiscoveryProblem};
use polybell_core::quantumeval::AnglePair;
use polybell_core::symstate::{make_dicke, superpose};
use polybell_core::{SymmetricState, C64};

/// `cos θ |D_4^1⟩ + sin θ |D_4^4⟩`.
pub fn theta_state(theta: f64) -> SymmetricState {
    superpose(&[
        (
            C64::new(theta.cos(), 0.0),
            &make_dicke(4, 1).expect("valid"),
        ),
        (
            C64::new(theta.sin(), 0.0),
            &make_dicke(4, 4).expect("valid"),
        ),
    ])
    .expect("normalizable")
}

/// The three-party discovery problem for `|D_4^1⟩`.
pub fn dicke_problem() -> DiscoveryProblem {
    let angles = AnglePair::new(2.640, 0.986).expect("finite");
    DiscoveryProblem::build(
        &make_dicke(4, 1).expect("valid"),
        3,
        &angles,
        &full_support(3),
    )
    .expect("valid")
}
