//! Permutationally invariant Bell expressions for many qubits: exact local
//! bounds, quantum values on symmetric states, and LP discovery of new
//! inequalities.

pub mod bellexpr;
pub mod discovery;
pub mod error;
pub mod lpsolver;
pub mod math;
pub mod optimize;
pub mod qoperators;
pub mod quantumeval;
pub mod symstate;

pub use bellexpr::{
    brute_force_bound, chsh_expression, classical_value, enumerate_strategy_classes,
    five_party_expression, four_party_expression, local_bound, monomial_count, two_body_expression,
    two_body_parameters, BoundDirection, InequalityJson, PIBellExpression, SettingMultiset,
    StrategyClass,
};
pub use discovery::{optimize_scenario, solve_discovery, DiscoveryProblem, DiscoveryResult};
pub use error::{Error, Result};
pub use lpsolver::{LPSolution, LPStatus, LinearProgram};
pub use math::{CMatrix, C64};
pub use qoperators::{bell_operator, eigen_max, BlochObservable, HermitianMatrix, XZObservable};
pub use quantumeval::{
    expectation, max_quantum_value, AnglePair, ChshSettings, MerminForm, QuantumHost, StateFamily,
};
pub use symstate::{
    make_dicke, reduce_symmetric, DenseState, ReducedSymmetricState, SymmetricState,
};
