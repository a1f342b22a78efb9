//! Occupation-problem SAT through its GF(2) parity relaxation.
//!
//! An Occupation clause (`q` of `p` literals true) implies a parity
//! constraint. Solving the resulting linear system shrinks the search from
//! `2ⁿ` assignments to the `2ᵏ` points of an affine subspace, which is then
//! searched by classical backtracking or a simulated Grover search.
//!
//! Floating-point parts (statevector, query costs, γ) are generic over
//! `num_traits::Float`; [`StateVector64`] and [`StateVector32`] fix the scalar.

pub mod experiments;
pub mod format;
pub mod gf2;
pub mod grover;
pub mod hamiltonian;
pub mod instance;
pub mod reduction;
pub mod search;

pub use gf2::{AffineSolution, BinMatrix, BinVec, Gf2Error, StandardForm};
pub use instance::{
    brute_force_solutions, gen_locked_random, Assignment, Clause, GenerationError, Instance,
    InstanceError, Literal, LockedParams, PartialAssignment,
};
pub use reduction::{
    build_linear_system, kernel_excess, reduce, LinearSystem, Reduction, XorInfeasible, XorOutcome,
};
pub use search::{
    backtrack_count, backtrack_solve, count_enumerate, gamma_estimate, optimize_permutation,
    solve_enumerate, SolveOutcome, SolveStatus, SolverError, TreeStats,
};

pub type StateVector64 = grover::StateVector<f64>;
pub type StateVector32 = grover::StateVector<f32>;
