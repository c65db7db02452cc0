//! Numerical tools for deciding whether a quantum channel is a mixture of
//! unitary conjugations (a random-unitary channel).
//!
//! A channel is represented by its Choi state on `C^d ⊗ C^d`. It is random
//! unitary exactly when that state is a mixture of maximally entangled pure
//! states. [`rudistance::distance`] searches over all ensembles of the Choi
//! state with a Riemannian optimizer and reports an upper bound on the
//! distance `D` to that set, a rigorous lower bound from the reduced states,
//! and a verdict with a certificate.
//!
//! Modules:
//! - [`gellmann`]: generalized Gell-Mann basis and Bloch vectors.
//! - [`qstate`]: states, Kraus channels, Choi states, structural checks.
//! - [`ensemble`]: ensembles of a state, the matrices `A_i`, diagonal zeroing.
//! - [`manifold`]: minimization over right-unitary matrices.
//! - [`rudistance`]: the distance `D`, its bounds, and assistance measures.
//! - [`chanfactory`]: random and named channels, extremality tests.
//! - [`cli`]: the `ruchan` command-line interface.
//!
//! The `examples/` directory has one runnable program per capability.

// `!(x <= tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chanfactory;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod gellmann;
pub mod linalg;
pub mod manifold;
pub mod qstate;
pub mod rudistance;

pub use error::{Error, Result};
