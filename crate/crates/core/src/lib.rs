//! Quantum assignments for CNF formulas.
//!
//! Builds the clause projectors `a (I - |v⟩⟨v|) ⊗ I` attached to a CNF
//! formula and one of its satisfying evaluations, decides whether the
//! resulting set of projectors has a common zero vector, and searches small
//! formula families for evaluations whose basis-state conversion is *not*
//! annihilated by those projectors.
//!
//! Module map:
//! - [`formula`]: CNF model, DIMACS I/O, brute-force evaluation.
//! - [`linalg`]: dense complex vectors/matrices, Kronecker product,
//!   exact and floating common null space, smallest eigenvalue.
//! - [`qassign`]: projector construction in the literal and aligned embeddings.
//! - [`checker`]: QSAT decision with witness or gap bounds, plus a diagonal oracle.
//! - [`experiments`]: golden example, witness search, formula generation, sweeps.
//! - [`cli`]: the `qsatlab` command line.

pub mod checker;
pub mod cli;
pub mod experiments;
pub mod formula;
pub mod linalg;
pub mod qassign;

pub use checker::{diagonal_oracle, qsat_decide, CheckError, PromiseConfig, QSatVerdict};
pub use formula::{
    evaluate, parse_dimacs, satisfying_evaluations, Clause, Evaluation, Formula, FormulaError,
    Literal,
};
pub use linalg::{DenseMatrix, LinalgError, StateVector};
pub use qassign::{natural_conversion, quantum_assignment, residual, EmbeddingMode, QuantumAssignment};
