//! # gradsat
//!
//! An incomplete, anytime MaxSAT solver that relaxes Boolean variables into
//! the reals and drives the number of falsified clauses down by gradient
//! descent. The CNF instance is encoded once as a fixed signed incidence
//! matrix `W`; the only mutable quantity is the relaxation vector `x`, which
//! an Adam optimizer updates against a masked mean-squared loss over the
//! currently falsified clauses. Projecting `x` back onto Booleans at any
//! point yields the current candidate assignment, so the solver can be
//! stopped whenever and always holds its best solution so far.
//!
//! The crate also ships the supporting toolkit used to exercise the solver:
//!
//! - [`formula`]: CNF data model, DIMACS parsing/serialization, clause
//!   normalization.
//! - [`encoding`]: the incidence matrix, forward pass, Boolean projection,
//!   exact falsified-clause mask, and the masked loss with its gradient.
//! - [`engine`]: the anytime solving loop, a hand-rolled Adam optimizer, and
//!   a multi-seed parallel portfolio.
//! - [`oracle`]: exhaustive exact MaxSAT solving for small instances, used
//!   as ground truth.
//! - [`generators`]: hard unsatisfiable instance families (pigeonhole,
//!   ordering, parity, mutilated chessboard).
//! - [`bench`]: a benchmark harness with cost traces, CSV/JSON output, and
//!   regret summaries against baseline costs.
//! - [`cli`]: the `gradsat` command-line interface.

pub mod bench;
pub mod cli;
pub mod encoding;
pub mod engine;
pub mod formula;
pub mod generators;
pub mod oracle;

pub use encoding::{Assignment, IncidenceMatrix};
pub use engine::{SolveConfig, SolveReport};
pub use formula::{CompiledFormula, Formula, Literal};
