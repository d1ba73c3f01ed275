//! Predicate-abstraction model checker for a small integer language.
//!
//! The pipeline is: [`frontend::parse`] the source, build the single-block
//! CFA with [`frontend::to_cfa`], optionally fold it into a large-block CFA
//! with [`cfa::summarize`], then run [`engine::verify`].

pub mod abstraction;
pub mod cfa;
pub mod engine;
pub mod formula;
pub mod frontend;
pub mod oracle;
pub mod smt;
pub mod workloads;

pub use abstraction::{AbstractFormula, AbstractionMode, Precision, ProgramPrecision};
pub use cfa::{Cfa, Edge, LocId, Operation, Program, RuleApplication, SummarizationTrace};
pub use engine::{run, verify, Config, Encoding, Run, Stats, VerificationResult};
pub use formula::{Atom, Cmp, Formula, Rel, SsaMap, Term, Var};
pub use smt::{Assignment, Model, SatResult, SmtSolver, SolverBackend, SolverError};
