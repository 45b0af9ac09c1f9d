//! Linear dynamical systems whose state is rounded to `p` significant base-`b`
//! digits after every step.
//!
//! The crate simulates such systems exactly, extracts pseudo-period
//! certificates for non-negative ones, computes the (semi-linear) sets of
//! times at which the orbit lies in a semialgebraic target, checks Büchi
//! automata against the resulting ultimately periodic words, and compiles
//! two-counter machines into rounded systems.

pub mod fpnum;
mod graph;
pub mod lds;
pub mod minsky;
pub mod omega;
pub mod periodicity;
pub mod predicates;
pub mod reach;
pub mod semilinear;
pub mod structure;

pub use fpnum::{Exponent, FpError, FpFormat, FpNumber, Sign, TieRule};
pub use lds::{Lds, LdsError, OrbitPoint};
pub use minsky::{compile, cosimulate, CompiledReduction, MinskyError, MinskyMachine};
pub use omega::{model_check, BuchiAutomaton, LassoWord, Letter, Verdict};
pub use periodicity::{assemble_certificate, verify_certificate, DetectOptions, Growth, PseudoPeriodCertificate};
pub use predicates::{hitting_set, Polynomial, SemialgebraicSet, Target};
pub use reach::{point_reach, ReachMode, ReachOutcome};
pub use semilinear::SemiLinearSet;
pub use structure::{blowup, scc_decompose, PhasedLds, SccDecomposition};
