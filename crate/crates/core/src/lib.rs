//! Exact-arithmetic norming sets and certified norms on finitely supported
//! rational sequences.
//!
//! Everything in the norm logic is exact: coordinates, weights and certificate
//! values are arbitrary-precision rationals, and every lower bound on a norm is
//! witnessed by a tree-shaped certificate that re-evaluates to exactly the
//! claimed value. Floating point appears only in report formatting.
//!
//! The crate is organised bottom-up:
//!
//! * [`vector`] — finitely supported rational sequences (used both as vectors
//!   and as functionals), intervals, duality pairing.
//! * [`schedule`] — the weight/arity parameter sequences `(m_j)`, `(n_j)` in
//!   their two modes (`conforming` closed-form growth, `compact` tables).
//! * [`certificate`] — tree-analysis certificates with structural checks,
//!   exact evaluation and canonical JSON.
//! * [`spread`] — the even-index spread `S` on vectors, its adjoint `R` on
//!   functionals, and the restricted inverse `Λ` (membership + canonical lifts).
//! * [`mt`] — exact norm computation in the pure mixed Tsirelson space via an
//!   interval-partition dynamic program, plus the independent brute-force oracle.
//! * [`sigma`] — canonical serialization of functional sequences and the
//!   persistent injective coding registry.
//! * [`norming`] — generation-capped realizations of the inductive norming set
//!   with formation records, special-sequence builders and closure checks.
//! * [`engine`] — certified lower bounds, bracketed upper bounds, and
//!   certificate transfer along the spread (the isometry machinery).
//! * [`constructions`] — executable building blocks: flat averages, rapidly
//!   increasing sequences, exact pairs, dependent sequences and the
//!   uncomplementedness witness.
//! * [`selftest`] — the programmatic acceptance suite used by the CLI
//!   `selftest` command and by the integration tests.
//!
//! A note on the sup norm: since the norming set contains every signed basis
//! functional, the norm it induces dominates the sup norm. The sandwich
//! implemented and tested throughout is `‖x‖_∞ <= ‖x‖ <= ‖x‖_1` (the
//! occasionally-quoted reversed inequality `‖·‖ <= ‖·‖_∞` cannot hold for a
//! norming set containing the basis functionals).

pub mod certificate;
pub mod constructions;
pub mod engine;
pub mod error;
pub mod mt;
pub mod norming;
pub mod rational;
pub mod schedule;
pub mod selftest;
pub mod sigma;
pub mod spread;
pub mod vector;

pub use certificate::{NodeTag, Sign, TreeCertificate};
pub use error::{Error, Result};
pub use rational::Rational;
pub use schedule::{ParameterSchedule, ScheduleMode};
pub use vector::{FinVector, IntervalE};
