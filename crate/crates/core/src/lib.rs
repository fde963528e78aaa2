//! Exact arithmetic over generalized alternating-Sylvester expansions.
//!
//! The crate represents real numbers by the alternating series
//! `q0 + c_1/a_1 - c_2/a_2 + c_3/a_3 - ...` driven by a positive multiplier
//! sequence `{c_n}` with digits `a_n = floor(c_n / A_n)`. It provides:
//!
//! - [`rational`]: exact arbitrary-precision rationals, the substrate.
//! - [`cseq`]: the multiplier-sequence rule language (`const:k`, `pow:l`, ...).
//! - [`expansion`]: the digit recursion, exact and terminating on rationals.
//! - [`canon`]: the canonical-sequence validator and the total order on
//!   digit sequences.
//! - [`realfield`]: constructive reals over expansions with enclosures,
//!   budgeted digit extraction, finite sup/inf, and ordered-field operations.
//! - [`irrational`]: the growth class `P(K)`, the series `f(z; {a_n})`, and
//!   machine-checkable irrationality certificates.

pub mod canon;
pub mod cseq;
pub mod expansion;
pub mod irrational;
pub mod rational;
pub mod realfield;

pub use cseq::CSeq;
pub use expansion::Expansion;
pub use rational::Rational;
