//! Canonical-sequence machinery: membership in the intrinsically defined
//! sequence set and the total order on digit sequences.
//!
//! A digit sequence `(q0, q1, q2, ...)` with `q_n = c_n/a_n` is canonical
//! when, with the divisor chain `c_n | c_(n+1)` in force:
//!
//! - C1: `q0` is an integer (structural here),
//! - C2: `q_n <= 1`, i.e. `a_n >= c_n`,
//! - C3: `q_1 = 1` forces `q_2 != 0`,
//! - C4: zeros are final (structural via the terminated flag),
//! - C5: `a_(n+1) >= (c_(n+1)/c_n) a_n (a_n + 1)`,
//! - C6: equality in C5 at step `n` forces `q_(n+2) != 0`.
//!
//! Exactly the sequences passing these checks arise from expansions, so a
//! terminated canonical sequence re-expands to itself; see [`refixpoint`].

use std::cmp::Ordering;

use num::bigint::BigUint;
use num::One;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cseq::CseqError;
use crate::expansion::{Expansion, ExpansionError, TermView};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error(transparent)]
    Cseq(#[from] CseqError),
    #[error("expansions are under different multiplier sequences")]
    CseqMismatch,
    #[error("operation requires a terminated expansion")]
    NotTerminated,
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
}

/// Violation codes for the canonical-sequence conditions. C1 and C4 are
/// structural in this representation and can only be reported for data that
/// bypassed the constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl Violation {
    pub fn code(self) -> &'static str {
        match self {
            Violation::C1 => "C1",
            Violation::C2 => "C2",
            Violation::C3 => "C3",
            Violation::C4 => "C4",
            Violation::C5 => "C5",
            Violation::C6 => "C6",
        }
    }
}

/// Result of a canonical-membership check over a digit prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TCheckReport {
    pub valid: bool,
    pub violated: Option<Violation>,
    pub index: Option<usize>,
    /// Horizon actually inspected; conditions past a non-terminated prefix
    /// are vacuous evidence, not proof.
    pub checked_upto: usize,
}

impl TCheckReport {
    fn ok(checked_upto: usize) -> Self {
        TCheckReport {
            valid: true,
            violated: None,
            index: None,
            checked_upto,
        }
    }

    fn fail(violated: Violation, index: usize, checked_upto: usize) -> Self {
        TCheckReport {
            valid: false,
            violated: Some(violated),
            index: Some(index),
            checked_upto,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "valid": self.valid,
            "violated": self.violated.map(Violation::code),
            "index": self.index,
            "checked_upto": self.checked_upto,
        })
    }
}

/// Checks the canonical conditions for the first `upto` digits (fully, for
/// terminated expansions shorter than that). The divisor chain is a
/// precondition; violations surface as errors, not report entries.
pub fn check_t(e: &Expansion, upto: usize) -> Result<TCheckReport, CanonError> {
    let cseq = e.cseq().require_chain();
    let horizon = match e.known_len() {
        Some(len) => upto.min(len),
        None => upto,
    };

    // C2: a_n >= c_n for every present digit.
    for n in 1..=horizon {
        let TermView::Digit(a) = e.term(n) else { break };
        let c = cseq.eval(n)?;
        if a < c {
            return Ok(TCheckReport::fail(Violation::C2, n, horizon));
        }
    }

    // C3: q_1 = 1 (a_1 = c_1) requires q_2 != 0.
    if horizon >= 1 {
        if let TermView::Digit(a1) = e.term(1) {
            if a1 == cseq.eval(1)? && e.term(2) == TermView::ZeroTail {
                return Ok(TCheckReport::fail(Violation::C3, 1, horizon));
            }
        }
    }

    // C5/C6 over consecutive digit pairs. The growth inequality
    // a_(n+1) >= (c_(n+1)/c_n) a_n (a_n+1) is compared by cross
    // multiplication; the chain guarantees the ratio is integral.
    for n in 1..horizon {
        let (TermView::Digit(a), TermView::Digit(b)) = (e.term(n), e.term(n + 1)) else {
            break;
        };
        let c_n = cseq.eval(n)?;
        let c_n1 = cseq.eval(n + 1)?;
        let lhs = &b * &c_n;
        let rhs = &c_n1 * &a * (&a + BigUint::one());
        match lhs.cmp(&rhs) {
            Ordering::Less => return Ok(TCheckReport::fail(Violation::C5, n, horizon)),
            Ordering::Equal => {
                // Equality is legal only when the expansion continues at n+2.
                if e.term(n + 2) == TermView::ZeroTail {
                    return Ok(TCheckReport::fail(Violation::C6, n, horizon));
                }
            }
            Ordering::Greater => {}
        }
    }

    Ok(TCheckReport::ok(horizon))
}

/// Re-expands the exact value of a terminated expansion and reports whether
/// the digits come back unchanged. Canonical sequences are exactly the
/// fixed points.
pub fn refixpoint(e: &Expansion, upto: usize) -> Result<bool, CanonError> {
    if !e.is_terminated() {
        return Err(CanonError::NotTerminated);
    }
    let value = e
        .value()?
        .expect("terminated expansion has an exact value");
    let budget = upto.max(e.known_len().unwrap_or(0) + 1);
    let again = Expansion::expand(&value, e.cseq(), budget)?;
    Ok(e.same_digits(&again))
}

/// Outcome of comparing two digit sequences under a budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOutcome {
    Less,
    Equal,
    Greater,
    /// No difference surfaced within the budget (or past the known prefix of
    /// a non-terminated literal).
    Undecided,
}

impl CompareOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOutcome::Less => "less",
            CompareOutcome::Equal => "equal",
            CompareOutcome::Greater => "greater",
            CompareOutcome::Undecided => "undecided",
        }
    }

    fn from_ordering(o: Ordering) -> Self {
        match o {
            Ordering::Less => CompareOutcome::Less,
            Ordering::Equal => CompareOutcome::Equal,
            Ordering::Greater => CompareOutcome::Greater,
        }
    }

    fn reverse(self) -> Self {
        match self {
            CompareOutcome::Less => CompareOutcome::Greater,
            CompareOutcome::Greater => CompareOutcome::Less,
            other => other,
        }
    }
}

/// Orders two expansions by their first differing term: integer parts first,
/// then larger `q_i` wins at odd `i` and loses at even `i >= 2`. Terms past
/// termination count as `q = 0`. Since both sides share `c_i`, comparing
/// `q_i = c_i/a_i` is the reverse of comparing digits.
pub fn compare(
    x: &Expansion,
    y: &Expansion,
    budget: usize,
) -> Result<CompareOutcome, CanonError> {
    if !x.cseq().same_rule(y.cseq()) {
        return Err(CanonError::CseqMismatch);
    }
    if x.q0() != y.q0() {
        return Ok(CompareOutcome::from_ordering(x.q0().cmp(y.q0())));
    }
    // Terminated pairs are finite data; compare them fully.
    let horizon = if x.is_terminated() && y.is_terminated() {
        usize::MAX
    } else {
        budget
    };
    let mut n = 1usize;
    loop {
        if n > horizon {
            return Ok(CompareOutcome::Undecided);
        }
        let q_order = match (x.term(n), y.term(n)) {
            (TermView::Unknown, _) | (_, TermView::Unknown) => {
                return Ok(CompareOutcome::Undecided)
            }
            (TermView::ZeroTail, TermView::ZeroTail) => return Ok(CompareOutcome::Equal),
            (TermView::Digit(_), TermView::ZeroTail) => Ordering::Greater,
            (TermView::ZeroTail, TermView::Digit(_)) => Ordering::Less,
            // q = c/a with shared c: q-order is digit-order reversed.
            (TermView::Digit(a), TermView::Digit(b)) => b.cmp(&a),
        };
        if q_order != Ordering::Equal {
            let by_q = CompareOutcome::from_ordering(q_order);
            return Ok(if n % 2 == 1 { by_q } else { by_q.reverse() });
        }
        n += 1;
    }
}
