//! Constructive reals over expansions.
//!
//! A [`Real`] is an exact rational, a digit stream, or an arithmetic DAG
//! over other reals, all under one divisor-chain multiplier sequence.
//! Evaluation is by exact rational enclosures: even truncations of an
//! expansion increase to the value, odd ones decrease to it, and operation
//! nodes combine child enclosures with interval arithmetic whose sign cases
//! follow the defining suprema (`X + Y = sup(X_2n + Y_2n)`,
//! `-X = sup(-X_(2n-1))`, the four-case product, and
//! `X^-1 = sup((X_(2n-1))^-1)`).
//!
//! Nodes collapse to exact values eagerly when every child is exact; the
//! suprema provably agree with rational arithmetic there, and exactness
//! removes undecided outcomes. Digit extraction refuses to guess: a digit is
//! emitted only when the enclosure certifies `c/(a+1) < A <= c/a`, or the
//! enclosure is degenerate. Equality of two reals is not an operation; only
//! comparison within a budget exists.
//!
//! Reals are immutable DAGs and safe to share across threads; enclosure
//! refinement is pure given a budget.

use std::cmp::Ordering;
use std::sync::{Arc, OnceLock};

use num::bigint::{BigInt, BigUint};
use num::One;
use serde_json::{json, Value};
use thiserror::Error;

use crate::canon::{self, CanonError};
use crate::cseq::{CSeq, CseqError};
use crate::expansion::{expand_tail, Expansion, ExpansionError, TermView, DEFAULT_MAX_TERMS};
use crate::rational::Rational;

/// Default refinement budget for enclosures and digit extraction.
pub const DEFAULT_ROUNDS: usize = 256;
/// Default number of digits requested from the extractor.
pub const DEFAULT_DIGIT_COUNT: usize = 64;

/// Default target width `2^-128`; digit growth is doubly exponential, so a
/// handful of digits pins far more precision than this.
pub fn default_precision() -> Rational {
    Rational::new(BigInt::one(), num::pow(BigInt::from(2), 128)).expect("positive denominator")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealError {
    #[error("reals are under different multiplier sequences")]
    CseqMismatch,
    #[error("enclosure budget exhausted after {rounds} rounds")]
    BudgetExceeded { rounds: usize },
    #[error("inversion of a value not separated from zero")]
    InversionOfZero,
    #[error("undecided at digit {at}")]
    Undecided { at: usize },
    #[error("operation requires an expansion-backed real")]
    NotTruncatable,
    #[error("sup/inf over an empty set")]
    EmptySet,
    #[error("member {member} rejected by canonical validation")]
    InvalidMember { member: usize },
    #[error("stream digits are not canonical (violation at {index})")]
    NotCanonical { index: usize },
    #[error("operation arity mismatch for {op:?}")]
    Arity { op: RealOp },
    #[error(transparent)]
    Cseq(#[from] CseqError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Canon(#[from] CanonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealOp {
    Add,
    Neg,
    Mul,
    Inv,
    SupFinite,
    InfFinite,
}

impl RealOp {
    fn arity_ok(self, n: usize) -> bool {
        match self {
            RealOp::Add | RealOp::Mul => n == 2,
            RealOp::Neg | RealOp::Inv => n == 1,
            RealOp::SupFinite | RealOp::InfFinite => n >= 1,
        }
    }
}

#[derive(Debug)]
enum Repr {
    Exact {
        value: Rational,
        cached: OnceLock<Result<Expansion, ExpansionError>>,
    },
    Stream {
        expansion: Expansion,
    },
    Node {
        op: RealOp,
        children: Vec<Real>,
    },
}

/// An exact rational interval `[lower, upper]` bracketing a real, together
/// with the deepest truncation index that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lower: Rational,
    pub upper: Rational,
    pub terms_used: usize,
}

impl Enclosure {
    fn point(v: Rational, terms_used: usize) -> Self {
        Enclosure {
            lower: v.clone(),
            upper: v,
            terms_used,
        }
    }

    pub fn width(&self) -> Rational {
        &self.upper - &self.lower
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lower <= v && v <= &self.upper
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lower": self.lower.to_string(),
            "upper": self.upper.to_string(),
            "terms_used": self.terms_used,
        })
    }
}

/// Result of budgeted digit extraction.
#[derive(Debug, Clone)]
pub enum DigitsOutcome {
    Decided(Expansion),
    /// Budget exhausted before digit `at` could be certified (`at = 0` means
    /// even the integer part stayed open).
    Undecided { at: usize },
}

impl DigitsOutcome {
    pub fn to_json(&self) -> Value {
        match self {
            DigitsOutcome::Decided(e) => e.to_json(),
            DigitsOutcome::Undecided { at } => json!({ "undecided_at": at }),
        }
    }
}

enum RoundError {
    /// An inversion child still straddles zero; refining may resolve it
    /// unless the child is exactly zero.
    InvStraddle { degenerate: bool },
    Hard(RealError),
}

impl From<RealError> for RoundError {
    fn from(e: RealError) -> Self {
        RoundError::Hard(e)
    }
}

impl From<CseqError> for RoundError {
    fn from(e: CseqError) -> Self {
        RoundError::Hard(e.into())
    }
}

/// A value in the constructive real field over one multiplier sequence.
#[derive(Debug, Clone)]
pub struct Real {
    repr: Arc<Repr>,
    cseq: CSeq,
}

impl Real {
    /// An exact rational leaf. Its expansion is computed on demand and
    /// cached.
    pub fn exact(value: Rational, cseq: &CSeq) -> Real {
        Real {
            repr: Arc::new(Repr::Exact {
                value,
                cached: OnceLock::new(),
            }),
            cseq: cseq.require_chain(),
        }
    }

    /// A digit-stream leaf. Finite digit data is validated against the
    /// canonical conditions up front; rule-backed streams are trusted to be
    /// canonical by construction (validating would force their digits).
    pub fn stream(expansion: Expansion) -> Result<Real, RealError> {
        let cseq = expansion.cseq().require_chain();
        if let Some(len) = expansion.known_len() {
            let report = canon::check_t(&expansion, len)?;
            if !report.valid {
                return Err(RealError::NotCanonical {
                    index: report.index.unwrap_or(0),
                });
            }
        }
        Ok(Real {
            repr: Arc::new(Repr::Stream { expansion }),
            cseq,
        })
    }

    /// Builds an operation node without the eager exact collapse; useful for
    /// exercising the supremum definitions directly.
    pub fn deferred(op: RealOp, children: Vec<Real>) -> Result<Real, RealError> {
        if children.is_empty() && matches!(op, RealOp::SupFinite | RealOp::InfFinite) {
            return Err(RealError::EmptySet);
        }
        if !op.arity_ok(children.len()) {
            return Err(RealError::Arity { op });
        }
        for pair in children.windows(2) {
            if !pair[0].cseq.same_rule(&pair[1].cseq) {
                return Err(RealError::CseqMismatch);
            }
        }
        let cseq = children[0].cseq.clone();
        Ok(Real {
            repr: Arc::new(Repr::Node { op, children }),
            cseq,
        })
    }

    pub fn cseq(&self) -> &CSeq {
        &self.cseq
    }

    /// The exact rational value, when this real is an exact leaf.
    pub fn as_exact(&self) -> Option<&Rational> {
        match self.repr.as_ref() {
            Repr::Exact { value, .. } => Some(value),
            _ => None,
        }
    }

    /// The backing expansion: cached for exact leaves, shared for streams,
    /// absent for operation nodes.
    pub fn expansion(&self) -> Result<Expansion, RealError> {
        match self.repr.as_ref() {
            Repr::Exact { value, cached } => cached
                .get_or_init(|| Expansion::expand(value, &self.cseq, DEFAULT_MAX_TERMS))
                .clone()
                .map_err(RealError::from),
            Repr::Stream { expansion } => Ok(expansion.clone()),
            Repr::Node { .. } => Err(RealError::NotTruncatable),
        }
    }

    fn check_same(&self, rhs: &Real) -> Result<(), RealError> {
        if self.cseq.same_rule(&rhs.cseq) {
            Ok(())
        } else {
            Err(RealError::CseqMismatch)
        }
    }

    /// `X + Y`; exact when both operands are exact.
    pub fn add(&self, rhs: &Real) -> Result<Real, RealError> {
        self.check_same(rhs)?;
        if let (Some(a), Some(b)) = (self.as_exact(), rhs.as_exact()) {
            return Ok(Real::exact(a + b, &self.cseq));
        }
        Real::deferred(RealOp::Add, vec![self.clone(), rhs.clone()])
    }

    /// `-X`; exact when the operand is exact.
    pub fn neg(&self) -> Real {
        if let Some(a) = self.as_exact() {
            return Real::exact(-a, &self.cseq);
        }
        Real::deferred(RealOp::Neg, vec![self.clone()]).expect("unary arity")
    }

    /// `X * Y`; exact when both operands are exact.
    pub fn mul(&self, rhs: &Real) -> Result<Real, RealError> {
        self.check_same(rhs)?;
        if let (Some(a), Some(b)) = (self.as_exact(), rhs.as_exact()) {
            return Ok(Real::exact(a * b, &self.cseq));
        }
        Real::deferred(RealOp::Mul, vec![self.clone(), rhs.clone()])
    }

    /// `X^-1`. Exact zero is rejected immediately; for non-exact operands
    /// the separation from zero is decided during enclosure refinement.
    pub fn inv(&self) -> Result<Real, RealError> {
        if let Some(a) = self.as_exact() {
            let v = a.recip().map_err(|_| RealError::InversionOfZero)?;
            return Ok(Real::exact(v, &self.cseq));
        }
        Real::deferred(RealOp::Inv, vec![self.clone()])
    }

    /// Value of the truncation `X_n` (digits beyond `n` zeroed); defined for
    /// expansion-backed reals.
    pub fn truncate(&self, n: usize) -> Result<Rational, RealError> {
        let e = self.expansion()?;
        Ok(e.reconstruct(n)?)
    }

    /// Refines until `upper - lower <= precision` or the budget runs out.
    pub fn enclose(&self, precision: &Rational, rounds: usize) -> Result<Enclosure, RealError> {
        assert!(precision.is_positive(), "precision must be positive");
        let rounds = rounds.max(1);
        let mut inv_open = false;
        for r in 1..=rounds {
            match self.enclose_round(r) {
                Ok(enc) => {
                    if enc.width() <= *precision {
                        return Ok(enc);
                    }
                    inv_open = false;
                }
                Err(RoundError::InvStraddle { degenerate: true }) => {
                    return Err(RealError::InversionOfZero)
                }
                Err(RoundError::InvStraddle { degenerate: false }) => inv_open = true,
                Err(RoundError::Hard(e)) => return Err(e),
            }
        }
        Err(if inv_open {
            RealError::InversionOfZero
        } else {
            RealError::BudgetExceeded { rounds }
        })
    }

    /// One refinement round: leaves bracket with the `r`-th even/odd
    /// truncation pair, nodes combine child intervals.
    fn enclose_round(&self, r: usize) -> Result<Enclosure, RoundError> {
        match self.repr.as_ref() {
            Repr::Exact { value, .. } => Ok(Enclosure::point(value.clone(), 0)),
            Repr::Stream { expansion } => Ok(stream_brackets(expansion, r)?),
            Repr::Node { op, children } => {
                let child =
                    |i: usize| -> Result<Enclosure, RoundError> { children[i].enclose_round(r) };
                match op {
                    RealOp::Add => {
                        let (a, b) = (child(0)?, child(1)?);
                        Ok(Enclosure {
                            lower: &a.lower + &b.lower,
                            upper: &a.upper + &b.upper,
                            terms_used: a.terms_used.max(b.terms_used),
                        })
                    }
                    RealOp::Neg => {
                        let a = child(0)?;
                        Ok(Enclosure {
                            lower: -&a.upper,
                            upper: -&a.lower,
                            terms_used: a.terms_used,
                        })
                    }
                    RealOp::Mul => {
                        let (a, b) = (child(0)?, child(1)?);
                        let terms_used = a.terms_used.max(b.terms_used);
                        let (lower, upper) = mul_intervals(&a, &b);
                        Ok(Enclosure {
                            lower,
                            upper,
                            terms_used,
                        })
                    }
                    RealOp::Inv => {
                        let a = child(0)?;
                        let (lower, upper) = inv_interval(&a)?;
                        Ok(Enclosure {
                            lower,
                            upper,
                            terms_used: a.terms_used,
                        })
                    }
                    RealOp::SupFinite | RealOp::InfFinite => {
                        let mut encs = Vec::with_capacity(children.len());
                        for i in 0..children.len() {
                            encs.push(child(i)?);
                        }
                        let terms_used = encs.iter().map(|e| e.terms_used).max().unwrap_or(0);
                        let pick_max = matches!(op, RealOp::SupFinite);
                        let pick = |f: fn(&Enclosure) -> &Rational| {
                            let mut best = f(&encs[0]).clone();
                            for e in &encs[1..] {
                                let v = f(e);
                                if (pick_max && v > &best) || (!pick_max && v < &best) {
                                    best = v.clone();
                                }
                            }
                            best
                        };
                        Ok(Enclosure {
                            lower: pick(|e| &e.lower),
                            upper: pick(|e| &e.upper),
                            terms_used,
                        })
                    }
                }
            }
        }
    }

    /// Extracts `q0` and up to `count` digits of the expansion of this real
    /// by enclosure refinement. Boundary values (a remainder exactly at a
    /// digit edge) decide only if an enclosure becomes degenerate; otherwise
    /// the budget surfaces as `Undecided`.
    pub fn digits(&self, count: usize, rounds: usize) -> Result<DigitsOutcome, RealError> {
        assert!(count >= 1, "digit count starts at 1");
        if let Repr::Exact { .. } = self.repr.as_ref() {
            let e = self.expansion()?;
            return Ok(DigitsOutcome::Decided(prefix_of(&e, count)?));
        }
        let cseq = self.cseq.clone();
        extract_digits_with(
            |r| match self.enclose_round(r) {
                Ok(enc) => Ok(Some(enc)),
                Err(RoundError::InvStraddle { degenerate: true }) => {
                    Err(RealError::InversionOfZero)
                }
                Err(RoundError::InvStraddle { degenerate: false }) => Ok(None),
                Err(RoundError::Hard(e)) => Err(e),
            },
            &cseq,
            count,
            rounds,
        )
    }

    /// Supremum of a finite nonempty set by the digitwise construction:
    /// take the extreme integer part, then at each index keep the members
    /// attaining the extreme ratio (max at odd positions, min at even ones),
    /// until a single member survives. Equals the order maximum.
    pub fn sup_finite(xs: &[Real], budget: usize) -> Result<Real, RealError> {
        extremum(xs, budget, true)
    }

    /// Infimum of a finite nonempty set; the mirror construction.
    pub fn inf_finite(xs: &[Real], budget: usize) -> Result<Real, RealError> {
        extremum(xs, budget, false)
    }
}

fn prefix_of(e: &Expansion, count: usize) -> Result<Expansion, ExpansionError> {
    match e.known_len() {
        Some(len) if len <= count => Ok(e.clone()),
        _ => {
            let mut digits = Vec::with_capacity(count);
            for n in 1..=count {
                match e.term(n) {
                    TermView::Digit(d) => digits.push(d),
                    _ => break,
                }
            }
            Expansion::from_parts(e.q0().clone(), digits, false, e.cseq())
        }
    }
}

/// Bracket a stream with its `r`-th even/odd truncation pair, clamped to the
/// known digits; degenerate once a terminated expansion is fully consumed.
fn stream_brackets(e: &Expansion, r: usize) -> Result<Enclosure, CseqError> {
    let two_r = 2 * r;
    match e.known_len() {
        Some(len) => {
            if e.is_terminated() && two_r >= len {
                let v = e.reconstruct(len)?;
                return Ok(Enclosure::point(v, len));
            }
            let cap = two_r.min(len);
            let even = if cap % 2 == 0 { cap } else { cap - 1 };
            let lower = e.reconstruct(even)?;
            let odd_cap = (two_r - 1).min(len);
            if odd_cap >= 1 {
                let odd = if odd_cap % 2 == 1 { odd_cap } else { odd_cap - 1 };
                Ok(Enclosure {
                    lower,
                    upper: e.reconstruct(odd)?,
                    terms_used: even.max(odd),
                })
            } else {
                // No digits known: A_1 in [0, 1) bounds the value.
                let upper = &Rational::from_integer(e.q0().clone()) + &Rational::one();
                Ok(Enclosure {
                    lower,
                    upper,
                    terms_used: 0,
                })
            }
        }
        None => Ok(Enclosure {
            lower: e.reconstruct(two_r)?,
            upper: e.reconstruct(two_r - 1)?,
            terms_used: two_r,
        }),
    }
}

/// Interval product following the sign case split of the defining product:
/// `X,Y >= 0` directly, `(-X)(-Y)`, `-((-X)Y)`, `-(X(-Y))`, and a min/max
/// fallback while an operand still straddles zero.
fn mul_intervals(x: &Enclosure, y: &Enclosure) -> (Rational, Rational) {
    let nonneg = |e: &Enclosure| !e.lower.is_negative();
    let nonpos = |e: &Enclosure| !e.upper.is_positive();
    if nonneg(x) && nonneg(y) {
        (&x.lower * &y.lower, &x.upper * &y.upper)
    } else if nonpos(x) && nonpos(y) {
        (&x.upper * &y.upper, &x.lower * &y.lower)
    } else if nonpos(x) && nonneg(y) {
        (&x.lower * &y.upper, &x.upper * &y.lower)
    } else if nonneg(x) && nonpos(y) {
        (&x.upper * &y.lower, &x.lower * &y.upper)
    } else {
        let candidates = [
            &x.lower * &y.lower,
            &x.lower * &y.upper,
            &x.upper * &y.lower,
            &x.upper * &y.upper,
        ];
        let mut lo = candidates[0].clone();
        let mut hi = candidates[0].clone();
        for c in &candidates[1..] {
            if c < &lo {
                lo = c.clone();
            }
            if c > &hi {
                hi = c.clone();
            }
        }
        (lo, hi)
    }
}

fn inv_interval(c: &Enclosure) -> Result<(Rational, Rational), RoundError> {
    if c.lower.is_positive() || c.upper.is_negative() {
        let lower = c.upper.recip().expect("endpoint is nonzero");
        let upper = c.lower.recip().expect("endpoint is nonzero");
        Ok((lower, upper))
    } else {
        Err(RoundError::InvStraddle {
            degenerate: c.is_degenerate(),
        })
    }
}

enum Read {
    Done {
        q0: BigInt,
        digits: Vec<BigUint>,
        terminated: bool,
    },
    Partial {
        q0_known: bool,
        digits: usize,
    },
}

/// Shared digit-extraction driver: feed progressively tighter enclosures of
/// a value and certify digits where the floor decision is forced. `Ok(None)`
/// from the encloser means "this round produced no interval, refine more".
pub(crate) fn extract_digits_with<F>(
    mut encloser: F,
    cseq: &CSeq,
    count: usize,
    rounds: usize,
) -> Result<DigitsOutcome, RealError>
where
    F: FnMut(usize) -> Result<Option<Enclosure>, RealError>,
{
    let mut q0_known = false;
    let mut best = 0usize;
    for r in 1..=rounds.max(1) {
        let Some(enc) = encloser(r)? else { continue };
        match read_digits(&enc, cseq, count)? {
            Read::Done {
                q0,
                digits,
                terminated,
            } => {
                return Ok(DigitsOutcome::Decided(Expansion::from_parts(
                    q0, digits, terminated, cseq,
                )?))
            }
            Read::Partial {
                q0_known: q,
                digits,
            } => {
                q0_known |= q;
                best = best.max(digits);
            }
        }
    }
    Ok(DigitsOutcome::Undecided {
        at: if q0_known { best + 1 } else { 0 },
    })
}

/// Reads as many digits as one enclosure certifies. A degenerate enclosure
/// (exact value) finishes by direct expansion.
fn read_digits(enc: &Enclosure, cseq: &CSeq, count: usize) -> Result<Read, RealError> {
    if enc.is_degenerate() {
        let v = &enc.lower;
        let (digits, terminated) = expand_tail(v.fract(), 1, cseq, count)?;
        return Ok(Read::Done {
            q0: v.floor_int(),
            digits,
            terminated,
        });
    }
    let f_lo = enc.lower.floor_int();
    let f_hi = enc.upper.floor_int();
    if f_lo != f_hi {
        return Ok(Read::Partial {
            q0_known: false,
            digits: 0,
        });
    }
    let q0_rat = Rational::from_integer(f_lo.clone());
    let mut a_lo = &enc.lower - &q0_rat;
    let mut a_hi = &enc.upper - &q0_rat;
    let mut digits: Vec<BigUint> = Vec::new();
    loop {
        if digits.len() == count {
            return Ok(Read::Done {
                q0: f_lo,
                digits,
                terminated: false,
            });
        }
        let n = digits.len() + 1;
        if a_lo == a_hi {
            // The remainder is pinned exactly; the rest is a plain expansion.
            let (rest, terminated) = expand_tail(a_lo, n, cseq, count - digits.len())?;
            digits.extend(rest);
            return Ok(Read::Done {
                q0: f_lo,
                digits,
                terminated,
            });
        }
        if !a_lo.is_positive() {
            // The remainder may be zero (termination) or merely tiny; a
            // non-degenerate interval cannot tell.
            return Ok(Read::Partial {
                q0_known: true,
                digits: digits.len(),
            });
        }
        let c = BigInt::from(cseq.eval(n)?);
        // Candidate from the upper bound; certified when the whole interval
        // sits inside (c/(a+1), c/a].
        let cand = (&c * a_hi.denom()) / a_hi.numer();
        let below = Rational::new(c.clone(), &cand + BigInt::one()).expect("positive digit");
        if a_lo <= below {
            return Ok(Read::Partial {
                q0_known: true,
                digits: digits.len(),
            });
        }
        let q = Rational::new(c, cand.clone()).expect("positive digit");
        let next_lo = &q - &a_hi;
        let next_hi = &q - &a_lo;
        a_lo = next_lo;
        a_hi = next_hi;
        digits.push(cand.to_biguint().expect("digit is positive"));
    }
}

/// Digitwise sup/inf elimination over the member expansions.
fn extremum(xs: &[Real], budget: usize, sup: bool) -> Result<Real, RealError> {
    if xs.is_empty() {
        return Err(RealError::EmptySet);
    }
    for pair in xs.windows(2) {
        if !pair[0].cseq.same_rule(&pair[1].cseq) {
            return Err(RealError::CseqMismatch);
        }
    }
    // Digit views, with the canonical gate for anything that is not an
    // exact leaf (exact expansions are canonical by construction).
    let mut views = Vec::with_capacity(xs.len());
    for (i, x) in xs.iter().enumerate() {
        let (view, needs_gate) = match x.repr.as_ref() {
            Repr::Exact { .. } => (x.expansion()?, false),
            Repr::Stream { expansion } => (expansion.clone(), true),
            Repr::Node { .. } => match x.digits(budget.max(1), budget.max(1))? {
                DigitsOutcome::Decided(e) => (e, true),
                DigitsOutcome::Undecided { at } => return Err(RealError::Undecided { at }),
            },
        };
        if needs_gate {
            let horizon = view.known_len().unwrap_or(budget.max(1));
            let report = canon::check_t(&view, horizon)?;
            if !report.valid {
                return Err(RealError::InvalidMember { member: i });
            }
        }
        views.push(view);
    }

    let extreme_q0 = views
        .iter()
        .map(|e| e.q0())
        .reduce(|a, b| if (sup && b > a) || (!sup && b < a) { b } else { a })
        .expect("nonempty")
        .clone();
    let mut survivors: Vec<usize> = (0..views.len())
        .filter(|&i| views[i].q0() == &extreme_q0)
        .collect();

    let mut n = 1usize;
    while survivors.len() > 1 {
        if n > budget {
            return Err(RealError::Undecided { at: n });
        }
        let terms: Vec<TermView> = survivors.iter().map(|&i| views[i].term(n)).collect();
        if terms.contains(&TermView::Unknown) {
            return Err(RealError::Undecided { at: n });
        }
        if terms.iter().all(|t| *t == TermView::ZeroTail) {
            // All survivors terminated together: they are equal.
            break;
        }
        // The maximum wants the larger ratio at odd indices and the smaller
        // at even ones; the minimum mirrors.
        let want_max_q = sup == (n % 2 == 1);
        let mut best = terms[0].clone();
        for t in &terms[1..] {
            let o = cmp_q(t, &best);
            if (want_max_q && o == Ordering::Greater) || (!want_max_q && o == Ordering::Less) {
                best = t.clone();
            }
        }
        survivors = survivors
            .iter()
            .zip(terms.iter())
            .filter(|(_, t)| cmp_q(t, &best) == Ordering::Equal)
            .map(|(&i, _)| i)
            .collect();
        n += 1;
    }
    Ok(xs[survivors[0]].clone())
}

/// Orders two term views by ratio value `q = c/a` (shared `c`): the zero
/// tail is below every digit, and a smaller digit means a larger ratio.
fn cmp_q(a: &TermView, b: &TermView) -> Ordering {
    match (a, b) {
        (TermView::ZeroTail, TermView::ZeroTail) => Ordering::Equal,
        (TermView::ZeroTail, TermView::Digit(_)) => Ordering::Less,
        (TermView::Digit(_), TermView::ZeroTail) => Ordering::Greater,
        (TermView::Digit(x), TermView::Digit(y)) => y.cmp(x),
        _ => unreachable!("unknown views are rejected before ordering"),
    }
}

/// Per-`m` evidence for the convergence predicate: the least probe index
/// from which `|a_n - b_n| < 1/m` holds through the window, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LEntry {
    pub m: usize,
    pub settles_at: Option<usize>,
}

/// Finite evidence (never proof) for `L(a_n - b_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LEvidence {
    pub entries: Vec<LEntry>,
    pub probed: usize,
}

impl LEvidence {
    pub fn holds(&self) -> bool {
        self.entries.iter().all(|e| e.settles_at.is_some())
    }

    /// The least `m` whose bound was still violated at the window's end.
    pub fn counter_evidence(&self) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.settles_at.is_none())
            .map(|e| e.m)
    }
}

/// Probes the difference of two coordinate sequences (caller asserts both
/// are monotone and bounded) against every bound `1/m` for `m <= m_max`.
pub fn check_l(pairs: &[(Rational, Rational)], m_max: usize, n_probe: usize) -> LEvidence {
    let probed = pairs.len().min(n_probe);
    let diffs: Vec<Rational> = pairs[..probed]
        .iter()
        .map(|(a, b)| (a - b).abs())
        .collect();
    let mut entries = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let bound = Rational::new(BigInt::one(), BigInt::from(m)).expect("m >= 1");
        let settles_at = match diffs.iter().rposition(|d| d >= &bound) {
            None => Some(1),
            // 1-based index one past the last violation, if the verified
            // tail is nonempty.
            Some(idx) if idx + 1 < probed => Some(idx + 2),
            Some(_) => None,
        };
        entries.push(LEntry { m, settles_at });
    }
    LEvidence { entries, probed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn c1() -> CSeq {
        CSeq::constant(1u32)
    }

    fn exact(n: i64, d: i64) -> Real {
        Real::exact(r(n, d), &c1())
    }

    fn digit_list(e: &Expansion) -> Vec<BigUint> {
        let mut out = Vec::new();
        let mut n = 1;
        while let TermView::Digit(d) = e.term(n) {
            out.push(d);
            n += 1;
            if n > 64 {
                break;
            }
        }
        out
    }

    fn small_digits(e: &Expansion) -> Vec<u64> {
        digit_list(e)
            .into_iter()
            .map(|d| u64::try_from(d).unwrap())
            .collect()
    }

    #[test]
    fn truncate_examples() {
        let x = Real::stream(Expansion::parse_literal("0;1,3,21", &c1()).unwrap()).unwrap();
        assert_eq!(x.truncate(2).unwrap(), r(2, 3));
        assert_eq!(x.truncate(3).unwrap(), r(5, 7));
        let three = Real::stream(Expansion::parse_literal("3", &c1()).unwrap()).unwrap();
        assert_eq!(three.truncate(0).unwrap(), r(3, 1));
    }

    #[test]
    fn truncation_sandwich() {
        // X_2n <= X_(2n+2) <= X <= X_(2n+1) <= X_(2n-1)
        let e = Expansion::expand(&r(355, 452), &c1(), DEFAULT_MAX_TERMS).unwrap();
        let x = Real::stream(e.clone()).unwrap();
        let v = e.value().unwrap().unwrap();
        let len = e.known_len().unwrap();
        for n in 1..len {
            let even = x.truncate(2 * n).unwrap();
            let even_next = x.truncate(2 * n + 2).unwrap();
            let odd = x.truncate(2 * n - 1).unwrap();
            let odd_next = x.truncate(2 * n + 1).unwrap();
            assert!(even <= even_next && even_next <= v);
            assert!(v <= odd_next && odd_next <= odd);
        }
    }

    #[test]
    fn enclose_examples() {
        let p = r(1, 100);
        let e = exact(5, 7).enclose(&p, 8).unwrap();
        assert_eq!((e.lower, e.upper), (r(5, 7), r(5, 7)));

        // A deferred add of two exact halves still collapses to a point
        // interval round by round.
        let sum = Real::deferred(RealOp::Add, vec![exact(1, 2), exact(1, 2)]).unwrap();
        let e = sum.enclose(&p, 8).unwrap();
        assert_eq!((e.lower, e.upper), (r(1, 1), r(1, 1)));

        let prod = Real::deferred(RealOp::Mul, vec![exact(1, 2), exact(2, 3)]).unwrap();
        let tight = Rational::new(BigInt::one(), BigInt::from(1_000_000)).unwrap();
        let e = prod.enclose(&tight, 8).unwrap();
        assert_eq!((e.lower, e.upper), (r(1, 3), r(1, 3)));

        // The public op collapses eagerly.
        let collapsed = exact(1, 2).add(&exact(1, 2)).unwrap();
        assert_eq!(collapsed.as_exact(), Some(&r(1, 1)));
    }

    #[test]
    fn enclosure_of_stream_brackets_value() {
        let e = Expansion::expand(&r(5, 7), &c1(), DEFAULT_MAX_TERMS).unwrap();
        let x = Real::stream(e).unwrap();
        let enc = x.enclose(&r(1, 2), 1).unwrap();
        assert!(enc.contains(&r(5, 7)));
        // Tight precision reaches the exact value of a terminated stream.
        let enc = x.enclose(&default_precision(), DEFAULT_ROUNDS).unwrap();
        assert!(enc.is_degenerate() && enc.lower == r(5, 7));
    }

    #[test]
    fn arithmetic_examples() {
        let sum = exact(5, 7).add(&exact(1, 2)).unwrap();
        assert_eq!(sum.as_exact(), Some(&r(17, 14)));
        let se = sum.expansion().unwrap();
        assert_eq!(se.q0(), &BigInt::from(1));
        assert_eq!(small_digits(&se), vec![4, 28]);

        let neg = exact(1, 2).neg();
        assert_eq!(neg.as_exact(), Some(&r(-1, 2)));
        let ne = neg.expansion().unwrap();
        assert_eq!(ne.q0(), &BigInt::from(-1));
        assert_eq!(small_digits(&ne), vec![2]);

        let inv = exact(1, 2).inv().unwrap();
        assert_eq!(inv.as_exact(), Some(&r(2, 1)));
        assert_eq!(inv.expansion().unwrap().q0(), &BigInt::from(2));

        assert!(matches!(exact(0, 1).inv(), Err(RealError::InversionOfZero)));
    }

    #[test]
    fn inv_node_of_zero_valued_stream_errors() {
        let zero_stream =
            Real::stream(Expansion::parse_literal("0", &c1()).unwrap()).unwrap();
        let node = Real::deferred(RealOp::Inv, vec![zero_stream]).unwrap();
        assert!(matches!(
            node.enclose(&r(1, 10), 16),
            Err(RealError::InversionOfZero)
        ));
    }

    #[test]
    fn digits_examples() {
        let x = exact(17, 14);
        let DigitsOutcome::Decided(e) = x.digits(2, 8).unwrap() else {
            panic!("exact digits decide");
        };
        assert_eq!(e.q0(), &BigInt::from(1));
        assert_eq!(small_digits(&e), vec![4, 28]);

        // A deferred node over exact children: 1/3 + 1/3 = 2/3 = (0;[1,3]).
        let node = Real::deferred(RealOp::Add, vec![exact(1, 3), exact(1, 3)]).unwrap();
        let DigitsOutcome::Decided(e) = node.digits(1, 8).unwrap() else {
            panic!("degenerate enclosure decides");
        };
        assert_eq!(e.q0(), &BigInt::from(0));
        assert_eq!(small_digits(&e), vec![1]);
        assert!(!e.is_terminated());
    }

    #[test]
    fn digits_boundary_stays_undecided() {
        // Value known only as a one-digit prefix: the enclosure stays
        // [something, 1/2] with a lower bound of 0, so not even a_1 can be
        // certified; the continuation might terminate or not.
        let prefix = Expansion::parse_literal("0;2;...", &c1()).unwrap();
        let s = Real::stream(prefix).unwrap();
        match s.digits(2, 16).unwrap() {
            DigitsOutcome::Undecided { at } => assert!(at <= 2),
            DigitsOutcome::Decided(_) => panic!("cannot decide past the prefix"),
        }
        // The same through a node with a non-exact child.
        let prefix = Expansion::parse_literal("0;2;...", &c1()).unwrap();
        let zero = Real::exact(Rational::zero(), &c1());
        let node =
            Real::deferred(RealOp::Add, vec![Real::stream(prefix).unwrap(), zero]).unwrap();
        match node.digits(1, 16).unwrap() {
            DigitsOutcome::Undecided { at } => assert!(at <= 1),
            DigitsOutcome::Decided(_) => panic!("boundary must stay undecided"),
        }
    }

    #[test]
    fn digits_through_an_inversion_node() {
        // inv of a terminated stream: early rounds straddle nothing but are
        // wide; the degenerate round finishes the extraction exactly.
        let stream =
            Real::stream(Expansion::expand(&r(5, 7), &c1(), DEFAULT_MAX_TERMS).unwrap()).unwrap();
        let node = Real::deferred(RealOp::Inv, vec![stream]).unwrap();
        let DigitsOutcome::Decided(e) = node.digits(4, 16).unwrap() else {
            panic!("inversion of an exact stream decides");
        };
        let direct = Expansion::expand(&r(7, 5), &c1(), DEFAULT_MAX_TERMS).unwrap();
        assert!(e.same_digits(&direct));
    }

    #[test]
    fn sup_inf_examples() {
        let xs = vec![exact(1, 2), exact(2, 3)];
        let sup = Real::sup_finite(&xs, 64).unwrap();
        assert_eq!(sup.as_exact(), Some(&r(2, 3)));
        let inf = Real::inf_finite(&xs, 64).unwrap();
        assert_eq!(inf.as_exact(), Some(&r(1, 2)));

        // Equal members resolve to the common value.
        let xs = vec![exact(1, 2), exact(1, 2)];
        let sup = Real::sup_finite(&xs, 64).unwrap();
        assert_eq!(sup.as_exact(), Some(&r(1, 2)));

        assert!(matches!(Real::sup_finite(&[], 8), Err(RealError::EmptySet)));
    }

    #[test]
    fn enclose_budget_and_json() {
        // A bare prefix cannot be refined past its digits.
        let prefix = Expansion::parse_literal("0;2,7;...", &c1()).unwrap();
        let s = Real::stream(prefix).unwrap();
        let tight = Rational::new(BigInt::one(), BigInt::from(1_000_000)).unwrap();
        assert!(matches!(
            s.enclose(&tight, 8),
            Err(RealError::BudgetExceeded { rounds: 8 })
        ));
        // Loose precision succeeds with the bracket it has.
        let enc = s.enclose(&r(1, 2), 8).unwrap();
        let v = enc.to_json();
        assert_eq!(v["lower"], serde_json::json!(enc.lower.to_string()));
        assert_eq!(v["upper"], serde_json::json!(enc.upper.to_string()));
        assert_eq!(v["terms_used"], serde_json::json!(enc.terms_used));
    }

    #[test]
    fn sup_of_streams_agreeing_beyond_budget_is_undecided() {
        let sylvester_digit = |n: usize| {
            let mut v = BigUint::from(2u32);
            for _ in 1..n {
                v = &v * (&v + BigUint::one());
            }
            v
        };
        let a = Real::stream(Expansion::from_rule(BigInt::from(0), sylvester_digit, &c1()))
            .unwrap();
        let b = Real::stream(Expansion::from_rule(BigInt::from(0), sylvester_digit, &c1()))
            .unwrap();
        assert!(matches!(
            Real::sup_finite(&[a, b], 6),
            Err(RealError::Undecided { at: 7 })
        ));
    }

    #[test]
    fn distributivity_within_enclosure_width() {
        // X(Y + Z) and XY + XZ over stream leaves: different DAGs for the
        // same value, so their enclosures must intersect at every width.
        let leaf = |n: i64, d: i64| {
            Real::stream(Expansion::expand(&r(n, d), &c1(), DEFAULT_MAX_TERMS).unwrap()).unwrap()
        };
        let (x, y, z) = (leaf(5, 7), leaf(-3, 4), leaf(9, 11));
        let lhs = Real::deferred(
            RealOp::Mul,
            vec![
                x.clone(),
                Real::deferred(RealOp::Add, vec![y.clone(), z.clone()]).unwrap(),
            ],
        )
        .unwrap();
        let rhs = Real::deferred(
            RealOp::Add,
            vec![
                Real::deferred(RealOp::Mul, vec![x.clone(), y]).unwrap(),
                Real::deferred(RealOp::Mul, vec![x, z]).unwrap(),
            ],
        )
        .unwrap();
        let p = r(1, 1000);
        let el = lhs.enclose(&p, 64).unwrap();
        let er = rhs.enclose(&p, 64).unwrap();
        assert!(el.lower <= er.upper && er.lower <= el.upper);
        let value = &r(5, 7) * &(&r(-3, 4) + &r(9, 11));
        assert!(el.contains(&value) && er.contains(&value));
    }

    #[test]
    fn sup_rejects_invalid_members() {
        // A finite literal with a canonical violation is rejected at stream
        // construction already.
        let bad = Expansion::parse_literal("0;1,2", &c1()).unwrap();
        assert!(matches!(
            Real::stream(bad),
            Err(RealError::NotCanonical { .. })
        ));
        // A rule-backed stream bypasses construction-time validation but is
        // caught by the sup gate: digits 2,3,4,... violate the growth bound.
        let lazy = Expansion::from_rule(BigInt::from(0), |n| BigUint::from(n as u64 + 1), &c1());
        let member = Real::stream(lazy).unwrap();
        let good = Real::stream(Expansion::parse_literal("0;1,3", &c1()).unwrap()).unwrap();
        assert!(matches!(
            Real::sup_finite(&[good, member], 16),
            Err(RealError::InvalidMember { member: 1 })
        ));
    }

    #[test]
    fn check_l_examples() {
        // Even truncations of a terminated expansion against their shift:
        // differences reach zero, so every m settles.
        let e = Expansion::expand(&r(5, 7), &c1(), DEFAULT_MAX_TERMS).unwrap();
        let x = Real::stream(e).unwrap();
        let pairs: Vec<(Rational, Rational)> = (1..=8)
            .map(|n| (x.truncate(2 * n).unwrap(), x.truncate(2 * n + 2).unwrap()))
            .collect();
        let ev = check_l(&pairs, 50, 8);
        assert!(ev.holds());

        // Geometric pair: a_n = 1 - 1/2^n, b_n shifted by one.
        let pairs: Vec<(Rational, Rational)> = (1..=40)
            .map(|n| {
                let p = num::pow(BigInt::from(2), n);
                let a = &Rational::one() - &Rational::new(BigInt::one(), p.clone()).unwrap();
                let b = &Rational::one()
                    - &Rational::new(BigInt::one(), &p * BigInt::from(2)).unwrap();
                (a, b)
            })
            .collect();
        let ev = check_l(&pairs, 1000, 40);
        assert!(ev.holds());
        // d_n = 1/2^(n+1): the bound 1/m settles once 2^(n+1) > m.
        for entry in &ev.entries {
            let n = entry.settles_at.expect("holds");
            if n > 1 {
                assert!(num::pow(BigInt::from(2), n) <= BigInt::from(entry.m));
                assert!(num::pow(BigInt::from(2), n + 1) > BigInt::from(entry.m));
            }
        }

        // Limits 1/2 vs 2/3: gap 1/6, first counter-evidence at m = 7.
        let pairs: Vec<(Rational, Rational)> = (1..=40)
            .map(|n| {
                let p = num::pow(BigInt::from(2), n);
                let a = &r(1, 2) - &Rational::new(BigInt::one(), p.clone()).unwrap();
                let b = &r(2, 3) - &Rational::new(BigInt::from(2), p).unwrap();
                (a, b)
            })
            .collect();
        let ev = check_l(&pairs, 20, 40);
        assert!(!ev.holds());
        assert_eq!(ev.counter_evidence(), Some(7));
    }

    #[derive(Debug, Clone)]
    enum Expr {
        Leaf(i64, i64, bool),
        Add(Box<Expr>, Box<Expr>),
        Neg(Box<Expr>),
        Mul(Box<Expr>, Box<Expr>),
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = (-60i64..=60, 1i64..=60, proptest::bool::ANY)
            .prop_map(|(n, d, s)| Expr::Leaf(n, d, s));
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            ]
        })
    }

    fn build(e: &Expr, cs: &CSeq) -> (Real, Rational) {
        match e {
            Expr::Leaf(n, d, as_stream) => {
                let v = Rational::ratio(*n, *d);
                let real = if *as_stream {
                    Real::stream(Expansion::expand(&v, cs, DEFAULT_MAX_TERMS).unwrap()).unwrap()
                } else {
                    Real::exact(v.clone(), cs)
                };
                (real, v)
            }
            Expr::Add(a, b) => {
                let (ra, va) = build(a, cs);
                let (rb, vb) = build(b, cs);
                (
                    Real::deferred(RealOp::Add, vec![ra, rb]).unwrap(),
                    &va + &vb,
                )
            }
            Expr::Neg(a) => {
                let (ra, va) = build(a, cs);
                (Real::deferred(RealOp::Neg, vec![ra]).unwrap(), -&va)
            }
            Expr::Mul(a, b) => {
                let (ra, va) = build(a, cs);
                let (rb, vb) = build(b, cs);
                (
                    Real::deferred(RealOp::Mul, vec![ra, rb]).unwrap(),
                    &va * &vb,
                )
            }
        }
    }

    proptest! {
        // Every enclosure of a DAG contains the exact value it denotes.
        #[test]
        fn enclosure_soundness(expr in arb_expr()) {
            let cs = CSeq::constant(1u32);
            let (real, value) = build(&expr, &cs);
            let precision = r(1, 1_000_000);
            let enc = real.enclose(&precision, 64).unwrap();
            prop_assert!(enc.contains(&value));
            prop_assert!(enc.width() <= precision);
        }

        // The digit extractor agrees with direct expansion on DAG values.
        #[test]
        fn extractor_matches_expansion(expr in arb_expr()) {
            let cs = CSeq::constant(1u32);
            let (real, value) = build(&expr, &cs);
            let direct = Expansion::expand(&value, &cs, DEFAULT_MAX_TERMS).unwrap();
            match real.digits(8, 64).unwrap() {
                DigitsOutcome::Decided(e) => {
                    prop_assert_eq!(e.q0(), direct.q0());
                    let got = digit_list(&e);
                    let want = digit_list(&direct);
                    let upto = got.len().min(want.len());
                    prop_assert_eq!(&got[..upto], &want[..upto]);
                    if e.is_terminated() {
                        prop_assert_eq!(got, want);
                    }
                }
                DigitsOutcome::Undecided { .. } => {
                    // All leaves are exact rationals or terminated streams,
                    // so enclosures become degenerate and must decide.
                    prop_assert!(false, "exact DAG stayed undecided");
                }
            }
        }

        // sup/inf of exact sets equal the rational max/min.
        #[test]
        fn sup_inf_match_max_min(
            values in proptest::collection::vec((-80i64..=80, 1i64..=80), 1..6)
        ) {
            let cs = CSeq::constant(1u32);
            let reals: Vec<Real> = values.iter()
                .map(|(n, d)| Real::exact(Rational::ratio(*n, *d), &cs))
                .collect();
            let rationals: Vec<Rational> = values.iter()
                .map(|(n, d)| Rational::ratio(*n, *d))
                .collect();
            let max = rationals.iter().cloned().reduce(Rational::max).unwrap();
            let min = rationals.iter().cloned().reduce(Rational::min).unwrap();
            let sup = Real::sup_finite(&reals, 256).unwrap();
            let inf = Real::inf_finite(&reals, 256).unwrap();
            prop_assert_eq!(sup.as_exact().unwrap(), &max);
            prop_assert_eq!(inf.as_exact().unwrap(), &min);
        }
    }
}
