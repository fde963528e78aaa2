//! The alternating-Sylvester expansion engine.
//!
//! For a value `alpha` and multiplier sequence `{c_n}` the recursion is
//!
//! ```text
//! q0 = floor(alpha),  A_1 = alpha - q0
//! a_n = floor(c_n / A_n)   (A_n != 0)
//! q_n = c_n / a_n
//! A_(n+1) = q_n - A_n
//! ```
//!
//! giving `alpha = q0 + sum (-1)^(n-1) q_n`. Expansions store the integer
//! digits `a_n`; the ratios `q_n = c_n/a_n` are derived. A_n stays an exact
//! rational throughout, and for rational input the numerator of A_n strictly
//! decreases, so the recursion terminates.

use std::fmt;
use std::sync::{Arc, Mutex};

use num::bigint::{BigInt, BigUint};
use num::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cseq::{CSeq, CseqError};
use crate::rational::Rational;

/// Default digit budget for expansion; digit growth is doubly exponential,
/// so real expansions never get near this. The guard bounds memory on
/// pathological inputs.
pub const DEFAULT_MAX_TERMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpansionError {
    #[error("expansion did not terminate within {max_terms} terms")]
    BudgetExceeded { max_terms: usize },
    #[error("expansion digits must be positive (index {index})")]
    ZeroDigit { index: usize },
    #[error(transparent)]
    Cseq(#[from] CseqError),
    #[error("invalid expansion literal at byte {position}: expected {expected}")]
    Literal {
        position: usize,
        expected: &'static str,
    },
}

/// State of the digit recursion: the remainder `A_n` and its index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepState {
    remainder: Rational,
    index: usize,
}

impl StepState {
    /// Starts a recursion at index `n` with remainder `A_n` in `[0, 1]`.
    pub fn new(remainder: Rational, index: usize) -> Self {
        assert!(index >= 1, "digit index starts at 1");
        assert!(
            !remainder.is_negative() && remainder <= Rational::one(),
            "remainder must lie in [0, 1]"
        );
        StepState { remainder, index }
    }

    pub fn remainder(&self) -> &Rational {
        &self.remainder
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Digit {
        digit: BigUint,
        ratio: Rational,
        next: StepState,
    },
    Terminated,
}

/// One step of the recursion: `a = floor(c/A)`, `q = c/a`, `A' = q - A`.
///
/// The digit satisfies `c/(a+1) < A <= c/a`.
pub fn step(state: &StepState, c: &BigUint) -> StepOutcome {
    if state.remainder.is_zero() {
        return StepOutcome::Terminated;
    }
    let (digit, ratio) = digit_for(&state.remainder, c);
    let next = StepState {
        remainder: &ratio - &state.remainder,
        index: state.index + 1,
    };
    StepOutcome::Digit { digit, ratio, next }
}

/// `a = floor(c / A)` and `q = c/a` for `A` in `(0, 1]`.
fn digit_for(remainder: &Rational, c: &BigUint) -> (BigUint, Rational) {
    let c_int = BigInt::from(c.clone());
    // floor(c * den / num); all quantities positive.
    let digit_int = (&c_int * remainder.denom()) / remainder.numer();
    let digit = digit_int
        .to_biguint()
        .expect("digit is positive for A in (0, 1]");
    let ratio = Rational::new(c_int, digit_int).expect("digit is nonzero");
    (digit, ratio)
}

enum TermSource {
    Finite {
        digits: Vec<BigUint>,
        terminated: bool,
    },
    Rule {
        gen: Box<dyn Fn(usize) -> BigUint + Send + Sync>,
        cache: Mutex<Vec<BigUint>>,
    },
}

/// What an expansion knows about its `n`-th term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermView {
    /// The digit `a_n` is present (so `q_n = c_n/a_n`).
    Digit(BigUint),
    /// The expansion terminated before `n`, so `q_n = 0`.
    ZeroTail,
    /// A non-terminated prefix ran out of known digits.
    Unknown,
}

/// A generalized alternating-Sylvester expansion: an integer part, digits
/// `a_1 < a_2 < ...`, and the multiplier sequence they were produced under.
///
/// Digits come from a finite list (terminated or a known prefix) or from an
/// infinite rule whose values are memoized with compute-once semantics.
/// Values are immutable once produced; clones share storage.
#[derive(Clone)]
pub struct Expansion {
    q0: BigInt,
    terms: Arc<TermSource>,
    cseq: CSeq,
}

impl Expansion {
    /// Expands a rational exactly. Terminates for every rational input; the
    /// budget only guards against `max_terms` set below the true length.
    pub fn expand(
        alpha: &Rational,
        cseq: &CSeq,
        max_terms: usize,
    ) -> Result<Expansion, ExpansionError> {
        let q0 = alpha.floor_int();
        let (digits, terminated) = expand_tail(alpha.fract(), 1, cseq, max_terms)?;
        if !terminated {
            return Err(ExpansionError::BudgetExceeded { max_terms });
        }
        Ok(Expansion {
            q0,
            terms: Arc::new(TermSource::Finite {
                digits,
                terminated: true,
            }),
            cseq: cseq.clone(),
        })
    }

    /// Builds an expansion from explicit parts. `terminated: false` marks a
    /// known prefix of a longer expansion.
    pub fn from_parts(
        q0: BigInt,
        digits: Vec<BigUint>,
        terminated: bool,
        cseq: &CSeq,
    ) -> Result<Expansion, ExpansionError> {
        if let Some(i) = digits.iter().position(|d| d.is_zero()) {
            return Err(ExpansionError::ZeroDigit { index: i + 1 });
        }
        Ok(Expansion {
            q0,
            terms: Arc::new(TermSource::Finite { digits, terminated }),
            cseq: cseq.clone(),
        })
    }

    /// An infinite digit stream defined by a rule; `gen(n)` must return the
    /// positive digit `a_n`. Values are memoized once computed.
    pub fn from_rule(
        q0: BigInt,
        gen: impl Fn(usize) -> BigUint + Send + Sync + 'static,
        cseq: &CSeq,
    ) -> Expansion {
        Expansion {
            q0,
            terms: Arc::new(TermSource::Rule {
                gen: Box::new(gen),
                cache: Mutex::new(Vec::new()),
            }),
            cseq: cseq.clone(),
        }
    }

    pub fn q0(&self) -> &BigInt {
        &self.q0
    }

    pub fn cseq(&self) -> &CSeq {
        &self.cseq
    }

    /// True when the digit list is complete (all later `q_n` are zero).
    pub fn is_terminated(&self) -> bool {
        match self.terms.as_ref() {
            TermSource::Finite { terminated, .. } => *terminated,
            TermSource::Rule { .. } => false,
        }
    }

    /// Number of known digits; `None` for rule-backed streams (unbounded).
    pub fn known_len(&self) -> Option<usize> {
        match self.terms.as_ref() {
            TermSource::Finite { digits, .. } => Some(digits.len()),
            TermSource::Rule { .. } => None,
        }
    }

    pub fn term(&self, n: usize) -> TermView {
        assert!(n >= 1, "digit index starts at 1");
        match self.terms.as_ref() {
            TermSource::Finite { digits, terminated } => {
                if n <= digits.len() {
                    TermView::Digit(digits[n - 1].clone())
                } else if *terminated {
                    TermView::ZeroTail
                } else {
                    TermView::Unknown
                }
            }
            TermSource::Rule { gen, cache } => {
                let mut cache = cache.lock().expect("digit cache poisoned");
                while cache.len() < n {
                    let d = gen(cache.len() + 1);
                    assert!(!d.is_zero(), "digit rule produced zero");
                    cache.push(d);
                }
                TermView::Digit(cache[n - 1].clone())
            }
        }
    }

    /// The ratio `q_n = c_n/a_n`, or zero past termination, or `None` when
    /// the digit is unknown.
    pub fn ratio(&self, n: usize) -> Result<Option<Rational>, CseqError> {
        match self.term(n) {
            TermView::Digit(a) => {
                let c = self.cseq.eval(n)?;
                Ok(Some(
                    Rational::new(BigInt::from(c), BigInt::from(a)).expect("positive digit"),
                ))
            }
            TermView::ZeroTail => Ok(Some(Rational::zero())),
            TermView::Unknown => Ok(None),
        }
    }

    /// Exact value, available only for terminated expansions.
    pub fn value(&self) -> Result<Option<Rational>, CseqError> {
        match self.terms.as_ref() {
            TermSource::Finite { digits, terminated } if *terminated => {
                Ok(Some(self.reconstruct(digits.len())?))
            }
            _ => Ok(None),
        }
    }

    /// Partial sum `q0 + sum_(k=1..m) (-1)^(k-1) c_k/a_k` with
    /// `m = min(upto, available digits)`. This is the value of the
    /// truncation `X_m`.
    pub fn reconstruct(&self, upto: usize) -> Result<Rational, CseqError> {
        let m = match self.known_len() {
            Some(len) => upto.min(len),
            None => upto,
        };
        let mut sum = Rational::from_integer(self.q0.clone());
        for k in 1..=m {
            let TermView::Digit(a) = self.term(k) else {
                unreachable!("digit {k} within available range");
            };
            let c = self.cseq.eval(k)?;
            let q = Rational::new(BigInt::from(c), BigInt::from(a)).expect("positive digit");
            if k % 2 == 1 {
                sum = &sum + &q;
            } else {
                sum = &sum - &q;
            }
        }
        Ok(sum)
    }

    /// Exact enclosure of the remainder `A_n` from the `upto`-th pair of
    /// even/odd partial sums of the tail:
    /// `lower = sum of 2*upto tail terms`, `upper = sum of 2*upto - 1`.
    /// Degenerate (exact) once the expansion terminates inside the window.
    pub fn tail_remainder(
        &self,
        n: usize,
        upto: usize,
    ) -> Result<(Rational, Rational), CseqError> {
        assert!(n >= 1 && upto >= 1);
        self.tail_brackets(n, 2 * upto)
    }

    /// Walks at most `window` tail terms starting at index `n`, keeping the
    /// latest even partial sum (a lower bound for `A_n`) and the latest odd
    /// one (an upper bound). Hitting the zero tail makes the pair exact.
    pub(crate) fn tail_brackets(
        &self,
        n: usize,
        window: usize,
    ) -> Result<(Rational, Rational), CseqError> {
        let mut lower = Rational::zero();
        let mut upper = Rational::one();
        let mut sum = Rational::zero();
        for j in 1..=window {
            match self.term(n + j - 1) {
                TermView::Digit(a) => {
                    let c = self.cseq.eval(n + j - 1)?;
                    let q =
                        Rational::new(BigInt::from(c), BigInt::from(a)).expect("positive digit");
                    if j % 2 == 1 {
                        sum = &sum + &q;
                        upper = sum.clone();
                    } else {
                        sum = &sum - &q;
                        lower = sum.clone();
                    }
                }
                TermView::ZeroTail => return Ok((sum.clone(), sum)),
                TermView::Unknown => break,
            }
        }
        Ok((lower, upper))
    }

    /// Digits compare equal term for term (and share q0 and termination).
    pub fn same_digits(&self, other: &Expansion) -> bool {
        if self.q0 != other.q0 {
            return false;
        }
        match (self.terms.as_ref(), other.terms.as_ref()) {
            (
                TermSource::Finite {
                    digits: a,
                    terminated: ta,
                },
                TermSource::Finite {
                    digits: b,
                    terminated: tb,
                },
            ) => a == b && ta == tb,
            _ => false,
        }
    }

    /// JSON rendering. Rule-backed streams render the digits computed so far
    /// with `terminated: false`.
    pub fn to_json(&self) -> Value {
        let digits: Vec<BigUint> = match self.terms.as_ref() {
            TermSource::Finite { digits, .. } => digits.clone(),
            TermSource::Rule { cache, .. } => cache.lock().expect("digit cache").clone(),
        };
        let terms: Vec<Value> = digits.iter().map(|d| big_json(&BigInt::from(d.clone()))).collect();
        json!({
            "q0": big_json(&self.q0),
            "terms": terms,
            "terminated": self.is_terminated(),
            "cseq": self.cseq.to_string(),
        })
    }

    /// Command-line literal `q0;a1,a2,...` with a trailing `;...` marking a
    /// non-terminated prefix.
    pub fn parse_literal(text: &str, cseq: &CSeq) -> Result<Expansion, ExpansionError> {
        let (body, terminated) = match text.strip_suffix(";...") {
            Some(b) => (b, false),
            None => (text, true),
        };
        let mut parts = body.splitn(2, ';');
        let q0_text = parts.next().unwrap_or("");
        let q0: BigInt = q0_text.parse().map_err(|_| ExpansionError::Literal {
            position: 0,
            expected: "integer q0",
        })?;
        let mut digits = Vec::new();
        if let Some(list) = parts.next() {
            if !list.is_empty() {
                let mut pos = q0_text.len() + 1;
                for piece in list.split(',') {
                    let d: BigUint = piece.parse().map_err(|_| ExpansionError::Literal {
                        position: pos,
                        expected: "positive digit",
                    })?;
                    if d.is_zero() {
                        return Err(ExpansionError::Literal {
                            position: pos,
                            expected: "positive digit",
                        });
                    }
                    pos += piece.len() + 1;
                    digits.push(d);
                }
            }
        }
        if !terminated && digits.is_empty() {
            return Err(ExpansionError::Literal {
                position: body.len(),
                expected: "at least one digit before ;...",
            });
        }
        Expansion::from_parts(q0, digits, terminated, cseq)
    }

    /// Inverse of [`Expansion::parse_literal`] for finite expansions.
    pub fn literal_string(&self) -> String {
        let mut out = self.q0.to_string();
        let digits: Vec<BigUint> = match self.terms.as_ref() {
            TermSource::Finite { digits, .. } => digits.clone(),
            TermSource::Rule { cache, .. } => cache.lock().expect("digit cache").clone(),
        };
        if !digits.is_empty() {
            out.push(';');
            for (i, d) in digits.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&d.to_string());
            }
        }
        if !self.is_terminated() {
            out.push_str(";...");
        }
        out
    }
}

impl fmt::Debug for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expansion({})", self.literal_string())
    }
}

/// Arbitrary-precision integers as JSON numbers (serde_json is built with
/// `arbitrary_precision`).
pub(crate) fn big_json(n: &BigInt) -> Value {
    Value::Number(
        n.to_string()
            .parse()
            .expect("integer is a valid JSON number"),
    )
}

/// Runs the digit recursion from `A_start` at digit index `start`, producing
/// at most `max_terms` digits. Returns the digits and whether the recursion
/// reached `A = 0`.
pub(crate) fn expand_tail(
    a_start: Rational,
    start: usize,
    cseq: &CSeq,
    max_terms: usize,
) -> Result<(Vec<BigUint>, bool), ExpansionError> {
    debug_assert!(!a_start.is_negative() && a_start <= Rational::one());
    let mut digits = Vec::new();
    let mut state = StepState {
        remainder: a_start,
        index: start,
    };
    loop {
        if state.remainder.is_zero() {
            return Ok((digits, true));
        }
        if digits.len() >= max_terms {
            return Ok((digits, false));
        }
        let c = cseq.eval(state.index)?;
        match step(&state, &c) {
            StepOutcome::Digit { digit, next, .. } => {
                digits.push(digit);
                state = next;
            }
            StepOutcome::Terminated => return Ok((digits, true)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn digits_of(e: &Expansion) -> Vec<u64> {
        let mut out = Vec::new();
        let mut n = 1;
        while let TermView::Digit(d) = e.term(n) {
            out.push(u64::try_from(d).unwrap());
            n += 1;
        }
        out
    }

    #[test]
    fn step_examples() {
        // A = 5/7, c = 2: a = floor(14/5) = 2, q = 1, next A = 2/7.
        let s = StepState::new(r(5, 7), 1);
        match step(&s, &big(2)) {
            StepOutcome::Digit { digit, ratio, next } => {
                assert_eq!(digit, big(2));
                assert_eq!(ratio, Rational::one());
                assert_eq!(next.remainder(), &r(2, 7));
                assert_eq!(next.index(), 2);
            }
            StepOutcome::Terminated => panic!("should produce a digit"),
        }
        // A = 0 terminates regardless of c.
        let s = StepState::new(Rational::zero(), 1);
        assert_eq!(step(&s, &big(17)), StepOutcome::Terminated);
        // A = 1/4, c = 3: a = 12, q = 3/12 = 1/4, next A = 0.
        let s = StepState::new(r(1, 4), 1);
        match step(&s, &big(3)) {
            StepOutcome::Digit { digit, ratio, next } => {
                assert_eq!(digit, big(12));
                assert_eq!(ratio, r(1, 4));
                assert!(next.remainder().is_zero());
            }
            StepOutcome::Terminated => panic!("should produce a digit"),
        }
    }

    #[test]
    fn step_guarantees_bracketing() {
        // c/(a+1) < A <= c/a for every emitted digit.
        for (num, den, c) in [(5i64, 7i64, 2u64), (1, 4, 3), (3, 5, 1), (999, 1000, 7)] {
            let a_val = r(num, den);
            let s = StepState::new(a_val.clone(), 1);
            let StepOutcome::Digit { digit, .. } = step(&s, &big(c)) else {
                panic!("nonzero remainder must step");
            };
            let d = BigInt::from(digit);
            let c_int = BigInt::from(c);
            let lower = Rational::new(c_int.clone(), &d + BigInt::one()).unwrap();
            let upper = Rational::new(c_int, d).unwrap();
            assert!(lower < a_val && a_val <= upper);
        }
    }

    #[test]
    fn expand_examples() {
        let c1 = CSeq::constant(1u32);
        let e = Expansion::expand(&r(5, 7), &c1, DEFAULT_MAX_TERMS).unwrap();
        assert_eq!(e.q0(), &BigInt::zero());
        assert_eq!(digits_of(&e), vec![1, 3, 21]);
        assert!(e.is_terminated());
        // 1 - 1/3 + 1/21 = 5/7 exactly.
        assert_eq!(e.value().unwrap().unwrap(), r(5, 7));

        let p2 = CSeq::geometric(2u32);
        let e = Expansion::expand(&r(5, 7), &p2, DEFAULT_MAX_TERMS).unwrap();
        assert_eq!(digits_of(&e), vec![2, 14]);
        assert_eq!(e.value().unwrap().unwrap(), r(5, 7));

        let e = Expansion::expand(&r(3, 1), &p2, DEFAULT_MAX_TERMS).unwrap();
        assert_eq!(e.q0(), &BigInt::from(3));
        assert_eq!(digits_of(&e), Vec::<u64>::new());
        assert!(e.is_terminated());
    }

    #[test]
    fn expand_budget_guard() {
        let c1 = CSeq::constant(1u32);
        assert_eq!(
            Expansion::expand(&r(5, 7), &c1, 2).unwrap_err(),
            ExpansionError::BudgetExceeded { max_terms: 2 }
        );
    }

    #[test]
    fn reconstruct_examples() {
        let c1 = CSeq::constant(1u32);
        let e = Expansion::from_parts(
            BigInt::zero(),
            vec![big(1), big(3), big(21)],
            true,
            &c1,
        )
        .unwrap();
        assert_eq!(e.reconstruct(3).unwrap(), r(5, 7));
        assert_eq!(e.reconstruct(2).unwrap(), r(2, 3));
        assert_eq!(e.reconstruct(10).unwrap(), r(5, 7));

        let i3 = Expansion::from_parts(BigInt::from(3), vec![], true, &c1).unwrap();
        assert_eq!(i3.reconstruct(0).unwrap(), r(3, 1));
    }

    #[test]
    fn tail_remainder_examples() {
        let c1 = CSeq::constant(1u32);
        let e = Expansion::from_parts(
            BigInt::zero(),
            vec![big(1), big(3), big(21)],
            true,
            &c1,
        )
        .unwrap();
        // Past the end of a terminated expansion the remainder is exactly 0.
        assert_eq!(
            e.tail_remainder(4, 1).unwrap(),
            (Rational::zero(), Rational::zero())
        );
        // A_2 = 1 - 5/7 = 2/7 exactly once the whole tail is summed.
        assert_eq!(e.tail_remainder(2, 2).unwrap(), (r(2, 7), r(2, 7)));
        // First bracket pair: lower = 1/3 - 1/21 = 2/7, upper = 1/3.
        let (lo, hi) = e.tail_remainder(2, 1).unwrap();
        assert_eq!(lo, r(2, 7));
        assert_eq!(hi, r(1, 3));
        assert!(lo <= r(2, 7) && r(2, 7) <= hi);
    }

    #[test]
    fn literal_roundtrip() {
        let c1 = CSeq::constant(1u32);
        let e = Expansion::parse_literal("0;1,3,21", &c1).unwrap();
        assert_eq!(digits_of(&e), vec![1, 3, 21]);
        assert!(e.is_terminated());
        assert_eq!(e.literal_string(), "0;1,3,21");

        let s = Expansion::parse_literal("-2;5,90;...", &c1).unwrap();
        assert!(!s.is_terminated());
        assert_eq!(s.q0(), &BigInt::from(-2));
        assert_eq!(s.term(3), TermView::Unknown);
        assert_eq!(s.literal_string(), "-2;5,90;...");

        let i = Expansion::parse_literal("4", &c1).unwrap();
        assert_eq!(i.value().unwrap().unwrap(), r(4, 1));

        assert!(Expansion::parse_literal("0;1,0", &c1).is_err());
        assert!(Expansion::parse_literal("0;...", &c1).is_err());
        assert!(Expansion::parse_literal("x;1", &c1).is_err());
    }

    #[test]
    fn rule_streams_memoize() {
        let c1 = CSeq::constant(1u32);
        // Sylvester numbers 2, 6, 42, 1806, ... as an infinite digit rule.
        let e = Expansion::from_rule(
            BigInt::zero(),
            |n| {
                let mut v = big(2);
                for _ in 1..n {
                    v = &v * (&v + BigUint::one());
                }
                v
            },
            &c1,
        );
        assert_eq!(e.term(3), TermView::Digit(big(42)));
        assert_eq!(e.term(1), TermView::Digit(big(2)));
        assert!(!e.is_terminated());
        assert_eq!(e.known_len(), None);
    }

    #[test]
    fn json_shape() {
        let c1 = CSeq::constant(1u32);
        let e = Expansion::expand(&r(5, 7), &c1, DEFAULT_MAX_TERMS).unwrap();
        let v = e.to_json();
        assert_eq!(v["q0"], json!(0));
        assert_eq!(v["terminated"], json!(true));
        assert_eq!(v["cseq"], json!("const:1"));
        assert_eq!(v["terms"].as_array().unwrap().len(), 3);
    }

    proptest! {
        // Round-trip: expand then reconstruct returns the input exactly.
        #[test]
        fn expand_roundtrip(n in -3000i64..=3000, d in 1i64..=3000, l in 1u64..=3) {
            let alpha = Rational::ratio(n, d);
            let cs = if l == 1 { CSeq::constant(1u32) } else { CSeq::geometric(l) };
            let e = Expansion::expand(&alpha, &cs, DEFAULT_MAX_TERMS).unwrap();
            prop_assert!(e.is_terminated());
            prop_assert_eq!(e.value().unwrap().unwrap(), alpha);
        }

        // Termination bound from the strictly decreasing numerator chain.
        #[test]
        fn termination_within_numerator(n in 1i64..=500, d in 1i64..=500) {
            let alpha = Rational::ratio(n, d);
            let bound = u64::try_from(alpha.fract().numer().clone()).unwrap() as usize;
            let cs = CSeq::geometric(2u32);
            let e = Expansion::expand(&alpha, &cs, DEFAULT_MAX_TERMS).unwrap();
            prop_assert!(e.known_len().unwrap() <= bound.max(1));
        }
    }
}
