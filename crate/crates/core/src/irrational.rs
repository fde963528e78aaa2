//! Irrationality certificates for alternating series with fast-growing
//! denominators.
//!
//! A positive integer sequence `{p_n}` belongs to the growth class `P(K)`
//! when `p_(n+1) >= K p_n (p_n + 1)` for all sufficiently large `n`. For
//! such a sequence and an integer `1 <= l <= floor(K)`, the series
//! `f(-l) = sum (-1)^n l^n / p_n` splits into a rational head plus a tail
//! that is itself a never-terminating alternating-Sylvester expansion under
//! the multipliers `c_n = l^(n+2N-1)`; since only rationals have
//! terminating expansions, the value is irrational. A [`Certificate`]
//! records the split and the finitely many premises checked; [`crosscheck`]
//! re-validates a certificate against the sequence digit by digit.
//!
//! Tail digits grow doubly exponentially (thousands of decimal digits by
//! index 10), so the checks here stick to integer comparisons by cross
//! multiplication; reducing fractions of that size would dominate the
//! runtime.

use std::fmt;
use std::sync::{Arc, Mutex};

use num::bigint::{BigInt, BigUint};
use num::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::canon::{self, CanonError, Violation};
use crate::cseq::CSeq;
use crate::expansion::{Expansion, ExpansionError};
use crate::rational::{Rational, RationalError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrrationalError {
    #[error("l = {l} exceeds floor(K) = {k_floor}")]
    LExceedsK { l: u64, k_floor: BigInt },
    #[error("tail growth condition failed at index {index}")]
    GrowthViolation { index: usize },
    #[error("no admissible head index within the probe window")]
    HeadIndexOverflow,
    #[error("sequence has no term at index {index}")]
    SequenceExhausted { index: usize },
    #[error("growth factor K must be at least 1")]
    KBelowOne,
    #[error("sequence terms must be positive")]
    ZeroTerm,
    #[error("parse error at byte {position}: expected {expected}")]
    Parse {
        position: usize,
        expected: &'static str,
    },
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Rational(#[from] RationalError),
}

#[derive(Debug)]
enum GrowthKind {
    Explicit(Vec<BigUint>),
    /// `p_(n+1) = ceil(K p_n (p_n + 1))` from a given first term.
    Recurrence { first: BigUint },
}

/// A candidate member of the growth class `P(K)`: a lazy sequence of
/// positive integers with a declared threshold index from which the growth
/// inequality is claimed to hold.
#[derive(Clone)]
pub struct GrowthSeq {
    kind: Arc<GrowthKind>,
    k: Rational,
    threshold: usize,
    cache: Arc<Mutex<Vec<BigUint>>>,
}

impl fmt::Debug for GrowthSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind.as_ref() {
            GrowthKind::Explicit(v) => write!(f, "GrowthSeq(list of {}, K={})", v.len(), self.k),
            GrowthKind::Recurrence { first } => {
                write!(f, "GrowthSeq(p1={first}, K={})", self.k)
            }
        }
    }
}

impl GrowthSeq {
    /// The classical Sylvester sequence 2, 6, 42, 1806, ... with `K = 1`
    /// (equality at every step).
    pub fn sylvester() -> GrowthSeq {
        GrowthSeq::recurrence(BigUint::from(2u32), Rational::one()).expect("K = 1")
    }

    /// The recurrence sequence with factor `k` starting at 1, e.g. `k = 2`
    /// gives 1, 4, 40, 3280, ...
    pub fn sylvester_k(k: u64) -> Result<GrowthSeq, IrrationalError> {
        GrowthSeq::recurrence(BigUint::one(), Rational::from_integer(k as i64))
    }

    pub fn recurrence(first: BigUint, k: Rational) -> Result<GrowthSeq, IrrationalError> {
        if first.is_zero() {
            return Err(IrrationalError::ZeroTerm);
        }
        if k < Rational::one() {
            return Err(IrrationalError::KBelowOne);
        }
        Ok(GrowthSeq {
            kind: Arc::new(GrowthKind::Recurrence { first }),
            k,
            threshold: 1,
            cache: Arc::new(Mutex::new(Vec::new())),
        })
    }

    /// An explicit finite list with declared threshold 1; claims against
    /// the data are caught by [`certify`] and [`check_pk`], not here.
    pub fn explicit(terms: Vec<BigUint>, k: Rational) -> Result<GrowthSeq, IrrationalError> {
        if terms.iter().any(BigUint::is_zero) {
            return Err(IrrationalError::ZeroTerm);
        }
        if k < Rational::one() {
            return Err(IrrationalError::KBelowOne);
        }
        Ok(GrowthSeq {
            kind: Arc::new(GrowthKind::Explicit(terms)),
            k,
            threshold: 1,
            cache: Arc::new(Mutex::new(Vec::new())),
        })
    }

    /// Declares the growth threshold index (default 1).
    pub fn with_threshold(mut self, threshold: usize) -> GrowthSeq {
        assert!(threshold >= 1, "threshold starts at 1");
        self.threshold = threshold;
        self
    }

    /// Named forms: `sylvester`, `sylvesterK:<k>`, or
    /// `list:<p1>,<p2>,...[;K:<p/q>]` (K defaults to 1).
    pub fn parse(text: &str) -> Result<GrowthSeq, IrrationalError> {
        if text == "sylvester" {
            return Ok(GrowthSeq::sylvester());
        }
        if let Some(rest) = text.strip_prefix("sylvesterK:") {
            let k: u64 = rest.parse().map_err(|_| IrrationalError::Parse {
                position: "sylvesterK:".len(),
                expected: "positive integer factor",
            })?;
            if k == 0 {
                return Err(IrrationalError::KBelowOne);
            }
            return GrowthSeq::sylvester_k(k);
        }
        if let Some(rest) = text.strip_prefix("list:") {
            let (list_text, k) = match rest.split_once(";K:") {
                Some((l, k_text)) => {
                    let pos = "list:".len() + l.len() + ";K:".len();
                    let k: Rational = k_text.parse().map_err(|_| IrrationalError::Parse {
                        position: pos,
                        expected: "rational growth factor",
                    })?;
                    (l, k)
                }
                None => (rest, Rational::one()),
            };
            let mut terms = Vec::new();
            let mut pos = "list:".len();
            for piece in list_text.split(',') {
                let t: BigUint = piece.parse().map_err(|_| IrrationalError::Parse {
                    position: pos,
                    expected: "positive integer term",
                })?;
                pos += piece.len() + 1;
                terms.push(t);
            }
            return GrowthSeq::explicit(terms, k);
        }
        Err(IrrationalError::Parse {
            position: 0,
            expected: "sylvester, sylvesterK:<k> or list:<p1>,<p2>,...",
        })
    }

    pub fn k(&self) -> &Rational {
        &self.k
    }

    /// Declared growth threshold `N`: the index from which the sequence
    /// claims `p_(n+1) >= K p_n (p_n + 1)`.
    pub fn threshold(&self) -> usize {
        self.threshold
    }

    /// `p_n` for `n >= 1`; memoized for recurrences.
    pub fn term(&self, n: usize) -> Result<BigUint, IrrationalError> {
        assert!(n >= 1, "sequence index starts at 1");
        match self.kind.as_ref() {
            GrowthKind::Explicit(terms) => terms
                .get(n - 1)
                .cloned()
                .ok_or(IrrationalError::SequenceExhausted { index: n }),
            GrowthKind::Recurrence { first } => {
                let mut cache = self.cache.lock().expect("growth cache poisoned");
                if cache.is_empty() {
                    cache.push(first.clone());
                }
                while cache.len() < n {
                    let last = cache.last().expect("nonempty");
                    let product = last * (last + BigUint::one());
                    let next = if self.k.is_integer() {
                        self.k
                            .numer()
                            .to_biguint()
                            .expect("K >= 1")
                            * &product
                    } else {
                        // ceil(K * p (p+1)) for fractional K
                        let scaled = &Rational::from_integer(BigInt::from(product)) * &self.k;
                        scaled.ceil_int().to_biguint().expect("positive")
                    };
                    cache.push(next);
                }
                Ok(cache[n - 1].clone())
            }
        }
    }
}

fn growth_holds(p_n: &BigUint, p_n1: &BigUint, k: &Rational) -> bool {
    // p_(n+1) >= K p_n (p_n + 1), cross-multiplied to integers.
    let product = BigInt::from(p_n * (p_n + BigUint::one()));
    let lhs = BigInt::from(p_n1.clone()) * k.denom();
    let rhs = k.numer() * product;
    lhs >= rhs
}

/// Result of probing membership in `P(K)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PkReport {
    pub member: bool,
    /// Threshold `N` when member; index of the last observed violation
    /// otherwise.
    pub index: usize,
}

/// Scans `p_(n+1) >= K p_n (p_n + 1)` for `1 <= n < probe` and reports the
/// least threshold with a clean observed tail, or the last violation.
pub fn check_pk(
    seq: &GrowthSeq,
    k: &Rational,
    probe: usize,
) -> Result<PkReport, IrrationalError> {
    assert!(probe >= 2, "probe window needs at least one pair");
    let mut last_violation = None;
    for n in 1..probe {
        let p_n = seq.term(n)?;
        let p_n1 = seq.term(n + 1)?;
        if !growth_holds(&p_n, &p_n1, k) {
            last_violation = Some(n);
        }
    }
    Ok(match last_violation {
        None => PkReport {
            member: true,
            index: 1,
        },
        Some(v) if v + 1 < probe => PkReport {
            member: true,
            index: v + 1,
        },
        Some(v) => PkReport {
            member: false,
            index: v,
        },
    })
}

/// Exact partial sum `sum_(n=1..terms) z^n / p_n`.
pub fn eval_f(seq: &GrowthSeq, z: &BigInt, terms: usize) -> Result<Rational, IrrationalError> {
    let mut sum = Rational::zero();
    let mut z_pow = BigInt::one();
    for n in 1..=terms {
        z_pow = &z_pow * z;
        let p_n = BigInt::from(seq.term(n)?);
        sum = &sum + &Rational::new(z_pow.clone(), p_n)?;
    }
    Ok(sum)
}

/// Machine-checkable witness that `f(-l; {p_n})` is irrational: the series
/// splits at index `2N` into the rational `head` and a tail whose digits
/// `a_k = p_(k+2N-1)` under `c_k = l^(k+2N-1)` were verified, over the
/// first `checked_prefix` indices, to satisfy the canonical growth
/// conditions with no zero ratio anywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub l: u64,
    pub n: usize,
    pub head: Rational,
    pub checked_prefix: usize,
    pub growth_k: Rational,
}

impl Certificate {
    /// The multiplier sequence of the tail, `c_k = l^(2N-1) * l^k`.
    pub fn tail_cseq(&self) -> CSeq {
        let l = BigUint::from(self.l);
        let scale = num::pow(l.clone(), 2 * self.n - 1);
        CSeq::scaled_geometric(scale, l)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "l": self.l,
            "N": self.n,
            "head": self.head.to_string(),
            "checked_prefix": self.checked_prefix,
            "growth_K": self.growth_k.to_string(),
        })
    }
}

/// Certifies irrationality of `f(-l; {p_n})` with finite evidence.
///
/// `N` is the least index at or above the sequence's growth threshold with
/// `p_2N >= l^2N`; that base case plus the growth inequality propagate
/// `a_k >= c_k` down the whole tail. The head collects the first `2N - 1`
/// series terms; the tail conditions are then verified for `prefix`
/// indices.
pub fn certify(
    seq: &GrowthSeq,
    l: u64,
    prefix: usize,
) -> Result<Certificate, IrrationalError> {
    assert!(l >= 1, "l starts at 1");
    assert!(prefix >= 1, "prefix starts at 1");
    let k_floor = seq.k().floor_int();
    if BigInt::from(l) > k_floor {
        return Err(IrrationalError::LExceedsK { l, k_floor });
    }
    let l_big = BigUint::from(l);

    // Base case p_2N >= l^2N, searched from the declared threshold.
    let mut chosen = None;
    for n in seq.threshold()..=seq.threshold() + prefix + 64 {
        let base = seq.term(2 * n)?;
        if base >= num::pow(l_big.clone(), 2 * n) {
            chosen = Some(n);
            break;
        }
    }
    let Some(n) = chosen else {
        return Err(IrrationalError::HeadIndexOverflow);
    };

    // head = sum_(m=1..2N-1) (-1)^m l^m / p_m
    let mut head = Rational::zero();
    let mut l_pow = BigInt::one();
    for m in 1..=(2 * n - 1) {
        l_pow = &l_pow * &BigInt::from(l);
        let term = Rational::new(l_pow.clone(), BigInt::from(seq.term(m)?))?;
        head = if m % 2 == 1 { &head - &term } else { &head + &term };
    }

    // Tail conditions a_(k+1) >= l a_k (a_k + 1) and a_k >= c_k over the
    // prefix, by integer comparison.
    for k in 1..=prefix {
        let a_k = seq.term(k + 2 * n - 1)?;
        let a_k1 = seq.term(k + 2 * n)?;
        let bound = &l_big * &a_k * (&a_k + BigUint::one());
        if a_k1 < bound {
            return Err(IrrationalError::GrowthViolation { index: k });
        }
        if a_k < num::pow(l_big.clone(), k + 2 * n - 1) {
            return Err(IrrationalError::GrowthViolation { index: k });
        }
    }

    Ok(Certificate {
        l,
        n,
        head,
        checked_prefix: prefix,
        growth_k: seq.k().clone(),
    })
}

/// Outcome of re-validating a certificate against its sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crosscheck {
    Consistent,
    /// First tail digit at which the claimed data fails.
    Inconsistent { index: usize },
}

impl Crosscheck {
    pub fn is_consistent(self) -> bool {
        matches!(self, Crosscheck::Consistent)
    }
}

/// Re-validates a certificate: the claimed tail digits must pass the
/// canonical-sequence conditions, and every digit must be re-derivable from
/// the bracketed remainder interval of the tail alone, i.e. the even/odd
/// partial sums around index `n` must certify `c_n/(a_n+1) < A_n <= c_n/a_n`
/// for the claimed `a_n`.
///
/// Needs sequence terms up to index `2N - 1 + terms + 3` (bracket lookahead).
pub fn crosscheck(
    cert: &Certificate,
    seq: &GrowthSeq,
    terms: usize,
) -> Result<Crosscheck, IrrationalError> {
    assert!(terms >= 1, "crosscheck needs at least one digit");
    let shift = 2 * cert.n - 1;
    let window = terms + 3;
    let mut digits = Vec::with_capacity(window);
    for k in 1..=window {
        digits.push(seq.term(k + shift)?);
    }
    let cseq = cert.tail_cseq();
    let tail = Expansion::from_parts(BigInt::zero(), digits.clone(), false, &cseq)?;

    // Canonical conditions over the claimed digits.
    let report = canon::check_t(&tail, terms)?;
    if !report.valid {
        let n = report.index.unwrap_or(1);
        let index = match report.violated {
            Some(Violation::C5) | Some(Violation::C6) => n + 1,
            _ => n,
        };
        return Ok(Crosscheck::Inconsistent { index });
    }

    // Digit echo from local brackets, gcd-free. With q_n = c_n/a_n the
    // upper bound A_n <= c_n/a_n is the one-term partial sum; the strict
    // lower bound comes from the two-term sum q_n - q_(n+1), falling back
    // to the four-term sum when the growth inequality is tight.
    let l_big = BigUint::from(cert.l);
    let c_at = |k: usize| num::pow(l_big.clone(), k + shift);
    for n in 1..=terms {
        let a_n = &digits[n - 1];
        let a_n1 = &digits[n];
        let c_n = c_at(n);
        let c_n1 = c_at(n + 1);
        // P_2 = (c_n a_(n+1) - c_(n+1) a_n) / (a_n a_(n+1))
        let pos = &c_n * a_n1;
        let neg = &c_n1 * a_n;
        if pos < neg {
            // Ratios increase: not an expansion at all.
            return Ok(Crosscheck::Inconsistent { index: n + 1 });
        }
        let numer = pos - neg;
        // Compare P_2 with c_n/(a_n + 1) by cross multiplication.
        let lhs = numer * (a_n + BigUint::one());
        let rhs = &c_n * a_n * a_n1;
        if lhs > rhs {
            continue;
        }
        if lhs < rhs {
            // The bracket sits below the digit's lower edge.
            return Ok(Crosscheck::Inconsistent { index: n });
        }
        // Tight case: the four-term sum exceeds the edge iff
        // q_(n+2) > q_(n+3).
        let a_n2 = &digits[n + 1];
        let a_n3 = &digits[n + 2];
        if c_at(n + 2) * a_n3 <= c_at(n + 3) * a_n2 {
            return Ok(Crosscheck::Inconsistent { index: n + 2 });
        }
    }
    Ok(Crosscheck::Consistent)
}
