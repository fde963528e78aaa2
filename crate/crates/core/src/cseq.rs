//! The multiplier sequence `{c_n}` and its rule mini-language.
//!
//! Grammar accepted by [`CSeq::parse`]:
//!
//! ```text
//! const:<k>                      c_n = k
//! pow:<l>                        c_n = l^n
//! scaled:<m>,<l>                 c_n = m * l^n
//! list:<k1>,<k2>,...[;tail:R]    explicit prefix, then rule R (const or pow)
//! ```
//!
//! `k`, `l`, `m` are decimal positive integers. When `tail` is omitted the
//! sequence continues with the last prefix element, which trivially keeps
//! the divisor chain intact. The `scaled` form exists for the shifted
//! geometric multipliers `c_n = l^(n+2N-1)` that irrationality certificates
//! need.
//!
//! Divisor-chain checking (`c_n | c_{n+1}`) is lazy: rules are infinite, and
//! the chain is only a precondition for the canonical-sequence machinery,
//! not for expansion itself. Constant and (scaled) geometric rules satisfy
//! the chain structurally, so only explicit prefixes are ever inspected.
//! Query results are memoized behind a mutex, giving compute-once semantics
//! across threads.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num::bigint::BigUint;
use num::{Integer, One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CseqError {
    #[error("parse error at byte {position}: expected {expected}")]
    Parse {
        position: usize,
        expected: &'static str,
    },
    #[error("divisor chain violated at index {index}")]
    DivisorChainViolation { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Rule {
    Constant(BigUint),
    /// `c_n = scale * ratio^n`; plain `pow:<l>` is `scale = 1`.
    Geometric { scale: BigUint, ratio: BigUint },
    Explicit { prefix: Vec<BigUint>, tail: Box<Rule> },
}

impl Rule {
    fn eval(&self, n: usize) -> BigUint {
        match self {
            Rule::Constant(k) => k.clone(),
            Rule::Geometric { scale, ratio } => scale * num::pow(ratio.clone(), n),
            Rule::Explicit { prefix, tail } => {
                if n <= prefix.len() {
                    prefix[n - 1].clone()
                } else {
                    tail.eval(n)
                }
            }
        }
    }
}

/// A rule producing the multiplier sequence `{c_n}` of positive integers.
///
/// Cloning shares the underlying rule and memo cache.
#[derive(Clone)]
pub struct CSeq {
    rule: Arc<Rule>,
    cache: Arc<Mutex<Vec<BigUint>>>,
    chain_required: bool,
}

impl PartialEq for CSeq {
    fn eq(&self, other: &Self) -> bool {
        self.rule == other.rule && self.chain_required == other.chain_required
    }
}

impl Eq for CSeq {}

impl fmt::Debug for CSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CSeq({self})")?;
        if self.chain_required {
            write!(f, " [chain]")?;
        }
        Ok(())
    }
}

impl CSeq {
    fn from_rule(rule: Rule) -> Self {
        CSeq {
            rule: Arc::new(rule),
            cache: Arc::new(Mutex::new(Vec::new())),
            chain_required: false,
        }
    }

    pub fn constant(k: impl Into<BigUint>) -> Self {
        let k = k.into();
        assert!(!k.is_zero(), "multiplier must be positive");
        CSeq::from_rule(Rule::Constant(k))
    }

    /// `c_n = l^n`.
    pub fn geometric(l: impl Into<BigUint>) -> Self {
        let l = l.into();
        assert!(!l.is_zero(), "ratio must be positive");
        CSeq::from_rule(Rule::Geometric {
            scale: BigUint::one(),
            ratio: l,
        })
    }

    /// `c_n = scale * ratio^n`.
    pub fn scaled_geometric(scale: impl Into<BigUint>, ratio: impl Into<BigUint>) -> Self {
        let (scale, ratio) = (scale.into(), ratio.into());
        assert!(!scale.is_zero() && !ratio.is_zero(), "factors must be positive");
        CSeq::from_rule(Rule::Geometric { scale, ratio })
    }

    /// Explicit prefix followed by a constant tail.
    pub fn explicit_const(prefix: Vec<BigUint>, k: impl Into<BigUint>) -> Self {
        CSeq::from_rule(Rule::Explicit {
            prefix,
            tail: Box::new(Rule::Constant(k.into())),
        })
    }

    /// Explicit prefix followed by `l^n` (evaluated at the global index).
    pub fn explicit_geometric(prefix: Vec<BigUint>, l: impl Into<BigUint>) -> Self {
        CSeq::from_rule(Rule::Explicit {
            prefix,
            tail: Box::new(Rule::Geometric {
                scale: BigUint::one(),
                ratio: l.into(),
            }),
        })
    }

    /// A view of the same sequence with the divisor-chain requirement set;
    /// violations surface as errors on `eval`.
    pub fn require_chain(&self) -> CSeq {
        CSeq {
            rule: Arc::clone(&self.rule),
            cache: Arc::clone(&self.cache),
            chain_required: true,
        }
    }

    pub fn chain_required(&self) -> bool {
        self.chain_required
    }

    /// True when the two sequences evaluate identically (the chain flag is a
    /// caller-side requirement, not part of the sequence).
    pub fn same_rule(&self, other: &CSeq) -> bool {
        self.rule == other.rule
    }

    /// Returns `c_n` for `n >= 1`, memoized.
    pub fn eval(&self, n: usize) -> Result<BigUint, CseqError> {
        assert!(n >= 1, "multiplier index starts at 1");
        if self.chain_required {
            self.check_chain_upto(n)?;
        }
        let mut cache = self.cache.lock().expect("cseq cache poisoned");
        while cache.len() < n {
            let next = self.rule.eval(cache.len() + 1);
            cache.push(next);
        }
        Ok(cache[n - 1].clone())
    }

    /// Only explicit prefixes can break the chain; constant and geometric
    /// rules divide themselves step over step.
    fn check_chain_upto(&self, n: usize) -> Result<(), CseqError> {
        let Rule::Explicit { prefix, .. } = self.rule.as_ref() else {
            return Ok(());
        };
        // Junction index prefix.len()+1 is checked like any other.
        let last = n.min(prefix.len() + 1);
        for i in 2..=last {
            let prev = self.rule.eval(i - 1);
            let cur = self.rule.eval(i);
            if !cur.is_multiple_of(&prev) {
                return Err(CseqError::DivisorChainViolation { index: i });
            }
        }
        Ok(())
    }
}

impl fmt::Display for CSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn rule(r: &Rule, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match r {
                Rule::Constant(k) => write!(f, "const:{k}"),
                Rule::Geometric { scale, ratio } if scale.is_one() => {
                    write!(f, "pow:{ratio}")
                }
                Rule::Geometric { scale, ratio } => write!(f, "scaled:{scale},{ratio}"),
                Rule::Explicit { prefix, tail } => {
                    write!(f, "list:")?;
                    for (i, k) in prefix.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{k}")?;
                    }
                    write!(f, ";tail:")?;
                    rule(tail, f)
                }
            }
        }
        rule(&self.rule, f)
    }
}

impl FromStr for CSeq {
    type Err = CseqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CSeq::parse(s)
    }
}

impl CSeq {
    pub fn parse(text: &str) -> Result<CSeq, CseqError> {
        let mut p = Parser { text, pos: 0 };
        let seq = p.cseq()?;
        if p.pos != text.len() {
            return Err(CseqError::Parse {
                position: p.pos,
                expected: "end of input",
            });
        }
        Ok(seq)
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn cseq(&mut self) -> Result<CSeq, CseqError> {
        if self.eat("const:") {
            Ok(CSeq::from_rule(Rule::Constant(self.positive_int()?)))
        } else if self.eat("pow:") {
            Ok(CSeq::from_rule(Rule::Geometric {
                scale: BigUint::one(),
                ratio: self.positive_int()?,
            }))
        } else if self.eat("scaled:") {
            let scale = self.positive_int()?;
            self.expect(",")?;
            let ratio = self.positive_int()?;
            Ok(CSeq::from_rule(Rule::Geometric { scale, ratio }))
        } else if self.eat("list:") {
            let mut prefix = vec![self.positive_int()?];
            while self.eat(",") {
                prefix.push(self.positive_int()?);
            }
            let tail = if self.eat(";tail:") {
                if self.eat("const:") {
                    Rule::Constant(self.positive_int()?)
                } else if self.eat("pow:") {
                    Rule::Geometric {
                        scale: BigUint::one(),
                        ratio: self.positive_int()?,
                    }
                } else {
                    return Err(CseqError::Parse {
                        position: self.pos,
                        expected: "const:<k> or pow:<l>",
                    });
                }
            } else {
                // No tail given: continue with the last prefix element.
                Rule::Constant(prefix.last().expect("nonempty prefix").clone())
            };
            Ok(CSeq::from_rule(Rule::Explicit {
                prefix,
                tail: Box::new(tail),
            }))
        } else {
            Err(CseqError::Parse {
                position: self.pos,
                expected: "const:, pow:, scaled: or list:",
            })
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.text[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &'static str) -> Result<(), CseqError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(CseqError::Parse {
                position: self.pos,
                expected: token,
            })
        }
    }

    fn positive_int(&mut self) -> Result<BigUint, CseqError> {
        let start = self.pos;
        let digits: &str = self.text[start..]
            .split(|ch: char| !ch.is_ascii_digit())
            .next()
            .unwrap_or("");
        if digits.is_empty() {
            return Err(CseqError::Parse {
                position: start,
                expected: "decimal digits",
            });
        }
        self.pos += digits.len();
        let value: BigUint = digits.parse().expect("ascii digits");
        if value.is_zero() {
            return Err(CseqError::Parse {
                position: start,
                expected: "positive integer",
            });
        }
        Ok(value)
    }
}
