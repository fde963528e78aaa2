//! Command-line front end for alternating-Sylvester expansion arithmetic.
//!
//! Exit codes: 0 on success, 1 on domain errors (validation failures,
//! undecided outcomes, certification errors), 2 on usage errors.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use altsyl::canon::{self, CompareOutcome};
use altsyl::cseq::{CSeq, CseqError};
use altsyl::expansion::{Expansion, TermView, DEFAULT_MAX_TERMS};
use altsyl::irrational::{self, GrowthSeq};
use altsyl::rational::Rational;
use altsyl::realfield::{DigitsOutcome, Real, DEFAULT_DIGIT_COUNT, DEFAULT_ROUNDS};

#[derive(Parser)]
#[command(
    name = "altsyl",
    version,
    about = "Exact arithmetic over generalized alternating-Sylvester expansions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

const CSEQ_HELP: &str = "Multiplier sequence: const:<k> | pow:<l> | scaled:<m>,<l> | \
                         list:<k1>,<k2>,...[;tail:const:<k>|pow:<l>]";
const LITERAL_HELP: &str = "Expansion literal q0;a1,a2,... (trailing ;... marks a \
                            non-terminated prefix)";
const SEQ_HELP: &str = "sylvester | sylvesterK:<k> | list:<p1>,<p2>,...[;K:<p/q>]";

#[derive(Subcommand)]
enum Cmd {
    /// Expand a rational into its digit sequence.
    Expand {
        /// Rational input as p/q (or a bare integer).
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, help = CSEQ_HELP)]
        cseq: String,
        #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
        max_terms: usize,
        #[arg(long)]
        json: bool,
    },
    /// Rebuild the exact value of an expansion literal.
    Reconstruct {
        #[arg(long, help = LITERAL_HELP, allow_hyphen_values = true)]
        x: String,
        #[arg(long, help = CSEQ_HELP)]
        cseq: String,
        /// Partial sum horizon (defaults to every known digit).
        #[arg(long)]
        upto: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Check the canonical-sequence conditions for a literal.
    Validate {
        #[arg(long, help = LITERAL_HELP, allow_hyphen_values = true)]
        x: String,
        #[arg(long, help = CSEQ_HELP)]
        cseq: String,
        #[arg(long, default_value_t = 64)]
        upto: usize,
        #[arg(long)]
        json: bool,
    },
    /// Order two expansion literals by their first differing term.
    Compare {
        #[arg(long, help = LITERAL_HELP, allow_hyphen_values = true)]
        x: String,
        #[arg(long, help = LITERAL_HELP, allow_hyphen_values = true)]
        y: String,
        #[arg(long, help = CSEQ_HELP)]
        cseq: String,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        budget: usize,
        #[arg(long)]
        json: bool,
    },
    /// Field operations on exact expansion literals, re-expanded.
    Arith {
        #[arg(long, value_enum)]
        op: ArithOp,
        #[arg(long, help = LITERAL_HELP, allow_hyphen_values = true)]
        x: String,
        /// Second operand (required for add and mul).
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        #[arg(long, help = CSEQ_HELP)]
        cseq: String,
        #[arg(long)]
        json: bool,
    },
    /// Re-derive digits of a literal from its bracketing enclosures.
    Digits {
        #[arg(long, help = LITERAL_HELP, allow_hyphen_values = true)]
        x: String,
        #[arg(long, help = CSEQ_HELP)]
        cseq: String,
        #[arg(long, default_value_t = DEFAULT_DIGIT_COUNT)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        budget: usize,
        #[arg(long)]
        json: bool,
    },
    /// Refine an exact rational enclosure of a literal's value.
    Enclose {
        #[arg(long, help = LITERAL_HELP, allow_hyphen_values = true)]
        x: String,
        #[arg(long, help = CSEQ_HELP)]
        cseq: String,
        /// Target interval width as a positive rational.
        #[arg(long, default_value = "1/340282366920938463463374607431768211456")]
        precision: String,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        budget: usize,
        #[arg(long)]
        json: bool,
    },
    /// Digitwise supremum (or infimum) of expansion literals.
    Sup {
        /// Member literal; repeat the flag for each member.
        #[arg(long, help = LITERAL_HELP, allow_hyphen_values = true)]
        x: Vec<String>,
        #[arg(long, help = CSEQ_HELP)]
        cseq: String,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        budget: usize,
        /// Compute the infimum instead.
        #[arg(long)]
        inf: bool,
        #[arg(long)]
        json: bool,
    },
    /// Emit an irrationality certificate for f(-l) over a growth sequence.
    Certify {
        #[arg(long)]
        l: u64,
        #[arg(long, help = SEQ_HELP)]
        seq: String,
        #[arg(long, default_value_t = 10)]
        prefix: usize,
        /// Also crosscheck this many tail digits.
        #[arg(long)]
        crosscheck: Option<usize>,
    },
    /// Exact partial sum of f(z) = sum z^n / p_n.
    EvalSeries {
        #[arg(long, help = SEQ_HELP)]
        seq: String,
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        z: i64,
        #[arg(long, default_value_t = 3)]
        terms: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithOp {
    Add,
    Neg,
    Mul,
    Inv,
}

struct Failure(String);

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

impl Failure {
    fn new(msg: impl Into<String>) -> Failure {
        Failure(msg.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn parse_cseq(text: &str) -> Result<CSeq, Failure> {
    CSeq::parse(text).map_err(|e| Failure::new(format!("--cseq: {e}")))
}

fn parse_literal(text: &str, cseq: &CSeq) -> Result<Expansion, Failure> {
    Expansion::parse_literal(text, cseq).map_err(|e| Failure::new(format!("literal: {e}")))
}

/// Exact value of a literal; rejects non-terminated prefixes.
fn exact_value(e: &Expansion) -> Result<Rational, Failure> {
    e.value()?
        .ok_or_else(|| Failure::new("operation needs an exact (terminated) literal"))
}

fn expand_line(e: &Expansion) -> String {
    let mut digits = Vec::new();
    let mut n = 1;
    while let TermView::Digit(d) = e.term(n) {
        digits.push(d.to_string());
        n += 1;
    }
    format!(
        "q0={} terms={} {}",
        e.q0(),
        digits.join(","),
        if e.is_terminated() {
            "terminated"
        } else {
            "not-terminated"
        }
    )
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Expand {
            alpha,
            cseq,
            max_terms,
            json,
        } => {
            let cs = parse_cseq(&cseq)?;
            let a: Rational = alpha
                .parse()
                .map_err(|e| Failure::new(format!("--alpha: {e}")))?;
            let e = Expansion::expand(&a, &cs, max_terms)?;
            if json {
                println!("{}", e.to_json());
            } else {
                println!("{}", expand_line(&e));
            }
            Ok(())
        }
        Cmd::Reconstruct { x, cseq, upto, json } => {
            let cs = parse_cseq(&cseq)?;
            let e = parse_literal(&x, &cs)?;
            let horizon = upto.unwrap_or_else(|| e.known_len().unwrap_or(0));
            let v = e.reconstruct(horizon)?;
            if json {
                println!("{}", json!({ "value": v.to_string() }));
            } else {
                println!("{v}");
            }
            Ok(())
        }
        Cmd::Validate { x, cseq, upto, json } => {
            let cs = parse_cseq(&cseq)?;
            let e = parse_literal(&x, &cs)?;
            match canon::check_t(&e, upto) {
                Ok(report) => {
                    if json {
                        println!("{}", report.to_json());
                    } else if report.valid {
                        println!("valid (checked {})", report.checked_upto);
                    } else {
                        println!(
                            "invalid {} at {} (checked {})",
                            report.violated.map(|v| v.code()).unwrap_or("?"),
                            report.index.unwrap_or(0),
                            report.checked_upto
                        );
                    }
                    if report.valid {
                        Ok(())
                    } else {
                        Err(Failure::new("canonical check failed"))
                    }
                }
                Err(canon::CanonError::Cseq(CseqError::DivisorChainViolation { index })) => {
                    if json {
                        println!(
                            "{}",
                            json!({
                                "valid": false,
                                "violated": "chain",
                                "index": index,
                                "checked_upto": 0,
                            })
                        );
                    } else {
                        println!("invalid chain at {index}");
                    }
                    Err(Failure::new(format!(
                        "divisor chain violated at index {index}"
                    )))
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Compare {
            x,
            y,
            cseq,
            budget,
            json,
        } => {
            let cs = parse_cseq(&cseq)?;
            let ex = parse_literal(&x, &cs)?;
            let ey = parse_literal(&y, &cs)?;
            let outcome = canon::compare(&ex, &ey, budget)?;
            if json {
                println!("{}", json!({ "ordering": outcome.as_str() }));
            } else {
                println!("{}", outcome.as_str());
            }
            if outcome == CompareOutcome::Undecided {
                return Err(Failure::new(format!(
                    "comparison undecided within budget {budget}"
                )));
            }
            Ok(())
        }
        Cmd::Arith {
            op,
            x,
            y,
            cseq,
            json,
        } => {
            let cs = parse_cseq(&cseq)?;
            let vx = exact_value(&parse_literal(&x, &cs)?)?;
            let rx = Real::exact(vx, &cs);
            let result = match op {
                ArithOp::Add | ArithOp::Mul => {
                    let y = y.ok_or_else(|| Failure::new("this op needs --y"))?;
                    let vy = exact_value(&parse_literal(&y, &cs)?)?;
                    let ry = Real::exact(vy, &cs);
                    match op {
                        ArithOp::Add => rx.add(&ry)?,
                        _ => rx.mul(&ry)?,
                    }
                }
                ArithOp::Neg => rx.neg(),
                ArithOp::Inv => rx.inv()?,
            };
            let value = result.as_exact().expect("exact leaves collapse").clone();
            let expansion = result.expansion()?;
            if json {
                println!(
                    "{}",
                    json!({ "value": value.to_string(), "expansion": expansion.to_json() })
                );
            } else {
                println!("{} = {}", value, expansion.literal_string());
            }
            Ok(())
        }
        Cmd::Digits {
            x,
            cseq,
            count,
            budget,
            json,
        } => {
            let cs = parse_cseq(&cseq)?;
            let e = parse_literal(&x, &cs)?;
            let real = Real::stream(e)?;
            let outcome = real.digits(count, budget)?;
            if json {
                println!("{}", outcome.to_json());
            } else {
                match &outcome {
                    DigitsOutcome::Decided(e) => println!("{}", e.literal_string()),
                    DigitsOutcome::Undecided { at } => println!("undecided at {at}"),
                }
            }
            if let DigitsOutcome::Undecided { at } = outcome {
                return Err(Failure::new(format!("digit {at} undecided within budget")));
            }
            Ok(())
        }
        Cmd::Enclose {
            x,
            cseq,
            precision,
            budget,
            json,
        } => {
            let cs = parse_cseq(&cseq)?;
            let p: Rational = precision
                .parse()
                .map_err(|e| Failure::new(format!("--precision: {e}")))?;
            if !p.is_positive() {
                return Err(Failure::new("--precision must be positive"));
            }
            let real = Real::stream(parse_literal(&x, &cs)?)?;
            let enc = real.enclose(&p, budget)?;
            if json {
                println!("{}", enc.to_json());
            } else {
                println!(
                    "[{}, {}] (terms used: {})",
                    enc.lower, enc.upper, enc.terms_used
                );
            }
            Ok(())
        }
        Cmd::Sup {
            x,
            cseq,
            budget,
            inf,
            json,
        } => {
            if x.is_empty() {
                return Err(Failure::new("sup needs at least one --x literal"));
            }
            let cs = parse_cseq(&cseq)?;
            let mut members = Vec::new();
            for lit in &x {
                members.push(Real::stream(parse_literal(lit, &cs)?)?);
            }
            let winner = if inf {
                Real::inf_finite(&members, budget)?
            } else {
                Real::sup_finite(&members, budget)?
            };
            let e = winner.expansion()?;
            if json {
                println!(
                    "{}",
                    json!({
                        "winner": e.literal_string(),
                        "value": e.value()?.map(|v| v.to_string()),
                    })
                );
            } else {
                println!("{}", e.literal_string());
            }
            Ok(())
        }
        Cmd::Certify {
            l,
            seq,
            prefix,
            crosscheck,
        } => {
            let growth = GrowthSeq::parse(&seq)?;
            let cert = irrational::certify(&growth, l, prefix)?;
            let mut v = cert.to_json();
            if let Some(terms) = crosscheck {
                match irrational::crosscheck(&cert, &growth, terms)? {
                    irrational::Crosscheck::Consistent => {
                        v["crosscheck"] = json!("consistent");
                    }
                    irrational::Crosscheck::Inconsistent { index } => {
                        v["crosscheck"] = json!({ "inconsistent_at": index });
                        println!("{v}");
                        return Err(Failure::new(format!(
                            "crosscheck inconsistent at digit {index}"
                        )));
                    }
                }
            }
            println!("{v}");
            Ok(())
        }
        Cmd::EvalSeries {
            seq,
            z,
            terms,
            json,
        } => {
            let growth = GrowthSeq::parse(&seq)?;
            let v = irrational::eval_f(&growth, &z.into(), terms)?;
            if json {
                println!("{}", json!({ "value": v.to_string() }));
            } else {
                println!("{v}");
            }
            Ok(())
        }
    }
}
