//! CNF formulas with a uniform clause width, DIMACS I/O, and brute-force
//! classical semantics.
//!
//! Variables are numbered `1..=n` as in DIMACS. That numbering is also the
//! qubit order used downstream: `x1` is the most significant bit of every
//! basis index.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Brute-force enumeration refuses formulas with more variables than this.
pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("clause {clause} has width {got}, expected {expected}")]
    MixedWidth {
        clause: usize,
        expected: usize,
        got: usize,
    },
    #[error("clause {clause} mentions variable {var} more than once")]
    DuplicateVariable { clause: usize, var: usize },
    #[error("variable {var} out of range 1..={n}")]
    IndexOutOfRange { var: usize, n: usize },
    #[error("evaluation has {got} bits, formula has {expected} variables")]
    PartialEvaluation { expected: usize, got: usize },
    #[error("{n} variables exceeds the brute-force limit of {limit}")]
    TooManyVariables { n: usize, limit: usize },
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// Literal from its DIMACS integer (`-3` is `¬x3`). Panics on zero.
    pub fn from_dimacs(code: i64) -> Self {
        assert!(code != 0, "0 is the DIMACS clause terminator, not a literal");
        Literal {
            var: code.unsigned_abs() as usize,
            negated: code < 0,
        }
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64;
        if self.negated {
            -v
        } else {
            v
        }
    }

    pub fn is_satisfied_by(self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬x{}", self.var)
        } else {
            write!(f, "x{}", self.var)
        }
    }
}

/// A disjunction of literals. Literal order is significant: it fixes the
/// tensor order of the clause's projector in the literal embedding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    pub fn from_dimacs(codes: &[i64]) -> Self {
        Clause::new(codes.iter().map(|&c| Literal::from_dimacs(c)).collect())
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn width(&self) -> usize {
        self.literals.len()
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<usize> {
        let mut seen = HashSet::new();
        self.literals
            .iter()
            .map(|l| l.var)
            .filter(|v| seen.insert(*v))
            .collect()
    }

    pub fn var_set(&self) -> Vec<usize> {
        let mut vars = self.vars();
        vars.sort_unstable();
        vars
    }

    pub fn is_satisfied_by(&self, v: &Evaluation) -> bool {
        self.literals
            .iter()
            .any(|l| l.is_satisfied_by(v.get(l.var)))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∨ ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// CNF formula of dimension `(k, n)`: `m` clauses, each of width exactly `k`,
/// over the declared variables `x1..xn`. Declared variables may go unused.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula {
    n: usize,
    k: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    /// Validates width uniformity, variable range and per-clause distinctness.
    pub fn new(n: usize, k: usize, clauses: Vec<Clause>) -> Result<Self, FormulaError> {
        for (idx, clause) in clauses.iter().enumerate() {
            let clause_no = idx + 1;
            if clause.width() == 0 {
                return Err(FormulaError::EmptyClause { clause: clause_no });
            }
            if clause.width() != k {
                return Err(FormulaError::MixedWidth {
                    clause: clause_no,
                    expected: k,
                    got: clause.width(),
                });
            }
            let mut seen = HashSet::new();
            for lit in clause.literals() {
                if lit.var == 0 || lit.var > n {
                    return Err(FormulaError::IndexOutOfRange { var: lit.var, n });
                }
                if !seen.insert(lit.var) {
                    return Err(FormulaError::DuplicateVariable {
                        clause: clause_no,
                        var: lit.var,
                    });
                }
            }
        }
        Ok(Formula { n, k, clauses })
    }

    /// Builds a formula from DIMACS-style integer clauses; `k` is taken from
    /// the first clause (0 when there are none).
    pub fn from_dimacs_clauses(n: usize, clauses: &[&[i64]]) -> Result<Self, FormulaError> {
        let k = clauses.first().map_or(0, |c| c.len());
        Formula::new(n, k, clauses.iter().map(|c| Clause::from_dimacs(c)).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.k
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clause by 1-based index.
    pub fn clause(&self, index: usize) -> Option<&Clause> {
        index.checked_sub(1).and_then(|i| self.clauses.get(i))
    }

    /// `(k, n)`.
    pub fn dimension(&self) -> (usize, usize) {
        (self.k, self.n)
    }

    /// Copy of this formula with clause `index` (1-based) replaced. The
    /// replacement must keep the formula well-formed.
    pub fn with_clause(&self, index: usize, clause: Clause) -> Result<Self, FormulaError> {
        let mut clauses = self.clauses.clone();
        clauses[index - 1] = clause;
        Formula::new(self.n, self.k, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause.literals() {
                out.push_str(&lit.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }

    /// Single-line DIMACS body, e.g. `1 -2 0 -1 3 0`.
    pub fn to_dimacs_compact(&self) -> String {
        self.clauses
            .iter()
            .map(|c| {
                let mut s: Vec<String> =
                    c.literals().iter().map(|l| l.to_dimacs().to_string()).collect();
                s.push("0".into());
                s.join(" ")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "⊤");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " ∧ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Total assignment of bits to `x1..xn`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Evaluation {
    bits: Vec<bool>,
}

impl Evaluation {
    pub fn new(bits: Vec<bool>) -> Self {
        Evaluation { bits }
    }

    /// The evaluation whose bit string, read with `x1` most significant,
    /// is the binary representation of `index`.
    pub fn from_index(n: usize, index: usize) -> Self {
        Evaluation {
            bits: (0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect(),
        }
    }

    pub fn to_index(&self) -> usize {
        self.bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b))
    }

    /// Parses a bit string like `101` (`x1` first).
    pub fn parse_bits(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Evaluation::new)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Value of 1-based variable `var`.
    pub fn get(&self, var: usize) -> bool {
        self.bits[var - 1]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Bits of the given variables, in the given order.
    pub fn project(&self, vars: &[usize]) -> Vec<bool> {
        vars.iter().map(|&v| self.get(v)).collect()
    }
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

impl Serialize for Evaluation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Evaluation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Evaluation::parse_bits(&s).ok_or_else(|| serde::de::Error::custom("expected a bit string"))
    }
}

/// Parses DIMACS CNF. Clauses may span lines; `c` lines are comments and a
/// line starting with `%` ends the body. The clause width is fixed by the
/// first clause.
pub fn parse_dimacs(text: &str) -> Result<Formula, FormulaError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(syntax(line_no, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(syntax(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let n = parts[2]
                .parse::<usize>()
                .map_err(|_| syntax(line_no, "bad variable count"))?;
            let m = parts[3]
                .parse::<usize>()
                .map_err(|_| syntax(line_no, "bad clause count"))?;
            if n == 0 {
                return Err(syntax(line_no, "variable count must be positive"));
            }
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(syntax(line_no, "clause before `p cnf` header"));
        };
        for tok in line.split_whitespace() {
            let code: i64 = tok
                .parse()
                .map_err(|_| syntax(line_no, &format!("bad literal `{tok}`")))?;
            if code == 0 {
                if current.is_empty() {
                    return Err(FormulaError::EmptyClause {
                        clause: clauses.len() + 1,
                    });
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                let var = code.unsigned_abs() as usize;
                if var > n {
                    return Err(FormulaError::IndexOutOfRange { var, n });
                }
                current.push(code);
            }
        }
    }

    let Some((n, m)) = header else {
        return Err(syntax(last_line.max(1), "missing `p cnf` header"));
    };
    if !current.is_empty() {
        return Err(syntax(last_line, "last clause is not terminated by 0"));
    }
    if clauses.len() != m {
        return Err(syntax(
            last_line,
            &format!("header declares {m} clauses, body has {}", clauses.len()),
        ));
    }
    let refs: Vec<&[i64]> = clauses.iter().map(Vec::as_slice).collect();
    Formula::from_dimacs_clauses(n, &refs)
}

fn syntax(line: usize, msg: &str) -> FormulaError {
    FormulaError::Syntax {
        line,
        msg: msg.to_string(),
    }
}

pub fn dimension(f: &Formula) -> (usize, usize) {
    f.dimension()
}

/// Classical value of `f` under `v`.
pub fn evaluate(f: &Formula, v: &Evaluation) -> Result<bool, FormulaError> {
    check_total(f, v)?;
    Ok(f.clauses().iter().all(|c| c.is_satisfied_by(v)))
}

pub(crate) fn check_total(f: &Formula, v: &Evaluation) -> Result<(), FormulaError> {
    if v.len() != f.num_vars() {
        return Err(FormulaError::PartialEvaluation {
            expected: f.num_vars(),
            got: v.len(),
        });
    }
    Ok(())
}

/// All satisfying evaluations in ascending binary order of `x1…xn`.
pub fn satisfying_evaluations(f: &Formula) -> Result<Vec<Evaluation>, FormulaError> {
    satisfying_evaluations_with_limit(f, DEFAULT_BRUTE_FORCE_LIMIT)
}

pub fn satisfying_evaluations_with_limit(
    f: &Formula,
    limit: usize,
) -> Result<Vec<Evaluation>, FormulaError> {
    let n = f.num_vars();
    if n > limit {
        return Err(FormulaError::TooManyVariables { n, limit });
    }
    Ok((0..1usize << n)
        .map(|idx| Evaluation::from_index(n, idx))
        .filter(|v| f.clauses().iter().all(|c| c.is_satisfied_by(v)))
        .collect())
}
