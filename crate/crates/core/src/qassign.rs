//! Quantum assignments: the clause projectors
//! `a (I_{2^k} - |v(x_{i1})…v(x_{ik})⟩⟨v(x_{i1})…v(x_{ik})|) ⊗ I_{2^(n-k)}`
//! built from a satisfying evaluation `v`.
//!
//! Two embeddings are provided. [`EmbeddingMode::Literal`] is the formula
//! above taken verbatim: the `2^k`-dimensional factor always acts on the
//! leading `k` qubits, whichever variables the clause mentions.
//! [`EmbeddingMode::Aligned`] puts the factor on the qubits of the clause's
//! own variables. The two coincide when a clause mentions `x1..xk` in that
//! order.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{self, Evaluation, Formula, FormulaError};
use crate::linalg::{basis_vector, inner, kron, outer, DenseMatrix, LinalgError, Scalar, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QAssignError {
    #[error("evaluation {0} does not satisfy the formula")]
    SourceUnsatisfied(Evaluation),
    #[error("scale must be nonzero")]
    ZeroScale,
    #[error("clause index {index} out of range 1..={m}")]
    ClauseOutOfRange { index: usize, m: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    Literal,
    Aligned,
}

impl EmbeddingMode {
    pub const ALL: [EmbeddingMode; 2] = [EmbeddingMode::Literal, EmbeddingMode::Aligned];
}

impl fmt::Display for EmbeddingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingMode::Literal => "literal",
            EmbeddingMode::Aligned => "aligned",
        })
    }
}

impl FromStr for EmbeddingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(EmbeddingMode::Literal),
            "aligned" => Ok(EmbeddingMode::Aligned),
            other => Err(format!("unknown mode `{other}` (expected literal or aligned)")),
        }
    }
}

/// One clause projector with the data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumAssignment {
    /// 1-based.
    pub clause_index: usize,
    pub mode: EmbeddingMode,
    pub scale: Scalar,
    /// Clause variables in order of first occurrence.
    pub clause_vars: Vec<usize>,
    /// `v` restricted to `clause_vars`.
    pub clause_bits: Vec<bool>,
    pub matrix: DenseMatrix,
}

impl QuantumAssignment {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// The matrix divided by its scale. Entries equal to the scale map to
    /// exactly 1, so a scaled 0/1 projector normalizes without rounding.
    pub fn normalized_matrix(&self) -> DenseMatrix {
        let a = self.scale;
        if a == Scalar::new(1.0, 0.0) {
            return self.matrix.clone();
        }
        self.matrix.map_entries(|z| {
            if z == a {
                Scalar::new(1.0, 0.0)
            } else {
                z / a
            }
        })
    }

    pub fn with_scale(&self, a: Scalar) -> Result<QuantumAssignment, QAssignError> {
        if a == Scalar::new(0.0, 0.0) {
            return Err(QAssignError::ZeroScale);
        }
        Ok(QuantumAssignment {
            scale: a,
            matrix: self.normalized_matrix().scale(a),
            ..self.clone()
        })
    }
}

/// Projector for clause `index` (1-based) of `f` under the satisfying
/// evaluation `v`.
pub fn quantum_assignment(
    f: &Formula,
    index: usize,
    v: &Evaluation,
    mode: EmbeddingMode,
    a: Scalar,
) -> Result<QuantumAssignment, QAssignError> {
    if a == Scalar::new(0.0, 0.0) {
        return Err(QAssignError::ZeroScale);
    }
    let clause = f.clause(index).ok_or(QAssignError::ClauseOutOfRange {
        index,
        m: f.num_clauses(),
    })?;
    if !formula::evaluate(f, v)? {
        return Err(QAssignError::SourceUnsatisfied(v.clone()));
    }
    let n = f.num_vars();
    let clause_vars = clause.vars();
    let clause_bits = v.project(&clause_vars);
    let unit = match mode {
        EmbeddingMode::Literal => literal_projector(n, &clause_bits)?,
        EmbeddingMode::Aligned => aligned_projector(n, &clause_vars, &clause_bits)?,
    };
    Ok(QuantumAssignment {
        clause_index: index,
        mode,
        scale: a,
        clause_vars,
        clause_bits,
        matrix: unit.scale(a),
    })
}

/// `(I_{2^k} - |b⟩⟨b|) ⊗ I_{2^(n-k)}`.
fn literal_projector(n: usize, bits: &[bool]) -> Result<DenseMatrix, LinalgError> {
    let k = bits.len();
    let local = DenseMatrix::identity(1 << k)?.try_sub(&outer(&basis_vector(bits)))?;
    kron(&local, &DenseMatrix::identity(1 << (n - k))?)
}

/// Diagonal with a 0 exactly at the basis states whose bits at the clause
/// variables' positions equal `bits`.
fn aligned_projector(n: usize, vars: &[usize], bits: &[bool]) -> Result<DenseMatrix, LinalgError> {
    let mut mask = 0usize;
    let mut pattern = 0usize;
    for (&var, &bit) in vars.iter().zip(bits) {
        let shift = n - var;
        mask |= 1 << shift;
        if bit {
            pattern |= 1 << shift;
        }
    }
    let diag = (0..1usize << n)
        .map(|j| {
            if j & mask == pattern {
                Scalar::new(0.0, 0.0)
            } else {
                Scalar::new(1.0, 0.0)
            }
        })
        .collect();
    DenseMatrix::from_diagonal(diag)
}

/// All `m` projectors of `f` under `v`.
pub fn assignments_for(
    f: &Formula,
    v: &Evaluation,
    mode: EmbeddingMode,
    a: Scalar,
) -> Result<Vec<QuantumAssignment>, QAssignError> {
    (1..=f.num_clauses())
        .map(|i| quantum_assignment(f, i, v, mode, a))
        .collect()
}

/// `|v(x1)…v(xn)⟩`.
pub fn natural_conversion(f: &Formula, v: &Evaluation) -> Result<StateVector, QAssignError> {
    formula::check_total(f, v)?;
    Ok(basis_vector(v.bits()))
}

/// `⟨w|ψ|w⟩`.
pub fn residual(q: &QuantumAssignment, w: &StateVector) -> Result<Scalar, QAssignError> {
    let mw = q.matrix.mul_vec(w)?;
    Ok(inner(w, &mw)?)
}

/// Number of zero diagonal entries; `2^(n-k)` for every well-formed assignment.
pub fn kernel_size(q: &QuantumAssignment) -> usize {
    q.matrix
        .diagonal()
        .iter()
        .filter(|z| **z == Scalar::new(0.0, 0.0))
        .count()
}
