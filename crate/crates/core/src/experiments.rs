//! Golden reproduction of the three-variable example, the witness search for
//! non-annihilated natural conversions, formula generation, and sweeps.
//!
//! The witness search is a falsifier: it reports, per formula and clause
//! pair, whether some satisfying evaluation has a basis-state conversion that
//! a literal-embedding projector does *not* annihilate, and surfaces the
//! instances where none exists.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::checker::{diagonal_oracle, qsat_decide, CheckError, PromiseConfig};
use crate::formula::{self, Clause, Evaluation, Formula, FormulaError, Literal};
use crate::linalg::{
    basis_vector, common_nullspace, matrix_dump_json, nullspace_floating, outer,
    projection_residual, vector_dump_json, DenseMatrix, LinalgError, Scalar, StateVector,
    DEFAULT_TOL,
};
use crate::qassign::{
    assignments_for, natural_conversion, quantum_assignment, residual, EmbeddingMode,
    QAssignError, QuantumAssignment,
};

pub const EXHAUSTIVE_MAX_N: usize = 4;
pub const EXHAUSTIVE_MAX_M: usize = 3;
pub const RANDOM_MAX_N: usize = 6;
pub const RANDOM_MAX_M: usize = 8;
pub const RANDOM_MAX_COUNT: usize = 100_000;

/// Largest acceptable `|λ_checker − λ_oracle|` in a sweep.
pub const LAMBDA_AGREEMENT_TOL: f64 = 1e-9;
/// Largest acceptable mutual projection residual between null-space bases.
pub const SUBSPACE_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("golden mismatch: {0}")]
    GoldenMismatch(String),
    #[error("clauses {p} and {q} mention the same set of variables")]
    EqualVarSets { p: usize, q: usize },
    #[error("formula is unsatisfiable")]
    UnsatisfiableFormula,
    #[error("clause index {index} out of range 1..={m}")]
    ClauseOutOfRange { index: usize, m: usize },
    #[error("sweep bounds exceeded: {0}")]
    BoundsExceeded(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    QAssign(#[from] QAssignError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

fn one() -> Scalar {
    Scalar::new(1.0, 0.0)
}

fn ser_formula<S: Serializer>(f: &Formula, s: S) -> std::result::Result<S::Ok, S::Error> {
    f.to_dimacs_compact().serialize(s)
}

// ---------------------------------------------------------------------------
// Golden example

/// `(x ∨ ¬y) ∧ (¬x ∨ z)` with `x, y, z = x1, x2, x3`.
pub fn example1_formula() -> Formula {
    Formula::from_dimacs_clauses(3, &[&[1, -2], &[-1, 3]]).expect("well-formed")
}

/// The satisfying evaluation `x=1, y=0, z=1`.
pub fn example1_evaluation() -> Evaluation {
    Evaluation::parse_bits("101").expect("bitstring")
}

const GOLDEN_OUTER: [[[i8; 4]; 4]; 2] = [
    [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0]],
    [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 1]],
];
const GOLDEN_PROJECTOR_DIAG: [[i8; 8]; 2] = [[1, 1, 1, 1, 0, 0, 1, 1], [1, 1, 1, 1, 1, 1, 0, 0]];
const GOLDEN_VECTOR: [i8; 8] = [0, 0, 0, 0, 0, 1, 0, 0];
const GOLDEN_RESIDUALS: [i8; 2] = [0, 1];

fn golden_dense<const D: usize>(rows: &[[i8; D]; D]) -> Vec<Scalar> {
    rows.iter()
        .flat_map(|r| r.iter().map(|&x| Scalar::new(f64::from(x), 0.0)))
        .collect()
}

fn golden_diag<const D: usize>(diag: &[i8; D]) -> Vec<Scalar> {
    let mut out = vec![Scalar::new(0.0, 0.0); D * D];
    for (i, &d) in diag.iter().enumerate() {
        out[i * D + i] = Scalar::new(f64::from(d), 0.0);
    }
    out
}

fn matches_exactly(m: &DenseMatrix, golden: &[Scalar]) -> bool {
    m.to_dense_entries().is_ok_and(|e| e == golden)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenCheck {
    pub name: String,
    pub matches: bool,
}

/// Everything the golden example reconstructs, with one check per displayed
/// object.
#[derive(Debug, Clone)]
pub struct Example1Report {
    pub formula: Formula,
    pub evaluation: Evaluation,
    /// `|b⟩⟨b|` for each clause.
    pub outer_products: Vec<DenseMatrix>,
    /// Literal-mode projectors with `a = 1`.
    pub projectors: Vec<DenseMatrix>,
    pub vector: StateVector,
    pub residuals: Vec<Scalar>,
    pub checks: Vec<GoldenCheck>,
}

impl Example1Report {
    pub fn all_match(&self) -> bool {
        self.checks.iter().all(|c| c.matches)
    }

    pub fn to_json(&self) -> Result<Value> {
        let dumps = |ms: &[DenseMatrix]| -> Result<Vec<Value>> {
            ms.iter().map(|m| Ok(matrix_dump_json(m)?)).collect()
        };
        Ok(json!({
            "formula": self.formula.to_dimacs_compact(),
            "evaluation": self.evaluation.to_string(),
            "outer_products": dumps(&self.outer_products)?,
            "projectors": dumps(&self.projectors)?,
            "vector": vector_dump_json(&self.vector),
            "residuals": self.residuals.iter().map(|z| crate::linalg::scalar_json(*z)).collect::<Vec<_>>(),
            "checks": self.checks,
            "all_match": self.all_match(),
        }))
    }
}

/// Rebuilds the example through the production code paths and compares
/// every object with its displayed form. Never fails on a mismatch; see
/// [`verify_example1`].
pub fn example1_report() -> Result<Example1Report> {
    let f = example1_formula();
    let v = example1_evaluation();
    let assignments = assignments_for(&f, &v, EmbeddingMode::Literal, one())?;
    let outer_products: Vec<DenseMatrix> = assignments
        .iter()
        .map(|q| outer(&basis_vector(&q.clause_bits)))
        .collect();
    let projectors: Vec<DenseMatrix> = assignments.iter().map(|q| q.matrix.clone()).collect();
    let vector = natural_conversion(&f, &v)?;
    let residuals = assignments
        .iter()
        .map(|q| residual(q, &vector))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let mut checks = Vec::new();
    for (i, (m, g)) in outer_products.iter().zip(&GOLDEN_OUTER).enumerate() {
        checks.push(GoldenCheck {
            name: format!("outer_product_{}", i + 1),
            matches: matches_exactly(m, &golden_dense(g)),
        });
    }
    for (i, (m, g)) in projectors.iter().zip(&GOLDEN_PROJECTOR_DIAG).enumerate() {
        checks.push(GoldenCheck {
            name: format!("projector_{}", i + 1),
            matches: matches_exactly(m, &golden_diag(g)),
        });
    }
    let golden_vec: Vec<Scalar> = GOLDEN_VECTOR.iter().map(|&x| Scalar::new(f64::from(x), 0.0)).collect();
    checks.push(GoldenCheck {
        name: "vector".into(),
        matches: vector.entries() == golden_vec.as_slice(),
    });
    checks.push(GoldenCheck {
        name: "residuals".into(),
        matches: residuals.len() == 2
            && residuals
                .iter()
                .zip(GOLDEN_RESIDUALS)
                .all(|(r, g)| *r == Scalar::new(f64::from(g), 0.0)),
    });
    Ok(Example1Report {
        formula: f,
        evaluation: v,
        outer_products,
        projectors,
        vector,
        residuals,
        checks,
    })
}

/// [`example1_report`], failing with `GoldenMismatch` on the first entry
/// that differs.
pub fn verify_example1() -> Result<Example1Report> {
    let report = example1_report()?;
    if let Some(bad) = report.checks.iter().find(|c| !c.matches) {
        return Err(ExperimentError::GoldenMismatch(bad.name.clone()));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Witness search

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionWitness {
    pub evaluation: Evaluation,
    /// Literals of clause `q` (DIMACS codes) in the order that produced the
    /// witness.
    pub q_order: Vec<i64>,
    pub residual_p: f64,
    pub residual_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionReport {
    #[serde(serialize_with = "ser_formula")]
    pub formula: Formula,
    /// 1-based clause indices.
    pub clause_pair: (usize, usize),
    pub witnesses: Vec<PropositionWitness>,
    /// Satisfying evaluations whose natural conversion every literal-mode
    /// projector annihilates.
    pub natural_successes: Vec<Evaluation>,
    pub proposition_holds: bool,
    pub permutations_searched: bool,
}

/// Literal-mode residual recomputed from index arithmetic alone: the
/// projector's diagonal is 0 exactly where the leading `k` bits equal the
/// clause's bits in occurrence order.
fn leading_bits_residual(n: usize, clause_vars: &[usize], v: &Evaluation) -> f64 {
    let k = clause_vars.len();
    let lead = v.to_index() >> (n - k);
    let bits = clause_vars
        .iter()
        .fold(0usize, |acc, &x| (acc << 1) | usize::from(v.get(x)));
    if lead == bits {
        0.0
    } else {
        1.0
    }
}

impl PropositionReport {
    /// Independently re-checks every witness: the evaluation satisfies the
    /// formula, the stored residuals match index arithmetic, and at least
    /// one of them is nonzero.
    pub fn reverify(&self) -> bool {
        let f = &self.formula;
        let n = f.num_vars();
        let (p, q) = self.clause_pair;
        let Some(cp) = f.clause(p) else { return false };
        let witnesses_ok = self.witnesses.iter().all(|w| {
            let q_vars: Vec<usize> = w.q_order.iter().map(|c| c.unsigned_abs() as usize).collect();
            let same_q = f.clause(q).is_some_and(|cq| {
                let mut a = cq.var_set();
                let mut b = q_vars.clone();
                a.sort_unstable();
                b.sort_unstable();
                a == b
            });
            let rp = leading_bits_residual(n, &cp.vars(), &w.evaluation);
            let rq = leading_bits_residual(n, &q_vars, &w.evaluation);
            same_q
                && formula::evaluate(f, &w.evaluation) == Ok(true)
                && rp == w.residual_p
                && rq == w.residual_q
                && (rp != 0.0 || rq != 0.0)
        });
        witnesses_ok && self.proposition_holds == !self.witnesses.is_empty()
    }
}

fn literal_residual(f: &Formula, index: usize, v: &Evaluation, w: &StateVector) -> Result<f64> {
    let q = quantum_assignment(f, index, v, EmbeddingMode::Literal, one())?;
    Ok(residual(&q, w)?.re)
}

/// Searches the satisfying evaluations of `f` (and, with `permute_literals`,
/// every literal order of clause `q`) for one whose natural conversion is
/// not annihilated by the literal-mode projector of clause `p` or `q`.
pub fn proposition_witness_search(
    f: &Formula,
    p: usize,
    q: usize,
    permute_literals: bool,
) -> Result<PropositionReport> {
    let m = f.num_clauses();
    for index in [p, q] {
        if index == 0 || index > m {
            return Err(ExperimentError::ClauseOutOfRange { index, m });
        }
    }
    let cp = f.clause(p).expect("checked");
    let cq = f.clause(q).expect("checked");
    if cp.var_set() == cq.var_set() {
        return Err(ExperimentError::EqualVarSets { p, q });
    }
    let satisfying = formula::satisfying_evaluations(f)?;
    if satisfying.is_empty() {
        return Err(ExperimentError::UnsatisfiableFormula);
    }

    let orders: Vec<Vec<Literal>> = if permute_literals {
        cq.literals().iter().copied().permutations(cq.width()).collect()
    } else {
        vec![cq.literals().to_vec()]
    };
    let variants: Vec<Formula> = orders
        .iter()
        .map(|o| f.with_clause(q, Clause::new(o.clone())))
        .collect::<std::result::Result<_, _>>()?;

    let mut witnesses = Vec::new();
    let mut natural_successes = Vec::new();
    for v in &satisfying {
        let w = natural_conversion(f, v)?;
        let residual_p = literal_residual(f, p, v, &w)?;
        for (order, g) in orders.iter().zip(&variants) {
            let residual_q = literal_residual(g, q, v, &w)?;
            if residual_p != 0.0 || residual_q != 0.0 {
                witnesses.push(PropositionWitness {
                    evaluation: v.clone(),
                    q_order: order.iter().map(|l| l.to_dimacs()).collect(),
                    residual_p,
                    residual_q,
                });
                break;
            }
        }
        let all_zero = (1..=m)
            .map(|i| literal_residual(f, i, v, &w))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .all(|&r| r == 0.0);
        if all_zero {
            natural_successes.push(v.clone());
        }
    }
    Ok(PropositionReport {
        formula: f.clone(),
        clause_pair: (p, q),
        proposition_holds: !witnesses.is_empty(),
        witnesses,
        natural_successes,
        permutations_searched: permute_literals,
    })
}

/// Clause pairs `p < q` whose variable sets differ.
pub fn distinct_varset_pairs(f: &Formula) -> Vec<(usize, usize)> {
    let sets: Vec<Vec<usize>> = f.clauses().iter().map(Clause::var_set).collect();
    (1..=sets.len())
        .tuple_combinations()
        .filter(|&(p, q)| sets[p - 1] != sets[q - 1])
        .collect()
}

/// One report per clause pair with distinct variable sets.
pub fn proposition_search_all_pairs(
    f: &Formula,
    permute_literals: bool,
) -> Result<Vec<PropositionReport>> {
    distinct_varset_pairs(f)
        .into_iter()
        .map(|(p, q)| proposition_witness_search(f, p, q, permute_literals))
        .collect()
}

// ---------------------------------------------------------------------------
// Formula generation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SweepMode {
    Exhaustive,
    Random { seed: u64, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub mode: SweepMode,
    pub require_distinct_varsets: bool,
    pub permute_literals: bool,
}

impl SweepConfig {
    /// Exhaustive, distinct variable sets required, no permutation.
    pub fn exhaustive(k: usize, n: usize, m: usize) -> Self {
        SweepConfig {
            k,
            n,
            m,
            mode: SweepMode::Exhaustive,
            require_distinct_varsets: true,
            permute_literals: false,
        }
    }

    pub fn random(k: usize, n: usize, m: usize, seed: u64, count: usize) -> Self {
        SweepConfig {
            mode: SweepMode::Random { seed, count },
            ..Self::exhaustive(k, n, m)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExperimentError::BoundsExceeded(msg));
        if self.k == 0 || self.k > self.n {
            return bad(format!("need 1 <= k <= n, got k={} n={}", self.k, self.n));
        }
        if self.m == 0 {
            return bad("need m >= 1".into());
        }
        match self.mode {
            SweepMode::Exhaustive => {
                if self.n > EXHAUSTIVE_MAX_N || self.m > EXHAUSTIVE_MAX_M {
                    return bad(format!(
                        "exhaustive sweeps allow n <= {EXHAUSTIVE_MAX_N}, m <= {EXHAUSTIVE_MAX_M}"
                    ));
                }
            }
            SweepMode::Random { count, .. } => {
                if self.n > RANDOM_MAX_N || self.m > RANDOM_MAX_M || count > RANDOM_MAX_COUNT {
                    return bad(format!(
                        "random sweeps allow n <= {RANDOM_MAX_N}, m <= {RANDOM_MAX_M}, count <= {RANDOM_MAX_COUNT}"
                    ));
                }
                // Ordered clauses available: n!/(n-k)! · 2^k.
                let available = (self.n - self.k + 1..=self.n).product::<usize>() << self.k;
                if self.m > available {
                    return bad(format!("only {available} distinct clauses exist for k={}, n={}", self.k, self.n));
                }
            }
        }
        Ok(())
    }
}

/// All width-`k` clauses over `x1..xn` with ascending variables; sign
/// patterns count up with the first literal as the high bit.
fn canonical_clauses(k: usize, n: usize) -> Vec<Clause> {
    (1..=n)
        .combinations(k)
        .flat_map(|vars| {
            (0..1usize << k).map(move |signs| {
                Clause::new(
                    vars.iter()
                        .enumerate()
                        .map(|(i, &var)| Literal {
                            var,
                            negated: signs >> (k - 1 - i) & 1 == 1,
                        })
                        .collect(),
                )
            })
        })
        .collect()
}

fn random_formula(rng: &mut ChaCha8Rng, k: usize, n: usize, m: usize) -> Formula {
    let mut clauses: Vec<Clause> = Vec::with_capacity(m);
    while clauses.len() < m {
        let lits = sample(rng, n, k)
            .into_iter()
            .map(|i| Literal {
                var: i + 1,
                negated: rng.gen(),
            })
            .collect();
        let c = Clause::new(lits);
        if !clauses.contains(&c) {
            clauses.push(c);
        }
    }
    Formula::new(n, k, clauses).expect("generated clauses are well-formed")
}

/// Exhaustive mode: every set of `m` distinct canonical clauses, in
/// lexicographic order. Random mode: `count` formulas of `m` distinct
/// clauses with random variable order, reproducible from the seed.
pub fn generate_formulas(cfg: &SweepConfig) -> Result<Vec<Formula>> {
    cfg.validate()?;
    let (k, n, m) = (cfg.k, cfg.n, cfg.m);
    Ok(match cfg.mode {
        SweepMode::Exhaustive => canonical_clauses(k, n)
            .into_iter()
            .combinations(m)
            .map(|cs| Formula::new(n, k, cs).expect("canonical clauses are well-formed"))
            .collect(),
        SweepMode::Random { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| random_formula(&mut rng, k, n, m)).collect()
        }
    })
}

// ---------------------------------------------------------------------------
// Sweeps

/// One CSV/JSON row: a formula and one of its clause pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub formula_id: usize,
    pub dimacs: String,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    /// `p:q`, empty when the formula has no pair with distinct variable sets.
    pub pair: String,
    pub num_satisfying: usize,
    pub proposition_holds: Option<bool>,
    /// The first witness when the pair holds, otherwise the first
    /// satisfying evaluation (the counterexample).
    pub witness_eval: Option<String>,
    pub residual_p: Option<f64>,
    pub residual_q: Option<f64>,
    /// Satisfying evaluations whose literal-mode instance is quantum satisfiable.
    pub literal_qsat: usize,
    pub aligned_qsat: usize,
    /// Largest `λ_min` of the literal-mode instance over satisfying evaluations.
    pub lambda_min_literal: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepSummary {
    pub formulas_generated: usize,
    pub formulas_unsatisfiable: usize,
    pub formulas_without_pair: usize,
    pub formulas_evaluated: usize,
    pub pairs_tested: usize,
    /// Under the configured reading.
    pub proposition_holds: usize,
    pub proposition_fails: usize,
    /// Both readings, regardless of configuration.
    pub holds_fixed_order: usize,
    pub holds_any_order: usize,
    /// `(formula, satisfying v)` pairs.
    pub instances: usize,
    pub literal_qsat: usize,
    pub aligned_qsat: usize,
    pub aligned_residuals_all_zero: bool,
    pub oracle_disagreements: usize,
    pub nullspace_disagreements: usize,
    pub max_lambda_discrepancy: f64,
    pub max_subspace_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub summary: SweepSummary,
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub reports: Vec<PropositionReport>,
}

/// Result of deciding one instance three ways.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCheck {
    pub satisfiable: bool,
    pub lambda_min: f64,
    pub oracle_agrees: bool,
    pub lambda_discrepancy: f64,
    pub subspace_residual: f64,
}

/// Runs [`qsat_decide`], [`diagonal_oracle`], and both null-space routes on
/// one instance.
pub fn check_instance(assignments: &[QuantumAssignment]) -> Result<InstanceCheck> {
    let n = assignments.first().map_or(1, |q| q.dim().trailing_zeros() as usize);
    let verdict = qsat_decide(assignments, &PromiseConfig::for_qubits(n))?;
    let oracle = diagonal_oracle(assignments)?;
    let mats: Vec<DenseMatrix> = assignments.iter().map(QuantumAssignment::normalized_matrix).collect();
    let exact = common_nullspace(&mats, DEFAULT_TOL)?;
    let floating = nullspace_floating(&mats, DEFAULT_TOL)?;
    let subspace_residual = if exact.dim() == floating.len() {
        projection_residual(&exact.basis, &floating)?.max(projection_residual(&floating, &exact.basis)?)
    } else {
        f64::INFINITY
    };
    let lambda_discrepancy = (verdict.lambda_min - oracle.lambda_min).abs();
    Ok(InstanceCheck {
        satisfiable: verdict.satisfiable,
        lambda_min: verdict.lambda_min,
        oracle_agrees: verdict.satisfiable == oracle.satisfiable
            && lambda_discrepancy <= LAMBDA_AGREEMENT_TOL,
        lambda_discrepancy,
        subspace_residual,
    })
}

#[derive(Debug, Default)]
struct FormulaOutcome {
    rows: Vec<SweepRow>,
    reports: Vec<PropositionReport>,
    summary: SweepSummary,
}

fn sweep_formula(id: usize, f: &Formula, cfg: &SweepConfig) -> Result<FormulaOutcome> {
    let mut out = FormulaOutcome::default();
    let satisfying = formula::satisfying_evaluations(f)?;
    if satisfying.is_empty() {
        out.summary.formulas_unsatisfiable = 1;
        return Ok(out);
    }
    let pairs = distinct_varset_pairs(f);
    if pairs.is_empty() && cfg.require_distinct_varsets {
        out.summary.formulas_without_pair = 1;
        return Ok(out);
    }
    let s = &mut out.summary;
    s.formulas_evaluated = 1;
    s.aligned_residuals_all_zero = true;

    let mut literal_qsat = 0;
    let mut aligned_qsat = 0;
    let mut lambda_min_literal = 0.0f64;
    for v in &satisfying {
        s.instances += 1;
        let w = natural_conversion(f, v)?;
        for mode in EmbeddingMode::ALL {
            let assignments = assignments_for(f, v, mode, one())?;
            let check = check_instance(&assignments)?;
            s.oracle_disagreements += usize::from(!check.oracle_agrees);
            s.nullspace_disagreements += usize::from(check.subspace_residual >= SUBSPACE_AGREEMENT_TOL);
            s.max_lambda_discrepancy = s.max_lambda_discrepancy.max(check.lambda_discrepancy);
            s.max_subspace_residual = s.max_subspace_residual.max(check.subspace_residual);
            match mode {
                EmbeddingMode::Literal => {
                    literal_qsat += usize::from(check.satisfiable);
                    lambda_min_literal = lambda_min_literal.max(check.lambda_min);
                }
                EmbeddingMode::Aligned => {
                    aligned_qsat += usize::from(check.satisfiable);
                    for q in &assignments {
                        if residual(q, &w)? != Scalar::new(0.0, 0.0) {
                            s.aligned_residuals_all_zero = false;
                        }
                    }
                }
            }
        }
    }
    s.literal_qsat = literal_qsat;
    s.aligned_qsat = aligned_qsat;

    let row = |pair: String| SweepRow {
        formula_id: id,
        dimacs: f.to_dimacs_compact(),
        k: f.width(),
        n: f.num_vars(),
        m: f.num_clauses(),
        pair,
        num_satisfying: satisfying.len(),
        proposition_holds: None,
        witness_eval: None,
        residual_p: None,
        residual_q: None,
        literal_qsat,
        aligned_qsat,
        lambda_min_literal,
    };
    if pairs.is_empty() {
        out.rows.push(row(String::new()));
    }
    for (p, q) in pairs {
        let fixed = proposition_witness_search(f, p, q, false)?;
        let any = proposition_witness_search(f, p, q, true)?;
        s.pairs_tested += 1;
        s.holds_fixed_order += usize::from(fixed.proposition_holds);
        s.holds_any_order += usize::from(any.proposition_holds);
        let report = if cfg.permute_literals { any } else { fixed };
        if report.proposition_holds {
            s.proposition_holds += 1;
        } else {
            s.proposition_fails += 1;
        }
        let (eval, rp, rq) = match report.witnesses.first() {
            Some(w) => (w.evaluation.clone(), w.residual_p, w.residual_q),
            None => {
                let v = &satisfying[0];
                let w = natural_conversion(f, v)?;
                (v.clone(), literal_residual(f, p, v, &w)?, literal_residual(f, q, v, &w)?)
            }
        };
        out.rows.push(SweepRow {
            proposition_holds: Some(report.proposition_holds),
            witness_eval: Some(eval.to_string()),
            residual_p: Some(rp),
            residual_q: Some(rq),
            ..row(format!("{p}:{q}"))
        });
        out.reports.push(report);
    }
    Ok(out)
}

/// Generates the configured formulas and evaluates every satisfiable one
/// in parallel; rows come back in generation order.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let formulas = generate_formulas(cfg)?;
    let outcomes = formulas
        .par_iter()
        .enumerate()
        .map(|(id, f)| sweep_formula(id, f, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = SweepSummary {
        formulas_generated: formulas.len(),
        aligned_residuals_all_zero: true,
        ..SweepSummary::default()
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for o in outcomes {
        let s = o.summary;
        summary.formulas_unsatisfiable += s.formulas_unsatisfiable;
        summary.formulas_without_pair += s.formulas_without_pair;
        summary.formulas_evaluated += s.formulas_evaluated;
        summary.pairs_tested += s.pairs_tested;
        summary.proposition_holds += s.proposition_holds;
        summary.proposition_fails += s.proposition_fails;
        summary.holds_fixed_order += s.holds_fixed_order;
        summary.holds_any_order += s.holds_any_order;
        summary.instances += s.instances;
        summary.literal_qsat += s.literal_qsat;
        summary.aligned_qsat += s.aligned_qsat;
        if s.formulas_evaluated > 0 {
            summary.aligned_residuals_all_zero &= s.aligned_residuals_all_zero;
        }
        summary.oracle_disagreements += s.oracle_disagreements;
        summary.nullspace_disagreements += s.nullspace_disagreements;
        summary.max_lambda_discrepancy = summary.max_lambda_discrepancy.max(s.max_lambda_discrepancy);
        summary.max_subspace_residual = summary.max_subspace_residual.max(s.max_subspace_residual);
        rows.extend(o.rows);
        reports.extend(o.reports);
    }
    Ok(SweepReport {
        config: *cfg,
        summary,
        rows,
        reports,
    })
}

impl SweepReport {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "formula_id", "dimacs", "k", "n", "m", "pair", "num_satisfying",
                "proposition_holds", "witness_eval", "residual_p", "residual_q",
                "literal_qsat", "aligned_qsat", "lambda_min_literal",
            ])?;
        }
        w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Writes `sweep.json` and `sweep.csv` into `dir`, each through a
    /// temporary file renamed into place, so a failure leaves no partial
    /// output.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let json = self.to_json()?;
        let csv = self.to_csv()?;
        fs::create_dir_all(dir)?;
        let json_path = dir.join("sweep.json");
        let csv_path = dir.join("sweep.csv");
        write_atomic(&json_path, &json)?;
        write_atomic(&csv_path, &csv)?;
        Ok((json_path, csv_path))
    }
}

/// Writes via a sibling temporary file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ExperimentError::Io(e.error))?;
    Ok(())
}
