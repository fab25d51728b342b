//! Quantum satisfiability of a set of quantum assignments.
//!
//! An instance is satisfiable when some `|w⟩` has `⟨w|ψᵢ|w⟩ = 0` for every
//! `i`, i.e. when the common null space of the (scale-normalized)
//! projectors is nontrivial. Otherwise the verdict carries bounds on
//! `min_w max_i ⟨w|ψᵢ|w⟩` over unit `w`:
//! `λ_min(Σψᵢ)/m <= min_w max_i ⟨w|ψᵢ|w⟩ <= λ_min(Σψᵢ)`.

use serde::Serialize;
use thiserror::Error;

use crate::formula::Evaluation;
use crate::linalg::exact::{to_exact, EliminationField, ExactComplex};
use crate::linalg::{
    common_nullspace, min_eigen_psd, vector_dump_json, DenseMatrix, LinalgError, NullSpacePath,
    Scalar, StateVector, DEFAULT_TOL,
};
use crate::qassign::{residual, EmbeddingMode, QAssignError, QuantumAssignment};

/// Iteration cap for the smallest-eigenvalue computation.
pub const DEFAULT_MAX_ITERS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("no assignments given")]
    EmptyInstance,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("assignment {index} is not diagonal")]
    NotDiagonal { index: usize },
    #[error("invalid promise configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    QAssign(#[from] QAssignError),
}

/// The promise gap `ε` and the numerical tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PromiseConfig {
    pub epsilon: f64,
    pub tol: f64,
}

impl PromiseConfig {
    pub fn new(epsilon: f64, tol: f64) -> Result<Self, CheckError> {
        if !(epsilon > 0.0) {
            return Err(CheckError::InvalidConfig(format!("epsilon {epsilon} must be positive")));
        }
        if !(tol > 0.0) {
            return Err(CheckError::InvalidConfig(format!("tol {tol} must be positive")));
        }
        if tol >= epsilon {
            return Err(CheckError::InvalidConfig(format!(
                "tol {tol} must be below epsilon {epsilon}"
            )));
        }
        Ok(PromiseConfig { epsilon, tol })
    }

    /// `ε = 1/(8n³)`, `tol = 1e-9`.
    pub fn for_qubits(n: usize) -> Self {
        let n = n.max(1) as f64;
        PromiseConfig {
            epsilon: 1.0 / (8.0 * n * n * n),
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QSatVerdict {
    pub satisfiable: bool,
    #[serde(serialize_with = "ser_witness")]
    pub witness: Option<StateVector>,
    pub lambda_min: f64,
    pub gap_lower: f64,
    pub gap_upper: f64,
    pub epsilon: f64,
    pub promise_met: bool,
    /// Shared embedding mode of the assignments, when they have one.
    pub mode: Option<EmbeddingMode>,
    /// Evaluation the assignments were built from, when known.
    pub evaluation: Option<Evaluation>,
    pub path: Option<NullSpacePath>,
    /// Raw scales as given, before normalization.
    #[serde(serialize_with = "ser_scales")]
    pub scales: Vec<Scalar>,
}

fn ser_witness<S: serde::Serializer>(w: &Option<StateVector>, s: S) -> Result<S::Ok, S::Error> {
    match w {
        Some(v) => vector_dump_json(v).serialize(s),
        None => s.serialize_none(),
    }
}

fn ser_scales<S: serde::Serializer>(scales: &[Scalar], s: S) -> Result<S::Ok, S::Error> {
    scales
        .iter()
        .map(|&z| crate::linalg::scalar_json(z))
        .collect::<Vec<_>>()
        .serialize(s)
}

impl QSatVerdict {
    pub fn with_evaluation(mut self, v: &Evaluation) -> Self {
        self.evaluation = Some(v.clone());
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("verdict serializes")
    }

    /// `max_i ⟨w|ψᵢ|w⟩` at the witness, using normalized projectors.
    pub fn witness_max_residual(&self, assignments: &[QuantumAssignment]) -> Option<f64> {
        let w = self.witness.as_ref()?;
        assignments
            .iter()
            .map(|q| {
                let unit = QuantumAssignment {
                    matrix: q.normalized_matrix(),
                    ..q.clone()
                };
                residual(&unit, w).map(|r| r.norm())
            })
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
            .ok()
    }
}

fn common_mode(assignments: &[QuantumAssignment]) -> Option<EmbeddingMode> {
    let first = assignments.first()?.mode;
    assignments.iter().all(|q| q.mode == first).then_some(first)
}

fn check_dims(assignments: &[QuantumAssignment]) -> Result<usize, CheckError> {
    let dim = assignments.first().ok_or(CheckError::EmptyInstance)?.dim();
    for q in assignments {
        if q.dim() != dim {
            return Err(CheckError::DimensionMismatch {
                left: dim,
                right: q.dim(),
            });
        }
    }
    Ok(dim)
}

fn verdict(
    assignments: &[QuantumAssignment],
    cfg: &PromiseConfig,
    witness: Option<StateVector>,
    lambda_min: f64,
    path: Option<NullSpacePath>,
) -> QSatVerdict {
    let m = assignments.len() as f64;
    let satisfiable = witness.is_some();
    let gap_lower = lambda_min / m;
    QSatVerdict {
        satisfiable,
        witness,
        lambda_min,
        gap_lower,
        gap_upper: lambda_min,
        epsilon: cfg.epsilon,
        promise_met: satisfiable || gap_lower >= cfg.epsilon,
        mode: common_mode(assignments),
        evaluation: None,
        path,
        scales: assignments.iter().map(|q| q.scale).collect(),
    }
}

/// Decides quantum satisfiability through the common null space of the
/// scale-normalized projectors.
pub fn qsat_decide(
    assignments: &[QuantumAssignment],
    cfg: &PromiseConfig,
) -> Result<QSatVerdict, CheckError> {
    check_dims(assignments)?;
    let mats: Vec<DenseMatrix> = assignments.iter().map(QuantumAssignment::normalized_matrix).collect();
    let ns = common_nullspace(&mats, cfg.tol)?;

    let witness = ns.basis.first().cloned();
    if let (Some(exact), Some(_)) = (&ns.exact_basis, &witness) {
        debug_assert!(exact_annihilates(&mats, &exact[0]));
    }

    let mut sum = mats[0].clone();
    for m in &mats[1..] {
        sum = sum.try_add(m)?;
    }
    let lambda = min_eigen_psd(&sum, cfg.tol, DEFAULT_MAX_ITERS)?;
    Ok(verdict(assignments, cfg, witness, lambda, Some(ns.path)))
}

/// Whether `M x = 0` holds exactly for every matrix.
pub fn exact_annihilates(mats: &[DenseMatrix], x: &[ExactComplex]) -> bool {
    mats.iter().all(|m| {
        let Ok(rows) = m.rows() else { return false };
        rows.iter().all(|row| {
            let mut acc = ExactComplex::zero();
            for (a, b) in row.iter().zip(x) {
                if *a == Scalar::new(0.0, 0.0) {
                    continue;
                }
                let Some(a) = to_exact(*a) else { return false };
                acc += a * b;
            }
            acc.is_exact_zero()
        })
    })
}

/// Brute-force decision for diagonal instances: satisfiable iff some basis
/// index has a zero diagonal in every normalized projector.
pub fn diagonal_oracle(assignments: &[QuantumAssignment]) -> Result<QSatVerdict, CheckError> {
    let dim = check_dims(assignments)?;
    let mut total = vec![0.0f64; dim];
    let mut all_zero = vec![true; dim];
    for (index, q) in assignments.iter().enumerate() {
        let m = q.normalized_matrix();
        if !m.is_diagonal() {
            return Err(CheckError::NotDiagonal { index });
        }
        for (j, d) in m.diagonal().iter().enumerate() {
            total[j] += d.re;
            if *d != Scalar::new(0.0, 0.0) {
                all_zero[j] = false;
            }
        }
    }
    let witness = all_zero.iter().position(|&z| z).map(|j| {
        let mut e = vec![Scalar::new(0.0, 0.0); dim];
        e[j] = Scalar::new(1.0, 0.0);
        StateVector::new(e).expect("power-of-two dimension")
    });
    let lambda = total.iter().copied().fold(f64::INFINITY, f64::min);
    let n = dim.trailing_zeros() as usize;
    Ok(verdict(assignments, &PromiseConfig::for_qubits(n), witness, lambda, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_dimacs, satisfying_evaluations, Formula};
    use crate::linalg::basis_vector;
    use crate::qassign::{assignments_for, quantum_assignment};
    use proptest::prelude::*;

    fn one() -> Scalar {
        Scalar::new(1.0, 0.0)
    }

    fn example1() -> Formula {
        parse_dimacs("p cnf 3 2\n1 -2 0\n-1 3 0\n").unwrap()
    }

    fn bits(s: &str) -> Evaluation {
        Evaluation::parse_bits(s).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(PromiseConfig::new(0.1, 1e-9).is_ok());
        assert!(PromiseConfig::new(0.0, 1e-9).is_err());
        assert!(PromiseConfig::new(0.1, 0.0).is_err());
        assert!(PromiseConfig::new(1e-10, 1e-9).is_err());
        assert!(PromiseConfig::new(f64::NAN, 1e-9).is_err());
        let c = PromiseConfig::for_qubits(3);
        assert_eq!(c.epsilon, 1.0 / 216.0);
    }

    #[test]
    fn literal_example_is_unsatisfiable() {
        let f = example1();
        let qs = assignments_for(&f, &bits("101"), EmbeddingMode::Literal, one()).unwrap();
        let cfg = PromiseConfig::for_qubits(3);
        let v = qsat_decide(&qs, &cfg).unwrap();
        assert!(!v.satisfiable);
        assert!(v.witness.is_none());
        assert_eq!(v.lambda_min, 1.0);
        assert_eq!((v.gap_lower, v.gap_upper), (0.5, 1.0));
        assert!(v.promise_met);
        assert_eq!(v.path, Some(NullSpacePath::Exact));
        assert_eq!(v.mode, Some(EmbeddingMode::Literal));

        let o = diagonal_oracle(&qs).unwrap();
        assert!(!o.satisfiable);
        assert_eq!(o.lambda_min, 1.0);
    }

    #[test]
    fn aligned_example_is_satisfiable_at_101() {
        let f = example1();
        let qs = assignments_for(&f, &bits("101"), EmbeddingMode::Aligned, one()).unwrap();
        let v = qsat_decide(&qs, &PromiseConfig::for_qubits(3)).unwrap();
        assert!(v.satisfiable);
        assert_eq!(v.witness.as_ref().unwrap(), &basis_vector(&[true, false, true]));
        assert_eq!(v.witness_max_residual(&qs), Some(0.0));
        assert_eq!(v.lambda_min, 0.0);
        let o = diagonal_oracle(&qs).unwrap();
        assert_eq!(o.witness.unwrap().basis_index(), Some(5));
    }

    #[test]
    fn single_assignment_is_satisfiable() {
        let f = example1();
        let q = quantum_assignment(&f, 2, &bits("101"), EmbeddingMode::Literal, one()).unwrap();
        let v = qsat_decide(&[q], &PromiseConfig::for_qubits(3)).unwrap();
        assert!(v.satisfiable);
        assert_eq!(v.witness.unwrap().basis_index(), Some(6));
    }

    #[test]
    fn oracle_on_zero_matrices() {
        let q = quantum_assignment(&example1(), 1, &bits("101"), EmbeddingMode::Literal, one()).unwrap();
        let zero = QuantumAssignment {
            matrix: DenseMatrix::zeros(8).unwrap(),
            ..q
        };
        let v = diagonal_oracle(&[zero]).unwrap();
        assert!(v.satisfiable);
        assert_eq!(v.witness.unwrap().basis_index(), Some(0));
    }

    #[test]
    fn errors() {
        let cfg = PromiseConfig::for_qubits(3);
        assert_eq!(qsat_decide(&[], &cfg).unwrap_err(), CheckError::EmptyInstance);
        assert_eq!(diagonal_oracle(&[]).unwrap_err(), CheckError::EmptyInstance);
        let f = example1();
        let q = quantum_assignment(&f, 1, &bits("101"), EmbeddingMode::Literal, one()).unwrap();
        let small = Formula::from_dimacs_clauses(2, &[&[1]]).unwrap();
        let q2 = quantum_assignment(&small, 1, &bits("10"), EmbeddingMode::Literal, one()).unwrap();
        assert_eq!(
            qsat_decide(&[q.clone(), q2], &cfg).unwrap_err(),
            CheckError::DimensionMismatch { left: 8, right: 4 }
        );
        let dense = QuantumAssignment {
            matrix: DenseMatrix::from_real_rows(&[&[1., 1.], &[1., 1.]]).unwrap(),
            ..q
        };
        assert_eq!(diagonal_oracle(&[dense]).unwrap_err(), CheckError::NotDiagonal { index: 0 });
    }

    #[test]
    fn complex_scales_are_normalized() {
        let f = example1();
        let a = Scalar::new(0.3, -2.0);
        let qs = assignments_for(&f, &bits("101"), EmbeddingMode::Aligned, a).unwrap();
        let v = qsat_decide(&qs, &PromiseConfig::for_qubits(3)).unwrap();
        assert!(v.satisfiable);
        assert_eq!(v.scales, vec![a, a]);
        assert_eq!(v.path, Some(NullSpacePath::Exact));
    }

    #[test]
    fn promise_violation_is_reported() {
        let f = example1();
        let qs = assignments_for(&f, &bits("101"), EmbeddingMode::Literal, one()).unwrap();
        let cfg = PromiseConfig::new(0.75, 1e-9).unwrap();
        let v = qsat_decide(&qs, &cfg).unwrap();
        assert!(!v.satisfiable);
        assert!(!v.promise_met);
    }

    #[test]
    fn verdict_json_shape() {
        let f = example1();
        let qs = assignments_for(&f, &bits("101"), EmbeddingMode::Aligned, one()).unwrap();
        let v = qsat_decide(&qs, &PromiseConfig::for_qubits(3))
            .unwrap()
            .with_evaluation(&bits("101"));
        let j = v.to_json();
        assert_eq!(j["satisfiable"], true);
        assert_eq!(j["witness"][5], serde_json::json!([1, 0]));
        assert_eq!(j["mode"], "aligned");
        assert_eq!(j["evaluation"], "101");
        for key in ["lambda_min", "gap_lower", "gap_upper", "epsilon", "promise_met"] {
            assert!(j.get(key).is_some(), "{key}");
        }
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        (2usize..=4).prop_flat_map(|n| {
            let clause = (Just((1..=n).collect::<Vec<_>>()).prop_shuffle(), any::<[bool; 2]>())
                .prop_map(|(vars, signs)| {
                    vec![
                        if signs[0] { -(vars[0] as i64) } else { vars[0] as i64 },
                        if signs[1] { -(vars[1] as i64) } else { vars[1] as i64 },
                    ]
                });
            prop::collection::vec(clause, 1..=4).prop_map(move |cs| {
                let refs: Vec<&[i64]> = cs.iter().map(Vec::as_slice).collect();
                Formula::from_dimacs_clauses(n, &refs).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn decide_matches_oracle_and_is_monotone(f in arb_formula(), aligned in any::<bool>()) {
            let mode = if aligned { EmbeddingMode::Aligned } else { EmbeddingMode::Literal };
            let cfg = PromiseConfig::for_qubits(f.num_vars());
            for v in satisfying_evaluations(&f).unwrap() {
                let qs = assignments_for(&f, &v, mode, one()).unwrap();
                let d = qsat_decide(&qs, &cfg).unwrap();
                let o = diagonal_oracle(&qs).unwrap();
                prop_assert_eq!(d.satisfiable, o.satisfiable);
                prop_assert!((d.lambda_min - o.lambda_min).abs() < 1e-9);
                if d.satisfiable {
                    prop_assert_eq!(d.witness_max_residual(&qs), Some(0.0));
                }
                let mut prev_sat = true;
                for len in 1..=qs.len() {
                    let sat = qsat_decide(&qs[..len], &cfg).unwrap().satisfiable;
                    prop_assert!(prev_sat || !sat);
                    prev_sat = sat;
                }
            }
        }

        #[test]
        fn satisfiable_flag_is_scale_invariant(
            f in arb_formula(),
            scales in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 4),
        ) {
            prop_assume!(scales.iter().all(|(r, i)| r.abs() + i.abs() > 1e-2));
            let cfg = PromiseConfig::for_qubits(f.num_vars());
            for v in satisfying_evaluations(&f).unwrap().into_iter().take(3) {
                let qs = assignments_for(&f, &v, EmbeddingMode::Literal, one()).unwrap();
                let scaled: Vec<_> = qs
                    .iter()
                    .zip(&scales)
                    .map(|(q, &(r, i))| q.with_scale(Scalar::new(r, i)).unwrap())
                    .collect();
                let a = qsat_decide(&qs, &cfg).unwrap();
                let b = qsat_decide(&scaled, &cfg).unwrap();
                prop_assert_eq!(a.satisfiable, b.satisfiable);
            }
        }
    }
}
