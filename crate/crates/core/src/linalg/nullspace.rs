use super::exact::{
    gaussian_int_kernel, kernel_from_rref, row_reduce, to_gaussian_int, to_scalar, ExactVector,
    GaussianInt,
};
use super::{inner, DenseMatrix, LinalgError, Result, Scalar, StateVector, MAX_DENSE_DIM};

/// Which arithmetic produced a null-space basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NullSpacePath {
    /// Gaussian-rational elimination; every entry was a Gaussian integer.
    Exact,
    /// Floating elimination with a pivot threshold.
    Floating,
    /// Diagonal inputs above the dense cap; read off the zero diagonal entries.
    Diagonal,
}

/// Common null space of a set of matrices.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Orthonormal basis.
    pub basis: Vec<StateVector>,
    /// The unnormalized exact basis, on the exact path.
    pub exact_basis: Option<Vec<ExactVector>>,
    pub path: NullSpacePath,
}

impl NullSpace {
    pub fn is_trivial(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Above this dimension all-diagonal inputs skip elimination (which is cubic
/// in the dimension) and read the kernel off their zero pattern.
pub const DIAGONAL_PATH_MIN_DIM: usize = 1 << 8;

fn scale_of(m: &DenseMatrix) -> f64 {
    m.max_abs().max(1.0)
}

/// Pivoted `LDLᴴ` test for positive semidefiniteness. Assumes `m` Hermitian.
pub fn is_psd(m: &DenseMatrix, tol: f64) -> bool {
    let thr = tol * scale_of(m);
    if m.is_diagonal() {
        return m.diagonal().iter().all(|z| z.re >= -thr);
    }
    let n = m.dim();
    let Ok(mut a) = m.to_dense_entries() else {
        return false;
    };
    let mut remaining: Vec<usize> = (0..n).collect();
    while !remaining.is_empty() {
        let (pos, &p) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &x), (_, &y)| a[x * n + x].re.total_cmp(&a[y * n + y].re))
            .expect("nonempty");
        let d = a[p * n + p].re;
        if d < -thr {
            return false;
        }
        if d <= thr {
            // A PSD matrix with a vanishing diagonal has vanishing rows too.
            let bound = thr.sqrt();
            return remaining
                .iter()
                .all(|&i| remaining.iter().all(|&j| a[i * n + j].norm() <= bound));
        }
        remaining.swap_remove(pos);
        for &i in &remaining {
            let f = a[i * n + p] / d;
            if f == Scalar::new(0.0, 0.0) {
                continue;
            }
            for &j in &remaining {
                let apj = a[p * n + j];
                a[i * n + j] -= f * apj;
            }
        }
    }
    true
}

fn validate(mats: &[DenseMatrix], tol: f64) -> Result<usize> {
    let first = mats.first().ok_or(LinalgError::Empty)?;
    let dim = first.dim();
    for (index, m) in mats.iter().enumerate() {
        if m.dim() != dim {
            return Err(LinalgError::DimensionMismatch {
                left: dim,
                right: m.dim(),
            });
        }
        if !m.is_hermitian(tol * scale_of(m)) {
            return Err(LinalgError::NotHermitian { index });
        }
        if !is_psd(m, tol) {
            return Err(LinalgError::NotPsd { index });
        }
    }
    Ok(dim)
}

fn stacked_rows(mats: &[DenseMatrix]) -> Result<Vec<Vec<Scalar>>> {
    let mut rows = Vec::new();
    for m in mats {
        if m.dim() > MAX_DENSE_DIM {
            return Err(LinalgError::TooLarge {
                dim: m.dim(),
                cap: MAX_DENSE_DIM,
            });
        }
        rows.extend(
            m.rows()?
                .into_iter()
                .filter(|r| r.iter().any(|z| *z != Scalar::new(0.0, 0.0))),
        );
    }
    Ok(rows)
}

/// Exact common null space over `ℚ(i)`, or `None` if some entry is not a
/// Gaussian integer. The basis is the unnormalized one read off the RREF.
/// Inputs are not checked for Hermitian/PSD structure.
pub fn nullspace_exact(mats: &[DenseMatrix]) -> Result<Option<Vec<ExactVector>>> {
    let dim = mats.first().ok_or(LinalgError::Empty)?.dim();
    let mut rows: Vec<Vec<GaussianInt>> = Vec::new();
    for row in stacked_rows(mats)? {
        if row.len() != dim {
            return Err(LinalgError::DimensionMismatch {
                left: dim,
                right: row.len(),
            });
        }
        match row.into_iter().map(to_gaussian_int).collect::<Option<Vec<_>>>() {
            Some(r) => rows.push(r),
            None => return Ok(None),
        }
    }
    Ok(Some(gaussian_int_kernel(rows, dim)))
}

/// Floating common null space with pivot threshold `tol` relative to the
/// largest entry. Returns an orthonormal basis. Inputs are not checked for
/// Hermitian/PSD structure.
pub fn nullspace_floating(mats: &[DenseMatrix], tol: f64) -> Result<Vec<StateVector>> {
    let dim = mats.first().ok_or(LinalgError::Empty)?.dim();
    let mut rows = stacked_rows(mats)?;
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(LinalgError::DimensionMismatch {
            left: dim,
            right: bad.len(),
        });
    }
    let scale = mats.iter().map(scale_of).fold(1.0, f64::max);
    let pivots = row_reduce(&mut rows, dim, tol * scale);
    let kernel = kernel_from_rref(&rows, &pivots, dim)
        .into_iter()
        .map(StateVector::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(orthonormalize(&kernel, tol))
}

/// Modified Gram–Schmidt with one reorthogonalization pass. Vectors whose
/// remaining norm falls to `tol` or below are dropped.
pub fn orthonormalize(vectors: &[StateVector], tol: f64) -> Vec<StateVector> {
    let mut out: Vec<StateVector> = Vec::new();
    for v in vectors {
        let mut e = v.entries().to_vec();
        for _ in 0..2 {
            for q in &out {
                let c: Scalar = q.entries().iter().zip(&e).map(|(a, b)| a.conj() * b).sum();
                if c == Scalar::new(0.0, 0.0) {
                    continue;
                }
                for (x, qi) in e.iter_mut().zip(q.entries()) {
                    *x -= c * qi;
                }
            }
        }
        let norm = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > tol {
            let inv = 1.0 / norm;
            out.push(StateVector {
                entries: e.into_iter().map(|z| z * inv).collect(),
            });
        }
    }
    out
}

/// Largest distance from a vector of `a` to the span of the orthonormal
/// set `b`. Zero when `a` is empty.
pub fn projection_residual(a: &[StateVector], b: &[StateVector]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for u in a {
        let mut r = u.entries().to_vec();
        for v in b {
            let c = inner(v, u)?;
            for (x, vi) in r.iter_mut().zip(v.entries()) {
                *x -= c * vi;
            }
        }
        worst = worst.max(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    Ok(worst)
}

/// Orthonormal basis of `∩ ker(Mᵢ)` for Hermitian PSD inputs. Uses exact
/// elimination when every entry is a Gaussian integer, floating
/// elimination otherwise, and the zero pattern of the diagonals for
/// all-diagonal inputs above [`DIAGONAL_PATH_MIN_DIM`].
pub fn common_nullspace(mats: &[DenseMatrix], tol: f64) -> Result<NullSpace> {
    let dim = validate(mats, tol)?;
    if dim > DIAGONAL_PATH_MIN_DIM && mats.iter().all(DenseMatrix::is_diagonal) {
        let diags: Vec<Vec<Scalar>> = mats.iter().map(DenseMatrix::diagonal).collect();
        let thr = mats.iter().map(scale_of).fold(1.0, f64::max) * tol;
        let basis = (0..dim)
            .filter(|&j| diags.iter().all(|d| d[j].norm() <= thr))
            .map(|j| {
                let mut e = vec![Scalar::new(0.0, 0.0); dim];
                e[j] = Scalar::new(1.0, 0.0);
                StateVector { entries: e }
            })
            .collect();
        return Ok(NullSpace {
            basis,
            exact_basis: None,
            path: NullSpacePath::Diagonal,
        });
    }
    if let Some(exact) = nullspace_exact(mats)? {
        let as_float = exact
            .iter()
            .map(|v| StateVector::new(v.iter().map(to_scalar).collect()))
            .collect::<Result<Vec<_>>>()?;
        return Ok(NullSpace {
            basis: orthonormalize(&as_float, tol),
            exact_basis: Some(exact),
            path: NullSpacePath::Exact,
        });
    }
    Ok(NullSpace {
        basis: nullspace_floating(mats, tol)?,
        exact_basis: None,
        path: NullSpacePath::Floating,
    })
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_traits::{One, Zero};
    use super::super::{kron, DEFAULT_TOL};
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    #[test]
    fn disjoint_diagonal_kernels_intersect_trivially() {
        let a = DenseMatrix::from_real_diagonal(&[1., 1., 1., 1., 0., 0., 1., 1.]).unwrap();
        let b = DenseMatrix::from_real_diagonal(&[1., 1., 1., 1., 1., 1., 0., 0.]).unwrap();
        let ns = common_nullspace(&[a.clone(), b.clone()], DEFAULT_TOL).unwrap();
        assert_eq!(ns.path, NullSpacePath::Exact);
        assert!(ns.is_trivial());
        assert!(nullspace_floating(&[a.clone(), b], DEFAULT_TOL).unwrap().is_empty());
        let single = common_nullspace(&[a], DEFAULT_TOL).unwrap();
        let idx: Vec<_> = single.basis.iter().map(|v| v.basis_index().unwrap()).collect();
        assert_eq!(idx, [4, 5]);
    }

    #[test]
    fn zero_and_identity() {
        let z = common_nullspace(&[DenseMatrix::zeros(4).unwrap()], DEFAULT_TOL).unwrap();
        assert_eq!(z.dim(), 4);
        let i = common_nullspace(&[DenseMatrix::identity(4).unwrap()], DEFAULT_TOL).unwrap();
        assert!(i.is_trivial());
    }

    #[test]
    fn validation_errors() {
        let tol = DEFAULT_TOL;
        assert_eq!(common_nullspace(&[], tol).unwrap_err(), LinalgError::Empty);
        let a = DenseMatrix::identity(2).unwrap();
        let b = DenseMatrix::identity(4).unwrap();
        assert!(matches!(
            common_nullspace(&[a.clone(), b], tol),
            Err(LinalgError::DimensionMismatch { left: 2, right: 4 })
        ));
        let nh = DenseMatrix::from_real_rows(&[&[1., 1.], &[0., 1.]]).unwrap();
        assert_eq!(
            common_nullspace(&[a.clone(), nh], tol).unwrap_err(),
            LinalgError::NotHermitian { index: 1 }
        );
        let indefinite = DenseMatrix::from_real_rows(&[&[1., 2.], &[2., 1.]]).unwrap();
        assert_eq!(
            common_nullspace(&[indefinite], tol).unwrap_err(),
            LinalgError::NotPsd { index: 0 }
        );
        let neg = DenseMatrix::from_real_diagonal(&[1., -1.]).unwrap();
        assert_eq!(common_nullspace(&[neg], tol).unwrap_err(), LinalgError::NotPsd { index: 0 });
    }

    #[test]
    fn psd_detects_rank_deficiency() {
        let m = DenseMatrix::from_real_rows(&[&[1., 1.], &[1., 1.]]).unwrap();
        assert!(is_psd(&m, DEFAULT_TOL));
        let ns = common_nullspace(&[m], DEFAULT_TOL).unwrap();
        assert_eq!(ns.dim(), 1);
        let v = &ns.basis[0];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v.get(0) + v.get(1)).norm() < 1e-15);
        assert!((v.get(0).norm() - h).abs() < 1e-15);
    }

    #[test]
    fn non_integer_entries_take_floating_path() {
        let m = DenseMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let ns = common_nullspace(&[m], DEFAULT_TOL).unwrap();
        assert_eq!(ns.path, NullSpacePath::Floating);
        assert_eq!(ns.dim(), 1);
    }

    #[test]
    fn complex_hermitian_kernel() {
        // [[1, i], [-i, 1]] = 2 |u⟩⟨u| with u = (1, -i)/√2; kernel is (i, 1)/√2 up to phase.
        let m = DenseMatrix::from_rows(&[vec![c(1., 0.), c(0., 1.)], vec![c(0., -1.), c(1., 0.)]])
            .unwrap();
        let ns = common_nullspace(std::slice::from_ref(&m), DEFAULT_TOL).unwrap();
        assert_eq!(ns.path, NullSpacePath::Exact);
        assert_eq!(ns.dim(), 1);
        assert!(m.mul_vec(&ns.basis[0]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn large_diagonal_uses_zero_pattern() {
        // Kernels {j : bit 14 of j is 0} and {12345, 20000}.
        let n = 15;
        let one = DenseMatrix::identity(2).unwrap();
        let mut a = DenseMatrix::from_real_diagonal(&[0., 1.]).unwrap();
        for _ in 1..n {
            a = kron(&a, &one).unwrap();
        }
        let mut d = vec![1.0; 1 << n];
        d[12345] = 0.0;
        d[20000] = 0.0;
        let b = DenseMatrix::from_real_diagonal(&d).unwrap();
        let ns = common_nullspace(&[a, b], DEFAULT_TOL).unwrap();
        assert_eq!(ns.path, NullSpacePath::Diagonal);
        assert_eq!(ns.dim(), 1);
        assert_eq!(ns.basis[0].basis_index(), Some(12345));
    }

    /// Random Gaussian-integer PSD matrix `AᴴA` with `A` of `rank` rows.
    fn gram(dim: usize, rank: usize, entries: &[(i8, i8)]) -> DenseMatrix {
        let a: Vec<Scalar> = entries[..rank * dim]
            .iter()
            .map(|&(r, i)| c(f64::from(r), f64::from(i)))
            .collect();
        let mut m = vec![c(0., 0.); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                m[i * dim + j] = (0..rank).map(|r| a[r * dim + i].conj() * a[r * dim + j]).sum();
            }
        }
        DenseMatrix::from_entries(dim, m).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_and_floating_paths_span_same_space(
            log_dim in 1usize..=6,
            count in 1usize..=3,
            seed in prop::collection::vec((-2i8..=2, -2i8..=2), 3 * 64 * 64),
            ranks in prop::collection::vec(0usize..=64, 3),
        ) {
            let dim = 1 << log_dim;
            let mats: Vec<DenseMatrix> = (0..count)
                .map(|i| {
                    let rank = ranks[i] % (dim / 2 + 1);
                    gram(dim, rank, &seed[i * 64 * 64..])
                })
                .collect();
            let ns = common_nullspace(&mats, DEFAULT_TOL).unwrap();
            prop_assert_eq!(ns.path, NullSpacePath::Exact);
            let fl = nullspace_floating(&mats, DEFAULT_TOL).unwrap();
            prop_assert_eq!(ns.dim(), fl.len());
            prop_assert!(projection_residual(&ns.basis, &fl).unwrap() < 1e-9);
            prop_assert!(projection_residual(&fl, &ns.basis).unwrap() < 1e-9);
            // The exact basis is annihilated exactly; clear denominators and
            // check over the Gaussian integers.
            let int_rows: Vec<Vec<GaussianInt>> = stacked_rows(&mats).unwrap().into_iter()
                .map(|r| r.into_iter().map(|z| to_gaussian_int(z).unwrap()).collect())
                .collect();
            for v in ns.exact_basis.as_ref().unwrap() {
                let den = v.iter().fold(BigInt::one(), |l, z| l.lcm(z.re.denom()).lcm(z.im.denom()));
                let x: Vec<GaussianInt> = v.iter()
                    .map(|z| GaussianInt::new(
                        (&z.re * &den).to_integer(),
                        (&z.im * &den).to_integer(),
                    ))
                    .collect();
                for row in &int_rows {
                    let dot: GaussianInt = row.iter().zip(&x).map(|(a, b)| a * b).sum();
                    prop_assert!(dot.re.is_zero() && dot.im.is_zero());
                }
            }
        }
    }
}
