//! Dense complex linear algebra on `2^n`-dimensional spaces.
//!
//! Matrices carry either full row-major storage or diagonal-only storage.
//! Every matrix the projector constructions produce is diagonal, so the
//! diagonal form is what lets desk-scale instances go up to `2^20`.

mod dump;
mod eigen;
pub mod exact;
mod nullspace;

use std::ops::{Add, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub use dump::{matrix_dump_json, matrix_grid, scalar_json, vector_dump_json};
pub use eigen::min_eigen_psd;
pub use nullspace::{
    common_nullspace, is_psd, nullspace_exact, nullspace_floating, orthonormalize,
    projection_residual, NullSpace, NullSpacePath, DIAGONAL_PATH_MIN_DIM,
};

pub type Scalar = Complex64;

/// Largest dimension stored densely.
pub const MAX_DENSE_DIM: usize = 1 << 14;
/// Largest dimension stored as a diagonal.
pub const MAX_DIAGONAL_DIM: usize = 1 << 20;
/// Default pivot and convergence tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("dimension {dim} exceeds the cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("matrix {index} is not Hermitian")]
    NotHermitian { index: usize },
    #[error("matrix {index} is not positive semidefinite")]
    NotPsd { index: usize },
    #[error("power iteration did not converge in {iters} iterations")]
    NoConvergence { iters: usize },
    #[error("no matrices given")]
    Empty,
    #[error("non-finite entry")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn check_pow2(dim: usize) -> Result<()> {
    if dim.is_power_of_two() {
        Ok(())
    } else {
        Err(LinalgError::NotPowerOfTwo(dim))
    }
}

fn check_same(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { left, right })
    }
}

/// A vector in `ℂ^(2^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    entries: Vec<Scalar>,
}

impl StateVector {
    pub fn new(entries: Vec<Scalar>) -> Result<Self> {
        check_pow2(entries.len())?;
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(StateVector { entries })
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        StateVector::new(entries.iter().map(|&x| Scalar::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        StateVector::new(vec![Scalar::new(0.0, 0.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Number of qubits, `log2(dim)`.
    pub fn qubits(&self) -> usize {
        self.entries.len().trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.entries[i]
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, a: Scalar) -> StateVector {
        StateVector {
            entries: self.entries.iter().map(|z| z * a).collect(),
        }
    }

    /// Index of the single nonzero entry, if there is exactly one.
    pub fn basis_index(&self) -> Option<usize> {
        let mut nz = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != Scalar::new(0.0, 0.0));
        match (nz.next(), nz.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<Scalar>),
    Diagonal(Vec<Scalar>),
}

/// Square complex matrix of power-of-two dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    storage: Storage,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Result<Self> {
        DenseMatrix::from_diagonal(vec![Scalar::new(1.0, 0.0); dim])
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        DenseMatrix::from_diagonal(vec![Scalar::new(0.0, 0.0); dim])
    }

    pub fn from_diagonal(diag: Vec<Scalar>) -> Result<Self> {
        let dim = diag.len();
        check_pow2(dim)?;
        if dim > MAX_DIAGONAL_DIM {
            return Err(LinalgError::TooLarge {
                dim,
                cap: MAX_DIAGONAL_DIM,
            });
        }
        Ok(DenseMatrix {
            dim,
            storage: Storage::Diagonal(diag),
        })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        DenseMatrix::from_diagonal(diag.iter().map(|&x| Scalar::new(x, 0.0)).collect())
    }

    /// Row-major entries.
    pub fn from_entries(dim: usize, entries: Vec<Scalar>) -> Result<Self> {
        check_pow2(dim)?;
        if dim > MAX_DENSE_DIM {
            return Err(LinalgError::TooLarge {
                dim,
                cap: MAX_DENSE_DIM,
            });
        }
        check_same(dim * dim, entries.len())?;
        Ok(DenseMatrix {
            dim,
            storage: Storage::Dense(entries),
        })
    }

    pub fn from_rows(rows: &[Vec<Scalar>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            check_same(dim, row.len())?;
            entries.extend_from_slice(row);
        }
        DenseMatrix::from_entries(dim, entries)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Scalar>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Scalar::new(x, 0.0)).collect())
            .collect();
        DenseMatrix::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when the matrix is stored as a diagonal.
    pub fn diagonal_hint(&self) -> bool {
        matches!(self.storage, Storage::Diagonal(_))
    }

    /// True when every off-diagonal entry is zero, whatever the storage.
    pub fn is_diagonal(&self) -> bool {
        match &self.storage {
            Storage::Diagonal(_) => true,
            Storage::Dense(e) => e
                .iter()
                .enumerate()
                .all(|(idx, z)| idx / self.dim == idx % self.dim || *z == Scalar::new(0.0, 0.0)),
        }
    }

    /// Converts dense storage to diagonal storage when the matrix is diagonal.
    pub fn compacted(self) -> Self {
        if !self.diagonal_hint() && self.is_diagonal() {
            let diag = self.diagonal();
            DenseMatrix {
                dim: self.dim,
                storage: Storage::Diagonal(diag),
            }
        } else {
            self
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        match &self.storage {
            Storage::Dense(e) => e[i * self.dim + j],
            Storage::Diagonal(d) if i == j => d[i],
            Storage::Diagonal(_) => Scalar::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<Scalar> {
        match &self.storage {
            Storage::Diagonal(d) => d.clone(),
            Storage::Dense(e) => (0..self.dim).map(|i| e[i * self.dim + i]).collect(),
        }
    }

    /// Row-major copy of all entries. Fails above the dense cap.
    pub fn to_dense_entries(&self) -> Result<Vec<Scalar>> {
        match &self.storage {
            Storage::Dense(e) => Ok(e.clone()),
            Storage::Diagonal(d) => {
                if self.dim > MAX_DENSE_DIM {
                    return Err(LinalgError::TooLarge {
                        dim: self.dim,
                        cap: MAX_DENSE_DIM,
                    });
                }
                let mut e = vec![Scalar::new(0.0, 0.0); self.dim * self.dim];
                for (i, z) in d.iter().enumerate() {
                    e[i * self.dim + i] = *z;
                }
                Ok(e)
            }
        }
    }

    pub fn rows(&self) -> Result<Vec<Vec<Scalar>>> {
        Ok(self
            .to_dense_entries()?
            .chunks(self.dim)
            .map(<[Scalar]>::to_vec)
            .collect())
    }

    pub fn trace(&self) -> Scalar {
        self.diagonal().into_iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        let entries = match &self.storage {
            Storage::Dense(e) | Storage::Diagonal(e) => e,
        };
        entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, a: Scalar) -> DenseMatrix {
        self.map_entries(|z| z * a)
    }

    /// Applies `f` to every stored entry. `f(0)` must be 0 for diagonal storage.
    pub fn map_entries(&self, f: impl Fn(Scalar) -> Scalar) -> DenseMatrix {
        let storage = match &self.storage {
            Storage::Dense(e) => Storage::Dense(e.iter().map(|&z| f(z)).collect()),
            Storage::Diagonal(d) => Storage::Diagonal(d.iter().map(|&z| f(z)).collect()),
        };
        DenseMatrix {
            dim: self.dim,
            storage,
        }
    }

    fn zip(&self, other: &DenseMatrix, f: impl Fn(Scalar, Scalar) -> Scalar) -> Result<DenseMatrix> {
        check_same(self.dim, other.dim)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => {
                Storage::Diagonal(a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            }
            _ => {
                let a = self.to_dense_entries()?;
                let b = other.to_dense_entries()?;
                Storage::Dense(a.iter().zip(&b).map(|(&x, &y)| f(x, y)).collect())
            }
        };
        Ok(DenseMatrix {
            dim: self.dim,
            storage,
        })
    }

    pub fn try_add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip(other, |x, y| x + y)
    }

    pub fn try_sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip(other, |x, y| x - y)
    }

    pub fn mul_vec(&self, v: &StateVector) -> Result<StateVector> {
        check_same(self.dim, v.dim())?;
        let entries = match &self.storage {
            Storage::Diagonal(d) => d.iter().zip(v.entries()).map(|(a, b)| a * b).collect(),
            Storage::Dense(e) => e
                .chunks(self.dim)
                .map(|row| row.iter().zip(v.entries()).map(|(a, b)| a * b).sum())
                .collect(),
        };
        Ok(StateVector { entries })
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_same(self.dim, other.dim)?;
        if let (Storage::Diagonal(a), Storage::Diagonal(b)) = (&self.storage, &other.storage) {
            return DenseMatrix::from_diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect());
        }
        let n = self.dim;
        let a = self.to_dense_entries()?;
        let b = other.to_dense_entries()?;
        let mut c = vec![Scalar::new(0.0, 0.0); n * n];
        for i in 0..n {
            for l in 0..n {
                let ail = a[i * n + l];
                if ail == Scalar::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    c[i * n + j] += ail * b[l * n + j];
                }
            }
        }
        DenseMatrix::from_entries(n, c)
    }

    /// Entrywise check `|A_ij - conj(A_ji)| <= tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        match &self.storage {
            Storage::Diagonal(d) => d.iter().all(|z| z.im.abs() <= tol),
            Storage::Dense(e) => {
                let n = self.dim;
                (0..n).all(|i| (i..n).all(|j| (e[i * n + j] - e[j * n + i].conj()).norm() <= tol))
            }
        }
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;

    /// Panics on dimension mismatch; use [`DenseMatrix::try_add`] otherwise.
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.try_add(rhs).expect("matrix dimensions differ")
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.try_sub(rhs).expect("matrix dimensions differ")
    }
}

/// Computational basis vector for a bit string, leftmost bit most
/// significant: bits `(1,0,1)` give the unit vector at index 5 of `ℂ^8`.
pub fn basis_vector(bits: &[bool]) -> StateVector {
    let n = bits.len();
    let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
    let mut entries = vec![Scalar::new(0.0, 0.0); 1 << n];
    entries[index] = Scalar::new(1.0, 0.0);
    StateVector { entries }
}

/// `⟨v|w⟩ = Σ conj(v_i) w_i`.
pub fn inner(v: &StateVector, w: &StateVector) -> Result<Scalar> {
    check_same(v.dim(), w.dim())?;
    Ok(v.entries()
        .iter()
        .zip(w.entries())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// `|v⟩⟨v|`. Stored diagonally when `v` has at most one nonzero entry.
pub fn outer(v: &StateVector) -> DenseMatrix {
    let n = v.dim();
    let nonzero = v
        .entries()
        .iter()
        .filter(|z| **z != Scalar::new(0.0, 0.0))
        .count();
    if nonzero <= 1 {
        let diag = v.entries().iter().map(|z| Scalar::new(z.norm_sqr(), 0.0)).collect();
        return DenseMatrix {
            dim: n,
            storage: Storage::Diagonal(diag),
        };
    }
    let mut e = Vec::with_capacity(n * n);
    for a in v.entries() {
        for b in v.entries() {
            e.push(a * b.conj());
        }
    }
    DenseMatrix {
        dim: n,
        storage: Storage::Dense(e),
    }
}

/// Kronecker product `A ⊗ B`. Diagonal inputs give a diagonal result.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let dim = a.dim * b.dim;
    if let (Storage::Diagonal(da), Storage::Diagonal(db)) = (&a.storage, &b.storage) {
        let diag = da
            .iter()
            .flat_map(|x| db.iter().map(move |y| x * y))
            .collect();
        return DenseMatrix::from_diagonal(diag);
    }
    if dim > MAX_DENSE_DIM {
        return Err(LinalgError::TooLarge {
            dim,
            cap: MAX_DENSE_DIM,
        });
    }
    let mut e = vec![Scalar::new(0.0, 0.0); dim * dim];
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a.get(i, j);
            if aij == Scalar::new(0.0, 0.0) {
                continue;
            }
            for k in 0..b.dim {
                for l in 0..b.dim {
                    e[(i * b.dim + k) * dim + j * b.dim + l] = aij * b.get(k, l);
                }
            }
        }
    }
    DenseMatrix::from_entries(dim, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    fn real_diag(m: &DenseMatrix) -> Vec<f64> {
        m.diagonal().iter().map(|z| z.re).collect()
    }

    #[test]
    fn basis_vector_examples() {
        assert_eq!(
            basis_vector(&[true, false]),
            StateVector::from_real(&[0., 0., 1., 0.]).unwrap()
        );
        assert_eq!(basis_vector(&[true, false, true]).basis_index(), Some(5));
        assert_eq!(basis_vector(&[true, false, true]).dim(), 8);
        assert_eq!(basis_vector(&[false]), StateVector::from_real(&[1., 0.]).unwrap());
    }

    #[test]
    fn inner_examples() {
        let b10 = basis_vector(&[true, false]);
        let b11 = basis_vector(&[true, true]);
        assert_eq!(inner(&b10, &b10).unwrap(), c(1., 0.));
        assert_eq!(inner(&b10, &b11).unwrap(), c(0., 0.));
        let v = StateVector::new(vec![c(0., 1.), c(0., 0.)]).unwrap();
        assert_eq!(inner(&v, &v).unwrap(), c(1., 0.));
        assert!(matches!(
            inner(&b10, &basis_vector(&[true])),
            Err(LinalgError::DimensionMismatch { left: 4, right: 2 })
        ));
    }

    #[test]
    fn outer_examples() {
        let m = outer(&basis_vector(&[true, false]));
        assert!(m.diagonal_hint());
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (2, 2) { 1. } else { 0. };
                assert_eq!(m.get(i, j), c(want, 0.));
            }
        }
        let m = outer(&basis_vector(&[true, true]));
        assert_eq!(real_diag(&m), [0., 0., 0., 1.]);
        assert_eq!(outer(&StateVector::zeros(4).unwrap()), DenseMatrix::zeros(4).unwrap());
    }

    #[test]
    fn kron_examples() {
        let i2 = DenseMatrix::identity(2).unwrap();
        let a = DenseMatrix::from_real_diagonal(&[1., 1., 0., 1.]).unwrap();
        assert_eq!(real_diag(&kron(&a, &i2).unwrap()), [1., 1., 1., 1., 0., 0., 1., 1.]);
        let b = DenseMatrix::from_real_diagonal(&[1., 1., 1., 0.]).unwrap();
        assert_eq!(real_diag(&kron(&b, &i2).unwrap()), [1., 1., 1., 1., 1., 1., 0., 0.]);
        let dense = DenseMatrix::from_real_rows(&[&[1., 2.], &[3., 4.]]).unwrap();
        let i1 = DenseMatrix::identity(1).unwrap();
        assert_eq!(kron(&i1, &dense).unwrap(), dense);
        let k = kron(&dense, &i2).unwrap();
        assert_eq!(k.get(2, 0), c(3., 0.));
        assert_eq!(k.get(3, 1), c(3., 0.));
        assert_eq!(k.get(3, 0), c(0., 0.));
    }

    #[test]
    fn diagonal_hint_tracks_structure() {
        let d = DenseMatrix::from_real_rows(&[&[1., 0.], &[0., 2.]]).unwrap();
        assert!(!d.diagonal_hint());
        assert!(d.is_diagonal());
        assert!(d.clone().compacted().diagonal_hint());
        let nd = DenseMatrix::from_real_rows(&[&[1., 1.], &[0., 2.]]).unwrap();
        assert!(!nd.is_diagonal());
        assert!(!nd.is_hermitian(1e-12));
    }

    #[test]
    fn caps_and_shapes() {
        assert!(matches!(StateVector::from_real(&[1., 0., 0.]), Err(LinalgError::NotPowerOfTwo(3))));
        assert!(DenseMatrix::identity(MAX_DIAGONAL_DIM).is_ok());
        assert!(matches!(
            DenseMatrix::identity(MAX_DIAGONAL_DIM * 2),
            Err(LinalgError::TooLarge { .. })
        ));
    }

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(r, i)| c(r, i))
    }

    fn arb_vector(dim: usize) -> impl Strategy<Value = StateVector> {
        prop::collection::vec(arb_scalar(), dim).prop_map(|e| StateVector::new(e).unwrap())
    }

    fn arb_matrix(dim: usize) -> impl Strategy<Value = DenseMatrix> {
        prop::collection::vec(arb_scalar(), dim * dim)
            .prop_map(move |e| DenseMatrix::from_entries(dim, e).unwrap())
    }

    proptest! {
        #[test]
        fn inner_is_conjugate_symmetric(v in arb_vector(8), w in arb_vector(8)) {
            let a = inner(&v, &w).unwrap();
            let b = inner(&w, &v).unwrap().conj();
            prop_assert!((a - b).norm() < 1e-12);
        }

        #[test]
        fn kron_mixed_product(
            a in arb_matrix(2), b in arb_matrix(4), cm in arb_matrix(2), d in arb_matrix(4)
        ) {
            let lhs = kron(&a, &b).unwrap().matmul(&kron(&cm, &d).unwrap()).unwrap();
            let rhs = kron(&a.matmul(&cm).unwrap(), &b.matmul(&d).unwrap()).unwrap();
            let diff = (&lhs - &rhs).max_abs();
            // Entries reach ~1e3, so compare relative to their size.
            prop_assert!(diff <= 1e-12 * lhs.max_abs().max(1.0), "diff {diff}");
        }

        #[test]
        fn outer_of_unit_vector_is_hermitian_projector(v in arb_vector(4)) {
            prop_assume!(v.norm() > 1e-3);
            let u = v.scale(c(1.0 / v.norm(), 0.0));
            let p = outer(&u);
            prop_assert!(p.is_hermitian(1e-12));
            let p2 = p.matmul(&p).unwrap();
            prop_assert!((&p2 - &p).max_abs() < 1e-12);
        }
    }
}
