//! Exact Gaussian-rational arithmetic and the row reduction shared by the
//! exact and floating null-space paths.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::Scalar;

/// An element of `ℚ(i)`.
pub type ExactComplex = Complex<BigRational>;
/// An element of `ℤ[i]`.
pub type GaussianInt = Complex<BigInt>;
pub type ExactVector = Vec<ExactComplex>;

/// Largest magnitude for which every integer is exactly representable in f64.
const EXACT_INT_BOUND: f64 = 9_007_199_254_740_992.0;

fn to_int(x: f64) -> Option<BigInt> {
    if x.fract() != 0.0 || x.abs() > EXACT_INT_BOUND {
        return None;
    }
    Some(BigInt::from(x as i64))
}

/// Converts a scalar whose real and imaginary parts are integers.
pub fn to_gaussian_int(z: Scalar) -> Option<GaussianInt> {
    Some(Complex::new(to_int(z.re)?, to_int(z.im)?))
}

pub fn to_exact(z: Scalar) -> Option<ExactComplex> {
    to_gaussian_int(z).map(|g| int_to_exact(&g))
}

fn int_to_exact(g: &GaussianInt) -> ExactComplex {
    Complex::new(
        BigRational::from_integer(g.re.clone()),
        BigRational::from_integer(g.im.clone()),
    )
}

fn gi_is_zero(z: &GaussianInt) -> bool {
    z.re.is_zero() && z.im.is_zero()
}

/// Exact division in `ℤ[i]` by a fixed divisor `d`.
struct ExactDivisor {
    conj: GaussianInt,
    norm: BigInt,
    unit: bool,
}

impl ExactDivisor {
    fn new(d: &GaussianInt) -> Self {
        let norm = &d.re * &d.re + &d.im * &d.im;
        Self {
            conj: d.conj(),
            unit: norm.is_one() && d.im.is_zero() && d.re.is_one(),
            norm,
        }
    }

    /// `x / d`; `d` must divide `x`.
    fn div(&self, x: GaussianInt) -> GaussianInt {
        if self.unit {
            return x;
        }
        let num = x * &self.conj;
        debug_assert!((&num.re % &self.norm).is_zero() && (&num.im % &self.norm).is_zero());
        Complex::new(num.re / &self.norm, num.im / &self.norm)
    }
}

/// Kernel of a Gaussian-integer matrix given by its rows, normalised like
/// [`kernel_from_rref`] (a 1 in each free column).
///
/// Elimination is fraction-free Gauss-Jordan (Bareiss): every division is
/// exact, entries stay in `ℤ[i]`, and all pivots end up equal to the last
/// one, `d`. Rationals appear only in the final division by `d`.
pub(crate) fn gaussian_int_kernel(mut rows: Vec<Vec<GaussianInt>>, cols: usize) -> Vec<ExactVector> {
    rows.retain(|r| !r.iter().all(gi_is_zero));
    let mut prev: GaussianInt = Complex::new(BigInt::one(), BigInt::zero());
    let mut divisor = ExactDivisor::new(&prev);
    let mut pivots = Vec::new();
    for c in 0..cols {
        let r = pivots.len();
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !gi_is_zero(&rows[i][c])) else {
            continue;
        };
        rows.swap(r, p);
        let pivot_row = std::mem::take(&mut rows[r]);
        let pivot = pivot_row[c].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let a = std::mem::replace(&mut row[c], Complex::new(BigInt::zero(), BigInt::zero()));
            for j in 0..cols {
                if j == c {
                    continue;
                }
                let a_term = !gi_is_zero(&a) && !gi_is_zero(&pivot_row[j]);
                if !a_term && gi_is_zero(&row[j]) {
                    continue;
                }
                let v = if a_term {
                    &pivot * &row[j] - &a * &pivot_row[j]
                } else {
                    &pivot * &row[j]
                };
                row[j] = divisor.div(v);
            }
        }
        rows[r] = pivot_row;
        // Rows that vanished carry no further information.
        let mut keep = r + 1;
        for i in r + 1..rows.len() {
            if !rows[i].iter().all(gi_is_zero) {
                rows.swap(keep, i);
                keep += 1;
            }
        }
        rows.truncate(keep);
        pivots.push(c);
        divisor = ExactDivisor::new(&pivot);
        prev = pivot;
    }
    let d = int_to_exact(&prev);
    let mut is_pivot = vec![false; cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let zero = ExactComplex::new(BigRational::zero(), BigRational::zero());
    (0..cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut x = vec![zero.clone(); cols];
            x[f] = <ExactComplex as EliminationField>::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = -int_to_exact(&rows[r][f]) / &d;
            }
            x
        })
        .collect()
}

pub fn to_scalar(z: &ExactComplex) -> Scalar {
    Scalar::new(
        z.re.to_f64().unwrap_or(f64::NAN),
        z.im.to_f64().unwrap_or(f64::NAN),
    )
}

/// Field operations needed by [`row_reduce`].
pub(crate) trait EliminationField: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_exact_zero(&self) -> bool;
    /// Whether the value is too small to pivot on.
    fn negligible(&self, threshold: f64) -> bool;
    /// Pivot preference; larger is better.
    fn weight(&self) -> f64;
    fn sub_mul(&self, factor: &Self, x: &Self) -> Self;
    fn div(&self, d: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl EliminationField for Scalar {
    fn zero() -> Self {
        Scalar::new(0.0, 0.0)
    }
    fn one() -> Self {
        Scalar::new(1.0, 0.0)
    }
    fn is_exact_zero(&self) -> bool {
        *self == Scalar::new(0.0, 0.0)
    }
    fn negligible(&self, threshold: f64) -> bool {
        self.norm() <= threshold
    }
    fn weight(&self) -> f64 {
        self.norm()
    }
    fn sub_mul(&self, factor: &Self, x: &Self) -> Self {
        self - factor * x
    }
    fn div(&self, d: &Self) -> Self {
        self / d
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl EliminationField for ExactComplex {
    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }
    fn is_exact_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn negligible(&self, _threshold: f64) -> bool {
        self.is_exact_zero()
    }
    fn weight(&self) -> f64 {
        // First nonzero wins; magnitude is irrelevant in exact arithmetic.
        if self.is_exact_zero() {
            0.0
        } else {
            1.0
        }
    }
    fn sub_mul(&self, factor: &Self, x: &Self) -> Self {
        self - factor * x
    }
    fn div(&self, d: &Self) -> Self {
        self / d
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// Reduces `rows` (each of length `cols`) to reduced row echelon form in
/// place and returns the pivot columns. Candidate pivots with
/// `negligible(threshold)` are treated as zero.
pub(crate) fn row_reduce<F: EliminationField>(
    rows: &mut [Vec<F>],
    cols: usize,
    threshold: f64,
) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in rows.iter().enumerate().skip(r) {
            if row[c].negligible(threshold) {
                continue;
            }
            let w = row[c].weight();
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((i, w));
            }
        }
        let Some((p, _)) = best else {
            for row in rows.iter_mut().skip(r) {
                row[c] = F::zero();
            }
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r][c].clone();
        for x in rows[r].iter_mut().skip(c) {
            *x = x.div(&pivot);
        }
        rows[r][c] = F::one();
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_exact_zero() {
                continue;
            }
            let factor = row[c].clone();
            for j in c..cols {
                if !pivot_row[j].is_exact_zero() {
                    row[j] = row[j].sub_mul(&factor, &pivot_row[j]);
                }
            }
            row[c] = F::zero();
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Null-space basis read off a reduced row echelon form: one vector per
/// free column, with a 1 in that column.
pub(crate) fn kernel_from_rref<F: EliminationField>(
    rref: &[Vec<F>],
    pivots: &[usize],
    cols: usize,
) -> Vec<Vec<F>> {
    let mut is_pivot = vec![false; cols];
    for &p in pivots {
        is_pivot[p] = true;
    }
    (0..cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut x = vec![F::zero(); cols];
            x[f] = F::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = rref[r][f].neg();
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(re: i64, im: i64) -> ExactComplex {
        Complex::new(
            BigRational::from_integer(re.into()),
            BigRational::from_integer(im.into()),
        )
    }

    #[test]
    fn converts_only_gaussian_integers() {
        assert_eq!(to_exact(Scalar::new(2.0, -3.0)), Some(q(2, -3)));
        assert_eq!(to_exact(Scalar::new(0.5, 0.0)), None);
        assert_eq!(to_exact(Scalar::new(1e300, 0.0)), None);
        assert_eq!(to_scalar(&q(-4, 7)), Scalar::new(-4.0, 7.0));
    }

    #[test]
    fn exact_kernel_of_rank_one() {
        // [[1, i], [-i, 1]] has kernel spanned by (-i, 1).
        let mut rows = vec![vec![q(1, 0), q(0, 1)], vec![q(0, -1), q(1, 0)]];
        let pivots = row_reduce(&mut rows, 2, 0.0);
        assert_eq!(pivots, vec![0]);
        let ker = kernel_from_rref(&rows, &pivots, 2);
        assert_eq!(ker, vec![vec![q(0, -1), q(1, 0)]]);
    }

    #[test]
    fn bareiss_matches_gauss_jordan() {
        let ints = [[2i64, 4, -2, 0], [1, 2, 0, 3], [3, 6, -2, 3], [0, 0, 1, 1]];
        let gi: Vec<Vec<GaussianInt>> = ints
            .iter()
            .map(|r| r.iter().map(|&x| Complex::new(BigInt::from(x), BigInt::from(-x))).collect())
            .collect();
        let mut rat: Vec<ExactVector> = gi.iter().map(|r| r.iter().map(int_to_exact).collect()).collect();
        let pivots = row_reduce(&mut rat, 4, 0.0);
        assert_eq!(gaussian_int_kernel(gi, 4), kernel_from_rref(&rat, &pivots, 4));
    }

    #[test]
    fn floating_threshold_drops_tiny_pivots() {
        let mut rows = vec![vec![Scalar::new(1e-12, 0.0), Scalar::new(0.0, 0.0)]];
        let pivots = row_reduce(&mut rows, 2, 1e-9);
        assert!(pivots.is_empty());
    }
}
