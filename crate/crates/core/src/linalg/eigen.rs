use super::{DenseMatrix, LinalgError, Result, Scalar, StateVector};

/// Smallest eigenvalue of a Hermitian PSD matrix.
///
/// Diagonal matrices return the smallest diagonal entry. Otherwise runs power
/// iteration on `cI - M` with `c = tr(M) >= λ_max`, whose dominant eigenvalue
/// is `c - λ_min`. Two deterministic starts are tried (normalized all-ones,
/// then a fixed perturbation of it) and the smaller converged estimate is
/// returned, so a start orthogonal to the target eigenspace cannot stall
/// the result.
pub fn min_eigen_psd(m: &DenseMatrix, tol: f64, max_iters: usize) -> Result<f64> {
    let scale = m.max_abs().max(1.0);
    if !m.is_hermitian(tol * scale) {
        return Err(LinalgError::NotHermitian { index: 0 });
    }
    if m.is_diagonal() {
        return Ok(m.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min));
    }
    let dim = m.dim();
    let shift = m.trace().re.max(0.0);
    let scale = scale.max(shift);

    let ones = vec![Scalar::new(1.0, 0.0); dim];
    let perturbed: Vec<Scalar> = (0..dim)
        .map(|j| {
            let t = ((j * 7919 + 13) % 101) as f64 / 101.0;
            Scalar::new(1.0 + t, 0.5 - t)
        })
        .collect();

    let mut best: Option<f64> = None;
    for start in [ones, perturbed] {
        if let Some(top) = dominant(m, shift, start, tol, scale, max_iters)? {
            let lambda = (shift - top).max(0.0);
            best = Some(best.map_or(lambda, |b: f64| b.min(lambda)));
        }
    }
    best.ok_or(LinalgError::NoConvergence { iters: max_iters })
}

/// Dominant eigenvalue of `shift·I - m` from `start`, or `None` when the
/// iterate collapses to zero or fails to converge.
fn dominant(
    m: &DenseMatrix,
    shift: f64,
    start: Vec<Scalar>,
    tol: f64,
    scale: f64,
    max_iters: usize,
) -> Result<Option<f64>> {
    let mut x = StateVector::new(start)?;
    x = x.scale(Scalar::new(1.0 / x.norm(), 0.0));
    let mut prev = f64::NAN;
    for _ in 0..max_iters {
        let mx = m.mul_vec(&x)?;
        let y: Vec<Scalar> = x
            .entries()
            .iter()
            .zip(mx.entries())
            .map(|(xi, mi)| xi * shift - mi)
            .collect();
        let mu: f64 = x
            .entries()
            .iter()
            .zip(&y)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        let resid = y
            .iter()
            .zip(x.entries())
            .map(|(yi, xi)| (yi - xi * mu).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if (mu - prev).abs() <= tol * scale && resid <= tol.sqrt() * scale {
            return Ok(Some(mu));
        }
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= tol * scale {
            return Ok(None);
        }
        prev = mu;
        x = StateVector::new(y.into_iter().map(|z| z / norm).collect())?;
    }
    Ok(None)
}
