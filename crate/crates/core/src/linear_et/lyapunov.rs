use nalgebra::DMatrix;

use super::LinearEtError;

/// Real parts at or above this make a matrix non-Hurwitz.
pub const HURWITZ_TOL: f64 = -1e-10;

/// Largest real part over the eigenvalues of `m`.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn check_hurwitz(what: &'static str, m: &DMatrix<f64>) -> Result<(), LinearEtError> {
    let max_real = spectral_abscissa(m);
    if max_real >= HURWITZ_TOL || !max_real.is_finite() {
        return Err(LinearEtError::NotHurwitz { what, max_real });
    }
    Ok(())
}

/// Symmetric (to a relative 1e-10) and positive definite.
pub fn is_spd(m: &DMatrix<f64>) -> bool {
    if !m.is_square() || m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * m.amax().max(1.0) {
        return false;
    }
    m.clone().cholesky().is_some()
}

pub fn check_spd(what: &'static str, m: &DMatrix<f64>) -> Result<(), LinearEtError> {
    if is_spd(m) {
        Ok(())
    } else {
        Err(LinearEtError::NotSpd(what))
    }
}

/// Solves `Acl^T P + P Acl = -Q` for symmetric positive definite `P`.
///
/// Uses the vectorized form `(I (x) Acl^T + Acl^T (x) I) vec(P) = -vec(Q)`,
/// which is fine for the small systems handled here.
pub fn solve_lyapunov(acl: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, LinearEtError> {
    let n = acl.nrows();
    if acl.ncols() != n {
        return Err(LinearEtError::Dimension { what: "Acl", expected: (n, n), found: (n, acl.ncols()) });
    }
    if q.shape() != (n, n) {
        return Err(LinearEtError::Dimension { what: "Q", expected: (n, n), found: q.shape() });
    }
    check_hurwitz("Acl", acl)?;
    check_spd("Q", q)?;

    let id = DMatrix::<f64>::identity(n, n);
    let at = acl.transpose();
    let kron = id.kronecker(&at) + at.kronecker(&id);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let vec_p = kron.lu().solve(&rhs).ok_or(LinearEtError::Singular("Lyapunov operator"))?;
    let p = DMatrix::from_column_slice(n, n, vec_p.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    check_spd("P", &p)?;
    Ok(p)
}

/// Frobenius norm of `Acl^T P + P Acl + Q`.
pub fn lyapunov_residual(acl: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (acl.transpose() * p + p * acl + q).norm()
}
