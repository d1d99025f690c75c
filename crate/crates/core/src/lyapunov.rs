//! Continuous-time Lyapunov equation `A^T P + P A = -Q`.
//!
//! Solved directly through the vectorised system
//! `(I ⊗ A^T + A^T ⊗ I) vec(P) = -vec(Q)` with an LU factorisation and one
//! round of iterative refinement. The systems here are at most 8×8, so the
//! `n^2 × n^2` Kronecker matrix stays small.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Largest real part among the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "spectral abscissa",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let eigs = a.complex_eigenvalues();
    Ok(eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> Result<bool> {
    Ok(spectral_abscissa(a)? < 0.0)
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

fn check_symmetric_pd(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidParameter {
            name: what,
            reason: "must be symmetric",
        });
    }
    let min = min_symmetric_eigenvalue(m);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            what,
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// Frobenius norm of `A^T P + P A + Q`.
pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (a.transpose() * p + p * a + q).norm()
}

/// Solve `A^T P + P A = -Q` for a Hurwitz `A` and symmetric positive definite `Q`.
///
/// The returned `P` is symmetric positive definite.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "A",
            expected: n,
            found: a.ncols(),
        });
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "Q",
            expected: n,
            found: q.nrows(),
        });
    }
    if !q.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("Q"));
    }
    check_symmetric_pd(q, "Q")?;
    let abscissa = spectral_abscissa(a)?;
    if !(abscissa < 0.0) {
        return Err(Error::NotHurwitz {
            max_real_part: abscissa,
        });
    }

    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let system = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(q.as_slice());

    let lu = system.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(Error::SingularLyapunov)?;
    let correction = lu.solve(&(&rhs - &system * &x)).ok_or(Error::SingularLyapunov)?;
    x += correction;

    let p = DMatrix::from_column_slice(n, n, x.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularLyapunov);
    }
    let min = min_symmetric_eigenvalue(&p);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            what: "P",
            min_eigenvalue: min,
        });
    }
    Ok(p)
}
