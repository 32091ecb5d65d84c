//! Dense complex-matrix primitives shared by the phase-space and oracle
//! modules: the generalized block dagger, matrix exponentials, multi-mode
//! hyperbolic functions, Sylvester solves, determinants and inverses.
//!
//! All matrices are `2M x 2M` or `M x M` for small mode counts `M`, so the
//! solvers favour robustness over asymptotic cost. Determinants, inverses,
//! eigenvalues and the matrix exponential are backed by `nalgebra`; the
//! hyperbolic pair is summed directly as a power series.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector used throughout the crate.
pub type CVector = DVector<Complex64>;

/// Shorthand for a real number lifted to a complex scalar.
#[inline]
pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("blocks must share a common square dimension")]
    BlockDimensionMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix must be symmetric: relative asymmetry {asymmetry:.3e} exceeds {tol:.3e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },
    #[error(
        "matrix is singular to working precision (smallest singular value {sigma_min:.3e}, \
         condition estimate {cond:.3e})"
    )]
    Singular { sigma_min: f64, cond: f64 },
    #[error("Sylvester pencil is singular and the right-hand side is inconsistent (residual {residual:.3e})")]
    SingularPencil { residual: f64 },
    #[error("eigenvalue iteration failed to converge")]
    EigenFailed,
}

/// A `2M x 2M` matrix held as four `M x M` blocks `[[a, b], [c, d]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix2x2 {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

impl BlockMatrix2x2 {
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix, d: CMatrix) -> Result<Self, LinalgError> {
        let m = a.nrows();
        for blk in [&a, &b, &c, &d] {
            if blk.nrows() != m || blk.ncols() != m {
                return Err(LinalgError::BlockDimensionMismatch);
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Splits a full `2M x 2M` matrix into its four blocks.
    pub fn from_full(x: &CMatrix) -> Result<Self, LinalgError> {
        if x.nrows() != x.ncols() {
            return Err(LinalgError::NotSquare {
                rows: x.nrows(),
                cols: x.ncols(),
            });
        }
        if x.nrows() % 2 != 0 {
            return Err(LinalgError::BlockDimensionMismatch);
        }
        let m = x.nrows() / 2;
        Ok(Self {
            a: x.view((0, 0), (m, m)).into_owned(),
            b: x.view((0, m), (m, m)).into_owned(),
            c: x.view((m, 0), (m, m)).into_owned(),
            d: x.view((m, m), (m, m)).into_owned(),
        })
    }

    pub fn to_full(&self) -> CMatrix {
        let m = self.a.nrows();
        let mut full = CMatrix::zeros(2 * m, 2 * m);
        full.view_mut((0, 0), (m, m)).copy_from(&self.a);
        full.view_mut((0, m), (m, m)).copy_from(&self.b);
        full.view_mut((m, 0), (m, m)).copy_from(&self.c);
        full.view_mut((m, m), (m, m)).copy_from(&self.d);
        full
    }

    pub fn block_dim(&self) -> usize {
        self.a.nrows()
    }
}

/// The generalized dagger `[[a, b], [c, d]]^+ = [[d, c], [b, a]]^T`,
/// i.e. `[[d^T, b^T], [c^T, a^T]]` on blocks. On covariance-shaped matrices
/// it is the phase-space image of Hermitian conjugation of the underlying
/// operator, and it is an involution.
pub fn generalized_dagger(x: &BlockMatrix2x2) -> BlockMatrix2x2 {
    BlockMatrix2x2 {
        a: x.d.transpose(),
        b: x.b.transpose(),
        c: x.c.transpose(),
        d: x.a.transpose(),
    }
}

/// Generalized dagger applied to a full `2M x 2M` matrix.
pub fn generalized_dagger_full(x: &CMatrix) -> Result<CMatrix, LinalgError> {
    Ok(generalized_dagger(&BlockMatrix2x2::from_full(x)?).to_full())
}

/// Defect `|X - X^+|` of the generalized Hermitian symmetry, Frobenius norm.
pub fn dagger_symmetry_defect(x: &CMatrix) -> Result<f64, LinalgError> {
    Ok((x - generalized_dagger_full(x)?).norm())
}

fn check_square(x: &CMatrix) -> Result<(), LinalgError> {
    if x.nrows() != x.ncols() {
        return Err(LinalgError::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    Ok(())
}

fn check_finite(x: &CMatrix) -> Result<(), LinalgError> {
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

/// Relative symmetry check `|X - X^T| <= tol * max(1, |X|)`.
pub fn check_symmetric(x: &CMatrix, tol: f64) -> Result<(), LinalgError> {
    check_square(x)?;
    let asym = (x - x.transpose()).norm() / x.norm().max(1.0);
    if asym > tol {
        return Err(LinalgError::NotSymmetric { asymmetry: asym, tol });
    }
    Ok(())
}

/// Matrix exponential by scaling-and-squaring with a fixed-order rational
/// (Pade) approximation.
pub fn matrix_exp(x: &CMatrix) -> Result<CMatrix, LinalgError> {
    check_square(x)?;
    check_finite(x)?;
    Ok(x.exp())
}

/// Multi-mode hyperbolic functions of a symmetric squeeze matrix:
/// `mu = sum_k (xi xi*)^k / (2k)!` and `nu = sum_k (xi xi*)^k xi / (2k+1)!`.
///
/// The pair satisfies `mu mu - nu nu* = I` and `nu` is symmetric.
pub fn matrix_cosh_sinh(xi: &CMatrix) -> Result<(CMatrix, CMatrix), LinalgError> {
    matrix_cosh_sinh_pair(xi, &xi.conjugate())
}

/// Analytic continuation of [`matrix_cosh_sinh`] with `xi*` replaced by an
/// independent symmetric matrix `xi_plus`:
/// `mu = sum_k (xi xi+)^k / (2k)!`, `nu = sum_k (xi xi+)^k xi / (2k+1)!`.
///
/// The Hermitian case is `xi_plus = conj(xi)`. The continued counterparts of
/// the conjugated functions follow by swapping the arguments: `nu+` is the
/// second element of `matrix_cosh_sinh_pair(xi_plus, xi)`, and the
/// continuation of `mu*` is `mu^T`.
pub fn matrix_cosh_sinh_pair(
    xi: &CMatrix,
    xi_plus: &CMatrix,
) -> Result<(CMatrix, CMatrix), LinalgError> {
    check_symmetric(xi, 1e-10)?;
    check_symmetric(xi_plus, 1e-10)?;
    if xi.nrows() != xi_plus.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: xi.nrows(),
            got: xi_plus.nrows(),
        });
    }
    check_finite(xi)?;
    check_finite(xi_plus)?;
    let m = xi.nrows();
    let x = xi * xi_plus;
    let mut mu = CMatrix::identity(m, m);
    // nu = s * xi with s = sum_k X^k / (2k+1)!
    let mut s = CMatrix::identity(m, m);
    let mut term_mu = CMatrix::identity(m, m);
    let mut term_s = CMatrix::identity(m, m);
    const STOP: f64 = 1e-16;
    const MAX_TERMS: usize = 300;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        term_mu = (&term_mu * &x) / cr((2.0 * kf - 1.0) * (2.0 * kf));
        term_s = (&term_s * &x) / cr((2.0 * kf) * (2.0 * kf + 1.0));
        mu += &term_mu;
        s += &term_s;
        let scale = mu.norm().max(1.0);
        if term_mu.norm() < STOP * scale && term_s.norm() < STOP * scale {
            let nu = &s * xi;
            // the series is symmetric term by term; restore exact symmetry
            // lost to floating-point products
            let nu = (&nu + nu.transpose()) * cr(0.5);
            return Ok((mu, nu));
        }
    }
    Err(LinalgError::NonFinite)
}

/// Solves `E S + S Edag = RHS` for `S`.
///
/// The solve goes through the Kronecker form
/// `(I (x) E + Edag^T (x) I) vec(S) = vec(RHS)` and an SVD: for a regular
/// pencil this is the unique solution, and when the pencil is singular but
/// the system is consistent it returns the minimum-norm particular solution.
/// An inconsistent singular pencil (no eigenvalue pairing `l_i + m_j = 0`
/// admits a solution) is reported as [`LinalgError::SingularPencil`].
pub fn sylvester_solve(e: &CMatrix, edag: &CMatrix, rhs: &CMatrix) -> Result<CMatrix, LinalgError> {
    check_square(e)?;
    check_square(edag)?;
    check_square(rhs)?;
    let n = e.nrows();
    if edag.nrows() != n || rhs.nrows() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: edag.nrows().max(rhs.nrows()),
        });
    }
    check_finite(e)?;
    check_finite(edag)?;
    check_finite(rhs)?;
    let eye = CMatrix::identity(n, n);
    let k = eye.kronecker(e) + edag.transpose().kronecker(&eye);
    let b = CMatrix::from_column_slice(n * n, 1, rhs.as_slice());
    let svd = k.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = 1e-12 * smax.max(1e-300);
    let sol = svd
        .solve(&b, cutoff)
        .map_err(|_| LinalgError::EigenFailed)?;
    let s = CMatrix::from_column_slice(n, n, sol.as_slice());
    let residual = (e * &s + &s * edag - rhs).norm();
    let tol = 1e-10 * (e.norm() + edag.norm() + rhs.norm()).max(1.0) * s.norm().max(1.0);
    if residual > tol {
        return Err(LinalgError::SingularPencil { residual });
    }
    Ok(s)
}

/// Determinant via LU factorization.
pub fn det(x: &CMatrix) -> Result<Complex64, LinalgError> {
    check_square(x)?;
    check_finite(x)?;
    Ok(x.clone().lu().determinant())
}

/// Matrix inverse with a hybrid absolute/relative degeneracy threshold on
/// the smallest singular value; the error carries a condition estimate.
pub fn inverse(x: &CMatrix) -> Result<CMatrix, LinalgError> {
    check_square(x)?;
    check_finite(x)?;
    let svals = x.clone().svd(false, false).singular_values;
    let smax = svals.iter().cloned().fold(0.0_f64, f64::max);
    let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 1e-13 + 1e-10 * smax {
        return Err(LinalgError::Singular {
            sigma_min: smin,
            cond: smax / smin.max(1e-300),
        });
    }
    let inv = x
        .clone()
        .try_inverse()
        .ok_or(LinalgError::Singular {
            sigma_min: smin,
            cond: smax / smin.max(1e-300),
        })?;
    let residual = (x * &inv - CMatrix::identity(x.nrows(), x.ncols())).norm();
    if residual > 1e-10 * (x.nrows() as f64).sqrt().max(1.0) {
        return Err(LinalgError::Singular {
            sigma_min: smin,
            cond: smax / smin.max(1e-300),
        });
    }
    Ok(inv)
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues(x: &CMatrix) -> Result<Vec<Complex64>, LinalgError> {
    check_square(x)?;
    check_finite(x)?;
    let n = x.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = x
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or(LinalgError::EigenFailed)?;
    let t = schur.unpack().1;
    let mut eigs: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    eigs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(eigs)
}

/// Real eigenvalues of a Hermitian matrix (the input is symmetrized as
/// `(X + X^dagger)/2` before the decomposition).
pub fn hermitian_eigenvalues(x: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    check_square(x)?;
    check_finite(x)?;
    let h = (x + x.adjoint()) * cr(0.5);
    let mut eigs: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}
