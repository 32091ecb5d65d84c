//! The phase-space point `lambda = (Omega, alpha, alpha+, n, m, m+)` of the
//! general Gaussian operator basis, covariance assembly, trace and moment
//! extraction, physicality diagnostics, and weighted ensembles.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    self, cr, dagger_symmetry_defect, hermitian_eigenvalues, CMatrix, CVector, LinalgError,
};

#[derive(Debug, Error)]
pub enum StateError {
    #[error("field {field} has {got} modes, expected {expected}")]
    ModeMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field} must be symmetric: relative asymmetry {asymmetry:.3e} exceeds 1e-10")]
    AsymmetricCorrelation { field: &'static str, asymmetry: f64 },
    #[error("entries must be finite")]
    NonFinite,
    #[error("ensemble must contain at least one member")]
    EmptyEnsemble,
    #[error("ensemble members must share the mode count")]
    MixedModes,
    #[error("total ensemble weight is zero; normalized averages are undefined")]
    ZeroTotalWeight,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

const SYMMETRY_TOL: f64 = 1e-10;

/// A single Gaussian kernel `Lambda(Omega, alpha, alpha+, n, m, m+)`.
///
/// `m` and `m+` are stored as full symmetric `M x M` matrices; together with
/// the displacements and the `M x M` number correlation this gives
/// `p = M(2 + 3M)` stored complex parameters besides the weight.
///
/// The parameters are deliberately not constrained to Hermitian
/// (`alpha+ = conj(alpha)`, etc.): non-Hermitian kernels are legitimate basis
/// members. Use [`GaussianParams::check_physical`] to test whether a kernel
/// is itself a physical density matrix.
#[derive(Debug, Clone)]
pub struct GaussianParams {
    omega: Complex64,
    alpha: CVector,
    alpha_plus: CVector,
    n: CMatrix,
    m: CMatrix,
    m_plus: CMatrix,
}

fn symmetrize(
    x: &CMatrix,
    field: &'static str,
) -> Result<CMatrix, StateError> {
    let asym = (x - x.transpose()).norm() / x.norm().max(1.0);
    if asym > SYMMETRY_TOL {
        return Err(StateError::AsymmetricCorrelation {
            field,
            asymmetry: asym,
        });
    }
    Ok((x + x.transpose()) * cr(0.5))
}

impl GaussianParams {
    pub fn new(
        omega: Complex64,
        alpha: CVector,
        alpha_plus: CVector,
        n: CMatrix,
        m: CMatrix,
        m_plus: CMatrix,
    ) -> Result<Self, StateError> {
        let modes = alpha.len();
        if alpha_plus.len() != modes {
            return Err(StateError::ModeMismatch {
                field: "alpha_plus",
                expected: modes,
                got: alpha_plus.len(),
            });
        }
        for (field, mat) in [("n", &n), ("m", &m), ("m_plus", &m_plus)] {
            if mat.nrows() != modes || mat.ncols() != modes {
                return Err(StateError::ModeMismatch {
                    field,
                    expected: modes,
                    got: mat.nrows().max(mat.ncols()),
                });
            }
        }
        let finite = omega.re.is_finite()
            && omega.im.is_finite()
            && alpha.iter().chain(alpha_plus.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
            && n.iter()
                .chain(m.iter())
                .chain(m_plus.iter())
                .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(StateError::NonFinite);
        }
        let m = symmetrize(&m, "m")?;
        let m_plus = symmetrize(&m_plus, "m_plus")?;
        Ok(Self {
            omega,
            alpha,
            alpha_plus,
            n,
            m,
            m_plus,
        })
    }

    pub fn modes(&self) -> usize {
        self.alpha.len()
    }

    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    pub fn alpha(&self) -> &CVector {
        &self.alpha
    }

    pub fn alpha_plus(&self) -> &CVector {
        &self.alpha_plus
    }

    pub fn n(&self) -> &CMatrix {
        &self.n
    }

    pub fn m(&self) -> &CMatrix {
        &self.m
    }

    pub fn m_plus(&self) -> &CMatrix {
        &self.m_plus
    }

    pub fn with_omega(mut self, omega: Complex64) -> Self {
        self.omega = omega;
        self
    }

    /// Number of stored complex parameters besides the weight,
    /// `p = M(2 + 3M)`.
    pub fn parameter_count(&self) -> usize {
        let m = self.modes();
        m * (2 + 3 * m)
    }

    /// The extended displacement `(alpha, alpha+)` as a `2M` column.
    pub fn stacked_displacement(&self) -> CVector {
        let m = self.modes();
        let mut out = CVector::zeros(2 * m);
        out.rows_mut(0, m).copy_from(&self.alpha);
        out.rows_mut(m, m).copy_from(&self.alpha_plus);
        out
    }

    /// The generalized covariance `sigma = [[I + n, m], [m+, I + n^T]]`.
    pub fn covariance(&self) -> Covariance {
        let m = self.modes();
        let eye = CMatrix::identity(m, m);
        let mut sigma = CMatrix::zeros(2 * m, 2 * m);
        sigma.view_mut((0, 0), (m, m)).copy_from(&(&eye + &self.n));
        sigma.view_mut((0, m), (m, m)).copy_from(&self.m);
        sigma.view_mut((m, 0), (m, m)).copy_from(&self.m_plus);
        sigma
            .view_mut((m, m), (m, m))
            .copy_from(&(&eye + self.n.transpose()));
        Covariance { sigma }
    }

    /// Rebuilds the correlation blocks from an evolved covariance, keeping
    /// the weight and replacing the displacements.
    pub fn from_covariance(
        omega: Complex64,
        stacked_alpha: &CVector,
        cov: &Covariance,
    ) -> Result<Self, StateError> {
        let m = cov.modes();
        if stacked_alpha.len() != 2 * m {
            return Err(StateError::ModeMismatch {
                field: "stacked_alpha",
                expected: 2 * m,
                got: stacked_alpha.len(),
            });
        }
        let (n, mm, m_plus) = cov.correlations();
        Self::new(
            omega,
            stacked_alpha.rows(0, m).into_owned(),
            stacked_alpha.rows(m, m).into_owned(),
            n,
            mm,
            m_plus,
        )
    }

    /// Kernel trace `Tr Lambda = Omega`, together with the Appendix-style
    /// validity flag: the Gaussian integral behind the trace converges when
    /// every eigenvalue of `sigma` has positive real part. An invalid flag
    /// marks analytic continuation, not a hard error.
    pub fn trace(&self) -> TraceResult {
        let sigma = self.covariance();
        let valid = match linalg::eigenvalues(sigma.matrix()) {
            Ok(eigs) => eigs.iter().all(|l| l.re > 0.0),
            Err(_) => false,
        };
        TraceResult {
            value: self.omega,
            integral_valid: valid,
        }
    }

    /// First-order kernel moments `<a_i> = alpha_i`, `<a_i^dag> = alpha_i^+`.
    pub fn first_moments(&self) -> FirstMoments {
        FirstMoments {
            a: self.alpha.clone(),
            adag: self.alpha_plus.clone(),
        }
    }

    /// Second-order kernel moments,
    /// `<a_i a_j> = alpha_i alpha_j + m_ij`,
    /// `<:a_i a_j^dag:> = alpha_i alpha_j^+ + n_ij`,
    /// `<a_i^dag a_j^dag> = alpha_i^+ alpha_j^+ + m_ij^+`.
    pub fn second_moments(&self) -> SecondMoments {
        let m = self.modes();
        let mut aa = self.m.clone();
        let mut normal = self.n.clone();
        let mut adag_adag = self.m_plus.clone();
        for i in 0..m {
            for j in 0..m {
                aa[(i, j)] += self.alpha[i] * self.alpha[j];
                normal[(i, j)] += self.alpha[i] * self.alpha_plus[j];
                adag_adag[(i, j)] += self.alpha_plus[i] * self.alpha_plus[j];
            }
        }
        SecondMoments {
            aa,
            normal_a_adag: normal,
            adag_adag,
        }
    }

    /// Diagnostic report of the Hermiticity and positivity conditions a
    /// kernel must satisfy to be a physical density matrix.
    pub fn check_physical(&self) -> PhysicalityReport {
        const TOL: f64 = 1e-10;
        let m = self.modes();
        let displacements_conjugate =
            (&self.alpha_plus - self.alpha.conjugate()).norm() <= TOL * self.alpha.norm().max(1.0);
        let n_hermitian =
            (&self.n - self.n.adjoint()).norm() <= TOL * self.n.norm().max(1.0);
        let m_conjugate_pair =
            (&self.m_plus - self.m.adjoint()).norm() <= TOL * self.m.norm().max(1.0);

        let n_nonnegative = match hermitian_eigenvalues(&self.n) {
            Ok(eigs) => eigs.iter().all(|l| *l >= -TOL),
            Err(_) => false,
        };

        // the squeezing bounds are stated for diagonal n; apply them only
        // when n is numerically diagonal
        let off_diag_norm: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.n[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        let n_diagonal = off_diag_norm <= TOL * self.n.norm().max(1.0);
        let (number_bounds, pair_bounds) = if n_diagonal && n_hermitian {
            let mut bounds_ok = true;
            let mut pair_ok = true;
            for k in 0..m {
                let nk = self.n[(k, k)].re;
                let mkk = self.m[(k, k)].norm();
                if nk < (mkk * mkk + 0.25).sqrt() - 0.5 - TOL {
                    bounds_ok = false;
                }
                for j in 0..m {
                    let nj = self.n[(j, j)].re;
                    if nk * (1.0 + nj) < self.m[(k, j)].norm_sqr() - TOL {
                        pair_ok = false;
                    }
                }
            }
            (Some(bounds_ok), Some(pair_ok))
        } else {
            (None, None)
        };

        PhysicalityReport {
            displacements_conjugate,
            n_hermitian,
            m_conjugate_pair,
            n_nonnegative,
            number_bounds,
            pair_bounds,
        }
    }
}

/// Result of [`GaussianParams::trace`].
#[derive(Debug, Clone, Copy)]
pub struct TraceResult {
    pub value: Complex64,
    /// True when all eigenvalues of `sigma` have positive real part, the
    /// convergence condition of the underlying Gaussian integral.
    pub integral_valid: bool,
}

/// First-order moments, one entry per mode.
#[derive(Debug, Clone)]
pub struct FirstMoments {
    pub a: CVector,
    pub adag: CVector,
}

/// Second-order moment matrices, `M x M` each.
#[derive(Debug, Clone)]
pub struct SecondMoments {
    /// `<a_i a_j>`
    pub aa: CMatrix,
    /// `<:a_i a_j^dag:>`
    pub normal_a_adag: CMatrix,
    /// `<a_i^dag a_j^dag>`
    pub adag_adag: CMatrix,
}

/// Outcome of [`GaussianParams::check_physical`]. The squeezing bounds are
/// only evaluated for diagonal `n` (`None` otherwise).
#[derive(Debug, Clone)]
pub struct PhysicalityReport {
    pub displacements_conjugate: bool,
    pub n_hermitian: bool,
    pub m_conjugate_pair: bool,
    pub n_nonnegative: bool,
    /// Per-mode bound `n_k >= sqrt(|m_kk|^2 + 1/4) - 1/2`.
    pub number_bounds: Option<bool>,
    /// Pairwise bound `n_k (1 + n_j) >= |m_kj|^2`.
    pub pair_bounds: Option<bool>,
}

impl PhysicalityReport {
    pub fn is_physical(&self) -> bool {
        self.displacements_conjugate
            && self.n_hermitian
            && self.m_conjugate_pair
            && self.n_nonnegative
            && self.number_bounds.unwrap_or(true)
            && self.pair_bounds.unwrap_or(true)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.displacements_conjugate {
            out.push("alpha_plus != conj(alpha)");
        }
        if !self.n_hermitian {
            out.push("n not Hermitian");
        }
        if !self.m_conjugate_pair {
            out.push("m_plus != adjoint(m)");
        }
        if !self.n_nonnegative {
            out.push("n has negative eigenvalues");
        }
        if self.number_bounds == Some(false) {
            out.push("mode occupation below squeezing bound");
        }
        if self.pair_bounds == Some(false) {
            out.push("pairwise occupation/squeezing bound violated");
        }
        out
    }
}

/// The `2M x 2M` generalized covariance.
#[derive(Debug, Clone)]
pub struct Covariance {
    sigma: CMatrix,
}

impl Covariance {
    pub fn from_matrix(sigma: CMatrix) -> Result<Self, StateError> {
        if sigma.nrows() != sigma.ncols() || sigma.nrows() % 2 != 0 {
            return Err(StateError::Linalg(LinalgError::BlockDimensionMismatch));
        }
        Ok(Self { sigma })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.sigma
    }

    pub fn into_matrix(self) -> CMatrix {
        self.sigma
    }

    pub fn modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    /// The normally ordered covariance `sigma^N = sigma - I`.
    pub fn normally_ordered(&self) -> CMatrix {
        &self.sigma - CMatrix::identity(self.sigma.nrows(), self.sigma.ncols())
    }

    /// `|sigma - sigma^+|`, the generalized Hermitian symmetry defect.
    pub fn symmetry_defect(&self) -> f64 {
        dagger_symmetry_defect(&self.sigma).expect("covariance is square and even-dimensional")
    }

    /// Extracts `(n, m, m+)`; `n` is averaged between the two diagonal
    /// blocks and `m`, `m+` are symmetrized, so the result satisfies the
    /// block symmetries exactly.
    pub fn correlations(&self) -> (CMatrix, CMatrix, CMatrix) {
        let m = self.modes();
        let eye = CMatrix::identity(m, m);
        let n11 = self.sigma.view((0, 0), (m, m)).into_owned() - &eye;
        let n22 = self.sigma.view((m, m), (m, m)).into_owned() - &eye;
        let n = (&n11 + n22.transpose()) * cr(0.5);
        let b = self.sigma.view((0, m), (m, m)).into_owned();
        let c = self.sigma.view((m, 0), (m, m)).into_owned();
        let mm = (&b + b.transpose()) * cr(0.5);
        let m_plus = (&c + c.transpose()) * cr(0.5);
        (n, mm, m_plus)
    }

    pub fn determinant(&self) -> Result<Complex64, LinalgError> {
        linalg::det(&self.sigma)
    }
}

/// A finite weighted set of Gaussian kernels: the discrete form of a
/// phase-space distribution `rho = sum_j Omega_j Lambda(lambda_j)`.
#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    members: Vec<GaussianParams>,
}

impl WeightedEnsemble {
    pub fn new(members: Vec<GaussianParams>) -> Result<Self, StateError> {
        if members.is_empty() {
            return Err(StateError::EmptyEnsemble);
        }
        let modes = members[0].modes();
        if members.iter().any(|g| g.modes() != modes) {
            return Err(StateError::MixedModes);
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[GaussianParams] {
        &self.members
    }

    pub fn modes(&self) -> usize {
        self.members[0].modes()
    }

    pub fn total_weight(&self) -> Complex64 {
        self.members.iter().map(|g| g.omega()).sum()
    }

    fn checked_weight(&self) -> Result<Complex64, StateError> {
        let total = self.total_weight();
        let scale: f64 = self.members.iter().map(|g| g.omega().norm()).sum();
        if total.norm() <= 1e-14 * scale.max(1.0) {
            return Err(StateError::ZeroTotalWeight);
        }
        Ok(total)
    }

    /// Weight-averaged first moments `sum_j Omega_j <.>_j / sum_j Omega_j`.
    pub fn first_moments(&self) -> Result<FirstMoments, StateError> {
        let total = self.checked_weight()?;
        let m = self.modes();
        let mut a = CVector::zeros(m);
        let mut adag = CVector::zeros(m);
        for g in &self.members {
            let f = g.first_moments();
            a += f.a * g.omega();
            adag += f.adag * g.omega();
        }
        Ok(FirstMoments {
            a: a / total,
            adag: adag / total,
        })
    }

    /// Weight-averaged second moments.
    pub fn second_moments(&self) -> Result<SecondMoments, StateError> {
        let total = self.checked_weight()?;
        let m = self.modes();
        let mut aa = CMatrix::zeros(m, m);
        let mut normal = CMatrix::zeros(m, m);
        let mut adag_adag = CMatrix::zeros(m, m);
        for g in &self.members {
            let s = g.second_moments();
            aa += s.aa * g.omega();
            normal += s.normal_a_adag * g.omega();
            adag_adag += s.adag_adag * g.omega();
        }
        Ok(SecondMoments {
            aa: aa / total,
            normal_a_adag: normal / total,
            adag_adag: adag_adag / total,
        })
    }
}
