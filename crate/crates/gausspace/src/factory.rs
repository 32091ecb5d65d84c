//! Constructors mapping the standard bosonic state families onto Gaussian
//! kernel parameters: vacuum, coherent projectors, thermal operators,
//! squeezed and squeezed-thermal states, the classical phase-space bases,
//! and number states synthesized by circle quadrature over thermal kernels.
//!
//! Every family takes its analytically continued form: conjugate parameters
//! are independent arguments (`alpha+`, `xi+`, complex `nbar`), and the
//! Hermitian case is recovered by passing actual conjugates.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    check_symmetric, cr, matrix_cosh_sinh_pair, CMatrix, CVector, LinalgError,
};
use crate::state::{GaussianParams, StateError, WeightedEnsemble};

#[derive(Debug, Error)]
pub enum FactoryError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("mode count must be at least 1")]
    ZeroModes,
    #[error("number-state quadrature needs at least 2 points, got {0}")]
    TooFewQuadraturePoints(usize),
    #[error("quadrature radius must be positive, got {0}")]
    NonpositiveRadius(f64),
    #[error("squeeze matrices must share dimensions")]
    SqueezeDimensionMismatch,
}

/// Squeeze parameters `(xi, xi+)`, both symmetric `M x M`; the Hermitian
/// (unitary-squeezing) case is `xi+ = conj(xi)`.
#[derive(Debug, Clone)]
pub struct SqueezeSpec {
    xi: CMatrix,
    xi_plus: CMatrix,
}

impl SqueezeSpec {
    pub fn new(xi: CMatrix, xi_plus: CMatrix) -> Result<Self, FactoryError> {
        check_symmetric(&xi, 1e-10)?;
        check_symmetric(&xi_plus, 1e-10)?;
        if xi.nrows() != xi_plus.nrows() {
            return Err(FactoryError::SqueezeDimensionMismatch);
        }
        Ok(Self { xi, xi_plus })
    }

    /// Unitary squeezing: `xi+ = conj(xi)`.
    pub fn hermitian(xi: CMatrix) -> Result<Self, FactoryError> {
        let xi_plus = xi.conjugate();
        Self::new(xi, xi_plus)
    }

    /// Single-mode squeezing by a real parameter `r`.
    pub fn scalar(r: f64) -> Self {
        Self {
            xi: CMatrix::from_element(1, 1, cr(r)),
            xi_plus: CMatrix::from_element(1, 1, cr(r)),
        }
    }

    pub fn modes(&self) -> usize {
        self.xi.nrows()
    }

    pub fn xi(&self) -> &CMatrix {
        &self.xi
    }

    pub fn xi_plus(&self) -> &CMatrix {
        &self.xi_plus
    }

    /// The Bogoliubov pair `(mu, nu)` from the hyperbolic series in
    /// `xi xi+`.
    pub fn mu_nu(&self) -> Result<(CMatrix, CMatrix), LinalgError> {
        matrix_cosh_sinh_pair(&self.xi, &self.xi_plus)
    }

    /// The continued conjugate `nu+`, the series with `xi` and `xi+`
    /// swapped.
    pub fn nu_plus(&self) -> Result<CMatrix, LinalgError> {
        Ok(matrix_cosh_sinh_pair(&self.xi_plus, &self.xi)?.1)
    }

    /// The `2M x 2M` Bogoliubov block matrix `[[mu, -nu], [-nu+, mu^T]]`.
    pub fn mu_block(&self) -> Result<CMatrix, LinalgError> {
        let (mu, nu) = self.mu_nu()?;
        let nu_plus = self.nu_plus()?;
        let m = self.modes();
        let mut out = CMatrix::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&mu);
        out.view_mut((0, m), (m, m)).copy_from(&(-&nu));
        out.view_mut((m, 0), (m, m)).copy_from(&(-&nu_plus));
        out.view_mut((m, m), (m, m)).copy_from(&mu.transpose());
        Ok(out)
    }

    /// The squeeze generator in block form, `[[0, xi], [xi+, 0]]`; the
    /// Bogoliubov block is its negated exponential.
    pub fn xi_block(&self) -> CMatrix {
        let m = self.modes();
        let mut out = CMatrix::zeros(2 * m, 2 * m);
        out.view_mut((0, m), (m, m)).copy_from(&self.xi);
        out.view_mut((m, 0), (m, m)).copy_from(&self.xi_plus);
        out
    }
}

/// Thermal occupation `nbar`, possibly analytically continued to complex
/// values; the physical case is Hermitian with nonnegative eigenvalues.
#[derive(Debug, Clone)]
pub struct ThermalSpec {
    nbar: CMatrix,
}

impl ThermalSpec {
    pub fn from_occupation(nbar: CMatrix) -> Result<Self, FactoryError> {
        if nbar.nrows() != nbar.ncols() {
            return Err(FactoryError::Linalg(LinalgError::NotSquare {
                rows: nbar.nrows(),
                cols: nbar.ncols(),
            }));
        }
        Ok(Self { nbar })
    }

    /// Per-mode Bose-Einstein occupations `nbar_k = 1/(e^{phi_k} - 1)` from
    /// the reduced energies `phi_k = eps_k / kT` (complex values allowed).
    pub fn from_phi(phi: &[Complex64]) -> Self {
        let diag: Vec<Complex64> = phi.iter().map(|p| bose_occupation(*p)).collect();
        Self {
            nbar: CMatrix::from_diagonal(&CVector::from_vec(diag)),
        }
    }

    pub fn modes(&self) -> usize {
        self.nbar.nrows()
    }

    pub fn nbar(&self) -> &CMatrix {
        &self.nbar
    }
}

/// `1/(e^phi - 1)` for complex `phi`.
pub fn bose_occupation(phi: Complex64) -> Complex64 {
    cr(1.0) / (phi.exp() - cr(1.0))
}

/// The vacuum kernel: all parameters zero, unit weight.
pub fn vacuum(modes: usize) -> GaussianParams {
    GaussianParams::new(
        cr(1.0),
        CVector::zeros(modes),
        CVector::zeros(modes),
        CMatrix::zeros(modes, modes),
        CMatrix::zeros(modes, modes),
        CMatrix::zeros(modes, modes),
    )
    .expect("zero parameters are always valid")
}

/// The scaled coherent projector `Omega |alpha><beta*| / <beta*|alpha>` with
/// independent bra and ket amplitudes; `beta = conj(alpha)` gives the
/// Glauber-Sudarshan projector `|alpha><alpha|`.
pub fn coherent_projector(
    omega: Complex64,
    alpha: CVector,
    beta: CVector,
) -> Result<GaussianParams, FactoryError> {
    let m = alpha.len();
    Ok(GaussianParams::new(
        omega,
        alpha,
        beta,
        CMatrix::zeros(m, m),
        CMatrix::zeros(m, m),
        CMatrix::zeros(m, m),
    )?)
}

/// The thermal kernel `(Omega, 0, 0, nbar, 0, 0)`.
pub fn thermal(omega: Complex64, spec: &ThermalSpec) -> GaussianParams {
    let m = spec.modes();
    GaussianParams::new(
        omega,
        CVector::zeros(m),
        CVector::zeros(m),
        spec.nbar.clone(),
        CMatrix::zeros(m, m),
        CMatrix::zeros(m, m),
    )
    .expect("thermal parameters are always valid")
}

/// A displaced squeezed-vacuum kernel. The correlation blocks follow from
/// the Bogoliubov pair: `n = nu nu+`, `m = -mu nu`, `m+ = -nu+ mu`.
pub fn squeezed_vacuum(
    alpha: CVector,
    alpha_plus: CVector,
    spec: &SqueezeSpec,
) -> Result<GaussianParams, FactoryError> {
    let (mu, nu) = spec.mu_nu()?;
    let nu_plus = spec.nu_plus()?;
    let n = &nu * &nu_plus;
    let m = -(&mu * &nu);
    let m_plus = -(&nu_plus * &mu);
    Ok(GaussianParams::new(cr(1.0), alpha, alpha_plus, n, m, m_plus)?)
}

/// A displaced squeezed thermal kernel:
/// `n = mu nbar mu + nu (nbar^T + I) nu+`,
/// `m = -mu (nbar + I) nu - nu nbar^T mu^T`,
/// `m+ = -mu^T nbar^T nu+ - nu+ (nbar + I) mu`.
pub fn squeezed_thermal(
    squeeze: &SqueezeSpec,
    thermal_spec: &ThermalSpec,
    alpha: CVector,
    alpha_plus: CVector,
) -> Result<GaussianParams, FactoryError> {
    if squeeze.modes() != thermal_spec.modes() {
        return Err(FactoryError::SqueezeDimensionMismatch);
    }
    let m_dim = squeeze.modes();
    let (mu, nu) = squeeze.mu_nu()?;
    let nu_plus = squeeze.nu_plus()?;
    let nbar = thermal_spec.nbar();
    let eye = CMatrix::identity(m_dim, m_dim);
    let nbar_t = nbar.transpose();

    let n = &mu * nbar * &mu + &nu * (&nbar_t + &eye) * &nu_plus;
    let m = -(&mu * (nbar + &eye) * &nu) - &nu * &nbar_t * mu.transpose();
    let m_plus = -(mu.transpose() * &nbar_t * &nu_plus) - &nu_plus * (nbar + &eye) * &mu;
    Ok(GaussianParams::new(cr(1.0), alpha, alpha_plus, n, m, m_plus)?)
}

/// The classical phase-space bases of Table-I type: coherent projectors
/// with a fixed (possibly negative) thermal offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassicalKind {
    /// Symmetric ordering, `n = -1/2`.
    Wigner,
    /// Antinormal ordering (Husimi), the singular limit `n = -1`.
    Q,
    /// Normal ordering (Glauber-Sudarshan), `n = 0`.
    P,
    /// Interpolating `s`-ordered basis, `n = (s - 1)/2`.
    SOrdered(f64),
    /// Positive-P: `n = 0` with independent bra/ket amplitudes.
    PlusP,
}

impl ClassicalKind {
    pub fn occupation(&self) -> f64 {
        match self {
            ClassicalKind::Wigner => -0.5,
            ClassicalKind::Q => -1.0,
            ClassicalKind::P | ClassicalKind::PlusP => 0.0,
            ClassicalKind::SOrdered(s) => (s - 1.0) / 2.0,
        }
    }
}

/// A classical-basis member `(1, alpha, beta, n_kind I, 0, 0)`.
pub fn classical_basis(
    kind: ClassicalKind,
    alpha: CVector,
    beta: CVector,
) -> Result<GaussianParams, FactoryError> {
    let m = alpha.len();
    let n = CMatrix::identity(m, m) * cr(kind.occupation());
    Ok(GaussianParams::new(
        cr(1.0),
        alpha,
        beta,
        n,
        CMatrix::zeros(m, m),
        CMatrix::zeros(m, m),
    )?)
}

/// Synthesizes the single-mode pure number state `|n0><n0|` as a weighted
/// ensemble of `K` complex-temperature thermal kernels on the circle
/// `phi_j = r + 2 pi i j / K`, with weights
/// `Omega_j = (1/K) (1 - e^{-phi_j})^{-1} e^{n0 phi_j}`.
///
/// The discrete quadrature aliases number states `n0 + K, n0 + 2K, ...`
/// with weights `e^{-rK}, e^{-2rK}, ...`, so the reconstruction error
/// decays as `e^{-rK}`.
pub fn number_state_ensemble(
    n0: u32,
    r: f64,
    k: usize,
) -> Result<WeightedEnsemble, FactoryError> {
    if k < 2 {
        return Err(FactoryError::TooFewQuadraturePoints(k));
    }
    if r <= 0.0 {
        return Err(FactoryError::NonpositiveRadius(r));
    }
    let mut members = Vec::with_capacity(k);
    for j in 0..k {
        let psi = 2.0 * PI * (j as f64) / (k as f64);
        let phi = Complex64::new(r, psi);
        let weight = (cr(1.0) / (cr(1.0) - (-phi).exp())) * (phi * cr(n0 as f64)).exp()
            / cr(k as f64);
        let spec = ThermalSpec::from_phi(&[phi]);
        members.push(thermal(weight, &spec));
    }
    Ok(WeightedEnsemble::new(members)?)
}
