//! General quadratic master equations: coefficient assembly from Lindblad
//! data, trace-preservation diagnostics, drift matrices and steady states,
//! and exact propagation of Gaussian kernels in real or imaginary time.
//!
//! Real-time drift: `d(alpha)/dt = A1 + E alpha`,
//! `d(sigma)/dt = 2B + E sigma + sigma E^+` with `E = 2A + C`, solved in
//! closed form as
//! `alpha(t) = e^{Et}(alpha(0) - alpha0) + alpha0`,
//! `sigma(t) = e^{Et}(sigma(0) - sigma0) e^{E^+ t} + sigma0`.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    self, check_symmetric, cr, generalized_dagger_full, matrix_exp, sylvester_solve,
    BlockMatrix2x2, CMatrix, CVector, LinalgError,
};
use crate::ode::{self, OdeError, OdeOptions};
use crate::state::{FirstMoments, GaussianParams, SecondMoments, StateError};

const SYM_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum QmeError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("{name} must satisfy {property}; defect {defect:.3e} exceeds {tol:.1e}")]
    InvalidSymmetry {
        name: &'static str,
        property: &'static str,
        defect: f64,
        tol: f64,
    },
    #[error("coefficient {name} has wrong dimension: expected {expected}, got {got}")]
    Dimension {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("state has {got} modes but the master equation expects {expected}")]
    ModeMismatch { expected: usize, got: usize },
    #[error("master equation is not trace preserving; real-time propagation is undefined")]
    NotTracePreserving,
    #[error("steady-state data unavailable (singular Sylvester pencil); use ODE propagation")]
    SteadyStateUnavailable,
    #[error("loss matrix must be Hermitian positive semidefinite (eigenvalue {0:.3e})")]
    NonPositiveLoss(f64),
    #[error("loss rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("imaginary-time evolution requires positive mode frequencies, got {0}")]
    NonpositiveFrequency(f64),
    #[error("imaginary-time evolution requires 0 < tau0 <= tau, got tau0 = {tau0}, tau = {tau}")]
    InvalidTauRange { tau0: f64, tau: f64 },
    #[error("imaginary-time initial state must be a diagonal thermal kernel (alpha = m = 0, n diagonal)")]
    NonThermalInitial,
    #[error("trajectory sample times must be finite and non-decreasing")]
    BadSampleTimes,
}

fn block2(a: CMatrix, b: CMatrix, c: CMatrix, d: CMatrix) -> CMatrix {
    BlockMatrix2x2::new(a, b, c, d)
        .expect("caller supplies equal-size blocks")
        .to_full()
}

fn swap_halves(v: &CVector) -> CVector {
    let m = v.len() / 2;
    let mut out = CVector::zeros(v.len());
    out.rows_mut(0, m).copy_from(&v.rows(m, m));
    out.rows_mut(m, m).copy_from(&v.rows(0, m));
    out
}

/// Coefficients `(A0, A1, B1, A, B, C)` of a quadratic master equation.
///
/// `A` and `B` carry the generalized Hermitian symmetry of the covariance,
/// the off-diagonal blocks of `C` are symmetric, and Hermiticity of the
/// density operator requires the matrix adjoint of each coefficient to equal
/// its generalized dagger.
#[derive(Debug, Clone)]
pub struct QuadraticMe {
    a0: Complex64,
    a1: CVector,
    b1: CVector,
    a: CMatrix,
    b: CMatrix,
    c: CMatrix,
}

impl QuadraticMe {
    pub fn new(
        a0: Complex64,
        a1: CVector,
        b1: CVector,
        a: CMatrix,
        b: CMatrix,
        c: CMatrix,
    ) -> Result<Self, QmeError> {
        let dim = a.nrows();
        if dim == 0 || dim % 2 != 0 || a.ncols() != dim {
            return Err(QmeError::Dimension {
                name: "A",
                expected: dim.max(2),
                got: a.ncols(),
            });
        }
        for (name, mat) in [("B", &b), ("C", &c)] {
            if mat.nrows() != dim || mat.ncols() != dim {
                return Err(QmeError::Dimension {
                    name,
                    expected: dim,
                    got: mat.nrows().max(mat.ncols()),
                });
            }
        }
        for (name, vec) in [("A1", &a1), ("B1", &b1)] {
            if vec.len() != dim {
                return Err(QmeError::Dimension {
                    name,
                    expected: dim,
                    got: vec.len(),
                });
            }
        }

        for (name, mat) in [("A", &a), ("B", &b)] {
            let defect = (mat - generalized_dagger_full(mat)?).norm() / mat.norm().max(1.0);
            if defect > SYM_TOL {
                return Err(QmeError::InvalidSymmetry {
                    name,
                    property: "X = X^+ (generalized Hermitian)",
                    defect,
                    tol: SYM_TOL,
                });
            }
        }
        let c_blocks = BlockMatrix2x2::from_full(&c)?;
        for (name, blk) in [("C upper-right block", &c_blocks.b), ("C lower-left block", &c_blocks.c)]
        {
            let defect = (blk - blk.transpose()).norm() / blk.norm().max(1.0);
            if defect > SYM_TOL {
                return Err(QmeError::InvalidSymmetry {
                    name,
                    property: "symmetric off-diagonal block",
                    defect,
                    tol: SYM_TOL,
                });
            }
        }
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c)] {
            let defect =
                (mat.adjoint() - generalized_dagger_full(mat)?).norm() / mat.norm().max(1.0);
            if defect > SYM_TOL {
                return Err(QmeError::InvalidSymmetry {
                    name,
                    property: "adjoint(X) = X^+ (Hermitian density operator)",
                    defect,
                    tol: SYM_TOL,
                });
            }
        }
        for (name, vec) in [("A1", &a1), ("B1", &b1)] {
            let defect = (vec.conjugate() - swap_halves(vec)).norm() / vec.norm().max(1.0);
            if defect > SYM_TOL {
                return Err(QmeError::InvalidSymmetry {
                    name,
                    property: "conj(v) = swapped-halves(v)",
                    defect,
                    tol: SYM_TOL,
                });
            }
        }
        Ok(Self { a0, a1, b1, a, b, c })
    }

    pub fn modes(&self) -> usize {
        self.a.nrows() / 2
    }

    pub fn a0(&self) -> Complex64 {
        self.a0
    }

    pub fn a1(&self) -> &CVector {
        &self.a1
    }

    pub fn b1(&self) -> &CVector {
        &self.b1
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn c(&self) -> &CMatrix {
        &self.c
    }

    /// The drift generator `E = 2A + C`.
    pub fn drift_generator(&self) -> CMatrix {
        &self.a * cr(2.0) + &self.c
    }
}

/// A single damping channel `O = conj(o1) . a + conj(o2) . a^dag`.
#[derive(Debug, Clone)]
pub struct LossOperator {
    pub o1: CVector,
    pub o2: CVector,
}

/// Lindblad data: Hamiltonian coefficients `H = 2 H1_ij adag_i a_j
/// + H2_ij adag_i adag_j + conj(H2)_ij a_i a_j` and damping channels,
/// evolving `rho` by
/// `d rho/dt = -i [H, rho] + sum_K (2 O_K rho O_K^dag - [rho, O_K^dag O_K]_+)`.
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    h1: CMatrix,
    h2: CMatrix,
    loss_ops: Vec<LossOperator>,
}

impl LindbladSpec {
    pub fn new(h1: CMatrix, h2: CMatrix, loss_ops: Vec<LossOperator>) -> Result<Self, QmeError> {
        let m = h1.nrows();
        if h1.ncols() != m {
            return Err(QmeError::Dimension {
                name: "H1",
                expected: m,
                got: h1.ncols(),
            });
        }
        if h2.nrows() != m || h2.ncols() != m {
            return Err(QmeError::Dimension {
                name: "H2",
                expected: m,
                got: h2.nrows().max(h2.ncols()),
            });
        }
        let h1_defect = (&h1 - h1.adjoint()).norm() / h1.norm().max(1.0);
        if h1_defect > 1e-12 {
            return Err(QmeError::InvalidSymmetry {
                name: "H1",
                property: "Hermitian",
                defect: h1_defect,
                tol: 1e-12,
            });
        }
        if let Err(LinalgError::NotSymmetric { asymmetry, .. }) = check_symmetric(&h2, 1e-12) {
            return Err(QmeError::InvalidSymmetry {
                name: "H2",
                property: "symmetric",
                defect: asymmetry,
                tol: 1e-12,
            });
        }
        for op in &loss_ops {
            if op.o1.len() != m || op.o2.len() != m {
                return Err(QmeError::Dimension {
                    name: "loss operator",
                    expected: m,
                    got: op.o1.len().max(op.o2.len()),
                });
            }
        }
        Ok(Self { h1, h2, loss_ops })
    }

    pub fn modes(&self) -> usize {
        self.h1.nrows()
    }

    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    pub fn h2(&self) -> &CMatrix {
        &self.h2
    }

    pub fn loss_ops(&self) -> &[LossOperator] {
        &self.loss_ops
    }

    /// Trapped modes `H = omega_ij adag_i a_j` with inhomogeneous loss
    /// `(1/2) gamma_ij (2 a_i rho a_j^dag - a_j^dag a_i rho - rho a_j^dag a_i)`.
    /// `omega` and `gamma` must be Hermitian, `gamma` positive semidefinite.
    pub fn lossy_trap(omega: &CMatrix, gamma: &CMatrix) -> Result<Self, QmeError> {
        let m = omega.nrows();
        let gdefect = (gamma - gamma.adjoint()).norm() / gamma.norm().max(1.0);
        if gdefect > 1e-12 {
            return Err(QmeError::InvalidSymmetry {
                name: "gamma",
                property: "Hermitian",
                defect: gdefect,
                tol: 1e-12,
            });
        }
        // factor gamma/2 = sum_K g_K u_K u_K^dag into rank-one channels
        let se = gamma.clone().symmetric_eigen();
        let mut loss_ops = Vec::new();
        for k in 0..m {
            let g = se.eigenvalues[k];
            if g < -1e-12 * gamma.norm().max(1.0) {
                return Err(QmeError::NonPositiveLoss(g));
            }
            if g <= 0.0 {
                continue;
            }
            let u = se.eigenvectors.column(k).into_owned();
            loss_ops.push(LossOperator {
                o1: u.conjugate() * cr((g / 2.0).sqrt()),
                o2: CVector::zeros(m),
            });
        }
        Self::new(omega * cr(0.5), CMatrix::zeros(m, m), loss_ops)
    }

    /// Single-mode cavity pumped via down-conversion at rate `chi` with
    /// one-photon loss at rate `gamma`:
    /// `d rho/dt = (1/2)[chi adag adag - conj(chi) a a, rho]
    ///  + (gamma/2)(2 a rho adag - adag a rho - rho adag a)`.
    pub fn parametric_amplifier(chi: Complex64, gamma: f64) -> Result<Self, QmeError> {
        if gamma < 0.0 {
            return Err(QmeError::NegativeRate(gamma));
        }
        let h2 = CMatrix::from_element(1, 1, Complex64::new(0.0, 0.5) * chi);
        let mut loss_ops = Vec::new();
        if gamma > 0.0 {
            loss_ops.push(LossOperator {
                o1: CVector::from_vec(vec![cr((gamma / 2.0).sqrt())]),
                o2: CVector::zeros(1),
            });
        }
        Self::new(CMatrix::zeros(1, 1), h2, loss_ops)
    }

    /// Lossless multi-mode down-conversion
    /// `H = (i/2) sum_ij (chi_ij adag_i adag_j - conj(chi)_ij a_i a_j)`
    /// with symmetric `chi`.
    pub fn bogoliubov(chi: &CMatrix) -> Result<Self, QmeError> {
        check_symmetric(chi, 1e-12).map_err(|_| QmeError::InvalidSymmetry {
            name: "chi",
            property: "symmetric",
            defect: (chi - chi.transpose()).norm(),
            tol: 1e-12,
        })?;
        let m = chi.nrows();
        let h2 = chi * Complex64::new(0.0, 0.5);
        Self::new(CMatrix::zeros(m, m), h2, Vec::new())
    }
}

/// Casts Lindblad data into the general quadratic form. The Hamiltonian
/// contributes
/// `A_H = [[0, -i H2], [i conj(H2), 0]]`, `B_H = -A_H`,
/// `C_H = [[-2i H1, 0], [0, 2i H1^T]]`,
/// and each damping channel contributes
/// `A_K = [[(o2 o2*)^T, -o1 o2*], [-o2 o1*, o2 o2*]]`,
/// `B_K = [[o1 o1*, -o1 o2*], [-o2 o1*, (o1 o1*)^T]]`, `C_K = -A_K - B_K`.
pub fn lindblad_to_qme(spec: &LindbladSpec) -> QuadraticMe {
    let m = spec.modes();
    let zero = CMatrix::zeros(m, m);
    let i = Complex64::new(0.0, 1.0);

    let a_h = block2(
        zero.clone(),
        spec.h2() * (-i),
        spec.h2().conjugate() * i,
        zero.clone(),
    );
    let c_h = block2(
        spec.h1() * (-i * cr(2.0)),
        zero.clone(),
        zero.clone(),
        spec.h1().transpose() * (i * cr(2.0)),
    );

    let mut a = a_h.clone();
    let mut b = -a_h;
    let mut c = c_h;
    for op in spec.loss_ops() {
        let o1o1 = &op.o1 * op.o1.conjugate().transpose();
        let o2o2 = &op.o2 * op.o2.conjugate().transpose();
        let o1o2 = &op.o1 * op.o2.conjugate().transpose();
        let o2o1 = &op.o2 * op.o1.conjugate().transpose();
        let a_k = block2(o2o2.transpose(), -&o1o2, -&o2o1, o2o2.clone());
        let b_k = block2(o1o1.clone(), -&o1o2, -&o2o1, o1o1.transpose());
        c -= &a_k + &b_k;
        a += a_k;
        b += b_k;
    }
    let a0 = b.trace();
    QuadraticMe::new(a0, CVector::zeros(2 * m), CVector::zeros(2 * m), a, b, c)
        .expect("Lindblad assembly satisfies the quadratic-form symmetries")
}

/// Trace-preservation diagnostics for real-time evolution:
/// `A1 = -B1`, `Tr B = -Tr(A + C) = A0`, and `D = A + B + C` anti-symmetric
/// under the generalized dagger.
#[derive(Debug, Clone)]
pub struct TracePreservationReport {
    pub linear_terms_opposite: bool,
    pub trace_identity: bool,
    pub d_anti_symmetric: bool,
    pub max_defect: f64,
}

impl TracePreservationReport {
    pub fn is_trace_preserving(&self) -> bool {
        self.linear_terms_opposite && self.trace_identity && self.d_anti_symmetric
    }
}

pub fn validate_trace_preserving(q: &QuadraticMe) -> TracePreservationReport {
    const TOL: f64 = 1e-10;
    let scale = q.a().norm() + q.b().norm() + q.c().norm();
    let scale = scale.max(1.0);

    let lin_defect = (q.a1() + q.b1()).norm();
    let linear_terms_opposite = lin_defect <= TOL * scale;

    let tr_b = q.b().trace();
    let tr_ac = (q.a() + q.c()).trace();
    let t1 = (tr_b - q.a0()).norm();
    let t2 = (tr_ac + q.a0()).norm();
    let trace_identity = t1 <= TOL * scale && t2 <= TOL * scale;

    let d = q.a() + q.b() + q.c();
    let d_defect = (generalized_dagger_full(&d).expect("even dims") + &d).norm();
    let d_anti_symmetric = d_defect <= TOL * scale;

    TracePreservationReport {
        linear_terms_opposite,
        trace_identity,
        d_anti_symmetric,
        max_defect: lin_defect.max(t1).max(t2).max(d_defect),
    }
}

/// Drift data for the general solution: the generator `E`, the fixed point
/// `alpha0` of the displacement flow, a particular solution `sigma0` of
/// `E sigma0 + sigma0 E^+ = -2B`, and steady-state flags.
#[derive(Debug, Clone)]
pub struct DriftSolution {
    pub e: CMatrix,
    pub alpha0: Option<CVector>,
    pub sigma0: Option<CMatrix>,
    pub e_spectrum: Vec<Complex64>,
    pub e_singular: bool,
    pub pencil_singular: bool,
    /// All drift eigenvalues have strictly negative real part, so
    /// `(alpha0, sigma0)` is the attracting steady state.
    pub attracting: bool,
}

pub fn drift_matrices(q: &QuadraticMe) -> Result<DriftSolution, QmeError> {
    let e = q.drift_generator();
    let e_spectrum = linalg::eigenvalues(&e)?;
    let max_mag = e_spectrum.iter().map(|l| l.norm()).fold(0.0_f64, f64::max);
    let e_singular = e_spectrum
        .iter()
        .any(|l| l.norm() <= 1e-12 * max_mag.max(1.0));

    let alpha0 = if q.a1().norm() == 0.0 {
        Some(CVector::zeros(e.nrows()))
    } else {
        let rhs = CMatrix::from_column_slice(e.nrows(), 1, (-q.a1()).as_slice());
        let svd = e.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        match svd.solve(&rhs, 1e-12 * smax.max(1e-300)) {
            Ok(sol) => {
                let v = CVector::from_column_slice(sol.as_slice());
                let residual = (&e * &v + q.a1()).norm();
                if residual <= 1e-10 * (e.norm() * v.norm() + q.a1().norm()).max(1.0) {
                    Some(v)
                } else {
                    None
                }
            }
            Err(_) => None,
        }
    };

    let edag = generalized_dagger_full(&e)?;
    let (sigma0, pencil_singular) = match sylvester_solve(&e, &edag, &(q.b() * cr(-2.0))) {
        Ok(s) => (Some(s), false),
        Err(LinalgError::SingularPencil { .. }) => (None, true),
        Err(other) => return Err(QmeError::Linalg(other)),
    };

    let attracting = !e_spectrum.is_empty()
        && e_spectrum.iter().all(|l| l.re < -1e-12 * max_mag.max(1.0))
        && sigma0.is_some()
        && alpha0.is_some();

    Ok(DriftSolution {
        e,
        alpha0,
        sigma0,
        e_spectrum,
        e_singular,
        pencil_singular,
        attracting,
    })
}

fn check_compatible(q: &QuadraticMe, g: &GaussianParams) -> Result<(), QmeError> {
    if q.modes() != g.modes() {
        return Err(QmeError::ModeMismatch {
            expected: q.modes(),
            got: g.modes(),
        });
    }
    Ok(())
}

/// Closed-form propagation through the precomputed drift data.
pub fn propagate_with_drift(
    drift: &DriftSolution,
    g: &GaussianParams,
    t: f64,
) -> Result<GaussianParams, QmeError> {
    let sigma0 = drift
        .sigma0
        .as_ref()
        .ok_or(QmeError::SteadyStateUnavailable)?;
    let alpha0 = drift
        .alpha0
        .as_ref()
        .ok_or(QmeError::SteadyStateUnavailable)?;
    let e_t = matrix_exp(&(&drift.e * cr(t)))?;
    let edag_t = matrix_exp(&(generalized_dagger_full(&drift.e)? * cr(t)))?;

    let alpha = &e_t * (g.stacked_displacement() - alpha0) + alpha0;
    let sigma = &e_t * (g.covariance().into_matrix() - sigma0) * edag_t + sigma0;
    let cov = crate::state::Covariance::from_matrix(sigma)?;
    Ok(GaussianParams::from_covariance(g.omega(), &alpha, &cov)?)
}

/// Exact propagation of a Gaussian kernel under a trace-preserving
/// quadratic master equation. The weight is untouched.
pub fn propagate_closed_form(
    q: &QuadraticMe,
    g: &GaussianParams,
    t: f64,
) -> Result<GaussianParams, QmeError> {
    check_compatible(q, g)?;
    if !validate_trace_preserving(q).is_trace_preserving() {
        return Err(QmeError::NotTracePreserving);
    }
    let drift = drift_matrices(q)?;
    propagate_with_drift(&drift, g, t)
}

/// Adaptive integration of the drift equations; agrees with the closed form
/// wherever both apply and also covers singular Sylvester pencils.
pub fn propagate_ode(
    q: &QuadraticMe,
    g: &GaussianParams,
    t: f64,
    opts: &OdeOptions,
) -> Result<GaussianParams, QmeError> {
    check_compatible(q, g)?;
    if !validate_trace_preserving(q).is_trace_preserving() {
        return Err(QmeError::NotTracePreserving);
    }
    let dim = 2 * q.modes();
    let e = q.drift_generator();
    let edag = generalized_dagger_full(&e)?;
    let b2 = q.b() * cr(2.0);
    let a1 = q.a1().clone();

    let mut y0 = CVector::zeros(dim + dim * dim);
    y0.rows_mut(0, dim).copy_from(&g.stacked_displacement());
    y0.rows_mut(dim, dim * dim)
        .copy_from(&CVector::from_column_slice(
            g.covariance().matrix().as_slice(),
        ));

    let rhs = move |_t: f64, y: &CVector| {
        let alpha = y.rows(0, dim).into_owned();
        let sigma = CMatrix::from_column_slice(dim, dim, y.rows(dim, dim * dim).as_slice());
        let dalpha = &a1 + &e * alpha;
        let dsigma = &b2 + &e * &sigma + &sigma * &edag;
        let mut dy = CVector::zeros(dim + dim * dim);
        dy.rows_mut(0, dim).copy_from(&dalpha);
        dy.rows_mut(dim, dim * dim)
            .copy_from(&CVector::from_column_slice(dsigma.as_slice()));
        dy
    };

    let y = ode::integrate(&rhs, 0.0, t, y0, opts)?;
    let alpha = y.rows(0, dim).into_owned();
    let sigma = CMatrix::from_column_slice(dim, dim, y.rows(dim, dim * dim).as_slice());
    let cov = crate::state::Covariance::from_matrix(sigma)?;
    Ok(GaussianParams::from_covariance(g.omega(), &alpha, &cov)?)
}

/// The exact canonical-ensemble kernel of `H = hbar :adag omega a:` at
/// imaginary time `tau`, starting from the identity operator at `tau = 0`:
/// `n_k = 1/(e^{omega_k tau} - 1)` and
/// `Omega = prod_k (1 - e^{-omega_k tau})^{-1}` (the trace of
/// `e^{-tau H}`).
pub fn thermal_equilibrium_state(omega: &[f64], tau: f64) -> Result<GaussianParams, QmeError> {
    for &w in omega {
        if w <= 0.0 {
            return Err(QmeError::NonpositiveFrequency(w));
        }
    }
    if tau <= 0.0 {
        return Err(QmeError::InvalidTauRange { tau0: tau, tau });
    }
    let m = omega.len();
    let mut weight = cr(1.0);
    let mut n = CMatrix::zeros(m, m);
    for (k, &w) in omega.iter().enumerate() {
        n[(k, k)] = cr(1.0 / ((w * tau).exp() - 1.0));
        weight /= cr(1.0 - (-w * tau).exp());
    }
    Ok(GaussianParams::new(
        weight,
        CVector::zeros(m),
        CVector::zeros(m),
        n,
        CMatrix::zeros(m, m),
        CMatrix::zeros(m, m),
    )?)
}

fn diagonal_thermal_occupations(g: &GaussianParams) -> Result<Vec<Complex64>, QmeError> {
    let m = g.modes();
    let tol = 1e-12 * g.n().norm().max(1.0);
    let off_diag: f64 = (0..m)
        .flat_map(|i| (0..m).filter(move |j| *j != i).map(move |j| (i, j)))
        .map(|(i, j)| g.n()[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    if g.alpha().norm() > 1e-12
        || g.alpha_plus().norm() > 1e-12
        || g.m().norm() > 1e-12
        || g.m_plus().norm() > 1e-12
        || off_diag > tol
    {
        return Err(QmeError::NonThermalInitial);
    }
    Ok((0..m).map(|k| g.n()[(k, k)]).collect())
}

/// Imaginary-time (anti-commutator) evolution of a diagonal thermal kernel
/// along the exact characteristics
/// `dn_k/dtau = -omega_k n_k (1 + n_k)` and `dOmega/dtau = -sum_k omega_k
/// n_k Omega`.
///
/// With `g0` omitted, the state is initialized on the identity-operator
/// characteristic at `tau0`. The solution is evaluated analytically:
/// `x_k(tau) = n_k/(1 + n_k) e^{-omega_k (tau - tau0)}`,
/// `n_k(tau) = x_k/(1 - x_k)`, and
/// `Omega(tau) = Omega(tau0) prod_k (1 - x_k(tau0)) / (1 - x_k(tau))`.
pub fn propagate_imaginary_time(
    omega: &[f64],
    tau0: f64,
    tau: f64,
    g0: Option<&GaussianParams>,
) -> Result<GaussianParams, QmeError> {
    validate_imaginary_args(omega, tau0, tau, g0)?;
    let start = match g0 {
        Some(g) => g.clone(),
        None => thermal_equilibrium_state(omega, tau0)?,
    };
    let occ = diagonal_thermal_occupations(&start)?;
    let m = omega.len();
    let mut weight = start.omega();
    let mut n = CMatrix::zeros(m, m);
    for (k, &w) in omega.iter().enumerate() {
        let n0 = occ[k];
        let x0 = n0 / (cr(1.0) + n0);
        let x = x0 * cr((-w * (tau - tau0)).exp());
        n[(k, k)] = x / (cr(1.0) - x);
        weight *= (cr(1.0) - x0) / (cr(1.0) - x);
    }
    Ok(GaussianParams::new(
        weight,
        CVector::zeros(m),
        CVector::zeros(m),
        n,
        CMatrix::zeros(m, m),
        CMatrix::zeros(m, m),
    )?)
}

/// The same flow integrated numerically from `tau0` to `tau`; a cross-check
/// of the analytic characteristics.
pub fn propagate_imaginary_time_ode(
    omega: &[f64],
    tau0: f64,
    tau: f64,
    g0: Option<&GaussianParams>,
    opts: &OdeOptions,
) -> Result<GaussianParams, QmeError> {
    validate_imaginary_args(omega, tau0, tau, g0)?;
    let start = match g0 {
        Some(g) => g.clone(),
        None => thermal_equilibrium_state(omega, tau0)?,
    };
    let occ = diagonal_thermal_occupations(&start)?;
    let m = omega.len();
    let mut y0 = CVector::zeros(m + 1);
    y0[0] = start.omega();
    for k in 0..m {
        y0[k + 1] = occ[k];
    }
    let omega_owned: Vec<f64> = omega.to_vec();
    let rhs = move |_t: f64, y: &CVector| {
        let mut dy = CVector::zeros(y.len());
        let mut rate = cr(0.0);
        for (k, &w) in omega_owned.iter().enumerate() {
            let nk = y[k + 1];
            dy[k + 1] = -cr(w) * nk * (cr(1.0) + nk);
            rate += cr(w) * nk;
        }
        dy[0] = -rate * y[0];
        dy
    };
    let y = ode::integrate(&rhs, tau0, tau, y0, opts)?;
    let mut n = CMatrix::zeros(m, m);
    for k in 0..m {
        n[(k, k)] = y[k + 1];
    }
    Ok(GaussianParams::new(
        y[0],
        CVector::zeros(m),
        CVector::zeros(m),
        n,
        CMatrix::zeros(m, m),
        CMatrix::zeros(m, m),
    )?)
}

fn validate_imaginary_args(
    omega: &[f64],
    tau0: f64,
    tau: f64,
    g0: Option<&GaussianParams>,
) -> Result<(), QmeError> {
    for &w in omega {
        if w <= 0.0 {
            return Err(QmeError::NonpositiveFrequency(w));
        }
    }
    if !(tau0 > 0.0 && tau >= tau0) {
        return Err(QmeError::InvalidTauRange { tau0, tau });
    }
    if let Some(g) = g0 {
        if g.modes() != omega.len() {
            return Err(QmeError::ModeMismatch {
                expected: omega.len(),
                got: g.modes(),
            });
        }
    }
    Ok(())
}

/// Which propagation path evaluates a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    ClosedForm,
    Ode,
}

/// Moments of the propagated kernel at one sample time.
#[derive(Debug, Clone)]
pub struct MomentSample {
    pub t: f64,
    pub omega: Complex64,
    pub first: FirstMoments,
    pub second: SecondMoments,
}

/// First and second moments of the evolved kernel on a sample-time grid.
/// Closed-form sampling evaluates each time independently from `t = 0`;
/// the ODE path integrates segment by segment.
pub fn moment_trajectory(
    q: &QuadraticMe,
    g0: &GaussianParams,
    times: &[f64],
    engine: Engine,
    opts: &OdeOptions,
) -> Result<Vec<MomentSample>, QmeError> {
    check_compatible(q, g0)?;
    if times.iter().any(|t| !t.is_finite())
        || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(QmeError::BadSampleTimes);
    }
    let mut out = Vec::with_capacity(times.len());
    match engine {
        Engine::ClosedForm => {
            if !validate_trace_preserving(q).is_trace_preserving() {
                return Err(QmeError::NotTracePreserving);
            }
            let drift = drift_matrices(q)?;
            for &t in times {
                let g = propagate_with_drift(&drift, g0, t)?;
                out.push(sample(t, &g));
            }
        }
        Engine::Ode => {
            let mut current = g0.clone();
            let mut t_prev = 0.0;
            for &t in times {
                if t == 0.0 {
                    out.push(sample(0.0, g0));
                    continue;
                }
                let seg = propagate_ode_from(q, &current, t_prev, t, opts)?;
                out.push(sample(t, &seg));
                current = seg;
                t_prev = t;
            }
        }
    }
    Ok(out)
}

fn propagate_ode_from(
    q: &QuadraticMe,
    g: &GaussianParams,
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
) -> Result<GaussianParams, QmeError> {
    // autonomous system: integrate over the shifted interval
    propagate_ode(q, g, t1 - t0, opts)
}

fn sample(t: f64, g: &GaussianParams) -> MomentSample {
    MomentSample {
        t,
        omega: g.omega(),
        first: g.first_moments(),
        second: g.second_moments(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, cr(v))
    }

    #[test]
    fn lossy_trap_assembly_single_mode() {
        let (w, g) = (1.3, 0.4);
        let spec = LindbladSpec::lossy_trap(&scalar(w), &scalar(g)).unwrap();
        let q = lindblad_to_qme(&spec);
        // A = 0, B = (gamma/2) I, C = [[-iw - g/2, 0], [0, iw - g/2]]
        assert!(q.a().norm() < 1e-14);
        let b_expect = CMatrix::identity(2, 2) * cr(g / 2.0);
        assert!((q.b() - b_expect).norm() < 1e-14);
        assert!((q.c()[(0, 0)] - c(-g / 2.0, -w)).norm() < 1e-14);
        assert!((q.c()[(1, 1)] - c(-g / 2.0, w)).norm() < 1e-14);
        assert!((q.a0() - cr(g)).norm() < 1e-14);
    }

    #[test]
    fn parametric_amplifier_assembly() {
        let (chi, g) = (0.25, 1.0);
        let spec = LindbladSpec::parametric_amplifier(cr(chi), g).unwrap();
        let q = lindblad_to_qme(&spec);
        let a_expect = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(chi / 2.0), cr(chi / 2.0), cr(0.0)]);
        let b_expect =
            CMatrix::from_row_slice(2, 2, &[cr(g / 2.0), cr(-chi / 2.0), cr(-chi / 2.0), cr(g / 2.0)]);
        let c_expect = CMatrix::identity(2, 2) * cr(-g / 2.0);
        assert!((q.a() - a_expect).norm() < 1e-14);
        assert!((q.b() - b_expect).norm() < 1e-14);
        assert!((q.c() - c_expect).norm() < 1e-14);
    }

    #[test]
    fn bogoliubov_assembly() {
        let chi = 0.4;
        let spec = LindbladSpec::bogoliubov(&scalar(chi)).unwrap();
        let q = lindblad_to_qme(&spec);
        assert!(q.c().norm() < 1e-14);
        let e = q.drift_generator();
        let e_expect = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(chi), cr(chi), cr(0.0)]);
        assert!((&e - &e_expect).norm() < 1e-14);
        assert!((q.b() * cr(-2.0) - e_expect).norm() < 1e-14);
    }

    #[test]
    fn lindblad_outputs_are_trace_preserving() {
        let specs = [
            LindbladSpec::lossy_trap(&scalar(1.0), &scalar(0.5)).unwrap(),
            LindbladSpec::parametric_amplifier(c(0.2, 0.1), 0.9).unwrap(),
            LindbladSpec::bogoliubov(&scalar(0.3)).unwrap(),
        ];
        for spec in specs {
            let q = lindblad_to_qme(&spec);
            let report = validate_trace_preserving(&q);
            assert!(
                report.is_trace_preserving(),
                "defect {:.3e}",
                report.max_defect
            );
        }
    }

    #[test]
    fn imaginary_time_style_qme_fails_trace_check() {
        // anticommutator flow: C = -(1/2) diag(w, w), A0 = +w, A = B = 0
        let w = 1.0;
        let q = QuadraticMe::new(
            cr(w),
            CVector::zeros(2),
            CVector::zeros(2),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::identity(2, 2) * cr(-w / 2.0),
        )
        .unwrap();
        assert!(!validate_trace_preserving(&q).is_trace_preserving());
    }

    #[test]
    fn zero_qme_passes_trace_check_and_is_identity() {
        let q = QuadraticMe::new(
            cr(0.0),
            CVector::zeros(2),
            CVector::zeros(2),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
        )
        .unwrap();
        assert!(validate_trace_preserving(&q).is_trace_preserving());
        let g = factory::vacuum(1);
        let out = propagate_closed_form(&q, &g, 3.0).unwrap();
        assert!(out.n().norm() < 1e-12 && out.alpha().norm() < 1e-12);
    }

    #[test]
    fn parametric_amplifier_steady_state_formula() {
        let (chi, g) = (0.25, 1.0);
        let q = lindblad_to_qme(&LindbladSpec::parametric_amplifier(cr(chi), g).unwrap());
        let drift = drift_matrices(&q).unwrap();
        let s0 = drift.sigma0.unwrap();
        let f = 1.0 / (g * g - 4.0 * chi * chi);
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[
                cr(f * (g * g - 2.0 * chi * chi)),
                cr(f * chi * g),
                cr(f * chi * g),
                cr(f * (g * g - 2.0 * chi * chi)),
            ],
        );
        assert!((&s0 - &expect).norm() < 1e-12);
        assert!(drift.attracting);
        assert!(!drift.pencil_singular);
    }

    #[test]
    fn lossy_trap_steady_state_is_vacuum() {
        let q = lindblad_to_qme(&LindbladSpec::lossy_trap(&scalar(1.0), &scalar(0.5)).unwrap());
        let drift = drift_matrices(&q).unwrap();
        assert!((drift.sigma0.unwrap() - CMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(drift.alpha0.unwrap().norm() == 0.0);
        assert!(drift.attracting);
    }

    #[test]
    fn bogoliubov_sigma0_is_half_identity() {
        let q = lindblad_to_qme(&LindbladSpec::bogoliubov(&scalar(0.4)).unwrap());
        let drift = drift_matrices(&q).unwrap();
        let s0 = drift.sigma0.unwrap();
        assert!((s0 - CMatrix::identity(2, 2) * cr(0.5)).norm() < 1e-12);
        assert!(!drift.attracting); // spectrum is +-chi
    }

    #[test]
    fn closed_form_at_zero_time_is_identity() {
        let q = lindblad_to_qme(&LindbladSpec::parametric_amplifier(cr(0.2), 1.0).unwrap());
        let g = factory::squeezed_vacuum(
            CVector::from_vec(vec![c(0.1, -0.3)]),
            CVector::from_vec(vec![c(0.1, 0.3)]),
            &factory::SqueezeSpec::scalar(0.3),
        )
        .unwrap();
        let out = propagate_closed_form(&q, &g, 0.0).unwrap();
        assert!((out.n() - g.n()).norm() < 1e-12);
        assert!((out.m() - g.m()).norm() < 1e-12);
        assert!((out.alpha() - g.alpha()).norm() < 1e-12);
    }

    #[test]
    fn bogoliubov_vacuum_growth() {
        let chi = 0.4;
        let q = lindblad_to_qme(&LindbladSpec::bogoliubov(&scalar(chi)).unwrap());
        let g = factory::vacuum(1);
        for &t in &[0.3, 0.9, 1.8] {
            let out = propagate_closed_form(&q, &g, t).unwrap();
            let n_expect = 0.5 * (2.0 * chi * t).cosh() - 0.5;
            let m_expect = 0.5 * (2.0 * chi * t).sinh();
            assert!((out.n()[(0, 0)] - cr(n_expect)).norm() < 1e-12);
            assert!((out.m()[(0, 0)] - cr(m_expect)).norm() < 1e-12);
        }
    }

    #[test]
    fn parametric_amplifier_long_time_limits() {
        let (chi, g) = (0.25, 1.0);
        let q = lindblad_to_qme(&LindbladSpec::parametric_amplifier(cr(chi), g).unwrap());
        let out = propagate_closed_form(&q, &factory::vacuum(1), 100.0).unwrap();
        assert!((out.n()[(0, 0)] - cr(1.0 / 6.0)).norm() < 1e-10);
        assert!((out.m()[(0, 0)] - cr(1.0 / 3.0)).norm() < 1e-10);
    }

    #[test]
    fn ode_matches_closed_form_parametric() {
        let q = lindblad_to_qme(&LindbladSpec::parametric_amplifier(cr(0.25), 1.0).unwrap());
        let g = factory::vacuum(1);
        let opts = OdeOptions::default();
        for &t in &[0.5, 2.5, 10.0] {
            let a = propagate_closed_form(&q, &g, t).unwrap();
            let b = propagate_ode(&q, &g, t, &opts).unwrap();
            assert!((a.n() - b.n()).norm() < 1e-8, "t = {t}");
            assert!((a.m() - b.m()).norm() < 1e-8);
        }
    }

    #[test]
    fn lossy_trap_scalar_solution() {
        let (w, gam) = (1.1, 0.6);
        let q = lindblad_to_qme(&LindbladSpec::lossy_trap(&scalar(w), &scalar(gam)).unwrap());
        let alpha0 = c(0.7, -0.2);
        let n0 = 0.8;
        let g = GaussianParams::new(
            cr(1.0),
            CVector::from_vec(vec![alpha0]),
            CVector::from_vec(vec![alpha0.conj()]),
            scalar(n0),
            CMatrix::zeros(1, 1),
            CMatrix::zeros(1, 1),
        )
        .unwrap();
        let t = 1.7;
        let out = propagate_ode(&q, &g, t, &OdeOptions::default()).unwrap();
        // alpha(t) = e^{-i w_tilde t} alpha(0), w_tilde = w - i gamma/2
        let phase = (c(0.0, -w * t) + cr(-gam * t / 2.0)).exp();
        assert!((out.alpha()[0] - alpha0 * phase).norm() < 1e-9);
        assert!((out.n()[(0, 0)] - cr(n0 * (-gam * t).exp())).norm() < 1e-9);
    }

    #[test]
    fn propagation_keeps_weight() {
        let q = lindblad_to_qme(&LindbladSpec::parametric_amplifier(cr(0.2), 1.0).unwrap());
        let g = factory::vacuum(1).with_omega(c(2.0, 0.5));
        let out = propagate_closed_form(&q, &g, 1.0).unwrap();
        assert_eq!(out.omega(), c(2.0, 0.5));
    }

    #[test]
    fn imaginary_time_bose_einstein_values() {
        let g = thermal_equilibrium_state(&[1.0], 2.0_f64.ln()).unwrap();
        assert!((g.n()[(0, 0)] - cr(1.0)).norm() < 1e-14);

        let g1 = thermal_equilibrium_state(&[1.0], 1.0).unwrap();
        let expect = 1.0 / (1.0 - (-1.0_f64).exp());
        assert!((g1.omega() - cr(expect)).norm() < 1e-14);
    }

    #[test]
    fn imaginary_time_characteristic_propagation() {
        // starting on the characteristic at tau0, the flow stays on it
        let omega = [1.0, 0.5, 2.0];
        let g = propagate_imaginary_time(&omega, 0.01, 3.0, None).unwrap();
        let exact = thermal_equilibrium_state(&omega, 3.0).unwrap();
        assert!((g.n() - exact.n()).norm() < 1e-12);
        assert!((g.omega() - exact.omega()).norm() < 1e-10 * exact.omega().norm());
    }

    #[test]
    fn imaginary_time_ode_matches_analytic() {
        let omega = [1.0];
        let a = propagate_imaginary_time(&omega, 0.01, 2.0, None).unwrap();
        let b =
            propagate_imaginary_time_ode(&omega, 0.01, 2.0, None, &OdeOptions::default()).unwrap();
        assert!((a.n()[(0, 0)] - b.n()[(0, 0)]).norm() < 1e-8);
        assert!((a.omega() - b.omega()).norm() < 1e-8 * a.omega().norm());
    }

    #[test]
    fn imaginary_time_rejects_bad_arguments() {
        assert!(matches!(
            propagate_imaginary_time(&[0.0], 0.01, 1.0, None),
            Err(QmeError::NonpositiveFrequency(_))
        ));
        assert!(matches!(
            propagate_imaginary_time(&[1.0], -0.1, 1.0, None),
            Err(QmeError::InvalidTauRange { .. })
        ));
        assert!(matches!(
            propagate_imaginary_time(&[1.0], 0.5, 0.2, None),
            Err(QmeError::InvalidTauRange { .. })
        ));
    }

    #[test]
    fn trajectory_vacuum_under_lossy_trap_stays_zero() {
        let q = lindblad_to_qme(&LindbladSpec::lossy_trap(&scalar(1.0), &scalar(0.5)).unwrap());
        let times = [0.0, 0.5, 1.0, 2.0];
        let samples = moment_trajectory(
            &q,
            &factory::vacuum(1),
            &times,
            Engine::ClosedForm,
            &OdeOptions::default(),
        )
        .unwrap();
        for s in &samples {
            assert!(s.first.a[0].norm() < 1e-13);
            assert!(s.second.normal_a_adag[(0, 0)].norm() < 1e-12);
        }
    }

    #[test]
    fn trajectory_coherent_decay_no_detuning() {
        let gam = 0.8;
        let q = lindblad_to_qme(&LindbladSpec::lossy_trap(&scalar(0.0), &scalar(gam)).unwrap());
        let alpha0 = c(1.0, 0.0);
        let g = factory::coherent_projector(
            cr(1.0),
            CVector::from_vec(vec![alpha0]),
            CVector::from_vec(vec![alpha0.conj()]),
        )
        .unwrap();
        let times = [0.0, 0.4, 1.0, 2.0];
        let samples =
            moment_trajectory(&q, &g, &times, Engine::Ode, &OdeOptions::default()).unwrap();
        for s in &samples {
            let expect = alpha0 * cr((-gam * s.t / 2.0).exp());
            assert!((s.first.a[0] - expect).norm() < 1e-8, "t = {}", s.t);
        }
    }

    #[test]
    fn attracting_spectrum_decays_to_steady_state() {
        // for strictly negative-real-part drift spectra the distance to
        // (alpha0, sigma0) decays in envelope; checked out to
        // T = 20 / |min Re eig E|
        for spec in [
            LindbladSpec::parametric_amplifier(cr(0.25), 1.0).unwrap(),
            LindbladSpec::lossy_trap(&scalar(1.3), &scalar(0.7)).unwrap(),
        ] {
            let q = lindblad_to_qme(&spec);
            let drift = drift_matrices(&q).unwrap();
            assert!(drift.attracting);
            let sigma0 = drift.sigma0.clone().unwrap();
            let slowest = drift
                .e_spectrum
                .iter()
                .map(|l| l.re.abs())
                .fold(f64::INFINITY, f64::min);
            let t_final = 20.0 / slowest;
            let g0 = factory::squeezed_vacuum(
                CVector::from_vec(vec![c(0.4, -0.2)]),
                CVector::from_vec(vec![c(0.4, 0.2)]),
                &factory::SqueezeSpec::scalar(0.5),
            )
            .unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..=10 {
                let t = t_final * k as f64 / 10.0;
                let gt = propagate_with_drift(&drift, &g0, t).unwrap();
                let dist = (gt.covariance().into_matrix() - &sigma0).norm();
                assert!(dist <= prev * (1.0 + 1e-12), "envelope grew at t = {t}");
                prev = dist;
            }
            assert!(prev < 1e-8, "sigma(T) still {prev:.3e} from sigma0");
        }
    }

    #[test]
    fn constructor_rejects_broken_symmetry() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = cr(1.0); // breaks A = A^+ (requires a_11 = a_22)
        let r = QuadraticMe::new(
            cr(0.0),
            CVector::zeros(2),
            CVector::zeros(2),
            a,
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
        );
        assert!(matches!(r, Err(QmeError::InvalidSymmetry { .. })));
    }

    #[test]
    fn lossy_trap_rejects_negative_loss() {
        let r = LindbladSpec::lossy_trap(&scalar(1.0), &scalar(-0.5));
        assert!(matches!(r, Err(QmeError::NonPositiveLoss(_))));
    }
}
