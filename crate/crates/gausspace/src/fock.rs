//! Truncated Fock-space brute force: explicit ladder operators, state and
//! kernel construction by operator composition, direct Lindblad
//! integration, moment extraction, and numerical verification of the
//! operator identities and the basic Gaussian integral.
//!
//! Everything here is the slow, obviously-correct path used to check the
//! phase-space modules on small instances.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::factory::SqueezeSpec;
use crate::linalg::{self, cr, matrix_exp, CMatrix, CVector, LinalgError};
use crate::ode::{self, OdeError, OdeOptions};
use crate::qme::LindbladSpec;
use crate::state::{FirstMoments, GaussianParams, SecondMoments};

#[derive(Debug, Error)]
pub enum FockError {
    #[error("mode index {0} out of range")]
    BadMode(usize),
    #[error("expected {expected} mode parameters, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("truncated basis too small: tail mass {tail:.3e} exceeds {tol:.1e}; raise nmax")]
    TruncationInsufficient { tail: f64, tol: f64 },
    #[error("edge-level population {population:.3e} exceeds {tol:.1e}; raise nmax")]
    EdgePopulation { population: f64, tol: f64 },
    #[error("trace drifted by {drift:.3e} during integration; raise nmax or tighten tolerances")]
    TraceDrift { drift: f64 },
    #[error("density matrix trace is zero; normalized moments are undefined")]
    ZeroTrace,
    #[error("kernel parameters outside the factorized families: {0}")]
    UnsupportedParameterRegion(String),
    #[error("density matrix is not physical: {0}")]
    Unphysical(String),
    #[error("thermal identity check requires Re(nbar) > 0, got {0}")]
    InvalidThermalParameter(Complex64),
    #[error("Gaussian-integral validity violated: sigma eigenvalue {0} has nonpositive real part")]
    ValidityCondition(Complex64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// A truncated multi-mode Fock space with cached ladder operators. Basis
/// states are occupation tuples `(n_0, ..., n_{M-1})`, `0 <= n_i <= nmax`,
/// indexed with mode 0 most significant.
#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: usize,
    nmax: usize,
    dim: usize,
    a: Vec<CMatrix>,
    adag: Vec<CMatrix>,
}

impl FockSpace {
    pub fn new(modes: usize, nmax: usize) -> Self {
        assert!(modes >= 1, "need at least one mode");
        let d = nmax + 1;
        let dim = d.pow(modes as u32);
        let mut single = CMatrix::zeros(d, d);
        for k in 1..d {
            single[(k - 1, k)] = cr((k as f64).sqrt());
        }
        let mut a = Vec::with_capacity(modes);
        for i in 0..modes {
            let left = CMatrix::identity(d.pow(i as u32), d.pow(i as u32));
            let right = CMatrix::identity(
                d.pow((modes - 1 - i) as u32),
                d.pow((modes - 1 - i) as u32),
            );
            a.push(left.kronecker(&single).kronecker(&right));
        }
        let adag = a.iter().map(|m| m.adjoint()).collect();
        Self {
            modes,
            nmax,
            dim,
            a,
            adag,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn annihilation(&self, mode: usize) -> Result<&CMatrix, FockError> {
        self.a.get(mode).ok_or(FockError::BadMode(mode))
    }

    pub fn creation(&self, mode: usize) -> Result<&CMatrix, FockError> {
        self.adag.get(mode).ok_or(FockError::BadMode(mode))
    }

    /// Occupation numbers of a basis index.
    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let d = self.nmax + 1;
        let mut occ = vec![0usize; self.modes];
        for i in (0..self.modes).rev() {
            occ[i] = index % d;
            index /= d;
        }
        occ
    }

    fn is_edge(&self, index: usize) -> bool {
        self.occupations(index).iter().any(|&n| n == self.nmax)
    }

    /// Total `|rho_kk|` over basis states with any mode at the truncation
    /// edge.
    pub fn edge_population(&self, rho: &CMatrix) -> f64 {
        (0..self.dim)
            .filter(|&k| self.is_edge(k))
            .map(|k| rho[(k, k)].norm())
            .sum()
    }
}

/// How a Fock-space operator is meant to be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// A physical density matrix: Hermitian, unit trace, nonnegative.
    Physical,
    /// A general (possibly non-Hermitian) basis kernel; the physicality
    /// checks do not apply.
    Kernel,
}

/// A dense operator on the truncated space, tagged physical or kernel.
#[derive(Debug, Clone)]
pub struct FockDensity {
    rho: CMatrix,
    kind: DensityKind,
}

impl FockDensity {
    /// Wraps a physical density matrix, enforcing Hermiticity, unit trace
    /// and spectrum nonnegativity to 1e-10.
    pub fn physical(rho: CMatrix) -> Result<Self, FockError> {
        const TOL: f64 = 1e-10;
        let herm = (&rho - rho.adjoint()).norm() / rho.norm().max(1.0);
        if herm > TOL {
            return Err(FockError::Unphysical(format!(
                "Hermiticity defect {herm:.3e}"
            )));
        }
        let tr = rho.trace();
        if (tr - cr(1.0)).norm() > TOL {
            return Err(FockError::Unphysical(format!("trace {tr} != 1")));
        }
        let eigs = linalg::hermitian_eigenvalues(&rho)?;
        if let Some(lmin) = eigs.first() {
            if *lmin < -TOL {
                return Err(FockError::Unphysical(format!(
                    "negative eigenvalue {lmin:.3e}"
                )));
            }
        }
        Ok(Self {
            rho,
            kind: DensityKind::Physical,
        })
    }

    /// Wraps a kernel without physicality checks.
    pub fn kernel(rho: CMatrix) -> Self {
        Self {
            rho,
            kind: DensityKind::Kernel,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rho.nrows()).map(|k| self.rho[(k, k)]).collect()
    }
}

// Physical states are normalized, so their truncation budget is strict;
// kernels only feed 1e-8 moment comparisons and get an order more slack.
const STATE_TAIL_TOL: f64 = 1e-12;
const KERNEL_TAIL_TOL: f64 = 1e-10;

/// Default ceiling on the truncation-edge population monitor used by
/// [`evolve_lindblad`].
pub const DEFAULT_EDGE_TOL: f64 = 1e-8;

/// The vacuum projector.
pub fn vacuum_state(space: &FockSpace) -> FockDensity {
    let mut rho = CMatrix::zeros(space.dim(), space.dim());
    rho[(0, 0)] = cr(1.0);
    FockDensity::physical(rho).expect("vacuum is physical")
}

/// A product of coherent states, built from the normalized amplitude
/// ladder.
pub fn coherent_state(space: &FockSpace, alpha: &[Complex64]) -> Result<FockDensity, FockError> {
    if alpha.len() != space.modes() {
        return Err(FockError::Dimension {
            expected: space.modes(),
            got: alpha.len(),
        });
    }
    let d = space.nmax() + 1;
    let mut ket = CVector::from_element(1, cr(1.0));
    for &a in alpha {
        let mut mode_ket = CVector::zeros(d);
        let mut amp = cr((-a.norm_sqr() / 2.0).exp());
        for k in 0..d {
            if k > 0 {
                amp *= a / cr((k as f64).sqrt());
            }
            mode_ket[k] = amp;
        }
        ket = ket.kronecker(&mode_ket);
    }
    let norm_deficit = (1.0 - ket.norm_squared()).abs();
    if norm_deficit > STATE_TAIL_TOL {
        return Err(FockError::TruncationInsufficient {
            tail: norm_deficit,
            tol: STATE_TAIL_TOL,
        });
    }
    let ket = &ket / cr(ket.norm());
    let rho = &ket * ket.adjoint();
    FockDensity::physical(rho)
}

/// A product thermal state with per-mode occupations `nbar_k >= 0`.
pub fn thermal_state(space: &FockSpace, nbar: &[f64]) -> Result<FockDensity, FockError> {
    if nbar.len() != space.modes() {
        return Err(FockError::Dimension {
            expected: space.modes(),
            got: nbar.len(),
        });
    }
    if nbar.iter().any(|&n| n < 0.0) {
        return Err(FockError::Unphysical(format!(
            "negative thermal occupation in {nbar:?}"
        )));
    }
    let nbar_c: Vec<Complex64> = nbar.iter().map(|&n| cr(n)).collect();
    let mut rho = thermal_kernel_matrix(space, cr(1.0), &nbar_c);
    let tail = space.edge_population(&rho);
    if tail > STATE_TAIL_TOL {
        return Err(FockError::TruncationInsufficient {
            tail,
            tol: STATE_TAIL_TOL,
        });
    }
    let tr = rho.trace();
    rho /= tr;
    FockDensity::physical(rho)
}

fn thermal_kernel_matrix(space: &FockSpace, omega: Complex64, nbar: &[Complex64]) -> CMatrix {
    let mut diag = CVector::zeros(space.dim());
    for k in 0..space.dim() {
        let occ = space.occupations(k);
        let mut val = omega;
        for (i, &n_i) in occ.iter().enumerate() {
            let nb = nbar[i];
            let ratio = nb / (cr(1.0) + nb);
            val *= ratio.powu(n_i as u32) / (cr(1.0) + nb);
        }
        diag[k] = val;
    }
    CMatrix::from_diagonal(&diag)
}

/// The general physical state `D(alpha) S(xi) rho_th(nbar) S(-xi) D(-alpha)`
/// with unitary displacement and squeezing.
pub fn displaced_squeezed_thermal_state(
    space: &FockSpace,
    alpha: &[Complex64],
    xi: &CMatrix,
    nbar: &[f64],
) -> Result<FockDensity, FockError> {
    let alpha_plus: Vec<Complex64> = alpha.iter().map(|a| a.conj()).collect();
    let squeeze = SqueezeSpec::hermitian(xi.clone())
        .map_err(|_| FockError::UnsupportedParameterRegion("asymmetric squeeze matrix".into()))?;
    let nbar_c: Vec<Complex64> = nbar.iter().map(|&n| cr(n)).collect();
    let rho = build_factorized(space, cr(1.0), alpha, &alpha_plus, Some(&squeeze), &nbar_c)?;
    let mut m = rho.rho;
    let tr = m.trace();
    m /= tr;
    let tail = space.edge_population(&m);
    if tail > STATE_TAIL_TOL {
        return Err(FockError::TruncationInsufficient {
            tail,
            tol: STATE_TAIL_TOL,
        });
    }
    FockDensity::physical(m)
}

/// Builds the (generally non-Hermitian) kernel
/// `Omega D_g(alpha, alpha+) S_g(xi, xi+) Lambda_th(nbar) S_g^{-1} D_g^{-1}`
/// by operator composition; the similarity transforms keep the trace at
/// `Omega` up to truncation.
pub fn build_factorized(
    space: &FockSpace,
    omega: Complex64,
    alpha: &[Complex64],
    alpha_plus: &[Complex64],
    squeeze: Option<&SqueezeSpec>,
    nbar: &[Complex64],
) -> Result<FockDensity, FockError> {
    let m = space.modes();
    if alpha.len() != m || alpha_plus.len() != m || nbar.len() != m {
        return Err(FockError::Dimension {
            expected: m,
            got: alpha.len().min(alpha_plus.len()).min(nbar.len()),
        });
    }
    let mut rho = thermal_kernel_matrix(space, omega, nbar);

    if let Some(sq) = squeeze {
        if sq.modes() != m {
            return Err(FockError::Dimension {
                expected: m,
                got: sq.modes(),
            });
        }
        if sq.xi().norm() > 0.0 || sq.xi_plus().norm() > 0.0 {
            let gen = squeeze_generator(space, sq.xi(), sq.xi_plus())?;
            let s = matrix_exp(&gen)?;
            let s_inv = matrix_exp(&(-gen))?;
            rho = &s * rho * &s_inv;
        }
    }
    if alpha.iter().any(|z| z.norm() > 0.0) || alpha_plus.iter().any(|z| z.norm() > 0.0) {
        let gen = displacement_generator(space, alpha, alpha_plus)?;
        let d = matrix_exp(&gen)?;
        let d_inv = matrix_exp(&(-gen))?;
        rho = &d * rho * &d_inv;
    }

    let tail = space.edge_population(&rho);
    if tail > KERNEL_TAIL_TOL * omega.norm().max(1.0) {
        return Err(FockError::TruncationInsufficient {
            tail,
            tol: KERNEL_TAIL_TOL,
        });
    }
    Ok(FockDensity::kernel(rho))
}

/// `sum_i alpha_i adag_i - sum_i alpha+_i a_i`.
fn displacement_generator(
    space: &FockSpace,
    alpha: &[Complex64],
    alpha_plus: &[Complex64],
) -> Result<CMatrix, FockError> {
    let mut gen = CMatrix::zeros(space.dim(), space.dim());
    for i in 0..space.modes() {
        gen += space.creation(i)? * alpha[i];
        gen -= space.annihilation(i)? * alpha_plus[i];
    }
    Ok(gen)
}

/// `-(1/2) sum_ij xi_ij adag_i adag_j + (1/2) sum_ij xi+_ij a_i a_j`.
fn squeeze_generator(
    space: &FockSpace,
    xi: &CMatrix,
    xi_plus: &CMatrix,
) -> Result<CMatrix, FockError> {
    let mut gen = CMatrix::zeros(space.dim(), space.dim());
    for i in 0..space.modes() {
        for j in 0..space.modes() {
            if xi[(i, j)].norm() > 0.0 {
                gen -= space.creation(i)? * space.creation(j)? * (xi[(i, j)] * cr(0.5));
            }
            if xi_plus[(i, j)].norm() > 0.0 {
                gen +=
                    space.annihilation(i)? * space.annihilation(j)? * (xi_plus[(i, j)] * cr(0.5));
            }
        }
    }
    Ok(gen)
}

/// Recovers the factor data `(nbar, xi, xi+)` of a single-mode kernel from
/// its correlation scalars. Inverts
/// `n = mu^2 nb + nu nu+ (nb + 1)`, `m = -mu nu (2 nb + 1)`,
/// `m+ = -mu nu+ (2 nb + 1)` with `mu^2 - nu nu+ = 1`.
fn kernel_factors_single_mode(
    n: Complex64,
    m: Complex64,
    m_plus: Complex64,
) -> Result<(Complex64, Complex64, Complex64), FockError> {
    let scale = n.norm().max(1.0);
    if m.norm() <= 1e-14 * scale && m_plus.norm() <= 1e-14 * scale {
        return Ok((n, cr(0.0), cr(0.0)));
    }
    let two_n1 = cr(2.0) * n + cr(1.0);
    let disc = two_n1 * two_n1 - cr(4.0) * m * m_plus;
    let root = disc.sqrt();
    let nb = (root - cr(1.0)) / cr(2.0);
    let denom = root; // 2 nb + 1
    if denom.norm() < 1e-10 {
        return Err(FockError::UnsupportedParameterRegion(format!(
            "degenerate thermal factor 2 nbar + 1 = {denom}"
        )));
    }
    let p = (n - nb) / denom; // nu nu+
    let mu = (cr(1.0) + p).sqrt();
    if mu.norm() < 1e-10 {
        return Err(FockError::UnsupportedParameterRegion(
            "vanishing Bogoliubov mu".into(),
        ));
    }
    let nu = -m / (mu * denom);
    let nu_plus = -m_plus / (mu * denom);
    // mu = cosh(theta), nu = xi sinh(theta)/theta with theta^2 = xi xi+
    let sh = (mu * mu - cr(1.0)).sqrt();
    let theta = (mu + sh).ln();
    let factor = if sh.norm() < 1e-10 { cr(1.0) } else { theta / sh };
    Ok((nb, nu * factor, nu_plus * factor))
}

/// Builds the Fock-space image of a Gaussian kernel. Single-mode kernels
/// are fully supported through the factor decomposition; multi-mode kernels
/// are limited to diagonal thermal/coherent data (build squeezed families
/// from their factor data via [`build_factorized`]).
pub fn build_kernel(space: &FockSpace, g: &GaussianParams) -> Result<FockDensity, FockError> {
    let m = space.modes();
    if g.modes() != m {
        return Err(FockError::Dimension {
            expected: m,
            got: g.modes(),
        });
    }
    let alpha: Vec<Complex64> = g.alpha().iter().cloned().collect();
    let alpha_plus: Vec<Complex64> = g.alpha_plus().iter().cloned().collect();
    if m == 1 {
        let (nb, xi, xi_plus) =
            kernel_factors_single_mode(g.n()[(0, 0)], g.m()[(0, 0)], g.m_plus()[(0, 0)])?;
        let squeeze = SqueezeSpec::new(
            CMatrix::from_element(1, 1, xi),
            CMatrix::from_element(1, 1, xi_plus),
        )
        .expect("1x1 matrices are symmetric");
        return build_factorized(space, g.omega(), &alpha, &alpha_plus, Some(&squeeze), &[nb]);
    }
    // multi-mode: diagonal thermal + displacement only
    let off_diag: f64 = (0..m)
        .flat_map(|i| (0..m).filter(move |j| *j != i).map(move |j| (i, j)))
        .map(|(i, j)| g.n()[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    if g.m().norm() > 1e-12 || g.m_plus().norm() > 1e-12 || off_diag > 1e-12 {
        return Err(FockError::UnsupportedParameterRegion(
            "multi-mode kernels support diagonal thermal and coherent data only".into(),
        ));
    }
    let nbar: Vec<Complex64> = (0..m).map(|k| g.n()[(k, k)]).collect();
    build_factorized(space, g.omega(), &alpha, &alpha_plus, None, &nbar)
}

/// Integrates the Lindblad master equation
/// `d rho/dt = -i[H, rho] + sum_K (2 O_K rho O_K^dag - [rho, O_K^dag O_K]_+)`
/// by adaptive Runge-Kutta on the dense matrix, with the default
/// edge-population monitor of [`DEFAULT_EDGE_TOL`].
pub fn evolve_lindblad(
    space: &FockSpace,
    spec: &LindbladSpec,
    rho0: &FockDensity,
    t: f64,
    opts: &OdeOptions,
) -> Result<FockDensity, FockError> {
    evolve_lindblad_monitored(space, spec, rho0, t, opts, DEFAULT_EDGE_TOL)
}

/// [`evolve_lindblad`] with an explicit ceiling on the edge-population
/// monitor, for runs whose target accuracy tolerates a larger truncation
/// tail.
pub fn evolve_lindblad_monitored(
    space: &FockSpace,
    spec: &LindbladSpec,
    rho0: &FockDensity,
    t: f64,
    opts: &OdeOptions,
    edge_tol: f64,
) -> Result<FockDensity, FockError> {
    if spec.modes() != space.modes() {
        return Err(FockError::Dimension {
            expected: space.modes(),
            got: spec.modes(),
        });
    }
    let dim = space.dim();
    let h = hamiltonian_matrix(space, spec)?;
    let mut channels = Vec::new();
    for op in spec.loss_ops() {
        let mut o = CMatrix::zeros(dim, dim);
        for i in 0..space.modes() {
            o += space.annihilation(i)? * op.o1[i].conj();
            o += space.creation(i)? * op.o2[i].conj();
        }
        let odag = o.adjoint();
        let odag_o = &odag * &o;
        channels.push((o, odag, odag_o));
    }

    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = move |_t: f64, y: &CVector| {
        let rho = CMatrix::from_column_slice(dim, dim, y.as_slice());
        let mut drho = (&h * &rho - &rho * &h) * minus_i;
        for (o, odag, odag_o) in &channels {
            drho += (o * &rho * odag) * cr(2.0);
            drho -= odag_o * &rho;
            drho -= &rho * odag_o;
        }
        CVector::from_column_slice(drho.as_slice())
    };

    let y0 = CVector::from_column_slice(rho0.matrix().as_slice());
    let tr0 = rho0.trace();
    let y = ode::integrate(&rhs, 0.0, t, y0, opts)?;
    let rho = CMatrix::from_column_slice(dim, dim, y.as_slice());

    let edge = space.edge_population(&rho);
    if edge > edge_tol {
        return Err(FockError::EdgePopulation {
            population: edge,
            tol: edge_tol,
        });
    }
    let drift = (rho.trace() - tr0).norm();
    if drift > 1e-8 * tr0.norm().max(1.0) {
        return Err(FockError::TraceDrift { drift });
    }
    Ok(FockDensity {
        rho,
        kind: rho0.kind(),
    })
}

/// `H = 2 sum H1_ij adag_i a_j + sum H2_ij adag_i adag_j
///  + sum conj(H2)_ij a_i a_j` as a dense matrix.
fn hamiltonian_matrix(space: &FockSpace, spec: &LindbladSpec) -> Result<CMatrix, FockError> {
    let dim = space.dim();
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..space.modes() {
        for j in 0..space.modes() {
            let h1 = spec.h1()[(i, j)];
            if h1.norm() > 0.0 {
                h += space.creation(i)? * space.annihilation(j)? * (h1 * cr(2.0));
            }
            let h2 = spec.h2()[(i, j)];
            if h2.norm() > 0.0 {
                h += space.creation(i)? * space.creation(j)? * h2;
                h += space.annihilation(i)? * space.annihilation(j)? * h2.conj();
            }
        }
    }
    Ok(h)
}

fn trace_product(rho: &CMatrix, op: &CMatrix) -> Complex64 {
    // Tr[rho op] without forming the product matrix
    let n = rho.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += rho[(i, k)] * op[(k, i)];
        }
    }
    acc
}

/// Normalized first and second moments `Tr[rho X] / Tr[rho]` in the same
/// layout as the Gaussian-side moments (`normal_a_adag[(i, j)] =
/// <adag_j a_i>`).
pub fn moments_fock(
    space: &FockSpace,
    rho: &FockDensity,
) -> Result<(FirstMoments, SecondMoments), FockError> {
    let tr = rho.trace();
    if tr.norm() < 1e-14 {
        return Err(FockError::ZeroTrace);
    }
    let m = space.modes();
    let mut first = FirstMoments {
        a: CVector::zeros(m),
        adag: CVector::zeros(m),
    };
    let mut second = SecondMoments {
        aa: CMatrix::zeros(m, m),
        normal_a_adag: CMatrix::zeros(m, m),
        adag_adag: CMatrix::zeros(m, m),
    };
    for i in 0..m {
        first.a[i] = trace_product(rho.matrix(), space.annihilation(i)?) / tr;
        first.adag[i] = trace_product(rho.matrix(), space.creation(i)?) / tr;
        for j in 0..m {
            let aa = space.annihilation(i)? * space.annihilation(j)?;
            let na = space.creation(j)? * space.annihilation(i)?;
            let dd = space.creation(i)? * space.creation(j)?;
            second.aa[(i, j)] = trace_product(rho.matrix(), &aa) / tr;
            second.normal_a_adag[(i, j)] = trace_product(rho.matrix(), &na) / tr;
            second.adag_adag[(i, j)] = trace_product(rho.matrix(), &dd) / tr;
        }
    }
    Ok((first, second))
}

/// Residuals of the four coherent-projector identities for the single-mode
/// kernel `Lambda(1, alpha, beta, 0, 0, 0)`:
/// `a L = alpha L`, `L adag = beta L`,
/// `adag L = (beta + d/d alpha) L`, `L a = (alpha + d/d beta) L`,
/// with central finite differences of step `h` for the derivatives.
#[derive(Debug, Clone)]
pub struct CoherentIdentityReport {
    pub annihilate_left: f64,
    pub create_right: f64,
    pub create_left: f64,
    pub annihilate_right: f64,
    pub h: f64,
}

impl CoherentIdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.annihilate_left
            .max(self.create_right)
            .max(self.create_left)
            .max(self.annihilate_right)
    }
}

pub fn verify_coherent_identities(
    space: &FockSpace,
    alpha: Complex64,
    beta: Complex64,
    h: f64,
) -> Result<CoherentIdentityReport, FockError> {
    if space.modes() != 1 {
        return Err(FockError::Dimension {
            expected: 1,
            got: space.modes(),
        });
    }
    let kernel = |a: Complex64, b: Complex64| -> Result<CMatrix, FockError> {
        Ok(build_factorized(space, cr(1.0), &[a], &[b], None, &[cr(0.0)])?
            .matrix()
            .clone())
    };
    let lam = kernel(alpha, beta)?;
    let a_op = space.annihilation(0)?;
    let adag_op = space.creation(0)?;

    let annihilate_left = (a_op * &lam - &lam * alpha).norm();
    let create_right = (&lam * adag_op - &lam * beta).norm();

    let dh = cr(h);
    let d_alpha = (kernel(alpha + dh, beta)? - kernel(alpha - dh, beta)?) / (cr(2.0) * dh);
    let create_left = (adag_op * &lam - &lam * beta - d_alpha).norm();

    let d_beta = (kernel(alpha, beta + dh)? - kernel(alpha, beta - dh)?) / (cr(2.0) * dh);
    let annihilate_right = (&lam * a_op - &lam * alpha - d_beta).norm();

    Ok(CoherentIdentityReport {
        annihilate_left,
        create_right,
        create_left,
        annihilate_right,
        h,
    })
}

/// Residuals of the four thermal-kernel identities for the single-mode
/// kernel `Lambda_th(nbar)`, using `d Lambda / d nbar` by central finite
/// differences:
/// `adag L a  = (1+n) L + (1+n)^2 L'`,
/// `a adag L  = (1+n) L + n (1+n) L'`,
/// `L a adag  = (1+n) L + n (1+n) L'`,
/// `a L adag  = n L + n^2 L'`.
#[derive(Debug, Clone)]
pub struct ThermalIdentityReport {
    pub normal: f64,
    pub left_antinormal: f64,
    pub right_antinormal: f64,
    pub full_antinormal: f64,
    pub h: f64,
}

impl ThermalIdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.normal
            .max(self.left_antinormal)
            .max(self.right_antinormal)
            .max(self.full_antinormal)
    }
}

pub fn verify_thermal_identities(
    space: &FockSpace,
    nbar: Complex64,
    h: f64,
) -> Result<ThermalIdentityReport, FockError> {
    if space.modes() != 1 {
        return Err(FockError::Dimension {
            expected: 1,
            got: space.modes(),
        });
    }
    if nbar.re <= 0.0 {
        return Err(FockError::InvalidThermalParameter(nbar));
    }
    let kernel = |nb: Complex64| -> CMatrix { thermal_kernel_matrix(space, cr(1.0), &[nb]) };
    let lam = kernel(nbar);
    let dh = cr(h);
    let lam_d = (kernel(nbar + dh) - kernel(nbar - dh)) / (cr(2.0) * dh);
    let a_op = space.annihilation(0)?;
    let adag_op = space.creation(0)?;
    let one = cr(1.0);

    let normal = (adag_op * &lam * a_op
        - &lam * (one + nbar)
        - &lam_d * ((one + nbar) * (one + nbar)))
        .norm();
    let left_antinormal = (a_op * adag_op * &lam
        - &lam * (one + nbar)
        - &lam_d * (nbar * (one + nbar)))
        .norm();
    let right_antinormal = (&lam * a_op * adag_op
        - &lam * (one + nbar)
        - &lam_d * (nbar * (one + nbar)))
        .norm();
    let full_antinormal = (a_op * &lam * adag_op - &lam * nbar - &lam_d * (nbar * nbar)).norm();

    Ok(ThermalIdentityReport {
        normal,
        left_antinormal,
        right_antinormal,
        full_antinormal,
        h,
    })
}

/// Numeric and analytic values of the single-mode Gaussian normalization
/// integral `int d^2 z exp(-dz+ sigma^{-1} dz / 2)` with independent
/// offsets, against the closed form `pi sqrt(det sigma)`.
#[derive(Debug, Clone)]
pub struct GaussianIntegralCheck {
    pub numeric: Complex64,
    pub analytic: Complex64,
    pub relative_deviation: f64,
    /// Difference between the fine and coarse quadrature passes.
    pub quadrature_estimate: f64,
}

pub fn verify_gaussian_integral(
    sigma: &CMatrix,
    alpha: Complex64,
    alpha_plus: Complex64,
) -> Result<GaussianIntegralCheck, FockError> {
    if sigma.nrows() != 2 || sigma.ncols() != 2 {
        return Err(FockError::Dimension {
            expected: 2,
            got: sigma.nrows().max(sigma.ncols()),
        });
    }
    for eig in linalg::eigenvalues(sigma)? {
        if eig.re <= 0.0 {
            return Err(FockError::ValidityCondition(eig));
        }
    }
    let s_inv = linalg::inverse(sigma)?;
    let integrand = move |x: f64, y: f64| -> Complex64 {
        let z = Complex64::new(x, y);
        let dz = z - alpha;
        let dzp = z.conj() - alpha_plus;
        let q = dzp * (s_inv[(0, 0)] * dz + s_inv[(0, 1)] * dzp)
            + dz * (s_inv[(1, 0)] * dz + s_inv[(1, 1)] * dzp);
        (-q / cr(2.0)).exp()
    };
    let half_width =
        12.0 * sigma.norm().max(1.0).sqrt() + 3.0 * (alpha.norm() + alpha_plus.norm());
    let coarse = gauss_legendre_2d(&integrand, half_width, 16);
    let fine = gauss_legendre_2d(&integrand, half_width, 28);

    let analytic = linalg::det(sigma)?.sqrt() * cr(PI);
    let relative_deviation = (fine - analytic).norm() / analytic.norm().max(1e-300);
    Ok(GaussianIntegralCheck {
        numeric: fine,
        analytic,
        relative_deviation,
        quadrature_estimate: (fine - coarse).norm(),
    })
}

// 10-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.148874338981631211,
    0.433395394129247191,
    0.679409568299024406,
    0.865063366688984511,
    0.973906528517171720,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295524224714752870,
    0.269266719309996355,
    0.219086362515982044,
    0.149451349150580593,
    0.066671344308688138,
];

fn gauss_legendre_2d<F>(f: &F, half_width: f64, panels: usize) -> Complex64
where
    F: Fn(f64, f64) -> Complex64,
{
    let step = 2.0 * half_width / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 10);
    for p in 0..panels {
        let center = -half_width + (p as f64 + 0.5) * step;
        for i in 0..5 {
            let dx = 0.5 * step * GL_NODES[i];
            let w = 0.5 * step * GL_WEIGHTS[i];
            nodes.push((center - dx, w));
            nodes.push((center + dx, w));
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x, wx) in &nodes {
        let mut row = Complex64::new(0.0, 0.0);
        for &(y, wy) in &nodes {
            row += f(x, y) * cr(wy);
        }
        acc += row * cr(wx);
    }
    acc
}

/// Brute-force canonical partition data for diagonal modes: the truncated
/// trace `prod_k sum_n e^{-omega_k tau n}` and per-mode occupations
/// `sum_n n e^{-omega_k tau n} / sum_n e^{-omega_k tau n}`.
pub fn thermal_trace_oracle(omega: &[f64], tau: f64, nmax: usize) -> (f64, Vec<f64>) {
    let mut trace = 1.0;
    let mut nbars = Vec::with_capacity(omega.len());
    for &w in omega {
        let q = (-w * tau).exp();
        let mut z = 0.0;
        let mut zn = 0.0;
        let mut qk = 1.0;
        for n in 0..=nmax {
            z += qk;
            zn += n as f64 * qk;
            qk *= q;
        }
        trace *= z;
        nbars.push(zn / z);
    }
    (trace, nbars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ladder_commutator_up_to_edge() {
        let space = FockSpace::new(1, 12);
        let comm = space.annihilation(0).unwrap() * space.creation(0).unwrap()
            - space.creation(0).unwrap() * space.annihilation(0).unwrap();
        for k in 0..space.nmax() {
            assert!((comm[(k, k)] - cr(1.0)).norm() < 1e-14);
        }
        // the edge row carries the truncation artifact
        assert!((comm[(space.nmax(), space.nmax())] - cr(-(space.nmax() as f64))).norm() < 1e-12);
    }

    #[test]
    fn two_mode_operators_commute_across_modes() {
        let space = FockSpace::new(2, 4);
        let a0 = space.annihilation(0).unwrap();
        let a1dag = space.creation(1).unwrap();
        assert!((a0 * a1dag - a1dag * a0).norm() < 1e-14);
    }

    #[test]
    fn vacuum_state_is_ground_projector() {
        let space = FockSpace::new(1, 8);
        let v = vacuum_state(&space);
        assert!((v.matrix()[(0, 0)] - cr(1.0)).norm() < 1e-15);
        assert!((v.trace() - cr(1.0)).norm() < 1e-15);
    }

    #[test]
    fn coherent_state_moments() {
        let space = FockSpace::new(1, 30);
        let alpha = c(0.6, -0.3);
        let rho = coherent_state(&space, &[alpha]).unwrap();
        let (first, second) = moments_fock(&space, &rho).unwrap();
        assert!((first.a[0] - alpha).norm() < 1e-10);
        assert!((second.normal_a_adag[(0, 0)] - cr(alpha.norm_sqr())).norm() < 1e-10);
    }

    #[test]
    fn thermal_state_diagonal_is_binomial() {
        let space = FockSpace::new(1, 80);
        let rho = thermal_state(&space, &[2.0]).unwrap();
        for k in [0usize, 1, 5, 10] {
            let expected = (1.0 / 3.0) * (2.0_f64 / 3.0).powi(k as i32);
            assert!(
                (rho.matrix()[(k, k)] - cr(expected)).norm() < 1e-10,
                "level {k}"
            );
        }
        let (_, second) = moments_fock(&space, &rho).unwrap();
        assert!((second.normal_a_adag[(0, 0)] - cr(2.0)).norm() < 1e-8);
    }

    #[test]
    fn thermal_state_reports_insufficient_truncation() {
        // nbar = 2 at nmax = 60 leaves an edge tail just above 1e-12
        let space = FockSpace::new(1, 60);
        assert!(matches!(
            thermal_state(&space, &[2.0]),
            Err(FockError::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn squeezed_state_occupation_is_sinh_squared() {
        let space = FockSpace::new(1, 40);
        let r = 0.5;
        let xi = CMatrix::from_element(1, 1, cr(r));
        let rho = displaced_squeezed_thermal_state(&space, &[cr(0.0)], &xi, &[0.0]).unwrap();
        let (_, second) = moments_fock(&space, &rho).unwrap();
        assert!(
            (second.normal_a_adag[(0, 0)] - cr(r.sinh().powi(2))).norm() < 1e-8,
            "got {}",
            second.normal_a_adag[(0, 0)]
        );
    }

    #[test]
    fn kernel_trace_equals_weight() {
        let space = FockSpace::new(1, 30);
        let g = factory::coherent_projector(
            c(0.7, 0.2),
            CVector::from_vec(vec![c(0.4, 0.1)]),
            CVector::from_vec(vec![c(0.2, -0.3)]),
        )
        .unwrap();
        let k = build_kernel(&space, &g).unwrap();
        assert!((k.trace() - c(0.7, 0.2)).norm() < 1e-8);
    }

    #[test]
    fn thermal_kernel_matches_complex_phi_matrix_elements() {
        let space = FockSpace::new(1, 40);
        let phi = c(1.0, PI / 2.0);
        let spec = factory::ThermalSpec::from_phi(&[phi]);
        let g = factory::thermal(cr(1.0), &spec);
        let k = build_kernel(&space, &g).unwrap();
        for n in [0usize, 1, 3, 7] {
            let expected = (cr(1.0) - (-phi).exp()) * (-phi * cr(n as f64)).exp();
            assert!((k.matrix()[(n, n)] - expected).norm() < 1e-12, "level {n}");
        }
    }

    #[test]
    fn squeezed_kernel_moments_match_gaussian_blocks() {
        let space = FockSpace::new(1, 50);
        let g = factory::squeezed_vacuum(
            CVector::zeros(1),
            CVector::zeros(1),
            &factory::SqueezeSpec::scalar(0.5),
        )
        .unwrap();
        let k = build_kernel(&space, &g).unwrap();
        let (_, second) = moments_fock(&space, &k).unwrap();
        let s = g.second_moments();
        assert!((second.normal_a_adag[(0, 0)] - s.normal_a_adag[(0, 0)]).norm() < 1e-8);
        assert!((second.aa[(0, 0)] - s.aa[(0, 0)]).norm() < 1e-8);
    }

    #[test]
    fn lindblad_decay_of_coherent_state() {
        let space = FockSpace::new(1, 20);
        let gamma = 0.8;
        let spec = LindbladSpec::lossy_trap(
            &CMatrix::zeros(1, 1),
            &CMatrix::from_element(1, 1, cr(gamma)),
        )
        .unwrap();
        let rho0 = coherent_state(&space, &[cr(1.0)]).unwrap();
        let t = 1.2;
        let rho = evolve_lindblad(&space, &spec, &rho0, t, &OdeOptions::default()).unwrap();
        let (first, _) = moments_fock(&space, &rho).unwrap();
        let expected = cr((-gamma * t / 2.0).exp());
        assert!(
            (first.a[0] - expected).norm() < 1e-7,
            "got {}, expected {}",
            first.a[0],
            expected
        );
    }

    #[test]
    fn hamiltonian_only_leaves_thermal_stationary() {
        let space = FockSpace::new(1, 60);
        let spec = LindbladSpec::new(
            CMatrix::from_element(1, 1, cr(0.7)),
            CMatrix::zeros(1, 1),
            Vec::new(),
        )
        .unwrap();
        let rho0 = thermal_state(&space, &[1.5]).unwrap();
        let rho = evolve_lindblad(&space, &spec, &rho0, 2.0, &OdeOptions::default()).unwrap();
        assert!((rho.matrix() - rho0.matrix()).norm() < 1e-8);
    }

    #[test]
    fn coherent_identities_at_origin_are_exact() {
        let space = FockSpace::new(1, 25);
        let report = verify_coherent_identities(&space, cr(0.0), cr(0.0), 1e-5).unwrap();
        assert!(report.annihilate_left < 1e-12);
        assert!(report.create_right < 1e-12);
    }

    #[test]
    fn coherent_identities_generic_parameters() {
        let space = FockSpace::new(1, 30);
        let report = verify_coherent_identities(&space, cr(0.7), cr(0.2), 1e-5).unwrap();
        assert!(report.max_residual() < 1e-6, "residuals {:?}", report);
        let hermitian =
            verify_coherent_identities(&space, c(0.5, 0.3), c(0.5, -0.3), 1e-5).unwrap();
        assert!(hermitian.max_residual() < 1e-6);
    }

    #[test]
    fn coherent_identities_second_order_refinement() {
        let space = FockSpace::new(1, 30);
        let coarse = verify_coherent_identities(&space, cr(0.7), cr(0.2), 1e-4)
            .unwrap()
            .create_left;
        let fine = verify_coherent_identities(&space, cr(0.7), cr(0.2), 1e-5)
            .unwrap()
            .create_left;
        assert!(
            fine < coarse / 20.0,
            "expected O(h^2) refinement, got {coarse:.3e} -> {fine:.3e}"
        );
    }

    #[test]
    fn thermal_identities_real_and_continued() {
        let space = FockSpace::new(1, 60);
        let real = verify_thermal_identities(&space, cr(1.0), 1e-5).unwrap();
        assert!(real.max_residual() < 1e-6, "residuals {:?}", real);
        let continued = verify_thermal_identities(&space, c(2.0, 0.5), 1e-5).unwrap();
        assert!(continued.max_residual() < 1e-6, "residuals {:?}", continued);
    }

    #[test]
    fn thermal_identities_small_occupation_degenerates_smoothly() {
        let space = FockSpace::new(1, 30);
        let report = verify_thermal_identities(&space, cr(1e-3), 1e-6).unwrap();
        assert!(report.full_antinormal < 1e-6);
        // the antinormal bracket itself vanishes with nbar
        let lam = thermal_kernel_matrix(&space, cr(1.0), &[cr(1e-3)]);
        let lhs = space.annihilation(0).unwrap() * &lam * space.creation(0).unwrap();
        assert!(lhs.norm() < 2e-3);
    }

    #[test]
    fn thermal_identities_reject_nonpositive_real_part() {
        let space = FockSpace::new(1, 10);
        assert!(matches!(
            verify_thermal_identities(&space, c(-0.2, 0.1), 1e-5),
            Err(FockError::InvalidThermalParameter(_))
        ));
    }

    #[test]
    fn gaussian_integral_identity_covariance() {
        let sigma = CMatrix::identity(2, 2);
        let check = verify_gaussian_integral(&sigma, cr(0.0), cr(0.0)).unwrap();
        assert!((check.numeric - cr(PI)).norm() < 1e-10);
    }

    #[test]
    fn gaussian_integral_thermal_covariance() {
        // n = 0.5, m = m+ = 0: I = pi * 1.5
        let sigma = CMatrix::from_row_slice(2, 2, &[cr(1.5), cr(0.0), cr(0.0), cr(1.5)]);
        let check = verify_gaussian_integral(&sigma, cr(0.0), cr(0.0)).unwrap();
        assert!(check.relative_deviation < 1e-10);
        assert!((check.analytic - cr(PI * 1.5)).norm() < 1e-12);
    }

    #[test]
    fn gaussian_integral_non_conjugate_offsets() {
        // n = 0.3, m = 0.2, m+ = 0.1i with offsets alpha = 0.4, alpha+ = 0.1
        let sigma = CMatrix::from_row_slice(2, 2, &[cr(1.3), c(0.2, 0.0), c(0.0, 0.1), cr(1.3)]);
        let check = verify_gaussian_integral(&sigma, cr(0.4), cr(0.1)).unwrap();
        assert!(
            check.relative_deviation < 1e-3,
            "deviation {:.3e}",
            check.relative_deviation
        );
    }

    #[test]
    fn gaussian_integral_rejects_invalid_sigma() {
        let sigma = CMatrix::from_row_slice(2, 2, &[cr(-1.0), cr(0.0), cr(0.0), cr(1.0)]);
        assert!(matches!(
            verify_gaussian_integral(&sigma, cr(0.0), cr(0.0)),
            Err(FockError::ValidityCondition(_))
        ));
    }

    #[test]
    fn thermal_trace_oracle_geometric() {
        let (tr, nb) = thermal_trace_oracle(&[1.0], 1.0, 400);
        assert!((tr - 1.0 / (1.0 - (-1.0_f64).exp())).abs() < 1e-10);
        assert!((nb[0] - 1.0 / ((1.0_f64).exp() - 1.0)).abs() < 1e-10);
    }
}
