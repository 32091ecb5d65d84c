//! Adaptive Dormand-Prince 5(4) integration of complex-valued linear ODE
//! systems. The phase-space drift equations and the Fock-space master
//! equations are both flattened onto complex state vectors and share this
//! stepper.

use thiserror::Error;

use crate::linalg::CVector;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exceeded")]
    TooManySteps(usize),
    #[error("non-finite state encountered at t = {t:.6e}")]
    NonFinite { t: f64 },
}

/// Tolerances and limits for the adaptive stepper.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 4th-order embedded weights.
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`, returning `y(t1)`.
pub fn integrate<F>(
    f: &F,
    t0: f64,
    t1: f64,
    y0: CVector,
    opts: &OdeOptions,
) -> Result<CVector, OdeError>
where
    F: Fn(f64, &CVector) -> CVector,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = (span.abs() / 100.0).min(0.1).max(1e-8) * dir;
    let h_floor = span.abs() * 1e-14;

    for _ in 0..opts.max_steps {
        if (t - t1) * dir >= 0.0 {
            return Ok(y);
        }
        if ((t + h) - t1) * dir > 0.0 {
            h = t1 - t;
        }

        let k2 = f(t + A21 * h, &(&y + &k1 * cpx(A21 * h)));
        let k3 = f(
            t + 0.3 * h,
            &(&y + &k1 * cpx(A31 * h) + &k2 * cpx(A32 * h)),
        );
        let k4 = f(
            t + 0.8 * h,
            &(&y + &k1 * cpx(A41 * h) + &k2 * cpx(A42 * h) + &k3 * cpx(A43 * h)),
        );
        let k5 = f(
            t + 8.0 / 9.0 * h,
            &(&y + &k1 * cpx(A51 * h) + &k2 * cpx(A52 * h) + &k3 * cpx(A53 * h)
                + &k4 * cpx(A54 * h)),
        );
        let k6 = f(
            t + h,
            &(&y + &k1 * cpx(A61 * h)
                + &k2 * cpx(A62 * h)
                + &k3 * cpx(A63 * h)
                + &k4 * cpx(A64 * h)
                + &k5 * cpx(A65 * h)),
        );
        let y5 = &y
            + &k1 * cpx(B1 * h)
            + &k3 * cpx(B3 * h)
            + &k4 * cpx(B4 * h)
            + &k5 * cpx(B5 * h)
            + &k6 * cpx(B6 * h);
        let k7 = f(t + h, &y5);
        let y4 = &y
            + &k1 * cpx(E1 * h)
            + &k3 * cpx(E3 * h)
            + &k4 * cpx(E4 * h)
            + &k5 * cpx(E5 * h)
            + &k6 * cpx(E6 * h)
            + &k7 * cpx(E7 * h);

        // weighted RMS error over real and imaginary parts
        let n = y.len();
        let mut err_sq = 0.0;
        for i in 0..n {
            let scale = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
            let d = (y5[i] - y4[i]).norm();
            err_sq += (d / scale) * (d / scale);
        }
        let err = (err_sq / n as f64).sqrt();

        if !err.is_finite() {
            return Err(OdeError::NonFinite { t });
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            k1 = k7; // first-same-as-last
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < h_floor {
            return Err(OdeError::StepSizeUnderflow { t, h });
        }
    }
    Err(OdeError::TooManySteps(opts.max_steps))
}

#[inline]
fn cpx(x: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn scalar_exponential_decay() {
        let f = |_t: f64, y: &CVector| y * cpx(-2.0);
        let y0 = CVector::from_vec(vec![Complex64::new(1.0, 0.5)]);
        let y = integrate(&f, 0.0, 3.0, y0, &OdeOptions::default()).unwrap();
        let expect = Complex64::new(1.0, 0.5) * cpx((-6.0_f64).exp());
        assert!((y[0] - expect).norm() < 1e-10);
    }

    #[test]
    fn oscillator_phase() {
        // dy/dt = i w y
        let w = 1.7;
        let f = move |_t: f64, y: &CVector| y * Complex64::new(0.0, w);
        let y0 = CVector::from_vec(vec![Complex64::new(1.0, 0.0)]);
        let y = integrate(&f, 0.0, 5.0, y0, &OdeOptions::default()).unwrap();
        let expect = Complex64::new(0.0, w * 5.0).exp();
        assert!((y[0] - expect).norm() < 1e-9);
    }

    #[test]
    fn zero_span_is_identity() {
        let f = |_t: f64, y: &CVector| y.clone();
        let y0 = CVector::from_vec(vec![Complex64::new(2.0, -1.0)]);
        let y = integrate(&f, 1.0, 1.0, y0.clone(), &OdeOptions::default()).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn riccati_against_closed_form() {
        // dn/dt = -w n (1 + n), the imaginary-time characteristic
        let w = 1.3;
        let f = move |_t: f64, y: &CVector| {
            let n = y[0];
            CVector::from_vec(vec![-cpx(w) * n * (cpx(1.0) + n)])
        };
        let tau0 = 0.05;
        let n0 = 1.0 / ((w * tau0).exp() - 1.0);
        let y = integrate(
            &f,
            tau0,
            2.0,
            CVector::from_vec(vec![cpx(n0)]),
            &OdeOptions::default(),
        )
        .unwrap();
        let expect = 1.0 / ((w * 2.0_f64).exp() - 1.0);
        assert!((y[0].re - expect).abs() < 1e-10);
    }
}
