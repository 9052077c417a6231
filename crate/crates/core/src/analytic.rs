//! Entire functions of γ² = μ² − ω² shared by every propagator.
//!
//! Both damping regimes are evaluated with the complex principal root γ;
//! cosh(γt) and sinh(γt)/γ are even in γ, so the results are real and the
//! critical point γ = 0 is a removable singularity. Near it sinh(γt)/γ is
//! replaced by its Taylor polynomial.

use num_complex::Complex64;

/// Below this |γt| the Taylor polynomial is used for sinh(γt)/γ.
const TAYLOR_CUTOFF: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Hyperbolic {
    gamma: Complex64,
}

impl Hyperbolic {
    pub fn new(gamma_sq: f64) -> Self {
        Self {
            gamma: Complex64::new(gamma_sq, 0.0).sqrt(),
        }
    }

    /// cosh(γt)
    pub fn cosh(&self, t: f64) -> f64 {
        (self.gamma * t).cosh().re
    }

    /// sinh(γt)/γ
    pub fn sinhc(&self, t: f64) -> f64 {
        let z = self.gamma * t;
        if z.norm() < TAYLOR_CUTOFF {
            let z2 = (z * z).re;
            t * (1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0)))
        } else {
            (z.sinh() / self.gamma).re
        }
    }

    /// (cosh(γt) − 1)/γ² = 2 (sinh(γt/2)/γ)²
    pub fn coshm1c(&self, t: f64) -> f64 {
        let s = self.sinhc(0.5 * t);
        2.0 * s * s
    }

    /// e^{−λt}·(cosh, sinhc, coshm1c) at t. For real γ the exponentials are
    /// combined before evaluation so that a decaying product does not
    /// overflow to ∞·0 at long times.
    pub fn damped(&self, lambda: f64, t: f64) -> (f64, f64, f64) {
        let g = self.gamma.re;
        if self.gamma.im == 0.0 && g * t > 1.0 {
            let a = ((g - lambda) * t).exp();
            let b = (-(g + lambda) * t).exp();
            let c = 0.5 * (a + b);
            (c, 0.5 * (a - b) / g, (c - (-lambda * t).exp()) / (g * g))
        } else {
            let e = (-lambda * t).exp();
            (e * self.cosh(t), e * self.sinhc(t), e * self.coshm1c(t))
        }
    }
}

/// e^{Kt}·d for the three-component system with drift
///
/// ```text
/// K = [[−2λ, −2ω, −μ], [2ω, −2λ, 0], [−4μ, 0, −2λ]]
/// ```
///
/// shared by the Gaussian widths of the characteristic function and the
/// generating-function coefficients.
pub(crate) fn coupled_relaxation(lambda: f64, omega: f64, mu: f64, d: [f64; 3], t: f64) -> [f64; 3] {
    let hy = Hyperbolic::new(mu * mu - omega * omega);
    let (c, s, k) = hy.damped(lambda, 2.0 * t);
    let e = (-2.0 * lambda * t).exp();
    let [r, i, f] = d;
    [
        c * r - s * (omega * i + 0.5 * mu * f),
        omega * s * r + (e - omega * omega * k) * i - 0.5 * omega * mu * k * f,
        -2.0 * mu * s * r + 2.0 * omega * mu * k * i + (e + mu * mu * k) * f,
    ]
}

/// Classical fourth-order Runge–Kutta with a fixed step for small real
/// systems; the step is shrunk so that an integer number of steps lands
/// exactly on `t`.
pub(crate) fn rk4<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    y0: [f64; N],
    t: f64,
    max_step: f64,
) -> [f64; N] {
    if t <= 0.0 {
        return y0;
    }
    let n = (t / max_step).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let axpy = |y: &[f64; N], k: &[f64; N], a: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += a * k[i];
        }
        out
    };
    let mut y = y0;
    for _ in 0..n {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, 0.5 * h));
        let k3 = f(&axpy(&y, &k2, 0.5 * h));
        let k4 = f(&axpy(&y, &k3, h));
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}
