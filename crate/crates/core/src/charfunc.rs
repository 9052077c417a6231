//! Normally ordered characteristic function χ(Λ, t) = Tr[ρ(t) e^{Λa†} e^{−Λ*a}]
//! for an oscillator prepared in a coherent state |α₀⟩.
//!
//! The Gaussian ansatz χ = exp(cΛ − c*Λ* + fΛ² + f*Λ*² + h|Λ|²) reduces the
//! evolution to the mean amplitude c = ⟨a†⟩ = uα₀* − vα₀ and the widths
//! f = R + iI, h, which relax towards constants fixed by the diffusion
//! coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{coupled_relaxation, rk4, Hyperbolic};
use crate::error::Result;
use crate::moments::{CovarianceTriple, FirstMoments};
use crate::params::{derived_coefficients, OscillatorParams};

/// Relative distance of γ from 0 and of λ from 0, ±γ below which the
/// exponential-sum form of the widths (whose constants carry 1/γ², 1/λ and
/// 1/(λ ∓ γ)) is abandoned in favour of the entire-function propagator.
const SEPARATION_TOL: f64 = 1e-3;
/// Relative band around λ = 0 and λ² = γ² where no fixed point is used.
const SINGULAR_TOL: f64 = 1e-9;

/// u(t), v(t) with ⟨a†(t)⟩ = u α₀* − v α₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorPair {
    pub u: Complex64,
    pub v: Complex64,
}

/// The Gaussian widths f(t) (complex) and h(t) (real).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharWidths {
    pub f: Complex64,
    pub h: f64,
}

/// Amplitudes of the decaying exponentials in f(t), h(t) and their limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharConstants {
    pub big_m: f64,
    pub big_n: Complex64,
    pub big_p: Complex64,
    pub r_inf: f64,
    pub i_inf: f64,
    pub h_inf: f64,
}

pub fn propagator_uv(p: &OscillatorParams, t: f64) -> PropagatorPair {
    let (c, s, _) = Hyperbolic::new(p.gamma_sq()).damped(p.lambda, t);
    PropagatorPair {
        u: Complex64::new(c, p.omega * s),
        v: Complex64::new(-p.mu * s, 0.0),
    }
}

/// ⟨a†(t)⟩ for the coherent initial state |α₀⟩.
pub fn mean_creation(p: &OscillatorParams, alpha0: Complex64, t: f64) -> Complex64 {
    let uv = propagator_uv(p, t);
    uv.u * alpha0.conj() - uv.v * alpha0
}

/// Inhomogeneous terms of the width equations:
/// R' = −2λR − 2ωI − μh + Re C, I' = 2ωR − 2λI + Im C, h' = −4μR − 2λh + L.
fn width_source(p: &OscillatorParams) -> [f64; 3] {
    let d = derived_coefficients(p);
    [d.c.re, d.c.im, d.ell]
}

fn fixed_point_is_singular(p: &OscillatorParams) -> bool {
    let scale = p.lambda.abs().max(p.omega).max(p.mu.abs());
    p.lambda.abs() <= SINGULAR_TOL * scale || p.stability_margin().abs() <= SINGULAR_TOL * scale * scale
}

/// The constants of the closed-form widths. They are finite whenever
/// λ ≠ 0, λ² ≠ γ² and γ ≠ 0.
pub fn char_constants(p: &OscillatorParams) -> CharConstants {
    let d = derived_coefficients(p);
    let (l, w, mu) = (p.lambda, p.omega, p.mu);
    let (cr, ci, ell) = (d.c.re, d.c.im, d.ell);
    let g = d.gamma;
    let g2 = d.nu_sq;
    let den = l * l - g2;
    CharConstants {
        big_m: w / (l * g2) * (mu * ci + 0.5 * w * ell),
        big_n: mu / (2.0 * g2 * (l - g)) * (g * cr - w * ci - 0.5 * mu * ell),
        big_p: -mu / (2.0 * g2 * (l + g)) * (g * cr + w * ci + 0.5 * mu * ell),
        r_inf: (2.0 * (l * cr - w * ci) - ell * mu) / (4.0 * den),
        i_inf: (2.0 * w * l * cr + 2.0 * (l * l - mu * mu) * ci - ell * mu * w) / (4.0 * l * den),
        h_inf: (ell * (l * l + w * w) - 2.0 * mu * (l * cr - w * ci)) / (2.0 * l * den),
    }
}

fn widths_from_exponentials(p: &OscillatorParams, t: f64) -> CharWidths {
    let d = derived_coefficients(p);
    let k = char_constants(p);
    let (l, w, mu) = (p.lambda, p.omega, p.mu);
    let g = d.gamma;
    let g2 = d.nu_sq;
    let (cr, ci, ell) = (d.c.re, d.c.im, d.ell);
    // N/μ and P/μ written out so that μ = 0 is not a removable 0/0.
    let n_mu = (g * cr - w * ci - 0.5 * mu * ell) / (2.0 * g2 * (l - g));
    let p_mu = -(g * cr + w * ci + 0.5 * mu * ell) / (2.0 * g2 * (l + g));
    let e_plus = (-2.0 * (l + g) * t).exp();
    let e_minus = (-2.0 * (l - g) * t).exp();
    let e_l = (-2.0 * l * t).exp();
    let i = Complex64::i();
    let f = 0.5 * p_mu * e_plus * (g - i * w) - 0.5 * n_mu * e_minus * (g + i * w)
        - i * (mu * k.big_m / (2.0 * w) * e_l)
        + Complex64::new(k.r_inf, k.i_inf);
    let h = k.big_m * e_l + k.big_n * e_minus + k.big_p * e_plus + k.h_inf;
    CharWidths { f, h: h.re }
}

fn widths_numerically(p: &OscillatorParams, t: f64) -> CharWidths {
    let [cr, ci, ell] = width_source(p);
    let (l, w, mu) = (p.lambda, p.omega, p.mu);
    let y = rk4(
        |y: &[f64; 3]| {
            [
                -2.0 * l * y[0] - 2.0 * w * y[1] - mu * y[2] + cr,
                2.0 * w * y[0] - 2.0 * l * y[1] + ci,
                -4.0 * mu * y[0] - 2.0 * l * y[2] + ell,
            ]
        },
        [0.0; 3],
        t,
        1e-3f64.min(1e-3 / w),
    );
    CharWidths {
        f: Complex64::new(y[0], y[1]),
        h: y[2],
    }
}

/// f(t) and h(t), starting from f(0) = h(0) = 0.
///
/// Uses the sum-of-exponentials form away from critical damping, the
/// entire-function propagator near it, and RK4 on the width equations when
/// the drift has a zero eigenvalue.
pub fn char_widths(p: &OscillatorParams, t: f64) -> CharWidths {
    if t == 0.0 {
        return CharWidths {
            f: Complex64::new(0.0, 0.0),
            h: 0.0,
        };
    }
    if fixed_point_is_singular(p) {
        return widths_numerically(p, t);
    }
    if exponentials_well_separated(p) {
        return widths_from_exponentials(p, t);
    }
    let k = char_constants_entire(p);
    let d = coupled_relaxation(p.lambda, p.omega, p.mu, [-k[0], -k[1], -k[2]], t);
    CharWidths {
        f: Complex64::new(d[0] + k[0], d[1] + k[1]),
        h: d[2] + k[2],
    }
}

fn exponentials_well_separated(p: &OscillatorParams) -> bool {
    let scale = p.lambda.abs().max(p.omega).max(p.mu.abs());
    let g = Complex64::new(p.gamma_sq(), 0.0).sqrt();
    let tol = SEPARATION_TOL * scale;
    p.lambda > tol && g.norm() > tol && (p.lambda - g).norm() > tol && (p.lambda + g).norm() > tol
}

/// (R(∞), I(∞), h(∞)) without the γ² denominators of [`char_constants`].
fn char_constants_entire(p: &OscillatorParams) -> [f64; 3] {
    let k = char_constants(p);
    [k.r_inf, k.i_inf, k.h_inf]
}

/// Asymptotic widths; requires a steady state.
pub fn asymptotic_widths(p: &OscillatorParams) -> Result<CharWidths> {
    p.require_steady_state()?;
    let k = char_constants(p);
    Ok(CharWidths {
        f: Complex64::new(k.r_inf, k.i_inf),
        h: k.h_inf,
    })
}

/// χ(Λ, t) for the coherent initial state |α₀⟩.
pub fn evaluate_char(p: &OscillatorParams, alpha0: Complex64, lambda_arg: Complex64, t: f64) -> Complex64 {
    let c = mean_creation(p, alpha0, t);
    let w = char_widths(p, t);
    let l = lambda_arg;
    (c * l - c.conj() * l.conj() + w.f * l * l + w.f.conj() * l.conj() * l.conj() + w.h * l.norm_sqr()).exp()
}

/// Phase-space moments from ⟨a†⟩ = c and the widths:
/// ⟨a†²⟩ − c² = 2f, ⟨a†a⟩ − |c|² = −h.
pub fn moments_from_amplitudes(
    p: &OscillatorParams,
    c: Complex64,
    w: CharWidths,
) -> (FirstMoments, CovarianceTriple) {
    let mw = p.m_omega();
    let first = FirstMoments {
        sigma_q: (2.0 * p.hbar / mw).sqrt() * c.re,
        sigma_p: -(2.0 * p.hbar * mw).sqrt() * c.im,
    };
    let cov = CovarianceTriple {
        sigma_qq: p.hbar / mw * (2.0 * w.f.re - w.h + 0.5),
        sigma_pp: -p.hbar * mw * (2.0 * w.f.re + w.h - 0.5),
        sigma_pq: -2.0 * p.hbar * w.f.im,
    };
    (first, cov)
}

/// Moments at time `t` obtained from the characteristic function.
pub fn moments_from_char(
    p: &OscillatorParams,
    alpha0: Complex64,
    t: f64,
) -> (FirstMoments, CovarianceTriple) {
    moments_from_amplitudes(p, mean_creation(p, alpha0, t), char_widths(p, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{asymptotic_covariances, evolve_covariances, evolve_first_moments};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn initial_values() {
        let p = OscillatorParams::unit(0.3, 0.4, 0.2, 0.3, 0.0);
        let uv = propagator_uv(&p, 0.0);
        assert_eq!(uv.u, c(1.0, 0.0));
        assert_eq!(uv.v.norm(), 0.0);
        let w = char_widths(&p, 0.0);
        assert_eq!((w.f, w.h), (c(0.0, 0.0), 0.0));
    }

    #[test]
    fn zero_asymmetry_has_no_mixing() {
        let p = OscillatorParams::unit(0.3, 0.0, 0.2, 0.3, 0.0);
        for t in [0.3, 1.0, 4.0] {
            let uv = propagator_uv(&p, t);
            assert_eq!(uv.v.norm(), 0.0);
            assert_relative_eq!(uv.u.norm(), (-0.3 * t).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn normalisation_and_coherent_start() {
        let p = OscillatorParams::gibbs(1.0, 1.0, 1.0, 0.3, 0.1, 2.0).unwrap();
        let a = c(0.5, 0.3);
        assert_eq!(evaluate_char(&p, a, c(0.0, 0.0), 1.2), c(1.0, 0.0));
        let l = c(0.2, -0.1);
        let expect = (a.conj() * l - a * l.conj()).exp();
        assert!((evaluate_char(&p, a, l, 0.0) - expect).norm() < 1e-15);
    }

    #[test]
    fn coherent_moments_at_start() {
        let p = OscillatorParams::new(1.5, 0.8, 1.0, 0.3, 0.1, 0.2, 0.3, 0.0).unwrap();
        let a = c(0.7, -0.2);
        let (f, cov) = moments_from_char(&p, a, 0.0);
        assert_relative_eq!(f.sigma_q, (2.0 / 1.2f64).sqrt() * 0.7, max_relative = 1e-15);
        assert_relative_eq!(f.sigma_p, (2.0 * 1.2f64).sqrt() * -0.2, max_relative = 1e-15);
        assert_relative_eq!(cov.sigma_qq, 1.0 / 2.4, max_relative = 1e-15);
        assert_relative_eq!(cov.sigma_pp, 0.6, max_relative = 1e-15);
        assert_eq!(cov.sigma_pq, 0.0);
    }

    #[test]
    fn asymptotic_widths_give_asymptotic_covariances() {
        let p = OscillatorParams::new(1.2, 0.9, 1.0, 0.4, 0.3, 0.11, 0.23, 0.04).unwrap();
        let w = asymptotic_widths(&p).unwrap();
        let (_, cov) = moments_from_amplitudes(&p, c(0.0, 0.0), w);
        let inf = asymptotic_covariances(&p).unwrap();
        assert_relative_eq!(cov.sigma_qq, inf.sigma_qq, max_relative = 1e-12);
        assert_relative_eq!(cov.sigma_pp, inf.sigma_pp, max_relative = 1e-12);
        assert_relative_eq!(cov.sigma_pq, inf.sigma_pq, max_relative = 1e-12);
    }

    #[test]
    fn exponential_form_matches_entire_form() {
        for mu in [0.0, 0.2, 1.7] {
            let p = OscillatorParams::new(1.3, 0.9, 1.0, 0.3, mu, 0.11, 0.23, 0.04).unwrap();
            let a = widths_from_exponentials(&p, 1.3);
            let k = char_constants_entire(&p);
            let d = coupled_relaxation(p.lambda, p.omega, p.mu, [-k[0], -k[1], -k[2]], 1.3);
            assert!((a.f.re - d[0] - k[0]).abs() < 1e-12);
            assert!((a.f.im - d[1] - k[1]).abs() < 1e-12);
            assert!((a.h - d[2] - k[2]).abs() < 1e-12);
            let n = widths_numerically(&p, 1.3);
            assert!((a.f - n.f).norm() < 1e-11 && (a.h - n.h).abs() < 1e-11);
        }
    }

    fn params_strategy() -> impl Strategy<Value = OscillatorParams> {
        (0.05f64..1.0, -1.5f64..1.5, 0.5f64..2.0, 0.5f64..2.0, 0.0f64..1.0, 0.0f64..1.0, -0.2f64..0.2)
            .prop_map(|(l, mu, m, w, dqq, dpp, dpq)| OscillatorParams::new(m, w, 1.0, l, mu, dqq, dpp, dpq).unwrap())
    }

    proptest! {
        #[test]
        fn hermitian_symmetry(p in params_strategy(), re in -1.0f64..1.0, im in -1.0f64..1.0, t in 0.0f64..5.0) {
            let a = c(0.4, -0.3);
            let l = c(re, im);
            let x = evaluate_char(&p, a, l, t);
            let y = evaluate_char(&p, a, -l, t);
            prop_assert!((x - y.conj()).norm() <= 1e-12 * (1.0 + x.norm()));
        }

        #[test]
        fn agrees_with_moment_propagators(p in params_strategy(), t in 0.0f64..6.0) {
            let a = c(0.6, 0.25);
            let (f, cov) = moments_from_char(&p, a, t);
            let mw = p.m_omega();
            let f0 = FirstMoments::new((2.0 / mw).sqrt() * a.re, (2.0 * mw).sqrt() * a.im);
            let fm = evolve_first_moments(&p, f0, t);
            let cm = evolve_covariances(&p, CovarianceTriple::ground_state(&p), t);
            let sf = fm.sigma_q.abs().max(fm.sigma_p.abs()).max(1e-3);
            prop_assert!((f.sigma_q - fm.sigma_q).abs() <= 1e-10 * sf);
            prop_assert!((f.sigma_p - fm.sigma_p).abs() <= 1e-10 * sf);
            let sc = cm.sigma_qq.abs().max(cm.sigma_pp.abs());
            prop_assert!((cov.sigma_qq - cm.sigma_qq).abs() <= 1e-9 * sc);
            prop_assert!((cov.sigma_pp - cm.sigma_pp).abs() <= 1e-9 * sc);
            prop_assert!((cov.sigma_pq - cm.sigma_pq).abs() <= 1e-9 * sc);
        }
    }
}
