//! First and second moments of position and momentum.
//!
//! The means obey a 2×2 linear system and the covariances a 3×3 affine
//! system. Both are propagated in closed form; the covariance propagator
//! works on the scaled vector X = (mω σ_qq, σ_pp/mω, σ_pq) and is written
//! in terms of the entire functions of γ² from [`crate::analytic`], so the
//! over-, under- and critically damped cases share one code path.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{rk4, Hyperbolic};
use crate::error::{Error, Result};
use crate::params::OscillatorParams;

/// Relative width of the band around λ = 0 and λ² = γ² inside which the
/// inhomogeneous covariance solution is integrated numerically.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// ⟨q⟩ and ⟨p⟩.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FirstMoments {
    pub sigma_q: f64,
    pub sigma_p: f64,
}

impl FirstMoments {
    pub fn new(sigma_q: f64, sigma_p: f64) -> Self {
        Self { sigma_q, sigma_p }
    }
}

/// Second central moments; σ_pq is the symmetrised covariance
/// ⟨(pq + qp)/2⟩ − ⟨p⟩⟨q⟩.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CovarianceTriple {
    pub sigma_qq: f64,
    pub sigma_pp: f64,
    pub sigma_pq: f64,
}

impl CovarianceTriple {
    pub fn new(sigma_qq: f64, sigma_pp: f64, sigma_pq: f64) -> Self {
        Self {
            sigma_qq,
            sigma_pp,
            sigma_pq,
        }
    }

    /// Ground state (and every coherent state) of H₀.
    pub fn ground_state(p: &OscillatorParams) -> Self {
        let mw = p.m_omega();
        Self::new(p.hbar / (2.0 * mw), p.hbar * mw / 2.0, 0.0)
    }

    /// Covariances of the Gibbs state of H₀ with `coth(ħω/2kT) = coth`.
    pub fn gibbs(p: &OscillatorParams, coth: f64) -> Self {
        let g = Self::ground_state(p);
        Self::new(g.sigma_qq * coth, g.sigma_pp * coth, 0.0)
    }

    /// σ_qq σ_pp − σ_pq²
    pub fn determinant(&self) -> f64 {
        self.sigma_qq * self.sigma_pp - self.sigma_pq * self.sigma_pq
    }

    fn to_scaled(self, mw: f64) -> [f64; 3] {
        [mw * self.sigma_qq, self.sigma_pp / mw, self.sigma_pq]
    }

    fn from_scaled(x: [f64; 3], mw: f64) -> Self {
        Self::new(x[0] / mw, x[1] * mw, x[2])
    }
}

/// How a covariance evolution was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Propagation {
    ClosedForm,
    /// RK4 on the covariance equations because the drift matrix is
    /// (numerically) singular.
    NumericalFallback,
}

/// Mean values at time `t` from their values at time zero.
pub fn evolve_first_moments(p: &OscillatorParams, init: FirstMoments, t: f64) -> FirstMoments {
    let (c, s, _) = Hyperbolic::new(p.gamma_sq()).damped(p.lambda, t);
    let mw2 = p.m * p.omega * p.omega;
    FirstMoments {
        sigma_q: (c + p.mu * s) * init.sigma_q + s / p.m * init.sigma_p,
        sigma_p: -mw2 * s * init.sigma_q + (c - p.mu * s) * init.sigma_p,
    }
}

/// The homogeneous covariance propagator T e^{Kt} T acting on scaled
/// vectors.
fn scaled_propagator(p: &OscillatorParams, t: f64) -> [[f64; 3]; 3] {
    // c2, s2, k2 already carry the factor e^{−2λt}
    let (c2, s2, k2) = Hyperbolic::new(p.gamma_sq()).damped(p.lambda, 2.0 * t);
    let (mu, w) = (p.mu, p.omega);
    let e = (-2.0 * p.lambda * t).exp();
    let diag = 0.5 * mu * mu * k2 + 0.5 * (c2 + e);
    let plus = mu * k2 + s2;
    let minus = mu * k2 - s2;
    [
        [diag + mu * s2, 0.5 * w * w * k2, w * plus],
        [0.5 * w * w * k2, diag - mu * s2, w * minus],
        [-0.5 * w * plus, -0.5 * w * minus, e - w * w * k2],
    ]
}

fn mat3_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// The fixed point −R⁻¹D of the covariance equations, without requiring it
/// to be attracting.
fn formal_fixed_point(p: &OscillatorParams) -> CovarianceTriple {
    let (l, mu, w, m) = (p.lambda, p.mu, p.omega, p.m);
    let mw = p.m_omega();
    let den = l * p.stability_margin();
    CovarianceTriple {
        sigma_qq: (mw * mw * (2.0 * l * (l + mu) + w * w) * p.d_qq
            + w * w * p.d_pp
            + 2.0 * m * w * w * (l + mu) * p.d_pq)
            / (2.0 * mw * mw * den),
        sigma_pp: (mw * mw * w * w * p.d_qq + (2.0 * l * (l - mu) + w * w) * p.d_pp
            - 2.0 * m * w * w * (l - mu) * p.d_pq)
            / (2.0 * den),
        sigma_pq: (-(l + mu) * mw * mw * p.d_qq
            + (l - mu) * p.d_pp
            + 2.0 * m * (l * l - mu * mu) * p.d_pq)
            / (2.0 * m * den),
    }
}

fn spectrum_is_degenerate(p: &OscillatorParams) -> bool {
    let scale = p.lambda.abs().max(p.omega).max(p.mu.abs());
    p.lambda.abs() <= DEGENERACY_TOL * scale
        || p.stability_margin().abs() <= DEGENERACY_TOL * scale * scale
}

/// Closed-form covariance evolution; fails with
/// [`Error::DegenerateSpectrum`] when λ = 0 or λ² = γ² (up to
/// [`DEGENERACY_TOL`]).
pub fn evolve_covariances_closed_form(
    p: &OscillatorParams,
    init: CovarianceTriple,
    t: f64,
) -> Result<CovarianceTriple> {
    if t == 0.0 {
        return Ok(init);
    }
    if spectrum_is_degenerate(p) {
        return Err(Error::DegenerateSpectrum {
            lambda: p.lambda,
            gap: p.stability_margin(),
        });
    }
    let mw = p.m_omega();
    let x_inf = formal_fixed_point(p).to_scaled(mw);
    let x0 = init.to_scaled(mw);
    let dx = mat3_vec(
        &scaled_propagator(p, t),
        [x0[0] - x_inf[0], x0[1] - x_inf[1], x0[2] - x_inf[2]],
    );
    Ok(CovarianceTriple::from_scaled(
        [dx[0] + x_inf[0], dx[1] + x_inf[1], dx[2] + x_inf[2]],
        mw,
    ))
}

fn covariance_rhs(p: &OscillatorParams, s: &[f64; 3]) -> [f64; 3] {
    let mw2 = p.m * p.omega * p.omega;
    [
        -2.0 * (p.lambda - p.mu) * s[0] + 2.0 / p.m * s[2] + 2.0 * p.d_qq,
        -2.0 * (p.lambda + p.mu) * s[1] - 2.0 * mw2 * s[2] + 2.0 * p.d_pp,
        -mw2 * s[0] + s[1] / p.m - 2.0 * p.lambda * s[2] + 2.0 * p.d_pq,
    ]
}

fn evolve_covariances_numerically(
    p: &OscillatorParams,
    init: CovarianceTriple,
    t: f64,
) -> CovarianceTriple {
    let step = 1e-3f64.min(1e-3 / p.omega);
    let y = rk4(
        |s| covariance_rhs(p, s),
        [init.sigma_qq, init.sigma_pp, init.sigma_pq],
        t,
        step,
    );
    CovarianceTriple::new(y[0], y[1], y[2])
}

/// Covariances at time `t`, reporting which route produced them.
pub fn evolve_covariances_reported(
    p: &OscillatorParams,
    init: CovarianceTriple,
    t: f64,
) -> (CovarianceTriple, Propagation) {
    match evolve_covariances_closed_form(p, init, t) {
        Ok(c) => (c, Propagation::ClosedForm),
        Err(_) => (
            evolve_covariances_numerically(p, init, t),
            Propagation::NumericalFallback,
        ),
    }
}

/// Covariances at time `t` from their values at time zero.
pub fn evolve_covariances(p: &OscillatorParams, init: CovarianceTriple, t: f64) -> CovarianceTriple {
    evolve_covariances_reported(p, init, t).0
}

/// σ_qqσ_pp − σ_pq² at time `t`. When the drift has a growing real mode
/// (γ > λ) the covariances grow like e^{2(γ−λ)t} and their determinant
/// would be lost to cancellation, so it is evaluated in the drift eigenbasis
/// where the growing and decaying directions separate.
pub fn evolve_covariance_determinant(p: &OscillatorParams, init: CovarianceTriple, t: f64) -> f64 {
    let g2 = p.gamma_sq();
    if !(g2 > 0.0 && g2.sqrt() > p.lambda) {
        return evolve_covariances(p, init, t).determinant();
    }
    let g = g2.sqrt();
    // eigenvectors (1, m(±γ − μ)) for the rates −λ ± γ
    let det_p = -2.0 * p.m * g;
    let inv = [
        [-p.m * (g + p.mu) / det_p, -1.0 / det_p],
        [-p.m * (g - p.mu) / det_p, 1.0 / det_p],
    ];
    let to_eigen = |s: [[f64; 2]; 2]| {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out[i][j] += inv[i][k] * s[k][l] * inv[j][l];
                    }
                }
            }
        }
        out
    };
    let s0 = to_eigen([[init.sigma_qq, init.sigma_pq], [init.sigma_pq, init.sigma_pp]]);
    let d = to_eigen([[p.d_qq, p.d_pq], [p.d_pq, p.d_pp]]);
    let rates = [g - p.lambda, -g - p.lambda];
    let entry = |i: usize, j: usize| {
        let x = rates[i] + rates[j];
        let growth = if x == 0.0 { t } else { (x * t).exp_m1() / x };
        (x * t).exp() * s0[i][j] + 2.0 * d[i][j] * growth
    };
    det_p * det_p * (entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(0, 1))
}

/// Steady-state covariances, independent of the initial state.
pub fn asymptotic_covariances(p: &OscillatorParams) -> Result<CovarianceTriple> {
    p.require_steady_state()?;
    Ok(formal_fixed_point(p))
}

/// Diffusion coefficients (D_qq, D_pp, D_pq) that produce the given
/// asymptotic covariances under the drift of `p` (its own diffusion
/// coefficients are ignored).
pub fn diffusion_from_asymptotic(p: &OscillatorParams, inf: CovarianceTriple) -> (f64, f64, f64) {
    let (l, mu, m) = (p.lambda, p.mu, p.m);
    let mw2 = m * p.omega * p.omega;
    (
        (l - mu) * inf.sigma_qq - inf.sigma_pq / m,
        (l + mu) * inf.sigma_pp + mw2 * inf.sigma_pq,
        0.5 * (mw2 * inf.sigma_qq - inf.sigma_pp / m + 2.0 * l * inf.sigma_pq),
    )
}

/// Result of evaluating an inequality `lhs ≥ rhs`; `margin = lhs − rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub satisfied: bool,
    pub margin: f64,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            satisfied: lhs >= rhs,
            margin: lhs - rhs,
        }
    }
}

/// Complete-positivity constraint expressed through the asymptotic
/// covariances:
/// 4(λ²+ω²−μ²)(σ_qqσ_pp − σ_pq²) − (mω²σ_qq + σ_pp/m + 2μσ_pq)² ≥ ħ²λ².
pub fn check_asymptotic_constraint(p: &OscillatorParams, inf: CovarianceTriple) -> InequalityCheck {
    let w2 = p.omega * p.omega;
    let lin = p.m * w2 * inf.sigma_qq + inf.sigma_pp / p.m + 2.0 * p.mu * inf.sigma_pq;
    let lhs = 4.0 * p.stability_margin() * inf.determinant() - lin * lin;
    InequalityCheck::new(lhs, p.hbar * p.hbar * p.lambda * p.lambda)
}

/// Restriction tying the initial covariances to the asymptotic ones,
/// equivalent to D_qqσ_pp(0) + D_ppσ_qq(0) − 2D_pqσ_pq(0) ≥ ħ²λ/2.
pub fn check_initial_restriction(
    p: &OscillatorParams,
    init: CovarianceTriple,
    inf: CovarianceTriple,
) -> InequalityCheck {
    let (l, mu, m) = (p.lambda, p.mu, p.m);
    let mw2 = m * p.omega * p.omega;
    let (a, z) = (inf, init);
    let lhs = l * (a.sigma_qq * z.sigma_pp + a.sigma_pp * z.sigma_qq - 2.0 * a.sigma_pq * z.sigma_pq)
        - mu * (a.sigma_qq * z.sigma_pp - a.sigma_pp * z.sigma_qq)
        - (a.sigma_pq * z.sigma_pp - a.sigma_pp * z.sigma_pq) / m
        + mw2 * (a.sigma_pq * z.sigma_qq - a.sigma_qq * z.sigma_pq);
    InequalityCheck::new(lhs, p.hbar * p.hbar * l / 2.0)
}

/// ⟨H⟩ including the μ(pq + qp)/2 term of the Hamiltonian.
pub fn energy_expectation(p: &OscillatorParams, first: FirstMoments, cov: CovarianceTriple) -> f64 {
    let q2 = cov.sigma_qq + first.sigma_q * first.sigma_q;
    let p2 = cov.sigma_pp + first.sigma_p * first.sigma_p;
    let pq = cov.sigma_pq + first.sigma_q * first.sigma_p;
    p2 / (2.0 * p.m) + 0.5 * p.m * p.omega * p.omega * q2 + p.mu * pq
}

/// E(∞) written through the diffusion coefficients.
pub fn asymptotic_energy(p: &OscillatorParams) -> Result<f64> {
    p.require_steady_state()?;
    Ok(
        (p.d_pp / (2.0 * p.m) + 0.5 * p.m * p.omega * p.omega * p.d_qq + p.mu * p.d_pq)
            / p.lambda,
    )
}

/// Moments and energy sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub first: Vec<FirstMoments>,
    pub cov: Vec<CovarianceTriple>,
    pub energy: Vec<f64>,
}

pub const TRAJECTORY_HEADER: &str = "t,sigma_q,sigma_p,sigma_qq,sigma_pp,sigma_pq,energy";

impl MomentTrajectory {
    /// Evaluates the closed forms at every time (in parallel; points are
    /// independent). `times` must be strictly increasing and non-negative.
    pub fn compute(
        p: &OscillatorParams,
        first0: FirstMoments,
        cov0: CovarianceTriple,
        times: &[f64],
    ) -> Result<Self> {
        check_time_grid(times)?;
        let points: Vec<(FirstMoments, CovarianceTriple, f64)> = times
            .par_iter()
            .map(|&t| {
                let f = evolve_first_moments(p, first0, t);
                let c = evolve_covariances(p, cov0, t);
                (f, c, energy_expectation(p, f, c))
            })
            .collect();
        let mut out = Self {
            times: times.to_vec(),
            first: Vec::with_capacity(times.len()),
            cov: Vec::with_capacity(times.len()),
            energy: Vec::with_capacity(times.len()),
        };
        for (f, c, e) in points {
            out.first.push(f);
            out.cov.push(c);
            out.energy.push(e);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One CSV row (without newline) in the trajectory column order.
    pub fn csv_row(&self, i: usize) -> String {
        let (f, c) = (self.first[i], self.cov[i]);
        [
            self.times[i],
            f.sigma_q,
            f.sigma_p,
            c.sigma_qq,
            c.sigma_pp,
            c.sigma_pq,
            self.energy[i],
        ]
        .iter()
        .map(|x| crate::io::fmt_f64(*x))
        .collect::<Vec<_>>()
        .join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for i in 0..self.len() {
            writeln!(w, "{}", self.csv_row(i))?;
        }
        Ok(())
    }
}

pub(crate) fn check_time_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidConfig("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` evenly spaced points on [0, t_max].
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| if i + 1 == n { t_max } else { t_max * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gibbs() -> OscillatorParams {
        OscillatorParams::gibbs(1.0, 1.0, 1.0, 0.5, 0.2, 2.0).unwrap()
    }

    #[test]
    fn identity_at_zero() {
        let p = OscillatorParams::unit(0.3, 0.6, 0.05, 0.2, 0.01);
        let f = FirstMoments::new(0.3, -0.2);
        assert_eq!(evolve_first_moments(&p, f, 0.0), f);
        let c = CovarianceTriple::new(0.5, 0.5, 0.0);
        assert_eq!(evolve_covariances(&p, c, 0.0), c);
    }

    #[test]
    fn undamped_rotation() {
        let p = OscillatorParams::unit(0.0, 0.0, 0.0, 0.0, 0.0);
        let f = evolve_first_moments(&p, FirstMoments::new(1.0, 0.0), std::f64::consts::FRAC_PI_2);
        assert!(f.sigma_q.abs() < 1e-15);
        assert_relative_eq!(f.sigma_p, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn gibbs_fixed_point() {
        let inf = asymptotic_covariances(&gibbs()).unwrap();
        assert_relative_eq!(inf.sigma_qq, 1.0, epsilon = 1e-14);
        assert_relative_eq!(inf.sigma_pp, 1.0, epsilon = 1e-14);
        assert!(inf.sigma_pq.abs() < 1e-15);
        let c = evolve_covariances(&gibbs(), CovarianceTriple::new(0.5, 0.5, 0.0), 80.0);
        assert!((c.sigma_qq - 1.0).abs() < 1e-8 && (c.sigma_pp - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_diffusion_fixed_point() {
        let p = gibbs().with_diffusion(0.0, 0.0, 0.0);
        assert_eq!(asymptotic_covariances(&p).unwrap(), CovarianceTriple::default());
        assert_eq!(diffusion_from_asymptotic(&p, CovarianceTriple::default()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn no_steady_state_is_an_error() {
        let p = OscillatorParams::unit(0.0, 0.2, 0.1, 0.1, 0.0);
        assert!(matches!(asymptotic_covariances(&p), Err(Error::NoSteadyState { .. })));
        let p = OscillatorParams::unit(0.1, 3.0, 0.1, 0.1, 0.0);
        assert!(asymptotic_covariances(&p).is_err());
    }

    #[test]
    fn gibbs_inverse_relation() {
        let p = gibbs();
        let (dqq, dpp, dpq) = diffusion_from_asymptotic(&p, CovarianceTriple::gibbs(&p, 2.0));
        assert_relative_eq!(dqq, 0.3, epsilon = 1e-15);
        assert_relative_eq!(dpp, 0.7, epsilon = 1e-15);
        assert_eq!(dpq, 0.0);
    }

    #[test]
    fn degenerate_spectrum_falls_back() {
        let p = OscillatorParams::unit(0.0, 0.3, 0.2, 0.2, 0.0);
        assert!(matches!(
            evolve_covariances_closed_form(&p, CovarianceTriple::new(0.5, 0.5, 0.0), 1.0),
            Err(Error::DegenerateSpectrum { .. })
        ));
        let (c, how) = evolve_covariances_reported(&p, CovarianceTriple::new(0.5, 0.5, 0.0), 1.0);
        assert_eq!(how, Propagation::NumericalFallback);
        assert!(c.sigma_qq.is_finite());
    }

    #[test]
    fn minimum_uncertainty_equality() {
        let p = OscillatorParams::new(1.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let g = CovarianceTriple::ground_state(&p);
        let chk = check_asymptotic_constraint(&p, g);
        assert!(chk.margin.abs() < 1e-14);
        let chk = check_initial_restriction(&p, g, g);
        assert_eq!(chk.margin, 0.0);
        assert!(chk.satisfied);
    }

    #[test]
    fn huge_covariance_violates() {
        let p = gibbs();
        let c = CovarianceTriple::new(1.0, 1.0, 50.0);
        assert!(!check_asymptotic_constraint(&p, c).satisfied);
    }

    #[test]
    fn ground_state_initial_restriction() {
        let p = gibbs();
        let chk = check_initial_restriction(&p, CovarianceTriple::ground_state(&p), CovarianceTriple::gibbs(&p, 2.0));
        assert!(chk.satisfied);
        // reduces to hbar*lambda*(coth - 1)/2 for mu-independent Gibbs values
        assert_relative_eq!(chk.margin, 0.5 * 0.5 * (2.0 - 1.0), epsilon = 1e-14);
    }

    #[test]
    fn energies() {
        let p = OscillatorParams::unit(0.3, 0.0, 0.0, 0.0, 0.0);
        let e = energy_expectation(&p, FirstMoments::default(), CovarianceTriple::ground_state(&p));
        assert_relative_eq!(e, 0.5, epsilon = 1e-15);

        let p = gibbs();
        let e_d = asymptotic_energy(&p).unwrap();
        assert_relative_eq!(e_d, 1.0, epsilon = 1e-14);
        let e_s = energy_expectation(&p, FirstMoments::default(), asymptotic_covariances(&p).unwrap());
        assert_relative_eq!(e_s, e_d, epsilon = 1e-14);
    }

    #[test]
    fn grid_and_csv() {
        let g = uniform_grid(2.0, 5);
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(check_time_grid(&[0.0, 1.0, 1.0]).is_err());
        let p = gibbs();
        let tr = MomentTrajectory::compute(&p, FirstMoments::new(1.0, 0.0), CovarianceTriple::ground_state(&p), &g).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines.len(), 6);
        let row: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row[1], 1.0);
    }

    fn params_strategy() -> impl Strategy<Value = OscillatorParams> {
        (0.05f64..1.0, -1.5f64..1.5, 0.5f64..2.0, 0.5f64..2.0, 0.0f64..1.0, 0.0f64..1.0, -0.2f64..0.2)
            .prop_map(|(l, mu, m, w, dqq, dpp, dpq)| OscillatorParams::new(m, w, 1.0, l, mu, dqq, dpp, dpq).unwrap())
    }

    proptest! {
        #[test]
        fn semigroup(p in params_strategy(), t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
            let f0 = FirstMoments::new(0.7, -0.4);
            let a = evolve_first_moments(&p, f0, t1 + t2);
            let b = evolve_first_moments(&p, evolve_first_moments(&p, f0, t1), t2);
            let scale = a.sigma_q.abs().max(a.sigma_p.abs()).max(1e-3);
            prop_assert!((a.sigma_q - b.sigma_q).abs() <= 1e-10 * scale);
            prop_assert!((a.sigma_p - b.sigma_p).abs() <= 1e-10 * scale);

            let c0 = CovarianceTriple::new(0.6, 0.9, 0.1);
            let a = evolve_covariances(&p, c0, t1 + t2);
            let b = evolve_covariances(&p, evolve_covariances(&p, c0, t1), t2);
            let scale = a.sigma_qq.abs().max(a.sigma_pp.abs()).max(a.sigma_pq.abs());
            prop_assert!((a.sigma_qq - b.sigma_qq).abs() <= 1e-10 * scale);
            prop_assert!((a.sigma_pp - b.sigma_pp).abs() <= 1e-10 * scale);
            prop_assert!((a.sigma_pq - b.sigma_pq).abs() <= 1e-10 * scale);
        }

        #[test]
        fn round_trip_diffusion(p in params_strategy()) {
            prop_assume!(p.has_steady_state());
            let (dqq, dpp, dpq) = diffusion_from_asymptotic(&p, asymptotic_covariances(&p).unwrap());
            let scale = p.d_qq.abs().max(p.d_pp.abs()).max(p.d_pq.abs()).max(1e-12);
            prop_assert!((dqq - p.d_qq).abs() <= 1e-11 * scale);
            prop_assert!((dpp - p.d_pp).abs() <= 1e-11 * scale);
            prop_assert!((dpq - p.d_pq).abs() <= 1e-11 * scale);
        }

        #[test]
        fn forgets_initial_state(p in params_strategy()) {
            prop_assume!(p.has_steady_state());
            // slowest covariance rate is 2(λ − Re γ)
            let t = 20.0 / (p.lambda - p.gamma_sq().max(0.0).sqrt());
            let a = evolve_covariances(&p, CovarianceTriple::new(0.5, 0.5, 0.0), t);
            let b = evolve_covariances(&p, CovarianceTriple::new(3.0, 0.1, -0.4), t);
            prop_assert!((a.sigma_qq - b.sigma_qq).abs() < 1e-8);
            prop_assert!((a.sigma_pp - b.sigma_pp).abs() < 1e-8);
            prop_assert!((a.sigma_pq - b.sigma_pq).abs() < 1e-8);
        }
    }

    #[test]
    fn eigenbasis_determinant_matches_direct_at_short_times() {
        let p = OscillatorParams::new(1.3, 0.6, 0.9, 0.2, 1.1, 0.4, 0.3, 0.1).unwrap();
        let init = CovarianceTriple::new(0.7, 0.5, -0.1);
        for t in [0.0, 0.3, 1.0, 2.0] {
            let direct = evolve_covariances(&p, init, t).determinant();
            let stable = evolve_covariance_determinant(&p, init, t);
            assert!((direct - stable).abs() <= 1e-10 * direct.abs().max(1.0), "t={t}: {direct} vs {stable}");
        }
    }

    #[test]
    fn eigenbasis_determinant_survives_growth() {
        let p = OscillatorParams::new(1.0, 0.5, 1.0, 0.1, 1.5, 0.3, 0.3, 0.0).unwrap();
        let init = CovarianceTriple::ground_state(&p);
        let det = evolve_covariance_determinant(&p, init, 30.0);
        // det' = −4λ det + 2(D_qq σ_pp + D_pp σ_qq − 2D_pq σ_pq) is positive here
        assert!(det.is_finite() && det > 0.25);
    }
}
