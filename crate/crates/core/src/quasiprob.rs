//! s-ordered quasiprobability distributions (Glauber P, Wigner, Q) in the
//! dimensionless phase coordinates x₁ = √(mω/2ħ) q, x₂ = p/√(2ħmω).
//!
//! All three obey a Fokker–Planck equation with the same drift and a
//! diffusion matrix shifted by s/2 along the diagonal, so their covariances
//! differ from the symmetric one only by s/4 on the diagonal.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{evolve_covariances, CovarianceTriple};
use crate::params::OscillatorParams;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SParameter {
    /// s = +1
    #[serde(rename = "p")]
    GlauberP,
    /// s = 0
    Wigner,
    /// s = −1
    Q,
}

impl SParameter {
    pub const ALL: [SParameter; 3] = [SParameter::GlauberP, SParameter::Wigner, SParameter::Q];

    pub fn s(self) -> f64 {
        match self {
            SParameter::GlauberP => 1.0,
            SParameter::Wigner => 0.0,
            SParameter::Q => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SParameter::GlauberP => "p",
            SParameter::Wigner => "wigner",
            SParameter::Q => "q",
        }
    }
}

impl fmt::Display for SParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "glauber" | "glauber-p" | "1" | "+1" => Ok(SParameter::GlauberP),
            "w" | "wigner" | "0" => Ok(SParameter::Wigner),
            "q" | "husimi" | "-1" => Ok(SParameter::Q),
            other => Err(Error::InvalidConfig(format!(
                "unknown representation `{other}` (expected p, wigner or q)"
            ))),
        }
    }
}

/// Drift matrix A and diffusion matrix D⁽ˢ⁾ of
/// ∂Φ/∂t = Σ ∂ᵢ(Aᵢⱼxⱼ Φ) + ½ Σ Dᵢⱼ ∂ᵢ∂ⱼ Φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FPCoefficients {
    pub drift: Mat2,
    pub diffusion: Mat2,
}

pub fn fp_coefficients(p: &OscillatorParams, s: SParameter) -> FPCoefficients {
    let s = s.s();
    let mw = p.m_omega();
    let d11 = mw * p.d_qq / p.hbar - 0.5 * s * (p.lambda - p.mu);
    let d22 = p.d_pp / (p.hbar * mw) - 0.5 * s * (p.lambda + p.mu);
    let d12 = p.d_pq / p.hbar;
    FPCoefficients {
        drift: [[p.lambda - p.mu, -p.omega], [p.omega, p.lambda + p.mu]],
        diffusion: [[d11, d12], [d12, d22]],
    }
}

/// σ⁽ˢ⁾ for the given phase-space covariances.
pub fn representation_covariance(p: &OscillatorParams, cov: CovarianceTriple, s: SParameter) -> Mat2 {
    let mw = p.m_omega();
    let shift = 0.25 * s.s();
    let s11 = mw / (2.0 * p.hbar) * cov.sigma_qq - shift;
    let s22 = cov.sigma_pp / (2.0 * p.hbar * mw) - shift;
    let s12 = cov.sigma_pq / (2.0 * p.hbar);
    [[s11, s12], [s12, s22]]
}

/// Inverse of [`representation_covariance`].
pub fn phase_space_covariance(p: &OscillatorParams, sigma: &Mat2, s: SParameter) -> CovarianceTriple {
    let mw = p.m_omega();
    let shift = 0.25 * s.s();
    CovarianceTriple {
        sigma_qq: 2.0 * p.hbar / mw * (sigma[0][0] + shift),
        sigma_pp: 2.0 * p.hbar * mw * (sigma[1][1] + shift),
        sigma_pq: 2.0 * p.hbar * sigma[0][1],
    }
}

/// σ⁽ˢ⁾(t) from σ⁽ˢ⁾(0). Evolved through the phase-space covariance
/// propagator, since the equations of motion are representation
/// independent once the diagonal shift is accounted for.
pub fn covariance_evolution_s(p: &OscillatorParams, s: SParameter, init: &Mat2, t: f64) -> Mat2 {
    let cov0 = phase_space_covariance(p, init, s);
    representation_covariance(p, evolve_covariances(p, cov0, t), s)
}

/// Steady-state σ⁽ˢ⁾(∞) solving Aσ + σAᵀ = D⁽ˢ⁾.
pub fn steady_state_covariance(p: &OscillatorParams, s: SParameter) -> Result<Mat2> {
    p.require_steady_state()?;
    let d = fp_coefficients(p, s).diffusion;
    let (d11, d22, d12) = (d[0][0], d[1][1], d[0][1]);
    let (l, mu, w) = (p.lambda, p.mu, p.omega);
    let den = 4.0 * l * p.stability_margin();
    let s11 = ((2.0 * l * (l + mu) + w * w) * d11 + w * w * d22 + 2.0 * w * (l + mu) * d12) / den;
    let s22 = (w * w * d11 + (2.0 * l * (l - mu) + w * w) * d22 - 2.0 * w * (l - mu) * d12) / den;
    let s12 = (-w * (l + mu) * d11 + w * (l - mu) * d22 + 2.0 * (l * l - mu * mu) * d12) / den;
    Ok([[s11, s12], [s12, s22]])
}

/// A two-dimensional Gaussian in (x₁, x₂). A covariance that is not
/// positive definite (possible for P) is kept but cannot be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDistribution {
    pub mean: [f64; 2],
    pub cov: Mat2,
    pub positive_definite: bool,
}

impl GaussianDistribution {
    pub fn new(mean: [f64; 2], cov: Mat2) -> Self {
        Self {
            mean,
            cov,
            positive_definite: cov[0][0] > 0.0 && det2(&cov) > 0.0,
        }
    }

    pub fn determinant(&self) -> f64 {
        det2(&self.cov)
    }
}

fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn steady_state_distribution(
    p: &OscillatorParams,
    s: SParameter,
    mean: [f64; 2],
) -> Result<GaussianDistribution> {
    Ok(GaussianDistribution::new(mean, steady_state_covariance(p, s)?))
}

/// Density values at the given points.
pub fn evaluate_distribution(dist: &GaussianDistribution, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    if !dist.positive_definite {
        return Err(Error::NonPositiveDefinite {
            det: dist.determinant(),
        });
    }
    let det = dist.determinant();
    let inv = [
        [dist.cov[1][1] / det, -dist.cov[0][1] / det],
        [-dist.cov[1][0] / det, dist.cov[0][0] / det],
    ];
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    Ok(points
        .par_iter()
        .map(|x| {
            let (a, b) = (x[0] - dist.mean[0], x[1] - dist.mean[1]);
            let quad = inv[0][0] * a * a + (inv[0][1] + inv[1][0]) * a * b + inv[1][1] * b * b;
            norm * (-0.5 * quad).exp()
        })
        .collect())
}

/// Checks the Gaussian form of W = (2/π) ∫ P(β) e^{−2|α−β|²} d²β, which adds
/// 1/4 to each diagonal covariance entry.
pub fn wigner_from_p_convolution_check(p_dist: &GaussianDistribution, w_dist: &GaussianDistribution) -> bool {
    const TOL: f64 = 1e-10;
    let close = |a: f64, b: f64| (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()));
    (0..2).all(|i| close(p_dist.mean[i], w_dist.mean[i]))
        && (0..2).all(|i| {
            (0..2).all(|j| {
                let shift = if i == j { 0.25 } else { 0.0 };
                close(p_dist.cov[i][j] + shift, w_dist.cov[i][j])
            })
        })
}

/// Row-major `n × n` grid over [xmin, xmax] × [ymin, ymax], endpoints
/// included; x₁ varies slowest.
pub fn grid_points(xmin: f64, xmax: f64, ymin: f64, ymax: f64, n: usize) -> Vec<[f64; 2]> {
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
                .collect(),
        }
    };
    let (xs, ys) = (axis(xmin, xmax), axis(ymin, ymax));
    xs.iter().flat_map(|&x| ys.iter().map(move |&y| [x, y])).collect()
}
