//! Physical parameters of the damped oscillator and the quantities derived
//! from them: the complex/real diffusion combinations D₁, D₂, the damping
//! regime, and the complete-positivity constraints on the diffusion
//! coefficients.
//!
//! The master equation is parameterised by
//!
//! ```text
//! H = p²/2m + mω²q²/2 + μ(pq + qp)/2
//! ```
//!
//! together with the friction constant λ and the diffusion coefficients
//! D_qq, D_pp, D_pq of the double-commutator terms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the band around μ = ω treated as critical damping.
pub const CRITICAL_EPS: f64 = 1e-9;

fn default_hbar() -> f64 {
    1.0
}

/// Physical constants, friction and diffusion coefficients.
///
/// Construction does not reject diffusion coefficients that violate the
/// complete-positivity constraints; use [`check_fundamental_constraints`]
/// for that.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub m: f64,
    pub omega: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub lambda: f64,
    pub mu: f64,
    pub d_qq: f64,
    pub d_pp: f64,
    pub d_pq: f64,
}

impl OscillatorParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: f64,
        omega: f64,
        hbar: f64,
        lambda: f64,
        mu: f64,
        d_qq: f64,
        d_pp: f64,
        d_pq: f64,
    ) -> Result<Self> {
        let p = Self {
            m,
            omega,
            hbar,
            lambda,
            mu,
            d_qq,
            d_pp,
            d_pq,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit mass, frequency and ħ with the given friction and diffusion.
    pub fn unit(lambda: f64, mu: f64, d_qq: f64, d_pp: f64, d_pq: f64) -> Self {
        Self {
            m: 1.0,
            omega: 1.0,
            hbar: 1.0,
            lambda,
            mu,
            d_qq,
            d_pp,
            d_pq,
        }
    }

    /// Parameters whose asymptotic state is the Gibbs state of H₀ at the
    /// temperature with `coth(ħω/2kT) = coth`.
    pub fn gibbs(m: f64, omega: f64, hbar: f64, lambda: f64, mu: f64, coth: f64) -> Result<Self> {
        Self::new(
            m,
            omega,
            hbar,
            lambda,
            mu,
            0.5 * (lambda - mu) * hbar / (m * omega) * coth,
            0.5 * (lambda + mu) * hbar * m * omega * coth,
            0.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.m, self.omega, self.hbar, self.lambda, self.mu, self.d_qq, self.d_pp, self.d_pq,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.m <= 0.0 || self.omega <= 0.0 || self.hbar <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "m, omega and hbar must be positive (m = {}, omega = {}, hbar = {})",
                self.m, self.omega, self.hbar
            )));
        }
        Ok(())
    }

    /// Same drift, different diffusion coefficients.
    pub fn with_diffusion(&self, d_qq: f64, d_pp: f64, d_pq: f64) -> Self {
        Self {
            d_qq,
            d_pp,
            d_pq,
            ..*self
        }
    }

    /// m·ω, the scale converting between q and p units.
    pub fn m_omega(&self) -> f64 {
        self.m * self.omega
    }

    /// μ² − ω², the square of the complex frequency γ.
    pub fn gamma_sq(&self) -> f64 {
        self.mu * self.mu - self.omega * self.omega
    }

    /// λ² + ω² − μ² = λ² − γ².
    pub fn stability_margin(&self) -> f64 {
        self.lambda * self.lambda + self.omega * self.omega - self.mu * self.mu
    }

    pub fn has_steady_state(&self) -> bool {
        self.lambda > 0.0 && self.stability_margin() > 0.0
    }

    pub(crate) fn require_steady_state(&self) -> Result<()> {
        if self.has_steady_state() {
            Ok(())
        } else {
            Err(Error::NoSteadyState {
                lambda: self.lambda,
                margin: self.stability_margin(),
            })
        }
    }
}

/// Combinations of the diffusion coefficients appearing in the
/// ladder-operator form of the master equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoefficients {
    pub d1: Complex64,
    pub d2: f64,
    /// L = λ − D₂
    pub ell: f64,
    /// C = (μ + D₁*)/2
    pub c: Complex64,
    pub nu_sq: f64,
    /// Principal square root of μ² − ω².
    pub gamma: Complex64,
}

pub fn derived_coefficients(p: &OscillatorParams) -> DerivedCoefficients {
    let mw = p.m_omega();
    let d1 = Complex64::new(mw * p.d_qq - p.d_pp / mw, 2.0 * p.d_pq) / p.hbar;
    let d2 = (mw * p.d_qq + p.d_pp / mw) / p.hbar;
    let nu_sq = p.gamma_sq();
    DerivedCoefficients {
        d1,
        d2,
        ell: p.lambda - d2,
        c: 0.5 * (p.mu + d1.conj()),
        nu_sq,
        gamma: Complex64::new(nu_sq, 0.0).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    Underdamped,
    Overdamped,
    Critical,
}

/// Damping regime with its real characteristic frequency: ν = √(μ² − ω²)
/// when overdamped, Ω = √(ω² − μ²) when underdamped, zero when critical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub nu_or_omega: f64,
}

/// Classifies by |μ| against ω, so a negative asymmetry parameter is
/// treated like its magnitude (only μ² enters the frequencies).
pub fn classify_regime(p: &OscillatorParams) -> Regime {
    let mu = p.mu.abs();
    if mu < p.omega * (1.0 - CRITICAL_EPS) {
        Regime {
            tag: RegimeTag::Underdamped,
            nu_or_omega: (-p.gamma_sq()).sqrt(),
        }
    } else if mu > p.omega * (1.0 + CRITICAL_EPS) {
        Regime {
            tag: RegimeTag::Overdamped,
            nu_or_omega: p.gamma_sq().sqrt(),
        }
    } else {
        Regime {
            tag: RegimeTag::Critical,
            nu_or_omega: 0.0,
        }
    }
}

/// Outcome of the complete-positivity constraints
/// D_pp > 0, D_qq > 0, D_pp·D_qq − D_pq² ≥ λ²ħ²/4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub dpp_positive: bool,
    pub dqq_positive: bool,
    pub determinant_ok: bool,
    /// (D_pp·D_qq − D_pq²) − λ²ħ²/4
    pub determinant_margin: f64,
    pub all_satisfied: bool,
    pub has_steady_state: bool,
}

pub fn check_fundamental_constraints(p: &OscillatorParams) -> ConstraintReport {
    let dpp_positive = p.d_pp > 0.0;
    let dqq_positive = p.d_qq > 0.0;
    let lhs = p.d_pp * p.d_qq - p.d_pq * p.d_pq;
    let rhs = p.lambda * p.lambda * p.hbar * p.hbar / 4.0;
    let determinant_ok = lhs >= rhs;
    ConstraintReport {
        dpp_positive,
        dqq_positive,
        determinant_ok,
        determinant_margin: lhs - rhs,
        all_satisfied: dpp_positive && dqq_positive && determinant_ok,
        has_steady_state: p.has_steady_state(),
    }
}
