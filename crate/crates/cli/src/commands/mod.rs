pub mod density;
pub mod distribution;
pub mod simulate;
pub mod steady;
pub mod sweep;
pub mod validate;

use lindblad_osc::params::check_fundamental_constraints;
use lindblad_osc::quasiprob::{representation_covariance, SParameter};
use lindblad_osc::{CovarianceTriple, FirstMoments, OscillatorParams};
use thiserror::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_STRICT: u8 = 2;
pub const EXIT_NO_STEADY_STATE: u8 = 3;

/// Raised under `--strict` when the complete-positivity constraints fail.
#[derive(Debug, Error)]
#[error("complete-positivity constraints violated: {0}")]
pub struct StrictViolation(pub String);

fn describe_violation(p: &OscillatorParams) -> Option<String> {
    let r = check_fundamental_constraints(p);
    if r.all_satisfied {
        return None;
    }
    let mut parts = Vec::new();
    if !r.dpp_positive {
        parts.push(format!("D_pp = {} <= 0", p.d_pp));
    }
    if !r.dqq_positive {
        parts.push(format!("D_qq = {} <= 0", p.d_qq));
    }
    if !r.determinant_ok {
        parts.push(format!("D_pp D_qq - D_pq^2 - lambda^2 hbar^2/4 = {}", r.determinant_margin));
    }
    Some(parts.join(", "))
}

/// Fails under `strict`, otherwise warns on stderr.
pub fn check_constraints(p: &OscillatorParams, strict: bool) -> anyhow::Result<()> {
    match describe_violation(p) {
        Some(msg) if strict => Err(StrictViolation(msg).into()),
        Some(msg) => {
            eprintln!("warning: complete-positivity constraints violated: {msg}");
            Ok(())
        }
        None => Ok(()),
    }
}

/// Mean of the complex amplitude α = (x₁, x₂) for phase-space means.
pub fn amplitude_mean(p: &OscillatorParams, f: FirstMoments) -> [f64; 2] {
    let mw = p.m_omega();
    [f.sigma_q * (mw / (2.0 * p.hbar)).sqrt(), f.sigma_p / (2.0 * p.hbar * mw).sqrt()]
}

/// Mean excitation ⟨a†a⟩ of a Gaussian state with the given moments.
pub fn mean_excitation(p: &OscillatorParams, f: FirstMoments, c: CovarianceTriple) -> f64 {
    let s = representation_covariance(p, c, SParameter::GlauberP);
    let [x1, x2] = amplitude_mean(p, f);
    s[0][0] + s[1][1] + x1 * x1 + x2 * x2
}

/// Truncation N (N + 1 levels) for a state with at most `n_mean` quanta.
/// A thermal tail falls like (n/(n+1))^N, so about 28(n + 1/2) levels reach
/// 1e-12; a Poisson tail is shorter.
pub fn default_levels(n_mean: f64) -> usize {
    40usize.max((30.0 * (n_mean.max(0.0) + 1.0)).ceil() as usize)
}
