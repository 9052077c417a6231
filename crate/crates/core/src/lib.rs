//! Damped quantum harmonic oscillator under the Lindblad master equation
//!
//! ```text
//! dρ/dt = −(i/ħ)[H₀, ρ] − (i/2ħ)(λ+μ)[q, ρp + pρ] + (i/2ħ)(λ−μ)[p, ρq + qρ]
//!         − (D_pp/ħ²)[q, [q, ρ]] − (D_qq/ħ²)[p, [p, ρ]]
//!         + (D_pq/ħ²)([q, [p, ρ]] + [p, [q, ρ]])
//! ```
//!
//! Every quantity is available along several independent routes that are
//! checked against each other:
//!
//! * [`moments`]: closed-form means and covariances, asymptotics and the
//!   complete-positivity inequalities they must satisfy.
//! * [`charfunc`]: the normally ordered characteristic function of an
//!   initially coherent state.
//! * [`quasiprob`]: Gaussian P, Wigner and Q distributions.
//! * [`densmat`]: the number-basis density matrix from a Gaussian generating
//!   function.
//! * [`fock`]: brute-force RK4 integration in a truncated number basis.
//! * [`catalog`]: literature master equations as special cases.

pub mod catalog;
pub mod charfunc;
pub mod densmat;
pub mod error;
pub mod fock;
pub mod io;
pub mod moments;
pub mod params;
pub mod quasiprob;

mod analytic;

pub use error::{Error, Result};
pub use moments::{CovarianceTriple, FirstMoments, MomentTrajectory};
pub use num_complex::Complex64;
pub use params::OscillatorParams;
