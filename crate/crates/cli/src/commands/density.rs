use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use lindblad_osc::densmat::{density_matrix_from_coeffs, evolve_genfunc_coeffs, GenFuncCoeffs};
use lindblad_osc::moments::{asymptotic_covariances, evolve_covariances, evolve_first_moments};
use lindblad_osc::{CovarianceTriple, FirstMoments};
use serde::Serialize;

use super::{check_constraints, default_levels, mean_excitation};
use crate::config::{FileConfig, ParamArgs, ResolvedParams, StateArg};
use crate::output;

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// coherent:RE,IM or stationary [default: stationary]
    #[arg(long)]
    pub state: Option<StateArg>,
    /// Evolution time [default: 0]
    #[arg(long)]
    pub t: Option<f64>,
    /// Truncation N; the matrix has N + 1 levels [default: from the mean
    /// excitation]
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub strict: bool,
    /// JSON path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DensityConfig {
    command: &'static str,
    params: ResolvedParams,
    state: StateArg,
    t: f64,
    n: usize,
    strict: bool,
}

pub fn run(args: &DensityArgs, file: &FileConfig) -> Result<()> {
    let params = args.params.resolve(file)?;
    let p = params.params;
    let state = match (&args.state, &file.initial) {
        (Some(s), _) => *s,
        (None, Some(s)) => s.parse()?,
        (None, None) => StateArg::Stationary,
    };
    let t = args.t.or(file.t).unwrap_or(0.0);
    if !(t >= 0.0 && t.is_finite()) {
        bail!("t must be non-negative and finite, got {t}");
    }
    let strict = args.strict || file.strict.unwrap_or(false);
    check_constraints(&p, strict)?;

    let (init, f0, c0) = match state {
        StateArg::Coherent(a) => {
            let mw = p.m_omega();
            let f0 = FirstMoments::new((2.0 * p.hbar / mw).sqrt() * a.re, (2.0 * p.hbar * mw).sqrt() * a.im);
            (GenFuncCoeffs::coherent(a), f0, CovarianceTriple::ground_state(&p))
        }
        StateArg::Stationary => (
            GenFuncCoeffs::stationary(&p)?,
            FirstMoments::new(0.0, 0.0),
            asymptotic_covariances(&p)?,
        ),
        StateArg::Moments(..) => bail!("density matrices need a coherent or stationary state"),
    };
    let n = match args.n.or(file.n) {
        Some(n) => n,
        None => default_levels(mean_excitation(
            &p,
            evolve_first_moments(&p, f0, t),
            evolve_covariances(&p, c0, t),
        )),
    };
    let config = DensityConfig {
        command: "density-matrix",
        params,
        state,
        t,
        n,
        strict,
    };
    let k = evolve_genfunc_coeffs(&p, &init, t)?;
    let rho = density_matrix_from_coeffs(&k, n + 1)?;
    let mut w = output::open(args.out.as_deref())?;
    output::write_json(&mut w, &config, serde_json::to_value(&rho)?)?;
    w.flush()?;
    Ok(())
}
