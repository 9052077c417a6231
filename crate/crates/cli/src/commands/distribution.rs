use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use lindblad_osc::moments::{asymptotic_covariances, evolve_covariances, evolve_first_moments};
use lindblad_osc::quasiprob::{
    evaluate_distribution, grid_points, representation_covariance, steady_state_covariance, GaussianDistribution,
    SParameter,
};
use lindblad_osc::{CovarianceTriple, FirstMoments};
use serde::Serialize;

use super::{amplitude_mean, check_constraints};
use crate::config::{FileConfig, ParamArgs, ResolvedParams, StateArg};
use crate::output;

#[derive(Debug, Args)]
pub struct DistributionArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// p, wigner or q [default: wigner]
    #[arg(long)]
    pub rep: Option<SParameter>,
    /// Use the steady state (ignores --state and --t).
    #[arg(long)]
    pub steady: bool,
    /// coherent:RE,IM, moments:Q,P,QQ,PP,PQ or stationary
    #[arg(long)]
    pub state: Option<StateArg>,
    /// Evolution time [default: 0]
    #[arg(long)]
    pub t: Option<f64>,
    /// Grid over x1 = Re alpha [default: -6]
    #[arg(long, allow_hyphen_values = true)]
    pub xmin: Option<f64>,
    /// [default: 6]
    #[arg(long, allow_hyphen_values = true)]
    pub xmax: Option<f64>,
    /// Grid over x2 = Im alpha [default: -6]
    #[arg(long, allow_hyphen_values = true)]
    pub ymin: Option<f64>,
    /// [default: 6]
    #[arg(long, allow_hyphen_values = true)]
    pub ymax: Option<f64>,
    /// Points per axis, endpoints included [default: 241]
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub strict: bool,
    /// CSV path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DistributionConfig {
    command: &'static str,
    params: ResolvedParams,
    rep: SParameter,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<StateArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
    n: usize,
    strict: bool,
}

pub fn run(args: &DistributionArgs, file: &FileConfig) -> Result<()> {
    let params = args.params.resolve(file)?;
    let p = params.params;
    let rep = match (args.rep, &file.rep) {
        (Some(r), _) => r,
        (None, Some(r)) => r.parse()?,
        (None, None) => SParameter::Wigner,
    };
    let state = match (&args.state, &file.initial) {
        (Some(s), _) => Some(*s),
        (None, Some(s)) => Some(s.parse()?),
        (None, None) => None,
    };
    let steady = args.steady || file.steady.unwrap_or(false) || state.is_none();
    let t = args.t.or(file.t).unwrap_or(0.0);
    if !(t >= 0.0 && t.is_finite()) {
        bail!("t must be non-negative and finite, got {t}");
    }
    let [xmin, xmax, ymin, ymax] = [
        args.xmin.or(file.xmin).unwrap_or(-6.0),
        args.xmax.or(file.xmax).unwrap_or(6.0),
        args.ymin.or(file.ymin).unwrap_or(-6.0),
        args.ymax.or(file.ymax).unwrap_or(6.0),
    ];
    if !(xmin < xmax && ymin < ymax) || ![xmin, xmax, ymin, ymax].iter().all(|x| x.is_finite()) {
        bail!("grid bounds must be finite with xmin < xmax and ymin < ymax");
    }
    let n = args.n.or(file.n).unwrap_or(241);
    if n < 2 {
        bail!("the grid needs at least 2 points per axis, got {n}");
    }
    let strict = args.strict || file.strict.unwrap_or(false);
    let config = DistributionConfig {
        command: "distribution",
        params,
        rep,
        state: if steady { None } else { state },
        t: if steady { None } else { Some(t) },
        xmin,
        xmax,
        ymin,
        ymax,
        n,
        strict,
    };
    check_constraints(&p, strict)?;

    let dist = match (steady, state) {
        (false, Some(StateArg::Coherent(a))) => {
            let mw = p.m_omega();
            let f0 = FirstMoments::new((2.0 * p.hbar / mw).sqrt() * a.re, (2.0 * p.hbar * mw).sqrt() * a.im);
            evolved(&p, rep, f0, CovarianceTriple::ground_state(&p), t)
        }
        (false, Some(StateArg::Moments(f0, c0))) => evolved(&p, rep, f0, c0, t),
        (false, Some(StateArg::Stationary)) => {
            evolved(&p, rep, FirstMoments::new(0.0, 0.0), asymptotic_covariances(&p)?, t)
        }
        _ => GaussianDistribution::new([0.0, 0.0], steady_state_covariance(&p, rep)?),
    };
    let points = grid_points(xmin, xmax, ymin, ymax, n);
    let values = evaluate_distribution(&dist, &points)?;
    let mut w = output::open(args.out.as_deref())?;
    output::write_config_line(&mut w, &config)?;
    writeln!(w, "x1,x2,value")?;
    for (x, v) in points.iter().zip(&values) {
        writeln!(w, "{}", output::csv_row(&[x[0], x[1], *v]))?;
    }
    w.flush()?;
    Ok(())
}

fn evolved(
    p: &lindblad_osc::OscillatorParams,
    rep: SParameter,
    f0: FirstMoments,
    c0: CovarianceTriple,
    t: f64,
) -> GaussianDistribution {
    let f = evolve_first_moments(p, f0, t);
    let c = evolve_covariances(p, c0, t);
    GaussianDistribution::new(amplitude_mean(p, f), representation_covariance(p, c, rep))
}
