use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use lindblad_osc::densmat::{density_matrix_from_coeffs, evolve_genfunc_coeffs, GenFuncCoeffs};
use lindblad_osc::fock::{integrate, moment_deviation, moments_of, FockRates, IntegratorConfig};
use lindblad_osc::moments::{asymptotic_covariances, uniform_grid};
use lindblad_osc::quasiprob::{representation_covariance, SParameter};
use lindblad_osc::{CovarianceTriple, FirstMoments, MomentTrajectory, OscillatorParams};
use serde::Serialize;

use super::{amplitude_mean, check_constraints, default_levels, mean_excitation};
use crate::config::{FileConfig, ParamArgs, ResolvedParams, StateArg};
use crate::output;

/// Largest oracle step; the integrator subdivides further when the
/// truncated generator needs it.
const ORACLE_STEP: f64 = 1e-3;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// coherent:RE,IM, moments:Q,P,QQ,PP,PQ or stationary [default: coherent:0,0]
    #[arg(long, alias = "initial")]
    pub state: Option<StateArg>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of output times on [0, t_max] [default: 101]
    #[arg(long)]
    pub n_points: Option<usize>,
    /// Comma-separated subset of moments, energy, density, wigner, p, q
    /// [default: moments,energy]
    #[arg(long, value_delimiter = ',')]
    pub outputs: Option<Vec<String>>,
    /// Also integrate in a truncated number basis and report the largest
    /// deviation from the closed forms.
    #[arg(long)]
    pub oracle: bool,
    /// Truncation N for the oracle and the density output.
    #[arg(long)]
    pub oracle_n: Option<usize>,
    /// Exit with status 2 when the constraints are violated.
    #[arg(long)]
    pub strict: bool,
    /// Trajectory CSV path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the density matrix at t_max (with `density` output).
    #[arg(long)]
    pub density_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
enum OutputKind {
    Moments,
    Energy,
    P,
    Wigner,
    Q,
    Density,
}

impl OutputKind {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "moments" => OutputKind::Moments,
            "energy" => OutputKind::Energy,
            "density" => OutputKind::Density,
            "wigner" | "w" => OutputKind::Wigner,
            "p" => OutputKind::P,
            "q" => OutputKind::Q,
            other => bail!("unknown output `{other}` (expected moments, energy, density, wigner, p or q)"),
        })
    }

    fn representation(self) -> Option<SParameter> {
        match self {
            OutputKind::P => Some(SParameter::GlauberP),
            OutputKind::Wigner => Some(SParameter::Wigner),
            OutputKind::Q => Some(SParameter::Q),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize)]
struct SimulateConfig {
    command: &'static str,
    params: ResolvedParams,
    initial: StateArg,
    t_max: f64,
    n_points: usize,
    outputs: Vec<OutputKind>,
    oracle: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_n: Option<usize>,
    strict: bool,
}

#[derive(Debug, Serialize)]
struct OracleSummary {
    max_deviation: f64,
    levels: usize,
    step: f64,
    tail_negligible: bool,
}

fn initial_moments(p: &OscillatorParams, state: StateArg) -> Result<(FirstMoments, CovarianceTriple)> {
    Ok(match state {
        StateArg::Coherent(a) => {
            let mw = p.m_omega();
            (
                FirstMoments::new((2.0 * p.hbar / mw).sqrt() * a.re, (2.0 * p.hbar * mw).sqrt() * a.im),
                CovarianceTriple::ground_state(p),
            )
        }
        StateArg::Moments(f, c) => (f, c),
        StateArg::Stationary => (FirstMoments::new(0.0, 0.0), asymptotic_covariances(p)?),
    })
}

fn genfunc_start(p: &OscillatorParams, state: StateArg) -> Result<GenFuncCoeffs> {
    Ok(match state {
        StateArg::Coherent(a) => GenFuncCoeffs::coherent(a),
        StateArg::Stationary => GenFuncCoeffs::stationary(p)?,
        StateArg::Moments(..) => bail!("number-basis output needs a coherent or stationary initial state"),
    })
}

fn run_oracle(p: &OscillatorParams, state: StateArg, traj: &MomentTrajectory, levels: usize) -> Result<OracleSummary> {
    let dim = levels + 1;
    let init = density_matrix_from_coeffs(&genfunc_start(p, state)?, dim)?;
    let rates = FockRates::from_params(p);
    let step = ORACLE_STEP.min(rates.max_step());
    let mut cfg = IntegratorConfig::new(step, traj.times.clone());
    cfg.eigenvalues = false;
    let samples = integrate(&rates, &init, &cfg)
        .with_context(|| format!("oracle integration with {dim} levels (raise --oracle-n)"))?;
    let mut max_deviation = 0.0f64;
    let mut tail_negligible = true;
    for (i, s) in samples.iter().enumerate() {
        let o = moments_of(&s.state, p);
        tail_negligible &= o.reliable;
        max_deviation = max_deviation.max(moment_deviation(p, traj.first[i], traj.cov[i], &o));
    }
    Ok(OracleSummary {
        max_deviation,
        levels,
        step,
        tail_negligible,
    })
}

pub fn run(args: &SimulateArgs, file: &FileConfig) -> Result<()> {
    let params = args.params.resolve(file)?;
    let p = params.params;
    let initial = match (&args.state, &file.initial) {
        (Some(s), _) => *s,
        (None, Some(s)) => s.parse()?,
        (None, None) => StateArg::Coherent(Default::default()),
    };
    let t_max = args
        .t_max
        .or(file.t_max)
        .ok_or_else(|| anyhow::anyhow!("missing --t-max"))?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        bail!("t_max must be positive and finite, got {t_max}");
    }
    let n_points = args.n_points.or(file.n_points).unwrap_or(101);
    if n_points < 2 {
        bail!("n_points must be at least 2, got {n_points}");
    }
    let names = args
        .outputs
        .clone()
        .or_else(|| file.outputs.clone())
        .unwrap_or_else(|| vec!["moments".into(), "energy".into()]);
    let mut outputs = names.iter().map(|s| OutputKind::parse(s)).collect::<Result<Vec<_>>>()?;
    outputs.sort();
    outputs.dedup();
    let oracle = args.oracle || file.oracle.unwrap_or(false);
    let oracle_n = args.oracle_n.or(file.oracle_n);
    let strict = args.strict || file.strict.unwrap_or(false);
    let wants_density = outputs.contains(&OutputKind::Density);
    if wants_density && args.density_out.is_none() {
        bail!("the density output needs --density-out PATH");
    }
    if (oracle || wants_density) && matches!(initial, StateArg::Moments(..)) {
        bail!("--oracle and the density output need a coherent or stationary initial state");
    }
    let config = SimulateConfig {
        command: "simulate",
        params,
        initial,
        t_max,
        n_points,
        outputs: outputs.clone(),
        oracle,
        oracle_n,
        strict,
    };
    check_constraints(&p, strict)?;

    let (f0, c0) = initial_moments(&p, initial)?;
    let traj = MomentTrajectory::compute(&p, f0, c0, &uniform_grid(t_max, n_points))?;
    let levels = oracle_n.unwrap_or_else(|| {
        let n_max = (0..traj.len()).map(|i| mean_excitation(&p, traj.first[i], traj.cov[i])).fold(0.0, f64::max);
        default_levels(n_max)
    });

    let reps: Vec<SParameter> = outputs.iter().filter_map(|o| o.representation()).collect();
    let mut header = vec!["t".to_string()];
    if outputs.contains(&OutputKind::Moments) {
        header.extend(["sigma_q", "sigma_p", "sigma_qq", "sigma_pp", "sigma_pq"].map(String::from));
    }
    if outputs.contains(&OutputKind::Energy) {
        header.push("energy".into());
    }
    if !reps.is_empty() {
        header.extend(["alpha_re", "alpha_im"].map(String::from));
    }
    for s in &reps {
        header.extend(["11", "22", "12"].map(|ij| format!("{}_{ij}", s.name())));
    }

    let mut w = output::open(args.out.as_deref())?;
    output::write_config_line(&mut w, &config)?;
    writeln!(w, "{}", header.join(","))?;
    for i in 0..traj.len() {
        let (f, c) = (traj.first[i], traj.cov[i]);
        let mut row = vec![traj.times[i]];
        if outputs.contains(&OutputKind::Moments) {
            row.extend([f.sigma_q, f.sigma_p, c.sigma_qq, c.sigma_pp, c.sigma_pq]);
        }
        if outputs.contains(&OutputKind::Energy) {
            row.push(traj.energy[i]);
        }
        if !reps.is_empty() {
            row.extend(amplitude_mean(&p, f));
        }
        for &s in &reps {
            let m = representation_covariance(&p, c, s);
            row.extend([m[0][0], m[1][1], m[0][1]]);
        }
        writeln!(w, "{}", output::csv_row(&row))?;
    }

    if oracle {
        let summary = run_oracle(&p, initial, &traj, levels)?;
        writeln!(w, "# oracle: {}", serde_json::to_string(&summary)?)?;
        eprintln!(
            "oracle: max deviation {:e} over {} times ({} levels, step {:e}, tail negligible: {})",
            summary.max_deviation, n_points, summary.levels, summary.step, summary.tail_negligible
        );
    }
    w.flush()?;

    if let Some(path) = &args.density_out {
        let k = evolve_genfunc_coeffs(&p, &genfunc_start(&p, initial)?, t_max)?;
        let rho = density_matrix_from_coeffs(&k, levels + 1)?;
        let mut dw = output::open(Some(path))?;
        output::write_json(&mut dw, &config, serde_json::to_value(&rho)?)?;
        dw.flush()?;
    }
    Ok(())
}
