use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;
use lindblad_osc::moments::{asymptotic_covariances, asymptotic_energy};
use lindblad_osc::params::check_fundamental_constraints;
use lindblad_osc::OscillatorParams;
use rayon::prelude::*;
use serde::Serialize;

use super::StrictViolation;
use crate::config::{parse_value_list, ConstantArgs, FileConfig};
use crate::output;

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub constants: ConstantArgs,
    /// Friction rates: a,b,c or start:stop:count
    #[arg(long, allow_hyphen_values = true)]
    pub lambdas: Option<String>,
    /// Asymmetries: a,b,c or start:stop:count [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub mus: Option<String>,
    /// Bath temperatures kT (k = 1): a,b,c or start:stop:count
    #[arg(long)]
    pub temperatures: Option<String>,
    /// Exit with status 2 when any point violates the constraints.
    #[arg(long)]
    pub strict: bool,
    /// CSV path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SweepConfig {
    command: &'static str,
    m: f64,
    omega: f64,
    hbar: f64,
    lambdas: Vec<f64>,
    mus: Vec<f64>,
    temperatures: Vec<f64>,
    strict: bool,
}

const HEADER: &str = "lambda,mu,temperature,coth,d_qq,d_pp,constraints_ok,steady,sigma_qq_inf,sigma_pp_inf,sigma_pq_inf,energy_inf";

/// coth(ħω/2kT), equal to 1 at zero temperature.
fn thermal_coth(hbar: f64, omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        1.0
    } else {
        1.0 / (hbar * omega / (2.0 * temperature)).tanh()
    }
}

struct Point {
    row: String,
    constraints_ok: bool,
}

fn evaluate(m: f64, omega: f64, hbar: f64, lambda: f64, mu: f64, temperature: f64) -> Result<Point> {
    let coth = thermal_coth(hbar, omega, temperature);
    let p = OscillatorParams::gibbs(m, omega, hbar, lambda, mu, coth)?;
    let constraints_ok = check_fundamental_constraints(&p).all_satisfied;
    let steady = p.has_steady_state();
    let (inf, energy) = match (asymptotic_covariances(&p), asymptotic_energy(&p)) {
        (Ok(c), Ok(e)) => ([c.sigma_qq, c.sigma_pp, c.sigma_pq], e),
        _ => ([f64::NAN; 3], f64::NAN),
    };
    let numbers = output::csv_row(&[lambda, mu, temperature, coth, p.d_qq, p.d_pp]);
    let tail = output::csv_row(&[inf[0], inf[1], inf[2], energy]);
    Ok(Point {
        row: format!("{numbers},{constraints_ok},{steady},{tail}"),
        constraints_ok,
    })
}

pub fn run(args: &SweepArgs, file: &FileConfig) -> Result<()> {
    let (m, omega, hbar) = args.constants.resolve(&file.params);
    let list = |flag: &Option<String>, file: &Option<String>, name: &str, default: Option<&str>| {
        let s = flag
            .clone()
            .or_else(|| file.clone())
            .or(default.map(String::from))
            .ok_or_else(|| anyhow!("missing --{name}"))?;
        parse_value_list(&s)
    };
    let lambdas = list(&args.lambdas, &file.lambdas, "lambdas", None)?;
    let mus = list(&args.mus, &file.mus, "mus", Some("0"))?;
    let temperatures = list(&args.temperatures, &file.temperatures, "temperatures", None)?;
    if temperatures.iter().any(|&t| t < 0.0) {
        bail!("temperatures must be non-negative");
    }
    let strict = args.strict || file.strict.unwrap_or(false);
    let config = SweepConfig {
        command: "sweep",
        m,
        omega,
        hbar,
        lambdas: lambdas.clone(),
        mus: mus.clone(),
        temperatures: temperatures.clone(),
        strict,
    };
    let mut grid = Vec::with_capacity(lambdas.len() * mus.len() * temperatures.len());
    for &l in &lambdas {
        for &mu in &mus {
            grid.extend(temperatures.iter().map(|&t| (l, mu, t)));
        }
    }
    let points = grid
        .par_iter()
        .map(|&(l, mu, t)| evaluate(m, omega, hbar, l, mu, t))
        .collect::<Result<Vec<_>>>()?;

    let mut w = output::open(args.out.as_deref())?;
    output::write_config_line(&mut w, &config)?;
    writeln!(w, "{HEADER}")?;
    for pt in &points {
        writeln!(w, "{}", pt.row)?;
    }
    w.flush()?;
    let violations = points.iter().filter(|p| !p.constraints_ok).count();
    if violations > 0 {
        if strict {
            return Err(StrictViolation(format!("{violations} of {} sweep points", points.len())).into());
        }
        eprintln!("warning: {violations} of {} sweep points violate the constraints", points.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_temperature_is_ground_state() {
        assert_eq!(thermal_coth(1.0, 1.0, 0.0), 1.0);
        assert!((thermal_coth(1.0, 1.0, 1.0 / (2.0 * 3f64.ln())) - 1.25).abs() < 1e-12);
    }
}
