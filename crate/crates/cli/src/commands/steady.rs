use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use lindblad_osc::moments::{asymptotic_covariances, asymptotic_energy, check_asymptotic_constraint};
use lindblad_osc::params::check_fundamental_constraints;
use lindblad_osc::quasiprob::{steady_state_covariance, Mat2, SParameter};
use serde::Serialize;
use serde_json::json;

use super::check_constraints;
use crate::config::{FileConfig, ParamArgs, ResolvedParams};
use crate::output;

#[derive(Debug, Args)]
pub struct SteadyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Representations to report: comma-separated p, wigner, q [default: all]
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<SParameter>>,
    #[arg(long)]
    pub strict: bool,
    /// JSON path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SteadyConfig {
    command: &'static str,
    params: ResolvedParams,
    representations: Vec<SParameter>,
    strict: bool,
}

#[derive(Debug, Serialize)]
struct Representation {
    sigma: Mat2,
    positive_definite: bool,
}

pub fn run(args: &SteadyArgs, file: &FileConfig) -> Result<()> {
    let params = args.params.resolve(file)?;
    let p = params.params;
    let mut reps = match (&args.s, &file.s) {
        (Some(s), _) => s.clone(),
        (None, Some(names)) => names.iter().map(|n| n.parse()).collect::<lindblad_osc::Result<Vec<_>>>()?,
        (None, None) => SParameter::ALL.to_vec(),
    };
    reps.dedup();
    let strict = args.strict || file.strict.unwrap_or(false);
    let config = SteadyConfig {
        command: "steady",
        params,
        representations: reps.clone(),
        strict,
    };
    check_constraints(&p, strict)?;

    let inf = asymptotic_covariances(&p)?;
    let mut representations = BTreeMap::new();
    for s in reps {
        let sigma = steady_state_covariance(&p, s)?;
        let positive_definite = sigma[0][0] > 0.0 && sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0] > 0.0;
        representations.insert(s.name(), Representation { sigma, positive_definite });
    }
    let body = json!({
        "sigma_inf": inf,
        "energy_inf": asymptotic_energy(&p)?,
        "constraints": check_fundamental_constraints(&p),
        "asymptotic_constraint": check_asymptotic_constraint(&p, inf),
        "representations": representations,
    });
    let mut w = output::open(args.out.as_deref())?;
    output::write_json(&mut w, &config, body)?;
    w.flush()?;
    Ok(())
}
