//! Flags, the optional JSON run file, and their merge (flags win).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use lindblad_osc::{Complex64, CovarianceTriple, FirstMoments, OscillatorParams};
use serde::{Deserialize, Serialize};

/// Contents of `--config run.json`. Every field is optional; a flag given on
/// the command line replaces the corresponding entry.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub params: ParamsFile,
    pub gibbs_coth: Option<f64>,
    pub initial: Option<String>,
    pub t_max: Option<f64>,
    pub n_points: Option<usize>,
    pub outputs: Option<Vec<String>>,
    pub oracle: Option<bool>,
    pub oracle_n: Option<usize>,
    pub strict: Option<bool>,
    pub t: Option<f64>,
    pub n: Option<usize>,
    pub rep: Option<String>,
    pub steady: Option<bool>,
    pub xmin: Option<f64>,
    pub xmax: Option<f64>,
    pub ymin: Option<f64>,
    pub ymax: Option<f64>,
    pub s: Option<Vec<String>>,
    pub model: Option<String>,
    pub model_params: Option<BTreeMap<String, f64>>,
    pub lambdas: Option<String>,
    pub mus: Option<String>,
    pub temperatures: Option<String>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub m: Option<f64>,
    pub omega: Option<f64>,
    pub hbar: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub d_qq: Option<f64>,
    pub d_pp: Option<f64>,
    pub d_pq: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Physical constants shared by every command.
#[derive(Debug, Clone, Args)]
pub struct ConstantArgs {
    /// Mass.
    #[arg(long)]
    pub m: Option<f64>,
    /// Oscillator frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Reduced Planck constant.
    #[arg(long)]
    pub hbar: Option<f64>,
}

impl ConstantArgs {
    pub fn resolve(&self, file: &ParamsFile) -> (f64, f64, f64) {
        (
            self.m.or(file.m).unwrap_or(1.0),
            self.omega.or(file.omega).unwrap_or(1.0),
            self.hbar.or(file.hbar).unwrap_or(1.0),
        )
    }
}

/// Friction and diffusion coefficients.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[command(flatten)]
    pub constants: ConstantArgs,
    /// Overall friction rate.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Friction asymmetry between q and p (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d_qq: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d_pp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d_pq: Option<f64>,
    /// Derive the diffusion coefficients of the Gibbs state with
    /// coth(hbar omega / 2kT) = COTH instead of giving them directly.
    #[arg(long)]
    pub gibbs_coth: Option<f64>,
}

impl ParamArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<ResolvedParams> {
        let fp = &file.params;
        let (m, omega, hbar) = self.constants.resolve(fp);
        let lambda = self
            .lambda
            .or(fp.lambda)
            .ok_or_else(|| anyhow!("missing --lambda (or params.lambda in the config file)"))?;
        let mu = self.mu.or(fp.mu).unwrap_or(0.0);
        let flag_d = self.d_qq.is_some() || self.d_pp.is_some() || self.d_pq.is_some();
        let file_d = fp.d_qq.is_some() || fp.d_pp.is_some() || fp.d_pq.is_some();
        if self.gibbs_coth.is_some() && flag_d {
            bail!("--gibbs-coth conflicts with explicit diffusion coefficients");
        }
        // a flag on one side replaces the file's choice on the other
        let coth = match (self.gibbs_coth, flag_d) {
            (Some(c), _) => Some(c),
            (None, true) => None,
            (None, false) => {
                if file.gibbs_coth.is_some() && file_d {
                    bail!("config file sets both gibbs_coth and diffusion coefficients");
                }
                file.gibbs_coth
            }
        };
        let params = match coth {
            Some(c) => {
                if !(c >= 1.0) {
                    bail!("gibbs coth must be at least 1, got {c}");
                }
                OscillatorParams::gibbs(m, omega, hbar, lambda, mu, c)?
            }
            None => {
                let get = |flag: Option<f64>, file: Option<f64>, name: &str| {
                    flag.or(if flag_d { None } else { file })
                        .ok_or_else(|| anyhow!("missing --{name} (or --gibbs-coth)"))
                };
                let d_qq = get(self.d_qq, fp.d_qq, "d-qq")?;
                let d_pp = get(self.d_pp, fp.d_pp, "d-pp")?;
                let d_pq = self.d_pq.or(if flag_d { None } else { fp.d_pq }).unwrap_or(0.0);
                OscillatorParams::new(m, omega, hbar, lambda, mu, d_qq, d_pp, d_pq)?
            }
        };
        Ok(ResolvedParams { params, gibbs_coth: coth })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedParams {
    #[serde(flatten)]
    pub params: OscillatorParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gibbs_coth: Option<f64>,
}

/// Initial state given as `coherent:RE,IM`, `moments:Q,P,QQ,PP,PQ` or
/// `stationary`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateArg {
    Coherent(Complex64),
    Moments(FirstMoments, CovarianceTriple),
    Stationary,
}

fn parse_numbers(s: &str, count: usize, what: &str) -> Result<Vec<f64>> {
    let xs = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| anyhow!("{what}: `{x}`: {e}")))
        .collect::<Result<Vec<_>>>()?;
    if xs.len() != count || xs.iter().any(|x| !x.is_finite()) {
        bail!("{what} expects {count} finite comma-separated numbers, got `{s}`");
    }
    Ok(xs)
}

impl FromStr for StateArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "stationary" if rest.is_empty() => Ok(StateArg::Stationary),
            "coherent" => {
                let v = parse_numbers(rest, 2, "coherent state")?;
                Ok(StateArg::Coherent(Complex64::new(v[0], v[1])))
            }
            "moments" => {
                let v = parse_numbers(rest, 5, "moment state")?;
                Ok(StateArg::Moments(FirstMoments::new(v[0], v[1]), CovarianceTriple::new(v[2], v[3], v[4])))
            }
            _ => bail!("unknown state `{s}` (expected coherent:RE,IM, moments:Q,P,QQ,PP,PQ or stationary)"),
        }
    }
}

impl fmt::Display for StateArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateArg::Coherent(a) => write!(f, "coherent:{:?},{:?}", a.re, a.im),
            StateArg::Moments(m, c) => write!(
                f,
                "moments:{:?},{:?},{:?},{:?},{:?}",
                m.sigma_q, m.sigma_p, c.sigma_qq, c.sigma_pp, c.sigma_pq
            ),
            StateArg::Stationary => f.write_str("stationary"),
        }
    }
}

impl Serialize for StateArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_value_list(s: &str) -> Result<Vec<f64>> {
    let values = if let Some((start, rest)) = s.split_once(':') {
        let (stop, count) = rest
            .split_once(':')
            .ok_or_else(|| anyhow!("range `{s}` must be start:stop:count"))?;
        let (a, b): (f64, f64) = (start.trim().parse()?, stop.trim().parse()?);
        let n: usize = count.trim().parse()?;
        match n {
            0 => bail!("range `{s}` needs at least one point"),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| anyhow!("`{x}`: {e}")))
            .collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
        bail!("value list `{s}` must contain finite numbers");
    }
    Ok(values)
}

/// `key=value` for catalog free parameters.
pub fn parse_key_value(s: &str) -> Result<(String, f64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| anyhow!("`{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Worker count: LINDBLAD_OSC_JOBS, then `--jobs`, then the machine default.
pub fn resolve_jobs(flag: Option<usize>) -> Result<Option<usize>> {
    let env = match std::env::var("LINDBLAD_OSC_JOBS") {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|e| anyhow!("LINDBLAD_OSC_JOBS=`{v}`: {e}"))?,
        ),
        _ => None,
    };
    let jobs = env.or(flag);
    if jobs == Some(0) {
        bail!("the number of jobs must be positive");
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(lambda: Option<f64>) -> ParamArgs {
        ParamArgs {
            constants: ConstantArgs {
                m: None,
                omega: None,
                hbar: None,
            },
            lambda,
            mu: None,
            d_qq: None,
            d_pp: None,
            d_pq: None,
            gibbs_coth: None,
        }
    }

    #[test]
    fn states_round_trip() {
        for s in ["coherent:0.6,-0.25", "stationary", "moments:0.1,0.2,0.5,0.5,0"] {
            let st: StateArg = s.parse().unwrap();
            assert_eq!(st.to_string().parse::<StateArg>().unwrap(), st);
        }
        assert!("coherent:1".parse::<StateArg>().is_err());
        assert!("thermal".parse::<StateArg>().is_err());
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_value_list("0.1,0.5").unwrap(), vec![0.1, 0.5]);
        assert_eq!(parse_value_list("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_value_list("0:1").is_err());
        assert!(parse_value_list("a").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig =
            serde_json::from_str(r#"{"params": {"lambda": 0.3, "mu": 0.1}, "gibbs_coth": 2.0}"#).unwrap();
        let r = args(None).resolve(&file).unwrap();
        assert_eq!(r.params.lambda, 0.3);
        assert_eq!(r.gibbs_coth, Some(2.0));
        let mut a = args(Some(0.5));
        a.d_qq = Some(1.0);
        a.d_pp = Some(1.0);
        let r = a.resolve(&file).unwrap();
        assert_eq!((r.params.lambda, r.params.d_qq, r.gibbs_coth), (0.5, 1.0, None));
    }

    #[test]
    fn missing_diffusion_is_reported() {
        let err = args(Some(0.5)).resolve(&FileConfig::default()).unwrap_err();
        assert!(err.to_string().contains("d-qq"));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"lamda": 1}"#).is_err());
    }
}
