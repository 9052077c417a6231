use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use lindblad_osc::catalog::{check_model, verify_catalog, LiteratureModel, ModelId, ModelReport};
use lindblad_osc::moments::{asymptotic_covariances, check_asymptotic_constraint};
use lindblad_osc::params::{check_fundamental_constraints, classify_regime};
use serde::Serialize;
use serde_json::json;

use super::StrictViolation;
use crate::config::{parse_key_value, FileConfig, ParamArgs, ResolvedParams};
use crate::output;

const CONSTANT_KEYS: [&str; 3] = ["m", "omega", "hbar"];

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Catalog model id, or `all` for the whole catalog. Without it the
    /// parameter flags are checked.
    #[arg(long)]
    pub model: Option<String>,
    /// Model free parameter as key=value (repeatable); unset keys keep their
    /// representative values.
    #[arg(long = "param", value_parser = parse_key_value)]
    pub model_params: Vec<(String, f64)>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Exit with status 2 when a checked parameter set violates the
    /// constraints.
    #[arg(long)]
    pub strict: bool,
    /// JSON path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum Target {
    Model {
        model: String,
        model_params: BTreeMap<String, f64>,
    },
    Params {
        params: ResolvedParams,
    },
}

#[derive(Debug, Serialize)]
struct ValidateConfig {
    command: &'static str,
    #[serde(flatten)]
    target: Target,
    strict: bool,
}

fn model_with_overrides(id: ModelId, overrides: &BTreeMap<String, f64>) -> Result<LiteratureModel> {
    let mut model = LiteratureModel::with_defaults(id);
    for (k, v) in overrides {
        if !model.free_params.contains_key(k) && !CONSTANT_KEYS.contains(&k.as_str()) {
            let known: Vec<&str> = id.defaults().iter().map(|(k, _)| *k).chain(CONSTANT_KEYS).collect();
            bail!("model {id} has no parameter `{k}` (known: {})", known.join(", "));
        }
        model.free_params.insert(k.clone(), *v);
    }
    Ok(model)
}

fn observed(report: &ModelReport) -> &'static str {
    if report.constraints.all_satisfied {
        "satisfied"
    } else {
        "violated"
    }
}

fn model_json(report: &ModelReport) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(report)?;
    v["observed_verdict"] = json!(observed(report));
    Ok(v)
}

pub fn run(args: &ValidateArgs, file: &FileConfig) -> Result<()> {
    let strict = args.strict || file.strict.unwrap_or(false);
    let model = args.model.clone().or_else(|| file.model.clone());
    let (config, body, violated) = match model {
        Some(name) => {
            let mut overrides = file.model_params.clone().unwrap_or_default();
            overrides.extend(args.model_params.iter().cloned());
            let target = Target::Model {
                model: name.clone(),
                model_params: overrides.clone(),
            };
            let (body, violated) = if name == "all" {
                if !overrides.is_empty() {
                    bail!("--param cannot be combined with --model all");
                }
                let reports = verify_catalog();
                let violated = reports.iter().any(|r| !r.constraints.all_satisfied);
                let list = reports.iter().map(model_json).collect::<Result<Vec<_>>>()?;
                (json!({ "reports": list }), violated)
            } else {
                let id: ModelId = name.parse()?;
                let report = check_model(&model_with_overrides(id, &overrides)?)?;
                (model_json(&report)?, !report.constraints.all_satisfied)
            };
            (
                ValidateConfig {
                    command: "validate",
                    target,
                    strict,
                },
                body,
                violated,
            )
        }
        None => {
            if !args.model_params.is_empty() {
                bail!("--param needs --model");
            }
            let params = args.params.resolve(file)?;
            let p = params.params;
            let constraints = check_fundamental_constraints(&p);
            let asymptotic = asymptotic_covariances(&p).ok().map(|inf| check_asymptotic_constraint(&p, inf));
            let body = json!({
                "constraints": constraints,
                "regime": classify_regime(&p),
                "asymptotic_constraint": asymptotic,
            });
            (
                ValidateConfig {
                    command: "validate",
                    target: Target::Params { params },
                    strict,
                },
                body,
                !constraints.all_satisfied,
            )
        }
    };
    let mut w = output::open(args.out.as_deref())?;
    output::write_json(&mut w, &config, body)?;
    w.flush()?;
    if strict && violated {
        return Err(StrictViolation("see the report".into()).into());
    }
    Ok(())
}
