//! Master equations from the literature written as special cases of the
//! Lindblad oscillator, with the verdict each one receives from the
//! complete-positivity constraints.
//!
//! Every model reads its free parameters from a name → value map; `m`,
//! `omega` and `hbar` are optional and default to 1. Time-dependent driving
//! terms are dropped and constant frequency shifts folded into m and ω.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{check_fundamental_constraints, derived_coefficients, ConstraintReport, OscillatorParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    Dekker,
    HofmannEtAl,
    Hasse,
    SpinaWeidenmullerI,
    SpinaWeidenmullerII,
    SqueezedBath,
    HarmonicBath,
    CorrelatedEmission,
    JangRwa,
    JangExtended,
    Gibbs,
}

impl ModelId {
    pub const ALL: [ModelId; 11] = [
        ModelId::Dekker,
        ModelId::HofmannEtAl,
        ModelId::Hasse,
        ModelId::SpinaWeidenmullerI,
        ModelId::SpinaWeidenmullerII,
        ModelId::SqueezedBath,
        ModelId::HarmonicBath,
        ModelId::CorrelatedEmission,
        ModelId::JangRwa,
        ModelId::JangExtended,
        ModelId::Gibbs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Dekker => "dekker",
            ModelId::HofmannEtAl => "hofmann",
            ModelId::Hasse => "hasse",
            ModelId::SpinaWeidenmullerI => "spina-weidenmuller-1",
            ModelId::SpinaWeidenmullerII => "spina-weidenmuller-2",
            ModelId::SqueezedBath => "squeezed-bath",
            ModelId::HarmonicBath => "harmonic-bath",
            ModelId::CorrelatedEmission => "correlated-emission",
            ModelId::JangRwa => "jang-rwa",
            ModelId::JangExtended => "jang-extended",
            ModelId::Gibbs => "gibbs",
        }
    }

    pub fn expected_verdict(self) -> Verdict {
        match self {
            ModelId::HofmannEtAl
            | ModelId::Hasse
            | ModelId::SpinaWeidenmullerI
            | ModelId::HarmonicBath
            | ModelId::JangExtended => Verdict::Violated,
            ModelId::SpinaWeidenmullerII | ModelId::JangRwa => Verdict::Satisfied,
            ModelId::Dekker | ModelId::SqueezedBath | ModelId::CorrelatedEmission | ModelId::Gibbs => {
                Verdict::Conditional
            }
        }
    }

    /// Free parameters (besides m, ω, ħ) and their representative values.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            ModelId::Dekker => &[("lambda", 0.3), ("d_qq", 0.4), ("d_pp", 0.5), ("d_pq", 0.05)],
            ModelId::HofmannEtAl => &[("gamma", 0.4), ("t_star", 1.5)],
            ModelId::Hasse => &[("gamma", 0.4), ("D", 0.2), ("d", 0.1)],
            ModelId::SpinaWeidenmullerI => &[("Gamma", 0.4), ("D", 0.3), ("B", 0.1), ("A", 0.2)],
            ModelId::SpinaWeidenmullerII => &[("Gamma", 0.2), ("D_p", 0.6), ("D_R", 0.5), ("A", 0.1)],
            ModelId::SqueezedBath => &[("gamma", 0.2), ("N", 0.5), ("M_re", 0.3), ("M_im", 0.2)],
            ModelId::HarmonicBath => &[("gamma", 0.2), ("nbar", 1.0)],
            ModelId::CorrelatedEmission => &[
                ("Lambda1_re", 0.15),
                ("Lambda1_im", -0.5),
                ("Lambda2_re", 0.35),
                ("Lambda2_im", 0.5),
                ("Lambda3_re", 0.0),
                ("Lambda3_im", 0.025),
                ("Lambda4_re", 0.1),
                ("Lambda4_im", 0.025),
            ],
            ModelId::JangRwa | ModelId::JangExtended => &[("n", 1.0), ("Gamma", 0.4)],
            ModelId::Gibbs => &[("lambda", 0.5), ("mu", 0.2), ("coth", 2.0)],
        }
    }

    /// The model's own constraint, for conditional verdicts.
    pub fn condition(self) -> Option<&'static str> {
        match self {
            ModelId::Dekker => Some("mu = lambda and D_pp D_qq - D_pq^2 >= lambda^2 hbar^2 / 4 with D_pp, D_qq > 0"),
            ModelId::SqueezedBath => Some("N (N + 1) >= |M|^2"),
            ModelId::CorrelatedEmission => Some("D2 > 0 and D2^2 - |D1|^2 >= lambda^2"),
            ModelId::Gibbs => Some("lambda > mu and (lambda^2 - mu^2) coth^2 >= lambda^2"),
            _ => None,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        let alias = match key.as_str() {
            "hofmann-et-al" => "hofmann",
            "spina-weidenmuller-i" | "sw1" => "spina-weidenmuller-1",
            "spina-weidenmuller-ii" | "sw2" => "spina-weidenmuller-2",
            other => other,
        };
        ModelId::ALL
            .iter()
            .copied()
            .find(|m| m.name() == alias)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteratureModel {
    pub id: ModelId,
    pub free_params: BTreeMap<String, f64>,
    pub expected_verdict: Verdict,
}

impl LiteratureModel {
    /// The model with its representative parameters.
    pub fn with_defaults(id: ModelId) -> Self {
        Self {
            id,
            free_params: id.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            expected_verdict: id.expected_verdict(),
        }
    }

    /// The model with only the given parameters (no defaults filled in).
    pub fn new(id: ModelId, free_params: BTreeMap<String, f64>) -> Self {
        Self {
            id,
            free_params,
            expected_verdict: id.expected_verdict(),
        }
    }

    fn get(&self, key: &str) -> Result<f64> {
        self.free_params
            .get(key)
            .copied()
            .ok_or_else(|| Error::MissingParam(key.to_string()))
    }

    fn get_or(&self, key: &str, default: f64) -> f64 {
        self.free_params.get(key).copied().unwrap_or(default)
    }

    /// Whether the model's own condition holds (None for models with an
    /// unconditional verdict).
    pub fn condition_holds(&self) -> Result<Option<bool>> {
        Ok(match self.id {
            ModelId::Dekker => {
                let r = check_fundamental_constraints(&self.instantiate()?);
                Some(r.all_satisfied)
            }
            ModelId::SqueezedBath => {
                let n = self.get("N")?;
                let m2 = self.get("M_re")?.powi(2) + self.get("M_im")?.powi(2);
                Some(n * (n + 1.0) >= m2)
            }
            ModelId::CorrelatedEmission => {
                let p = self.instantiate()?;
                let d = derived_coefficients(&p);
                Some(d.d2 > 0.0 && d.d2 * d.d2 - d.d1.norm_sqr() >= p.lambda * p.lambda)
            }
            ModelId::Gibbs => {
                let (l, mu, c) = (self.get("lambda")?, self.get("mu")?, self.get("coth")?);
                Some(l > mu && (l * l - mu * mu) * c * c >= l * l)
            }
            _ => None,
        })
    }

    pub fn instantiate(&self) -> Result<OscillatorParams> {
        let m = self.get_or("m", 1.0);
        let omega = self.get_or("omega", 1.0);
        let hbar = self.get_or("hbar", 1.0);
        let mw = m * omega;
        match self.id {
            ModelId::Dekker => {
                let l = self.get("lambda")?;
                OscillatorParams::new(m, omega, hbar, l, l, self.get("d_qq")?, self.get("d_pp")?, self.get("d_pq")?)
            }
            ModelId::HofmannEtAl => {
                let g = self.get("gamma")?;
                let l = g / (2.0 * m);
                OscillatorParams::new(m, omega, hbar, l, l, 0.0, g * self.get("t_star")?, 0.0)
            }
            ModelId::Hasse => {
                let l = 0.5 * self.get("gamma")?;
                OscillatorParams::new(m, omega, hbar, l, l, 0.0, self.get("D")?, -0.5 * self.get("d")?)
            }
            ModelId::SpinaWeidenmullerI => {
                let l = 0.5 * self.get("Gamma")?;
                let a = self.get("A")?;
                let w2 = omega * (omega - a);
                if w2 <= 0.0 {
                    return Err(Error::InconsistentParams(format!(
                        "shifted frequency squared omega (omega - A) = {w2} must be positive"
                    )));
                }
                OscillatorParams::new(m, w2.sqrt(), hbar, l, l, 0.0, 0.5 * self.get("D")?, 0.5 * self.get("B")?)
            }
            ModelId::SpinaWeidenmullerII => {
                let a = self.get("A")?;
                if a >= omega {
                    return Err(Error::InconsistentParams(format!("shift A = {a} must be below omega = {omega}")));
                }
                let m2 = mw / (omega - a);
                OscillatorParams::new(
                    m2,
                    omega - a,
                    hbar,
                    self.get("Gamma")?,
                    0.0,
                    0.5 * self.get("D_R")?,
                    0.5 * self.get("D_p")?,
                    0.0,
                )
            }
            ModelId::SqueezedBath => {
                let l = self.get("gamma")?;
                let d2 = l * (2.0 * self.get("N")? + 1.0);
                let (d1r, d1i) = (2.0 * l * self.get("M_re")?, 2.0 * l * self.get("M_im")?);
                Self::from_d1_d2(m, omega, hbar, l, 0.0, d1r, d1i, d2)
            }
            ModelId::HarmonicBath => {
                let l = self.get("gamma")?;
                let dpp = hbar * mw * l * (2.0 * self.get("nbar")? + 1.0);
                OscillatorParams::new(m, omega, hbar, l, l, 0.0, dpp, 0.0)
            }
            ModelId::CorrelatedEmission => {
                let z = |k: &str| -> Result<(f64, f64)> {
                    Ok((self.get(&format!("{k}_re"))?, self.get(&format!("{k}_im"))?))
                };
                let (l1, l2, l3, l4) = (z("Lambda1")?, z("Lambda2")?, z("Lambda3")?, z("Lambda4")?);
                let scale = [l1, l2, l3, l4].iter().map(|(a, b)| a.abs().max(b.abs())).fold(1.0, f64::max);
                let tol = 1e-12 * scale;
                let mu_im = l4.1 - l3.1;
                let d2_im = l1.1 + l2.1;
                if mu_im.abs() > tol || d2_im.abs() > tol {
                    return Err(Error::InconsistentParams(format!(
                        "mu = Lambda4 - Lambda3 and D2 = Lambda1 + Lambda2 must be real (imaginary parts {mu_im}, {d2_im})"
                    )));
                }
                let lam = l2.0 - l1.0;
                let w = l2.1 - l1.1;
                if w <= 0.0 {
                    return Err(Error::InconsistentParams(format!(
                        "omega = Im(Lambda2 - Lambda1) = {w} must be positive"
                    )));
                }
                Self::from_d1_d2(m, w, hbar, lam, l4.0 - l3.0, l4.0 + l3.0, l4.1 + l3.1, l1.0 + l2.0)
            }
            ModelId::JangRwa => {
                let g = self.get("Gamma")?;
                let dqq = (2.0 * self.get("n")? + 1.0) * g * hbar / (4.0 * mw);
                OscillatorParams::new(m, omega, hbar, 0.5 * g, 0.0, dqq, mw * mw * dqq, 0.0)
            }
            ModelId::JangExtended => {
                let g = self.get("Gamma")?;
                let dpp = 0.5 * hbar * mw * (2.0 * self.get("n")? + 1.0) * g;
                OscillatorParams::new(m, omega, hbar, 0.5 * g, 0.5 * g, 0.0, dpp, 0.0)
            }
            ModelId::Gibbs => OscillatorParams::gibbs(m, omega, hbar, self.get("lambda")?, self.get("mu")?, self.get("coth")?),
        }
    }

    /// Diffusion coefficients from D₁, D₂:
    /// mωD_qq/ħ = (D₂ + Re D₁)/2, D_pp/ħmω = (D₂ − Re D₁)/2, D_pq = ħ Im D₁/2.
    #[allow(clippy::too_many_arguments)]
    fn from_d1_d2(
        m: f64,
        omega: f64,
        hbar: f64,
        lambda: f64,
        mu: f64,
        d1_re: f64,
        d1_im: f64,
        d2: f64,
    ) -> Result<OscillatorParams> {
        let mw = m * omega;
        OscillatorParams::new(
            m,
            omega,
            hbar,
            lambda,
            mu,
            0.5 * hbar * (d2 + d1_re) / mw,
            0.5 * hbar * mw * (d2 - d1_re),
            0.5 * hbar * d1_im,
        )
    }
}

/// Outcome of checking one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub id: ModelId,
    pub params: OscillatorParams,
    pub constraints: ConstraintReport,
    pub expected_verdict: Verdict,
    pub condition: Option<String>,
    pub condition_holds: Option<bool>,
    /// Whether the constraint check agrees with the expected verdict: a
    /// violated model fails it, a satisfied one passes it, and a conditional
    /// one passes exactly when its own condition holds.
    pub matches: bool,
}

pub fn check_model(model: &LiteratureModel) -> Result<ModelReport> {
    let params = model.instantiate()?;
    let constraints = check_fundamental_constraints(&params);
    let condition_holds = model.condition_holds()?;
    let matches = match model.expected_verdict {
        Verdict::Violated => !constraints.all_satisfied,
        Verdict::Satisfied => constraints.all_satisfied,
        Verdict::Conditional => condition_holds == Some(constraints.all_satisfied),
    };
    Ok(ModelReport {
        id: model.id,
        params,
        constraints,
        expected_verdict: model.expected_verdict,
        condition: model.id.condition().map(str::to_string),
        condition_holds,
        matches,
    })
}

/// Checks every model at its representative parameters.
pub fn verify_catalog() -> Vec<ModelReport> {
    ModelId::ALL
        .iter()
        .map(|&id| check_model(&LiteratureModel::with_defaults(id)).expect("catalog defaults are complete"))
        .collect()
}
