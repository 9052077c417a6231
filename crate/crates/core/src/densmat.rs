//! Number-basis density matrix from the Gaussian generating function
//!
//! ```text
//! G(x, y, t) = Σ x^m y^n ρ_mn / √(m! n!)
//!            = (1/A) exp{xy − [B(x−C)² + D(y−E)² + F(x−C)(y−E)]/H}
//! ```
//!
//! with the scaling gauge F²/4 − BD = −H and normalisation A² = −H/4.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{coupled_relaxation, rk4};
use crate::charfunc::propagator_uv;
use crate::error::{Error, Result};
use crate::params::{derived_coefficients, OscillatorParams};

/// Relative tolerance of the gauge check in [`density_matrix_from_coeffs`].
pub const GAUGE_TOL: f64 = 1e-6;
/// Relative tolerance for D = B*, E = C* and for the special-case checks.
const EXACT_TOL: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-9;

/// The time-dependent functions of the generating function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenFuncCoeffs {
    pub a_norm: f64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub e: Complex64,
    pub f: f64,
    pub h: f64,
}

impl GenFuncCoeffs {
    /// The coherent state |α₀⟩: B = D = 0, F = H = −4, C = α₀*, E = α₀.
    pub fn coherent(alpha0: Complex64) -> Self {
        Self {
            a_norm: 1.0,
            b: Complex64::new(0.0, 0.0),
            c: alpha0.conj(),
            d: Complex64::new(0.0, 0.0),
            e: alpha0,
            f: -4.0,
            h: -4.0,
        }
    }

    /// The stationary state: C = E = 0 and D = B* = R(∞) + iI(∞),
    /// F = F(∞).
    pub fn stationary(p: &OscillatorParams) -> Result<Self> {
        p.require_steady_state()?;
        let (r, i, f) = genfunc_asymptotics(p);
        Self::gauged(Complex64::new(r, i), Complex64::new(0.0, 0.0), f)
    }

    /// Builds the coefficients from D = B*, C = E* and F, choosing H and A
    /// by the gauge and the normalisation.
    pub fn gauged(d: Complex64, c: Complex64, f: f64) -> Result<Self> {
        let h = d.norm_sqr() - 0.25 * f * f;
        if !(h < 0.0) {
            return Err(Error::UnphysicalNormalization { h });
        }
        Ok(Self {
            a_norm: 0.5 * (-h).sqrt(),
            b: d.conj(),
            c,
            d,
            e: c.conj(),
            f,
            h,
        })
    }

    /// |F²/4 − BD + H|
    pub fn gauge_residual(&self) -> f64 {
        (0.25 * self.f * self.f - self.b * self.d + self.h).norm()
    }

    /// (F²/4 − BD) A²/H², which equals 1/(4 Trρ²) and is conserved by the
    /// exact dynamics.
    pub fn trace_invariant(&self) -> f64 {
        ((0.25 * self.f * self.f - self.b * self.d) * self.a_norm * self.a_norm / (self.h * self.h)).re
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let scale = 1.0 + self.b.norm().max(self.c.norm());
        if (self.d - self.b.conj()).norm() > EXACT_TOL * scale {
            return Err(Error::NonHermitianCoeffs(format!("D = {} is not B* = {}", self.d, self.b.conj())));
        }
        if (self.e - self.c.conj()).norm() > EXACT_TOL * scale {
            return Err(Error::NonHermitianCoeffs(format!("E = {} is not C* = {}", self.e, self.c.conj())));
        }
        Ok(())
    }
}

/// Initial state for generating-function evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateSpec {
    Coherent(Complex64),
    Stationary,
    ExplicitCoeffs(GenFuncCoeffs),
}

impl InitialStateSpec {
    pub fn coeffs(&self, p: &OscillatorParams) -> Result<GenFuncCoeffs> {
        match self {
            InitialStateSpec::Coherent(a) => Ok(GenFuncCoeffs::coherent(*a)),
            InitialStateSpec::Stationary => GenFuncCoeffs::stationary(p),
            InitialStateSpec::ExplicitCoeffs(c) => {
                c.check_hermitian()?;
                Ok(*c)
            }
        }
    }
}

/// Source terms of the (R, I, F) system, D = R + iI:
/// R' = −2λR − 2ωI − μF + 2(Re D₁ − μ), I' = 2ωR − 2λI − 2 Im D₁,
/// F' = −4μR − 2λF − 4(D₂ + λ).
fn genfunc_source(p: &OscillatorParams) -> [f64; 3] {
    let dc = derived_coefficients(p);
    [2.0 * (dc.d1.re - p.mu), -2.0 * dc.d1.im, -4.0 * (dc.d2 + p.lambda)]
}

/// (R(∞), I(∞), F(∞)); finite when λ ≠ 0 and λ² ≠ γ².
pub fn genfunc_asymptotics(p: &OscillatorParams) -> (f64, f64, f64) {
    let dc = derived_coefficients(p);
    let (l, w, mu) = (p.lambda, p.omega, p.mu);
    let (re1, im1, d2) = (dc.d1.re, dc.d1.im, dc.d2);
    let den = p.stability_margin();
    let r = (l * (re1 - mu) + w * im1 + mu * (d2 + l)) / den;
    let i = (w * l * (re1 - mu) + (mu * mu - l * l) * im1 + w * mu * (d2 + l)) / (l * den);
    let f = -2.0 * (mu * (l * (re1 - mu) + w * im1) + (l * l + w * w) * (d2 + l)) / (l * den);
    (r, i, f)
}

fn is_singular(p: &OscillatorParams) -> bool {
    let scale = p.lambda.abs().max(p.omega).max(p.mu.abs());
    p.lambda.abs() <= SINGULAR_TOL * scale || p.stability_margin().abs() <= SINGULAR_TOL * scale * scale
}

/// Coefficients at time `t`. C, E follow the amplitude propagator u, v;
/// B, D, F relax to their asymptotic values; H and A follow from the gauge
/// and normalisation.
pub fn evolve_genfunc_coeffs(p: &OscillatorParams, init: &GenFuncCoeffs, t: f64) -> Result<GenFuncCoeffs> {
    init.check_hermitian()?;
    if t == 0.0 {
        return Ok(*init);
    }
    let uv = propagator_uv(p, t);
    let c = uv.u * init.c - uv.v * init.e;
    let y0 = [init.d.re, init.d.im, init.f];
    let y = if is_singular(p) {
        let [sr, si, sf] = genfunc_source(p);
        let (l, w, mu) = (p.lambda, p.omega, p.mu);
        rk4(
            |y: &[f64; 3]| {
                [
                    -2.0 * l * y[0] - 2.0 * w * y[1] - mu * y[2] + sr,
                    2.0 * w * y[0] - 2.0 * l * y[1] + si,
                    -4.0 * mu * y[0] - 2.0 * l * y[2] + sf,
                ]
            },
            y0,
            t,
            1e-3f64.min(1e-3 / w),
        )
    } else {
        let (ri, ii, fi) = genfunc_asymptotics(p);
        let d = coupled_relaxation(p.lambda, p.omega, p.mu, [y0[0] - ri, y0[1] - ii, y0[2] - fi], t);
        [d[0] + ri, d[1] + ii, d[2] + fi]
    };
    GenFuncCoeffs::gauged(Complex64::new(y[0], y[1]), c, y[2])
}

/// Density matrix in the truncated number basis {|0⟩, …, |N⟩}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DensityJson", try_from = "DensityJson")]
pub struct FockDensityMatrix {
    pub entries: DMatrix<Complex64>,
}

impl FockDensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    /// |β⟩⟨β| truncated to `dim` levels (not renormalised).
    pub fn coherent(beta: Complex64, dim: usize) -> Self {
        let mut ket = vec![Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0); dim];
        for k in 1..dim {
            ket[k] = ket[k - 1] * beta / (k as f64).sqrt();
        }
        Self {
            entries: DMatrix::from_fn(dim, dim, |m, n| ket[m] * ket[n].conj()),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        Self {
            entries: DMatrix::from_fn(dim, dim, |m, n| {
                Complex64::new(if m == n { diag[m] } else { 0.0 }, 0.0)
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[(m, n)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|k| self.entries[(k, k)].re).sum()
    }

    /// max |ρ_mn − ρ_nm*|
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// max |ρ_mn − σ_mn| over the common leading block.
    pub fn max_abs_diff(&self, other: &FockDensityMatrix, block: usize) -> f64 {
        let k = block.min(self.dim()).min(other.dim());
        let mut err = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                err = err.max((self.entries[(i, j)] - other.entries[(i, j)]).norm());
            }
        }
        err
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    dim: usize,
    entries: Vec<Vec<ComplexJson>>,
}

impl From<FockDensityMatrix> for DensityJson {
    fn from(rho: FockDensityMatrix) -> Self {
        let dim = rho.dim();
        DensityJson {
            dim,
            entries: (0..dim)
                .map(|m| {
                    (0..dim)
                        .map(|n| {
                            let z = rho.entries[(m, n)];
                            ComplexJson { re: z.re, im: z.im }
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<DensityJson> for FockDensityMatrix {
    type Error = String;

    fn try_from(j: DensityJson) -> std::result::Result<Self, String> {
        if j.entries.len() != j.dim || j.entries.iter().any(|r| r.len() != j.dim) {
            return Err(format!("entries must be a {0}x{0} array", j.dim));
        }
        Ok(Self {
            entries: DMatrix::from_fn(j.dim, j.dim, |m, n| {
                let z = &j.entries[m][n];
                Complex64::new(z.re, z.im)
            }),
        })
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// ln|z^k / k!| and k·arg z for k = 0..=n.
fn power_table(z: Complex64, n: usize, lnf: &[f64]) -> Vec<(f64, f64)> {
    let (ln_abs, arg) = (z.norm().ln(), z.arg());
    (0..=n)
        .map(|k| {
            if k == 0 {
                (0.0, 0.0)
            } else {
                (k as f64 * ln_abs - lnf[k], k as f64 * arg)
            }
        })
        .collect()
}

/// ρ_mn for 0 ≤ m, n < `dim` from the closed-form triple sum over the
/// Taylor coefficients of G.
pub fn density_matrix_from_coeffs(coeffs: &GenFuncCoeffs, dim: usize) -> Result<FockDensityMatrix> {
    let k = coeffs;
    if k.h == 0.0 || !k.h.is_finite() {
        return Err(Error::UnphysicalNormalization { h: k.h });
    }
    let residual = k.gauge_residual();
    if residual > GAUGE_TOL * k.h.abs() {
        return Err(Error::GaugeViolation {
            residual,
            tolerance: GAUGE_TOL * k.h.abs(),
        });
    }
    if dim == 0 {
        return Ok(FockDensityMatrix::zeros(0));
    }
    let h = k.h;
    let top = dim - 1;
    let lnf = ln_factorials(top);
    let x3 = power_table(Complex64::new(1.0 - k.f / h, 0.0), top, &lnf);
    let xb = power_table(-k.b / h, top / 2, &lnf);
    let xd = power_table(-k.d / h, top / 2, &lnf);
    let y1 = power_table((2.0 * k.b * k.c + k.f * k.e) / h, top, &lnf);
    let y2 = power_table((2.0 * k.d * k.e + k.f * k.c) / h, top, &lnf);
    let expo = -(k.b * k.c * k.c + k.d * k.e * k.e + k.f * k.c * k.e) / h - k.a_norm.ln();

    let entry = |m: usize, n: usize| -> Complex64 {
        let base = expo + 0.5 * (lnf[m] + lnf[n]);
        let mut sum = Complex64::new(0.0, 0.0);
        for n3 in 0..=m.min(n) {
            for n1 in 0..=(m - n3) / 2 {
                let k1 = m - 2 * n1 - n3;
                let l1 = x3[n3].0 + xb[n1].0 + y1[k1].0;
                if l1 == f64::NEG_INFINITY {
                    continue;
                }
                for n2 in 0..=(n - n3) / 2 {
                    let k2 = n - 2 * n2 - n3;
                    let l = l1 + xd[n2].0 + y2[k2].0;
                    if l == f64::NEG_INFINITY {
                        continue;
                    }
                    let phase = x3[n3].1 + xb[n1].1 + y1[k1].1 + xd[n2].1 + y2[k2].1;
                    sum += Complex64::from_polar((l + base.re).exp(), phase + base.im);
                }
            }
        }
        sum
    };

    let rows: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|m| (0..dim).map(|n| entry(m, n)).collect())
        .collect();
    Ok(FockDensityMatrix {
        entries: DMatrix::from_fn(dim, dim, |m, n| rows[m][n]),
    })
}

fn check_close(what: &str, value: f64, target: f64, scale: f64) -> std::result::Result<(), String> {
    if (value - target).abs() <= EXACT_TOL * scale {
        Ok(())
    } else {
        Err(format!("{what} = {value}, expected {target}"))
    }
}

/// Stationary number distribution for a thermal bath
/// (mωD_qq/ħ = D_pp/ħmω, D_pq = 0, μ = 0): ρ_nn = (1 − q) qⁿ with
/// q = (D₂ − λ)/(D₂ + λ) = e^{−ħω/kT}.
pub fn bose_einstein_matrix(p: &OscillatorParams, dim: usize) -> Result<FockDensityMatrix> {
    let q = thermal_ratio(p)?;
    let diag: Vec<f64> = (0..dim).map(|n| (1.0 - q) * q.powi(n as i32)).collect();
    Ok(FockDensityMatrix::from_diagonal(&diag))
}

/// e^{−ħω/kT} of a thermal bath.
pub fn thermal_ratio(p: &OscillatorParams) -> Result<f64> {
    let mw = p.m_omega();
    let a = mw * p.d_qq / p.hbar;
    let b = p.d_pp / (p.hbar * mw);
    let scale = a.abs().max(b.abs()).max(p.lambda.abs()).max(p.omega);
    check_close("m omega D_qq / hbar", a, b, scale)
        .and_then(|_| check_close("D_pq", p.d_pq / p.hbar, 0.0, scale))
        .and_then(|_| check_close("mu", p.mu, 0.0, scale))
        .map_err(Error::NotThermal)?;
    let d2 = a + b;
    if !(p.lambda > 0.0 && d2 >= p.lambda) {
        return Err(Error::NotThermal(format!(
            "need lambda > 0 and D2 >= lambda (lambda = {}, D2 = {d2})",
            p.lambda
        )));
    }
    Ok((d2 - p.lambda) / (d2 + p.lambda))
}

/// ρ(t) for a coherent initial state when D₁ = 0, μ = 0, D₂ = λ; the state
/// stays coherent with C(t) = u(t) C(0).
pub fn glauber_packet_evolution(
    p: &OscillatorParams,
    alpha0: Complex64,
    t: f64,
    dim: usize,
) -> Result<FockDensityMatrix> {
    let dc = derived_coefficients(p);
    let scale = p.lambda.abs().max(p.omega).max(dc.d2.abs());
    check_close("|D1|", dc.d1.norm(), 0.0, scale)
        .and_then(|_| check_close("mu", p.mu, 0.0, scale))
        .and_then(|_| check_close("D2", dc.d2, p.lambda, scale))
        .map_err(Error::NotSpecialCase)?;
    let c = propagator_uv(p, t).u * alpha0.conj();
    Ok(FockDensityMatrix::coherent(c.conj(), dim))
}

/// Diffusion coefficients of the D₁ = μ = 0, D₂ = λ case for the drift of
/// `p`: D_qq = ħλ/2mω, D_pp = ħmωλ/2, D_pq = 0.
pub fn packet_preserving_params(p: &OscillatorParams) -> OscillatorParams {
    let mw = p.m_omega();
    OscillatorParams {
        mu: 0.0,
        d_qq: p.hbar * p.lambda / (2.0 * mw),
        d_pp: p.hbar * mw * p.lambda / 2.0,
        d_pq: 0.0,
        ..*p
    }
}

/// Truncation N (so `N + 1` levels) for a packet of amplitude α₀.
pub fn default_truncation(alpha0: Complex64) -> usize {
    40usize.max((8.0 * (alpha0.norm_sqr() + 1.0)).ceil() as usize)
}
