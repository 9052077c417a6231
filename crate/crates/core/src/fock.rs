//! Brute-force reference solution: the master equation in the number basis,
//! truncated at N quanta and integrated with fixed-step RK4.
//!
//! Couplings that would leave {|0⟩, …, |N⟩} are dropped. The weight in the
//! last few levels is reported so callers can tell when this matters.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::densmat::FockDensityMatrix;
use crate::error::{Error, Result};
use crate::moments::{energy_expectation, CovarianceTriple, FirstMoments};
use crate::params::{derived_coefficients, OscillatorParams};

pub type TruncatedState = FockDensityMatrix;

/// Trace drift above which an integration is rejected.
pub const TRACE_TOL: f64 = 1e-6;
/// Tail weight above which extracted moments are flagged unreliable.
pub const TAIL_TOL: f64 = 1e-8;
/// Number of trailing diagonal entries summed into the tail weight.
pub const TAIL_LEVELS: usize = 5;

/// Rates entering the number-basis equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockRates {
    pub omega: f64,
    pub lambda: f64,
    pub mu: f64,
    pub d1: Complex64,
    pub d2: f64,
}

impl FockRates {
    pub fn from_params(p: &OscillatorParams) -> Self {
        let d = derived_coefficients(p);
        Self {
            omega: p.omega,
            lambda: p.lambda,
            mu: p.mu,
            d1: d.d1,
            d2: d.d2,
        }
    }

    /// Largest step allowed by [`IntegratorConfig::validate`].
    pub fn max_step(&self) -> f64 {
        let rate = self.lambda.abs().max(self.mu.abs()).max(self.d2.abs()).max(1e-12);
        let inv_omega = if self.omega > 0.0 { 1.0 / self.omega } else { f64::INFINITY };
        0.01 * inv_omega.min(1.0 / rate)
    }

    /// Gershgorin bound on the spectral radius of the generator truncated
    /// to `dim` levels. It grows linearly with the truncation.
    pub fn spectral_bound(&self, dim: usize) -> f64 {
        let n = dim.saturating_sub(1) as f64;
        let d1 = self.d1.norm();
        let diag = self.lambda.abs() + (2.0 * n + 1.0) * self.d2.abs() + self.omega.abs() * n;
        let off = 0.5 * n * ((self.d1 + self.mu).norm() + (self.d1 - self.mu).norm()) * 2.0
            + 2.0 * (n + 1.0) * d1
            + (n + 1.0) * ((self.d2 + self.lambda).abs() + (self.d2 - self.lambda).abs());
        diag + off
    }

    /// Step at which RK4 stays stable on the truncated generator; the
    /// stability interval of RK4 on the negative real axis is about 2.78.
    pub fn stable_step(&self, dim: usize) -> f64 {
        2.5 / self.spectral_bound(dim).max(1e-300)
    }
}

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub step: f64,
    /// Output times, strictly increasing and non-negative.
    pub t_grid: Vec<f64>,
    /// Also compute the smallest eigenvalue at each output time.
    #[serde(default = "default_true")]
    pub eigenvalues: bool,
}

fn default_true() -> bool {
    true
}

impl IntegratorConfig {
    pub fn new(step: f64, t_grid: Vec<f64>) -> Self {
        Self {
            step,
            t_grid,
            eigenvalues: true,
        }
    }

    pub fn validate(&self, rates: &FockRates) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        // small slack so that round bounds such as 0.01/5 = 2e-3 are accepted
        if self.step > rates.max_step() * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "step {} exceeds 0.01 min(1/omega, 1/max(lambda, |mu|, D2)) = {}",
                self.step,
                rates.max_step()
            )));
        }
        crate::moments::check_time_grid(&self.t_grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// Smallest eigenvalue of (ρ + ρ†)/2, when requested.
    pub min_eigenvalue: Option<f64>,
    pub tail_mass: f64,
}

pub fn diagnostics(rho: &TruncatedState) -> DiagnosticsReport {
    let mut d = cheap_diagnostics(rho);
    d.min_eigenvalue = Some(min_eigenvalue(rho));
    d
}

fn cheap_diagnostics(rho: &TruncatedState) -> DiagnosticsReport {
    let dim = rho.dim();
    DiagnosticsReport {
        trace_error: (rho.trace() - 1.0).abs(),
        hermiticity_error: rho.hermiticity_error(),
        min_eigenvalue: None,
        tail_mass: (dim.saturating_sub(TAIL_LEVELS)..dim).map(|k| rho.get(k, k).re).sum(),
    }
}

fn min_eigenvalue(rho: &TruncatedState) -> f64 {
    if rho.dim() == 0 {
        return 0.0;
    }
    let herm: DMatrix<Complex64> = (&rho.entries + rho.entries.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Split-complex, row-major storage used by the integrator.
#[derive(Clone)]
struct Planes {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Planes {
    fn zeros(len: usize) -> Self {
        Self {
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    fn from_state(rho: &TruncatedState) -> Self {
        let d = rho.dim();
        let mut p = Self::zeros(d * d);
        for m in 0..d {
            for n in 0..d {
                let z = rho.get(m, n);
                p.re[m * d + n] = z.re;
                p.im[m * d + n] = z.im;
            }
        }
        p
    }

    fn to_state(&self, d: usize) -> TruncatedState {
        FockDensityMatrix {
            entries: DMatrix::from_fn(d, d, |m, n| Complex64::new(self.re[m * d + n], self.im[m * d + n])),
        }
    }
}

/// out += k · w ⊙ src, elementwise over equal-length slices.
#[inline]
fn accumulate(out: (&mut [f64], &mut [f64]), src: (&[f64], &[f64]), w: &[f64], k: Complex64) {
    let (ore, oim) = out;
    let (sre, sim) = src;
    for ((((or, oi), &sr), &si), &wi) in ore.iter_mut().zip(oim.iter_mut()).zip(sre).zip(sim).zip(w) {
        *or += wi * (k.re * sr - k.im * si);
        *oi += wi * (k.re * si + k.im * sr);
    }
}

/// out += k · src
#[inline]
fn accumulate_uniform(out: (&mut [f64], &mut [f64]), src: (&[f64], &[f64]), k: Complex64) {
    let (ore, oim) = out;
    let (sre, sim) = src;
    for (((or, oi), &sr), &si) in ore.iter_mut().zip(oim.iter_mut()).zip(sre).zip(sim) {
        *or += k.re * sr - k.im * si;
        *oi += k.re * si + k.im * sr;
    }
}

/// The truncated Liouvillian with its square-root tables.
struct Kernel {
    dim: usize,
    rates: FockRates,
    sq: Vec<f64>,
    /// √((n+1)(n+2))
    pp: Vec<f64>,
}

impl Kernel {
    fn new(rates: FockRates, dim: usize) -> Self {
        let sq: Vec<f64> = (0..dim + 3).map(|k| (k as f64).sqrt()).collect();
        let pp = (0..dim).map(|n| sq[n + 1] * sq[n + 2]).collect();
        Self { dim, rates, sq, pp }
    }

    fn apply(&self, x: &Planes, out: &mut Planes) {
        let d = self.dim;
        let r = &self.rates;
        let (sq, pp) = (&self.sq, &self.pp);
        let mu = Complex64::new(r.mu, 0.0);
        let k_lower2 = 0.5 * (r.d1 + mu);
        let k_mix = -r.d1;
        let k_right2 = 0.5 * (r.d1 - mu);
        let k_upper2 = 0.5 * (r.d1.conj() - mu);
        let k_mix_c = -r.d1.conj();
        let k_left2 = 0.5 * (r.d1.conj() + mu);
        let k_up = Complex64::new(r.d2 + r.lambda, 0.0);
        let k_down = Complex64::new(r.d2 - r.lambda, 0.0);

        for m in 0..d {
            let row = m * d..(m + 1) * d;
            let (ore, oim) = (&mut out.re[row.clone()], &mut out.im[row.clone()]);
            let (xre, xim) = (&x.re[row.clone()], &x.im[row]);
            let base = r.lambda - (m as f64 + 1.0) * r.d2;
            for n in 0..d {
                let cr = base - n as f64 * r.d2;
                let ci = -r.omega * (m as f64 - n as f64);
                ore[n] = cr * xre[n] - ci * xim[n];
                oim[n] = cr * xim[n] + ci * xre[n];
            }
            // same row, n ± 2
            if d > 2 {
                accumulate((&mut ore[..d - 2], &mut oim[..d - 2]), (&xre[2..], &xim[2..]), &pp[..d - 2], k_right2);
                accumulate((&mut ore[2..], &mut oim[2..]), (&xre[..d - 2], &xim[..d - 2]), &pp[..d - 2], k_left2);
            }
            let nb = |k: usize| k * d..(k + 1) * d;
            if m >= 2 {
                let s = sq[m] * sq[m - 1];
                let src = nb(m - 2);
                accumulate_uniform((ore, oim), (&x.re[src.clone()], &x.im[src]), k_lower2 * s);
            }
            if m + 2 < d {
                let s = sq[m + 1] * sq[m + 2];
                let src = nb(m + 2);
                accumulate_uniform((ore, oim), (&x.re[src.clone()], &x.im[src]), k_upper2 * s);
            }
            if m >= 1 {
                let src = nb(m - 1);
                let (sre, sim) = (&x.re[src.clone()], &x.im[src]);
                // ρ_{m−1,n+1}
                accumulate((&mut ore[..d - 1], &mut oim[..d - 1]), (&sre[1..], &sim[1..]), &sq[1..d], k_mix * sq[m]);
                // ρ_{m−1,n−1}
                accumulate((&mut ore[1..], &mut oim[1..]), (&sre[..d - 1], &sim[..d - 1]), &sq[1..d], k_down * sq[m]);
            }
            if m + 1 < d {
                let src = nb(m + 1);
                let (sre, sim) = (&x.re[src.clone()], &x.im[src]);
                // ρ_{m+1,n−1}
                accumulate((&mut ore[1..], &mut oim[1..]), (&sre[..d - 1], &sim[..d - 1]), &sq[1..d], k_mix_c * sq[m + 1]);
                // ρ_{m+1,n+1}
                accumulate((&mut ore[..d - 1], &mut oim[..d - 1]), (&sre[1..], &sim[1..]), &sq[1..d], k_up * sq[m + 1]);
            }
        }
    }
}

/// dρ/dt of the truncated number-basis master equation.
pub fn apply_liouvillian(rates: &FockRates, rho: &TruncatedState) -> TruncatedState {
    let d = rho.dim();
    let kernel = Kernel::new(*rates, d);
    let mut out = Planes::zeros(d * d);
    kernel.apply(&Planes::from_state(rho), &mut out);
    out.to_state(d)
}

/// RK4 workspace.
struct Stepper {
    kernel: Kernel,
    k: Planes,
    acc: Planes,
    tmp: Planes,
}

impl Stepper {
    fn new(kernel: Kernel) -> Self {
        let len = kernel.dim * kernel.dim;
        Self {
            kernel,
            k: Planes::zeros(len),
            acc: Planes::zeros(len),
            tmp: Planes::zeros(len),
        }
    }

    fn step(&mut self, y: &mut Planes, h: f64) {
        let len = y.re.len();
        // k1
        self.kernel.apply(y, &mut self.k);
        for i in 0..len {
            self.acc.re[i] = self.k.re[i];
            self.acc.im[i] = self.k.im[i];
            self.tmp.re[i] = y.re[i] + 0.5 * h * self.k.re[i];
            self.tmp.im[i] = y.im[i] + 0.5 * h * self.k.im[i];
        }
        // k2
        self.kernel.apply(&self.tmp, &mut self.k);
        for i in 0..len {
            self.acc.re[i] += 2.0 * self.k.re[i];
            self.acc.im[i] += 2.0 * self.k.im[i];
            self.tmp.re[i] = y.re[i] + 0.5 * h * self.k.re[i];
            self.tmp.im[i] = y.im[i] + 0.5 * h * self.k.im[i];
        }
        // k3
        self.kernel.apply(&self.tmp, &mut self.k);
        for i in 0..len {
            self.acc.re[i] += 2.0 * self.k.re[i];
            self.acc.im[i] += 2.0 * self.k.im[i];
            self.tmp.re[i] = y.re[i] + h * self.k.re[i];
            self.tmp.im[i] = y.im[i] + h * self.k.im[i];
        }
        // k4
        self.kernel.apply(&self.tmp, &mut self.k);
        for i in 0..len {
            y.re[i] += h / 6.0 * (self.acc.re[i] + self.k.re[i]);
            y.im[i] += h / 6.0 * (self.acc.im[i] + self.k.im[i]);
        }
    }
}

/// State and diagnostics at one output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub t: f64,
    pub state: TruncatedState,
    pub diagnostics: DiagnosticsReport,
}

/// Integrates from `init` at t = 0 and returns the state at every time of
/// `config.t_grid`.
///
/// `config.step` is an upper bound: when the truncated generator is too
/// stiff for it (strong diffusion at large truncation), the step is reduced
/// to [`FockRates::stable_step`].
pub fn integrate(rates: &FockRates, init: &TruncatedState, config: &IntegratorConfig) -> Result<Vec<OracleSample>> {
    config.validate(rates)?;
    let d = init.dim();
    if d < 2 {
        return Err(Error::InvalidConfig("truncated basis needs at least two levels".into()));
    }
    let step = effective_step(rates, d, config.step);
    let mut stepper = Stepper::new(Kernel::new(*rates, d));
    let mut y = Planes::from_state(init);
    let mut t_now = 0.0;
    let mut out = Vec::with_capacity(config.t_grid.len());
    for &t in &config.t_grid {
        let span = t - t_now;
        if span > 0.0 {
            let n = ((span / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                stepper.step(&mut y, h);
            }
        }
        t_now = t;
        let state = y.to_state(d);
        let mut diag = cheap_diagnostics(&state);
        if config.eigenvalues {
            diag.min_eigenvalue = Some(min_eigenvalue(&state));
        }
        if !(diag.trace_error <= TRACE_TOL) {
            return Err(Error::StepTooLarge {
                t,
                trace_error: diag.trace_error,
            });
        }
        out.push(OracleSample {
            t,
            state,
            diagnostics: diag,
        });
    }
    Ok(out)
}

/// The step actually taken for a `dim`-level state when `step` is requested.
pub fn effective_step(rates: &FockRates, dim: usize, step: f64) -> f64 {
    step.min(rates.stable_step(dim))
}

/// Moments read off a number-basis density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMoments {
    pub first: FirstMoments,
    pub cov: CovarianceTriple,
    pub energy: f64,
    /// False when the tail weight reaches [`TAIL_TOL`].
    pub reliable: bool,
}

/// ⟨q⟩, ⟨p⟩, covariances and ⟨H⟩ from ⟨a⟩ = Σ √k ρ_{k,k−1},
/// ⟨a²⟩ = Σ √(k(k−1)) ρ_{k,k−2} and ⟨a†a⟩ = Σ k ρ_kk.
pub fn moments_of(rho: &TruncatedState, p: &OscillatorParams) -> OracleMoments {
    let d = rho.dim();
    let mut a = Complex64::new(0.0, 0.0);
    let mut a2 = Complex64::new(0.0, 0.0);
    let mut n = 0.0;
    for k in 0..d {
        let kf = k as f64;
        n += kf * rho.get(k, k).re;
        if k >= 1 {
            a += kf.sqrt() * rho.get(k, k - 1);
        }
        if k >= 2 {
            a2 += (kf * (kf - 1.0)).sqrt() * rho.get(k, k - 2);
        }
    }
    let mw = p.m_omega();
    let xq = (p.hbar / (2.0 * mw)).sqrt();
    let xp = (p.hbar * mw / 2.0).sqrt();
    let first = FirstMoments {
        sigma_q: 2.0 * xq * a.re,
        sigma_p: 2.0 * xp * a.im,
    };
    let q2 = xq * xq * (2.0 * a2.re + 2.0 * n + 1.0);
    let p2 = xp * xp * (2.0 * n + 1.0 - 2.0 * a2.re);
    let pq = p.hbar * a2.im;
    let cov = CovarianceTriple {
        sigma_qq: q2 - first.sigma_q * first.sigma_q,
        sigma_pp: p2 - first.sigma_p * first.sigma_p,
        sigma_pq: pq - first.sigma_q * first.sigma_p,
    };
    OracleMoments {
        first,
        cov,
        energy: energy_expectation(p, first, cov),
        reliable: cheap_diagnostics(rho).tail_mass < TAIL_TOL,
    }
}

/// Largest relative deviation between closed-form and oracle moments. Means
/// and σ_pq cross zero, so their errors are taken relative to at least the
/// zero-point scales √(ħ/2mω), √(ħmω/2) and ħ/2.
pub fn moment_deviation(p: &OscillatorParams, first: FirstMoments, cov: CovarianceTriple, oracle: &OracleMoments) -> f64 {
    let mw = p.m_omega();
    let rel = |a: f64, b: f64, floor: f64| (a - b).abs() / b.abs().max(floor);
    let (sq, sp) = ((p.hbar / (2.0 * mw)).sqrt(), (p.hbar * mw / 2.0).sqrt());
    [
        rel(oracle.first.sigma_q, first.sigma_q, sq),
        rel(oracle.first.sigma_p, first.sigma_p, sp),
        rel(oracle.cov.sigma_qq, cov.sigma_qq, 0.0),
        rel(oracle.cov.sigma_pp, cov.sigma_pp, 0.0),
        rel(oracle.cov.sigma_pq, cov.sigma_pq, 0.5 * p.hbar),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub const ORACLE_HEADER: &str =
    "t,sigma_q,sigma_p,sigma_qq,sigma_pp,sigma_pq,energy,trace_err,herm_err,min_eig,tail_mass";

/// Oracle trajectory CSV: the moment columns followed by the diagnostics.
/// A missing eigenvalue is written as `nan`.
pub fn write_oracle_csv<W: Write>(mut w: W, p: &OscillatorParams, samples: &[OracleSample]) -> io::Result<()> {
    use crate::io::fmt_f64;
    writeln!(w, "{ORACLE_HEADER}")?;
    for s in samples {
        let m = moments_of(&s.state, p);
        let d = s.diagnostics;
        let cols = [
            s.t,
            m.first.sigma_q,
            m.first.sigma_p,
            m.cov.sigma_qq,
            m.cov.sigma_pp,
            m.cov.sigma_pq,
            m.energy,
            d.trace_error,
            d.hermiticity_error,
            d.min_eigenvalue.unwrap_or(f64::NAN),
            d.tail_mass,
        ];
        writeln!(w, "{}", cols.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","))?;
    }
    Ok(())
}
