#![allow(dead_code)]

use lindblad_osc::params::check_fundamental_constraints;
use lindblad_osc::OscillatorParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Fixed-step RK4 for y' = f(y) on a real vector, landing exactly on `t`.
pub fn rk4(f: impl Fn(&[f64]) -> Vec<f64>, y0: &[f64], t: f64, h: f64) -> Vec<f64> {
    let n = (t / h).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let mut y = y0.to_vec();
    let shift = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    for _ in 0..n {
        let k1 = f(&y);
        let k2 = f(&shift(&y, &k1, 0.5 * h));
        let k3 = f(&shift(&y, &k2, 0.5 * h));
        let k4 = f(&shift(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// |a − b| / max(|b|, floor)
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

pub fn gibbs(lambda: f64, mu: f64, coth: f64) -> OscillatorParams {
    OscillatorParams::gibbs(1.0, 1.0, 1.0, lambda, mu, coth).unwrap()
}

/// Gibbs-type coefficients with λ ∈ [0.1, 1], μ ∈ [0, 0.9], coth ∈ [1, 5],
/// m = ω = ħ = 1, redrawn until the complete-positivity constraints hold.
pub fn random_gibbs(rng: &mut ChaCha8Rng) -> OscillatorParams {
    loop {
        let p = gibbs(rng.gen_range(0.1..1.0), rng.gen_range(0.0..0.9), rng.gen_range(1.0..5.0));
        if check_fundamental_constraints(&p).all_satisfied {
            return p;
        }
    }
}

/// Generic constraint-satisfying parameters covering both damping regimes;
/// a steady state is not required.
pub fn random_valid(rng: &mut ChaCha8Rng) -> OscillatorParams {
    loop {
        let m = rng.gen_range(0.5..2.0);
        let omega = rng.gen_range(0.5..2.0);
        let hbar = rng.gen_range(0.5..1.5);
        let lambda = rng.gen_range(0.05..1.0);
        let mu = rng.gen_range(-1.5..1.5);
        let d_qq = rng.gen_range(0.01..1.0);
        let d_pp = rng.gen_range(0.01..1.0);
        let d_pq = rng.gen_range(-0.5..0.5);
        let Ok(p) = OscillatorParams::new(m, omega, hbar, lambda, mu, d_qq, d_pp, d_pq) else {
            continue;
        };
        if check_fundamental_constraints(&p).all_satisfied {
            return p;
        }
    }
}

/// Like [`random_valid`] but with a steady state.
pub fn random_stable(rng: &mut ChaCha8Rng) -> OscillatorParams {
    loop {
        let p = random_valid(rng);
        if p.has_steady_state() && p.stability_margin() > 1e-3 && p.lambda * p.lambda - p.gamma_sq() > 1e-3 {
            return p;
        }
    }
}

/// Right-hand side of the covariance equations.
pub fn covariance_rhs(p: &OscillatorParams) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |y: &[f64]| {
        let (l, mu, m, w) = (p.lambda, p.mu, p.m, p.omega);
        vec![
            -2.0 * (l - mu) * y[0] + 2.0 / m * y[2] + 2.0 * p.d_qq,
            -2.0 * (l + mu) * y[1] - 2.0 * m * w * w * y[2] + 2.0 * p.d_pp,
            -m * w * w * y[0] + y[1] / m - 2.0 * l * y[2] + 2.0 * p.d_pq,
        ]
    }
}
