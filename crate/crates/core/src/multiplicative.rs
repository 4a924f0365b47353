//! Multiplicative forward-drift model: `V_t(T) = G_t exp(−∫_t^T f_t(u) du)`.
//!
//! With gain dynamics `dG = μG dt + σG dW` and forward dynamics
//! `d_t f_t(T) = α dt + β dW`, spot consistency reads `f_t(t) = r − μ_t` and
//! the no-arbitrage drift is `α_t(T) = β_t(T)(∫_t^T β_t(u) du − σ_t)`.
//! The value then evolves as a lognormal exponential with coefficients
//! `γ(s)` and `θ(s)` (see [`GammaTheta`]).

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::additive::{aligned_steps, DriftStatistic, ForwardVol};
use crate::curve::{trapezoid, ForwardCurve, ForwardRate};
use crate::error::{domain, Error, Result};
use crate::gain::{power_coefficients, GainProcess, MarketParams};
use crate::numerics::{first_crossing, integrate, path_rng, PathSet, TimeGrid};
use crate::stats::MeanEstimate;

type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Forward dynamics plus the gain volatility they are coupled to.
#[derive(Clone)]
pub struct MultForwardDynamics {
    pub alpha: ForwardVol,
    pub beta: ForwardVol,
    sigma_gain: TimeFn,
}

impl MultForwardDynamics {
    pub fn new(
        alpha: ForwardVol,
        beta: ForwardVol,
        sigma_gain: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            alpha,
            beta,
            sigma_gain: Arc::new(sigma_gain),
        }
    }

    /// Dynamics whose drift is the no-arbitrage drift for `beta`, evaluated
    /// by quadrature on the inner integral.
    pub fn no_arbitrage(
        beta: ForwardVol,
        sigma_gain: impl Fn(f64) -> f64 + Send + Sync + 'static,
        quad_tol: f64,
    ) -> Self {
        let sigma_gain: TimeFn = Arc::new(sigma_gain);
        let (b, s) = (beta.clone(), sigma_gain.clone());
        let alpha = ForwardVol::new(move |t, u| {
            let inner = |v: f64| b.at(t, v);
            no_arb_drift_mult(&inner, s(t), t, u, quad_tol).unwrap_or(f64::NAN)
        });
        Self {
            alpha,
            beta,
            sigma_gain,
        }
    }

    pub fn sigma_gain(&self, t: f64) -> f64 {
        (self.sigma_gain)(t)
    }
}

impl std::fmt::Debug for MultForwardDynamics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MultForwardDynamics(..)")
    }
}

/// Exponent coefficients of the value process,
/// `V_t(T) = V_{t₀}(T) exp(∫_{t₀}^t (γ − θ²/2) ds + ∫_{t₀}^t θ dW)`, where
/// `γ(s) = r − ∫_s^T α_s + ½(∫_s^T β_s)² − σ_s ∫_s^T β_s` and
/// `θ(s) = σ_s − ∫_s^T β_s`.
#[derive(Clone)]
pub struct GammaTheta {
    gamma: TimeFn,
    theta: TimeFn,
    pub maturity: f64,
}

impl GammaTheta {
    pub fn new(
        gamma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        theta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        maturity: f64,
    ) -> Self {
        Self {
            gamma: Arc::new(gamma),
            theta: Arc::new(theta),
            maturity,
        }
    }

    /// General construction from forward dynamics, integrating `α` and `β`
    /// over `[s, T]` numerically at each evaluation.
    pub fn from_dynamics(
        dynamics: &MultForwardDynamics,
        r: f64,
        maturity: f64,
        quad_tol: f64,
    ) -> Self {
        let d = dynamics.clone();
        let vol_integral = move |d: &MultForwardDynamics, s: f64| {
            best_estimate(integrate(|u| d.beta.at(s, u), s, maturity, quad_tol))
        };
        let d2 = d.clone();
        let gamma = move |s: f64| {
            let a = best_estimate(integrate(|u| d.alpha.at(s, u), s, maturity, quad_tol));
            let b = vol_integral(&d, s);
            r - a + 0.5 * b * b - d.sigma_gain(s) * b
        };
        let theta = move |s: f64| d2.sigma_gain(s) - vol_integral(&d2, s);
        Self::new(gamma, theta, maturity)
    }

    pub fn gamma(&self, s: f64) -> f64 {
        (self.gamma)(s)
    }

    pub fn theta(&self, s: f64) -> f64 {
        (self.theta)(s)
    }
}

impl std::fmt::Debug for GammaTheta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GammaTheta")
            .field("maturity", &self.maturity)
            .finish()
    }
}

fn best_estimate(r: Result<f64>) -> f64 {
    match r {
        Ok(v) => v,
        Err(Error::Accuracy { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

/// `V_t(T) = G_t exp(−∫_t^T f_t(u) du)`.
pub fn value_multiplicative<F: ForwardRate + ?Sized>(
    gain: f64,
    forward: &F,
    t: f64,
    maturity: f64,
    quad_tol: f64,
) -> Result<f64> {
    if !(gain >= 0.0 && gain.is_finite()) {
        return domain(format!("gain must be non-negative, got {gain}"));
    }
    if t == maturity {
        return Ok(gain);
    }
    let exponent = forward.integral(t, maturity, quad_tol)?;
    Ok(gain * (-exponent).exp())
}

/// Central-difference step for the implied forward rate.
pub fn default_fd_step(maturity: f64) -> f64 {
    1e-4 * maturity.max(1.0)
}

/// `f_t(T) = −∂_T ln V_t(T)` by the central difference
/// `−[ln V(T+h) − ln V(T−h)] / 2h`.
pub fn implied_forward_rate<V: Fn(f64) -> f64>(
    value_curve: V,
    maturity: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("finite-difference step must be positive, got {h}"));
    }
    let up = value_curve(maturity + h);
    let down = value_curve(maturity - h);
    if !(up > 0.0 && down > 0.0 && up.is_finite() && down.is_finite()) {
        return domain(format!(
            "implied forward rate needs positive values, got V(T+h)={up}, V(T-h)={down}"
        ));
    }
    Ok(-(up.ln() - down.ln()) / (2.0 * h))
}

/// `α_t(T) = β_t(T)(∫_t^T β_t(u) du − σ_t)`; `beta` is the slice `u ↦ β_t(u)`.
pub fn no_arb_drift_mult<B: Fn(f64) -> f64>(
    beta: &B,
    sigma_gain: f64,
    t: f64,
    maturity: f64,
    quad_tol: f64,
) -> Result<f64> {
    if !(t <= maturity) {
        return domain(format!("drift needs t <= T, got t={t}, T={maturity}"));
    }
    let inner = integrate(beta, t, maturity, quad_tol)?;
    Ok(beta(maturity) * (inner - sigma_gain))
}

/// The Gaussian power-payoff example: `G = S^a`, constant `β`.
#[derive(Clone, Debug)]
pub struct GaussianPowerModel {
    pub exponent: f64,
    pub beta: f64,
    /// Gain volatility `ab`.
    pub sigma_gain: f64,
    /// Gain drift `a r + ½a(a−1)b²`.
    pub mu_gain: f64,
    pub dynamics: MultForwardDynamics,
    pub gamma_theta: GammaTheta,
}

impl GaussianPowerModel {
    /// `α_t(u) = β(β(u−t) − ab)`.
    pub fn alpha(&self, t: f64, u: f64) -> f64 {
        self.dynamics.alpha.at(t, u)
    }
}

/// Closed-form specialization: `α_t(u) = β(β(u−t) − ab)`, `γ ≡ r`,
/// `θ(s) = ab − β(T−s)`.
pub fn gaussian_power_dynamics(
    a: f64,
    params: &MarketParams,
    beta: f64,
) -> Result<GaussianPowerModel> {
    if !(a > 0.0 && a.is_finite()) {
        return domain(format!("power exponent must be positive, got {a}"));
    }
    if !beta.is_finite() {
        return domain(format!("forward volatility must be finite, got {beta}"));
    }
    let (mu_gain, sigma_gain) = power_coefficients(a, params);
    let alpha = ForwardVol::new(move |t, u| beta * (beta * (u - t) - sigma_gain));
    let dynamics = MultForwardDynamics::new(alpha, ForwardVol::constant(beta), move |_| sigma_gain);
    let r = params.r;
    let maturity = params.maturity;
    let gamma_theta = GammaTheta::new(
        move |_| r,
        move |s| sigma_gain - beta * (maturity - s),
        maturity,
    );
    Ok(GaussianPowerModel {
        exponent: a,
        beta,
        sigma_gain,
        mu_gain,
        dynamics,
        gamma_theta,
    })
}

/// Simulates `V_t(T)` from `v0` at `grid.t_start()` using exact Gaussian
/// log-increments: over each step the drift `∫(γ − θ²/2)` and variance
/// `∫θ²` are integrated numerically.
pub fn evolve_value_mult(
    v0: f64,
    gt: &GammaTheta,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    if !(v0 > 0.0 && v0.is_finite()) {
        return domain(format!("initial value must be positive, got {v0}"));
    }
    if n_paths == 0 {
        return domain("evolve_value_mult needs at least one path");
    }
    let tol = 1e-14;
    let steps: Vec<(f64, f64)> = (0..grid.n_steps())
        .map(|k| {
            let (a, b) = (grid.node(k), grid.node(k + 1));
            let var = integrate(|s| gt.theta(s).powi(2), a, b, tol)?;
            let gam = integrate(|s| gt.gamma(s), a, b, tol)?;
            Ok((gam - 0.5 * var, var.sqrt()))
        })
        .collect::<Result<_>>()?;
    let width = grid.len();
    let mut values = vec![0.0; n_paths * width];
    values
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(p, row)| {
            let mut rng = path_rng(seed, p as u64);
            let mut log_v = 0.0;
            row[0] = v0;
            for (k, &(drift, sd)) in steps.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                log_v += drift + sd * z;
                row[k + 1] = v0 * log_v.exp();
            }
        });
    PathSet::from_values(*grid, seed, n_paths, values)
}

/// Spot consistency through the short-horizon construction: with
/// `V_t(t+h) = G_t exp(∫_t^{t+h} (μ_u − r) du)` in the continuation region,
/// `f_t(t) ≈ ln(G_t / V_t(t+h)) / h`; returns `|f_t(t) − (r − μ_t)|` at
/// `t = 0`, state `S_0`.
pub fn spot_consistency_residual_mult(
    gain: &GainProcess,
    params: &MarketParams,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("horizon must be positive, got {h}"));
    }
    let t = 0.0;
    let s = params.s0;
    let g = gain.payoff(s);
    if !(g > 0.0) {
        return domain(format!(
            "multiplicative spot consistency needs a positive gain, got {g}"
        ));
    }
    let exponent = integrate(|u| gain.mu(u, s) - params.r, t, t + h, 1e-15)?;
    let v = g * exponent.exp();
    let f_spot = (g / v).ln() / h;
    Ok((f_spot - (params.r - gain.mu(t, s))).abs())
}

/// Stopping criterion on a multiplicative curve: the first `s ∈ [t, T)` with
/// `∫_s^T f_s(u) du = 0`, taking `f_s = f_t` (curve frozen at time `t`).
/// Returns `T` when there is no crossing.
pub fn critical_time_mult(curve: &ForwardCurve, t: f64, maturity: f64) -> Result<f64> {
    if !(t < maturity) {
        return domain(format!(
            "critical time needs t < T, got t={t}, T={maturity}"
        ));
    }
    let root = first_crossing(
        |s| Ok(curve.integral_exact(s, maturity)),
        t,
        maturity,
        64,
        0.0,
        1e-12,
    )?;
    Ok(root.unwrap_or(maturity))
}

/// Settings for the multiplicative martingale harness.
#[derive(Debug, Clone, Copy)]
pub struct MultMartingaleConfig {
    pub rate: f64,
    /// Multiplier on `α`; `1.0` is the supplied drift.
    pub drift_scale: f64,
    pub gain0: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Simulates the forward curve with the drift and volatility of `dynamics`
/// together with a gain whose drift satisfies spot consistency
/// (`μ_t = r − f_t(t)`), rebuilds `V_t(T) = G_t exp(−∫_t^T f_t)` and returns the
/// drift statistic of `e^{−rt}V_t(T)`.
///
/// Coefficients active over a step are taken at the step's end node so that
/// the discrete log-increment of `V` is exactly Gaussian when `α` is the
/// no-arbitrage drift for a curve-independent `β`.
pub fn evolve_curve_mult(
    curve0: &ForwardCurve,
    dynamics: &MultForwardDynamics,
    grid: &TimeGrid,
    cfg: &MultMartingaleConfig,
) -> Result<DriftStatistic> {
    if !(cfg.gain0 > 0.0) {
        return domain(format!("gain must be positive, got {}", cfg.gain0));
    }
    if cfg.n_paths < 2 {
        return domain("martingale harness needs at least two paths");
    }
    let m = aligned_steps(curve0, grid)?;
    let h = curve0.grid().step();
    let sqrt_h = h.sqrt();
    let r = cfg.rate;
    let nodes: Vec<f64> = curve0.grid().nodes().collect();
    let n = nodes.len();

    // deterministic coefficient tables, row k holds step k → k+1
    let mut alpha = vec![0.0; m * n];
    let mut beta = vec![0.0; m * n];
    let mut sigma = vec![0.0; m];
    for k in 0..m {
        let t1 = nodes[k + 1];
        sigma[k] = dynamics.sigma_gain(t1);
        for j in k + 1..n {
            alpha[k * n + j] = cfg.drift_scale * dynamics.alpha.at(t1, nodes[j]);
            beta[k * n + j] = dynamics.beta.at(t1, nodes[j]);
        }
    }
    if alpha
        .iter()
        .chain(&beta)
        .chain(&sigma)
        .any(|x| !x.is_finite())
    {
        return domain("forward dynamics produced non-finite coefficients");
    }

    let v0 = cfg.gain0 * (-trapezoid(curve0.rates(), h)).exp();
    let horizon = grid.t_end();
    let disc = (-r * horizon).exp();
    let samples: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(cfg.seed, p as u64);
            let mut f = curve0.rates().to_vec();
            let mut log_g = cfg.gain0.ln();
            for k in 0..m {
                let z: f64 = StandardNormal.sample(&mut rng);
                let s = sigma[k];
                let roll_off = 0.5 * (f[k] + f[k + 1]) * h;
                log_g += (r - 0.5 * s * s) * h - roll_off + s * sqrt_h * z;
                let (a_row, b_row) = (&alpha[k * n..(k + 1) * n], &beta[k * n..(k + 1) * n]);
                for j in k + 1..n {
                    f[j] += a_row[j] * h + b_row[j] * sqrt_h * z;
                }
            }
            let v = (log_g - trapezoid(&f[m..], h)).exp();
            disc * v - v0
        })
        .collect();
    Ok(DriftStatistic {
        estimate: MeanEstimate::from_samples(&samples),
        v0,
        horizon,
    })
}
