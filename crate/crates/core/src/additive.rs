//! Additive forward-drift model: `V_t(T) = G_t + ∫_t^T f_t(u) du`.
//!
//! Under this representation the no-arbitrage drift of the forward curve is
//! `α_t(T) = r f_t(T)`, the curve's left end is pinned by spot consistency
//! `f_t(t) = μ_t − r G_t`, and the stopping rule is the first `s` with
//! `∫_s^T f_s(u) du = 0`.
//!
//! For the American put on a GBM underlying the forward rate has the closed
//! form `f_t(u) = −rK e^{−r(u−t)} N(−d₂)`; see [`put_forward_rate`].

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{trapezoid, ForwardCurve};
use crate::error::{domain, Result};
use crate::gain::{put_gain, GainProcess, MarketParams};
use crate::numerics::{
    first_crossing, integrate, path_rng, simulate_gbm, std_normal_cdf, TimeGrid,
};
use crate::stats::MeanEstimate;

/// Nodes in the sampled valuation curve.
pub const DEFAULT_CURVE_STEPS: usize = 200;

/// Forward-curve volatility `β_t(T)`.
#[derive(Clone)]
pub struct ForwardVol(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>);

impl ForwardVol {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(beta: f64) -> Self {
        Self::new(move |_, _| beta)
    }

    pub fn at(&self, t: f64, maturity: f64) -> f64 {
        (self.0)(t, maturity)
    }
}

impl std::fmt::Debug for ForwardVol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ForwardVol(..)")
    }
}

/// Drift and volatility of `d_t f_t(T) = α_t(T) dt + β_t(T) dW_t`.
#[derive(Clone, Debug)]
pub struct ForwardDynamics {
    pub alpha: ForwardVol,
    pub beta: ForwardVol,
}

/// Probabilities `(P(S_u < K), P^S(S_u < K))`, i.e. `(N(−d₂), N(−d₁))`,
/// given `S_t = s` and horizon `τ = u − t`. At `τ = 0` or `b = 0` the
/// standardized terms diverge and the indicator limit is used, with `½` on
/// the boundary itself.
fn below_strike_probabilities(s: f64, tau: f64, p: &MarketParams) -> (f64, f64) {
    let log_m = (s / p.k).ln();
    let limit = |x: f64| {
        if x < 0.0 {
            1.0
        } else if x > 0.0 {
            0.0
        } else {
            0.5
        }
    };
    if tau == 0.0 {
        let v = limit(log_m);
        return (v, v);
    }
    if p.b == 0.0 {
        let v = limit(log_m + p.carry() * tau);
        return (v, v);
    }
    let sd = p.b * tau.sqrt();
    let d2 = (log_m + (p.carry() - 0.5 * p.b * p.b) * tau) / sd;
    let d1 = d2 + sd;
    (std_normal_cdf(-d2), std_normal_cdf(-d1))
}

/// Put forward rate `f_t(u) = E[e^{−r(u−t)}(μ_u − r G_u) | S_t = s_t]`.
///
/// With `μ = −(r−δ)S 1{K>S}` the integrand is `(−rK + δS_u) 1{S_u<K}`, so
/// `f_t(u) = −rK e^{−rτ} N(−d₂) + δ s_t e^{−δτ} N(−d₁)` with `τ = u − t`.
/// Without dividends this is `−rK e^{−rτ} N(−d₂) ∈ [−rK, 0]`.
pub fn put_forward_rate(t: f64, u: f64, s_t: f64, params: &MarketParams) -> Result<f64> {
    if !(u >= t) {
        return domain(format!("forward rate needs u >= t, got t={t}, u={u}"));
    }
    if !(s_t > 0.0 && s_t.is_finite()) {
        return domain(format!("spot must be positive, got {s_t}"));
    }
    Ok(put_forward_rate_unchecked(u - t, s_t, params))
}

fn put_forward_rate_unchecked(tau: f64, s_t: f64, p: &MarketParams) -> f64 {
    let (n_d2, n_d1) = below_strike_probabilities(s_t, tau, p);
    let strike_leg = -p.r * p.k * (-p.r * tau).exp() * n_d2;
    if p.delta == 0.0 {
        strike_leg
    } else {
        strike_leg + p.delta * s_t * (-p.delta * tau).exp() * n_d1
    }
}

/// How the stopping indicator `1{τ* ≥ u}` enters the Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stopping {
    /// Indicator dropped, as in the closed-form put rate.
    None,
    /// Censor at the deterministic critical time from [`critical_time`].
    CriticalTime,
}

/// Monte Carlo estimate of `f_t(u) = E[e^{−r(u−t)}(μ_u − r G_u) 1{τ* ≥ u} | S_t]`
/// for the put, simulating `S_u` exactly from `S_t`.
pub fn forward_rate_mc(
    t: f64,
    u: f64,
    s_t: f64,
    params: &MarketParams,
    stopping: Stopping,
    n_paths: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if n_paths < 100 {
        return domain(format!(
            "forward_rate_mc needs at least 100 paths, got {n_paths}"
        ));
    }
    if !(u >= t) {
        return domain(format!("forward rate needs u >= t, got t={t}, u={u}"));
    }
    let alive = match stopping {
        Stopping::None => true,
        Stopping::CriticalTime => critical_time(t, s_t, params)? >= u,
    };
    let gain = put_gain(params);
    let grid = TimeGrid::new(t, u, 1)?;
    let paths = simulate_gbm(s_t, params.carry(), params.b, &grid, n_paths, seed)?;
    let disc = (-params.r * (u - t)).exp();
    let samples: Vec<f64> = paths
        .terminals()
        .into_iter()
        .map(|s_u| {
            if alive {
                disc * (gain.mu(u, s_u) - params.r * gain.payoff(s_u))
            } else {
                0.0
            }
        })
        .collect();
    Ok(MeanEstimate::from_samples(&samples))
}

/// Settings for the critical-time search.
#[derive(Debug, Clone, Copy)]
pub struct CriticalTimeOptions {
    /// Scan nodes on `[t, T)` used to bracket the first crossing.
    pub scan_nodes: usize,
    /// Width of the final bracket in years.
    pub root_tol: f64,
    pub quad_tol: f64,
    /// `|Φ| ≤ zero_tol` counts as zero.
    pub zero_tol: f64,
}

impl Default for CriticalTimeOptions {
    fn default() -> Self {
        Self {
            scan_nodes: 64,
            root_tol: 1e-10,
            quad_tol: 1e-12,
            zero_tol: 0.0,
        }
    }
}

/// `Φ(s) = ∫_s^T f_s(u) du` for the put with the spot frozen at `s_t`.
pub fn put_stopping_functional(
    s: f64,
    s_t: f64,
    params: &MarketParams,
    quad_tol: f64,
) -> Result<f64> {
    let maturity = params.maturity;
    if s >= maturity {
        return Ok(0.0);
    }
    integrate(
        |u| put_forward_rate_unchecked(u - s, s_t, params),
        s,
        maturity,
        quad_tol,
    )
}

/// Deterministic critical time `t* = inf{ s ∈ [t, T] : Φ(s) = 0 }` with the
/// spot frozen at `s_t`. Returns `T` when `Φ` has no crossing on `[t, T)`;
/// `Φ(T) = 0` always.
pub fn critical_time(t: f64, s_t: f64, params: &MarketParams) -> Result<f64> {
    critical_time_with(t, s_t, params, CriticalTimeOptions::default())
}

pub fn critical_time_with(
    t: f64,
    s_t: f64,
    params: &MarketParams,
    opts: CriticalTimeOptions,
) -> Result<f64> {
    if !(t >= 0.0 && t < params.maturity) {
        return domain(format!(
            "critical time needs 0 <= t < T, got t={t}, T={}",
            params.maturity
        ));
    }
    let root = first_crossing(
        |s| put_stopping_functional(s, s_t, params, opts.quad_tol),
        t,
        params.maturity,
        opts.scan_nodes,
        opts.zero_tol,
        opts.root_tol,
    )?;
    Ok(root.unwrap_or(params.maturity))
}

/// Additive-model valuation of the American put at `(t, s_t)`.
#[derive(Debug, Clone)]
pub struct AdditiveValuation {
    pub price: f64,
    pub intrinsic: f64,
    pub critical_time: f64,
    /// `f_t(u)` sampled on `[t, T]`.
    pub curve: ForwardCurve,
    /// The forward rate is non-positive, so the model price cannot exceed
    /// intrinsic value; this records when it is strictly below.
    pub below_intrinsic: bool,
}

/// `V_t = (K − S_t)^+ + ∫_t^{t*} f_t(u) du` with `t*` from [`critical_time`].
pub fn value_put_additive(
    t: f64,
    s_t: f64,
    params: &MarketParams,
    quad_tol: f64,
) -> Result<AdditiveValuation> {
    params.validate()?;
    if !(t >= 0.0 && t < params.maturity) {
        return domain(format!(
            "valuation needs 0 <= t < T, got t={t}, T={}",
            params.maturity
        ));
    }
    if !(s_t > 0.0 && s_t.is_finite()) {
        return domain(format!("spot must be positive, got {s_t}"));
    }
    let opts = CriticalTimeOptions {
        quad_tol,
        ..Default::default()
    };
    let t_star = critical_time_with(t, s_t, params, opts)?;
    let intrinsic = (params.k - s_t).max(0.0);
    let premium = integrate(
        |u| put_forward_rate_unchecked(u - t, s_t, params),
        t,
        t_star,
        quad_tol,
    )?;
    let price = intrinsic + premium;
    let grid = TimeGrid::new(t, params.maturity, DEFAULT_CURVE_STEPS)?;
    let curve = ForwardCurve::from_fn(grid, |u| put_forward_rate(t, u, s_t, params))?;
    Ok(AdditiveValuation {
        price,
        intrinsic,
        critical_time: t_star,
        curve,
        below_intrinsic: price < intrinsic,
    })
}

/// No-arbitrage drift slice `α_t(u) = r f_t(u)` at the curve nodes.
pub fn no_arb_drift_additive(curve: &ForwardCurve, r: f64) -> Vec<f64> {
    additive_drift(curve.rates(), r).collect()
}

fn additive_drift(rates: &[f64], r: f64) -> impl Iterator<Item = f64> + '_ {
    rates.iter().map(move |f| r * f)
}

/// `|f_t(t+h) − (μ_t − r G_t)|` for the put forward rate.
pub fn spot_consistency_residual_additive(
    gain: &GainProcess,
    t: f64,
    s_t: f64,
    params: &MarketParams,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("horizon must be positive, got {h}"));
    }
    let near = put_forward_rate(t, t + h, s_t, params)?;
    let spot = gain.mu(t, s_t) - params.r * gain.payoff(s_t);
    Ok((near - spot).abs())
}

/// Settings for the additive martingale harness.
#[derive(Debug, Clone, Copy)]
pub struct AdditiveMartingaleConfig {
    pub rate: f64,
    /// Multiplier on the no-arbitrage drift; `1.0` is the arbitrage-free
    /// model, anything else a deliberately violated condition.
    pub drift_scale: f64,
    pub gain0: f64,
    /// Diffusion coefficient of the simulated gain.
    pub gain_vol: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Sample mean of `e^{−rt}V_t(T) − V_0(T)` at the end of the horizon.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DriftStatistic {
    pub estimate: MeanEstimate,
    pub v0: f64,
    pub horizon: f64,
}

impl DriftStatistic {
    pub fn z_score(&self) -> f64 {
        self.estimate.z_score(0.0)
    }
}

/// Checks that `grid` starts at the curve's valuation time, shares its
/// step, and ends no later than maturity.
pub(crate) fn aligned_steps(curve: &ForwardCurve, grid: &TimeGrid) -> Result<usize> {
    let cg = curve.grid();
    let step_ok = grid.is_point() || (grid.step() - cg.step()).abs() <= 1e-12 * cg.step().max(1.0);
    if (grid.t_start() - cg.t_start()).abs() > 1e-12 || !step_ok || grid.n_steps() > cg.n_steps() {
        return domain(format!(
            "simulation grid [{}, {}] / {} steps is not a prefix of the curve grid [{}, {}] / {} steps",
            grid.t_start(),
            grid.t_end(),
            grid.n_steps(),
            cg.t_start(),
            cg.t_end(),
            cg.n_steps()
        ));
    }
    Ok(grid.n_steps())
}

/// Simulates the forward curve under `d_t f_t(u) = α dt + β_t(u) dW_t` with
/// `α` given by [`no_arb_drift_additive`] (times `drift_scale`), together with
/// a gain whose drift satisfies spot consistency, `dG = (f_t(t) + rG) dt + σ dW`,
/// and returns the drift statistic of the discounted value `e^{−rt}V_t(T)`.
///
/// The simulation grid must share nodes with the curve grid. Drift is applied
/// with the exponential integrator `(e^{rΔ} − 1)/r`, and the gain absorbs the
/// curve segment rolling off each step, so the discrete scheme is exactly
/// mean-preserving when `drift_scale = 1`.
pub fn evolve_curve_additive(
    curve0: &ForwardCurve,
    beta: &ForwardVol,
    grid: &TimeGrid,
    cfg: &AdditiveMartingaleConfig,
) -> Result<DriftStatistic> {
    if cfg.n_paths < 2 {
        return domain("martingale harness needs at least two paths");
    }
    let m = aligned_steps(curve0, grid)?;
    let h = curve0.grid().step();
    let r = cfg.rate;
    let growth = (r * h).exp();
    let phi = if r == 0.0 { h } else { (growth - 1.0) / r };
    let sqrt_h = h.sqrt();
    let cg = *curve0.grid();
    let nodes: Vec<f64> = cg.nodes().collect();
    let v0 = cfg.gain0 + trapezoid(curve0.rates(), h);
    let horizon = grid.t_end();
    let disc = (-r * horizon).exp();

    let samples: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(cfg.seed, p as u64);
            let mut f = curve0.rates().to_vec();
            let mut g = cfg.gain0;
            let mut drift = vec![0.0; f.len()];
            for k in 0..m {
                let z: f64 = StandardNormal.sample(&mut rng);
                let tk = nodes[k];
                let roll_off = 0.5 * (f[k] + f[k + 1]) * h;
                g = growth * (g + roll_off) + cfg.gain_vol * sqrt_h * z;
                for (d, a) in drift[k + 1..]
                    .iter_mut()
                    .zip(additive_drift(&f[k + 1..], r))
                {
                    *d = cfg.drift_scale * a;
                }
                for j in k + 1..f.len() {
                    f[j] += drift[j] * phi + beta.at(tk, nodes[j]) * sqrt_h * z;
                }
            }
            let v = g + trapezoid(&f[m..], h);
            disc * v - v0
        })
        .collect();

    Ok(DriftStatistic {
        estimate: MeanEstimate::from_samples(&samples),
        v0,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::norm_cdf;

    fn baseline() -> MarketParams {
        MarketParams::baseline()
    }

    #[test]
    fn at_the_money_one_year_rate() {
        let p = baseline();
        let f = put_forward_rate(0.0, 1.0, 100.0, &p).unwrap();
        // hand substitution with d2 = 0.15
        let hand = -0.05 * 100.0 * (-0.05f64).exp() * norm_cdf(-0.15).unwrap();
        assert!((f - hand).abs() < 1e-13);
        assert!((f - (-2.094_523_045_234_753)).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_means_zero_forward_rate() {
        let p = baseline().with_rate(0.0);
        for u in [0.0, 0.1, 0.7, 1.0] {
            assert_eq!(put_forward_rate(0.0, u, 90.0, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn left_limit_is_indicator() {
        let p = baseline();
        assert!((put_forward_rate(0.2, 0.2, 80.0, &p).unwrap() + 5.0).abs() < 1e-15);
        assert_eq!(put_forward_rate(0.2, 0.2, 120.0, &p).unwrap(), 0.0);
        assert!((put_forward_rate(0.2, 0.2, 100.0, &p).unwrap() + 2.5).abs() < 1e-15);
    }

    #[test]
    fn zero_vol_uses_sign_limit() {
        let p = MarketParams {
            b: 0.0,
            ..baseline()
        };
        // S < K e^{-rτ}: deterministic finish below strike
        assert!(
            (put_forward_rate(0.0, 0.5, 90.0, &p).unwrap() + 5.0 * (-0.025f64).exp()).abs() < 1e-13
        );
        assert_eq!(put_forward_rate(0.0, 0.5, 100.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn reversed_horizon_is_domain_error() {
        assert!(put_forward_rate(0.5, 0.4, 100.0, &baseline()).is_err());
    }

    #[test]
    fn critical_time_zero_rate_is_left_endpoint() {
        assert_eq!(
            critical_time(0.25, 90.0, &baseline().with_rate(0.0)).unwrap(),
            0.25
        );
    }

    #[test]
    fn critical_time_deep_otm_is_maturity() {
        for s in [200.0, 300.0] {
            assert_eq!(critical_time(0.0, s, &baseline()).unwrap(), 1.0);
        }
    }

    #[test]
    fn critical_time_matches_grid_scan() {
        // dense scan oracle: first s where Φ(s) is zero or positive
        let p = baseline();
        let n = 10_000;
        let mut scan = p.maturity;
        for i in 0..n {
            let s = i as f64 / n as f64;
            if put_stopping_functional(s, 100.0, &p, 1e-10).unwrap() >= 0.0 {
                scan = s;
                break;
            }
        }
        let t_star = critical_time(0.0, 100.0, &p).unwrap();
        assert!(
            (t_star - scan).abs() <= 1.0 / n as f64,
            "{t_star} vs {scan}"
        );
        assert_eq!(t_star, 1.0);
    }

    #[test]
    fn zero_rate_price_is_intrinsic() {
        let p = baseline().with_rate(0.0);
        for s in [60.0, 100.0, 140.0] {
            let v = value_put_additive(0.0, s, &p, 1e-12).unwrap();
            assert_eq!(v.price, (100.0 - s).max(0.0));
            assert!(!v.below_intrinsic);
        }
    }

    #[test]
    fn deep_otm_bound() {
        let p = MarketParams {
            maturity: 0.5,
            ..baseline()
        };
        let v = value_put_additive(0.0, 200.0, &p, 1e-12).unwrap();
        assert_eq!(v.intrinsic, 0.0);
        assert!(v.price <= 0.0 && v.price.abs() < 0.05 * 100.0 * 0.5);
    }

    #[test]
    fn drift_slice() {
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let c = ForwardCurve::constant(grid, -2.0944).unwrap();
        assert!(no_arb_drift_additive(&c, 0.05)
            .iter()
            .all(|a| (a + 0.10472).abs() < 1e-12));
        assert!(no_arb_drift_additive(&c, 0.0).iter().all(|&a| a == 0.0));
        let zero = ForwardCurve::constant(grid, 0.0).unwrap();
        assert!(no_arb_drift_additive(&zero, 0.05).iter().all(|&a| a == 0.0));
    }

    #[test]
    fn spot_consistency_cases() {
        let p = baseline();
        let g = put_gain(&p);
        assert!(spot_consistency_residual_additive(&g, 0.0, 80.0, &p, 1e-6).unwrap() < 1e-3);
        assert_eq!(
            spot_consistency_residual_additive(&g, 0.0, 120.0, &p, 1e-6).unwrap(),
            0.0
        );
        let p0 = p.with_rate(0.0);
        assert_eq!(
            spot_consistency_residual_additive(&put_gain(&p0), 0.0, 80.0, &p0, 1e-6).unwrap(),
            0.0
        );
    }

    #[test]
    fn mc_degenerate_cases() {
        let p = baseline();
        let at_t = forward_rate_mc(0.3, 0.3, 80.0, &p, Stopping::None, 100, 1).unwrap();
        assert_eq!(at_t.std_error, 0.0);
        assert!((at_t.mean + 5.0).abs() < 1e-12);
        let p0 = p.with_rate(0.0);
        let zero = forward_rate_mc(0.0, 1.0, 100.0, &p0, Stopping::None, 1000, 1).unwrap();
        assert_eq!(zero.mean, 0.0);
        assert_eq!(zero.std_error, 0.0);
        assert!(forward_rate_mc(0.0, 1.0, 100.0, &p, Stopping::None, 99, 1).is_err());
    }

    #[test]
    fn deterministic_curve_is_exact_martingale() {
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let curve = ForwardCurve::from_fn(grid, |u| Ok(-2.0 - u)).unwrap();
        let cfg = AdditiveMartingaleConfig {
            rate: 0.05,
            drift_scale: 1.0,
            gain0: 3.0,
            gain_vol: 0.0,
            n_paths: 16,
            seed: 3,
        };
        let half = TimeGrid::new(0.0, 0.5, 10).unwrap();
        let stat = evolve_curve_additive(&curve, &ForwardVol::constant(0.0), &half, &cfg).unwrap();
        assert!(stat.estimate.mean.abs() < 1e-12, "{stat:?}");
    }

    #[test]
    fn misaligned_grid_rejected() {
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let curve = ForwardCurve::constant(grid, -1.0).unwrap();
        let cfg = AdditiveMartingaleConfig {
            rate: 0.05,
            drift_scale: 1.0,
            gain0: 0.0,
            gain_vol: 0.0,
            n_paths: 4,
            seed: 0,
        };
        let bad = TimeGrid::new(0.0, 1.0, 7).unwrap();
        assert!(evolve_curve_additive(&curve, &ForwardVol::constant(0.1), &bad, &cfg).is_err());
    }
}
