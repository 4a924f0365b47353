//! Verification suites behind `hjm verify`.
//!
//! Each suite measures one identity of the models and compares it with a fixed
//! threshold. Monte Carlo suites are deterministic for a given seed.

use rayon::prelude::*;
use serde::Serialize;

use crate::additive::{
    evolve_curve_additive, forward_rate_mc, put_forward_rate, spot_consistency_residual_additive,
    value_put_additive, AdditiveMartingaleConfig, ForwardVol, Stopping,
};
use crate::curve::ForwardCurve;
use crate::error::{domain, Result};
use crate::gain::{power_gain, put_gain, MarketParams};
use crate::multiplicative::{
    evolve_curve_mult, evolve_value_mult, gaussian_power_dynamics, MultMartingaleConfig,
};
use crate::numerics::{integrate, std_normal_cdf, TimeGrid};
use crate::oracles::{discrete_decomposition_check, MAX_ENUMERATION_STEPS};
use crate::stats::{MeanEstimate, VarianceEstimate};

pub const MC_MONEYNESS: [f64; 5] = [0.6, 0.8, 1.0, 1.2, 1.4];
pub const MC_HORIZONS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];
pub const SPOT_MONEYNESS: [f64; 4] = [0.6, 0.8, 1.2, 1.4];

pub const SPOT_H: f64 = 1e-6;
pub const SPOT_TOL_ADDITIVE: f64 = 1e-3;
pub const SPOT_TOL_MULT: f64 = 1e-6;
pub const Z_PASS: f64 = 3.0;
pub const Z_CONTROL: f64 = 5.0;
pub const DECOMPOSITION_TOL: f64 = 1e-12;
/// Steps of the simulated curves in the martingale suites.
pub const MARTINGALE_STEPS: usize = 50;
/// Diffusion coefficient of the simulated gain in the additive martingale suite.
pub const MARTINGALE_GAIN_VOL: f64 = 1.0;

/// Inputs shared by all suites.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub params: MarketParams,
    pub exponent: f64,
    pub beta: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub quad_tol: f64,
    pub decomposition_steps: usize,
    /// Run the primary martingale suites with the drift doubled.
    pub negative_control: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            params: MarketParams::baseline(),
            exponent: 2.0,
            beta: 0.1,
            n_paths: 100_000,
            seed: 1000,
            quad_tol: 1e-12,
            decomposition_steps: 10,
            negative_control: false,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.decomposition_steps == 0 || self.decomposition_steps > MAX_ENUMERATION_STEPS {
            return domain(format!(
                "decomposition steps must be in 1..={MAX_ENUMERATION_STEPS}, got {}",
                self.decomposition_steps
            ));
        }
        if self.n_paths < 100 {
            return domain(format!(
                "verification needs at least 100 paths, got {}",
                self.n_paths
            ));
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return domain(format!(
                "power exponent must be positive, got {}",
                self.exponent
            ));
        }
        if !self.beta.is_finite() {
            return domain(format!(
                "forward volatility must be finite, got {}",
                self.beta
            ));
        }
        if !(self.quad_tol > 0.0) {
            return domain(format!(
                "quadrature tolerance must be positive, got {}",
                self.quad_tol
            ));
        }
        Ok(())
    }
}

/// How a suite's measured value is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass when `measured ≤ threshold`.
    AtMost,
    /// Pass when `measured > threshold`.
    Exceeds,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub detail: String,
}

impl SuiteResult {
    fn judge(
        name: &str,
        measured: f64,
        threshold: f64,
        comparison: Comparison,
        detail: String,
    ) -> Self {
        let passed = match comparison {
            Comparison::AtMost => measured <= threshold,
            Comparison::Exceeds => measured > threshold,
        };
        Self {
            name: name.to_string(),
            passed,
            measured,
            threshold,
            comparison,
            detail,
        }
    }

    /// One line: `PASS name measured=… threshold=… detail`.
    pub fn line(&self) -> String {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::Exceeds => ">",
        };
        format!(
            "{} {} measured={:.6e} {op} {:.6e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
        .trim_end()
        .to_string()
    }
}

/// Largest additive spot-consistency residual over [`SPOT_MONEYNESS`] at horizon `h`.
pub fn additive_spot_residual(params: &MarketParams, h: f64) -> Result<f64> {
    let gain = put_gain(params);
    SPOT_MONEYNESS.iter().try_fold(0.0f64, |worst, m| {
        let res = spot_consistency_residual_additive(&gain, 0.0, m * params.k, params, h)?;
        Ok(worst.max(res))
    })
}

/// One cell of the Monte Carlo forward-rate grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McCell {
    pub moneyness: f64,
    pub horizon: f64,
    pub estimate: MeanEstimate,
    pub closed_form: f64,
    /// Standard error of the estimator when the closed form is the true mean.
    pub null_std_error: f64,
}

impl McCell {
    /// `(estimate − closed form) / null_std_error`; zero when both vanish.
    pub fn z_score(&self) -> f64 {
        let diff = self.estimate.mean - self.closed_form;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.null_std_error
        }
    }
}

/// Exact standard deviation of one sample `e^{−rτ}(δS_u − rK) 1{S_u<K}` of
/// the put forward-rate estimator, from lognormal partial moments.
fn put_sample_sd(s: f64, tau: f64, p: &MarketParams) -> f64 {
    if tau == 0.0 || p.b == 0.0 {
        return 0.0;
    }
    let sd = p.b * tau.sqrt();
    let d2 = ((s / p.k).ln() + (p.carry() - 0.5 * p.b * p.b) * tau) / sd;
    let growth = (p.carry() * tau).exp();
    let m0 = std_normal_cdf(-d2);
    let m1 = s * growth * std_normal_cdf(-d2 - sd);
    let m2 = s * s * growth * growth * (p.b * p.b * tau).exp() * std_normal_cdf(-d2 - 2.0 * sd);
    let (rk, dl) = (p.r * p.k, p.delta);
    let disc = (-p.r * tau).exp();
    let second = disc * disc * (rk * rk * m0 - 2.0 * rk * dl * m1 + dl * dl * m2);
    let first = disc * (dl * m1 - rk * m0);
    (second - first * first).max(0.0).sqrt()
}

/// Monte Carlo forward rates against the closed form on the
/// [`MC_MONEYNESS`] × [`MC_HORIZONS`] grid. Cell `i` uses seed `seed + i`.
pub fn mc_forward_rate_grid(
    params: &MarketParams,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<McCell>> {
    let cells: Vec<(f64, f64)> = MC_MONEYNESS
        .iter()
        .flat_map(|&m| MC_HORIZONS.iter().map(move |&h| (m, h)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(i, &(m, h))| {
            let s = m * params.k;
            let estimate = forward_rate_mc(
                0.0,
                h,
                s,
                params,
                Stopping::None,
                n_paths,
                seed.wrapping_add(i as u64),
            )?;
            let closed_form = put_forward_rate(0.0, h, s, params)?;
            let null_std_error = put_sample_sd(s, h, params) / (n_paths as f64).sqrt();
            Ok(McCell {
                moneyness: m,
                horizon: h,
                estimate,
                closed_form,
                null_std_error,
            })
        })
        .collect()
}

fn martingale_grid(maturity: f64) -> Result<TimeGrid> {
    TimeGrid::new(0.0, maturity, MARTINGALE_STEPS)
}

/// Additive drift statistic z-score under `drift_scale × r f`, starting
/// from the put curve at `S_0`.
pub fn additive_martingale_z(cfg: &VerifyConfig, drift_scale: f64, seed: u64) -> Result<f64> {
    let p = &cfg.params;
    let val = value_put_additive(0.0, p.s0, p, cfg.quad_tol)?;
    let curve = val.curve.resample(MARTINGALE_STEPS)?;
    let harness = AdditiveMartingaleConfig {
        rate: p.r,
        drift_scale,
        gain0: val.intrinsic,
        gain_vol: MARTINGALE_GAIN_VOL,
        n_paths: cfg.n_paths,
        seed,
    };
    let stat = evolve_curve_additive(
        &curve,
        &ForwardVol::constant(cfg.beta),
        &martingale_grid(p.maturity)?,
        &harness,
    )?;
    Ok(stat.z_score())
}

/// Multiplicative drift statistic z-score for the Gaussian power model,
/// starting from the spot-consistent flat curve `r − μ`.
pub fn mult_martingale_z(cfg: &VerifyConfig, drift_scale: f64, seed: u64) -> Result<f64> {
    let p = &cfg.params;
    let model = gaussian_power_dynamics(cfg.exponent, p, cfg.beta)?;
    let grid = martingale_grid(p.maturity)?;
    let curve = ForwardCurve::constant(grid, p.r - model.mu_gain)?;
    let harness = MultMartingaleConfig {
        rate: p.r,
        drift_scale,
        gain0: p.s0.powf(cfg.exponent),
        n_paths: cfg.n_paths,
        seed,
    };
    Ok(evolve_curve_mult(&curve, &model.dynamics, &grid, &harness)?.z_score())
}

/// Exponential-martingale check for the Gaussian power model: z-scores of
/// the discounted terminal mean against `V_0` and of `Var[ln(V_T/V_0)]`
/// against `∫_0^T θ²`.
pub fn exponential_evolution_z(cfg: &VerifyConfig, seed: u64) -> Result<(f64, f64)> {
    let p = &cfg.params;
    let model = gaussian_power_dynamics(cfg.exponent, p, cfg.beta)?;
    let v0 = p.s0.powf(cfg.exponent);
    let grid = martingale_grid(p.maturity)?;
    let paths = evolve_value_mult(v0, &model.gamma_theta, &grid, cfg.n_paths, seed)?;
    let disc = (-p.r * p.maturity).exp();
    let terminals = paths.terminals();
    let discounted: Vec<f64> = terminals.iter().map(|v| disc * v).collect();
    let logs: Vec<f64> = terminals.iter().map(|v| (v / v0).ln()).collect();
    let theta_sq = integrate(
        |s| model.gamma_theta.theta(s).powi(2),
        0.0,
        p.maturity,
        1e-14,
    )?;
    Ok((
        MeanEstimate::from_samples(&discounted).z_score(v0),
        VarianceEstimate::from_samples(&logs).z_score(theta_sq),
    ))
}

/// Runs every suite in a fixed order.
pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<SuiteResult>> {
    cfg.validate()?;
    let p = &cfg.params;
    let mut out = Vec::new();

    let worst = additive_spot_residual(p, SPOT_H)?;
    out.push(SuiteResult::judge(
        "spot_consistency_additive",
        worst,
        SPOT_TOL_ADDITIVE,
        Comparison::AtMost,
        format!("h={SPOT_H:e}"),
    ));

    let gain = power_gain(cfg.exponent, p)?;
    let res = crate::multiplicative::spot_consistency_residual_mult(&gain, p, SPOT_H)?;
    out.push(SuiteResult::judge(
        "spot_consistency_multiplicative",
        res,
        SPOT_TOL_MULT,
        Comparison::AtMost,
        format!("h={SPOT_H:e} a={}", cfg.exponent),
    ));

    let cells = mc_forward_rate_grid(p, cfg.n_paths, cfg.seed)?;
    let worst_z = cells.iter().map(|c| c.z_score().abs()).fold(0.0, f64::max);
    out.push(SuiteResult::judge(
        "forward_rate_mc_vs_closed_form",
        worst_z,
        Z_PASS,
        Comparison::AtMost,
        format!("max |z| over {} cells, {} paths", cells.len(), cfg.n_paths),
    ));

    let primary_scale = if cfg.negative_control { 2.0 } else { 1.0 };
    let seed = cfg.seed.wrapping_add(100);
    let z = additive_martingale_z(cfg, primary_scale, seed)?;
    out.push(SuiteResult::judge(
        "martingale_additive",
        z.abs(),
        Z_PASS,
        Comparison::AtMost,
        format!("|z|, drift x{primary_scale}"),
    ));
    let z = additive_martingale_z(cfg, 2.0, seed)?;
    out.push(SuiteResult::judge(
        "martingale_additive_control",
        z.abs(),
        Z_CONTROL,
        Comparison::Exceeds,
        "|z|, drift x2".into(),
    ));

    let seed = cfg.seed.wrapping_add(200);
    let z = mult_martingale_z(cfg, primary_scale, seed)?;
    out.push(SuiteResult::judge(
        "martingale_multiplicative",
        z.abs(),
        Z_PASS,
        Comparison::AtMost,
        format!("|z|, drift x{primary_scale}"),
    ));
    let z = mult_martingale_z(cfg, 2.0, seed)?;
    out.push(SuiteResult::judge(
        "martingale_multiplicative_control",
        z.abs(),
        Z_CONTROL,
        Comparison::Exceeds,
        "|z|, drift x2".into(),
    ));

    let (z_mean, z_var) = exponential_evolution_z(cfg, cfg.seed.wrapping_add(300))?;
    out.push(SuiteResult::judge(
        "value_evolution_mean",
        z_mean.abs(),
        Z_PASS,
        Comparison::AtMost,
        "|z|".into(),
    ));
    out.push(SuiteResult::judge(
        "value_evolution_variance",
        z_var.abs(),
        Z_PASS,
        Comparison::AtMost,
        "|z|".into(),
    ));

    let rep = discrete_decomposition_check(p, cfg.decomposition_steps)?;
    out.push(SuiteResult::judge(
        "discrete_decomposition",
        rep.residual,
        DECOMPOSITION_TOL,
        Comparison::AtMost,
        format!("steps={}", cfg.decomposition_steps),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sd_matches_bernoulli_without_dividends() {
        let p = MarketParams::baseline();
        let (s, tau) = (90.0, 0.5);
        let c = p.r * p.k * (-p.r * tau).exp();
        let q = put_forward_rate(0.0, tau, s, &p).unwrap() / -c;
        let expected = c * (q * (1.0 - q)).sqrt();
        assert!((put_sample_sd(s, tau, &p) - expected).abs() < 1e-12);
    }

    #[test]
    fn sample_sd_with_dividends_matches_simulation() {
        let p = MarketParams {
            delta: 0.03,
            ..MarketParams::baseline()
        };
        let est = forward_rate_mc(0.0, 0.75, 95.0, &p, Stopping::None, 200_000, 5).unwrap();
        let sample_sd = est.std_error * (est.n as f64).sqrt();
        assert!((put_sample_sd(95.0, 0.75, &p) / sample_sd - 1.0).abs() < 0.01);
    }

    #[test]
    fn oversized_decomposition_is_rejected() {
        let cfg = VerifyConfig {
            decomposition_steps: 13,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn result_line_format() {
        let r = SuiteResult::judge("x", 0.5, 1.0, Comparison::AtMost, String::new());
        assert!(r.passed);
        assert!(r
            .line()
            .starts_with("PASS x measured=5.000000e-1 <= 1.000000e0"));
    }
}
