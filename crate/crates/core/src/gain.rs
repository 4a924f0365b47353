//! Market parameters and gain (payoff) processes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::PathSet;

/// Constant-coefficient Black–Scholes market for a single underlying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Risk-free rate per year (also the discount rate).
    pub r: f64,
    /// Continuous dividend yield per year.
    #[serde(default)]
    pub delta: f64,
    /// Volatility per √year.
    pub b: f64,
    pub s0: f64,
    /// Strike.
    pub k: f64,
    /// Maturity in years.
    pub maturity: f64,
}

impl MarketParams {
    pub fn new(r: f64, delta: f64, b: f64, s0: f64, k: f64, maturity: f64) -> Result<Self> {
        let p = Self {
            r,
            delta,
            b,
            s0,
            k,
            maturity,
        };
        p.validate()?;
        Ok(p)
    }

    /// The reference market used throughout the tests: `S0 = K = 100`,
    /// `r = 5%`, `b = 20%`, one year, no dividends.
    pub fn baseline() -> Self {
        Self {
            r: 0.05,
            delta: 0.0,
            b: 0.2,
            s0: 100.0,
            k: 100.0,
            maturity: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.r, self.delta, self.b, self.s0, self.k, self.maturity];
        if all.iter().any(|x| !x.is_finite()) {
            return domain(format!("market parameters must be finite: {self:?}"));
        }
        if self.b < 0.0 {
            return domain(format!("volatility must be non-negative, got {}", self.b));
        }
        if self.s0 <= 0.0 {
            return domain(format!("spot must be positive, got {}", self.s0));
        }
        if self.k <= 0.0 {
            return domain(format!("strike must be positive, got {}", self.k));
        }
        if self.maturity <= 0.0 {
            return domain(format!("maturity must be positive, got {}", self.maturity));
        }
        Ok(())
    }

    /// Drift of the underlying under the pricing measure. Dividends enter
    /// drift terms only; discounting stays at `r`.
    pub fn carry(&self) -> f64 {
        self.r - self.delta
    }

    pub fn with_spot(mut self, s0: f64) -> Self {
        self.s0 = s0;
        self
    }

    pub fn with_rate(mut self, r: f64) -> Self {
        self.r = r;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    /// `dG = μ dt + σ dW`
    Additive,
    /// `dG = μ G dt + σ G dW`
    Multiplicative,
}

type StateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type CoefFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A gain process expressed through the underlying state `S`: the payoff
/// `G = payoff(S)` and the coefficients of its SDE as functions of `(t, S)`.
/// In multiplicative mode the coefficients are relative (per unit of gain).
#[derive(Clone)]
pub struct GainProcess {
    pub mode: GainMode,
    name: String,
    payoff: StateFn,
    mu: CoefFn,
    sigma: CoefFn,
}

impl GainProcess {
    pub fn new(
        name: impl Into<String>,
        mode: GainMode,
        payoff: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mu: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        sigma: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            mode,
            name: name.into(),
            payoff: Arc::new(payoff),
            mu: Arc::new(mu),
            sigma: Arc::new(sigma),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn payoff(&self, s: f64) -> f64 {
        (self.payoff)(s)
    }

    pub fn mu(&self, t: f64, s: f64) -> f64 {
        (self.mu)(t, s)
    }

    pub fn sigma(&self, t: f64, s: f64) -> f64 {
        (self.sigma)(t, s)
    }
}

impl fmt::Debug for GainProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GainProcess")
            .field("name", &self.name)
            .field("mode", &self.mode)
            .finish()
    }
}

/// American put gain `(K - S)^+` with Meyer–Tanaka coefficients
/// `μ = -(r-δ) S 1{K>S}`, `σ = -b S 1{K>S}`.
///
/// The local-time term at `K` is dropped: before the optimal stopping time
/// the put is alive only above its exercise boundary, which lies below `K`,
/// so the local time at the strike does not accumulate on that event.
/// The indicator is strict, so at `S = K` both coefficients are zero.
pub fn put_gain(params: &MarketParams) -> GainProcess {
    let k = params.k;
    let carry = params.carry();
    let b = params.b;
    GainProcess::new(
        "american-put",
        GainMode::Additive,
        move |s| (k - s).max(0.0),
        move |_, s| if k > s { -carry * s } else { 0.0 },
        move |_, s| if k > s { -b * s } else { 0.0 },
    )
}

/// Power payoff `G = S^a`; by Itô `dG/G = (a(r-δ) + ½a(a-1)b²) dt + a b dW`.
pub fn power_gain(a: f64, params: &MarketParams) -> Result<GainProcess> {
    if !(a.is_finite() && a > 0.0) {
        return domain(format!("power exponent must be positive, got {a}"));
    }
    let (mu, sigma) = power_coefficients(a, params);
    Ok(GainProcess::new(
        format!("power-{a}"),
        GainMode::Multiplicative,
        move |s| s.powf(a),
        move |_, _| mu,
        move |_, _| sigma,
    ))
}

/// `(μ, σ)` of the power gain.
pub fn power_coefficients(a: f64, params: &MarketParams) -> (f64, f64) {
    let b = params.b;
    (a * params.carry() + 0.5 * a * (a - 1.0) * b * b, a * b)
}

/// Maps simulated underlying paths through the payoff, node by node.
pub fn gain_paths(gain: &GainProcess, underlying: &PathSet) -> PathSet {
    let values = underlying
        .values()
        .iter()
        .map(|&s| gain.payoff(s))
        .collect();
    PathSet::from_values(
        underlying.grid,
        underlying.seed,
        underlying.n_paths(),
        values,
    )
    .expect("shape is preserved")
}
