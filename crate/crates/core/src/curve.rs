//! Sampled forward-drift curves `u ↦ f_t(u)`.

use crate::error::{domain, Result};
use crate::format::fmt_num;
use crate::numerics::{integrate, TimeGrid};

/// Anything that can be read as a forward-drift curve on `[t, T]`.
pub trait ForwardRate {
    fn rate(&self, u: f64) -> f64;

    /// `∫_a^b f(u) du`; the default goes through adaptive quadrature.
    fn integral(&self, a: f64, b: f64, tol: f64) -> Result<f64> {
        integrate(|u| self.rate(u), a, b, tol)
    }
}

impl<F: Fn(f64) -> f64> ForwardRate for F {
    fn rate(&self, u: f64) -> f64 {
        self(u)
    }
}

/// Forward curve observed at time `t`, sampled on a uniform grid over
/// `[t, T]` and linearly interpolated between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCurve {
    grid: TimeGrid,
    rates: Vec<f64>,
}

impl ForwardCurve {
    pub fn new(grid: TimeGrid, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != grid.len() {
            return domain(format!(
                "curve has {} rates for {} grid nodes",
                rates.len(),
                grid.len()
            ));
        }
        if let Some(bad) = rates.iter().find(|r| !r.is_finite()) {
            return domain(format!("curve rates must be finite, found {bad}"));
        }
        Ok(Self { grid, rates })
    }

    pub fn from_fn<F: FnMut(f64) -> Result<f64>>(grid: TimeGrid, mut f: F) -> Result<Self> {
        let rates = grid.nodes().map(&mut f).collect::<Result<Vec<_>>>()?;
        Self::new(grid, rates)
    }

    pub fn constant(grid: TimeGrid, rate: f64) -> Result<Self> {
        Self::new(grid, vec![rate; grid.len()])
    }

    /// Valuation time.
    pub fn t(&self) -> f64 {
        self.grid.t_start()
    }

    pub fn maturity(&self) -> f64 {
        self.grid.t_end()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// The left node, `f_t(t)`.
    pub fn spot_value(&self) -> f64 {
        self.rates[0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.nodes().zip(self.rates.iter().copied())
    }

    /// Linear interpolation, clamped to the end nodes outside `[t, T]`.
    pub fn eval(&self, u: f64) -> f64 {
        let n = self.grid.n_steps();
        if n == 0 || u <= self.t() {
            return self.rates[0];
        }
        if u >= self.maturity() {
            return self.rates[n];
        }
        let x = (u - self.t()) / self.grid.step();
        let i = (x.floor() as usize).min(n - 1);
        let w = x - i as f64;
        self.rates[i] * (1.0 - w) + self.rates[i + 1] * w
    }

    /// Exact integral of the interpolant over `[a, b] ⊆ [t, T]`.
    pub fn integral_exact(&self, a: f64, b: f64) -> f64 {
        let n = self.grid.n_steps();
        if n == 0 || b <= a {
            return 0.0;
        }
        let a = a.max(self.t());
        let b = b.min(self.maturity());
        if b <= a {
            return 0.0;
        }
        let h = self.grid.step();
        let first = (((a - self.t()) / h).floor() as usize).min(n - 1);
        let mut total = 0.0;
        let mut lo = a;
        let mut i = first;
        while lo < b && i < n {
            let hi = self.grid.node(i + 1).min(b);
            if hi > lo {
                total += 0.5 * (self.eval(lo) + self.eval(hi)) * (hi - lo);
            }
            lo = hi;
            i += 1;
        }
        total
    }

    /// Re-sample on a coarser or finer uniform grid over the same span.
    pub fn resample(&self, n_steps: usize) -> Result<Self> {
        let grid = TimeGrid::new(self.t(), self.maturity(), n_steps)?;
        Self::from_fn(grid, |u| Ok(self.eval(u)))
    }

    /// CSV with header `u,forward_rate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,forward_rate\n");
        for (u, f) in self.nodes() {
            out.push_str(&fmt_num(u));
            out.push(',');
            out.push_str(&fmt_num(f));
            out.push('\n');
        }
        out
    }
}

impl ForwardRate for ForwardCurve {
    fn rate(&self, u: f64) -> f64 {
        self.eval(u)
    }

    fn integral(&self, a: f64, b: f64, _tol: f64) -> Result<f64> {
        if a > b {
            return domain(format!("integration requires a <= b, got [{a}, {b}]"));
        }
        Ok(self.integral_exact(a, b))
    }
}

/// Composite trapezoid over consecutive samples spaced `h` apart.
pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}
