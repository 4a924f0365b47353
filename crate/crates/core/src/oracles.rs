//! Classical pricers used as independent oracles.

use rayon::prelude::*;
use serde::Serialize;

use crate::additive::value_put_additive;
use crate::error::{domain, Error, Result};
use crate::format::{fmt_num, round_sig};
use crate::gain::MarketParams;
use crate::numerics::std_normal_cdf;

/// Largest tree the exact decomposition check will enumerate (4096 paths).
pub const MAX_ENUMERATION_STEPS: usize = 12;

/// Cox–Ross–Rubinstein lattice: `u = e^{b√Δ}`, `d = 1/u`,
/// `p = (e^{(r−δ)Δ} − d)/(u − d)`.
#[derive(Debug, Clone, Copy)]
pub struct BinomialTree {
    pub steps: usize,
    pub dt: f64,
    pub up: f64,
    pub down: f64,
    pub prob: f64,
    /// One-step discount factor `e^{−rΔ}`.
    pub disc: f64,
}

impl BinomialTree {
    pub fn new(params: &MarketParams, steps: usize) -> Result<Self> {
        params.validate()?;
        if steps == 0 {
            return domain("binomial tree needs at least one step");
        }
        let dt = params.maturity / steps as f64;
        let up = (params.b * dt.sqrt()).exp();
        let down = 1.0 / up;
        let prob = ((params.carry() * dt).exp() - down) / (up - down);
        if !(prob > 0.0 && prob < 1.0) {
            return domain(format!(
                "CRR probability {prob} is outside (0, 1); need |r-δ|√Δ < b (b={}, Δ={dt})",
                params.b
            ));
        }
        Ok(Self {
            steps,
            dt,
            up,
            down,
            prob,
            disc: (-params.r * dt).exp(),
        })
    }

    /// Underlying at step `i` after `j` up-moves.
    pub fn spot(&self, s0: f64, i: usize, j: usize) -> f64 {
        s0 * ((2.0 * j as f64 - i as f64) * self.up.ln()).exp()
    }
}

#[derive(Debug, Clone)]
pub struct CrrResult {
    pub price: f64,
    /// Highest underlying level at which exercise is optimal, per step
    /// (`None` when no node of that step exercises).
    pub boundary: Vec<Option<f64>>,
}

/// American put by backward induction of the discrete Snell envelope.
pub fn crr_american_put(params: &MarketParams, steps: usize) -> Result<CrrResult> {
    let tree = BinomialTree::new(params, steps)?;
    let n = steps;
    let k = params.k;
    let (p, q) = (tree.prob * tree.disc, (1.0 - tree.prob) * tree.disc);

    // level[m + n] = S0 u^m, so node (i, j) sits at level 2j − i
    let log_up = tree.up.ln();
    let level: Vec<f64> = (0..=2 * n)
        .map(|m| params.s0 * ((m as f64 - n as f64) * log_up).exp())
        .collect();
    let spot = |i: usize, j: usize| level[2 * j + n - i];
    let mut v: Vec<f64> = (0..=n).map(|j| (k - spot(n, j)).max(0.0)).collect();
    let mut boundary = vec![None; n + 1];
    boundary[n] = (0..=n)
        .map(|j| spot(n, j))
        .filter(|&x| x < k)
        .reduce(f64::max);

    for i in (0..n).rev() {
        let mut best: Option<f64> = None;
        for j in 0..=i {
            let s = spot(i, j);
            let cont = p * v[j + 1] + q * v[j];
            let exercise = k - s;
            if exercise > 0.0 && exercise >= cont {
                v[j] = exercise;
                best = Some(best.map_or(s, |b: f64| b.max(s)));
            } else {
                v[j] = cont;
            }
        }
        boundary[i] = best;
    }
    Ok(CrrResult {
        price: v[0],
        boundary,
    })
}

/// Black–Scholes European put at time `t`:
/// `K e^{−rτ} N(−d₂) − S e^{−δτ} N(−d₁)` with `τ = T − t`.
pub fn bs_european_put(params: &MarketParams, t: f64) -> Result<f64> {
    params.validate()?;
    let tau = params.maturity - t;
    if !(tau > 0.0) {
        return domain(format!(
            "European put needs t < T, got t={t}, T={}",
            params.maturity
        ));
    }
    let (s, k, r, q, b) = (params.s0, params.k, params.r, params.delta, params.b);
    let df_k = k * (-r * tau).exp();
    let df_s = s * (-q * tau).exp();
    if b == 0.0 {
        return Ok((df_k - df_s).max(0.0));
    }
    let sd = b * tau.sqrt();
    let d1 = ((s / k).ln() + (r - q + 0.5 * b * b) * tau) / sd;
    let d2 = d1 - sd;
    Ok(df_k * std_normal_cdf(-d2) - df_s * std_normal_cdf(-d1))
}

/// Exact discrete check of the gain-plus-forward-drift decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub steps: usize,
    /// `V_0` by backward induction.
    pub lhs: f64,
    /// `G_0 + Σ_s F_s` by full path enumeration.
    pub rhs: f64,
    pub residual: f64,
    /// Discrete forward terms
    /// `F_s = E[(e^{−r(s+1)Δ}G_{s+1} − e^{−rsΔ}G_s) 1{τ* > s}]`.
    pub forward_terms: Vec<f64>,
    /// `E[Σ_{s<τ*} (E[e^{−r(s+1)Δ}G_{s+1} | F_s] − e^{−rsΔ}G_s)]`: the
    /// expected compensator of the discounted gain up to `τ*`.
    pub compensator: f64,
    /// `|V_0 − (G_0 + compensator)|`.
    pub compensator_residual: f64,
}

/// Enumerates every path of a small CRR tree under the backward-induction
/// stopping rule (stop at the first node where the gain equals the Snell
/// envelope) and compares `V_0` with `G_0` plus the summed forward terms.
pub fn discrete_decomposition_check(
    params: &MarketParams,
    steps: usize,
) -> Result<DecompositionReport> {
    if steps > MAX_ENUMERATION_STEPS {
        return Err(Error::TooManySteps {
            steps,
            max: MAX_ENUMERATION_STEPS,
        });
    }
    let tree = BinomialTree::new(params, steps)?;
    let n = steps;
    let p = tree.prob;
    let gain = |i: usize, j: usize| (params.k - tree.spot(params.s0, i, j)).max(0.0);
    let disc = |i: usize| (-params.r * tree.dt * i as f64).exp();

    // Snell envelope and stopping region
    let mut value = vec![vec![0.0; n + 1]; n + 1];
    let mut stop = vec![vec![false; n + 1]; n + 1];
    for j in 0..=n {
        value[n][j] = gain(n, j);
        stop[n][j] = true;
    }
    for i in (0..n).rev() {
        for j in 0..=i {
            let cont = tree.disc * (p * value[i + 1][j + 1] + (1.0 - p) * value[i + 1][j]);
            let g = gain(i, j);
            stop[i][j] = g >= cont;
            value[i][j] = g.max(cont);
        }
    }

    let mut forward_terms = vec![0.0; n];
    let mut compensator = 0.0;
    let mut expected_stopped = 0.0;
    for path in 0u32..(1u32 << n) {
        let ups = path.count_ones() as i32;
        let weight = p.powi(ups) * (1.0 - p).powi(n as i32 - ups);
        let mut j = 0usize;
        let mut i = 0usize;
        while !stop[i][j] {
            let here = disc(i) * gain(i, j);
            let up = (path >> i) & 1 == 1;
            let next_j = if up { j + 1 } else { j };
            let next = disc(i + 1) * gain(i + 1, next_j);
            forward_terms[i] += weight * (next - here);
            let cond = disc(i + 1) * (p * gain(i + 1, j + 1) + (1.0 - p) * gain(i + 1, j));
            compensator += weight * (cond - here);
            i += 1;
            j = next_j;
        }
        expected_stopped += weight * disc(i) * gain(i, j);
    }

    let g0 = gain(0, 0);
    let lhs = value[0][0];
    let rhs = g0 + forward_terms.iter().sum::<f64>();
    debug_assert!((expected_stopped - lhs).abs() < 1e-9);
    Ok(DecompositionReport {
        steps: n,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        forward_terms,
        compensator,
        compensator_residual: (lhs - (g0 + compensator)).abs(),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComparisonRow {
    pub spot: f64,
    pub intrinsic: f64,
    pub bs_put: f64,
    pub crr_put: f64,
    pub additive_put: f64,
    pub critical_time: f64,
    /// `additive_put − crr_put`.
    pub deviation: f64,
}

/// Additive-model prices next to the classical oracles over a spot grid.
#[derive(Debug, Clone, Serialize)]
pub struct ValuationReport {
    pub params: MarketParams,
    pub crr_steps: usize,
    pub rows: Vec<ComparisonRow>,
}

pub const DEFAULT_SPOTS: [f64; 13] = [
    1.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0, 140.0, 160.0, 200.0, 300.0,
];
pub const DEFAULT_CRR_STEPS: usize = 2000;

pub const COMPARISON_HEADER: &str =
    "spot,intrinsic,bs_put,crr_put,additive_put,critical_time,deviation";

/// Tabulates intrinsic, European, CRR American and additive-model values
/// per spot. The deviation is reported, never asserted.
pub fn comparison_report(
    params: &MarketParams,
    spots: &[f64],
    crr_steps: usize,
    quad_tol: f64,
) -> Result<ValuationReport> {
    params.validate()?;
    let rows = spots
        .par_iter()
        .map(|&spot| {
            let p = params.with_spot(spot);
            p.validate()?;
            let additive = value_put_additive(0.0, spot, &p, quad_tol)?;
            let crr = crr_american_put(&p, crr_steps)?;
            Ok(ComparisonRow {
                spot,
                intrinsic: additive.intrinsic,
                bs_put: bs_european_put(&p, 0.0)?,
                crr_put: crr.price,
                additive_put: additive.price,
                critical_time: additive.critical_time,
                deviation: additive.price - crr.price,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValuationReport {
        params: *params,
        crr_steps,
        rows,
    })
}

impl ComparisonRow {
    fn fields(&self) -> [f64; 7] {
        [
            self.spot,
            self.intrinsic,
            self.bs_put,
            self.crr_put,
            self.additive_put,
            self.critical_time,
            self.deviation,
        ]
    }

    pub fn rounded(&self) -> Self {
        let f = self.fields().map(round_sig);
        Self {
            spot: f[0],
            intrinsic: f[1],
            bs_put: f[2],
            crr_put: f[3],
            additive_put: f[4],
            critical_time: f[5],
            deviation: f[6],
        }
    }
}

impl ValuationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARISON_HEADER);
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.fields().iter().map(|&x| fmt_num(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn european_put_reference() {
        let p = MarketParams::baseline();
        let v = bs_european_put(&p, 0.0).unwrap();
        assert!((v - 5.573_526_022_256_968).abs() < 1e-12);
        assert!((v - 5.5735).abs() < 5e-4);
    }

    #[test]
    fn european_put_limits() {
        let p = MarketParams {
            k: 1e-9,
            ..MarketParams::baseline()
        };
        assert!(bs_european_put(&p, 0.0).unwrap().abs() < 1e-12);
        let flat = MarketParams {
            b: 0.0,
            ..MarketParams::baseline()
        };
        assert_eq!(bs_european_put(&flat, 0.0).unwrap(), 0.0);
        let itm = MarketParams { s0: 80.0, ..flat };
        assert!(
            (bs_european_put(&itm, 0.0).unwrap() - (100.0 * (-0.05f64).exp() - 80.0)).abs() < 1e-12
        );
        assert!(bs_european_put(&MarketParams::baseline(), 1.0).is_err());
    }

    #[test]
    fn crr_rejects_invalid_probability() {
        let p = MarketParams {
            b: 0.001,
            ..MarketParams::baseline()
        };
        assert!(matches!(crr_american_put(&p, 10), Err(Error::Domain(_))));
        assert!(crr_american_put(&MarketParams::baseline(), 0).is_err());
    }

    #[test]
    fn crr_minimal_vol_deep_itm_exercises_immediately() {
        let p = MarketParams {
            b: 0.001,
            s0: 50.0,
            ..MarketParams::baseline()
        };
        let res = crr_american_put(&p, 10_000).unwrap();
        assert_eq!(res.price, 50.0);
    }

    #[test]
    fn one_step_decomposition() {
        let p = MarketParams::baseline();
        let rep = discrete_decomposition_check(&p, 1).unwrap();
        assert!(rep.residual <= 1e-15, "{rep:?}");
        assert!(rep.compensator_residual <= 1e-13, "{rep:?}");
    }

    #[test]
    fn decomposition_refuses_large_trees() {
        assert_eq!(
            discrete_decomposition_check(&MarketParams::baseline(), 13).unwrap_err(),
            Error::TooManySteps { steps: 13, max: 12 }
        );
    }

    #[test]
    fn csv_header() {
        let p = MarketParams::baseline();
        let rep = comparison_report(&p, &[100.0], 50, 1e-10).unwrap();
        let csv = rep.to_csv();
        assert!(csv.starts_with(
            "spot,intrinsic,bs_put,crr_put,additive_put,critical_time,deviation\n100,"
        ));
        assert_eq!(csv.lines().count(), 2);
    }
}
