//! Reference values from an independent 30-digit evaluation, plus brute-force
//! oracles written out in the test code.

use hjm_american::additive::{
    critical_time, evolve_curve_additive, forward_rate_mc, put_forward_rate,
    put_stopping_functional, spot_consistency_residual_additive, value_put_additive,
    AdditiveMartingaleConfig, ForwardVol, Stopping,
};
use hjm_american::curve::ForwardCurve;
use hjm_american::gain::{gain_paths, power_coefficients, power_gain, put_gain};
use hjm_american::multiplicative::{
    critical_time_mult, evolve_value_mult, gaussian_power_dynamics, no_arb_drift_mult,
    value_multiplicative, GammaTheta,
};
use hjm_american::numerics::{
    find_root, integrate, norm_cdf, simulate_gbm, std_normal_cdf, TimeGrid,
};
use hjm_american::oracles::{bs_european_put, crr_american_put, discrete_decomposition_check};
use hjm_american::stats::{MeanEstimate, VarianceEstimate};
use hjm_american::MarketParams;

const CRR_10000_GOLDEN: f64 = 6.090295412881;

fn baseline() -> MarketParams {
    MarketParams::baseline()
}

/// Composite Simpson with `n` (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Put rate written out from its definition, independent of the library helper.
fn put_rate_by_hand(tau: f64, s: f64, p: &MarketParams) -> f64 {
    if tau == 0.0 {
        let below = if s < p.k {
            1.0
        } else if s == p.k {
            0.5
        } else {
            0.0
        };
        return -p.r * p.k * below;
    }
    let d2 = ((s / p.k).ln() + (p.r - 0.5 * p.b * p.b) * tau) / (p.b * tau.sqrt());
    -p.r * p.k * (-p.r * tau).exp() * std_normal_cdf(-d2)
}

#[test]
fn normal_cdf_reference_points() {
    assert_eq!(norm_cdf(0.0).unwrap(), 0.5);
    assert!((norm_cdf(-0.15).unwrap() - 0.440_382_307_629_757_5).abs() < 1e-15);
    assert!((norm_cdf(1.959964).unwrap() - 0.975_000_000_903_557_6).abs() < 1e-15);
    assert!(norm_cdf(f64::NAN).is_err());
}

#[test]
fn quadrature_reference_points() {
    assert!((integrate(|x| x, 0.0, 1.0, 1e-12).unwrap() - 0.5).abs() < 1e-15);
    assert!(
        (integrate(|x: f64| (-x).exp(), 0.0, 1.0, 1e-12).unwrap() - 0.632_120_558_828_557_7).abs()
            < 1e-12
    );
    assert_eq!(integrate(|x: f64| x.sin(), 0.3, 0.3, 1e-12).unwrap(), 0.0);
}

#[test]
fn root_reference_points() {
    assert!((find_root(|x| x - 0.25, 0.0, 1.0, 1e-10).unwrap() - 0.25).abs() < 1e-10);
    assert!(
        (find_root(|x| x * x - 2.0, 1.0, 2.0, 1e-10).unwrap() - std::f64::consts::SQRT_2).abs()
            < 1e-10
    );
    assert!(find_root(|x| x + 1.0, 0.0, 1.0, 1e-10).is_none());
}

#[test]
fn forward_rate_reference_point() {
    let f = put_forward_rate(0.0, 1.0, 100.0, &baseline()).unwrap();
    assert!((f - (-2.094_523_045_234_753)).abs() < 1e-13);
    assert!((put_forward_rate(0.0, 0.0, 80.0, &baseline()).unwrap() + 5.0).abs() < 1e-15);
}

#[test]
fn additive_price_reference_values() {
    let p = baseline();
    let one_year = [
        (100.0, -2.245_368_330_635_550_7),
        (80.0, 15.471_722_691_018_185),
        (120.0, -0.359_663_944_807_836_06),
        (200.0, -0.000_087_688_098_714_339_19),
    ];
    for (s, golden) in one_year {
        let v = value_put_additive(0.0, s, &p, 1e-12).unwrap();
        assert!(
            (v.price - golden).abs() < 1e-10,
            "S={s}: {} vs {golden}",
            v.price
        );
        assert_eq!(v.critical_time, 1.0);
    }
    let p = MarketParams { maturity: 0.5, ..p };
    let half_year = [
        (100.0, -1.165_107_014_254_015_4),
        (80.0, 17.586_930_859_771_976),
        (120.0, -0.079_144_929_226_192_79),
        (200.0, -4.710_811_051_430_014e-8),
    ];
    for (s, golden) in half_year {
        let v = value_put_additive(0.0, s, &p, 1e-12).unwrap();
        assert!(
            (v.price - golden).abs() < 1e-10,
            "S={s}: {} vs {golden}",
            v.price
        );
    }
}

#[test]
fn additive_price_matches_composite_simpson() {
    let p = baseline();
    // the integrand behaves like sqrt near u = t at the money; 10^6 intervals resolve it well below 1e-8
    let oracle = simpson(|u| put_rate_by_hand(u, 100.0, &p), 0.0, 1.0, 1_000_000);
    let v = value_put_additive(0.0, 100.0, &p, 1e-12).unwrap();
    assert!((v.price - oracle).abs() < 1e-8, "{} vs {oracle}", v.price);
    let oracle = 20.0 + simpson(|u| put_rate_by_hand(u, 80.0, &p), 0.0, 1.0, 1_000_000);
    let v = value_put_additive(0.0, 80.0, &p, 1e-12).unwrap();
    assert!((v.price - oracle).abs() < 1e-10);
}

#[test]
fn deep_out_of_the_money_bound() {
    let p = MarketParams {
        maturity: 0.5,
        ..baseline()
    };
    let v = value_put_additive(0.0, 200.0, &p, 1e-12).unwrap();
    assert_eq!(v.intrinsic, 0.0);
    assert!(v.price.abs() < p.r * p.k * p.maturity);
    assert!(v.below_intrinsic);
}

#[test]
fn critical_time_agrees_with_dense_scan() {
    let p = baseline();
    for s in [60.0, 100.0, 140.0] {
        // scan Φ on 10^4 nodes of [0, T) for a sign change
        let n = 10_000;
        let mut scan = p.maturity;
        for i in 0..n {
            let x = p.maturity * i as f64 / n as f64;
            if put_stopping_functional(x, s, &p, 1e-10).unwrap() > 0.0 {
                scan = x;
                break;
            }
        }
        assert_eq!(critical_time(0.0, s, &p).unwrap(), scan);
    }
    assert_eq!(critical_time(0.3, 90.0, &p.with_rate(0.0)).unwrap(), 0.3);
}

#[test]
fn curve_left_node_is_spot_value() {
    let p = baseline();
    let v = value_put_additive(0.0, 80.0, &p, 1e-12).unwrap();
    assert_eq!(v.curve.spot_value(), -5.0);
    assert_eq!(v.curve.rates().len(), 201);
    let (u, f) = v.curve.nodes().last().unwrap();
    assert_eq!(u, 1.0);
    assert!((f - put_rate_by_hand(1.0, 80.0, &p)).abs() < 1e-14);
}

#[test]
fn spot_residual_shrinks_with_horizon() {
    let p = baseline();
    let gain = put_gain(&p);
    for s in [60.0, 80.0, 120.0, 140.0] {
        let res: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&h| spot_consistency_residual_additive(&gain, 0.0, s, &p, h).unwrap())
            .collect();
        assert!(res.windows(2).all(|w| w[1] <= w[0]), "S={s}: {res:?}");
        assert!(res[4] < 1e-3);
    }
    // closed form at S = 80: −rK e^{−rh} N(−d₂(h)) − (−rK)
    let h = 1e-6;
    let r80 = spot_consistency_residual_additive(&gain, 0.0, 80.0, &p, h).unwrap();
    assert!((r80 - 5.0 * (1.0 - (-0.05 * h).exp())).abs() < 1e-15);
    let zero = p.with_rate(0.0);
    assert_eq!(
        spot_consistency_residual_additive(&put_gain(&zero), 0.0, 80.0, &zero, h).unwrap(),
        0.0
    );
    assert_eq!(
        spot_consistency_residual_additive(&gain, 0.0, 120.0, &p, h).unwrap(),
        0.0
    );
}

#[test]
fn monte_carlo_forward_rate_cases() {
    let p = baseline();
    let est = forward_rate_mc(0.0, 1.0, 100.0, &p, Stopping::None, 100_000, 7).unwrap();
    assert!(est.z_score(-2.094_523_045_234_753).abs() < 3.0);
    let zero = forward_rate_mc(0.0, 0.6, 90.0, &p.with_rate(0.0), Stopping::None, 1000, 7).unwrap();
    assert_eq!((zero.mean, zero.std_error), (0.0, 0.0));
    let now = forward_rate_mc(0.2, 0.2, 80.0, &p, Stopping::None, 1000, 7).unwrap();
    assert_eq!((now.mean, now.std_error), (-5.0, 0.0));
    // t* = T here, so censoring changes nothing
    let censored =
        forward_rate_mc(0.0, 1.0, 100.0, &p, Stopping::CriticalTime, 100_000, 7).unwrap();
    assert_eq!(censored.mean, est.mean);
    assert!(forward_rate_mc(0.0, 1.0, 100.0, &p, Stopping::None, 99, 7).is_err());
}

#[test]
fn european_put_reference() {
    let p = baseline();
    assert!((bs_european_put(&p, 0.0).unwrap() - 5.573_526_022_256_968).abs() < 1e-12);
}

#[test]
fn crr_high_step_reference() {
    let p = baseline();
    let fine = crr_american_put(&p, 10_000).unwrap().price;
    let coarse = crr_american_put(&p, 5_000).unwrap().price;
    assert!((fine - CRR_10000_GOLDEN).abs() < 1e-9, "{fine}");
    let extrapolated = 2.0 * fine - coarse;
    assert!((fine - extrapolated).abs() < 2e-3);
    assert!(fine > bs_european_put(&p, 0.0).unwrap());
}

#[test]
fn crr_zero_rate_is_european() {
    let p = baseline().with_rate(0.0);
    let crr = crr_american_put(&p, 10_000).unwrap().price;
    assert!((crr - bs_european_put(&p, 0.0).unwrap()).abs() < 1e-3);
}

#[test]
fn crr_dominates_european_on_standard_grid() {
    for s0 in [80.0, 90.0, 100.0, 110.0, 120.0] {
        for b in [0.1, 0.2, 0.4] {
            let p = MarketParams {
                s0,
                b,
                ..baseline()
            };
            let crr = crr_american_put(&p, 10_000).unwrap().price;
            assert!(crr >= bs_european_put(&p, 0.0).unwrap() - 2e-3);
            assert!(crr >= (p.k - s0).max(0.0));
        }
    }
}

#[test]
fn crr_boundary_rises_toward_strike() {
    // Adjacent steps sit on interleaved lattices, so the node boundary is
    // compared two steps apart.
    for steps in [1000, 2000] {
        let res = crr_american_put(&baseline(), steps).unwrap();
        let b = &res.boundary;
        assert_eq!(b.len(), steps + 1);
        for i in 2..b.len() {
            if let (Some(prev), Some(cur)) = (b[i - 2], b[i]) {
                assert!(cur >= prev, "step {i}: {cur} < {prev}");
                assert!(cur <= 100.0);
            }
        }
        assert!(b[steps].unwrap() > 98.0);
    }
}

#[test]
fn decomposition_reference_cases() {
    let rep = discrete_decomposition_check(&baseline(), 10).unwrap();
    assert!(rep.residual <= 1e-12);
    assert_eq!(rep.forward_terms.len(), 10);
    let one = discrete_decomposition_check(&baseline(), 1).unwrap();
    assert!(one.residual <= 1e-15);
    let zero = discrete_decomposition_check(&baseline().with_rate(0.0), 10).unwrap();
    assert!(zero.residual <= 1e-12);
    assert!(zero.compensator_residual <= 1e-12);
    assert!(discrete_decomposition_check(&baseline(), 13).is_err());
}

#[test]
fn gbm_deterministic_and_moments() {
    let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
    let flat = simulate_gbm(100.0, 0.05, 0.0, &grid, 4, 1).unwrap();
    for row in flat.paths() {
        for (i, v) in row.iter().enumerate() {
            let exact = 100.0 * (0.05 * grid.node(i)).exp();
            assert!((v / exact - 1.0).abs() < 1e-12);
        }
    }
    let ps = simulate_gbm(100.0, 0.05, 0.2, &grid, 100_000, 3).unwrap();
    let terminal = MeanEstimate::from_samples(&ps.terminals());
    assert!(terminal.z_score(100.0 * 0.05f64.exp()).abs() < 3.0);
    let logs: Vec<f64> = ps.terminals().iter().map(|s| s.ln()).collect();
    assert!(VarianceEstimate::from_samples(&logs).z_score(0.04).abs() < 3.0);
    let again = simulate_gbm(100.0, 0.05, 0.2, &grid, 100_000, 3).unwrap();
    assert_eq!(ps.values(), again.values());
    assert!(simulate_gbm(100.0, 0.05, 0.2, &grid, 0, 3).is_err());
}

#[test]
fn power_gain_mean_growth() {
    let p = baseline();
    let gain = power_gain(2.0, &p).unwrap();
    let (mu, sigma) = power_coefficients(2.0, &p);
    assert!((mu - 0.14).abs() < 1e-15 && (sigma - 0.4).abs() < 1e-15);
    let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
    let under = simulate_gbm(p.s0, p.r, p.b, &grid, 100_000, 21).unwrap();
    let g = gain_paths(&gain, &under);
    assert_eq!(g.seed, 21);
    let m = MeanEstimate::from_samples(&g.terminals());
    assert!(m.z_score(1e4 * mu.exp()).abs() < 3.0);
}

#[test]
fn multiplicative_reference_values() {
    let flat = |_: f64| 0.05;
    assert!(
        (value_multiplicative(9.0, &flat, 0.0, 1.0, 1e-12).unwrap() - 8.561_064_820_506_426).abs()
            < 1e-12
    );
    let zero = |_: f64| 0.0;
    assert_eq!(
        value_multiplicative(4.2, &zero, 0.0, 2.0, 1e-12).unwrap(),
        4.2
    );
    // constant β, σ: inner integral is β(T − t)
    let alpha = no_arb_drift_mult(&|_| 0.3, 0.5, 0.0, 2.0, 1e-13).unwrap();
    assert!((alpha - 0.3 * (0.3 * 2.0 - 0.5)).abs() < 1e-13);
    let cancel = no_arb_drift_mult(&|_| 0.3, 0.3 * 2.0, 0.0, 2.0, 1e-13).unwrap();
    assert!(cancel.abs() < 1e-13);
    let model = gaussian_power_dynamics(2.0, &baseline(), 0.1).unwrap();
    assert!((model.alpha(0.0, 0.5) + 0.035).abs() < 1e-15);
    assert!((model.gamma_theta.theta(1.0) - 0.4).abs() < 1e-15);
    assert_eq!(model.gamma_theta.gamma(0.3), 0.05);
}

#[test]
fn deterministic_value_evolution() {
    let gt = GammaTheta::new(|_| 0.05, |_| 0.0, 1.0);
    let grid = TimeGrid::new(0.0, 1.0, 8).unwrap();
    let ps = evolve_value_mult(3.0, &gt, &grid, 16, 4).unwrap();
    for row in ps.paths() {
        for (i, v) in row.iter().enumerate() {
            assert!((v - 3.0 * (0.05 * grid.node(i)).exp()).abs() < 1e-13);
        }
    }
}

#[test]
fn multiplicative_critical_time_cases() {
    let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
    let zero = ForwardCurve::constant(grid, 0.0).unwrap();
    assert_eq!(critical_time_mult(&zero, 0.0, 1.0).unwrap(), 0.0);
    let positive = ForwardCurve::constant(grid, 0.02).unwrap();
    assert_eq!(critical_time_mult(&positive, 0.0, 1.0).unwrap(), 1.0);

    let c = 0.6;
    let linear = ForwardCurve::from_fn(grid, |u| Ok(u - c)).unwrap();
    let n = 10_000;
    let phi = |s: f64| integrate(|u| u - c, s, 1.0, 1e-14).unwrap();
    let mut scan = 1.0;
    for i in 1..n {
        let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
        if phi(a) * phi(b) <= 0.0 {
            scan = find_root(phi, a, b, 1e-13).unwrap();
            break;
        }
    }
    let got = critical_time_mult(&linear, 0.0, 1.0).unwrap();
    assert!((got - scan).abs() < 1e-9, "{got} vs {scan}");
    assert!((got - 0.2).abs() < 1e-9);
}

#[test]
fn deterministic_additive_harness() {
    let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
    let curve = ForwardCurve::from_fn(grid, |u| Ok(-1.0 + 0.5 * u)).unwrap();
    let cfg = AdditiveMartingaleConfig {
        rate: 0.05,
        drift_scale: 1.0,
        gain0: 3.0,
        gain_vol: 0.0,
        n_paths: 8,
        seed: 1,
    };
    let stat = evolve_curve_additive(&curve, &ForwardVol::constant(0.0), &grid, &cfg).unwrap();
    assert!(stat.estimate.mean.abs() < 1e-12, "{}", stat.estimate.mean);
}
