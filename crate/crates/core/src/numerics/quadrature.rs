use crate::error::{domain, Error, Result};

pub const DEFAULT_MAX_DEPTH: u32 = 40;

/// Adaptive Simpson configuration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    /// Absolute tolerance on the whole interval.
    pub tol: f64,
    /// Maximum bisection depth of any panel.
    pub max_depth: u32,
    /// Panels are always split at least this many times.
    pub min_depth: u32,
    /// Hard cap on integrand evaluations.
    pub max_evals: usize,
}

impl Quadrature {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_depth: DEFAULT_MAX_DEPTH,
            min_depth: 2,
            max_evals: 5_000_000,
        }
    }
}

/// `∫_a^b f(x) dx` to absolute tolerance `tol` by adaptive Simpson.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with(f, a, b, Quadrature::new(tol))
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

pub fn integrate_with<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: Quadrature) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return domain(format!("integration bounds must be finite, got [{a}, {b}]"));
    }
    if a > b {
        return domain(format!("integration requires a <= b, got [{a}, {b}]"));
    }
    if !(cfg.tol > 0.0) {
        return domain(format!(
            "quadrature tolerance must be positive, got {}",
            cfg.tol
        ));
    }
    if a == b {
        return Ok(0.0);
    }

    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            domain(format!("integrand is not finite at x = {x}: {y}"))
        }
    };

    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let mut evals = 3usize;
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
        tol: cfg.tol,
        depth: 0,
    }];

    // Kahan-compensated accumulation; thousands of tiny panels are common near the left endpoint.
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut add = |x: f64| {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    let mut unresolved = 0.0;

    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = eval(lm)?;
        let frm = eval(rm)?;
        evals += 2;
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;

        let converged = p.depth >= cfg.min_depth && delta.abs() <= 15.0 * p.tol;
        // Panels too narrow to split further in floating point are accepted as-is.
        let degenerate = m <= p.a || m >= p.b || lm <= p.a || rm >= p.b;
        if converged || degenerate {
            add(left + right + delta / 15.0);
            continue;
        }
        if p.depth >= cfg.max_depth || evals >= cfg.max_evals {
            add(left + right + delta / 15.0);
            unresolved += delta.abs() / 15.0;
            continue;
        }
        let tol = 0.5 * p.tol;
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol,
            depth: p.depth + 1,
        });
    }

    if unresolved > cfg.tol {
        return Err(Error::Accuracy {
            estimate: sum,
            error_estimate: unresolved,
        });
    }
    Ok(sum)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear() {
        assert!((integrate(|x| x, 0.0, 1.0, 1e-12).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exponential() {
        let exact = 1.0 - (-1.0f64).exp();
        let got = integrate(|x| (-x).exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((got - exact).abs() < 1e-12);
        assert!((got - 0.632_120_558_828_557_7).abs() < 1e-12);
    }

    #[test]
    fn degenerate_interval() {
        assert_eq!(integrate(|x| x.sin() + 3.0, 0.3, 0.3, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn reversed_bounds_rejected() {
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, 1e-9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn kink_is_resolved() {
        // |x - 1/3| on [0,1] = (1/9 + 4/9) / 2
        let got = integrate(|x| (x - 1.0 / 3.0).abs(), 0.0, 1.0, 1e-10).unwrap();
        assert!((got - 5.0 / 18.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn subdivision_cap_reports_best_estimate() {
        let cfg = Quadrature {
            tol: 1e-14,
            max_depth: 3,
            min_depth: 0,
            max_evals: 1000,
        };
        match integrate_with(|x: f64| (50.0 * x).sin().abs(), 0.0, 3.0, cfg) {
            Err(Error::Accuracy { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }
}
