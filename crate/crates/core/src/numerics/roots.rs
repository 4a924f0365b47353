use crate::error::Result;

const MAX_BISECTIONS: usize = 400;

/// Root of `g` in `[lo, hi]` by bisection, or `None` when the endpoints
/// do not bracket a sign change. The returned point is the midpoint of a
/// final bracket no wider than `tol` (or an exact zero hit on the way).
pub fn find_root<G: FnMut(f64) -> f64>(mut g: G, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    if !(lo < hi) || !(tol > 0.0) {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    let ga = g(a);
    let gb = g(b);
    if !(ga.is_finite() && gb.is_finite()) {
        return None;
    }
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    let neg_at_a = ga < 0.0;
    for _ in 0..MAX_BISECTIONS {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return Some(m);
        }
        if (gm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Boundary of a predicate that is false at `lo` and true at `hi`:
/// shrinks the bracket to width `tol` and returns its right end.
pub fn bisect_boundary<P: FnMut(f64) -> Result<bool>>(
    mut pred: P,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..MAX_BISECTIONS {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}

/// Smallest point of `[lo, hi)` where `phi` vanishes or changes sign.
///
/// `phi` is scanned on `scan_nodes` equally spaced nodes starting at `lo`
/// (the right end `hi` is not sampled). A value with `|phi| <= zero_tol`
/// counts as zero. A zero at `lo` is returned as `lo`. Elsewhere a zero
/// only counts when a later non-zero sample has the opposite sign, so a
/// function that touches zero without crossing, or decays to zero on the
/// tail of the scan, yields `None`. The located bracket is refined by
/// bisection to width `tol`.
pub fn first_crossing<F: FnMut(f64) -> Result<f64>>(
    mut phi: F,
    lo: f64,
    hi: f64,
    scan_nodes: usize,
    zero_tol: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let n = scan_nodes.max(2);
    let h = (hi - lo) / n as f64;
    let is_zero = |v: f64| v.abs() <= zero_tol;

    let mut prev_s = lo;
    let mut prev_v = phi(lo)?;
    if is_zero(prev_v) {
        return Ok(Some(lo));
    }
    let mut i = 1;
    while i < n {
        let s = lo + i as f64 * h;
        let v = phi(s)?;
        if is_zero(v) {
            // look past the zero run for the next signed sample
            let mut j = i + 1;
            let mut next = None;
            while j < n {
                let w = phi(lo + j as f64 * h)?;
                if !is_zero(w) {
                    next = Some((j, w));
                    break;
                }
                j += 1;
            }
            match next {
                Some((_, w)) if w.signum() != prev_v.signum() => {
                    let sign = prev_v.signum();
                    let root = bisect_boundary(
                        |x| phi(x).map(|y| is_zero(y) || y.signum() != sign),
                        prev_s,
                        s,
                        tol,
                    )?;
                    return Ok(Some(root));
                }
                Some((j, w)) => {
                    prev_s = lo + j as f64 * h;
                    prev_v = w;
                    i = j + 1;
                    continue;
                }
                None => return Ok(None),
            }
        }
        if v.signum() != prev_v.signum() {
            let sign = prev_v.signum();
            let root = bisect_boundary(
                |x| phi(x).map(|y| is_zero(y) || y.signum() != sign),
                prev_s,
                s,
                tol,
            )?;
            return Ok(Some(root));
        }
        prev_s = s;
        prev_v = v;
        i += 1;
    }
    Ok(None)
}
