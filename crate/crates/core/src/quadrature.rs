//! Numerical integration used for Levy-measure integrals.

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    sign * simpson_rec(f, lo, hi, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson over consecutive panels `[p0, p1], [p1, p2], ...`.
///
/// The tolerance is shared evenly between panels. Splitting at the right
/// breakpoints keeps the recursion from missing narrow features.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, breakpoints: &[f64], tol: f64) -> f64 {
    if breakpoints.len() < 2 {
        return 0.0;
    }
    let panel_tol = tol / (breakpoints.len() - 1) as f64;
    breakpoints
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], panel_tol))
        .sum()
}

/// Breakpoints growing geometrically from `start > 0` to `end`, used for
/// integrands with a `1/z` type singularity just below `start`.
pub fn geometric_breakpoints(start: f64, end: f64) -> Vec<f64> {
    let mut pts = vec![start];
    if end <= start {
        return pts;
    }
    let mut p = start;
    loop {
        p *= 2.0;
        if p >= end {
            pts.push(end);
            break;
        }
        pts.push(p);
    }
    pts
}

/// Composite Simpson rule with `points` samples (rounded up to odd, at least 3).
pub fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, points: usize) -> f64 {
    let n = if points < 3 {
        3
    } else if points.is_multiple_of(2) {
        points + 1
    } else {
        points
    };
    let intervals = n - 1;
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let f = |x: f64| 2.0 * x * x * x - x + 1.0;
        let exact = 0.5 * 16.0 - 2.0 + 2.0;
        assert!((composite_simpson(&f, 0.0, 2.0, 3) - exact).abs() < 1e-14);
        assert!((adaptive_simpson(&f, 0.0, 2.0, 1e-12) - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_reversed_limits_and_peaks() {
        let f = |x: f64| (-x * x / 2.0).exp();
        let v = adaptive_simpson(&f, 8.0, -8.0, 1e-12);
        assert!((v + (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn panels_integrate_log_singular_tail() {
        // int_{1e-4}^{1} dz / z = ln(1e4)
        let f = |z: f64| 1.0 / z;
        let pts = geometric_breakpoints(1e-4, 1.0);
        let v = integrate_panels(&f, &pts, 1e-10);
        assert!((v - 1e4f64.ln()).abs() < 1e-9);
    }
}
