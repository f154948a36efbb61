//! Gauss–Legendre rules and adaptive composite integration on intervals.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (t * p1 - p0) / (t * t - 1.0))
}

/// Fixed composite rule: `panels` equal panels of a 16-point rule.
pub fn composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    thread_local! {
        static RULE: (Vec<f64>, Vec<f64>) = gauss_legendre(16);
    }
    RULE.with(|(x, w)| {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(w) {
                s += wi * f(mid + 0.5 * h * xi);
            }
            total += 0.5 * h * s;
        }
        total
    })
}

/// Integral over `[a, b]` with panel doubling until the relative change is below `tol`.
///
/// `breaks` are interior points where the integrand may be non-smooth; each
/// sub-interval is integrated separately. Returns the value and whether the
/// doubling converged.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> (f64, bool) {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    let mut ok = true;
    for seg in pts.windows(2) {
        let (v, c) = integrate_segment(f, seg[0], seg[1], tol);
        total += v;
        ok &= c;
    }
    (total, ok)
}

fn integrate_segment(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, bool) {
    if a == b {
        return (0.0, true);
    }
    let mut panels = 1;
    let mut prev = composite(f, a, b, panels);
    while panels < 1 << 14 {
        panels *= 2;
        let next = composite(f, a, b, panels);
        if (next - prev).abs() <= tol * next.abs().max(1e-300) || (next - prev).abs() < 1e-300 {
            return (next, true);
        }
        prev = next;
    }
    (prev, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_moment() {
        let (v, ok) = integrate(&|r: f64| r * r * (-r * r).exp(), 0.0, 40.0, &[], 1e-13);
        assert!(ok);
        assert!((v - PI.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn kink_handled_by_breakpoint() {
        let (v, ok) = integrate(&|r: f64| (r - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-14);
        assert!(ok);
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
    }
}
