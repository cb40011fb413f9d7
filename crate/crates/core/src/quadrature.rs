//! Quadrature rules shared by grids and kernel tables.

use std::f64::consts::PI;

/// Gauss–Legendre rule of `n` points on `[-1, 1]`, returned as `(nodes, weights)`
/// with nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Simpson weights for `n` (even) uniform intervals of unit width.
pub fn simpson_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "Simpson rule needs an even number of intervals");
    let mut w = vec![0.0; n + 1];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        } / 3.0;
    }
    w
}

/// Composite rule on `n` (even, at least 6) unit intervals whose panel
/// boundaries fall on odd nodes: Simpson's 3/8 rule on the first and last three
/// intervals, Simpson in between. Exact for cubics.
pub(crate) fn simpson_weights_odd(n: usize) -> Vec<f64> {
    assert!(n >= 6 && n % 2 == 0);
    let mut w = vec![0.0; n + 1];
    for start in [0, n - 3] {
        for (k, c) in [3.0, 9.0, 9.0, 3.0].iter().enumerate() {
            w[start + k] += c / 8.0;
        }
    }
    for p in (3..n - 3).step_by(2) {
        w[p] += 1.0 / 3.0;
        w[p + 1] += 4.0 / 3.0;
        w[p + 2] += 1.0 / 3.0;
    }
    w
}

/// Gauss–Legendre rule mapped to `[0, 1]`, used for panel product integration.
pub(crate) struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self {
            nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
        }
    }
}

/// Product-integration weights for `∫₀^{nodes[N]} g(s) f(s) ds` where `f` is the
/// piecewise-quadratic interpolant of its nodal values over panels of two
/// consecutive intervals. `N` must be even.
///
/// `g` may have a derivative discontinuity at `breakpoint`; the interval
/// containing it is split so that each sub-interval sees a smooth integrand.
/// Weights are accumulated into `out` (length `N + 1`).
pub(crate) fn panel_product_weights(
    nodes: &[f64],
    breakpoint: Option<f64>,
    rule: &UnitRule,
    g: impl Fn(f64) -> f64,
    out: &mut [f64],
) {
    let n = nodes.len() - 1;
    debug_assert!(n % 2 == 0);
    debug_assert_eq!(out.len(), n + 1);
    for p in (0..n).step_by(2) {
        for (lo, hi) in [(nodes[p], nodes[p + 1]), (nodes[p + 1], nodes[p + 2])] {
            quadratic_piece(nodes, p, lo, hi, breakpoint, rule, &g, out);
        }
    }
}

/// Like [`panel_product_weights`] without a breakpoint, but with panel
/// boundaries on the odd nodes. The first and last intervals use the quadratic
/// through their nearest three nodes. Needs at least four intervals.
pub(crate) fn panel_product_weights_odd(nodes: &[f64], rule: &UnitRule, g: impl Fn(f64) -> f64, out: &mut [f64]) {
    let n = nodes.len() - 1;
    debug_assert!(n % 2 == 0 && n >= 4);
    quadratic_piece(nodes, 0, nodes[0], nodes[1], None, rule, &g, out);
    for p in (1..n - 1).step_by(2) {
        for (lo, hi) in [(nodes[p], nodes[p + 1]), (nodes[p + 1], nodes[p + 2])] {
            quadratic_piece(nodes, p, lo, hi, None, rule, &g, out);
        }
    }
    quadratic_piece(nodes, n - 2, nodes[n - 1], nodes[n], None, rule, &g, out);
}

/// Adds `∫_lo^hi g·L_k` to `out[p + k]`, where `L_k` are the Lagrange basis
/// quadratics on `nodes[p..p + 3]`.
#[allow(clippy::too_many_arguments)]
fn quadratic_piece(
    nodes: &[f64],
    p: usize,
    lo: f64,
    hi: f64,
    breakpoint: Option<f64>,
    rule: &UnitRule,
    g: &impl Fn(f64) -> f64,
    out: &mut [f64],
) {
    let (a, b, c) = (nodes[p], nodes[p + 1], nodes[p + 2]);
    let dab = a - b;
    let dac = a - c;
    let dbc = b - c;
    let mut pieces = [(lo, hi), (0.0, 0.0)];
    let mut count = 1;
    if let Some(bp) = breakpoint {
        if bp > lo && bp < hi {
            pieces = [(lo, bp), (bp, hi)];
            count = 2;
        }
    }
    for &(l, h) in &pieces[..count] {
        let len = h - l;
        for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
            let s = l + len * t;
            let gw = g(s) * wt * len;
            out[p] += gw * (s - b) * (s - c) / (dab * dac);
            out[p + 1] += gw * (s - a) * (s - c) / (-dab * dbc);
            out[p + 2] += gw * (s - a) * (s - b) / (dac * dbc);
        }
    }
}

/// Four-point Lagrange interpolation on sorted `nodes` that start at zero, using
/// the even extension `f(-s) = f(s)` near the origin. Returns `None` outside
/// `[0, nodes.last()]`.
pub(crate) fn interp_even(nodes: &[f64], value: impl Fn(usize) -> f64, x: f64) -> Option<f64> {
    let n = nodes.len();
    let last = *nodes.last()?;
    if !(0.0..=last * (1.0 + 1e-12)).contains(&x) || n < 2 {
        return None;
    }
    let x = x.min(last);
    let i = match nodes.partition_point(|&s| s <= x) {
        0 => 0,
        k => (k - 1).min(n - 2),
    };
    if n < 4 {
        let t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
        return Some(value(i) * (1.0 - t) + value(i + 1) * t);
    }
    // Stencil i-1..=i+2, reflected through the origin and shifted back from the far end.
    let start = (i as isize - 1).min(n as isize - 4);
    let mut xs = [0.0; 4];
    let mut ys = [0.0; 4];
    for k in 0..4 {
        let idx = start + k as isize;
        if idx < 0 {
            let m = (-idx) as usize;
            xs[k] = -nodes[m];
            ys[k] = value(m);
        } else {
            xs[k] = nodes[idx as usize];
            ys[k] = value(idx as usize);
        }
    }
    Some(lagrange4(&xs, &ys, x))
}

/// Four-point Lagrange interpolation on an arbitrary sorted stencil.
pub(crate) fn lagrange4(xs: &[f64; 4], ys: &[f64; 4], x: f64) -> f64 {
    let mut sum = 0.0;
    for j in 0..4 {
        let mut l = 1.0;
        for m in 0..4 {
            if m != j {
                l *= (x - xs[m]) / (xs[j] - xs[m]);
            }
        }
        sum += l * ys[j];
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 32, 64] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            for deg in 0..(2 * n) {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-12, "n={n} deg={deg}: {num} vs {exact}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let n = 8;
        let w = simpson_weights(n);
        let h = 1.0 / n as f64;
        let num: f64 = w
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * h * (k as f64 * h).powi(3))
            .sum();
        assert_relative_eq!(num, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn odd_rule_is_exact_for_cubics() {
        for n in [6, 8, 20] {
            let w = simpson_weights_odd(n);
            for deg in 0..4 {
                let num: f64 = w.iter().enumerate().map(|(k, wk)| wk * (k as f64).powi(deg)).sum();
                let exact = (n as f64).powi(deg + 1) / (deg as f64 + 1.0);
                assert_relative_eq!(num, exact, max_relative = 1e-13);
            }
            assert!((0..=n).all(|k| (w[k] - w[n - k]).abs() < 1e-15));
        }
    }

    #[test]
    fn panel_weights_reproduce_moments() {
        let nodes: Vec<f64> = (0..=40).map(|k| 3.0 * (k as f64 / 40.0).powi(2)).collect();
        let rule = UnitRule::new(5);
        let mut w = vec![0.0; nodes.len()];
        panel_product_weights(&nodes, Some(1.234), &rule, |s| s * s, &mut w);
        // f = 1 and f = s^2 are reproduced exactly by quadratic interpolation.
        let m0: f64 = w.iter().sum();
        let m2: f64 = w.iter().zip(&nodes).map(|(w, s)| w * s * s).sum();
        assert_relative_eq!(m0, 9.0, max_relative = 1e-13);
        assert_relative_eq!(m2, 243.0 / 5.0, max_relative = 1e-13);
    }

    #[test]
    fn odd_panel_weights_reproduce_moments() {
        let nodes: Vec<f64> = (0..=40).map(|k| 3.0 * (k as f64 / 40.0).powi(2)).collect();
        let rule = UnitRule::new(5);
        let mut w = vec![0.0; nodes.len()];
        panel_product_weights_odd(&nodes, &rule, |s| s, &mut w);
        let m1: f64 = w.iter().sum();
        let m3: f64 = w.iter().zip(&nodes).map(|(w, s)| w * s * s).sum();
        assert_relative_eq!(m1, 4.5, max_relative = 1e-13);
        assert_relative_eq!(m3, 81.0 / 4.0, max_relative = 1e-13);
    }

    #[test]
    fn even_interpolation_is_exact_for_even_cubics() {
        let nodes: Vec<f64> = (0..=20).map(|k| (k as f64 / 20.0).powi(2) * 4.0).collect();
        let f = |s: f64| 1.0 + 2.0 * s * s;
        for x in [0.0, 1e-3, 0.05, 0.7, 2.2, 4.0] {
            let v = interp_even(&nodes, |i| f(nodes[i]), x).unwrap();
            assert_relative_eq!(v, f(x), max_relative = 1e-12);
        }
        assert!(interp_even(&nodes, |i| f(nodes[i]), 4.1).is_none());
    }
}
