//! Radial ODE oracle: `u″ + 2u′/r = w`, `w″ + 2w′/r = −u^-q + s`, with an
//! embedded Dormand–Prince 5(4) integrator and bisection on `w(0)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{fit_growth_samples, GrowthFit, GrowthModel};
use crate::error::{Error, Result};

/// Radial state `(r, u, u′, w = Δu, w′)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootState {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub w: f64,
    pub dw: f64,
}

impl ShootState {
    fn from_vec(r: f64, y: &[f64; 4]) -> Self {
        Self {
            r,
            u: y[0],
            du: y[1],
            w: y[2],
            dw: y[3],
        }
    }

    fn to_vec(self) -> [f64; 4] {
        [self.u, self.du, self.w, self.dw]
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Reached the requested radius with `u > 0`.
    Reached,
    /// `u` reached zero at `r_cross`.
    TouchedZero { r_cross: f64 },
    /// Stopped early by a caller-supplied condition.
    Stopped { r: f64 },
}

/// Settings for [`integrate_radial_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Radius where the series start hands over to the integrator.
    pub r0: f64,
    /// Constant `Δ²P` for profiles whose polynomial part is not biharmonic.
    pub source: f64,
    pub max_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            r0: 1e-4,
            source: 0.0,
            max_steps: 5_000_000,
        }
    }
}

/// Accepted steps of one integration, with dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub q: f64,
    pub u0: f64,
    pub w0: f64,
    pub source: f64,
    pub states: Vec<ShootState>,
    derivs: Vec<[f64; 4]>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn r_end(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.r)
    }

    /// State at radius `r` by the series below `r0` and cubic Hermite
    /// interpolation between accepted steps.
    pub fn sample(&self, r: f64) -> Option<ShootState> {
        let first = self.states.first()?;
        if r < first.r {
            return Some(series_state(self.q, self.u0, self.w0, self.source, r));
        }
        if r > self.r_end() {
            return None;
        }
        let k = self
            .states
            .partition_point(|s| s.r <= r)
            .clamp(1, self.states.len() - 1);
        let (a, b) = (&self.states[k - 1], &self.states[k]);
        let h = b.r - a.r;
        if h == 0.0 {
            return Some(*b);
        }
        let t = (r - a.r) / h;
        let (ya, yb) = (a.to_vec(), b.to_vec());
        let (fa, fb) = (&self.derivs[k - 1], &self.derivs[k]);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let mut y = [0.0; 4];
        for i in 0..4 {
            y[i] = h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i];
        }
        Some(ShootState::from_vec(r, &y))
    }

    /// Writes `r,u,du,w,dw` rows for every accepted step.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "u", "du", "w", "dw"])?;
        for s in &self.states {
            wr.write_record([s.r, s.u, s.du, s.w, s.dw].map(|v| v.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Fit of `u` over `[r_end/10, r_end]` at log-spaced radii.
    pub fn tail_fit(&self, model: GrowthModel) -> Result<GrowthFit> {
        let (r, u) = self.tail_samples(200);
        fit_growth_samples(&r, &u, model)
    }

    /// Least-squares `C` in `u ≈ C·r^s` over the last decade.
    pub fn tail_coefficient(&self, s: f64) -> f64 {
        let (r, u) = self.tail_samples(200);
        let (num, den) = r
            .iter()
            .zip(&u)
            .fold((0.0, 0.0), |(n, d), (r, u)| (n + u * r.powf(s), d + r.powf(2.0 * s)));
        num / den
    }

    fn tail_samples(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let end = self.r_end();
        (0..n)
            .filter_map(|k| {
                let r = end / 10.0 * 10f64.powf(k as f64 / (n - 1) as f64);
                self.sample(r.min(end)).map(|s| (s.r, s.u))
            })
            .unzip()
    }
}

fn series_state(q: f64, u0: f64, w0: f64, s: f64, r: f64) -> ShootState {
    let c = s - u0.powf(-q);
    ShootState {
        r,
        u: u0 + w0 * r * r / 6.0 + c * r.powi(4) / 120.0,
        du: w0 * r / 3.0 + c * r.powi(3) / 30.0,
        w: w0 + c * r * r / 6.0,
        dw: c * r / 3.0,
    }
}

fn rhs(q: f64, s: f64, r: f64, y: &[f64; 4]) -> [f64; 4] {
    [y[1], y[2] - 2.0 * y[1] / r, y[3], -y[0].powf(-q) + s - 2.0 * y[3] / r]
}

/// Integrates from the origin to `r_max` with default options.
pub fn integrate_radial(q: f64, u0: f64, w0: f64, r_max: f64) -> Trajectory {
    integrate_radial_with(q, u0, w0, r_max, &ShootOptions::default(), |_| false)
}

/// Integrates from the origin to `r_max`, stopping early when `stop` returns
/// true for an accepted state.
pub fn integrate_radial_with(
    q: f64,
    u0: f64,
    w0: f64,
    r_max: f64,
    opts: &ShootOptions,
    stop: impl Fn(&ShootState) -> bool,
) -> Trajectory {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];

    let s = opts.source;
    let r0 = opts.r0.min(r_max);
    let start = series_state(q, u0, w0, s, r0);
    let mut r = r0;
    let mut y = start.to_vec();
    let mut f = rhs(q, s, r, &y);
    let mut states = vec![start];
    let mut derivs = vec![f];
    let mut h = (r0 * 0.1).max(1e-6);
    let mut outcome = Outcome::Reached;
    let mut steps = 0;
    while r < r_max {
        if steps >= opts.max_steps {
            outcome = Outcome::Stopped { r };
            break;
        }
        steps += 1;
        h = h.min(r_max - r);
        let mut k = [[0.0; 4]; 7];
        k[0] = f;
        let mut ok = true;
        for st in 1..7 {
            let mut yi = y;
            for j in 0..st {
                for c in 0..4 {
                    yi[c] += h * A[st][j] * k[j][c];
                }
            }
            if !(yi[0] > 0.0) {
                ok = false;
                break;
            }
            k[st] = rhs(q, s, r + C[st] * h, &yi);
        }
        let mut y_new = y;
        let mut err: f64 = 0.0;
        if ok {
            for c in 0..4 {
                let mut inc = 0.0;
                let mut e = 0.0;
                for st in 0..7 {
                    inc += B[st] * k[st][c];
                    e += E[st] * k[st][c];
                }
                y_new[c] = y[c] + h * inc;
                let sc = opts.atol + opts.rtol * y[c].abs().max(y_new[c].abs());
                err = err.max((h * e).abs() / sc);
            }
            ok = err.is_finite() && y_new.iter().all(|v| v.is_finite()) && y_new[0] > 0.0;
        }
        if !ok {
            h *= 0.25;
            if h < 1e-14 * r.max(1.0) {
                outcome = Outcome::TouchedZero {
                    r_cross: r + (y[0] / -y[1]).clamp(0.0, 4.0 * h),
                };
                break;
            }
            continue;
        }
        if err <= 1.0 {
            r += h;
            y = y_new;
            f = k[6];
            let state = ShootState::from_vec(r, &y);
            states.push(state);
            derivs.push(f);
            if stop(&state) {
                outcome = Outcome::Stopped { r };
                break;
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Trajectory {
        q,
        u0,
        w0,
        source: s,
        states,
        derivs,
        outcome,
    }
}

/// Position of a trial `w0` relative to the growth threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `Δu` turns negative, so `u` eventually reaches zero.
    Below,
    /// `Δu` stays positive: quadratic growth.
    Above,
}

/// Classifies `w0` by integrating to `horizon`. Since `(r²w′)′ = −r²u^-q`,
/// `w` decreases, so `w < 0` anywhere already decides `Below`.
pub fn classify(q: f64, u0: f64, w0: f64, horizon: f64) -> Side {
    let opts = ShootOptions::default();
    let t = integrate_radial_with(q, u0, w0, horizon, &opts, |s| s.w < 0.0);
    match t.outcome {
        Outcome::Reached => Side::Above,
        _ => Side::Below,
    }
}

/// Result of [`bisect_growth_threshold`].
#[derive(Debug, Clone)]
pub struct Threshold {
    pub w0_critical: f64,
    /// Trajectory from the upper end of the final bracket, integrated to `r_max`.
    pub trajectory: Trajectory,
    /// Power-law fit of `u` over the last decade.
    pub fit: GrowthFit,
    /// Predicted tail exponent: `4/(q+1)` for `q < 3`, 1 otherwise.
    pub predicted_exponent: f64,
    /// `C` in `u ≈ C·r^{predicted}` for `q ≠ 3`, or in `u ≈ C·r(ln r)^{1/4}` for `q = 3`.
    pub coefficient: f64,
}

/// Bisects on `w0` between a trajectory whose Laplacian turns negative and one
/// with quadratic growth, then fits the tail of the borderline trajectory.
pub fn bisect_growth_threshold(q: f64, u0: f64, r_max: f64) -> Result<Threshold> {
    if !(q > 1.0) {
        return Err(Error::NotApplicable(format!("bisection needs q > 1, got {q}")));
    }
    let horizon = 100.0 * r_max;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while classify(q, u0, hi, horizon) == Side::Below {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::BracketNotFound {
                w0_max: hi,
                outcome: "a negative Laplacian".into(),
            });
        }
    }
    // Outcomes must be ordered Below..Above across the bracket.
    let scan: Vec<Side> = (0..=8).map(|k| classify(q, u0, hi * k as f64 / 8.0, horizon)).collect();
    if let Some(k) = scan.windows(2).position(|p| p[0] == Side::Above && p[1] == Side::Below) {
        return Err(Error::NonMonotoneOutcome {
            w0: hi * (k + 1) as f64 / 8.0,
        });
    }
    if let Some(k) = scan.iter().position(|&s| s == Side::Above) {
        hi = hi * k as f64 / 8.0;
        lo = hi - hi / k as f64;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(q, u0, mid, horizon) {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
        }
    }
    let trajectory = integrate_radial(q, u0, hi, r_max);
    let fit = trajectory.tail_fit(GrowthModel::Power)?;
    let predicted_exponent = if q < 3.0 { 4.0 / (q + 1.0) } else { 1.0 };
    let coefficient = if (q - 3.0).abs() < 1e-12 {
        trajectory.tail_fit(GrowthModel::PowerLogQuarter)?.coefficient
    } else {
        trajectory.tail_coefficient(predicted_exponent)
    };
    Ok(Threshold {
        w0_critical: 0.5 * (lo + hi),
        trajectory,
        fit,
        predicted_exponent,
        coefficient,
    })
}

/// `C(q)` with `C^{q+1} = 1/(s(s+1)(s−1)(2−s))`, `s = 4/(q+1)`, for `1 < q < 3`.
pub fn power_law_constant(q: f64) -> f64 {
    let s = 4.0 / (q + 1.0);
    (1.0 / (s * (s + 1.0) * (s - 1.0) * (2.0 - s))).powf(1.0 / (q + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{exact_q7_a, exact_q7_laplacian, exact_q7_radial};

    #[test]
    fn exact_q7_trajectory() {
        let u0 = exact_q7_a().sqrt();
        let t = integrate_radial(7.0, u0, exact_q7_laplacian(0.0), 10.0);
        assert_eq!(t.outcome, Outcome::Reached);
        let worst = (0..=1000)
            .map(|k| {
                let r = k as f64 / 100.0;
                (t.sample(r).unwrap().u / exact_q7_radial(r) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn zero_laplacian_touches_zero() {
        let t = integrate_radial(2.0, 1.0, 0.0, 100.0);
        match t.outcome {
            Outcome::TouchedZero { r_cross } => assert!(r_cross > 1.0 && r_cross < 10.0, "{r_cross}"),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn large_laplacian_grows_quadratically() {
        for q in [2.0, 5.0] {
            let t = integrate_radial(q, 1.0, 50.0, 1e4);
            let f = t.tail_fit(GrowthModel::Power).unwrap();
            assert!((f.exponent - 2.0).abs() < 0.04, "q={q}: {}", f.exponent);
        }
    }

    #[test]
    fn power_law_constant_formula() {
        // C(2) = (81/56)^{1/3}.
        assert!((power_law_constant(2.0) - (81.0f64 / 56.0).cbrt()).abs() < 1e-14);
        // The power law solves the ODE exactly away from the origin.
        let (q, s) = (2.0, 4.0 / 3.0);
        let c = power_law_constant(q);
        let bilap = c * s * (s + 1.0) * (s - 1.0) * (s - 2.0);
        assert!((bilap + c.powf(-q)).abs() < 1e-12);
    }

    #[test]
    fn q2_threshold() {
        let th = bisect_growth_threshold(2.0, 1.0, 1e4).unwrap();
        assert!(
            (th.fit.exponent / (4.0 / 3.0) - 1.0).abs() < 0.03,
            "{}",
            th.fit.exponent
        );
        assert!((th.coefficient / power_law_constant(2.0) - 1.0).abs() < 0.1);
    }

    #[test]
    fn dense_output_matches_steps() {
        let t = integrate_radial(3.0, 1.0, 2.0, 50.0);
        for s in t.states.iter().step_by(7) {
            let i = t.sample(s.r).unwrap();
            assert!((i.u - s.u).abs() <= 1e-12 * s.u.abs().max(1.0));
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("r,u,du,w,dw\n"));
    }

    #[test]
    fn bisection_needs_q_above_one() {
        assert!(bisect_growth_threshold(1.0, 1.0, 100.0).is_err());
    }
}
