//! Far-field fits, β, the polynomial decomposition `u = v + w` and Hessian decay.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize, Grid, KernelVariant, Profile, QuadraticPolynomial};
use crate::operator::IntegralOperator;

/// Tail models for [`fit_growth`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// `u ≈ s·r + c`; `coefficient` is the slope `s`.
    Linear,
    /// `u ≈ A·r² + B·r + C`; `coefficient` is `A`.
    Quadratic,
    /// `u ≈ C·r^p`, fitted in log–log.
    Power,
    /// `u ≈ C·r·(ln r)^{1/4}`.
    PowerLogQuarter,
}

/// Result of a tail fit along a ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub direction: [f64; 3],
    pub model: GrowthModel,
    /// Fitted power for [`GrowthModel::Power`]; the model's fixed power otherwise.
    pub exponent: f64,
    pub coefficient: f64,
    /// RMS of the fit error relative to the RMS of the data.
    pub residual: f64,
    /// Radii `[r_min, r_max]` of the fit window.
    pub window: [f64; 2],
}

/// Minimum number of nodes on a ray before the fit falls back to interpolation.
const MIN_TAIL_NODES: usize = 30;
const INTERPOLATED_SAMPLES: usize = 64;

/// Least-squares fit of `model` to `u` over the last decade of the ray in
/// `direction`.
pub fn fit_growth(profile: &Profile, direction: [f64; 3], model: GrowthModel) -> Result<GrowthFit> {
    let d = normalize(direction);
    let (r, u) = tail_samples(profile, d)?;
    let mut fit = fit_growth_samples(&r, &u, model)?;
    fit.direction = d;
    Ok(fit)
}

/// Samples of `profile` along the ray `t·d` for `t` in the last decade.
pub fn tail_samples(profile: &Profile, d: [f64; 3]) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = profile.grid();
    let r_max = grid.extent(d);
    let r_min = r_max / 10.0;
    let insufficient = |detail: String| Error::InsufficientTail { direction: d, detail };
    let axis_nodes: Option<Vec<(f64, f64)>> = match &**grid {
        Grid::Radial(g) => Some(
            g.nodes()
                .iter()
                .cloned()
                .zip(profile.values().iter().cloned())
                .collect(),
        ),
        Grid::Axisymmetric(g) => {
            if d[1] == 0.0 && d[2] == 0.0 && d[0] > 0.0 {
                Some(
                    (g.half()..g.x1().len())
                        .map(|k| (g.x1()[k], profile.values()[g.index(k, 0)]))
                        .collect(),
                )
            } else if d[0] == 0.0 {
                Some(
                    (0..g.n_rho())
                        .map(|b| (g.rho()[b], profile.values()[g.index(g.half(), b)]))
                        .collect(),
                )
            } else {
                None
            }
        }
    };
    if let Some(nodes) = &axis_nodes {
        let window: Vec<(f64, f64)> = nodes
            .iter()
            .cloned()
            .filter(|(t, _)| *t >= r_min * (1.0 - 1e-12))
            .collect();
        if window.len() >= MIN_TAIL_NODES {
            return Ok(window.into_iter().unzip());
        }
        if window.len() < 4 {
            return Err(insufficient(format!(
                "only {} nodes in [{r_min}, {r_max}]",
                window.len()
            )));
        }
    }
    let mut r = Vec::with_capacity(INTERPOLATED_SAMPLES);
    let mut u = Vec::with_capacity(INTERPOLATED_SAMPLES);
    for k in 0..INTERPOLATED_SAMPLES {
        let t = r_min * 10f64.powf(k as f64 / (INTERPOLATED_SAMPLES - 1) as f64);
        let t = t.min(r_max);
        let val = profile
            .sample([d[0] * t, d[1] * t, d[2] * t])
            .ok_or_else(|| insufficient(format!("ray leaves the grid at r = {t}")))?;
        r.push(t);
        u.push(val);
    }
    Ok((r, u))
}

/// [`fit_growth`] on explicit samples; `direction` is left as `e₁`.
pub fn fit_growth_samples(r: &[f64], u: &[f64], model: GrowthModel) -> Result<GrowthFit> {
    let window = [r.first().copied().unwrap_or(0.0), r.last().copied().unwrap_or(0.0)];
    if r.len() < 4 || window[0] <= 0.0 {
        return Err(Error::InsufficientTail {
            direction: [1.0, 0.0, 0.0],
            detail: format!("{} samples starting at r = {}", r.len(), window[0]),
        });
    }
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let (exponent, coefficient, resid) = match model {
        GrowthModel::Linear => {
            let c = lstsq(r.iter().map(|&t| vec![t, 1.0]), u)?;
            let e: Vec<f64> = r.iter().zip(u).map(|(t, y)| c[0] * t + c[1] - y).collect();
            (1.0, c[0], rms(&e) / rms(u))
        }
        GrowthModel::Quadratic => {
            let c = lstsq(r.iter().map(|&t| vec![t * t, t, 1.0]), u)?;
            let e: Vec<f64> = r.iter().zip(u).map(|(t, y)| (c[0] * t + c[1]) * t + c[2] - y).collect();
            (2.0, c[0], rms(&e) / rms(u))
        }
        GrowthModel::Power => {
            if u.iter().any(|&y| y <= 0.0) {
                return Err(Error::NotApplicable("power fit needs positive values".into()));
            }
            let ly: Vec<f64> = u.iter().map(|y| y.ln()).collect();
            let c = lstsq(r.iter().map(|&t| vec![t.ln(), 1.0]), &ly)?;
            let e: Vec<f64> = r.iter().zip(u).map(|(t, y)| c[1].exp() * t.powf(c[0]) - y).collect();
            (c[0], c[1].exp(), rms(&e) / rms(u))
        }
        GrowthModel::PowerLogQuarter => {
            if window[0] <= 1.0 {
                return Err(Error::NotApplicable("log-corrected fit needs r > 1".into()));
            }
            let basis: Vec<f64> = r.iter().map(|&t| t * t.ln().powf(0.25)).collect();
            let c = basis.iter().zip(u).map(|(b, y)| b * y).sum::<f64>() / basis.iter().map(|b| b * b).sum::<f64>();
            let e: Vec<f64> = basis.iter().zip(u).map(|(b, y)| c * b - y).collect();
            (1.0, c, rms(&e) / rms(u))
        }
    };
    Ok(GrowthFit {
        direction: [1.0, 0.0, 0.0],
        model,
        exponent,
        coefficient,
        residual: resid,
        window,
    })
}

/// Least squares by normal equations with column scaling.
pub(crate) fn lstsq(rows: impl Iterator<Item = Vec<f64>>, rhs: &[f64]) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = rows.collect();
    let p = rows.first().map_or(0, |r| r.len());
    let mut scale = vec![0.0f64; p];
    for row in &rows {
        for (s, v) in scale.iter_mut().zip(row) {
            *s = s.max(v.abs());
        }
    }
    scale.iter_mut().for_each(|s| {
        if *s == 0.0 {
            *s = 1.0
        }
    });
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, y) in rows.iter().zip(rhs) {
        for i in 0..p {
            let xi = row[i] / scale[i];
            for j in 0..p {
                a[i][j] += xi * row[j] / scale[j];
            }
            a[i][p] += xi * y;
        }
    }
    let mut sol = solve_dense(a).ok_or_else(|| Error::NotApplicable("singular least-squares system".into()))?;
    sol.iter_mut().zip(&scale).for_each(|(x, s)| *x /= s);
    Ok(sol)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for j in col..=n {
                a[i][j] -= f * a[col][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    Some(x)
}

/// Principal directions of the grid's symmetry class.
pub fn principal_directions(grid: &Grid) -> Vec<[f64; 3]> {
    match grid {
        Grid::Radial(_) => vec![[1.0, 0.0, 0.0]],
        Grid::Axisymmetric(_) => vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    }
}

/// Smallest fitted power of `u` over the principal directions.
pub fn growth_exponent(u: &Profile) -> Result<f64> {
    principal_directions(u.grid())
        .into_iter()
        .map(|d| fit_growth(u, d, GrowthModel::Power).map(|f| f.exponent))
        .try_fold(f64::INFINITY, |m, e| e.map(|e| m.min(e)))
}

/// `β = (1/8π)∫u^-q` with a power-law tail correction.
pub fn compute_beta(u: &Profile, q: f64) -> Result<f64> {
    if let Some(i) = u.values().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NotIntegrable(format!("u is not positive at node {i}")));
    }
    let k = growth_exponent(u)?;
    if k * q <= 3.0 {
        return Err(Error::NotIntegrable(format!(
            "u grows like |x|^{k:.3}, so u^-q decays like |x|^-{:.3}, not faster than |x|^-3",
            k * q
        )));
    }
    let f: Vec<f64> = u.values().iter().map(|v| v.powf(-q)).collect();
    let t = u.grid().integrate_with_tail(&f);
    t.total()
        .map(|t| t / (8.0 * PI))
        .ok_or_else(|| Error::NotIntegrable("tail of u^-q decays too slowly".into()))
}

/// One inequality of Theorem-1.1-type constraints on the decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `u = v + w` with `v = (1/8π)∫(|x−y| − |y|)u^-q` and `w` fitted by
/// `Σ aᵢxᵢ² + Σ bᵢxᵢ + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub beta: f64,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: f64,
    /// RMS misfit of `w` relative to the size of the fitted polynomial.
    pub fit_residual: f64,
    pub constraints: Vec<ConstraintCheck>,
    #[serde(skip)]
    pub v_part: Option<Profile>,
}

impl Decomposition {
    pub fn polynomial(&self) -> QuadraticPolynomial {
        QuadraticPolynomial::new(self.a, self.b, self.c, 0.0)
    }

    pub fn passes(&self) -> bool {
        self.constraints.iter().all(|c| c.pass)
    }

    /// `Err(ConstraintViolated)` naming every failed inequality.
    pub fn require_constraints(&self) -> Result<()> {
        let failed: Vec<String> = self
            .constraints
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} (value {}, bound {})", c.name, c.value, c.bound))
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::ConstraintViolated(failed.join("; ")))
        }
    }
}

/// Decomposes `u`, building a shifted operator for its grid.
pub fn decompose(u: &Profile, q: f64) -> Result<Decomposition> {
    let op = IntegralOperator::new(u.grid().clone(), KernelVariant::Shifted);
    decompose_with(u, q, &op)
}

/// [`decompose`] with a prebuilt operator; its variant is ignored.
pub fn decompose_with(u: &Profile, q: f64, op: &IntegralOperator) -> Result<Decomposition> {
    decompose_regularized(u, q, 0.0, op)
}

/// Decomposition of a solution of the regularized problem `Δ²u + u^-q = 120ε`,
/// whose polynomial part carries the known term `ε|x|⁴`. That term is removed
/// from `w` before the quadratic fit.
pub fn decompose_regularized(u: &Profile, q: f64, eps_quartic: f64, op: &IntegralOperator) -> Result<Decomposition> {
    let beta = compute_beta(u, q)?;
    let grid = u.grid();
    let f: Vec<f64> = u.values().iter().map(|v| v.powf(-q)).collect();
    let mut v = op.apply(&f);
    if op.variant() == KernelVariant::Unshifted {
        let v0 = v[grid.origin()];
        v.iter_mut().for_each(|x| *x -= v0);
    }
    let w: Vec<f64> = (0..grid.len())
        .map(|i| u.values()[i] - v[i] - eps_quartic * grid.radius(i).powi(4))
        .collect();
    let limit = 0.5 * grid.inscribed_radius();
    let nodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.radius(i) <= limit).collect();
    let (a, b, c) = match &**grid {
        Grid::Radial(_) => {
            let s = lstsq(
                nodes.iter().map(|&i| vec![1.0, grid.point(i)[0].powi(2)]),
                &pick(&w, &nodes),
            )?;
            ([s[1]; 3], [0.0; 3], s[0])
        }
        Grid::Axisymmetric(_) => {
            let s = lstsq(
                nodes.iter().map(|&i| {
                    let p = grid.point(i);
                    vec![1.0, p[0], p[0] * p[0], p[1] * p[1]]
                }),
                &pick(&w, &nodes),
            )?;
            ([s[2], s[3], s[3]], [s[1], 0.0, 0.0], s[0])
        }
    };
    let poly = QuadraticPolynomial::new(a, b, c, 0.0);
    let mut sq = 0.0;
    let mut scale = c.abs();
    for &i in &nodes {
        let p = grid.point(i);
        sq += (w[i] - poly.evaluate(p)).powi(2);
        scale = scale.max((poly.evaluate(p) - c).abs());
    }
    let fit_residual = (sq / nodes.len() as f64).sqrt() / scale.max(f64::MIN_POSITIVE);

    let tol_a = 1e-3 * a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol_b = 1e-3;
    let mut constraints = Vec::new();
    for (i, ai) in a.iter().enumerate() {
        constraints.push(ConstraintCheck {
            name: format!("a{} >= 0", i + 1),
            value: *ai,
            bound: -tol_a,
            pass: *ai >= -tol_a,
        });
    }
    for (i, bi) in b.iter().enumerate() {
        constraints.push(ConstraintCheck {
            name: format!("|b{}| <= beta", i + 1),
            value: bi.abs(),
            bound: beta + tol_b,
            pass: bi.abs() <= beta + tol_b,
        });
    }
    constraints.push(ConstraintCheck {
        name: "c > 0".into(),
        value: c,
        bound: 0.0,
        pass: c > 0.0,
    });
    Ok(Decomposition {
        beta,
        a,
        b,
        c,
        fit_residual,
        constraints,
        v_part: Some(Profile::new(grid.clone(), v)?),
    })
}

fn pick(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

/// Reference decay rate of second derivatives for exponent `q`.
pub fn hessian_rate(q: f64, r: f64) -> f64 {
    if (q - 1.5).abs() < 1e-12 {
        r.ln() / r
    } else if q > 1.5 {
        1.0 / r
    } else {
        r.powf(2.0 - 2.0 * q)
    }
}

/// Outcome of [`check_hessian_decay`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianDecay {
    /// Smallest `C` with `|D²v| ≤ C·f_q(|x|)` at every tested node with `|x| ≥ 2`.
    pub c_fit: f64,
    /// Largest `|D²v|` component on tested nodes with `|x| < 2`.
    pub max_inside_b2: f64,
    /// Log–log slope of the binned maximum ratio over the last decade.
    pub trend_slope: f64,
    /// False when the ratio keeps growing across the last decade.
    pub bounded: bool,
}

/// Compares componentwise second differences of `v` with the decay rate `f_q`.
pub fn check_hessian_decay(v: &Profile, q: f64) -> HessianDecay {
    let grid = v.grid();
    let comps = hessian_components(v);
    let l = grid.inscribed_radius();
    let mut c_fit: f64 = 0.0;
    let mut inside: f64 = 0.0;
    let bins = 8;
    let mut bin_max = vec![0.0f64; bins];
    for (i, m) in comps {
        let r = grid.radius(i);
        if r < 2.0 {
            inside = inside.max(m);
            continue;
        }
        let ratio = m / hessian_rate(q, r);
        c_fit = c_fit.max(ratio);
        if r >= l / 10.0 && r <= l {
            let k = (((r / (l / 10.0)).log10() * bins as f64) as usize).min(bins - 1);
            bin_max[k] = bin_max[k].max(ratio);
        }
    }
    let pts: Vec<(f64, f64)> = bin_max
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(k, m)| ((l / 10.0 * 10f64.powf((k as f64 + 0.5) / bins as f64)).ln(), m.ln()))
        .collect();
    let trend_slope = if pts.len() >= 3 {
        lstsq(
            pts.iter().map(|(x, _)| vec![*x, 1.0]),
            &pts.iter().map(|p| p.1).collect::<Vec<_>>(),
        )
        .map(|c| c[0])
        .unwrap_or(0.0)
    } else {
        0.0
    };
    // Ratios at roundoff level carry no trend.
    let noise = 1e-9 * v.values().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let bounded = trend_slope <= 0.25 || c_fit <= noise;
    HessianDecay {
        c_fit,
        max_inside_b2: inside,
        trend_slope,
        bounded,
    }
}

/// Largest absolute Cartesian second-derivative component at interior nodes.
fn hessian_components(v: &Profile) -> Vec<(usize, f64)> {
    let vals = v.values();
    match &**v.grid() {
        Grid::Radial(g) => {
            let r = g.nodes();
            (1..r.len() - 1)
                .map(|i| {
                    let (d1, d2) = nonuniform_derivatives(r[i - 1], r[i], r[i + 1], vals[i - 1], vals[i], vals[i + 1]);
                    (i, d2.abs().max((d1 / r[i]).abs()))
                })
                .collect()
        }
        Grid::Axisymmetric(g) => {
            let (x, rho, h) = (g.x1(), g.rho(), g.spacing());
            let at = |k: usize, b: usize| vals[g.index(k, b)];
            let mut out = Vec::new();
            for k in 1..x.len() - 1 {
                for b in 0..rho.len() - 1 {
                    let vxx = (at(k + 1, b) - 2.0 * at(k, b) + at(k - 1, b)) / (h * h);
                    let m = if b == 0 {
                        // Even in ρ: v_ρρ(0) from the first two nodes; no mixed term on the axis.
                        let vrr = 2.0 * (at(k, 1) - at(k, 0)) / (rho[1] * rho[1]);
                        vxx.abs().max(vrr.abs())
                    } else {
                        let (vr, vrr) = nonuniform_derivatives(
                            rho[b - 1],
                            rho[b],
                            rho[b + 1],
                            at(k, b - 1),
                            at(k, b),
                            at(k, b + 1),
                        );
                        let dr = |kk: usize| {
                            nonuniform_derivatives(
                                rho[b - 1],
                                rho[b],
                                rho[b + 1],
                                at(kk, b - 1),
                                at(kk, b),
                                at(kk, b + 1),
                            )
                            .0
                        };
                        let vxr = (dr(k + 1) - dr(k - 1)) / (2.0 * h);
                        vxx.abs().max(vrr.abs()).max((vr / rho[b]).abs()).max(vxr.abs())
                    };
                    out.push((g.index(k, b), m));
                }
            }
            out
        }
    }
}

/// First and second derivative at `x1` from three nonuniform points.
fn nonuniform_derivatives(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> (f64, f64) {
    let (h0, h1) = (x1 - x0, x2 - x1);
    let d1 = (-h1 / (h0 * (h0 + h1))) * f0 + ((h1 - h0) / (h0 * h1)) * f1 + (h0 / (h1 * (h0 + h1))) * f2;
    let d2 = 2.0 * (f0 / (h0 * (h0 + h1)) - f1 / (h0 * h1) + f2 / (h1 * (h0 + h1)));
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GridSpec;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn radial(r: f64, n: usize) -> Arc<Grid> {
        Arc::new(GridSpec::radial(r, n).build().unwrap())
    }

    fn exact_q7(g: Arc<Grid>) -> Profile {
        let a = (1.0f64 / 15.0).sqrt();
        Profile::from_fn(g, |x| (a + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
    }

    #[test]
    fn exact_models_are_recovered() {
        let g = radial(100.0, 400);
        let u = Profile::from_fn(g.clone(), |x| 1.0 + x[0] * x[0]);
        let f = fit_growth(&u, [0.0, 0.0, 1.0], GrowthModel::Quadratic).unwrap();
        assert_relative_eq!(f.coefficient, 1.0, max_relative = 1e-10);
        assert!(f.residual < 1e-12);
        let u = Profile::from_fn(g.clone(), |x| 3.0 * x[0].powf(1.5));
        let f = fit_growth(&u, [1.0, 0.0, 0.0], GrowthModel::Power).unwrap();
        assert_relative_eq!(f.exponent, 1.5, max_relative = 1e-10);
        assert_relative_eq!(f.coefficient, 3.0, max_relative = 1e-10);
        let u = Profile::from_fn(g, |x| 2.0 * x[0] * x[0].ln().max(0.0).powf(0.25));
        let f = fit_growth(&u, [1.0, 0.0, 0.0], GrowthModel::PowerLogQuarter).unwrap();
        assert_relative_eq!(f.coefficient, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn exact_q7_has_unit_slope_and_beta() {
        let u = exact_q7(radial(100.0, 2000));
        for d in [[1.0, 0.0, 0.0], [0.3, -0.2, 0.9]] {
            let f = fit_growth(&u, d, GrowthModel::Linear).unwrap();
            assert!((f.coefficient - 1.0).abs() < 5e-3);
        }
        assert!((compute_beta(&u, 7.0).unwrap() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn beta_of_one_plus_r2() {
        let u = Profile::from_fn(radial(1000.0, 800), |x| 1.0 + x[0] * x[0]);
        assert_relative_eq!(compute_beta(&u, 2.0).unwrap(), PI / 8.0, max_relative = 1e-4);
        let lin = Profile::from_fn(radial(1000.0, 800), |x| 1.0 + x[0]);
        assert!(matches!(compute_beta(&lin, 3.0), Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn coarse_tail_is_rejected() {
        let g = Arc::new(GridSpec::axisymmetric(10.0, 8, 10.0, 4).build().unwrap());
        let u = Profile::from_fn(g, |x| 1.0 + x[0] * x[0]);
        assert!(matches!(
            fit_growth(&u, [0.0, 1.0, 0.0], GrowthModel::Quadratic),
            Err(Error::InsufficientTail { .. })
        ));
    }

    #[test]
    fn q7_decomposition_is_a_constant() {
        let u = exact_q7(radial(100.0, 2000));
        let d = decompose(&u, 7.0).unwrap();
        // w = u − v is the constant u(0) − γ with γ = 0.
        assert!((d.c - (1.0f64 / 15.0).powf(0.25)).abs() < 1e-3, "{d:?}");
        assert!(d.a[0].abs() < 1e-5);
        assert!(d.passes());
    }

    #[test]
    fn decomposition_of_a_solve_recovers_its_polynomial() {
        use crate::model::{KernelVariant, SolveConfig};
        let poly = QuadraticPolynomial::isotropic(1.0, 1.0);
        let cfg = SolveConfig::new(5.0, poly, KernelVariant::Shifted, GridSpec::radial(100.0, 600));
        let (v, report) = crate::operator::solve_fixed_point(&cfg).unwrap();
        assert!(report.converged);
        let u = v.plus_polynomial(&poly);
        let d = decompose(&u, 5.0).unwrap();
        assert!((d.a[0] - 1.0).abs() < 1e-6 && (d.c - 1.0).abs() < 1e-6, "{d:?}");
        assert!(d.fit_residual < 1e-6);
        // Idempotence: decomposing v + w again gives the same polynomial.
        let again = d.v_part.clone().unwrap().plus_polynomial(&d.polynomial());
        let d2 = decompose(&again, 5.0).unwrap();
        assert!((d2.a[0] - d.a[0]).abs() < 1e-6 && (d2.c - d.c).abs() < 1e-6);
    }

    #[test]
    fn hessian_of_constant_is_zero_and_quadratic_is_flagged() {
        let g = Arc::new(GridSpec::axisymmetric(20.0, 64, 20.0, 32).build().unwrap());
        let c = check_hessian_decay(&Profile::from_fn(g.clone(), |_| 3.0), 2.0);
        assert!(c.c_fit < 1e-9);
        assert!(c.bounded);
        let q = check_hessian_decay(&Profile::from_fn(g, |x| x[0] * x[0] + x[1] * x[1]), 2.0);
        assert!(!q.bounded && q.trend_slope > 0.8);
    }

    #[test]
    fn hessian_of_linear_growth_decays_like_inverse_radius() {
        let u = exact_q7(radial(100.0, 800));
        let h = check_hessian_decay(&u, 2.0);
        assert!(h.bounded && h.c_fit < 1.5, "{h:?}");
    }

    #[test]
    fn hessian_rate_branches() {
        assert_eq!(hessian_rate(2.0, 4.0), 0.25);
        assert_relative_eq!(hessian_rate(1.5, 4.0), 4f64.ln() / 4.0);
        assert_relative_eq!(hessian_rate(1.2, 4.0), 4f64.powf(-0.4));
    }
}
