use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::quadrature::{
    interp_even, lagrange4, panel_product_weights, panel_product_weights_odd, simpson_weights, simpson_weights_odd,
    UnitRule,
};

fn default_grading() -> f64 {
    2.0
}

fn default_azimuthal_order() -> usize {
    32
}

/// Grid description as it appears in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Nodes `r_k = r_max (k/n)^grading`, `k = 0..=n`.
    Radial {
        r_max: f64,
        n: usize,
        #[serde(default = "default_grading")]
        grading: f64,
    },
    /// Uniform `x₁` nodes on `[-x1_max, x1_max]` (`n_x1` intervals) times graded
    /// `ρ` nodes on `[0, rho_max]` (`n_rho` intervals).
    Axisymmetric {
        x1_max: f64,
        n_x1: usize,
        rho_max: f64,
        n_rho: usize,
        #[serde(default = "default_grading")]
        grading: f64,
        #[serde(default = "default_azimuthal_order")]
        azimuthal_order: usize,
    },
}

impl GridSpec {
    pub fn radial(r_max: f64, n: usize) -> Self {
        GridSpec::Radial { r_max, n, grading: 2.0 }
    }

    pub fn axisymmetric(x1_max: f64, n_x1: usize, rho_max: f64, n_rho: usize) -> Self {
        GridSpec::Axisymmetric {
            x1_max,
            n_x1,
            rho_max,
            n_rho,
            grading: 2.0,
            azimuthal_order: 32,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::InvalidGrid(m));
        let check_len = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::InvalidGrid(format!("{name} must be positive, got {v}")))
            }
        };
        let check_n = |name: &str, n: usize| {
            if n >= 4 && n % 2 == 0 {
                Ok(())
            } else {
                Err(ConfigError::InvalidGrid(format!(
                    "{name} must be an even number of at least 4 intervals, got {n}"
                )))
            }
        };
        match *self {
            GridSpec::Radial { r_max, n, grading } => {
                check_len("r_max", r_max)?;
                check_n("n", n)?;
                if !(1.0..=8.0).contains(&grading) {
                    return bad(format!("grading must lie in [1, 8], got {grading}"));
                }
            }
            GridSpec::Axisymmetric {
                x1_max,
                n_x1,
                rho_max,
                n_rho,
                grading,
                azimuthal_order,
            } => {
                check_len("x1_max", x1_max)?;
                check_len("rho_max", rho_max)?;
                check_n("n_x1", n_x1)?;
                check_n("n_rho", n_rho)?;
                if !(1.0..=8.0).contains(&grading) {
                    return bad(format!("grading must lie in [1, 8], got {grading}"));
                }
                if azimuthal_order < 4 {
                    return bad(format!("azimuthal_order must be at least 4, got {azimuthal_order}"));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Grid, ConfigError> {
        self.validate()?;
        Ok(match *self {
            GridSpec::Radial { r_max, n, grading } => Grid::Radial(RadialGrid::new(r_max, n, grading)),
            GridSpec::Axisymmetric {
                x1_max,
                n_x1,
                rho_max,
                n_rho,
                grading,
                azimuthal_order,
            } => Grid::Axisymmetric(AxisymmetricGrid::new(
                x1_max,
                n_x1,
                rho_max,
                n_rho,
                grading,
                azimuthal_order,
            )),
        })
    }
}

fn graded_nodes(max: f64, n: usize, grading: f64) -> Vec<f64> {
    (0..=n).map(|k| max * (k as f64 / n as f64).powf(grading)).collect()
}

/// Product-integration weights for `∫₀^R g(s) f(s) ds` on graded nodes.
pub(crate) fn radial_moment_weights(nodes: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
    let rule = UnitRule::new(5);
    let mut w = vec![0.0; nodes.len()];
    panel_product_weights(nodes, None, &rule, g, &mut w);
    w
}

/// [`radial_moment_weights`] with panel boundaries on the odd nodes.
pub(crate) fn radial_moment_weights_odd(nodes: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
    let rule = UnitRule::new(5);
    let mut w = vec![0.0; nodes.len()];
    panel_product_weights_odd(nodes, &rule, g, &mut w);
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    grading: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize, grading: f64) -> Self {
        let nodes = graded_nodes(r_max, n, grading);
        let weights = radial_moment_weights(&nodes, |s| 4.0 * PI * s * s);
        Self {
            nodes,
            weights,
            grading,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisymmetricGrid {
    x1: Vec<f64>,
    rho: Vec<f64>,
    w_x1: Vec<f64>,
    w_x1_odd: Vec<f64>,
    w_rho: Vec<f64>,
    w_rho_odd: Vec<f64>,
    half: usize,
    h: f64,
    grading: f64,
    azimuthal_order: usize,
}

impl AxisymmetricGrid {
    pub fn new(x1_max: f64, n_x1: usize, rho_max: f64, n_rho: usize, grading: f64, azimuthal_order: usize) -> Self {
        let half = n_x1 / 2;
        let h = x1_max / half as f64;
        let x1: Vec<f64> = (0..=n_x1).map(|k| (k as f64 - half as f64) * h).collect();
        let w_x1: Vec<f64> = simpson_weights(n_x1).into_iter().map(|w| w * h).collect();
        let w_x1_odd = if n_x1 >= 6 {
            simpson_weights_odd(n_x1).into_iter().map(|w| w * h).collect()
        } else {
            w_x1.clone()
        };
        let rho = graded_nodes(rho_max, n_rho, grading);
        let w_rho = radial_moment_weights(&rho, |s| 2.0 * PI * s);
        let w_rho_odd = if n_rho >= 4 {
            radial_moment_weights_odd(&rho, |s| 2.0 * PI * s)
        } else {
            w_rho.clone()
        };
        Self {
            x1,
            rho,
            w_x1,
            w_x1_odd,
            w_rho,
            w_rho_odd,
            half,
            h,
            grading,
            azimuthal_order,
        }
    }

    /// All `x₁` nodes, symmetric about zero; node `half + i` sits at `i·h`.
    pub fn x1(&self) -> &[f64] {
        &self.x1
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Simpson weights along the full `x₁` line.
    pub fn x1_weights(&self) -> &[f64] {
        &self.w_x1
    }

    /// `x₁` weights whose panel boundaries include node `k`, for integrands with
    /// a kink at `x₁[k]`.
    pub fn x1_weights_at(&self, k: usize) -> &[f64] {
        if k % 2 == 0 {
            &self.w_x1
        } else {
            &self.w_x1_odd
        }
    }

    /// Weights for `∫ f 2πρ dρ`.
    pub fn rho_weights(&self) -> &[f64] {
        &self.w_rho
    }

    /// `ρ` weights whose panel boundaries include node `b`.
    pub fn rho_weights_at(&self, b: usize) -> &[f64] {
        if b % 2 == 0 {
            &self.w_rho
        } else {
            &self.w_rho_odd
        }
    }

    /// Number of `x₁` intervals on each half line.
    pub fn half(&self) -> usize {
        self.half
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn x1_max(&self) -> f64 {
        *self.x1.last().unwrap()
    }

    pub fn rho_max(&self) -> f64 {
        *self.rho.last().unwrap()
    }

    pub fn n_rho(&self) -> usize {
        self.rho.len()
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn azimuthal_order(&self) -> usize {
        self.azimuthal_order
    }

    /// Flat index of `(x₁ node k, ρ node b)`.
    pub fn index(&self, k: usize, b: usize) -> usize {
        k * self.rho.len() + b
    }

    pub fn split_index(&self, idx: usize) -> (usize, usize) {
        (idx / self.rho.len(), idx % self.rho.len())
    }
}

/// Result of a truncated integral together with an extrapolated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailedIntegral {
    pub interior: f64,
    /// `None` when the extrapolated decay is too slow for the tail to converge.
    pub tail: Option<f64>,
}

impl TailedIntegral {
    pub fn total(&self) -> Option<f64> {
        self.tail.map(|t| self.interior + t)
    }
}

/// Quadrature grid on a truncated domain of ℝ³.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Axisymmetric(AxisymmetricGrid),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.nodes.len(),
            Grid::Axisymmetric(g) => g.x1.len() * g.rho.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        match self {
            Grid::Radial(g) => [g.nodes[idx], 0.0, 0.0],
            Grid::Axisymmetric(g) => {
                let (k, b) = g.split_index(idx);
                [g.x1[k], g.rho[b], 0.0]
            }
        }
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    }

    /// Quadrature weight of each node for integrals over the truncated domain in ℝ³.
    pub fn weight(&self, idx: usize) -> f64 {
        match self {
            Grid::Radial(g) => g.weights[idx],
            Grid::Axisymmetric(g) => {
                let (k, b) = g.split_index(idx);
                g.w_x1[k] * g.w_rho[b]
            }
        }
    }

    /// Index of the node mirrored through `x₁ = 0`.
    pub fn mirror(&self, idx: usize) -> usize {
        match self {
            Grid::Radial(_) => idx,
            Grid::Axisymmetric(g) => {
                let (k, b) = g.split_index(idx);
                g.index(g.x1.len() - 1 - k, b)
            }
        }
    }

    /// Index of the node at the origin.
    pub fn origin(&self) -> usize {
        match self {
            Grid::Radial(_) => 0,
            Grid::Axisymmetric(g) => g.index(g.half, 0),
        }
    }

    /// Radius of the largest ball centred at the origin inside the domain.
    pub fn inscribed_radius(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.r_max(),
            Grid::Axisymmetric(g) => g.x1_max().min(g.rho_max()),
        }
    }

    /// Largest `t` with `t·d` inside the domain, for a unit vector `d`.
    pub fn extent(&self, direction: [f64; 3]) -> f64 {
        let d = normalize(direction);
        match self {
            Grid::Radial(g) => g.r_max(),
            Grid::Axisymmetric(g) => {
                let dr = (d[1] * d[1] + d[2] * d[2]).sqrt();
                let tx = if d[0].abs() > 0.0 {
                    g.x1_max() / d[0].abs()
                } else {
                    f64::INFINITY
                };
                let tr = if dr > 0.0 { g.rho_max() / dr } else { f64::INFINITY };
                tx.min(tr)
            }
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// Integral over the domain plus a power-law extrapolation of the integrand
    /// beyond its boundary.
    pub fn integrate_with_tail(&self, values: &[f64]) -> TailedIntegral {
        let interior = self.integrate(values);
        let tail = match self {
            Grid::Radial(g) => {
                let n = g.nodes.len() - 1;
                let k = n - (n / 10).max(1);
                power_tail(values[n], values[k], g.nodes[n], g.nodes[k], 3.0).map(|t| 4.0 * PI * g.r_max().powi(3) * t)
            }
            Grid::Axisymmetric(g) => axisymmetric_tail(g, values),
        };
        TailedIntegral { interior, tail }
    }

    /// Interpolated value of nodal `values` at `x`, or `None` outside the domain.
    pub fn sample(&self, values: &[f64], x: [f64; 3]) -> Option<f64> {
        match self {
            Grid::Radial(g) => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                interp_even(&g.nodes, |i| values[i], r)
            }
            Grid::Axisymmetric(g) => {
                let rho = (x[1] * x[1] + x[2] * x[2]).sqrt();
                sample_axisymmetric(g, values, x[0], rho)
            }
        }
    }
}

pub(crate) fn normalize(d: [f64; 3]) -> [f64; 3] {
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [d[0] / n, d[1] / n, d[2] / n]
}

/// Tail factor `f_out / (p − dim)` for a power law fitted through two points,
/// where `dim` is the exponent of the volume element. Opposite signs or zeros
/// contribute nothing.
fn power_tail(f_out: f64, f_in: f64, r_out: f64, r_in: f64, dim: f64) -> Option<f64> {
    if f_out == 0.0 || f_in == 0.0 || f_out.signum() != f_in.signum() {
        return Some(0.0);
    }
    let p = -(f_out / f_in).ln() / (r_out / r_in).ln();
    if !p.is_finite() || p <= dim {
        return None;
    }
    Some(f_out / (p - dim))
}

fn axisymmetric_tail(g: &AxisymmetricGrid, values: &[f64]) -> Option<f64> {
    let m = g.rho.len() - 1;
    let bi = m - (m / 10).max(1);
    let r_out = g.rho[m];
    // Power laws are fitted to face integrals, which are dominated by the
    // slowest-decaying part of the face.
    let lateral = |b: usize| {
        g.w_x1
            .iter()
            .enumerate()
            .map(|(k, w)| w * values[g.index(k, b)])
            .sum::<f64>()
    };
    let mut tail = 2.0 * PI * r_out * r_out * power_tail(lateral(m), lateral(bi), r_out, g.rho[bi], 2.0)?;
    // End faces x₁ = ±X.
    let end = |k: usize| {
        g.w_rho
            .iter()
            .enumerate()
            .map(|(b, w)| w * values[g.index(k, b)])
            .sum::<f64>()
    };
    let last = g.x1.len() - 1;
    let step = (g.half / 10).max(1);
    let x_out = g.x1_max();
    for (edge, inner) in [(last, last - step), (0, step)] {
        tail += x_out * power_tail(end(edge), end(inner), x_out, g.x1[inner].abs(), 1.0)?;
    }
    Some(tail)
}

fn sample_axisymmetric(g: &AxisymmetricGrid, values: &[f64], x1: f64, rho: f64) -> Option<f64> {
    let n = g.x1.len() - 1;
    let xmax = g.x1_max();
    if !(x1.abs() <= xmax * (1.0 + 1e-12)) || rho > g.rho_max() * (1.0 + 1e-12) {
        return None;
    }
    let u = ((x1 + xmax) / g.h).clamp(0.0, n as f64);
    let i = (u.floor() as usize).min(n - 1);
    let start = i.saturating_sub(1).min(n - 3);
    let mut xs = [0.0; 4];
    let mut ys = [0.0; 4];
    for k in 0..4 {
        let row = start + k;
        xs[k] = g.x1[row];
        ys[k] = interp_even(&g.rho, |b| values[g.index(row, b)], rho.min(g.rho_max()))?;
    }
    Some(lagrange4(&xs, &ys, x1.clamp(-xmax, xmax)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn radial_weights_integrate_gaussian() {
        let g = GridSpec::radial(12.0, 400).build().unwrap();
        let vals: Vec<f64> = g.points().map(|p| (-p[0] * p[0]).exp()).collect();
        assert_relative_eq!(g.integrate(&vals), PI.powf(1.5), max_relative = 1e-6);
    }

    #[test]
    fn axisymmetric_weights_integrate_gaussian() {
        let g = GridSpec::axisymmetric(8.0, 128, 8.0, 64).build().unwrap();
        let vals: Vec<f64> = g.points().map(|p| (-p[0] * p[0] - 2.0 * p[1] * p[1]).exp()).collect();
        assert_relative_eq!(g.integrate(&vals), PI.powf(1.5) / 2.0, max_relative = 5e-5);
    }

    #[test]
    fn radial_tail_recovers_power_law() {
        let g = GridSpec::radial(50.0, 400).build().unwrap();
        let vals: Vec<f64> = g.points().map(|p| (1.0 + p[0] * p[0]).powf(-3.0)).collect();
        // ∫ (1+r²)^-3 dx = π²/4.
        let t = g.integrate_with_tail(&vals);
        assert!((t.total().unwrap() - PI * PI / 4.0).abs() < 1e-5);
        assert!((t.interior - PI * PI / 4.0).abs() > 2e-5);
    }

    #[test]
    fn slow_decay_has_no_tail() {
        let g = GridSpec::radial(50.0, 100).build().unwrap();
        let vals: Vec<f64> = g.points().map(|p| 1.0 / (1.0 + p[0] * p[0])).collect();
        assert!(g.integrate_with_tail(&vals).tail.is_none());
    }

    #[test]
    fn axisymmetric_nodes_are_mirror_symmetric() {
        let g = GridSpec::axisymmetric(3.0, 12, 2.0, 8).build().unwrap();
        for i in 0..g.len() {
            let (p, q) = (g.point(i), g.point(g.mirror(i)));
            assert_eq!(p[0], -q[0]);
            assert_eq!(p[1], q[1]);
            assert_eq!(g.weight(i), g.weight(g.mirror(i)));
        }
        assert_eq!(g.point(g.origin()), [0.0; 3]);
    }

    #[test]
    fn axisymmetric_sampling_is_exact_for_low_degree() {
        let g = GridSpec::axisymmetric(4.0, 16, 3.0, 12).build().unwrap();
        let f = |x: f64, r: f64| 1.0 + x * x - 0.5 * x * x * x + 2.0 * r * r;
        let vals: Vec<f64> = g.points().map(|p| f(p[0], p[1])).collect();
        for (x, y, z) in [(0.3, 0.2, 0.1), (-3.9, 1.0, -2.0), (4.0, 0.0, 3.0)] {
            let r = y * y + z * z;
            assert_relative_eq!(
                g.sample(&vals, [x, y, z]).unwrap(),
                f(x, r.sqrt()),
                max_relative = 1e-12
            );
        }
        assert!(g.sample(&vals, [4.1, 0.0, 0.0]).is_none());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::radial(10.0, 7).validate().is_err());
        assert!(GridSpec::radial(-1.0, 8).validate().is_err());
        assert!(GridSpec::axisymmetric(1.0, 8, 1.0, 2).validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = GridSpec::axisymmetric(3.0, 12, 2.0, 8);
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.starts_with("{\"axisymmetric\""));
        assert_eq!(serde_json::from_str::<GridSpec>(&j).unwrap(), s);
        let r: GridSpec = serde_json::from_str(r#"{"radial":{"r_max":5,"n":10}}"#).unwrap();
        assert_eq!(r, GridSpec::radial(5.0, 10));
    }
}
