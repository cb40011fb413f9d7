//! Symmetry-reduced means of the kernel `|x − y|` and the quadrature tables
//! built from them.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use ndarray::parallel::prelude::*;
use ndarray::{linalg::general_mat_mul, Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{AxisymmetricGrid, KernelVariant, RadialGrid};
use crate::quadrature::{gauss_legendre, panel_product_weights, UnitRule};

/// Mean of `|x − y|` over the sphere `|y| = s` for `|x| = r`.
///
/// Equals `((r+s)³ − |r−s|³) / (6rs)`, evaluated in the cancellation-free form
/// `max + min²/(3·max)`.
pub fn radial_kernel(r: f64, s: f64) -> f64 {
    let (lo, hi) = if r < s { (r, s) } else { (s, r) };
    if hi == 0.0 {
        return 0.0;
    }
    hi + lo * lo / (3.0 * hi)
}

/// `radial_kernel(r, s) − s`, the spherical mean of `|x − y| − |y|`.
pub fn radial_kernel_shifted(r: f64, s: f64) -> f64 {
    if s >= r {
        if s == 0.0 {
            0.0
        } else {
            r * r / (3.0 * s)
        }
    } else {
        r - s + s * s / (3.0 * r)
    }
}

fn kernel_for(variant: KernelVariant) -> fn(f64, f64) -> f64 {
    match variant {
        KernelVariant::Shifted => radial_kernel_shifted,
        KernelVariant::Unshifted => radial_kernel,
    }
}

/// Gauss–Legendre rule for azimuthal means over `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AzimuthalRule {
    cos: Vec<f64>,
    weights: Vec<f64>,
}

impl AzimuthalRule {
    pub fn new(order: usize) -> Self {
        let (t, w) = gauss_legendre(order);
        Self {
            cos: t.iter().map(|t| (0.5 * PI * (t + 1.0)).cos()).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.cos.len()
    }

    /// `(1/π)∫₀^π √(d² + ρa² + ρb² − 2ρaρb cos φ) dφ`.
    pub fn mean_distance(&self, d: f64, rho_a: f64, rho_b: f64) -> f64 {
        let base = d * d + rho_a * rho_a + rho_b * rho_b;
        let cross = 2.0 * rho_a * rho_b;
        if cross == 0.0 {
            return base.sqrt();
        }
        self.cos
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * (base - cross * c).max(0.0).sqrt())
            .sum()
    }
}

fn default_rule() -> &'static AzimuthalRule {
    static RULE: OnceLock<AzimuthalRule> = OnceLock::new();
    RULE.get_or_init(|| AzimuthalRule::new(32))
}

/// Mean of `|x − y|` over the circle of `y` around the `x₁` axis, with the
/// default 32-point azimuthal rule.
pub fn axisym_kernel(x1: f64, rho_x: f64, y1: f64, rho_y: f64) -> f64 {
    default_rule().mean_distance(x1 - y1, rho_x, rho_y)
}

/// Monte-Carlo estimate of the mean of `|x − y|` over `|y| = s`, returned as
/// `(mean, standard error)`. Samples are drawn in fixed-size chunks, each from
/// its own ChaCha stream, so the result depends only on `seed` and `n_samples`.
pub fn mc_kernel_oracle(x: [f64; 3], s: f64, n_samples: usize, seed: u64) -> (f64, f64) {
    const CHUNK: usize = 1 << 14;
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(n_samples - c * CHUNK);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
                let phi: f64 = 2.0 * PI * rng.random::<f64>();
                let t = (1.0 - z * z).max(0.0).sqrt();
                let y = [s * t * phi.cos(), s * t * phi.sin(), s * z];
                let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
                sum += d;
                sq += d * d;
            }
            (sum, sq, count)
        })
        .collect();
    let (sum, sq, n) = parts
        .into_iter()
        .fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
    (mean, (var / nf).sqrt())
}

/// Weights `W_j` with `(1/8π)∫ k(x, y) f(y) dy ≈ Σ W_j f(r_j)` for a radial
/// density `f` and a target at radius `r`.
pub fn radial_weights_at(grid: &RadialGrid, r: f64, variant: KernelVariant) -> Vec<f64> {
    let rule = UnitRule::new(5);
    radial_row(grid.nodes(), r, kernel_for(variant), &rule)
}

fn radial_row(nodes: &[f64], r: f64, k: fn(f64, f64) -> f64, rule: &UnitRule) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    panel_product_weights(nodes, Some(r), rule, |s| 0.5 * k(r, s) * s * s, &mut w);
    w
}

/// Dense product-integration matrix of the radial operator on grid nodes.
#[derive(Debug, Clone)]
pub struct RadialKernelTable {
    variant: KernelVariant,
    weights: Array2<f64>,
}

impl RadialKernelTable {
    pub fn new(grid: &RadialGrid, variant: KernelVariant) -> Self {
        let nodes = grid.nodes();
        let n = nodes.len();
        let k = kernel_for(variant);
        let rule = UnitRule::new(5);
        let rows: Vec<Vec<f64>> = nodes.par_iter().map(|&r| radial_row(nodes, r, k, &rule)).collect();
        let weights = Array2::from_shape_vec((n, n), rows.concat()).expect("square table");
        Self { variant, weights }
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    /// `(1/8π)∫ k(x, y) f(y) dy` at every node.
    pub fn apply(&self, density: &[f64]) -> Vec<f64> {
        let f = ndarray::ArrayView1::from(density);
        self.weights.dot(&f).to_vec()
    }
}

/// Writes the radial kernel on the tensor grid of nodes as `r,s,K` rows.
pub fn write_radial_kernel_csv<W: Write>(grid: &RadialGrid, variant: KernelVariant, w: W) -> Result<()> {
    let k = kernel_for(variant);
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["r", "s", "K"])?;
    for &r in grid.nodes() {
        for &s in grid.nodes() {
            wr.write_record([r.to_string(), s.to_string(), k(r, s).to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Azimuthal means `G[Δ][a][b] = A(Δ·h, ρ_a, ρ_b)·w_ρ(b)` for every `x₁` offset of
/// the uniform grid, with `ρ` weights aligned to the target row `a`. The operator applied to an even density becomes one small
/// matrix product per offset.
#[derive(Debug, Clone)]
pub struct AxisymKernelTable {
    table: Array3<f64>,
    half: usize,
}

/// Number of independent partial sums in [`AxisymKernelTable::apply_unshifted`];
/// fixed so results do not depend on the thread count.
const APPLY_CHUNKS: usize = 16;

impl AxisymKernelTable {
    pub fn new(grid: &AxisymmetricGrid) -> Self {
        let rule = AzimuthalRule::new(grid.azimuthal_order());
        let rho = grid.rho();
        let m = rho.len();
        let offsets = 2 * grid.half() + 1;
        let h = grid.spacing();
        let mut table = Array3::<f64>::zeros((offsets, m, m));
        table
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(d, mut slice)| {
                let dx = d as f64 * h;
                for a in 0..m {
                    let wa = grid.rho_weights_at(a);
                    for b in a..m {
                        let v = rule.mean_distance(dx, rho[a], rho[b]);
                        slice[[a, b]] = v * wa[b];
                        slice[[b, a]] = v * grid.rho_weights_at(b)[a];
                    }
                }
            });
        Self {
            table,
            half: grid.half(),
        }
    }

    /// `(1/8π)∫|x − y| f(y) dy` on the full grid for a density that is even in
    /// `x₁`. Mirrored outputs are bit-identical.
    pub fn apply_unshifted(&self, grid: &AxisymmetricGrid, density: &[f64]) -> Vec<f64> {
        let n = self.half;
        let m = grid.n_rho();
        let scale = 1.0 / (8.0 * PI);
        // F[b][j] = f(x₁ = j·h, ρ_b)/8π for j = 0..=n.
        let mut f = Array2::<f64>::zeros((m, n + 1));
        for j in 0..=n {
            for b in 0..m {
                f[[b, j]] = density[grid.index(n + j, b)] * scale;
            }
        }
        let offsets = 2 * n + 1;
        let per = offsets.div_ceil(APPLY_CHUNKS);
        let partials: Vec<Array2<f64>> = (0..APPLY_CHUNKS)
            .into_par_iter()
            .map(|c| {
                let mut acc = Array2::<f64>::zeros((n + 1, m));
                let mut hm = Array2::<f64>::zeros((m, n + 1));
                for d in (c * per)..((c + 1) * per).min(offsets) {
                    general_mat_mul(1.0, &self.table.index_axis(Axis(0), d), &f, 0.0, &mut hm);
                    for i in 0..=n {
                        // The kernel has a kink at the target; keep it on a panel boundary.
                        let wx = grid.x1_weights_at(n + i);
                        let mut row = acc.row_mut(i);
                        // Sources at x₁ = (i ± d)·h, folded onto |j| by evenness.
                        if i + d <= n {
                            let w = wx[n + i + d];
                            row.scaled_add(w, &hm.column(i + d));
                        }
                        if d > 0 && d <= i + n {
                            let j = i as isize - d as isize;
                            let w = wx[(n as isize + j) as usize];
                            row.scaled_add(w, &hm.column(j.unsigned_abs()));
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = Array2::<f64>::zeros((n + 1, m));
        for p in &partials {
            total += p;
        }
        let mut out = vec![0.0; grid.x1().len() * m];
        for i in 0..=n {
            for b in 0..m {
                let v = total[[i, b]];
                out[grid.index(n + i, b)] = v;
                out[grid.index(n - i, b)] = v;
            }
        }
        out
    }
}
