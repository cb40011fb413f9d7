//! The integral operator `T` and its fixed points by damped Picard iteration.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{ConfigError, Error, Result};
use crate::kernels::{radial_weights_at, AxisymKernelTable, AzimuthalRule, RadialKernelTable};
use crate::model::{
    radial_moment_weights, validate_config, Grid, KernelVariant, Profile, QuadraticPolynomial, SolutionReport,
    SolveConfig, TraceRow,
};
use crate::quadrature::{lagrange4, simpson_weights};

enum Tables {
    Radial(RadialKernelTable),
    Axisymmetric(AxisymKernelTable),
}

/// Discretized `f ↦ (1/8π)∫ k(x, y) f(y) dy` on a grid, with `k` the shifted
/// or unshifted kernel. Tables are built once and reused.
pub struct IntegralOperator {
    grid: Arc<Grid>,
    variant: KernelVariant,
    tables: Tables,
}

impl std::fmt::Debug for IntegralOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegralOperator")
            .field("nodes", &self.grid.len())
            .field("variant", &self.variant)
            .finish()
    }
}

impl IntegralOperator {
    pub fn new(grid: Arc<Grid>, variant: KernelVariant) -> Self {
        let tables = match &*grid {
            Grid::Radial(g) => Tables::Radial(RadialKernelTable::new(g, variant)),
            Grid::Axisymmetric(g) => Tables::Axisymmetric(AxisymKernelTable::new(g)),
        };
        Self { grid, variant, tables }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    /// Same tables, other kernel. Free for axisymmetric grids, where the
    /// shifted operator is derived from the unshifted one.
    pub fn with_variant(self: &Arc<Self>, variant: KernelVariant) -> Arc<Self> {
        if variant == self.variant {
            return self.clone();
        }
        match (&*self.grid, &self.tables) {
            (Grid::Axisymmetric(_), Tables::Axisymmetric(t)) => Arc::new(Self {
                grid: self.grid.clone(),
                variant,
                tables: Tables::Axisymmetric(t.clone()),
            }),
            _ => Arc::new(Self::new(self.grid.clone(), variant)),
        }
    }

    /// Applies the operator to nodal density values.
    pub fn apply(&self, density: &[f64]) -> Vec<f64> {
        match (&*self.grid, &self.tables) {
            (Grid::Radial(_), Tables::Radial(t)) => t.apply(density),
            (Grid::Axisymmetric(g), Tables::Axisymmetric(t)) => {
                let mut out = t.apply_unshifted(g, density);
                if self.variant == KernelVariant::Shifted {
                    // ∫(|x−y| − |y|)f = U(x) − U(0) exactly, also after truncation.
                    let u0 = out[self.grid.origin()];
                    out.iter_mut().for_each(|v| *v -= u0);
                }
                out
            }
            _ => unreachable!("tables always match the grid"),
        }
    }
}

/// `(1/8π)∫ k(x, y) f(y) dy` at an arbitrary point inside the domain, without tables.
pub fn integral_at(grid: &Grid, density: &[f64], x: [f64; 3], variant: KernelVariant) -> f64 {
    match grid {
        Grid::Radial(g) => {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let w = radial_weights_at(g, r, variant);
            w.iter().zip(density).map(|(w, f)| w * f).sum()
        }
        Grid::Axisymmetric(g) => {
            let rule = AzimuthalRule::new(g.azimuthal_order());
            let rho = (x[1] * x[1] + x[2] * x[2]).sqrt();
            let mut sum = 0.0;
            // Same x₁ rule as the table at the nearest node.
            let nearest = ((x[0] / g.spacing()).round() as isize + g.half() as isize).clamp(0, 2 * g.half() as isize);
            let wxs = g.x1_weights_at(nearest as usize);
            let near_rho = g.rho().partition_point(|&r| r < rho).min(g.n_rho() - 1);
            let near_rho = if near_rho > 0 && rho - g.rho()[near_rho - 1] < g.rho()[near_rho] - rho {
                near_rho - 1
            } else {
                near_rho
            };
            let wrs = g.rho_weights_at(near_rho);
            for (k, ((&y1, &wx), &w0)) in g.x1().iter().zip(wxs).zip(g.x1_weights()).enumerate() {
                for (b, ((&rb, &wr), &wr0)) in g.rho().iter().zip(wrs).zip(g.rho_weights()).enumerate() {
                    let f = density[g.index(k, b)];
                    sum += wx * wr * f * rule.mean_distance(x[0] - y1, rho, rb);
                    if variant == KernelVariant::Shifted {
                        sum -= w0 * wr0 * f * (y1 * y1 + rb * rb).sqrt();
                    }
                }
            }
            sum / (8.0 * PI)
        }
    }
}

/// [`integral_at`] with the `x₁` quadrature refined `refine` times, the density
/// being interpolated between nodes. Independent of the table's `x₁` rule, so
/// it measures that rule's error. Radial grids already integrate the kernel
/// exactly against the interpolated density and are not refined.
pub fn integral_at_refined(grid: &Grid, density: &[f64], x: [f64; 3], variant: KernelVariant, refine: usize) -> f64 {
    let Grid::Axisymmetric(g) = grid else {
        return integral_at(grid, density, x, variant);
    };
    let refine = refine.max(1);
    let rule = AzimuthalRule::new(g.azimuthal_order());
    let rho = (x[1] * x[1] + x[2] * x[2]).sqrt();
    let nodes = g.x1();
    let last = nodes.len() - 1;
    let fine = last * refine;
    let hf = g.spacing() / refine as f64;
    let weights = simpson_weights(fine);
    let mut sum = 0.0;
    for (j, wj) in weights.iter().enumerate() {
        let y1 = nodes[0] + j as f64 * hf;
        let start = (j / refine).saturating_sub(1).min(last - 3);
        let xs = [nodes[start], nodes[start + 1], nodes[start + 2], nodes[start + 3]];
        for (b, (&rb, &wr)) in g.rho().iter().zip(g.rho_weights()).enumerate() {
            let f = if j % refine == 0 {
                density[g.index(j / refine, b)]
            } else {
                lagrange4(&xs, &[0, 1, 2, 3].map(|s| density[g.index(start + s, b)]), y1)
            };
            let mut kern = rule.mean_distance(x[0] - y1, rho, rb);
            if variant == KernelVariant::Shifted {
                kern -= (y1 * y1 + rb * rb).sqrt();
            }
            sum += wj * hf * wr * f * kern;
        }
    }
    sum / (8.0 * PI)
}

/// `Δ` of `(1/8π)∫|x−y| f(y) dy` at `x = 0`, i.e. `(1/4π)∫ f(y)/|y| dy`.
pub fn laplacian_at_origin(grid: &Grid, density: &[f64]) -> f64 {
    match grid {
        Grid::Radial(g) => {
            let w = radial_moment_weights(g.nodes(), |s| s);
            w.iter().zip(density).map(|(w, f)| w * f).sum()
        }
        Grid::Axisymmetric(_) => {
            let sum: f64 = (0..grid.len())
                .filter(|&i| grid.radius(i) > 0.0)
                .map(|i| grid.weight(i) * density[i] / grid.radius(i))
                .sum();
            sum / (4.0 * PI)
        }
    }
}

/// Analytic bound on `‖T_full(v) − T_truncated(v)‖_X` from `P ≥ C|x|^k`, valid
/// for every `v` since the denominator only grows with `|v|`.
pub fn truncation_bound(poly: &QuadraticPolynomial, q: f64, variant: KernelVariant, grid: &Grid) -> Option<f64> {
    let k = poly.growth_order() as f64;
    let c = poly.growth_constant();
    if k == 0.0 || c <= 0.0 {
        return None;
    }
    let e = k * q;
    let l = grid.inscribed_radius();
    let lead = 0.5 * c.powf(-q);
    if e <= 3.0 {
        return None;
    }
    let mut b = lead * l.powf(3.0 - e) / (e - 3.0);
    if variant == KernelVariant::Unshifted {
        if e <= 4.0 {
            return None;
        }
        b += lead * l.powf(4.0 - e) / (e - 4.0);
    }
    Some(b)
}

/// Density `(P + |v|)^-q` at the nodes.
pub fn density(v: &Profile, poly: &QuadraticPolynomial, q: f64) -> Result<Vec<f64>> {
    let grid = v.grid();
    v.values()
        .iter()
        .enumerate()
        .map(|(i, val)| {
            let d = (poly.evaluate(grid.point(i)) + val.abs()).powf(-q);
            if d.is_finite() {
                Ok(d)
            } else {
                Err(Error::NonFinite { node: i })
            }
        })
        .collect()
}

/// Result of one application of `T`.
#[derive(Debug, Clone)]
pub struct OperatorOutput {
    pub profile: Profile,
    /// `(1/8π)∫(P + |v|)^-q`, tail included when it converges.
    pub alpha: Option<f64>,
    pub tail_bound: Option<f64>,
}

/// One application of `T` to `v` with the configuration's `P`, `q` and kernel.
pub fn apply_operator(v: &Profile, cfg: &SolveConfig, op: &IntegralOperator) -> Result<OperatorOutput> {
    if !Arc::ptr_eq(v.grid(), op.grid()) && **v.grid() != **op.grid() {
        return Err(Error::GridMismatch("profile and operator use different grids".into()));
    }
    let f = density(v, &cfg.poly, cfg.q)?;
    let out = op.apply(&f);
    if let Some(node) = out.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    let alpha = op.grid().integrate_with_tail(&f).total().map(|t| t / (8.0 * PI));
    Ok(OperatorOutput {
        profile: Profile::new(op.grid().clone(), out)?,
        alpha,
        tail_bound: truncation_bound(&cfg.poly, cfg.q, op.variant(), op.grid()),
    })
}

/// Live state of the Picard iteration.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub v: Profile,
    pub iter: usize,
    /// `‖T(v_k) − v_k‖_X` for every completed iteration.
    pub history: Vec<f64>,
    pub damping: f64,
}

/// Outcome of a fixed-point solve; divergence is recorded in the report.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub profile: Profile,
    pub report: SolutionReport,
    pub trace: Vec<TraceRow>,
}

const MIN_DAMPING: f64 = 1.0 / 64.0;

pub struct FixedPointSolver {
    cfg: SolveConfig,
    op: Arc<IntegralOperator>,
}

impl FixedPointSolver {
    /// Validates `cfg` and builds the operator tables. Configurations with
    /// `q ≤ 1` are accepted so that the solve can report the nonexistence regime.
    pub fn new(cfg: SolveConfig) -> Result<Self> {
        check_config(&cfg)?;
        let grid = Arc::new(cfg.grid.build()?);
        let op = Arc::new(IntegralOperator::new(grid, cfg.kernel_variant));
        Ok(Self { cfg, op })
    }

    /// Reuses existing tables; the operator must have been built for `cfg.grid`.
    pub fn with_operator(cfg: SolveConfig, op: Arc<IntegralOperator>) -> Result<Self> {
        check_config(&cfg)?;
        Self::unchecked(cfg, op)
    }

    fn unchecked(cfg: SolveConfig, op: Arc<IntegralOperator>) -> Result<Self> {
        if cfg.grid.build()? != **op.grid() {
            return Err(Error::GridMismatch("operator was built for another grid".into()));
        }
        let op = op.with_variant(cfg.kernel_variant);
        Ok(Self { cfg, op })
    }

    pub fn config(&self) -> &SolveConfig {
        &self.cfg
    }

    pub fn operator(&self) -> &Arc<IntegralOperator> {
        &self.op
    }

    pub fn solve(&self, start: Option<&Profile>) -> SolveOutcome {
        self.solve_observed(start, |_| {})
    }

    /// Runs the iteration, calling `observer` after every update.
    pub fn solve_observed(&self, start: Option<&Profile>, mut observer: impl FnMut(&IterationState)) -> SolveOutcome {
        let cfg = &self.cfg;
        let grid = self.op.grid().clone();
        let mut report = SolutionReport::new(cfg.q, cfg.kernel_variant);
        let mut trace = Vec::new();
        let mut state = IterationState {
            v: start.cloned().unwrap_or_else(|| Profile::zeros(grid.clone())),
            iter: 0,
            history: Vec::new(),
            damping: cfg.damping,
        };
        if cfg.q <= 1.0 {
            report.diverged = Some(format!(
                "q = {} ≤ 1: no positive entire solution exists in this regime; iteration not attempted",
                cfg.q
            ));
            return self.finish(state, report, trace);
        }

        let mut last_sign = 0.0;
        let mut flips = 0;
        let mut best = f64::INFINITY;
        while state.iter < cfg.max_iters {
            let out = match apply_operator(&state.v, cfg, &self.op) {
                Ok(o) => o,
                Err(e) => {
                    report.diverged = Some(format!("iteration {}: {e}", state.iter + 1));
                    break;
                }
            };
            state.iter += 1;
            let t = out.profile;
            let (diff, dominant) = weighted_diff(&state.v, &t);
            let scale = t.x_norm().max(f64::MIN_POSITIVE);
            let rel = diff / scale;
            trace.push(TraceRow {
                iter: state.iter,
                diff_xnorm: diff,
                alpha_estimate: out.alpha.unwrap_or(f64::NAN),
            });
            report.final_residual = rel;
            let prev = state.history.last().copied();
            state.history.push(diff);
            if rel < cfg.tol_fixed_point {
                state.v = t;
                report.converged = true;
                observer(&state);
                break;
            }
            if !rel.is_finite() || (state.iter > 20 && diff > 1e8 * best) {
                report.diverged = Some(format!("update norm blew up to {diff:e} at iteration {}", state.iter));
                break;
            }
            best = best.min(diff);
            // Halve θ when the dominant update keeps flipping sign without shrinking.
            let sign = t.values()[dominant] - state.v.values()[dominant];
            let stalled = prev.is_some_and(|p| diff >= 0.8 * p);
            if sign * last_sign < 0.0 && stalled {
                flips += 1;
            } else {
                flips = 0;
            }
            last_sign = sign;
            if flips >= 3 && state.damping > MIN_DAMPING {
                state.damping = (state.damping / 2.0).max(MIN_DAMPING);
                flips = 0;
            }
            let th = state.damping;
            let mixed: Vec<f64> = state
                .v
                .values()
                .iter()
                .zip(t.values())
                .map(|(a, b)| (1.0 - th) * a + th * b)
                .collect();
            state.v = Profile::new(grid.clone(), mixed).expect("same grid");
            observer(&state);
        }
        if !report.converged && report.diverged.is_none() {
            report.diverged = Some(format!(
                "no convergence after {} iterations (relative update {:e})",
                state.iter, report.final_residual
            ));
        }
        self.finish(state, report, trace)
    }

    fn finish(&self, state: IterationState, mut report: SolutionReport, trace: Vec<TraceRow>) -> SolveOutcome {
        let cfg = &self.cfg;
        let grid = self.op.grid();
        let v = state.v;
        report.iters = state.iter;
        report.damping = state.damping;
        report.x_norm = v.x_norm();
        report.v_origin = v.at_origin();
        report.v_min = v.min();
        report.u_origin = v.at_origin() + cfg.poly.evaluate([0.0; 3]);
        if cfg.q > 1.0 {
            if let Ok(f) = density(&v, &cfg.poly, cfg.q) {
                report.alpha = grid.integrate_with_tail(&f).total().map(|t| t / (8.0 * PI));
            }
            if let Ok(f0) = density(&Profile::zeros(grid.clone()), &cfg.poly, cfg.q) {
                report.x_norm_bound = grid.integrate_with_tail(&f0).total().map(|t| t / (8.0 * PI));
            }
            report.tail_bound = truncation_bound(&cfg.poly, cfg.q, cfg.kernel_variant, grid);
        }
        SolveOutcome {
            profile: v,
            report,
            trace,
        }
    }
}

fn check_config(cfg: &SolveConfig) -> Result<()> {
    match validate_config(cfg) {
        Err(ConfigError::DensityNotIntegrable(_)) if cfg.q <= 1.0 => Ok(()),
        r => r.map_err(Error::from),
    }
}

/// `‖a − b‖_X` and the node where it is attained.
fn weighted_diff(a: &Profile, b: &Profile) -> (f64, usize) {
    let grid = a.grid();
    let mut best = (0.0, 0);
    for (i, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
        let d = (x - y).abs() / (1.0 + grid.radius(i));
        if d > best.0 {
            best = (d, i);
        }
    }
    best
}

/// Solves from `v₀ ≡ 0`. Configuration errors are returned as `Err`;
/// non-convergence is flagged in the report.
pub fn solve_fixed_point(cfg: &SolveConfig) -> Result<(Profile, SolutionReport)> {
    let out = FixedPointSolver::new(cfg.clone())?.solve(None);
    Ok((out.profile, out.report))
}

/// One step of an ε-continuation.
#[derive(Debug, Clone)]
pub struct ContinuationStep {
    pub eps: f64,
    pub profile: Profile,
    pub report: SolutionReport,
    pub trace: Vec<TraceRow>,
}

/// Solves for each ε in turn, warm-starting from the previous solution.
///
/// A trailing `ε = 0` is the limit problem itself; it is only attempted when
/// the warm start grows fast enough for the limit density to be integrable.
/// The sequence stops at the first step that fails to converge.
pub fn continuation_eps_to_zero(base: &SolveConfig, eps_sequence: &[f64]) -> Result<Vec<ContinuationStep>> {
    let mut cfg = base.clone();
    cfg.eps_sequence = Some(eps_sequence.to_vec());
    validate_config(&cfg)?;
    let grid = Arc::new(cfg.grid.build()?);
    let op = Arc::new(IntegralOperator::new(grid, cfg.kernel_variant));
    continuation_with_operator(base, eps_sequence, op)
}

/// [`continuation_eps_to_zero`] with prebuilt tables.
pub fn continuation_with_operator(
    base: &SolveConfig,
    eps_sequence: &[f64],
    op: Arc<IntegralOperator>,
) -> Result<Vec<ContinuationStep>> {
    let mut cfg = base.clone();
    cfg.eps_sequence = Some(eps_sequence.to_vec());
    validate_config(&cfg)?;
    let mut steps: Vec<ContinuationStep> = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let step_cfg = base.with_eps(eps);
        let prev = steps.last().map(|s| &s.profile);
        let solver = match (eps, prev) {
            (0.0, Some(start)) => {
                check_limit_decay(&step_cfg, start)?;
                FixedPointSolver::unchecked(step_cfg, op.clone())?
            }
            _ => FixedPointSolver::with_operator(step_cfg, op.clone())?,
        };
        let mut out = solver.solve(prev);
        out.report.eps = Some(eps);
        if let Some(p) = prev {
            out.report.cauchy_diff = Some(out.profile.sup_diff_within(p, 10.0));
        }
        let ok = out.report.converged;
        steps.push(ContinuationStep {
            eps,
            profile: out.profile,
            report: out.report,
            trace: out.trace,
        });
        if !ok {
            break;
        }
    }
    Ok(steps)
}

/// Checks that `(P + |v|)^-q` decays fast enough for the kernel, reading the
/// growth of `P + |v|` off the outer decade of each principal direction.
pub fn check_limit_decay(cfg: &SolveConfig, start: &Profile) -> Result<()> {
    let grid = start.grid();
    let u = start.map(|x, v| cfg.poly.evaluate(x) + v.abs());
    let need = cfg.kernel_variant.decay_threshold();
    let dirs: &[[f64; 3]] = match &**grid {
        Grid::Radial(_) => &[[1.0, 0.0, 0.0]],
        Grid::Axisymmetric(_) => &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };
    for &d in dirs {
        let r = grid.extent(d);
        let at = |t: f64| u.sample([d[0] * t, d[1] * t, d[2] * t]);
        let (Some(hi), Some(lo)) = (at(r), at(r / 10.0)) else {
            return Err(Error::GridMismatch("cannot sample the warm start".into()));
        };
        let k = (hi / lo).ln() / 10f64.ln();
        if !(k * cfg.q > need) {
            return Err(ConfigError::DensityNotIntegrable(format!(
                "warm start grows like |x|^{k:.3} along {d:?}, so the limit density decays like |x|^-{:.3}; need more than {need}",
                k * cfg.q
            ))
            .into());
        }
    }
    Ok(())
}
