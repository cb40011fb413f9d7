//! Post-solve analysis: fills the analysis fields of a [`SolutionReport`].

use crate::analysis::{
    check_hessian_decay, compute_beta, decompose_regularized, fit_growth, principal_directions, GrowthModel,
};
use crate::model::{KernelVariant, Profile, SolutionReport, SolveConfig};
use crate::operator::IntegralOperator;
use crate::verify::{integral_residual, pde_residual, pohozaev_residual, IntegralOptions, PdeOptions, Thresholds};

/// Which checks [`diagnose`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnoseOptions {
    pub residuals: bool,
    pub decomposition: bool,
    pub hessian: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            residuals: true,
            decomposition: true,
            hessian: true,
        }
    }
}

/// Runs the analysis and verification passes on a solved `v` and records the
/// results in `report`. Checks that do not apply leave their field empty and
/// add a note; nothing here fails the solve.
pub fn diagnose(
    v: &Profile,
    cfg: &SolveConfig,
    op: Option<&IntegralOperator>,
    opts: &DiagnoseOptions,
    report: &mut SolutionReport,
) {
    let q = cfg.q;
    let poly = cfg.poly;
    let u = v.plus_polynomial(&poly);
    let mut note = |what: &str, e: &dyn std::fmt::Display| report.notes.push(format!("{what}: {e}"));

    let mut beta = None;
    match compute_beta(&u, q) {
        Ok(b) => beta = Some(b),
        Err(e) => note("beta", &e),
    }

    // Growth is read off the polynomial part without the regularizing quartic.
    let mut p0 = poly;
    p0.eps_quartic = 0.0;
    let u0 = v.plus_polynomial(&p0);
    let mut fits = Vec::new();
    for d in principal_directions(u.grid()) {
        for model in [GrowthModel::Power, GrowthModel::Linear, GrowthModel::Quadratic] {
            match fit_growth(&u0, d, model) {
                Ok(f) => fits.push(f),
                Err(e) => note("growth fit", &e),
            }
        }
    }

    let mut pde = None;
    let mut integral = None;
    let mut gamma = None;
    let mut shift = 0.0;
    let mut pohozaev = None;
    if opts.residuals {
        match pde_residual(
            &u,
            q,
            &PdeOptions {
                eps_quartic: poly.eps_quartic,
                ..PdeOptions::default()
            },
        ) {
            Ok(r) => pde = Some(r.max_normalized),
            Err(e) => note("pde residual", &e),
        }
        let int_opts = IntegralOptions {
            seed: cfg.seed,
            ..IntegralOptions::default()
        };
        match integral_residual(&u, q, &poly, &int_opts) {
            Ok(r) => match cfg.kernel_variant {
                KernelVariant::Unshifted => integral = Some(r.max_rel_deviation_raw),
                KernelVariant::Shifted => {
                    integral = Some(r.max_rel_deviation);
                    gamma = Some(r.gamma);
                    if r.max_rel_deviation_raw >= Thresholds::default().integral {
                        shift = r.gamma;
                    }
                }
            },
            Err(e) => note("integral residual", &e),
        }
        if q > 4.0 {
            let mut p_eff = poly;
            p_eff.c += shift;
            match pohozaev_residual(&u, q, &p_eff) {
                Ok(r) => pohozaev = Some(r.residual),
                Err(e) => note("pohozaev", &e),
            }
        }
    }

    let mut decomposition = None;
    if opts.decomposition && beta.is_some() {
        let built;
        let op = match op {
            Some(op) => op,
            None => {
                built = IntegralOperator::new(u.grid().clone(), KernelVariant::Shifted);
                &built
            }
        };
        match decompose_regularized(&u, q, poly.eps_quartic, op) {
            Ok(d) => decomposition = Some(d),
            Err(e) => note("decomposition", &e),
        }
    }

    report.beta = beta;
    report.growth_fits = fits;
    report.pde_residual_max = pde;
    report.integral_residual_max = integral;
    report.gamma_offset = gamma;
    report.pohozaev_residual = pohozaev;
    report.decomposition = decomposition;
    if opts.hessian {
        report.hessian_decay = Some(check_hessian_decay(v, q));
    }
}
