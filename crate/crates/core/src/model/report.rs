use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::KernelVariant;
use crate::analysis::{Decomposition, GrowthFit, HessianDecay};
use crate::error::Result;

/// Diagnostics of one fixed-point solve, filled in stages: the solver sets the
/// iteration fields, [`crate::diagnostics::diagnose`] the analysis fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub q: f64,
    pub kernel_variant: KernelVariant,
    pub eps: Option<f64>,
    pub converged: bool,
    /// Set when the iteration was abandoned, with the reason.
    pub diverged: Option<String>,
    pub iters: usize,
    /// Last undamped update `‖T(v) − v‖_X`, relative to `‖T(v)‖_X`.
    pub final_residual: f64,
    pub damping: f64,
    /// `(1/8π)∫(P + v)^-q`, tail included.
    pub alpha: Option<f64>,
    /// `‖v‖_X` of the returned profile.
    pub x_norm: f64,
    /// `(1/8π)∫P^-q` plus its tail, the a priori bound on every iterate.
    pub x_norm_bound: Option<f64>,
    /// Upper bound on the part of the operator lost by truncating the domain.
    pub tail_bound: Option<f64>,
    pub v_origin: f64,
    pub v_min: f64,
    pub u_origin: f64,
    pub beta: Option<f64>,
    pub growth_fits: Vec<GrowthFit>,
    pub pohozaev_residual: Option<f64>,
    pub pde_residual_max: Option<f64>,
    pub integral_residual_max: Option<f64>,
    pub gamma_offset: Option<f64>,
    pub decomposition: Option<Decomposition>,
    pub hessian_decay: Option<HessianDecay>,
    /// Sup over `|x| ≤ 10` of the change from the previous continuation step.
    pub cauchy_diff: Option<f64>,
    pub notes: Vec<String>,
}

impl SolutionReport {
    pub fn new(q: f64, kernel_variant: KernelVariant) -> Self {
        Self {
            q,
            kernel_variant,
            eps: None,
            converged: false,
            diverged: None,
            iters: 0,
            final_residual: f64::NAN,
            damping: 1.0,
            alpha: None,
            x_norm: 0.0,
            x_norm_bound: None,
            tail_bound: None,
            v_origin: 0.0,
            v_min: 0.0,
            u_origin: f64::NAN,
            beta: None,
            growth_fits: Vec::new(),
            pohozaev_residual: None,
            pde_residual_max: None,
            integral_residual_max: None,
            gamma_offset: None,
            decomposition: None,
            hessian_decay: None,
            cauchy_diff: None,
            notes: Vec::new(),
        }
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub diff_xnorm: f64,
    pub alpha_estimate: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["iter", "diff_xnorm", "alpha_estimate"])?;
    for r in rows {
        wr.write_record([
            r.iter.to_string(),
            r.diff_xnorm.to_string(),
            r.alpha_estimate.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Rounds a float to 12 significant digits so reports are stable across
/// platforms and summation orders that differ in the last bits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to 12 significant digits.
pub fn to_report_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-1.0e-300), -1.0e-300);
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    fn report_json_is_deterministic() {
        let mut r = SolutionReport::new(2.0, KernelVariant::Shifted);
        r.alpha = Some(0.1 + 0.2);
        let a = to_report_json(&r).unwrap();
        r.alpha = Some(0.30000000000000004 - 1e-17);
        assert_eq!(a, to_report_json(&r).unwrap());
        assert!(a.contains("\"alpha\": 0.3"));
    }

    #[test]
    fn trace_has_header() {
        let mut buf = Vec::new();
        write_trace_csv(
            &[TraceRow {
                iter: 1,
                diff_xnorm: 0.5,
                alpha_estimate: 0.25,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,diff_xnorm,alpha_estimate\n1,0.5,0.25\n"
        );
    }
}
