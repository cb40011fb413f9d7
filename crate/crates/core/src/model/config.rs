use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::polynomial::QuadraticPolynomial;
use crate::error::ConfigError;

/// Which kernel the integral operator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    /// `|x−y| − |y|`; converges for densities decaying faster than `|y|⁻³`.
    Shifted,
    /// `|x−y|`; needs decay faster than `|y|⁻⁴`.
    Unshifted,
}

impl KernelVariant {
    /// Exponent the density must beat: `∫ |y|^m f(y) dy < ∞` needs decay faster than `|y|^{-(3+m)}`.
    pub fn decay_threshold(self) -> f64 {
        match self {
            KernelVariant::Shifted => 3.0,
            KernelVariant::Unshifted => 4.0,
        }
    }
}

/// Which coefficient of `P` the continuation parameter ε controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsTarget {
    /// ε multiplies `|x|⁴`.
    #[default]
    Quartic,
    /// ε is the `x₁²` coefficient.
    A1,
    /// ε is the coefficient of `|x|²`.
    Isotropic,
}

impl EpsTarget {
    pub fn apply(self, mut poly: QuadraticPolynomial, eps: f64) -> QuadraticPolynomial {
        match self {
            EpsTarget::Quartic => poly.eps_quartic = eps,
            EpsTarget::A1 => poly.a[0] = eps,
            EpsTarget::Isotropic => poly.a = [eps; 3],
        }
        poly
    }
}

fn default_damping() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iters() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub q: f64,
    pub poly: QuadraticPolynomial,
    pub kernel_variant: KernelVariant,
    pub grid: GridSpec,
    /// Initial damping θ of the Picard update `v ← (1−θ)v + θT(v)`.
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_tol")]
    pub tol_fixed_point: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_sequence: Option<Vec<f64>>,
    #[serde(default)]
    pub eps_target: EpsTarget,
}

impl SolveConfig {
    pub fn new(q: f64, poly: QuadraticPolynomial, kernel_variant: KernelVariant, grid: GridSpec) -> Self {
        Self {
            q,
            poly,
            kernel_variant,
            grid,
            damping: default_damping(),
            tol_fixed_point: default_tol(),
            max_iters: default_max_iters(),
            seed: 0,
            eps_sequence: None,
            eps_target: EpsTarget::Quartic,
        }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        let mut cfg = self.clone();
        cfg.poly = self.eps_target.apply(self.poly, eps);
        cfg.eps_sequence = None;
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Checks a configuration before solving.
///
/// With an `eps_sequence` every regularized polynomial is checked; a trailing
/// `ε = 0` entry is accepted here and gated later against the decay of the
/// warm start it inherits.
pub fn validate_config(cfg: &SolveConfig) -> Result<(), ConfigError> {
    let param = |m: String| Err(ConfigError::InvalidParameter(m));
    if !(cfg.q.is_finite() && cfg.q > 0.0) {
        return param(format!("q must be positive, got {}", cfg.q));
    }
    if !(cfg.tol_fixed_point.is_finite() && cfg.tol_fixed_point > 0.0) {
        return param(format!("tol_fixed_point must be positive, got {}", cfg.tol_fixed_point));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return param(format!("damping must lie in (0, 1], got {}", cfg.damping));
    }
    if cfg.max_iters == 0 {
        return param("max_iters must be at least 1".into());
    }
    cfg.grid.validate()?;
    match &cfg.eps_sequence {
        None => validate_polynomial(cfg, &cfg.poly),
        Some(seq) => {
            if seq.is_empty() {
                return param("eps_sequence is empty".into());
            }
            for (i, &eps) in seq.iter().enumerate() {
                if !(eps.is_finite() && eps >= 0.0) {
                    return param(format!("eps_sequence[{i}] = {eps} is not a non-negative number"));
                }
                if i > 0 && eps >= seq[i - 1] {
                    return param("eps_sequence must be strictly decreasing".into());
                }
                let last_zero = eps == 0.0 && i + 1 == seq.len() && i > 0;
                if !last_zero {
                    validate_polynomial(cfg, &cfg.eps_target.apply(cfg.poly, eps))?;
                } else {
                    validate_shape(cfg, &cfg.eps_target.apply(cfg.poly, eps))?;
                }
            }
            Ok(())
        }
    }
}

fn validate_shape(cfg: &SolveConfig, poly: &QuadraticPolynomial) -> Result<(), ConfigError> {
    if !poly.is_even() {
        return Err(ConfigError::OddCoefficients(poly.b));
    }
    poly.check_positive()?;
    match cfg.grid {
        GridSpec::Radial { .. } if !poly.is_radial() => Err(ConfigError::SymmetryMismatch(format!(
            "radial grid needs a₁ = a₂ = a₃, got {:?}",
            poly.a
        ))),
        GridSpec::Axisymmetric { .. } if !poly.is_axisymmetric() => Err(ConfigError::SymmetryMismatch(format!(
            "axisymmetric grid needs a₂ = a₃, got {:?}",
            poly.a
        ))),
        _ => Ok(()),
    }
}

fn validate_polynomial(cfg: &SolveConfig, poly: &QuadraticPolynomial) -> Result<(), ConfigError> {
    validate_shape(cfg, poly)?;
    let k = poly.growth_order() as f64;
    let need = cfg.kernel_variant.decay_threshold();
    if k * cfg.q <= need {
        return Err(ConfigError::DensityNotIntegrable(format!(
            "P grows like |x|^{k} so P^-q decays like |x|^-{}; the {:?} kernel needs decay faster than |x|^-{need}",
            k * cfg.q,
            cfg.kernel_variant
        )));
    }
    Ok(())
}

/// A checked-in configuration named after the result it reproduces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub description: String,
    /// False for verification-only presets.
    #[serde(default = "default_true")]
    pub solvable: bool,
    pub config: SolveConfig,
}

fn default_true() -> bool {
    true
}

pub const PRESET_NAMES: [&str; 5] = ["thm1", "thm2", "thmA-iii", "thmA-iv", "exact-q7"];

pub fn preset(name: &str) -> Result<Preset, ConfigError> {
    let text = match name {
        "thm1" => include_str!("../../presets/thm1.json"),
        "thm2" => include_str!("../../presets/thm2.json"),
        "thmA-iii" => include_str!("../../presets/thmA-iii.json"),
        "thmA-iv" => include_str!("../../presets/thmA-iv.json"),
        "exact-q7" => include_str!("../../presets/exact-q7.json"),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    serde_json::from_str(text).map_err(|e| ConfigError::InvalidParameter(format!("preset {name} is malformed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radial(q: f64, poly: QuadraticPolynomial, v: KernelVariant) -> SolveConfig {
        SolveConfig::new(q, poly, v, GridSpec::radial(50.0, 100))
    }

    #[test]
    fn integrability_gate_examples() {
        let p = QuadraticPolynomial::isotropic(1.0, 1.0);
        assert!(validate_config(&radial(2.0, p, KernelVariant::Shifted)).is_ok());
        assert!(matches!(
            validate_config(&radial(1.0, p, KernelVariant::Shifted)),
            Err(ConfigError::DensityNotIntegrable(_))
        ));
        assert!(validate_config(&radial(1.4, p, KernelVariant::Shifted)).is_err());
        assert!(validate_config(&radial(2.0, p, KernelVariant::Unshifted)).is_err());
        assert!(validate_config(&radial(2.5, p, KernelVariant::Unshifted)).is_ok());
        // The quartic regularizer rescues slow decay.
        assert!(validate_config(&radial(1.2, p.with_quartic(0.1), KernelVariant::Shifted)).is_ok());
        assert!(validate_config(&radial(5.0, QuadraticPolynomial::constant(1.0), KernelVariant::Shifted)).is_err());
    }

    #[test]
    fn rejects_non_positive_and_odd_polynomials() {
        let p = QuadraticPolynomial::isotropic(0.0, 1.0);
        assert!(matches!(
            validate_config(&radial(2.0, p, KernelVariant::Shifted)),
            Err(ConfigError::PolynomialNotPositive(_))
        ));
        let p = QuadraticPolynomial::new([1.0; 3], [0.1, 0.0, 0.0], 1.0, 0.0);
        assert!(matches!(
            validate_config(&radial(2.0, p, KernelVariant::Shifted)),
            Err(ConfigError::OddCoefficients(_))
        ));
    }

    #[test]
    fn symmetry_must_match_grid() {
        let p = QuadraticPolynomial::new([1.0, 2.0, 2.0], [0.0; 3], 1.0, 0.0);
        assert!(matches!(
            validate_config(&radial(2.0, p, KernelVariant::Shifted)),
            Err(ConfigError::SymmetryMismatch(_))
        ));
        let mut cfg = radial(2.0, p, KernelVariant::Shifted);
        cfg.grid = GridSpec::axisymmetric(10.0, 16, 10.0, 16);
        assert!(validate_config(&cfg).is_ok());
        cfg.poly.a = [1.0, 2.0, 3.0];
        assert!(validate_config(&cfg).is_err());
    }

    #[test]
    fn eps_sequence_rules() {
        let mut cfg = radial(5.0, QuadraticPolynomial::isotropic(1.0, 1.0), KernelVariant::Shifted);
        cfg.eps_target = EpsTarget::Isotropic;
        cfg.eps_sequence = Some(vec![1.0, 0.1, 0.0]);
        assert!(validate_config(&cfg).is_ok());
        cfg.eps_sequence = Some(vec![0.0]);
        assert!(validate_config(&cfg).is_err());
        cfg.eps_sequence = Some(vec![0.1, 0.3]);
        assert!(validate_config(&cfg).is_err());
        cfg.eps_sequence = Some(vec![1.0, 0.0, 0.0]);
        assert!(validate_config(&cfg).is_err());
    }

    #[test]
    fn json_uses_documented_field_names() {
        let cfg = radial(2.0, QuadraticPolynomial::isotropic(1.0, 1.0), KernelVariant::Shifted);
        let v = serde_json::to_value(&cfg).unwrap();
        for key in [
            "q",
            "poly",
            "kernel_variant",
            "grid",
            "damping",
            "tol_fixed_point",
            "max_iters",
            "seed",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["kernel_variant"], "shifted");
        let back: SolveConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, cfg);
        assert!(SolveConfig::from_json("{\"q\": 2}").is_err());
    }

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            if p.solvable {
                validate_config(&p.config).unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
        assert!(!preset("exact-q7").unwrap().solvable);
        assert!(matches!(preset("nope"), Err(ConfigError::UnknownPreset(_))));
    }
}
