//! Run configuration: a JSON file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tridiag_resolvent::{ClassifyParams, CoefficientSpec, ScanRegion};

use crate::Failure;

/// Operator given inline or as a path to a JSON spec file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSource {
    File(PathBuf),
    Inline(CoefficientSpec),
}

/// Settings of the `oracle` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// Side of the compared top-left block.
    pub block: usize,
    /// Largest accepted relative block error.
    pub tolerance: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            block: 8,
            tolerance: 1e-8,
        }
    }
}

/// Everything a command needs. Complex numbers are `[re, im]` arrays and
/// relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub high_precision: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub classify: ClassifyParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<ScanRegion>,
    /// Reference value of `phi(lambda)` for `pade`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Complex64>,
    /// Moments CSV for `moments`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<PathBuf>,
    #[serde(default)]
    pub oracle: OracleParams,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda: Option<Complex64>,
    pub n_max: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub high_precision: bool,
    pub phi: Option<Complex64>,
}

// Longest trace accepted from a config.
const MAX_N: usize = 1 << 20;

impl RunConfig {
    /// Reads the file, applies overrides and inlines the operator spec.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let rebase = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        if let Some(OperatorSource::File(p)) = cfg.operator.take() {
            let p = rebase(p);
            let text = fs::read_to_string(&p)
                .map_err(|e| Failure::Usage(format!("operator spec {}: {e}", p.display())))?;
            let spec: CoefficientSpec = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("operator spec {}: {e}", p.display())))?;
            cfg.operator = Some(OperatorSource::Inline(spec));
        }
        cfg.moments = cfg.moments.take().map(rebase);
        cfg.out = cfg.out.take().map(rebase);

        if overrides.lambda.is_some() {
            cfg.lambda = overrides.lambda;
        }
        if overrides.n_max.is_some() {
            cfg.n_max = overrides.n_max;
        }
        if overrides.out.is_some() {
            cfg.out = overrides.out.clone();
        }
        if overrides.workers.is_some() {
            cfg.workers = overrides.workers;
        }
        if overrides.phi.is_some() {
            cfg.phi = overrides.phi;
        }
        cfg.high_precision |= overrides.high_precision;
        if let Some(n) = cfg.n_max {
            cfg.classify.n = n;
        }
        cfg.n_max = Some(cfg.classify.n);
        cfg.validate()?;
        if let Some(m) = &cfg.moments {
            cfg.moments = Some(fs::canonicalize(m).map_err(|e| Failure::Usage(format!("{}: {e}", m.display())))?);
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::Usage(m));
        for (name, z) in [("lambda", self.lambda), ("phi", self.phi)] {
            if let Some(z) = z {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return bad(format!("{name} must be finite, got [{}, {}]", z.re, z.im));
                }
            }
        }
        let p = &self.classify;
        if p.n == 0 || p.n > MAX_N || p.escalate_n.is_some_and(|n| n > MAX_N) {
            return bad(format!("N must lie in 1..={MAX_N}"));
        }
        let positive = [
            ("classify.series.converge_tol", p.series.converge_tol),
            ("classify.series.diverge_factor", p.series.diverge_factor),
            ("classify.series.first_step_tol", p.series.first_step_tol),
            ("classify.decay.q_max", p.decay.q_max),
            ("classify.decay.rms_max", p.decay.rms_max),
            ("classify.decay.diag_growth_max", p.decay.diag_growth_max),
            ("classify.growth_min", p.growth_min),
            ("classify.spectrum_growth_max", p.spectrum_growth_max),
            ("classify.gamma_weight_min", p.gamma_weight_min),
            ("oracle.tolerance", self.oracle.tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.oracle.block == 0 {
            return bad("oracle.block must be at least 1".into());
        }
        if let Some(r) = &self.region {
            r.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            if r.nx.saturating_mul(r.ny) > 1 << 24 {
                return bad(format!("grid {}x{} is too large", r.nx, r.ny));
            }
        }
        if let Some(m) = &self.moments {
            if !m.is_file() {
                return bad(format!("moments file {} does not exist", m.display()));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<&CoefficientSpec, Failure> {
        match &self.operator {
            Some(OperatorSource::Inline(s)) => Ok(s),
            _ => Err(Failure::Usage("config has no operator".into())),
        }
    }

    pub fn lambda(&self) -> Result<Complex64, Failure> {
        self.lambda
            .ok_or_else(|| Failure::Usage("lambda is required (config \"lambda\" or --lambda RE IM)".into()))
    }

    pub fn n(&self) -> usize {
        self.classify.n
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Single-line JSON echo of the resolved configuration.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}
