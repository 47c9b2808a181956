use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// On-disk config. Every field is optional so that a file can carry any
/// subset; command-line flags override file values field by field.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub phase: Option<String>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub l: Option<f64>,
    pub r_list: Option<Vec<f64>>,
    pub t_max: Option<f64>,
    pub nt: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub s: Option<f64>,
    pub eps: Option<f64>,
    pub k_max: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub force: Option<bool>,
    pub tolerances: Option<BTreeMap<String, f64>>,
}

impl ExperimentConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("config schema violation: {e}"))
    }

    /// Overlay `self` (higher precedence) onto `base`.
    pub fn merged_over(self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.experiment.or(base.experiment),
            phase: self.phase.or(base.phase),
            dim: self.dim.or(base.dim),
            n: self.n.or(base.n),
            l: self.l.or(base.l),
            r_list: self.r_list.or(base.r_list),
            t_max: self.t_max.or(base.t_max),
            nt: self.nt.or(base.nt),
            restarts: self.restarts.or(base.restarts),
            seed: self.seed.or(base.seed),
            mode: self.mode.or(base.mode),
            s: self.s.or(base.s),
            eps: self.eps.or(base.eps),
            k_max: self.k_max.or(base.k_max),
            out_dir: self.out_dir.or(base.out_dir),
            force: self.force.or(base.force),
            tolerances: self.tolerances.or(base.tolerances),
        }
    }
}

/// Fully resolved parameters, echoed verbatim into every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub experiment: String,
    pub phase: String,
    pub dim: usize,
    pub mode: String,
    pub r_list: Vec<f64>,
    pub t_max: f64,
    pub restarts: usize,
    pub seed: u64,
    pub s: f64,
    pub eps: f64,
    pub k_max: usize,
    pub n_override: Option<usize>,
    pub l_override: Option<f64>,
    pub nt_override: Option<usize>,
    pub force: bool,
    pub tolerances: BTreeMap<String, f64>,
}

pub fn resolve(experiment: &str, cfg: &ExperimentConfig) -> Result<ResolvedConfig, String> {
    let needs_phase = matches!(
        experiment,
        "scaling" | "transference" | "lp-summation" | "convergence"
    );
    let phase = match (&cfg.phase, needs_phase) {
        (Some(p), _) => p.clone(),
        (None, false) => "schrodinger".to_string(),
        (None, true) => return Err(format!("config schema violation: `{experiment}` requires `phase`")),
    };
    let mode = cfg.mode.clone().unwrap_or_else(|| "local".to_string());
    if mode != "local" && mode != "global" {
        return Err(format!("config schema violation: unknown mode `{mode}`"));
    }
    // the cubic phase needs a much larger torus per radius, so its default
    // ladder stops one rung earlier
    let default_r = match (experiment, phase.as_str()) {
        ("scaling" | "transference", "airy") => vec![4.0, 8.0, 16.0, 32.0],
        ("scaling" | "transference", _) => vec![4.0, 8.0, 16.0, 32.0, 64.0],
        _ => vec![4.0, 8.0, 16.0, 32.0],
    };
    Ok(ResolvedConfig {
        experiment: experiment.to_string(),
        phase,
        dim: cfg.dim.unwrap_or(1),
        mode,
        r_list: cfg.r_list.clone().unwrap_or(default_r),
        t_max: cfg.t_max.unwrap_or(1.0),
        restarts: cfg.restarts.unwrap_or(4),
        seed: cfg.seed.unwrap_or(1),
        s: cfg.s.unwrap_or(0.25),
        eps: cfg.eps.unwrap_or(0.2),
        k_max: cfg.k_max.unwrap_or(6),
        n_override: cfg.n,
        l_override: cfg.l,
        nt_override: cfg.nt,
        force: cfg.force.unwrap_or(false),
        tolerances: cfg.tolerances.clone().unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"phse": "wave"}"#);
        assert!(err.is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = ExperimentConfig {
            phase: Some("wave".into()),
            seed: Some(3),
            ..Default::default()
        };
        let flags = ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        };
        let merged = flags.merged_over(file);
        assert_eq!(merged.phase.as_deref(), Some("wave"));
        assert_eq!(merged.seed, Some(9));
    }

    #[test]
    fn scaling_requires_phase() {
        let cfg = ExperimentConfig::default();
        assert!(resolve("scaling", &cfg).is_err());
        assert!(resolve("verify", &cfg).is_ok());
    }
}
