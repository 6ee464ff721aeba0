//! Experiment definitions read from a TOML key-value file.
//!
//! ```toml
//! title = "small check"
//! reps = 50
//! seed = 3
//! alphas = [0.05, 0.1]
//! methods = ["td-t-49", "td-ranksum-49", "storey-t"]
//!
//! [[scenario]]
//! model = "normal"
//! rho = 0.4
//! m = 2000
//! false_fraction = 0.1
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Result, TdError};
use crate::harness::{ExperimentPlan, Method};
use crate::simgen::{Model, SimSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    title: Option<String>,
    reps: usize,
    seed: u64,
    alphas: Vec<f64>,
    methods: Vec<String>,
    max_failures: Option<usize>,
    scenario: Vec<RawScenario>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    model: String,
    rho: Option<f64>,
    k0: Option<f64>,
    m: Option<usize>,
    n1: Option<usize>,
    n0: Option<usize>,
    false_fraction: Option<f64>,
    effect_cycle: Option<Vec<f64>>,
}

impl RawScenario {
    fn into_spec(self) -> Result<SimSpec> {
        let base = match self.model.as_str() {
            "normal" => SimSpec::normal(self.rho.unwrap_or(0.0), 0.1),
            "gamma" | "gamma-indep" => SimSpec::gamma(false, 0.1),
            "gamma-dep" => {
                let mut s = SimSpec::gamma(true, 0.1);
                if let Some(k0) = self.k0 {
                    s.model = Model::GammaDep { k0 };
                }
                s
            }
            other => return Err(TdError::InvalidParameter(format!("unknown model {other:?}"))),
        };
        let spec = SimSpec {
            m: self.m.unwrap_or(base.m),
            n1: self.n1.unwrap_or(base.n1),
            n0: self.n0.unwrap_or(base.n0),
            false_fraction: self.false_fraction.unwrap_or(base.false_fraction),
            effect_cycle: self.effect_cycle.unwrap_or(base.effect_cycle),
            model: base.model,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A titled list of experiment plans.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub title: String,
    pub plans: Vec<ExperimentPlan>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| TdError::InvalidParameter(e.to_string()))?;
    let methods = raw
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    if raw.scenario.is_empty() {
        return Err(TdError::InvalidParameter("no [[scenario]] tables".into()));
    }
    let plans = raw
        .scenario
        .into_iter()
        .map(|s| {
            let mut plan = ExperimentPlan::new(s.into_spec()?, methods.clone(), raw.alphas.clone(), raw.reps, raw.seed);
            if let Some(f) = raw.max_failures {
                plan.max_failures = f;
            }
            plan.validate()?;
            Ok(plan)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentConfig {
        title: raw.title.unwrap_or_else(|| "Experiments".into()),
        plans,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| TdError::io(path, e))?;
    parse_config(&text).map_err(|e| TdError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
title = "small check"
reps = 50
seed = 3
alphas = [0.05, 0.1]
methods = ["td-t-49", "td-ranksum-49", "storey-t"]

[[scenario]]
model = "normal"
rho = 0.4
m = 2000
false_fraction = 0.1

[[scenario]]
model = "gamma-dep"
k0 = 2.0
m = 500
"#;

    #[test]
    fn parses_example() {
        let c = parse_config(EXAMPLE).unwrap();
        assert_eq!(c.title, "small check");
        assert_eq!(c.plans.len(), 2);
        assert_eq!(c.plans[0].spec.model, Model::Normal { rho: 0.4 });
        assert_eq!(c.plans[0].spec.m, 2000);
        assert_eq!(c.plans[0].methods.len(), 3);
        assert_eq!(c.plans[1].spec.model, Model::GammaDep { k0: 2.0 });
        assert_eq!(c.plans[1].spec.effect_cycle, vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(c.plans[1].reps, 50);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_config("reps = 1").is_err());
        let unknown_key = EXAMPLE.replace("rho = 0.4", "rho = 0.4\nfoo = 1");
        assert!(parse_config(&unknown_key).is_err());
        let bad_method = EXAMPLE.replace("storey-t", "storey-x");
        assert!(parse_config(&bad_method).is_err());
        let bad_rho = EXAMPLE.replace("rho = 0.4", "rho = 1.5");
        assert!(parse_config(&bad_rho).is_err());
        let one_rep = EXAMPLE.replace("reps = 50", "reps = 1");
        assert!(parse_config(&one_rep).is_err());
    }
}
