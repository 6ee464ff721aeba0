//! Synthetic two-group datasets with known null status.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Result, TdError};
use crate::rng::{domain, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    /// `X = sqrt(rho)·ζ0 + sqrt(1 − rho)·ζ + μ`, one shared ζ0 per replicate.
    Normal { rho: f64 },
    /// `X ~ Gamma(k, 1)`.
    GammaIndep,
    /// `X = Γ0 + Gamma(k, 1)` with one shared `Γ0 ~ Gamma(k0, 1)` per replicate.
    GammaDep { k0: f64 },
}

impl Model {
    pub fn label(&self) -> String {
        match self {
            Model::Normal { rho } if *rho == 0.0 => "Normal".to_string(),
            Model::Normal { rho } => format!("Normal,rho={rho}"),
            Model::GammaIndep => "Gamma".to_string(),
            Model::GammaDep { .. } => "Gamma,dependent".to_string(),
        }
    }

    /// Whether tests are generated independently of each other.
    pub fn is_independent(&self) -> bool {
        matches!(self, Model::Normal { rho } if *rho == 0.0) || matches!(self, Model::GammaIndep)
    }
}

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub model: Model,
    pub m: usize,
    pub n1: usize,
    pub n0: usize,
    pub false_fraction: f64,
    /// Case means (normal) or case shapes (gamma) of the false nulls, cycled
    /// across consecutive tests.
    pub effect_cycle: Vec<f64>,
}

impl SimSpec {
    /// Normal scenario with m = 10000, 10 + 10 samples and means 1, 2, 3, 4.
    pub fn normal(rho: f64, false_fraction: f64) -> Self {
        Self {
            model: Model::Normal { rho },
            m: 10_000,
            n1: 10,
            n0: 10,
            false_fraction,
            effect_cycle: vec![1.0, 2.0, 3.0, 4.0],
        }
    }

    /// Gamma scenario with m = 10000, 10 + 10 samples and shapes 2, 3, 4, 5.
    pub fn gamma(dependent: bool, false_fraction: f64) -> Self {
        Self {
            model: if dependent {
                Model::GammaDep { k0: 4.0 }
            } else {
                Model::GammaIndep
            },
            m: 10_000,
            n1: 10,
            n0: 10,
            false_fraction,
            effect_cycle: vec![2.0, 3.0, 4.0, 5.0],
        }
    }

    /// 200 independent N(0, 1) tests with 10 + 10 samples; the last 20 have
    /// N(4, 1) cases.
    pub fn adaptive_small() -> Self {
        Self {
            model: Model::Normal { rho: 0.0 },
            m: 200,
            n1: 10,
            n0: 10,
            false_fraction: 0.1,
            effect_cycle: vec![4.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TdError::InvalidParameter(msg));
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if self.n1 < 2 || self.n0 < 2 {
            return bad(format!("need n1, n0 >= 2, got {} and {}", self.n1, self.n0));
        }
        if !(0.0..=1.0).contains(&self.false_fraction) {
            return bad(format!("false fraction must lie in [0, 1], got {}", self.false_fraction));
        }
        if self.effect_cycle.is_empty() {
            return bad("effect cycle is empty".into());
        }
        match self.model {
            Model::Normal { rho } if !(0.0..1.0).contains(&rho) => {
                return bad(format!("rho must lie in [0, 1), got {rho}"));
            }
            Model::GammaDep { k0 } if !(k0 > 0.0) => {
                return bad(format!("k0 must be positive, got {k0}"));
            }
            _ => {}
        }
        if !matches!(self.model, Model::Normal { .. }) && self.effect_cycle.iter().any(|&k| !(k > 0.0)) {
            return bad("gamma shapes must be positive".into());
        }
        Ok(())
    }

    pub fn false_nulls(&self) -> usize {
        (self.false_fraction * self.m as f64).round() as usize
    }

    /// Index of the first false null; tests `m0..m` are false nulls.
    pub fn m0(&self) -> usize {
        self.m - self.false_nulls()
    }

    pub fn label(&self) -> String {
        format!("{},{}%", self.model.label(), self.false_fraction * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub data: GroupedDataset,
    /// `true` where the null hypothesis is false.
    pub false_null: Vec<bool>,
}

/// Generates replicate `replicate` of `spec`. The same `(spec, seed,
/// replicate)` always produces the same dataset.
pub fn generate(spec: &SimSpec, seed: u64, replicate: u64) -> Result<SimulatedDataset> {
    spec.validate()?;
    match spec.model {
        Model::Normal { .. } => gen_normal(spec, seed, replicate),
        Model::GammaIndep | Model::GammaDep { .. } => gen_gamma(spec, seed, replicate),
    }
}

fn effect(spec: &SimSpec, j: usize) -> Option<f64> {
    let m0 = spec.m0();
    (j >= m0).then(|| spec.effect_cycle[(j - m0) % spec.effect_cycle.len()])
}

fn assemble(spec: &SimSpec, samples: Vec<f64>) -> Result<SimulatedDataset> {
    let n = spec.n1 + spec.n0;
    let ids = (1..=spec.m).map(|j| format!("test{j}")).collect();
    let names = (0..n)
        .map(|i| if i < spec.n1 { format!("case{}", i + 1) } else { format!("control{}", i + 1 - spec.n1) })
        .collect();
    let data = GroupedDataset::new(ids, names, samples, (0..spec.n1).collect(), (spec.n1..n).collect())?;
    let m0 = spec.m0();
    Ok(SimulatedDataset {
        data,
        false_null: (0..spec.m).map(|j| j >= m0).collect(),
    })
}

pub fn gen_normal(spec: &SimSpec, seed: u64, replicate: u64) -> Result<SimulatedDataset> {
    let Model::Normal { rho } = spec.model else {
        return Err(TdError::InvalidParameter("gen_normal needs a normal model".into()));
    };
    spec.validate()?;
    let mut rng = stream(seed, domain::DATA, replicate);
    let shared: f64 = rng.sample(StandardNormal);
    let common = rho.sqrt() * shared;
    let own = (1.0 - rho).sqrt();
    let n = spec.n1 + spec.n0;
    let mut samples = Vec::with_capacity(spec.m * n);
    for j in 0..spec.m {
        let mu = effect(spec, j).unwrap_or(0.0);
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let shift = if i < spec.n1 { mu } else { 0.0 };
            samples.push(common + own * z + shift);
        }
    }
    assemble(spec, samples)
}

pub fn gen_gamma(spec: &SimSpec, seed: u64, replicate: u64) -> Result<SimulatedDataset> {
    let shared_shape = match spec.model {
        Model::GammaIndep => None,
        Model::GammaDep { k0 } => Some(k0),
        Model::Normal { .. } => {
            return Err(TdError::InvalidParameter("gen_gamma needs a gamma model".into()));
        }
    };
    spec.validate()?;
    let gamma = |k: f64| Gamma::new(k, 1.0).map_err(|e| TdError::InvalidParameter(e.to_string()));
    let mut rng = stream(seed, domain::DATA, replicate);
    let offset = match shared_shape {
        Some(k0) => gamma(k0)?.sample(&mut rng),
        None => 0.0,
    };
    let base = gamma(1.0)?;
    let shapes = spec
        .effect_cycle
        .iter()
        .map(|&k| gamma(k))
        .collect::<Result<Vec<_>>>()?;
    let n = spec.n1 + spec.n0;
    let m0 = spec.m0();
    let mut samples = Vec::with_capacity(spec.m * n);
    for j in 0..spec.m {
        let case_dist = if j >= m0 { &shapes[(j - m0) % shapes.len()] } else { &base };
        for i in 0..n {
            let dist = if i < spec.n1 { case_dist } else { &base };
            samples.push(offset + dist.sample(&mut rng));
        }
    }
    assemble(spec, samples)
}

/// Replicate of the small adaptive-study scenario.
pub fn gen_adaptive_small(seed: u64, replicate: u64) -> Result<SimulatedDataset> {
    gen_normal(&SimSpec::adaptive_small(), seed, replicate)
}
