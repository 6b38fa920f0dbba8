use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use workbench_core::analysis::sweep::{EPS_MAX, EPS_MIN, MIN_FIT_POINTS};
use workbench_core::analysis::{Group, SuiteConfig, SweepConfig};
use workbench_core::operators::QuadratureMesh;
use workbench_core::ExponentSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    pub random_depth: u32,
    pub cz_ratio: Option<f64>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            random_depth: 6,
            cz_ratio: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSettings {
    pub seeds: usize,
    pub pairs_per_cube: usize,
    pub testing_level: u32,
    pub groups: Vec<Group>,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        let s = SuiteConfig::default();
        Self {
            seeds: s.seeds,
            pairs_per_cube: s.pairs_per_cube,
            testing_level: s.testing_level,
            groups: s.groups,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    #[serde(rename = "L")]
    pub max_level: u32,
    pub tolerance: f64,
    pub mesh: QuadratureMesh,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let s = SweepConfig::default();
        Self {
            max_level: s.max_level,
            tolerance: s.tolerance,
            mesh: s.mesh,
        }
    }
}

/// Everything a run reads from its JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub max_level: u32,
    /// Exponents of the sweep weights. The suites draw their own per seed.
    pub exponents: Vec<f64>,
    pub seed: u64,
    pub eps: Vec<f64>,
    pub family: FamilyConfig,
    pub suite: SuiteSettings,
    pub sweep: SweepSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SuiteConfig::default();
        let w = SweepConfig::default();
        Self {
            n: s.dim,
            max_level: s.max_level,
            exponents: w.exponents,
            seed: s.seed,
            eps: w.eps,
            family: FamilyConfig::default(),
            suite: SuiteSettings::default(),
            sweep: SweepSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            dim: self.n,
            max_level: self.max_level,
            seed: self.seed,
            seeds: self.suite.seeds,
            random_depth: self.family.random_depth,
            cz_ratio: self.family.cz_ratio,
            pairs_per_cube: self.suite.pairs_per_cube,
            testing_level: self.suite.testing_level,
            groups: self.suite.groups.clone(),
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            exponents: self.exponents.clone(),
            eps: self.eps.clone(),
            max_level: self.sweep.max_level,
            mesh: self.sweep.mesh,
            tolerance: self.sweep.tolerance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.suite().validate()?;
        workbench_core::ModelConfig::new(1, self.sweep.max_level)?;
        let exps = ExponentSystem::new(self.exponents.clone())?;
        if exps.m() != 2 {
            bail!("the sweep takes exactly two exponents, got {}", exps.m());
        }
        exps.require_p_above_one()?;
        if self.eps.len() < MIN_FIT_POINTS {
            bail!("eps needs at least {MIN_FIT_POINTS} values, got {}", self.eps.len());
        }
        if let Some(e) = self.eps.iter().find(|e| !(EPS_MIN..=EPS_MAX).contains(*e)) {
            bail!("eps value {e} outside [{EPS_MIN}, {EPS_MAX}]");
        }
        if !(self.sweep.tolerance >= 0.0) {
            bail!("sweep tolerance must be non-negative");
        }
        Ok(())
    }
}
