//! The ε-sweep on power weights: `w_i = x^{(1-ε)(p_i-1)}`,
//! `f_i = x^{ε-1} 1_{(0,1]}` on the segment `[0,1)` with `n = 1`, `m = 2`.
//!
//! Then `σ_i = x^{ε-1}` and `v = x^{(1-ε)(mp-1)}`; all three are built as
//! exact cell averages of the closed forms, and the norms of `f_i` are
//! closed-form integrals.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{ainfty_constant_in, multilinear_ap_constant};
use crate::dyadic::{CubeFamily, ModelConfig};
use crate::error::{Result, WorkbenchError};
use crate::operators::{r1_lower_functional, QuadratureMesh};
use crate::weights::{power_integral, power_weight_cells, ExponentSystem, WeightVector};

pub const EPS_MIN: f64 = 1.0 / 1024.0;
pub const EPS_MAX: f64 = 1.0 / 8.0;
pub const MIN_FIT_POINTS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub exponents: Vec<f64>,
    pub eps: Vec<f64>,
    pub max_level: u32,
    pub mesh: QuadratureMesh,
    /// Relative slope tolerance.
    pub tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            exponents: vec![2.2, 2.2],
            eps: (3..=10).map(|k| 0.5f64.powi(k)).collect(),
            max_level: 12,
            mesh: QuadratureMesh::default(),
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub apbar: f64,
    pub ainf_sigma: Vec<f64>,
    pub ainf_v: f64,
    pub norm_f: Vec<f64>,
    pub r1_lower: f64,
    /// Wall time spent on the row; not part of any deterministic output.
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// Within the tolerance of the target, relative.
    Near,
    /// At least the target minus the tolerance.
    AtLeast,
    /// At most the target plus the tolerance.
    AtMost,
    /// Reported only.
    Record,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub name: &'static str,
    pub slope: f64,
    pub target: f64,
    pub relation: Relation,
    /// Largest absolute residual of the log-log fit.
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub slopes: Vec<SlopeCheck>,
}

impl SweepResult {
    pub fn passed(&self) -> bool {
        self.slopes.iter().all(|s| s.pass)
    }
}

/// Least-squares line through `(x, y)`: slope, intercept and the largest
/// absolute residual.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    (slope, intercept, residual)
}

fn sweep_row(cfg: ModelConfig, exps: &ExponentSystem, eps: f64, mesh: &QuadratureMesh) -> Result<SweepRow> {
    let start = Instant::now();
    let m = exps.m() as f64;
    let p = exps.p();
    let weights = exps
        .exponents()
        .iter()
        .map(|&pi| power_weight_cells(cfg, (1.0 - eps) * (pi - 1.0)))
        .collect::<Result<Vec<_>>>()?;
    let dual = power_weight_cells(cfg, eps - 1.0)?;
    let combined = power_weight_cells(cfg, (1.0 - eps) * (m * p - 1.0))?;
    let wv = WeightVector::from_parts(weights, vec![dual; exps.m()], combined, exps.clone())?;
    let family = CubeFamily::all(cfg).segment();
    let apbar = multilinear_ap_constant(&wv, &family)?.value;
    let ainf_sigma = wv
        .duals()
        .iter()
        .map(|s| ainfty_constant_in(s, &family).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let ainf_v = ainfty_constant_in(wv.combined(), &family)?.value;
    // ∫_0^1 f_i^{p_i} w_i = ∫_0^1 x^{(ε-1)p_i + (1-ε)(p_i-1)} = ∫_0^1 x^{ε-1}.
    let norm_f = exps
        .exponents()
        .iter()
        .map(|&pi| {
            let a = (eps - 1.0) * pi + (1.0 - eps) * (pi - 1.0);
            power_integral(a, 0.0, 1.0).powf(1.0 / pi)
        })
        .collect();
    let r1_lower = r1_lower_functional(eps, exps, mesh)?.value;
    Ok(SweepRow {
        eps,
        apbar,
        ainf_sigma,
        ainf_v,
        norm_f,
        r1_lower,
        elapsed: start.elapsed(),
    })
}

/// Rows in the order of `config.eps`, then the fitted slopes against
/// `log(1/ε)`.
pub fn sharpness_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let exps = ExponentSystem::new(config.exponents.clone())?;
    if exps.m() != 2 {
        return Err(WorkbenchError::Unsupported("the sweep is bilinear".into()));
    }
    exps.require_p_above_one()?;
    if config.eps.len() < MIN_FIT_POINTS {
        return Err(WorkbenchError::Config(format!(
            "{} values of ε, at least {MIN_FIT_POINTS} needed for a fit",
            config.eps.len()
        )));
    }
    if let Some(&e) = config.eps.iter().find(|&&e| !(EPS_MIN..=EPS_MAX).contains(&e)) {
        return Err(WorkbenchError::Domain(format!("ε = {e} outside [2^-10, 2^-3]")));
    }
    if !(config.tolerance >= 0.0) {
        return Err(WorkbenchError::Config("negative slope tolerance".into()));
    }
    let cfg = ModelConfig::new(1, config.max_level)?;
    let rows = config
        .eps
        .par_iter()
        .map(|&e| sweep_row(cfg, &exps, e, &config.mesh))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| (1.0 / r.eps).ln()).collect();
    let tol = config.tolerance;
    let m = exps.m() as f64;
    let p = exps.p();
    let check = |name: &'static str, values: Vec<f64>, target: f64, relation: Relation| {
        let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let (slope, _, residual) = fit_line(&x, &y);
        let pass = match relation {
            Relation::Near => (slope - target).abs() <= tol * target,
            Relation::AtLeast => slope >= target * (1.0 - tol),
            Relation::AtMost => slope <= target * (1.0 + tol),
            Relation::Record => true,
        };
        SlopeCheck {
            name,
            slope,
            target,
            relation,
            residual,
            pass,
        }
    };
    let slopes = vec![
        check(
            "apbar",
            rows.iter().map(|r| r.apbar).collect(),
            m * p - 1.0,
            Relation::Near,
        ),
        check(
            "norm_product",
            rows.iter().map(|r| r.norm_f.iter().product()).collect(),
            1.0 / p,
            Relation::Near,
        ),
        check(
            "r1_lower",
            rows.iter().map(|r| r.r1_lower).collect(),
            m + 1.0 / p,
            Relation::AtLeast,
        ),
        check(
            "ainf_sigma1",
            rows.iter().map(|r| r.ainf_sigma[0]).collect(),
            1.0,
            Relation::AtMost,
        ),
        check(
            "ainf_sigma2",
            rows.iter().map(|r| r.ainf_sigma[1]).collect(),
            1.0,
            Relation::AtMost,
        ),
        check("ainf_v", rows.iter().map(|r| r.ainf_v).collect(), 0.0, Relation::Record),
    ];
    Ok(SweepResult { rows, slopes })
}
