//! Exponent bookkeeping, weight vectors and their dual/product weights.

use serde::{Deserialize, Serialize};

use crate::dyadic::{CellFunction, ModelConfig};
use crate::error::{Result, WorkbenchError};

/// Floor applied by [`WeightVector::clamped`].
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-12;

/// Hölder conjugate `q/(q-1)`.
pub fn conjugate(q: f64) -> f64 {
    q / (q - 1.0)
}

/// Exponents `(p_1, …, p_m)` with `1/p = Σ 1/p_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSystem {
    exps: Vec<f64>,
    p: f64,
}

impl ExponentSystem {
    pub fn new(exps: Vec<f64>) -> Result<Self> {
        if exps.is_empty() {
            return Err(WorkbenchError::Exponent("no exponents".into()));
        }
        if let Some(q) = exps.iter().find(|q| !q.is_finite() || **q <= 1.0) {
            return Err(WorkbenchError::Exponent(format!(
                "every p_i must lie in (1, ∞), got {q}"
            )));
        }
        let p = 1.0 / exps.iter().map(|q| 1.0 / q).sum::<f64>();
        Ok(Self { exps, p })
    }

    pub fn m(&self) -> usize {
        self.exps.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exps
    }

    pub fn exponent(&self, i: usize) -> f64 {
        self.exps[i]
    }

    /// `p_i' = p_i/(p_i - 1)`.
    pub fn exponent_conj(&self, i: usize) -> f64 {
        conjugate(self.exps[i])
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `p' = p/(p-1)`; meaningful only when `p > 1`.
    pub fn p_conj(&self) -> f64 {
        conjugate(self.p)
    }

    /// The sparse bounds need `p > 1`, which the per-slot check does not imply.
    pub fn require_p_above_one(&self) -> Result<()> {
        if self.p <= 1.0 {
            return Err(WorkbenchError::Unsupported(format!(
                "exponent system with p = {} ≤ 1",
                self.p
            )));
        }
        Ok(())
    }

    /// Same system with slot `i` replaced by `q`.
    pub fn replace(&self, i: usize, q: f64) -> Result<Self> {
        if i >= self.m() {
            return Err(WorkbenchError::IndexRange {
                index: i,
                len: self.m(),
            });
        }
        let mut exps = self.exps.clone();
        exps[i] = q;
        Self::new(exps)
    }
}

/// `σ = w^{1-p_i'}`, cellwise.
pub fn dual_weight(w: &CellFunction, p_i: f64) -> Result<CellFunction> {
    if !p_i.is_finite() || p_i <= 1.0 {
        return Err(WorkbenchError::Unsupported(format!(
            "dual weight needs 1 < p_i < ∞, got {p_i}"
        )));
    }
    require_positive(w)?;
    let e = 1.0 - conjugate(p_i);
    w.map(|v| v.powf(e))
}

fn require_positive(w: &CellFunction) -> Result<()> {
    match w.values().iter().enumerate().find(|(_, v)| **v <= 0.0) {
        Some((cell, &value)) => Err(WorkbenchError::NonPositive { cell, value }),
        None => Ok(()),
    }
}

/// `v = Π w_i^{p/p_i}`, cellwise, multiplied in slot order.
pub fn product_weight(weights: &[CellFunction], exps: &ExponentSystem) -> Result<CellFunction> {
    if weights.len() != exps.m() {
        return Err(WorkbenchError::Exponent(format!(
            "{} weights for {} exponents",
            weights.len(),
            exps.m()
        )));
    }
    let cfg = weights[0].config();
    let mut values = vec![1.0; cfg.cell_count()];
    for (w, &q) in weights.iter().zip(exps.exponents()) {
        weights[0].check_same_model(w)?;
        let e = exps.p() / q;
        for (acc, &x) in values.iter_mut().zip(w.values()) {
            *acc *= x.powf(e);
        }
    }
    CellFunction::new(cfg, values)
}

/// `w⃗ = (w_1, …, w_m)` together with `σ_i` and `v_w⃗`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    exps: ExponentSystem,
    weights: Vec<CellFunction>,
    duals: Vec<CellFunction>,
    combined: CellFunction,
}

impl WeightVector {
    /// Derives `σ_i` and `v` cellwise. Every `w_i` must be strictly positive.
    pub fn new(weights: Vec<CellFunction>, exps: ExponentSystem) -> Result<Self> {
        if weights.len() != exps.m() {
            return Err(WorkbenchError::Exponent(format!(
                "{} weights for {} exponents",
                weights.len(),
                exps.m()
            )));
        }
        let duals = weights
            .iter()
            .zip(exps.exponents())
            .map(|(w, &q)| dual_weight(w, q))
            .collect::<Result<Vec<_>>>()?;
        let combined = product_weight(&weights, &exps)?;
        Ok(Self {
            exps,
            weights,
            duals,
            combined,
        })
    }

    /// As [`WeightVector::new`] after raising every cell to at least `floor`.
    pub fn clamped(weights: Vec<CellFunction>, exps: ExponentSystem, floor: f64) -> Result<Self> {
        let weights = weights
            .iter()
            .map(|w| w.map(|v| v.max(floor)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights, exps)
    }

    /// Assemble from separately computed cell values.
    ///
    /// Used when `σ_i` and `v` are exact cell averages of closed-form
    /// functions: the cellwise power of a cell average is not the cell
    /// average of the power, and near a singularity the two differ by
    /// orders of magnitude.
    pub fn from_parts(
        weights: Vec<CellFunction>,
        duals: Vec<CellFunction>,
        combined: CellFunction,
        exps: ExponentSystem,
    ) -> Result<Self> {
        if weights.len() != exps.m() || duals.len() != exps.m() {
            return Err(WorkbenchError::Exponent(format!(
                "{} weights and {} duals for {} exponents",
                weights.len(),
                duals.len(),
                exps.m()
            )));
        }
        for f in weights.iter().chain(&duals) {
            combined.check_same_model(f)?;
            require_positive(f)?;
        }
        require_positive(&combined)?;
        Ok(Self {
            exps,
            weights,
            duals,
            combined,
        })
    }

    pub fn exponents(&self) -> &ExponentSystem {
        &self.exps
    }

    pub fn m(&self) -> usize {
        self.exps.m()
    }

    pub fn config(&self) -> ModelConfig {
        self.combined.config()
    }

    pub fn weight(&self, i: usize) -> &CellFunction {
        &self.weights[i]
    }

    pub fn weights(&self) -> &[CellFunction] {
        &self.weights
    }

    pub fn dual(&self, i: usize) -> &CellFunction {
        &self.duals[i]
    }

    pub fn duals(&self) -> &[CellFunction] {
        &self.duals
    }

    /// `v_w⃗`.
    pub fn combined(&self) -> &CellFunction {
        &self.combined
    }
}

/// `v_w⃗` of a weight vector.
pub fn combined_weight(wv: &WeightVector) -> CellFunction {
    wv.combined().clone()
}

/// `∫_u^v x^a dx` for `0 ≤ u < v`, `a > -1`, without cancellation when the
/// interval is short relative to `u`.
pub fn power_integral(a: f64, u: f64, v: f64) -> f64 {
    let b = a + 1.0;
    if u == 0.0 {
        v.powf(b) / b
    } else {
        u.powf(b) * (b * (v / u).ln()).exp_m1() / b
    }
}

/// Cell averages of `x^a` on `[0,1)` seen as a line segment (no wrap).
pub fn power_weight_cells(cfg: ModelConfig, a: f64) -> Result<CellFunction> {
    if cfg.dim() != 1 {
        return Err(WorkbenchError::Domain(
            "power weights are built on the one-dimensional model".into(),
        ));
    }
    if !a.is_finite() || a <= -1.0 {
        return Err(WorkbenchError::NotIntegrable(a));
    }
    let n = cfg.resolution();
    if a == 0.0 {
        return CellFunction::constant(cfg, 1.0);
    }
    let h = 1.0 / n as f64;
    let values = (0..n)
        .map(|i| power_integral(a, i as f64 * h, (i + 1) as f64 * h) * n as f64)
        .collect();
    CellFunction::new(cfg, values)
}
