//! Weighted strong and weak Lebesgue functionals of cell functions.

use accurate::sum::OnlineExactSum;
use accurate::traits::*;

use crate::dyadic::CellFunction;
use crate::error::{Result, WorkbenchError};

fn check(g: &CellFunction, w: &CellFunction, p: f64) -> Result<()> {
    g.check_same_model(w)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(WorkbenchError::Exponent(format!("norm exponent {p} must be in [1, ∞)")));
    }
    Ok(())
}

/// `(∫ |g|^p w)^{1/p}`.
pub fn lp_norm(g: &CellFunction, w: &CellFunction, p: f64) -> Result<f64> {
    check(g, w, p)?;
    let vol = g.config().cell_volume();
    let sum: f64 = g
        .values()
        .iter()
        .zip(w.values())
        .map(|(&x, &wx)| x.powf(p) * wx * vol)
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// `max_t t · w({|g| ≥ t})^{1/p}` over the positive values `t` taken by
/// `g`, which for a step function is `sup_α α · w({|g| > α})^{1/p}`.
///
/// Level-set masses are correctly rounded sums, so they do not depend on
/// the order in which cells are visited and grow with the set.
pub fn weak_lp_norm(g: &CellFunction, w: &CellFunction, p: f64) -> Result<f64> {
    check(g, w, p)?;
    let vol = g.config().cell_volume();
    let mut pairs: Vec<(f64, f64)> = g
        .values()
        .iter()
        .zip(w.values())
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, &wx)| (x, wx * vol))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    // Plain running sums are within n·u of the exact ones; candidates that
    // cannot reach the current best even with that margin are skipped.
    let margin = 1.0 + 2.0 * pairs.len() as f64 * f64::EPSILON + 1e-12;
    let mut exact = OnlineExactSum::zero();
    let mut rough = 0.0;
    let mut best = 0.0f64;
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == t {
            exact += pairs[i].1;
            rough += pairs[i].1;
            i += 1;
        }
        if t * (rough * margin).powf(1.0 / p) < best {
            continue;
        }
        let mass = exact.clone().sum();
        best = best.max(t * mass.powf(1.0 / p));
    }
    Ok(best)
}
