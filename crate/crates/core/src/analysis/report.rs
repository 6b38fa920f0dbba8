//! Inequality reports for the strong and weak sparse bounds.

use serde::Serialize;

use crate::constants::{ainfty_constant_in, multilinear_ap_constant};
use crate::dyadic::{CellFunction, CubeFamily};
use crate::error::Result;
use crate::norms::{lp_norm, weak_lp_norm};
use crate::operators::sparse_operator;
use crate::sparse::SparseFamily;
use crate::weights::{ExponentSystem, WeightVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Strong,
    Weak,
}

impl ReportKind {
    pub fn name(self) -> &'static str {
        match self {
            ReportKind::Strong => "strong",
            ReportKind::Weak => "weak",
        }
    }
}

/// Weight constants entering the right-hand sides, each a supremum over all
/// cubes of all grids.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightConstants {
    pub apbar: f64,
    pub ainfty_v: f64,
    pub ainfty_sigma: Vec<f64>,
}

pub fn weight_constants(wv: &WeightVector) -> Result<WeightConstants> {
    let fam = CubeFamily::all(wv.config());
    Ok(WeightConstants {
        apbar: multilinear_ap_constant(wv, &fam)?.value,
        ainfty_v: ainfty_constant_in(wv.combined(), &fam)?.value,
        ainfty_sigma: wv
            .duals()
            .iter()
            .map(|s| ainfty_constant_in(s, &fam).map(|r| r.value))
            .collect::<Result<_>>()?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhsFactors {
    pub apbar: f64,
    pub ainfty_v: f64,
    pub ainfty_sigma: Vec<f64>,
    /// `‖f_i‖_{L^{p_i}(σ_i)}`, the norms used in the bound.
    pub norm_sigma: Vec<f64>,
    /// `‖f_i σ_i‖_{L^{p_i}(w_i)}`, the same quantities computed through the
    /// weights; equal to `norm_sigma` up to rounding.
    pub norm_w: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub kind: ReportKind,
    pub lhs: f64,
    pub factors: RhsFactors,
    pub rhs: f64,
    /// `lhs / rhs`, and 0 when `lhs` is 0.
    pub ratio: f64,
    pub seed: Option<u64>,
    pub family: String,
}

/// Strong: `[w]^{1/p} (Π[σ_i]^{1/p_i} + [v]^{1/p'} Σ_{i'} Π_{i≠i'}[σ_i]^{1/p_i}) Π‖f_i‖`.
/// Weak: `[w]^{1/p} [v]^{1/p'} Σ_{i'} Π_{i≠i'}[σ_i]^{1/p_i} Π‖f_i‖`.
pub fn assemble(kind: ReportKind, exps: &ExponentSystem, f: &RhsFactors) -> f64 {
    let m = exps.m();
    let s: Vec<f64> = (0..m).map(|i| f.ainfty_sigma[i].powf(1.0 / exps.exponent(i))).collect();
    let all: f64 = s.iter().product();
    let leave_one_out: f64 = (0..m)
        .map(|skip| (0..m).filter(|&i| i != skip).map(|i| s[i]).product::<f64>())
        .sum();
    let v = f.ainfty_v.powf(1.0 / exps.p_conj());
    let bracket = match kind {
        ReportKind::Strong => all + v * leave_one_out,
        ReportKind::Weak => v * leave_one_out,
    };
    let norms: f64 = f.norm_sigma.iter().product();
    f.apbar.powf(1.0 / exps.p()) * bracket * norms
}

impl InequalityReport {
    /// The right-hand side recomputed from the stored factors.
    pub fn reassembled(&self, exps: &ExponentSystem) -> f64 {
        assemble(self.kind, exps, &self.factors)
    }
}

/// The sparse operator applied to `f_i σ_i`.
pub fn weighted_operator(wv: &WeightVector, f: &[CellFunction], fam: &SparseFamily) -> Result<CellFunction> {
    let g = f
        .iter()
        .zip(wv.duals())
        .map(|(fi, s)| fi.mul(s))
        .collect::<Result<Vec<_>>>()?;
    sparse_operator(fam, &g)
}

/// Both reports from one operator evaluation and one set of constants.
pub fn reports_with(
    wv: &WeightVector,
    f: &[CellFunction],
    fam: &SparseFamily,
    consts: &WeightConstants,
    seed: Option<u64>,
) -> Result<[InequalityReport; 2]> {
    let exps = wv.exponents();
    exps.require_p_above_one()?;
    let a = weighted_operator(wv, f, fam)?;
    let p = exps.p();
    let mut norm_sigma = Vec::with_capacity(wv.m());
    let mut norm_w = Vec::with_capacity(wv.m());
    for (i, fi) in f.iter().enumerate() {
        let pi = exps.exponent(i);
        norm_sigma.push(lp_norm(fi, wv.dual(i), pi)?);
        norm_w.push(lp_norm(&fi.mul(wv.dual(i))?, wv.weight(i), pi)?);
    }
    let factors = RhsFactors {
        apbar: consts.apbar,
        ainfty_v: consts.ainfty_v,
        ainfty_sigma: consts.ainfty_sigma.clone(),
        norm_sigma,
        norm_w,
    };
    let family = fam.to_string();
    let build = |kind: ReportKind, lhs: f64| {
        let rhs = assemble(kind, exps, &factors);
        InequalityReport {
            kind,
            lhs,
            factors: factors.clone(),
            rhs,
            ratio: if lhs == 0.0 { 0.0 } else { lhs / rhs },
            seed,
            family: family.clone(),
        }
    };
    Ok([
        build(ReportKind::Strong, lp_norm(&a, wv.combined(), p)?),
        build(ReportKind::Weak, weak_lp_norm(&a, wv.combined(), p)?),
    ])
}

pub fn strong_report(wv: &WeightVector, f: &[CellFunction], fam: &SparseFamily) -> Result<InequalityReport> {
    let consts = weight_constants(wv)?;
    let [strong, _] = reports_with(wv, f, fam, &consts, None)?;
    Ok(strong)
}

pub fn weak_report(wv: &WeightVector, f: &[CellFunction], fam: &SparseFamily) -> Result<InequalityReport> {
    let consts = weight_constants(wv)?;
    let [_, weak] = reports_with(wv, f, fam, &consts, None)?;
    Ok(weak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::ModelConfig;

    fn ones(p: f64) -> (ModelConfig, WeightVector, Vec<CellFunction>) {
        let c = ModelConfig::new(1, 3).unwrap();
        let one = CellFunction::constant(c, 1.0).unwrap();
        let wv = WeightVector::new(vec![one.clone(), one.clone()], ExponentSystem::new(vec![p, p]).unwrap()).unwrap();
        (c, wv, vec![one.clone(), one])
    }

    #[test]
    fn trivial_instance() {
        let (c, wv, f) = ones(4.0);
        let fam = SparseFamily::root(c, c.base_grid());
        let s = strong_report(&wv, &f, &fam).unwrap();
        assert!((s.lhs - 1.0).abs() < 1e-14);
        assert!((s.rhs - 3.0).abs() < 1e-14);
        assert!((s.ratio - 1.0 / 3.0).abs() < 1e-14);
        let w = weak_report(&wv, &f, &fam).unwrap();
        assert!((w.lhs - 1.0).abs() < 1e-14);
        assert!((w.rhs - 2.0).abs() < 1e-14);
        assert_eq!(s.reassembled(wv.exponents()), s.rhs);
    }

    #[test]
    fn zero_inputs() {
        let (c, wv, _) = ones(4.0);
        let z = vec![CellFunction::zeros(c), CellFunction::constant(c, 1.0).unwrap()];
        let s = strong_report(&wv, &z, &SparseFamily::root(c, c.base_grid())).unwrap();
        assert_eq!((s.lhs, s.ratio), (0.0, 0.0));
    }

    #[test]
    fn p_at_most_one_is_unsupported() {
        let (c, _, f) = ones(4.0);
        let one = CellFunction::constant(c, 1.0).unwrap();
        let wv = WeightVector::new(vec![one.clone(), one], ExponentSystem::new(vec![1.5, 1.5]).unwrap()).unwrap();
        assert!(strong_report(&wv, &f, &SparseFamily::root(c, c.base_grid())).is_err());
    }
}
