//! Testing constants over a seeded dictionary of normalized inputs.

use rand::Rng;
use serde::Serialize;

use crate::analysis::random::{random_cube, stream, Stream};
use crate::dyadic::{CellFunction, Cube};
use crate::error::Result;
use crate::norms::{lp_norm, weak_lp_norm};
use crate::operators::sparse_op::cube_sum_operator;
use crate::sparse::SparseFamily;
use crate::weights::WeightVector;

/// Default number of input tuples per cube.
pub const DEFAULT_PAIRS_PER_CUBE: usize = 32;

fn cube_tag(q: &Cube) -> u64 {
    let shift = q.grid.shift();
    let s = shift.iter().fold(0u64, |acc, &x| acc * 3 + u64::from(x));
    ((s * 64 + u64::from(q.level)) << 40) ^ q.flat_index() as u64
}

fn candidate(wv: &WeightVector, q: &Cube, slot: usize, rng: &mut Stream) -> Result<CellFunction> {
    let cfg = wv.config();
    let mut values = vec![0.0; cfg.cell_count()];
    match rng.gen_range(0..3) {
        0 => {
            let room = cfg.max_level() - q.level;
            let rel = random_cube(cfg, q.grid, rng, room);
            let sub = Cube {
                grid: q.grid,
                level: q.level + rel.level,
                index: [
                    (q.index[0] << rel.level) + rel.index[0],
                    (q.index[1] << rel.level) + rel.index[1],
                ],
            };
            cfg.for_each_cell(&sub, |c| values[c] = 1.0);
        }
        1 => cfg.for_each_cell(q, |c| values[c] = rng.gen_range(0.0..1.0)),
        _ => {
            // Concentrate where the dual weight is small or large.
            let t = rng.gen_range(-1.0..1.0);
            let s = wv.dual(slot);
            cfg.for_each_cell(q, |c| values[c] = s.values()[c].powf(t));
        }
    }
    CellFunction::new(cfg, values)
}

/// Input tuples supported in `q`, each function normalized in
/// `L^{p_i}(σ_i)`. The first tuple is `(1_Q, ..., 1_Q)`, normalized.
pub fn dictionary(wv: &WeightVector, q: &Cube, count: usize, seed: u64) -> Result<Vec<Vec<CellFunction>>> {
    let cfg = wv.config();
    let exps = wv.exponents();
    let mut rng = stream(seed, cube_tag(q));
    let indicator = CellFunction::indicator(cfg, q)?;
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let mut tuple = Vec::with_capacity(wv.m());
        for i in 0..wv.m() {
            let mut f = if t == 0 {
                indicator.clone()
            } else {
                candidate(wv, q, i, &mut rng)?
            };
            let mut norm = lp_norm(&f, wv.dual(i), exps.exponent(i))?;
            if !(norm > 0.0) {
                f = indicator.clone();
                norm = lp_norm(&f, wv.dual(i), exps.exponent(i))?;
            }
            tuple.push(f.scale(1.0 / norm)?);
        }
        out.push(tuple);
    }
    Ok(out)
}

/// One dictionary tuple's two quantities: the testing integral
/// `v(Q)^{-1/p'} ∫_Q A(f σ 1_Q) v` and the weak ratio
/// `‖A(f σ)‖_{L^{p,∞}(v)}`, both divided by `Π ‖f_i‖_{L^{p_i}(σ_i)}`.
pub fn tuple_ratios(wv: &WeightVector, fam: &SparseFamily, q: &Cube, tuple: &[CellFunction]) -> Result<(f64, f64)> {
    let exps = wv.exponents();
    let cfg = wv.config();
    let g = tuple
        .iter()
        .zip(wv.duals())
        .map(|(f, s)| f.mul(s))
        .collect::<Result<Vec<_>>>()?;
    let norms: f64 = tuple
        .iter()
        .enumerate()
        .map(|(i, f)| lp_norm(f, wv.dual(i), exps.exponent(i)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .product();
    let a = cube_sum_operator(fam.cubes().filter(|r| !r.is_disjoint(q)), &g)?;
    let v = wv.combined();
    let mut local = 0.0;
    cfg.for_each_cell(q, |c| local += a.values()[c] * v.values()[c]);
    local *= cfg.cell_volume();
    let vq = v.cube_integral(q)?;
    let testing = local / (vq.powf(1.0 / exps.p_conj()) * norms);
    let weak = weak_lp_norm(&a, v, exps.p())? / norms;
    Ok((testing, weak))
}

fn scan(wv: &WeightVector, fam: &SparseFamily, count: usize, seed: u64) -> Result<(f64, f64, usize)> {
    let mut t_star = 0.0f64;
    let mut w = 0.0f64;
    let mut pairs = 0;
    for q in fam.cubes() {
        for tuple in dictionary(wv, q, count, seed)? {
            let (t, wk) = tuple_ratios(wv, fam, q, &tuple)?;
            t_star = t_star.max(t);
            w = w.max(wk);
            pairs += 1;
        }
    }
    Ok((t_star, w, pairs))
}

/// `𝒯_*` over the family's cubes and `count` dictionary tuples per cube.
pub fn testing_constant(wv: &WeightVector, fam: &SparseFamily, count: usize, seed: u64) -> Result<f64> {
    wv.exponents().require_p_above_one()?;
    Ok(scan(wv, fam, count, seed)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestingReport {
    pub t_star: f64,
    /// Largest weak-norm ratio over the same tuples.
    pub w: f64,
    /// `[w⃗]_{A_P⃗}^{1/p}`.
    pub apbar_root: f64,
    pub p_conj: f64,
    /// `W / (𝒯_* + [w⃗]^{1/p})`.
    pub c: f64,
    /// `𝒯_* / (p' W)`, at most 1.
    pub easy_ratio: f64,
    pub pairs: usize,
}

pub fn testing_equiv_report(
    wv: &WeightVector,
    fam: &SparseFamily,
    count: usize,
    seed: u64,
    apbar: f64,
) -> Result<TestingReport> {
    let exps = wv.exponents();
    exps.require_p_above_one()?;
    let (t_star, w, pairs) = scan(wv, fam, count, seed)?;
    let apbar_root = apbar.powf(1.0 / exps.p());
    let p_conj = exps.p_conj();
    Ok(TestingReport {
        t_star,
        w,
        apbar_root,
        p_conj,
        c: w / (t_star + apbar_root),
        easy_ratio: if t_star == 0.0 { 0.0 } else { t_star / (p_conj * w) },
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::ModelConfig;
    use crate::weights::ExponentSystem;

    fn ones() -> (ModelConfig, WeightVector) {
        let c = ModelConfig::new(1, 4).unwrap();
        let one = CellFunction::constant(c, 1.0).unwrap();
        let wv = WeightVector::new(vec![one.clone(), one], ExponentSystem::new(vec![4.0, 4.0]).unwrap()).unwrap();
        (c, wv)
    }

    #[test]
    fn all_ones() {
        let (c, wv) = ones();
        let fam = SparseFamily::root(c, c.base_grid());
        let r = testing_equiv_report(&wv, &fam, 16, 0, 1.0).unwrap();
        assert!((r.t_star - 1.0).abs() < 1e-12);
        assert!((r.w - 1.0).abs() < 1e-12);
        assert!(r.easy_ratio <= 1.0 && r.c <= 1.0);
    }

    #[test]
    fn empty_dictionary() {
        let (c, wv) = ones();
        let fam = SparseFamily::root(c, c.base_grid());
        assert_eq!(testing_constant(&wv, &fam, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn dictionary_is_normalized_and_supported() {
        let c = ModelConfig::new(1, 5).unwrap();
        let mut rng = stream(9, 9);
        let wv =
            crate::analysis::random::random_weight_vector(c, ExponentSystem::new(vec![2.5, 3.0]).unwrap(), &mut rng)
                .unwrap();
        let q = Cube {
            grid: c.grids()[1],
            level: 2,
            index: [3, 0],
        };
        let cells = c.cells(&q);
        for tuple in dictionary(&wv, &q, 12, 4).unwrap() {
            for (i, f) in tuple.iter().enumerate() {
                let n = lp_norm(f, wv.dual(i), wv.exponents().exponent(i)).unwrap();
                assert!((n - 1.0).abs() < 1e-12);
                for (cell, &x) in f.values().iter().enumerate() {
                    assert!(x == 0.0 || cells.contains(&cell));
                }
            }
        }
        assert_eq!(dictionary(&wv, &q, 12, 4).unwrap(), dictionary(&wv, &q, 12, 4).unwrap());
    }
}
