//! Suprema over finite cube families: the multiple `A_P⃗` constant, the
//! Fujii–Wilson `A_∞` constant, and the weight-vector transform.

use serde::Serialize;

use crate::dyadic::{CellFunction, Cube, CubeFamily, GridId, Pyramid};
use crate::error::{Result, WorkbenchError};
use crate::weights::{ExponentSystem, WeightVector};

/// A supremum over a cube family and the cube attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantReport {
    pub value: f64,
    pub argmax: Cube,
    pub family_size: usize,
}

fn apq_from_averages(avg_v: f64, avg_sigma: impl Iterator<Item = f64>, exps: &ExponentSystem) -> f64 {
    let p = exps.p();
    avg_sigma
        .enumerate()
        .fold(avg_v, |acc, (i, s)| acc * s.powf(p / exps.exponent_conj(i)))
}

/// `avg_Q(v) · Π_i avg_Q(σ_i)^{p/p_i'}`.
pub fn apq_per_cube(wv: &WeightVector, cube: &Cube) -> Result<f64> {
    let avg_v = wv.combined().cube_average(cube)?;
    let sig = wv
        .duals()
        .iter()
        .map(|s| s.cube_average(cube))
        .collect::<Result<Vec<_>>>()?;
    Ok(apq_from_averages(avg_v, sig.into_iter(), wv.exponents()))
}

fn check_family(wv_cfg: crate::dyadic::ModelConfig, family: &CubeFamily) -> Result<()> {
    if family.config() != wv_cfg {
        return Err(WorkbenchError::ConfigMismatch(
            "cube family and weights live on different models".into(),
        ));
    }
    if family.grids().is_empty() {
        return Err(WorkbenchError::Domain("empty cube family".into()));
    }
    Ok(())
}

/// Running supremum with first-wins tie breaking in iteration order.
struct ArgMax {
    best: Option<(f64, Cube)>,
    seen: usize,
}

impl ArgMax {
    fn new() -> Self {
        Self { best: None, seen: 0 }
    }

    fn offer(&mut self, value: f64, cube: Cube) {
        self.seen += 1;
        match self.best {
            Some((v, _)) if value <= v => {}
            _ => self.best = Some((value, cube)),
        }
    }

    fn finish(self) -> Result<ConstantReport> {
        let (value, argmax) = self
            .best
            .ok_or_else(|| WorkbenchError::Domain("cube family admits no cube".into()))?;
        Ok(ConstantReport {
            value,
            argmax,
            family_size: self.seen,
        })
    }
}

/// `[w⃗]_{A_P⃗}` over a cube family. For `m = 1` this is the classical
/// `A_p` constant.
pub fn multilinear_ap_constant(wv: &WeightVector, family: &CubeFamily) -> Result<ConstantReport> {
    let cfg = wv.config();
    check_family(cfg, family)?;
    let mut best = ArgMax::new();
    for &grid in family.grids() {
        let v = Pyramid::new(wv.combined(), grid)?;
        let sig = wv
            .duals()
            .iter()
            .map(|s| Pyramid::new(s, grid))
            .collect::<Result<Vec<_>>>()?;
        for k in 0..=cfg.max_level() {
            for q in cfg.cubes_at_level(grid, k)? {
                if !family.admits(&q) {
                    continue;
                }
                let value = apq_from_averages(v.average(&q), sig.iter().map(|s| s.average(&q)), wv.exponents());
                best.offer(value, q);
            }
        }
    }
    best.finish()
}

/// `∫_Q M^𝒟(w 1_Q)` from the averages of one grid, with `M^𝒟` restricted to
/// the dyadic subcubes of `Q` (larger cubes average `w 1_Q` to at most
/// `avg_Q w`).
fn maximal_mass(avg: &Pyramid, cube: &Cube, depth: u32, running: f64) -> f64 {
    let m = running.max(avg.average(cube));
    if cube.level == depth {
        m * cube.measure()
    } else {
        cube.children().iter().map(|c| maximal_mass(avg, c, depth, m)).sum()
    }
}

/// `w(Q)^{-1} ∫_Q M^𝒟(w 1_Q)` with `M^𝒟` the dyadic maximal function of
/// `Q`'s own grid.
pub fn ainfty_per_cube(w: &CellFunction, cube: &Cube) -> Result<f64> {
    let cfg = w.config();
    cfg.check_cube(cube)?;
    let pyr = Pyramid::new(w, cube.grid)?;
    Ok(ainfty_from_pyramid(&pyr, cube, cfg.max_level()))
}

fn ainfty_from_pyramid(pyr: &Pyramid, cube: &Cube, depth: u32) -> f64 {
    maximal_mass(pyr, cube, depth, 0.0) / pyr.integral(cube)
}

fn require_positive(w: &CellFunction) -> Result<()> {
    match w.values().iter().enumerate().find(|(_, v)| **v <= 0.0) {
        Some((cell, &value)) => Err(WorkbenchError::NonPositive { cell, value }),
        None => Ok(()),
    }
}

/// `[w]_{A_∞}` over the cubes of one grid, with the grid-matched `M^𝒟`.
pub fn ainfty_constant(w: &CellFunction, grid: GridId) -> Result<ConstantReport> {
    ainfty_constant_in(w, &CubeFamily::single(w.config(), grid))
}

/// `[w]_{A_∞}` over a family: the largest per-grid constant, each grid using
/// its own dyadic maximal function.
pub fn ainfty_constant_in(w: &CellFunction, family: &CubeFamily) -> Result<ConstantReport> {
    let cfg = w.config();
    check_family(cfg, family)?;
    require_positive(w)?;
    let mut best = ArgMax::new();
    for &grid in family.grids() {
        let pyr = Pyramid::new(w, grid)?;
        for k in 0..=cfg.max_level() {
            for q in cfg.cubes_at_level(grid, k)? {
                if family.admits(&q) {
                    best.offer(ainfty_from_pyramid(&pyr, &q, cfg.max_level()), q);
                }
            }
        }
    }
    best.finish()
}

/// `w⃗^i`: slot `i` replaced by `v^{1-p'}`, exponent `p_i` replaced by `p'`.
/// Its `A_{P⃗^i}` constant equals `[w⃗]_{A_P⃗}^{p_i'/p}`, cube by cube.
pub fn transform_vector(wv: &WeightVector, i: usize) -> Result<WeightVector> {
    if i >= wv.m() {
        return Err(WorkbenchError::IndexRange { index: i, len: wv.m() });
    }
    let exps = wv.exponents();
    exps.require_p_above_one()?;
    let e = 1.0 - exps.p_conj();
    let mut weights = wv.weights().to_vec();
    weights[i] = wv.combined().map(|x| x.powf(e))?;
    WeightVector::new(weights, exps.replace(i, exps.p_conj())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::ModelConfig;

    fn cfg(l: u32) -> ModelConfig {
        ModelConfig::new(1, l).unwrap()
    }

    fn halves(c: ModelConfig, a: f64, b: f64) -> CellFunction {
        let n = c.resolution();
        CellFunction::from_fn(c, |[i, _]| if i < n / 2 { a } else { b }).unwrap()
    }

    #[test]
    fn trivial_weights_have_constant_one() {
        let c = cfg(3);
        let one = CellFunction::constant(c, 1.0).unwrap();
        let wv = WeightVector::new(
            vec![one.clone(), one.clone()],
            ExponentSystem::new(vec![3.0, 5.0]).unwrap(),
        )
        .unwrap();
        for q in CubeFamily::all(c).cubes() {
            assert!((apq_per_cube(&wv, &q).unwrap() - 1.0).abs() < 1e-14);
        }
        let r = multilinear_ap_constant(&wv, &CubeFamily::all(c)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert_eq!(r.family_size, 3 * 15);
        let a = ainfty_constant(&one, c.base_grid()).unwrap();
        assert!((a.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_a2_two_cells() {
        let c = cfg(1);
        let g = c.base_grid();
        let wv = WeightVector::new(vec![halves(c, 2.0, 0.5)], ExponentSystem::new(vec![2.0]).unwrap()).unwrap();
        let root = c.root(g);
        assert!((apq_per_cube(&wv, &root).unwrap() - 25.0 / 16.0).abs() < 1e-14);
        let left = c.cubes_at_level(g, 1).unwrap()[0];
        assert!((apq_per_cube(&wv, &left).unwrap() - 1.0).abs() < 1e-14);
        let r = multilinear_ap_constant(&wv, &CubeFamily::single(c, g)).unwrap();
        assert!((r.value - 25.0 / 16.0).abs() < 1e-14);
        assert_eq!(r.argmax, root);
        assert_eq!(r.family_size, 3);
    }

    #[test]
    fn ainfty_of_a_near_indicator() {
        let c = cfg(1);
        let w = halves(c, 4.0, 1e-12);
        let r = ainfty_constant(&w, c.base_grid()).unwrap();
        assert!((r.value - 1.5).abs() < 1e-9);
        assert_eq!(r.argmax, c.root(c.base_grid()));
    }

    #[test]
    fn ainfty_is_at_least_one() {
        let c = ModelConfig::new(2, 2).unwrap();
        let w = CellFunction::from_fn(c, |[a, b]| 1.0 + ((a * 13 + b * 7) % 9) as f64).unwrap();
        for g in c.grids() {
            for q in CubeFamily::single(c, g).cubes() {
                assert!(ainfty_per_cube(&w, &q).unwrap() >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn report_value_rechecks() {
        let c = cfg(4);
        let w1 = CellFunction::from_fn(c, |[i, _]| 0.3 + ((i * 37) % 11) as f64).unwrap();
        let w2 = CellFunction::from_fn(c, |[i, _]| 1.0 + ((i * 5) % 7) as f64).unwrap();
        let wv = WeightVector::new(vec![w1.clone(), w2], ExponentSystem::new(vec![2.5, 4.0]).unwrap()).unwrap();
        let r = multilinear_ap_constant(&wv, &CubeFamily::all(c)).unwrap();
        let again = apq_per_cube(&wv, &r.argmax).unwrap();
        assert!((r.value - again).abs() <= 1e-12 * r.value);
        let a = ainfty_constant_in(&w1, &CubeFamily::all(c)).unwrap();
        let again = ainfty_per_cube(&w1, &a.argmax).unwrap();
        assert!((a.value - again).abs() <= 1e-12 * a.value);
    }

    #[test]
    fn transform_examples() {
        let c = cfg(2);
        let one = CellFunction::constant(c, 1.0).unwrap();
        let e = ExponentSystem::new(vec![4.0, 4.0]).unwrap();
        let wv = WeightVector::new(vec![one.clone(), one.clone()], e).unwrap();
        let t = transform_vector(&wv, 1).unwrap();
        assert_eq!(t.exponents().exponents(), &[4.0, 2.0]);
        assert!(t.weights().iter().all(|w| w == &one));
        assert!(matches!(
            transform_vector(&wv, 2),
            Err(WorkbenchError::IndexRange { .. })
        ));
        // m = 1: the transform is the dual weight with exponent p'.
        let w = halves(c, 3.0, 0.25);
        let single = WeightVector::new(vec![w], ExponentSystem::new(vec![3.0]).unwrap()).unwrap();
        let t = transform_vector(&single, 0).unwrap();
        assert_eq!(t.exponents().exponents(), &[1.5]);
        for (a, b) in t.weight(0).values().iter().zip(single.dual(0).values()) {
            assert!((a - b).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn enlarging_the_family_never_decreases() {
        let c = cfg(4);
        let w = CellFunction::from_fn(c, |[i, _]| 0.2 + ((i * 29) % 13) as f64).unwrap();
        let wv = WeightVector::new(vec![w.clone()], ExponentSystem::new(vec![2.0]).unwrap()).unwrap();
        let base = multilinear_ap_constant(&wv, &CubeFamily::single(c, c.base_grid())).unwrap();
        let all = multilinear_ap_constant(&wv, &CubeFamily::all(c)).unwrap();
        assert!(all.value >= base.value);
        let a_base = ainfty_constant(&w, c.base_grid()).unwrap();
        let a_all = ainfty_constant_in(&w, &CubeFamily::all(c)).unwrap();
        assert!(a_all.value >= a_base.value);
    }
}
