//! Seeded generators for weights, inputs and whole experiment instances.
//!
//! Every stream is Xoshiro256** seeded through SplitMix64 from
//! `seed ^ (tag * 0x9E3779B97F4A7C15)`, so the same `(seed, tag)` gives the
//! same values on every platform.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::dyadic::{CellFunction, Cube, GridId, ModelConfig};
use crate::error::Result;
use crate::sparse::{cz_sparse_from_functions, random_sparse, SparseFamily};
use crate::weights::{ExponentSystem, WeightVector, DEFAULT_WEIGHT_FLOOR};

pub type Stream = Xoshiro256StarStar;

pub fn stream(seed: u64, tag: u64) -> Stream {
    Xoshiro256StarStar::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Values `Σ_k amp · u_Q` summed over the base-grid cubes `Q` containing each
/// cell, for levels up to `top`, with `u_Q` uniform in `[-1, 1]`.
fn cascade(cfg: ModelConfig, rng: &mut Stream, amp: f64, top: u32) -> Vec<f64> {
    let mut out = vec![0.0; cfg.cell_count()];
    let grid = cfg.base_grid();
    for k in 0..=top.min(cfg.max_level()) {
        for q in cfg.cubes_at_level(grid, k).expect("level in range") {
            let u = amp * rng.gen_range(-1.0..=1.0);
            cfg.for_each_cell(&q, |c| out[c] += u);
        }
    }
    out
}

/// Periodic distance from each cell midpoint to a random cell corner.
fn distances(cfg: ModelConfig, rng: &mut Stream) -> Vec<f64> {
    let n = cfg.resolution();
    let h = 1.0 / n as f64;
    let centre = [rng.gen_range(0..n) as f64 * h, rng.gen_range(0..n) as f64 * h];
    (0..cfg.cell_count())
        .map(|c| {
            let co = cfg.cell_coords(c);
            let mut d2 = 0.0;
            for a in 0..cfg.dim() {
                let t = ((co[a] as f64 + 0.5) * h - centre[a]).abs();
                let t = t.min(1.0 - t);
                d2 += t * t;
            }
            d2.sqrt()
        })
        .collect()
}

/// A positive weight: a multiplicative cascade, a power of the distance to
/// a point, or independent cell values, chosen by the stream.
pub fn random_weight(cfg: ModelConfig, rng: &mut Stream) -> Result<CellFunction> {
    let values: Vec<f64> = match rng.gen_range(0..3) {
        0 => {
            let amp = rng.gen_range(0.1..1.0);
            let top = rng.gen_range(2..=7);
            cascade(cfg, rng, amp, top).into_iter().map(f64::exp).collect()
        }
        1 => {
            let a = rng.gen_range(-0.6..1.5) * cfg.dim() as f64;
            distances(cfg, rng).into_iter().map(|d| d.powf(a)).collect()
        }
        _ => {
            let amp = rng.gen_range(0.1..1.5);
            (0..cfg.cell_count())
                .map(|_| (amp * rng.gen_range(-1.0f64..=1.0)).exp())
                .collect()
        }
    };
    CellFunction::new(cfg, values.into_iter().map(|x| x.max(DEFAULT_WEIGHT_FLOOR)).collect())
}

/// A non-negative input that may vanish on large parts of the model.
pub fn random_function(cfg: ModelConfig, rng: &mut Stream) -> Result<CellFunction> {
    let values: Vec<f64> = match rng.gen_range(0..4) {
        0 => {
            let grid = cfg.grids()[rng.gen_range(0..cfg.grids().len())];
            let q = random_cube(cfg, grid, rng, cfg.max_level());
            let height = rng.gen_range(0.5..4.0);
            let mut v = vec![0.0; cfg.cell_count()];
            cfg.for_each_cell(&q, |c| v[c] = height);
            v
        }
        1 => {
            let amp = rng.gen_range(0.1..1.2);
            let top = rng.gen_range(1..=6);
            cascade(cfg, rng, amp, top).into_iter().map(f64::exp).collect()
        }
        2 => {
            let zero = rng.gen_range(0.0..0.7);
            (0..cfg.cell_count())
                .map(|_| {
                    if rng.gen_bool(zero) {
                        0.0
                    } else {
                        rng.gen_range(0.0..3.0)
                    }
                })
                .collect()
        }
        _ => {
            let a = rng.gen_range(-0.4..1.0);
            distances(cfg, rng).into_iter().map(|d| d.powf(a)).collect()
        }
    };
    CellFunction::new(cfg, values)
}

/// A cube of `grid` at a level in `0..=max_level`.
pub fn random_cube(cfg: ModelConfig, grid: GridId, rng: &mut Stream, max_level: u32) -> Cube {
    let k = rng.gen_range(0..=max_level.min(cfg.max_level()));
    let side = 1u32 << k;
    let mut index = [0u32; 2];
    for slot in index.iter_mut().take(cfg.dim()) {
        *slot = rng.gen_range(0..side);
    }
    Cube { grid, level: k, index }
}

/// Two exponents in `[2.05, 5]`, so `p` lies in `(1, 2.5]`.
pub fn random_exponents(rng: &mut Stream) -> ExponentSystem {
    let p1 = rng.gen_range(2.05..5.0);
    let p2 = rng.gen_range(2.05..5.0);
    ExponentSystem::new(vec![p1, p2]).expect("exponents above one")
}

pub fn random_weight_vector(cfg: ModelConfig, exps: ExponentSystem, rng: &mut Stream) -> Result<WeightVector> {
    let weights = (0..exps.m())
        .map(|_| random_weight(cfg, rng))
        .collect::<Result<Vec<_>>>()?;
    WeightVector::new(weights, exps)
}

/// How instance families are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilySpec {
    pub random_depth: u32,
    /// When set, odd seeds use the stopping family of `f_i σ_i` with this
    /// ratio, falling back to a random family if it is not sparse.
    pub cz_ratio: Option<f64>,
}

/// One randomized experiment: weights, inputs and a sparse family.
#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub cfg: ModelConfig,
    pub wv: WeightVector,
    pub f: Vec<CellFunction>,
    pub family: SparseFamily,
    /// `"random"` or `"cz"`.
    pub family_kind: &'static str,
}

pub fn instance(cfg: ModelConfig, seed: u64, spec: FamilySpec) -> Result<Instance> {
    let mut rng = stream(seed, 1);
    let exps = random_exponents(&mut rng);
    let wv = random_weight_vector(cfg, exps, &mut rng)?;
    let f = (0..wv.m())
        .map(|_| random_function(cfg, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let grid = cfg.grids()[rng.gen_range(0..cfg.grids().len())];
    let depth = spec.random_depth.min(cfg.max_level());
    let fam_seed = rng.gen::<u64>();
    let mut family = None;
    if let (Some(a), 1) = (spec.cz_ratio, seed % 2) {
        let g = f
            .iter()
            .zip(wv.duals())
            .map(|(fi, s)| fi.mul(s))
            .collect::<Result<Vec<_>>>()?;
        if let Ok(fam) = cz_sparse_from_functions(&g, grid, a) {
            if !fam.is_empty() {
                family = Some((fam, "cz"));
            }
        }
    }
    let (family, family_kind) = match family {
        Some(x) => x,
        None => (random_sparse(cfg, grid, fam_seed, depth)?, "random"),
    };
    Ok(Instance {
        seed,
        cfg,
        wv,
        f,
        family,
        family_kind,
    })
}
