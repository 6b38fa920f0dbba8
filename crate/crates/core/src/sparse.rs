//! Staged sparse families: exact verification, seeded random generation,
//! stopping-time generation from the maximal function, and JSON exchange.
//!
//! Membership is tracked on the finest cubes of the family's grid, so every
//! measure comparison is an integer count.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::{leaves_of, maximal_cubes_in, CellFunction, Cube, GridId, ModelConfig};
use crate::error::{Result, WorkbenchError};
use crate::operators::maximal_on_leaves;

/// First failed condition found by [`verify_sparse`].
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SparseViolation {
    #[error("cube {cube} does not belong to the model or to grid {grid}")]
    Foreign { cube: Cube, grid: GridId },
    #[error("stage {stage}: cubes {first} and {second} overlap")]
    Overlap { stage: usize, first: Cube, second: Cube },
    #[error("stage {stage}: cube {cube} is not inside the previous stage")]
    NotNested { stage: usize, cube: Cube },
    #[error("stage {stage}: cube {cube} has {covered} of {total} finest cubes covered by the next stage")]
    TooDense {
        stage: usize,
        cube: Cube,
        covered: usize,
        total: usize,
    },
}

impl SparseViolation {
    pub fn cube(&self) -> Cube {
        match self {
            SparseViolation::Foreign { cube, .. }
            | SparseViolation::NotNested { cube, .. }
            | SparseViolation::TooDense { cube, .. } => *cube,
            SparseViolation::Overlap { second, .. } => *second,
        }
    }
}

/// Owner of each finest cube in one stage (`usize::MAX` when uncovered).
fn stage_owner(
    stage: &[Cube],
    depth: u32,
    dim: usize,
    stage_no: usize,
) -> std::result::Result<Vec<usize>, SparseViolation> {
    let mut owner = vec![usize::MAX; 1usize << (depth as usize * dim)];
    for (pos, q) in stage.iter().enumerate() {
        for leaf in leaves_of(q, depth) {
            if owner[leaf] != usize::MAX {
                return Err(SparseViolation::Overlap {
                    stage: stage_no,
                    first: stage[owner[leaf]],
                    second: *q,
                });
            }
            owner[leaf] = pos;
        }
    }
    Ok(owner)
}

/// Check stage disjointness, nesting and the one-half condition.
pub fn verify_sparse(cfg: ModelConfig, grid: GridId, stages: &[Vec<Cube>]) -> std::result::Result<(), SparseViolation> {
    let depth = cfg.max_level();
    for stage in stages {
        for q in stage {
            if q.grid != grid || cfg.check_cube(q).is_err() {
                return Err(SparseViolation::Foreign { cube: *q, grid });
            }
        }
    }
    let owners = stages
        .iter()
        .enumerate()
        .map(|(k, s)| stage_owner(s, depth, cfg.dim(), k))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    for k in 1..stages.len() {
        for q in &stages[k] {
            if leaves_of(q, depth).iter().any(|&l| owners[k - 1][l] == usize::MAX) {
                return Err(SparseViolation::NotNested { stage: k, cube: *q });
            }
        }
    }
    for k in 0..stages.len().saturating_sub(1) {
        for q in &stages[k] {
            let leaves = leaves_of(q, depth);
            let covered = leaves.iter().filter(|&&l| owners[k + 1][l] != usize::MAX).count();
            if 2 * covered > leaves.len() {
                return Err(SparseViolation::TooDense {
                    stage: k,
                    cube: *q,
                    covered,
                    total: leaves.len(),
                });
            }
        }
    }
    Ok(())
}

/// A verified sparse family in one grid. Stages are stored with cubes in
/// lexicographic order; iteration runs stage by stage.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFamily {
    cfg: ModelConfig,
    grid: GridId,
    stages: Vec<Vec<Cube>>,
}

impl SparseFamily {
    /// Verify and wrap. Empty trailing stages are dropped.
    pub fn new(cfg: ModelConfig, grid: GridId, mut stages: Vec<Vec<Cube>>) -> Result<Self> {
        cfg.check_grid(grid)?;
        for s in stages.iter_mut() {
            s.sort();
        }
        while stages.last().is_some_and(|s| s.is_empty()) {
            stages.pop();
        }
        verify_sparse(cfg, grid, &stages).map_err(|v| WorkbenchError::NotSparse(v.to_string()))?;
        Ok(Self { cfg, grid, stages })
    }

    pub fn empty(cfg: ModelConfig, grid: GridId) -> Self {
        Self {
            cfg,
            grid,
            stages: Vec::new(),
        }
    }

    /// The family `{root}`.
    pub fn root(cfg: ModelConfig, grid: GridId) -> Self {
        Self {
            cfg,
            grid,
            stages: vec![vec![cfg.root(grid)]],
        }
    }

    pub fn config(&self) -> ModelConfig {
        self.cfg
    }

    pub fn grid(&self) -> GridId {
        self.grid
    }

    pub fn stages(&self) -> &[Vec<Cube>] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All cubes, stages ascending, lexicographic within a stage.
    pub fn cubes(&self) -> impl Iterator<Item = &Cube> {
        self.stages.iter().flatten()
    }

    /// Finest-cube indices of `E(Q) = Q \ Γ_{k+1}` for the cube at
    /// `stage`, `pos`.
    pub fn e_leaves(&self, stage: usize, pos: usize) -> Vec<usize> {
        let depth = self.cfg.max_level();
        let q = self.stages[stage][pos];
        let next: Vec<bool> = match self.stages.get(stage + 1) {
            Some(s) => {
                let mut mask = vec![false; 1usize << (depth as usize * self.cfg.dim())];
                for c in s.iter().filter(|c| q.contains(c)) {
                    for l in leaves_of(c, depth) {
                        mask[l] = true;
                    }
                }
                mask
            }
            None => Vec::new(),
        };
        leaves_of(&q, depth)
            .into_iter()
            .filter(|&l| !next.get(l).copied().unwrap_or(false))
            .collect()
    }

    /// Base cells of `E(Q)` as a mask over the model's cells.
    pub fn e_mask(&self, stage: usize, pos: usize) -> Vec<bool> {
        let mut mask = vec![false; self.cfg.cell_count()];
        let depth = self.cfg.max_level();
        for leaf in self.e_leaves(stage, pos) {
            let c = Cube::from_flat(self.grid, depth, leaf);
            self.cfg.for_each_cell(&c, |i| mask[i] = true);
        }
        mask
    }

    /// Whether every cube of the family lies in `s`.
    pub fn inside(&self, s: &Cube) -> bool {
        self.cubes().all(|q| s.contains(q))
    }

    /// The cubes accepted by `keep`, re-staged by how many kept cubes
    /// strictly contain each one. Always sparse again.
    pub fn subfamily(&self, mut keep: impl FnMut(&Cube) -> bool) -> Result<Self> {
        let kept: Vec<Cube> = self.cubes().copied().filter(|q| keep(q)).collect();
        let mut stages: Vec<Vec<Cube>> = Vec::new();
        for q in &kept {
            let d = kept.iter().filter(|r| r.strictly_contains(q)).count();
            if stages.len() <= d {
                stages.resize(d + 1, Vec::new());
            }
            stages[d].push(*q);
        }
        Self::new(self.cfg, self.grid, stages)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FamilyJson::from(self)).expect("family serializes")
    }

    pub fn from_json(cfg: ModelConfig, text: &str) -> Result<Self> {
        let raw: FamilyJson = serde_json::from_str(text).map_err(|e| WorkbenchError::Config(e.to_string()))?;
        let grid = cfg.grid(&raw.grid.shift)?;
        let mut stages = Vec::with_capacity(raw.stages.len());
        for s in raw.stages {
            let mut stage = Vec::with_capacity(s.len());
            for c in s {
                if c.j.len() != cfg.dim() || c.j.iter().any(|&j| u64::from(j) >= 1u64 << c.k.min(63)) {
                    return Err(WorkbenchError::Config(format!(
                        "cube index {:?} invalid at level {}",
                        c.j, c.k
                    )));
                }
                let mut index = [0u32; 2];
                index[..c.j.len()].copy_from_slice(&c.j);
                let cube = Cube {
                    grid,
                    level: c.k,
                    index,
                };
                cfg.check_cube(&cube)?;
                stage.push(cube);
            }
            stages.push(stage);
        }
        Self::new(cfg, grid, stages)
    }
}

impl fmt::Display for SparseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sparse family on {} with {} stages, {} cubes",
            self.grid,
            self.stages.len(),
            self.len()
        )
    }
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    shift: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct CubeJson {
    k: u32,
    j: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    grid: GridJson,
    stages: Vec<Vec<CubeJson>>,
}

impl From<&SparseFamily> for FamilyJson {
    fn from(fam: &SparseFamily) -> Self {
        let dim = fam.cfg.dim();
        FamilyJson {
            grid: GridJson {
                shift: fam.grid.shift().to_vec(),
            },
            stages: fam
                .stages
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|c| CubeJson {
                            k: c.level,
                            j: c.index[..dim].to_vec(),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

fn descendant(q: &Cube, d: u32, t: usize) -> Cube {
    let span = 1u32 << d;
    let index = match q.dim() {
        1 => [q.index[0] * span + t as u32, 0],
        _ => [
            q.index[0] * span + (t >> d) as u32,
            q.index[1] * span + (t as u32 & (span - 1)),
        ],
    };
    Cube {
        grid: q.grid,
        level: q.level + d,
        index,
    }
}

/// Seeded random sparse family below `root`, at most `depth` stages past
/// the root stage. Each stage cube picks a relative depth between 1 and 3
/// and then at most half of its descendants at that depth.
pub fn random_sparse_in(cfg: ModelConfig, root: Cube, seed: u64, depth: u32) -> Result<SparseFamily> {
    cfg.check_cube(&root)?;
    if depth > cfg.max_level() {
        return Err(WorkbenchError::LevelRange {
            level: depth,
            max: cfg.max_level(),
        });
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut stages = vec![vec![root]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for q in stages.last().expect("root stage") {
            let room = cfg.max_level() - q.level;
            if room == 0 {
                continue;
            }
            let d = rng.gen_range(1..=room.min(3));
            let total = 1usize << (d as usize * cfg.dim());
            let count = rng.gen_range(0..=total / 2);
            let mut picks = sample(&mut rng, total, count).into_vec();
            picks.sort_unstable();
            next.extend(picks.into_iter().map(|t| descendant(q, d, t)));
        }
        if next.is_empty() {
            break;
        }
        stages.push(next);
    }
    SparseFamily::new(cfg, root.grid, stages)
}

/// [`random_sparse_in`] below the root of `grid`.
pub fn random_sparse(cfg: ModelConfig, grid: GridId, seed: u64, depth: u32) -> Result<SparseFamily> {
    cfg.check_grid(grid)?;
    random_sparse_in(cfg, cfg.root(grid), seed, depth)
}

/// Default stopping ratio `2^{mn+1}`.
pub fn default_cz_ratio(m: usize, dim: usize) -> f64 {
    2f64.powi((m * dim + 1) as i32)
}

/// Stages are the maximal cubes of `{M^𝒟(g⃗) > a^l}` for every `l` from the
/// largest one whose set is the whole torus up to the largest non-empty
/// one. The result is verified; a failure is reported, never returned.
pub fn cz_sparse_from_functions(g: &[CellFunction], grid: GridId, a: f64) -> Result<SparseFamily> {
    let cfg = crate::operators::maximal::check_inputs(g)?;
    cfg.check_grid(grid)?;
    if !(a > 1.0) || !a.is_finite() {
        return Err(WorkbenchError::Domain(format!("stopping ratio {a} must exceed 1")));
    }
    let leaves = maximal_on_leaves(g, grid)?;
    let hi = leaves.iter().copied().fold(0.0f64, f64::max);
    if hi == 0.0 {
        return Ok(SparseFamily::empty(cfg, grid));
    }
    let lo = leaves.iter().copied().fold(f64::INFINITY, f64::min);
    let l_lo = largest_power_below(a, lo);
    let l_hi = largest_power_below(a, hi);
    let stages = (l_lo..=l_hi)
        .map(|l| {
            let t = a.powi(l);
            let mask: Vec<bool> = leaves.iter().map(|&m| m > t).collect();
            maximal_cubes_in(grid, cfg.max_level(), &mask)
        })
        .collect();
    SparseFamily::new(cfg, grid, stages)
}

/// Largest integer `l` with `a^l < x`, for `x > 0`.
pub(crate) fn largest_power_below(a: f64, x: f64) -> i32 {
    let mut l = (x.ln() / a.ln()).floor() as i32;
    while a.powi(l) >= x {
        l -= 1;
    }
    while a.powi(l + 1) < x {
        l += 1;
    }
    l
}
