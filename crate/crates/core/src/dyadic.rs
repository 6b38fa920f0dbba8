//! The finite dyadic model.
//!
//! The domain is the periodic unit cube `[0,1)^n` (n = 1 or 2) cut into
//! `N^n` base cells with `N = 3 * 2^L`. A grid is the standard dyadic grid
//! translated by `s/3` with `s` in `{0,1,2}^n`; the translate is the same at
//! every level, so cubes of one grid are nested or disjoint. Since `1/3` is
//! a whole number of cells, every cube of every grid at every level
//! `0..=L` is an exact union of base cells.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;
/// Largest supported dyadic depth.
pub const MAX_LEVEL: u32 = 12;

/// Dimension and depth of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelConfig {
    dim: usize,
    max_level: u32,
}

impl ModelConfig {
    pub fn new(dim: usize, max_level: u32) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(WorkbenchError::Config(format!("dimension {dim} not in {{1, 2}}")));
        }
        if max_level == 0 || max_level > MAX_LEVEL {
            return Err(WorkbenchError::Config(format!(
                "depth {max_level} not in [1, {MAX_LEVEL}]"
            )));
        }
        Ok(Self { dim, max_level })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// Base cells per axis, `3 * 2^L`.
    pub fn resolution(&self) -> usize {
        3 << self.max_level
    }

    pub fn cell_count(&self) -> usize {
        self.resolution().pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        1.0 / self.cell_count() as f64
    }

    /// All `3^n` third-shifted grids, in lexicographic shift order.
    pub fn grids(&self) -> Vec<GridId> {
        let mut out = Vec::new();
        match self.dim {
            1 => {
                for s in 0..3 {
                    out.push(GridId::new_unchecked(1, [s, 0]));
                }
            }
            _ => {
                for s0 in 0..3 {
                    for s1 in 0..3 {
                        out.push(GridId::new_unchecked(2, [s0, s1]));
                    }
                }
            }
        }
        out
    }

    /// The unshifted grid.
    pub fn base_grid(&self) -> GridId {
        GridId::new_unchecked(self.dim as u8, [0, 0])
    }

    pub fn grid(&self, shift: &[u8]) -> Result<GridId> {
        if shift.len() != self.dim || shift.iter().any(|&s| s > 2) {
            return Err(WorkbenchError::Config(format!(
                "shift {shift:?} is not a vector in {{0,1,2}}^{}",
                self.dim
            )));
        }
        let mut s = [0u8; MAX_DIM];
        s[..shift.len()].copy_from_slice(shift);
        Ok(GridId::new_unchecked(self.dim as u8, s))
    }

    /// The level-0 cube of a grid (the whole torus).
    pub fn root(&self, grid: GridId) -> Cube {
        Cube {
            grid,
            level: 0,
            index: [0; MAX_DIM],
        }
    }

    pub fn check_grid(&self, grid: GridId) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(WorkbenchError::ConfigMismatch(format!(
                "grid of dimension {} used in a {}-dimensional model",
                grid.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn check_cube(&self, cube: &Cube) -> Result<()> {
        self.check_grid(cube.grid)?;
        if cube.level > self.max_level {
            return Err(WorkbenchError::ConfigMismatch(format!(
                "cube {cube} is deeper than the model depth {}",
                self.max_level
            )));
        }
        Ok(())
    }

    /// The `2^{kn}` cubes of `grid` at level `k`, in lexicographic index order.
    pub fn cubes_at_level(&self, grid: GridId, level: u32) -> Result<Vec<Cube>> {
        self.check_grid(grid)?;
        if level > self.max_level {
            return Err(WorkbenchError::LevelRange {
                level,
                max: self.max_level,
            });
        }
        Ok(level_cubes(grid, level))
    }

    /// The `2^n` dyadic children of `cube`.
    pub fn children(&self, cube: &Cube) -> Result<Vec<Cube>> {
        self.check_cube(cube)?;
        if cube.level >= self.max_level {
            return Err(WorkbenchError::MaxDepth(*cube));
        }
        Ok(cube.children())
    }

    /// Width of `cube` in base cells along each axis.
    pub fn cells_per_side(&self, cube: &Cube) -> usize {
        3 << (self.max_level - cube.level)
    }

    /// First base cell of `cube` along `axis` (before wrapping).
    pub fn axis_start(&self, cube: &Cube, axis: usize) -> usize {
        let n = self.resolution();
        let shift = cube.grid.shift[axis] as usize;
        (shift << self.max_level) % n + cube.index[axis] as usize * self.cells_per_side(cube)
    }

    /// Cell ranges covered by `cube` along `axis`, in ascending order; at most
    /// two when the cube wraps around the torus.
    pub fn axis_ranges(&self, cube: &Cube, axis: usize) -> AxisRanges {
        let n = self.resolution();
        let start = self.axis_start(cube, axis) % n;
        let width = self.cells_per_side(cube);
        if start + width <= n {
            AxisRanges {
                ranges: [start..start + width, 0..0],
                len: 1,
            }
        } else {
            AxisRanges {
                ranges: [0..start + width - n, start..n],
                len: 2,
            }
        }
    }

    /// Whether `cube` crosses the periodic seam on some axis.
    pub fn wraps(&self, cube: &Cube) -> bool {
        (0..self.dim).any(|a| self.axis_ranges(cube, a).len == 2)
    }

    /// Visit the base cells of `cube` in ascending linear index order.
    pub fn for_each_cell(&self, cube: &Cube, mut visit: impl FnMut(usize)) {
        let n = self.resolution();
        match self.dim {
            1 => {
                for r in self.axis_ranges(cube, 0).iter() {
                    r.clone().for_each(&mut visit);
                }
            }
            _ => {
                let rows = self.axis_ranges(cube, 0);
                let cols = self.axis_ranges(cube, 1);
                for r in rows.iter() {
                    for i0 in r.clone() {
                        for c in cols.iter() {
                            for i1 in c.clone() {
                                visit(i0 * n + i1);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Base cells of `cube`, ascending.
    pub fn cells(&self, cube: &Cube) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cells_per_side(cube).pow(self.dim as u32));
        self.for_each_cell(cube, |c| out.push(c));
        out
    }

    pub fn cell_coords(&self, cell: usize) -> [usize; MAX_DIM] {
        let n = self.resolution();
        match self.dim {
            1 => [cell, 0],
            _ => [cell / n, cell % n],
        }
    }

    pub fn cell_index(&self, coords: [usize; MAX_DIM]) -> usize {
        match self.dim {
            1 => coords[0],
            _ => coords[0] * self.resolution() + coords[1],
        }
    }

    /// The cube of `grid` at `level` that contains base cell `cell`.
    pub fn cube_containing(&self, grid: GridId, level: u32, cell: usize) -> Cube {
        let n = self.resolution();
        let width = 3usize << (self.max_level - level);
        let coords = self.cell_coords(cell);
        let mut index = [0u32; MAX_DIM];
        for a in 0..self.dim {
            let origin = (grid.shift[a] as usize) << self.max_level;
            let offset = (coords[a] + n - origin % n) % n;
            index[a] = (offset / width) as u32;
        }
        Cube { grid, level, index }
    }

    /// Left corner of `cube` in `[0,1)^n`.
    pub fn corner(&self, cube: &Cube) -> [f64; MAX_DIM] {
        let n = self.resolution();
        let mut out = [0.0; MAX_DIM];
        for (a, slot) in out.iter_mut().enumerate().take(self.dim) {
            *slot = (self.axis_start(cube, a) % n) as f64 / n as f64;
        }
        out
    }
}

/// Up to two ascending cell ranges along one axis.
#[derive(Clone, Debug)]
pub struct AxisRanges {
    ranges: [Range<usize>; 2],
    len: usize,
}

impl AxisRanges {
    pub fn iter(&self) -> impl Iterator<Item = &Range<usize>> {
        self.ranges[..self.len].iter()
    }
}

fn level_cubes(grid: GridId, level: u32) -> Vec<Cube> {
    let side = 1u32 << level;
    let mut out = Vec::with_capacity((side as usize).pow(grid.dim() as u32));
    match grid.dim() {
        1 => {
            for j in 0..side {
                out.push(Cube {
                    grid,
                    level,
                    index: [j, 0],
                });
            }
        }
        _ => {
            for j0 in 0..side {
                for j1 in 0..side {
                    out.push(Cube {
                        grid,
                        level,
                        index: [j0, j1],
                    });
                }
            }
        }
    }
    out
}

/// Shift vector `s` in `{0,1,2}^n`; the grid's cubes are
/// `s/3 + 2^{-k}(j + [0,1)^n)` modulo 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridId {
    dim: u8,
    shift: [u8; MAX_DIM],
}

impl GridId {
    fn new_unchecked(dim: u8, shift: [u8; MAX_DIM]) -> Self {
        Self { dim, shift }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn shift(&self) -> &[u8] {
        &self.shift[..self.dim as usize]
    }
}

impl fmt::Display for GridId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.shift())
    }
}

/// A dyadic cube: grid, level `k` and integer index `j` with `0 <= j_a < 2^k`.
///
/// The derived ordering is lexicographic in (grid, level, index) and is the
/// tie-breaking order for every supremum in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub grid: GridId,
    pub level: u32,
    pub index: [u32; MAX_DIM],
}

impl Cube {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Lebesgue measure `2^{-kn}`, exact in binary floating point.
    pub fn measure(&self) -> f64 {
        0.5f64.powi((self.level as usize * self.dim()) as i32)
    }

    pub fn side(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn parent(&self) -> Option<Cube> {
        (self.level > 0).then(|| self.ancestor_at(self.level - 1))
    }

    /// The ancestor at a coarser `level` (or `self` at its own level).
    pub fn ancestor_at(&self, level: u32) -> Cube {
        debug_assert!(level <= self.level);
        let shift = self.level - level;
        let mut index = self.index;
        for j in index.iter_mut().take(self.dim()) {
            *j >>= shift;
        }
        Cube {
            grid: self.grid,
            level,
            index,
        }
    }

    pub fn children(&self) -> Vec<Cube> {
        let level = self.level + 1;
        let [a, b] = self.index;
        match self.dim() {
            1 => (0..2)
                .map(|t| Cube {
                    grid: self.grid,
                    level,
                    index: [2 * a + t, 0],
                })
                .collect(),
            _ => {
                let mut out = Vec::with_capacity(4);
                for t0 in 0..2 {
                    for t1 in 0..2 {
                        out.push(Cube {
                            grid: self.grid,
                            level,
                            index: [2 * a + t0, 2 * b + t1],
                        });
                    }
                }
                out
            }
        }
    }

    /// `self ⊇ other` for cubes of the same grid.
    pub fn contains(&self, other: &Cube) -> bool {
        self.grid == other.grid && other.level >= self.level && other.ancestor_at(self.level).index == self.index
    }

    pub fn strictly_contains(&self, other: &Cube) -> bool {
        self.level < other.level && self.contains(other)
    }

    /// Same-grid cubes are disjoint exactly when neither contains the other.
    pub fn is_disjoint(&self, other: &Cube) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    /// Row-major position of the cube among its level.
    pub fn flat_index(&self) -> usize {
        match self.dim() {
            1 => self.index[0] as usize,
            _ => ((self.index[0] as usize) << self.level) + self.index[1] as usize,
        }
    }

    pub fn from_flat(grid: GridId, level: u32, flat: usize) -> Cube {
        let index = match grid.dim() {
            1 => [flat as u32, 0],
            _ => [(flat >> level) as u32, (flat & ((1 << level) - 1)) as u32],
        };
        Cube { grid, level, index }
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/k{}/{:?}", self.grid, self.level, &self.index[..self.dim()])
    }
}

/// Non-negative function that is constant on each base cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFunction {
    cfg: ModelConfig,
    values: Vec<f64>,
}

impl CellFunction {
    pub fn new(cfg: ModelConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != cfg.cell_count() {
            return Err(WorkbenchError::ConfigMismatch(format!(
                "{} values for a model with {} cells",
                values.len(),
                cfg.cell_count()
            )));
        }
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(WorkbenchError::InvalidValue { cell, value });
        }
        Ok(Self { cfg, values })
    }

    pub fn constant(cfg: ModelConfig, value: f64) -> Result<Self> {
        Self::new(cfg, vec![value; cfg.cell_count()])
    }

    pub fn zeros(cfg: ModelConfig) -> Self {
        Self {
            cfg,
            values: vec![0.0; cfg.cell_count()],
        }
    }

    /// Build from per-cell coordinates.
    pub fn from_fn(cfg: ModelConfig, mut f: impl FnMut([usize; MAX_DIM]) -> f64) -> Result<Self> {
        let values = (0..cfg.cell_count()).map(|c| f(cfg.cell_coords(c))).collect();
        Self::new(cfg, values)
    }

    /// `1_Q`.
    pub fn indicator(cfg: ModelConfig, cube: &Cube) -> Result<Self> {
        cfg.check_cube(cube)?;
        let mut out = Self::zeros(cfg);
        cfg.for_each_cell(cube, |c| out.values[c] = 1.0);
        Ok(out)
    }

    pub fn config(&self) -> ModelConfig {
        self.cfg
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Integral over the torus (fixed-order sum times the cell volume).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cfg.cell_volume()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∫_Q f`: cell values summed in ascending cell order, times the cell volume.
    pub fn cube_integral(&self, cube: &Cube) -> Result<f64> {
        self.cfg.check_cube(cube)?;
        Ok(self.integral_over(cube))
    }

    /// `|Q|^{-1} ∫_Q f`.
    pub fn cube_average(&self, cube: &Cube) -> Result<f64> {
        Ok(self.cube_integral(cube)? / cube.measure())
    }

    pub(crate) fn integral_over(&self, cube: &Cube) -> f64 {
        let mut sum = 0.0;
        self.cfg.for_each_cell(cube, |c| sum += self.values[c]);
        sum * self.cfg.cell_volume()
    }

    pub fn check_same_model(&self, other: &CellFunction) -> Result<()> {
        if self.cfg != other.cfg {
            return Err(WorkbenchError::ConfigMismatch(format!(
                "{:?} vs {:?}",
                self.cfg, other.cfg
            )));
        }
        Ok(())
    }

    /// Cellwise `f(value)`; the result must stay non-negative and finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.cfg, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Cellwise product.
    pub fn mul(&self, other: &CellFunction) -> Result<Self> {
        self.check_same_model(other)?;
        Ok(Self {
            cfg: self.cfg,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| v * c)
    }

    /// `f · 1_Q`.
    pub fn restrict(&self, cube: &Cube) -> Result<Self> {
        self.cfg.check_cube(cube)?;
        let mut out = Self::zeros(self.cfg);
        self.cfg.for_each_cell(cube, |c| out.values[c] = self.values[c]);
        Ok(out)
    }

    /// `f · 1_mask`.
    pub fn restrict_to_mask(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.values.len() {
            return Err(WorkbenchError::ConfigMismatch(format!(
                "mask of length {} for {} cells",
                mask.len(),
                self.values.len()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m { v } else { 0.0 })
            .collect();
        Ok(Self { cfg: self.cfg, values })
    }

    /// Integral over a set of cells given as a mask.
    pub fn mask_integral(&self, mask: &[bool]) -> f64 {
        let sum: f64 = self.values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v).sum();
        sum * self.cfg.cell_volume()
    }
}

/// Integrals of one function over every cube of one grid, level by level.
#[derive(Clone, Debug)]
pub struct Pyramid {
    grid: GridId,
    levels: Vec<Vec<f64>>,
}

impl Pyramid {
    /// Each entry is computed with the same fixed-order cell sum as
    /// [`CellFunction::cube_integral`], so the two agree bit for bit.
    pub fn new(f: &CellFunction, grid: GridId) -> Result<Self> {
        let cfg = f.config();
        cfg.check_grid(grid)?;
        let levels = (0..=cfg.max_level())
            .map(|k| level_cubes(grid, k).iter().map(|q| f.integral_over(q)).collect())
            .collect();
        Ok(Self { grid, levels })
    }

    pub fn grid(&self) -> GridId {
        self.grid
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn integral(&self, cube: &Cube) -> f64 {
        self.levels[cube.level as usize][cube.flat_index()]
    }

    pub fn average(&self, cube: &Cube) -> f64 {
        self.integral(cube) / cube.measure()
    }

    pub fn level(&self, k: u32) -> &[f64] {
        &self.levels[k as usize]
    }
}

/// Finest-level (level `L`) cubes of `cube`'s grid inside `cube`, as flat
/// indices in ascending order.
pub fn leaves_of(cube: &Cube, depth: u32) -> Vec<usize> {
    let d = depth - cube.level;
    let span = 1usize << d;
    match cube.dim() {
        1 => {
            let start = cube.index[0] as usize * span;
            (start..start + span).collect()
        }
        _ => {
            let r0 = cube.index[0] as usize * span;
            let r1 = cube.index[1] as usize * span;
            let mut out = Vec::with_capacity(span * span);
            for a in r0..r0 + span {
                for b in r1..r1 + span {
                    out.push((a << depth) + b);
                }
            }
            out
        }
    }
}

/// Maximal cubes of `grid` whose finest-level cubes all lie in `mask`
/// (indexed by flat leaf index), sorted.
pub fn maximal_cubes_in(grid: GridId, depth: u32, mask: &[bool]) -> Vec<Cube> {
    let dim = grid.dim();
    debug_assert_eq!(mask.len(), 1usize << (depth as usize * dim));
    let mut full: Vec<Vec<bool>> = vec![mask.to_vec()];
    for k in (0..depth).rev() {
        let finer = full.last().expect("at least the leaf level");
        let count = 1usize << (k as usize * dim);
        let level: Vec<bool> = (0..count)
            .map(|flat| {
                Cube::from_flat(grid, k, flat)
                    .children()
                    .iter()
                    .all(|c| finer[c.flat_index()])
            })
            .collect();
        full.push(level);
    }
    full.reverse();
    let mut out = Vec::new();
    for k in 0..=depth {
        for (flat, &is_full) in full[k as usize].iter().enumerate() {
            if !is_full {
                continue;
            }
            let q = Cube::from_flat(grid, k, flat);
            let parent_full = q
                .parent()
                .map(|p| full[p.level as usize][p.flat_index()])
                .unwrap_or(false);
            if !parent_full {
                out.push(q);
            }
        }
    }
    out.sort();
    out
}

/// A finite family of cubes scanned by the suprema: a set of grids, every
/// level `0..=L`, optionally without the cubes that cross the periodic seam.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeFamily {
    cfg: ModelConfig,
    grids: Vec<GridId>,
    segment_only: bool,
}

impl CubeFamily {
    /// Every cube of every shifted grid.
    pub fn all(cfg: ModelConfig) -> Self {
        Self {
            cfg,
            grids: cfg.grids(),
            segment_only: false,
        }
    }

    pub fn single(cfg: ModelConfig, grid: GridId) -> Self {
        Self {
            cfg,
            grids: vec![grid],
            segment_only: false,
        }
    }

    pub fn with_grids(cfg: ModelConfig, mut grids: Vec<GridId>) -> Result<Self> {
        for g in &grids {
            cfg.check_grid(*g)?;
        }
        grids.sort();
        grids.dedup();
        Ok(Self {
            cfg,
            grids,
            segment_only: false,
        })
    }

    /// Drop cubes that wrap around the torus, so the family only holds
    /// honest intervals (squares) of `[0,1)^n`.
    pub fn segment(mut self) -> Self {
        self.segment_only = true;
        self
    }

    pub fn config(&self) -> ModelConfig {
        self.cfg
    }

    pub fn grids(&self) -> &[GridId] {
        &self.grids
    }

    pub fn is_segment(&self) -> bool {
        self.segment_only
    }

    pub fn admits(&self, cube: &Cube) -> bool {
        self.grids.contains(&cube.grid) && !(self.segment_only && self.cfg.wraps(cube))
    }

    /// Cubes in lexicographic (grid, level, index) order.
    pub fn cubes(&self) -> impl Iterator<Item = Cube> + '_ {
        self.grids.iter().flat_map(move |&g| {
            (0..=self.cfg.max_level())
                .flat_map(move |k| level_cubes(g, k))
                .filter(move |q| !(self.segment_only && self.cfg.wraps(q)))
        })
    }

    pub fn len(&self) -> usize {
        self.cubes().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg1(l: u32) -> ModelConfig {
        ModelConfig::new(1, l).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new(1, 0).is_err());
        assert!(ModelConfig::new(3, 2).is_err());
        assert!(ModelConfig::new(1, 13).is_err());
        let c = ModelConfig::new(2, 3).unwrap();
        assert_eq!(c.resolution(), 24);
        assert_eq!(c.cell_count(), 576);
        assert_eq!(c.grids().len(), 9);
    }

    #[test]
    fn base_grid_levels() {
        let c = cfg1(2);
        let g = c.base_grid();
        let l1 = c.cubes_at_level(g, 1).unwrap();
        assert_eq!(l1.len(), 2);
        assert_eq!(c.corner(&l1[0])[0], 0.0);
        assert_eq!(c.corner(&l1[1])[0], 0.5);
        let l0 = c.cubes_at_level(g, 0).unwrap();
        assert_eq!(l0.len(), 1);
        assert_eq!(c.cells(&l0[0]).len(), 12);
        assert!(matches!(
            c.cubes_at_level(g, 3),
            Err(WorkbenchError::LevelRange { level: 3, max: 2 })
        ));
    }

    #[test]
    fn shifted_grid_is_a_translate() {
        let c = cfg1(2);
        let g = c.grid(&[1]).unwrap();
        let l1 = c.cubes_at_level(g, 1).unwrap();
        // Translate of {[0,1/2),[1/2,1)} by 1/3.
        assert_eq!(c.corner(&l1[0])[0], 1.0 / 3.0);
        assert_eq!(c.corner(&l1[1])[0], 5.0 / 6.0);
        assert!(!c.wraps(&l1[0]));
        assert!(c.wraps(&l1[1]));
        // The wrapped cube is [5/6,1) ∪ [0,1/3): 2 + 4 cells, ascending.
        assert_eq!(c.cells(&l1[1]), vec![0, 1, 2, 3, 10, 11]);
    }

    #[test]
    fn children_of_shifted_root() {
        let c = cfg1(2);
        let g = c.grid(&[1]).unwrap();
        let kids = c.children(&c.root(g)).unwrap();
        assert_eq!(kids.len(), 2);
        let corners: Vec<f64> = kids.iter().map(|q| c.corner(q)[0]).collect();
        assert_eq!(corners, vec![1.0 / 3.0, 5.0 / 6.0]);
        let leaf = c.cubes_at_level(g, 2).unwrap()[0];
        assert!(matches!(c.children(&leaf), Err(WorkbenchError::MaxDepth(_))));
    }

    #[test]
    fn children_halve() {
        let c = cfg1(2);
        let g = c.base_grid();
        let right = c.cubes_at_level(g, 1).unwrap()[1];
        let kids = c.children(&right).unwrap();
        let corners: Vec<f64> = kids.iter().map(|q| c.corner(q)[0]).collect();
        assert_eq!(corners, vec![0.5, 0.75]);
        assert!(kids.iter().all(|k| right.strictly_contains(k)));
    }

    #[test]
    fn partition_and_nesting_all_grids_2d() {
        let c = ModelConfig::new(2, 3).unwrap();
        for g in c.grids() {
            for k in 0..=3 {
                let mut hit = vec![0u8; c.cell_count()];
                let cubes = c.cubes_at_level(g, k).unwrap();
                assert_eq!(cubes.len(), 1 << (2 * k));
                let total: f64 = cubes.iter().map(|q| q.measure()).sum();
                assert_eq!(total, 1.0);
                for q in &cubes {
                    c.for_each_cell(q, |cell| hit[cell] += 1);
                    assert_eq!(c.cells(q).len(), (3usize << (3 - k)).pow(2));
                }
                assert!(hit.iter().all(|&h| h == 1));
                for q in &cubes {
                    for cell in c.cells(q) {
                        assert_eq!(c.cube_containing(g, k, cell), *q);
                    }
                }
            }
        }
    }

    #[test]
    fn nesting_trichotomy_matches_cell_sets() {
        let c = cfg1(3);
        for g in c.grids() {
            let fam: Vec<Cube> = CubeFamily::single(c, g).cubes().collect();
            for a in &fam {
                let ca: std::collections::BTreeSet<usize> = c.cells(a).into_iter().collect();
                for b in &fam {
                    let cb: std::collections::BTreeSet<usize> = c.cells(b).into_iter().collect();
                    let inter = ca.intersection(&cb).count();
                    if a.contains(b) {
                        assert!(cb.is_subset(&ca));
                    } else if b.contains(a) {
                        assert!(ca.is_subset(&cb));
                    } else {
                        assert_eq!(inter, 0, "{a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn cube_integral_examples() {
        let c = cfg1(1);
        let g = c.base_grid();
        let one = CellFunction::constant(c, 1.0).unwrap();
        for k in 0..=1 {
            for q in c.cubes_at_level(g, k).unwrap() {
                assert_eq!(one.cube_integral(&q).unwrap(), 0.5f64.powi(k as i32));
            }
        }
        let zero = CellFunction::zeros(c);
        assert_eq!(zero.cube_integral(&c.root(g)).unwrap(), 0.0);
        let f = CellFunction::from_fn(c, |[i, _]| if i < 3 { 4.0 } else { 0.0 }).unwrap();
        assert!((f.cube_integral(&c.root(g)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cube_integral_rejects_foreign_cubes() {
        let c = cfg1(2);
        let deep = ModelConfig::new(1, 4).unwrap();
        let q = deep.cubes_at_level(deep.base_grid(), 4).unwrap()[0];
        let f = CellFunction::constant(c, 1.0).unwrap();
        assert!(f.cube_integral(&q).is_err());
        let c2 = ModelConfig::new(2, 2).unwrap();
        assert!(f.cube_integral(&c2.root(c2.base_grid())).is_err());
    }

    #[test]
    fn cell_function_validation() {
        let c = cfg1(1);
        assert!(CellFunction::new(c, vec![1.0; 5]).is_err());
        assert!(CellFunction::new(c, vec![-1.0; 6]).is_err());
        assert!(CellFunction::new(c, vec![f64::NAN; 6]).is_err());
    }

    #[test]
    fn family_order_and_segment_filter() {
        let c = cfg1(2);
        let all: Vec<Cube> = CubeFamily::all(c).cubes().collect();
        assert_eq!(all.len(), 3 * 7);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        let seg = CubeFamily::all(c).segment();
        assert!(seg.cubes().all(|q| !c.wraps(&q)));
        // Base grid never wraps; shifted roots always do.
        assert_eq!(seg.cubes().filter(|q| q.grid == c.base_grid()).count(), 7);
        assert!(seg.cubes().all(|q| q.level > 0 || q.grid == c.base_grid()));
    }

    #[test]
    fn pyramid_matches_direct_integrals() {
        let c = ModelConfig::new(2, 2).unwrap();
        let f = CellFunction::from_fn(c, |[a, b]| (a * 7 + b * 3 % 5) as f64 + 0.25).unwrap();
        for g in c.grids() {
            let p = Pyramid::new(&f, g).unwrap();
            for q in CubeFamily::single(c, g).cubes() {
                assert_eq!(p.integral(&q), f.cube_integral(&q).unwrap());
            }
        }
    }

    #[test]
    fn flat_index_round_trip() {
        let c = ModelConfig::new(2, 3).unwrap();
        for g in c.grids() {
            for k in 0..=3 {
                for (i, q) in c.cubes_at_level(g, k).unwrap().iter().enumerate() {
                    assert_eq!(q.flat_index(), i);
                    assert_eq!(Cube::from_flat(g, k, i), *q);
                }
            }
        }
    }
}
