use crate::dyadic::{leaves_of, maximal_cubes_in, CellFunction, Cube, GridId, ModelConfig};
use crate::error::{Result, WorkbenchError};
use crate::operators::sparse_op::{cube_sum_operator, sparse_operator};
use crate::sparse::{largest_power_below, SparseFamily};

/// One dyadic level `l` of the decomposition.
#[derive(Clone, Debug)]
pub struct LevelSet {
    pub l: i32,
    pub threshold: f64,
    /// Cells of `Ω_l = {A > 2^l}`.
    pub omega: Vec<bool>,
    /// Maximal cubes of the family's grid inside `Ω_l`, sorted.
    pub cubes: Vec<Cube>,
    /// Cells of `E_l(Q) = Q ∩ Ω_{l+1} \ Ω_{l+2}`, one mask per cube.
    pub e_sets: Vec<Vec<bool>>,
}

#[derive(Clone, Debug)]
pub struct LevelSetDecomposition {
    grid: GridId,
    operator: CellFunction,
    levels: Vec<LevelSet>,
}

impl LevelSetDecomposition {
    pub fn grid(&self) -> GridId {
        self.grid
    }

    /// The operator values the sets were cut from.
    pub fn operator(&self) -> &CellFunction {
        &self.operator
    }

    /// Levels from the largest `l` with `2^l` below the smallest positive
    /// value of the operator up to the largest `l` with `Ω_l` non-empty.
    pub fn levels(&self) -> &[LevelSet] {
        &self.levels
    }

    pub fn level(&self, l: i32) -> Option<&LevelSet> {
        self.levels.iter().find(|s| s.l == l)
    }

    /// `Ω_l` for any integer `l` (computed directly off the operator).
    pub fn omega(&self, l: i32) -> Vec<bool> {
        let t = 2f64.powi(l);
        self.operator.values().iter().map(|&a| a > t).collect()
    }
}

fn leaf_values(cfg: ModelConfig, grid: GridId, f: &CellFunction) -> Vec<f64> {
    let depth = cfg.max_level();
    cfg.cubes_at_level(grid, depth)
        .expect("grid checked")
        .iter()
        .map(|q| {
            let mut first = None;
            cfg.for_each_cell(q, |c| {
                first.get_or_insert(c);
            });
            f.values()[first.expect("cube has cells")]
        })
        .collect()
}

fn cells_of_leaves(cfg: ModelConfig, grid: GridId, leaves: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut mask = vec![false; cfg.cell_count()];
    for leaf in leaves {
        let q = Cube::from_flat(grid, cfg.max_level(), leaf);
        cfg.for_each_cell(&q, |c| mask[c] = true);
    }
    mask
}

/// Level sets `Ω_l = {A > 2^l}` of `A = A_{𝒟,𝒮}(g⃗)`, their maximal cubes and
/// the sets `E_l(Q)`. Before returning, checks that every `E_l(Q)` sees
/// `A(g⃗ 1_Q) > 2^l`, that the `E` sets are disjoint, and that together they
/// fill `Ω_{l_0 + 1}` for the lowest level `l_0`.
pub fn level_set_decomposition(fam: &SparseFamily, g: &[CellFunction]) -> Result<LevelSetDecomposition> {
    let a = sparse_operator(fam, g)?;
    let cfg = a.config();
    let grid = fam.grid();
    let depth = cfg.max_level();
    let leaves = leaf_values(cfg, grid, &a);
    let hi = leaves.iter().copied().fold(0.0f64, f64::max);
    let mut levels = Vec::new();
    if hi > 0.0 {
        let lo = leaves
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .fold(f64::INFINITY, f64::min);
        let l_lo = largest_power_below(2.0, lo);
        let l_hi = largest_power_below(2.0, hi);
        let above = |l: i32| -> Vec<bool> {
            let t = 2f64.powi(l);
            leaves.iter().map(|&x| x > t).collect()
        };
        for l in l_lo..=l_hi {
            let omega = above(l);
            let band: Vec<bool> = above(l + 1)
                .into_iter()
                .zip(above(l + 2))
                .map(|(x, y)| x && !y)
                .collect();
            let cubes = maximal_cubes_in(grid, depth, &omega);
            let e_sets = cubes
                .iter()
                .map(|q| cells_of_leaves(cfg, grid, leaves_of(q, depth).into_iter().filter(|&i| band[i])))
                .collect();
            levels.push(LevelSet {
                l,
                threshold: 2f64.powi(l),
                omega: cells_of_leaves(cfg, grid, (0..omega.len()).filter(|&i| omega[i])),
                cubes,
                e_sets,
            });
        }
    }
    let dec = LevelSetDecomposition {
        grid,
        operator: a,
        levels,
    };
    check_localization(fam, g, &dec)?;
    check_partition(&dec)?;
    Ok(dec)
}

fn check_localization(fam: &SparseFamily, g: &[CellFunction], dec: &LevelSetDecomposition) -> Result<()> {
    for set in &dec.levels {
        for (q, e) in set.cubes.iter().zip(&set.e_sets) {
            if !e.iter().any(|&b| b) {
                continue;
            }
            let local = g.iter().map(|f| f.restrict(q)).collect::<Result<Vec<_>>>()?;
            let near = fam.cubes().filter(|r| !r.is_disjoint(q));
            let a_local = cube_sum_operator(near, &local)?;
            for (c, _) in e.iter().enumerate().filter(|(_, &b)| b) {
                if a_local.values()[c] <= set.threshold {
                    return Err(WorkbenchError::Consistency(format!(
                        "localized operator {} does not exceed 2^{} on E({q}) at cell {c}",
                        a_local.values()[c],
                        set.l
                    )));
                }
            }
        }
    }
    Ok(())
}

fn check_partition(dec: &LevelSetDecomposition) -> Result<()> {
    let Some(first) = dec.levels.first() else {
        return Ok(());
    };
    let mut hits = vec![0u32; dec.operator.values().len()];
    for set in &dec.levels {
        for e in &set.e_sets {
            for (h, &b) in hits.iter_mut().zip(e) {
                *h += u32::from(b);
            }
        }
    }
    let target = dec.omega(first.l + 1);
    for (c, (&h, &t)) in hits.iter().zip(&target).enumerate() {
        if h != u32::from(t) {
            return Err(WorkbenchError::Consistency(format!(
                "cell {c} lies in {h} sets E_l(Q), expected {}",
                u32::from(t)
            )));
        }
    }
    Ok(())
}
