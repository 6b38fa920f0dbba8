use crate::dyadic::{CellFunction, Cube, GridId, ModelConfig, Pyramid};
use crate::error::{Result, WorkbenchError};

pub(crate) fn check_inputs(g: &[CellFunction]) -> Result<ModelConfig> {
    let first = g
        .first()
        .ok_or_else(|| WorkbenchError::Domain("no input functions".into()))?;
    for f in &g[1..] {
        first.check_same_model(f)?;
    }
    Ok(first.config())
}

/// `Π_i avg_Q(g_i)` for every cube of one grid, level by level.
pub(crate) fn product_averages(g: &[CellFunction], grid: GridId) -> Result<Vec<Vec<f64>>> {
    let cfg = check_inputs(g)?;
    let pyramids = g.iter().map(|f| Pyramid::new(f, grid)).collect::<Result<Vec<_>>>()?;
    Ok((0..=cfg.max_level())
        .map(|k| {
            let measure = Cube::from_flat(grid, k, 0).measure();
            let mut prod = vec![1.0; pyramids[0].level(k).len()];
            for p in &pyramids {
                for (acc, &s) in prod.iter_mut().zip(p.level(k)) {
                    *acc *= s / measure;
                }
            }
            prod
        })
        .collect())
}

/// `M^𝒟(g⃗)` on the finest cubes of `grid`, in flat index order.
pub(crate) fn maximal_on_leaves(g: &[CellFunction], grid: GridId) -> Result<Vec<f64>> {
    let prods = product_averages(g, grid)?;
    let dim = grid.dim();
    let mut running = prods[0].clone();
    for level in prods.iter().skip(1) {
        let k = (level.len().trailing_zeros() as usize / dim) as u32;
        running = level
            .iter()
            .enumerate()
            .map(|(flat, &v)| {
                let parent = Cube::from_flat(grid, k, flat).ancestor_at(k - 1).flat_index();
                v.max(running[parent])
            })
            .collect();
    }
    Ok(running)
}

fn spread_leaves(cfg: ModelConfig, grid: GridId, leaves: &[f64]) -> Result<CellFunction> {
    let mut values = vec![0.0; cfg.cell_count()];
    for (flat, &v) in leaves.iter().enumerate() {
        let q = Cube::from_flat(grid, cfg.max_level(), flat);
        cfg.for_each_cell(&q, |c| values[c] = v);
    }
    CellFunction::new(cfg, values)
}

/// Dyadic multilinear maximal function: at each cell, the largest
/// `Π_i avg_Q(g_i)` over the cubes `Q` of `grid` that contain it.
pub fn dyadic_maximal(g: &[CellFunction], grid: GridId) -> Result<CellFunction> {
    let cfg = check_inputs(g)?;
    cfg.check_grid(grid)?;
    let leaves = maximal_on_leaves(g, grid)?;
    spread_leaves(cfg, grid, &leaves)
}

/// Cellwise maximum of [`dyadic_maximal`] over all shifted grids of the
/// model. No covering constant is applied.
pub fn multi_grid_maximal(g: &[CellFunction]) -> Result<CellFunction> {
    let cfg = check_inputs(g)?;
    let mut values = vec![0.0f64; cfg.cell_count()];
    for grid in cfg.grids() {
        let m = dyadic_maximal(g, grid)?;
        for (acc, &v) in values.iter_mut().zip(m.values()) {
            *acc = acc.max(v);
        }
    }
    CellFunction::new(cfg, values)
}
