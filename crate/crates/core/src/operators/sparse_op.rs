use crate::dyadic::{CellFunction, Cube, Pyramid};
use crate::error::Result;
use crate::operators::maximal::check_inputs;
use crate::sparse::SparseFamily;

/// `Σ_Q (Π_i avg_Q(g_i)) 1_Q` over any cube list, accumulated per cell in
/// the order given.
pub fn cube_sum_operator<'a>(cubes: impl IntoIterator<Item = &'a Cube>, g: &[CellFunction]) -> Result<CellFunction> {
    let cfg = check_inputs(g)?;
    let mut values = vec![0.0f64; cfg.cell_count()];
    let mut pyramids: Vec<Vec<Pyramid>> = Vec::new();
    for q in cubes {
        cfg.check_cube(q)?;
        let slot = match pyramids.iter().position(|p| p[0].grid() == q.grid) {
            Some(s) => s,
            None => {
                pyramids.push(g.iter().map(|f| Pyramid::new(f, q.grid)).collect::<Result<_>>()?);
                pyramids.len() - 1
            }
        };
        let term: f64 = pyramids[slot].iter().map(|p| p.average(q)).product();
        cfg.for_each_cell(q, |c| values[c] += term);
    }
    CellFunction::new(cfg, values)
}

/// The sparse operator of `fam` applied to non-negative inputs; terms are
/// added stage by stage, lexicographically within a stage.
pub fn sparse_operator(fam: &SparseFamily, g: &[CellFunction]) -> Result<CellFunction> {
    let cfg = check_inputs(g)?;
    cfg.check_grid(fam.grid())?;
    if fam.config() != cfg {
        return Err(crate::error::WorkbenchError::ConfigMismatch(
            "sparse family and inputs live on different models".into(),
        ));
    }
    cube_sum_operator(fam.cubes(), g)
}
