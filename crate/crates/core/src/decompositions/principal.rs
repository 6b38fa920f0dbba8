use std::collections::BTreeMap;

use crate::dyadic::{CellFunction, Cube, Pyramid};
use crate::error::{Result, WorkbenchError};

/// Principal cubes of `f` with respect to `σ` below a root cube.
#[derive(Clone, Debug)]
pub struct PrincipalCubes {
    root: Cube,
    generations: Vec<Vec<Cube>>,
    /// `Γ(Q)` for every dyadic `Q ⊆ root`.
    gamma: BTreeMap<Cube, Cube>,
    /// `(E^σ_Q f, σ(Q))` for every dyadic `Q ⊆ root`.
    stats: BTreeMap<Cube, (f64, f64)>,
}

impl PrincipalCubes {
    pub fn root(&self) -> Cube {
        self.root
    }

    /// `𝒢_0 = {root}`, `𝒢_1`, ... each sorted.
    pub fn generations(&self) -> &[Vec<Cube>] {
        &self.generations
    }

    /// All principal cubes, generation by generation.
    pub fn cubes(&self) -> impl Iterator<Item = &Cube> {
        self.generations.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.generations.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The smallest principal cube containing `q`.
    pub fn gamma(&self, q: &Cube) -> Option<Cube> {
        self.gamma.get(q).copied()
    }

    /// `E^σ_Q f = σ(Q)^{-1} ∫_Q f σ`.
    pub fn average(&self, q: &Cube) -> Option<f64> {
        self.stats.get(q).map(|s| s.0)
    }

    pub fn sigma_mass(&self, q: &Cube) -> Option<f64> {
        self.stats.get(q).map(|s| s.1)
    }

    /// `Σ_G (E^σ_G f)^p σ(G)`.
    pub fn energy(&self, p: f64) -> f64 {
        self.cubes()
            .map(|g| {
                let (avg, mass) = self.stats[g];
                avg.powf(p) * mass
            })
            .sum()
    }

    fn verify(&self) -> Result<()> {
        let is_principal: BTreeMap<Cube, usize> = self
            .generations
            .iter()
            .enumerate()
            .flat_map(|(k, gen)| gen.iter().map(move |g| (*g, k)))
            .collect();
        for (q, &(avg, _)) in &self.stats {
            let mut up = *q;
            let nearest = loop {
                if is_principal.contains_key(&up) {
                    break up;
                }
                up = up
                    .parent()
                    .ok_or_else(|| WorkbenchError::Consistency(format!("no principal cube above {q}")))?;
            };
            if self.gamma[q] != nearest {
                return Err(WorkbenchError::Consistency(format!(
                    "Γ({q}) = {} but the smallest principal cube above it is {nearest}",
                    self.gamma[q]
                )));
            }
            if *q == self.root {
                continue;
            }
            let top = self.stats[&nearest].0;
            if nearest == *q {
                let parent = self.gamma[&q.parent().expect("below the root")];
                let bound = 4.0 * self.stats[&parent].0;
                if avg <= bound || is_principal[q] != is_principal[&parent] + 1 {
                    return Err(WorkbenchError::Consistency(format!(
                        "principal cube {q} does not beat 4 times its parent {parent}"
                    )));
                }
            } else if avg > 4.0 * top {
                return Err(WorkbenchError::Consistency(format!(
                    "cube {q} has average {avg} above 4 times that of Γ(Q) = {nearest}"
                )));
            }
        }
        Ok(())
    }
}

/// Stopping construction: below each principal cube `G`, the maximal cubes
/// with `E^σ_Q f > 4 E^σ_G f` form the next generation.
pub fn build_principal_cubes(f: &CellFunction, sigma: &CellFunction, root: Cube) -> Result<PrincipalCubes> {
    f.check_same_model(sigma)?;
    let cfg = f.config();
    cfg.check_cube(&root)?;
    let fs = Pyramid::new(&f.mul(sigma)?, root.grid)?;
    let ss = Pyramid::new(sigma, root.grid)?;
    let mut stats = BTreeMap::new();
    let mut stack = vec![root];
    while let Some(q) = stack.pop() {
        let mass = ss.integral(&q);
        if !(mass > 0.0) {
            return Err(WorkbenchError::DegenerateMeasure(q));
        }
        stats.insert(q, (fs.integral(&q) / mass, mass));
        if q.level < cfg.max_level() {
            stack.extend(q.children());
        }
    }
    let mut generations: Vec<Vec<Cube>> = vec![vec![root]];
    let mut gamma = BTreeMap::new();
    gamma.insert(root, root);
    loop {
        let mut next = Vec::new();
        for g in generations.last().expect("root generation") {
            let bound = 4.0 * stats[g].0;
            let mut stack: Vec<Cube> = if g.level < cfg.max_level() {
                g.children()
            } else {
                Vec::new()
            };
            while let Some(q) = stack.pop() {
                if stats[&q].0 > bound {
                    next.push(q);
                    gamma.insert(q, q);
                } else {
                    gamma.insert(q, *g);
                    if q.level < cfg.max_level() {
                        stack.extend(q.children());
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        generations.push(next);
    }
    let out = PrincipalCubes {
        root,
        generations,
        gamma,
        stats,
    };
    out.verify()?;
    Ok(out)
}
