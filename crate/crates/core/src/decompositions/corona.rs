use std::collections::BTreeMap;

use crate::dyadic::{CellFunction, Cube, Pyramid};
use crate::error::{Result, WorkbenchError};

/// Corona decomposition of a finite cube collection by the density
/// `ρ(Q) = σ1(Q) σ2(Q) / |Q|^2`.
#[derive(Clone, Debug)]
pub struct CoronaDecomposition {
    tops: Vec<Cube>,
    lambda: BTreeMap<Cube, Cube>,
    density: BTreeMap<Cube, f64>,
}

impl CoronaDecomposition {
    /// The top cubes `ℒ`, sorted.
    pub fn tops(&self) -> &[Cube] {
        &self.tops
    }

    /// `λ(Q)`, the smallest top containing `Q`.
    pub fn lambda(&self, q: &Cube) -> Option<Cube> {
        self.lambda.get(q).copied()
    }

    pub fn density(&self, q: &Cube) -> Option<f64> {
        self.density.get(q).copied()
    }

    /// `𝒬(L) = {Q : λ(Q) = L}`, sorted.
    pub fn block(&self, top: &Cube) -> Vec<Cube> {
        self.lambda.iter().filter(|(_, t)| *t == top).map(|(q, _)| *q).collect()
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    fn verify(&self) -> Result<()> {
        let fail = |msg: String| Err(WorkbenchError::Consistency(msg));
        let mut total = 0;
        for top in &self.tops {
            total += self.block(top).len();
        }
        if total != self.lambda.len() {
            return fail(format!(
                "blocks hold {total} cubes, collection has {}",
                self.lambda.len()
            ));
        }
        for (q, t) in &self.lambda {
            let smallest = self.tops.iter().filter(|s| s.contains(q)).max_by_key(|s| s.level);
            if smallest != Some(t) {
                return fail(format!("λ({q}) = {t} is not the smallest top above it"));
            }
            if 4.0 * self.density[t] < self.density[q] {
                return fail(format!("density of {q} exceeds 4 times that of its top {t}"));
            }
        }
        for inner in &self.tops {
            for outer in self.tops.iter().filter(|o| o.strictly_contains(inner)) {
                if self.density[inner] <= 4.0 * self.density[outer] {
                    return fail(format!("top {inner} does not beat 4 times the density of {outer}"));
                }
            }
        }
        Ok(())
    }
}

/// Tops are the maximal cubes of the collection, then recursively the
/// maximal cubes whose density exceeds 4 times that of the current top.
/// The collection must lie in one grid, where every cube sits below a
/// maximal one.
pub fn build_corona(cubes: &[Cube], sigma1: &CellFunction, sigma2: &CellFunction) -> Result<CoronaDecomposition> {
    sigma1.check_same_model(sigma2)?;
    let cfg = sigma1.config();
    let mut sorted: Vec<Cube> = cubes.to_vec();
    sorted.sort();
    sorted.dedup();
    let Some(first) = sorted.first() else {
        return Ok(CoronaDecomposition {
            tops: Vec::new(),
            lambda: BTreeMap::new(),
            density: BTreeMap::new(),
        });
    };
    let grid = first.grid;
    for q in &sorted {
        cfg.check_cube(q)?;
        if q.grid != grid {
            return Err(WorkbenchError::Domain(
                "corona collections must lie in a single grid".into(),
            ));
        }
    }
    let s1 = Pyramid::new(sigma1, grid)?;
    let s2 = Pyramid::new(sigma2, grid)?;
    let density: BTreeMap<Cube, f64> = sorted
        .iter()
        .map(|q| (*q, s1.integral(q) * s2.integral(q) / (q.measure() * q.measure())))
        .collect();
    // Sorted order is coarse to fine, so the parent in the collection is
    // already placed when a cube is reached.
    let mut lambda: BTreeMap<Cube, Cube> = BTreeMap::new();
    let mut tops = Vec::new();
    for q in &sorted {
        let mut up = q.parent();
        let parent = loop {
            match up {
                Some(c) if density.contains_key(&c) => break Some(c),
                Some(c) => up = c.parent(),
                None => break None,
            }
        };
        let top = match parent {
            Some(par) => {
                let t = lambda[&par];
                if density[q] > 4.0 * density[&t] {
                    *q
                } else {
                    t
                }
            }
            None => *q,
        };
        if top == *q {
            tops.push(*q);
        }
        lambda.insert(*q, top);
    }
    tops.sort();
    let out = CoronaDecomposition { tops, lambda, density };
    out.verify()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::ModelConfig;

    fn all_base(c: ModelConfig) -> Vec<Cube> {
        (0..=c.max_level())
            .flat_map(|k| c.cubes_at_level(c.base_grid(), k).unwrap())
            .collect()
    }

    #[test]
    fn flat_densities_give_maximal_cubes() {
        let c = ModelConfig::new(1, 3).unwrap();
        let one = CellFunction::constant(c, 1.0).unwrap();
        let cor = build_corona(&all_base(c), &one, &one).unwrap();
        assert_eq!(cor.tops(), &[c.root(c.base_grid())]);
        let g = c.base_grid();
        let two = vec![
            Cube {
                grid: g,
                level: 1,
                index: [0, 0],
            },
            Cube {
                grid: g,
                level: 2,
                index: [1, 0],
            },
            Cube {
                grid: g,
                level: 2,
                index: [3, 0],
            },
        ];
        let cor = build_corona(&two, &one, &one).unwrap();
        assert_eq!(cor.tops(), &[two[0], two[2]]);
        assert_eq!(cor.block(&two[0]), vec![two[0], two[1]]);
    }

    #[test]
    fn root_only() {
        let c = ModelConfig::new(2, 2).unwrap();
        let one = CellFunction::constant(c, 1.0).unwrap();
        let r = c.root(c.grids()[4]);
        let cor = build_corona(&[r], &one, &one).unwrap();
        assert_eq!(cor.tops(), &[r]);
        assert_eq!(cor.block(&r), vec![r]);
    }

    /// Brute force: the stopping rule restated as "Q is a top iff it has no
    /// strict ancestor in the collection, or its density beats 4 times that
    /// of the smallest top strictly above it".
    fn oracle_tops(cubes: &[Cube], rho: &dyn Fn(&Cube) -> f64) -> Vec<Cube> {
        let mut sorted = cubes.to_vec();
        sorted.sort();
        let mut tops: Vec<Cube> = Vec::new();
        for q in &sorted {
            let above = tops
                .iter()
                .filter(|t| t.strictly_contains(q))
                .max_by_key(|t| t.level)
                .copied();
            match above {
                None => tops.push(*q),
                Some(t) if rho(q) > 4.0 * rho(&t) => tops.push(*q),
                _ => {}
            }
        }
        tops.sort();
        tops
    }

    #[test]
    fn concentrated_sigma() {
        let c = ModelConfig::new(1, 3).unwrap();
        let s1 = CellFunction::from_fn(c, |[i, _]| if i == 0 { 64.0 } else { 1.0 }).unwrap();
        let s2 = CellFunction::constant(c, 1.0).unwrap();
        let cubes = all_base(c);
        let cor = build_corona(&cubes, &s1, &s2).unwrap();
        assert!(cor.tops().len() > 1);
        let rho = |q: &Cube| s1.cube_integral(q).unwrap() * s2.cube_integral(q).unwrap() / (q.measure() * q.measure());
        assert_eq!(cor.tops(), oracle_tops(&cubes, &rho).as_slice());
    }

    #[test]
    fn mixed_grids_rejected() {
        let c = ModelConfig::new(1, 2).unwrap();
        let one = CellFunction::constant(c, 1.0).unwrap();
        let r = [c.root(c.grids()[0]), c.root(c.grids()[1])];
        assert!(build_corona(&r, &one, &one).is_err());
    }
}
