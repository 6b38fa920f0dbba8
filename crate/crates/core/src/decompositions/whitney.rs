//! Whitney cubes of a cell union inside the closed unit square (or
//! segment), with no periodic wrap. Outside the unit box counts as
//! complement.
//!
//! Coordinates are integers in units of `1 / (3 * 2^K)` where `K` is the
//! finest dyadic level searched, so base cells and dyadic cubes both have
//! integer corners and every distance comparison is exact.

use crate::dyadic::ModelConfig;
use crate::error::{Result, WorkbenchError};

/// Dilation factor used for the overlap count.
pub const WHITNEY_GAMMA: f64 = 1.2;

/// Finest dyadic level is the model depth plus this, by default.
pub const DEFAULT_EXTRA_LEVELS: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WhitneyCube {
    pub level: u32,
    pub index: [u32; 2],
    /// Lower corner, in units.
    pub lo: [i64; 2],
    /// Side length, in units.
    pub side: i64,
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    dim: usize,
    depth: u32,
    units: i64,
    cubes: Vec<WhitneyCube>,
    overlap: usize,
    residual_units: usize,
    omega_units: usize,
}

impl WhitneyDecomposition {
    pub fn cubes(&self) -> &[WhitneyCube] {
        &self.cubes
    }

    /// Finest dyadic level searched.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Units per axis of the unit box.
    pub fn units(&self) -> i64 {
        self.units
    }

    /// Largest number of dilated cubes `γQ_j` sharing a point.
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// Measure of the part of the set left uncovered because the search
    /// stops at the finest level; it lies within `√n 2^{-K}` of the
    /// complement.
    pub fn residual_measure(&self) -> f64 {
        self.residual_units as f64 / (self.units as f64).powi(self.dim as i32)
    }

    pub fn covered_fraction(&self) -> f64 {
        1.0 - self.residual_units as f64 / self.omega_units as f64
    }
}

struct Geometry {
    dim: usize,
    units: i64,
    cell_side: i64,
    res: usize,
    /// Lower corners of the complement cells.
    outside: Vec<[i64; 2]>,
    mask: Vec<bool>,
}

impl Geometry {
    /// Squared distance from the closed box `[lo, lo + side]` to the
    /// complement.
    fn dist2(&self, lo: [i64; 2], side: i64) -> i64 {
        let mut best = i64::MAX;
        for a in 0..self.dim {
            let edge = lo[a].min(self.units - lo[a] - side);
            best = best.min(edge * edge);
        }
        for c in &self.outside {
            let mut d = 0;
            for a in 0..self.dim {
                let gap = (c[a] - lo[a] - side).max(lo[a] - c[a] - self.cell_side).max(0);
                d += gap * gap;
            }
            best = best.min(d);
        }
        best
    }

    fn diam2(&self, side: i64) -> i64 {
        self.dim as i64 * side * side
    }

    /// Whether the unit square with lower corner `u` lies in the set.
    fn unit_inside(&self, u: [i64; 2]) -> bool {
        let i0 = (u[0] / self.cell_side) as usize;
        let cell = match self.dim {
            1 => i0,
            _ => i0 * self.res + (u[1] / self.cell_side) as usize,
        };
        self.mask[cell]
    }
}

fn unit_points(dim: usize, lo: [i64; 2], side: i64) -> Vec<[i64; 2]> {
    let mut out = Vec::new();
    match dim {
        1 => (lo[0]..lo[0] + side).for_each(|a| out.push([a, 0])),
        _ => {
            for a in lo[0]..lo[0] + side {
                for b in lo[1]..lo[1] + side {
                    out.push([a, b]);
                }
            }
        }
    }
    out
}

/// [`whitney_to_depth`] with the finest level `L + 2`.
pub fn whitney(mask: &[bool], cfg: ModelConfig) -> Result<WhitneyDecomposition> {
    whitney_to_depth(mask, cfg, cfg.max_level() + DEFAULT_EXTRA_LEVELS)
}

/// Maximal standard dyadic cubes `Q` of level at most `depth` with
/// `diam(Q) ≤ dist(Q, Ω^c)`, where `Ω` is the union of the cells flagged in
/// `mask`. All four Whitney conditions are checked before returning.
pub fn whitney_to_depth(mask: &[bool], cfg: ModelConfig, depth: u32) -> Result<WhitneyDecomposition> {
    if mask.len() != cfg.cell_count() {
        return Err(WorkbenchError::IndexRange {
            index: mask.len(),
            len: cfg.cell_count(),
        });
    }
    if !mask.iter().any(|&b| b) {
        return Err(WorkbenchError::Domain("Whitney decomposition of an empty set".into()));
    }
    if depth < cfg.max_level() || depth > 24 {
        return Err(WorkbenchError::Config(format!(
            "Whitney depth {depth} must lie in [{}, 24]",
            cfg.max_level()
        )));
    }
    let dim = cfg.dim();
    let units = 3i64 << depth;
    let cell_side = 1i64 << (depth - cfg.max_level());
    let res = cfg.resolution();
    let outside = (0..mask.len())
        .filter(|&c| !mask[c])
        .map(|c| {
            let co = cfg.cell_coords(c);
            [co[0] as i64 * cell_side, co[1] as i64 * cell_side]
        })
        .collect();
    let geo = Geometry {
        dim,
        units,
        cell_side,
        res,
        outside,
        mask: mask.to_vec(),
    };
    let mut cubes = Vec::new();
    let mut stack = vec![(0u32, [0u32; 2])];
    while let Some((k, index)) = stack.pop() {
        let side = 3i64 << (depth - k);
        let lo = [index[0] as i64 * side, index[1] as i64 * side];
        if geo.dist2(lo, side) >= geo.diam2(side) {
            cubes.push(WhitneyCube {
                level: k,
                index,
                lo,
                side,
            });
            continue;
        }
        if k == depth {
            continue;
        }
        let kids: Vec<[u32; 2]> = match dim {
            1 => (0..2).map(|t| [2 * index[0] + t, 0]).collect(),
            _ => (0..4)
                .map(|t| [2 * index[0] + (t >> 1), 2 * index[1] + (t & 1)])
                .collect(),
        };
        stack.extend(kids.into_iter().map(|i| (k + 1, i)));
    }
    cubes.sort();
    let mut out = WhitneyDecomposition {
        dim,
        depth,
        units,
        cubes,
        overlap: 0,
        residual_units: 0,
        omega_units: 0,
    };
    verify(&geo, &mut out)?;
    Ok(out)
}

fn touching(a: &WhitneyCube, b: &WhitneyCube, dim: usize) -> bool {
    (0..dim).all(|x| a.lo[x] <= b.lo[x] + b.side && b.lo[x] <= a.lo[x] + a.side)
}

fn verify(geo: &Geometry, dec: &mut WhitneyDecomposition) -> Result<()> {
    let fail = |msg: String| Err(WorkbenchError::Consistency(msg));
    let dim = geo.dim;
    let units = geo.units;
    // Condition 1: interiors disjoint, cubes inside the set, and the set
    // covered up to the band next to the complement.
    let per_axis = units as usize;
    let mut owner = vec![0u8; per_axis.pow(dim as u32)];
    let flat = |u: [i64; 2]| match dim {
        1 => u[0] as usize,
        _ => u[0] as usize * per_axis + u[1] as usize,
    };
    for q in &dec.cubes {
        for u in unit_points(dim, q.lo, q.side) {
            if !geo.unit_inside(u) {
                return fail(format!("Whitney cube {q:?} leaves the set"));
            }
            let slot = &mut owner[flat(u)];
            if *slot != 0 {
                return fail(format!("Whitney cube {q:?} overlaps another"));
            }
            *slot = 1;
        }
    }
    let finest = 3i64;
    let mut omega_units = 0;
    let mut residual = 0;
    for u in unit_points(dim, [0, 0], units) {
        if !geo.unit_inside(u) {
            continue;
        }
        omega_units += 1;
        if owner[flat(u)] == 0 {
            residual += 1;
            let lo = [u[0] - u[0] % finest, u[1] - u[1] % finest];
            if geo.dist2(lo, finest) >= geo.diam2(finest) {
                return fail(format!("unit {u:?} is uncovered away from the complement"));
            }
        }
    }
    dec.omega_units = omega_units;
    dec.residual_units = residual;
    // Condition 2: √n ℓ ≤ dist ≤ 4 √n ℓ.
    for q in &dec.cubes {
        let d2 = geo.dist2(q.lo, q.side);
        let diam2 = geo.diam2(q.side);
        if d2 < diam2 || d2 > 16 * diam2 {
            return fail(format!("Whitney cube {q:?} violates the distance band"));
        }
    }
    // Condition 3: touching cubes have comparable sides.
    for (i, a) in dec.cubes.iter().enumerate() {
        for b in &dec.cubes[i + 1..] {
            if touching(a, b, dim) && (a.side > 4 * b.side || b.side > 4 * a.side) {
                return fail(format!("touching cubes {a:?} and {b:?} differ by more than 4"));
            }
        }
    }
    // Condition 4: overlap of the dilates, in tenths of a unit. A point of
    // maximal overlap can be taken with each coordinate at some lower edge.
    let boxes: Vec<([i64; 2], [i64; 2])> = dec
        .cubes
        .iter()
        .map(|q| {
            let mut lo = [0; 2];
            let mut hi = [0; 2];
            for a in 0..dim {
                lo[a] = 10 * q.lo[a] - q.side;
                hi[a] = 10 * (q.lo[a] + q.side) + q.side;
            }
            (lo, hi)
        })
        .collect();
    let meets =
        |a: &([i64; 2], [i64; 2]), b: &([i64; 2], [i64; 2])| (0..dim).all(|x| a.0[x] <= b.1[x] && b.0[x] <= a.1[x]);
    let mut best = 0;
    for a in &boxes {
        let partners: Vec<&([i64; 2], [i64; 2])> = boxes.iter().filter(|b| meets(a, b)).collect();
        for b in &partners {
            let pt = [a.0[0].max(b.0[0]), a.0[1].max(b.0[1])];
            let count = partners
                .iter()
                .filter(|c| (0..dim).all(|x| c.0[x] <= pt[x] && pt[x] <= c.1[x]))
                .count();
            best = best.max(count);
        }
    }
    dec.overlap = best;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_segment_is_a_ladder() {
        let c = ModelConfig::new(1, 4).unwrap();
        let d = whitney(&vec![true; c.cell_count()], c).unwrap();
        // Greedy oracle: an interval [a, b] of length 2^{-k} qualifies when
        // min(a, 1 - b) ≥ 2^{-k}; keep those whose parent does not.
        let ok = |k: u32, j: u32| {
            let h = 0.5f64.powi(k as i32);
            let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
            a.min(1.0 - b) >= h
        };
        let mut want = Vec::new();
        for k in 0..=d.depth() {
            for j in 0..(1u32 << k) {
                if ok(k, j) && (k == 0 || !ok(k - 1, j / 2)) {
                    want.push((k, j));
                }
            }
        }
        let got: Vec<(u32, u32)> = d.cubes().iter().map(|q| (q.level, q.index[0])).collect();
        want.sort();
        assert_eq!(got, want);
        assert_eq!(got[..2], [(2, 1), (2, 2)]);
        assert_eq!(got.len(), 2 * (d.depth() as usize - 1));
        assert!(d.overlap() <= 4);
        assert!(d.residual_measure() > 0.0 && d.residual_measure() <= 2.0 * 0.5f64.powi(d.depth() as i32 - 2));
    }

    #[test]
    fn adjacent_lengths_differ_by_at_most_two_in_1d() {
        let c = ModelConfig::new(1, 5).unwrap();
        for seed in 0..30u64 {
            let mask: Vec<bool> = (0..c.cell_count())
                .map(|i| (i as u64 * 2654435761 + seed * 97) % 7 != 0)
                .collect();
            let d = whitney(&mask, c).unwrap();
            let q = d.cubes();
            for (i, a) in q.iter().enumerate() {
                for b in &q[i + 1..] {
                    if touching(a, b, 1) {
                        assert!(a.side <= 2 * b.side && b.side <= 2 * a.side);
                    }
                }
            }
            assert!(d.overlap() <= 4);
        }
    }

    #[test]
    fn square_with_a_hole() {
        let c = ModelConfig::new(2, 3).unwrap();
        let n = c.resolution();
        let mask: Vec<bool> = (0..c.cell_count())
            .map(|i| {
                let (a, b) = (i / n, i % n);
                !((10..14).contains(&a) && (4..7).contains(&b))
            })
            .collect();
        let d = whitney(&mask, c).unwrap();
        assert!(d.overlap() <= 16);
        assert!(d.covered_fraction() > 0.5, "{}", d.covered_fraction());
    }

    #[test]
    fn empty_set_rejected() {
        let c = ModelConfig::new(1, 3).unwrap();
        assert!(whitney(&vec![false; c.cell_count()], c).is_err());
        assert!(whitney(&[true], c).is_err());
    }
}
