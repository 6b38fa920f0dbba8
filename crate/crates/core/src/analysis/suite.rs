//! Seeded check suites. Every group draws its instances from
//! `(seed + k, group tag)` streams, runs them in parallel, and folds the
//! per-instance measurements in seed order.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::random::{
    instance, random_cube, random_exponents, random_function, random_weight, random_weight_vector, stream, FamilySpec,
    Instance, Stream,
};
use crate::analysis::report::{reports_with, weight_constants, InequalityReport, RhsFactors};
use crate::analysis::testing::{testing_equiv_report, TestingReport, DEFAULT_PAIRS_PER_CUBE};
use crate::constants::{ainfty_constant, apq_per_cube, multilinear_ap_constant, transform_vector};
use crate::decompositions::{build_corona, build_principal_cubes, whitney, WhitneyDecomposition};
use crate::dyadic::{CellFunction, Cube, CubeFamily, GridId, ModelConfig};
use crate::error::{Result, WorkbenchError};
use crate::norms::lp_norm;
use crate::operators::{
    cube_sum_operator, dyadic_maximal, level_set_decomposition, multi_grid_maximal, sparse_operator,
};
use crate::sparse::{
    cz_sparse_from_functions, default_cz_ratio, random_sparse, random_sparse_in, verify_sparse, SparseFamily,
};

/// Relative slack for the exact inequalities.
pub const EXACT_TOLERANCE: f64 = 1e-9;
/// Cap on report ratios and on the recorded testing constant.
pub const RATIO_BUDGET: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Carleson,
    Transform,
    WeakMaximal,
    Sparse,
    Principal,
    Corona,
    Whitney,
    LevelSets,
    Monotonicity,
    SparseNorm,
    Localized,
    Domination,
}

impl Group {
    pub const ALL: [Group; 12] = [
        Group::Carleson,
        Group::Transform,
        Group::WeakMaximal,
        Group::Sparse,
        Group::Principal,
        Group::Corona,
        Group::Whitney,
        Group::LevelSets,
        Group::Monotonicity,
        Group::SparseNorm,
        Group::Localized,
        Group::Domination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::Carleson => "carleson",
            Group::Transform => "transform",
            Group::WeakMaximal => "weak_maximal",
            Group::Sparse => "sparse",
            Group::Principal => "principal",
            Group::Corona => "corona",
            Group::Whitney => "whitney",
            Group::LevelSets => "level_sets",
            Group::Monotonicity => "monotonicity",
            Group::SparseNorm => "sparse_norm",
            Group::Localized => "localized",
            Group::Domination => "domination",
        }
    }

    fn tag(self) -> u64 {
        0x100 + self as u64
    }

    /// Instances run for a suite of `seeds` seeds.
    pub fn instances(self, seeds: usize) -> usize {
        let n = match self {
            Group::Carleson | Group::WeakMaximal | Group::Sparse | Group::Principal => seeds,
            Group::Transform | Group::Domination => seeds / 4,
            _ => seeds / 2,
        };
        n.max(seeds.min(1))
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = WorkbenchError;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| WorkbenchError::Config(format!("unknown check group {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A measurement with no assertion attached.
    Recorded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check_name: String,
    pub status: Status,
    pub value: f64,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub instances: usize,
    /// First error raised by an instance, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Copy, Debug)]
enum Rule {
    /// Largest value must not exceed the bound.
    AtMost(f64),
    RecordMax,
    RecordMin,
    RecordMean,
}

struct Spec {
    name: &'static str,
    rule: Rule,
}

const fn at_most(name: &'static str, bound: f64) -> Spec {
    Spec {
        name,
        rule: Rule::AtMost(bound),
    }
}

const fn record(name: &'static str, rule: Rule) -> Spec {
    Spec { name, rule }
}

/// One value per spec, `None` where an instance has nothing to report.
type Obs = Vec<Option<f64>>;

fn fold(specs: &[Spec], outcomes: &[(u64, Result<Obs>)]) -> Vec<CheckResult> {
    let detail = outcomes
        .iter()
        .find_map(|(seed, r)| r.as_ref().err().map(|e| format!("seed {seed}: {e}")));
    specs
        .iter()
        .enumerate()
        .map(|(slot, spec)| {
            let values: Vec<f64> = outcomes
                .iter()
                .filter_map(|(_, r)| r.as_ref().ok().and_then(|o| o[slot]))
                .collect();
            let value = match spec.rule {
                Rule::AtMost(_) | Rule::RecordMax => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Rule::RecordMin => values.iter().copied().fold(f64::INFINITY, f64::min),
                Rule::RecordMean => values.iter().sum::<f64>() / values.len() as f64,
            };
            let value = if values.is_empty() { 0.0 } else { value };
            let (status, bound) = match spec.rule {
                Rule::AtMost(b) => {
                    let ok = detail.is_none() && values.iter().all(|v| *v <= b);
                    (if ok { Status::Pass } else { Status::Fail }, Some(b))
                }
                _ => (Status::Recorded, None),
            };
            CheckResult {
                check_name: spec.name.to_string(),
                status,
                value,
                bound,
                slack: bound.map(|b| b - value),
                instances: values.len(),
                detail: detail.clone(),
            }
        })
        .collect()
}

fn run<F>(seeds: impl Iterator<Item = u64>, specs: &[Spec], work: F) -> Vec<CheckResult>
where
    F: Fn(u64) -> Result<Obs> + Sync,
{
    let seeds: Vec<u64> = seeds.collect();
    let outcomes: Vec<(u64, Result<Obs>)> = seeds.par_iter().map(|&s| (s, work(s))).collect();
    fold(specs, &outcomes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub dim: usize,
    pub max_level: u32,
    /// First seed; instance `k` uses `seed + k`.
    pub seed: u64,
    pub seeds: usize,
    pub random_depth: u32,
    /// Stopping ratio for the stopping-time families; the default
    /// `2^{mn+1}` when absent.
    pub cz_ratio: Option<f64>,
    pub pairs_per_cube: usize,
    /// Depth of the model used for the testing constants.
    pub testing_level: u32,
    /// Groups to run; all when empty.
    pub groups: Vec<Group>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            max_level: 8,
            seed: 0,
            seeds: 200,
            random_depth: 6,
            cz_ratio: None,
            pairs_per_cube: DEFAULT_PAIRS_PER_CUBE,
            testing_level: 6,
            groups: Vec::new(),
        }
    }
}

impl SuiteConfig {
    pub fn model(&self) -> Result<ModelConfig> {
        ModelConfig::new(self.dim, self.max_level)
    }

    pub fn family_spec(&self) -> FamilySpec {
        FamilySpec {
            random_depth: self.random_depth,
            cz_ratio: Some(self.cz_ratio.unwrap_or_else(|| default_cz_ratio(2, self.dim))),
        }
    }

    pub fn selected(&self) -> Vec<Group> {
        if self.groups.is_empty() {
            Group::ALL.to_vec()
        } else {
            let set: BTreeSet<Group> = self.groups.iter().copied().collect();
            set.into_iter().collect()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        ModelConfig::new(self.dim, self.testing_level.min(self.max_level))?;
        if let Some(a) = self.cz_ratio {
            if !(a > 1.0) || !a.is_finite() {
                return Err(WorkbenchError::Config(format!("stopping ratio {a} must exceed 1")));
            }
        }
        if self.seed.checked_add(self.seeds as u64).is_none() {
            return Err(WorkbenchError::Config("seed range overflows".into()));
        }
        Ok(())
    }

    fn seeds_for(&self, group: Group) -> impl Iterator<Item = u64> {
        let start = self.seed;
        (0..group.instances(self.seeds) as u64).map(move |k| start + k)
    }
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub checks: Vec<CheckResult>,
    /// Wall time per group; not part of any deterministic output.
    pub timings: Vec<(Group, Duration)>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }
}

pub fn lemma_suite(config: &SuiteConfig) -> Result<SuiteResult> {
    config.validate()?;
    let mut checks = Vec::new();
    let mut timings = Vec::new();
    for group in config.selected() {
        let start = Instant::now();
        checks.extend(run_group(config, group)?);
        timings.push((group, start.elapsed()));
    }
    Ok(SuiteResult { checks, timings })
}

pub fn run_group(config: &SuiteConfig, group: Group) -> Result<Vec<CheckResult>> {
    let cfg = config.model()?;
    let spec = config.family_spec();
    let seeds = config.seeds_for(group);
    let tag = group.tag();
    let tol = 1.0 + EXACT_TOLERANCE;
    Ok(match group {
        Group::Carleson => run(
            seeds,
            &[
                at_most("carleson.sum_vs_maximal", tol),
                at_most("carleson.maximal_vs_ainfty", tol),
            ],
            |s| carleson(cfg, &mut stream(s, tag)),
        ),
        Group::Transform => run(
            seeds,
            &[
                at_most("transform.per_cube", 1e-10),
                at_most("transform.supremum", 1e-10),
            ],
            |s| transform(cfg, &mut stream(s, tag)),
        ),
        Group::WeakMaximal => run(
            seeds,
            &[
                at_most("weak_maximal.excess", EXACT_TOLERANCE),
                record("weak_maximal.ratio", Rule::RecordMax),
            ],
            |s| weak_maximal(&instance(cfg, s, spec)?),
        ),
        Group::Sparse => run(
            seeds,
            &[
                at_most("sparse.random", 0.0),
                at_most("sparse.e_sets", 0.0),
                at_most("sparse.cz", 0.0),
                at_most("sparse.subfamily", 0.0),
                record("sparse.cz_accepted", Rule::RecordMean),
            ],
            |s| sparse(cfg, spec, &mut stream(s, tag)),
        ),
        Group::Principal => run(
            seeds,
            &[
                at_most("principal.conditions", 0.0),
                at_most("principal.energy", 1.0),
                record("principal.energy_constant", Rule::RecordMax),
            ],
            |s| principal(cfg, &mut stream(s, tag)),
        ),
        Group::Corona => run(
            seeds,
            &[
                at_most("corona.conditions", 0.0),
                record("corona.tops", Rule::RecordMax),
            ],
            |s| corona(cfg, &mut stream(s, tag)),
        ),
        Group::Whitney => run(
            seeds,
            &[
                at_most("whitney.conditions", 0.0),
                at_most("whitney.overlap_1d", 4.0),
                at_most("whitney.overlap_2d", 16.0),
                record("whitney.covered_fraction", Rule::RecordMin),
            ],
            |s| whitney_pair(cfg, &mut stream(s, tag)),
        ),
        Group::LevelSets => run(seeds, &[at_most("level_sets.conditions", 0.0)], |s| {
            level_sets(&instance(cfg, s, spec)?)
        }),
        Group::Monotonicity => run(seeds, &[at_most("monotonicity.violations", 0.0)], |s| {
            monotonicity(&instance(cfg, s, spec)?, &mut stream(s, tag))
        }),
        Group::SparseNorm => run(seeds, &[record("sparse_norm.ratio", Rule::RecordMax)], |s| {
            sparse_norm(&instance(cfg, s, spec)?, &mut stream(s, tag))
        }),
        Group::Localized => run(seeds, &[record("localized.ratio", Rule::RecordMax)], |s| {
            localized(&instance(cfg, s, spec)?, &mut stream(s, tag))
        }),
        Group::Domination => run(seeds, &[record("domination.ratio", Rule::RecordMax)], |s| {
            domination(cfg, &mut stream(s, tag))
        }),
    })
}

fn random_grid(cfg: ModelConfig, rng: &mut Stream) -> GridId {
    let grids = cfg.grids();
    grids[rng.gen_range(0..grids.len())]
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn carleson(cfg: ModelConfig, rng: &mut Stream) -> Result<Obs> {
    let w = random_weight(cfg, rng)?;
    let grid = random_grid(cfg, rng);
    let s = random_cube(cfg, grid, rng, cfg.max_level().min(3));
    let room = cfg.max_level() - s.level;
    let depth = rng.gen_range(0..=room);
    let fam_seed = rng.gen::<u64>();
    let fam = if rng.gen_bool(0.5) {
        let a = default_cz_ratio(1, cfg.dim());
        match cz_sparse_from_functions(std::slice::from_ref(&w), grid, a) {
            Ok(f) => f.subfamily(|q| s.contains(q))?,
            Err(_) => random_sparse_in(cfg, s, fam_seed, depth)?,
        }
    } else {
        random_sparse_in(cfg, s, fam_seed, depth)?
    };
    let sum: f64 = fam.cubes().map(|q| w.cube_integral(q)).sum::<Result<f64>>()?;
    let local = dyadic_maximal(&[w.restrict(&s)?], grid)?;
    let maximal = 2.0 * local.restrict(&s)?.integral();
    let bound = 2.0 * ainfty_constant(&w, grid)?.value * w.cube_integral(&s)?;
    Ok(vec![Some(ratio(sum, maximal)), Some(ratio(maximal, bound))])
}

fn transform(cfg: ModelConfig, rng: &mut Stream) -> Result<Obs> {
    let exps = random_exponents(rng);
    let wv = random_weight_vector(cfg, exps, rng)?;
    let family = CubeFamily::all(cfg);
    let cubes: Vec<Cube> = if family.len() <= 4096 {
        family.cubes().collect()
    } else {
        (0..256)
            .map(|_| {
                let g = random_grid(cfg, rng);
                random_cube(cfg, g, rng, cfg.max_level())
            })
            .collect()
    };
    let sup = multilinear_ap_constant(&wv, &family)?.value;
    let exps = wv.exponents();
    let mut per_cube = 0.0f64;
    let mut supremum = 0.0f64;
    for i in 0..wv.m() {
        let e = exps.exponent_conj(i) / exps.p();
        let t = transform_vector(&wv, i)?;
        for q in &cubes {
            let want = apq_per_cube(&wv, q)?.powf(e);
            per_cube = per_cube.max((apq_per_cube(&t, q)? - want).abs() / want);
        }
        let want = sup.powf(e);
        supremum = supremum.max((multilinear_ap_constant(&t, &family)?.value - want).abs() / want);
    }
    Ok(vec![Some(per_cube), Some(supremum)])
}

/// `α v({M ≥ α})^{1/p}` against `[w⃗]^{1/p} Π‖f_i‖_{L^{p_i}(w_i)}` for every
/// attained value `α` of the grid's maximal function.
fn weak_maximal(inst: &Instance) -> Result<Obs> {
    let wv = &inst.wv;
    let exps = wv.exponents();
    let grid = inst.family.grid();
    let cfg = inst.cfg;
    let apbar = multilinear_ap_constant(wv, &CubeFamily::single(cfg, grid))?.value;
    let mut rhs = apbar.powf(1.0 / exps.p());
    for (i, f) in inst.f.iter().enumerate() {
        rhs *= lp_norm(f, wv.weight(i), exps.exponent(i))?;
    }
    let m = dyadic_maximal(&inst.f, grid)?;
    let mut order: Vec<usize> = (0..cfg.cell_count()).collect();
    order.sort_by(|&a, &b| m.values()[b].total_cmp(&m.values()[a]));
    let v = wv.combined().values();
    let mut excess = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    let mut mass = 0.0;
    let mut k = 0;
    while k < order.len() {
        let alpha = m.values()[order[k]];
        while k < order.len() && m.values()[order[k]] == alpha {
            mass += v[order[k]] * cfg.cell_volume();
            k += 1;
        }
        let lhs = alpha * mass.powf(1.0 / exps.p());
        excess = excess.max(lhs - rhs);
        worst = worst.max(ratio(lhs, rhs));
    }
    Ok(vec![Some(excess), Some(worst)])
}

/// Leaves of `E(Q)` for every cube, checked for the measure bound and for
/// disjointness with integer counts.
fn e_set_violations(fam: &SparseFamily) -> usize {
    let cfg = fam.config();
    let depth = cfg.max_level();
    let mut owner = vec![0u32; 1 << (depth as usize * cfg.dim())];
    let mut bad = 0;
    for (k, stage) in fam.stages().iter().enumerate() {
        for (pos, q) in stage.iter().enumerate() {
            let leaves = fam.e_leaves(k, pos);
            let total = 1usize << ((depth - q.level) as usize * cfg.dim());
            if 2 * leaves.len() < total {
                bad += 1;
            }
            for l in leaves {
                owner[l] += 1;
            }
        }
    }
    bad + owner.iter().filter(|&&c| c > 1).count()
}

/// A random strict sub-family, restaged.
fn strict_subfamily(fam: &SparseFamily, rng: &mut Stream) -> Option<Result<SparseFamily>> {
    let cubes: Vec<Cube> = fam.cubes().copied().collect();
    if cubes.is_empty() {
        return None;
    }
    let p = rng.gen_range(0.2..0.9);
    let mut keep: BTreeSet<Cube> = cubes.iter().filter(|_| rng.gen_bool(p)).copied().collect();
    if keep.len() == cubes.len() {
        keep.remove(&cubes[rng.gen_range(0..cubes.len())]);
    }
    Some(fam.subfamily(|q| keep.contains(q)))
}

fn sparse(cfg: ModelConfig, spec: FamilySpec, rng: &mut Stream) -> Result<Obs> {
    let grid = random_grid(cfg, rng);
    let depth = rng.gen_range(0..=spec.random_depth.min(cfg.max_level()));
    let fam = random_sparse(cfg, grid, rng.gen(), depth)?;
    let random_bad = usize::from(verify_sparse(cfg, grid, fam.stages()).is_err());
    let mut e_bad = e_set_violations(&fam);
    let g = vec![random_function(cfg, rng)?, random_function(cfg, rng)?];
    let a = spec.cz_ratio.unwrap_or_else(|| default_cz_ratio(2, cfg.dim()));
    let mut families = vec![fam];
    let (cz_bad, accepted) = match cz_sparse_from_functions(&g, grid, a) {
        Ok(cz) => {
            let bad = usize::from(verify_sparse(cfg, grid, cz.stages()).is_err());
            e_bad += e_set_violations(&cz);
            families.push(cz);
            (Some(bad as f64), 1.0)
        }
        Err(WorkbenchError::NotSparse(_)) => (None, 0.0),
        Err(e) => return Err(e),
    };
    let mut sub_bad = 0;
    for fam in &families {
        for _ in 0..3 {
            match strict_subfamily(fam, rng) {
                Some(Ok(sub)) => {
                    sub_bad += usize::from(verify_sparse(cfg, grid, sub.stages()).is_err());
                    e_bad += e_set_violations(&sub);
                }
                Some(Err(_)) => sub_bad += 1,
                None => {}
            }
        }
    }
    Ok(vec![
        Some(random_bad as f64),
        Some(e_bad as f64),
        cz_bad,
        Some(sub_bad as f64),
        Some(accepted),
    ])
}

fn subcubes(root: Cube, depth: u32) -> Vec<Cube> {
    let mut out = vec![root];
    let mut k = 0;
    while k < out.len() {
        if out[k].level < depth {
            let children = out[k].children();
            out.extend(children);
        }
        k += 1;
    }
    out
}

fn principal(cfg: ModelConfig, rng: &mut Stream) -> Result<Obs> {
    let f = random_function(cfg, rng)?;
    let sigma = random_weight(cfg, rng)?;
    let grid = random_grid(cfg, rng);
    let root = random_cube(cfg, grid, rng, cfg.max_level().min(2));
    let p1 = rng.gen_range(1.5..=4.0);
    let pc = build_principal_cubes(&f, &sigma, root)?;
    let fs = f.mul(&sigma)?;
    let avg = |q: &Cube| -> Result<f64> { Ok(fs.cube_integral(q)? / sigma.cube_integral(q)?) };
    let principal: BTreeSet<Cube> = pc.cubes().copied().collect();
    let mut bad = 0usize;
    if pc.generations()[0] != [root] {
        bad += 1;
    }
    for (k, gen) in pc.generations().iter().enumerate().skip(1) {
        for g in gen {
            let parent = g.parent().and_then(|p| pc.gamma(&p));
            match parent {
                Some(top) if pc.generations()[k - 1].contains(&top) => {
                    if avg(g)? <= 4.0 * avg(&top)? {
                        bad += 1;
                    }
                }
                _ => bad += 1,
            }
        }
    }
    for q in subcubes(root, cfg.max_level()) {
        let smallest = principal
            .iter()
            .filter(|g| g.contains(&q))
            .max_by_key(|g| g.level)
            .copied();
        match (pc.gamma(&q), smallest) {
            (Some(g), Some(s)) if g == s => {
                if avg(&q)? > 4.0 * avg(&g)? {
                    bad += 1;
                }
            }
            _ => bad += 1,
        }
    }
    let energy = pc.energy(p1);
    let norm = lp_norm(&f.restrict(&root)?, &sigma, p1)?.powf(p1);
    let constant = 4f64.powf(p1) * 2.0;
    Ok(vec![
        Some(bad as f64),
        Some(ratio(energy, constant * norm)),
        Some(ratio(energy, norm)),
    ])
}

fn corona(cfg: ModelConfig, rng: &mut Stream) -> Result<Obs> {
    let s1 = random_weight(cfg, rng)?;
    let s2 = random_weight(cfg, rng)?;
    let grid = random_grid(cfg, rng);
    let top_level = cfg.max_level().min(7);
    let keep = rng.gen_range(0.05..0.6);
    let mut cubes = Vec::new();
    for k in 0..=top_level {
        for q in cfg.cubes_at_level(grid, k)? {
            if rng.gen_bool(keep) {
                cubes.push(q);
            }
        }
    }
    if cubes.is_empty() {
        cubes.push(cfg.root(grid));
    }
    let cor = build_corona(&cubes, &s1, &s2)?;
    let rho =
        |q: &Cube| -> Result<f64> { Ok(s1.cube_integral(q)? * s2.cube_integral(q)? / (q.measure() * q.measure())) };
    let mut bad = 0usize;
    let blocks: usize = cor.tops().iter().map(|t| cor.block(t).len()).sum();
    if blocks != cubes.len() || cor.len() != cubes.len() {
        bad += 1;
    }
    for q in &cubes {
        let maximal = !cubes.iter().any(|c| c.strictly_contains(q));
        if maximal && !cor.tops().contains(q) {
            bad += 1;
        }
        let smallest = cor
            .tops()
            .iter()
            .filter(|t| t.contains(q))
            .max_by_key(|t| t.level)
            .copied();
        match (cor.lambda(q), smallest) {
            (Some(l), Some(s)) if l == s => {
                if rho(q)? > 4.0 * rho(&l)? {
                    bad += 1;
                }
            }
            _ => bad += 1,
        }
    }
    for inner in cor.tops() {
        if !cubes.contains(inner) {
            bad += 1;
        }
        for outer in cor.tops().iter().filter(|o| o.strictly_contains(inner)) {
            if rho(inner)? <= 4.0 * rho(outer)? {
                bad += 1;
            }
        }
    }
    Ok(vec![Some(bad as f64), Some(cor.tops().len() as f64)])
}

/// A proper, non-empty random cell set: iid cells, a union of cubes, or the
/// complement of a few cubes.
fn random_mask(cfg: ModelConfig, rng: &mut Stream) -> Vec<bool> {
    let count = cfg.cell_count();
    let mut mask = match rng.gen_range(0..3) {
        0 => {
            let p = rng.gen_range(0.2..0.9);
            (0..count).map(|_| rng.gen_bool(p)).collect()
        }
        mode => {
            let mut m = vec![mode == 2; count];
            for _ in 0..rng.gen_range(1..=4) {
                let q = random_cube(cfg, cfg.base_grid(), rng, cfg.max_level());
                cfg.for_each_cell(&q, |c| m[c] = mode == 1);
            }
            m
        }
    };
    if !mask.iter().any(|&b| b) {
        mask[rng.gen_range(0..count)] = true;
    }
    mask
}

/// Containment, disjoint interiors and the distance band, recomputed by
/// brute force from the unit lattice.
fn whitney_violations(mask: &[bool], cfg: ModelConfig, dec: &WhitneyDecomposition) -> usize {
    let dim = cfg.dim();
    let units = dec.units();
    let cell = units / cfg.resolution() as i64;
    let inside = |u: [i64; 2]| {
        let i0 = (u[0] / cell) as usize;
        let c = if dim == 1 {
            i0
        } else {
            i0 * cfg.resolution() + (u[1] / cell) as usize
        };
        mask[c]
    };
    let outside: Vec<[i64; 2]> = (0..mask.len())
        .filter(|&c| !mask[c])
        .map(|c| {
            let co = cfg.cell_coords(c);
            [co[0] as i64 * cell, co[1] as i64 * cell]
        })
        .collect();
    let span = if dim == 1 { 1 } else { units as usize };
    let mut seen = vec![false; units as usize * span];
    let mut bad = 0;
    for q in dec.cubes() {
        let (lo, s) = (q.lo, q.side);
        let ys = if dim == 1 { 0..1 } else { lo[1]..lo[1] + s };
        for a in lo[0]..lo[0] + s {
            for b in ys.clone() {
                let slot = a as usize * span + b as usize;
                if !inside([a, b]) || seen[slot] {
                    bad += 1;
                }
                seen[slot] = true;
            }
        }
        let mut d2 = i64::MAX;
        for a in 0..dim {
            let edge = lo[a].min(units - lo[a] - s);
            d2 = d2.min(edge * edge);
        }
        for c in &outside {
            let mut d = 0;
            for a in 0..dim {
                let gap = (c[a] - lo[a] - s).max(lo[a] - c[a] - cell).max(0);
                d += gap * gap;
            }
            d2 = d2.min(d);
        }
        let diam2 = dim as i64 * s * s;
        if d2 < diam2 || d2 > 16 * diam2 {
            bad += 1;
        }
    }
    bad
}

fn whitney_pair(cfg: ModelConfig, rng: &mut Stream) -> Result<Obs> {
    let one = ModelConfig::new(1, cfg.max_level())?;
    let two = ModelConfig::new(2, cfg.max_level().min(3))?;
    let mut bad = 0;
    let mut overlap = [0.0; 2];
    let mut covered = f64::INFINITY;
    for (slot, c) in [one, two].into_iter().enumerate() {
        let mask = random_mask(c, rng);
        let dec = whitney(&mask, c)?;
        bad += whitney_violations(&mask, c, &dec);
        overlap[slot] = dec.overlap() as f64;
        covered = covered.min(dec.covered_fraction());
    }
    Ok(vec![
        Some(bad as f64),
        Some(overlap[0]),
        Some(overlap[1]),
        Some(covered),
    ])
}

fn weighted_inputs(inst: &Instance) -> Result<Vec<CellFunction>> {
    inst.f.iter().zip(inst.wv.duals()).map(|(f, s)| f.mul(s)).collect()
}

fn level_sets(inst: &Instance) -> Result<Obs> {
    let g = weighted_inputs(inst)?;
    let dec = level_set_decomposition(&inst.family, &g)?;
    let cfg = inst.cfg;
    let mut bad = 0usize;
    let mut owner = vec![0u32; cfg.cell_count()];
    for (k, set) in dec.levels().iter().enumerate() {
        if let Some(next) = dec.levels().get(k + 1) {
            if next.omega.iter().zip(&set.omega).any(|(&a, &b)| a && !b) {
                bad += 1;
            }
        }
        for (j, q) in set.cubes.iter().enumerate() {
            let cells = cfg.cells(q);
            if cells.iter().any(|&c| !set.omega[c]) {
                bad += 1;
            }
            if let Some(p) = q.parent() {
                if cfg.cells(&p).iter().all(|&c| set.omega[c]) {
                    bad += 1;
                }
            }
            if set.cubes[..j].iter().any(|r| !r.is_disjoint(q)) {
                bad += 1;
            }
            for (c, &e) in set.e_sets[j].iter().enumerate() {
                if e {
                    owner[c] += 1;
                    if !cells.contains(&c) {
                        bad += 1;
                    }
                }
            }
        }
    }
    bad += owner.iter().filter(|&&c| c > 1).count();
    Ok(vec![Some(bad as f64)])
}

/// A chain of sub-families grown to the full family; the operator, and both
/// norms of it, must not decrease along the chain.
fn monotonicity(inst: &Instance, rng: &mut Stream) -> Result<Obs> {
    let g = weighted_inputs(inst)?;
    let wv = &inst.wv;
    let p = wv.exponents().p();
    let cubes: Vec<Cube> = inst.family.cubes().copied().collect();
    let rank: Vec<u8> = cubes.iter().map(|_| rng.gen_range(0..3)).collect();
    let mut prev: Option<(CellFunction, f64, f64)> = None;
    let mut bad = 0usize;
    for t in 0..3u8 {
        let a = cube_sum_operator(cubes.iter().zip(&rank).filter(|(_, &r)| r <= t).map(|(q, _)| q), &g)?;
        let strong = lp_norm(&a, wv.combined(), p)?;
        let weak = crate::norms::weak_lp_norm(&a, wv.combined(), p)?;
        if let Some((pa, ps, pw)) = &prev {
            bad += pa.values().iter().zip(a.values()).filter(|(x, y)| x > y).count();
            bad += usize::from(*ps > strong) + usize::from(*pw > weak);
        }
        prev = Some((a, strong, weak));
    }
    let full = sparse_operator(&inst.family, &g)?;
    if Some(&full) != prev.as_ref().map(|x| &x.0) {
        bad += 1;
    }
    Ok(vec![Some(bad as f64)])
}

fn pick_cube(fam: &SparseFamily, rng: &mut Stream) -> Option<Cube> {
    let cubes: Vec<Cube> = fam.cubes().copied().collect();
    (!cubes.is_empty()).then(|| cubes[rng.gen_range(0..cubes.len())])
}

/// `‖A_𝒬(σ_1 1_S, σ_2 1_S)‖_{L^p(v)}` over `[w⃗]^{1/p} Π_i (Σ_Q σ_i(Q))^{1/p_i}`,
/// with `𝒬` the family cubes inside a family cube `S`.
fn sparse_norm(inst: &Instance, rng: &mut Stream) -> Result<Obs> {
    let Some(s) = pick_cube(&inst.family, rng) else {
        return Ok(vec![None]);
    };
    let wv = &inst.wv;
    let exps = wv.exponents();
    let inside: Vec<Cube> = inst.family.cubes().filter(|q| s.contains(q)).copied().collect();
    let g = wv.duals().iter().map(|d| d.restrict(&s)).collect::<Result<Vec<_>>>()?;
    let a = cube_sum_operator(&inside, &g)?;
    let lhs = lp_norm(&a, wv.combined(), exps.p())?;
    let apbar = multilinear_ap_constant(wv, &CubeFamily::all(inst.cfg))?.value;
    let mut rhs = apbar.powf(1.0 / exps.p());
    for (i, d) in wv.duals().iter().enumerate() {
        let mass: f64 = inside.iter().map(|q| d.cube_integral(q)).sum::<Result<f64>>()?;
        rhs *= mass.powf(1.0 / exps.exponent(i));
    }
    Ok(vec![Some(ratio(lhs, rhs))])
}

/// `‖1_S A(f_1 σ_1, σ_2 1_S)‖_{L^p(v)}` with `f_1` supported in a family
/// cube `S`, over `[w⃗]^{1/p} [σ_2]^{1/p_2} ([v]^{1/p'} + [σ_1]^{1/p_1})
/// ‖f_1‖_{L^{p_1}(σ_1)} σ_2(S)^{1/p_2}`.
fn localized(inst: &Instance, rng: &mut Stream) -> Result<Obs> {
    let Some(s) = pick_cube(&inst.family, rng) else {
        return Ok(vec![None]);
    };
    let wv = &inst.wv;
    let exps = wv.exponents();
    let (p, p1, p2) = (exps.p(), exps.exponent(0), exps.exponent(1));
    let f1 = inst.f[0].restrict(&s)?;
    let g = vec![f1.mul(wv.dual(0))?, wv.dual(1).restrict(&s)?];
    let a = sparse_operator(&inst.family, &g)?.restrict(&s)?;
    let lhs = lp_norm(&a, wv.combined(), p)?;
    let c = weight_constants(wv)?;
    let rhs = c.apbar.powf(1.0 / p)
        * c.ainfty_sigma[1].powf(1.0 / p2)
        * (c.ainfty_v.powf(1.0 / exps.p_conj()) + c.ainfty_sigma[0].powf(1.0 / p1))
        * lp_norm(&f1, wv.dual(0), p1)?
        * wv.dual(1).cube_integral(&s)?.powf(1.0 / p2);
    Ok(vec![Some(ratio(lhs, rhs))])
}

/// Largest ratio, over cells, of the bilinear maximal function over all
/// cell-aligned periodic intervals to the maximum over the shifted grids.
fn domination(cfg: ModelConfig, rng: &mut Stream) -> Result<Obs> {
    let c = ModelConfig::new(1, cfg.max_level().min(5))?;
    let g = vec![random_function(c, rng)?, random_function(c, rng)?];
    let shifted = multi_grid_maximal(&g)?;
    let n = c.resolution();
    let prefix: Vec<Vec<f64>> = g
        .iter()
        .map(|f| {
            let mut acc = vec![0.0; 2 * n + 1];
            for k in 0..2 * n {
                acc[k + 1] = acc[k] + f.values()[k % n];
            }
            acc
        })
        .collect();
    let mut full = vec![0.0f64; n];
    for start in 0..n {
        for len in 1..=n {
            let prod: f64 = prefix
                .iter()
                .map(|acc| (acc[start + len] - acc[start]) / len as f64)
                .product();
            for k in start..start + len {
                let cell = k % n;
                full[cell] = full[cell].max(prod);
            }
        }
    }
    let worst = full
        .iter()
        .zip(shifted.values())
        .map(|(&a, &b)| ratio(a, b))
        .fold(0.0, f64::max);
    Ok(vec![Some(worst)])
}

/// Reports of one seed: strong, weak and the testing comparison, the last on
/// the shallower testing model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceReports {
    pub seed: u64,
    pub exponents: Vec<f64>,
    pub family_kind: &'static str,
    pub family_cubes: usize,
    pub strong: InequalityReport,
    pub weak: InequalityReport,
    pub testing: TestingReport,
    /// Constants of the testing instance.
    pub testing_factors: RhsFactors,
    pub testing_family_kind: &'static str,
    pub testing_cubes: usize,
}

#[derive(Clone, Debug)]
pub struct ReportSuite {
    pub instances: Vec<InstanceReports>,
    pub checks: Vec<CheckResult>,
}

impl ReportSuite {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }
}

fn instance_reports(config: &SuiteConfig, seed: u64) -> Result<InstanceReports> {
    let cfg = config.model()?;
    let spec = config.family_spec();
    let inst = instance(cfg, seed, spec)?;
    let consts = weight_constants(&inst.wv)?;
    let [strong, weak] = reports_with(&inst.wv, &inst.f, &inst.family, &consts, Some(seed))?;
    let tcfg = ModelConfig::new(config.dim, config.testing_level.min(config.max_level))?;
    let tinst = instance(tcfg, seed, spec)?;
    let tconsts = weight_constants(&tinst.wv)?;
    let testing = testing_equiv_report(&tinst.wv, &tinst.family, config.pairs_per_cube, seed, tconsts.apbar)?;
    let testing_factors = RhsFactors {
        apbar: tconsts.apbar,
        ainfty_v: tconsts.ainfty_v,
        ainfty_sigma: tconsts.ainfty_sigma,
        norm_sigma: Vec::new(),
        norm_w: Vec::new(),
    };
    Ok(InstanceReports {
        seed,
        exponents: inst.wv.exponents().exponents().to_vec(),
        family_kind: inst.family_kind,
        family_cubes: inst.family.len(),
        strong,
        weak,
        testing,
        testing_factors,
        testing_family_kind: tinst.family_kind,
        testing_cubes: tinst.family.len(),
    })
}

/// Strong and weak reports and the testing comparison for `seeds`
/// consecutive seeds.
pub fn report_suite(config: &SuiteConfig) -> Result<ReportSuite> {
    config.validate()?;
    let seeds: Vec<u64> = (0..config.seeds as u64).map(|k| config.seed + k).collect();
    let instances = seeds
        .par_iter()
        .map(|&s| instance_reports(config, s))
        .collect::<Result<Vec<_>>>()?;
    let specs = [
        at_most("report.strong_ratio", RATIO_BUDGET),
        at_most("report.weak_ratio", RATIO_BUDGET),
        at_most("report.reassembly", 1e-12),
        at_most("report.weak_below_strong", 1.0 + 1e-12),
        at_most("testing.easy_direction", 1.0 + EXACT_TOLERANCE),
        at_most("testing.constant", RATIO_BUDGET),
    ];
    let outcomes: Vec<(u64, Result<Obs>)> = instances
        .iter()
        .map(|r| {
            let exps = crate::weights::ExponentSystem::new(r.exponents.clone());
            let obs = exps.map(|e| {
                let reassembly = [&r.strong, &r.weak]
                    .iter()
                    .map(|x| (x.reassembled(&e) - x.rhs).abs() / x.rhs.abs().max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                vec![
                    Some(r.strong.ratio),
                    Some(r.weak.ratio),
                    Some(reassembly),
                    Some(ratio(r.weak.lhs, r.strong.lhs)),
                    Some(r.testing.easy_ratio),
                    Some(r.testing.c),
                ]
            });
            (r.seed, obs)
        })
        .collect();
    Ok(ReportSuite {
        checks: fold(&specs, &outcomes),
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig {
            max_level: 5,
            seeds: 8,
            testing_level: 4,
            pairs_per_cube: 4,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn group_names_round_trip() {
        for g in Group::ALL {
            assert_eq!(g.name().parse::<Group>().unwrap(), g);
        }
        assert!("nope".parse::<Group>().is_err());
    }

    #[test]
    fn small_suite_passes_and_is_reproducible() {
        let c = small();
        let a = lemma_suite(&c).unwrap();
        for check in &a.checks {
            assert_ne!(check.status, Status::Fail, "{check:?}");
        }
        let b = lemma_suite(&c).unwrap();
        assert_eq!(a.checks, b.checks);
    }

    #[test]
    fn selection_runs_one_group() {
        let c = SuiteConfig {
            groups: vec![Group::Carleson],
            ..small()
        };
        let r = lemma_suite(&c).unwrap();
        assert!(r.checks.iter().all(|c| c.check_name.starts_with("carleson.")));
        assert_eq!(r.checks.len(), 2);
    }

    #[test]
    fn fold_flags_errors_and_bounds() {
        let specs = [at_most("x", 1.0), record("y", Rule::RecordMin)];
        let ok: Vec<(u64, Result<Obs>)> = vec![(0, Ok(vec![Some(0.5), Some(3.0)])), (1, Ok(vec![Some(1.0), None]))];
        let r = fold(&specs, &ok);
        assert_eq!(r[0].status, Status::Pass);
        assert_eq!(r[0].slack, Some(0.0));
        assert_eq!((r[1].value, r[1].instances), (3.0, 1));
        let over = vec![(0, Ok(vec![Some(1.5), None]))];
        assert_eq!(fold(&specs, &over)[0].status, Status::Fail);
        let err = vec![(7, Err(WorkbenchError::Domain("boom".into())))];
        let r = fold(&specs, &err);
        assert_eq!(r[0].status, Status::Fail);
        assert!(r[0].detail.as_deref().unwrap().starts_with("seed 7"));
    }

    #[test]
    fn report_suite_rows() {
        let r = report_suite(&SuiteConfig { seeds: 2, ..small() }).unwrap();
        assert_eq!(r.instances.len(), 2);
        assert!(r.passed(), "{:?}", r.checks);
    }
}
