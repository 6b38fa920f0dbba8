//! The bilinear rough operator with kernel
//! `(2x - y1 - y2) / ((x - y1)^2 + (x - y2)^2)^{3/2}` on the line, applied to
//! `f(y) = y^{ε-1} 1_{(0,1]}` at exterior points `x > 1`, where the kernel is
//! positive and smooth. Every quantity here is a lower bound.
//!
//! On a box `[a1,b1] × [a2,b2]` the numerator is at least `(x-b1) + (x-b2)`
//! and the denominator at most `((x-a1)^2 + (x-a2)^2)^{3/2}`; the densities are
//! integrated in closed form. In `x` the kernel is decreasing, so each `x`
//! panel uses its right endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};
use crate::weights::{power_integral, ExponentSystem};

/// Graded meshes for the inner `(0,1]^2` integral and the outer `x`
/// integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureMesh {
    /// Halving steps toward each end of `(0,1]`.
    pub levels: u32,
    /// Uniform panels inside each geometric piece.
    pub subdivisions: u32,
    /// Halving steps of `x - 1` toward 1.
    pub x_levels: u32,
    /// Uniform panels inside each outer piece.
    pub x_subdivisions: u32,
    /// End of the quadrature range in `x`; beyond it a closed-form tail.
    pub x_max: f64,
}

impl Default for QuadratureMesh {
    fn default() -> Self {
        Self {
            levels: 16,
            subdivisions: 2,
            x_levels: 12,
            x_subdivisions: 4,
            x_max: 64.0,
        }
    }
}

impl QuadratureMesh {
    fn check(&self) -> Result<()> {
        if self.levels == 0 || self.levels > 60 || self.subdivisions == 0 || self.x_subdivisions == 0 {
            return Err(WorkbenchError::Config(format!("degenerate quadrature mesh {self:?}")));
        }
        if self.x_levels > 60 {
            return Err(WorkbenchError::Config("x_levels above 60".into()));
        }
        if !(self.x_max >= 2.0) || !self.x_max.is_finite() {
            return Err(WorkbenchError::Config(format!(
                "x_max {} must be at least 2",
                self.x_max
            )));
        }
        Ok(())
    }

    /// Panel breakpoints of `[0,1]`, ascending.
    fn y_nodes(&self) -> Vec<f64> {
        let k = self.levels as i32;
        let mut pieces = vec![0.0];
        for j in (1..=k).rev() {
            pieces.push(0.5f64.powi(j));
        }
        for j in 2..=k {
            pieces.push(1.0 - 0.5f64.powi(j));
        }
        pieces.push(1.0);
        subdivide(&pieces, self.subdivisions)
    }

    /// Panel breakpoints of `(1, x_max]`, ascending, starting at
    /// `1 + 2^{-x_levels}`.
    fn x_nodes(&self) -> Vec<f64> {
        let mut pieces: Vec<f64> = (0..=self.x_levels as i32).rev().map(|j| 1.0 + 0.5f64.powi(j)).collect();
        let mut x = 2.0f64;
        while x < self.x_max {
            x = (2.0 * x).min(self.x_max);
            pieces.push(x);
        }
        subdivide(&pieces, self.x_subdivisions)
    }
}

fn subdivide(pieces: &[f64], s: u32) -> Vec<f64> {
    let mut out = vec![pieces[0]];
    for w in pieces.windows(2) {
        for t in 1..=s {
            out.push(if t == s {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * f64::from(t) / f64::from(s)
            });
        }
    }
    out
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(WorkbenchError::Domain(format!("ε = {eps} not in (0, 1]")));
    }
    Ok(())
}

/// Lower bound for `R_1(f, f)(x)` with `f = y^{ε-1} 1_{(0,1]}`, `x > 1`.
pub fn riesz_like_apply(eps: f64, x: f64, mesh: &QuadratureMesh) -> Result<f64> {
    check_eps(eps)?;
    mesh.check()?;
    if !(x > 1.0) || !x.is_finite() {
        return Err(WorkbenchError::Domain(format!(
            "evaluation point {x} must lie beyond 1"
        )));
    }
    let nodes = mesh.y_nodes();
    Ok(apply_on_nodes(eps, x, &nodes))
}

fn apply_on_nodes(eps: f64, x: f64, nodes: &[f64]) -> f64 {
    let mass: Vec<f64> = nodes
        .windows(2)
        .map(|w| power_integral(eps - 1.0, w[0], w[1]))
        .collect();
    let mut total = 0.0;
    for (i, w1) in nodes.windows(2).enumerate() {
        let (near1, far1) = (x - w1[1], x - w1[0]);
        for (j, w2) in nodes.windows(2).enumerate() {
            let (near2, far2) = (x - w2[1], x - w2[0]);
            let k = (near1 + near2) / (far1 * far1 + far2 * far2).powf(1.5);
            total += k * mass[i] * mass[j];
        }
    }
    total
}

/// The lower functional `(∫_{x>1} R_1(f,f)^p v)^{1/p}` with
/// `v = x^{(1-ε)(2p-1)}`, split into the quadrature part on `(1, x_max]`
/// and a closed-form tail beyond `x_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct R1Functional {
    pub value: f64,
    pub near: f64,
    pub tail: f64,
}

/// For `x ≥ X` every `u_i = x - y_i` lies in `[x-1, x)`, so the kernel is at
/// least `(1 - 1/X) / (√2 x^2)`; the densities each integrate to `1/ε`.
fn tail_integral(eps: f64, p: f64, x_max: f64) -> f64 {
    let c = (1.0 - 1.0 / x_max) / (std::f64::consts::SQRT_2 * eps * eps);
    let decay = eps * (2.0 * p - 1.0);
    c.powf(p) * x_max.powf(-decay) / decay
}

pub fn r1_lower_functional(eps: f64, exps: &ExponentSystem, mesh: &QuadratureMesh) -> Result<R1Functional> {
    check_eps(eps)?;
    mesh.check()?;
    if exps.m() != 2 {
        return Err(WorkbenchError::Unsupported(format!(
            "the rough operator is bilinear, got m = {}",
            exps.m()
        )));
    }
    exps.require_p_above_one()?;
    let p = exps.p();
    let a = (1.0 - eps) * (2.0 * p - 1.0);
    let y_nodes = mesh.y_nodes();
    let mut near = 0.0;
    for w in mesh.x_nodes().windows(2) {
        let r = apply_on_nodes(eps, w[1], &y_nodes);
        near += r.powf(p) * power_integral(a, w[0], w[1]);
    }
    let tail = tail_integral(eps, p, mesh.x_max);
    Ok(R1Functional {
        value: (near + tail).powf(1.0 / p),
        near,
        tail,
    })
}
