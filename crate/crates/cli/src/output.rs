use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use workbench_core::analysis::suite::InstanceReports;
use workbench_core::analysis::sweep::Relation;
use workbench_core::analysis::{CheckResult, RhsFactors, SlopeCheck, Status, SweepResult};

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// A fitted slope in the same shape as the suite checks.
#[derive(Debug, Serialize)]
pub struct SlopeRecord {
    pub check_name: String,
    pub status: Status,
    pub value: f64,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub target: f64,
    pub relation: Relation,
    pub residual: f64,
}

pub fn slope_record(s: &SlopeCheck, tolerance: f64) -> SlopeRecord {
    let (bound, slack) = match s.relation {
        Relation::Near => (
            Some(tolerance * s.target),
            Some(tolerance * s.target - (s.slope - s.target).abs()),
        ),
        Relation::AtLeast => {
            let b = s.target * (1.0 - tolerance);
            (Some(b), Some(s.slope - b))
        }
        Relation::AtMost => {
            let b = s.target * (1.0 + tolerance);
            (Some(b), Some(b - s.slope))
        }
        Relation::Record => (None, None),
    };
    let status = match (s.relation, s.pass) {
        (Relation::Record, _) => Status::Recorded,
        (_, true) => Status::Pass,
        (_, false) => Status::Fail,
    };
    SlopeRecord {
        check_name: format!("sweep.{}", s.name),
        status,
        value: s.slope,
        bound,
        slack,
        target: s.target,
        relation: s.relation,
        residual: s.residual,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn at(v: &[f64], i: usize) -> String {
    opt(v.get(i).copied())
}

pub const SWEEP_HEADER: &str = "eps,apbar,ainf_sigma1,ainf_sigma2,ainf_v,norm_f1,norm_f2,r1_lower";

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.eps,
            r.apbar,
            at(&r.ainf_sigma, 0),
            at(&r.ainf_sigma, 1),
            r.ainf_v,
            at(&r.norm_f, 0),
            at(&r.norm_f, 1),
            r.r1_lower
        );
    }
    out.push_str("# slope,name,slope,target,relation,residual,pass\n");
    for s in &result.slopes {
        let relation = serde_json::to_value(s.relation)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned));
        let _ = writeln!(
            out,
            "# slope,{},{},{},{},{},{}",
            s.name,
            s.slope,
            s.target,
            relation.unwrap_or_default(),
            s.residual,
            s.pass
        );
    }
    out
}

pub const REPORT_HEADER: &str = "seed,row,family,cubes,p1,p2,lhs,rhs,ratio,apbar,ainfty_v,ainfty_sigma1,ainfty_sigma2,\
norm_sigma1,norm_sigma2,norm_w1,norm_w2";

#[allow(clippy::too_many_arguments)]
fn report_row(
    out: &mut String,
    r: &InstanceReports,
    row: &str,
    family: &str,
    cubes: usize,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    f: &RhsFactors,
) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.seed,
        row,
        family,
        cubes,
        at(&r.exponents, 0),
        at(&r.exponents, 1),
        lhs,
        rhs,
        ratio,
        f.apbar,
        f.ainfty_v,
        at(&f.ainfty_sigma, 0),
        at(&f.ainfty_sigma, 1),
        at(&f.norm_sigma, 0),
        at(&f.norm_sigma, 1),
        at(&f.norm_w, 0),
        at(&f.norm_w, 1)
    );
}

pub fn report_csv(instances: &[InstanceReports]) -> String {
    let mut out = String::new();
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for r in instances {
        for rep in [&r.strong, &r.weak] {
            report_row(
                &mut out,
                r,
                rep.kind.name(),
                r.family_kind,
                r.family_cubes,
                rep.lhs,
                rep.rhs,
                rep.ratio,
                &rep.factors,
            );
        }
        let t = &r.testing;
        report_row(
            &mut out,
            r,
            "testing_easy",
            r.testing_family_kind,
            r.testing_cubes,
            t.t_star,
            t.p_conj * t.w,
            t.easy_ratio,
            &r.testing_factors,
        );
        report_row(
            &mut out,
            r,
            "testing_bound",
            r.testing_family_kind,
            r.testing_cubes,
            t.w,
            t.t_star + t.apbar_root,
            t.c,
            &r.testing_factors,
        );
    }
    out
}

pub fn check_line(c: &CheckResult) -> String {
    let tag = match c.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Recorded => "----",
    };
    let mut line = format!("{tag} {} value={}", c.check_name, c.value);
    if let Some(b) = c.bound {
        let _ = write!(line, " bound={b}");
    }
    if let Some(d) = &c.detail {
        let _ = write!(line, " ({d})");
    }
    line
}

pub fn slope_line(s: &SlopeRecord) -> String {
    let tag = match s.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Recorded => "----",
    };
    format!("{tag} {} slope={} target={}", s.check_name, s.value, s.target)
}
