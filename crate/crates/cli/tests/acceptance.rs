use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use serde_json::Value;

const COMMANDS: [(&str, &[&str]); 3] = [
    ("check", &["check_summary.json"]),
    ("sweep", &["sweep.csv", "sweep_summary.json"]),
    ("report", &["report.csv", "report_summary.json"]),
];

struct Run {
    code: Option<i32>,
    elapsed: Duration,
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.json")
}

fn run(cmd: &str, out: &Path, threads: &str) -> Run {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_workbench"))
        .arg(cmd)
        .arg("--config")
        .arg(bundled_config())
        .arg("--out")
        .arg(out)
        .env("WORKBENCH_THREADS", threads)
        .output()
        .expect("workbench binary runs");
    Run {
        code: status.status.code(),
        elapsed: start.elapsed(),
    }
}

fn checks(path: &Path) -> Vec<Value> {
    let text = fs::read_to_string(path).unwrap_or_default();
    match serde_json::from_str(&text) {
        Ok(Value::Array(v)) => v,
        _ => Vec::new(),
    }
}

fn find<'a>(checks: &'a [Value], name: &str) -> Option<&'a Value> {
    checks.iter().find(|c| c["check_name"] == name)
}

/// All named checks present, passing, and run on at least `instances`.
fn all_pass(checks: &[Value], names: &[&str], instances: u64) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        match find(checks, name) {
            Some(c) => {
                let pass = c["status"] == "pass" && c["instances"].as_u64().unwrap_or(0) >= instances;
                ok &= pass;
                parts.push(format!(
                    "{name}={} ({})",
                    c["value"],
                    c["status"].as_str().unwrap_or("?")
                ));
            }
            None => {
                ok = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    (ok, parts.join(", "))
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temp dir");
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| root.path().join(d)).collect();
    for d in &dirs {
        fs::create_dir(d).expect("output dir");
    }
    let total = Instant::now();
    let mut first = Vec::new();
    for (cmd, _) in COMMANDS {
        first.push(run(cmd, &dirs[0], "8"));
        run(cmd, &dirs[1], "8");
        run(cmd, &dirs[2], "1");
    }
    let total = total.elapsed();

    let suite = checks(&dirs[0].join("check_summary.json"));
    let report = checks(&dirs[0].join("report_summary.json"));
    let slopes = checks(&dirs[0].join("sweep_summary.json"));
    let sweep_csv = fs::read_to_string(dirs[0].join("sweep.csv")).unwrap_or_default();

    let mut lines: Vec<(bool, String)> = Vec::new();

    let (ok, detail) = all_pass(&suite, &["carleson.sum_vs_maximal", "carleson.maximal_vs_ainfty"], 200);
    let check_time = first[0].elapsed;
    lines.push((
        ok && first[0].code == Some(0) && check_time < Duration::from_secs(60),
        format!(
            "carleson bound on 200 instances: {detail}, check run {:.1}s",
            check_time.as_secs_f64()
        ),
    ));

    let (ok, detail) = all_pass(&suite, &["transform.per_cube", "transform.supremum"], 50);
    lines.push((ok, format!("transform identity to 1e-10: {detail}")));

    let (ok, detail) = all_pass(&suite, &["weak_maximal.excess"], 200);
    lines.push((ok, format!("weak maximal bound, slack 1e-9: {detail}")));

    let (ok, detail) = all_pass(
        &suite,
        &["sparse.random", "sparse.cz", "sparse.subfamily", "sparse.e_sets"],
        1,
    );
    lines.push((ok, format!("sparseness verified exactly: {detail}")));

    let (ok, detail) = all_pass(
        &suite,
        &[
            "principal.conditions",
            "corona.conditions",
            "whitney.conditions",
            "whitney.overlap_1d",
            "whitney.overlap_2d",
        ],
        100,
    );
    lines.push((ok, format!("principal, corona and whitney conditions: {detail}")));

    let rows = sweep_csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count()
        .saturating_sub(1);
    let names = [
        "sweep.apbar",
        "sweep.norm_product",
        "sweep.r1_lower",
        "sweep.ainf_sigma1",
        "sweep.ainf_sigma2",
    ];
    let (ok, detail) = all_pass(&slopes, &names, 0);
    let sweep_time = first[1].elapsed;
    lines.push((
        ok && rows == 8 && first[1].code == Some(0) && sweep_time < Duration::from_secs(180),
        format!(
            "sweep slopes over {rows} rows: {detail}, sweep run {:.1}s",
            sweep_time.as_secs_f64()
        ),
    ));

    let (ok, detail) = all_pass(&report, &["report.strong_ratio", "report.weak_ratio"], 200);
    lines.push((
        ok && first[2].code == Some(0),
        format!("report ratios at most 10: {detail}"),
    ));

    let (ok, detail) = all_pass(&report, &["testing.easy_direction", "testing.constant"], 200);
    lines.push((ok, format!("testing directions: {detail}")));

    let mut differing = Vec::new();
    for (_, files) in COMMANDS {
        for f in files {
            let a = fs::read(dirs[0].join(f)).ok();
            let same = a.is_some() && dirs[1..].iter().all(|d| fs::read(d.join(f)).ok() == a);
            if !same {
                differing.push(*f);
            }
        }
    }
    lines.push((
        differing.is_empty(),
        if differing.is_empty() {
            "outputs byte-identical across repeat runs and 1 vs 8 threads".to_string()
        } else {
            format!("outputs differ: {}", differing.join(", "))
        },
    ));

    let single: Duration = first.iter().map(|r| r.elapsed).sum();
    lines.push((
        single < Duration::from_secs(300),
        format!(
            "full default run {:.1}s (all nine runs {:.1}s)",
            single.as_secs_f64(),
            total.as_secs_f64()
        ),
    ));

    let mut failed = 0;
    for (k, (ok, text)) in lines.iter().enumerate() {
        println!("criterion {:>2}: {} {text}", k + 1, if *ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
