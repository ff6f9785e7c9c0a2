#![allow(dead_code)]

//! Shared CLI golden-file cases.
//!
//! Each case runs the binary from `tests/fixtures` and compares stdout,
//! stderr and any written files against `tests/golden/<case>.<stream>`.
//! Set `UPDATE_GOLDEN=1` to rewrite the goldens instead.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub struct CliCase {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub exit: i32,
    /// Files the command writes under `@out/`.
    pub files: &'static [&'static str],
}

const fn case(name: &'static str, args: &'static [&'static str], exit: i32) -> CliCase {
    CliCase {
        name,
        args,
        exit,
        files: &[],
    }
}

pub const CASES: &[CliCase] = &[
    case("plan_million", &["plan", "--total", "1000000", "--seed", "7"], 0),
    case("plan_missing_total", &["plan"], 2),
    case("plan_bad_number", &["plan", "--total", "abc"], 2),
    case("plan_nmt", &["plan", "--total", "4500000"], 0),
    case(
        "plan_too_small",
        &["plan", "--total", "1000", "--smallest", "0.0001"],
        1,
    ),
    CliCase {
        name: "plan_to_file",
        args: &["plan", "--total", "10000", "--seed", "3", "--out", "@out/plan.json"],
        exit: 0,
        files: &["plan.json"],
    },
    case("fit_power_law", &["fit", "--in", "power_law.csv"], 0),
    case(
        "fit_fixed_zero",
        &["fit", "--in", "power_law.csv", "--floor", "fixed:0"],
        0,
    ),
    case("fit_free_floor", &["fit", "--in", "floor.csv", "--floor", "free"], 0),
    case("fit_counting", &["fit", "--in", "counting_closed_even.csv"], 0),
    case(
        "fit_bootstrap",
        &[
            "fit",
            "--in",
            "noisy.csv",
            "--bootstrap",
            "200",
            "--confidence",
            "0.9",
            "--seed",
            "5",
        ],
        0,
    ),
    case(
        "fit_composite",
        &["fit", "--in", "sweep.csv", "--composite", "--cutoff", "64000"],
        0,
    ),
    case(
        "fit_bad_floor",
        &["fit", "--in", "power_law.csv", "--floor", "maybe"],
        2,
    ),
    case("fit_plateau", &["fit", "--in", "plateau.csv"], 1),
    case("fit_empty", &["fit", "--in", "empty.csv"], 1),
    case("fit_missing_file", &["fit", "--in", "missing.csv"], 1),
    CliCase {
        name: "segment_regions",
        args: &[
            "segment",
            "--in",
            "regions.csv",
            "--baseline",
            "xent:1000",
            "--plateau-tol",
            "0.02",
            "--labels-out",
            "@out/labels.csv",
        ],
        exit: 0,
        files: &["labels.csv"],
    },
    CliCase {
        name: "segment_three_regions",
        args: &[
            "segment",
            "--in",
            "three_regions.csv",
            "--baseline",
            "xent:1000",
            "--labels-out",
            "@out/labels.csv",
        ],
        exit: 0,
        files: &["labels.csv"],
    },
    case(
        "segment_topk",
        &["segment", "--in", "power_law.csv", "--baseline", "topk:1000,5"],
        0,
    ),
    case(
        "segment_plateau",
        &["segment", "--in", "plateau.csv", "--baseline", "xent:1000"],
        1,
    ),
    case(
        "segment_bad_baseline",
        &["segment", "--in", "regions.csv", "--baseline", "xent"],
        2,
    ),
    case(
        "segment_one_class",
        &["segment", "--in", "regions.csv", "--baseline", "xent:1"],
        1,
    ),
    case(
        "project_basic",
        &["project", "--alpha", "10", "--beta", "-0.5", "--target", "0.1"],
        0,
    ),
    case(
        "project_sizing",
        &[
            "project",
            "--alpha",
            "10",
            "--beta",
            "-0.5",
            "--sizing-alpha",
            "100",
            "--sizing-beta",
            "0.5",
            "--target",
            "0.1",
            "--reference",
            "100",
        ],
        0,
    ),
    case(
        "project_infeasible",
        &[
            "project", "--alpha", "10", "--beta", "-0.5", "--gamma", "0.2", "--target", "0.1",
        ],
        0,
    ),
    case(
        "project_word_lm",
        &[
            "project",
            "--alpha",
            "8",
            "--beta",
            "-0.0656",
            "--target",
            "4",
            "--reference",
            "1000000",
        ],
        0,
    ),
    case(
        "project_increasing",
        &["project", "--alpha", "1", "--beta", "0.2", "--target", "0.5"],
        1,
    ),
    case(
        "project_half_sizing",
        &[
            "project",
            "--alpha",
            "1",
            "--beta",
            "-0.5",
            "--target",
            "0.1",
            "--sizing-alpha",
            "2",
        ],
        2,
    ),
    case(
        "simulate_closed",
        &[
            "simulate", "--p", "0.5", "--loss", "l1", "--method", "closed", "--shards", "2,4",
        ],
        0,
    ),
    case(
        "simulate_binomial",
        &[
            "simulate", "--p", "0.6", "--loss", "l1", "--method", "binomial", "--shards", "2",
        ],
        0,
    ),
    case(
        "simulate_l2",
        &[
            "simulate", "--p", "0.5", "--loss", "l2", "--method", "binomial", "--shards", "2,4,8",
        ],
        0,
    ),
    case(
        "simulate_kl",
        &[
            "simulate",
            "--p",
            "0.3",
            "--loss",
            "kl",
            "--method",
            "binomial",
            "--shards",
            "1,2,4,8,16",
        ],
        0,
    ),
    CliCase {
        name: "simulate_monte_carlo",
        args: &[
            "simulate",
            "--learner",
            "counting",
            "--method",
            "mc:1000000",
            "--seed",
            "3",
            "--shards",
            "2,4,8",
            "--out",
            "@out/mc.csv",
        ],
        exit: 0,
        files: &["mc.csv"],
    },
    case(
        "simulate_counting_fixture",
        &[
            "simulate",
            "--method",
            "closed",
            "--shards",
            "16,32,64,128,256,512,1024,2048,4096,8192,16384",
        ],
        0,
    ),
    case(
        "simulate_mismatch",
        &["simulate", "--p", "0.3", "--method", "closed", "--shards", "2"],
        1,
    ),
    case("simulate_descending", &["simulate", "--shards", "4,2"], 1),
    case(
        "simulate_bad_method",
        &["simulate", "--method", "mc:lots", "--shards", "2"],
        2,
    ),
    case(
        "plotdata_counting",
        &[
            "plotdata",
            "--in",
            "counting_closed_even.csv",
            "--fit",
            "../golden/fit_counting.stdout",
        ],
        0,
    ),
    case(
        "plotdata_power_law",
        &[
            "plotdata",
            "--in",
            "power_law.csv",
            "--fit",
            "../golden/fit_power_law.stdout",
        ],
        0,
    ),
    case(
        "plotdata_empty",
        &[
            "plotdata",
            "--in",
            "empty.csv",
            "--fit",
            "../golden/fit_counting.stdout",
        ],
        1,
    ),
];

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixtures_dir() -> PathBuf {
    manifest_dir().join("tests").join("fixtures")
}

pub fn golden_dir() -> PathBuf {
    manifest_dir().join("tests").join("golden")
}

pub fn updating() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

pub struct Run {
    pub output: Output,
    /// Contents of the case's output files, in `files` order.
    pub files: Vec<Vec<u8>>,
}

/// Runs the CLI from the fixtures directory; `@out/` in an argument is
/// replaced with a fresh temporary directory.
pub fn run_cli(args: &[&str], out_files: &[&str]) -> Run {
    let tmp = tempfile::tempdir().expect("temp dir");
    let out_prefix = format!("{}/", tmp.path().display());
    let args: Vec<String> = args.iter().map(|a| a.replace("@out/", &out_prefix)).collect();
    let output = Command::new(env!("CARGO_BIN_EXE_lcurve"))
        .args(&args)
        .current_dir(fixtures_dir())
        .output()
        .expect("binary runs");
    let files = out_files
        .iter()
        .map(|f| fs::read(tmp.path().join(f)).unwrap_or_default())
        .collect();
    Run { output, files }
}

fn compare(path: &Path, actual: &[u8]) -> Result<(), String> {
    if updating() {
        fs::write(path, actual).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(());
    }
    let expected = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!(
            "{} differs:\n--- expected\n{}\n--- actual\n{}",
            path.display(),
            String::from_utf8_lossy(&expected),
            String::from_utf8_lossy(actual)
        ))
    }
}

/// Runs one case and checks its exit code and every golden stream.
pub fn check_case(case: &CliCase) -> Result<(), String> {
    let run = run_cli(case.args, case.files);
    let code = run.output.status.code();
    if code != Some(case.exit) {
        return Err(format!(
            "{}: exit {:?}, expected {}\nstderr: {}",
            case.name,
            code,
            case.exit,
            String::from_utf8_lossy(&run.output.stderr)
        ));
    }
    let dir = golden_dir();
    compare(&dir.join(format!("{}.stdout", case.name)), &run.output.stdout)?;
    compare(&dir.join(format!("{}.stderr", case.name)), &run.output.stderr)?;
    for (file, contents) in case.files.iter().zip(&run.files) {
        compare(&dir.join(format!("{}.{}", case.name, file)), contents)?;
    }
    Ok(())
}

pub fn check_all_cases() -> Vec<(&'static str, Result<(), String>)> {
    CASES.iter().map(|c| (c.name, check_case(c))).collect()
}
