//! Configuration files, scenario runs, sweeps and re-checks.
//!
//! A run writes into its own directory:
//!
//! * `trace.csv` with columns `s,d,nu,q_norm_H,phi_qq,h,orth0,orth1`
//! * `blowup_curve.csv` with columns `r,T,fit_quality`
//! * `dual.csv` when a `[dual]` section is present
//! * `q_norm.svg`, `blowup_curve.svg`
//! * `manifest.json`: resolved config, thresholds, summary numbers and one
//!   pass/fail entry per check
//!
//! Numbers are written with 17 significant digits, so identical configs give
//! byte-identical files.

pub mod check;
pub mod config;
pub mod plot;
pub mod run;
pub mod scenario;
pub mod sweep;
pub mod verdict;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use check::{check_run_dir, CheckReport};
pub use run::{run_scenario, RunManifest};
pub use scenario::Scenario;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable holding the sweep worker count.
pub const WORKERS_ENV: &str = "SEMIWAVE_WORKERS";

pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn load(path: &Path) -> Result<config::RawConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config::RawConfig::parse(&text)
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_CHECK_FAIL,
    }
}

fn print_checks(checks: &[verdict::CheckResult]) {
    for c in checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:<28} {:>14.6e}  ({})", c.name, c.value, c.limit);
    }
}

/// `run <config>`: nothing is written unless the config is valid.
pub fn cli_run(config: &Path, out: Option<&Path>) -> i32 {
    let scn = match load(config).and_then(|raw| Scenario::from_raw(&raw)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("runs").join(&scn.name));
    match run_scenario(&scn, &dir) {
        Ok(m) => {
            print_checks(&m.checks);
            for e in &m.errors {
                eprintln!("error: {e}");
            }
            println!("{}: {} -> {}", m.scenario, if m.pass { "pass" } else { "fail" }, dir.display());
            if m.pass {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAIL
            }
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            exit_for(&e)
        }
    }
}

/// `sweep <config>`
pub fn cli_sweep(config: &Path, out: Option<&Path>) -> i32 {
    let points = match load(config).and_then(|raw| sweep::expand(&raw)) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let stem = config.file_stem().map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("runs").join(stem));
    match sweep::run_sweep(&points, &dir, workers_from_env()) {
        Ok(rows) => {
            print!("{}", sweep::summary_csv(&rows));
            if rows.iter().all(|r| r.status == "pass") {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAIL
            }
        }
        Err(e) => {
            eprintln!("sweep failed: {e}");
            exit_for(&e)
        }
    }
}

/// `check <run-dir>`
pub fn cli_check(dir: &Path) -> i32 {
    match check_run_dir(dir) {
        Ok(rep) => {
            print_checks(&rep.checks);
            println!("{}: {}", rep.scenario, if rep.pass { "pass" } else { "fail" });
            if rep.pass {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAIL
            }
        }
        Err(e) => {
            eprintln!("cannot check {}: {e}", dir.display());
            EXIT_CONFIG
        }
    }
}
