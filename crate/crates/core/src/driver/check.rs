use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::physical::{curve_from_samples, BlowupSample};

use super::run::{RunManifest, MANIFEST};
use super::verdict::{
    blowup_checks, dual_checks, parse_csv, trace_from_csv, trajectory_checks, CheckResult, CURVE_HEADER, DUAL_HEADER,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub scenario: String,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

fn read(dir: &Path, name: &str) -> Result<String> {
    fs::read_to_string(dir.join(name)).map_err(|e| Error::Config(format!("{name}: {e}")))
}

/// Re-evaluates the acceptance predicates of a finished run from its CSV
/// files, using the thresholds recorded in its manifest.
pub fn check_run_dir(dir: &Path) -> Result<CheckReport> {
    let manifest: RunManifest =
        serde_json::from_str(&read(dir, MANIFEST)?).map_err(|e| Error::Config(format!("{MANIFEST}: {e}")))?;
    let mut checks = Vec::new();
    for f in &manifest.outputs {
        if !dir.join(f).is_file() {
            checks.push(CheckResult::failed("outputs.present", format!("{f} is missing")));
        }
    }
    for e in &manifest.errors {
        checks.push(CheckResult::failed("run.errors", e.clone()));
    }
    let c = &manifest.criteria;
    if let Some(tc) = &c.trajectory {
        let trace = trace_from_csv(&read(dir, "trace.csv")?, tc.s0)?;
        checks.extend(trajectory_checks(&trace, tc));
    }
    if let Some(dc) = &c.dual {
        match read(dir, "dual.csv") {
            Ok(text) => {
                let rows = parse_csv(&text, DUAL_HEADER, 4)?;
                let diffs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
                checks.extend(dual_checks(&diffs, dc));
            }
            Err(_) => checks.push(CheckResult::failed("dual.h_norm", "dual.csv missing")),
        }
    }
    if let Some(bc) = &c.blowup {
        match read(dir, "blowup_curve.csv") {
            Ok(text) => {
                let samples = parse_csv(&text, CURVE_HEADER, 3)?
                    .into_iter()
                    .map(|r| BlowupSample { r: r[0], t: r[1], fit_quality: r[2], t_err: 0.0 })
                    .collect();
                match curve_from_samples(samples, bc.r0, 0.5 * bc.dr) {
                    Ok(curve) => checks.extend(blowup_checks(&curve, bc)),
                    Err(e) => checks.push(CheckResult::failed("blowup.curve", e.to_string())),
                }
            }
            Err(_) => checks.push(CheckResult::failed("blowup.curve", "blowup_curve.csv missing")),
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(CheckReport { scenario: manifest.scenario, checks, pass })
}
