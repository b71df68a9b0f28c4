use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{fit_decay, observed_envelope, DecayField};
use crate::error::{Error, Result};
use crate::physical::{blowup_curve, evolve_physical, to_selfsim, BlowupCurve};
use crate::selfsim::{evolve_soliton, shoot_initial_parameters, Trace};
use crate::solitons::SolitonParams;
use crate::spectral::Grid;

use super::config::Section;
use super::plot::LinePlot;
use super::scenario::{dual_config, AmplitudeChoice, InitialParams, Scenario, SelfSimSetup};
use super::verdict::{
    blowup_checks, csv_row, dual_checks, trace_to_csv, trajectory_checks, BlowupCriteria, CheckResult, Criteria,
    DualCriteria, TrajectoryCriteria, CURVE_HEADER, DUAL_HEADER,
};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub version: String,
    pub config: BTreeMap<String, Section>,
    pub criteria: Criteria,
    pub summary: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub errors: Vec<String>,
    pub pass: bool,
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Outputs<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn initial_params(grid: &Grid, ss: &SelfSimSetup) -> Result<SolitonParams> {
    match &ss.init {
        InitialParams::Fixed(p) => Ok(*p),
        InitialParams::Shoot { horizons, tol } => Ok(shoot_initial_parameters(grid, &ss.cfg, horizons, *tol)?.params),
    }
}

fn resolve_shrinking(
    trace: &Trace,
    ss: &SelfSimSetup,
    summary: &mut BTreeMap<String, f64>,
) -> (Option<f64>, Option<f64>) {
    let fit = fit_decay(trace, DecayField::QNormSq, None).ok();
    if let Some(f) = fit {
        summary.insert("delta_est".into(), f.delta_est);
        summary.insert("decay_r2".into(), f.r2);
        summary.insert("a_est".into(), f.a_est);
    }
    if let Ok(f) = fit_decay(trace, DecayField::H, None) {
        summary.insert("h_delta_est".into(), f.delta_est);
    }
    let delta = ss.delta.or_else(|| fit.map(|f| f.delta_est.min(0.99)).filter(|d| *d > 0.0));
    let Some(delta) = delta else {
        return (None, None);
    };
    let envelope = observed_envelope(trace, delta, ss.cfg.d_hat0);
    summary.insert("envelope".into(), envelope);
    let a = match ss.amplitude {
        AmplitudeChoice::Absolute(a) => a,
        AmplitudeChoice::Envelope(k) => k * envelope,
    };
    summary.insert("shrinking_a".into(), a);
    summary.insert("shrinking_delta".into(), delta);
    (Some(a), Some(delta))
}

fn q_norm_plot(trace: &Trace) -> String {
    let pts: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.s, r.q_norm_h)).collect();
    LinePlot { title: "modulated remainder", x_label: "s", y_label: "log10 ||q||_H", log_y: true }.render(&pts)
}

fn curve_plot(curve: &BlowupCurve) -> String {
    let pts: Vec<(f64, f64)> = curve.samples.iter().map(|s| (s.r, s.t)).collect();
    LinePlot { title: "blow-up curve", x_label: "r", y_label: "T(r)", log_y: false }.render(&pts)
}

fn curve_csv(curve: &BlowupCurve) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for p in &curve.samples {
        s.push_str(&csv_row(&[p.r, p.t, p.fit_quality]));
        s.push('\n');
    }
    s
}

/// Runs every stage configured in `scn`, writing outputs into `out` (created
/// if needed). Stage failures are recorded in the manifest, not returned;
/// the error path is reserved for I/O.
pub fn run_scenario(scn: &Scenario, out: &Path) -> Result<RunManifest> {
    fs::create_dir_all(out)?;
    let mut files = Outputs { dir: out, files: Vec::new() };
    let mut summary = BTreeMap::new();
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    let mut criteria = Criteria::default();

    if let Some(ss) = &scn.selfsim {
        let mut cfg = ss.cfg.clone();
        if let Some(d) = &scn.dual {
            cfg.snapshot_s = d.s.clone();
        }
        let stage = Grid::build(cfg.n, cfg.p).and_then(|grid| {
            let params = initial_params(&grid, ss)?;
            let trace = evolve_soliton(&grid, params, &cfg)?;
            Ok((grid, params, trace))
        });
        match stage {
            Ok((grid, params, trace)) => {
                summary.insert("d0".into(), params.d());
                summary.insert("nu0".into(), params.nu());
                if let Some(last) = trace.last() {
                    summary.insert("final_s".into(), last.s);
                    summary.insert("final_q_norm".into(), last.q_norm_h);
                }
                let (a, delta) =
                    if scn.checks.shrinking { resolve_shrinking(&trace, ss, &mut summary) } else { (None, None) };
                let crit = TrajectoryCriteria {
                    s0: cfg.s0,
                    d_hat0: cfg.d_hat0,
                    decay: scn.checks.decay,
                    decay_r2_min: scn.checks.decay_r2_min,
                    shrinking: scn.checks.shrinking,
                    a,
                    delta,
                    q_norm_max: scn.checks.q_norm_max,
                };
                checks.extend(trajectory_checks(&trace, &crit));
                criteria.trajectory = Some(crit);
                files.write("trace.csv", &trace_to_csv(&trace))?;
                files.write("q_norm.svg", &q_norm_plot(&trace))?;

                if let Some(dual) = &scn.dual {
                    let pc = dual_config(&cfg, dual, params);
                    let res = evolve_physical(&pc).and_then(|h| {
                        dual.s
                            .iter()
                            .map(|&s| {
                                let w = to_selfsim(&h, &grid, cfg.r0, cfg.t0(), s)?;
                                let x = trace
                                    .snapshot_at(s)
                                    .ok_or_else(|| Error::Numerical(format!("no trajectory snapshot at s={s}")))?;
                                let diff = w.checked_sub(x)?;
                                Ok((s, grid.norm_h(&diff)?, diff.first.max_abs(), diff.second.max_abs()))
                            })
                            .collect::<Result<Vec<_>>>()
                    });
                    let crit = DualCriteria { tol: scn.checks.dual_tol };
                    match res {
                        Ok(rows) => {
                            let mut text = format!("{DUAL_HEADER}\n");
                            for r in &rows {
                                text.push_str(&csv_row(&[r.0, r.1, r.2, r.3]));
                                text.push('\n');
                            }
                            files.write("dual.csv", &text)?;
                            let diffs: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
                            summary.insert("dual_max_h_diff".into(), diffs.iter().map(|d| d.1).fold(0.0, f64::max));
                            checks.extend(dual_checks(&diffs, &crit));
                        }
                        Err(e) => {
                            errors.push(format!("dual: {e}"));
                            checks.push(CheckResult::failed("dual.h_norm", e.to_string()));
                        }
                    }
                    criteria.dual = Some(crit);
                }
            }
            Err(e) => {
                errors.push(format!("selfsim: {e}"));
                checks.push(CheckResult::failed("selfsim.integration", e.to_string()));
            }
        }
    }

    if let Some(ph) = &scn.physical {
        let c = &ph.cfg;
        let crit = BlowupCriteria {
            r0: c.r0,
            t0: c.t0,
            expected_slope: c.d0 / (1.0 + c.nu0),
            t0_rel_tol: scn.checks.t0_rel_tol,
            slope_tol: scn.checks.slope_tol,
            dr: c.dr,
        };
        match blowup_curve(c, &ph.probe_positions()) {
            Ok(curve) => {
                summary.insert("t_at_r0".into(), curve.t_at_r0);
                summary.insert("slope_at_r0".into(), curve.slope_at_r0);
                summary.insert("cone_ratio".into(), curve.cone_ratio);
                checks.extend(blowup_checks(&curve, &crit));
                files.write("blowup_curve.csv", &curve_csv(&curve))?;
                files.write("blowup_curve.svg", &curve_plot(&curve))?;
            }
            Err(e) => {
                errors.push(format!("physical: {e}"));
                checks.push(CheckResult::failed("blowup.curve", e.to_string()));
            }
        }
        criteria.blowup = Some(crit);
    }

    files.files.push(MANIFEST.to_string());
    let manifest = RunManifest {
        scenario: scn.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: scn.resolved.clone(),
        criteria,
        summary,
        outputs: files.files.clone(),
        pass: errors.is_empty() && checks.iter().all(|c| c.pass),
        checks,
        errors,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    fs::write(out.join(MANIFEST), text + "\n")?;
    Ok(manifest)
}
