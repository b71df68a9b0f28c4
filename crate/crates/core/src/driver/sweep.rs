use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::config::{RawConfig, Reader};
use super::run::run_scenario;
use super::scenario::Scenario;

/// Axes of a `[sweep]` section and the section each one overrides.
const AXES: [(&str, &str); 4] = [("d_hat0", "scenario"), ("s0", "selfsim"), ("n", "selfsim"), ("ds", "selfsim")];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    /// `(axis, value)` in [`AXES`] order, only for the axes being swept.
    pub values: Vec<(String, String)>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<(String, String)>,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub delta_est: Option<f64>,
    pub slope_at_r0: Option<f64>,
    pub message: Option<String>,
}

/// Expands the cartesian product of the `[sweep]` lists into validated
/// scenarios. Any invalid point makes the whole sweep a configuration error.
pub fn expand(raw: &RawConfig) -> Result<Vec<SweepPoint>> {
    let mut base = raw.clone();
    let sweep = base.remove_section("sweep").ok_or_else(|| Error::Config("sweep needs a [sweep] section".into()))?;
    let sweep_raw = RawConfig { sections: [("sweep".to_string(), sweep.clone())].into() };
    let mut reader = Reader::new(&sweep_raw);
    let mut axes: Vec<(&str, &str, Vec<String>)> = Vec::new();
    for (key, section) in AXES {
        let vals: Vec<String> = reader.list("sweep", key, Vec::new())?;
        if !vals.is_empty() {
            axes.push((key, section, vals));
        }
    }
    reader.finish(&["sweep"])?;
    let total: usize = axes.iter().map(|a| a.2.len()).product();
    let base_name = Scenario::from_raw(&base)?.name;
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut raw = base.clone();
        let mut rest = index;
        let mut values = Vec::new();
        for (key, section, vals) in axes.iter().rev() {
            let v = &vals[rest % vals.len()];
            rest /= vals.len();
            if *section != "scenario" && !raw.has(section) {
                return Err(Error::Config(format!("sweeping `{key}` needs a [{section}] section")));
            }
            raw.set(section, key, v);
            values.push((key.to_string(), v.clone()));
        }
        values.reverse();
        raw.set("scenario", "name", format!("{base_name}_{index:03}"));
        let scenario = Scenario::from_raw(&raw).map_err(|e| Error::Config(format!("sweep point {index}: {e}")))?;
        points.push(SweepPoint { index, values, scenario });
    }
    Ok(points)
}

/// Runs every point into `out/run_<index>` on a pool of `workers` threads
/// and writes `out/summary.csv`.
pub fn run_sweep(points: &[SweepPoint], out: &Path, workers: usize) -> Result<Vec<SweepRow>> {
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|pt| {
                let dir = out.join(format!("run_{:03}", pt.index));
                let base = SweepRow {
                    index: pt.index,
                    values: pt.values.clone(),
                    status: "error".into(),
                    delta_est: None,
                    slope_at_r0: None,
                    message: None,
                };
                match run_scenario(&pt.scenario, &dir) {
                    Ok(m) => SweepRow {
                        status: if m.pass { "pass" } else { "fail" }.into(),
                        delta_est: m.summary.get("delta_est").copied(),
                        slope_at_r0: m.summary.get("slope_at_r0").copied(),
                        message: m.errors.first().cloned(),
                        ..base
                    },
                    Err(e) => SweepRow { message: Some(e.to_string()), ..base },
                }
            })
            .collect()
    });
    fs::write(out.join("summary.csv"), summary_csv(&rows))?;
    Ok(rows)
}

pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("index");
    for (key, _) in AXES {
        s.push(',');
        s.push_str(key);
    }
    s.push_str(",status,delta_est,slope_at_r0\n");
    let num = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
    for r in rows {
        s.push_str(&r.index.to_string());
        for (key, _) in AXES {
            s.push(',');
            if let Some((_, v)) = r.values.iter().find(|(k, _)| k == key) {
                s.push_str(v);
            }
        }
        s.push_str(&format!(",{},{},{}\n", r.status, num(r.delta_est), num(r.slope_at_r0)));
    }
    s
}
