//! Pass/fail predicates shared by `run` and `check`, plus the CSV formats
//! they read back.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{fit_decay, shrinking_set_check, DecayField, ShrinkingSetSpec};
use crate::error::{Error, Result};
use crate::physical::BlowupCurve;
use crate::selfsim::{Trace, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, value: f64, limit: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            value: if value.is_finite() { value } else { f64::MAX },
            limit: limit.into(),
        }
    }

    pub fn failed(name: &str, why: impl Into<String>) -> Self {
        Self::new(name, false, f64::MAX, why)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCriteria {
    pub s0: f64,
    pub d_hat0: f64,
    pub decay: bool,
    pub decay_r2_min: f64,
    pub shrinking: bool,
    /// Resolved amplitude and rate of the shrinking set.
    pub a: Option<f64>,
    pub delta: Option<f64>,
    pub q_norm_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupCriteria {
    pub r0: f64,
    pub t0: f64,
    /// `d0 / (1 + nu0)`: the slope of the zero set of the explicit
    /// solution's denominator.
    pub expected_slope: f64,
    pub t0_rel_tol: f64,
    pub slope_tol: f64,
    pub dr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCriteria {
    pub tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub trajectory: Option<TrajectoryCriteria>,
    pub blowup: Option<BlowupCriteria>,
    pub dual: Option<DualCriteria>,
}

pub fn trajectory_checks(trace: &Trace, c: &TrajectoryCriteria) -> Vec<CheckResult> {
    let mut out = Vec::new();
    if let Some(f) = &trace.failure {
        out.push(CheckResult::failed("selfsim.integration", f.clone()));
    }
    if let Some((s, which)) = trace.constraint_exit {
        out.push(CheckResult::new("selfsim.modulation_regime", false, s, format!("left at s={s} ({which:?})")));
    }
    if c.decay {
        match fit_decay(trace, DecayField::QNormSq, None) {
            Ok(fit) => {
                out.push(CheckResult::new("decay.delta_positive", fit.delta_est > 0.0, fit.delta_est, "> 0"));
                out.push(CheckResult::new(
                    "decay.fit_r2",
                    fit.r2 >= c.decay_r2_min,
                    fit.r2,
                    format!(">= {}", c.decay_r2_min),
                ));
            }
            Err(e) => out.push(CheckResult::failed("decay.fit", e.to_string())),
        }
    }
    if c.shrinking {
        let res = match (c.a, c.delta) {
            (Some(a), Some(delta)) => {
                ShrinkingSetSpec::new(a, delta, c.s0, c.d_hat0).and_then(|spec| shrinking_set_check(trace, &spec))
            }
            _ => Err(Error::Numerical("shrinking set not resolved".into())),
        };
        match res {
            Ok(rep) => out.push(CheckResult::new(
                "shrinking.inside",
                rep.inside,
                rep.first_exit_s.unwrap_or(0.0),
                match rep.which {
                    Some(w) => format!("first exit through {w:?}"),
                    None => "inside for all samples".into(),
                },
            )),
            Err(e) => out.push(CheckResult::failed("shrinking.inside", e.to_string())),
        }
    }
    if let Some(max) = c.q_norm_max {
        let worst = trace.records.iter().map(|r| r.q_norm_h).fold(0.0, f64::max);
        out.push(CheckResult::new("q_norm.max", worst <= max, worst, format!("<= {max:e}")));
    }
    out
}

pub fn blowup_checks(curve: &BlowupCurve, c: &BlowupCriteria) -> Vec<CheckResult> {
    let rel = (curve.t_at_r0 - c.t0).abs() / c.t0;
    let slope_err = (curve.slope_at_r0 - c.expected_slope).abs();
    let excess = curve.lipschitz_excess();
    vec![
        CheckResult::new("blowup.t_at_r0", rel <= c.t0_rel_tol, rel, format!("relative error <= {}", c.t0_rel_tol)),
        CheckResult::new(
            "blowup.slope_at_r0",
            slope_err <= c.slope_tol,
            curve.slope_at_r0,
            format!("within {} of {}", c.slope_tol, c.expected_slope),
        ),
        CheckResult::new("blowup.non_characteristic", curve.slope_at_r0.abs() < 1.0, curve.slope_at_r0.abs(), "< 1"),
        CheckResult::new("blowup.lipschitz", excess <= c.dr, excess, format!("excess <= dr = {}", c.dr)),
    ]
}

pub fn dual_checks(diffs: &[(f64, f64)], c: &DualCriteria) -> Vec<CheckResult> {
    if diffs.is_empty() {
        return vec![CheckResult::failed("dual.h_norm", "no comparisons")];
    }
    diffs
        .iter()
        .map(|&(s, d)| CheckResult::new(&format!("dual.h_norm.s={s}"), d <= c.tol, d, format!("<= {:e}", c.tol)))
        .collect()
}

pub const TRACE_HEADER: &str = "s,d,nu,q_norm_H,phi_qq,h,orth0,orth1";
pub const CURVE_HEADER: &str = "r,T,fit_quality";
pub const DUAL_HEADER: &str = "s,h_norm_diff,w1_max_diff,w2_max_diff";

pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
}

pub fn parse_csv(text: &str, header: &str, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(header) {
        return Err(Error::Config(format!("expected header `{header}`")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let row = l
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Config(format!("row {}: {e}", i + 2)))?;
            if row.len() != columns {
                return Err(Error::Config(format!("row {}: expected {columns} columns", i + 2)));
            }
            Ok(row)
        })
        .collect()
}

pub fn trace_to_csv(trace: &Trace) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in &trace.records {
        s.push_str(&csv_row(&[r.s, r.d, r.nu, r.q_norm_h, r.phi_qq, r.h, r.orth[0], r.orth[1]]));
        s.push('\n');
    }
    s
}

pub fn trace_from_csv(text: &str, s0: f64) -> Result<Trace> {
    let mut trace = Trace::new(s0);
    trace.records = parse_csv(text, TRACE_HEADER, 8)?
        .into_iter()
        .map(|v| TraceRecord { s: v[0], d: v[1], nu: v[2], q_norm_h: v[3], phi_qq: v[4], h: v[5], orth: [v[6], v[7]] })
        .collect();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physical::BlowupSample;

    fn rec(s: f64, q: f64) -> TraceRecord {
        TraceRecord { s, d: 0.3, nu: 0.0, q_norm_h: q, phi_qq: q * q, h: 0.5 * q * q, orth: [0.0, 1e-17] }
    }

    #[test]
    fn trace_csv_round_trip_is_exact() {
        let mut t = Trace::new(3.0);
        t.records = (0..5).map(|k| rec(3.0 + 0.1 * k as f64, 1.0 / 3.0 * (-(k as f64)).exp())).collect();
        let text = trace_to_csv(&t);
        let back = trace_from_csv(&text, 3.0).unwrap();
        assert_eq!(back.records, t.records);
        assert!(parse_csv("a,b\n1,2\n", TRACE_HEADER, 8).is_err());
        assert!(parse_csv(&format!("{TRACE_HEADER}\n1,2\n"), TRACE_HEADER, 8).is_err());
    }

    #[test]
    fn decay_and_shrinking_predicates() {
        let mut t = Trace::new(3.0);
        t.records = (0..50)
            .map(|k| {
                let s = 3.0 + 0.1 * k as f64;
                rec(s, 0.01 * (-0.9 * (s - 3.0)).exp())
            })
            .collect();
        let mut c = TrajectoryCriteria {
            s0: 3.0,
            d_hat0: 0.3,
            decay: true,
            decay_r2_min: 0.95,
            shrinking: true,
            a: Some(1.0),
            delta: Some(0.9),
            q_norm_max: Some(0.02),
        };
        let res = trajectory_checks(&t, &c);
        assert_eq!(res.len(), 4);
        assert!(res.iter().all(|r| r.pass), "{res:?}");
        c.a = Some(1e-3);
        let res = trajectory_checks(&t, &c);
        assert!(!res.iter().find(|r| r.name == "shrinking.inside").unwrap().pass);
    }

    #[test]
    fn blowup_predicates() {
        let mk = |r: f64, t: f64| BlowupSample { r, t, fit_quality: 1.0, t_err: 0.0 };
        let curve = BlowupCurve {
            r0: 1.0,
            samples: vec![mk(0.99, 0.497), mk(1.0, 0.5), mk(1.01, 0.503)],
            t_at_r0: 0.5,
            slope_at_r0: 0.3,
            cone_ratio: 0.3,
        };
        let c = BlowupCriteria { r0: 1.0, t0: 0.5, expected_slope: 0.3, t0_rel_tol: 0.01, slope_tol: 0.05, dr: 1e-3 };
        assert!(blowup_checks(&curve, &c).iter().all(|r| r.pass));
        let wrong = BlowupCriteria { expected_slope: -0.3, ..c };
        assert!(!blowup_checks(&curve, &wrong)[1].pass);
    }
}
