//! The radial equation `u_tt = u_rr + (N-1)/r u_r + |u|^(p-1) u` in `(r, t)`:
//! cutoff initial data built from the explicit solutions, a second-order
//! method-of-lines solver, blow-up time and blow-up curve estimation, and the
//! map back to similarity variables.

mod blowup;
mod similarity;
mod solver;

pub use blowup::{
    blowup_curve, curve_from_history, curve_from_samples, estimate_blowup_time, BlowupCurve, BlowupSample, BlowupTime,
};
pub use similarity::{cone_average, cone_average_growth, to_selfsim, ConeGrowth};
pub use solver::{evolve_physical, evolve_physical_from, History, ProbeSeries, Snapshot, Termination};

use crate::error::{Error, Result};
use crate::solitons::{ExplicitSolution, SolitonParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConfig {
    pub p: f64,
    pub dim: usize,
    pub r0: f64,
    pub t0: f64,
    /// Cutoff margin: `chi = 1` on `[r0 - T0 - eps0, r0 + T0 + eps0]`.
    pub eps0: f64,
    pub d0: f64,
    pub nu0: f64,
    pub dr: f64,
    /// Time step; `None` selects `min(0.5 dr, 0.1 M^(-(p-1)/2))`.
    pub dt: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    /// Blow-up threshold `M`; `None` selects `10^3` times the initial sup.
    pub threshold: Option<f64>,
    pub t_max: f64,
    pub snapshot_times: Vec<f64>,
    pub probes: Vec<f64>,
}

impl PhysicalConfig {
    /// Domain `[r0 - T0 - 3 eps0, r0 + T0 + 3 eps0]`, no snapshots or probes,
    /// `t_max = 2 T0`.
    pub fn new(p: f64, dim: usize, r0: f64, t0: f64, eps0: f64, d0: f64, nu0: f64, dr: f64) -> Self {
        Self {
            p,
            dim,
            r0,
            t0,
            eps0,
            d0,
            nu0,
            dr,
            dt: None,
            r_min: r0 - t0 - 3.0 * eps0,
            r_max: r0 + t0 + 3.0 * eps0,
            threshold: None,
            t_max: 2.0 * t0,
            snapshot_times: Vec::new(),
            probes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.p > 1.0) || !self.p.is_finite() {
            return bad(format!("p must be > 1, got {}", self.p));
        }
        if self.dim < 1 {
            return bad("dimension N must be >= 1".into());
        }
        if !(self.t0 > 0.0) || !(self.eps0 > 0.0) || !(self.dr > 0.0) {
            return bad("T0, eps0 and dr must be positive".into());
        }
        if !(self.r_min > 0.0) {
            return bad(format!("r_min must be positive, got {}", self.r_min));
        }
        let (a, b) = self.support();
        if self.r_min > a || self.r_max < b {
            return bad(format!(
                "domain [{}, {}] does not contain the cutoff support [{a}, {b}]",
                self.r_min, self.r_max
            ));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt <= 0.9 * self.dr) {
                return bad(format!("dt = {dt} violates 0 < dt <= 0.9 dr"));
            }
        }
        if self.threshold.is_some_and(|m| !(m > 0.0)) {
            return bad("threshold M must be positive".into());
        }
        if !(self.t_max > 0.0) {
            return bad("t_max must be positive".into());
        }
        if self.snapshot_times.iter().any(|&t| !(0.0..=self.t_max).contains(&t)) {
            return bad("snapshot times must lie in [0, t_max]".into());
        }
        if self.probes.iter().any(|&r| r <= self.r_min || r >= self.r_max) {
            return bad("probe outside the domain".into());
        }
        SolitonParams::new(self.d0, self.nu0).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Support of the cutoff, `[r0 - T0 - 2 eps0, r0 + T0 + 2 eps0]`.
    pub fn support(&self) -> (f64, f64) {
        (self.r0 - self.t0 - 2.0 * self.eps0, self.r0 + self.t0 + 2.0 * self.eps0)
    }

    pub fn explicit_solution(&self) -> Result<ExplicitSolution> {
        ExplicitSolution::new(self.p, SolitonParams::new(self.d0, self.nu0)?, self.r0, self.t0)
    }

    pub fn nodes(&self) -> Vec<f64> {
        let m = ((self.r_max - self.r_min) / self.dr).round() as usize;
        (0..=m).map(|i| self.r_min + i as f64 * self.dr).collect()
    }
}

fn smooth_step(x: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        f(x) / (f(x) + f(1.0 - x))
    }
}

/// Smooth cutoff: 1 on `[r0 - T0 - eps0, r0 + T0 + eps0]`, 0 outside
/// `[r0 - T0 - 2 eps0, r0 + T0 + 2 eps0]`.
pub fn cutoff_chi(r: f64, cfg: &PhysicalConfig) -> f64 {
    let half = cfg.t0 + 2.0 * cfg.eps0;
    let dist = (r - cfg.r0).abs();
    smooth_step((half - dist) / cfg.eps0)
}

/// `(u0, u1) = chi (u_hat, u_hat_t / (1 + nu0))` at `t = 0` on the grid of `cfg`.
pub fn build_initial_data(cfg: &PhysicalConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let sol = cfg.explicit_solution()?;
    let nodes = cfg.nodes();
    let mut u0 = Vec::with_capacity(nodes.len());
    let mut u1 = Vec::with_capacity(nodes.len());
    for &r in &nodes {
        let chi = cutoff_chi(r, cfg);
        if chi == 0.0 {
            u0.push(0.0);
            u1.push(0.0);
            continue;
        }
        let den = (1.0 + cfg.nu0) * cfg.t0 + cfg.d0 * (r - cfg.r0);
        if den < 1e-6 {
            return Err(Error::Config(format!(
                "explicit solution is singular on the cutoff support at r={r}; reduce eps0"
            )));
        }
        u0.push(chi * sol.u(r, 0.0)?);
        u1.push(chi * sol.u_t(r, 0.0)? / (1.0 + cfg.nu0));
    }
    Ok((u0, u1))
}
