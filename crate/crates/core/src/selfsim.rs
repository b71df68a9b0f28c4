//! Evolution of `(w, dw/ds)` in similarity variables with per-sample
//! modulation.
//!
//! ```text
//! d/ds w1 = w2
//! d/ds w2 = L w1 - 2(p+1)/(p-1)^2 w1 + |w1|^(p-1) w1 - (p+3)/(p-1) w2 - 2 y d/dy w2
//!           + e^-s (N-1) / (r0 + y e^-s) d/dy w1
//! ```

use nalgebra::DMatrix;

use crate::diagnostics::h_functional;
use crate::error::{param_err, Error, Result};
use crate::modulation::{modulate, ModulationOptions, ModulationResult};
use crate::numeric::signed_pow;
use crate::solitons::{kappa_star, SolitonParams};
use crate::spectral::{Field, Grid, StatePair};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimConfig {
    pub p: f64,
    /// Spatial dimension `N`.
    pub dim: usize,
    pub r0: f64,
    pub s0: f64,
    pub s_end: f64,
    /// Requested step; the scheme uses `min(ds, 0.5/n^2)`.
    pub ds: f64,
    pub n: usize,
    pub sample_every: usize,
    /// Target boost `d_hat0`, used as modulation fallback.
    pub d_hat0: f64,
    /// Weight of the cross term in `h`.
    pub eta: f64,
    /// When false the power nonlinearity is dropped from the right side.
    pub nonlinear: bool,
    /// Apply the spectral filter after every step.
    pub filter: bool,
    /// Times at which the full state is stored.
    pub snapshot_s: Vec<f64>,
}

impl SelfSimConfig {
    pub fn new(p: f64, dim: usize, r0: f64, s0: f64, s_end: f64, n: usize) -> Self {
        Self {
            p,
            dim,
            r0,
            s0,
            s_end,
            ds: 0.5 / (n * n) as f64,
            n,
            sample_every: 25,
            d_hat0: 0.0,
            eta: 0.1 / (p - 1.0),
            nonlinear: true,
            filter: false,
            snapshot_s: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return param_err(format!("p must be > 1, got {}", self.p));
        }
        if self.dim < 1 {
            return param_err("dimension N must be >= 1");
        }
        if !(self.r0 > 0.0) {
            return param_err(format!("r0 must be positive, got {}", self.r0));
        }
        if !(self.s0 > -self.r0.ln()) {
            return param_err(format!("s0 = {} must exceed -log r0 = {}", self.s0, -self.r0.ln()));
        }
        if !(self.s_end > self.s0) || !self.s_end.is_finite() {
            return param_err("s_end must exceed s0");
        }
        if !(self.ds > 0.0) {
            return param_err("ds must be positive");
        }
        if self.n < 8 {
            return param_err("grid size must be >= 8");
        }
        if self.sample_every == 0 {
            return param_err("sample_every must be >= 1");
        }
        if self.d_hat0.abs() >= 1.0 {
            return param_err("|d_hat0| must be < 1");
        }
        if self.snapshot_s.iter().any(|&s| !(s >= self.s0 && s <= self.s_end)) {
            return param_err("snapshot times must lie in [s0, s_end]");
        }
        Ok(())
    }

    /// `T0 = e^-s0`.
    pub fn t0(&self) -> f64 {
        (-self.s0).exp()
    }

    /// The step actually taken.
    pub fn effective_ds(&self) -> f64 {
        self.ds.min(0.5 / (self.n * self.n) as f64)
    }
}

/// Right side without the radial term.
pub fn rhs_1d(grid: &Grid, state: &StatePair, nonlinear: bool) -> StatePair {
    let (w1, w2) = (&state.first, &state.second);
    let d1 = grid.derivative(w1);
    let d2 = grid.second_derivative(w1);
    rhs_from_parts(grid, w1, w2, &d1, &d2, nonlinear)
}

fn rhs_from_parts(grid: &Grid, w1: &Field, w2: &Field, d1: &Field, d2: &Field, nonlinear: bool) -> StatePair {
    let p = grid.p();
    let a = grid.alpha();
    let lin = 2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0));
    let damp = 1.0 + 2.0 * a;
    let dw2 = grid.derivative(w2);
    let lw = grid.l_from_derivatives(d1, d2);
    let vals: Vec<f64> = (0..grid.n())
        .map(|i| {
            let y = grid.nodes()[i];
            let x = w1.as_slice()[i];
            let nl = if nonlinear { signed_pow(x, p) } else { 0.0 };
            lw.as_slice()[i] - lin * x + nl - damp * w2.as_slice()[i] - 2.0 * y * dw2.as_slice()[i]
        })
        .collect();
    StatePair { first: w2.clone(), second: grid.field_from_values(vals).unwrap() }
}

/// Full right side at time `s`.
pub fn rhs(grid: &Grid, state: &StatePair, s: f64, cfg: &SelfSimConfig) -> StatePair {
    let w1 = &state.first;
    let d1 = grid.derivative(w1);
    let d2 = grid.second_derivative(w1);
    let mut out = rhs_from_parts(grid, w1, &state.second, &d1, &d2, cfg.nonlinear);
    if cfg.dim > 1 {
        let es = (-s).exp();
        let c = es * (cfg.dim - 1) as f64;
        let radial = grid.field(|y| c / (cfg.r0 + y * es)).zip_with(&d1, |a, b| a * b).unwrap();
        out.second.axpy(1.0, &radial);
    }
    out
}

/// One classical RK4 step. A non-finite result is reported as a numerical
/// error (scheme breakdown, not blow-up of the equation).
pub fn step(grid: &Grid, state: &StatePair, s: f64, ds: f64, cfg: &SelfSimConfig) -> Result<StatePair> {
    let k1 = rhs(grid, state, s, cfg);
    let k2 = rhs(grid, &(state + &k1.scale(0.5 * ds)), s + 0.5 * ds, cfg);
    let k3 = rhs(grid, &(state + &k2.scale(0.5 * ds)), s + 0.5 * ds, cfg);
    let k4 = rhs(grid, &(state + &k3.scale(ds)), s + ds, cfg);
    let mut next = state.clone();
    next.axpy(ds / 6.0, &k1);
    next.axpy(ds / 3.0, &k2);
    next.axpy(ds / 3.0, &k3);
    next.axpy(ds / 6.0, &k4);
    if !next.is_finite() {
        return Err(Error::Numerical(format!("scheme breakdown at s={}", s + ds)));
    }
    Ok(next)
}

/// One sample of a modulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub s: f64,
    pub d: f64,
    pub nu: f64,
    pub q_norm_h: f64,
    pub phi_qq: f64,
    pub h: f64,
    pub orth: [f64; 2],
}

/// Which of the two modulation constraints was violated first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `||q||_H <= s0^(-1/2)`
    QNorm,
    /// `|nu|/(1-|d|) <= s0^(-1/4)`
    NuRatio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub s0: f64,
    pub records: Vec<TraceRecord>,
    pub snapshots: Vec<(f64, StatePair)>,
    /// First sample at which a modulation constraint failed.
    pub constraint_exit: Option<(f64, Constraint)>,
    pub failure: Option<String>,
}

impl Trace {
    pub fn new(s0: f64) -> Self {
        Self { s0, records: Vec::new(), snapshots: Vec::new(), constraint_exit: None, failure: None }
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn snapshot_at(&self, s: f64) -> Option<&StatePair> {
        self.snapshots.iter().find(|(t, _)| (t - s).abs() < 1e-9).map(|(_, st)| st)
    }
}

struct Sampler<'a> {
    grid: &'a Grid,
    cfg: &'a SelfSimConfig,
    opts: ModulationOptions,
    params: SolitonParams,
    fallback: SolitonParams,
}

impl Sampler<'_> {
    fn sample(&mut self, state: &StatePair) -> Result<ModulationResult> {
        let first = modulate(self.grid, state, self.params, &self.opts)?;
        let res = if first.converged {
            first
        } else {
            let retry = modulate(self.grid, state, self.fallback, &self.opts)?;
            if !retry.converged {
                return Err(Error::Numerical(format!(
                    "modulation failed: {}",
                    retry.failure.or(first.failure).unwrap_or_default()
                )));
            }
            retry
        };
        self.params = res.params;
        Ok(res)
    }

    fn record(&mut self, s: f64, state: &StatePair, trace: &mut Trace) -> Result<()> {
        let m = self.sample(state)?;
        let energy = h_functional(self.grid, &m.q, m.params, self.cfg.eta)?;
        trace.records.push(TraceRecord {
            s,
            d: m.params.d(),
            nu: m.params.nu(),
            q_norm_h: m.q_norm,
            phi_qq: energy.phi_qq,
            h: energy.h,
            orth: m.residuals,
        });
        if trace.constraint_exit.is_none() {
            if m.q_norm > self.cfg.s0.powf(-0.5) {
                trace.constraint_exit = Some((s, Constraint::QNorm));
            } else if m.params.nu_ratio().abs() > self.cfg.s0.powf(-0.25) {
                trace.constraint_exit = Some((s, Constraint::NuRatio));
            }
        }
        Ok(())
    }
}

/// Integrates from `s0` to `s_end`, modulating every `sample_every` steps.
/// `init_params` seeds the first modulation.
pub fn evolve(grid: &Grid, init: &StatePair, init_params: SolitonParams, cfg: &SelfSimConfig) -> Result<Trace> {
    cfg.validate()?;
    if grid.n() != cfg.n || grid.p() != cfg.p {
        return Err(Error::GridMismatch("grid does not match configuration".into()));
    }
    grid.ensure_on_grid(&init.first)?;
    grid.ensure_on_grid(&init.second)?;
    let filter: Option<DMatrix<f64>> = cfg.filter.then(|| grid.spectral_filter());
    let mut sampler = Sampler {
        grid,
        cfg,
        opts: ModulationOptions::default(),
        params: init_params,
        fallback: SolitonParams::new(cfg.d_hat0, 0.0)?,
    };
    let mut trace = Trace::new(cfg.s0);
    let mut breaks: Vec<f64> = cfg.snapshot_s.clone();
    breaks.push(cfg.s_end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut state = init.clone();
    let mut s = cfg.s0;
    let h = cfg.effective_ds();
    if let Err(e) = sampler.record(s, &state, &mut trace) {
        trace.failure = Some(e.to_string());
        return Ok(trace);
    }
    if cfg.snapshot_s.contains(&cfg.s0) {
        trace.snapshots.push((s, state.clone()));
    }
    let mut count = 0usize;
    for &target in &breaks {
        if target <= s {
            continue;
        }
        let start = s;
        let steps = ((target - start) / h).ceil().max(1.0) as usize;
        let hh = (target - start) / steps as f64;
        for k in 1..=steps {
            let s_prev = start + (k - 1) as f64 * hh;
            state = match step(grid, &state, s_prev, hh, cfg) {
                Ok(next) => next,
                Err(e) => {
                    trace.failure = Some(e.to_string());
                    return Ok(trace);
                }
            };
            if let Some(f) = &filter {
                state = StatePair {
                    first: grid.field_from_values((f * state.first.values()).iter().copied().collect())?,
                    second: grid.field_from_values((f * state.second.values()).iter().copied().collect())?,
                };
            }
            s = if k == steps { target } else { start + k as f64 * hh };
            count += 1;
            if count.is_multiple_of(cfg.sample_every) || k == steps {
                if let Err(e) = sampler.record(s, &state, &mut trace) {
                    trace.failure = Some(e.to_string());
                    return Ok(trace);
                }
            }
        }
        if cfg.snapshot_s.contains(&target) {
            trace.snapshots.push((target, state.clone()));
        }
    }
    Ok(trace)
}

/// Evolves the soliton `kappa*(params)` started at `s0`.
pub fn evolve_soliton(grid: &Grid, params: SolitonParams, cfg: &SelfSimConfig) -> Result<Trace> {
    let init = kappa_star(params, grid)?;
    evolve(grid, &init, params, cfg)
}

/// Result of the search for initial parameters whose trajectory ends at
/// `(d, nu) = (d_hat0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub params: SolitonParams,
    /// `(d(s_end) - d_hat0, nu(s_end))` at the final horizon.
    pub miss: [f64; 2],
    pub evolutions: usize,
}

fn end_miss(grid: &Grid, params: SolitonParams, cfg: &SelfSimConfig) -> Result<[f64; 2]> {
    let tr = evolve_soliton(grid, params, cfg)?;
    if let Some(f) = tr.failure {
        return Err(Error::Numerical(f));
    }
    let last = tr.last().ok_or_else(|| Error::Numerical("empty trace".into()))?;
    Ok([last.d - cfg.d_hat0, last.nu])
}

/// Chooses `(d0, nu0)` so that the modulated parameters at `s_end` equal
/// `(d_hat0, 0)`. The `nu` direction is unstable (growth like `e^(s-s0)`), so
/// the horizon is extended in stages, each solved by Newton iteration with a
/// finite-difference Jacobian.
pub fn shoot_initial_parameters(
    grid: &Grid,
    cfg: &SelfSimConfig,
    horizons: &[f64],
    tol: f64,
) -> Result<ShootingResult> {
    cfg.validate()?;
    let mut d = cfg.d_hat0;
    let mut nu = 0.0;
    let mut evolutions = 0;
    let mut miss = [f64::NAN; 2];
    let mut run_cfg = cfg.clone();
    run_cfg.snapshot_s.clear();
    run_cfg.sample_every = usize::MAX / 2;
    for &horizon in horizons {
        run_cfg.s_end = (cfg.s0 + horizon).min(cfg.s_end);
        for _ in 0..12 {
            let p = SolitonParams::new(d, nu)?;
            miss = end_miss(grid, p, &run_cfg)?;
            evolutions += 1;
            if miss[0].abs().max(miss[1].abs()) <= tol {
                break;
            }
            let h = 1e-6;
            let md = end_miss(grid, SolitonParams::new(d + h, nu)?, &run_cfg)?;
            let mn = end_miss(grid, SolitonParams::new(d, nu + h)?, &run_cfg)?;
            evolutions += 2;
            let jac = nalgebra::Matrix2::new(
                (md[0] - miss[0]) / h,
                (mn[0] - miss[0]) / h,
                (md[1] - miss[1]) / h,
                (mn[1] - miss[1]) / h,
            );
            let step = jac
                .lu()
                .solve(&-nalgebra::Vector2::new(miss[0], miss[1]))
                .ok_or_else(|| Error::Numerical("singular shooting Jacobian".into()))?;
            d += step[0];
            nu += step[1];
        }
        if run_cfg.s_end >= cfg.s_end {
            break;
        }
    }
    Ok(ShootingResult { params: SolitonParams::new(d, nu)?, miss, evolutions })
}
