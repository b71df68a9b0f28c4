//! Modulation: given `v` close to the soliton manifold, find `(d, nu)` with
//! `pi^{d*}_0(q) = pi^{d*}_1(q) = 0` for `q = v - kappa*(d, nu)`, where
//! `d* = d / (1 + nu)`.
//!
//! The solver is a damped Newton iteration in the coordinates
//! `(xi, m) = (artanh d, nu / (1 - |d|))`.

use nalgebra::{Matrix2, Vector2};

use crate::error::{param_err, Result};
use crate::projections::{Lambda, Projector};
use crate::solitons::{kappa_star, SolitonParams};
use crate::spectral::{Grid, StatePair};

/// `d* = d / (1 + nu)`.
pub fn dstar(d: f64, nu: f64) -> Result<f64> {
    if !(1.0 + nu > 0.0) {
        return param_err(format!("1 + nu must be positive, got nu={nu}"));
    }
    Ok(d / (1.0 + nu))
}

/// `d*` together with the band `1/2 <= (1-d*^2)/(1-d^2) <= 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DstarReport {
    pub dstar: f64,
    pub ratio: f64,
    pub in_band: bool,
}

pub fn dstar_report(params: SolitonParams) -> Result<DstarReport> {
    let ds = dstar(params.d(), params.nu())?;
    let ratio = (1.0 - ds * ds) / (1.0 - params.d() * params.d());
    Ok(DstarReport { dstar: ds, ratio, in_band: ds.abs() < 1.0 && (0.5..=2.0).contains(&ratio) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Forward-difference step, scaled by `1 - |d|` in the `d` direction.
    pub fd_step: f64,
    pub max_halvings: usize,
    /// `B` of the band `-1 + 1/B <= nu/(1-|d|) <= B`; reported, never enforced.
    pub band: f64,
}

impl Default for ModulationOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, fd_step: 1e-7, max_halvings: 10, band: 2.0 }
    }
}

#[derive(Debug, Clone)]
pub struct ModulationResult {
    pub params: SolitonParams,
    pub q: StatePair,
    pub residuals: [f64; 2],
    pub iterations: usize,
    pub converged: bool,
    pub q_norm: f64,
    /// `||v - kappa*(init)||_H`.
    pub initial_distance: f64,
    /// `nu/(1-|d|)` left the band `[-1 + 1/B, B]`.
    pub band_violation: bool,
    pub failure: Option<String>,
}

impl ModulationResult {
    pub fn dstar(&self) -> f64 {
        self.params.d() / (1.0 + self.params.nu())
    }

    /// `xi* = -artanh d*`.
    pub fn xi_star(&self) -> f64 {
        -self.dstar().atanh()
    }
}

fn to_coords(p: SolitonParams) -> (f64, f64) {
    (p.d().atanh(), p.nu_ratio())
}

fn from_coords(xi: f64, m: f64) -> Result<SolitonParams> {
    let d = xi.tanh();
    SolitonParams::new(d, m * (1.0 - d.abs()))
}

struct Eval {
    params: SolitonParams,
    q: StatePair,
    f: Vector2<f64>,
}

fn evaluate(grid: &Grid, v: &StatePair, params: SolitonParams) -> Result<Eval> {
    let ds = params.d() / (1.0 + params.nu());
    let q = v.checked_sub(&kappa_star(params, grid)?)?;
    let f0 = Projector::new(Lambda::Zero, ds, grid)?.apply(grid, &q)?;
    let f1 = Projector::new(Lambda::One, ds, grid)?.apply(grid, &q)?;
    Ok(Eval { params, q, f: Vector2::new(f0, f1) })
}

fn try_eval(grid: &Grid, v: &StatePair, xi: f64, m: f64) -> Option<Eval> {
    let p = from_coords(xi, m).ok()?;
    let e = evaluate(grid, v, p).ok()?;
    e.f.iter().all(|x| x.is_finite()).then_some(e)
}

/// Finds `(d, nu)` such that `v - kappa*(d, nu)` is orthogonal to both
/// directions at `d*`. Non-convergence is reported in the result, not as an
/// error.
pub fn modulate(grid: &Grid, v: &StatePair, init: SolitonParams, opts: &ModulationOptions) -> Result<ModulationResult> {
    if !(opts.tol > 0.0) {
        return param_err("modulation tolerance must be positive");
    }
    grid.ensure_on_grid(&v.first)?;
    grid.ensure_on_grid(&v.second)?;
    if !v.is_finite() {
        return param_err("state to modulate is not finite");
    }
    let mut cur = evaluate(grid, v, init)?;
    let initial_distance = grid.norm_h(&cur.q)?;
    let (mut xi, mut m) = to_coords(init);
    let mut iterations = 0;
    let mut failure = None;
    while cur.f.amax() > opts.tol {
        if iterations >= opts.max_iter {
            failure = Some(format!("no convergence after {} iterations", opts.max_iter));
            break;
        }
        iterations += 1;
        let d = cur.params.d();
        let hx = opts.fd_step * (1.0 - d.abs()) / (1.0 - d * d);
        let hm = opts.fd_step;
        let (Some(ex), Some(em)) = (try_eval(grid, v, xi + hx, m), try_eval(grid, v, xi, m + hm)) else {
            failure = Some("Jacobian probe left the admissible region".into());
            break;
        };
        let jac = Matrix2::from_columns(&[(ex.f - cur.f) / hx, (em.f - cur.f) / hm]);
        let Some(step) = jac.lu().solve(&-cur.f) else {
            failure = Some("singular modulation Jacobian".into());
            break;
        };
        let norm = cur.f.norm();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            if let Some(e) = try_eval(grid, v, xi + t * step[0], m + t * step[1]) {
                if e.f.norm() < norm {
                    accepted = Some((e, t));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((e, t)) = accepted else {
            failure = Some("damped step failed to reduce the residual".into());
            break;
        };
        xi += t * step[0];
        m += t * step[1];
        cur = e;
    }
    let converged = failure.is_none() && cur.f.amax() <= opts.tol;
    let ratio = cur.params.nu_ratio();
    let q_norm = grid.norm_h(&cur.q)?;
    Ok(ModulationResult {
        params: cur.params,
        q: cur.q,
        residuals: [cur.f[0], cur.f[1]],
        iterations,
        converged,
        q_norm,
        initial_distance,
        band_violation: !(ratio >= -1.0 + 1.0 / opts.band && ratio <= opts.band),
        failure,
    })
}
