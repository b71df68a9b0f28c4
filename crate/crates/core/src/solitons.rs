//! Soliton families of the self-similar equation and the explicit solutions
//! of the physical equation they come from.
//!
//! With `e = 1/(p-1)`, `D = 1 + d y + nu`:
//!
//! ```text
//! kappa(d, y)       = kappa0 ((1-d^2) / (1+dy)^2)^e
//! kappa*_1(d,nu,y)  = kappa0 (1-d^2)^e / D^(2e)
//! kappa*_2(d,nu,y)  = nu d/dnu kappa*_1 = -2 e nu kappa*_1 / D
//! ```

use crate::error::{param_err, Error, Result};
use crate::numeric::ppow;
use crate::selfsim;
use crate::spectral::{Field, Grid, StatePair};

/// Smallest admissible value of `1 + d y + nu` at a grid node.
pub const NODE_MARGIN: f64 = 1e-8;

/// Modulation parameters `(d, nu)` with `|d| < 1` and `nu > -1 + |d|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    d: f64,
    nu: f64,
}

impl SolitonParams {
    pub fn new(d: f64, nu: f64) -> Result<Self> {
        if !d.is_finite() || !nu.is_finite() {
            return param_err(format!("non-finite soliton parameters (d={d}, nu={nu})"));
        }
        if d.abs() >= 1.0 {
            return param_err(format!("|d| must be < 1, got d={d}"));
        }
        if nu <= -1.0 + d.abs() {
            return param_err(format!("nu must exceed -1+|d| = {}, got {nu}", -1.0 + d.abs()));
        }
        Ok(Self { d, nu })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `nu / (1 - |d|)`, the scale-invariant size of `nu`.
    pub fn nu_ratio(&self) -> f64 {
        self.nu / (1.0 - self.d.abs())
    }

    fn check_nodes(&self, grid: &Grid) -> Result<()> {
        let worst = grid.nodes().iter().map(|&y| 1.0 + self.d * y + self.nu).fold(f64::INFINITY, f64::min);
        if worst < NODE_MARGIN {
            return Err(Error::Domain(format!(
                "1 + d y + nu = {worst:e} at a node for (d={}, nu={})",
                self.d, self.nu
            )));
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return param_err(format!("exponent p must be > 1, got {p}"));
    }
    Ok(())
}

/// `kappa0 = (2(p+1)/(p-1)^2)^(1/(p-1))`.
pub fn kappa0(p: f64) -> Result<f64> {
    check_p(p)?;
    let e = 1.0 / (p - 1.0);
    Ok(ppow(2.0 * (p + 1.0) * e * e, e))
}

/// Stationary soliton `kappa(d)` at the grid nodes.
pub fn kappa(d: f64, grid: &Grid) -> Result<Field> {
    Ok(kappa_star(SolitonParams::new(d, 0.0)?, grid)?.first)
}

/// `d/dy kappa(d, y) = -2 e d kappa / (1 + d y)`.
pub fn kappa_dy(d: f64, grid: &Grid) -> Result<Field> {
    let k = kappa(d, grid)?;
    let e = 1.0 / (grid.p() - 1.0);
    let dy = grid.field(|y| -2.0 * e * d / (1.0 + d * y));
    k.zip_with(&dy, |a, b| a * b)
}

struct Pieces {
    e: f64,
    k1: Vec<f64>,
    den: Vec<f64>,
}

fn pieces(params: SolitonParams, grid: &Grid) -> Result<Pieces> {
    params.check_nodes(grid)?;
    let p = grid.p();
    let e = 1.0 / (p - 1.0);
    let amp = kappa0(p)? * ppow(1.0 - params.d * params.d, e);
    let den: Vec<f64> = grid.nodes().iter().map(|&y| 1.0 + params.d * y + params.nu).collect();
    let k1 = den.iter().map(|&dd| amp * ppow(dd, -2.0 * e)).collect();
    Ok(Pieces { e, k1, den })
}

fn pair(grid: &Grid, a: Vec<f64>, b: Vec<f64>) -> StatePair {
    StatePair { first: grid.field_from_values(a).unwrap(), second: grid.field_from_values(b).unwrap() }
}

/// Generalized soliton `(kappa*_1, kappa*_2)(d, nu)` at the grid nodes.
pub fn kappa_star(params: SolitonParams, grid: &Grid) -> Result<StatePair> {
    let Pieces { e, k1, den } = pieces(params, grid)?;
    let k2 = k1.iter().zip(&den).map(|(k, dd)| -2.0 * e * params.nu * k / dd).collect();
    Ok(pair(grid, k1, k2))
}

/// `d/dd kappa*(d, nu)`.
pub fn dkappa_star_dd(params: SolitonParams, grid: &Grid) -> Result<StatePair> {
    let Pieces { e, k1, den } = pieces(params, grid)?;
    let (d, nu) = (params.d, params.nu);
    let mut a = Vec::with_capacity(k1.len());
    let mut b = Vec::with_capacity(k1.len());
    for ((&k, &dd), &y) in k1.iter().zip(&den).zip(grid.nodes()) {
        let dk1 = k * (-2.0 * e * d / (1.0 - d * d) - 2.0 * e * y / dd);
        a.push(dk1);
        b.push(-2.0 * e * nu * (dk1 / dd - k * y / (dd * dd)));
    }
    Ok(pair(grid, a, b))
}

/// `d/dnu kappa*(d, nu)`.
pub fn dkappa_star_dnu(params: SolitonParams, grid: &Grid) -> Result<StatePair> {
    let Pieces { e, k1, den } = pieces(params, grid)?;
    let nu = params.nu;
    let a = k1.iter().zip(&den).map(|(k, dd)| -2.0 * e * k / dd).collect();
    let b = k1.iter().zip(&den).map(|(k, dd)| -2.0 * e * k / dd * (1.0 - (2.0 * e + 1.0) * nu / dd)).collect();
    Ok(pair(grid, a, b))
}

/// Explicit solution of the one-dimensional equation
/// `u(r, t) = kappa0 (1-d^2)^e / ((1+nu)(T-t) + d(r-r0))^(2e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitSolution {
    pub p: f64,
    pub params: SolitonParams,
    pub r0: f64,
    pub t0: f64,
}

impl ExplicitSolution {
    pub fn new(p: f64, params: SolitonParams, r0: f64, t0: f64) -> Result<Self> {
        check_p(p)?;
        if !(t0 > 0.0) {
            return param_err(format!("blow-up time must be positive, got {t0}"));
        }
        Ok(Self { p, params, r0, t0 })
    }

    fn denominator(&self, r: f64, t: f64) -> Result<f64> {
        let den = (1.0 + self.params.nu) * (self.t0 - t) + self.params.d * (r - self.r0);
        if den <= 0.0 || !den.is_finite() {
            return Err(Error::Domain(format!("explicit solution singular at (r={r}, t={t})")));
        }
        Ok(den)
    }

    pub fn u(&self, r: f64, t: f64) -> Result<f64> {
        let e = 1.0 / (self.p - 1.0);
        let den = self.denominator(r, t)?;
        let d = self.params.d;
        Ok(kappa0(self.p)? * ppow(1.0 - d * d, e) * ppow(den, -2.0 * e))
    }

    /// `d/dt u`.
    pub fn u_t(&self, r: f64, t: f64) -> Result<f64> {
        let e = 1.0 / (self.p - 1.0);
        let den = self.denominator(r, t)?;
        Ok(2.0 * e * (1.0 + self.params.nu) * self.u(r, t)? / den)
    }

    /// The singular set: the time at which the denominator vanishes above `r`.
    pub fn blowup_time(&self, r: f64) -> f64 {
        self.t0 + self.params.d * (r - self.r0) / (1.0 + self.params.nu)
    }

    /// `T'(r)` of the singular set.
    pub fn blowup_slope(&self) -> f64 {
        self.params.d / (1.0 + self.params.nu)
    }
}

/// Convenience wrapper around [`ExplicitSolution::u`].
pub fn u_hat(p: f64, params: SolitonParams, r0: f64, t0: f64, r: f64, t: f64) -> Result<f64> {
    ExplicitSolution::new(p, params, r0, t0)?.u(r, t)
}

/// `lambda(d, nu) = ((1-d^2) / ((1+nu)^2 - d^2))^(1/(p-1))`.
pub fn lambda_dn(params: SolitonParams, p: f64) -> Result<f64> {
    check_p(p)?;
    let (d, nu) = (params.d, params.nu);
    let den = (1.0 + nu).powi(2) - d * d;
    if den <= 0.0 {
        return Err(Error::Domain(format!("(1+nu)^2 <= d^2 for (d={d}, nu={nu})")));
    }
    Ok(ppow((1.0 - d * d) / den, 1.0 / (p - 1.0)))
}

/// `H`-norm of the residual of `s -> kappa*(d, mu e^s)` in the
/// one-dimensional first-order system at time `s`.
pub fn residual_selfsim_1d(d: f64, mu: f64, s: f64, grid: &Grid) -> Result<f64> {
    let params = SolitonParams::new(d, mu * s.exp())?;
    let state = kappa_star(params, grid)?;
    let f = selfsim::rhs_1d(grid, &state, true);
    let ds = dkappa_star_dnu(params, grid)?.scale(params.nu);
    grid.norm_h(&(&f - &ds))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa0_values() {
        assert!((kappa0(3.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((kappa0(2.0).unwrap() - 6.0).abs() < 1e-13);
        assert!(kappa0(1.0).is_err());
        assert!(kappa0(0.5).is_err());
    }

    #[test]
    fn params_domain() {
        assert!(SolitonParams::new(1.0, 0.5).is_err());
        assert!(SolitonParams::new(0.5, -0.5).is_err());
        assert!(SolitonParams::new(0.5, -0.49).is_ok());
        assert!(SolitonParams::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        let g = Grid::build(16, 3.0).unwrap();
        let k = kappa(0.0, &g).unwrap();
        assert!(k.as_slice().iter().all(|&v| (v - 2f64.sqrt()).abs() < 1e-15));
        let g = Grid::build(17, 3.0).unwrap();
        let mid = g.nodes().iter().position(|y| y.abs() < 1e-15).unwrap();
        let k = kappa(0.5, &g).unwrap();
        assert!((k.as_slice()[mid] - 2f64.sqrt() * 0.75f64.sqrt()).abs() < 1e-14);
        assert!(kappa(1.0, &g).is_err());
    }

    #[test]
    fn kappa_mirror_symmetry() {
        let g = Grid::build(20, 2.5).unwrap();
        let a = kappa(0.4, &g).unwrap();
        let b = kappa(-0.4, &g).unwrap();
        let n = g.n();
        for i in 0..n {
            assert!((a.as_slice()[i] - b.as_slice()[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_star_reduces_and_matches_hand_value() {
        let g = Grid::build(16, 3.0).unwrap();
        let ks = kappa_star(SolitonParams::new(0.3, 0.0).unwrap(), &g).unwrap();
        assert_eq!(ks.first, kappa(0.3, &g).unwrap());
        assert!(ks.second.as_slice().iter().all(|&v| v == 0.0));
        // (d, nu) = (0, 1), p = 3: kappa*_1 = sqrt2 / 2, kappa*_2 = -sqrt2 / 4
        let ks = kappa_star(SolitonParams::new(0.0, 1.0).unwrap(), &g).unwrap();
        let h = std::f64::consts::SQRT_2 / 2.0;
        assert!(ks.first.as_slice().iter().all(|&v| (v - h).abs() < 1e-15));
        assert!(ks.second.as_slice().iter().all(|&v| (v + h / 2.0).abs() < 1e-15));
    }

    #[test]
    fn second_component_is_nu_times_nu_derivative() {
        let g = Grid::build(24, 3.0).unwrap();
        for &(d, nu) in &[(0.3, 0.1), (-0.6, -0.2), (0.8, 2.0)] {
            let p = SolitonParams::new(d, nu).unwrap();
            let ks = kappa_star(p, &g).unwrap();
            let dn = dkappa_star_dnu(p, &g).unwrap();
            assert!((&ks.second - &dn.first.scale(nu)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &pp in &[3.0, 2.0, 4.5] {
            let g = Grid::build(24, pp).unwrap();
            let (d, nu) = (0.3, 0.1);
            let h = 1e-6;
            let f = |d: f64, nu: f64| kappa_star(SolitonParams::new(d, nu).unwrap(), &g).unwrap();
            let fd_d = (&f(d + h, nu) - &f(d - h, nu)).scale(0.5 / h);
            let fd_n = (&f(d, nu + h) - &f(d, nu - h)).scale(0.5 / h);
            let p = SolitonParams::new(d, nu).unwrap();
            for (an, fd) in [(dkappa_star_dd(p, &g).unwrap(), fd_d), (dkappa_star_dnu(p, &g).unwrap(), fd_n)] {
                for (x, y) in [(&an.first, &fd.first), (&an.second, &fd.second)] {
                    let scale = x.max_abs().max(1e-300);
                    assert!((x - y).max_abs() / scale < 1e-6);
                }
            }
        }
    }

    #[test]
    fn nu_derivative_at_zero_and_d_derivative_at_centre() {
        let g = Grid::build(17, 3.0).unwrap();
        let p = SolitonParams::new(0.4, 0.0).unwrap();
        let dn = dkappa_star_dnu(p, &g).unwrap();
        let k = kappa(0.4, &g).unwrap();
        for (i, &y) in g.nodes().iter().enumerate() {
            let expect = -k.as_slice()[i] / (1.0 + 0.4 * y);
            assert!((dn.second.as_slice()[i] - expect).abs() < 1e-14);
        }
        let mid = g.nodes().iter().position(|y| y.abs() < 1e-15).unwrap();
        let dd = dkappa_star_dd(SolitonParams::new(0.0, 0.3).unwrap(), &g).unwrap();
        assert!(dd.first.as_slice()[mid].abs() < 1e-15);
    }

    #[test]
    fn explicit_solution_examples() {
        let p = 3.0;
        let flat = ExplicitSolution::new(p, SolitonParams::new(0.0, 0.0).unwrap(), 1.0, 0.5).unwrap();
        let u = flat.u(1.1, 0.2).unwrap();
        assert!((u - 2f64.sqrt() / 0.3).abs() < 1e-13);
        let sol = ExplicitSolution::new(p, SolitonParams::new(0.3, 0.1).unwrap(), 1.0, 0.5).unwrap();
        // homogeneity of degree -2/(p-1)
        let a = sol.u(1.05, 0.3).unwrap();
        let sol2 = ExplicitSolution::new(p, SolitonParams::new(0.3, 0.1).unwrap(), 1.0, 0.7).unwrap();
        let b = sol2.u(1.1, 0.3).unwrap();
        assert!((b - a * 0.5).abs() < 1e-12 * a);
        // time derivative against a central difference
        let h = 1e-6;
        let fd = (sol.u(1.05, 0.3 + h).unwrap() - sol.u(1.05, 0.3 - h).unwrap()) / (2.0 * h);
        assert!((fd - sol.u_t(1.05, 0.3).unwrap()).abs() < 1e-6 * fd.abs());
        assert!(sol.u(1.0, 0.5).is_err());
    }

    #[test]
    fn explicit_solution_at_zero_is_rescaled_soliton() {
        let g = Grid::build(20, 3.0).unwrap();
        let (r0, t0) = (1.0, 0.4);
        let par = SolitonParams::new(-0.3, 0.05).unwrap();
        let sol = ExplicitSolution::new(3.0, par, r0, t0).unwrap();
        let ks = kappa_star(par, &g).unwrap();
        for (i, &y) in g.nodes().iter().enumerate() {
            let u = sol.u(r0 + y * t0, 0.0).unwrap() * t0;
            assert!((u - ks.first.as_slice()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_set_slope_from_denominator() {
        let par = SolitonParams::new(0.3, 0.0).unwrap();
        let sol = ExplicitSolution::new(3.0, par, 1.0, 0.5).unwrap();
        // (T - t) + d (r - r0) = 0  =>  t = T + d (r - r0)
        assert!((sol.blowup_time(1.1) - 0.53).abs() < 1e-15);
        assert_eq!(sol.blowup_slope(), 0.3);
        assert!(sol.u(1.1, 0.53 - 1e-9).unwrap() > 1e6);
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_dn(SolitonParams::new(0.7, 0.0).unwrap(), 3.0).unwrap(), 1.0);
        assert!((lambda_dn(SolitonParams::new(0.0, 1.0).unwrap(), 3.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_and_orbit_residuals() {
        let g = Grid::build(48, 3.0).unwrap();
        for d in [0.0, 0.3, -0.6] {
            assert!(residual_selfsim_1d(d, 0.0, 0.0, &g).unwrap() < 1e-8);
        }
        assert!(residual_selfsim_1d(0.3, 0.05, 0.0, &g).unwrap() < 1e-7);
        let coarse = residual_selfsim_1d(0.6, 0.05, 0.0, &Grid::build(16, 3.0).unwrap()).unwrap();
        let fine = residual_selfsim_1d(0.6, 0.05, 0.0, &Grid::build(32, 3.0).unwrap()).unwrap();
        assert!(fine < coarse);
        assert!(residual_selfsim_1d(0.3, -0.8, 0.0, &g).is_err());
    }
}
