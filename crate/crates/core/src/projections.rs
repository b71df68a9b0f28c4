//! Directions `W^d_lambda` (`lambda = 0, 1`) and the projectors
//! `pi^d_lambda(v) = phi(W^d_lambda, v)`.
//!
//! The second component `W_{lambda,2}` is known in closed form. The first
//! component solves
//!
//! ```text
//! -L r + r = (lambda - (p+3)/(p-1)) r2 - 2 y r2' + 8/(p-1) r2 / (1-y^2) =: G
//! ```
//!
//! and is obtained by dense collocation. Since `phi((r, 0), (v1, 0))` equals
//! `∫ v1 (-L r + r) rho`, the projector can also be evaluated without `r`:
//! `pi(v) = ∫ (v1 G + v2 r2) rho`, where the singular piece of `G` goes
//! through the auxiliary quadrature rule. [`pi`] uses that weak form;
//! [`ProjectorSet::pi_direct`] pairs the collocated `W` with `v` through `phi`.

use nalgebra::DMatrix;

use crate::error::{param_err, Error, Result};
use crate::numeric::{pairwise_sum, ppow};
use crate::spectral::{Field, Grid, StatePair};

/// Which of the two directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lambda {
    Zero,
    One,
}

impl Lambda {
    pub const BOTH: [Lambda; 2] = [Lambda::Zero, Lambda::One];

    pub fn value(self) -> f64 {
        match self {
            Lambda::Zero => 0.0,
            Lambda::One => 1.0,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

fn check_d(d: f64) -> Result<()> {
    if !d.is_finite() || d.abs() >= 1.0 {
        return param_err(format!("|d| must be < 1, got d={d}"));
    }
    Ok(())
}

/// The constant `c_lambda` with
/// `1/c_lambda = 2 (lambda + 2/(p-1)) ∫ (y^2/(1-y^2))^(1-lambda) rho dy`.
pub fn base_c_lambda(lambda: Lambda, grid: &Grid) -> f64 {
    let a = grid.alpha();
    let integral = match lambda {
        Lambda::One => pairwise_sum(grid.quad_weights()),
        Lambda::Zero => {
            let t: Vec<f64> = grid.aux_weights().iter().zip(grid.aux_nodes()).map(|(w, y)| w * y * y).collect();
            pairwise_sum(&t)
        }
    };
    1.0 / (2.0 * (lambda.value() + a) * integral)
}

/// `c_lambda(d) = c_lambda (1-d^2)^(1/(p-1))`.
pub fn c_lambda_of_d(lambda: Lambda, d: f64, grid: &Grid) -> Result<f64> {
    check_d(d)?;
    let e = 1.0 / (grid.p() - 1.0);
    Ok(base_c_lambda(lambda, grid) * ppow(1.0 - d * d, e))
}

/// Closed form of `W_{lambda,2}` and its `y`-derivative at a point.
#[derive(Debug, Clone, Copy)]
struct SecondComponent {
    lambda: Lambda,
    d: f64,
    c: f64,
    m: f64,
}

impl SecondComponent {
    fn new(lambda: Lambda, d: f64, grid: &Grid) -> Result<Self> {
        let c = c_lambda_of_d(lambda, d, grid)?;
        Ok(Self { lambda, d, c, m: grid.alpha() + 1.0 })
    }

    fn value(&self, y: f64) -> f64 {
        let b = ppow(1.0 + self.d * y, -self.m);
        match self.lambda {
            Lambda::One => self.c * (1.0 - y * y) * b,
            Lambda::Zero => self.c * (y + self.d) * b,
        }
    }

    fn derivative(&self, y: f64) -> f64 {
        let q = 1.0 + self.d * y;
        let b = ppow(q, -self.m);
        let db = -self.m * self.d * b / q;
        match self.lambda {
            Lambda::One => self.c * (-2.0 * y * b + (1.0 - y * y) * db),
            Lambda::Zero => self.c * (b + (y + self.d) * db),
        }
    }

    /// The part of `G` without the `1/(1-y^2)` factor.
    fn regular_rhs(&self, y: f64, a: f64) -> f64 {
        (self.lambda.value() - 1.0 - 2.0 * a) * self.value(y) - 2.0 * y * self.derivative(y)
    }
}

/// `W^d_{lambda,2}` at the grid nodes.
pub fn w_lambda2(lambda: Lambda, d: f64, grid: &Grid) -> Result<Field> {
    let sc = SecondComponent::new(lambda, d, grid)?;
    Ok(grid.field(|y| sc.value(y)))
}

/// `-L + I` as a dense collocation matrix.
pub fn shifted_operator(grid: &Grid) -> DMatrix<f64> {
    let n = grid.n();
    let c = 2.0 * (1.0 + grid.alpha());
    let d1 = grid.diff_matrix();
    let d2 = grid.diff2_matrix();
    DMatrix::from_fn(n, n, |i, j| {
        let y = grid.nodes()[i];
        let l = (1.0 - y * y) * d2[(i, j)] - c * y * d1[(i, j)];
        -l + if i == j { 1.0 } else { 0.0 }
    })
}

/// Right-hand side `G` of the equation for `W_{lambda,1}` at the nodes.
pub fn w_lambda1_rhs(lambda: Lambda, d: f64, grid: &Grid) -> Result<Field> {
    let sc = SecondComponent::new(lambda, d, grid)?;
    let a = grid.alpha();
    Ok(grid.field(|y| sc.regular_rhs(y, a) + 4.0 * a * sc.value(y) / (1.0 - y * y)))
}

/// `W^d_{lambda,1}` by collocation.
pub fn w_lambda1(lambda: Lambda, d: f64, grid: &Grid) -> Result<Field> {
    let rhs = w_lambda1_rhs(lambda, d, grid)?;
    let lu = shifted_operator(grid).lu();
    let sol = lu.solve(rhs.values()).ok_or_else(|| Error::Numerical("singular collocation matrix for W_1".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite W_1 solution".into()));
    }
    grid.field_from_values(sol.iter().copied().collect())
}

/// Precomputed weak-form projector `v -> ∫ (v1 G + v2 W_2) rho`.
#[derive(Debug, Clone)]
pub struct Projector {
    lambda: Lambda,
    d: f64,
    w1_weight: Vec<f64>,
    w2_weight: Vec<f64>,
    aux_weight: Vec<f64>,
    grid_key: crate::spectral::GridKey,
}

impl Projector {
    pub fn new(lambda: Lambda, d: f64, grid: &Grid) -> Result<Self> {
        let sc = SecondComponent::new(lambda, d, grid)?;
        let a = grid.alpha();
        let mut w1_weight = Vec::with_capacity(grid.n());
        let mut w2_weight = Vec::with_capacity(grid.n());
        for (&y, &w) in grid.nodes().iter().zip(grid.quad_weights()) {
            w1_weight.push(w * sc.regular_rhs(y, a));
            w2_weight.push(w * sc.value(y));
        }
        let aux_weight =
            grid.aux_nodes().iter().zip(grid.aux_weights()).map(|(&y, &w)| w * 4.0 * a * sc.value(y)).collect();
        Ok(Self { lambda, d, w1_weight, w2_weight, aux_weight, grid_key: grid.key() })
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn apply(&self, grid: &Grid, v: &StatePair) -> Result<f64> {
        self.grid_key.ensure_same(&grid.key())?;
        grid.ensure_on_grid(&v.first)?;
        grid.ensure_on_grid(&v.second)?;
        let va = grid.to_aux(&v.first);
        let mut terms = Vec::with_capacity(3 * grid.n());
        for i in 0..grid.n() {
            terms.push(self.w1_weight[i] * v.first.as_slice()[i]);
            terms.push(self.w2_weight[i] * v.second.as_slice()[i]);
        }
        terms.extend(self.aux_weight.iter().zip(va.iter()).map(|(w, x)| w * x));
        Ok(pairwise_sum(&terms))
    }
}

/// `pi^d_lambda(v)` in weak form.
pub fn pi(lambda: Lambda, d: f64, v: &StatePair, grid: &Grid) -> Result<f64> {
    Projector::new(lambda, d, grid)?.apply(grid, v)
}

/// Both directions at a fixed `d`, with collocated first components.
#[derive(Debug, Clone)]
pub struct ProjectorSet {
    pub d: f64,
    pub w: [StatePair; 2],
    pub c: [f64; 2],
}

impl ProjectorSet {
    pub fn build(d: f64, grid: &Grid) -> Result<Self> {
        let mk = |l: Lambda| -> Result<StatePair> { StatePair::new(w_lambda1(l, d, grid)?, w_lambda2(l, d, grid)?) };
        Ok(Self {
            d,
            w: [mk(Lambda::Zero)?, mk(Lambda::One)?],
            c: [c_lambda_of_d(Lambda::Zero, d, grid)?, c_lambda_of_d(Lambda::One, d, grid)?],
        })
    }

    pub fn direction(&self, lambda: Lambda) -> &StatePair {
        &self.w[lambda.index()]
    }

    /// `phi(W_lambda, v)` with the collocated `W_{lambda,1}`.
    pub fn pi_direct(&self, lambda: Lambda, v: &StatePair, grid: &Grid) -> Result<f64> {
        grid.inner_phi(&self.w[lambda.index()], v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solitons::{dkappa_star_dd, dkappa_star_dnu, SolitonParams};

    #[test]
    fn normalisation_constants_for_cubic() {
        let g = Grid::build(16, 3.0).unwrap();
        assert!((base_c_lambda(Lambda::One, &g) - 3.0 / 16.0).abs() < 1e-14);
        assert!((base_c_lambda(Lambda::Zero, &g) - 3.0 / 4.0).abs() < 1e-14);
        assert_eq!(c_lambda_of_d(Lambda::One, 0.0, &g).unwrap(), base_c_lambda(Lambda::One, &g));
        assert!(c_lambda_of_d(Lambda::Zero, 1.0, &g).is_err());
    }

    #[test]
    fn second_components_at_zero_boost() {
        let g = Grid::build(17, 3.0).unwrap();
        let w0 = w_lambda2(Lambda::Zero, 0.0, &g).unwrap();
        for (v, &y) in w0.as_slice().iter().zip(g.nodes()) {
            assert!((v - 0.75 * y).abs() < 1e-14);
        }
        let w1 = w_lambda2(Lambda::One, 0.0, &g).unwrap();
        let mid = g.nodes().iter().position(|y| y.abs() < 1e-15).unwrap();
        assert!((w1.as_slice()[mid] - 3.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_derivative_matches_spectral() {
        let g = Grid::build(48, 3.0).unwrap();
        for l in Lambda::BOTH {
            let sc = SecondComponent::new(l, 0.4, &g).unwrap();
            let f = g.field(|y| sc.value(y));
            let df = g.field(|y| sc.derivative(y));
            assert!((&g.derivative(&f) - &df).max_abs() < 1e-9);
        }
    }

    #[test]
    fn w1_collocation_residual_and_refinement() {
        let g = Grid::build(48, 3.0).unwrap();
        let r = w_lambda1(Lambda::One, 0.0, &g).unwrap();
        let res = &(&r - &g.apply_l(&r)) - &w_lambda1_rhs(Lambda::One, 0.0, &g).unwrap();
        let l2 = g.integrate(&res.map(|x| x * x)).sqrt();
        assert!(l2 < 1e-8, "{l2}");

        let coarse = Grid::build(32, 3.0).unwrap();
        let fine = Grid::build(64, 3.0).unwrap();
        for d in [0.0, 0.5] {
            let a = w_lambda1(Lambda::One, d, &coarse).unwrap();
            let b = w_lambda1(Lambda::One, d, &fine).unwrap();
            let diff = &fine.resample(&a, &coarse).unwrap() - &b;
            assert!(fine.norm_h0(&diff).unwrap() < 1e-7);
        }
    }

    #[test]
    fn shifted_operator_rayleigh_quotient() {
        let g = Grid::build(24, 3.0).unwrap();
        let m = shifted_operator(&g);
        for k in 0..8 {
            let f = g.field(|y| (1.3 * y + k as f64).sin() + y.powi(k));
            let af = g.field_from_values((&m * f.values()).iter().copied().collect()).unwrap();
            let num = g.integrate(&f.zip_with(&af, |a, b| a * b).unwrap());
            let den = g.integrate(&f.map(|x| x * x));
            assert!(num / den >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn weak_and_direct_projectors_agree() {
        let g = Grid::build(64, 3.0).unwrap();
        let v = StatePair::new(g.field(|y| (2.0 * y).cos() + y), g.field(|y| 1.0 - y * y * y)).unwrap();
        for d in [0.0, 0.3, -0.6] {
            let set = ProjectorSet::build(d, &g).unwrap();
            let weak = pi(Lambda::One, d, &v, &g).unwrap();
            let direct = set.pi_direct(Lambda::One, &v, &g).unwrap();
            assert!((weak - direct).abs() < 1e-9 * (1.0 + weak.abs()), "{weak} {direct}");
        }
    }

    #[test]
    fn collocated_null_direction_converges_to_weak_form() {
        // W_{0,1} has logarithmic endpoint behaviour, so the collocated
        // pairing converges only algebraically
        let gap = |n: usize| {
            let g = Grid::build(n, 3.0).unwrap();
            let v = StatePair::new(g.field(|y| (2.0 * y).cos() + y), g.field(|y| 1.0 - y * y * y)).unwrap();
            let set = ProjectorSet::build(0.3, &g).unwrap();
            let weak = pi(Lambda::Zero, 0.3, &v, &g).unwrap();
            (weak - set.pi_direct(Lambda::Zero, &v, &g).unwrap()).abs() / weak.abs()
        };
        let (a, b, c) = (gap(32), gap(64), gap(128));
        assert!(b < a && c < b && c < 5e-3, "{a} {b} {c}");
    }

    #[test]
    fn projection_table_signs() {
        let g = Grid::build(64, 3.0).unwrap();
        for d in [-0.9, -0.5, 0.0, 0.3, 0.8] {
            for nu in [-0.05, 0.0, 0.05] {
                let par = SolitonParams::new(d, nu * (1.0 - f64::abs(d))).unwrap();
                let ds = par.d() / (1.0 + par.nu());
                let dn = dkappa_star_dnu(par, &g).unwrap();
                let dd = dkappa_star_dd(par, &g).unwrap();
                let p0 = pi(Lambda::Zero, ds, &dn, &g).unwrap();
                assert!(p0.abs() < 1e-7, "d={d} nu={nu}: {p0}");
                assert!(pi(Lambda::One, ds, &dn, &g).unwrap() < 0.0);
                assert!(pi(Lambda::Zero, ds, &dd, &g).unwrap() < 0.0);
            }
        }
        let zero = g.zero_pair();
        assert_eq!(pi(Lambda::One, 0.2, &zero, &g).unwrap(), 0.0);
    }

    #[test]
    fn directions_are_continuous_in_d() {
        let g = Grid::build(32, 3.0).unwrap();
        let base = ProjectorSet::build(0.3, &g).unwrap();
        let mut prev = f64::INFINITY;
        for h in [1e-2, 1e-3, 1e-4] {
            let near = ProjectorSet::build(0.3 + h, &g).unwrap();
            let dist = g.norm_h(&(base.direction(Lambda::One) - near.direction(Lambda::One))).unwrap();
            assert!(dist < prev && dist.is_finite());
            prev = dist;
        }
        assert!(prev < 1e-3);
    }
}
