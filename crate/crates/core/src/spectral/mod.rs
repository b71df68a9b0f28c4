//! Gauss–Jacobi grids on `(-1, 1)` for the weight `rho(y) = (1-y^2)^(2/(p-1))`,
//! spectral differentiation, the energy inner product `phi` and the weighted
//! norms used throughout the crate.
//!
//! Two quadrature rules live on every grid:
//!
//! * the main rule with Jacobi exponents `alpha = beta = 2/(p-1)` integrates
//!   `f rho` exactly for polynomials `f` of degree `<= 2n-1`;
//! * an auxiliary rule with exponents `alpha - 1` integrates `f rho / (1-y^2)`
//!   in the same sense. Fields are carried to its nodes by barycentric
//!   interpolation, so the singular weight is never evaluated near `±1`.

mod field;
pub(crate) mod jacobi;

use nalgebra::{DMatrix, DVector};

pub use field::{Field, GridKey, StatePair};

use crate::error::{param_err, Result};
use crate::numeric::pairwise_sum;

/// Collocation grid: nodes, quadrature weights and differentiation operators.
#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    p: f64,
    alpha: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    diff: DMatrix<f64>,
    diff2: DMatrix<f64>,
    aux_nodes: Vec<f64>,
    aux_weights: Vec<f64>,
    to_aux: DMatrix<f64>,
}

/// The three norms bounded by `||f||_{H0}` in the Hardy–Sobolev inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNorms {
    /// `||f||` in `L^2` with weight `rho / (1-y^2)`.
    pub l2_singular: f64,
    /// `||f||` in `L^(p+1)` with weight `rho`.
    pub lp1: f64,
    /// `max |f| (1-y^2)^(1/(p-1))` over the nodes.
    pub sup_weighted: f64,
}

impl WeightedNorms {
    pub fn total(&self) -> f64 {
        self.l2_singular + self.lp1 + self.sup_weighted
    }
}

impl Grid {
    /// Builds the `n`-point Gauss–Jacobi grid for exponent `p`.
    pub fn build(n: usize, p: f64) -> Result<Grid> {
        if n < 8 {
            return param_err(format!("grid size must be >= 8, got {n}"));
        }
        if !(p > 1.0) || !p.is_finite() {
            return param_err(format!("exponent p must be > 1, got {p}"));
        }
        let alpha = 2.0 / (p - 1.0);
        let (nodes, weights) = jacobi::gauss_jacobi(n, alpha, alpha)?;
        let bary = jacobi::gauss_barycentric_weights(&nodes, &weights);
        let (diff, diff2) = jacobi::differentiation_matrices(&nodes, &bary);
        let (aux_nodes, aux_weights) = jacobi::gauss_jacobi(n, alpha - 1.0, alpha - 1.0)?;
        let to_aux = jacobi::interpolation_matrix(&nodes, &bary, &aux_nodes);
        Ok(Grid { n, p, alpha, nodes, weights, bary, diff, diff2, aux_nodes, aux_weights, to_aux })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Exponent of the weight, `2/(p-1)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn key(&self) -> GridKey {
        GridKey::new(self.n, self.p)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn diff_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    pub fn diff2_matrix(&self) -> &DMatrix<f64> {
        &self.diff2
    }

    pub fn aux_nodes(&self) -> &[f64] {
        &self.aux_nodes
    }

    pub fn aux_weights(&self) -> &[f64] {
        &self.aux_weights
    }

    pub fn field(&self, f: impl Fn(f64) -> f64) -> Field {
        let v = DVector::from_iterator(self.n, self.nodes.iter().map(|&y| f(y)));
        Field::from_vector(self.key(), v)
    }

    pub fn field_from_values(&self, values: Vec<f64>) -> Result<Field> {
        if values.len() != self.n {
            return param_err(format!("expected {} nodal values, got {}", self.n, values.len()));
        }
        Ok(Field::from_vector(self.key(), DVector::from_vec(values)))
    }

    pub fn zeros(&self) -> Field {
        Field::from_vector(self.key(), DVector::zeros(self.n))
    }

    pub fn constant(&self, c: f64) -> Field {
        Field::from_vector(self.key(), DVector::from_element(self.n, c))
    }

    pub fn zero_pair(&self) -> StatePair {
        StatePair { first: self.zeros(), second: self.zeros() }
    }

    pub fn ensure_on_grid(&self, f: &Field) -> Result<()> {
        self.key().ensure_same(&f.key())
    }

    /// Spectral derivative `f'` at the nodes.
    pub fn derivative(&self, f: &Field) -> Field {
        assert_eq!(f.key(), self.key(), "derivative of a field from another grid");
        Field::from_vector(self.key(), &self.diff * f.values())
    }

    pub fn second_derivative(&self, f: &Field) -> Field {
        assert_eq!(f.key(), self.key(), "derivative of a field from another grid");
        Field::from_vector(self.key(), &self.diff2 * f.values())
    }

    /// `∫ f rho dy` by the main rule.
    pub fn integrate(&self, f: &Field) -> f64 {
        self.integrate_values(f.as_slice())
    }

    pub(crate) fn integrate_values(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self.weights.iter().zip(values).map(|(w, v)| w * v).collect();
        pairwise_sum(&terms)
    }

    /// Values of the polynomial interpolant of `f` at the auxiliary nodes.
    pub fn to_aux(&self, f: &Field) -> DVector<f64> {
        &self.to_aux * f.values()
    }

    /// `∫ f g rho / (1-y^2) dy` where `g` is known in closed form; `f` is
    /// interpolated to the auxiliary rule.
    pub fn integrate_singular_with(&self, f: &Field, g: impl Fn(f64) -> f64) -> f64 {
        let fa = self.to_aux(f);
        let terms: Vec<f64> =
            self.aux_weights.iter().zip(&self.aux_nodes).zip(fa.iter()).map(|((w, &y), v)| w * v * g(y)).collect();
        pairwise_sum(&terms)
    }

    /// `∫ f^2 rho / (1-y^2) dy`.
    pub fn integrate_singular_sq(&self, f: &Field) -> f64 {
        let fa = self.to_aux(f);
        let terms: Vec<f64> = self.aux_weights.iter().zip(fa.iter()).map(|(w, v)| w * v * v).collect();
        pairwise_sum(&terms)
    }

    /// The energy inner product
    /// `phi(a, b) = ∫ (a1 b1 + a1' b1' (1-y^2) + a2 b2) rho dy`.
    pub fn inner_phi(&self, a: &StatePair, b: &StatePair) -> Result<f64> {
        self.ensure_pair(a)?;
        self.ensure_pair(b)?;
        let da = self.derivative(&a.first);
        let db = self.derivative(&b.first);
        Ok(self.phi_terms(&a.first, &da, &a.second, &b.first, &db, &b.second))
    }

    fn phi_terms(&self, a1: &Field, da1: &Field, a2: &Field, b1: &Field, db1: &Field, b2: &Field) -> f64 {
        let terms: Vec<f64> = (0..self.n)
            .map(|i| {
                let y = self.nodes[i];
                let t = a1.as_slice()[i] * b1.as_slice()[i]
                    + (1.0 - y * y) * (da1.as_slice()[i] * db1.as_slice()[i])
                    + a2.as_slice()[i] * b2.as_slice()[i];
                self.weights[i] * t
            })
            .collect();
        pairwise_sum(&terms)
    }

    pub fn norm_h(&self, a: &StatePair) -> Result<f64> {
        Ok(self.inner_phi(a, a)?.max(0.0).sqrt())
    }

    /// `||f||_{H0}^2 = ∫ (f^2 + f'^2 (1-y^2)) rho dy`.
    pub fn norm_h0(&self, f: &Field) -> Result<f64> {
        self.ensure_on_grid(f)?;
        let df = self.derivative(f);
        let z = self.zeros();
        Ok(self.phi_terms(f, &df, &z, f, &df, &z).max(0.0).sqrt())
    }

    /// `L f = (1/rho) (rho (1-y^2) f')'`, evaluated in the expanded form
    /// `(1-y^2) f'' - 2 (1 + alpha) y f'`.
    pub fn apply_l(&self, f: &Field) -> Field {
        let d1 = self.derivative(f);
        let d2 = self.second_derivative(f);
        self.l_from_derivatives(&d1, &d2)
    }

    pub(crate) fn l_from_derivatives(&self, d1: &Field, d2: &Field) -> Field {
        let c = 2.0 * (1.0 + self.alpha);
        let v = DVector::from_iterator(
            self.n,
            self.nodes
                .iter()
                .zip(d1.as_slice().iter().zip(d2.as_slice()))
                .map(|(&y, (&f1, &f2))| (1.0 - y * y) * f2 - c * y * f1),
        );
        Field::from_vector(self.key(), v)
    }

    pub fn weighted_norms(&self, f: &Field) -> Result<WeightedNorms> {
        self.ensure_on_grid(f)?;
        let l2_singular = self.integrate_singular_sq(f).max(0.0).sqrt();
        let q = self.p + 1.0;
        let lp = self.integrate(&f.map(|v| v.abs().powf(q)));
        let lp1 = lp.max(0.0).powf(1.0 / q);
        let e = 1.0 / (self.p - 1.0);
        let sup_weighted =
            self.nodes.iter().zip(f.as_slice()).map(|(&y, v)| v.abs() * (1.0 - y * y).powf(e)).fold(0.0, f64::max);
        Ok(WeightedNorms { l2_singular, lp1, sup_weighted })
    }

    fn ensure_pair(&self, a: &StatePair) -> Result<()> {
        self.ensure_on_grid(&a.first)?;
        self.ensure_on_grid(&a.second)
    }

    /// Barycentric interpolation of `f` to arbitrary points of `[-1, 1]`.
    pub fn interpolate(&self, f: &Field, targets: &[f64]) -> Vec<f64> {
        let m = jacobi::interpolation_matrix(&self.nodes, &self.bary, targets);
        (&m * f.values()).iter().copied().collect()
    }

    /// Nodal values of the interpolant of a field given on another grid with
    /// the same exponent.
    pub fn resample(&self, f: &Field, from: &Grid) -> Result<Field> {
        from.ensure_on_grid(f)?;
        if from.p != self.p {
            return param_err("resampling across different exponents p");
        }
        let v = from.interpolate(f, &self.nodes);
        Ok(Field::from_vector(self.key(), DVector::from_vec(v)))
    }

    /// Smoothing operator damping the top third of the Jacobi spectrum with
    /// an eighth-order exponential filter.
    pub fn spectral_filter(&self) -> DMatrix<f64> {
        let n = self.n;
        let a = self.alpha;
        let mut basis = DMatrix::<f64>::zeros(n, n);
        for (i, &y) in self.nodes.iter().enumerate() {
            for k in 0..n {
                basis[(i, k)] = jacobi::jacobi_pair(k, a, a, y).0;
            }
        }
        for k in 0..n {
            let norm2: f64 = (0..n).map(|i| self.weights[i] * basis[(i, k)].powi(2)).sum();
            let s = norm2.sqrt();
            for i in 0..n {
                basis[(i, k)] /= s;
            }
        }
        let cut = (2 * n) / 3;
        let sigma = DVector::from_iterator(
            n,
            (0..n).map(|k| {
                if k < cut {
                    1.0
                } else {
                    let x = (k - cut) as f64 / ((n - 1 - cut).max(1)) as f64;
                    (-36.0 * x.powi(8)).exp()
                }
            }),
        );
        let mut analysis = basis.transpose();
        for i in 0..n {
            for k in 0..n {
                analysis[(k, i)] *= self.weights[i];
            }
        }
        let scaled = DMatrix::from_fn(n, n, |i, k| basis[(i, k)] * sigma[k]);
        scaled * analysis
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `∫ y^k (1-y^2)^a dy` in closed form.
    fn moment(k: usize, a: f64) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        let m = (k / 2) as f64;
        libm::tgamma(m + 0.5) * libm::tgamma(a + 1.0) / libm::tgamma(m + a + 1.5)
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(Grid::build(7, 3.0).is_err());
        assert!(Grid::build(16, 1.0).is_err());
        assert!(Grid::build(16, 0.5).is_err());
        assert!(Grid::build(16, f64::NAN).is_err());
    }

    #[test]
    fn weight_sums() {
        let g = Grid::build(16, 3.0).unwrap();
        assert!((g.quad_weights().iter().sum::<f64>() - 4.0 / 3.0).abs() < 1e-12);
        assert!(g.integrate(&g.field(|y| y)).abs() < 1e-13);
        let g = Grid::build(24, 2.0).unwrap();
        assert!((g.quad_weights().iter().sum::<f64>() - 16.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_exactness_against_closed_moments() {
        for &(n, p) in &[(8usize, 3.0), (16, 3.0), (20, 2.0), (24, 5.0), (32, 1.8)] {
            let g = Grid::build(n, p).unwrap();
            assert!(g.nodes().iter().all(|y| y.abs() < 1.0));
            assert!(g.quad_weights().iter().all(|&w| w > 0.0));
            for k in 0..2 * n {
                let q = g.integrate(&g.field(|y| y.powi(k as i32)));
                let exact = moment(k, g.alpha());
                assert!((q - exact).abs() < 1e-10, "n={n} p={p} k={k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn auxiliary_rule_integrates_singular_weight() {
        let g = Grid::build(16, 3.0).unwrap();
        // rho/(1-y^2) = 1 for p = 3
        assert!((g.integrate_singular_sq(&g.constant(1.0)) - 2.0).abs() < 1e-13);
        let g = Grid::build(20, 5.0).unwrap();
        let f = g.field(|y| y * y);
        let exact = moment(4, g.alpha() - 1.0);
        assert!((g.integrate_singular_sq(&f) - exact).abs() < 1e-12);
    }

    #[test]
    fn differentiates_monomials() {
        for &n in &[16usize, 32, 64] {
            let g = Grid::build(n, 3.0).unwrap();
            for k in 1..=n / 2 {
                let f = g.field(|y| y.powi(k as i32));
                let df = g.derivative(&f);
                let exact = g.field(|y| k as f64 * y.powi(k as i32 - 1));
                let err = (&df - &exact).max_abs();
                assert!(err < 1e-10, "n={n} k={k} err={err}");
            }
        }
    }

    #[test]
    fn second_derivative_of_polynomial() {
        let g = Grid::build(24, 2.5).unwrap();
        let f = g.field(|y| y.powi(7) - 3.0 * y * y);
        let exact = g.field(|y| 42.0 * y.powi(5) - 6.0);
        assert!((&g.second_derivative(&f) - &exact).max_abs() < 1e-9);
    }

    #[test]
    fn phi_examples() {
        let g = Grid::build(16, 3.0).unwrap();
        let zero = g.zero_pair();
        assert_eq!(g.inner_phi(&zero, &zero).unwrap(), 0.0);
        let one = StatePair::new(g.constant(1.0), g.zeros()).unwrap();
        assert!((g.inner_phi(&one, &one).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((g.norm_h(&one).unwrap() - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((g.norm_h0(&g.constant(1.0)).unwrap() - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(g.norm_h0(&g.zeros()).unwrap(), 0.0);
    }

    /// Composite Gauss–Legendre oracle on `[-1, 1]`, independent of the grid.
    fn legendre_composite(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
        let (x, w) = jacobi::gauss_jacobi(10, 0.0, 0.0).unwrap();
        let h = 2.0 / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let a = -1.0 + k as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                total += 0.5 * h * wi * f(a + 0.5 * h * (xi + 1.0));
            }
        }
        total
    }

    #[test]
    fn norm_h0_of_identity_matches_quadrature_oracle() {
        let g = Grid::build(16, 3.0).unwrap();
        let oracle = legendre_composite(|y| (y * y + (1.0 - y * y)) * (1.0 - y * y), 200).sqrt();
        assert!((oracle - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((g.norm_h0(&g.field(|y| y)).unwrap() - oracle).abs() < 1e-12);
        // non-polynomial weight exponent
        let g = Grid::build(40, 2.5).unwrap();
        let a = g.alpha();
        let f = |y: f64| (0.7 * y).sin() + 0.3;
        let df = |y: f64| 0.7 * (0.7 * y).cos();
        let oracle =
            legendre_composite(|y| (f(y).powi(2) + df(y).powi(2) * (1.0 - y * y)) * (1.0 - y * y).powf(a), 4000).sqrt();
        let got = g.norm_h0(&g.field(f)).unwrap();
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn l_annihilates_constants_and_matches_closed_form() {
        let g = Grid::build(24, 3.0).unwrap();
        assert!(g.apply_l(&g.constant(2.5)).max_abs() < 1e-10);
        // L y^2 = 2(1-y^2) - 4(1+alpha) y^2
        let a = g.alpha();
        let lf = g.apply_l(&g.field(|y| y * y));
        let exact = g.field(|y| 2.0 * (1.0 - y * y) - 4.0 * (1.0 + a) * y * y);
        assert!((&lf - &exact).max_abs() < 1e-10);
    }

    #[test]
    fn weighted_norms_examples() {
        let g = Grid::build(16, 3.0).unwrap();
        let z = g.weighted_norms(&g.zeros()).unwrap();
        assert_eq!((z.l2_singular, z.lp1, z.sup_weighted), (0.0, 0.0, 0.0));
        let one = g.weighted_norms(&g.constant(1.0)).unwrap();
        assert!((one.l2_singular - 2f64.sqrt()).abs() < 1e-13);
        // ∫(1-y^2) dy = 4/3 for the L^4 norm
        assert!((one.lp1 - (4.0f64 / 3.0).powf(0.25)).abs() < 1e-13);
        assert!(one.sup_weighted < 1.0 && one.sup_weighted > 0.9);
    }

    #[test]
    fn filter_preserves_low_modes() {
        let g = Grid::build(24, 3.0).unwrap();
        let f = g.field(|y| 1.0 + y - 2.0 * y.powi(5));
        let filtered = Field::from_vector(g.key(), g.spectral_filter() * f.values());
        assert!((&filtered - &f).max_abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let g = Grid::build(16, 3.0).unwrap();
        let h = Grid::build(18, 3.0).unwrap();
        let a = g.zero_pair();
        let b = h.zero_pair();
        assert!(g.inner_phi(&a, &b).is_err());
        assert!(g.norm_h0(&h.zeros()).is_err());
    }

    fn poly(coeffs: &[f64]) -> impl Fn(f64) -> f64 + '_ {
        move |y| coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn phi_is_symmetric_and_psd(
            a in prop::collection::vec(-1.0f64..1.0, 6),
            b in prop::collection::vec(-1.0f64..1.0, 6),
            c in prop::collection::vec(-1.0f64..1.0, 6),
            d in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let g = Grid::build(16, 3.0).unwrap();
            let x = StatePair::new(g.field(poly(&a)), g.field(poly(&b))).unwrap();
            let z = StatePair::new(g.field(poly(&c)), g.field(poly(&d))).unwrap();
            prop_assert_eq!(g.inner_phi(&x, &z).unwrap(), g.inner_phi(&z, &x).unwrap());
            prop_assert!(g.inner_phi(&x, &x).unwrap() >= 0.0);
            let s = 2.7;
            let lhs = g.norm_h(&x.scale(-s)).unwrap();
            prop_assert!((lhs - s * g.norm_h(&x).unwrap()).abs() < 1e-12 * (1.0 + lhs));
        }

        #[test]
        fn l_is_self_adjoint_and_reproduces_phi(
            a in prop::collection::vec(-1.0f64..1.0, 7),
            b in prop::collection::vec(-1.0f64..1.0, 7),
            p in 1.5f64..6.0,
        ) {
            let g = Grid::build(24, p).unwrap();
            let f = g.field(poly(&a));
            let h = g.field(poly(&b));
            let lf = g.apply_l(&f);
            let lh = g.apply_l(&h);
            let left = g.integrate(&lf.zip_with(&h, |x, y| x * y).unwrap());
            let right = g.integrate(&f.zip_with(&lh, |x, y| x * y).unwrap());
            prop_assert!((left - right).abs() < 1e-9);
            let fp = StatePair::new(f.clone(), g.zeros()).unwrap();
            let hp = StatePair::new(h.clone(), g.zeros()).unwrap();
            let phi = g.inner_phi(&fp, &hp).unwrap();
            let weak = g.integrate(&f.zip_with(&(&h - &lh), |x, y| x * y).unwrap());
            prop_assert!((phi - weak).abs() < 1e-9);
        }
    }
}
