//! Energy functionals along a modulated trajectory, decay fits, the
//! shrinking set and empirical audits of the parameter dynamics.

use crate::error::{param_err, Error, Result};
use crate::numeric::{fit_line, pairwise_sum, signed_pow};
use crate::selfsim::{Trace, TraceRecord};
use crate::solitons::{kappa_star, SolitonParams};
use crate::spectral::{Field, Grid, StatePair};

fn psi(grid: &Grid, params: SolitonParams) -> Result<Field> {
    let p = grid.p();
    let c = 2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0));
    Ok(kappa_star(params, grid)?.first.map(|k| p * k.powf(p - 1.0) - c))
}

/// `varphi(q, q) = ∫ (q1'^2 (1-y^2) - psi q1^2 + q2^2) rho`, with
/// `psi = p kappa*_1^(p-1) - 2(p+1)/(p-1)^2`.
pub fn varphi(grid: &Grid, q: &StatePair, params: SolitonParams) -> Result<f64> {
    grid.ensure_on_grid(&q.first)?;
    grid.ensure_on_grid(&q.second)?;
    let ps = psi(grid, params)?;
    let dq = grid.derivative(&q.first);
    let terms: Vec<f64> = (0..grid.n())
        .map(|i| {
            let y = grid.nodes()[i];
            let (a, da, b) = (q.first.as_slice()[i], dq.as_slice()[i], q.second.as_slice()[i]);
            grid.quad_weights()[i] * (da * da * (1.0 - y * y) - ps.as_slice()[i] * a * a + b * b)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `F(a) = ∫_0^a f(x) dx` for
/// `f(x) = |k+x|^(p-1)(k+x) - k^p - p k^(p-1) x`, `k > 0`.
pub fn antiderivative_f(k: f64, a: f64, p: f64) -> f64 {
    let t = a / k;
    if t.abs() < 0.25 {
        // sum_{j>=3} binom(p+1, j)/(p+1) t^j
        let mut coeff = p / 2.0;
        let mut pow = t * t;
        let mut sum = 0.0;
        for j in 3..80 {
            coeff *= (p + 2.0 - j as f64) / j as f64;
            pow *= t;
            let term = coeff * pow;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() || term == 0.0 {
                break;
            }
        }
        return k.powf(p + 1.0) * sum;
    }
    antiderivative_closed(k, a, p)
}

fn antiderivative_closed(k: f64, a: f64, p: f64) -> f64 {
    let q = p + 1.0;
    (k + a).abs().powf(q) / q - k.powf(q) / q - k.powf(p) * a - 0.5 * p * k.powf(p - 1.0) * a * a
}

/// `f(x)` of [`antiderivative_f`].
pub fn nonlinear_remainder(k: f64, x: f64, p: f64) -> f64 {
    signed_pow(k + x, p) - k.powf(p) - p * k.powf(p - 1.0) * x
}

/// `R = -∫ F(q1) rho dy`.
pub fn nonlinear_r(grid: &Grid, q1: &Field, params: SolitonParams) -> Result<f64> {
    grid.ensure_on_grid(q1)?;
    let k = kappa_star(params, grid)?.first;
    let p = grid.p();
    let vals = k.zip_with(q1, |kk, a| antiderivative_f(kk, a, p))?;
    Ok(-grid.integrate(&vals))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub phi_qq: f64,
    pub r: f64,
    pub h: f64,
    pub eta: f64,
    pub q_norm_sq: f64,
    /// `varphi(q,q) / ||q||_H^2`; NaN for `q = 0`.
    pub ratio_h: f64,
}

/// `h = varphi(q,q)/2 + R + eta ∫ q1 q2 rho`.
pub fn h_functional(grid: &Grid, q: &StatePair, params: SolitonParams, eta: f64) -> Result<EnergyReport> {
    let phi_qq = varphi(grid, q, params)?;
    let r = nonlinear_r(grid, &q.first, params)?;
    let cross = grid.integrate(&q.first.zip_with(&q.second, |a, b| a * b)?);
    let q_norm_sq = grid.inner_phi(q, q)?;
    Ok(EnergyReport { phi_qq, r, h: 0.5 * phi_qq + r + eta * cross, eta, q_norm_sq, ratio_h: phi_qq / q_norm_sq })
}

/// Quantity of a trace fitted by [`fit_decay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayField {
    QNormSq,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Minus the slope of `log(value)` against `s - s0`.
    pub delta_est: f64,
    /// `A` in `value ≈ A e^(-delta (s-s0) - s0)`.
    pub a_est: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Least-squares exponential fit of `(s, value)` pairs; nonpositive values
/// are skipped.
pub fn fit_decay_series(s0: f64, s: &[f64], values: &[f64]) -> Result<DecayFit> {
    if s.len() != values.len() {
        return param_err("sample and value counts differ");
    }
    if s.len() < 10 {
        return param_err(format!("decay fit needs >= 10 samples, got {}", s.len()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        s.iter().zip(values).filter(|(_, &v)| v > 0.0 && v.is_finite()).map(|(&t, &v)| (t - s0, v.ln())).unzip();
    if xs.is_empty() {
        return Err(Error::Numerical("no positive values to fit".into()));
    }
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::Numerical("degenerate decay fit".into()))?;
    Ok(DecayFit { delta_est: -fit.slope, a_est: (fit.intercept + s0).exp(), r2: fit.r2, samples: xs.len() })
}

/// Exponential fit of `||q||_H^2` or `h` over the records with `s` in
/// `window` (all records when `None`).
pub fn fit_decay(trace: &Trace, field: DecayField, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let recs: Vec<&TraceRecord> =
        trace.records.iter().filter(|r| window.is_none_or(|(a, b)| r.s >= a && r.s <= b)).collect();
    let s: Vec<f64> = recs.iter().map(|r| r.s).collect();
    let v: Vec<f64> = recs
        .iter()
        .map(|r| match field {
            DecayField::QNormSq => r.q_norm_h * r.q_norm_h,
            DecayField::H => r.h,
        })
        .collect();
    fit_decay_series(trace.s0, &s, &v)
}

/// The box `|nu|, |d - d_hat0|, ||q||_H^2 <= A e^(-delta (s-s0) - s0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkingSetSpec {
    pub a: f64,
    pub delta: f64,
    pub s0: f64,
    pub d_hat0: f64,
}

impl ShrinkingSetSpec {
    pub fn new(a: f64, delta: f64, s0: f64, d_hat0: f64) -> Result<Self> {
        if !(a > 0.0) {
            return param_err("A must be positive");
        }
        if !(delta > 0.0 && delta < 1.0) {
            return param_err(format!("delta must lie in (0,1), got {delta}"));
        }
        Ok(Self { a, delta, s0, d_hat0 })
    }

    pub fn bound(&self, s: f64) -> f64 {
        self.a * (-self.delta * (s - self.s0) - self.s0).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkingComponent {
    Nu,
    D,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkingReport {
    pub inside: bool,
    pub first_exit_s: Option<f64>,
    pub which: Option<ShrinkingComponent>,
}

fn normalized(rec: &TraceRecord, spec: &ShrinkingSetSpec) -> [f64; 3] {
    let e = (spec.delta * (rec.s - spec.s0) + spec.s0).exp();
    [rec.nu.abs() * e, (rec.d - spec.d_hat0).abs() * e, rec.q_norm_h * rec.q_norm_h * e]
}

pub fn shrinking_set_check(trace: &Trace, spec: &ShrinkingSetSpec) -> Result<ShrinkingReport> {
    if trace.records.is_empty() {
        return param_err("empty trace");
    }
    let comps = [ShrinkingComponent::Nu, ShrinkingComponent::D, ShrinkingComponent::Q];
    for rec in &trace.records {
        let n = normalized(rec, spec);
        if let Some(k) = (0..3).find(|&k| !(n[k] <= spec.a)) {
            return Ok(ShrinkingReport { inside: false, first_exit_s: Some(rec.s), which: Some(comps[k]) });
        }
    }
    Ok(ShrinkingReport { inside: true, first_exit_s: None, which: None })
}

/// Largest of the three normalized quantities `x e^(delta (s-s0) + s0)`
/// over the trace: the smallest `A` for which the trace stays inside.
pub fn observed_envelope(trace: &Trace, delta: f64, d_hat0: f64) -> f64 {
    let spec = ShrinkingSetSpec { a: 1.0, delta, s0: trace.s0, d_hat0 };
    trace.records.iter().flat_map(|r| normalized(r, &spec)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeAudit {
    pub s: Vec<f64>,
    /// `(|d'| + |nu' - nu|) / (1 - d*^2)`
    pub lhs: Vec<f64>,
    /// `||q||^2 + ||q|| |nu| / (1 - d*^2) + e^-s`
    pub rhs: Vec<f64>,
    pub ratio: Vec<f64>,
    pub max_ratio: f64,
}

fn trace_derivative(s: &[f64], x: &[f64], i: usize) -> f64 {
    let n = s.len();
    if i == 0 {
        (x[1] - x[0]) / (s[1] - s[0])
    } else if i == n - 1 {
        (x[n - 1] - x[n - 2]) / (s[n - 1] - s[n - 2])
    } else {
        (x[i + 1] - x[i - 1]) / (s[i + 1] - s[i - 1])
    }
}

/// Empirical constant of the parameter dynamics inequality, with `d'` and
/// `nu'` from central differences (one-sided at the ends).
pub fn parameter_derivative_audit(trace: &Trace) -> Result<DerivativeAudit> {
    let recs = &trace.records;
    if recs.len() < 3 {
        return param_err("derivative audit needs >= 3 samples");
    }
    let s: Vec<f64> = recs.iter().map(|r| r.s).collect();
    let d: Vec<f64> = recs.iter().map(|r| r.d).collect();
    let nu: Vec<f64> = recs.iter().map(|r| r.nu).collect();
    let mut lhs = Vec::with_capacity(s.len());
    let mut rhs = Vec::with_capacity(s.len());
    for (i, r) in recs.iter().enumerate() {
        let ds = r.d / (1.0 + r.nu);
        let den = 1.0 - ds * ds;
        let dd = trace_derivative(&s, &d, i);
        let dn = trace_derivative(&s, &nu, i);
        lhs.push((dd.abs() + (dn - r.nu).abs()) / den);
        rhs.push(r.q_norm_h * r.q_norm_h + r.q_norm_h * r.nu.abs() / den + (-r.s).exp());
    }
    let ratio: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l / r).collect();
    let max_ratio = ratio.iter().copied().fold(0.0, f64::max);
    Ok(DerivativeAudit { s, lhs, rhs, ratio, max_ratio })
}

/// `(||f||_{L^2_{rho/(1-y^2)}} + ||f||_{L^{p+1}_rho} + sup|f|(1-y^2)^(1/(p-1))) / ||f||_{H0}`.
pub fn hardy_sobolev_ratio(grid: &Grid, f: &Field) -> Result<f64> {
    let n = grid.weighted_norms(f)?;
    let h0 = grid.norm_h0(f)?;
    if h0 == 0.0 {
        return param_err("zero field has no Hardy-Sobolev ratio");
    }
    Ok(n.total() / h0)
}

/// Smallest `C >= 1` with `1/C <= x <= C` for all ratios.
pub fn equivalence_constant(ratios: &[f64]) -> f64 {
    ratios.iter().fold(1.0, |c, &r| c.max(r).max(1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(s: f64, d: f64, nu: f64, q: f64) -> TraceRecord {
        TraceRecord { s, d, nu, q_norm_h: q, phi_qq: 0.0, h: 0.0, orth: [0.0; 2] }
    }

    #[test]
    fn zero_q_gives_zero_energies() {
        let g = Grid::build(24, 3.0).unwrap();
        let p = SolitonParams::new(0.3, 0.02).unwrap();
        let z = g.zero_pair();
        assert_eq!(varphi(&g, &z, p).unwrap(), 0.0);
        assert_eq!(nonlinear_r(&g, &z.first, p).unwrap(), 0.0);
        assert_eq!(h_functional(&g, &z, p, 0.05).unwrap().h, 0.0);
    }

    #[test]
    fn varphi_negative_along_soliton() {
        let g = Grid::build(24, 3.0).unwrap();
        let p = SolitonParams::new(0.3, 0.0).unwrap();
        let k = kappa_star(p, &g).unwrap();
        assert!(varphi(&g, &k, p).unwrap() < 0.0);
    }

    /// Composite Simpson rule for `∫_0^a f`.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, m: usize) -> f64 {
        let h = a / m as f64;
        let mut s = f(0.0) + f(a);
        for i in 1..m {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        for &p in &[3.0, 2.0, 2.5, 5.0] {
            for &k in &[0.5, 1.414, 3.0] {
                for &a in &[-2.0, -0.3, -0.01, 0.01, 0.2, 1.5] {
                    let exact = simpson(|x| nonlinear_remainder(k, x, p), a, 4000);
                    let got = antiderivative_f(k, a, p);
                    assert!((exact - got).abs() < 1e-9, "p={p} k={k} a={a}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for &p in &[3.0, 2.5] {
            let k = 1.3;
            for t in [-0.2499, -0.1, 0.1, 0.2499] {
                let a = t * k;
                let (series, closed) = (antiderivative_f(k, a, p), antiderivative_closed(k, a, p));
                assert!((series - closed).abs() < 1e-11 * closed.abs());
            }
        }
    }

    #[test]
    fn r_is_cubic_at_zero() {
        let g = Grid::build(32, 3.0).unwrap();
        let p = SolitonParams::new(0.3, 0.0).unwrap();
        let q1 = g.field(|y| 1e-2 * (1.0 + y + (2.0 * y).sin()));
        let r1 = nonlinear_r(&g, &q1, p).unwrap().abs();
        let r2 = nonlinear_r(&g, &q1.scale(0.5), p).unwrap().abs();
        assert!(r1 / r2 >= 7.0, "{}", r1 / r2);
    }

    #[test]
    fn decay_fit_on_synthetic_series() {
        let s0 = 3.0;
        let s: Vec<f64> = (0..50).map(|i| s0 + i as f64 * 0.1).collect();
        let v: Vec<f64> = s.iter().map(|t| (-0.4 * (t - s0)).exp()).collect();
        let f = fit_decay_series(s0, &s, &v).unwrap();
        assert!((f.delta_est - 0.4).abs() < 1e-6);
        assert!(f.r2 > 0.999999);
        let c = fit_decay_series(s0, &s, &vec![2.0; 50]).unwrap();
        assert!(c.delta_est.abs() < 1e-12);
        assert!(fit_decay_series(s0, &s[..5], &v[..5]).is_err());
        assert!(fit_decay_series(s0, &s, &vec![0.0; 50]).is_err());
    }

    #[test]
    fn decay_fit_with_noise() {
        let s0 = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s: Vec<f64> = (0..100).map(|i| s0 + i as f64 * 0.05).collect();
        for _ in 0..20 {
            let v: Vec<f64> =
                s.iter().map(|t| (-0.4 * (t - s0)).exp() * (1.0 + 0.01 * rng.random_range(-1.0..1.0))).collect();
            let f = fit_decay_series(s0, &s, &v).unwrap();
            assert!((f.delta_est - 0.4).abs() < 0.02);
        }
    }

    #[test]
    fn shrinking_set_examples() {
        let s0 = 3.0;
        let mut tr = Trace::new(s0);
        for i in 0..20 {
            tr.records.push(rec(s0 + i as f64 * 0.1, 0.3, 0.0, 0.0));
        }
        let spec = ShrinkingSetSpec::new(1e-6, 0.5, s0, 0.3).unwrap();
        assert!(shrinking_set_check(&tr, &spec).unwrap().inside);

        let a = 0.5;
        let spec = ShrinkingSetSpec::new(a, 0.5, s0, 0.3).unwrap();
        let mut bad = Trace::new(s0);
        for i in 0..20 {
            let s = s0 + i as f64 * 0.1;
            bad.records.push(rec(s, 0.3 + 2.0 * spec.bound(s), 0.0, 0.0));
        }
        let r = shrinking_set_check(&bad, &spec).unwrap();
        assert!(!r.inside);
        assert_eq!(r.first_exit_s, Some(s0));
        assert_eq!(r.which, Some(ShrinkingComponent::D));
        assert!(ShrinkingSetSpec::new(1.0, 1.5, s0, 0.0).is_err());
    }

    #[test]
    fn audit_detects_spike() {
        let s0 = 3.0;
        let mut tr = Trace::new(s0);
        for i in 0..20 {
            tr.records.push(rec(s0 + i as f64 * 0.1, 0.3, 0.0, 0.0));
        }
        let flat = parameter_derivative_audit(&tr).unwrap();
        assert_eq!(flat.max_ratio, 0.0);
        tr.records[10].d = 0.31;
        let spiky = parameter_derivative_audit(&tr).unwrap();
        let k = spiky.ratio.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((9..=11).contains(&k) && spiky.max_ratio > 1.0);
    }

    #[test]
    fn equivalence_constant_examples() {
        assert_eq!(equivalence_constant(&[1.0, 0.5, 2.0]), 2.0);
        assert_eq!(equivalence_constant(&[0.25]), 4.0);
    }
}
