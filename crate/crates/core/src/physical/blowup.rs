use crate::error::{Error, Result};
use crate::numeric::{fit_line, ppow};

use super::{evolve_physical, History, PhysicalConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupTime {
    pub t: f64,
    /// `r^2` of the linear fit of `u^(-(p-1)/2)` against `t`.
    pub fit_quality: f64,
    /// RMS fit residual divided by the fitted slope: a time-scale error bar.
    pub t_err: f64,
    pub samples: usize,
}

/// Extrapolated blow-up time from `(t, |u|)` samples, using only those in the
/// band `[M/10, M]`. Near blow-up `u ~ c (T - t)^(-2/(p-1))`, so
/// `u^(-(p-1)/2)` is affine in `t` and vanishes at `T`.
pub fn estimate_blowup_time(samples: &[(f64, f64)], p: f64, threshold: f64) -> Result<BlowupTime> {
    let band: Vec<(f64, f64)> =
        samples.iter().copied().filter(|&(_, u)| u >= threshold / 10.0 && u <= threshold).collect();
    if band.len() < 3 {
        return Err(Error::NoBlowup(format!("{} samples in the band [{}, {threshold}]", band.len(), threshold / 10.0)));
    }
    let e = -(p - 1.0) / 2.0;
    let xs: Vec<f64> = band.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = band.iter().map(|s| ppow(s.1, e)).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::NoBlowup("degenerate fit".into()))?;
    if !(fit.slope < 0.0) {
        return Err(Error::NoBlowup("amplitude not growing in the band".into()));
    }
    let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - fit.intercept - fit.slope * x).powi(2)).sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(BlowupTime {
        t: -fit.intercept / fit.slope,
        fit_quality: fit.r2,
        t_err: rms / fit.slope.abs(),
        samples: band.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupSample {
    pub r: f64,
    pub t: f64,
    pub fit_quality: f64,
    pub t_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupCurve {
    pub r0: f64,
    /// Sorted by `r`.
    pub samples: Vec<BlowupSample>,
    pub t_at_r0: f64,
    /// Central difference over the nearest samples on each side of `r0`.
    pub slope_at_r0: f64,
    /// `max_j |T_j - T(r0)| / |r_j - r0|`; below 1 for a non-characteristic point.
    pub cone_ratio: f64,
}

impl BlowupCurve {
    /// Largest excess of `|T_{j+1} - T_j|` over `|r_{j+1} - r_j|`.
    pub fn lipschitz_excess(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1].t - w[0].t).abs() - (w[1].r - w[0].r).abs())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_lipschitz(&self, tol: f64) -> bool {
        self.lipschitz_excess() <= tol
    }
}

/// Evolves `cfg` with probes at `r_samples` and fits the blow-up time at each.
pub fn blowup_curve(cfg: &PhysicalConfig, r_samples: &[f64]) -> Result<BlowupCurve> {
    let mut cfg = cfg.clone();
    cfg.probes = r_samples.to_vec();
    let history = evolve_physical(&cfg)?;
    if let Some(f) = &history.failure {
        return Err(Error::Numerical(f.clone()));
    }
    curve_from_history(&history, cfg.p, cfg.r0)
}

/// Fits every probe of `history`; `r0` must lie strictly inside the probe span.
pub fn curve_from_history(history: &History, p: f64, r0: f64) -> Result<BlowupCurve> {
    let samples = history
        .probes
        .iter()
        .map(|pr| {
            estimate_blowup_time(&pr.samples, p, history.threshold).map(|b| BlowupSample {
                r: pr.r,
                t: b.t,
                fit_quality: b.fit_quality,
                t_err: b.t_err,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    curve_from_samples(samples, r0, 0.5 * history.dr)
}

/// Assembles the curve statistics; samples within `tol` of `r0` count as
/// sitting on it.
pub fn curve_from_samples(mut samples: Vec<BlowupSample>, r0: f64, tol: f64) -> Result<BlowupCurve> {
    samples.sort_by(|a, b| a.r.total_cmp(&b.r));
    samples.dedup_by(|a, b| a.r == b.r);
    let left = samples.iter().rfind(|s| s.r < r0 - tol);
    let right = samples.iter().find(|s| s.r > r0 + tol);
    let (Some(l), Some(rt)) = (left, right) else {
        return Err(Error::Config("blow-up curve needs samples on both sides of r0".into()));
    };
    let slope_at_r0 = (rt.t - l.t) / (rt.r - l.r);
    let t_at_r0 = match samples.iter().find(|s| (s.r - r0).abs() <= tol) {
        Some(s) => s.t,
        None => l.t + slope_at_r0 * (r0 - l.r),
    };
    let cone_ratio = samples
        .iter()
        .filter(|s| (s.r - r0).abs() > tol)
        .map(|s| (s.t - t_at_r0).abs() / (s.r - r0).abs())
        .fold(0.0, f64::max);
    Ok(BlowupCurve { r0, samples, t_at_r0, slope_at_r0, cone_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synthetic(noise: f64, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise).unwrap();
        (0..4000)
            .map(|k| {
                let t = 0.98 + k as f64 * 0.02 / 4000.0;
                let u = 1.0 / (1.0 - t);
                (t, u * (1.0 + if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 }))
            })
            .collect()
    }

    #[test]
    fn exact_model() {
        let b = estimate_blowup_time(&synthetic(0.0, 0), 3.0, 1000.0).unwrap();
        assert!((b.t - 1.0).abs() < 1e-6, "{}", b.t);
        assert!(b.fit_quality > 1.0 - 1e-12);
    }

    #[test]
    fn noisy_model() {
        for seed in 0..20 {
            let b = estimate_blowup_time(&synthetic(1e-3, seed), 3.0, 1000.0).unwrap();
            assert!((b.t - 1.0).abs() < 1e-3, "{}", b.t);
        }
    }

    #[test]
    fn other_power() {
        // p = 5: u = (1 - t)^(-1/2)
        let s: Vec<(f64, f64)> = (0..500)
            .map(|k| {
                let t = 0.9 + k as f64 * 2e-4;
                (t, (1.0 - t).powf(-0.5))
            })
            .collect();
        let b = estimate_blowup_time(&s, 5.0, 30.0).unwrap();
        assert!((b.t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn no_crossing_is_reported() {
        let s: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 1.0)).collect();
        assert!(matches!(estimate_blowup_time(&s, 3.0, 1000.0), Err(Error::NoBlowup(_))));
    }

    #[test]
    fn curve_from_three_samples() {
        let mk = |r: f64, t: f64| BlowupSample { r, t, fit_quality: 1.0, t_err: 0.0 };
        let c = curve_from_samples(vec![mk(1.1, 0.53), mk(0.9, 0.47), mk(1.0, 0.5)], 1.0, 1e-6).unwrap();
        assert!((c.slope_at_r0 - 0.3).abs() < 1e-12);
        assert_eq!(c.t_at_r0, 0.5);
        assert!((c.cone_ratio - 0.3).abs() < 1e-12);
        let c = curve_from_samples(vec![mk(0.9, 0.47), mk(1.1, 0.53)], 1.0, 1e-6).unwrap();
        assert!((c.t_at_r0 - 0.5).abs() < 1e-12);
        assert!(curve_from_samples(vec![mk(0.9, 0.47), mk(1.0, 0.5)], 1.0, 1e-6).is_err());
    }

    #[test]
    fn curve_statistics() {
        let mk = |r: f64, t: f64| BlowupSample { r, t, fit_quality: 1.0, t_err: 0.0 };
        let c = BlowupCurve {
            r0: 1.0,
            samples: vec![mk(0.9, 0.47), mk(1.0, 0.5), mk(1.1, 0.53)],
            t_at_r0: 0.5,
            slope_at_r0: 0.3,
            cone_ratio: 0.3,
        };
        assert!(c.is_lipschitz(0.0));
        assert!((c.lipschitz_excess() + 0.07).abs() < 1e-12);
    }
}
