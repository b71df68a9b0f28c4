use crate::error::{Error, Result};
use crate::numeric::{fit_line, ppow};
use crate::spectral::{Grid, StatePair};

use super::{History, Snapshot};

/// Cubic Lagrange value and derivative at `x` from the 4-point stencil
/// starting at index `j` (absolute grid index).
fn cubic(snap: &Snapshot, vals: &[f64], r: &[f64], dr: f64, x: f64) -> Result<(f64, f64)> {
    let fi = (x - r[0]) / dr;
    let i = fi.floor() as isize;
    let j = i - 1;
    if j < snap.lo as isize || j + 3 > snap.hi as isize {
        return Err(Error::Domain(format!("r = {x} is outside the active window at t = {}", snap.t)));
    }
    let j = j as usize;
    let xs = [r[j], r[j + 1], r[j + 2], r[j + 3]];
    let ys = [0, 1, 2, 3].map(|k| vals[j + k - snap.lo]);
    let mut val = 0.0;
    let mut der = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        let mut dl = 0.0;
        for b in (0..4).filter(|&b| b != a) {
            let denom = xs[a] - xs[b];
            let mut term = 1.0 / denom;
            for c in (0..4).filter(|&c| c != a && c != b) {
                term *= (x - xs[c]) / (xs[a] - xs[c]);
            }
            dl += term;
            l *= (x - xs[b]) / denom;
        }
        val += ys[a] * l;
        der += ys[a] * dl;
    }
    Ok((val, der))
}

fn snapshot(history: &History, t: f64) -> Result<&Snapshot> {
    history.snapshot_at(t).ok_or_else(|| Error::Config(format!("no snapshot stored at t = {t}")))
}

/// Similarity-variable state at `s` from the physical history, which must hold
/// a snapshot at `t = T0 - e^(-s)`:
/// `w = (T0-t)^(2/(p-1)) u`, `w_s = (T0-t)^((p+1)/(p-1)) (u_t - y u_r) - (2/(p-1)) w`.
pub fn to_selfsim(history: &History, grid: &Grid, r0: f64, t0: f64, s: f64) -> Result<StatePair> {
    let tau = (-s).exp();
    if !(tau <= t0 * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("e^(-s) = {tau} exceeds T0 = {t0}")));
    }
    let snap = snapshot(history, (t0 - tau).max(0.0))?;
    let e = 2.0 / (grid.p() - 1.0);
    let (mut w1, mut w2) = (Vec::with_capacity(grid.n()), Vec::with_capacity(grid.n()));
    for &y in grid.nodes() {
        let r = r0 + y * tau;
        let (u, ur) = cubic(snap, &snap.u, &history.r, history.dr, r)?;
        let (ut, _) = cubic(snap, &snap.v, &history.r, history.dr, r)?;
        let w = ppow(tau, e) * u;
        w1.push(w);
        w2.push(ppow(tau, e + 1.0) * (ut - y * ur) - e * w);
    }
    StatePair::new(grid.field_from_values(w1)?, grid.field_from_values(w2)?)
}

/// `1/(T0-t) * int_{|r-r0| < T0-t} u^2 dr` by the trapezoid rule, with
/// partial cells at both ends closed by linear interpolation of `u^2`.
pub fn cone_average(history: &History, t: f64, r0: f64, t0: f64) -> Result<f64> {
    let half = t0 - t;
    if !(half > 0.0) {
        return Err(Error::Domain(format!("t = {t} is not before T0 = {t0}")));
    }
    let snap = snapshot(history, t)?;
    let (a, b) = (r0 - half, r0 + half);
    let r = &history.r;
    let dr = history.dr;
    let ia = ((a - r[0]) / dr).ceil() as isize;
    let ib = ((b - r[0]) / dr).floor() as isize;
    if ia - 1 < snap.lo as isize || ib + 1 > snap.hi as isize {
        return Err(Error::Domain(format!("cone at t = {t} leaves the active window")));
    }
    let (ia, ib) = (ia as usize, ib as usize);
    let sq = |i: usize| snap.u[i - snap.lo].powi(2);
    let lerp = |i: usize, x: f64| {
        let th = (x - r[i]) / dr;
        (1.0 - th) * sq(i) + th * sq(i + 1)
    };
    let mut total = 0.0;
    if ia > ib {
        // cone narrower than one cell
        let (fa, fb) = (lerp(ib, a), lerp(ib, b));
        total = 0.5 * (fa + fb) * (b - a);
    } else {
        let fa = lerp(ia - 1, a);
        total += 0.5 * (fa + sq(ia)) * (r[ia] - a);
        for i in ia..ib {
            total += 0.5 * (sq(i) + sq(i + 1)) * dr;
        }
        let fb = lerp(ib, b);
        total += 0.5 * (sq(ib) + fb) * (b - r[ib]);
    }
    Ok(total / half)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeGrowth {
    /// `(t, average)` pairs.
    pub values: Vec<(f64, f64)>,
    /// `gamma` in `average ~ C (T0-t)^(-gamma)`.
    pub exponent: f64,
    pub r2: f64,
    /// Set when the fitted exponent is positive, the fit is good (`r2 > 0.9`)
    /// and the averages increase across the window.
    pub divergent: bool,
}

/// Log-log fit of [`cone_average`] against `T0 - t` over the given snapshot times.
pub fn cone_average_growth(history: &History, times: &[f64], r0: f64, t0: f64) -> Result<ConeGrowth> {
    let values = times.iter().map(|&t| cone_average(history, t, r0, t0).map(|v| (t, v))).collect::<Result<Vec<_>>>()?;
    if values.iter().any(|&(_, v)| !(v > 0.0)) {
        return Err(Error::Numerical("cone average vanished; no growth to fit".into()));
    }
    let xs: Vec<f64> = values.iter().map(|&(t, _)| (t0 - t).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|&(_, v)| v.ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::Numerical("need two distinct times".into()))?;
    let exponent = -fit.slope;
    let increasing = values.first().zip(values.last()).is_some_and(|(f, l)| l.1 > f.1);
    Ok(ConeGrowth { divergent: exponent > 0.0 && fit.r2 > 0.9 && increasing, values, exponent, r2: fit.r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physical::Termination;

    /// History holding `f(r, t)` and `f_t(r, t)` sampled at the given times.
    fn synthetic(f: impl Fn(f64, f64) -> (f64, f64), times: &[f64]) -> History {
        let dr = 1e-3;
        let r: Vec<f64> = (0..=2000).map(|i| 0.2 + i as f64 * dr).collect();
        let snapshots = times
            .iter()
            .map(|&t| {
                let (u, v) = r.iter().map(|&x| f(x, t)).unzip();
                Snapshot { t, lo: 0, hi: r.len() - 1, u, v }
            })
            .collect();
        History {
            r,
            dr,
            dt: dr / 2.0,
            threshold: 1e6,
            snapshots,
            probes: Vec::new(),
            t_end: 0.5,
            termination: Termination::TimeLimit,
            first_crossing: None,
            failure: None,
        }
    }

    #[test]
    fn cubic_is_exact_on_cubics() {
        let h = synthetic(|r, _| (r * r * r - 2.0 * r, 0.0), &[0.0]);
        let s = &h.snapshots[0];
        for x in [0.5, 1.0003, 1.23456] {
            let (v, d) = cubic(s, &s.u, &h.r, h.dr, x).unwrap();
            assert!((v - (x * x * x - 2.0 * x)).abs() < 1e-12);
            assert!((d - (3.0 * x * x - 2.0)).abs() < 1e-9);
        }
        assert!(cubic(s, &s.u, &h.r, h.dr, 0.2005).is_err());
    }

    #[test]
    fn flat_solution_maps_to_constant() {
        let k0 = 2f64.sqrt();
        let t0 = 0.5;
        let s_vals = [1.0, 1.5, 2.0];
        let times: Vec<f64> = s_vals.iter().map(|s: &f64| t0 - (-s).exp()).collect();
        let h = synthetic(|_, t| (k0 / (t0 - t), k0 / (t0 - t).powi(2)), &times);
        let grid = Grid::build(16, 3.0).unwrap();
        for s in s_vals {
            let w = to_selfsim(&h, &grid, 1.0, t0, s).unwrap();
            assert!(w.first.as_slice().iter().all(|x| (x - k0).abs() < 1e-12));
            assert!(w.second.as_slice().iter().all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn cone_average_of_flat_solution() {
        let k0 = 2f64.sqrt();
        let t0 = 0.5;
        let times = [0.0, 0.1, 0.2, 0.3, 0.4, 0.45];
        let h = synthetic(|_, t| (k0 / (t0 - t), 0.0), &times);
        for &t in &times {
            let avg = cone_average(&h, t, 1.0, t0).unwrap();
            let exact = 2.0 * k0 * k0 / (t0 - t).powi(2);
            assert!((avg - exact).abs() < 1e-12 * exact);
        }
        let g = cone_average_growth(&h, &times, 1.0, t0).unwrap();
        assert!((g.exponent - 2.0).abs() < 1e-10);
        assert!(g.divergent);
        let z = synthetic(|_, _| (0.0, 0.0), &[0.1]);
        assert_eq!(cone_average(&z, 0.1, 1.0, t0).unwrap(), 0.0);
    }

    #[test]
    fn cone_average_of_linear_square() {
        // u^2 = r: the trapezoid rule is exact, including partial cells
        let h = synthetic(|r, _| (r.sqrt(), 0.0), &[0.12345]);
        let t0 = 0.5;
        let avg = cone_average(&h, 0.12345, 1.0, t0).unwrap();
        assert!((avg - 2.0).abs() < 1e-12, "{avg}");
    }
}
