use crate::error::{Error, Result};
use crate::numeric::signed_pow;

use super::{build_initial_data, PhysicalConfig};

/// Full state on the active index range `[lo, hi]` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub lo: usize,
    pub hi: usize,
    /// `u` on `[lo, hi]`.
    pub u: Vec<f64>,
    /// `u_t` on `[lo, hi]`.
    pub v: Vec<f64>,
}

impl Snapshot {
    pub fn value(&self, i: usize) -> Option<f64> {
        (self.lo..=self.hi).contains(&i).then(|| self.u[i - self.lo])
    }
}

/// Time series of `u` at one grid point, kept once `|u| >= M/10`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub r: f64,
    pub index: usize,
    pub samples: Vec<(f64, f64)>,
    /// Time at which `|u|` first exceeded `M`.
    pub crossed_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Every probe exceeded the threshold.
    AllProbesCrossed,
    /// No probes were configured and the node nearest `r0` crossed.
    CentreCrossed,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub r: Vec<f64>,
    pub dr: f64,
    pub dt: f64,
    pub threshold: f64,
    pub snapshots: Vec<Snapshot>,
    pub probes: Vec<ProbeSeries>,
    pub t_end: f64,
    pub termination: Termination,
    /// First time any point exceeded the threshold.
    pub first_crossing: Option<f64>,
    pub failure: Option<String>,
}

impl History {
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }

    pub fn index_of(&self, r: f64) -> usize {
        (((r - self.r[0]) / self.dr).round().max(0.0) as usize).min(self.r.len() - 1)
    }
}

struct Rhs<'a> {
    r: &'a [f64],
    inv_dr: f64,
    inv_dr2: f64,
    radial: f64,
    p: f64,
}

impl Rhs<'_> {
    /// Time derivatives of `(u, v)` on `[lo, hi]` with outgoing closures at
    /// both ends.
    fn eval(&self, u: &[f64], v: &[f64], lo: usize, hi: usize, du: &mut [f64], dv: &mut [f64]) {
        for i in lo + 1..hi {
            let urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * self.inv_dr2;
            let ur = (u[i + 1] - u[i - 1]) * 0.5 * self.inv_dr;
            du[i] = v[i];
            dv[i] = urr + self.radial / self.r[i] * ur + signed_pow(u[i], self.p);
        }
        let h = 0.5 * self.inv_dr;
        du[lo] = (-3.0 * u[lo] + 4.0 * u[lo + 1] - u[lo + 2]) * h;
        dv[lo] = (-3.0 * v[lo] + 4.0 * v[lo + 1] - v[lo + 2]) * h;
        du[hi] = -(3.0 * u[hi] - 4.0 * u[hi - 1] + u[hi - 2]) * h;
        dv[hi] = -(3.0 * v[hi] - 4.0 * v[hi - 1] + v[hi - 2]) * h;
    }
}

/// Integrates from the cutoff initial data of `cfg`.
///
/// When `|u|` exceeds the threshold `M` at a point, that point and everything
/// beyond it (seen from an anchor, initially the node nearest `r0`) leave the
/// active window, and the new window edge gets the outgoing closure. If the
/// anchor itself crosses, or its window shrinks below five nodes, the nearest
/// live probe takes over. Integration stops
/// when every probe has crossed (or the anchor, without probes), or at `t_max`.
pub fn evolve_physical(cfg: &PhysicalConfig) -> Result<History> {
    let (u0, u1) = build_initial_data(cfg)?;
    evolve_physical_from(cfg, u0, u1)
}

/// As [`evolve_physical`], from explicit data on `cfg.nodes()`.
pub fn evolve_physical_from(cfg: &PhysicalConfig, mut u: Vec<f64>, mut v: Vec<f64>) -> Result<History> {
    cfg.validate()?;
    let r = cfg.nodes();
    let n = r.len();
    if u.len() != n || v.len() != n {
        return Err(Error::Config("initial data does not match the grid".into()));
    }
    let sup = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let threshold = cfg.threshold.unwrap_or(1e3 * sup.max(1.0));
    let dt = cfg.dt.unwrap_or_else(|| (0.5 * cfg.dr).min(0.1 * threshold.powf(-(cfg.p - 1.0) / 2.0)));
    let rhs =
        Rhs { r: &r, inv_dr: 1.0 / cfg.dr, inv_dr2: 1.0 / (cfg.dr * cfg.dr), radial: (cfg.dim - 1) as f64, p: cfg.p };
    let mut anchor = (((cfg.r0 - r[0]) / cfg.dr).round() as usize).min(n - 1);
    let mut probes: Vec<ProbeSeries> = cfg
        .probes
        .iter()
        .map(|&pr| {
            let index = (((pr - r[0]) / cfg.dr).round() as usize).min(n - 1);
            ProbeSeries { r: r[index], index, samples: Vec::new(), crossed_at: None }
        })
        .collect();
    let mut stops: Vec<f64> = cfg.snapshot_times.clone();
    stops.push(cfg.t_max);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let (mut lo, mut hi) = (0usize, n - 1);
    let mut t = 0.0;
    let mut snapshots = Vec::new();
    let mut first_crossing = None;
    let mut termination = Termination::TimeLimit;
    let mut failure = None;
    let take = |t: f64, lo: usize, hi: usize, u: &[f64], v: &[f64]| Snapshot {
        t,
        lo,
        hi,
        u: u[lo..=hi].to_vec(),
        v: v[lo..=hi].to_vec(),
    };
    let record = |probes: &mut Vec<ProbeSeries>, t: f64, u: &[f64], lo: usize, hi: usize| {
        for pr in probes.iter_mut() {
            if pr.crossed_at.is_none() && (lo..=hi).contains(&pr.index) && u[pr.index].abs() >= threshold / 10.0 {
                pr.samples.push((t, u[pr.index].abs()));
            }
        }
    };
    if cfg.snapshot_times.contains(&0.0) {
        snapshots.push(take(0.0, lo, hi, &u, &v));
    }

    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut kv = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut ut = vec![0.0; n];
    let mut vt = vec![0.0; n];

    'outer: for &stop in &stops {
        while t < stop {
            let h = if stop - t < dt * (1.0 + 1e-9) { stop - t } else { dt };
            // RK4
            rhs.eval(&u, &v, lo, hi, &mut k[0], &mut kv[0]);
            for stage in 1..4 {
                let c = if stage == 3 { h } else { 0.5 * h };
                for i in lo..=hi {
                    ut[i] = u[i] + c * k[stage - 1][i];
                    vt[i] = v[i] + c * kv[stage - 1][i];
                }
                rhs.eval(&ut, &vt, lo, hi, &mut k[stage], &mut kv[stage]);
            }
            for i in lo..=hi {
                u[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
                v[i] += h / 6.0 * (kv[0][i] + 2.0 * kv[1][i] + 2.0 * kv[2][i] + kv[3][i]);
            }
            t = if h < dt { stop } else { t + h };
            if u[lo..=hi].iter().chain(&v[lo..=hi]).any(|x| !x.is_finite()) {
                failure = Some(format!("non-finite values before the threshold at t={t}"));
                break 'outer;
            }
            record(&mut probes, t, &u, lo, hi);
            // dead fronts: keep the largest interval around the anchor that
            // contains no point above the threshold
            let crossed = |i: usize| u[i].abs() > threshold;
            if (lo..=hi).any(crossed) {
                first_crossing.get_or_insert(t);
                let window = |a: usize| {
                    let l = (lo..a).rev().find(|&i| crossed(i)).map_or(lo, |i| i + 1);
                    let h = (a + 1..=hi).find(|&i| crossed(i)).map_or(hi, |i| i - 1);
                    (l, h)
                };
                // an anchor whose window is too narrow for the stencils is
                // as good as crossed: the profile is no longer resolved there
                let alive = |a: usize| {
                    !crossed(a) && {
                        let (l, h) = window(a);
                        h >= l + 4
                    }
                };
                if !alive(anchor) {
                    let next = probes
                        .iter()
                        .filter(|pr| pr.crossed_at.is_none() && (lo..=hi).contains(&pr.index) && alive(pr.index))
                        .min_by_key(|pr| pr.index.abs_diff(anchor))
                        .map(|pr| pr.index);
                    match next {
                        Some(i) => anchor = i,
                        None => {
                            for pr in probes.iter_mut().filter(|pr| pr.crossed_at.is_none()) {
                                pr.crossed_at = Some(t);
                            }
                            termination = if probes.is_empty() {
                                Termination::CentreCrossed
                            } else {
                                Termination::AllProbesCrossed
                            };
                            break 'outer;
                        }
                    }
                }
                let (new_lo, new_hi) = window(anchor);
                for pr in probes.iter_mut().filter(|pr| pr.crossed_at.is_none()) {
                    if pr.index < new_lo || pr.index > new_hi {
                        pr.crossed_at = Some(t);
                    }
                }
                lo = new_lo;
                hi = new_hi;
            }
            if !probes.is_empty() && probes.iter().all(|p| p.crossed_at.is_some()) {
                termination = Termination::AllProbesCrossed;
                break 'outer;
            }
        }
        if cfg.snapshot_times.contains(&stop) {
            snapshots.push(take(stop, lo, hi, &u, &v));
        }
    }
    Ok(History { r, dr: cfg.dr, dt, threshold, snapshots, probes, t_end: t, termination, first_crossing, failure })
}
