use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::physical::{build_initial_data, PhysicalConfig};
use crate::selfsim::SelfSimConfig;
use crate::solitons::SolitonParams;

use super::config::{RawConfig, Reader, Section};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialParams {
    /// Newton shooting on `(d0, nu0)` over growing horizons.
    Shoot {
        horizons: Vec<f64>,
        tol: f64,
    },
    Fixed(SolitonParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeChoice {
    Absolute(f64),
    /// Multiple of the observed envelope.
    Envelope(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimSetup {
    pub cfg: SelfSimConfig,
    pub init: InitialParams,
    pub amplitude: AmplitudeChoice,
    /// `None`: `min(delta_est, 0.99)`.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalSetup {
    pub cfg: PhysicalConfig,
    pub probes: usize,
}

impl PhysicalSetup {
    /// Probes spread evenly over `r0 ± eps0/(1+|d0|)`.
    pub fn probe_positions(&self) -> Vec<f64> {
        let c = &self.cfg;
        let half = c.eps0 / (1.0 + c.d0.abs());
        let m = self.probes.max(3);
        (0..m).map(|k| c.r0 - half + 2.0 * half * k as f64 / (m - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSetup {
    pub s: Vec<f64>,
    pub dr: f64,
    pub eps0_frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSettings {
    pub decay: bool,
    pub decay_r2_min: f64,
    pub shrinking: bool,
    pub q_norm_max: Option<f64>,
    pub t0_rel_tol: f64,
    pub slope_tol: f64,
    pub dual_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub p: f64,
    pub r0: f64,
    pub d_hat0: f64,
    pub selfsim: Option<SelfSimSetup>,
    pub physical: Option<PhysicalSetup>,
    pub dual: Option<DualSetup>,
    pub checks: CheckSettings,
    /// Every value in force, defaults included.
    pub resolved: BTreeMap<String, Section>,
}

const SECTIONS: [&str; 6] = ["scenario", "selfsim", "shrinking", "checks", "physical", "dual"];

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl Scenario {
    pub fn from_text(text: &str) -> Result<Scenario> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    /// Resolves and validates everything that can be checked before running.
    pub fn from_raw(raw: &RawConfig) -> Result<Scenario> {
        let mut r = Reader::new(raw);
        let name: String = r.get("scenario", "name", "run".to_string())?;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(Error::Config(format!("scenario name `{name}` must be a plain file name")));
        }
        let p: f64 = r.get("scenario", "p", 3.0)?;
        let r0 = r.get("scenario", "r0", 1.0)?;
        let d_hat0: f64 = r.get("scenario", "d_hat0", 0.0)?;
        if !(d_hat0.abs() < 1.0) {
            return Err(Error::Config(format!("|d_hat0| must be < 1, got {d_hat0}")));
        }

        let selfsim = if raw.has("selfsim") {
            let dim = r.get("selfsim", "dim", 3usize)?;
            let s0 = r.get("selfsim", "s0", 3.0)?;
            let s_end = r.get("selfsim", "s_end", 8.0)?;
            let n = r.get("selfsim", "n", 48usize)?;
            let mut cfg = SelfSimConfig::new(p, dim, r0, s0, s_end, n);
            cfg.d_hat0 = d_hat0;
            cfg.ds = r.get("selfsim", "ds", cfg.ds)?;
            cfg.sample_every = r.get("selfsim", "sample_every", 200usize)?;
            cfg.eta = r.get("selfsim", "eta", cfg.eta)?;
            cfg.filter = r.get("selfsim", "filter", false)?;
            cfg.validate().map_err(cfg_err)?;
            let init = match r.get("selfsim", "init", "shoot".to_string())?.as_str() {
                "shoot" => InitialParams::Shoot {
                    horizons: r.list("selfsim", "horizons", vec![1.0, 2.5, 5.0])?,
                    tol: r.get("selfsim", "shoot_tol", 1e-10)?,
                },
                "fixed" => {
                    let d0 = r.get("selfsim", "d0", d_hat0)?;
                    let nu0 = r.get("selfsim", "nu0", 0.0)?;
                    InitialParams::Fixed(SolitonParams::new(d0, nu0).map_err(cfg_err)?)
                }
                other => return Err(Error::Config(format!("[selfsim] init must be shoot or fixed, got `{other}`"))),
            };
            let amplitude = match r.opt::<f64>("shrinking", "a")? {
                Some(a) if a > 0.0 => AmplitudeChoice::Absolute(a),
                Some(a) => return Err(Error::Config(format!("[shrinking] a must be positive, got {a}"))),
                None => {
                    let f = r.get("shrinking", "a_factor", 2.0)?;
                    if !(f > 0.0) {
                        return Err(Error::Config("[shrinking] a_factor must be positive".into()));
                    }
                    AmplitudeChoice::Envelope(f)
                }
            };
            let delta = r.opt::<f64>("shrinking", "delta")?;
            if delta.is_some_and(|d| !(d > 0.0 && d < 1.0)) {
                return Err(Error::Config("[shrinking] delta must lie in (0, 1)".into()));
            }
            Some(SelfSimSetup { cfg, init, amplitude, delta })
        } else {
            None
        };

        let physical = if raw.has("physical") {
            let dim = r.get("physical", "dim", 1usize)?;
            let t0 = r.get("physical", "t0", 0.5)?;
            let eps0 = r.get("physical", "eps0", 0.05)?;
            let d0 = r.get("physical", "d0", d_hat0)?;
            let nu0 = r.get("physical", "nu0", 0.0)?;
            let dr = r.get("physical", "dr", 1e-3)?;
            let mut cfg = PhysicalConfig::new(p, dim, r0, t0, eps0, d0, nu0, dr);
            cfg.dt = r.opt("physical", "dt")?;
            cfg.threshold = r.opt("physical", "threshold")?;
            cfg.t_max = r.get("physical", "t_max", cfg.t_max)?;
            let probes = r.get("physical", "probes", 9usize)?;
            if probes < 3 {
                return Err(Error::Config("[physical] probes must be >= 3".into()));
            }
            build_initial_data(&cfg).map_err(cfg_err)?;
            Some(PhysicalSetup { cfg, probes })
        } else {
            None
        };

        let dual = if raw.has("dual") {
            let Some(ss) = &selfsim else {
                return Err(Error::Config("[dual] needs a [selfsim] section".into()));
            };
            let setup = DualSetup {
                s: r.list("dual", "s", vec![4.0, 5.0, 6.0])?,
                dr: r.get("dual", "dr", 1e-5)?,
                eps0_frac: r.get("dual", "eps0_frac", 0.1)?,
            };
            if setup.s.iter().any(|&s| !(s >= ss.cfg.s0 && s <= ss.cfg.s_end)) {
                return Err(Error::Config("[dual] s values must lie in [s0, s_end]".into()));
            }
            let probe = dual_config(&ss.cfg, &setup, SolitonParams::new(d_hat0, 0.0)?);
            probe.validate().map_err(cfg_err)?;
            Some(setup)
        } else {
            None
        };

        let checks = CheckSettings {
            decay: r.get("checks", "decay", selfsim.is_some())?,
            decay_r2_min: r.get("checks", "decay_r2_min", 0.95)?,
            shrinking: r.get("checks", "shrinking", selfsim.is_some())?,
            q_norm_max: r.opt("checks", "q_norm_max")?,
            t0_rel_tol: r.get("checks", "t0_rel_tol", 0.01)?,
            slope_tol: r.get("checks", "slope_tol", 0.05)?,
            dual_tol: r.get("checks", "dual_tol", 1e-3)?,
        };
        if selfsim.is_none() && (checks.decay || checks.shrinking || checks.q_norm_max.is_some()) {
            return Err(Error::Config("trajectory checks need a [selfsim] section".into()));
        }
        if selfsim.is_none() && physical.is_none() {
            return Err(Error::Config("nothing to run: add [selfsim] or [physical]".into()));
        }
        let resolved = r.finish(&SECTIONS)?;
        Ok(Scenario { name, p, r0, d_hat0, selfsim, physical, dual, checks, resolved })
    }
}

/// Physical configuration matching the similarity-variable run: `T0 = e^-s0`,
/// cutoff margin `eps0_frac * T0`, snapshots at the requested `s`.
pub fn dual_config(cfg: &SelfSimConfig, dual: &DualSetup, params: SolitonParams) -> PhysicalConfig {
    let t0 = cfg.t0();
    let mut pc = PhysicalConfig::new(cfg.p, cfg.dim, cfg.r0, t0, dual.eps0_frac * t0, params.d(), params.nu(), dual.dr);
    pc.snapshot_times = dual.s.iter().map(|s| t0 - (-s).exp()).collect();
    pc.t_max = pc.snapshot_times.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    pc
}
