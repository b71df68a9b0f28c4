//! Evolve a slightly perturbed soliton in similarity variables (N = 1) and
//! follow the modulated remainder.

use semiwave::diagnostics::{fit_decay, DecayField};
use semiwave::selfsim::{evolve, SelfSimConfig};
use semiwave::solitons::kappa_star;
use semiwave::{Grid, SolitonParams, StatePair};

fn main() -> semiwave::Result<()> {
    let n = 32;
    let g = Grid::build(n, 3.0)?;
    let mut cfg = SelfSimConfig::new(3.0, 1, 1.0, 3.0, 6.0, n);
    cfg.d_hat0 = 0.3;
    cfg.sample_every = 100;
    let p = SolitonParams::new(0.3, 0.0)?;
    let bump = StatePair::new(g.field(|y| 1e-3 * (1.0 - y * y)), g.zeros())?;
    let init = &kappa_star(p, &g)? + &bump;

    let trace = evolve(&g, &init, p, &cfg)?;
    for r in trace.records.iter().step_by(8) {
        println!("s = {:.3}  d = {:.6}  nu = {:+.3e}  ||q||_H = {:.3e}", r.s, r.d, r.nu, r.q_norm_h);
    }
    if let Some(f) = &trace.failure {
        println!("stopped early: {f}");
    }
    if let Ok(fit) = fit_decay(&trace, DecayField::QNormSq, None) {
        println!("||q||^2 ~ e^(-{:.3} (s - s0)), r2 = {:.3}", fit.delta_est, fit.r2);
    }
    Ok(())
}
