//! Map a physical solution into similarity variables and watch the cone
//! average diverge like (T0 - t)^(-4/(p-1)).

use semiwave::physical::{cone_average_growth, evolve_physical, to_selfsim, PhysicalConfig};
use semiwave::solitons::kappa;
use semiwave::Grid;

fn main() -> semiwave::Result<()> {
    let mut cfg = PhysicalConfig::new(3.0, 1, 1.0, 0.5, 0.05, 0.3, 0.0, 1e-3);
    let t0 = cfg.t0;
    let s_list = [1.0, 2.0, 3.0];
    let times: Vec<f64> = s_list.iter().map(|s| t0 - f64::exp(-s)).collect();
    cfg.snapshot_times = times.clone();
    cfg.t_max = times[2];
    let hist = evolve_physical(&cfg)?;

    // the explicit solution is the soliton kappa(0.3) in similarity variables
    let g = Grid::build(32, 3.0)?;
    let k = kappa(0.3, &g)?;
    for &s in &s_list {
        let w = to_selfsim(&hist, &g, cfg.r0, t0, s)?;
        let err = w.first.zip_with(&k, |a, b| (a - b).abs())?.max_abs();
        println!("s = {s}: max |w - kappa(0.3)| = {err:.2e}");
    }
    let growth = cone_average_growth(&hist, &times, cfg.r0, t0)?;
    println!("cone average exponent {:.4} (r2 {:.4})", growth.exponent, growth.r2);
    Ok(())
}
