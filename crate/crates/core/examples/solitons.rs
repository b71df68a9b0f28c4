//! The soliton families and the explicit physical solution they come from.

use semiwave::selfsim::rhs_1d;
use semiwave::solitons::{kappa, kappa0, kappa_star, ExplicitSolution};
use semiwave::{Grid, SolitonParams, StatePair};

fn main() -> semiwave::Result<()> {
    let g = Grid::build(32, 3.0)?;
    println!("kappa0(3) = {}", kappa0(3.0)?);
    for d in [0.0, 0.3, 0.6] {
        let k = StatePair::new(kappa(d, &g)?, g.zeros())?;
        let res = rhs_1d(&g, &k, true);
        println!("d = {d}: ||kappa(d)||_H = {:.6}, stationarity residual {:.1e}", g.norm_h(&k)?, g.norm_h(&res)?);
    }
    let p = SolitonParams::new(0.3, 0.02)?;
    let ks = kappa_star(p, &g)?;
    println!("kappa*(0.3, 0.02): ||.||_H = {:.6}", g.norm_h(&ks)?);

    let u = ExplicitSolution::new(3.0, p, 1.0, 0.5)?;
    println!("blow-up time at r = 1.1: {:.6}, slope {:.6}", u.blowup_time(1.1), u.blowup_slope());
    for t in [0.0, 0.25, 0.45] {
        println!("u(1, {t}) = {:.6}", u.u(1.0, t)?);
    }
    Ok(())
}
