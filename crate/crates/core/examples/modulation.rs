//! Split a perturbed soliton into kappa*(d, nu) plus an orthogonal remainder.

use semiwave::diagnostics::h_functional;
use semiwave::modulation::{modulate, ModulationOptions};
use semiwave::projections::{pi, Lambda};
use semiwave::solitons::kappa_star;
use semiwave::{Grid, SolitonParams, StatePair};

fn main() -> semiwave::Result<()> {
    let g = Grid::build(32, 3.0)?;
    let truth = SolitonParams::new(0.3, 0.05)?;
    let pert = StatePair::new(g.field(|y| (3.0 * y).sin() + 0.5), g.field(|y| y * y - 0.2))?;
    let v = &kappa_star(truth, &g)? + &pert.scale(1e-3);

    let guess = SolitonParams::new(0.25, 0.0)?;
    let m = modulate(&g, &v, guess, &ModulationOptions::default())?;
    println!("converged {} in {} iterations", m.converged, m.iterations);
    println!("d = {:.8}, nu = {:.8}, ||q||_H = {:.3e}", m.params.d(), m.params.nu(), m.q_norm);
    for l in [Lambda::Zero, Lambda::One] {
        println!("pi_{:?}(q) = {:.1e}", l, pi(l, m.dstar(), &m.q, &g)?);
    }
    let e = h_functional(&g, &m.q, m.params, 0.05)?;
    println!("varphi(q,q)/||q||^2 = {:.4}, h = {:.3e}", e.ratio_h, e.h);
    Ok(())
}
