//! Gauss–Jacobi grid for p = 3: quadrature, differentiation and the energy norms.

use semiwave::{Grid, StatePair};

fn main() -> semiwave::Result<()> {
    let g = Grid::build(16, 3.0)?;
    println!("n = {}, alpha = {}", g.n(), g.alpha());
    println!("sum of weights = {:.15} (exact 4/3)", g.quad_weights().iter().sum::<f64>());

    let f = g.field(|y| y.powi(3));
    let df = g.derivative(&f);
    let err = g.nodes().iter().zip(df.as_slice()).map(|(y, d)| (d - 3.0 * y * y).abs()).fold(0.0, f64::max);
    println!("max |D y^3 - 3y^2| = {err:.2e}");

    let one = StatePair::new(g.constant(1.0), g.zeros())?;
    println!("||(1,0)||_H = {:.15} (exact sqrt(4/3) = {:.15})", g.norm_h(&one)?, (4.0f64 / 3.0).sqrt());
    let n = g.weighted_norms(&g.field(|y| y))?;
    println!("weighted norms of y: {n:?}");
    Ok(())
}
