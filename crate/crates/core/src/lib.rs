//! Numerical laboratory for soliton-type blow-up of the radial semilinear
//! wave equation
//!
//! ```text
//! u_tt = u_rr + (N-1)/r u_r + |u|^(p-1) u
//! ```
//!
//! near a blow-up point `r0 > 0`. In similarity variables
//! `y = (r - r0)/(T0 - t)`, `s = -log(T0 - t)`, `w = (T0 - t)^(2/(p-1)) u`
//! the problem becomes a degenerate hyperbolic equation on `(-1, 1)` whose
//! one-dimensional solitons `kappa(d)` attract the solution. The crate
//! provides:
//!
//! * [`spectral`]: Gauss–Jacobi grids for the weight `rho = (1-y^2)^(2/(p-1))`,
//!   spectral differentiation and the weighted energy norms;
//! * [`solitons`]: the soliton families `kappa`, `kappa*` and the explicit
//!   physical-space solutions;
//! * [`projections`]: the dual functions `W_lambda` and projectors onto the
//!   unstable (`lambda = 1`) and null (`lambda = 0`) directions;
//! * [`modulation`]: Newton solver for the modulation parameters `(d, nu)`;
//! * [`selfsim`]: method-of-lines integration in similarity variables;
//! * [`diagnostics`]: energy functionals, decay fits, shrinking-set monitor;
//! * [`physical`]: finite-difference solver in `(r, t)`, blow-up time and
//!   blow-up curve estimation, and the map back to similarity variables;
//! * [`driver`]: scenario configuration, CSV/SVG output and the CLI logic.

pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod modulation;
pub mod physical;
pub mod projections;
pub mod selfsim;
pub mod solitons;
pub mod spectral;

mod numeric;

pub use error::{Error, Result};
pub use solitons::SolitonParams;
pub use spectral::{Field, Grid, StatePair};
