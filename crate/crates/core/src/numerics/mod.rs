//! Numerical substrate: quadrature, ODE integration, monotone tables and root finding.

pub mod interp;
pub mod ode;
pub mod quadrature;
pub mod roots;

pub use interp::MonotoneTable;
pub use ode::{integrate_ivp, solve_ivp, IvpSolution, StepControl};
pub use quadrature::{integrate, GaussLegendre, QuadratureConfig};
pub use roots::find_root;
