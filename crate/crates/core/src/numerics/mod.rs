//! Numerical building blocks: root finding, quadrature, ODE integration and
//! interpolation.

pub mod interp;
pub mod ode;
pub mod quadrature;
pub mod root;
