//! Double Hopf bifurcation analysis for delayed reaction–diffusion systems
//! with Neumann boundary conditions.

pub mod eigenbasis;
pub mod linalg;
pub mod model;
pub mod normalform;
pub mod spectrum;
pub mod unfolding;
pub mod simulator;
