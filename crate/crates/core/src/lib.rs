pub mod dynamics;
pub mod error;
pub mod interpolants;
pub mod neural;
pub mod ode;
pub mod relativity;
pub mod sampling;
pub mod training;
pub mod eval;
pub mod io;
pub mod plot;
pub mod cli;
