pub mod effective_gravity;
pub mod cli;
pub mod droplets;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod ground_state;
pub mod guidance;
pub mod kernels;

pub use error::{Error, ErrorClass, Result};
