//! Bayesian nonparametric survival analysis with Erlang mixtures.

pub mod ddp;
pub mod diagnostics;
pub mod dp;
pub mod error;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod posterior;
pub mod presets;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
