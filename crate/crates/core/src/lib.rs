pub mod analysis;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod legendre;
pub mod lmi;
pub mod matrix_io;
pub mod model;
pub mod quad;
pub mod sdp;
pub mod sim;
pub mod validation;

pub use error::{Error, Result};
