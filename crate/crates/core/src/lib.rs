pub mod error;
pub mod lpcore;
pub mod model;
pub mod relaxations;
pub mod schedulers;
pub mod sim;
pub mod verify;
pub mod workload;

pub use error::{Error, Result};
