pub mod config_space;
pub mod error;
pub mod fixtures;
pub mod geom;
pub mod homotopy;
pub mod irls;
pub mod local_min;
pub mod melzak;
pub mod moustache;
pub mod render;
pub mod smt;
pub mod topology;

pub use config_space::{ConfigVector, Configuration, PolylinePath};
pub use error::{Error, Result};
pub use topology::{Moustache, MoustacheKind, SteinerTopology, TypeSignature};
