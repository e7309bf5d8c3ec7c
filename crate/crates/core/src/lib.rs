pub mod channel;
pub mod convcode;
pub mod error;
pub mod exit;
pub mod harness;
pub mod interleaving;
pub mod numeric;
pub mod optimizer;
pub mod puncturing;
pub mod rng;
pub mod sccc;
pub mod wef;

pub use error::{Error, Result};
