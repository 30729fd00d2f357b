pub mod analysis;
pub mod attacks;
pub mod basis;
pub mod error;
pub mod identities;
pub mod oracle;
pub mod protocol;
pub mod qudit;
pub mod sampler;

pub use error::{Error, Result};
