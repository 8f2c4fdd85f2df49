pub mod oracle;
pub mod experiments;
pub use experiments::*;
pub use oracle::*;
