mod config;
mod experiments;
mod parallel;
mod report;
mod stats;

pub use config::*;
pub use experiments::*;
pub use parallel::*;
pub use report::*;
pub use stats::*;
