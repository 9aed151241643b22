mod bench;
mod data;
mod train;

pub use bench::{bench, sweep};
pub use data::{convert, split, stats};
pub use train::{evaluate, train};
