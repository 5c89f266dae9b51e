//! Reassembly of irregular image fragments: synthetic shredding, pairwise
//! alignment candidates, boosted compatibility scoring and global
//! composition by loop closing and hierarchical loop merging.

pub mod compatibility;
pub mod composition;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod pairwise;
pub mod pipeline;
pub mod shredder;

pub use error::{Error, Result};
