//! HTTP session API, on-disk persistence and the `curate` command line on
//! top of the `curate` engine.

pub mod api;
pub mod cli;
pub mod error;
pub mod payload;
pub mod store;

pub use error::ApiError;
pub use store::Store;
