//! HTTP API and operator CLI for the oral history exploration engine.
//!
//! Startup loads the corpus, builds the index and replays the annotation log.
//! The current index is published behind an `RwLock<Arc<Index>>`: readers clone
//! the `Arc` and work on a fixed epoch, while the single writer path swaps in
//! a fully built successor.

pub mod api;
pub mod cli;
pub mod config;
pub mod state;

pub use api::router;
pub use config::Config;
pub use state::{startup, AppState, StartupError};
