//! Command implementations behind the `mwer` binary, kept in a library so
//! they can be driven from tests without spawning processes.

pub mod align;
pub mod error;
pub mod eval;
pub mod server;
pub mod stream;
pub mod svg;
