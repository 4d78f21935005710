//! One module per subcommand.

pub mod bank;
pub mod eval;
pub mod extract;
pub mod gen;
pub mod sweep;
pub mod train;
