//! One module per subcommand; each exposes `run(&Args) -> Result<i32, CliError>`
//! returning the process exit code on success.

pub mod asympt_var;
pub mod breakdown;
pub mod constants;
pub mod fit;
pub mod influence;
pub mod simulate;
pub mod sweep;
