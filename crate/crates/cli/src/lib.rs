//! Command-line front end for `ebx_core`: the channel file format, result
//! documents and the `ebx` subcommands.

pub mod commands;
pub mod error;
pub mod format;
pub mod report;

pub use commands::{run, Cli, Command, Outcome};
pub use error::CliError;
pub use format::{parse_channel, serialize_channel, ChannelFile};
