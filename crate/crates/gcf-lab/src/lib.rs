//! Laboratory side of the Gauss curvature flow workspace: run configuration,
//! artifact serialization, and the subcommand drivers behind the `gcf`
//! binary. Split out as a library so integration tests drive the exact code
//! paths the binary ships.

pub mod config;
pub mod emit;
pub mod run;
