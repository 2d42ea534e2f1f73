//! Scenario-driven harness around the `kgcontrol` engine.
//!
//! A scenario file fixes the grid, potential, start state, target, planner
//! and every tunable; [`execute`] runs one subcommand on it and writes a
//! `report.toml` summary plus tab-separated tables. The exit-code contract:
//!
//! | code | meaning |
//! |------|---------|
//! | 0  | success |
//! | 1  | correctness failure of the simulator |
//! | 2  | flagged: a hypothesis failed, a target was missed, or a table is not monotone |
//! | 64 | unusable scenario or command line |
//! | 65 | a control amplitude would exceed the cap |

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use commands::{evaluate, execute, Command, Execution};
pub use error::{ExitStatus, HarnessError};
pub use report::{Outcome, Table};
pub use scenario::{Overrides, Scenario};
