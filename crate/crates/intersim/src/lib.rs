//! Files, batch evaluation, rendering and the command line for
//! [`intersim_core`].

pub mod batch;
pub mod cli;
pub mod io;
pub mod render;
pub mod report;
pub mod trace;

pub use batch::{run_batch, run_one, BatchConfig, BatchError, BatchOutput, PlannerChoice};
pub use io::{load_scenario, load_scenario_dir, save_scenario, IoError};
pub use trace::Trace;
