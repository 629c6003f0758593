//! Subcommand implementations for the `mixreward` binary.
//!
//! Every command reads from and writes to caller-supplied streams and returns
//! its exit code, so the binary in `main.rs` is only argument parsing.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage or schema error,
//! 3 runtime exhaustion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjust;
pub mod fit_bt;
pub mod oracle;
pub mod simulate;
pub mod verify;

use std::fmt;

/// Dynamic sampling ran dry during a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exhausted {
    pub seed: u64,
    pub step: usize,
}

impl fmt::Display for Exhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed {}: dynamic sampling exhausted at step {}",
            self.seed, self.step
        )
    }
}

impl std::error::Error for Exhausted {}

/// Maps a command error onto the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Exhausted>().is_some() {
        3
    } else {
        2
    }
}
