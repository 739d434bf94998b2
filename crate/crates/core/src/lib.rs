//! Visual-imagery EEG decoding for drone swarm control.
//!
//! The crate covers the whole offline loop:
//!
//! * [`recording`]: continuous multichannel recordings, the NSR file format
//!   and imagery-window epoching.
//! * [`dsp`]: Butterworth bandpass and notch design, zero-phase filtering.
//! * [`csp`]: common spatial patterns for one binary subproblem.
//! * [`decode`]: shrinkage LDA and the one-vs-rest four-command decoder.
//! * [`eval`]: stratified k-fold cross-validation and group summaries.
//! * [`synth`]: seeded synthetic EEG with controllable class separability.
//! * [`swarm`]: a deterministic 2D simulator of fifty unit drones.
//! * [`cli`]: configuration, result files and the command implementations
//!   used by the `brainswarm` binary.

pub mod cli;
pub mod command;
pub mod csp;
pub mod decode;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod jsonio;
pub mod recording;
pub mod swarm;
pub mod synth;

pub use command::Command;
pub use error::{Error, Result};
