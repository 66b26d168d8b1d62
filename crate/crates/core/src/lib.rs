//! Slot-level simulation and mean-field analysis of opportunistic
//! superposition-coding (OSPC) scheduling on multi-band multi-access
//! fading channels.
//!
//! The library has three layers:
//!
//! * distribution machinery for the block-fading channel
//!   ([`channel`]) and the optimal superposition-coding power
//!   allocation ([`power`]);
//! * the per-slot OSPC decision rule ([`scheduler`]) and a finite-user
//!   Monte Carlo engine around it ([`sim`]);
//! * closed-form delay/energy evaluation in the many-user limit
//!   ([`analysis`]) plus the self-check suite ([`validation`]).
//!
//! Rates are in nats per channel use throughout; unit conversion for
//! reporting is the caller's concern.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod numeric;
pub mod power;
pub mod scheduler;
pub mod seed;
pub mod sim;
pub mod validation;

pub use error::{Error, Result};
