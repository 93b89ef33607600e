//! Data-driven personalized reserve prices for eager second-price auctions.
//!
//! The library revolves around one pipeline: load a bid dataset, enumerate
//! the valid two-buyer revenue profiles of every auction, assemble the
//! profile LP, solve it with the built-in revised simplex, and round the
//! fractional reserve distributions into a concrete reserve vector that is
//! guaranteed a constant fraction of the LP upper bound. Around that core
//! sit exact baselines (grid brute force, per-buyer lazy-optimal greedy),
//! adversarial and synthetic instance generators with their closed-form
//! reference values, executable versions of the approximation-factor
//! mathematics, and a reproducible experiment harness.

pub mod auction;
pub mod baselines;
pub mod bounds;
pub mod error;
pub mod experiment;
pub mod instances;
pub mod io;
pub mod model;
pub mod profile;
pub mod report;
pub mod rng;
pub mod rounding;
pub mod simplex;

pub use auction::{Auction, Dataset, GridMode, Reserve, ReserveGrid, ReserveVector};
pub use error::{Error, Result};
pub use model::{FeasibilityReport, LpModel, LpSolution};
pub use profile::{Profile, Slot};
pub use rounding::{ConditionGapReport, RoundingOptions, RoundingOutcome};
pub use simplex::{SimplexOptions, SolveReport, SolveStatus, StandardFormLp};
