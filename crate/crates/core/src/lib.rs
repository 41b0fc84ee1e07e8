//! Symbolic synthesis of decentralized and centralized controllers that make
//! a network of discrete-time nonlinear control systems shadow a regular
//! language of set-points within a prescribed accuracy.
//!
//! The pipeline is:
//!
//! 1. [`plant`]: the network model, its incremental-stability certificate,
//!    and the choice of abstraction accuracy `mu` and grid step `eta`.
//! 2. [`abstraction`]: the grid quantizer and on-demand symbolic successors.
//! 3. [`specification`]: spec automata over exact set-points and the derived
//!    system whose states are the spec transitions.
//! 4. [`synthesis`]: on-the-fly feasibility evaluation, trimming, word
//!    selection and controller extraction.
//! 5. [`runtime`]: closed-loop simulation and enforcement checks.
//!
//! [`pipeline`] wires these into the project-level commands used by the CLI.

pub mod abstraction;
pub mod automata;
pub mod decimal;
pub mod heating;
pub mod pipeline;
pub mod plant;
pub mod runtime;
pub mod specification;
pub mod synthesis;

pub use decimal::Dec;
