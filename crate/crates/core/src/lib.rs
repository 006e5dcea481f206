//! Lift concrete EVM attack-transaction traces into attack-scoped,
//! loop-compressed pseudocode with bound runtime values, derive fund-flow
//! profit oracles, and synthesize Foundry-style proof-of-concept sources via
//! a budgeted, provider-driven refinement loop.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`trace`] — parse raw traces into a normalized step stream with
//!    selective argument recording.
//! 2. [`cefg`] — build the contract-centric execution flow graph.
//! 3. [`scope`] — localize the attack scope and extract per-function
//!    instruction streams.
//! 4. [`lift`] — lift each function into pseudocode with concrete bindings.
//! 5. [`compress`] — summarize unrolled loops into parameterized templates.
//! 6. [`fundflow`] — net asset deltas, beneficiary, and profit oracles.
//! 7. [`sketch`] — assemble the proof-of-concept sketch.
//! 8. [`refine`] — provider-driven completion plus syntax/semantic repair.
//!
//! [`pipeline`] ties the stages together; [`rpc`] is the optional online
//! front end.

pub mod abi;
pub mod cefg;
pub mod compress;
pub mod config;
pub mod databases;
pub mod fixtures;
pub mod fundflow;
pub mod lift;
pub mod opcode;
pub mod pipeline;
pub mod primitives;
pub mod refine;
pub mod rpc;
pub mod scope;
pub mod serde_hex;
pub mod sketch;
pub mod trace;
