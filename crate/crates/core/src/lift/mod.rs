//! The dual decompiler: symbolic lifting with a concrete-bind hook.
//!
//! Every lifted expression is paired with the concrete value observed at the
//! same execution point, which makes branch following, memory resolution,
//! and variable binding deterministic along the traced path. Nothing is
//! generalized beyond observed behavior: unexecuted branches do not exist
//! in the output.

pub mod engine;
pub mod expr;
pub mod memory;
pub mod render;
pub mod stmt;

use std::time::Duration;

use thiserror::Error;

pub use engine::{follow_branch, lift_function};
pub use expr::{Concrete, Expr, PairedValue};
pub use memory::{ConcreteMemoryMap, VarMap};
pub use render::{render_pseudocode, RenderOptions};
pub use stmt::{CallKind, LeafKind, PseudoStmt};

use crate::compress::LoopItem;
use crate::primitives::U256;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("unbound value at step {step}: {what}")]
    UnboundValue { step: usize, what: String },
    #[error("lift time budget exceeded")]
    LiftTimeout,
    #[error("unsupported instruction at step {step}: {what}")]
    Unsupported { step: usize, what: String },
}

#[derive(Debug, Clone)]
pub struct LiftOptions {
    /// Per-function time budget.
    pub time_budget: Duration,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions {
            time_budget: Duration::from_secs(120),
        }
    }
}

impl LoopItem for PseudoStmt {
    fn numeric_leaves(&self) -> Vec<U256> {
        PseudoStmt::numeric_leaves(self)
    }

    fn with_numeric_leaves(&self, leaves: &[U256]) -> Self {
        PseudoStmt::with_numeric_leaves(self, leaves)
    }

    fn skeleton_masked(&self) -> Self {
        PseudoStmt::skeleton_masked(self)
    }
}

/// Compress fully-unrolled loops in a lifted statement list, recursing into
/// branch bodies first.
pub fn compress_stmts(stmts: Vec<PseudoStmt>) -> Vec<PseudoStmt> {
    let stmts = stmts
        .into_iter()
        .map(|mut s| {
            if let PseudoStmt::IfTaken { body, .. } = &mut s {
                let inner = std::mem::take(body);
                *body = compress_stmts(inner);
            }
            s
        })
        .collect();
    crate::compress::compress_items(stmts, &PseudoStmt::Loop)
}

#[cfg(test)]
mod tests;
