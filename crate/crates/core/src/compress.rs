//! Loop compression: detect fully-unrolled loops as consecutively repeated
//! subsequences and summarize them into parameterized templates.
//!
//! Detection compares item *shapes* (numeric leaves masked out), so
//! iterations that differ only in runtime values still match. Summarization
//! classifies each statement slot: identical across iterations → invariant;
//! every leaf an exact affine function of the iteration index → deterministic
//! variation; anything else → complex divergence with a full value table.
//! `expand` inverts `summarize` exactly, which is the round-trip oracle used
//! throughout the tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::U256;

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("loop bodies differ structurally at iteration {iteration}, slot {slot}")]
    ShapeMismatch { iteration: usize, slot: usize },
    #[error("empty region")]
    EmptyRegion,
}

/// Anything the compressor can summarize: items expose their numeric leaves
/// and can be rebuilt with substituted leaves.
pub trait LoopItem: Clone + PartialEq {
    fn numeric_leaves(&self) -> Vec<U256>;
    fn with_numeric_leaves(&self, leaves: &[U256]) -> Self;
    /// Copy with all leaves zeroed; two items with equal skeletons differ
    /// only in leaf values.
    fn skeleton_masked(&self) -> Self;
}

/// Plain program counters: the whole value is the shape.
impl LoopItem for u64 {
    fn numeric_leaves(&self) -> Vec<U256> {
        Vec::new()
    }
    fn with_numeric_leaves(&self, _leaves: &[U256]) -> Self {
        *self
    }
    fn skeleton_masked(&self) -> Self {
        *self
    }
}

/// A detected region of consecutive repetitions: `[entry, exit)` covers
/// `iterations` bodies of `body_length` items each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopRegion {
    pub entry: usize,
    pub exit: usize,
    pub body_length: usize,
    pub iterations: usize,
}

impl LoopRegion {
    pub fn bodies<'a, T>(&self, items: &'a [T]) -> Vec<&'a [T]> {
        (0..self.iterations)
            .map(|i| {
                let s = self.entry + i * self.body_length;
                &items[s..s + self.body_length]
            })
            .collect()
    }
}

/// Per-leaf parameterization within a loop template slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LeafParam {
    /// value(i) = base + stride·i with wrapping 256-bit arithmetic.
    Affine { base: U256, stride: U256 },
    /// Irregular values, one per iteration.
    Table(Vec<U256>),
}

impl LeafParam {
    pub fn value_at(&self, i: usize) -> U256 {
        match self {
            LeafParam::Affine { base, stride } => {
                base.overflowing_add(stride.overflowing_mul(U256::from(i)).0).0
            }
            LeafParam::Table(t) => t[i],
        }
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self, LeafParam::Affine { stride, .. } if stride.is_zero())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Slot<T> {
    /// Identical in every iteration.
    Invariant(T),
    /// Shape-identical with leaves varying per iteration.
    Parametric { first: T, leaves: Vec<LeafParam> },
}

/// Role of a slot in the spec's classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotRole {
    Invariant,
    DeterministicVariation,
    ComplexDivergence,
}

impl<T> Slot<T> {
    pub fn role(&self) -> SlotRole {
        match self {
            Slot::Invariant(_) => SlotRole::Invariant,
            Slot::Parametric { leaves, .. } => {
                if leaves.iter().any(|l| matches!(l, LeafParam::Table(_))) {
                    SlotRole::ComplexDivergence
                } else {
                    SlotRole::DeterministicVariation
                }
            }
        }
    }
}

/// Parameterized summary of a repeated region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopTemplate<T> {
    pub index_var: String,
    pub iterations: usize,
    pub slots: Vec<Slot<T>>,
}

/// Largest iteration count for which divergence tables are materialized;
/// regions needing bigger tables stay uncompressed.
pub const MAX_TABLE_ENTRIES: usize = 4096;

/// Upper bound on the candidate body length scanned by detection.
pub const MAX_BODY_LENGTH: usize = 512;

/// Detect maximal consecutive repetitions with at least two iterations and a
/// body of at least two items. Returns non-overlapping regions in input
/// order; among overlapping candidates the longest covered span wins, then
/// the smallest period.
pub fn detect_loops<T: LoopItem>(items: &[T]) -> Vec<LoopRegion> {
    let n = items.len();
    if n < 4 {
        return Vec::new();
    }
    let masked: Vec<T> = items.iter().map(|x| x.skeleton_masked()).collect();
    let max_p = (n / 2).min(MAX_BODY_LENGTH);

    let mut candidates: Vec<LoopRegion> = Vec::new();
    for p in 2..=max_p {
        let mut i = 0usize;
        while i + p < n {
            if masked[i] != masked[i + p] {
                i += 1;
                continue;
            }
            // run of matches starting at i
            let run_start = i;
            while i + p < n && masked[i] == masked[i + p] {
                i += 1;
            }
            let run_len = i - run_start;
            let k = run_len / p + 1;
            if k >= 2 {
                candidates.push(LoopRegion {
                    entry: run_start,
                    exit: run_start + k * p,
                    body_length: p,
                    iterations: k,
                });
            }
        }
    }

    candidates.sort_by(|a, b| {
        let span_a = a.exit - a.entry;
        let span_b = b.exit - b.entry;
        span_b
            .cmp(&span_a)
            .then(a.body_length.cmp(&b.body_length))
            .then(a.entry.cmp(&b.entry))
    });

    let mut chosen: Vec<LoopRegion> = Vec::new();
    for c in candidates {
        if chosen.iter().any(|r| c.entry < r.exit && r.entry < c.exit) {
            continue;
        }
        chosen.push(c);
    }
    chosen.sort_by_key(|r| r.entry);
    chosen
}

/// Summarize shape-identical bodies into a parameterized template.
pub fn summarize<T: LoopItem>(bodies: &[&[T]]) -> Result<LoopTemplate<T>, CompressError> {
    let k = bodies.len();
    if k == 0 || bodies[0].is_empty() {
        return Err(CompressError::EmptyRegion);
    }
    let body_len = bodies[0].len();
    let mut slots = Vec::with_capacity(body_len);

    for s in 0..body_len {
        let first = &bodies[0][s];
        // invariant fast path
        if bodies.iter().all(|b| b[s] == *first) {
            slots.push(Slot::Invariant(first.clone()));
            continue;
        }
        let first_skel = first.skeleton_masked();
        let leaf_rows: Vec<Vec<U256>> = bodies
            .iter()
            .enumerate()
            .map(|(it, b)| {
                if b[s].skeleton_masked() != first_skel {
                    Err(CompressError::ShapeMismatch { iteration: it, slot: s })
                } else {
                    Ok(b[s].numeric_leaves())
                }
            })
            .collect::<Result<_, _>>()?;
        let leaf_count = leaf_rows[0].len();
        if leaf_rows.iter().any(|r| r.len() != leaf_count) {
            return Err(CompressError::ShapeMismatch { iteration: 0, slot: s });
        }
        let mut leaves = Vec::with_capacity(leaf_count);
        for li in 0..leaf_count {
            let base = leaf_rows[0][li];
            let stride = leaf_rows
                .get(1)
                .map(|r| r[li].overflowing_sub(base).0)
                .unwrap_or_default();
            let affine_fits = leaf_rows.iter().enumerate().all(|(i, r)| {
                r[li] == base.overflowing_add(stride.overflowing_mul(U256::from(i)).0).0
            });
            if affine_fits {
                leaves.push(LeafParam::Affine { base, stride });
            } else {
                leaves.push(LeafParam::Table(leaf_rows.iter().map(|r| r[li]).collect()));
            }
        }
        slots.push(Slot::Parametric {
            first: first.clone(),
            leaves,
        });
    }

    Ok(LoopTemplate {
        index_var: "i".to_string(),
        iterations: k,
        slots,
    })
}

/// Materialize all iterations of a template; exact inverse of `summarize`
/// on the region it came from.
pub fn expand<T: LoopItem>(tpl: &LoopTemplate<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(tpl.iterations * tpl.slots.len());
    for i in 0..tpl.iterations {
        for slot in &tpl.slots {
            match slot {
                Slot::Invariant(item) => out.push(item.clone()),
                Slot::Parametric { first, leaves } => {
                    let vals: Vec<U256> = leaves.iter().map(|l| l.value_at(i)).collect();
                    out.push(first.with_numeric_leaves(&vals));
                }
            }
        }
    }
    out
}

/// Whether a summarized region is worth materializing as a template.
fn within_table_cap<T>(tpl: &LoopTemplate<T>) -> bool {
    tpl.iterations <= MAX_TABLE_ENTRIES
        || tpl.slots.iter().all(|s| {
            !matches!(s, Slot::Parametric { leaves, .. }
                if leaves.iter().any(|l| matches!(l, LeafParam::Table(_))))
        })
}

/// Repeatedly detect and fold loop regions until none remain. Inner loops
/// compress first through re-scanning: a folded loop becomes a single item,
/// letting enclosing repetitions match on the compacted sequence.
pub fn compress_items<T: LoopItem>(
    mut items: Vec<T>,
    make_loop: &dyn Fn(LoopTemplate<T>) -> T,
) -> Vec<T> {
    loop {
        let regions = detect_loops(&items);
        let mut applied = false;
        for r in regions.iter().rev() {
            let tpl = match summarize(&r.bodies(&items)) {
                Ok(t) => t,
                Err(_) => continue,
            };
            if !within_table_cap(&tpl) {
                continue;
            }
            items.splice(r.entry..r.exit, [make_loop(tpl)]);
            applied = true;
        }
        if !applied {
            return items;
        }
    }
}

#[cfg(test)]
mod tests;
