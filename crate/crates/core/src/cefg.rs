//! Contract-centric execution flow graph.
//!
//! Every context activation segment of the trace becomes a node candidate;
//! candidates sharing the same ⟨depth, address, call_type, input⟩ key are
//! aggregated into one node holding all their instruction blocks. Edges carry
//! the transition opcode observed at the boundary step.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::opcode::Op;
use crate::primitives::{word_to_address, Address, CalldataRef};
use crate::trace::{tags, TraceError, TraceStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeKey {
    pub depth: u32,
    pub address: Address,
    pub call_type: Op,
    pub input: CalldataRef,
}

/// Range of step indices `[start, end)` executed inside one activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRef {
    pub start: usize,
    pub end: usize,
    /// The block's frame (or an enclosing one) reverted or faulted.
    pub reverted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CefgNode {
    pub key: NodeKey,
    /// Instruction blocks in execution order. Empty for static contexts:
    /// they cannot modify state, so their instructions are excluded, while
    /// the node and its edges keep the call shape visible.
    pub ins: Vec<BlockRef>,
    pub static_context: bool,
    /// True when every activation of this context reverted.
    pub reverted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CefgEdge {
    pub from: usize,
    pub to: usize,
    pub op: Op,
    /// Step index of the boundary instruction.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cefg {
    pub nodes: Vec<CefgNode>,
    pub edges: Vec<CefgEdge>,
    pub root: usize,
}

impl Cefg {
    pub fn node(&self, id: usize) -> &CefgNode {
        &self.nodes[id]
    }
}

struct Frame {
    key: NodeKey,
    is_static: bool,
}

/// Build the aggregated cEFG from a validated trace stream.
pub fn build_cefg(stream: &TraceStream) -> Result<Cefg, TraceError> {
    let (segments, seg_edges) = build_segments(stream)?;
    let (nodes, remap) = aggregate(segments);
    let edges = seg_edges
        .into_iter()
        .map(|(from, to, op, step)| CefgEdge {
            from: remap[from],
            to: remap[to],
            op,
            step,
        })
        .collect();
    Ok(Cefg {
        nodes,
        edges,
        root: if remap.is_empty() { 0 } else { remap[0] },
    })
}

type SegEdge = (usize, usize, Op, usize);

fn build_segments(stream: &TraceStream) -> Result<(Vec<CefgNode>, Vec<SegEdge>), TraceError> {
    let mut segments: Vec<CefgNode> = Vec::new();
    let mut edges: Vec<SegEdge> = Vec::new();
    if stream.steps.is_empty() {
        return Ok((segments, edges));
    }

    let root_key = NodeKey {
        depth: 1,
        address: stream.initial_recipient,
        call_type: Op::Call,
        input: stream.root_input,
    };
    let mut frames: Vec<Frame> = vec![Frame {
        key: root_key,
        is_static: false,
    }];
    // currently active segment per frame-stack level
    let mut active_seg: Vec<usize> = Vec::new();

    let open_segment = |segments: &mut Vec<CefgNode>, frame: &Frame, start: usize, reverted: bool| {
        segments.push(CefgNode {
            key: frame.key,
            ins: if frame.is_static {
                Vec::new()
            } else {
                vec![BlockRef {
                    start,
                    end: start,
                    reverted,
                }]
            },
            static_context: frame.is_static,
            reverted,
        });
        segments.len() - 1
    };

    let first_reverted = stream.steps[0].frame_reverted;
    active_seg.push(open_segment(&mut segments, &frames[0], 0, first_reverted));

    let mut prev_depth = stream.steps[0].step.depth;
    for (i, rs) in stream.steps.iter().enumerate() {
        let d = rs.step.depth;
        if i > 0 && d == prev_depth + 1 {
            // the previous step was the context-switching instruction
            let call = &stream.steps[i - 1];
            let call_op = call.step.op;
            if !call_op.enters_context() {
                return Err(TraceError::DepthDiscontinuity {
                    step: i,
                    from: prev_depth,
                    to: d,
                });
            }
            let address = if call_op.is_create() {
                call.recorded_word(tags::CREATED)
                    .map(|w| word_to_address(&w))
                    .unwrap_or_default()
            } else {
                call.recorded_word(tags::TARGET)
                    .map(|w| word_to_address(&w))
                    .unwrap_or_default()
            };
            let input = call
                .recorded_bytes(tags::INPUT)
                .map(|b| CalldataRef {
                    digest: crate::primitives::keccak256(b),
                    len: b.len() as u32,
                })
                .unwrap_or_else(CalldataRef::empty);
            let parent_static = frames.last().unwrap().is_static;
            let frame = Frame {
                key: NodeKey {
                    depth: d,
                    address,
                    call_type: call_op,
                    input,
                },
                is_static: parent_static || call_op == Op::Staticcall,
            };
            let seg = open_segment(&mut segments, &frame, i, rs.frame_reverted);
            edges.push((*active_seg.last().unwrap(), seg, call_op, i - 1));
            frames.push(frame);
            active_seg.push(seg);
        } else if i > 0 && d + 1 == prev_depth {
            // frame pop: the previous step halted the child context
            let halt = &stream.steps[i - 1];
            let halt_op = if halt.step.op.is_halt() {
                halt.step.op
            } else {
                Op::Revert // faulted frame: treated as reverted
            };
            let child_seg = active_seg.pop().unwrap();
            frames.pop();
            let frame = frames.last().unwrap();
            let seg = open_segment(&mut segments, frame, i, rs.frame_reverted);
            edges.push((child_seg, seg, halt_op, i - 1));
            *active_seg.last_mut().unwrap() = seg;
        } else if i > 0 && d != prev_depth {
            return Err(TraceError::DepthDiscontinuity {
                step: i,
                from: prev_depth,
                to: d,
            });
        }
        prev_depth = d;

        let seg = *active_seg.last().unwrap();
        if let Some(block) = segments[seg].ins.last_mut() {
            block.end = i + 1;
        }
    }
    Ok((segments, edges))
}

/// Merge nodes with identical keys, preserving block order by step index.
/// Returns the merged nodes plus the old-index → new-index mapping.
/// Aggregation is idempotent.
pub fn aggregate(nodes: Vec<CefgNode>) -> (Vec<CefgNode>, Vec<usize>) {
    let mut merged: Vec<CefgNode> = Vec::new();
    let mut index: HashMap<NodeKey, usize> = HashMap::new();
    let mut remap = Vec::with_capacity(nodes.len());
    for node in nodes {
        match index.get(&node.key) {
            Some(&id) => {
                let slot = &mut merged[id];
                slot.ins.extend(node.ins);
                slot.static_context |= node.static_context;
                slot.reverted &= node.reverted;
                remap.push(id);
            }
            None => {
                index.insert(node.key, merged.len());
                remap.push(merged.len());
                merged.push(node);
            }
        }
    }
    for node in &mut merged {
        node.ins.sort_by_key(|b| b.start);
        node.ins.retain(|b| b.end > b.start);
    }
    (merged, remap)
}

#[cfg(test)]
mod tests;
