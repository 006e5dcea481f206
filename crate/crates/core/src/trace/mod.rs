//! Trace ingestion: parse raw execution traces into a normalized step stream
//! with selective argument recording applied.
//!
//! Two input formats are supported: Geth `debug_traceTransaction` structLogs
//! and the native line-JSON format documented in `docs/native-trace-format.md`.
//! The native format is canonical for fixtures because structLogs omit
//! per-call return data unless memory capture is enabled.

mod geth;
mod native;
mod record;

pub use record::{classify_opcode, record_step, Category};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opcode::Op;
use crate::primitives::{Address, CalldataRef, CalldataTable, H256, U256};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("depth discontinuity at step {step}: {from} -> {to}")]
    DepthDiscontinuity { step: usize, from: u32, to: u32 },
    #[error("unknown opcode mnemonic {0:?}")]
    UnknownOpcode(String),
    #[error("insufficient captured stack at step {step}: {op} needs {needed} words, got {got}")]
    InsufficientStack {
        step: usize,
        op: Op,
        needed: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    GethStructLogs,
    Native,
}

/// One executed instruction as captured by the tracer.
///
/// `stack_top` holds up to K topmost pre-execution stack words, top first.
/// The one exception is PUSH: its pre-stack contributes nothing, so the
/// tracer stores the pushed immediate as the first captured word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub pc: u64,
    pub op: Op,
    pub depth: u32,
    pub gas: u64,
    pub stack_top: Vec<U256>,
    pub memory_slice: Option<MemorySlice>,
    pub context_address: Address,
    /// Populated when the client reported a per-step fault (e.g. out of gas).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Byte range referenced by an instruction, with the bytes as captured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemorySlice {
    pub offset: u64,
    #[serde(with = "crate::serde_hex")]
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecordedValue {
    Word(U256),
    Bytes {
        #[serde(rename = "bytes", with = "crate::serde_hex")]
        data: Vec<u8>,
    },
}

impl RecordedValue {
    pub fn word(v: u64) -> Self {
        RecordedValue::Word(U256::from(v))
    }

    pub fn bytes(data: Vec<u8>) -> Self {
        RecordedValue::Bytes { data }
    }

    pub fn as_word(&self) -> Option<U256> {
        match self {
            RecordedValue::Word(w) => Some(*w),
            RecordedValue::Bytes { .. } => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            RecordedValue::Word(_) => None,
            RecordedValue::Bytes { data } => Some(data),
        }
    }
}

/// A step plus the concrete values selectively recorded for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedStep {
    pub step: TraceStep,
    pub category: Category,
    pub recorded: Vec<(String, RecordedValue)>,
    /// True when this step's frame (or an enclosing one) exited via
    /// REVERT/INVALID or faulted; such steps are excluded from lifting but
    /// retained for trace alignment.
    #[serde(default)]
    pub frame_reverted: bool,
}

impl RecordedStep {
    pub fn recorded_word(&self, tag: &str) -> Option<U256> {
        self.recorded
            .iter()
            .find(|(t, _)| t == tag)
            .and_then(|(_, v)| v.as_word())
    }

    pub fn recorded_bytes(&self, tag: &str) -> Option<&[u8]> {
        self.recorded
            .iter()
            .find(|(t, _)| t == tag)
            .and_then(|(_, v)| v.as_bytes())
    }

    pub(crate) fn record(&mut self, tag: &str, value: RecordedValue) {
        if let Some(slot) = self.recorded.iter_mut().find(|(t, _)| t == tag) {
            slot.1 = value;
        } else {
            self.recorded.push((tag.to_string(), value));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step_index: usize,
    pub emitter: Address,
    pub topics: Vec<H256>,
    #[serde(with = "crate::serde_hex")]
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueTransfer {
    pub step_index: usize,
    pub from: Address,
    pub to: Address,
    pub amount_wei: U256,
    pub op: Op,
}

/// Normalized execution trace of one transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStream {
    pub tx_hash: H256,
    pub chain_id: u64,
    pub block_number: u64,
    pub sender: Address,
    pub initial_recipient: Address,
    pub steps: Vec<RecordedStep>,
    pub logs: Vec<LogRecord>,
    pub value_transfers: Vec<ValueTransfer>,
    /// Transaction-level calldata.
    pub root_input: CalldataRef,
    /// Transaction-level value in wei.
    pub root_value: U256,
    /// Full calldata bytes keyed by digest; inputs above the spill bound
    /// never travel inline with a node key.
    pub calldata: CalldataTable,
}

impl TraceStream {
    pub fn input_bytes(&self, r: &CalldataRef) -> &[u8] {
        self.calldata.resolve(r).unwrap_or(&[])
    }
}

/// Per-step tag constants used by the recorder.
pub mod tags {
    pub const IMM: &str = "imm";
    pub const TARGET: &str = "target";
    pub const COND: &str = "cond";
    pub const GAS: &str = "gas";
    pub const VALUE: &str = "value";
    pub const ARGS_OFFSET: &str = "args_offset";
    pub const ARGS_LENGTH: &str = "args_length";
    pub const RET_OFFSET: &str = "ret_offset";
    pub const RET_LENGTH: &str = "ret_length";
    pub const SUCCESS: &str = "success";
    pub const RETURN_DATA: &str = "return_data";
    pub const INPUT: &str = "input";
    pub const SLOT: &str = "slot";
    pub const OFFSET: &str = "offset";
    pub const DEST_OFFSET: &str = "dest_offset";
    pub const LENGTH: &str = "length";
    pub const ADDR: &str = "addr";
    pub const SALT: &str = "salt";
    pub const CREATED: &str = "created";
}

/// Parse a raw trace in the declared format into a validated stream.
pub fn parse_trace(raw: &[u8], format: TraceFormat) -> Result<TraceStream, TraceError> {
    let mut stream = match format {
        TraceFormat::GethStructLogs => geth::parse(raw)?,
        TraceFormat::Native => native::parse(raw)?,
    };
    validate_depths(&stream)?;
    enrich(&mut stream)?;
    patch_create_addresses(&mut stream);
    flag_reverted_frames(&mut stream);
    derive_value_transfers(&mut stream);
    Ok(stream)
}

/// Assign the created contract address (only known at frame exit) to steps
/// inside CREATE/CREATE2 frames that were parsed with a placeholder.
fn patch_create_addresses(stream: &mut TraceStream) {
    let create_steps: Vec<usize> = stream
        .steps
        .iter()
        .enumerate()
        .filter(|(_, rs)| rs.step.op.is_create())
        .map(|(i, _)| i)
        .collect();
    for call_step in create_steps {
        let Some(created) = stream.steps[call_step].recorded_word(tags::CREATED) else {
            continue;
        };
        let created = crate::primitives::word_to_address(&created);
        let depth = stream.steps[call_step].step.depth;
        let mut j = call_step + 1;
        while j < stream.steps.len() && stream.steps[j].step.depth > depth {
            if stream.steps[j].step.depth == depth + 1
                && stream.steps[j].step.context_address.is_zero()
            {
                stream.steps[j].step.context_address = created;
            }
            j += 1;
        }
    }
}

/// Serialize a stream back out in the native line-JSON format.
pub fn write_native(stream: &TraceStream) -> String {
    native::write(stream)
}

fn validate_depths(stream: &TraceStream) -> Result<(), TraceError> {
    let mut prev_depth = None::<u32>;
    for (i, rs) in stream.steps.iter().enumerate() {
        let d = rs.step.depth;
        if d == 0 {
            return Err(TraceError::MalformedTrace(format!("step {i}: depth 0 (must be 1-based)")));
        }
        match prev_depth {
            None => {
                if d != 1 {
                    return Err(TraceError::DepthDiscontinuity { step: i, from: 1, to: d });
                }
            }
            Some(p) => {
                if d > p + 1 || (d < p && p - d > 1) {
                    return Err(TraceError::DepthDiscontinuity { step: i, from: p, to: d });
                }
                if d == p + 1 && !stream.steps[i - 1].step.op.enters_context() {
                    return Err(TraceError::DepthDiscontinuity { step: i, from: p, to: d });
                }
            }
        }
        prev_depth = Some(d);
    }
    Ok(())
}

fn next_at_depth(steps: &[RecordedStep], from: usize, depth: u32) -> Option<usize> {
    (from..steps.len()).find(|&j| steps[j].step.depth == depth)
}

fn result_word(steps: &[RecordedStep], from: usize, depth: u32) -> Option<U256> {
    next_at_depth(steps, from, depth).and_then(|j| steps[j].step.stack_top.first().copied())
}

/// Fill in result-type recorded values that need a neighboring step: PUSH
/// immediates, load results, and call-family success flags. Explicit values
/// from the native format are left untouched.
fn enrich(stream: &mut TraceStream) -> Result<(), TraceError> {
    let n = stream.steps.len();
    for i in 0..n {
        let (op, depth) = (stream.steps[i].step.op, stream.steps[i].step.depth);
        match op {
            Op::Push(_) => {
                // normalize: the captured word for a PUSH is its immediate
                if stream.steps[i].step.stack_top.is_empty() {
                    if let Some(v) = result_word(&stream.steps, i + 1, depth) {
                        stream.steps[i].step.stack_top.push(v);
                    }
                }
                if stream.steps[i].recorded_word(tags::IMM).is_none() {
                    let rec = record_step(&stream.steps[i].step, Category::Constants)
                        .map_err(|e| at_step(e, i))?;
                    stream.steps[i].recorded = merge(stream.steps[i].recorded.clone(), rec.recorded);
                    stream.steps[i].category = Category::Constants;
                }
            }
            Op::Sload | Op::Tload | Op::Calldataload | Op::Calldatasize | Op::Codesize
            | Op::Extcodesize | Op::Returndatasize => {
                if stream.steps[i].recorded_word(tags::VALUE).is_none() {
                    if let Some(v) = result_word(&stream.steps, i + 1, depth) {
                        stream.steps[i].record(tags::VALUE, RecordedValue::Word(v));
                    }
                }
            }
            _ if op.is_call_family() || op.is_create() => {
                // input bytes from the captured memory slice when absent
                if stream.steps[i].recorded_bytes(tags::INPUT).is_none() {
                    if let Some(ms) = stream.steps[i].step.memory_slice.clone() {
                        stream.steps[i].record(tags::INPUT, RecordedValue::bytes(ms.bytes));
                    }
                }
                // success flag / created address from the step after the
                // child frame returns
                let wants_success = stream.steps[i].recorded_word(tags::SUCCESS).is_none();
                let wants_created =
                    op.is_create() && stream.steps[i].recorded_word(tags::CREATED).is_none();
                if wants_success || wants_created {
                    if let Some(v) = result_word(&stream.steps, i + 1, depth) {
                        if op.is_create() {
                            if wants_created {
                                stream.steps[i].record(tags::CREATED, RecordedValue::Word(v));
                            }
                            if wants_success {
                                let ok = !v.is_zero();
                                stream.steps[i].record(tags::SUCCESS, RecordedValue::word(ok as u64));
                            }
                        } else if wants_success {
                            stream.steps[i].record(tags::SUCCESS, RecordedValue::Word(v));
                        }
                    }
                }
                // return data from the child frame's halt step, when captured
                if stream.steps[i].recorded_bytes(tags::RETURN_DATA).is_none()
                    && i + 1 < n
                    && stream.steps[i + 1].step.depth == depth + 1
                {
                    let mut j = i + 1;
                    while j < n && stream.steps[j].step.depth > depth {
                        j += 1;
                    }
                    let last = j - 1;
                    if matches!(stream.steps[last].step.op, Op::Return | Op::Revert) {
                        if let Some(ms) = stream.steps[last].step.memory_slice.clone() {
                            stream.steps[i].record(tags::RETURN_DATA, RecordedValue::bytes(ms.bytes));
                        }
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn merge(
    mut base: Vec<(String, RecordedValue)>,
    extra: Vec<(String, RecordedValue)>,
) -> Vec<(String, RecordedValue)> {
    for (tag, v) in extra {
        if !base.iter().any(|(t, _)| *t == tag) {
            base.push((tag, v));
        }
    }
    base
}

fn at_step(e: TraceError, i: usize) -> TraceError {
    match e {
        TraceError::InsufficientStack { op, needed, got, .. } => {
            TraceError::InsufficientStack { step: i, op, needed, got }
        }
        other => other,
    }
}

/// Mark every step whose own frame, or any enclosing frame, exited via
/// REVERT/INVALID or a reported fault.
fn flag_reverted_frames(stream: &mut TraceStream) {
    let n = stream.steps.len();
    // frame id per step, frames as (parent, reverted)
    let mut frame_of = vec![0usize; n];
    let mut frames: Vec<(Option<usize>, bool)> = vec![(None, false)];
    let mut stack = vec![0usize];
    let mut prev_depth = 1u32;
    for i in 0..n {
        let d = stream.steps[i].step.depth;
        if i > 0 {
            if d == prev_depth + 1 {
                frames.push((Some(*stack.last().unwrap()), false));
                stack.push(frames.len() - 1);
            } else if d + 1 == prev_depth {
                stack.pop();
            }
        }
        prev_depth = d;
        let fid = *stack.last().unwrap();
        frame_of[i] = fid;
        let s = &stream.steps[i].step;
        if matches!(s.op, Op::Revert | Op::Invalid) || s.error.is_some() {
            frames[fid].1 = true;
        }
    }
    let effective_reverted = |mut fid: usize| -> bool {
        loop {
            if frames[fid].1 {
                return true;
            }
            match frames[fid].0 {
                Some(p) => fid = p,
                None => return false,
            }
        }
    };
    for i in 0..n {
        stream.steps[i].frame_reverted = effective_reverted(frame_of[i]);
    }
}

/// Derive native value transfers from value-carrying call steps when the
/// source format did not carry explicit transfer records.
fn derive_value_transfers(stream: &mut TraceStream) {
    if !stream.value_transfers.is_empty() {
        return;
    }
    let mut transfers = Vec::new();
    if !stream.root_value.is_zero() {
        transfers.push(ValueTransfer {
            step_index: 0,
            from: stream.sender,
            to: stream.initial_recipient,
            amount_wei: stream.root_value,
            op: Op::Call,
        });
    }
    for (i, rs) in stream.steps.iter().enumerate() {
        if rs.frame_reverted {
            continue;
        }
        if matches!(rs.step.op, Op::Call | Op::Callcode) {
            let value = rs.recorded_word(tags::VALUE).unwrap_or_default();
            let ok = rs.recorded_word(tags::SUCCESS).map(|v| !v.is_zero()).unwrap_or(true);
            if !value.is_zero() && ok {
                if let Some(target) = rs.recorded_word(tags::TARGET) {
                    transfers.push(ValueTransfer {
                        step_index: i,
                        from: rs.step.context_address,
                        to: crate::primitives::word_to_address(&target),
                        amount_wei: value,
                        op: rs.step.op,
                    });
                }
            }
        }
    }
    stream.value_transfers = transfers;
}

#[cfg(test)]
mod tests;
