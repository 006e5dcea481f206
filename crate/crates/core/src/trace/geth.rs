//! Parser for Geth `debug_traceTransaction` structLogs JSON.
//!
//! The standard response carries no transaction metadata, so the parser also
//! accepts optional top-level extension fields (`txHash`, `sender`, `to`,
//! `blockNumber`, `chainId`, `value`, `input`) which the rpc module fills in
//! when it normalizes a fetched trace. Unknown fields are ignored.

use serde::Deserialize;

use super::{
    classify_opcode, record_step, tags, Category, MemorySlice, RecordedStep, RecordedValue,
    TraceError, TraceStep, TraceStream,
};
use crate::opcode::Op;
use crate::primitives::{
    word_to_address, Address, CalldataTable, H256, U256, DEFAULT_STACK_CAPTURE,
};

#[derive(Deserialize)]
struct Doc {
    #[serde(rename = "structLogs")]
    struct_logs: Vec<StructLog>,
    #[serde(rename = "txHash", default)]
    tx_hash: Option<H256>,
    #[serde(default)]
    sender: Option<Address>,
    #[serde(default)]
    to: Option<Address>,
    #[serde(rename = "blockNumber", default)]
    block_number: Option<u64>,
    #[serde(rename = "chainId", default)]
    chain_id: Option<u64>,
    #[serde(default)]
    value: Option<U256>,
    #[serde(default)]
    input: Option<String>,
}

#[derive(Deserialize)]
struct StructLog {
    pc: u64,
    op: String,
    gas: u64,
    depth: u32,
    #[serde(default)]
    stack: Option<Vec<String>>,
    #[serde(default)]
    memory: Option<Vec<String>>,
    #[serde(default)]
    error: Option<String>,
}

fn parse_word(s: &str) -> Result<U256, TraceError> {
    let t = s.strip_prefix("0x").unwrap_or(s);
    U256::from_str_radix(t, 16)
        .map_err(|_| TraceError::MalformedTrace(format!("bad stack word {s:?}")))
}

fn parse_hex(s: &str) -> Result<Vec<u8>, TraceError> {
    let t = s.strip_prefix("0x").unwrap_or(s);
    hex::decode(t).map_err(|_| TraceError::MalformedTrace(format!("bad hex string {s:?}")))
}

/// Memory range referenced by ops whose byte contents matter downstream.
fn referenced_range(op: Op, stack_top: &[U256]) -> Option<(usize, usize)> {
    let at = |i: usize| stack_top.get(i).map(|w| w.low_u64() as usize);
    match op {
        Op::Call | Op::Callcode => Some((at(3)?, at(4)?)),
        Op::Delegatecall | Op::Staticcall => Some((at(2)?, at(3)?)),
        Op::Return | Op::Revert => Some((at(0)?, at(1)?)),
        Op::Create => Some((at(1)?, at(2)?)),
        Op::Create2 => Some((at(1)?, at(2)?)),
        Op::Log(_) => Some((at(0)?, at(1)?)),
        _ => None,
    }
}

pub fn parse(raw: &[u8]) -> Result<TraceStream, TraceError> {
    let doc: Doc = serde_json::from_slice(raw)
        .map_err(|e| TraceError::MalformedTrace(format!("geth structLogs: {e}")))?;

    let sender = doc.sender.unwrap_or_default();
    let recipient = doc.to.unwrap_or_default();
    let mut calldata = CalldataTable::default();
    let root_input_bytes = match &doc.input {
        Some(s) => parse_hex(s)?,
        None => Vec::new(),
    };
    let root_input = calldata.intern(&root_input_bytes);

    let mut steps: Vec<RecordedStep> = Vec::with_capacity(doc.struct_logs.len());
    // context address per frame; CREATE frames get a placeholder patched
    // after their created address is known
    let mut addr_stack: Vec<Address> = vec![recipient];
    let mut prev_depth = 1u32;

    for (i, log) in doc.struct_logs.iter().enumerate() {
        let op = Op::parse_mnemonic(&log.op).ok_or_else(|| TraceError::UnknownOpcode(log.op.clone()))?;
        let full_stack: Vec<U256> = match &log.stack {
            Some(raw_stack) => {
                // geth lists bottom-to-top; we keep top-first
                let mut v = Vec::with_capacity(raw_stack.len());
                for s in raw_stack.iter().rev() {
                    v.push(parse_word(s)?);
                }
                v
            }
            None => Vec::new(),
        };

        // maintain the context-address stack
        if i > 0 {
            if log.depth == prev_depth + 1 {
                let caller_rs = steps.last().expect("depth increase on first step");
                let caller_addr = caller_rs.step.context_address;
                let child = match caller_rs.step.op {
                    Op::Call | Op::Staticcall => caller_rs
                        .recorded_word(tags::TARGET)
                        .map(|w| word_to_address(&w))
                        .unwrap_or_default(),
                    Op::Delegatecall | Op::Callcode => caller_addr,
                    Op::Create | Op::Create2 => Address::zero(),
                    _ => caller_addr,
                };
                addr_stack.push(child);
            } else if log.depth + 1 == prev_depth {
                addr_stack.pop();
                if addr_stack.is_empty() {
                    addr_stack.push(recipient);
                }
            }
        }
        prev_depth = log.depth;

        let memory_slice = match (&log.memory, referenced_range(op, &full_stack)) {
            (Some(rows), Some((off, len))) if len > 0 => {
                let mut mem = Vec::with_capacity(rows.len() * 32);
                for row in rows {
                    mem.extend_from_slice(&parse_hex(row)?);
                }
                let end = (off + len).min(mem.len());
                let mut bytes = if off < mem.len() { mem[off..end].to_vec() } else { Vec::new() };
                bytes.resize(len, 0);
                Some(MemorySlice { offset: off as u64, bytes })
            }
            _ => None,
        };

        let mut stack_top = full_stack;
        stack_top.truncate(DEFAULT_STACK_CAPTURE);
        if op.is_push() {
            stack_top.clear(); // replaced by the immediate during enrichment
        }

        let step = TraceStep {
            pc: log.pc,
            op,
            depth: log.depth,
            gas: log.gas,
            stack_top,
            memory_slice,
            context_address: *addr_stack.last().unwrap(),
            error: log.error.clone(),
        };
        let category = classify_opcode(op)?;
        let mut rs = if op.is_push() {
            // immediate is filled in by enrichment
            RecordedStep {
                step,
                category,
                recorded: Vec::new(),
                frame_reverted: false,
            }
        } else {
            match record_step(&step, category) {
                Ok(rs) => rs,
                Err(e) if step.error.is_some() => {
                    // partially captured faulted step: keep it, uncategorized
                    let _ = e;
                    RecordedStep {
                        step,
                        category: Category::None,
                        recorded: Vec::new(),
                        frame_reverted: false,
                    }
                }
                Err(e) => return Err(super::at_step(e, i)),
            }
        };
        // call input from captured memory
        if rs.step.op.enters_context() {
            if let Some(ms) = rs.step.memory_slice.clone() {
                rs.record(tags::INPUT, RecordedValue::bytes(ms.bytes));
            }
        }
        steps.push(rs);
    }

    let mut stream = TraceStream {
        tx_hash: doc.tx_hash.unwrap_or_default(),
        chain_id: doc.chain_id.unwrap_or_default(),
        block_number: doc.block_number.unwrap_or_default(),
        sender,
        initial_recipient: recipient,
        steps,
        logs: Vec::new(),
        value_transfers: Vec::new(),
        root_input,
        root_value: doc.value.unwrap_or_default(),
        calldata,
    };

    // intern per-call inputs so cEFG node identity works off digests
    let inputs: Vec<(usize, Vec<u8>)> = stream
        .steps
        .iter()
        .enumerate()
        .filter(|(_, rs)| rs.step.op.enters_context())
        .filter_map(|(i, rs)| rs.recorded_bytes(tags::INPUT).map(|b| (i, b.to_vec())))
        .collect();
    for (_, bytes) in &inputs {
        stream.calldata.intern(bytes);
    }

    Ok(stream)
}
