//! The native line-JSON trace format. One JSON object per line; the first
//! line is the transaction header, followed by `step`, `log`, and `transfer`
//! records in execution order. See `docs/native-trace-format.md`.

use serde::{Deserialize, Serialize};

use super::{
    classify_opcode, record_step, LogRecord, RecordedStep, RecordedValue, TraceError, TraceStep,
    TraceStream, ValueTransfer,
};
use crate::opcode::Op;
use crate::primitives::{Address, CalldataTable, H256, U256};

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Meta(Meta),
    Step(StepLine),
    Log(LogLine),
    Transfer(TransferLine),
}

#[derive(Serialize, Deserialize)]
struct Meta {
    tx_hash: H256,
    chain_id: u64,
    block_number: u64,
    sender: Address,
    recipient: Address,
    #[serde(default, with = "crate::serde_hex")]
    input: Vec<u8>,
    #[serde(default)]
    value: U256,
}

#[derive(Serialize, Deserialize)]
struct StepLine {
    pc: u64,
    op: Op,
    depth: u32,
    gas: u64,
    addr: Address,
    #[serde(default)]
    stack: Vec<U256>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    recorded: Vec<(String, RecordedValue)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    memory: Option<super::MemorySlice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct LogLine {
    emitter: Address,
    topics: Vec<H256>,
    #[serde(default, with = "crate::serde_hex")]
    data: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct TransferLine {
    from: Address,
    to: Address,
    value: U256,
    op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<usize>,
}

pub fn parse(raw: &[u8]) -> Result<TraceStream, TraceError> {
    let text = std::str::from_utf8(raw)
        .map_err(|_| TraceError::MalformedTrace("native trace is not UTF-8".into()))?;
    let mut meta: Option<Meta> = None;
    let mut steps: Vec<RecordedStep> = Vec::new();
    let mut logs: Vec<LogRecord> = Vec::new();
    let mut transfers: Vec<ValueTransfer> = Vec::new();
    let mut calldata = CalldataTable::default();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(line)
            .map_err(|e| TraceError::MalformedTrace(format!("line {}: {e}", lineno + 1)))?;
        match parsed {
            Line::Meta(m) => {
                if meta.is_some() {
                    return Err(TraceError::MalformedTrace(format!(
                        "line {}: duplicate meta record",
                        lineno + 1
                    )));
                }
                meta = Some(m);
            }
            Line::Step(s) => {
                let step = TraceStep {
                    pc: s.pc,
                    op: s.op,
                    depth: s.depth,
                    gas: s.gas,
                    stack_top: s.stack,
                    memory_slice: s.memory,
                    context_address: s.addr,
                    error: s.error,
                };
                let category = classify_opcode(s.op)?;
                let rs = if s.recorded.is_empty() {
                    match record_step(&step, category) {
                        Ok(rs) => rs,
                        Err(_) if step.error.is_some() => RecordedStep {
                            step,
                            category: super::Category::None,
                            recorded: Vec::new(),
                            frame_reverted: false,
                        },
                        Err(e) => return Err(super::at_step(e, steps.len())),
                    }
                } else {
                    RecordedStep {
                        step,
                        category,
                        recorded: s.recorded,
                        frame_reverted: false,
                    }
                };
                if let Some(input) = rs.recorded_bytes(super::tags::INPUT) {
                    let input = input.to_vec();
                    calldata.intern(&input);
                }
                steps.push(rs);
            }
            Line::Log(l) => logs.push(LogRecord {
                step_index: l.step.unwrap_or(steps.len().saturating_sub(1)),
                emitter: l.emitter,
                topics: l.topics,
                data: l.data,
            }),
            Line::Transfer(t) => transfers.push(ValueTransfer {
                step_index: t.step.unwrap_or(steps.len().saturating_sub(1)),
                from: t.from,
                to: t.to,
                amount_wei: t.value,
                op: t.op,
            }),
        }
    }

    let meta = meta.ok_or_else(|| TraceError::MalformedTrace("missing meta record".into()))?;
    let root_input = calldata.intern(&meta.input);
    Ok(TraceStream {
        tx_hash: meta.tx_hash,
        chain_id: meta.chain_id,
        block_number: meta.block_number,
        sender: meta.sender,
        initial_recipient: meta.recipient,
        steps,
        logs,
        value_transfers: transfers,
        root_input,
        root_value: meta.value,
        calldata,
    })
}

pub fn write(stream: &TraceStream) -> String {
    let mut out = String::new();
    let meta = Line::Meta(Meta {
        tx_hash: stream.tx_hash,
        chain_id: stream.chain_id,
        block_number: stream.block_number,
        sender: stream.sender,
        recipient: stream.initial_recipient,
        input: stream.input_bytes(&stream.root_input).to_vec(),
        value: stream.root_value,
    });
    out.push_str(&serde_json::to_string(&meta).expect("serialize meta"));
    out.push('\n');

    let mut log_iter = stream.logs.iter().peekable();
    let mut transfer_iter = stream.value_transfers.iter().peekable();
    for (i, rs) in stream.steps.iter().enumerate() {
        let line = Line::Step(StepLine {
            pc: rs.step.pc,
            op: rs.step.op,
            depth: rs.step.depth,
            gas: rs.step.gas,
            addr: rs.step.context_address,
            stack: rs.step.stack_top.clone(),
            recorded: rs.recorded.clone(),
            memory: rs.step.memory_slice.clone(),
            error: rs.step.error.clone(),
        });
        out.push_str(&serde_json::to_string(&line).expect("serialize step"));
        out.push('\n');
        while log_iter.peek().is_some_and(|l| l.step_index <= i) {
            let l = log_iter.next().unwrap();
            let line = Line::Log(LogLine {
                emitter: l.emitter,
                topics: l.topics.clone(),
                data: l.data.clone(),
                step: Some(l.step_index),
            });
            out.push_str(&serde_json::to_string(&line).expect("serialize log"));
            out.push('\n');
        }
        while transfer_iter.peek().is_some_and(|t| t.step_index <= i) {
            let t = transfer_iter.next().unwrap();
            let line = Line::Transfer(TransferLine {
                from: t.from,
                to: t.to,
                value: t.amount_wei,
                op: t.op,
                step: Some(t.step_index),
            });
            out.push_str(&serde_json::to_string(&line).expect("serialize transfer"));
            out.push('\n');
        }
    }
    for l in log_iter {
        let line = Line::Log(LogLine {
            emitter: l.emitter,
            topics: l.topics.clone(),
            data: l.data.clone(),
            step: Some(l.step_index),
        });
        out.push_str(&serde_json::to_string(&line).expect("serialize log"));
        out.push('\n');
    }
    for t in transfer_iter {
        let line = Line::Transfer(TransferLine {
            from: t.from,
            to: t.to,
            value: t.amount_wei,
            op: t.op,
            step: Some(t.step_index),
        });
        out.push_str(&serde_json::to_string(&line).expect("serialize transfer"));
        out.push('\n');
    }
    out
}
