//! Selective argument recording: classify each opcode into one of the five
//! recorded categories and pull the category's operands off the captured
//! stack.

use serde::{Deserialize, Serialize};

use super::{tags, RecordedStep, RecordedValue, TraceError, TraceStep};
use crate::opcode::Op;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    Constants,
    ControlFlow,
    ExternalContext,
    InternalState,
    InputData,
    None,
}

/// Category assignment for every opcode. Total over known mnemonics;
/// `Unknown` bytes are rejected.
pub fn classify_opcode(op: Op) -> Result<Category, TraceError> {
    use Op::*;
    let cat = match op {
        Unknown(b) => return Err(TraceError::UnknownOpcode(format!("0x{b:02x}"))),
        Push(_) => Category::Constants,
        Jumpi => Category::ControlFlow,
        Extcodecopy | Codecopy | Codesize | Extcodesize | Call | Callcode | Delegatecall
        | Staticcall | Returndatasize | Returndatacopy => Category::ExternalContext,
        Sload | Tload => Category::InternalState,
        Calldatacopy | Calldatasize | Calldataload => Category::InputData,
        _ => Category::None,
    };
    Ok(cat)
}

fn need(step: &TraceStep, n: usize) -> Result<(), TraceError> {
    if step.stack_top.len() < n {
        return Err(TraceError::InsufficientStack {
            step: 0,
            op: step.op,
            needed: n,
            got: step.stack_top.len(),
        });
    }
    Ok(())
}

/// Build a `RecordedStep` by reading the category's operands from the
/// captured stack words. Result-type values (load results, success flags,
/// return data) are attached later by the ingestion enrichment pass.
pub fn record_step(step: &TraceStep, category: Category) -> Result<RecordedStep, TraceError> {
    let mut recorded: Vec<(String, RecordedValue)> = Vec::new();
    let s = &step.stack_top;
    let mut rec = |tag: &str, idx: usize| {
        recorded.push((tag.to_string(), RecordedValue::Word(s[idx])));
    };
    match category {
        Category::Constants => {
            need(step, 1)?;
            rec(tags::IMM, 0);
        }
        Category::ControlFlow => {
            need(step, 2)?;
            rec(tags::TARGET, 0);
            rec(tags::COND, 1);
        }
        Category::ExternalContext => match step.op {
            Op::Call | Op::Callcode => {
                need(step, 7)?;
                rec(tags::GAS, 0);
                rec(tags::TARGET, 1);
                rec(tags::VALUE, 2);
                rec(tags::ARGS_OFFSET, 3);
                rec(tags::ARGS_LENGTH, 4);
                rec(tags::RET_OFFSET, 5);
                rec(tags::RET_LENGTH, 6);
            }
            Op::Delegatecall | Op::Staticcall => {
                need(step, 6)?;
                rec(tags::GAS, 0);
                rec(tags::TARGET, 1);
                rec(tags::ARGS_OFFSET, 2);
                rec(tags::ARGS_LENGTH, 3);
                rec(tags::RET_OFFSET, 4);
                rec(tags::RET_LENGTH, 5);
            }
            Op::Extcodesize => {
                need(step, 1)?;
                rec(tags::ADDR, 0);
            }
            Op::Extcodecopy => {
                need(step, 4)?;
                rec(tags::ADDR, 0);
                rec(tags::DEST_OFFSET, 1);
                rec(tags::OFFSET, 2);
                rec(tags::LENGTH, 3);
            }
            Op::Codecopy | Op::Returndatacopy => {
                need(step, 3)?;
                rec(tags::DEST_OFFSET, 0);
                rec(tags::OFFSET, 1);
                rec(tags::LENGTH, 2);
            }
            // CODESIZE / RETURNDATASIZE take no operands; their result is
            // attached by enrichment under the "value" tag
            _ => {}
        },
        Category::InternalState => {
            need(step, 1)?;
            rec(tags::SLOT, 0);
        }
        Category::InputData => match step.op {
            Op::Calldataload => {
                need(step, 1)?;
                rec(tags::OFFSET, 0);
            }
            Op::Calldatacopy => {
                need(step, 3)?;
                rec(tags::DEST_OFFSET, 0);
                rec(tags::OFFSET, 1);
                rec(tags::LENGTH, 2);
            }
            // CALLDATASIZE: result attached by enrichment
            _ => {}
        },
        Category::None => {}
    }
    // CREATE family is not one of the five categories but still needs its
    // operands for context reconstruction; callers classify it None.
    if step.op.is_create() && matches!(category, Category::None) {
        need(step, 3)?;
        recorded.push(("value".into(), RecordedValue::Word(s[0])));
        recorded.push((tags::OFFSET.into(), RecordedValue::Word(s[1])));
        recorded.push((tags::LENGTH.into(), RecordedValue::Word(s[2])));
        if step.op == Op::Create2 {
            need(step, 4)?;
            recorded.push((tags::SALT.into(), RecordedValue::Word(s[3])));
        }
    }
    Ok(RecordedStep {
        step: step.clone(),
        category,
        recorded,
        frame_reverted: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{Address, U256};

    fn step(op: Op, stack: Vec<u64>) -> TraceStep {
        TraceStep {
            pc: 0,
            op,
            depth: 1,
            gas: 1_000_000,
            stack_top: stack.into_iter().map(U256::from).collect(),
            memory_slice: None,
            context_address: Address::zero(),
            error: None,
        }
    }

    #[test]
    fn push_records_immediate() {
        let s = step(Op::Push(1), vec![0x80]);
        let r = record_step(&s, Category::Constants).unwrap();
        assert_eq!(r.recorded, vec![("imm".to_string(), RecordedValue::word(0x80))]);
    }

    #[test]
    fn jumpi_records_target_and_cond() {
        let s = step(Op::Jumpi, vec![0x4f, 1]);
        let r = record_step(&s, Category::ControlFlow).unwrap();
        assert_eq!(r.recorded_word("target"), Some(U256::from(0x4f)));
        assert_eq!(r.recorded_word("cond"), Some(U256::from(1)));
        assert_eq!(r.recorded.len(), 2);
    }

    #[test]
    fn undercaptured_call_is_insufficient_stack() {
        let s = step(Op::Call, vec![1, 2]);
        let err = record_step(&s, Category::ExternalContext).unwrap_err();
        assert!(matches!(err, TraceError::InsufficientStack { needed: 7, got: 2, .. }));
    }

    #[test]
    fn classification_matches_table() {
        assert!(matches!(classify_opcode(Op::Push(1)), Ok(Category::Constants)));
        assert!(matches!(classify_opcode(Op::Sload), Ok(Category::InternalState)));
        assert!(matches!(classify_opcode(Op::Add), Ok(Category::None)));
        assert!(matches!(classify_opcode(Op::Staticcall), Ok(Category::ExternalContext)));
        assert!(matches!(classify_opcode(Op::Calldatasize), Ok(Category::InputData)));
        assert!(classify_opcode(Op::Unknown(0x0c)).is_err());
    }

    #[test]
    fn classification_total_over_all_bytes() {
        for b in 0u16..=255 {
            let op = Op::from_byte(b as u8);
            match op {
                Op::Unknown(_) => assert!(classify_opcode(op).is_err()),
                _ => assert!(classify_opcode(op).is_ok()),
            }
        }
    }
}
