//! Sequential trace interpretation: a stack machine over the recorded steps
//! of one function, lifting each instruction into the paired domain and
//! emitting pseudocode statements.
//!
//! Branches follow the unique taken successor. Meaningful forward branches
//! nest the remainder of the function under an `if`; guard-style checks
//! (calldata size, call success, code/returndata size) stay flat with empty
//! bodies so repeated regions remain detectable; backward taken jumps emit
//! nothing — iteration structure is recovered by the compressor.

use std::time::Instant;

use super::expr::{Concrete, Expr, PairedValue};
use super::memory::{ConcreteMemoryMap, VarMap};
use super::stmt::{CallKind, PseudoStmt};
use super::{LiftError, LiftOptions};
use crate::opcode::Op;
use crate::primitives::{address_to_word, U256};
use crate::scope::FunctionTrace;
use crate::trace::{tags, RecordedStep, TraceStream};

/// Fall-through pc when the condition is zero, else the recorded target.
/// The untaken side is never explored.
pub fn follow_branch(jumpi: &RecordedStep) -> Result<u64, LiftError> {
    let cond = jumpi.recorded_word(tags::COND).ok_or(LiftError::UnboundValue {
        step: 0,
        what: "JUMPI condition not recorded".into(),
    })?;
    let target = jumpi.recorded_word(tags::TARGET).ok_or(LiftError::UnboundValue {
        step: 0,
        what: "JUMPI target not recorded".into(),
    })?;
    Ok(if cond.is_zero() {
        jumpi.step.pc + 1
    } else {
        target.low_u64()
    })
}

struct Frame {
    cond: PairedValue,
    stmts: Vec<PseudoStmt>,
    pc: u64,
    step: u64,
}

struct Engine<'a> {
    ft: &'a FunctionTrace,
    stream: &'a TraceStream,
    stack: Vec<PairedValue>,
    mem: ConcreteMemoryMap,
    vars: VarMap,
    root: Vec<PseudoStmt>,
    frames: Vec<Frame>,
    /// (call step, full return data) of the most recent completed call.
    returndata: Option<(u64, Option<Vec<u8>>)>,
    msize: u64,
    started: Instant,
    budget: std::time::Duration,
}

impl<'a> Engine<'a> {
    fn emit(&mut self, s: PseudoStmt) {
        match self.frames.last_mut() {
            Some(f) => f.stmts.push(s),
            None => self.root.push(s),
        }
    }

    fn pop(&mut self, step: usize, what: &str) -> Result<PairedValue, LiftError> {
        self.stack.pop().ok_or_else(|| LiftError::UnboundValue {
            step,
            what: format!("stack underflow at {what}"),
        })
    }

    fn concrete_u64(&self, pv: &PairedValue, step: usize, what: &str) -> Result<u64, LiftError> {
        let w = pv.concrete.as_word().ok_or_else(|| LiftError::UnboundValue {
            step,
            what: format!("{what} has no concrete binding"),
        })?;
        if w > U256::from(u32::MAX) {
            return Err(LiftError::UnboundValue {
                step,
                what: format!("{what} out of range: {w}"),
            });
        }
        Ok(w.low_u64())
    }

    fn touch(&mut self, end: u64) {
        let rounded = end.div_ceil(32) * 32;
        self.msize = self.msize.max(rounded);
    }

    fn mem_read(&mut self, offset: u64, len: u64, step: u64) -> PairedValue {
        self.touch(offset + len);
        self.mem.read(offset, len, step)
    }

    fn mem_write(&mut self, offset: u64, len: u64, value: PairedValue) {
        self.touch(offset + len);
        self.mem.write(offset, len, value);
        debug_assert!(self.mem.check_non_overlap());
    }
}

#[derive(PartialEq)]
enum CondClass {
    Trivial,
    Guard,
    Meaningful,
}

/// Guards test sizes and success flags (calldata size, returndata size,
/// code size, call success) — the checks a compiler emits around the logic
/// rather than the logic itself.
fn classify_condition(e: &Expr) -> CondClass {
    fn is_guard(e: &Expr) -> bool {
        match e {
            Expr::Const(_) | Expr::CalldataSize | Expr::CallSuccess { .. } | Expr::Mem0 => true,
            Expr::Env(op) => matches!(op, Op::Returndatasize | Op::Codesize | Op::Msize | Op::Gas),
            Expr::Unary(Op::Extcodesize, _) => true,
            Expr::Unary(_, a) => is_guard(&a.expr),
            Expr::Binary(_, a, b) => is_guard(&a.expr) && is_guard(&b.expr),
            Expr::Ternary(_, a, b, c) => {
                is_guard(&a.expr) && is_guard(&b.expr) && is_guard(&c.expr)
            }
            Expr::AddressCast(a) => is_guard(&a.expr),
            Expr::Slice { of, .. } => is_guard(&of.expr),
            _ => false,
        }
    }
    match e {
        Expr::Const(_) => CondClass::Trivial,
        _ if is_guard(e) => CondClass::Guard,
        _ => CondClass::Meaningful,
    }
}

/// Lift one function trace into pseudocode statements.
pub fn lift_function(
    ft: &FunctionTrace,
    stream: &TraceStream,
    opts: &LiftOptions,
) -> Result<Vec<PseudoStmt>, LiftError> {
    let mut eng = Engine {
        ft,
        stream,
        stack: Vec::new(),
        mem: ConcreteMemoryMap::new(),
        vars: VarMap::new(),
        root: Vec::new(),
        frames: Vec::new(),
        returndata: None,
        msize: 0,
        started: Instant::now(),
        budget: opts.time_budget,
    };

    let mut processed = 0u64;
    for block in ft.blocks.iter().filter(|b| !b.reverted) {
        for i in block.start..block.end {
            processed += 1;
            if processed % 1024 == 0 && eng.started.elapsed() > eng.budget {
                return Err(LiftError::LiftTimeout);
            }
            step(&mut eng, i)?;
        }
    }

    // close open branch bodies: statements after a taken branch belong to
    // its executed side; inner frames fold into their parent's tail first
    let mut root = eng.root;
    while let Some(frame) = eng.frames.pop() {
        let nested = PseudoStmt::IfTaken {
            cond: frame.cond,
            body: frame.stmts,
            pc: frame.pc,
            step: frame.step,
        };
        match eng.frames.last_mut() {
            Some(parent) => parent.stmts.push(nested),
            None => root.push(nested),
        }
    }
    Ok(root)
}

#[allow(clippy::too_many_lines)]
fn step(eng: &mut Engine, i: usize) -> Result<(), LiftError> {
    let rs = &eng.stream.steps[i];
    let op = rs.step.op;
    let pc = rs.step.pc;
    let si = i as u64;

    match op {
        Op::Push(_) => {
            let imm = rs.recorded_word(tags::IMM).ok_or_else(|| LiftError::UnboundValue {
                step: i,
                what: "PUSH immediate not recorded".into(),
            })?;
            eng.stack.push(PairedValue::constant(imm, si));
        }
        Op::Dup(n) => {
            let len = eng.stack.len();
            if len < n as usize {
                return Err(LiftError::UnboundValue {
                    step: i,
                    what: format!("stack underflow at DUP{n}"),
                });
            }
            let v = eng.stack[len - n as usize].clone();
            eng.stack.push(v);
        }
        Op::Swap(n) => {
            let len = eng.stack.len();
            if len < n as usize + 1 {
                return Err(LiftError::UnboundValue {
                    step: i,
                    what: format!("stack underflow at SWAP{n}"),
                });
            }
            eng.stack.swap(len - 1, len - 1 - n as usize);
        }
        Op::Pop => {
            eng.pop(i, "POP")?;
        }

        // arithmetic / comparison / bitwise
        Op::Add | Op::Mul | Op::Sub | Op::Div | Op::Sdiv | Op::Mod | Op::Smod | Op::Exp
        | Op::Signextend | Op::Lt | Op::Gt | Op::Slt | Op::Sgt | Op::Eq | Op::And | Op::Or
        | Op::Xor | Op::Byte | Op::Shl | Op::Shr | Op::Sar => {
            let a = eng.pop(i, "binary op")?;
            let b = eng.pop(i, "binary op")?;
            eng.stack.push(PairedValue::binary(op, a, b, si));
        }
        Op::Iszero | Op::Not => {
            let a = eng.pop(i, "unary op")?;
            eng.stack.push(PairedValue::unary(op, a, si));
        }
        Op::Addmod | Op::Mulmod => {
            let a = eng.pop(i, "modular op")?;
            let b = eng.pop(i, "modular op")?;
            let n = eng.pop(i, "modular op")?;
            eng.stack.push(PairedValue::ternary(op, a, b, n, si));
        }

        Op::Sha3 => {
            let off_pv = eng.pop(i, "SHA3 offset")?;
            let len_pv = eng.pop(i, "SHA3 length")?;
            let off = eng.concrete_u64(&off_pv, i, "SHA3 offset")?;
            let len = eng.concrete_u64(&len_pv, i, "SHA3 length")?;
            let pre = eng.mem_read(off, len, si);
            let parts = match pre.expr {
                Expr::Concat { parts } => parts,
                _ => vec![pre],
            };
            let mut pv = PairedValue::new(Expr::Keccak { parts }, Concrete::Unknown, si);
            pv.recompute_derived();
            eng.stack.push(pv);
        }

        // environment
        Op::Address => eng.stack.push(PairedValue::new(
            Expr::SelfAddr,
            Concrete::Word(address_to_word(&eng.ft.context_address)),
            si,
        )),
        Op::Origin => eng.stack.push(PairedValue::new(
            Expr::Origin,
            Concrete::Word(address_to_word(&eng.stream.sender)),
            si,
        )),
        Op::Caller => eng.stack.push(PairedValue::new(
            Expr::Caller,
            Concrete::Word(address_to_word(&eng.ft.msg_sender)),
            si,
        )),
        Op::Callvalue => eng.stack.push(PairedValue::new(
            Expr::CallValue,
            Concrete::Word(eng.ft.msg_value),
            si,
        )),
        Op::Chainid => eng.stack.push(PairedValue::new(
            Expr::Env(op),
            Concrete::Word(U256::from(eng.stream.chain_id)),
            si,
        )),
        Op::Number => eng.stack.push(PairedValue::new(
            Expr::Env(op),
            Concrete::Word(U256::from(eng.stream.block_number)),
            si,
        )),
        Op::Gasprice | Op::Coinbase | Op::Timestamp | Op::Prevrandao | Op::Gaslimit
        | Op::Selfbalance | Op::Basefee | Op::Blobbasefee => {
            eng.stack.push(PairedValue::new(Expr::Env(op), Concrete::Unknown, si));
        }
        Op::Pc => eng.stack.push(PairedValue::new(Expr::Env(op), Concrete::word(pc), si)),
        Op::Gas => eng.stack.push(PairedValue::new(
            Expr::Env(op),
            Concrete::Word(U256::from(rs.step.gas)),
            si,
        )),
        Op::Msize => {
            let m = eng.msize;
            eng.stack.push(PairedValue::new(Expr::Env(op), Concrete::word(m), si));
        }
        Op::Balance | Op::Extcodehash | Op::Blockhash | Op::Blobhash => {
            let a = eng.pop(i, "address operand")?;
            eng.stack.push(PairedValue::new(
                Expr::Unary(op, Box::new(a)),
                Concrete::Unknown,
                si,
            ));
        }
        Op::Extcodesize => {
            let a = eng.pop(i, "EXTCODESIZE address")?;
            let concrete = rs
                .recorded_word(tags::VALUE)
                .map(Concrete::Word)
                .unwrap_or(Concrete::Unknown);
            eng.stack
                .push(PairedValue::new(Expr::Unary(op, Box::new(a)), concrete, si));
        }
        Op::Codesize => {
            let concrete = rs
                .recorded_word(tags::VALUE)
                .map(Concrete::Word)
                .unwrap_or(Concrete::Unknown);
            eng.stack.push(PairedValue::new(Expr::Env(op), concrete, si));
        }

        // calldata
        Op::Calldataload => {
            let off_pv = eng.pop(i, "CALLDATALOAD offset")?;
            let off = eng.concrete_u64(&off_pv, i, "CALLDATALOAD offset")?;
            let data = eng.stream.input_bytes(&eng.ft.key.input);
            let concrete = if data.is_empty() {
                rs.recorded_word(tags::VALUE)
                    .map(Concrete::Word)
                    .unwrap_or(Concrete::word(0))
            } else {
                let mut buf = [0u8; 32];
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = data.get(off as usize + j).copied().unwrap_or(0);
                }
                Concrete::Word(U256::from_big_endian(&buf))
            };
            eng.stack
                .push(PairedValue::new(Expr::CalldataWord { offset: off }, concrete, si));
        }
        Op::Calldatasize => {
            let len = eng.ft.key.input.len as u64;
            eng.stack
                .push(PairedValue::new(Expr::CalldataSize, Concrete::word(len), si));
        }
        Op::Calldatacopy => {
            let dest_pv = eng.pop(i, "CALLDATACOPY dest")?;
            let off_pv = eng.pop(i, "CALLDATACOPY offset")?;
            let len_pv = eng.pop(i, "CALLDATACOPY length")?;
            let dest = eng.concrete_u64(&dest_pv, i, "CALLDATACOPY dest")?;
            let off = eng.concrete_u64(&off_pv, i, "CALLDATACOPY offset")?;
            let len = eng.concrete_u64(&len_pv, i, "CALLDATACOPY length")?;
            let data = eng.stream.input_bytes(&eng.ft.key.input);
            let mut bytes = vec![0u8; len as usize];
            for (j, b) in bytes.iter_mut().enumerate() {
                *b = data.get(off as usize + j).copied().unwrap_or(0);
            }
            let pv = PairedValue::new(
                Expr::CalldataRange { offset: off, len },
                Concrete::Bytes(bytes),
                si,
            );
            eng.mem_write(dest, len, pv.clone());
            eng.emit(PseudoStmt::MemWrite {
                offset: dest,
                len,
                value: pv,
                pc,
                step: si,
            });
        }

        // code
        Op::Codecopy | Op::Extcodecopy => {
            let addr = if op == Op::Extcodecopy {
                Some(Box::new(eng.pop(i, "EXTCODECOPY address")?))
            } else {
                None
            };
            let dest_pv = eng.pop(i, "CODECOPY dest")?;
            let off_pv = eng.pop(i, "CODECOPY offset")?;
            let len_pv = eng.pop(i, "CODECOPY length")?;
            let dest = eng.concrete_u64(&dest_pv, i, "CODECOPY dest")?;
            let off = eng.concrete_u64(&off_pv, i, "CODECOPY offset")?;
            let len = eng.concrete_u64(&len_pv, i, "CODECOPY length")?;
            let pv = PairedValue::new(
                Expr::CodeSlice { addr, offset: off, len },
                Concrete::Unknown,
                si,
            );
            eng.mem_write(dest, len, pv.clone());
            eng.emit(PseudoStmt::MemWrite {
                offset: dest,
                len,
                value: pv,
                pc,
                step: si,
            });
        }

        // return data
        Op::Returndatasize => {
            let concrete = rs
                .recorded_word(tags::VALUE)
                .map(Concrete::Word)
                .or_else(|| {
                    eng.returndata
                        .as_ref()
                        .and_then(|(_, d)| d.as_ref().map(|d| Concrete::word(d.len() as u64)))
                })
                .unwrap_or(Concrete::Unknown);
            eng.stack.push(PairedValue::new(Expr::Env(op), concrete, si));
        }
        Op::Returndatacopy => {
            let dest_pv = eng.pop(i, "RETURNDATACOPY dest")?;
            let off_pv = eng.pop(i, "RETURNDATACOPY offset")?;
            let len_pv = eng.pop(i, "RETURNDATACOPY length")?;
            let dest = eng.concrete_u64(&dest_pv, i, "RETURNDATACOPY dest")?;
            let off = eng.concrete_u64(&off_pv, i, "RETURNDATACOPY offset")?;
            let len = eng.concrete_u64(&len_pv, i, "RETURNDATACOPY length")?;
            let (call, data) = match &eng.returndata {
                Some((c, d)) => (*c, d.clone()),
                None => (si, None),
            };
            let concrete = match data {
                Some(d) => {
                    let mut bytes = vec![0u8; len as usize];
                    for (j, b) in bytes.iter_mut().enumerate() {
                        *b = d.get(off as usize + j).copied().unwrap_or(0);
                    }
                    Concrete::Bytes(bytes)
                }
                None => Concrete::Unknown,
            };
            let pv = PairedValue::new(Expr::ReturnData { call, offset: off, len }, concrete, si);
            eng.mem_write(dest, len, pv.clone());
            eng.emit(PseudoStmt::MemWrite {
                offset: dest,
                len,
                value: pv,
                pc,
                step: si,
            });
        }

        // memory
        Op::Mload => {
            let off_pv = eng.pop(i, "MLOAD offset")?;
            let off = eng.concrete_u64(&off_pv, i, "MLOAD offset")?;
            let val = eng.mem_read(off, 32, si);
            let var = eng.vars.fresh(val.clone());
            eng.emit(PseudoStmt::Assign {
                var,
                value: val.clone(),
                pc,
                step: si,
            });
            eng.stack.push(val);
        }
        Op::Mstore | Op::Mstore8 => {
            let off_pv = eng.pop(i, "MSTORE offset")?;
            let val = eng.pop(i, "MSTORE value")?;
            let off = eng.concrete_u64(&off_pv, i, "MSTORE offset")?;
            let (len, stored) = if op == Op::Mstore8 {
                (1u64, val.slice(31, 1, si))
            } else {
                (32u64, val)
            };
            eng.mem_write(off, len, stored.clone());
            eng.emit(PseudoStmt::MemWrite {
                offset: off,
                len,
                value: stored,
                pc,
                step: si,
            });
        }
        Op::Mcopy => {
            let dest_pv = eng.pop(i, "MCOPY dest")?;
            let src_pv = eng.pop(i, "MCOPY src")?;
            let len_pv = eng.pop(i, "MCOPY length")?;
            let dest = eng.concrete_u64(&dest_pv, i, "MCOPY dest")?;
            let src = eng.concrete_u64(&src_pv, i, "MCOPY src")?;
            let len = eng.concrete_u64(&len_pv, i, "MCOPY length")?;
            let v = eng.mem_read(src, len, si);
            eng.mem_write(dest, len, v.clone());
            eng.emit(PseudoStmt::MemWrite {
                offset: dest,
                len,
                value: v,
                pc,
                step: si,
            });
        }

        // storage
        Op::Sload | Op::Tload => {
            let slot = eng.pop(i, "SLOAD slot")?;
            let concrete = rs
                .recorded_word(tags::VALUE)
                .map(Concrete::Word)
                .unwrap_or(Concrete::Unknown);
            eng.stack.push(PairedValue::new(
                Expr::Storage {
                    slot: Box::new(slot),
                    transient: op == Op::Tload,
                },
                concrete,
                si,
            ));
        }
        Op::Sstore | Op::Tstore => {
            let slot = eng.pop(i, "SSTORE slot")?;
            let value = eng.pop(i, "SSTORE value")?;
            eng.emit(PseudoStmt::StorageWrite {
                transient: op == Op::Tstore,
                slot,
                value,
                pc,
                step: si,
            });
        }

        // control flow
        Op::Jump => {
            eng.pop(i, "JUMP target")?;
        }
        Op::Jumpdest => {}
        Op::Jumpi => {
            let target_pv = eng.pop(i, "JUMPI target")?;
            let cond_pv = eng.pop(i, "JUMPI condition")?;
            let cond_val = cond_pv
                .concrete
                .as_word()
                .or_else(|| rs.recorded_word(tags::COND))
                .ok_or_else(|| LiftError::UnboundValue {
                    step: i,
                    what: "JUMPI condition unbound".into(),
                })?;
            let target = target_pv
                .concrete
                .as_word()
                .or_else(|| rs.recorded_word(tags::TARGET))
                .map(|w| w.low_u64())
                .unwrap_or(0);
            let taken = !cond_val.is_zero();
            let semantic_cond = if taken {
                cond_pv
            } else {
                PairedValue::unary(Op::Iszero, cond_pv, si)
            };
            match classify_condition(&semantic_cond.expr) {
                CondClass::Trivial => {}
                CondClass::Guard => eng.emit(PseudoStmt::IfTaken {
                    cond: semantic_cond,
                    body: Vec::new(),
                    pc,
                    step: si,
                }),
                CondClass::Meaningful => {
                    if taken && target <= pc {
                        // loop back-edge: iteration structure is recovered
                        // by the compressor, not by nesting
                    } else {
                        eng.frames.push(Frame {
                            cond: semantic_cond,
                            stmts: Vec::new(),
                            pc,
                            step: si,
                        });
                    }
                }
            }
        }

        // calls
        Op::Call | Op::Callcode | Op::Delegatecall | Op::Staticcall => {
            let _gas = eng.pop(i, "call gas")?;
            let target = eng.pop(i, "call target")?;
            let value = if matches!(op, Op::Call | Op::Callcode) {
                Some(eng.pop(i, "call value")?)
            } else {
                None
            };
            let aoff_pv = eng.pop(i, "call args offset")?;
            let alen_pv = eng.pop(i, "call args length")?;
            let roff_pv = eng.pop(i, "call ret offset")?;
            let rlen_pv = eng.pop(i, "call ret length")?;
            let aoff = eng.concrete_u64(&aoff_pv, i, "call args offset")?;
            let alen = eng.concrete_u64(&alen_pv, i, "call args length")?;
            let roff = eng.concrete_u64(&roff_pv, i, "call ret offset")?;
            let rlen = eng.concrete_u64(&rlen_pv, i, "call ret length")?;

            let input = eng.mem_read(aoff, alen, si);
            let success = rs.recorded_word(tags::SUCCESS).map(|w| !w.is_zero());
            eng.emit(PseudoStmt::ExternalCall {
                kind: CallKind::from_op(op).expect("call op"),
                target,
                value,
                input,
                success,
                pc,
                step: si,
            });

            let success_word = rs.recorded_word(tags::SUCCESS).unwrap_or_else(U256::one);
            eng.stack.push(PairedValue::new(
                Expr::CallSuccess { call: si },
                Concrete::Word(success_word),
                si,
            ));

            let ret_bytes = rs.recorded_bytes(tags::RETURN_DATA).map(|b| b.to_vec());
            if rlen > 0 {
                let n = ret_bytes
                    .as_ref()
                    .map(|b| (b.len() as u64).min(rlen))
                    .unwrap_or(rlen);
                if n > 0 {
                    let concrete = match &ret_bytes {
                        Some(b) => Concrete::Bytes(b[..(n as usize).min(b.len())].to_vec()),
                        None => Concrete::Unknown,
                    };
                    let pv = PairedValue::new(
                        Expr::ReturnData { call: si, offset: 0, len: n },
                        concrete,
                        si,
                    );
                    eng.mem_write(roff, n, pv);
                }
            }
            eng.returndata = Some((si, ret_bytes));
        }

        Op::Create | Op::Create2 => {
            let value = eng.pop(i, "create value")?;
            let off_pv = eng.pop(i, "create offset")?;
            let len_pv = eng.pop(i, "create length")?;
            let salt = if op == Op::Create2 {
                Some(eng.pop(i, "create2 salt")?)
            } else {
                None
            };
            let off = eng.concrete_u64(&off_pv, i, "create offset")?;
            let len = eng.concrete_u64(&len_pv, i, "create length")?;
            let initcode = eng.mem_read(off, len, si);
            let created_word = rs.recorded_word(tags::CREATED);
            let created = created_word.map(|w| crate::primitives::word_to_address(&w));
            eng.emit(PseudoStmt::Create {
                create2: op == Op::Create2,
                value,
                initcode,
                salt,
                created,
                pc,
                step: si,
            });
            eng.stack.push(PairedValue::new(
                Expr::CreatedAddress { call: si },
                created_word.map(Concrete::Word).unwrap_or(Concrete::Unknown),
                si,
            ));
            eng.returndata = Some((si, Some(Vec::new())));
        }

        // logs
        Op::Log(n) => {
            let off_pv = eng.pop(i, "LOG offset")?;
            let len_pv = eng.pop(i, "LOG length")?;
            let off = eng.concrete_u64(&off_pv, i, "LOG offset")?;
            let len = eng.concrete_u64(&len_pv, i, "LOG length")?;
            let mut topics = Vec::with_capacity(n as usize);
            for _ in 0..n {
                topics.push(eng.pop(i, "LOG topic")?);
            }
            let data = eng.mem_read(off, len, si);
            eng.emit(PseudoStmt::Log {
                topics,
                data,
                pc,
                step: si,
            });
        }

        // halts
        Op::Return | Op::Revert => {
            let off_pv = eng.pop(i, "halt offset")?;
            let len_pv = eng.pop(i, "halt length")?;
            let off = eng.concrete_u64(&off_pv, i, "halt offset")?;
            let len = eng.concrete_u64(&len_pv, i, "halt length")?;
            let data = if len > 0 {
                Some(eng.mem_read(off, len, si))
            } else {
                None
            };
            if op == Op::Return {
                eng.emit(PseudoStmt::Return { data, pc, step: si });
            } else {
                eng.emit(PseudoStmt::Revert { data, pc, step: si });
            }
        }
        Op::Stop => eng.emit(PseudoStmt::Return {
            data: None,
            pc,
            step: si,
        }),
        Op::Invalid => eng.emit(PseudoStmt::Revert {
            data: None,
            pc,
            step: si,
        }),
        Op::Selfdestruct => {
            let beneficiary = eng.pop(i, "SELFDESTRUCT beneficiary")?;
            eng.emit(PseudoStmt::SelfDestruct {
                beneficiary,
                pc,
                step: si,
            });
        }

        Op::Unknown(b) => {
            return Err(LiftError::Unsupported {
                step: i,
                what: format!("opcode 0x{b:02x}"),
            });
        }
    }
    Ok(())
}
