//! Pseudocode statements emitted by the lifter, plus the canonical numeric
//! leaf walk used by loop summarization and template rendering.
//!
//! A "numeric leaf" is any scalar that may legitimately vary between loop
//! iterations while the statement shape stays fixed: constants, concrete
//! word bindings, offsets, call indices, variable ids, and provenance.
//! `for_each_leaf` visits them in one canonical order; everything that
//! reads, substitutes, or annotates leaves goes through it so the orders
//! can never drift apart.

use serde::{Deserialize, Serialize};

use super::expr::{Concrete, Expr, PairedValue};
use crate::compress::LoopTemplate;
use crate::opcode::Op;
use crate::primitives::{Address, U256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CallKind {
    Call,
    StaticCall,
    DelegateCall,
    CallCode,
}

impl CallKind {
    pub fn from_op(op: Op) -> Option<CallKind> {
        match op {
            Op::Call => Some(CallKind::Call),
            Op::Staticcall => Some(CallKind::StaticCall),
            Op::Delegatecall => Some(CallKind::DelegateCall),
            Op::Callcode => Some(CallKind::CallCode),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PseudoStmt {
    /// Local variable binding (one per memory load).
    Assign {
        var: u32,
        value: PairedValue,
        pc: u64,
        step: u64,
    },
    /// Memory write at a concrete range.
    MemWrite {
        offset: u64,
        len: u64,
        value: PairedValue,
        pc: u64,
        step: u64,
    },
    /// SSTORE/TSTORE.
    StorageWrite {
        transient: bool,
        slot: PairedValue,
        value: PairedValue,
        pc: u64,
        step: u64,
    },
    /// CALL/CALLCODE/DELEGATECALL/STATICCALL.
    ExternalCall {
        kind: CallKind,
        target: PairedValue,
        /// Attached value for CALL/CALLCODE.
        value: Option<PairedValue>,
        /// Raw input bytes as read from memory.
        input: PairedValue,
        /// Observed success flag.
        success: Option<bool>,
        pc: u64,
        step: u64,
    },
    /// CREATE/CREATE2.
    Create {
        create2: bool,
        value: PairedValue,
        initcode: PairedValue,
        salt: Option<PairedValue>,
        created: Option<Address>,
        pc: u64,
        step: u64,
    },
    /// The executed side of a conditional branch. `cond` is the semantic
    /// condition of the path that ran.
    IfTaken {
        cond: PairedValue,
        body: Vec<PseudoStmt>,
        pc: u64,
        step: u64,
    },
    /// Compressed loop region.
    Loop(LoopTemplate<PseudoStmt>),
    Log {
        topics: Vec<PairedValue>,
        data: PairedValue,
        pc: u64,
        step: u64,
    },
    Return {
        data: Option<PairedValue>,
        pc: u64,
        step: u64,
    },
    Revert {
        data: Option<PairedValue>,
        pc: u64,
        step: u64,
    },
    SelfDestruct {
        beneficiary: PairedValue,
        pc: u64,
        step: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// `Expr::Const` payload — rendered through `DisplayWord`.
    ConstVal,
    /// Non-derived `Concrete::Word` binding — rendered through `DisplayWord`.
    ConcreteWord,
    /// Offsets and lengths (calldata, return data, memory, slices).
    Offset,
    /// Step index of a producing call.
    CallIdx,
    VarId,
    Provenance,
}

impl PseudoStmt {
    pub fn kind_str(&self) -> &'static str {
        match self {
            PseudoStmt::Assign { .. } => "assign",
            PseudoStmt::MemWrite { .. } => "mem_write",
            PseudoStmt::StorageWrite { .. } => "assign",
            PseudoStmt::ExternalCall { kind, .. } => match kind {
                CallKind::Call | CallKind::CallCode => "external_call",
                CallKind::StaticCall => "static_call",
                CallKind::DelegateCall => "delegate_call",
            },
            PseudoStmt::Create { .. } => "create",
            PseudoStmt::IfTaken { .. } => "if_taken",
            PseudoStmt::Loop(_) => "loop",
            PseudoStmt::Log { .. } => "log",
            PseudoStmt::Return { .. } => "return",
            PseudoStmt::Revert { .. } => "revert",
            PseudoStmt::SelfDestruct { .. } => "external_call",
        }
    }

    pub fn step(&self) -> u64 {
        match self {
            PseudoStmt::Assign { step, .. }
            | PseudoStmt::MemWrite { step, .. }
            | PseudoStmt::StorageWrite { step, .. }
            | PseudoStmt::ExternalCall { step, .. }
            | PseudoStmt::Create { step, .. }
            | PseudoStmt::IfTaken { step, .. }
            | PseudoStmt::Log { step, .. }
            | PseudoStmt::Return { step, .. }
            | PseudoStmt::Revert { step, .. }
            | PseudoStmt::SelfDestruct { step, .. } => *step,
            PseudoStmt::Loop(_) => 0,
        }
    }

    /// Visit every numeric leaf in canonical pre-order.
    pub fn for_each_leaf(&mut self, f: &mut dyn FnMut(LeafKind, &mut U256)) {
        match self {
            PseudoStmt::Assign { var, value, .. } => {
                visit_u32(LeafKind::VarId, var, f);
                visit_pv(value, f);
            }
            PseudoStmt::MemWrite { offset, len, value, .. } => {
                visit_u64(LeafKind::Offset, offset, f);
                visit_u64(LeafKind::Offset, len, f);
                visit_pv(value, f);
            }
            PseudoStmt::StorageWrite { slot, value, .. } => {
                visit_pv(slot, f);
                visit_pv(value, f);
            }
            PseudoStmt::ExternalCall { target, value, input, step, .. } => {
                visit_pv(target, f);
                if let Some(v) = value {
                    visit_pv(v, f);
                }
                visit_pv(input, f);
                visit_u64(LeafKind::CallIdx, step, f);
            }
            PseudoStmt::Create { value, initcode, salt, .. } => {
                visit_pv(value, f);
                visit_pv(initcode, f);
                if let Some(s) = salt {
                    visit_pv(s, f);
                }
            }
            PseudoStmt::IfTaken { cond, body, .. } => {
                visit_pv(cond, f);
                for s in body {
                    s.for_each_leaf(f);
                }
            }
            // loops are opaque to outer summarization: two loop statements
            // either match exactly or not at all
            PseudoStmt::Loop(_) => {}
            PseudoStmt::Log { topics, data, .. } => {
                for t in topics {
                    visit_pv(t, f);
                }
                visit_pv(data, f);
            }
            PseudoStmt::Return { data, .. } | PseudoStmt::Revert { data, .. } => {
                if let Some(d) = data {
                    visit_pv(d, f);
                }
            }
            PseudoStmt::SelfDestruct { beneficiary, .. } => visit_pv(beneficiary, f),
        }
    }

    pub fn numeric_leaves(&self) -> Vec<U256> {
        let mut out = Vec::new();
        let mut clone = self.clone();
        clone.for_each_leaf(&mut |_, v| out.push(*v));
        out
    }

    /// Rebuild this statement with substituted leaves; derived concretes
    /// (concatenations, slices, keccak digests) are recomputed.
    pub fn with_numeric_leaves(&self, leaves: &[U256]) -> PseudoStmt {
        let mut clone = self.clone();
        let mut i = 0usize;
        clone.for_each_leaf(&mut |_, v| {
            if let Some(nv) = leaves.get(i) {
                *v = *nv;
            }
            i += 1;
        });
        clone.recompute_derived();
        clone
    }

    /// Copy with all numeric leaves zeroed: the statement's shape. Derived
    /// concretes are recomputed so equal shapes compare equal regardless of
    /// the original leaf values.
    pub fn skeleton_masked(&self) -> PseudoStmt {
        let mut clone = self.clone();
        clone.for_each_leaf(&mut |_, v| *v = U256::zero());
        clone.recompute_derived();
        clone
    }

    fn recompute_derived(&mut self) {
        match self {
            PseudoStmt::Assign { value, .. } => value.recompute_derived(),
            PseudoStmt::MemWrite { value, .. } => value.recompute_derived(),
            PseudoStmt::StorageWrite { slot, value, .. } => {
                slot.recompute_derived();
                value.recompute_derived();
            }
            PseudoStmt::ExternalCall { target, value, input, .. } => {
                target.recompute_derived();
                if let Some(v) = value {
                    v.recompute_derived();
                }
                input.recompute_derived();
            }
            PseudoStmt::Create { value, initcode, salt, .. } => {
                value.recompute_derived();
                initcode.recompute_derived();
                if let Some(s) = salt {
                    s.recompute_derived();
                }
            }
            PseudoStmt::IfTaken { cond, body, .. } => {
                cond.recompute_derived();
                for s in body {
                    s.recompute_derived();
                }
            }
            PseudoStmt::Loop(_) => {}
            PseudoStmt::Log { topics, data, .. } => {
                for t in topics {
                    t.recompute_derived();
                }
                data.recompute_derived();
            }
            PseudoStmt::Return { data, .. } | PseudoStmt::Revert { data, .. } => {
                if let Some(d) = data {
                    d.recompute_derived();
                }
            }
            PseudoStmt::SelfDestruct { beneficiary, .. } => beneficiary.recompute_derived(),
        }
    }
}

fn visit_u64(kind: LeafKind, v: &mut u64, f: &mut dyn FnMut(LeafKind, &mut U256)) {
    let mut w = U256::from(*v);
    f(kind, &mut w);
    *v = w.low_u64();
}

fn visit_u32(kind: LeafKind, v: &mut u32, f: &mut dyn FnMut(LeafKind, &mut U256)) {
    let mut w = U256::from(*v);
    f(kind, &mut w);
    *v = w.low_u64() as u32;
}

fn visit_pv(pv: &mut PairedValue, f: &mut dyn FnMut(LeafKind, &mut U256)) {
    visit_expr(&mut pv.expr, f);
    // derived nodes get their concrete recomputed from children instead
    let derived = matches!(
        pv.expr,
        Expr::Concat { .. } | Expr::Slice { .. } | Expr::Keccak { .. }
    );
    if !derived {
        if let Concrete::Word(w) = &mut pv.concrete {
            f(LeafKind::ConcreteWord, w);
        }
    }
    visit_u64(LeafKind::Provenance, &mut pv.provenance, f);
}

fn visit_expr(e: &mut Expr, f: &mut dyn FnMut(LeafKind, &mut U256)) {
    match e {
        Expr::Const(v) => f(LeafKind::ConstVal, v),
        Expr::CalldataWord { offset } => visit_u64(LeafKind::Offset, offset, f),
        Expr::CalldataRange { offset, len } => {
            visit_u64(LeafKind::Offset, offset, f);
            visit_u64(LeafKind::Offset, len, f);
        }
        Expr::ReturnData { call, offset, len } => {
            visit_u64(LeafKind::CallIdx, call, f);
            visit_u64(LeafKind::Offset, offset, f);
            visit_u64(LeafKind::Offset, len, f);
        }
        Expr::CallSuccess { call } | Expr::CreatedAddress { call } => {
            visit_u64(LeafKind::CallIdx, call, f)
        }
        Expr::Storage { slot, .. } => visit_pv(slot, f),
        Expr::Keccak { parts } | Expr::Concat { parts } => {
            for p in parts {
                visit_pv(p, f);
            }
        }
        Expr::Slice { of, offset, len } => {
            visit_pv(of, f);
            visit_u64(LeafKind::Offset, offset, f);
            visit_u64(LeafKind::Offset, len, f);
        }
        Expr::CodeSlice { addr, offset, len } => {
            if let Some(a) = addr {
                visit_pv(a, f);
            }
            visit_u64(LeafKind::Offset, offset, f);
            visit_u64(LeafKind::Offset, len, f);
        }
        Expr::Var(id) => visit_u32(LeafKind::VarId, id, f),
        Expr::AddressCast(inner) => visit_pv(inner, f),
        Expr::Unary(_, a) => visit_pv(a, f),
        Expr::Binary(_, a, b) => {
            visit_pv(a, f);
            visit_pv(b, f);
        }
        Expr::Ternary(_, a, b, c) => {
            visit_pv(a, f);
            visit_pv(b, f);
            visit_pv(c, f);
        }
        Expr::SelfAddr
        | Expr::Origin
        | Expr::Caller
        | Expr::CallValue
        | Expr::CalldataSize
        | Expr::Mem0
        | Expr::Env(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_call(step: u64, amount: u64) -> PseudoStmt {
        let mut input = PairedValue::new(
            Expr::Concat {
                parts: vec![
                    PairedValue::constant(U256::from(0xa9059cbb_u64), step),
                    PairedValue::new(
                        Expr::ReturnData { call: step - 2, offset: 0, len: 32 },
                        Concrete::Word(U256::from(amount)),
                        step,
                    ),
                ],
            },
            Concrete::Unknown,
            step,
        );
        input.recompute_derived();
        PseudoStmt::ExternalCall {
            kind: CallKind::Call,
            target: PairedValue::constant(U256::from(0xdead_u64), step),
            value: None,
            input,
            success: Some(true),
            pc: 100,
            step,
        }
    }

    #[test]
    fn leaf_roundtrip_is_exact() {
        let stmt = sample_call(10, 999);
        let leaves = stmt.numeric_leaves();
        let rebuilt = stmt.with_numeric_leaves(&leaves);
        assert_eq!(rebuilt, stmt);
    }

    #[test]
    fn same_shape_different_values_share_skeleton() {
        let a = sample_call(10, 111);
        let b = sample_call(13, 222);
        assert_eq!(a.skeleton_masked(), b.skeleton_masked());
        assert_ne!(a.numeric_leaves(), b.numeric_leaves());
        assert_eq!(a.numeric_leaves().len(), b.numeric_leaves().len());
    }

    #[test]
    fn substitution_moves_between_shapes() {
        let a = sample_call(10, 111);
        let b = sample_call(13, 222);
        let rebuilt = a.with_numeric_leaves(&b.numeric_leaves());
        assert_eq!(rebuilt, b);
    }
}
