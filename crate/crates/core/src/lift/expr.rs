//! The paired expression domain: every symbolic expression carries the
//! concrete value observed at the same execution point.

use serde::{Deserialize, Serialize};

use crate::opcode::Op;
use crate::primitives::{keccak256, word_to_be_bytes, U256};

/// Concrete side of a paired value: a 256-bit word, a byte string, or
/// unknown (the instruction's result is not in any recorded category).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Concrete {
    Word(U256),
    Bytes(Vec<u8>),
    Unknown,
}

impl Concrete {
    pub fn word(v: u64) -> Self {
        Concrete::Word(U256::from(v))
    }

    pub fn as_word(&self) -> Option<U256> {
        match self {
            Concrete::Word(w) => Some(*w),
            Concrete::Bytes(b) if b.len() <= 32 => {
                let mut buf = [0u8; 32];
                buf[32 - b.len()..].copy_from_slice(b);
                Some(U256::from_big_endian(&buf))
            }
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<Vec<u8>> {
        match self {
            Concrete::Word(w) => Some(word_to_be_bytes(w).to_vec()),
            Concrete::Bytes(b) => Some(b.clone()),
            Concrete::Unknown => None,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, Concrete::Unknown)
    }

    /// Byte length when materialized.
    pub fn byte_len(&self) -> Option<usize> {
        match self {
            Concrete::Word(_) => Some(32),
            Concrete::Bytes(b) => Some(b.len()),
            Concrete::Unknown => None,
        }
    }
}

/// Symbolic expression tree. Children are paired values so every node keeps
/// its observed concrete alongside.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Const(U256),
    /// ADDRESS — the executing contract.
    SelfAddr,
    /// ORIGIN.
    Origin,
    /// CALLER.
    Caller,
    /// CALLVALUE.
    CallValue,
    /// CALLDATALOAD at a concrete offset.
    CalldataWord { offset: u64 },
    /// CALLDATACOPY source range.
    CalldataRange { offset: u64, len: u64 },
    CalldataSize,
    /// Slice of the return data of the call at step `call`.
    ReturnData { call: u64, offset: u64, len: u64 },
    /// Success flag of the call at step `call`.
    CallSuccess { call: u64 },
    /// Address created by the CREATE/CREATE2 at step `call`.
    CreatedAddress { call: u64 },
    /// SLOAD/TLOAD; `transient` distinguishes TLOAD.
    Storage { slot: Box<PairedValue>, transient: bool },
    /// sha3 over the word-split preimage; the digest stays bound.
    Keccak { parts: Vec<PairedValue> },
    /// Concatenation of memory segments (multi-segment read).
    Concat { parts: Vec<PairedValue> },
    /// Byte slice of another value.
    Slice { of: Box<PairedValue>, offset: u64, len: u64 },
    /// Read of never-written memory (zero-initialized).
    Mem0,
    /// Code bytes (CODECOPY/EXTCODECOPY source); contents are not traced.
    CodeSlice { addr: Option<Box<PairedValue>>, offset: u64, len: u64 },
    /// Environment opcode with no recorded operand (TIMESTAMP, GAS, ...).
    Env(Op),
    /// Local variable reference.
    Var(u32),
    /// AND with the 160-bit mask, i.e. address(x).
    AddressCast(Box<PairedValue>),
    Unary(Op, Box<PairedValue>),
    Binary(Op, Box<PairedValue>, Box<PairedValue>),
    Ternary(Op, Box<PairedValue>, Box<PairedValue>, Box<PairedValue>),
}

/// A symbolic expression bound to the concrete value observed at the same
/// point, with the originating step index as provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedValue {
    pub expr: Expr,
    pub concrete: Concrete,
    pub provenance: u64,
}

impl PairedValue {
    pub fn constant(v: U256, step: u64) -> Self {
        PairedValue {
            expr: Expr::Const(v),
            concrete: Concrete::Word(v),
            provenance: step,
        }
    }

    pub fn new(expr: Expr, concrete: Concrete, step: u64) -> Self {
        PairedValue {
            expr,
            concrete,
            provenance: step,
        }
    }

    pub fn concrete_word(&self) -> Option<U256> {
        self.concrete.as_word()
    }

    /// Build a unary application with constant folding and identity laws.
    pub fn unary(op: Op, a: PairedValue, step: u64) -> Self {
        let concrete = match a.concrete.as_word() {
            Some(x) => Concrete::Word(eval_unary(op, x)),
            None => Concrete::Unknown,
        };
        if let (Expr::Const(x), Concrete::Word(c)) = (&a.expr, &concrete) {
            let _ = x;
            return PairedValue::constant(*c, step);
        }
        // collapse triple negation: iszero(iszero(iszero(e))) = iszero(e)
        if op == Op::Iszero {
            if let Expr::Unary(Op::Iszero, inner) = &a.expr {
                if let Expr::Unary(Op::Iszero, innermost) = &inner.expr {
                    return PairedValue {
                        expr: Expr::Unary(Op::Iszero, innermost.clone()),
                        concrete,
                        provenance: step,
                    };
                }
            }
        }
        PairedValue {
            expr: Expr::Unary(op, Box::new(a)),
            concrete,
            provenance: step,
        }
    }

    /// Build a binary application with constant folding and identity laws.
    /// Operand order matches EVM stack order (`a` popped first).
    pub fn binary(op: Op, a: PairedValue, b: PairedValue, step: u64) -> Self {
        let concrete = match (a.concrete.as_word(), b.concrete.as_word()) {
            (Some(x), Some(y)) => Concrete::Word(eval_binary(op, x, y)),
            _ => Concrete::Unknown,
        };
        if let (Expr::Const(_), Expr::Const(_), Concrete::Word(c)) = (&a.expr, &b.expr, &concrete) {
            return PairedValue::constant(*c, step);
        }
        // identity laws
        let is_zero = |e: &Expr| matches!(e, Expr::Const(c) if c.is_zero());
        let is_one = |e: &Expr| matches!(e, Expr::Const(c) if *c == U256::one());
        let all_ones = U256::MAX;
        match op {
            Op::Add => {
                if is_zero(&a.expr) {
                    return b.with_provenance(step);
                }
                if is_zero(&b.expr) {
                    return a.with_provenance(step);
                }
            }
            Op::Sub => {
                if is_zero(&b.expr) {
                    return a.with_provenance(step);
                }
            }
            Op::Mul => {
                if is_one(&a.expr) {
                    return b.with_provenance(step);
                }
                if is_one(&b.expr) {
                    return a.with_provenance(step);
                }
            }
            Op::Div => {
                if is_one(&b.expr) {
                    return a.with_provenance(step);
                }
            }
            Op::And => {
                let addr_mask = (U256::one() << 160) - 1;
                if matches!(&a.expr, Expr::Const(c) if *c == addr_mask) {
                    return PairedValue {
                        expr: Expr::AddressCast(Box::new(b)),
                        concrete,
                        provenance: step,
                    };
                }
                if matches!(&b.expr, Expr::Const(c) if *c == addr_mask) {
                    return PairedValue {
                        expr: Expr::AddressCast(Box::new(a)),
                        concrete,
                        provenance: step,
                    };
                }
                if matches!(&a.expr, Expr::Const(c) if *c == all_ones) {
                    return b.with_provenance(step);
                }
                if matches!(&b.expr, Expr::Const(c) if *c == all_ones) {
                    return a.with_provenance(step);
                }
            }
            Op::Or | Op::Xor => {
                if is_zero(&a.expr) {
                    return b.with_provenance(step);
                }
                if is_zero(&b.expr) {
                    return a.with_provenance(step);
                }
            }
            Op::Shl | Op::Shr | Op::Sar => {
                // shift amount is the first operand
                if is_zero(&a.expr) {
                    return b.with_provenance(step);
                }
            }
            _ => {}
        }
        PairedValue {
            expr: Expr::Binary(op, Box::new(a), Box::new(b)),
            concrete,
            provenance: step,
        }
    }

    pub fn ternary(op: Op, a: PairedValue, b: PairedValue, c: PairedValue, step: u64) -> Self {
        let concrete = match (a.concrete.as_word(), b.concrete.as_word(), c.concrete.as_word()) {
            (Some(x), Some(y), Some(z)) => Concrete::Word(eval_ternary(op, x, y, z)),
            _ => Concrete::Unknown,
        };
        if let (Expr::Const(_), Expr::Const(_), Expr::Const(_), Concrete::Word(w)) =
            (&a.expr, &b.expr, &c.expr, &concrete)
        {
            return PairedValue::constant(*w, step);
        }
        PairedValue {
            expr: Expr::Ternary(op, Box::new(a), Box::new(b), Box::new(c)),
            concrete,
            provenance: step,
        }
    }

    fn with_provenance(mut self, step: u64) -> Self {
        self.provenance = step;
        self
    }

    /// Slice `len` bytes starting at `offset` within this value.
    pub fn slice(&self, offset: u64, len: u64, step: u64) -> PairedValue {
        let concrete = match self.concrete.as_bytes() {
            Some(b) => {
                let start = (offset as usize).min(b.len());
                let end = ((offset + len) as usize).min(b.len());
                let mut out = b[start..end].to_vec();
                out.resize(len as usize, 0);
                Concrete::Bytes(out)
            }
            None => Concrete::Unknown,
        };
        // compose nested slices
        if let Expr::Slice { of, offset: o0, .. } = &self.expr {
            return PairedValue {
                expr: Expr::Slice {
                    of: of.clone(),
                    offset: o0 + offset,
                    len,
                },
                concrete,
                provenance: step,
            };
        }
        PairedValue {
            expr: Expr::Slice {
                of: Box::new(self.clone()),
                offset,
                len,
            },
            concrete,
            provenance: step,
        }
    }

    /// Recompute concretes of derived nodes (Concat, Slice, Keccak) from
    /// their children, bottom-up. Used after leaf substitution.
    pub fn recompute_derived(&mut self) {
        match &mut self.expr {
            Expr::Concat { parts } => {
                for p in parts.iter_mut() {
                    p.recompute_derived();
                }
                let mut bytes = Vec::new();
                let mut known = true;
                for p in parts.iter() {
                    match p.concrete.as_bytes() {
                        Some(b) => bytes.extend_from_slice(&b),
                        None => {
                            known = false;
                            break;
                        }
                    }
                }
                self.concrete = if known { Concrete::Bytes(bytes) } else { Concrete::Unknown };
            }
            Expr::Slice { of, offset, len } => {
                of.recompute_derived();
                let (offset, len) = (*offset, *len);
                self.concrete = match of.concrete.as_bytes() {
                    Some(b) => {
                        let start = (offset as usize).min(b.len());
                        let end = ((offset + len) as usize).min(b.len());
                        let mut out = b[start..end].to_vec();
                        out.resize(len as usize, 0);
                        Concrete::Bytes(out)
                    }
                    None => Concrete::Unknown,
                };
            }
            Expr::Keccak { parts } => {
                for p in parts.iter_mut() {
                    p.recompute_derived();
                }
                let mut bytes = Vec::new();
                let mut known = true;
                for p in parts.iter() {
                    match p.concrete.as_bytes() {
                        Some(b) => bytes.extend_from_slice(&b),
                        None => {
                            known = false;
                            break;
                        }
                    }
                }
                self.concrete = if known {
                    Concrete::Word(U256::from_big_endian(keccak256(&bytes).as_bytes()))
                } else {
                    Concrete::Unknown
                };
            }
            Expr::Storage { slot, .. } => slot.recompute_derived(),
            Expr::AddressCast(inner) => inner.recompute_derived(),
            Expr::Unary(_, a) => a.recompute_derived(),
            Expr::Binary(_, a, b) => {
                a.recompute_derived();
                b.recompute_derived();
            }
            Expr::Ternary(_, a, b, c) => {
                a.recompute_derived();
                b.recompute_derived();
                c.recompute_derived();
            }
            Expr::CodeSlice { addr: Some(a), .. } => a.recompute_derived(),
            _ => {}
        }
    }
}

fn sign_bit(x: U256) -> bool {
    x.bit(255)
}

fn twos_neg(x: U256) -> U256 {
    (!x).overflowing_add(U256::one()).0
}

pub fn eval_unary(op: Op, a: U256) -> U256 {
    match op {
        Op::Iszero => U256::from(a.is_zero() as u64),
        Op::Not => !a,
        _ => U256::zero(), // unrecorded environment reads have no fold
    }
}

/// EVM semantics for binary ops; `a` is the first-popped operand.
pub fn eval_binary(op: Op, a: U256, b: U256) -> U256 {
    match op {
        Op::Add => a.overflowing_add(b).0,
        Op::Mul => a.overflowing_mul(b).0,
        Op::Sub => a.overflowing_sub(b).0,
        Op::Div => {
            if b.is_zero() {
                U256::zero()
            } else {
                a / b
            }
        }
        Op::Sdiv => {
            if b.is_zero() {
                return U256::zero();
            }
            let (sa, sb) = (sign_bit(a), sign_bit(b));
            let (ua, ub) = (
                if sa { twos_neg(a) } else { a },
                if sb { twos_neg(b) } else { b },
            );
            let q = ua / ub;
            if sa ^ sb {
                twos_neg(q)
            } else {
                q
            }
        }
        Op::Mod => {
            if b.is_zero() {
                U256::zero()
            } else {
                a % b
            }
        }
        Op::Smod => {
            if b.is_zero() {
                return U256::zero();
            }
            let (sa, sb) = (sign_bit(a), sign_bit(b));
            let (ua, ub) = (
                if sa { twos_neg(a) } else { a },
                if sb { twos_neg(b) } else { b },
            );
            let r = ua % ub;
            if sa {
                twos_neg(r)
            } else {
                r
            }
        }
        Op::Exp => a.overflowing_pow(b).0,
        Op::Signextend => {
            if a >= U256::from(31u64) {
                b
            } else {
                let bit = a.low_u64() as usize * 8 + 7;
                if b.bit(bit) {
                    b | (U256::MAX << (bit + 1))
                } else {
                    b & ((U256::one() << (bit + 1)) - 1)
                }
            }
        }
        Op::Lt => U256::from((a < b) as u64),
        Op::Gt => U256::from((a > b) as u64),
        Op::Slt => {
            let (sa, sb) = (sign_bit(a), sign_bit(b));
            let r = match (sa, sb) {
                (true, false) => true,
                (false, true) => false,
                _ => a < b,
            };
            U256::from(r as u64)
        }
        Op::Sgt => {
            let (sa, sb) = (sign_bit(a), sign_bit(b));
            let r = match (sa, sb) {
                (false, true) => true,
                (true, false) => false,
                _ => a > b,
            };
            U256::from(r as u64)
        }
        Op::Eq => U256::from((a == b) as u64),
        Op::And => a & b,
        Op::Or => a | b,
        Op::Xor => a ^ b,
        Op::Byte => {
            if a >= U256::from(32u64) {
                U256::zero()
            } else {
                let bytes = word_to_be_bytes(&b);
                U256::from(bytes[a.low_u64() as usize])
            }
        }
        Op::Shl => {
            if a >= U256::from(256u64) {
                U256::zero()
            } else {
                b << a.low_u64() as usize
            }
        }
        Op::Shr => {
            if a >= U256::from(256u64) {
                U256::zero()
            } else {
                b >> a.low_u64() as usize
            }
        }
        Op::Sar => {
            if a >= U256::from(256u64) {
                if sign_bit(b) {
                    U256::MAX
                } else {
                    U256::zero()
                }
            } else {
                let shift = a.low_u64() as usize;
                let r = b >> shift;
                if sign_bit(b) && shift > 0 {
                    r | (U256::MAX << (256 - shift))
                } else {
                    r
                }
            }
        }
        _ => U256::zero(),
    }
}

pub fn eval_ternary(op: Op, a: U256, b: U256, n: U256) -> U256 {
    use primitive_types::U512;
    match op {
        Op::Addmod => {
            if n.is_zero() {
                U256::zero()
            } else {
                let s = U512::from(a) + U512::from(b);
                let r = s % U512::from(n);
                U256::try_from(r).expect("mod result fits")
            }
        }
        Op::Mulmod => {
            if n.is_zero() {
                U256::zero()
            } else {
                let p = a.full_mul(b);
                let r = p % U512::from(n);
                U256::try_from(r).expect("mod result fits")
            }
        }
        _ => U256::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: u64) -> PairedValue {
        PairedValue::constant(U256::from(v), 0)
    }

    #[test]
    fn constant_folding() {
        let r = PairedValue::binary(Op::Add, c(2), c(3), 1);
        assert_eq!(r.expr, Expr::Const(U256::from(5)));
        assert_eq!(r.concrete, Concrete::Word(U256::from(5)));
    }

    #[test]
    fn identity_laws() {
        let sym = PairedValue::new(Expr::CalldataWord { offset: 4 }, Concrete::word(7), 0);
        let r = PairedValue::binary(Op::Add, sym.clone(), c(0), 1);
        assert_eq!(r.expr, sym.expr);
        let r = PairedValue::binary(Op::Mul, c(1), sym.clone(), 1);
        assert_eq!(r.expr, sym.expr);
    }

    #[test]
    fn address_mask_becomes_cast() {
        let mask = (U256::one() << 160) - 1;
        let sym = PairedValue::new(
            Expr::ReturnData { call: 3, offset: 0, len: 32 },
            Concrete::word(0xabcd),
            0,
        );
        let r = PairedValue::binary(Op::And, PairedValue::constant(mask, 0), sym, 1);
        assert!(matches!(r.expr, Expr::AddressCast(_)));
        assert_eq!(r.concrete, Concrete::word(0xabcd));
    }

    #[test]
    fn signed_division() {
        let neg2 = twos_neg(U256::from(2));
        assert_eq!(eval_binary(Op::Sdiv, neg2, U256::from(2)), twos_neg(U256::one()));
        assert_eq!(eval_binary(Op::Slt, neg2, U256::one()), U256::one());
        assert_eq!(eval_binary(Op::Sgt, U256::one(), neg2), U256::one());
    }

    #[test]
    fn shifts_and_byte() {
        assert_eq!(eval_binary(Op::Shl, U256::from(4), U256::from(1)), U256::from(16));
        assert_eq!(eval_binary(Op::Shr, U256::from(4), U256::from(16)), U256::one());
        assert_eq!(
            eval_binary(Op::Byte, U256::from(31), U256::from(0xff)),
            U256::from(0xff)
        );
        let negone = U256::MAX;
        assert_eq!(eval_binary(Op::Sar, U256::from(8), negone), negone);
    }

    #[test]
    fn slice_composes_and_recomputes() {
        let base = PairedValue::new(
            Expr::CalldataRange { offset: 0, len: 64 },
            Concrete::Bytes((0u8..64).collect()),
            0,
        );
        let s1 = base.slice(16, 32, 1);
        assert_eq!(s1.concrete, Concrete::Bytes((16u8..48).collect()));
        let s2 = s1.slice(8, 8, 2);
        match &s2.expr {
            Expr::Slice { offset, len, .. } => {
                assert_eq!((*offset, *len), (24, 8));
            }
            other => panic!("expected slice, got {other:?}"),
        }
        assert_eq!(s2.concrete, Concrete::Bytes((24u8..32).collect()));
    }
}
