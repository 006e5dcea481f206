//! EVM opcode table: mnemonic and byte mapping plus the operand metadata the
//! recorder and lifter need. Unrecognized bytes are preserved as `Unknown`.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Stop,
    Add,
    Mul,
    Sub,
    Div,
    Sdiv,
    Mod,
    Smod,
    Addmod,
    Mulmod,
    Exp,
    Signextend,
    Lt,
    Gt,
    Slt,
    Sgt,
    Eq,
    Iszero,
    And,
    Or,
    Xor,
    Not,
    Byte,
    Shl,
    Shr,
    Sar,
    Sha3,
    Address,
    Balance,
    Origin,
    Caller,
    Callvalue,
    Calldataload,
    Calldatasize,
    Calldatacopy,
    Codesize,
    Codecopy,
    Gasprice,
    Extcodesize,
    Extcodecopy,
    Returndatasize,
    Returndatacopy,
    Extcodehash,
    Blockhash,
    Coinbase,
    Timestamp,
    Number,
    Prevrandao,
    Gaslimit,
    Chainid,
    Selfbalance,
    Basefee,
    Blobhash,
    Blobbasefee,
    Pop,
    Mload,
    Mstore,
    Mstore8,
    Sload,
    Sstore,
    Jump,
    Jumpi,
    Pc,
    Msize,
    Gas,
    Jumpdest,
    Tload,
    Tstore,
    Mcopy,
    /// PUSH0..PUSH32; the payload is the immediate width in bytes.
    Push(u8),
    /// DUP1..DUP16.
    Dup(u8),
    /// SWAP1..SWAP16.
    Swap(u8),
    /// LOG0..LOG4; the payload is the topic count.
    Log(u8),
    Create,
    Call,
    Callcode,
    Return,
    Delegatecall,
    Create2,
    Staticcall,
    Revert,
    Invalid,
    Selfdestruct,
    /// Anything we do not recognize, with the raw byte preserved.
    Unknown(u8),
}

impl Op {
    pub fn byte(&self) -> u8 {
        use Op::*;
        match *self {
            Stop => 0x00,
            Add => 0x01,
            Mul => 0x02,
            Sub => 0x03,
            Div => 0x04,
            Sdiv => 0x05,
            Mod => 0x06,
            Smod => 0x07,
            Addmod => 0x08,
            Mulmod => 0x09,
            Exp => 0x0a,
            Signextend => 0x0b,
            Lt => 0x10,
            Gt => 0x11,
            Slt => 0x12,
            Sgt => 0x13,
            Eq => 0x14,
            Iszero => 0x15,
            And => 0x16,
            Or => 0x17,
            Xor => 0x18,
            Not => 0x19,
            Byte => 0x1a,
            Shl => 0x1b,
            Shr => 0x1c,
            Sar => 0x1d,
            Sha3 => 0x20,
            Address => 0x30,
            Balance => 0x31,
            Origin => 0x32,
            Caller => 0x33,
            Callvalue => 0x34,
            Calldataload => 0x35,
            Calldatasize => 0x36,
            Calldatacopy => 0x37,
            Codesize => 0x38,
            Codecopy => 0x39,
            Gasprice => 0x3a,
            Extcodesize => 0x3b,
            Extcodecopy => 0x3c,
            Returndatasize => 0x3d,
            Returndatacopy => 0x3e,
            Extcodehash => 0x3f,
            Blockhash => 0x40,
            Coinbase => 0x41,
            Timestamp => 0x42,
            Number => 0x43,
            Prevrandao => 0x44,
            Gaslimit => 0x45,
            Chainid => 0x46,
            Selfbalance => 0x47,
            Basefee => 0x48,
            Blobhash => 0x49,
            Blobbasefee => 0x4a,
            Pop => 0x50,
            Mload => 0x51,
            Mstore => 0x52,
            Mstore8 => 0x53,
            Sload => 0x54,
            Sstore => 0x55,
            Jump => 0x56,
            Jumpi => 0x57,
            Pc => 0x58,
            Msize => 0x59,
            Gas => 0x5a,
            Jumpdest => 0x5b,
            Tload => 0x5c,
            Tstore => 0x5d,
            Mcopy => 0x5e,
            Push(n) => 0x5f + n,
            Dup(n) => 0x7f + n,
            Swap(n) => 0x8f + n,
            Log(n) => 0xa0 + n,
            Create => 0xf0,
            Call => 0xf1,
            Callcode => 0xf2,
            Return => 0xf3,
            Delegatecall => 0xf4,
            Create2 => 0xf5,
            Staticcall => 0xfa,
            Revert => 0xfd,
            Invalid => 0xfe,
            Selfdestruct => 0xff,
            Unknown(b) => b,
        }
    }

    pub fn from_byte(b: u8) -> Op {
        use Op::*;
        match b {
            0x00 => Stop,
            0x01 => Add,
            0x02 => Mul,
            0x03 => Sub,
            0x04 => Div,
            0x05 => Sdiv,
            0x06 => Mod,
            0x07 => Smod,
            0x08 => Addmod,
            0x09 => Mulmod,
            0x0a => Exp,
            0x0b => Signextend,
            0x10 => Lt,
            0x11 => Gt,
            0x12 => Slt,
            0x13 => Sgt,
            0x14 => Eq,
            0x15 => Iszero,
            0x16 => And,
            0x17 => Or,
            0x18 => Xor,
            0x19 => Not,
            0x1a => Byte,
            0x1b => Shl,
            0x1c => Shr,
            0x1d => Sar,
            0x20 => Sha3,
            0x30 => Address,
            0x31 => Balance,
            0x32 => Origin,
            0x33 => Caller,
            0x34 => Callvalue,
            0x35 => Calldataload,
            0x36 => Calldatasize,
            0x37 => Calldatacopy,
            0x38 => Codesize,
            0x39 => Codecopy,
            0x3a => Gasprice,
            0x3b => Extcodesize,
            0x3c => Extcodecopy,
            0x3d => Returndatasize,
            0x3e => Returndatacopy,
            0x3f => Extcodehash,
            0x40 => Blockhash,
            0x41 => Coinbase,
            0x42 => Timestamp,
            0x43 => Number,
            0x44 => Prevrandao,
            0x45 => Gaslimit,
            0x46 => Chainid,
            0x47 => Selfbalance,
            0x48 => Basefee,
            0x49 => Blobhash,
            0x4a => Blobbasefee,
            0x50 => Pop,
            0x51 => Mload,
            0x52 => Mstore,
            0x53 => Mstore8,
            0x54 => Sload,
            0x55 => Sstore,
            0x56 => Jump,
            0x57 => Jumpi,
            0x58 => Pc,
            0x59 => Msize,
            0x5a => Gas,
            0x5b => Jumpdest,
            0x5c => Tload,
            0x5d => Tstore,
            0x5e => Mcopy,
            0x5f..=0x7f => Push(b - 0x5f),
            0x80..=0x8f => Dup(b - 0x7f),
            0x90..=0x9f => Swap(b - 0x8f),
            0xa0..=0xa4 => Log(b - 0xa0),
            0xf0 => Create,
            0xf1 => Call,
            0xf2 => Callcode,
            0xf3 => Return,
            0xf4 => Delegatecall,
            0xf5 => Create2,
            0xfa => Staticcall,
            0xfd => Revert,
            0xfe => Invalid,
            _ => Unknown(b),
        }
    }

    /// Parse a mnemonic as emitted by tracers. Returns `None` for strings
    /// that are not EVM mnemonics at all.
    pub fn parse_mnemonic(s: &str) -> Option<Op> {
        use Op::*;
        let op = match s {
            "STOP" => Stop,
            "ADD" => Add,
            "MUL" => Mul,
            "SUB" => Sub,
            "DIV" => Div,
            "SDIV" => Sdiv,
            "MOD" => Mod,
            "SMOD" => Smod,
            "ADDMOD" => Addmod,
            "MULMOD" => Mulmod,
            "EXP" => Exp,
            "SIGNEXTEND" => Signextend,
            "LT" => Lt,
            "GT" => Gt,
            "SLT" => Slt,
            "SGT" => Sgt,
            "EQ" => Eq,
            "ISZERO" => Iszero,
            "AND" => And,
            "OR" => Or,
            "XOR" => Xor,
            "NOT" => Not,
            "BYTE" => Byte,
            "SHL" => Shl,
            "SHR" => Shr,
            "SAR" => Sar,
            "SHA3" | "KECCAK256" => Sha3,
            "ADDRESS" => Address,
            "BALANCE" => Balance,
            "ORIGIN" => Origin,
            "CALLER" => Caller,
            "CALLVALUE" => Callvalue,
            "CALLDATALOAD" => Calldataload,
            "CALLDATASIZE" => Calldatasize,
            "CALLDATACOPY" => Calldatacopy,
            "CODESIZE" => Codesize,
            "CODECOPY" => Codecopy,
            "GASPRICE" => Gasprice,
            "EXTCODESIZE" => Extcodesize,
            "EXTCODECOPY" => Extcodecopy,
            "RETURNDATASIZE" => Returndatasize,
            "RETURNDATACOPY" => Returndatacopy,
            "EXTCODEHASH" => Extcodehash,
            "BLOCKHASH" => Blockhash,
            "COINBASE" => Coinbase,
            "TIMESTAMP" => Timestamp,
            "NUMBER" => Number,
            "DIFFICULTY" | "PREVRANDAO" => Prevrandao,
            "GASLIMIT" => Gaslimit,
            "CHAINID" => Chainid,
            "SELFBALANCE" => Selfbalance,
            "BASEFEE" => Basefee,
            "BLOBHASH" => Blobhash,
            "BLOBBASEFEE" => Blobbasefee,
            "POP" => Pop,
            "MLOAD" => Mload,
            "MSTORE" => Mstore,
            "MSTORE8" => Mstore8,
            "SLOAD" => Sload,
            "SSTORE" => Sstore,
            "JUMP" => Jump,
            "JUMPI" => Jumpi,
            "PC" => Pc,
            "MSIZE" => Msize,
            "GAS" => Gas,
            "JUMPDEST" => Jumpdest,
            "TLOAD" => Tload,
            "TSTORE" => Tstore,
            "MCOPY" => Mcopy,
            "CREATE" => Create,
            "CALL" => Call,
            "CALLCODE" => Callcode,
            "RETURN" => Return,
            "DELEGATECALL" => Delegatecall,
            "CREATE2" => Create2,
            "STATICCALL" => Staticcall,
            "REVERT" => Revert,
            "INVALID" => Invalid,
            "SELFDESTRUCT" | "SUICIDE" => Selfdestruct,
            _ => {
                if let Some(n) = s.strip_prefix("PUSH") {
                    let n: u8 = n.parse().ok()?;
                    if n <= 32 {
                        return Some(Push(n));
                    }
                } else if let Some(n) = s.strip_prefix("DUP") {
                    let n: u8 = n.parse().ok()?;
                    if (1..=16).contains(&n) {
                        return Some(Dup(n));
                    }
                } else if let Some(n) = s.strip_prefix("SWAP") {
                    let n: u8 = n.parse().ok()?;
                    if (1..=16).contains(&n) {
                        return Some(Swap(n));
                    }
                } else if let Some(n) = s.strip_prefix("LOG") {
                    let n: u8 = n.parse().ok()?;
                    if n <= 4 {
                        return Some(Log(n));
                    }
                } else if let Some(hex_byte) = s.strip_prefix("opcode 0x") {
                    let b = u8::from_str_radix(hex_byte, 16).ok()?;
                    return Some(Unknown(b));
                }
                return None;
            }
        };
        Some(op)
    }

    pub fn is_push(&self) -> bool {
        matches!(self, Op::Push(_))
    }

    /// CALL, CALLCODE, DELEGATECALL, STATICCALL.
    pub fn is_call_family(&self) -> bool {
        matches!(self, Op::Call | Op::Callcode | Op::Delegatecall | Op::Staticcall)
    }

    pub fn is_create(&self) -> bool {
        matches!(self, Op::Create | Op::Create2)
    }

    /// Opcodes that may open a child execution context.
    pub fn enters_context(&self) -> bool {
        self.is_call_family() || self.is_create()
    }

    /// Opcodes that terminate the current execution context.
    pub fn is_halt(&self) -> bool {
        matches!(
            self,
            Op::Stop | Op::Return | Op::Revert | Op::Invalid | Op::Selfdestruct
        )
    }

    /// Number of stack operands consumed.
    pub fn stack_inputs(&self) -> usize {
        use Op::*;
        match *self {
            Stop | Jumpdest | Pc | Msize | Gas | Address | Origin | Caller | Callvalue
            | Calldatasize | Codesize | Gasprice | Returndatasize | Coinbase | Timestamp
            | Number | Prevrandao | Gaslimit | Chainid | Selfbalance | Basefee | Blobbasefee
            | Push(_) | Invalid | Unknown(_) => 0,
            Iszero | Not | Balance | Calldataload | Extcodesize | Extcodehash | Blockhash
            | Blobhash | Pop | Mload | Sload | Tload | Jump | Selfdestruct => 1,
            Add | Mul | Sub | Div | Sdiv | Mod | Smod | Exp | Signextend | Lt | Gt | Slt
            | Sgt | Eq | And | Or | Xor | Byte | Shl | Shr | Sar | Sha3 | Mstore | Mstore8
            | Sstore | Tstore | Jumpi | Return | Revert => 2,
            Addmod | Mulmod | Calldatacopy | Codecopy | Returndatacopy | Mcopy | Create => 3,
            Extcodecopy | Create2 => 4,
            Dup(n) => n as usize,
            Swap(n) => n as usize + 1,
            Log(n) => n as usize + 2,
            Delegatecall | Staticcall => 6,
            Call | Callcode => 7,
        }
    }

    /// Number of stack words produced.
    pub fn stack_outputs(&self) -> usize {
        use Op::*;
        match *self {
            Stop | Calldatacopy | Codecopy | Returndatacopy | Extcodecopy | Pop | Mstore
            | Mstore8 | Sstore | Tstore | Jump | Jumpi | Jumpdest | Mcopy | Log(_) | Return
            | Revert | Invalid | Selfdestruct | Unknown(_) => 0,
            Swap(_) => 0, // net effect modeled separately
            Dup(_) => 1,  // net +1
            _ => 1,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Op::*;
        match *self {
            Push(n) => write!(f, "PUSH{}", n),
            Dup(n) => write!(f, "DUP{}", n),
            Swap(n) => write!(f, "SWAP{}", n),
            Log(n) => write!(f, "LOG{}", n),
            Unknown(b) => write!(f, "opcode 0x{:02x}", b),
            Sha3 => write!(f, "SHA3"),
            Prevrandao => write!(f, "PREVRANDAO"),
            _ => {
                let s = format!("{:?}", self).to_uppercase();
                write!(f, "{}", s)
            }
        }
    }
}

impl Serialize for Op {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Op {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Op::parse_mnemonic(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown mnemonic {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_mnemonic_roundtrip() {
        for b in 0u16..=255 {
            let op = Op::from_byte(b as u8);
            assert_eq!(op.byte(), b as u8, "byte mismatch for {op}");
            if !matches!(op, Op::Unknown(_)) {
                let parsed = Op::parse_mnemonic(&op.to_string()).unwrap();
                assert_eq!(parsed, op, "mnemonic mismatch for {op}");
            }
        }
    }

    #[test]
    fn unknown_bytes_are_preserved() {
        let op = Op::from_byte(0x0c);
        assert_eq!(op, Op::Unknown(0x0c));
        assert_eq!(Op::parse_mnemonic("opcode 0x0c"), Some(Op::Unknown(0x0c)));
    }

    #[test]
    fn display_special_cases() {
        assert_eq!(Op::Push(1).to_string(), "PUSH1");
        assert_eq!(Op::Push(0).to_string(), "PUSH0");
        assert_eq!(Op::Swap(16).to_string(), "SWAP16");
        assert_eq!(Op::parse_mnemonic("KECCAK256"), Some(Op::Sha3));
        assert_eq!(Op::parse_mnemonic("DIFFICULTY"), Some(Op::Prevrandao));
        assert_eq!(Op::parse_mnemonic("PUSH33"), None);
    }
}
