//! Calldata shape inference: split raw calldata into selector, head words,
//! and dynamic tails, classifying each 32-byte word as uint256, address, or
//! a dynamic bytes reference by value-range heuristics.

use serde::{Deserialize, Serialize};

use crate::primitives::{looks_like_address, U256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InferredType {
    Uint256,
    Address,
    Bytes,
}

impl InferredType {
    pub fn as_str(&self) -> &'static str {
        match self {
            InferredType::Uint256 => "uint256",
            InferredType::Address => "address",
            InferredType::Bytes => "bytes",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredParam {
    pub ty: InferredType,
    /// The head word itself (for Bytes, the tail offset).
    pub word: U256,
    /// Byte offset of the head word within calldata.
    pub head_offset: usize,
    /// For dynamic params: tail payload bytes.
    pub tail: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedCalldata {
    pub selector: [u8; 4],
    pub params: Vec<InferredParam>,
}

fn word_at(data: &[u8], off: usize) -> Option<U256> {
    if off + 32 <= data.len() {
        Some(U256::from_big_endian(&data[off..off + 32]))
    } else {
        None
    }
}

/// Decode calldata into selector plus inferred parameters. Returns `None`
/// when the bytes do not look like a selector-plus-head-words encoding.
pub fn decode_calldata(data: &[u8]) -> Option<DecodedCalldata> {
    if data.len() < 4 {
        return None;
    }
    let selector = [data[0], data[1], data[2], data[3]];
    let body = &data[4..];
    if body.len() % 32 != 0 {
        return None;
    }
    let word_count = body.len() / 32;

    // A head word is a plausible dynamic-tail offset when it points at a
    // 32-byte aligned position inside the body holding a consistent length.
    let tail_of = |w: &U256| -> Option<(usize, Vec<u8>)> {
        if w.is_zero() || *w > U256::from(body.len()) {
            return None;
        }
        let off = w.low_u64() as usize;
        if off % 32 != 0 || off + 32 > body.len() {
            return None;
        }
        let len_word = word_at(body, off)?;
        if len_word > U256::from(body.len()) {
            return None;
        }
        let len = len_word.low_u64() as usize;
        let padded = len.div_ceil(32) * 32;
        if off + 32 + padded > body.len() {
            return None;
        }
        Some((off, body[off + 32..off + 32 + len].to_vec()))
    };

    // Determine the head length: the smallest tail offset bounds the head.
    let mut head_words = word_count;
    for i in 0..word_count {
        let w = word_at(body, i * 32)?;
        if let Some((off, _)) = tail_of(&w) {
            if off % 32 == 0 {
                head_words = head_words.min(off / 32);
            }
        }
    }

    let mut params = Vec::with_capacity(head_words);
    for i in 0..head_words.min(word_count) {
        let w = word_at(body, i * 32)?;
        let head_offset = 4 + i * 32;
        if let Some((off, tail)) = tail_of(&w) {
            // only treat as dynamic if the offset lands at or after the head
            if off >= head_words * 32 {
                params.push(InferredParam {
                    ty: InferredType::Bytes,
                    word: w,
                    head_offset,
                    tail: Some(tail),
                });
                continue;
            }
        }
        let ty = if looks_like_address(&w) {
            InferredType::Address
        } else {
            InferredType::Uint256
        };
        params.push(InferredParam {
            ty,
            word: w,
            head_offset,
            tail: None,
        });
    }
    Some(DecodedCalldata { selector, params })
}

/// Render an inferred parameter list like `(uint256,uint256,address,bytes)`.
pub fn type_tuple(params: &[InferredParam]) -> String {
    let tys: Vec<&str> = params.iter().map(|p| p.ty.as_str()).collect();
    format!("({})", tys.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::word_to_be_bytes;

    fn w(v: U256) -> [u8; 32] {
        word_to_be_bytes(&v)
    }

    #[test]
    fn static_words_classify_by_range() {
        let mut data = vec![0xaa, 0xbb, 0xcc, 0xdd];
        data.extend_from_slice(&w(U256::from(7u64)));
        let addr = U256::from_str_radix("55d398326f99059fF775485246999027B3197955", 16).unwrap();
        data.extend_from_slice(&w(addr));
        let d = decode_calldata(&data).unwrap();
        assert_eq!(d.selector, [0xaa, 0xbb, 0xcc, 0xdd]);
        assert_eq!(d.params.len(), 2);
        assert_eq!(d.params[0].ty, InferredType::Uint256);
        assert_eq!(d.params[1].ty, InferredType::Address);
        assert_eq!(type_tuple(&d.params), "(uint256,address)");
    }

    #[test]
    fn dynamic_tail_detected() {
        // f(uint256, bytes): head = [5, 0x40], tail = len 3 + data
        let mut data = vec![1, 2, 3, 4];
        data.extend_from_slice(&w(U256::from(5u64)));
        data.extend_from_slice(&w(U256::from(64u64)));
        data.extend_from_slice(&w(U256::from(3u64)));
        let mut tail = vec![0xde, 0xad, 0xbe];
        tail.resize(32, 0);
        data.extend_from_slice(&tail);
        let d = decode_calldata(&data).unwrap();
        assert_eq!(d.params.len(), 2);
        assert_eq!(d.params[1].ty, InferredType::Bytes);
        assert_eq!(d.params[1].tail.as_deref(), Some(&[0xde, 0xad, 0xbe][..]));
        assert_eq!(type_tuple(&d.params), "(uint256,bytes)");
    }

    #[test]
    fn zero_arg_and_garbage() {
        let d = decode_calldata(&[0x4a, 0x24, 0x8d, 0x2a]).unwrap();
        assert!(d.params.is_empty());
        assert!(decode_calldata(&[1, 2, 3]).is_none());
        assert!(decode_calldata(&[1, 2, 3, 4, 5]).is_none());
    }
}
