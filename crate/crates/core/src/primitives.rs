//! Shared low-level value types: 256-bit machine words, addresses, hashes,
//! and the calldata side table used for cheap node identity.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use tiny_keccak::{Hasher, Keccak};

pub use primitive_types::{H160 as Address, H256, U256};

/// Number of stack words captured per step by default. Covers the widest
/// recorded instruction (CALL, 7 operands) with one spare.
pub const DEFAULT_STACK_CAPTURE: usize = 8;

/// Calldata at or below this size stays addressable inline; anything larger
/// must live in the side table (it always does here, the bound only matters
/// for serialization decisions).
pub const CALLDATA_SPILL_BYTES: usize = 4096;

pub fn keccak256(data: &[u8]) -> H256 {
    let mut out = [0u8; 32];
    let mut k = Keccak::v256();
    k.update(data);
    k.finalize(&mut out);
    H256(out)
}

/// First four bytes of calldata, when present.
pub fn selector_of(calldata: &[u8]) -> Option<[u8; 4]> {
    if calldata.len() >= 4 {
        Some([calldata[0], calldata[1], calldata[2], calldata[3]])
    } else {
        None
    }
}

/// Identity of one call input: keccak digest plus length. Full bytes are
/// resolved through a [`CalldataTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CalldataRef {
    pub digest: H256,
    pub len: u32,
}

impl CalldataRef {
    pub fn empty() -> Self {
        CalldataRef {
            digest: keccak256(&[]),
            len: 0,
        }
    }
}

/// Side table mapping calldata digests to the full bytes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalldataTable {
    entries: BTreeMap<H256, Vec<u8>>,
}

impl CalldataTable {
    pub fn intern(&mut self, bytes: &[u8]) -> CalldataRef {
        let digest = keccak256(bytes);
        self.entries.entry(digest).or_insert_with(|| bytes.to_vec());
        CalldataRef {
            digest,
            len: bytes.len() as u32,
        }
    }

    pub fn resolve(&self, r: &CalldataRef) -> Option<&[u8]> {
        self.entries.get(&r.digest).map(|v| v.as_slice())
    }
}

/// Render an address as 0x-prefixed EIP-55 checksummed hex.
pub fn checksum_address(addr: &Address) -> String {
    let lower = hex::encode(addr.as_bytes());
    let hash = keccak256(lower.as_bytes());
    let mut out = String::with_capacity(42);
    out.push_str("0x");
    for (i, ch) in lower.chars().enumerate() {
        let nibble = (hash[i / 2] >> (4 * (1 - i % 2))) & 0xf;
        if ch.is_ascii_alphabetic() && nibble >= 8 {
            out.push(ch.to_ascii_uppercase());
        } else {
            out.push(ch);
        }
    }
    out
}

pub fn word_to_address(w: &U256) -> Address {
    let buf = w.to_big_endian();
    Address::from_slice(&buf[12..])
}

pub fn address_to_word(a: &Address) -> U256 {
    U256::from_big_endian(a.as_bytes())
}

/// True when a 256-bit word plausibly holds an address: it fits in 160 bits
/// and uses most of them (keccak-derived addresses essentially always set
/// the high bytes, while token amounts stay far below 2^144).
pub fn looks_like_address(w: &U256) -> bool {
    (*w >> 160).is_zero() && !(*w >> 144).is_zero()
}

pub fn word_to_be_bytes(w: &U256) -> [u8; 32] {
    w.to_big_endian()
}

/// Wrapper displaying a word the way the pseudocode grammar does: small
/// values in decimal, round values as `a * 10^b`, address-shaped values as
/// checksummed hex, everything else as raw hex.
pub struct DisplayWord<'a>(pub &'a U256);

impl fmt::Display for DisplayWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.0;
        if looks_like_address(w) {
            return write!(f, "{}", checksum_address(&word_to_address(w)));
        }
        if *w <= U256::from(1_000_000u64) {
            return write!(f, "{}", w);
        }
        // a * 10^b reads better than 21 digits; prefer the wei scale
        let small = U256::from(1_000_000u64);
        let wei = U256::exp10(18);
        if (*w % wei).is_zero() && *w / wei <= small {
            return write!(f, "{} * 10^18", *w / wei);
        }
        let ten = U256::from(10u64);
        let mut mantissa = *w;
        let mut exp = 0u32;
        while (mantissa % ten).is_zero() {
            mantissa /= ten;
            exp += 1;
        }
        if exp >= 6 && mantissa <= small {
            return write!(f, "{} * 10^{}", mantissa, exp);
        }
        write!(f, "{:#x}", w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_matches_known_vector() {
        // EIP-55 reference vector
        let addr = Address::from_slice(&hex::decode("5aaeb6053f3e94c9b9a09f33669435e7ef1beaed").unwrap());
        assert_eq!(checksum_address(&addr), "0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed");
    }

    #[test]
    fn calldata_table_roundtrip() {
        let mut t = CalldataTable::default();
        let r = t.intern(b"\x01\x02\x03");
        assert_eq!(r.len, 3);
        assert_eq!(t.resolve(&r), Some(&b"\x01\x02\x03"[..]));
        let r2 = t.intern(b"\x01\x02\x03");
        assert_eq!(r, r2);
    }

    #[test]
    fn word_display_forms() {
        assert_eq!(DisplayWord(&U256::from(0u64)).to_string(), "0");
        assert_eq!(DisplayWord(&U256::from(1200u64)).to_string(), "1200");
        let ether_1200 = U256::from(1200u64) * U256::exp10(18);
        assert_eq!(DisplayWord(&ether_1200).to_string(), "1200 * 10^18");
        let addr = U256::from_str_radix("55d398326f99059fF775485246999027B3197955", 16).unwrap();
        assert_eq!(
            DisplayWord(&addr).to_string(),
            "0x55d398326f99059fF775485246999027B3197955"
        );
    }
}
