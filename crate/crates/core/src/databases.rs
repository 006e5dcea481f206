//! Optional local databases: 4-byte selector signatures and known-token
//! aliases. Absent entries fall back to `func_<selector>` naming and
//! `Contract_<prefix>` aliases.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{keccak256, Address};

#[derive(Debug, Error)]
pub enum DbError {
    #[error("failed to read database {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse database {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

/// One known function: pretty signature with parameter names, e.g.
/// `flashLoan(uint256 baseAmount, uint256 quoteAmount, address assetTo, bytes data)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSig {
    pub name: String,
    pub signature: String,
    /// Canonical parameter types, in order.
    pub param_types: Vec<String>,
}

impl FunctionSig {
    /// Parse a pretty signature like `transfer(address to, uint256 amount)`.
    pub fn parse(signature: &str) -> Option<FunctionSig> {
        let open = signature.find('(')?;
        let close = signature.rfind(')')?;
        let name = signature[..open].trim().to_string();
        let inner = &signature[open + 1..close];
        let param_types = if inner.trim().is_empty() {
            Vec::new()
        } else {
            split_params(inner)
                .iter()
                .map(|p| p.trim().split_whitespace().next().unwrap_or("").to_string())
                .collect()
        };
        Some(FunctionSig {
            name,
            signature: signature.to_string(),
            param_types,
        })
    }

    /// Canonical form for selector computation, e.g.
    /// `transfer(address,uint256)`.
    pub fn canonical(&self) -> String {
        format!("{}({})", self.name, self.param_types.join(","))
    }

    pub fn selector(&self) -> [u8; 4] {
        let digest = keccak256(self.canonical().as_bytes());
        [digest[0], digest[1], digest[2], digest[3]]
    }
}

/// Split a parameter list on top-level commas (tuples stay intact).
fn split_params(inner: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in inner.chars() {
        match c {
            '(' | '[' => {
                depth += 1;
                cur.push(c);
            }
            ')' | ']' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorDb {
    entries: BTreeMap<String, FunctionSig>,
}

impl SelectorDb {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert_signature(&mut self, signature: &str) -> Option<[u8; 4]> {
        let sig = FunctionSig::parse(signature)?;
        let sel = sig.selector();
        self.entries.insert(hex::encode(sel), sig);
        Some(sel)
    }

    pub fn lookup(&self, selector: &[u8; 4]) -> Option<&FunctionSig> {
        self.entries.get(&hex::encode(selector))
    }

    /// Display name for a selector: database name or `func_<selector>`.
    pub fn name_of(&self, selector: &[u8; 4]) -> String {
        match self.lookup(selector) {
            Some(sig) => sig.name.clone(),
            None => format!("func_{}", hex::encode(selector)),
        }
    }

    /// Load from a JSON map of `selector-hex -> pretty signature`.
    pub fn load(path: &Path) -> Result<Self, DbError> {
        let text = std::fs::read_to_string(path).map_err(|e| DbError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let raw: BTreeMap<String, String> =
            serde_json::from_str(&text).map_err(|e| DbError::Parse {
                path: path.display().to_string(),
                source: e,
            })?;
        let mut entries = BTreeMap::new();
        for (sel, signature) in raw {
            if let Some(sig) = FunctionSig::parse(&signature) {
                entries.insert(sel.trim_start_matches("0x").to_lowercase(), sig);
            }
        }
        Ok(SelectorDb { entries })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let raw: BTreeMap<String, String> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), v.signature.clone()))
            .collect();
        std::fs::write(path, serde_json::to_string_pretty(&raw).expect("serialize db"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDb {
    entries: BTreeMap<Address, TokenInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenInfo {
    pub alias: String,
    #[serde(default)]
    pub wrapped_native: bool,
    #[serde(default)]
    pub stable: bool,
}

impl TokenDb {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, addr: Address, info: TokenInfo) {
        self.entries.insert(addr, info);
    }

    pub fn get(&self, addr: &Address) -> Option<&TokenInfo> {
        self.entries.get(addr)
    }

    /// Known alias or `Contract_<first4bytes>`.
    pub fn alias_of(&self, addr: &Address) -> String {
        match self.entries.get(addr) {
            Some(t) => t.alias.clone(),
            None => format!("Contract_{}", &hex::encode(addr.as_bytes())[..8]),
        }
    }

    pub fn load(path: &Path) -> Result<Self, DbError> {
        let text = std::fs::read_to_string(path).map_err(|e| DbError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let entries: BTreeMap<Address, TokenInfo> =
            serde_json::from_str(&text).map_err(|e| DbError::Parse {
                path: path.display().to_string(),
                source: e,
            })?;
        Ok(TokenDb { entries })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(
            path,
            serde_json::to_string_pretty(&self.entries).expect("serialize db"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_parse_and_selector() {
        let sig = FunctionSig::parse("transfer(address to, uint256 amount)").unwrap();
        assert_eq!(sig.name, "transfer");
        assert_eq!(sig.canonical(), "transfer(address,uint256)");
        assert_eq!(sig.selector(), [0xa9, 0x05, 0x9c, 0xbb]);
    }

    #[test]
    fn zero_arg_signature() {
        let sig = FunctionSig::parse("totalSupply()").unwrap();
        assert_eq!(sig.canonical(), "totalSupply()");
        assert_eq!(sig.selector(), [0x18, 0x16, 0x0d, 0xdd]);
    }

    #[test]
    fn unknown_selector_fallback() {
        let db = SelectorDb::empty();
        assert_eq!(db.name_of(&[0xde, 0xad, 0xbe, 0xef]), "func_deadbeef");
    }

    #[test]
    fn token_alias_fallback() {
        let db = TokenDb::empty();
        let addr = Address::from_low_u64_be(0xabcdef);
        let alias = db.alias_of(&addr);
        assert!(alias.starts_with("Contract_"));
        assert_eq!(alias.len(), "Contract_".len() + 8);
    }
}
