//! Serde helpers for 0x-prefixed hex byte strings.

use serde::{Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&format!("0x{}", hex::encode(bytes)))
}

pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
    let s = String::deserialize(de)?;
    let t = s.strip_prefix("0x").unwrap_or(&s);
    hex::decode(t).map_err(serde::de::Error::custom)
}
