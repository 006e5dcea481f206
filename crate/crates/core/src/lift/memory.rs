//! Concrete-range memory and local-variable maps.
//!
//! Memory ranges are always concrete along the observed execution, so reads
//! and writes resolve deterministically: overlapping writes split existing
//! segments at the new range's boundaries, keeping segments pairwise
//! non-overlapping at all times.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expr::{Concrete, Expr, PairedValue};

/// Memory as an ordered map from concrete (offset, length) segments to
/// paired values. Non-overlap is an invariant, re-established by every write.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConcreteMemoryMap {
    segments: BTreeMap<u64, Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Segment {
    len: u64,
    value: PairedValue,
}

impl ConcreteMemoryMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Iterate (offset, len) spans in address order.
    pub fn spans(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.segments.iter().map(|(o, s)| (*o, s.len))
    }

    /// Write `value` at the concrete range `[offset, offset+len)`.
    /// Overlapping existing segments are split at the boundaries; fully
    /// covered parts are replaced. Zero-length writes are no-ops.
    pub fn write(&mut self, offset: u64, len: u64, value: PairedValue) {
        if len == 0 {
            return;
        }
        let end = offset + len;
        // collect segments intersecting [offset, end)
        let overlapping: Vec<u64> = self
            .segments
            .range(..end)
            .filter(|(o, s)| *o + s.len > offset)
            .map(|(o, _)| *o)
            .collect();
        for o in overlapping {
            let seg = self.segments.remove(&o).expect("segment present");
            let seg_end = o + seg.len;
            if o < offset {
                // keep the left remainder
                let keep = offset - o;
                let left = seg.value.slice(0, keep, seg.value.provenance);
                self.segments.insert(o, Segment { len: keep, value: left });
            }
            if seg_end > end {
                // keep the right remainder
                let skip = end - o;
                let keep = seg_end - end;
                let right = seg.value.slice(skip, keep, seg.value.provenance);
                self.segments.insert(end, Segment { len: keep, value: right });
            }
        }
        self.segments.insert(offset, Segment { len, value });
        debug_assert!(self.check_non_overlap());
    }

    /// Read the concrete range `[offset, offset+len)`.
    ///
    /// An exact segment hit returns the stored paired value. Reads spanning
    /// several segments return a concatenation expression with the concrete
    /// bytes spliced from the segments; unwritten bytes read as zero with a
    /// fresh `MEM0` marker.
    pub fn read(&self, offset: u64, len: u64, step: u64) -> PairedValue {
        if len == 0 {
            return PairedValue::new(Expr::Mem0, Concrete::Bytes(Vec::new()), step);
        }
        if let Some(seg) = self.segments.get(&offset) {
            if seg.len == len {
                return seg.value.clone();
            }
        }
        let end = offset + len;
        let mut parts: Vec<PairedValue> = Vec::new();
        let mut cursor = offset;
        for (&o, seg) in self.segments.range(..end) {
            let seg_end = o + seg.len;
            if seg_end <= cursor {
                continue;
            }
            let o_clamped = o.max(cursor);
            if o_clamped >= end {
                break;
            }
            if o_clamped > cursor {
                parts.push(zero_fill(o_clamped - cursor, step));
            }
            let take_end = seg_end.min(end);
            let part = if o_clamped == o && take_end == seg_end {
                seg.value.clone()
            } else {
                seg.value.slice(o_clamped - o, take_end - o_clamped, step)
            };
            parts.push(part);
            cursor = take_end;
        }
        if cursor < end {
            parts.push(zero_fill(end - cursor, step));
        }
        if parts.len() == 1 {
            return parts.into_iter().next().unwrap();
        }
        let mut bytes = Vec::with_capacity(len as usize);
        let mut known = true;
        for p in &parts {
            match p.concrete.as_bytes() {
                Some(b) => bytes.extend_from_slice(&b),
                None => {
                    known = false;
                    break;
                }
            }
        }
        PairedValue::new(
            Expr::Concat { parts },
            if known { Concrete::Bytes(bytes) } else { Concrete::Unknown },
            step,
        )
    }

    /// Non-overlap invariant check; asserted after every write in debug
    /// builds and exposed for tests.
    pub fn check_non_overlap(&self) -> bool {
        let mut prev_end = 0u64;
        for (&o, seg) in &self.segments {
            if o < prev_end {
                return false;
            }
            prev_end = o + seg.len;
        }
        true
    }
}

fn zero_fill(len: u64, step: u64) -> PairedValue {
    PairedValue::new(Expr::Mem0, Concrete::Bytes(vec![0u8; len as usize]), step)
}

/// Local variables: single assignment per version, reads resolve to the
/// latest version.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarMap {
    bindings: Vec<PairedValue>,
}

impl VarMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bind a fresh variable version to `value`, returning its id.
    pub fn fresh(&mut self, value: PairedValue) -> u32 {
        self.bindings.push(value);
        (self.bindings.len() - 1) as u32
    }

    pub fn get(&self, id: u32) -> Option<&PairedValue> {
        self.bindings.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::U256;

    fn word(v: u64, step: u64) -> PairedValue {
        PairedValue::constant(U256::from(v), step)
    }

    #[test]
    fn write_then_exact_read() {
        let mut m = ConcreteMemoryMap::new();
        m.write(0, 32, word(5, 0));
        let r = m.read(0, 32, 1);
        assert_eq!(r.expr, Expr::Const(U256::from(5)));
        assert_eq!(r.concrete.as_word(), Some(U256::from(5)));
    }

    #[test]
    fn overlapping_write_splits_prefix() {
        let mut m = ConcreteMemoryMap::new();
        m.write(0, 32, word(1, 0));
        m.write(16, 32, word(2, 1));
        let spans: Vec<_> = m.spans().collect();
        assert_eq!(spans, vec![(0, 16), (16, 32)]);
        assert!(m.check_non_overlap());
    }

    #[test]
    fn overwrite_replaces() {
        let mut m = ConcreteMemoryMap::new();
        m.write(0, 32, word(1, 0));
        m.write(0, 32, word(2, 1));
        assert_eq!(m.segment_count(), 1);
        assert_eq!(m.read(0, 32, 2).concrete.as_word(), Some(U256::from(2)));
    }

    #[test]
    fn read_of_unwritten_memory_is_zero() {
        let m = ConcreteMemoryMap::new();
        let r = m.read(96, 32, 0);
        assert_eq!(r.expr, Expr::Mem0);
        assert_eq!(r.concrete, Concrete::Bytes(vec![0u8; 32]));
    }

    #[test]
    fn spanning_read_concatenates() {
        let mut m = ConcreteMemoryMap::new();
        m.write(0, 32, word(0x11, 0));
        m.write(32, 32, word(0x22, 1));
        let r = m.read(0, 64, 2);
        match &r.expr {
            Expr::Concat { parts } => assert_eq!(parts.len(), 2),
            other => panic!("expected concat, got {other:?}"),
        }
        let bytes = r.concrete.as_bytes().unwrap();
        assert_eq!(bytes.len(), 64);
        assert_eq!(bytes[31], 0x11);
        assert_eq!(bytes[63], 0x22);
    }

    #[test]
    fn var_map_versions() {
        let mut v = VarMap::new();
        let a = v.fresh(word(1, 0));
        let b = v.fresh(word(2, 1));
        assert_ne!(a, b);
        assert_eq!(v.get(a).unwrap().concrete.as_word(), Some(U256::from(1)));
        assert_eq!(v.get(b).unwrap().concrete.as_word(), Some(U256::from(2)));
    }
}
