//! Synthetic video ids.
//!
//! A sim id is 11 URL-safe characters: one for the graph level, one for the
//! [`VideoKind`], then nine characters holding a 38-bit node key and a 16-bit
//! checksum. Every checksum-valid token names a catalog entry, so the graph
//! can be generated lazily from the id alone.

use crate::model::{VideoId, VideoKind};

const ALPHABET: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
pub const NODE_BITS: u32 = 38;
pub const NODE_MASK: u64 = (1 << NODE_BITS) - 1;
pub const MAX_LEVEL: u32 = 63;

/// splitmix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of several words.
pub fn mix_all(words: &[u64]) -> u64 {
    words.iter().fold(0x5851_f42d_4c95_7f2d, |acc, &w| mix(acc ^ mix(w)))
}

/// Uniform in [0, 1) from a hash.
pub fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeRef {
    pub level: u32,
    pub kind: VideoKind,
    pub node: u64,
}

fn kind_index(kind: VideoKind) -> u64 {
    VideoKind::ALL.iter().position(|k| *k == kind).unwrap() as u64
}

fn checksum(level: u32, kind: VideoKind, node: u64) -> u64 {
    mix_all(&[0xc0ffee, level as u64, kind_index(kind), node]) & 0xffff
}

impl NodeRef {
    pub fn new(level: u32, kind: VideoKind, node: u64) -> Self {
        NodeRef {
            level: level.min(MAX_LEVEL),
            kind,
            node: node & NODE_MASK,
        }
    }

    pub fn encode(&self) -> VideoId {
        let payload = (self.node << 16) | checksum(self.level, self.kind, self.node);
        let mut out = String::with_capacity(11);
        out.push(ALPHABET[self.level as usize] as char);
        out.push(ALPHABET[kind_index(self.kind) as usize] as char);
        for i in (0..9).rev() {
            out.push(ALPHABET[((payload >> (6 * i)) & 63) as usize] as char);
        }
        VideoId::new(out).expect("sim ids are always valid")
    }

    pub fn decode(id: &VideoId) -> Option<NodeRef> {
        let bytes = id.as_str().as_bytes();
        if bytes.len() != 11 {
            return None;
        }
        let digit = |b: u8| ALPHABET.iter().position(|a| *a == b).map(|p| p as u64);
        let level = digit(bytes[0])? as u32;
        let kind = *VideoKind::ALL.get(digit(bytes[1])? as usize)?;
        let mut payload = 0u64;
        for &b in &bytes[2..] {
            payload = (payload << 6) | digit(b)?;
        }
        let node = payload >> 16;
        if payload & 0xffff != checksum(level, kind, node) {
            return None;
        }
        Some(NodeRef { level, kind, node })
    }
}
