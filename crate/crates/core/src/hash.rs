//! Stable 64-bit node-id hashing used by the binary vector formats.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the UTF-8 bytes of a node id.
pub fn node_hash(id: &str) -> u64 {
    id.bytes().fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vectors() {
        assert_eq!(node_hash(""), 0xcbf29ce484222325);
        assert_eq!(node_hash("a"), 0xaf63dc4c8601ec8c);
        assert_eq!(node_hash("foobar"), 0x85944171f73967e8);
    }
}
