//! Deterministic hashing shared by partitioners and hash indexes.
//!
//! All hash maps in the engine use [`StableState`], so iteration order and
//! partition layouts are identical across runs, platforms and worker counts.

use core::hash::{BuildHasher, Hash, Hasher};

/// Finalizer of SplitMix64. Bijective on `u64`.
#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Streaming hasher: folds each written word through [`mix64`].
#[derive(Clone, Copy, Debug, Default)]
pub struct StableHasher {
    state: u64,
}

impl StableHasher {
    #[inline]
    fn fold(&mut self, word: u64) {
        self.state = mix64(self.state.rotate_left(5) ^ word);
    }
}

impl Hasher for StableHasher {
    fn finish(&self) -> u64 {
        self.state
    }

    fn write(&mut self, bytes: &[u8]) {
        let mut chunks = bytes.chunks_exact(8);
        for chunk in &mut chunks {
            let mut word = [0u8; 8];
            word.copy_from_slice(chunk);
            self.fold(u64::from_le_bytes(word));
        }
        let rest = chunks.remainder();
        if !rest.is_empty() {
            let mut word = [0u8; 8];
            word[..rest.len()].copy_from_slice(rest);
            self.fold(u64::from_le_bytes(word) ^ ((rest.len() as u64) << 56));
        }
    }

    fn write_u8(&mut self, i: u8) {
        self.fold(i as u64);
    }
    fn write_u16(&mut self, i: u16) {
        self.fold(i as u64);
    }
    fn write_u32(&mut self, i: u32) {
        self.fold(i as u64);
    }
    fn write_u64(&mut self, i: u64) {
        self.fold(i);
    }
    fn write_usize(&mut self, i: usize) {
        self.fold(i as u64);
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StableState;

impl BuildHasher for StableState {
    type Hasher = StableHasher;
    fn build_hasher(&self) -> StableHasher {
        StableHasher::default()
    }
}

pub type HashMap<K, V> = hashbrown::HashMap<K, V, StableState>;
pub type HashSet<K> = hashbrown::HashSet<K, StableState>;

pub fn new_map<K, V>() -> HashMap<K, V> {
    HashMap::with_hasher(StableState)
}

pub fn map_with_capacity<K, V>(n: usize) -> HashMap<K, V> {
    HashMap::with_capacity_and_hasher(n, StableState)
}

pub fn new_set<K>() -> HashSet<K> {
    HashSet::with_hasher(StableState)
}

/// Stable 64-bit hash of any hashable value.
pub fn stable_hash<T: Hash + ?Sized>(value: &T) -> u64 {
    let mut h = StableHasher::default();
    value.hash(&mut h);
    h.finish()
}
