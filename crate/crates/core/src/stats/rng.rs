use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A reproducible random stream identified by `(seed, index)`.
///
/// The index selects an independent ChaCha stream for the same key, so
/// replication `r` of an experiment always sees the same draws no matter
/// which worker runs it or in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }

    /// Child stream `tag` of this stream. Children of distinct parents, and
    /// distinct children of one parent, never share a `(key, stream)` pair
    /// except by 64-bit hash collision.
    pub fn substream(&self, tag: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(self.index.wrapping_add(0xA076_1D64_78BD_642F)));
        RngStream::new(key, tag)
    }
}
