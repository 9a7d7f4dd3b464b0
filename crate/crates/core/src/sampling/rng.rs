//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose 256-bit
//! seed is derived from `(master_seed, purpose, point, iteration)` and whose
//! stream id is the replicate index. A given key therefore reproduces the same
//! sequence no matter which thread evaluates it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; keeps unrelated estimators statistically independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    ExitPoint,
    Path,
    Operator,
    Residual,
    Boundary,
    Audit,
    Control,
    Sequence,
    Custom(u32),
}

impl Purpose {
    pub fn tag(self) -> u32 {
        match self {
            Purpose::ExitPoint => 1,
            Purpose::Path => 2,
            Purpose::Operator => 3,
            Purpose::Residual => 4,
            Purpose::Boundary => 5,
            Purpose::Audit => 6,
            Purpose::Control => 7,
            Purpose::Sequence => 8,
            Purpose::Custom(t) => 0x1000 + t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub purpose: Purpose,
    pub point: u64,
    pub iteration: u64,
    pub replicate: u64,
}

/// One reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub key: StreamKey,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, key: StreamKey) -> Self {
        RngStream { master_seed, key }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let w0 = splitmix64(self.master_seed ^ splitmix64(u64::from(self.key.purpose.tag())));
        let w1 = splitmix64(w0 ^ self.key.point);
        let w2 = splitmix64(w1 ^ self.key.iteration.rotate_left(17));
        let w3 = splitmix64(w2 ^ 0x5851_f42d_4c95_7f2d);
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip([w0, w1, w2, w3]) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.key.replicate);
        rng
    }
}

/// A family of streams sharing seed, purpose, point and iteration; replicates
/// are indexed on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Streams {
    pub master_seed: u64,
    pub purpose: Purpose,
    pub point: u64,
    pub iteration: u64,
}

impl Streams {
    pub fn new(master_seed: u64, purpose: Purpose) -> Self {
        Streams {
            master_seed,
            purpose,
            point: 0,
            iteration: 0,
        }
    }

    pub fn at_point(self, point: u64) -> Self {
        Streams { point, ..self }
    }

    pub fn at_iteration(self, iteration: u64) -> Self {
        Streams { iteration, ..self }
    }

    pub fn with_purpose(self, purpose: Purpose) -> Self {
        Streams { purpose, ..self }
    }

    pub fn replicate(&self, replicate: u64) -> RngStream {
        RngStream::new(
            self.master_seed,
            StreamKey {
                purpose: self.purpose,
                point: self.point,
                iteration: self.iteration,
                replicate,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn equal_keys_reproduce() {
        let s = Streams::new(42, Purpose::Path).at_point(3).at_iteration(2);
        let a: Vec<u64> = (0..8)
            .map(|_| 0)
            .scan(s.replicate(5).rng(), |r, _| Some(r.random()))
            .collect();
        let b: Vec<u64> = (0..8)
            .map(|_| 0)
            .scan(s.replicate(5).rng(), |r, _| Some(r.random()))
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_keys_differ() {
        let base = Streams::new(42, Purpose::Path);
        let first = |s: RngStream| s.rng().random::<u64>();
        let v = [
            first(base.replicate(0)),
            first(base.replicate(1)),
            first(base.at_point(1).replicate(0)),
            first(base.at_iteration(1).replicate(0)),
            first(base.with_purpose(Purpose::ExitPoint).replicate(0)),
            first(Streams::new(43, Purpose::Path).replicate(0)),
        ];
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                assert_ne!(v[i], v[j], "streams {i} and {j} collide");
            }
        }
    }
}
