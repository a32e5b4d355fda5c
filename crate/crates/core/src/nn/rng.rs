//! Named, seedable random streams.
//!
//! Each stochastic site draws from its own ChaCha8 stream. The stream id is a
//! pure function of `(purpose, epoch, index)`, so any stream can be recreated
//! from the run seed without replaying earlier draws.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a stream is used for. The discriminant is baked into the stream id
/// and must never be renumbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Init = 1,
    Shuffle = 2,
    Noise = 3,
    Pairs = 4,
    Eval = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub purpose: Purpose,
    pub epoch: u64,
    pub index: u64,
}

impl StreamKey {
    pub fn new(purpose: Purpose, epoch: u64, index: u64) -> Self {
        StreamKey {
            purpose,
            epoch,
            index,
        }
    }

    /// 8 bits of purpose, 24 bits of epoch, 32 bits of index.
    pub fn stream_id(&self) -> u64 {
        ((self.purpose as u64) << 56) | ((self.epoch & 0xFF_FFFF) << 32) | (self.index & 0xFFFF_FFFF)
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, key: StreamKey) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(key.stream_id());
        RngStream { inner }
    }

    pub fn for_purpose(seed: u64, purpose: Purpose, epoch: u64, index: u64) -> Self {
        Self::new(seed, StreamKey::new(purpose, epoch, index))
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }

    /// `amount` distinct values from `0..length`, in sampling order.
    pub fn sample_indices(&mut self, length: usize, amount: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.inner, length, amount).into_vec()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_draws() {
        let mut a = RngStream::for_purpose(7, Purpose::Noise, 3, 11);
        let mut b = RngStream::for_purpose(7, Purpose::Noise, 3, 11);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn distinct_keys_diverge() {
        let mut a = RngStream::for_purpose(7, Purpose::Noise, 3, 11);
        let mut b = RngStream::for_purpose(7, Purpose::Noise, 3, 12);
        let mut c = RngStream::for_purpose(7, Purpose::Pairs, 3, 11);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..4).map(|_| c.next_u64()).collect();
        assert_ne!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn word_position_advances() {
        let mut a = RngStream::for_purpose(1, Purpose::Init, 0, 0);
        assert_eq!(a.word_pos(), 0);
        a.next_u64();
        assert_eq!(a.word_pos(), 2);
    }
}
