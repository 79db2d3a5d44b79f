use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random stream for one task: ChaCha8 keyed by the master seed, with the task
/// identifier selecting an independent stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    task: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, task: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(task);
        Self { seed, task, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn task(&self) -> u64 {
        self.task
    }

    /// Child stream for a sub-task, derived deterministically from this one's key.
    pub fn derive(&self, sub: u64) -> Self {
        // splitmix64 keeps distinct (task, sub) pairs apart
        let mut z = self.task.wrapping_add(sub.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Self::new(self.seed ^ 0xD1B5_4A32_D192_ED03, z)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
