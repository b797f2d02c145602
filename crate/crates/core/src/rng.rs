use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seedable source of uniform reals strictly inside `(0, 1)`.
///
/// Every randomized operation in the crate takes one of these explicitly so
/// runs can be replayed bit-for-bit from a seed.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    draws: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            draws: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for `(seed, label)`. Used so that each consumer of
    /// a user-supplied seed gets its own sequence.
    pub fn derived(seed: u64, label: &str) -> Self {
        Self::new(mix(seed, fnv1a(label.as_bytes())))
    }

    /// Independent stream for trial `index` of a Monte Carlo run. Adding
    /// trials never changes the draws of earlier ones.
    pub fn for_trial(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            seed,
            draws: 0,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of uniforms drawn so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.sample(Open01)
    }

    /// Uniform index in `0..n`; `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Standard exponential variate.
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// splitmix64 finalizer over the xor of both inputs.
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(29) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
