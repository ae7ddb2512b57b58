//! Counter-based random numbers keyed on `(seed, x, y, t)`.
//!
//! Every pixel of every frame gets its own short stream, derived by hashing the
//! key with the SplitMix64 finalizer. Results therefore do not depend on the
//! order in which pixels are visited.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A short random stream owned by one `(seed, x, y, t)` key.
#[derive(Clone, Debug)]
pub struct PixelRng {
    state: u64,
}

impl PixelRng {
    pub fn new(seed: u64, x: u32, y: u32, t: u32) -> Self {
        let mut s = mix(seed ^ GOLDEN);
        s = mix(s ^ (((x as u64) << 32) | y as u64));
        s = mix(s ^ (t as u64).wrapping_add(1).wrapping_mul(GOLDEN));
        Self { state: s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    #[inline]
    pub fn below(&mut self, n: u32) -> u32 {
        debug_assert!(n > 0);
        (((self.next_u64() >> 32) * n as u64) >> 32) as u32
    }

    /// Uniform real in `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
