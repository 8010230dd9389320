use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies a reproducible random stream: a 64-bit seed and a 64-bit
/// sub-stream selector. Identical `(seed, stream)` pairs yield identical
/// sequences on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A derived sub-stream, e.g. one per trial or one per role within a run.
    pub fn child(&self, index: u64) -> RngState {
        let stream = splitmix64(self.stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ splitmix64(index));
        RngState {
            seed: self.seed,
            stream,
        }
    }

    pub fn rng(&self) -> Rng {
        Rng::new(*self)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 generator keyed by the seed, positioned on the ChaCha stream
/// given by the sub-stream id. Distinct stream ids never overlap.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

impl Rng {
    pub fn new(state: RngState) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(state.seed);
        inner.set_stream(state.stream);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform double on the open interval (0, 1); one 64-bit draw.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// Uniform index in `0..n` by rejection (unbiased). Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fair coin; one 64-bit draw.
    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// One Box–Muller pair; two uniform draws.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    /// A single standard normal. Consumes a full Box–Muller pair (two draws)
    /// and discards the second variate so the draw count stays fixed.
    pub fn standard_normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    /// Fills `out` with i.i.d. standard normals, consuming exactly
    /// `2 * ceil(out.len() / 2)` uniform draws.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (a, b) = self.normal_pair();
            pair[0] = a;
            pair[1] = b;
        }
        if let [last] = chunks.into_remainder() {
            *last = self.normal_pair().0;
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
