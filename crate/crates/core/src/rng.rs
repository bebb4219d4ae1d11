//! Counter-based random streams.
//!
//! A stream is addressed by `(master_seed, stream_index)`: the seed keys a
//! ChaCha8 generator and the index selects its 64-bit stream id. Within one
//! stream, separate purposes read from disjoint word ranges.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Independent sub-ranges of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Coefficients = 0,
    Isometry = 1,
    Points = 2,
    Auxiliary = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexGaussianStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl ComplexGaussianStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        self.rng_for(Purpose::Coefficients)
    }

    pub fn rng_for(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng.set_word_pos((purpose as u128) << 48);
        rng
    }

    /// A stream with a different index under the same seed.
    pub fn with_index(&self, stream_index: u64) -> Self {
        Self { stream_index, ..*self }
    }
}

/// Standard complex Gaussian: independent N(0, ½) parts, so E|Z|² = 1.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
