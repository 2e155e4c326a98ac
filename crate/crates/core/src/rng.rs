//! Counter-addressed random streams.
//!
//! A stream is a ChaCha8 keystream selected by `(seed, domain)` for the key
//! and by a 64-bit index for the stream id. Each standard complex normal
//! consumes exactly two 64-bit words, so draw `k` of a stream always sits
//! at the same keystream position no matter who asks for it or when.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain tag for spectral-line fields.
pub const DOMAIN_FIELD: u64 = 0x5f1e_1d00;
/// Domain tag for moment ensembles.
pub const DOMAIN_MOMENT: u64 = 0x3033_e200;
/// Domain tag for stationary-process sources.
pub const DOMAIN_PROCESS: u64 = 0x7e03_5500;
/// Domain tag for random test ensembles drawn by the CLI.
pub const DOMAIN_ENSEMBLE: u64 = 0xe45e_0b1e;

const WORDS_PER_DRAW: u128 = 4;

/// Keystream for `(seed, domain, index)`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ComplexNormalStream {
    let key = seed ^ domain.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    ComplexNormalStream { rng }
}

pub struct ComplexNormalStream {
    rng: ChaCha8Rng,
}

impl ComplexNormalStream {
    /// Jump to draw number `k`.
    pub fn seek(&mut self, k: u64) {
        self.rng.set_word_pos(k as u128 * WORDS_PER_DRAW);
    }

    /// Zero-mean circular complex Gaussian with E|z|² = 1 (Box–Muller).
    pub fn next_complex(&mut self) -> Complex64 {
        let u1 = ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        Complex64::from_polar((-u1.ln()).sqrt(), 2.0 * PI * u2)
    }

    /// Uniform draw in [0, 1); consumes one draw slot.
    pub fn next_uniform(&mut self) -> f64 {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.rng.next_u64();
        u
    }
}
