//! Reproducible random streams.
//!
//! Every stream is a xoshiro256++ generator whose 256-bit state is filled by
//! SplitMix64 from a single 64-bit seed. Child seeds are derived with
//! [`split`], a counter-based hash of `(parent, stream_id)`, so any trial's
//! stream can be rebuilt from the master seed and its index alone, regardless
//! of which worker thread ran it or in what order.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Random stream type used everywhere in the engine.
pub type Stream = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer (Stafford variant 13).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `stream_id` from `parent`.
///
/// `mix64(mix64(parent) + (stream_id + 1) * GOLDEN_GAMMA)`; the extra mix of
/// the parent keeps sibling families with adjacent parents from overlapping.
#[inline]
pub fn split(parent: u64, stream_id: u64) -> u64 {
    mix64(mix64(parent).wrapping_add(stream_id.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Stream id of trial `trial` in the Δ-grid cell `cell`.
#[inline]
pub fn cell_stream_id(cell: u32, trial: u32) -> u64 {
    ((cell as u64) << 32) | trial as u64
}

/// Builds a stream from a 64-bit seed.
pub fn stream(seed: u64) -> Stream {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform draw in the open interval (0, 1) with 53 random bits.
#[inline]
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` by Lemire's multiply-shift (bias < n / 2^64).
#[inline]
pub fn index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Standard normal draw by the Box–Muller transform.
///
/// Consumes exactly two 64-bit outputs and returns `sqrt(-2 ln u1) cos(2π u2)`;
/// the sine half is discarded so the number of outputs consumed per draw is
/// fixed.
#[inline]
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u1 = open01(rng);
    let u2 = open01(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Standard normal source using Marsaglia's polar method.
///
/// Each accepted pair `(v1, v2)` uniform in the unit disc (with
/// `v = 2u − 1`, rejection outside the disc or at the origin) yields two
/// normals `v1·m` and `v2·m`, `m = √(−2 ln s / s)`, `s = v1² + v2²`. The first
/// is returned and the second cached for the next call.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: Stream,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: stream(seed),
            spare: None,
        }
    }

    pub fn rng(&mut self) -> &mut Stream {
        &mut self.rng
    }

    #[inline]
    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let v1 = 2.0 * open01(&mut self.rng) - 1.0;
            let v2 = 2.0 * open01(&mut self.rng) - 1.0;
            let s = v1 * v1 + v2 * v2;
            if s < 1.0 && s > 0.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v2 * m);
                return v1 * m;
            }
        }
    }
}
