//! Seeded random streams.
//!
//! Every consumer gets its own ChaCha8 stream derived from the master seed
//! and a key, so draws never depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domains keep streams for different purposes apart even when their
/// numeric keys coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Background = 1,
    Forest = 2,
    Synth = 3,
}

fn keyed(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (domain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng
}

/// Background-sampling stream for one (repeat, predictor) pair.
pub fn background_stream(seed: u64, repeat: u32, predictor: u32) -> ChaCha8Rng {
    keyed(
        seed,
        Domain::Background,
        (u64::from(repeat) << 32) | u64::from(predictor),
    )
}

pub fn tree_stream(seed: u64, tree: u64) -> ChaCha8Rng {
    keyed(seed, Domain::Forest, tree)
}

pub fn synth_stream(seed: u64) -> ChaCha8Rng {
    keyed(seed, Domain::Synth, 0)
}

/// Standard normal draw by the Box-Muller cosine branch. Consumes exactly
/// two uniforms per call.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // gen::<f64>() is in [0, 1); flip it so the log argument is never zero.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
