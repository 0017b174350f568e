//! Seeded random streams.
//!
//! ChaCha8 is a counter-based generator with a portable, documented output
//! sequence. Independent streams for parallel work are derived from one seed
//! by selecting the ChaCha stream id, so results do not depend on how work is
//! scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
