use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based stream `index` of the global `seed`. Stream 0 builds the
/// spec; sweep point `i` uses stream `i + 1`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn point_stream(seed: u64, point: usize) -> ChaCha8Rng {
    stream(seed, point as u64 + 1)
}
