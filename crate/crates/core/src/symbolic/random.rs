use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::SymbolWord;

/// Fair bits from `ChaCha20Rng::seed_from_u64(seed)`, taken least significant
/// bit first from successive `next_u64` outputs.
pub fn bernoulli_stream(seed: u64, len: usize) -> SymbolWord {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut bits = Vec::with_capacity(len);
    while bits.len() < len {
        let mut v = rng.next_u64();
        let take = (len - bits.len()).min(64);
        for _ in 0..take {
            bits.push(v & 1 == 1);
            v >>= 1;
        }
    }
    SymbolWord::from_bits(&bits)
}
