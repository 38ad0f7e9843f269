//! Fixed workloads shared by the benchmarks.

use deltagen_core::generator::{sample_kb, GrammarConfig, KbSizeRange, VocabularyPool};
use deltagen_core::syntax::KnowledgeBase;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n` consistent KBs of the given level sized for `depth`, from a fixed seed.
pub fn sample_kbs(level: u8, depth: usize, n: usize, seed: u64) -> Vec<KnowledgeBase> {
    let pool = VocabularyPool::pool_a();
    let g = GrammarConfig::default();
    let size = KbSizeRange::for_depth(depth);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_kb(level, &pool, &g, &size, &mut rng, 200).expect("sampling succeeds")).collect()
}
