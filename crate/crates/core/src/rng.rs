//! Counter-derived random substreams.
//!
//! Every stochastic quantity in the simulator is drawn from a ChaCha stream
//! addressed by (seed, branch, index). Monte Carlo realizations map the
//! realization counter to `index`, so results are a pure function of the seed
//! and the sample count, independent of how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Branch ids used by the simulation engine. Monte Carlo branches are offset
/// by the step index so every step draws from fresh streams.
pub const BRANCH_MOBILITY: u32 = 1;
pub const BRANCH_MEASUREMENT: u32 = 2;
pub const BRANCH_MC_BASE: u32 = 1024;

/// Address of a family of independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    branch: u32,
}

impl RngStream {
    /// Root stream family for a run seed.
    pub fn root(seed: u64) -> Self {
        RngStream { seed, branch: 0 }
    }

    /// A sibling family identified by `branch`.
    pub fn branch(&self, branch: u32) -> Self {
        RngStream { seed: self.seed, branch }
    }

    /// Generator for substream `index` within this family. Distinct
    /// (branch, index) pairs select distinct ChaCha streams, which are
    /// statistically independent by construction.
    pub fn rng(&self, index: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((self.branch as u64) << 32) | index as u64);
        rng
    }
}
