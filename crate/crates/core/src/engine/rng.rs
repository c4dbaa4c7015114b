//! Seeded random streams.
//!
//! One seed drives every run. Each subsystem draws from its own ChaCha stream
//! (same key, distinct stream id) so adding draws in one subsystem never
//! perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamLabel {
    Placement,
    Mobility,
    Mac,
    Traffic,
    Timers,
}

impl StreamLabel {
    fn stream_id(self) -> u64 {
        match self {
            StreamLabel::Placement => 1,
            StreamLabel::Mobility => 2,
            StreamLabel::Mac => 3,
            StreamLabel::Traffic => 4,
            StreamLabel::Timers => 5,
        }
    }
}

pub fn fork(seed: u64, label: StreamLabel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label.stream_id());
    rng
}
