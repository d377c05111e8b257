//! Counter-based seed derivation.
//!
//! Every stochastic sub-task of an experiment (replication, Monte Carlo
//! forecast, auxiliary path) draws its seed as
//! `splitmix64(master ^ (purpose << 32) ^ counter)`, so serial and
//! restructured runs of the same config produce identical streams and no
//! two sub-tasks share one.

/// Purpose tags keep seed streams for different roles disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPurpose {
    MainPath,
    AuxiliaryPath,
    Replication,
    McForecast,
    Mixture,
}

impl SeedPurpose {
    fn tag(self) -> u64 {
        match self {
            SeedPurpose::MainPath => 1,
            SeedPurpose::AuxiliaryPath => 2,
            SeedPurpose::Replication => 3,
            SeedPurpose::McForecast => 4,
            SeedPurpose::Mixture => 5,
        }
    }
}

/// SplitMix64 finalizer over the mixed (master, purpose, counter) word.
pub fn derive_seed(master: u64, purpose: SeedPurpose, counter: u64) -> u64 {
    let mut z = master
        ^ (purpose.tag() << 32)
        ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_purposes_and_counters_give_distinct_seeds() {
        let a = derive_seed(42, SeedPurpose::Replication, 0);
        let b = derive_seed(42, SeedPurpose::Replication, 1);
        let c = derive_seed(42, SeedPurpose::McForecast, 0);
        let d = derive_seed(43, SeedPurpose::Replication, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        // Deterministic.
        assert_eq!(a, derive_seed(42, SeedPurpose::Replication, 0));
    }
}
