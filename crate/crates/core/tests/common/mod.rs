//! Shared helpers for integration tests: seeded random instance families.

use espopt::auction::{Auction, Dataset};
use espopt::rng::substream;
use rand::Rng;

/// A small seeded instance: 3 buyers, 5 auctions, sparse bids on a quarter
/// grid, mixed weights.
pub fn small_random_instance(seed: u64) -> Dataset {
    let mut rng = substream(0xBEEF, seed);
    loop {
        let mut auctions = Vec::new();
        for a in 0..5 {
            let mut bids = Vec::new();
            for b in 0..3u32 {
                if rng.random_bool(0.85) {
                    bids.push((b, rng.random_range(1..=40) as f64 / 4.0));
                }
            }
            let weight = if rng.random_bool(0.3) { 2.5 } else { 1.0 };
            auctions.push(Auction::new(format!("a{a}"), weight, bids).unwrap());
        }
        let ds = Dataset::new(auctions, 3).unwrap();
        // retry the rare all-empty draw
        if ds.auctions().iter().any(|a| !a.bids().is_empty()) {
            return ds;
        }
    }
}
