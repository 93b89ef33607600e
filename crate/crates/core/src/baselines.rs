//! Reference optimizers: the per-buyer lazy-optimal greedy and exhaustive
//! grid search.

use crate::auction::{Dataset, Reserve, ReserveGrid, ReserveVector};
use crate::error::{Error, Result};

/// Greedy baseline: each buyer's reserve is optimized in isolation over the
/// auctions where that buyer is the (tie-broken) highest bidder, pricing
/// lazily -- the winner stands first, then the reserve applies. Ties among
/// equally good reserves break toward the smaller one, so a buyer who never
/// wins gets reserve zero.
pub fn greedy_lazy_reserves(ds: &Dataset, grid: &ReserveGrid) -> ReserveVector {
    let n = ds.num_buyers() as usize;
    // auctions won per buyer, with (weight, own bid, second-highest bid)
    let mut wins: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); n];
    for auction in ds.auctions() {
        let winner = auction.top_bidder();
        let second = auction.top_two_bids().1;
        wins[winner as usize].push((auction.weight(), auction.bid(winner), second));
    }

    let mut reserves = Vec::with_capacity(n);
    for b in 0..n as u32 {
        let mut best = (Reserve::ZERO, f64::NEG_INFINITY);
        for &r in grid.buyer(b) {
            let value: f64 = wins[b as usize]
                .iter()
                .filter(|&&(_, bid, _)| r.cleared_by(bid))
                .map(|&(w, _, second)| w * r.value().max(second))
                .sum();
            // strictly better only: equal values keep the smaller reserve
            if value > best.1 {
                best = (r, value);
            }
        }
        reserves.push(best.0);
    }
    ReserveVector::new(reserves)
}

/// Exact optimum over the per-buyer grid product.
#[derive(Debug, Clone)]
pub struct GridOptimum {
    pub reserves: ReserveVector,
    pub value: f64,
}

/// Exhausts the grid product and returns its revenue maximizer; among ties,
/// the lexicographically smallest reserve vector. Refuses search spaces
/// larger than `cap` (pass 0 for the default of 10^7).
pub fn brute_force_optimum(ds: &Dataset, grid: &ReserveGrid, cap: usize) -> Result<GridOptimum> {
    let cap = if cap == 0 { 10_000_000 } else { cap };
    let n = ds.num_buyers() as usize;
    if grid.num_buyers() != n {
        return Err(Error::InvalidArgument(format!(
            "grid covers {} buyers, dataset has {n}",
            grid.num_buyers()
        )));
    }
    let space = grid.search_space();
    if space > cap {
        let sizes: Vec<usize> = (0..n as u32).map(|b| grid.buyer(b).len()).collect();
        return Err(Error::SizeLimit(format!(
            "grid product is {space} vectors (per-buyer sizes {sizes:?}), above the cap {cap}"
        )));
    }

    // odometer in lexicographic order, last buyer fastest; accepting only
    // strict improvements makes the winner lexicographically smallest
    let mut indices = vec![0usize; n];
    let mut current =
        ReserveVector::new((0..n as u32).map(|b| grid.buyer(b)[0]).collect());
    let mut best = GridOptimum {
        reserves: current.clone(),
        value: ds.total_revenue(&current),
    };
    loop {
        // advance
        let mut pos = n;
        while pos > 0 {
            let b = pos - 1;
            indices[b] += 1;
            if indices[b] < grid.buyer(b as u32).len() {
                current.set(b as u32, grid.buyer(b as u32)[indices[b]]);
                break;
            }
            indices[b] = 0;
            current.set(b as u32, grid.buyer(b as u32)[0]);
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let value = ds.total_revenue(&current);
        if value > best.value {
            best = GridOptimum {
                reserves: current.clone(),
                value,
            };
        }
    }
    Ok(best)
}
