//! Bid dataset model, eager second-price revenue semantics, and reserve grids.
//!
//! All types are immutable after construction and every operation is a pure
//! function, so evaluation across auctions and reserve vectors can run in
//! parallel with no shared state.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A reserve price: a finite non-negative amount, or "never sell to this
/// buyer" (positive infinity). Serialized as a number, or as the string
/// `"inf"` for the infinite sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reserve(f64);

impl Reserve {
    /// The sentinel that eliminates a buyer from every auction.
    pub const INFINITE: Reserve = Reserve(f64::INFINITY);
    pub const ZERO: Reserve = Reserve(0.0);

    pub fn finite(value: f64) -> Result<Reserve> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "reserve must be finite and non-negative, got {value}"
            )));
        }
        // normalize -0.0 so grid dedup sees a single zero
        Ok(Reserve(value + 0.0))
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// The raw value; `f64::INFINITY` for the sentinel.
    pub fn value(self) -> f64 {
        self.0
    }

    /// A bid clears this reserve when it is at least the reserve (ties clear).
    pub fn cleared_by(self, bid: f64) -> bool {
        bid >= self.0
    }
}

impl Eq for Reserve {}

impl Ord for Reserve {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Reserve {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Reserve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Reserve {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

struct ReserveVisitor;

impl Visitor<'_> for ReserveVisitor {
    type Value = Reserve;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a non-negative number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Reserve, E> {
        Reserve::finite(v).map_err(|e| E::custom(e.to_string()))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Reserve, E> {
        self.visit_f64(v as f64)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Reserve, E> {
        self.visit_f64(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Reserve, E> {
        if v == "inf" {
            Ok(Reserve::INFINITE)
        } else {
            v.parse::<f64>()
                .map_err(|_| E::custom(format!("bad reserve {v:?}")))
                .and_then(|x| self.visit_f64(x))
        }
    }
}

impl<'de> Deserialize<'de> for Reserve {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Reserve, D::Error> {
        deserializer.deserialize_any(ReserveVisitor)
    }
}

/// One reserve price per real buyer.
///
/// Lookups past the stored length are lenient and read as zero; generators
/// that emit sparse vectors rely on that. Use [`ReserveVector::from_sparse`]
/// with `strict = true` to reject missing entries instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveVector(Vec<Reserve>);

impl ReserveVector {
    pub fn new(reserves: Vec<Reserve>) -> ReserveVector {
        ReserveVector(reserves)
    }

    pub fn zeros(n: usize) -> ReserveVector {
        ReserveVector(vec![Reserve::ZERO; n])
    }

    pub fn all_infinite(n: usize) -> ReserveVector {
        ReserveVector(vec![Reserve::INFINITE; n])
    }

    /// Builds a dense vector over `n` buyers from sparse entries.
    pub fn from_sparse(
        n: usize,
        entries: &[(u32, Reserve)],
        strict: bool,
    ) -> Result<ReserveVector> {
        let mut seen = vec![false; n];
        let mut dense = vec![Reserve::ZERO; n];
        for &(buyer, reserve) in entries {
            let idx = buyer as usize;
            if idx >= n {
                return Err(Error::InvalidArgument(format!(
                    "reserve entry for buyer {buyer} outside 0..{n}"
                )));
            }
            dense[idx] = reserve;
            seen[idx] = true;
        }
        if strict {
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::Validation(format!(
                    "strict mode: no reserve entry for buyer {missing}"
                )));
            }
        }
        Ok(ReserveVector(dense))
    }

    pub fn get(&self, buyer: u32) -> Reserve {
        self.0.get(buyer as usize).copied().unwrap_or(Reserve::ZERO)
    }

    pub fn set(&mut self, buyer: u32, reserve: Reserve) {
        self.0[buyer as usize] = reserve;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Reserve)> + '_ {
        self.0.iter().enumerate().map(|(b, &r)| (b as u32, r))
    }

    pub fn as_slice(&self) -> &[Reserve] {
        &self.0
    }
}

/// A single weighted auction: positive weight and the non-negative bids of
/// the buyers that participated. Buyers absent from `bids` bid zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Auction {
    id: String,
    weight: f64,
    /// Sorted by buyer index, at most one entry per buyer.
    bids: Vec<(u32, f64)>,
}

impl Auction {
    pub fn new(id: impl Into<String>, weight: f64, mut bids: Vec<(u32, f64)>) -> Result<Auction> {
        let id = id.into();
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::Validation(format!(
                "auction {id}: weight must be positive and finite, got {weight}"
            )));
        }
        for &(buyer, bid) in &bids {
            if !bid.is_finite() || bid < 0.0 {
                return Err(Error::Validation(format!(
                    "auction {id}: bid of buyer {buyer} must be finite and non-negative, got {bid}"
                )));
            }
        }
        bids.sort_by_key(|&(b, _)| b);
        for pair in bids.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Validation(format!(
                    "auction {id}: duplicate bid for buyer {}",
                    pair[0].0
                )));
            }
        }
        // normalize -0.0 bids
        for entry in &mut bids {
            entry.1 += 0.0;
        }
        Ok(Auction { id, weight, bids })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// The bid of `buyer`, zero when absent.
    pub fn bid(&self, buyer: u32) -> f64 {
        match self.bids.binary_search_by_key(&buyer, |&(b, _)| b) {
            Ok(pos) => self.bids[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Listed bids in ascending buyer order.
    pub fn bids(&self) -> &[(u32, f64)] {
        &self.bids
    }

    /// Highest bidder (ties broken toward the lowest buyer index) among the
    /// listed bids; buyer 0 when nothing is listed.
    pub fn top_bidder(&self) -> u32 {
        let mut best = (0u32, f64::NEG_INFINITY);
        for &(b, bid) in &self.bids {
            if bid > best.1 {
                best = (b, bid);
            }
        }
        if best.1 < 0.0 {
            0
        } else {
            best.0
        }
    }

    /// Highest and second-highest bids over the full buyer set; absent
    /// buyers bid zero, and a single-bidder auction has second bid zero.
    pub fn top_two_bids(&self) -> (f64, f64) {
        let (mut first, mut second) = (0.0f64, 0.0f64);
        for &(_, bid) in &self.bids {
            if bid > first {
                second = first;
                first = bid;
            } else if bid > second {
                second = bid;
            }
        }
        if self.bids.len() == 1 {
            second = 0.0;
        }
        (first, second)
    }
}

/// Revenue of one eager second-price auction under the given reserves.
///
/// Buyers bidding below their reserve are eliminated first; the highest
/// cleared bid wins (ties toward the lowest buyer index) and pays the larger
/// of its own reserve and the highest other cleared bid. Returns zero when
/// nobody clears. Reserve entries missing from `reserves` read as zero.
pub fn esp_revenue(auction: &Auction, reserves: &ReserveVector) -> f64 {
    let mut win_bid = f64::NEG_INFINITY;
    let mut win_reserve = 0.0f64;
    let mut second = 0.0f64;
    for &(buyer, bid) in auction.bids() {
        let r = reserves.get(buyer);
        if !r.cleared_by(bid) {
            continue;
        }
        if bid > win_bid {
            if win_bid > second {
                second = win_bid;
            }
            win_bid = bid;
            win_reserve = r.value();
        } else if bid > second {
            second = bid;
        }
    }
    if win_bid < 0.0 {
        // nothing cleared among listed bids; zero-bid buyers can only win
        // with a zero reserve and then pay zero
        return 0.0;
    }
    win_reserve.max(second)
}

/// Strict variant: errors if any listed buyer has no explicit reserve entry.
pub fn esp_revenue_strict(auction: &Auction, reserves: &ReserveVector) -> Result<f64> {
    for &(buyer, _) in auction.bids() {
        if buyer as usize >= reserves.len() {
            return Err(Error::Validation(format!(
                "auction {}: buyer {buyer} has no reserve entry",
                auction.id()
            )));
        }
    }
    Ok(esp_revenue(auction, reserves))
}

/// A weighted collection of auctions over buyers `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    auctions: Vec<Auction>,
    num_buyers: u32,
}

impl Dataset {
    pub fn new(auctions: Vec<Auction>, num_buyers: u32) -> Result<Dataset> {
        if num_buyers == 0 {
            return Err(Error::Validation("dataset must have at least one buyer".into()));
        }
        for auction in &auctions {
            for &(buyer, _) in auction.bids() {
                if buyer >= num_buyers {
                    return Err(Error::Validation(format!(
                        "auction {}: buyer {buyer} outside 0..{num_buyers}",
                        auction.id()
                    )));
                }
            }
        }
        Ok(Dataset { auctions, num_buyers })
    }

    pub fn auctions(&self) -> &[Auction] {
        &self.auctions
    }

    pub fn num_buyers(&self) -> u32 {
        self.num_buyers
    }

    pub fn max_bid(&self) -> f64 {
        self.auctions
            .iter()
            .flat_map(|a| a.bids().iter().map(|&(_, bid)| bid))
            .fold(0.0, f64::max)
    }

    /// Weighted eager revenue over all auctions.
    pub fn total_revenue(&self, reserves: &ReserveVector) -> f64 {
        self.auctions
            .iter()
            .map(|a| a.weight() * esp_revenue(a, reserves))
            .sum()
    }

    /// Strict variant: requires a reserve entry for every real buyer.
    pub fn total_revenue_strict(&self, reserves: &ReserveVector) -> Result<f64> {
        if reserves.len() != self.num_buyers as usize {
            return Err(Error::Validation(format!(
                "reserve vector covers {} buyers, dataset has {}",
                reserves.len(),
                self.num_buyers
            )));
        }
        Ok(self.total_revenue(reserves))
    }
}

/// How candidate reserve grids are derived from a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Each buyer's grid is `{0} ∪ {their distinct bids} ∪ {∞}`.
    OwnBids,
    /// Every buyer gets `{0, ∞} ∪ {all bids in the dataset}`.
    SharedBids,
    /// Every buyer gets `count` equally spaced values in `[0, max bid]`
    /// plus the infinite sentinel.
    EquallySpaced(usize),
}

/// Per-buyer candidate reserve prices: strictly increasing, starting at zero
/// and ending at the infinite sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct ReserveGrid {
    per_buyer: Vec<Vec<Reserve>>,
    shared: Option<Vec<Reserve>>,
}

fn sorted_grid(mut values: Vec<Reserve>) -> Vec<Reserve> {
    values.push(Reserve::ZERO);
    values.push(Reserve::INFINITE);
    values.sort();
    values.dedup();
    values
}

impl ReserveGrid {
    /// Builds the candidate grid for `ds` in the given mode.
    pub fn build(ds: &Dataset, mode: GridMode) -> Result<ReserveGrid> {
        match mode {
            GridMode::OwnBids => {
                let mut per_buyer = vec![Vec::new(); ds.num_buyers() as usize];
                for auction in ds.auctions() {
                    for &(buyer, bid) in auction.bids() {
                        per_buyer[buyer as usize].push(Reserve::finite(bid)?);
                    }
                }
                Ok(ReserveGrid {
                    per_buyer: per_buyer.into_iter().map(sorted_grid).collect(),
                    shared: None,
                })
            }
            GridMode::SharedBids => {
                let mut values = Vec::new();
                for auction in ds.auctions() {
                    for &(_, bid) in auction.bids() {
                        values.push(Reserve::finite(bid)?);
                    }
                }
                let shared = sorted_grid(values);
                Ok(ReserveGrid {
                    per_buyer: vec![shared.clone(); ds.num_buyers() as usize],
                    shared: Some(shared),
                })
            }
            GridMode::EquallySpaced(count) => {
                if count < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "equally spaced grid needs at least 2 points, got {count}"
                    )));
                }
                let max = ds.max_bid();
                let mut values = Vec::with_capacity(count);
                for i in 0..count {
                    values.push(Reserve::finite(max * i as f64 / (count - 1) as f64)?);
                }
                let shared = sorted_grid(values);
                Ok(ReserveGrid {
                    per_buyer: vec![shared.clone(); ds.num_buyers() as usize],
                    shared: Some(shared),
                })
            }
        }
    }

    /// A grid with explicit per-buyer candidate lists (zero and infinity are
    /// inserted if missing).
    pub fn from_per_buyer(per_buyer: Vec<Vec<Reserve>>) -> ReserveGrid {
        ReserveGrid {
            per_buyer: per_buyer.into_iter().map(sorted_grid).collect(),
            shared: None,
        }
    }

    pub fn num_buyers(&self) -> usize {
        self.per_buyer.len()
    }

    /// Candidate reserves of `buyer`, ascending, `0` first and `∞` last.
    pub fn buyer(&self, buyer: u32) -> &[Reserve] {
        &self.per_buyer[buyer as usize]
    }

    /// Finite candidates of `buyer` (everything but the trailing sentinel).
    pub fn finite(&self, buyer: u32) -> &[Reserve] {
        let row = self.buyer(buyer);
        &row[..row.len() - 1]
    }

    pub fn shared(&self) -> Option<&[Reserve]> {
        self.shared.as_deref()
    }

    pub fn contains(&self, buyer: u32, reserve: Reserve) -> bool {
        self.per_buyer[buyer as usize].binary_search(&reserve).is_ok()
    }

    /// Product of the per-buyer grid sizes, saturating at `usize::MAX`.
    pub fn search_space(&self) -> usize {
        self.per_buyer
            .iter()
            .fold(1usize, |acc, row| acc.saturating_mul(row.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn two_buyer_auction(bids: [f64; 2]) -> Auction {
        Auction::new("a", 1.0, vec![(0, bids[0]), (1, bids[1])]).unwrap()
    }

    fn rv(values: &[f64]) -> ReserveVector {
        ReserveVector::new(values.iter().map(|&v| Reserve::finite(v).unwrap()).collect())
    }

    #[test]
    fn eager_rule_both_clear() {
        let a = two_buyer_auction([5.0, 3.0]);
        assert_eq!(esp_revenue(&a, &rv(&[4.0, 0.0])), 4.0);
    }

    #[test]
    fn eager_rule_winner_eliminated() {
        let a = two_buyer_auction([5.0, 3.0]);
        assert_eq!(esp_revenue(&a, &rv(&[6.0, 0.0])), 0.0);
    }

    #[test]
    fn eager_rule_everyone_eliminated() {
        let a = two_buyer_auction([5.0, 3.0]);
        assert_eq!(esp_revenue(&a, &rv(&[6.0, 4.0])), 0.0);
    }

    #[test]
    fn tie_clears_and_lowest_index_wins() {
        let a = two_buyer_auction([5.0, 5.0]);
        // buyer 0 wins the tie and pays max(own reserve, other cleared bid)
        assert_eq!(esp_revenue(&a, &rv(&[5.0, 5.0])), 5.0);
        let b = two_buyer_auction([5.0, 3.0]);
        // reserve equal to the bid still clears
        assert_eq!(esp_revenue(&b, &rv(&[0.0, 3.0])), 3.0);
    }

    #[test]
    fn total_revenue_examples() {
        let ds = Dataset::new(
            vec![
                Auction::new("a1", 1.0, vec![(0, 5.0), (1, 3.0)]).unwrap(),
                Auction::new("a2", 1.0, vec![(0, 1.0), (1, 5.0)]).unwrap(),
            ],
            2,
        )
        .unwrap();
        assert_eq!(ds.total_revenue(&ReserveVector::zeros(2)), 4.0);
        assert_eq!(ds.total_revenue(&rv(&[3.0, 5.0])), 8.0);
    }

    #[test]
    fn weight_scales_revenue() {
        let a = Auction::new("a", 2.5, vec![(0, 5.0), (1, 4.0)]).unwrap();
        let ds = Dataset::new(vec![a], 2).unwrap();
        assert_eq!(ds.total_revenue(&ReserveVector::zeros(2)), 10.0);
    }

    #[test]
    fn all_infinite_reserves_earn_nothing() {
        let ds = Dataset::new(
            vec![Auction::new("a", 3.0, vec![(0, 9.0), (1, 2.0)]).unwrap()],
            2,
        )
        .unwrap();
        assert_eq!(ds.total_revenue(&ReserveVector::all_infinite(2)), 0.0);
    }

    #[test]
    fn own_bids_grid_dedups_and_sorts() {
        let ds = Dataset::new(
            vec![
                Auction::new("a1", 1.0, vec![(0, 5.0)]).unwrap(),
                Auction::new("a2", 1.0, vec![(0, 3.0)]).unwrap(),
                Auction::new("a3", 1.0, vec![(0, 5.0)]).unwrap(),
            ],
            1,
        )
        .unwrap();
        let grid = ReserveGrid::build(&ds, GridMode::OwnBids).unwrap();
        let expect: Vec<Reserve> = [0.0, 3.0, 5.0]
            .iter()
            .map(|&v| Reserve::finite(v).unwrap())
            .chain([Reserve::INFINITE])
            .collect();
        assert_eq!(grid.buyer(0), &expect[..]);
    }

    #[test]
    fn equally_spaced_grid() {
        let ds = Dataset::new(
            vec![Auction::new("a", 1.0, vec![(0, 10.0), (1, 2.0)]).unwrap()],
            2,
        )
        .unwrap();
        let grid = ReserveGrid::build(&ds, GridMode::EquallySpaced(3)).unwrap();
        let expect: Vec<Reserve> = [0.0, 5.0, 10.0]
            .iter()
            .map(|&v| Reserve::finite(v).unwrap())
            .chain([Reserve::INFINITE])
            .collect();
        assert_eq!(grid.buyer(0), &expect[..]);
        assert_eq!(grid.buyer(1), &expect[..]);
        assert!(matches!(
            ReserveGrid::build(&ds, GridMode::EquallySpaced(1)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn shared_bids_grid() {
        let ds = Dataset::new(
            vec![Auction::new("a", 1.0, vec![(0, 3.0), (1, 5.0)]).unwrap()],
            2,
        )
        .unwrap();
        let grid = ReserveGrid::build(&ds, GridMode::SharedBids).unwrap();
        let expect: Vec<Reserve> = [0.0, 3.0, 5.0]
            .iter()
            .map(|&v| Reserve::finite(v).unwrap())
            .chain([Reserve::INFINITE])
            .collect();
        assert_eq!(grid.buyer(0), &expect[..]);
        assert_eq!(grid.buyer(1), &expect[..]);
        assert!(grid.shared().is_some());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Auction::new("a", 0.0, vec![(0, 1.0)]).is_err());
        assert!(Auction::new("a", 1.0, vec![(0, -1.0)]).is_err());
        assert!(Auction::new("a", 1.0, vec![(0, 1.0), (0, 2.0)]).is_err());
        assert!(Dataset::new(vec![], 0).is_err());
        let a = Auction::new("a", 1.0, vec![(5, 1.0)]).unwrap();
        assert!(Dataset::new(vec![a], 2).is_err());
        assert!(Reserve::finite(f64::NAN).is_err());
        assert!(Reserve::finite(-1.0).is_err());
    }

    #[test]
    fn strict_mode_rejects_missing_entries() {
        let a = two_buyer_auction([5.0, 3.0]);
        let short = ReserveVector::new(vec![Reserve::ZERO]);
        assert!(esp_revenue_strict(&a, &short).is_err());
        // lenient reads the missing entry as zero
        assert_eq!(esp_revenue(&a, &short), 3.0);
        assert!(
            ReserveVector::from_sparse(2, &[(0, Reserve::ZERO)], true).is_err()
        );
        let lenient = ReserveVector::from_sparse(2, &[(1, Reserve::INFINITE)], false).unwrap();
        assert_eq!(lenient.get(0), Reserve::ZERO);
        assert!(lenient.get(1).is_infinite());
    }
}
