//! Revenue profiles: partial reserve assignments for the top two cleared
//! buyers of an auction.
//!
//! A profile records which buyer has the highest cleared bid, which has the
//! second highest, and their reserves. Its revenue is `max(second bid,
//! top reserve)` -- exactly the eager price, whatever reserves the remaining
//! buyers carry. Two zero-bidding auxiliary buyers encode the one-cleared
//! and zero-cleared cases.

use std::fmt;

use crate::auction::{Auction, ReserveGrid, ReserveVector};
use crate::error::{Error, Result};

/// A buyer slot inside a profile: a real buyer or one of the two
/// zero-bidding placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Real(u32),
    /// Placeholder taking the second slot when only one buyer clears.
    Aux0,
    /// Placeholder taking the second slot when no buyer clears.
    Aux00,
}

impl Slot {
    pub fn is_real(self) -> bool {
        matches!(self, Slot::Real(_))
    }

    /// The slot's bid in `auction`; placeholders always bid zero.
    pub fn bid(self, auction: &Auction) -> f64 {
        match self {
            Slot::Real(b) => auction.bid(b),
            Slot::Aux0 | Slot::Aux00 => 0.0,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Real(b) => write!(f, "{b}"),
            Slot::Aux0 => write!(f, "b0"),
            Slot::Aux00 => write!(f, "b00"),
        }
    }
}

/// A valid profile of an auction, with its cached revenue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub top: Slot,
    pub second: Slot,
    pub top_reserve: f64,
    pub second_reserve: f64,
    pub revenue: f64,
}

impl Profile {
    fn new(auction: &Auction, top: Slot, second: Slot, top_reserve: f64, second_reserve: f64) -> Profile {
        Profile {
            top,
            second,
            top_reserve,
            second_reserve,
            revenue: second.bid(auction).max(top_reserve),
        }
    }

    /// The zero-cleared profile.
    pub fn nobody() -> Profile {
        Profile {
            top: Slot::Aux0,
            second: Slot::Aux00,
            top_reserve: 0.0,
            second_reserve: 0.0,
            revenue: 0.0,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.top, self.second, self.top_reserve, self.second_reserve
        )
    }
}

/// Revenue of a profile after validating it against the auction.
///
/// Valid means: distinct slots, the top slot's bid is at least the second
/// slot's, each slot's bid is at least its reserve, placeholders carry
/// reserve zero, and placeholders appear only as `(real, b0, ...)` or the
/// zero-cleared `(b0, b00, 0, 0)` form.
pub fn profile_revenue(auction: &Auction, p: &Profile) -> Result<f64> {
    let invalid = |what: &str| {
        Err(Error::Validation(format!(
            "invalid profile {p} for auction {}: {what}",
            auction.id()
        )))
    };
    match (p.top, p.second) {
        (Slot::Real(b1), Slot::Real(b2)) if b1 == b2 => return invalid("identical buyers"),
        (Slot::Real(_), Slot::Real(_)) | (Slot::Real(_), Slot::Aux0) | (Slot::Aux0, Slot::Aux00) => {}
        _ => return invalid("placeholder slots must form (real, b0) or (b0, b00)"),
    }
    if !p.top.is_real() && p.top_reserve != 0.0 || !p.second.is_real() && p.second_reserve != 0.0 {
        return invalid("placeholder buyers carry reserve 0");
    }
    if !(p.top_reserve.is_finite() && p.top_reserve >= 0.0)
        || !(p.second_reserve.is_finite() && p.second_reserve >= 0.0)
    {
        return invalid("reserves must be finite and non-negative");
    }
    let top_bid = p.top.bid(auction);
    let second_bid = p.second.bid(auction);
    if top_bid < second_bid {
        return invalid("top slot must hold the weakly higher bid");
    }
    if top_bid < p.top_reserve {
        return invalid("top buyer does not clear its reserve");
    }
    if second_bid < p.second_reserve {
        return invalid("second buyer does not clear its reserve");
    }
    Ok(second_bid.max(p.top_reserve))
}

/// Enumerates every valid profile of `auction` over the candidate grid, in a
/// deterministic order: real buyer pairs first (top buyer ascending, second
/// buyer ascending, reserves ascending), then the one-cleared forms, then
/// the single zero-cleared profile.
pub fn enumerate_valid_profiles(auction: &Auction, grid: &ReserveGrid) -> Vec<Profile> {
    let n = grid.num_buyers() as u32;
    let mut out = Vec::new();
    for b1 in 0..n {
        let bid1 = auction.bid(b1);
        for b2 in 0..n {
            if b1 == b2 {
                continue;
            }
            let bid2 = auction.bid(b2);
            if bid1 < bid2 {
                continue;
            }
            for &r1 in grid.finite(b1) {
                if !r1.cleared_by(bid1) {
                    break;
                }
                for &r2 in grid.finite(b2) {
                    if !r2.cleared_by(bid2) {
                        break;
                    }
                    out.push(Profile::new(
                        auction,
                        Slot::Real(b1),
                        Slot::Real(b2),
                        r1.value(),
                        r2.value(),
                    ));
                }
            }
        }
    }
    for b in 0..n {
        let bid = auction.bid(b);
        for &r in grid.finite(b) {
            if !r.cleared_by(bid) {
                break;
            }
            out.push(Profile::new(auction, Slot::Real(b), Slot::Aux0, r.value(), 0.0));
        }
    }
    out.push(Profile::nobody());
    out
}

/// The unique profile associated with a reserve vector in an auction: the
/// highest and second-highest cleared buyers with their reserves, falling
/// back to the placeholder forms when fewer than two buyers clear. Its
/// revenue equals [`crate::auction::esp_revenue`] on the same inputs.
pub fn associated_profile(auction: &Auction, reserves: &ReserveVector) -> Profile {
    let n = reserves.len() as u32;
    let mut first: Option<(f64, u32, f64)> = None;
    let mut second: Option<(f64, u32, f64)> = None;
    for b in 0..n {
        let bid = auction.bid(b);
        let r = reserves.get(b);
        if !r.cleared_by(bid) {
            continue;
        }
        let entry = (bid, b, r.value());
        match first {
            None => first = Some(entry),
            Some(f) if bid > f.0 => {
                second = Some(f);
                first = Some(entry);
            }
            Some(_) => match second {
                None => second = Some(entry),
                Some(s) if bid > s.0 => second = Some(entry),
                Some(_) => {}
            },
        }
    }
    match (first, second) {
        (Some(f), Some(s)) => Profile::new(auction, Slot::Real(f.1), Slot::Real(s.1), f.2, s.2),
        (Some(f), None) => Profile::new(auction, Slot::Real(f.1), Slot::Aux0, f.2, 0.0),
        (None, _) => Profile::nobody(),
    }
}
