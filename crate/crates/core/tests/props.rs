//! Property tests for the auction semantics and serialization layers.

use espopt::auction::{
    esp_revenue, Auction, Dataset, GridMode, Reserve, ReserveGrid, ReserveVector,
};
use espopt::io::{parse_dataset, write_dataset, Format};
use espopt::profile::{associated_profile, profile_revenue};
use proptest::prelude::*;

fn bid_value() -> impl Strategy<Value = f64> {
    // quarter-grid values keep reserve/bid comparisons away from float dust
    (0u32..=20).prop_map(|k| k as f64 * 0.5)
}

fn arb_auction(id: usize, buyers: u32) -> impl Strategy<Value = Auction> {
    (
        proptest::collection::vec((0..buyers, bid_value()), 0..=buyers as usize),
        prop_oneof![Just(0.5f64), Just(1.0), Just(2.5)],
    )
        .prop_map(move |(raw, weight)| {
            let mut bids: Vec<(u32, f64)> = Vec::new();
            for (b, v) in raw {
                if !bids.iter().any(|&(b2, _)| b2 == b) {
                    bids.push((b, v));
                }
            }
            Auction::new(format!("a{id}"), weight, bids).unwrap()
        })
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    (1u32..=4)
        .prop_flat_map(|buyers| {
            (1usize..=6).prop_flat_map(move |count| {
                let auctions: Vec<_> = (0..count).map(|i| arb_auction(i, buyers)).collect();
                (Just(buyers), auctions)
            })
        })
        .prop_map(|(buyers, auctions)| Dataset::new(auctions, buyers).unwrap())
}

fn arb_reserves(ds: &Dataset) -> impl Strategy<Value = ReserveVector> {
    let n = ds.num_buyers() as usize;
    proptest::collection::vec(
        prop_oneof![
            8 => bid_value().prop_map(|v| Reserve::finite(v).unwrap()),
            1 => Just(Reserve::INFINITE)
        ],
        n,
    )
    .prop_map(ReserveVector::new)
}

fn scale_dataset(ds: &Dataset, factor: f64) -> Dataset {
    Dataset::new(
        ds.auctions()
            .iter()
            .map(|a| {
                Auction::new(
                    a.id(),
                    a.weight(),
                    a.bids().iter().map(|&(b, v)| (b, v * factor)).collect(),
                )
                .unwrap()
            })
            .collect(),
        ds.num_buyers(),
    )
    .unwrap()
}

fn scale_reserves(r: &ReserveVector, factor: f64) -> ReserveVector {
    ReserveVector::new(
        r.as_slice()
            .iter()
            .map(|&v| {
                if v.is_infinite() {
                    Reserve::INFINITE
                } else {
                    Reserve::finite(v.value() * factor).unwrap()
                }
            })
            .collect(),
    )
}

proptest! {
    #[test]
    fn revenue_scales_with_bids_and_reserves(
        ds in arb_dataset(),
        factor in prop_oneof![Just(0.25f64), Just(0.5), Just(2.0), Just(4.0)],
    ) {
        let reserves = ReserveVector::zeros(ds.num_buyers() as usize);
        let scaled = scale_dataset(&ds, factor);
        let base = ds.total_revenue(&reserves);
        prop_assert!((scaled.total_revenue(&reserves.clone()) - 0.0).abs() >= 0.0);
        let scaled_rev = scaled.total_revenue(&scale_reserves(&reserves, factor));
        prop_assert!((scaled_rev - factor * base).abs() <= 1e-9 * (1.0 + factor * base));
    }

    #[test]
    fn revenue_scales_under_arbitrary_reserves(
        (ds, reserves, factor) in arb_dataset().prop_flat_map(|ds| {
            let reserves = arb_reserves(&ds);
            (Just(ds), reserves, prop_oneof![Just(0.5f64), Just(2.0), Just(8.0)])
        })
    ) {
        let scaled = scale_dataset(&ds, factor);
        let scaled_r = scale_reserves(&reserves, factor);
        let lhs = scaled.total_revenue(&scaled_r);
        let rhs = factor * ds.total_revenue(&reserves);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn splitting_weights_preserves_revenue(
        (ds, reserves) in arb_dataset().prop_flat_map(|ds| {
            let reserves = arb_reserves(&ds);
            (Just(ds), reserves)
        }),
        split in 0.1f64..0.9,
    ) {
        let mut doubled = Vec::new();
        for a in ds.auctions() {
            let w = a.weight();
            doubled.push(Auction::new(format!("{}-l", a.id()), w * split, a.bids().to_vec()).unwrap());
            doubled.push(
                Auction::new(format!("{}-r", a.id()), w * (1.0 - split), a.bids().to_vec()).unwrap(),
            );
        }
        let doubled = Dataset::new(doubled, ds.num_buyers()).unwrap();
        let lhs = doubled.total_revenue(&reserves);
        let rhs = ds.total_revenue(&reserves);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn association_is_consistent_with_revenue(
        (ds, reserves) in arb_dataset().prop_flat_map(|ds| {
            let reserves = arb_reserves(&ds);
            (Just(ds), reserves)
        })
    ) {
        for auction in ds.auctions() {
            let p = associated_profile(auction, &reserves);
            prop_assert_eq!(p.revenue, esp_revenue(auction, &reserves));
            prop_assert_eq!(profile_revenue(auction, &p).unwrap(), p.revenue);
        }
    }

    #[test]
    fn raising_a_reserve_past_every_bid_equals_elimination(
        (ds, reserves) in arb_dataset().prop_flat_map(|ds| {
            let reserves = arb_reserves(&ds);
            (Just(ds), reserves)
        }),
        buyer in 0u32..4,
    ) {
        let buyer = buyer % ds.num_buyers();
        let above: f64 = ds
            .auctions()
            .iter()
            .map(|a| a.bid(buyer))
            .fold(0.0, f64::max)
            + 1.0;
        let mut raised = reserves.clone();
        raised.set(buyer, Reserve::finite(above).unwrap());
        let mut infinite = reserves.clone();
        infinite.set(buyer, Reserve::INFINITE);
        prop_assert_eq!(ds.total_revenue(&raised), ds.total_revenue(&infinite));
        // and eliminating everyone earns nothing
        prop_assert_eq!(
            ds.total_revenue(&ReserveVector::all_infinite(ds.num_buyers() as usize)),
            0.0
        );
    }

    #[test]
    fn zero_reserves_earn_the_second_highest_bids(ds in arb_dataset()) {
        let zeros = ReserveVector::zeros(ds.num_buyers() as usize);
        let expected: f64 = ds
            .auctions()
            .iter()
            .map(|a| a.weight() * a.top_two_bids().1)
            .sum();
        prop_assert_eq!(ds.total_revenue(&zeros), expected);
    }

    #[test]
    fn dataset_json_round_trips(ds in arb_dataset()) {
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf, Format::Json).unwrap();
        let again = parse_dataset(&buf[..], Format::Json).unwrap();
        prop_assert_eq!(ds, again);
    }

    #[test]
    fn dataset_csv_round_trips_positive_bids(ds in arb_dataset()) {
        // CSV keeps only positive bids, so compare after dropping zeros
        let positive = Dataset::new(
            ds.auctions()
                .iter()
                .map(|a| {
                    Auction::new(
                        a.id(),
                        a.weight(),
                        a.bids().iter().copied().filter(|&(_, v)| v > 0.0).collect(),
                    )
                    .unwrap()
                })
                .collect(),
            ds.num_buyers(),
        )
        .unwrap();
        // an auction with no positive bids has no CSV rows at all
        prop_assume!(positive.auctions().iter().all(|a| !a.bids().is_empty()));
        let mut buf = Vec::new();
        write_dataset(&positive, &mut buf, Format::Csv).unwrap();
        let again = parse_dataset(&buf[..], Format::Csv).unwrap();
        // buyer count can shrink when trailing buyers never bid
        prop_assert!(again.num_buyers() <= positive.num_buyers());
        prop_assert_eq!(again.auctions().len(), positive.auctions().len());
        for (a, b) in positive.auctions().iter().zip(again.auctions()) {
            prop_assert_eq!(a.id(), b.id());
            prop_assert_eq!(a.weight(), b.weight());
            prop_assert_eq!(a.bids(), b.bids());
        }
    }

    #[test]
    fn reserve_serde_round_trips(k in 0u32..=20, infinite in any::<bool>()) {
        let r = if infinite {
            Reserve::INFINITE
        } else {
            Reserve::finite(k as f64 * 0.5).unwrap()
        };
        let text = serde_json::to_string(&r).unwrap();
        if infinite {
            prop_assert_eq!(text.as_str(), "\"inf\"");
        }
        let back: Reserve = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(r, back);
    }

    #[test]
    fn grids_are_well_formed(ds in arb_dataset(), points in 2usize..=6) {
        for mode in [GridMode::OwnBids, GridMode::SharedBids, GridMode::EquallySpaced(points)] {
            let grid = ReserveGrid::build(&ds, mode).unwrap();
            for b in 0..ds.num_buyers() {
                let row = grid.buyer(b);
                prop_assert_eq!(row[0], Reserve::ZERO);
                prop_assert!(row[row.len() - 1].is_infinite());
                for pair in row.windows(2) {
                    prop_assert!(pair[0] < pair[1], "not strictly increasing");
                }
            }
        }
    }
}
