//! Synthetic and adversarial instance families with their closed-form
//! reference values: correlated log-normal bid streams, the integrality-gap
//! construction, and the weighted three-auction family on which the rounding
//! guarantee is exactly attained.

use rand_distr::{Distribution, StandardNormal};

use crate::auction::{Auction, Dataset, Reserve};
use crate::error::{Error, Result};
use crate::model::LpSolution;
use crate::profile::{Profile, Slot};
use crate::rng::substream;

/// Two-buyer correlated log-normal bid generator.
///
/// Per auction, `Z` is bivariate normal with mean `(0, mu)` and covariance
/// `sigma^2 [[1, w], [w, 1]]`, sampled through the lower-triangular factor
/// of the covariance; bids are `exp(Z)`. One random substream per auction
/// index keeps generation reproducible under any evaluation order.
#[derive(Debug, Clone)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
    pub w: f64,
    pub auctions: u32,
    pub seed: u64,
}

impl LogNormalParams {
    pub fn new(mu: f64, sigma: f64, w: f64, auctions: u32, seed: u64) -> Result<LogNormalParams> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        if !(w.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "correlation parameter must lie in (-1, 1), got {w}"
            )));
        }
        if auctions == 0 {
            return Err(Error::InvalidArgument("need at least one auction".into()));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidArgument("mu must be finite".into()));
        }
        Ok(LogNormalParams {
            mu,
            sigma,
            w,
            auctions,
            seed,
        })
    }
}

pub fn gen_correlated_lognormal(p: &LogNormalParams) -> Dataset {
    let cross = p.sigma * p.w;
    let residual = p.sigma * (1.0 - p.w * p.w).sqrt();
    let auctions: Vec<Auction> = (0..p.auctions)
        .map(|j| {
            let mut rng = substream(p.seed, j as u64);
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let log0 = p.sigma * z1;
            let log1 = p.mu + cross * z1 + residual * z2;
            Auction::new(format!("a{j}"), 1.0, vec![(0, log0.exp()), (1, log1.exp())])
                .expect("positive bids")
        })
        .collect();
    Dataset::new(auctions, 2).expect("well-formed synthetic dataset")
}

/// The integrality-gap family: `n` solo auctions where one buyer bids
/// `lambda * n`, plus one weight-`k` auction per buyer pair where both bid
/// `1/k` (the weighted form of `k` unit copies).
#[derive(Debug, Clone)]
pub struct GapInstanceSpec {
    pub n: u32,
    pub lambda: f64,
    pub k: u32,
}

impl GapInstanceSpec {
    pub fn new(n: u32, lambda: f64, k: u32) -> Result<GapInstanceSpec> {
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two buyers".into()));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in (0, 1), got {lambda}"
            )));
        }
        if k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let spec = GapInstanceSpec { n, lambda, k };
        if spec.solo_bid() < spec.delta() {
            return Err(Error::InvalidArgument(format!(
                "solo bid {} must not be below the pair bid {}",
                spec.solo_bid(),
                spec.delta()
            )));
        }
        Ok(spec)
    }

    /// The canonical parameterization: `lambda = sqrt(2) - 1`.
    pub fn canonical(n: u32, k: u32) -> Result<GapInstanceSpec> {
        GapInstanceSpec::new(n, std::f64::consts::SQRT_2 - 1.0, k)
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.k as f64
    }

    pub fn solo_bid(&self) -> f64 {
        self.lambda * self.n as f64
    }
}

pub fn gap_instance(spec: &GapInstanceSpec) -> Dataset {
    let n = spec.n;
    let delta = spec.delta();
    let solo = spec.solo_bid();
    let mut auctions = Vec::with_capacity(n as usize + (n as usize * (n as usize - 1)) / 2);
    for b in 0..n {
        auctions.push(Auction::new(format!("solo-{b}"), 1.0, vec![(b, solo)]).unwrap());
    }
    for i in 0..n {
        for j in i + 1..n {
            auctions.push(
                Auction::new(
                    format!("pair-{i}-{j}"),
                    spec.k as f64,
                    vec![(i, delta), (j, delta)],
                )
                .unwrap(),
            );
        }
    }
    Dataset::new(auctions, n).expect("well-formed gap instance")
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Best grid revenue of the gap family in closed form: with `t` buyers
/// reserved at the solo bid, revenue is `t * lambda * n + (n - t) * delta +
/// C(n,2) - C(t,2)`; the maximum over integer `t` is exact.
pub fn gap_esp_star_formula(n: u32, lambda: f64, delta: f64) -> f64 {
    let nf = n as f64;
    (0..=n)
        .map(|t| {
            let tf = t as f64;
            tf * lambda * nf + (nf - tf) * delta + choose2(nf) - choose2(tf)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn gap_esp_star(spec: &GapInstanceSpec) -> f64 {
    gap_esp_star_formula(spec.n, spec.lambda, spec.delta())
}

/// The `delta -> 0` reporting mode, dropping the vanishing `(n - t) * delta`
/// term.
pub fn gap_esp_star_limit(spec: &GapInstanceSpec) -> f64 {
    gap_esp_star_formula(spec.n, spec.lambda, 0.0)
}

/// Value of the analytic half-half fractional solution: a certified lower
/// bound on the LP optimum, `lambda n^2 / 2 + C(n,2) * k * delta`.
pub fn gap_lp_feasible_value(spec: &GapInstanceSpec) -> f64 {
    let nf = spec.n as f64;
    spec.lambda * nf * nf / 2.0 + choose2(nf) * spec.k as f64 * spec.delta()
}

/// The analytic fractional solution itself: each auction splits its mass
/// half-half over the one-cleared profiles of its bidders, and every buyer
/// holds reserve `delta` or the solo bid with probability one half each.
pub fn gap_feasible_solution(spec: &GapInstanceSpec, ds: &Dataset) -> LpSolution {
    let delta = spec.delta();
    let solo = spec.solo_bid();
    let mut s = Vec::new();
    for (a, auction) in ds.auctions().iter().enumerate() {
        let bidders: Vec<u32> = auction.bids().iter().map(|&(b, _)| b).collect();
        if bidders.len() == 1 {
            s.push((
                a as u32,
                Profile {
                    top: Slot::Real(bidders[0]),
                    second: Slot::Aux0,
                    top_reserve: solo,
                    second_reserve: 0.0,
                    revenue: solo,
                },
                0.5,
            ));
        } else {
            for &b in &bidders {
                s.push((
                    a as u32,
                    Profile {
                        top: Slot::Real(b),
                        second: Slot::Aux0,
                        top_reserve: delta,
                        second_reserve: 0.0,
                        revenue: delta,
                    },
                    0.5,
                ));
            }
        }
    }
    let q = (0..spec.n)
        .map(|_| {
            vec![
                (Reserve::finite(delta).unwrap(), 0.5),
                (Reserve::finite(solo).unwrap(), 0.5),
            ]
        })
        .collect();
    let mut sol = LpSolution {
        objective: 0.0,
        s,
        q,
    };
    sol.objective = sol.recompute_objective(ds);
    sol
}

/// Ratio of the best grid revenue to the analytic fractional value in the
/// `delta -> 0` mode. Approaches `2 (sqrt 2 - 1)` from above as `n` grows
/// at the canonical `lambda`.
pub fn gap_ratio_limit(n: u32, lambda: f64) -> f64 {
    let nf = n as f64;
    gap_esp_star_formula(n, lambda, 0.0) / (lambda * nf * nf / 2.0 + choose2(nf))
}

/// The weighted three-auction family attaining the rounding guarantee:
/// `k` symmetric buyers plus three special ones, auction weights
/// `1/(c+1)`, `c/(c+1)`, `epsilon`, bids `1` and `1 + epsilon` as laid out
/// in [`tight_instance`].
#[derive(Debug, Clone)]
pub struct TightInstanceSpec {
    pub k: u32,
    pub epsilon: f64,
}

impl TightInstanceSpec {
    pub fn new(k: u32, epsilon: f64) -> Result<TightInstanceSpec> {
        if k < 2 {
            return Err(Error::InvalidArgument("k must be at least 2".into()));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(TightInstanceSpec { k, epsilon })
    }

    /// The split parameter `sqrt(2) - 1`.
    pub fn theta(&self) -> f64 {
        std::f64::consts::SQRT_2 - 1.0
    }

    /// `(1 - theta^2) e^(theta - 1)`, the constant the construction pins.
    pub fn c(&self) -> f64 {
        let theta = self.theta();
        (1.0 - theta * theta) * (theta - 1.0).exp()
    }

    pub fn num_buyers(&self) -> u32 {
        self.k + 3
    }
}

/// Builds the dataset together with its hand-crafted optimal LP solution.
///
/// Buyers `0..k` are the symmetric group, `k` and `k+1` the pair that can
/// price each other, `k+2` the buyer alone in the second auction. Auction
/// one (weight `1/(c+1)`): everyone except `k+2` bids 1. Auction two
/// (weight `c/(c+1)`): only `k+2` bids, `1+eps`. Auction three (weight
/// `eps`): everyone except `k+2` bids `1+eps`.
///
/// In the solution, auction one spreads `(1-theta)/k` on reserving each
/// symmetric buyer at 1 and `theta` on the pair at zero reserves; auction
/// two reserves `k+2` at `1+eps`; auction three spreads `theta/k` on the
/// symmetric buyers at `1+eps` and `1-theta` on the pair at `1+eps`. Every
/// profile carrying weight earns its auction's maximum, so the solution is
/// LP-optimal.
pub fn tight_instance(spec: &TightInstanceSpec) -> (Dataset, LpSolution) {
    let k = spec.k;
    let eps = spec.epsilon;
    let theta = spec.theta();
    let c = spec.c();
    let one_plus = 1.0 + eps;

    let group_bids_one: Vec<(u32, f64)> = (0..k + 2).map(|b| (b, 1.0)).collect();
    let group_bids_eps: Vec<(u32, f64)> = (0..k + 2).map(|b| (b, one_plus)).collect();
    let ds = Dataset::new(
        vec![
            Auction::new("a1", 1.0 / (c + 1.0), group_bids_one).unwrap(),
            Auction::new("a2", c / (c + 1.0), vec![(k + 2, one_plus)]).unwrap(),
            Auction::new("a3", eps, group_bids_eps).unwrap(),
        ],
        k + 3,
    )
    .unwrap();

    let single = |b: u32, reserve: f64| Profile {
        top: Slot::Real(b),
        second: Slot::Aux0,
        top_reserve: reserve,
        second_reserve: 0.0,
        revenue: reserve.max(0.0),
    };
    let mut s = Vec::with_capacity(2 * k as usize + 3);
    for i in 0..k {
        s.push((0u32, single(i, 1.0), (1.0 - theta) / k as f64));
    }
    s.push((
        0,
        Profile {
            top: Slot::Real(k),
            second: Slot::Real(k + 1),
            top_reserve: 0.0,
            second_reserve: 0.0,
            revenue: 1.0,
        },
        theta,
    ));
    s.push((1, single(k + 2, one_plus), 1.0));
    for i in 0..k {
        s.push((2, single(i, one_plus), theta / k as f64));
    }
    s.push((
        2,
        Profile {
            top: Slot::Real(k),
            second: Slot::Real(k + 1),
            top_reserve: one_plus,
            second_reserve: one_plus,
            revenue: one_plus,
        },
        1.0 - theta,
    ));

    let r_one = Reserve::finite(1.0).unwrap();
    let r_eps = Reserve::finite(one_plus).unwrap();
    let mut q = Vec::with_capacity(k as usize + 3);
    for _ in 0..k {
        let low = (1.0 - theta) / k as f64;
        q.push(vec![(r_one, low), (r_eps, 1.0 - low)]);
    }
    q.push(vec![(Reserve::ZERO, theta), (r_eps, 1.0 - theta)]);
    q.push(vec![(Reserve::ZERO, theta), (r_eps, 1.0 - theta)]);
    q.push(vec![(r_eps, 1.0)]);

    let mut sol = LpSolution {
        objective: 0.0,
        s,
        q,
    };
    sol.objective = sol.recompute_objective(&ds);
    (ds, sol)
}

/// Expected rounded revenue of the tight instance as `epsilon -> 0`, for
/// finite `k`: auction one pays unless every symmetric buyer is repriced
/// high and the pair does not both stay at zero, auction two always pays.
pub fn tight_rounding_value(spec: &TightInstanceSpec) -> f64 {
    let theta = spec.theta();
    let c = spec.c();
    let k = spec.k as f64;
    let miss = (1.0 - (1.0 - theta) / k).powi(spec.k as i32) * (1.0 - theta * theta);
    (1.0 - miss) / (c + 1.0) + c / (c + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{GridMode, ReserveGrid, ReserveVector};
    use crate::bounds;
    use crate::baselines::brute_force_optimum;
    use crate::io::{write_dataset, Format};
    use crate::model::check_lp_feasibility;

    #[test]
    fn lognormal_bids_positive_and_deterministic() {
        let p = LogNormalParams::new(0.5, 0.1, 0.2, 200, 7).unwrap();
        let ds = gen_correlated_lognormal(&p);
        assert_eq!(ds.auctions().len(), 200);
        for a in ds.auctions() {
            assert!(a.bid(0) > 0.0 && a.bid(1) > 0.0);
        }
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        write_dataset(&ds, &mut b1, Format::Csv).unwrap();
        write_dataset(&gen_correlated_lognormal(&p), &mut b2, Format::Csv).unwrap();
        assert_eq!(b1, b2);
        let other = gen_correlated_lognormal(&LogNormalParams::new(0.5, 0.1, 0.2, 200, 8).unwrap());
        assert_ne!(ds, other);
    }

    fn log_bid_stats(ds: &Dataset) -> (f64, f64, f64) {
        // sample covariance and correlation of log-bids
        let n = ds.auctions().len() as f64;
        let logs: Vec<(f64, f64)> = ds
            .auctions()
            .iter()
            .map(|a| (a.bid(0).ln(), a.bid(1).ln()))
            .collect();
        let m0 = logs.iter().map(|l| l.0).sum::<f64>() / n;
        let m1 = logs.iter().map(|l| l.1).sum::<f64>() / n;
        let mut cov = 0.0;
        let mut v0 = 0.0;
        let mut v1 = 0.0;
        for &(a, b) in &logs {
            cov += (a - m0) * (b - m1);
            v0 += (a - m0) * (a - m0);
            v1 += (b - m1) * (b - m1);
        }
        cov /= n - 1.0;
        v0 /= n - 1.0;
        v1 /= n - 1.0;
        (cov, v0.sqrt(), cov / (v0.sqrt() * v1.sqrt()))
    }

    #[test]
    fn independent_bids_have_near_zero_correlation() {
        let p = LogNormalParams::new(0.3, 0.1, 0.0, 100_000, 11).unwrap();
        let (_, _, corr) = log_bid_stats(&gen_correlated_lognormal(&p));
        assert!(corr.abs() <= 0.01, "correlation {corr}");
    }

    #[test]
    fn correlated_bids_match_target_covariance() {
        let p = LogNormalParams::new(0.3, 0.1, 0.2, 100_000, 13).unwrap();
        let (cov, _, _) = log_bid_stats(&gen_correlated_lognormal(&p));
        let target = 0.2 * 0.1 * 0.1;
        assert!(
            (cov - target).abs() <= 0.1 * target,
            "covariance {cov} vs target {target}"
        );
    }

    #[test]
    fn gap_instance_layout() {
        let spec = GapInstanceSpec::new(2, 0.5, 1).unwrap();
        let ds = gap_instance(&spec);
        assert_eq!(ds.auctions().len(), 3);
        assert_eq!(ds.auctions()[0].bid(0), 1.0);
        assert_eq!(ds.auctions()[1].bid(1), 1.0);
        let pair = &ds.auctions()[2];
        assert_eq!(pair.weight(), 1.0);
        assert_eq!(pair.bid(0), 1.0);
        assert_eq!(pair.bid(1), 1.0);

        let spec4 = GapInstanceSpec::canonical(4, 10).unwrap();
        assert_eq!(gap_instance(&spec4).auctions().len(), 4 + 6);

        // pair bid above the solo bid is rejected
        assert!(GapInstanceSpec::new(2, 0.1, 1).is_err());
    }

    #[test]
    fn gap_esp_star_closed_form() {
        let value = gap_esp_star_formula(4, std::f64::consts::SQRT_2 - 1.0, 0.0);
        assert!((value - 8.3137).abs() < 1e-3, "got {value}");
        // no solo value: all mass at t = 0
        let zero_lambda = gap_esp_star_formula(4, 0.0, 0.25);
        assert!((zero_lambda - (6.0 + 4.0 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn gap_esp_star_matches_brute_force_small() {
        for n in [2u32, 3, 4] {
            let spec = GapInstanceSpec::canonical(n, 4).unwrap();
            let ds = gap_instance(&spec);
            let grid = ReserveGrid::build(&ds, GridMode::OwnBids).unwrap();
            let best = brute_force_optimum(&ds, &grid, 0).unwrap();
            let formula = gap_esp_star(&spec);
            assert!(
                (best.value - formula).abs() <= 1e-9 * (1.0 + formula.abs()),
                "n = {n}: brute force {} vs formula {formula}",
                best.value
            );
        }
    }

    #[test]
    fn gap_feasible_solution_certifies() {
        let spec = GapInstanceSpec::canonical(4, 5).unwrap();
        let ds = gap_instance(&spec);
        let grid = ReserveGrid::build(&ds, GridMode::OwnBids).unwrap();
        let sol = gap_feasible_solution(&spec, &ds);
        let report = check_lp_feasibility(&ds, &grid, &sol, 1e-9).unwrap();
        assert!(report.feasible, "violations: {:?}", report.violated_rows);
        let value = gap_lp_feasible_value(&spec);
        assert!((sol.objective - value).abs() <= 1e-9 * (1.0 + value));
    }

    #[test]
    fn gap_ratio_brackets() {
        let lambda = std::f64::consts::SQRT_2 - 1.0;
        let floor = 2.0 * lambda;
        let r100 = gap_ratio_limit(100, lambda);
        let r300 = gap_ratio_limit(300, lambda);
        assert!(r100 >= floor && r100 <= 0.86, "ratio at 100: {r100}");
        assert!(r300 >= floor && r300 <= 0.84, "ratio at 300: {r300}");
        assert!(r300 < r100);
    }

    #[test]
    fn tight_instance_certifies_feasible() {
        for k in [2u32, 5, 20] {
            let spec = TightInstanceSpec::new(k, 1e-4).unwrap();
            let (ds, sol) = tight_instance(&spec);
            let grid = ReserveGrid::build(&ds, GridMode::OwnBids).unwrap();
            let report = check_lp_feasibility(&ds, &grid, &sol, 1e-12).unwrap();
            assert!(
                report.feasible,
                "k = {k}: violations {:?}",
                report.violated_rows
            );
        }
    }

    #[test]
    fn tight_instance_reference_values() {
        let spec = TightInstanceSpec::new(2000, 1e-4).unwrap();
        let (ds, sol) = tight_instance(&spec);
        let c = spec.c();
        // zero reserves earn the first auction's second-highest bid
        let zero = ds.total_revenue(&ReserveVector::zeros(ds.num_buyers() as usize));
        assert!((zero - 1.0 / (c + 1.0)).abs() <= 3.0 * spec.epsilon);
        // the solution's objective is 1 + O(epsilon)
        assert!((sol.objective - 1.0).abs() <= 3.0 * spec.epsilon);
        // closed-form rounded revenue approaches the guarantee constant
        let value = tight_rounding_value(&spec);
        assert!((value - 0.6844).abs() < 5e-4, "value {value}");
        let spec_small = TightInstanceSpec::new(2, 1e-4).unwrap();
        let limit = bounds::approximation_factor();
        assert!((tight_rounding_value(&TightInstanceSpec::new(2_000_000, 1.0).unwrap()) - limit).abs() < 1e-6);
        assert!(tight_rounding_value(&spec_small) > limit);
    }
}
