//! Randomized rounding of LP solutions into reserve vectors, with exact
//! (enumeration-free) tail probabilities for the rounded revenue and the
//! per-threshold mass-versus-probability diagnostics.

use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::auction::{Auction, Dataset, Reserve, ReserveVector};
use crate::error::{Error, Result};
use crate::model::LpSolution;
use crate::rng::substream;

/// Parameters of one rounding run.
#[derive(Debug, Clone)]
pub struct RoundingOptions {
    pub samples: usize,
    pub seed: u64,
    /// Retain every sampled vector in the outcome. Off by default: large
    /// instances with many samples would hold gigabytes, and the report
    /// format only needs the best vector.
    pub keep_sampled_vectors: bool,
}

impl RoundingOptions {
    pub fn new(samples: usize, seed: u64) -> RoundingOptions {
        RoundingOptions {
            samples,
            seed,
            keep_sampled_vectors: false,
        }
    }
}

/// Result of a rounding run.
///
/// `estimate` follows the output rule "per draw, keep the better of the
/// sampled vector and all-zero reserves"; `rounding_mean` is the plain mean
/// of the sampled vectors' revenues, which is what the closed-form reference
/// values for the analytic instances describe.
#[derive(Debug, Clone)]
pub struct RoundingOutcome {
    pub sampled_vectors: Option<Vec<ReserveVector>>,
    pub per_sample_revenue: Vec<f64>,
    pub zero_revenue: f64,
    /// Mean of `max(zero_revenue, sample revenue)` over the draws.
    pub estimate: f64,
    pub standard_error: f64,
    /// Mean of the raw sample revenues.
    pub rounding_mean: f64,
    pub rounding_std_error: f64,
    pub best_vector: ReserveVector,
    pub best_revenue: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Per-buyer discrete sampler over grid reserves, normalized from LP `q`
/// rows (solver tolerance leaves sub-1e-7 drift; negatives are clamped).
pub struct ReserveSampler {
    reserves: Vec<Vec<Reserve>>,
    cumulative: Vec<Vec<f64>>,
}

impl ReserveSampler {
    pub fn new(q: &[Vec<(Reserve, f64)>]) -> Result<ReserveSampler> {
        let mut reserves = Vec::with_capacity(q.len());
        let mut cumulative = Vec::with_capacity(q.len());
        for (b, row) in q.iter().enumerate() {
            let masses: Vec<f64> = row.iter().map(|&(_, v)| v.max(0.0)).collect();
            let total: f64 = masses.iter().sum();
            if !(total > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "reserve distribution of buyer {b} has total mass {total}"
                )));
            }
            let mut acc = 0.0;
            let mut cum: Vec<f64> = masses
                .iter()
                .map(|&m| {
                    acc += m / total;
                    acc
                })
                .collect();
            *cum.last_mut().unwrap() = 1.0;
            reserves.push(row.iter().map(|&(r, _)| r).collect());
            cumulative.push(cum);
        }
        Ok(ReserveSampler {
            reserves,
            cumulative,
        })
    }

    pub fn num_buyers(&self) -> usize {
        self.reserves.len()
    }

    pub fn sample_into(&self, rng: &mut impl Rng, out: &mut Vec<Reserve>) {
        out.clear();
        for (row, cum) in self.reserves.iter().zip(&self.cumulative) {
            let u: f64 = rng.random();
            let idx = cum.partition_point(|&c| c <= u).min(row.len() - 1);
            out.push(row[idx]);
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ReserveVector {
        let mut out = Vec::with_capacity(self.num_buyers());
        self.sample_into(rng, &mut out);
        ReserveVector::new(out)
    }
}

/// Draws one reserve vector, each buyer independently from their `q` row.
pub fn sample_reserves(q: &[Vec<(Reserve, f64)>], rng: &mut impl Rng) -> Result<ReserveVector> {
    Ok(ReserveSampler::new(q)?.sample(rng))
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Rounds `sol` into reserve vectors: `samples` independent draws from the
/// `q` rows (one counter-based substream per sample index, so draws are
/// reproducible and parallel), each compared against the all-zero vector.
pub fn pro_lpr_run(ds: &Dataset, sol: &LpSolution, opts: &RoundingOptions) -> Result<RoundingOutcome> {
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if sol.q.len() != ds.num_buyers() as usize {
        return Err(Error::Structural(format!(
            "solution has {} reserve distributions, dataset has {} buyers",
            sol.q.len(),
            ds.num_buyers()
        )));
    }
    let sampler = ReserveSampler::new(&sol.q)?;
    let zero_revenue = ds.total_revenue(&ReserveVector::zeros(ds.num_buyers() as usize));

    let keep = opts.keep_sampled_vectors;
    let drawn: Vec<(f64, Option<ReserveVector>)> = (0..opts.samples)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(sampler.num_buyers()),
            |buf, i| {
                let mut rng = substream(opts.seed, i as u64);
                sampler.sample_into(&mut rng, buf);
                let vector = ReserveVector::new(buf.clone());
                let revenue = ds.total_revenue(&vector);
                (revenue, keep.then_some(vector))
            },
        )
        .collect();

    let per_sample_revenue: Vec<f64> = drawn.iter().map(|&(rev, _)| rev).collect();
    let n = per_sample_revenue.len();
    let (estimate, standard_error) = mean_and_se(
        per_sample_revenue.iter().map(|&r| r.max(zero_revenue)),
        n,
    );
    let (rounding_mean, rounding_std_error) =
        mean_and_se(per_sample_revenue.iter().copied(), n);

    // best over {zero vector} and all draws; ties go to the zero vector,
    // then to the earliest draw
    let mut best_idx: Option<usize> = None;
    let mut best_revenue = zero_revenue;
    for (i, &rev) in per_sample_revenue.iter().enumerate() {
        if rev > best_revenue {
            best_revenue = rev;
            best_idx = Some(i);
        }
    }
    let best_vector = match best_idx {
        None => ReserveVector::zeros(ds.num_buyers() as usize),
        Some(i) => {
            let mut rng = substream(opts.seed, i as u64);
            sampler.sample(&mut rng)
        }
    };

    Ok(RoundingOutcome {
        sampled_vectors: keep.then(|| drawn.into_iter().map(|(_, v)| v.unwrap()).collect()),
        per_sample_revenue,
        zero_revenue,
        estimate,
        standard_error,
        rounding_mean,
        rounding_std_error,
        best_vector,
        best_revenue,
        samples: opts.samples,
        seed: opts.seed,
    })
}

/// JSON report for a rounding run (sampled vectors are never included).
pub fn write_rounding_report(outcome: &RoundingOutcome, mut sink: impl std::io::Write) -> Result<()> {
    let doc = json!({
        "estimate": outcome.estimate,
        "standard_error": outcome.standard_error,
        "rounding_mean": outcome.rounding_mean,
        "rounding_std_error": outcome.rounding_std_error,
        "zero_revenue": outcome.zero_revenue,
        "best_vector": outcome.best_vector,
        "best_revenue": outcome.best_revenue,
        "samples": outcome.samples,
        "seed": outcome.seed,
    });
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Normalized share of a `q` row lying in `[lo, hi]` (finite entries only).
fn row_mass_in(row: &[(Reserve, f64)], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    let mut inside = 0.0;
    for &(r, v) in row {
        let v = v.max(0.0);
        total += v;
        if !r.is_infinite() {
            let x = r.value();
            if x >= lo && x <= hi {
                inside += v;
            }
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

/// Exact probability that the rounded revenue of `auction` reaches `t`,
/// when each buyer's reserve is drawn independently from their `q` row.
///
/// Above the second-highest bid only the top bidder can set such a price, so
/// the probability is their mass on `[t, bid]`. At or below it, revenue
/// reaches `t` unless no buyer keeps a reserve in `[t, bid]` and at most one
/// buyer with a bid of at least `t` clears below `t`; complementary counting
/// over the independent rows gives the closed form.
pub fn exact_revenue_tail_probability(
    auction: &Auction,
    q: &[Vec<(Reserve, f64)>],
    t: f64,
) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::InvalidArgument("threshold must not be NaN".into()));
    }
    if t <= 0.0 {
        return Ok(1.0);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let (top, second) = auction.top_two_bids();
    if t > top {
        return Ok(0.0);
    }
    if t > second {
        let b1 = auction.top_bidder();
        let row = q
            .get(b1 as usize)
            .ok_or_else(|| Error::Structural(format!("no q row for buyer {b1}")))?;
        return Ok(row_mass_in(row, t, auction.bid(b1)));
    }

    // buyers bidding at least t (at least two of them here)
    let mut survive_high = Vec::new(); // reserve lands in [t, bid]
    let mut survive_low = Vec::new(); // reserve lands in [0, t)
    for &(b, bid) in auction.bids() {
        if bid < t {
            continue;
        }
        let row = q
            .get(b as usize)
            .ok_or_else(|| Error::Structural(format!("no q row for buyer {b}")))?;
        survive_high.push(row_mass_in(row, t, bid));
        survive_low.push(row_mass_in(row, 0.0, prev_down(t)));
    }
    let k = survive_high.len();
    let eliminated: Vec<f64> = (0..k)
        .map(|i| 1.0 - survive_high[i] - survive_low[i])
        .collect();
    // prefix/suffix products for the leave-one-out terms
    let mut prefix = vec![1.0; k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i] * eliminated[i];
    }
    let mut suffix = vec![1.0; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] * eliminated[i];
    }
    let all_out = prefix[k];
    let one_low: f64 = (0..k)
        .map(|i| survive_low[i] * prefix[i] * suffix[i + 1])
        .sum();
    Ok(1.0 - all_out - one_low)
}

/// Largest float strictly below `t`: turns the half-open interval `[0, t)`
/// into a closed one for `row_mass_in`.
fn prev_down(t: f64) -> f64 {
    f64::from_bits(t.to_bits() - 1)
}

/// Mass-versus-probability diagnostic at one threshold for one auction.
#[derive(Debug, Clone)]
pub struct ConditionGapReport {
    pub auction_id: String,
    pub threshold: f64,
    /// Total LP weight of this auction's profiles with revenue at least `t`.
    pub profile_mass: f64,
    /// Exact probability the rounded revenue reaches `t`.
    pub tail_probability: f64,
    /// `profile_mass - tail_probability`.
    pub gap: f64,
}

/// Evaluates the gap for auction `auction_idx` of `ds` at threshold `t`.
pub fn condition_gap(
    ds: &Dataset,
    auction_idx: usize,
    sol: &LpSolution,
    t: f64,
) -> Result<ConditionGapReport> {
    let auction = ds
        .auctions()
        .get(auction_idx)
        .ok_or_else(|| Error::Structural(format!("auction index {auction_idx} out of range")))?;
    let profile_mass: f64 = sol
        .s
        .iter()
        .filter(|&&(a, p, _)| a as usize == auction_idx && p.revenue >= t)
        .map(|&(_, _, v)| v)
        .sum();
    let tail_probability = exact_revenue_tail_probability(auction, &sol.q, t)?;
    Ok(ConditionGapReport {
        auction_id: auction.id().to_string(),
        threshold: t,
        profile_mass,
        tail_probability,
        gap: profile_mass - tail_probability,
    })
}

/// Evaluates the gap at every threshold for every auction in one pass:
/// profile weights are prefix-summed by revenue per auction, so a sweep
/// over many thresholds does not rescan the solution.
pub fn condition_gap_sweep(
    ds: &Dataset,
    sol: &LpSolution,
    thresholds: &[f64],
) -> Result<Vec<ConditionGapReport>> {
    let num_auctions = ds.auctions().len();
    let mut per_auction: Vec<Vec<(f64, f64)>> = vec![Vec::new(); num_auctions];
    for &(a, p, v) in &sol.s {
        let slot = per_auction
            .get_mut(a as usize)
            .ok_or_else(|| Error::Structural(format!("auction index {a} out of range")))?;
        slot.push((p.revenue, v));
    }
    let mut reports = Vec::with_capacity(num_auctions * thresholds.len());
    for (idx, auction) in ds.auctions().iter().enumerate() {
        let entries = &mut per_auction[idx];
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        // suffix sums: mass of profiles with revenue >= entries[i].0
        let mut suffix = vec![0.0; entries.len() + 1];
        for i in (0..entries.len()).rev() {
            suffix[i] = suffix[i + 1] + entries[i].1;
        }
        for &t in thresholds {
            let pos = entries.partition_point(|&(rev, _)| rev < t);
            let profile_mass = suffix[pos];
            let tail_probability = exact_revenue_tail_probability(auction, &sol.q, t)?;
            reports.push(ConditionGapReport {
                auction_id: auction.id().to_string(),
                threshold: t,
                profile_mass,
                tail_probability,
                gap: profile_mass - tail_probability,
            });
        }
    }
    Ok(reports)
}

/// The standard threshold set for condition checks: every distinct finite
/// grid value plus the midpoints between consecutive values.
pub fn condition_thresholds(grid: &crate::auction::ReserveGrid) -> Vec<f64> {
    let mut values: Vec<f64> = (0..grid.num_buyers() as u32)
        .flat_map(|b| grid.finite(b).iter().map(|r| r.value()))
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut thresholds = Vec::with_capacity(values.len() * 2);
    for (i, &v) in values.iter().enumerate() {
        thresholds.push(v);
        if i + 1 < values.len() {
            thresholds.push(0.5 * (v + values[i + 1]));
        }
    }
    thresholds
}
