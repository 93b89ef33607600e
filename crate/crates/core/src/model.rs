//! The profile LP: variables, constraint assembly, solution handling.
//!
//! For each auction `a` and each of its valid profiles `p` there is a weight
//! variable `s[a,p]`; for each real buyer `b` and grid reserve `r` there is
//! a distribution variable `q[b,r]`. The program maximizes the weighted
//! profile revenue subject to
//!
//! ```text
//!   sum_p s[a,p] <= 1                     per auction
//!   sum_{p assigning r to b} s[a,p] <= q[b,r]   per (auction, buyer, reserve)
//!   sum_r q[b,r] = 1                      per buyer
//!   s, q >= 0
//! ```
//!
//! Coupling rows whose profile set is empty (reserve above the buyer's bid)
//! are dropped, and the zero-bidding placeholder buyers carry no `q`
//! variables: their would-be coupling rows are implied by the per-auction
//! row, so the feasible region is unchanged.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::auction::{Dataset, Reserve, ReserveGrid, ReserveVector};
use crate::error::{Error, Result};
use crate::profile::{associated_profile, enumerate_valid_profiles, profile_revenue, Profile, Slot};
use crate::simplex::{
    solve_simplex, RowKind, SimplexOptions, SolveReport, SolveStatus, SparseColumns,
    StandardFormLp,
};

/// Caps on model construction.
#[derive(Debug, Clone)]
pub struct LpBuildOptions {
    /// Refuse to build a model with more variables than this.
    pub max_variables: usize,
}

impl Default for LpBuildOptions {
    fn default() -> LpBuildOptions {
        LpBuildOptions {
            max_variables: 4_000_000,
        }
    }
}

/// One profile-weight variable.
#[derive(Debug, Clone)]
pub struct SVar {
    pub auction: u32,
    pub profile: Profile,
    /// Objective coefficient: auction weight times profile revenue.
    pub objective: f64,
}

/// One reserve-distribution variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QVar {
    pub buyer: u32,
    pub reserve: Reserve,
}

/// The assembled profile LP for one dataset and grid.
#[derive(Debug, Clone)]
pub struct LpModel {
    num_auctions: usize,
    num_buyers: usize,
    s_vars: Vec<SVar>,
    /// Start of each auction's block in `s_vars` (length `num_auctions + 1`).
    s_offsets: Vec<usize>,
    q_vars: Vec<QVar>,
    /// Start of each buyer's block in `q_vars` (length `num_buyers + 1`).
    q_offsets: Vec<usize>,
    /// Coupling rows as `(auction, buyer, reserve)`, in row order.
    coupling: Vec<(u32, u32, Reserve)>,
    /// Lookup from `(auction, buyer, reserve)` to coupling row position.
    coupling_index: BTreeMap<(u32, u32, Reserve), usize>,
}

impl LpModel {
    pub fn num_s(&self) -> usize {
        self.s_vars.len()
    }

    pub fn num_q(&self) -> usize {
        self.q_vars.len()
    }

    pub fn num_variables(&self) -> usize {
        self.num_s() + self.num_q()
    }

    pub fn num_rows(&self) -> usize {
        self.num_auctions + self.coupling.len() + self.num_buyers
    }

    pub fn num_coupling_rows(&self) -> usize {
        self.coupling.len()
    }

    pub fn s_vars(&self) -> &[SVar] {
        &self.s_vars
    }

    pub fn auction_profiles(&self, auction: u32) -> &[SVar] {
        &self.s_vars[self.s_offsets[auction as usize]..self.s_offsets[auction as usize + 1]]
    }

    pub fn q_vars(&self) -> &[QVar] {
        &self.q_vars
    }
}

/// Enumerates profiles and assembles the LP.
pub fn build_profile_lp(
    ds: &Dataset,
    grid: &ReserveGrid,
    opts: &LpBuildOptions,
) -> Result<LpModel> {
    let auctions = ds.auctions();
    let per_auction: Vec<Vec<Profile>> = auctions
        .par_iter()
        .map(|a| enumerate_valid_profiles(a, grid))
        .collect();

    let n = ds.num_buyers() as usize;
    let num_s: usize = per_auction.iter().map(Vec::len).sum();
    let num_q: usize = (0..n).map(|b| grid.buyer(b as u32).len()).sum();
    if num_s + num_q > opts.max_variables {
        return Err(Error::SizeLimit(format!(
            "profile LP needs {num_s} profile weights and {num_q} reserve-distribution \
             variables over {} auctions, above the cap of {}; use a coarser reserve grid",
            auctions.len(),
            opts.max_variables
        )));
    }

    let mut s_vars = Vec::with_capacity(num_s);
    let mut s_offsets = Vec::with_capacity(auctions.len() + 1);
    s_offsets.push(0);
    for (a, profiles) in per_auction.into_iter().enumerate() {
        let weight = auctions[a].weight();
        for p in profiles {
            s_vars.push(SVar {
                auction: a as u32,
                profile: p,
                objective: weight * p.revenue,
            });
        }
        s_offsets.push(s_vars.len());
    }

    let mut q_vars = Vec::with_capacity(num_q);
    let mut q_offsets = Vec::with_capacity(n + 1);
    q_offsets.push(0);
    for b in 0..n as u32 {
        for &r in grid.buyer(b) {
            q_vars.push(QVar { buyer: b, reserve: r });
        }
        q_offsets.push(q_vars.len());
    }

    // a coupling row exists exactly when some valid profile assigns r to b,
    // i.e. when the finite reserve is at most the buyer's bid
    let mut coupling = Vec::new();
    let mut coupling_index = BTreeMap::new();
    for (a, auction) in auctions.iter().enumerate() {
        for b in 0..n as u32 {
            let bid = auction.bid(b);
            for &r in grid.finite(b) {
                if !r.cleared_by(bid) {
                    break;
                }
                coupling_index.insert((a as u32, b, r), coupling.len());
                coupling.push((a as u32, b, r));
            }
        }
    }

    Ok(LpModel {
        num_auctions: auctions.len(),
        num_buyers: n,
        s_vars,
        s_offsets,
        q_vars,
        q_offsets,
        coupling,
        coupling_index,
    })
}

/// Column bookkeeping between an [`LpModel`] and its [`StandardFormLp`].
#[derive(Debug, Clone)]
pub struct ColumnMap {
    num_s: usize,
}

impl ColumnMap {
    /// Reconstructs a mapping-form solution from solver primal values.
    /// Zero entries are dropped; `q` keeps only positive mass.
    pub fn lp_solution(&self, model: &LpModel, report: &SolveReport) -> LpSolution {
        let x = &report.primal;
        let mut s = Vec::new();
        for (j, var) in model.s_vars.iter().enumerate() {
            if x[j] > 0.0 {
                s.push((var.auction, var.profile, x[j]));
            }
        }
        let mut q = vec![Vec::new(); model.num_buyers];
        for (b, row) in q.iter_mut().enumerate() {
            for k in model.q_offsets[b]..model.q_offsets[b + 1] {
                let value = x[self.num_s + k];
                if value > 0.0 {
                    row.push((model.q_vars[k].reserve, value));
                }
            }
        }
        LpSolution {
            objective: report.objective,
            s,
            q,
        }
    }
}

/// Converts the model to solver form: profile weights first (auction order,
/// enumeration order), then the reserve distributions, then one slack column
/// per inequality row. All rows come out as equalities.
pub fn to_standard_form(model: &LpModel) -> Result<(StandardFormLp, ColumnMap)> {
    if model.num_variables() == 0 {
        return Err(Error::InvalidArgument("no variables".into()));
    }
    let num_auctions = model.num_auctions;
    let num_ineq = num_auctions + model.coupling.len();
    let num_rows = model.num_rows();
    let coupling_base = num_auctions;
    let buyer_base = num_auctions + model.coupling.len();

    let mut builder = SparseColumns::builder();
    let mut objective = Vec::with_capacity(model.num_variables() + num_ineq);

    for var in &model.s_vars {
        let mut entries = vec![(var.auction, 1.0)];
        let p = &var.profile;
        for (slot, reserve) in [(p.top, p.top_reserve), (p.second, p.second_reserve)] {
            if let Slot::Real(b) = slot {
                let key = (var.auction, b, Reserve::finite(reserve)?);
                let row = model.coupling_index.get(&key).ok_or_else(|| {
                    Error::Structural(format!(
                        "profile {p} of auction {} has no coupling row",
                        var.auction
                    ))
                })?;
                entries.push(((coupling_base + row) as u32, 1.0));
            }
        }
        builder.push_col(entries);
        objective.push(var.objective);
    }

    // coupling rows that reference each q variable
    let mut q_rows: Vec<Vec<u32>> = vec![Vec::new(); model.num_q()];
    for (row, &(_, b, r)) in model.coupling.iter().enumerate() {
        let offset = model.q_offsets[b as usize];
        let pos = model.q_vars[offset..model.q_offsets[b as usize + 1]]
            .binary_search_by(|v| v.reserve.cmp(&r))
            .map_err(|_| Error::Structural(format!("coupling reserve {r} missing from grid")))?;
        q_rows[offset + pos].push((coupling_base + row) as u32);
    }
    for (k, var) in model.q_vars.iter().enumerate() {
        let mut entries: Vec<(u32, f64)> =
            q_rows[k].iter().map(|&row| (row, -1.0)).collect();
        entries.push(((buyer_base + var.buyer as usize) as u32, 1.0));
        builder.push_col(entries);
        objective.push(0.0);
    }

    // explicit slacks for the inequality rows
    for row in 0..num_ineq {
        builder.push_col(vec![(row as u32, 1.0)]);
        objective.push(0.0);
    }

    let mut rhs = vec![0.0; num_rows];
    for a in 0..num_auctions {
        rhs[a] = 1.0;
    }
    for b in 0..model.num_buyers {
        rhs[buyer_base + b] = 1.0;
    }
    let row_kinds = vec![RowKind::Eq; num_rows];

    let lp = StandardFormLp::new(objective, rhs, row_kinds, builder.finish())?;
    Ok((
        lp,
        ColumnMap {
            num_s: model.num_s(),
        },
    ))
}

/// A solution of the profile LP in mapping form: sparse profile weights per
/// auction and a reserve distribution per buyer.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    /// `(auction index, profile, weight)`, weights positive.
    pub s: Vec<(u32, Profile, f64)>,
    /// Per buyer, `(reserve, probability)` with positive probabilities.
    pub q: Vec<Vec<(Reserve, f64)>>,
}

impl LpSolution {
    /// The weighted profile-revenue sum of the stored `s` values.
    pub fn recompute_objective(&self, ds: &Dataset) -> f64 {
        let mut acc = 0.0;
        for &(a, p, v) in &self.s {
            acc += ds.auctions()[a as usize].weight() * p.revenue * v;
        }
        acc
    }
}

/// Feasibility certification of an [`LpSolution`] against the constraints
/// generated by `(ds, grid)`.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub max_residual: f64,
    pub violated_rows: Vec<String>,
}

/// Checks every constraint residual of `sol` at tolerance `tol`.
///
/// Structural problems (unknown auction, profile invalid for its auction,
/// reserve outside the grid) error out; numeric violations land in the
/// report. The report also cross-checks the stored objective against the
/// weighted profile-revenue sum.
pub fn check_lp_feasibility(
    ds: &Dataset,
    grid: &ReserveGrid,
    sol: &LpSolution,
    tol: f64,
) -> Result<FeasibilityReport> {
    let n = ds.num_buyers() as usize;
    if sol.q.len() != n {
        return Err(Error::Structural(format!(
            "solution has {} reserve distributions, dataset has {n} buyers",
            sol.q.len()
        )));
    }

    let mut violated = Vec::new();
    let mut max_residual = 0.0f64;
    let flag = |residual: f64, tol: f64, row: &dyn Fn() -> String, violated: &mut Vec<String>| {
        if residual > tol {
            violated.push(row());
        }
    };

    let mut auction_sum = vec![0.0f64; ds.auctions().len()];
    let mut coupling_sum: BTreeMap<(u32, u32, Reserve), f64> = BTreeMap::new();
    for &(a, p, v) in &sol.s {
        let auction = ds
            .auctions()
            .get(a as usize)
            .ok_or_else(|| Error::Structural(format!("auction index {a} out of range")))?;
        profile_revenue(auction, &p)?;
        if v < -tol {
            max_residual = max_residual.max(-v);
            flag(-v, tol, &|| format!("s[{}, {p}] = {v} < 0", auction.id()), &mut violated);
        }
        auction_sum[a as usize] += v;
        for (slot, reserve) in [(p.top, p.top_reserve), (p.second, p.second_reserve)] {
            if let Slot::Real(b) = slot {
                let r = Reserve::finite(reserve)?;
                if !grid.contains(b, r) {
                    return Err(Error::Structural(format!(
                        "profile {p} of auction {} assigns off-grid reserve {r} to buyer {b}",
                        auction.id()
                    )));
                }
                *coupling_sum.entry((a, b, r)).or_default() += v;
            }
        }
    }

    let mut q_value: Vec<BTreeMap<Reserve, f64>> = vec![BTreeMap::new(); n];
    for (b, row) in sol.q.iter().enumerate() {
        for &(r, v) in row {
            if !grid.contains(b as u32, r) {
                return Err(Error::Structural(format!(
                    "q[{b}, {r}] refers to a reserve outside buyer {b}'s grid"
                )));
            }
            if v < -tol {
                max_residual = max_residual.max(-v);
                flag(-v, tol, &|| format!("q[{b}, {r}] = {v} < 0"), &mut violated);
            }
            if q_value[b].insert(r, v).is_some() {
                return Err(Error::Structural(format!("duplicate q entry for ({b}, {r})")));
            }
        }
    }

    for (a, auction) in ds.auctions().iter().enumerate() {
        let residual = (auction_sum[a] - 1.0).max(0.0);
        max_residual = max_residual.max(residual);
        flag(residual, tol, &|| {
            format!("auction {}: profile mass {} exceeds 1", auction.id(), auction_sum[a])
        }, &mut violated);
    }
    for (&(a, b, r), &s_sum) in &coupling_sum {
        let q = q_value[b as usize].get(&r).copied().unwrap_or(0.0);
        let residual = (s_sum - q).max(0.0);
        max_residual = max_residual.max(residual);
        flag(residual, tol, &|| {
            format!(
                "auction {}, buyer {b}, reserve {r}: profile mass {s_sum} exceeds q = {q}",
                ds.auctions()[a as usize].id()
            )
        }, &mut violated);
    }
    for b in 0..n {
        let total: f64 = q_value[b].values().sum();
        let residual = (total - 1.0).abs();
        max_residual = max_residual.max(residual);
        flag(residual, tol, &|| {
            format!("buyer {b}: reserve distribution sums to {total}")
        }, &mut violated);
    }

    let recomputed = sol.recompute_objective(ds);
    let obj_residual = (sol.objective - recomputed).abs() / (1.0 + recomputed.abs());
    max_residual = max_residual.max(obj_residual);
    flag(obj_residual, tol, &|| {
        format!(
            "objective {} does not match weighted profile revenue {recomputed}",
            sol.objective
        )
    }, &mut violated);

    Ok(FeasibilityReport {
        feasible: violated.is_empty(),
        max_residual,
        violated_rows: violated,
    })
}

/// Embeds an integral reserve vector as an LP solution: unit weight on each
/// auction's associated profile and a point mass per buyer. The objective
/// equals the eager revenue of `reserves` by construction.
pub fn integral_embedding(
    ds: &Dataset,
    reserves: &ReserveVector,
    grid: &ReserveGrid,
) -> Result<LpSolution> {
    let n = ds.num_buyers() as usize;
    if reserves.len() != n {
        return Err(Error::InvalidArgument(format!(
            "reserve vector covers {} buyers, dataset has {n}",
            reserves.len()
        )));
    }
    for (b, r) in reserves.iter() {
        if !grid.contains(b, r) {
            return Err(Error::InvalidArgument(format!(
                "reserve {r} of buyer {b} is not in the buyer's grid"
            )));
        }
    }
    let mut s = Vec::with_capacity(ds.auctions().len());
    for (a, auction) in ds.auctions().iter().enumerate() {
        s.push((a as u32, associated_profile(auction, reserves), 1.0));
    }
    let q = reserves.iter().map(|(_, r)| vec![(r, 1.0)]).collect();
    let mut sol = LpSolution {
        objective: 0.0,
        s,
        q,
    };
    sol.objective = sol.recompute_objective(ds);
    Ok(sol)
}

fn same_profile(a: &Profile, b: &Profile) -> bool {
    a.top == b.top
        && a.second == b.second
        && a.top_reserve.to_bits() == b.top_reserve.to_bits()
        && a.second_reserve.to_bits() == b.second_reserve.to_bits()
}

/// A feasible starting basis built from an integral reserve vector: each
/// auction row holds its associated profile's weight variable, every buyer
/// row the point-mass `q`, and every coupling row its slack. The basis is
/// triangular and sits at the embedded vector's revenue, which spares the
/// solver a phase-1 start from scratch.
fn embedding_basis(
    model: &LpModel,
    ds: &Dataset,
    grid: &ReserveGrid,
    reserves: &ReserveVector,
) -> Option<Vec<usize>> {
    let num_auctions = model.num_auctions;
    let slack_base = model.num_variables();
    let mut basis = Vec::with_capacity(model.num_rows());
    for (a, auction) in ds.auctions().iter().enumerate() {
        let profile = associated_profile(auction, reserves);
        let pos = model
            .auction_profiles(a as u32)
            .iter()
            .position(|var| same_profile(&var.profile, &profile))?;
        basis.push(model.s_offsets[a] + pos);
    }
    for c in 0..model.coupling.len() {
        basis.push(slack_base + num_auctions + c);
    }
    for (b, r) in reserves.iter() {
        let pos = grid.buyer(b).binary_search(&r).ok()?;
        basis.push(model.num_s() + model.q_offsets[b as usize] + pos);
    }
    Some(basis)
}

/// Builds, converts, and solves the profile LP in one call.
///
/// The solve warm-starts from the greedy reserve vector's embedding when
/// that basis is constructible, and falls back to the usual two-phase start
/// otherwise; the optimum is the same either way.
pub fn solve_profile_lp(
    ds: &Dataset,
    grid: &ReserveGrid,
    build: &LpBuildOptions,
    simplex: &SimplexOptions,
) -> Result<(LpSolution, SolveReport, LpModel)> {
    let model = build_profile_lp(ds, grid, build)?;
    let (lp, map) = to_standard_form(&model)?;
    let greedy = crate::baselines::greedy_lazy_reserves(ds, grid);
    let report = match embedding_basis(&model, ds, grid, &greedy) {
        Some(basis) => crate::simplex::solve_simplex_warm(&lp, simplex, &basis)
            .or_else(|_| solve_simplex(&lp, simplex))?,
        None => solve_simplex(&lp, simplex)?,
    };
    if report.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!(
            "profile LP must solve to optimality, got {:?} after {} iterations \
             (the model is always feasible and bounded; this signals a construction bug)",
            report.status, report.iterations
        )));
    }
    let sol = map.lp_solution(&model, &report);
    Ok((sol, report, model))
}

fn slot_name(slot: Slot) -> String {
    match slot {
        Slot::Real(b) => b.to_string(),
        Slot::Aux0 => "b0".to_string(),
        Slot::Aux00 => "b00".to_string(),
    }
}

fn parse_slot(name: &str) -> Result<Slot> {
    match name {
        "b0" => Ok(Slot::Aux0),
        "b00" => Ok(Slot::Aux00),
        other => other
            .parse::<u32>()
            .map(Slot::Real)
            .map_err(|_| Error::Structural(format!("bad buyer slot {other:?}"))),
    }
}

fn reserve_key(r: Reserve) -> String {
    r.to_string()
}

fn parse_reserve_key(key: &str) -> Result<Reserve> {
    if key == "inf" {
        return Ok(Reserve::INFINITE);
    }
    key.parse::<f64>()
        .map_err(|_| Error::Structural(format!("bad reserve key {key:?}")))
        .and_then(Reserve::finite)
}

/// Serializes a solution with auction ids, placeholder buyers as
/// `"b0"`/`"b00"`, and infinite reserves as `"inf"`.
pub fn write_solution(sol: &LpSolution, ds: &Dataset, mut sink: impl Write) -> Result<()> {
    let mut q = Map::new();
    for (b, row) in sol.q.iter().enumerate() {
        let mut inner = Map::new();
        for &(r, v) in row {
            inner.insert(reserve_key(r), json!(v));
        }
        q.insert(b.to_string(), Value::Object(inner));
    }
    let s: Vec<Value> = sol
        .s
        .iter()
        .map(|&(a, p, v)| {
            json!({
                "auction": ds.auctions()[a as usize].id(),
                "b1": slot_name(p.top),
                "b2": slot_name(p.second),
                "r1": p.top_reserve,
                "r2": p.second_reserve,
                "value": v,
            })
        })
        .collect();
    let doc = json!({
        "objective": sol.objective,
        "q": Value::Object(q),
        "s": Value::Array(s),
    });
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Parses a solution produced by [`write_solution`] back against its dataset.
pub fn read_solution(source: impl Read, ds: &Dataset) -> Result<LpSolution> {
    let doc: Value = serde_json::from_reader(source)?;
    let objective = doc
        .get("objective")
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Structural("solution lacks a numeric objective".into()))?;

    let mut auction_index = BTreeMap::new();
    for (a, auction) in ds.auctions().iter().enumerate() {
        auction_index.insert(auction.id().to_string(), a as u32);
    }

    let mut q = vec![Vec::new(); ds.num_buyers() as usize];
    let q_obj = doc
        .get("q")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Structural("solution lacks a q object".into()))?;
    for (buyer_key, row) in q_obj {
        let b: usize = buyer_key
            .parse()
            .map_err(|_| Error::Structural(format!("bad buyer key {buyer_key:?}")))?;
        if b >= q.len() {
            return Err(Error::Structural(format!("buyer {b} outside the dataset")));
        }
        let row = row
            .as_object()
            .ok_or_else(|| Error::Structural("q rows must be objects".into()))?;
        for (reserve_key, value) in row {
            let r = parse_reserve_key(reserve_key)?;
            let v = value
                .as_f64()
                .ok_or_else(|| Error::Structural("q values must be numbers".into()))?;
            q[b].push((r, v));
        }
        q[b].sort_by(|a, b| a.0.cmp(&b.0));
    }

    let mut s = Vec::new();
    let s_arr = doc
        .get("s")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Structural("solution lacks an s array".into()))?;
    for entry in s_arr {
        let field = |name: &str| -> Result<&Value> {
            entry
                .get(name)
                .ok_or_else(|| Error::Structural(format!("s entry lacks field {name}")))
        };
        let auction_id = field("auction")?
            .as_str()
            .ok_or_else(|| Error::Structural("auction must be a string".into()))?;
        let &a = auction_index
            .get(auction_id)
            .ok_or_else(|| Error::Structural(format!("unknown auction id {auction_id:?}")))?;
        let top = parse_slot(field("b1")?.as_str().unwrap_or_default())?;
        let second = parse_slot(field("b2")?.as_str().unwrap_or_default())?;
        let r1 = field("r1")?
            .as_f64()
            .ok_or_else(|| Error::Structural("r1 must be a number".into()))?;
        let r2 = field("r2")?
            .as_f64()
            .ok_or_else(|| Error::Structural("r2 must be a number".into()))?;
        let value = field("value")?
            .as_f64()
            .ok_or_else(|| Error::Structural("value must be a number".into()))?;
        let auction = &ds.auctions()[a as usize];
        let profile = Profile {
            top,
            second,
            top_reserve: r1,
            second_reserve: r2,
            revenue: second.bid(auction).max(r1),
        };
        s.push((a, profile, value));
    }

    Ok(LpSolution { objective, s, q })
}
