//! Two-phase revised simplex engine.
//!
//! The basis is permuted to triangular form as far as singleton peeling
//! carries, with a dense LU only of the leftover bump; pivots between
//! refactorizations are absorbed into product-form eta vectors. Pricing is
//! devex (approximate steepest edge) with Bland's rule as the anti-cycling
//! fallback under long degenerate streaks.

use super::lu::DenseLu;
use super::{RowKind, SimplexOptions, SolveReport, SolveStatus, StandardFormLp};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-11;
const DROP_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct WorkCol {
    entries: Vec<(u32, f64)>,
    kind: ColKind,
    objective: f64,
}

struct Eta {
    pos: usize,
    pivot: f64,
    w: Vec<(u32, f64)>,
}

#[derive(Clone, Copy)]
struct PeelPivot {
    slot: u32,
    row: u32,
    /// Column index captured at refactorization time; the live basis moves
    /// on under the eta file, the factorization must not.
    col: u32,
    value: f64,
}

/// Basis factorization: the basis is permuted to a triangular form as far
/// as singleton peeling carries (row singletons forward, then column
/// singletons backward); only the remaining bump is LU-factored densely.
struct Factor {
    forward: Vec<PeelPivot>,
    backward: Vec<PeelPivot>,
    bump_rows: Vec<u32>,
    bump_slots: Vec<u32>,
    /// Column ids of the bump slots at refactorization time.
    bump_cols: Vec<u32>,
    lu: DenseLu,
}

struct Engine<'a> {
    lp: &'a StandardFormLp,
    opts: SimplexOptions,
    m: usize,
    cols: Vec<WorkCol>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    slot_of: Vec<isize>,
    x: Vec<f64>,
    factor: Factor,
    etas: Vec<Eta>,
    iterations: usize,
    degenerate_streak: usize,
    has_artificials: bool,
    devex: Vec<f64>,
    /// Static transpose of the work matrix, for sparse pivot-row scans.
    row_cols: Vec<Vec<u32>>,
    alpha_scratch: Vec<f64>,
}

/// Solves the LP; only structurally invalid inputs error, solver outcomes
/// are reported through [`SolveStatus`].
pub fn solve_simplex(lp: &StandardFormLp, opts: &SimplexOptions) -> Result<SolveReport> {
    let mut engine = Engine::new(lp, opts.clone(), None)?;
    let status = engine.run()?;
    Ok(engine.report(status))
}

/// Like [`solve_simplex`], but starts from a caller-supplied feasible basis
/// (one column index per row). Errors if the basis is singular or
/// infeasible; phase 1 is skipped.
pub fn solve_simplex_warm(
    lp: &StandardFormLp,
    opts: &SimplexOptions,
    basis: &[usize],
) -> Result<SolveReport> {
    let mut engine = Engine::new(lp, opts.clone(), Some(basis))?;
    let status = engine.run()?;
    Ok(engine.report(status))
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum Phase {
    One,
    Two,
}

enum Pivot {
    Done,
    Step,
    Unbounded,
}

impl<'a> Engine<'a> {
    fn new(
        lp: &'a StandardFormLp,
        opts: SimplexOptions,
        warm_basis: Option<&[usize]>,
    ) -> Result<Engine<'a>> {
        let m = lp.num_rows();
        let flip: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let rhs: Vec<f64> = lp.rhs.iter().zip(&flip).map(|(&b, f)| b * f).collect();

        let mut cols: Vec<WorkCol> = Vec::with_capacity(lp.num_cols() + m);
        for j in 0..lp.num_cols() {
            let entries = lp
                .cols
                .col(j)
                .map(|(r, v)| (r, v * flip[r as usize]))
                .collect();
            cols.push(WorkCol {
                entries,
                kind: ColKind::Structural,
                objective: lp.objective[j],
            });
        }

        // one internal slack per <= row
        for r in 0..m {
            if lp.row_kinds[r] == RowKind::Le {
                cols.push(WorkCol {
                    entries: vec![(r as u32, flip[r])],
                    kind: ColKind::Slack,
                    objective: 0.0,
                });
            }
        }
        let mut has_artificials = false;
        let basis: Vec<usize> = match warm_basis {
            Some(given) => {
                if given.len() != m {
                    return Err(Error::InvalidArgument(format!(
                        "warm basis covers {} rows, LP has {m}",
                        given.len()
                    )));
                }
                let mut seen = vec![false; cols.len()];
                for &col in given {
                    if col >= lp.num_cols() || std::mem::replace(&mut seen[col], true) {
                        return Err(Error::InvalidArgument(format!(
                            "warm basis column {col} out of range or repeated"
                        )));
                    }
                }
                given.to_vec()
            }
            None => {
                // crash basis: claim rows covered by a costless unit column
                // (an internal slack or an explicit one from the caller)
                let mut basis_col_for_row: Vec<Option<usize>> = vec![None; m];
                for (j, col) in cols.iter().enumerate() {
                    if col.objective == 0.0 && col.entries.len() == 1 {
                        let (r, v) = col.entries[0];
                        if v == 1.0 && basis_col_for_row[r as usize].is_none() {
                            basis_col_for_row[r as usize] = Some(j);
                        }
                    }
                }
                for (r, slot) in basis_col_for_row.iter_mut().enumerate() {
                    if slot.is_none() {
                        cols.push(WorkCol {
                            entries: vec![(r as u32, 1.0)],
                            kind: ColKind::Artificial,
                            objective: 0.0,
                        });
                        *slot = Some(cols.len() - 1);
                        has_artificials = true;
                    }
                }
                basis_col_for_row.into_iter().map(|c| c.unwrap()).collect()
            }
        };
        let mut slot_of = vec![-1isize; cols.len()];
        for (slot, &col) in basis.iter().enumerate() {
            slot_of[col] = slot as isize;
        }
        let mut row_cols: Vec<Vec<u32>> = vec![Vec::new(); m];
        for (j, col) in cols.iter().enumerate() {
            for &(r, _) in &col.entries {
                row_cols[r as usize].push(j as u32);
            }
        }

        let mut engine = Engine {
            lp,
            opts,
            m,
            cols,
            rhs,
            basis,
            slot_of,
            x: vec![0.0; m],
            factor: Factor {
                forward: Vec::new(),
                backward: Vec::new(),
                bump_rows: Vec::new(),
                bump_slots: Vec::new(),
                bump_cols: Vec::new(),
                lu: DenseLu::factor(Vec::new(), 0).unwrap(),
            },
            etas: Vec::new(),
            iterations: 0,
            degenerate_streak: 0,
            has_artificials,
            devex: Vec::new(),
            row_cols,
            alpha_scratch: Vec::new(),
        };
        engine.devex = vec![1.0; engine.cols.len()];
        engine.alpha_scratch = vec![0.0; engine.cols.len()];
        engine.refactor()?;
        if warm_basis.is_some() {
            let scale = 1.0 + engine.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let worst = engine.x.iter().fold(0.0f64, |a, &v| a.max(-v));
            if worst > engine.opts.tol * scale {
                return Err(Error::InvalidArgument(format!(
                    "warm basis is infeasible (worst negativity {worst:.3e})"
                )));
            }
        }
        Ok(engine)
    }

    fn max_iters(&self) -> usize {
        if self.opts.max_iters > 0 {
            self.opts.max_iters
        } else {
            200 * (self.m + self.cols.len())
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // transpose of the basic columns, for singleton peeling
        let mut row_entries: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
        for slot in 0..m {
            for &(r, v) in &self.cols[self.basis[slot]].entries {
                row_entries[r as usize].push((slot as u32, v));
            }
        }
        let mut row_active = vec![true; m];
        let mut slot_active = vec![true; m];
        let mut row_count: Vec<usize> = row_entries.iter().map(Vec::len).collect();

        // forward phase: peel rows holding a single basic column
        let mut forward = Vec::new();
        let mut queue: Vec<u32> = (0..m as u32).filter(|&r| row_count[r as usize] == 1).collect();
        while let Some(r) = queue.pop() {
            let r = r as usize;
            if !row_active[r] || row_count[r] != 1 {
                continue;
            }
            let &(slot, value) = row_entries[r]
                .iter()
                .find(|&&(s, _)| slot_active[s as usize])
                .expect("counted entry");
            if value.abs() < 1e-12 {
                return Err(Error::Solver("basis is numerically singular".into()));
            }
            row_active[r] = false;
            slot_active[slot as usize] = false;
            forward.push(PeelPivot {
                slot,
                row: r as u32,
                col: self.basis[slot as usize] as u32,
                value,
            });
            for &(r2, _) in &self.cols[self.basis[slot as usize]].entries {
                let r2 = r2 as usize;
                if row_active[r2] {
                    row_count[r2] -= 1;
                    if row_count[r2] == 1 {
                        queue.push(r2 as u32);
                    }
                }
            }
        }

        // backward phase: peel columns holding a single active row
        let mut col_count = vec![0usize; m];
        for slot in 0..m {
            if slot_active[slot] {
                col_count[slot] = self.cols[self.basis[slot]]
                    .entries
                    .iter()
                    .filter(|&&(r, _)| row_active[r as usize])
                    .count();
            }
        }
        let mut backward = Vec::new();
        let mut queue: Vec<u32> = (0..m as u32)
            .filter(|&s| slot_active[s as usize] && col_count[s as usize] == 1)
            .collect();
        while let Some(slot) = queue.pop() {
            let s = slot as usize;
            if !slot_active[s] || col_count[s] != 1 {
                continue;
            }
            let &(row, value) = self.cols[self.basis[s]]
                .entries
                .iter()
                .find(|&&(r, _)| row_active[r as usize])
                .expect("counted entry");
            if value.abs() < 1e-12 {
                return Err(Error::Solver("basis is numerically singular".into()));
            }
            slot_active[s] = false;
            row_active[row as usize] = false;
            backward.push(PeelPivot {
                slot,
                row,
                col: self.basis[s] as u32,
                value,
            });
            for &(s2, _) in &row_entries[row as usize] {
                let s2 = s2 as usize;
                if slot_active[s2] {
                    col_count[s2] -= 1;
                    if col_count[s2] == 1 {
                        queue.push(s2 as u32);
                    }
                }
            }
        }

        // dense LU of whatever the peeling left over
        let bump_rows: Vec<u32> = (0..m as u32).filter(|&r| row_active[r as usize]).collect();
        let bump_slots: Vec<u32> = (0..m as u32).filter(|&s| slot_active[s as usize]).collect();
        let bump_cols: Vec<u32> = bump_slots.iter().map(|&s| self.basis[s as usize] as u32).collect();
        if bump_rows.len() != bump_slots.len() {
            return Err(Error::Solver("basis is structurally singular".into()));
        }
        let k = bump_rows.len();
        let mut row_pos = vec![usize::MAX; m];
        for (i, &r) in bump_rows.iter().enumerate() {
            row_pos[r as usize] = i;
        }
        let mut dense = vec![0.0; k * k];
        for (j, &col) in bump_cols.iter().enumerate() {
            for &(r, v) in &self.cols[col as usize].entries {
                let i = row_pos[r as usize];
                if i != usize::MAX {
                    dense[i * k + j] = v;
                }
            }
        }
        let lu = DenseLu::factor(dense, k)
            .ok_or_else(|| Error::Solver("basis is numerically singular".into()))?;
        if std::env::var_os("ESPOPT_TRACE_BUMP").is_some() {
            eprintln!("refactor: iter={} bump={k} fwd={} bwd={}", self.iterations, forward.len(), backward.len());
        }

        self.factor = Factor {
            forward,
            backward,
            bump_rows,
            bump_slots,
            bump_cols,
            lu,
        };
        self.etas.clear();
        self.recompute_basic_values();
        Ok(())
    }

    /// `x_B = B^{-1} b`, freshly from the factorization.
    fn recompute_basic_values(&mut self) {
        self.x = self.ftran(&self.rhs.clone());
    }

    /// Scatters `value * column(col)` out of the running residual.
    fn scatter_col(&self, col: u32, value: f64, residual: &mut [f64]) {
        if value != 0.0 {
            for &(r, a) in &self.cols[col as usize].entries {
                residual[r as usize] -= a * value;
            }
        }
    }

    /// Solves `B w = v` (`v` indexed by row, result by basis slot):
    /// forward pivots, then the bump, then the backward pivots, each
    /// substituted into the running residual; etas last.
    fn ftran(&self, v: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let mut residual = v.to_vec();
        let mut x = vec![0.0; self.m];
        for p in &f.forward {
            let xv = residual[p.row as usize] / p.value;
            x[p.slot as usize] = xv;
            self.scatter_col(p.col, xv, &mut residual);
        }
        let k = f.bump_rows.len();
        if k > 0 {
            let mut rhs: Vec<f64> = f.bump_rows.iter().map(|&r| residual[r as usize]).collect();
            f.lu.solve(&mut rhs);
            for (j, &slot) in f.bump_slots.iter().enumerate() {
                x[slot as usize] = rhs[j];
                self.scatter_col(f.bump_cols[j], rhs[j], &mut residual);
            }
        }
        // a backward pivot's row may hold later-peeled backward columns but
        // never earlier ones, so these substitute in reverse peel order
        for p in f.backward.iter().rev() {
            let xv = residual[p.row as usize] / p.value;
            x[p.slot as usize] = xv;
            self.scatter_col(p.col, xv, &mut residual);
        }
        for eta in &self.etas {
            let xp = x[eta.pos] / eta.pivot;
            x[eta.pos] = xp;
            if xp != 0.0 {
                for &(i, wi) in &eta.w {
                    if i as usize != eta.pos {
                        x[i as usize] -= wi * xp;
                    }
                }
            }
        }
        x
    }

    /// Residual of one transposed equation: `cost[slot] - column(col) . y`,
    /// skipping the pivot row itself.
    fn gather_col(&self, col: u32, skip_row: u32, cost: f64, y: &[f64]) -> f64 {
        let mut acc = cost;
        for &(r, a) in &self.cols[col as usize].entries {
            if r != skip_row {
                acc -= a * y[r as usize];
            }
        }
        acc
    }

    /// Solves `B^T y = c_B` (`c_B` indexed by basis slot, result by row):
    /// etas in reverse, then backward pivots, the bump, and the forward
    /// pivots in reverse.
    fn btran(&self, costs: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let mut z = costs.to_vec();
        for eta in self.etas.iter().rev() {
            let mut acc = z[eta.pos];
            for &(i, wi) in &eta.w {
                if i as usize != eta.pos {
                    acc -= wi * z[i as usize];
                }
            }
            z[eta.pos] = acc / eta.pivot;
        }
        let mut y = vec![0.0; self.m];
        // a backward-pivot column touches only its own and earlier backward
        // rows, so these resolve first, in peel order
        for p in &f.backward {
            y[p.row as usize] = self.gather_col(p.col, p.row, z[p.slot as usize], &y) / p.value;
        }
        let k = f.bump_rows.len();
        if k > 0 {
            let mut rhs: Vec<f64> = f
                .bump_slots
                .iter()
                .enumerate()
                .map(|(j, &slot)| self.gather_col(f.bump_cols[j], u32::MAX, z[slot as usize], &y))
                .collect();
            f.lu.solve_transpose(&mut rhs);
            for (i, &r) in f.bump_rows.iter().enumerate() {
                y[r as usize] = rhs[i];
            }
        }
        for p in f.forward.iter().rev() {
            y[p.row as usize] = self.gather_col(p.col, p.row, z[p.slot as usize], &y) / p.value;
        }
        y
    }

    fn slot_costs(&self, phase: Phase) -> Vec<f64> {
        self.basis
            .iter()
            .map(|&col| match phase {
                Phase::One => {
                    if self.cols[col].kind == ColKind::Artificial {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Phase::Two => self.cols[col].objective,
            })
            .collect()
    }

    fn reduced_cost(&self, y: &[f64], col: usize, phase: Phase) -> f64 {
        let c = match phase {
            Phase::One => 0.0,
            Phase::Two => self.cols[col].objective,
        };
        let mut acc = c;
        for &(r, v) in &self.cols[col].entries {
            acc -= y[r as usize] * v;
        }
        acc
    }

    /// Picks the entering column by devex score (squared reduced cost over
    /// the reference weight), or the first improving column under Bland's
    /// rule. Ties break toward the lowest column index.
    fn price(&self, phase: Phase, bland: bool) -> Option<usize> {
        let y = self.btran(&self.slot_costs(phase));
        let mut best: Option<(usize, f64)> = None;
        for col in 0..self.cols.len() {
            if self.slot_of[col] >= 0 || self.cols[col].kind == ColKind::Artificial {
                continue;
            }
            let d = self.reduced_cost(&y, col, phase);
            if d > self.opts.tol {
                if bland {
                    return Some(col);
                }
                let score = d * d / self.devex[col];
                if best.map_or(true, |(_, bs)| score > bs) {
                    best = Some((col, score));
                }
            }
        }
        best.map(|(col, _)| col)
    }

    /// Devex reference-weight update after pivoting `entering` in at
    /// `leave_slot`: nonbasic weights grow by the squared ratio of their
    /// pivot-row coefficient to the pivot, and the leaving column restarts
    /// from the entering column's weight.
    fn update_devex_weights(&mut self, entering: usize, leaving: usize, leave_slot: usize, pivot: f64) {
        let gamma_e = self.devex[entering].max(1.0);
        let mut unit = vec![0.0; self.m];
        unit[leave_slot] = 1.0;
        let rho = self.btran(&unit);
        let scale = gamma_e / (pivot * pivot);
        // pivot-row coefficients, accumulated sparsely over the rows where
        // rho is nonzero
        let mut touched: Vec<u32> = Vec::new();
        for (r, &density) in rho.iter().enumerate() {
            if density.abs() > 1e-13 {
                for &j in &self.row_cols[r] {
                    if self.alpha_scratch[j as usize] == 0.0 {
                        touched.push(j);
                    }
                    self.alpha_scratch[j as usize] += density
                        * self.cols[j as usize]
                            .entries
                            .iter()
                            .find(|&&(row, _)| row as usize == r)
                            .map(|&(_, v)| v)
                            .unwrap_or(0.0);
                }
            }
        }
        let mut largest = 1.0f64;
        for &j in &touched {
            let alpha = std::mem::take(&mut self.alpha_scratch[j as usize]);
            let col = j as usize;
            if self.slot_of[col] >= 0
                || self.cols[col].kind == ColKind::Artificial
                || col == entering
                || alpha == 0.0
            {
                continue;
            }
            let candidate = alpha * alpha * scale;
            if candidate > self.devex[col] {
                self.devex[col] = candidate;
            }
            largest = largest.max(self.devex[col]);
        }
        self.devex[leaving] = scale.max(1.0);
        // start a fresh reference framework once the weights blow up
        if largest > 1e12 {
            for w in &mut self.devex {
                *w = 1.0;
            }
        }
    }

    /// Ratio test. Basic artificials sitting at zero leave first (at ratio
    /// zero, whatever the sign of their pivot) so they can never drift
    /// positive again once phase 1 has zeroed them.
    fn choose_leaving(&self, w: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, bool, f64)> = None; // slot, ratio, artificial, |pivot|
        for slot in 0..self.m {
            let wi = w[slot];
            let artificial = self.cols[self.basis[slot]].kind == ColKind::Artificial;
            let pinned = artificial && self.x[slot].abs() <= 1e-9;
            let candidate = if pinned && wi.abs() > PIVOT_TOL {
                Some(0.0)
            } else if wi > PIVOT_TOL {
                Some(self.x[slot].max(0.0) / wi)
            } else {
                None
            };
            let Some(ratio) = candidate else { continue };
            let better = match best {
                None => true,
                Some((bslot, bratio, bart, bpiv)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                    if !tie {
                        ratio < bratio
                    } else if artificial != bart {
                        artificial
                    } else if bland {
                        self.basis[slot] < self.basis[bslot]
                    } else {
                        wi.abs() > bpiv
                    }
                }
            };
            if better {
                best = Some((slot, ratio, artificial, wi.abs()));
            }
        }
        best.map(|(slot, ratio, _, _)| (slot, ratio))
    }

    fn pivot_once(&mut self, phase: Phase) -> Result<Pivot> {
        let bland = self.degenerate_streak >= self.opts.bland_after;
        let entering = match self.price(phase, bland) {
            Some(col) => col,
            None => {
                if self.etas.is_empty() {
                    return Ok(Pivot::Done);
                }
                // only trust optimality on a fresh factorization
                self.refactor()?;
                match self.price(phase, bland) {
                    Some(col) => col,
                    None => return Ok(Pivot::Done),
                }
            }
        };

        let mut dense = vec![0.0; self.m];
        for &(r, v) in &self.cols[entering].entries {
            dense[r as usize] = v;
        }
        let w = self.ftran(&dense);

        let Some((leave_slot, theta)) = self.choose_leaving(&w, bland) else {
            return Ok(Pivot::Unbounded);
        };
        let pivot = w[leave_slot];
        // weight update reads the pre-pivot basis
        self.update_devex_weights(entering, self.basis[leave_slot], leave_slot, pivot);

        let wnz: Vec<(u32, f64)> = w
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v.abs() > DROP_TOL)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        if theta > 0.0 {
            for &(i, wi) in &wnz {
                self.x[i as usize] -= theta * wi;
            }
        }
        self.x[leave_slot] = theta;
        let leaving_col = self.basis[leave_slot];
        self.slot_of[leaving_col] = -1;
        self.slot_of[entering] = leave_slot as isize;
        self.basis[leave_slot] = entering;
        self.etas.push(Eta {
            pos: leave_slot,
            pivot,
            w: wnz,
        });

        self.iterations += 1;
        if theta <= DEGENERATE_STEP {
            self.degenerate_streak += 1;
        } else {
            self.degenerate_streak = 0;
        }
        if self.etas.len() >= self.opts.refactor_every.max(1) {
            self.refactor()?;
        }
        Ok(Pivot::Step)
    }

    fn run_phase(&mut self, phase: Phase) -> Result<Option<SolveStatus>> {
        let cap = self.max_iters();
        loop {
            if self.iterations >= cap {
                return Ok(Some(SolveStatus::IterationLimit));
            }
            match self.pivot_once(phase)? {
                Pivot::Done => return Ok(None),
                Pivot::Unbounded => {
                    if phase == Phase::One {
                        // the phase-1 objective is bounded; this is numerical
                        return Err(Error::Solver(
                            "phase 1 reported an unbounded ray".into(),
                        ));
                    }
                    return Ok(Some(SolveStatus::Unbounded));
                }
                Pivot::Step => {}
            }
        }
    }

    /// Swaps basic artificials stuck at zero for structural columns where a
    /// non-zero pivot exists; rows admitting none are redundant and keep
    /// their artificial (pinned at zero by the ratio test).
    fn drive_out_artificials(&mut self) -> Result<()> {
        for slot in 0..self.m {
            if self.cols[self.basis[slot]].kind != ColKind::Artificial {
                continue;
            }
            let mut unit = vec![0.0; self.m];
            unit[slot] = 1.0;
            let rho = self.btran(&unit);
            let mut best: Option<(usize, f64)> = None;
            for col in 0..self.cols.len() {
                if self.slot_of[col] >= 0 || self.cols[col].kind == ColKind::Artificial {
                    continue;
                }
                let mut alpha = 0.0;
                for &(r, v) in &self.cols[col].entries {
                    alpha += rho[r as usize] * v;
                }
                if alpha.abs() > 1e-7 && best.map_or(true, |(_, a)| alpha.abs() > a) {
                    best = Some((col, alpha.abs()));
                }
            }
            if let Some((col, _)) = best {
                let mut dense = vec![0.0; self.m];
                for &(r, v) in &self.cols[col].entries {
                    dense[r as usize] = v;
                }
                let w = self.ftran(&dense);
                let old = self.basis[slot];
                self.slot_of[old] = -1;
                self.slot_of[col] = slot as isize;
                self.basis[slot] = col;
                self.etas.push(Eta {
                    pos: slot,
                    pivot: w[slot],
                    w: w
                        .iter()
                        .enumerate()
                        .filter(|&(_, &v)| v.abs() > DROP_TOL)
                        .map(|(i, &v)| (i as u32, v))
                        .collect(),
                });
                self.x[slot] = 0.0;
            }
        }
        if !self.etas.is_empty() {
            self.refactor()?;
        }
        Ok(())
    }

    fn run(&mut self) -> Result<SolveStatus> {
        if self.has_artificials {
            if let Some(status) = self.run_phase(Phase::One)? {
                return Ok(status);
            }
            let infeasibility: f64 = (0..self.m)
                .filter(|&s| self.cols[self.basis[s]].kind == ColKind::Artificial)
                .map(|s| self.x[s].max(0.0))
                .sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if infeasibility > self.opts.tol * scale {
                return Ok(SolveStatus::Infeasible);
            }
            self.drive_out_artificials()?;
            self.degenerate_streak = 0;
            // fresh reference framework for the real objective
            for weight in &mut self.devex {
                *weight = 1.0;
            }
        }
        if let Some(status) = self.run_phase(Phase::Two)? {
            return Ok(status);
        }
        // leave with a clean factorization and one refinement step
        if !self.etas.is_empty() {
            self.refactor()?;
        }
        self.refine();
        Ok(SolveStatus::Optimal)
    }

    /// One step of iterative refinement on `B x_B = b`.
    fn refine(&mut self) {
        let mut residual = self.rhs.clone();
        for slot in 0..self.m {
            let xv = self.x[slot];
            if xv != 0.0 {
                for &(r, v) in &self.cols[self.basis[slot]].entries {
                    residual[r as usize] -= v * xv;
                }
            }
        }
        let correction = self.ftran(&residual);
        for slot in 0..self.m {
            self.x[slot] += correction[slot];
        }
    }

    fn report(&self, status: SolveStatus) -> SolveReport {
        let mut primal = vec![0.0; self.lp.num_cols()];
        for slot in 0..self.m {
            let col = self.basis[slot];
            // internal slacks and artificials are not reported
            if col < primal.len() {
                primal[col] = self.x[slot];
            }
        }
        let (row_residual, negativity) = self.lp.residuals(&primal);
        SolveReport {
            status,
            objective: self.lp.objective_value(&primal),
            primal,
            iterations: self.iterations,
            max_residual: row_residual.max(negativity),
        }
    }
}
