//! A self-contained revised simplex solver for maximization LPs in the form
//!
//! ```text
//!     max  c'x   s.t.  A x {<=,=} b,  x >= 0
//! ```
//!
//! Two-phase (artificial-variable start), with sparse column storage, a
//! basis factorization that LU-factors only the non-identity kernel of the
//! basis, product-form eta updates between periodic refactorizations, and
//! Dantzig pricing that falls back to Bland's rule after a run of degenerate
//! pivots. Deterministic: the pivot sequence is a pure function of the input.

mod lu;
mod solver;

use crate::error::{Error, Result};

pub use solver::{solve_simplex, solve_simplex_warm};

/// Constraint sense of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

/// Column-major sparse matrix; row indices sorted within each column.
#[derive(Debug, Clone, Default)]
pub struct SparseColumns {
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseColumns {
    pub fn builder() -> SparseColumnsBuilder {
        SparseColumnsBuilder {
            cols: SparseColumns {
                col_ptr: vec![0],
                row_idx: Vec::new(),
                values: Vec::new(),
            },
        }
    }

    pub fn num_cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }
}

pub struct SparseColumnsBuilder {
    cols: SparseColumns,
}

impl SparseColumnsBuilder {
    /// Appends one column given `(row, value)` entries.
    pub fn push_col(&mut self, mut entries: Vec<(u32, f64)>) {
        entries.sort_by_key(|&(r, _)| r);
        for (r, v) in entries {
            if v != 0.0 {
                self.cols.row_idx.push(r);
                self.cols.values.push(v);
            }
        }
        self.cols.col_ptr.push(self.cols.row_idx.len());
    }

    pub fn finish(self) -> SparseColumns {
        self.cols
    }
}

/// A maximization LP over non-negative variables with `<=` and `=` rows.
#[derive(Debug, Clone)]
pub struct StandardFormLp {
    pub(crate) num_rows: usize,
    pub(crate) objective: Vec<f64>,
    pub(crate) rhs: Vec<f64>,
    pub(crate) row_kinds: Vec<RowKind>,
    pub(crate) cols: SparseColumns,
}

impl StandardFormLp {
    pub fn new(
        objective: Vec<f64>,
        rhs: Vec<f64>,
        row_kinds: Vec<RowKind>,
        cols: SparseColumns,
    ) -> Result<StandardFormLp> {
        if objective.is_empty() {
            return Err(Error::InvalidArgument("no variables".into()));
        }
        if cols.num_cols() != objective.len() {
            return Err(Error::InvalidArgument(format!(
                "objective has {} entries but matrix has {} columns",
                objective.len(),
                cols.num_cols()
            )));
        }
        if rhs.len() != row_kinds.len() {
            return Err(Error::InvalidArgument(
                "rhs and row kinds differ in length".into(),
            ));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("rhs must be finite".into()));
        }
        if objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("objective must be finite".into()));
        }
        let num_rows = rhs.len();
        if cols.row_idx.iter().any(|&r| r as usize >= num_rows) {
            return Err(Error::InvalidArgument("column entry outside row range".into()));
        }
        Ok(StandardFormLp {
            num_rows,
            objective,
            rhs,
            row_kinds,
            cols,
        })
    }

    /// Dense-row convenience constructor for small problems and tests.
    pub fn from_dense(
        objective: Vec<f64>,
        rows: Vec<(Vec<f64>, RowKind, f64)>,
    ) -> Result<StandardFormLp> {
        let ncols = objective.len();
        let mut builder = SparseColumns::builder();
        for j in 0..ncols {
            let mut entries = Vec::new();
            for (i, (coeffs, _, _)) in rows.iter().enumerate() {
                if coeffs.len() != ncols {
                    return Err(Error::InvalidArgument(format!(
                        "row {i} has {} coefficients, expected {ncols}",
                        coeffs.len()
                    )));
                }
                if coeffs[j] != 0.0 {
                    entries.push((i as u32, coeffs[j]));
                }
            }
            builder.push_col(entries);
        }
        let kinds = rows.iter().map(|&(_, k, _)| k).collect();
        let rhs = rows.iter().map(|&(_, _, b)| b).collect();
        StandardFormLp::new(objective, rhs, kinds, builder.finish())
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols.num_cols()
    }

    /// Worst constraint violation of `x` (`<=` rows penalize only the upper
    /// side) together with the largest negativity of a variable.
    pub fn residuals(&self, x: &[f64]) -> (f64, f64) {
        let mut activity = vec![0.0; self.num_rows];
        for j in 0..self.num_cols() {
            let xj = x[j];
            if xj != 0.0 {
                for (r, v) in self.cols.col(j) {
                    activity[r as usize] += v * xj;
                }
            }
        }
        let mut worst = 0.0f64;
        for i in 0..self.num_rows {
            let r = match self.row_kinds[i] {
                RowKind::Le => activity[i] - self.rhs[i],
                RowKind::Eq => (activity[i] - self.rhs[i]).abs(),
            };
            worst = worst.max(r);
        }
        let negativity = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
        (worst, negativity)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Writes the program in a fixed-MPS-compatible layout (with an
    /// `OBJSENSE MAX` section). Rows are named `R1..`, columns `C1..` in the
    /// LP's column order.
    pub fn write_mps(&self, name: &str, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "NAME          {name}")?;
        writeln!(w, "OBJSENSE")?;
        writeln!(w, "    MAX")?;
        writeln!(w, "ROWS")?;
        writeln!(w, " N  OBJ")?;
        for i in 0..self.num_rows {
            let kind = match self.row_kinds[i] {
                RowKind::Le => 'L',
                RowKind::Eq => 'E',
            };
            writeln!(w, " {}  R{}", kind, i + 1)?;
        }
        writeln!(w, "COLUMNS")?;
        for j in 0..self.num_cols() {
            let col = format!("C{}", j + 1);
            if self.objective[j] != 0.0 {
                writeln!(w, "    {:<10}{:<10}{:<.12}", col, "OBJ", self.objective[j])?;
            }
            for (r, v) in self.cols.col(j) {
                writeln!(w, "    {:<10}{:<10}{:<.12}", col, format!("R{}", r + 1), v)?;
            }
        }
        writeln!(w, "RHS")?;
        for i in 0..self.num_rows {
            if self.rhs[i] != 0.0 {
                writeln!(w, "    {:<10}{:<10}{:<.12}", "RHS", format!("R{}", i + 1), self.rhs[i])?;
            }
        }
        writeln!(w, "ENDATA")?;
        Ok(())
    }
}

/// Knobs for one solve call.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Feasibility / optimality tolerance.
    pub tol: f64,
    /// Hard pivot cap; `0` means `200 * (rows + cols)`.
    pub max_iters: usize,
    /// Rebuild the basis factorization every this many pivots.
    pub refactor_every: usize,
    /// Switch to Bland's rule after this many consecutive degenerate pivots.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> SimplexOptions {
        SimplexOptions {
            tol: 1e-7,
            max_iters: 0,
            refactor_every: 50,
            // profile LPs sit on long legitimately-degenerate plateaus
            // (coupling rows have zero rhs); a low trigger locks the solve
            // into Bland's crawl, so the guard only engages on streaks far
            // beyond anything a non-cycling path produces
            bland_after: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Outcome of a solve: status, objective, primal point in the LP's original
/// column space, pivot count, and the residuals actually achieved.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub iterations: usize,
    pub max_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_lp() {
        let lp = StandardFormLp::from_dense(
            vec![1.0, 1.0],
            vec![
                (vec![1.0, 0.0], RowKind::Le, 1.0),
                (vec![0.0, 1.0], RowKind::Le, 1.0),
            ],
        )
        .unwrap();
        let report = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.objective - 2.0).abs() < 1e-9);
        assert!(report.max_residual <= 1e-9);
    }

    #[test]
    fn contradictory_row_is_infeasible() {
        let lp = StandardFormLp::from_dense(
            vec![1.0],
            vec![(vec![1.0], RowKind::Eq, -1.0)],
        )
        .unwrap();
        let report = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let lp = StandardFormLp::from_dense(
            vec![1.0, 0.0],
            vec![(vec![-1.0, 1.0], RowKind::Le, 1.0)],
        )
        .unwrap();
        let report = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_mix() {
        // max x1 + 2 x2  s.t.  x1 + x2 = 1, x2 <= 0.6 -> x = (0.4, 0.6)
        let lp = StandardFormLp::from_dense(
            vec![1.0, 2.0],
            vec![
                (vec![1.0, 1.0], RowKind::Eq, 1.0),
                (vec![0.0, 1.0], RowKind::Le, 0.6),
            ],
        )
        .unwrap();
        let report = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.objective - 1.6).abs() < 1e-9);
        assert!((report.primal[0] - 0.4).abs() < 1e-9);
        assert!((report.primal[1] - 0.6).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_le_row() {
        // x1 >= 2 encoded as -x1 <= -2, minimize nothing: max -x1 -> x1 = 2
        let lp = StandardFormLp::from_dense(
            vec![-1.0],
            vec![(vec![-1.0], RowKind::Le, -2.0)],
        )
        .unwrap();
        let report = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.primal[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_model_rejected() {
        assert!(matches!(
            StandardFormLp::from_dense(vec![], vec![]),
            Err(Error::InvalidArgument(msg)) if msg.contains("no variables")
        ));
    }

    #[test]
    fn determinism() {
        let lp = StandardFormLp::from_dense(
            vec![3.0, 1.0, 4.0, 1.0, 5.0],
            vec![
                (vec![1.0, 1.0, 0.0, 0.5, 0.0], RowKind::Le, 2.0),
                (vec![0.0, 1.0, 1.0, 0.0, 1.0], RowKind::Le, 3.0),
                (vec![1.0, 0.0, 1.0, 1.0, 1.0], RowKind::Eq, 2.5),
            ],
        )
        .unwrap();
        let a = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        let b = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.iterations, b.iterations);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.primal), bits(&b.primal));
    }

    #[test]
    fn mps_layout() {
        let lp = StandardFormLp::from_dense(
            vec![1.0, 0.0],
            vec![(vec![1.0, 1.0], RowKind::Le, 1.0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        lp.write_mps("TEST", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for section in ["NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "ENDATA"] {
            assert!(text.contains(section), "missing {section}");
        }
        assert!(text.contains(" L  R1"));
        assert!(text.contains("C1"));
    }
}
