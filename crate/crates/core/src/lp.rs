//! Dense bounded-variable simplex for the small linear programs produced by
//! the decoy-state constraint systems (a few hundred variables, ~100 rows).
//!
//! Two-phase method with row equilibration. Pricing is Dantzig's rule with a
//! deterministic switch to Bland's rule after a fixed iteration budget, which
//! guarantees termination on degenerate problems. Identical input yields
//! bit-identical output.

use thiserror::Error;

/// Feasibility tolerance: constraints and bounds may be violated by at most
/// this much in an optimal solution.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Entries smaller than this are never used as pivots.
pub const PIVOT_TOL: f64 = 1e-11;
// Kept at pivot scale: bound certification needs true optima, and a looser
// pricing cutoff leaves objective error ~tol * num_vars on the table.
const REDUCED_COST_TOL: f64 = 1e-11;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("iteration limit exceeded ({0} iterations)")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<f64>,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value at the optimum; meaningful only when status is Optimal.
    pub value: f64,
    pub assignment: Vec<f64>,
    /// Certified optimality gap from the final reduced costs: for every
    /// feasible point x, obj(x) >= value - gap when minimizing and
    /// obj(x) <= value + gap when maximizing. Zero unless status is Optimal.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub max_violation: f64,
}

impl LinearProgram {
    pub fn minimize(num_vars: usize, objective: Vec<f64>) -> LinearProgram {
        LinearProgram {
            num_vars,
            lower: vec![0.0; num_vars],
            upper: vec![1.0; num_vars],
            constraints: Vec::new(),
            objective,
            direction: Direction::Minimize,
        }
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars;
        if self.lower.len() != n || self.upper.len() != n || self.objective.len() != n {
            return Err(LpError::Malformed("bound/objective length mismatch".into()));
        }
        for j in 0..n {
            if !self.lower[j].is_finite() || !self.upper[j].is_finite() {
                return Err(LpError::Malformed(format!("variable {j} has non-finite bounds")));
            }
            if self.lower[j] > self.upper[j] {
                return Err(LpError::Malformed(format!(
                    "variable {j}: lower {} > upper {}",
                    self.lower[j], self.upper[j]
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(LpError::Malformed(format!("objective coefficient {j} not finite")));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Malformed(format!("constraint {r} row length mismatch")));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|x| !x.is_finite()) {
                return Err(LpError::Malformed(format!("constraint {r} has non-finite entries")));
            }
        }
        Ok(())
    }

    /// Plain-text dump in the CPLEX LP file format for cross-checks with
    /// external solvers.
    pub fn to_lp_format(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let dir = match self.direction {
            Direction::Minimize => "Minimize",
            Direction::Maximize => "Maximize",
        };
        writeln!(s, "{dir}").unwrap();
        write!(s, " obj:").unwrap();
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write!(s, " {c:+.17e} x{j}").unwrap();
            }
        }
        writeln!(s, "\nSubject To").unwrap();
        for (r, c) in self.constraints.iter().enumerate() {
            write!(s, " c{r}:").unwrap();
            for (j, &a) in c.coeffs.iter().enumerate() {
                if a != 0.0 {
                    write!(s, " {a:+.17e} x{j}").unwrap();
                }
            }
            let rel = match c.relation {
                Relation::Eq => "=",
                Relation::Le => "<=",
                Relation::Ge => ">=",
            };
            writeln!(s, " {rel} {:.17e}", c.rhs).unwrap();
        }
        writeln!(s, "Bounds").unwrap();
        for j in 0..self.num_vars {
            writeln!(s, " {:.17e} <= x{j} <= {:.17e}", self.lower[j], self.upper[j]).unwrap();
        }
        writeln!(s, "End").unwrap();
        s
    }
}

/// Independent certificate checker: the largest bound or constraint violation
/// of an assignment, evaluated on the original unscaled problem.
pub fn check_feasible(problem: &LinearProgram, assignment: &[f64]) -> FeasibilityReport {
    assert_eq!(assignment.len(), problem.num_vars, "assignment length mismatch");
    let mut worst = 0.0f64;
    for j in 0..problem.num_vars {
        worst = worst.max(problem.lower[j] - assignment[j]);
        worst = worst.max(assignment[j] - problem.upper[j]);
    }
    for c in &problem.constraints {
        let lhs: f64 = c.coeffs.iter().zip(assignment).map(|(a, x)| a * x).sum();
        let v = match c.relation {
            Relation::Eq => (lhs - c.rhs).abs(),
            Relation::Le => lhs - c.rhs,
            Relation::Ge => c.rhs - lhs,
        };
        worst = worst.max(v);
    }
    FeasibilityReport { feasible: worst <= FEASIBILITY_TOL, max_violation: worst.max(0.0) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major B^{-1} A over all columns (structural, slack, artificial).
    mat: Vec<f64>,
    /// Values of the basic variables, one per row.
    beta: Vec<f64>,
    basic: Vec<usize>,
    status: Vec<VarStatus>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Tableau {
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[i * self.cols + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::Basic(i) => self.beta[i],
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
        }
    }

    /// One simplex phase: minimize `cost` over the current basis. `allow`
    /// masks columns that may enter (artificials are barred in phase 2).
    fn run(&mut self, cost: &[f64], allow: &[bool]) -> Result<LpStatus, LpError> {
        let iter_limit = 2000 + 200 * (self.rows + self.cols);
        let bland_after = 100 + 10 * (self.rows + self.cols);
        let mut reduced = vec![0.0; self.cols];
        for iter in 0..iter_limit {
            let bland = iter >= bland_after;
            // Reduced costs d = c - c_B^T (B^{-1} A), accumulated row-wise so
            // the tableau is walked contiguously.
            reduced.copy_from_slice(cost);
            for i in 0..self.rows {
                let yi = cost[self.basic[i]];
                if yi != 0.0 {
                    let row = &self.mat[i * self.cols..(i + 1) * self.cols];
                    for (dj, &a) in reduced.iter_mut().zip(row) {
                        *dj -= yi * a;
                    }
                }
            }
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                if !allow[j] || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = reduced[j];
                let improving = match self.status[j] {
                    VarStatus::Basic(_) => continue,
                    VarStatus::AtLower if d < -REDUCED_COST_TOL => Some(-d),
                    VarStatus::AtUpper if d > REDUCED_COST_TOL => Some(d),
                    _ => None,
                };
                if let Some(violation) = improving {
                    match entering {
                        Some((_, best)) if !bland && violation > best => {
                            entering = Some((j, violation));
                        }
                        None => entering = Some((j, violation)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((e, _)) = entering else {
                return Ok(LpStatus::Optimal);
            };

            let dir = if self.status[e] == VarStatus::AtLower { 1.0 } else { -1.0 };
            // Ratio test over basic variables; the entering variable's own
            // span is the fallback (bound flip).
            let own_span = self.upper[e] - self.lower[e];
            let mut t_min = f64::INFINITY;
            let mut leave: Option<(usize, bool)> = None; // (row, hits_lower)
            for i in 0..self.rows {
                let alpha = self.entry(i, e) * dir;
                let b = self.basic[i];
                let (limit, hits_lower) = if alpha > PIVOT_TOL {
                    ((self.beta[i] - self.lower[b]) / alpha, true)
                } else if alpha < -PIVOT_TOL {
                    ((self.upper[b] - self.beta[i]) / -alpha, false)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                // Exact ties break toward the smallest basic variable index
                // (Bland's leaving rule).
                let take = match leave {
                    None => limit < t_min,
                    Some((prev, _)) => {
                        limit < t_min || (limit == t_min && self.basic[i] < self.basic[prev])
                    }
                };
                if take {
                    t_min = limit;
                    leave = Some((i, hits_lower));
                }
            }

            if own_span <= t_min {
                if !own_span.is_finite() {
                    return Ok(LpStatus::Unbounded);
                }
                // Bound flip: the entering variable crosses to its other
                // bound without a basis change.
                for i in 0..self.rows {
                    self.beta[i] -= self.entry(i, e) * dir * own_span;
                }
                self.status[e] = match self.status[e] {
                    VarStatus::AtLower => VarStatus::AtUpper,
                    VarStatus::AtUpper => VarStatus::AtLower,
                    VarStatus::Basic(_) => unreachable!(),
                };
                continue;
            }
            let Some((r, hits_lower)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            let t = t_min;

            // Update basic values, then pivot the tableau on (r, e).
            for i in 0..self.rows {
                if i != r {
                    self.beta[i] -= self.entry(i, e) * dir * t;
                }
            }
            let entering_value = match self.status[e] {
                VarStatus::AtLower => self.lower[e] + t,
                VarStatus::AtUpper => self.upper[e] - t,
                VarStatus::Basic(_) => unreachable!(),
            };
            let leaving = self.basic[r];
            self.status[leaving] =
                if hits_lower { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.status[e] = VarStatus::Basic(r);
            self.basic[r] = e;
            self.beta[r] = entering_value;

            let piv = self.entry(r, e);
            let inv = 1.0 / piv;
            for j in 0..self.cols {
                self.mat[r * self.cols + j] *= inv;
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self.entry(i, e);
                if f != 0.0 {
                    for j in 0..self.cols {
                        let pivot_val = self.mat[r * self.cols + j];
                        self.mat[i * self.cols + j] -= f * pivot_val;
                    }
                    self.mat[i * self.cols + e] = 0.0;
                }
            }
        }
        Err(LpError::IterationLimit(iter_limit))
    }

}

/// Internal constraint form after preprocessing: a . x + s = rhs with the
/// slack bounded in [slack_lo, slack_hi]. A Le row has slack [0, inf), a Ge
/// row (-inf, 0], an Eq row [0, 0], and a merged Le/Ge pair with identical
/// coefficients becomes a single ranged row with slack [0, hi - lo]. Merging
/// matters: keeping the pair as two rows makes every simplex basis that
/// activates both exactly singular, which lets the pivoted tableau drift.
struct RangedRow {
    coeffs: Vec<f64>,
    rhs: f64,
    slack_lo: f64,
    slack_hi: f64,
}

/// Solves B^T y = c_B for the dual multipliers of the final basis, where B is
/// rebuilt from the preprocessed rows (structural, slack, or artificial
/// columns as recorded in `basic`). Gaussian elimination with partial
/// pivoting; returns None if the basis matrix is numerically singular.
fn basis_duals(
    rows: &[RangedRow],
    basic: &[usize],
    row_sign: &[f64],
    cost: &[f64],
    n: usize,
) -> Option<Vec<f64>> {
    let m = rows.len();
    // Row k of the system is (column of basic[k]) . y = cost[basic[k]].
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (k, &b) in basic.iter().enumerate() {
        if b < n {
            for i in 0..m {
                a[k * m + i] = rows[i].coeffs[b];
            }
        } else if b < n + m {
            a[k * m + (b - n)] = 1.0;
        } else {
            a[k * m + (b - n - m)] = row_sign[b - n - m];
        }
        rhs[k] = cost[b];
    }
    for col in 0..m {
        let (pivot_row, pivot_abs) = (col..m)
            .map(|r| (r, a[r * m + col].abs()))
            .fold((col, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pivot_abs < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for j in 0..m {
                a.swap(col * m + j, pivot_row * m + j);
            }
            rhs.swap(col, pivot_row);
        }
        let inv = 1.0 / a[col * m + col];
        for r in (col + 1)..m {
            let f = a[r * m + col] * inv;
            if f != 0.0 {
                for j in col..m {
                    a[r * m + j] -= f * a[col * m + j];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut y = vec![0.0; m];
    for col in (0..m).rev() {
        let mut v = rhs[col];
        for j in (col + 1)..m {
            v -= a[col * m + j] * y[j];
        }
        y[col] = v / a[col * m + col];
    }
    Some(y)
}

/// Safe dual bound: a rigorous lower bound on min cost.x over the feasible
/// set, valid for *any* dual vector because the reduced costs are recomputed
/// from the preprocessed constraint data rather than the pivoted tableau.
///
/// With rows written as a_i . x + s_i = b_i, for every feasible point
/// cost.x = sum_j d_j x_j + sum_i y_i (b_i - s_i), d_j = c_j - sum_i y_i a_ij,
/// so minimizing each term over its box gives
/// cost.x >= sum_j min(d_j l_j, d_j u_j)
///         + sum_i [y_i b_i - max(y_i slack_lo_i, y_i slack_hi_i)].
/// Duals whose sign would make an infinite slack bound active are clipped to
/// zero first, which preserves validity (any y is valid) at some tightness
/// cost.
fn dual_lower_bound(
    rows: &[RangedRow],
    cost: &[f64],
    lower: &[f64],
    upper: &[f64],
    duals: &mut [f64],
) -> f64 {
    let n = lower.len();
    let mut bound = 0.0;
    for (y, row) in duals.iter_mut().zip(rows) {
        if row.slack_hi.is_infinite() {
            *y = y.min(0.0);
        }
        if row.slack_lo.is_infinite() {
            *y = y.max(0.0);
        }
        if *y != 0.0 {
            bound += *y * row.rhs - (*y * row.slack_lo).max(*y * row.slack_hi);
        }
    }
    for j in 0..n {
        let mut d = cost[j];
        for (y, row) in duals.iter().zip(rows) {
            if *y != 0.0 {
                d -= *y * row.coeffs[j];
            }
        }
        bound += (d * lower[j]).min(d * upper[j]);
    }
    bound
}

/// Solve a bounded-variable LP to global optimality. Infeasible and unbounded
/// problems are reported in the status, never as a panic.
pub fn solve(problem: &LinearProgram) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let n = problem.num_vars;

    let infeasible = LpSolution {
        status: LpStatus::Infeasible,
        value: f64::NAN,
        assignment: vec![],
        gap: 0.0,
    };

    // Drop constant rows (checking them directly) and collect the rest.
    let mut raw: Vec<(&Constraint, f64)> = Vec::with_capacity(problem.constraints.len());
    for c in &problem.constraints {
        let maxc = c.coeffs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        if maxc == 0.0 {
            let ok = match c.relation {
                Relation::Eq => c.rhs.abs() <= FEASIBILITY_TOL,
                Relation::Le => c.rhs >= -FEASIBILITY_TOL,
                Relation::Ge => c.rhs <= FEASIBILITY_TOL,
            };
            if !ok {
                return Ok(infeasible);
            }
            continue;
        }
        raw.push((c, maxc));
    }

    // Merge adjacent Le/Ge pairs over identical coefficient rows into ranged
    // rows, then equilibrate each row to unit max coefficient (slack bounds
    // scale along with the rhs).
    let mut rows: Vec<RangedRow> = Vec::with_capacity(raw.len());
    let mut idx = 0;
    while idx < raw.len() {
        let (c, maxc) = raw[idx];
        let pair = raw.get(idx + 1).and_then(|&(next, _)| {
            if next.coeffs != c.coeffs {
                return None;
            }
            match (c.relation, next.relation) {
                (Relation::Le, Relation::Ge) => Some((c.rhs, next.rhs)),
                (Relation::Ge, Relation::Le) => Some((next.rhs, c.rhs)),
                _ => None,
            }
        });
        let (rhs, slack_lo, slack_hi) = if let Some((hi, lo)) = pair {
            idx += 2;
            if hi < lo {
                return Ok(infeasible);
            }
            (hi, 0.0, hi - lo)
        } else {
            idx += 1;
            let (slo, shi) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            (c.rhs, slo, shi)
        };
        let inv = 1.0 / maxc;
        rows.push(RangedRow {
            coeffs: c.coeffs.iter().map(|&x| x * inv).collect(),
            rhs: rhs * inv,
            slack_lo: slack_lo * inv,
            slack_hi: slack_hi * inv,
        });
    }
    let m = rows.len();
    let cols = n + 2 * m;

    let mut lower = vec![0.0; cols];
    let mut upper = vec![0.0; cols];
    lower[..n].copy_from_slice(&problem.lower);
    upper[..n].copy_from_slice(&problem.upper);
    for (i, row) in rows.iter().enumerate() {
        lower[n + i] = row.slack_lo;
        upper[n + i] = row.slack_hi;
        lower[n + m + i] = 0.0;
        upper[n + m + i] = f64::INFINITY;
    }

    // Every slack starts at zero: at its lower bound when that is finite
    // (Le, Eq, ranged), else at its upper bound (Ge).
    let mut status = vec![VarStatus::AtLower; cols];
    for (i, row) in rows.iter().enumerate() {
        if row.slack_lo.is_infinite() {
            status[n + i] = VarStatus::AtUpper;
        }
    }

    // Residuals at the initial nonbasic point (structurals at lower bounds,
    // slacks at zero) decide the artificial signs.
    let mut mat = vec![0.0; m * cols];
    let mut beta = vec![0.0; m];
    let mut basic = vec![0; m];
    let mut row_sign = vec![1.0; m];
    for (i, row) in rows.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().zip(&problem.lower).map(|(a, x)| a * x).sum();
        let r = row.rhs - lhs;
        let sgn = if r >= 0.0 { 1.0 } else { -1.0 };
        row_sign[i] = sgn;
        for j in 0..n {
            mat[i * cols + j] = row.coeffs[j] * sgn;
        }
        mat[i * cols + n + i] = sgn;
        mat[i * cols + n + m + i] = 1.0;
        beta[i] = r.abs();
        basic[i] = n + m + i;
        status[n + m + i] = VarStatus::Basic(i);
    }

    let mut tab = Tableau { rows: m, cols, mat, beta, basic, status, lower, upper };

    // Phase 1: drive the artificials to zero.
    if m > 0 {
        let mut cost = vec![0.0; cols];
        for j in (n + m)..cols {
            cost[j] = 1.0;
        }
        let allow = vec![true; cols];
        let st = tab.run(&cost, &allow)?;
        debug_assert_ne!(st, LpStatus::Unbounded);
        let infeasibility: f64 =
            (0..m).filter(|&i| tab.basic[i] >= n + m).map(|i| tab.beta[i]).sum();
        if infeasibility > FEASIBILITY_TOL {
            return Ok(infeasible);
        }
        // Pin artificials at zero for phase 2.
        for j in (n + m)..cols {
            tab.upper[j] = 0.0;
        }
    }

    // Phase 2: the real objective.
    let mut cost = vec![0.0; cols];
    let sense = match problem.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    for j in 0..n {
        cost[j] = problem.objective[j] * sense;
    }
    let mut allow = vec![true; cols];
    for a in allow.iter_mut().skip(n + m) {
        *a = false;
    }
    let st = tab.run(&cost, &allow)?;
    if st == LpStatus::Unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: f64::NAN,
            assignment: vec![],
            gap: 0.0,
        });
    }

    let assignment: Vec<f64> = (0..n)
        .map(|j| {
            let v = tab.nonbasic_value(j);
            v.clamp(problem.lower[j], problem.upper[j])
        })
        .collect();
    let value: f64 = problem.objective.iter().zip(&assignment).map(|(c, x)| c * x).sum();

    // Dual multipliers of the final basis, computed from a fresh
    // factorization of the preprocessed data (B^T y = c_B) rather than the
    // pivoted tableau, then turned into a rigorous bound on the optimum.
    let mut duals =
        basis_duals(&rows, &tab.basic, &row_sign, &cost, n).unwrap_or_else(|| vec![0.0; m]);
    let dual_bound = dual_lower_bound(&rows, &cost, &problem.lower, &problem.upper, &mut duals);
    // `value` is attained, so it brackets the optimum from the opposite side;
    // the difference certifies how far the returned value can sit from it.
    let gap = match problem.direction {
        Direction::Minimize => (value - dual_bound).max(0.0),
        Direction::Maximize => (-dual_bound - value).max(0.0),
    };
    Ok(LpSolution { status: LpStatus::Optimal, value, assignment, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bound_attained_minimum() {
        let mut lp = LinearProgram::minimize(1, vec![1.0]);
        lp.lower = vec![0.2];
        lp.upper = vec![1.0];
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.value, 0.2, epsilon = 1e-12);
        let report = check_feasible(&lp, &sol.assignment);
        assert!(report.feasible);
        assert_eq!(report.max_violation, 0.0);
    }

    #[test]
    fn two_variable_analytic() {
        let mut lp = LinearProgram::minimize(2, vec![1.0, 1.0]);
        lp.constraints.push(Constraint {
            coeffs: vec![1.0, 2.0],
            relation: Relation::Eq,
            rhs: 1.0,
        });
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.value, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.assignment[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.assignment[1], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn check_feasible_reports_violation() {
        let mut lp = LinearProgram::minimize(2, vec![1.0, 1.0]);
        lp.constraints.push(Constraint {
            coeffs: vec![1.0, 2.0],
            relation: Relation::Eq,
            rhs: 1.0,
        });
        let report = check_feasible(&lp, &[0.0, 0.0]);
        assert!(!report.feasible);
        assert_abs_diff_eq!(report.max_violation, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::minimize(1, vec![1.0]);
        lp.constraints.push(Constraint {
            coeffs: vec![1.0],
            relation: Relation::Ge,
            rhs: 2.0,
        });
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn maximize_via_negation() {
        let mut lp = LinearProgram::minimize(2, vec![1.0, 2.0]);
        lp.direction = Direction::Maximize;
        lp.constraints.push(Constraint {
            coeffs: vec![1.0, 1.0],
            relation: Relation::Le,
            rhs: 1.5,
        });
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // x=0.5, y=1 is optimal: 0.5 + 2 = 2.5.
        assert_abs_diff_eq!(sol.value, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn malformed_rejected() {
        let mut lp = LinearProgram::minimize(2, vec![1.0]);
        assert!(solve(&lp).is_err());
        lp.objective = vec![1.0, f64::NAN];
        assert!(solve(&lp).is_err());
        let mut lp2 = LinearProgram::minimize(1, vec![1.0]);
        lp2.lower = vec![2.0];
        assert!(solve(&lp2).is_err());
    }

    #[test]
    fn determinism() {
        let mut lp = LinearProgram::minimize(3, vec![-1.0, 0.5, -0.25]);
        lp.constraints.push(Constraint {
            coeffs: vec![1.0, 1.0, 1.0],
            relation: Relation::Le,
            rhs: 1.7,
        });
        lp.constraints.push(Constraint {
            coeffs: vec![0.3, -0.7, 0.1],
            relation: Relation::Ge,
            rhs: -0.2,
        });
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        for (x, y) in a.assignment.iter().zip(&b.assignment) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn objective_scaling() {
        let mut lp = LinearProgram::minimize(3, vec![1.0, -2.0, 0.5]);
        lp.constraints.push(Constraint {
            coeffs: vec![1.0, 1.0, -1.0],
            relation: Relation::Le,
            rhs: 0.8,
        });
        let base = solve(&lp).unwrap();
        let c = 3.75;
        let mut scaled = lp.clone();
        scaled.objective = lp.objective.iter().map(|x| x * c).collect();
        let s = solve(&scaled).unwrap();
        assert_abs_diff_eq!(s.value, base.value * c, epsilon = 1e-9);
        for (x, y) in base.assignment.iter().zip(&s.assignment) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn lp_format_dump_contains_sections() {
        let mut lp = LinearProgram::minimize(2, vec![1.0, 0.0]);
        lp.constraints.push(Constraint {
            coeffs: vec![1.0, 2.0],
            relation: Relation::Ge,
            rhs: 0.5,
        });
        let text = lp.to_lp_format();
        for section in ["Minimize", "Subject To", "Bounds", "End", ">="] {
            assert!(text.contains(section), "missing {section}");
        }
    }
}
