//! Dense two-phase primal simplex with bounded variables.
//!
//! Problems have the form
//!
//! ```text
//! min/max  cᵀz   s.t.  A z ≤ b,  E z = f,  l ≤ z ≤ u
//! ```
//!
//! with `l`/`u` allowed to be infinite. Internally every column is shifted or
//! split so that it lives on `[0, u']`, and upper bounds are handled by the
//! bounded-variable ratio test instead of extra rows. Pricing is Dantzig's
//! rule; after a streak of degenerate pivots the solver falls back to Bland's
//! rule until progress resumes. The final basis is re-solved from the original
//! data to recover accurate primal values and multipliers.

use log::trace;

use crate::error::{Error, Result};

pub const DEFAULT_FEAS_TOL: f64 = 1e-9;
pub const DEFAULT_OPT_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub sense: Sense,
    pub cost: Vec<f64>,
    pub ineq_lhs: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub eq_lhs: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// Empty problem over `num_vars` variables with zero cost and bounds `[0, ∞)`.
    pub fn new(sense: Sense, num_vars: usize) -> Self {
        Self {
            sense,
            cost: vec![0.0; num_vars],
            ineq_lhs: Vec::new(),
            ineq_rhs: Vec::new(),
            eq_lhs: Vec::new(),
            eq_rhs: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// Adds `row · z ≤ rhs` and returns its index among the inequality rows.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        self.ineq_lhs.push(row);
        self.ineq_rhs.push(rhs);
        self.ineq_rhs.len() - 1
    }

    /// Adds `row · z ≥ rhs`, stored negated as a `≤` row.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        self.add_le(row.into_iter().map(|a| -a).collect(), -rhs)
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        self.eq_lhs.push(row);
        self.eq_rhs.push(rhs);
        self.eq_rhs.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |msg: String| Err(Error::MalformedProblem(msg));
        if self.lower.len() != n || self.upper.len() != n {
            return bad(format!("bounds have length {}/{}, expected {n}", self.lower.len(), self.upper.len()));
        }
        if self.ineq_lhs.len() != self.ineq_rhs.len() || self.eq_lhs.len() != self.eq_rhs.len() {
            return bad("row count differs from rhs length".into());
        }
        for (k, row) in self.ineq_lhs.iter().chain(&self.eq_lhs).enumerate() {
            if row.len() != n {
                return bad(format!("row {k} has {} entries, expected {n}", row.len()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return bad(format!("row {k} has a non-finite coefficient"));
            }
        }
        if self.cost.iter().chain(&self.ineq_rhs).chain(&self.eq_rhs).any(|v| !v.is_finite()) {
            return bad("non-finite cost or right-hand side".into());
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return bad(format!("variable {j} has bounds [{l}, {u}]"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`]. Vectors are empty unless the status is `Optimal`.
///
/// `dual_ineq` holds nonnegative multipliers for the `A z ≤ b` rows: raising
/// `b_r` by one unit moves the optimal objective by `-λ_r` when minimizing and
/// `+λ_r` when maximizing. `dual_eq` follows the same sign convention.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub dual_ineq: Vec<f64>,
    pub dual_eq: Vec<f64>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        let objective = match status {
            LpStatus::Infeasible => f64::NAN,
            _ => f64::NEG_INFINITY,
        };
        Self {
            status,
            primal: Vec::new(),
            objective,
            dual_ineq: Vec::new(),
            dual_eq: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves with the default tolerances.
pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    solve_lp(problem, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL)
}

pub fn solve_lp(problem: &LpProblem, feas_tol: f64, opt_tol: f64) -> Result<LpSolution> {
    problem.validate()?;
    let std = StandardForm::build(problem);
    let mut tab = Tableau::new(&std);

    if std.num_artificial() > 0 {
        let phase1: Vec<f64> = (0..std.cols)
            .map(|j| if j >= std.art_start { 1.0 } else { 0.0 })
            .collect();
        tab.run(&phase1, opt_tol)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.beta)
            .filter(|(&j, _)| j >= std.art_start)
            .map(|(_, &v)| v.max(0.0))
            .sum();
        let scale = 1.0 + std.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeasibility > feas_tol * scale {
            trace!("phase 1 ended with infeasibility {infeasibility:e}");
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        tab.retire_artificials(std.art_start);
    }

    if tab.run(&std.cost, opt_tol)? == Outcome::Unbounded {
        let mut sol = LpSolution::without_point(LpStatus::Unbounded);
        if problem.sense == Sense::Maximize {
            sol.objective = f64::INFINITY;
        }
        return Ok(sol);
    }

    Ok(std.recover(problem, &tab))
}

/// How an original variable maps onto internal columns: `z_j = offset + Σ sign·z'_k`.
#[derive(Clone, Copy)]
struct ColumnOrigin {
    var: usize,
    sign: f64,
}

struct StandardForm {
    rows: usize,
    cols: usize,
    num_ineq: usize,
    /// Row-major `rows × cols` coefficients after shifting, splitting and row negation.
    a: Vec<f64>,
    b: Vec<f64>,
    /// Phase-2 costs in minimization form.
    cost: Vec<f64>,
    upper: Vec<f64>,
    row_sign: Vec<f64>,
    origins: Vec<ColumnOrigin>,
    offsets: Vec<f64>,
    art_start: usize,
    /// Column that forms the initial identity basis for each row.
    initial_basis: Vec<usize>,
}

impl StandardForm {
    fn build(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let min_sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        let mut origins = Vec::new();
        let mut offsets = vec![0.0; n];
        let mut struct_upper = Vec::new();
        for j in 0..n {
            let (l, u) = (p.lower[j], p.upper[j]);
            if l.is_finite() {
                offsets[j] = l;
                origins.push(ColumnOrigin { var: j, sign: 1.0 });
                struct_upper.push(u - l);
            } else if u.is_finite() {
                offsets[j] = u;
                origins.push(ColumnOrigin { var: j, sign: -1.0 });
                struct_upper.push(f64::INFINITY);
            } else {
                origins.push(ColumnOrigin { var: j, sign: 1.0 });
                origins.push(ColumnOrigin { var: j, sign: -1.0 });
                struct_upper.push(f64::INFINITY);
                struct_upper.push(f64::INFINITY);
            }
        }
        let num_struct = origins.len();
        let num_ineq = p.ineq_rhs.len();
        let rows = num_ineq + p.eq_rhs.len();

        let shifted_rhs = |row: &[f64], rhs: f64| {
            rhs - row.iter().zip(&offsets).map(|(a, o)| a * o).sum::<f64>()
        };
        let mut b: Vec<f64> = p
            .ineq_lhs
            .iter()
            .zip(&p.ineq_rhs)
            .chain(p.eq_lhs.iter().zip(&p.eq_rhs))
            .map(|(row, &rhs)| shifted_rhs(row, rhs))
            .collect();
        let row_sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        for (v, s) in b.iter_mut().zip(&row_sign) {
            *v *= s;
        }

        // Slack on row r is basic from the start iff the row is `≤` and kept its sign.
        let needs_artificial: Vec<bool> = (0..rows)
            .map(|r| r >= num_ineq || row_sign[r] < 0.0)
            .collect();
        let num_art = needs_artificial.iter().filter(|&&x| x).count();
        let slack_start = num_struct;
        let art_start = slack_start + num_ineq;
        let cols = art_start + num_art;

        let mut a = vec![0.0; rows * cols];
        let mut initial_basis = vec![0; rows];
        let mut next_art = art_start;
        for r in 0..rows {
            let orig_row = if r < num_ineq {
                &p.ineq_lhs[r]
            } else {
                &p.eq_lhs[r - num_ineq]
            };
            let row = &mut a[r * cols..(r + 1) * cols];
            for (k, o) in origins.iter().enumerate() {
                row[k] = row_sign[r] * o.sign * orig_row[o.var];
            }
            if r < num_ineq {
                row[slack_start + r] = row_sign[r];
            }
            if needs_artificial[r] {
                row[next_art] = 1.0;
                initial_basis[r] = next_art;
                next_art += 1;
            } else {
                initial_basis[r] = slack_start + r;
            }
        }

        let mut cost = vec![0.0; cols];
        for (k, o) in origins.iter().enumerate() {
            cost[k] = min_sign * o.sign * p.cost[o.var];
        }
        let mut upper = vec![f64::INFINITY; cols];
        upper[..num_struct].copy_from_slice(&struct_upper);

        Self {
            rows,
            cols,
            num_ineq,
            a,
            b,
            cost,
            upper,
            row_sign,
            origins,
            offsets,
            art_start,
            initial_basis,
        }
    }

    fn num_artificial(&self) -> usize {
        self.cols - self.art_start
    }

    fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.a[r * self.cols + j])
    }

    /// Re-solves the final basis against the original data and maps the
    /// result back onto the caller's variables.
    fn recover(&self, p: &LpProblem, tab: &Tableau) -> LpSolution {
        let m = self.rows;
        let mut values: Vec<f64> = (0..self.cols)
            .map(|j| match tab.state[j] {
                VarState::Upper => self.upper[j],
                _ => 0.0,
            })
            .collect();

        let mut basis_mat = vec![0.0; m * m];
        for (c, &j) in tab.basis.iter().enumerate() {
            for (r, v) in self.column(j).enumerate() {
                basis_mat[r * m + c] = v;
            }
        }
        let mut rhs = self.b.clone();
        for j in 0..self.cols {
            if tab.state[j] == VarState::Upper {
                for (r, v) in self.column(j).enumerate() {
                    rhs[r] -= v * self.upper[j];
                }
            }
        }
        let basic = solve_dense(&basis_mat, m, &rhs, false).unwrap_or_else(|| tab.beta.clone());
        for (&j, &v) in tab.basis.iter().zip(&basic) {
            values[j] = v.clamp(0.0, self.upper[j]);
        }

        let cb: Vec<f64> = tab.basis.iter().map(|&j| self.cost[j]).collect();
        let y = solve_dense(&basis_mat, m, &cb, true).unwrap_or_else(|| tab.row_duals(self, &cb));

        let mut primal = self.offsets.clone();
        for (k, o) in self.origins.iter().enumerate() {
            primal[o.var] += o.sign * values[k];
        }
        for j in 0..primal.len() {
            primal[j] = primal[j].clamp(p.lower[j], p.upper[j]);
        }
        let objective = p.cost.iter().zip(&primal).map(|(c, z)| c * z).sum();

        let multipliers: Vec<f64> = (0..m).map(|r| -self.row_sign[r] * y[r]).collect();
        LpSolution {
            status: LpStatus::Optimal,
            primal,
            objective,
            dual_ineq: multipliers[..self.num_ineq].to_vec(),
            dual_eq: multipliers[self.num_ineq..].to_vec(),
        }
    }
}

/// Gaussian elimination with partial pivoting on a dense `m × m` system,
/// optionally transposed. Returns `None` on a numerically singular matrix.
fn solve_dense(mat: &[f64], m: usize, rhs: &[f64], transpose: bool) -> Option<Vec<f64>> {
    let mut a: Vec<f64> = if transpose {
        (0..m * m).map(|k| mat[(k % m) * m + k / m]).collect()
    } else {
        mat.to_vec()
    };
    let mut x = rhs.to_vec();
    for col in 0..m {
        let piv = (col..m).max_by(|&p, &q| a[p * m + col].abs().total_cmp(&a[q * m + col].abs()))?;
        if a[piv * m + col].abs() < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..m {
                a.swap(piv * m + k, col * m + k);
            }
            x.swap(piv, col);
        }
        let d = a[col * m + col];
        for r in col + 1..m {
            let f = a[r * m + col] / d;
            if f != 0.0 {
                for k in col..m {
                    a[r * m + k] -= f * a[col * m + k];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..m).rev() {
        let s: f64 = (col + 1..m).map(|k| a[col * m + k] * x[k]).sum();
        x[col] = (x[col] - s) / a[col * m + col];
    }
    Some(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `B⁻¹ A`, row-major.
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    upper: Vec<f64>,
    banned: Vec<bool>,
    iteration_limit: usize,
}

impl Tableau {
    fn new(std: &StandardForm) -> Self {
        let mut state = vec![VarState::Lower; std.cols];
        for &j in &std.initial_basis {
            state[j] = VarState::Basic;
        }
        Self {
            rows: std.rows,
            cols: std.cols,
            t: std.a.clone(),
            beta: std.b.clone(),
            basis: std.initial_basis.clone(),
            state,
            upper: std.upper.clone(),
            banned: vec![false; std.cols],
            iteration_limit: 1000 + 100 * (std.rows + std.cols),
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                let row = &self.t[r * self.cols..(r + 1) * self.cols];
                for (dk, a) in d.iter_mut().zip(row) {
                    *dk -= cb * a;
                }
            }
        }
        d
    }

    fn run(&mut self, cost: &[f64], opt_tol: f64) -> Result<Outcome> {
        let mut d = self.reduced_costs(cost);
        let mut degenerate = 0usize;
        for _ in 0..self.iteration_limit {
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some(q) = self.choose_entering(&d, opt_tol, bland) else {
                return Ok(Outcome::Optimal);
            };
            let dir = if self.state[q] == VarState::Lower { 1.0 } else { -1.0 };

            // Ratio test: basic r moves by -dir·α_r per unit step.
            let mut step = self.upper[q];
            let mut leave: Option<(usize, VarState)> = None;
            let mut best_alpha = 0.0;
            for r in 0..self.rows {
                let alpha = self.t[r * self.cols + q];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let rate = -dir * alpha;
                let j = self.basis[r];
                let (limit, bound) = if rate < 0.0 {
                    (self.beta[r].max(0.0) / -rate, VarState::Lower)
                } else if self.upper[j].is_finite() {
                    ((self.upper[j] - self.beta[r]).max(0.0) / rate, VarState::Upper)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit < step - 1e-12 => true,
                    Some((r0, _)) if limit <= step + 1e-12 => {
                        if bland {
                            j < self.basis[r0]
                        } else {
                            alpha.abs() > best_alpha
                        }
                    }
                    _ => false,
                };
                if better {
                    step = limit.min(step);
                    leave = Some((r, bound));
                    best_alpha = alpha.abs();
                }
            }
            if step.is_infinite() {
                return Ok(Outcome::Unbounded);
            }
            if step > 1e-12 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }

            for r in 0..self.rows {
                let alpha = self.t[r * self.cols + q];
                if alpha != 0.0 {
                    self.beta[r] -= dir * alpha * step;
                }
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 { VarState::Upper } else { VarState::Lower };
                }
                Some((r, bound)) => {
                    let entering_value = if dir > 0.0 { step } else { self.upper[q] - step };
                    self.pivot(r, q, &mut d);
                    self.state[self.basis[r]] = bound;
                    self.basis[r] = q;
                    self.state[q] = VarState::Basic;
                    self.beta[r] = entering_value;
                }
            }
        }
        Err(Error::SolverFailure(format!(
            "simplex iteration limit {} reached",
            self.iteration_limit
        )))
    }

    fn choose_entering(&self, d: &[f64], tol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if self.banned[j] || self.upper[j] <= 0.0 {
                continue;
            }
            let score = match self.state[j] {
                VarState::Basic => continue,
                VarState::Lower if d[j] < -tol => -d[j],
                VarState::Upper if d[j] > tol => d[j],
                _ => continue,
            };
            if bland {
                return Some(j);
            }
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Pivots on `(r, q)`, updating the tableau and reduced costs. Basic
    /// values are the caller's responsibility.
    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let cols = self.cols;
        let alpha = self.t[r * cols + q];
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v /= alpha;
        }
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let f = d[q];
        if f != 0.0 {
            for (v, p) in d.iter_mut().zip(pivot_row.iter()) {
                *v -= f * p;
            }
            d[q] = 0.0;
        }
    }

    /// Pins artificials at zero and pivots any still-basic ones out where a
    /// structural replacement exists. Rows with no replacement are redundant.
    fn retire_artificials(&mut self, art_start: usize) {
        for j in art_start..self.cols {
            self.upper[j] = 0.0;
            self.banned[j] = true;
        }
        let mut scratch = vec![0.0; self.cols];
        for r in 0..self.rows {
            if self.basis[r] < art_start {
                continue;
            }
            let row = &self.t[r * self.cols..(r + 1) * self.cols];
            let candidate = (0..art_start)
                .filter(|&j| self.state[j] != VarState::Basic && row[j].abs() > 1e-7)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()));
            let Some(q) = candidate else { continue };
            let shift = self.beta[r] / row[q];
            for i in 0..self.rows {
                if i != r {
                    self.beta[i] -= self.t[i * self.cols + q] * shift;
                }
            }
            let current = if self.state[q] == VarState::Upper { self.upper[q] } else { 0.0 };
            self.pivot(r, q, &mut scratch);
            self.state[self.basis[r]] = VarState::Lower;
            self.basis[r] = q;
            self.state[q] = VarState::Basic;
            self.beta[r] = current + shift;
        }
    }

    /// Fallback dual recovery from the columns that formed the initial basis.
    fn row_duals(&self, std: &StandardForm, cb: &[f64]) -> Vec<f64> {
        std.initial_basis
            .iter()
            .map(|&j| (0..self.rows).map(|r| cb[r] * self.t[r * self.cols + j]).sum())
            .collect()
    }
}
