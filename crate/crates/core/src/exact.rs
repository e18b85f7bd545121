//! Globally optimal deception via spatial branch-and-bound.
//!
//! The bilevel problem "deceiver picks `(x, D)`, victim answers with a
//! security policy of `G + D`" is solved in its single-level form
//!
//! ```text
//! min  xᵀ G y
//! s.t. (G + D) y ≥ v_p·1,   (G + D)ᵀ ω ≤ v_p·1,
//!      x ∈ Δ(m), y ∈ Δ(n), ω ∈ Δ(m), ‖D‖₁ ≤ Δ
//! ```
//!
//! where `ω` and `v_p` certify optimality of `y` in the victim's LP through
//! strong duality. `x` is restricted to vertices, so the objective is linear
//! in `y` for each row. The bilinear terms `D_kj y_j` and `D_kj ω_k` are lifted
//! to auxiliary variables bounded by McCormick envelopes, and the envelopes
//! are tightened by splitting variable boxes.
//!
//! All row subproblems share one best-bound-first node pool and one
//! incumbent, so a row whose bound cannot beat the best answer found on any
//! other row is never expanded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::binsearch;
use crate::deception::{self, check_budget, DeceptionMatrix};
use crate::error::{Error, Result};
use crate::game::{self, MatrixGame, MixedStrategy, Side};
use crate::lp::{self, LpProblem, LpStatus, Sense};
use crate::matrix::Matrix;
use crate::victim;

/// Product violation below which a relaxation point counts as feasible.
const PRODUCT_TOL: f64 = 1e-7;
/// Boxes narrower than this are not split further.
const MIN_WIDTH: f64 = 1e-7;
const RESPONSE_SLACK: f64 = 1e-9;

/// One inequality `a_coef·a + b_coef·b + w_coef·w ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineCut {
    pub a_coef: f64,
    pub b_coef: f64,
    pub w_coef: f64,
    pub rhs: f64,
}

impl AffineCut {
    pub fn slack(&self, a: f64, b: f64, w: f64) -> f64 {
        self.rhs - (self.a_coef * a + self.b_coef * b + self.w_coef * w)
    }
}

/// McCormick relaxation of `w = a·b` over `a ∈ [a_lo, a_hi]`, `b ∈ [b_lo, b_hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub a_bounds: (f64, f64),
    pub b_bounds: (f64, f64),
    pub cuts: [AffineCut; 4],
}

impl Envelope {
    /// Whether `(a, b, w)` lies in the box and satisfies all four cuts.
    pub fn contains(&self, a: f64, b: f64, w: f64, tol: f64) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo - tol && v <= hi + tol;
        inside(a, self.a_bounds) && inside(b, self.b_bounds) && self.cuts.iter().all(|c| c.slack(a, b, w) >= -tol)
    }
}

pub fn mccormick_envelope(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64) -> Result<Envelope> {
    for (lo, hi) in [(a_lo, a_hi), (b_lo, b_hi)] {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInterval { lower: lo, upper: hi });
        }
    }
    let cut = |a_coef, b_coef, w_coef, rhs| AffineCut {
        a_coef,
        b_coef,
        w_coef,
        rhs,
    };
    Ok(Envelope {
        a_bounds: (a_lo, a_hi),
        b_bounds: (b_lo, b_hi),
        cuts: [
            // w ≥ a_lo·b + b_lo·a - a_lo·b_lo
            cut(b_lo, a_lo, -1.0, a_lo * b_lo),
            // w ≥ a_hi·b + b_hi·a - a_hi·b_hi
            cut(b_hi, a_hi, -1.0, a_hi * b_hi),
            // w ≤ a_hi·b + b_lo·a - a_hi·b_lo
            cut(-b_lo, -a_hi, 1.0, -a_hi * b_lo),
            // w ≤ a_lo·b + b_hi·a - a_lo·b_hi
            cut(-b_hi, -a_lo, 1.0, -a_lo * b_hi),
        ],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactOptions {
    pub gap_tol: f64,
    pub node_limit: usize,
    pub time_limit: Duration,
    /// Start from the binary-search deception and from column-dominance
    /// deceptions before branching.
    pub seed_incumbent: bool,
    /// Keep per-node bound and incumbent histories in the result.
    pub record_trace: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            node_limit: 1_000_000,
            time_limit: Duration::from_secs(600),
            seed_incumbent: true,
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExactStatus {
    /// Incumbent within `gap_tol` of the global optimum.
    Proven,
    /// Search finished but boxes too small to split still leave a gap.
    GapLimit,
    NodeLimit,
    TimeLimit,
}

impl ExactStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ExactStatus::Proven => "Proven",
            ExactStatus::GapLimit => "GapLimit",
            ExactStatus::NodeLimit => "NodeLimit",
            ExactStatus::TimeLimit => "TimeLimit",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchTrace {
    /// `(parent bound, child LP bound)` for every solved non-root node.
    pub child_bounds: Vec<(f64, f64)>,
    /// Incumbent objective after every improvement, in order.
    pub incumbents: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub x: MixedStrategy,
    pub d: DeceptionMatrix,
    pub y: MixedStrategy,
    pub omega: MixedStrategy,
    pub v_p: f64,
    pub objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
    pub status: ExactStatus,
    pub trace: Option<SearchTrace>,
}

/// Variable layout of one row subproblem.
struct Layout {
    m: usize,
    n: usize,
}

impl Layout {
    fn dp(&self, k: usize, j: usize) -> usize {
        k * self.n + j
    }
    fn dm(&self, k: usize, j: usize) -> usize {
        self.m * self.n + k * self.n + j
    }
    fn y(&self, j: usize) -> usize {
        2 * self.m * self.n + j
    }
    fn omega(&self, k: usize) -> usize {
        2 * self.m * self.n + self.n + k
    }
    fn vp(&self) -> usize {
        2 * self.m * self.n + self.n + self.m
    }
    /// Lifted `D_kj · y_j`.
    fn wy(&self, k: usize, j: usize) -> usize {
        self.vp() + 1 + k * self.n + j
    }
    /// Lifted `D_kj · ω_k`.
    fn wo(&self, k: usize, j: usize) -> usize {
        self.vp() + 1 + self.m * self.n + k * self.n + j
    }
    fn len(&self) -> usize {
        4 * self.m * self.n + self.n + self.m + 1
    }
}

#[derive(Clone, Debug)]
struct Node {
    row: usize,
    d_lo: Vec<f64>,
    d_hi: Vec<f64>,
    y_lo: Vec<f64>,
    y_hi: Vec<f64>,
    om_lo: Vec<f64>,
    om_hi: Vec<f64>,
    bound: f64,
    depth: usize,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: smallest bound first, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

fn interval_product(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let c = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (
        c.iter().copied().fold(f64::INFINITY, f64::min),
        c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Feasible point of the single-level program with `x = e_row`.
#[derive(Clone, Debug)]
struct Candidate {
    row: usize,
    d: Matrix,
    y: MixedStrategy,
    omega: MixedStrategy,
    v_p: f64,
    objective: f64,
}

struct Search<'a> {
    game: &'a MatrixGame,
    budget: f64,
    layout: Layout,
    vp_bounds: (f64, f64),
    incumbent: Option<Candidate>,
    trace: Option<SearchTrace>,
}

impl<'a> Search<'a> {
    /// Fixes `D`, lets the victim answer rationally and keeps the best row.
    fn evaluate(&self, d: Matrix) -> Result<Candidate> {
        let gp = MatrixGame::new(self.game.payoffs().add(&d)?)?;
        let security = game::solve_game(&gp)?;
        let level = security.value - RESPONSE_SLACK * (1.0 + security.value.abs());
        let mut best: Option<Candidate> = None;
        for row in 0..self.game.rows() {
            let costs = self.game.payoffs().row(row);
            let y = victim::optimize_over_level(&gp, level, costs, Sense::Minimize)?
                .unwrap_or_else(|| security.col_policy.clone());
            let objective: f64 = costs.iter().zip(y.probs()).map(|(a, b)| a * b).sum();
            if best.as_ref().map_or(true, |b| objective < b.objective - 1e-12) {
                best = Some(Candidate {
                    row,
                    d: d.clone(),
                    y,
                    omega: security.row_policy.clone(),
                    v_p: security.value,
                    objective,
                });
            }
        }
        Ok(best.expect("at least one row"))
    }

    /// Deception under which column `col` weakly dominates every other
    /// column, with the largest achievable margin, if one fits the budget.
    fn dominance(&self, col: usize) -> Result<Option<Matrix>> {
        let (m, n) = self.game.shape();
        let g = self.game.payoffs();
        let nv = 2 * m * n + 1;
        let t = 2 * m * n;
        let (dp, dm) = (|k: usize, j: usize| k * n + j, |k: usize, j: usize| m * n + k * n + j);
        let mut p = LpProblem::new(Sense::Maximize, nv);
        p.cost[t] = 1.0;
        p.set_bounds(t, 0.0, 1.0);
        for k in 0..m {
            for l in (0..n).filter(|&l| l != col) {
                let mut row = vec![0.0; nv];
                row[dp(k, col)] = 1.0;
                row[dm(k, col)] = -1.0;
                row[dp(k, l)] = -1.0;
                row[dm(k, l)] = 1.0;
                row[t] = -1.0;
                p.add_ge(row, g[(k, l)] - g[(k, col)]);
            }
        }
        for j in 0..n {
            let mut row = vec![0.0; nv];
            for k in 0..m {
                row[dp(k, j)] = 1.0;
                row[dm(k, j)] = 1.0;
            }
            p.add_le(row, self.budget);
        }
        let sol = lp::solve(&p)?;
        if sol.status != LpStatus::Optimal {
            return Ok(None);
        }
        let z = &sol.primal;
        let mut d = Matrix::from_fn(m, n, |k, j| z[dp(k, j)] - z[dm(k, j)]);
        for j in 0..n {
            let norm: f64 = d.col(j).map(f64::abs).sum();
            if norm > self.budget {
                for k in 0..m {
                    d[(k, j)] *= self.budget / norm;
                }
            }
        }
        Ok(Some(d))
    }

    fn offer(&mut self, cand: Candidate) {
        if self.incumbent.as_ref().map_or(true, |inc| cand.objective < inc.objective) {
            if let Some(t) = self.trace.as_mut() {
                t.incumbents.push(cand.objective);
            }
            debug!("incumbent {:.9} (row {})", cand.objective, cand.row);
            self.incumbent = Some(cand);
        }
    }

    fn incumbent_value(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |c| c.objective)
    }

    fn relaxation(&self, node: &Node) -> LpProblem {
        let l = &self.layout;
        let (m, n) = (l.m, l.n);
        let g = self.game.payoffs();
        let nv = l.len();
        let mut p = LpProblem::new(Sense::Minimize, nv);
        for j in 0..n {
            p.cost[l.y(j)] = g[(node.row, j)];
        }

        for k in 0..m {
            for j in 0..n {
                let idx = k * n + j;
                let (lo, hi) = (node.d_lo[idx], node.d_hi[idx]);
                let (p_lo, p_hi, m_lo, m_hi) = if lo >= 0.0 {
                    (lo, hi, 0.0, 0.0)
                } else if hi <= 0.0 {
                    (0.0, 0.0, -hi, -lo)
                } else {
                    (0.0, hi, 0.0, -lo)
                };
                p.set_bounds(l.dp(k, j), p_lo, p_hi);
                p.set_bounds(l.dm(k, j), m_lo, m_hi);
                let wy = interval_product((lo, hi), (node.y_lo[j], node.y_hi[j]));
                p.set_bounds(l.wy(k, j), wy.0, wy.1);
                let wo = interval_product((lo, hi), (node.om_lo[k], node.om_hi[k]));
                p.set_bounds(l.wo(k, j), wo.0, wo.1);
            }
        }
        for j in 0..n {
            p.set_bounds(l.y(j), node.y_lo[j], node.y_hi[j]);
        }
        for k in 0..m {
            p.set_bounds(l.omega(k), node.om_lo[k], node.om_hi[k]);
        }
        p.set_bounds(l.vp(), self.vp_bounds.0, self.vp_bounds.1);

        let mut row = vec![0.0; nv];
        for j in 0..n {
            row[l.y(j)] = 1.0;
        }
        p.add_eq(row, 1.0);
        let mut row = vec![0.0; nv];
        for k in 0..m {
            row[l.omega(k)] = 1.0;
        }
        p.add_eq(row, 1.0);

        // (G y)_k + Σ_j W_kj ≥ v_p
        for k in 0..m {
            let mut row = vec![0.0; nv];
            for j in 0..n {
                row[l.y(j)] = g[(k, j)];
                row[l.wy(k, j)] = 1.0;
            }
            row[l.vp()] = -1.0;
            p.add_ge(row, 0.0);
        }
        // (Gᵀ ω)_j + Σ_k U_kj ≤ v_p
        for j in 0..n {
            let mut row = vec![0.0; nv];
            for k in 0..m {
                row[l.omega(k)] = g[(k, j)];
                row[l.wo(k, j)] = 1.0;
            }
            row[l.vp()] = -1.0;
            p.add_le(row, 0.0);
        }
        // Σ_k |D_kj| ≤ Δ per column, through the sign split.
        for j in 0..n {
            let mut row = vec![0.0; nv];
            for k in 0..m {
                row[l.dp(k, j)] = 1.0;
                row[l.dm(k, j)] = 1.0;
            }
            p.add_le(row, self.budget);
        }
        // Σ_k D_kj y_j ∈ [-Δ y_j, Δ y_j]: the budget row multiplied by y_j ≥ 0.
        for j in 0..n {
            let mut row = vec![0.0; nv];
            for k in 0..m {
                row[l.wy(k, j)] = 1.0;
            }
            row[l.y(j)] = -self.budget;
            p.add_le(row.clone(), 0.0);
            for k in 0..m {
                row[l.wy(k, j)] = -1.0;
            }
            p.add_le(row, 0.0);
        }

        for k in 0..m {
            for j in 0..n {
                let idx = k * n + j;
                let d_box = (node.d_lo[idx], node.d_hi[idx]);
                self.add_envelope(&mut p, (l.dp(k, j), l.dm(k, j)), d_box, l.y(j), (node.y_lo[j], node.y_hi[j]), l.wy(k, j));
                self.add_envelope(&mut p, (l.dp(k, j), l.dm(k, j)), d_box, l.omega(k), (node.om_lo[k], node.om_hi[k]), l.wo(k, j));
            }
        }
        p
    }

    fn add_envelope(&self, p: &mut LpProblem, (dp, dm): (usize, usize), a: (f64, f64), b_var: usize, b: (f64, f64), w_var: usize) {
        let env = mccormick_envelope(a.0, a.1, b.0, b.1).expect("node boxes are ordered");
        for cut in env.cuts {
            let mut row = vec![0.0; p.num_vars()];
            row[dp] = cut.a_coef;
            row[dm] = -cut.a_coef;
            row[b_var] = cut.b_coef;
            row[w_var] = cut.w_coef;
            p.add_le(row, cut.rhs);
        }
    }
}

/// Deception matrix recovered from a relaxation point, scaled back into the
/// budget if solver rounding pushed a column over it.
fn relaxed_deception(layout: &Layout, primal: &[f64], budget: f64) -> Matrix {
    let mut d = Matrix::from_fn(layout.m, layout.n, |k, j| primal[layout.dp(k, j)] - primal[layout.dm(k, j)]);
    for j in 0..layout.n {
        let norm: f64 = d.col(j).map(f64::abs).sum();
        if norm > budget {
            let scale = if norm > 0.0 { budget / norm } else { 0.0 };
            for k in 0..layout.m {
                d[(k, j)] *= scale;
            }
        }
    }
    d
}

pub fn solve_exact(game: &MatrixGame, budget: f64, opts: &ExactOptions) -> Result<ExactSolution> {
    check_budget(budget)?;
    if !(opts.gap_tol > 0.0) || opts.node_limit == 0 || opts.time_limit.is_zero() {
        return Err(Error::InvalidArgument("gap_tol, node_limit and time_limit must be positive".into()));
    }
    let start = Instant::now();
    let (m, n) = game.shape();
    let layout = Layout { m, n };

    // v_p = v_{G+D} ∈ [v_G - Δ, v*], both ends implied by ‖D y‖₁ ≤ Δ.
    let honest = game::solve_game(game)?;
    let (v_star, _) = deception::max_inducible_value(game, budget)?;
    let vp_lo = (honest.value - budget).max(game.payoffs().min() - budget);
    let vp_hi = v_star.min(game.payoffs().max() + budget).max(vp_lo);

    let mut search = Search {
        game,
        budget,
        layout,
        vp_bounds: (vp_lo - 1e-9, vp_hi + 1e-9),
        incumbent: None,
        trace: opts.record_trace.then(SearchTrace::default),
    };
    let honest_cand = search.evaluate(Matrix::zeros(m, n))?;
    search.offer(honest_cand);
    if opts.seed_incumbent && budget > 0.0 {
        let seed = binsearch::solve_feasible(game, budget, binsearch::DEFAULT_TOLERANCE)?;
        let cand = search.evaluate(seed.d_bar.matrix().clone())?;
        search.offer(cand);
        for col in 0..n {
            if let Some(d) = search.dominance(col)? {
                let cand = search.evaluate(d)?;
                search.offer(cand);
            }
        }
    }

    let mut pool = BinaryHeap::new();
    let mut seq = 0u64;
    for row in 0..m {
        let row_min = game.payoffs().row(row).iter().copied().fold(f64::INFINITY, f64::min);
        pool.push(Node {
            row,
            d_lo: vec![-budget; m * n],
            d_hi: vec![budget; m * n],
            y_lo: vec![0.0; n],
            y_hi: vec![1.0; n],
            om_lo: vec![0.0; m],
            om_hi: vec![1.0; m],
            bound: row_min,
            depth: 0,
            seq,
        });
        seq += 1;
    }

    let mut nodes = 0usize;
    let mut unresolved_bound = f64::INFINITY;
    let mut stop: Option<ExactStatus> = None;
    while let Some(node) = pool.pop() {
        if node.bound >= search.incumbent_value() - opts.gap_tol {
            pool.clear();
            break;
        }
        if nodes >= opts.node_limit {
            stop = Some(ExactStatus::NodeLimit);
            pool.push(node);
            break;
        }
        if start.elapsed() >= opts.time_limit {
            stop = Some(ExactStatus::TimeLimit);
            pool.push(node);
            break;
        }
        nodes += 1;

        let relax = search.relaxation(&node);
        let sol = lp::solve(&relax)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(Error::SolverFailure("bounded relaxation reported unbounded".into())),
            LpStatus::Optimal => {}
        }
        if node.depth > 0 {
            if let Some(t) = search.trace.as_mut() {
                t.child_bounds.push((node.bound, sol.objective));
            }
        }
        let bound = sol.objective.max(node.bound);

        let d = relaxed_deception(&search.layout, &sol.primal, budget);
        let cand = search.evaluate(d)?;
        search.offer(cand);
        if bound >= search.incumbent_value() - opts.gap_tol {
            continue;
        }

        let Some(split) = choose_branch(&search.layout, &node, &sol.primal) else {
            // Relaxation is (numerically) feasible for the exact program or
            // cannot be refined; its bound stays as an honest lower bound.
            unresolved_bound = unresolved_bound.min(bound);
            continue;
        };
        for half in [Half::Lower, Half::Upper] {
            let mut child = node.clone();
            child.bound = bound;
            child.depth += 1;
            child.seq = seq;
            seq += 1;
            split.apply(&mut child, half);
            pool.push(child);
        }
    }

    let open_bound = pool.iter().map(|nd| nd.bound).fold(f64::INFINITY, f64::min);
    let inc = search.incumbent.take().expect("honest incumbent always exists");
    let lower_bound = open_bound.min(unresolved_bound).min(inc.objective);
    let gap = inc.objective - lower_bound;
    let status = stop.unwrap_or(if gap <= opts.gap_tol { ExactStatus::Proven } else { ExactStatus::GapLimit });
    debug!("exact solve: {nodes} nodes, objective {:.9}, gap {gap:.3e}, {status:?}", inc.objective);

    Ok(ExactSolution {
        x: MixedStrategy::pure(m, inc.row, Side::Row),
        d: DeceptionMatrix::new(inc.d, budget)?,
        y: inc.y,
        omega: inc.omega,
        v_p: inc.v_p,
        objective: inc.objective,
        lower_bound,
        gap,
        nodes_explored: nodes,
        status,
        trace: search.trace,
    })
}

#[derive(Clone, Copy)]
enum Half {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug)]
enum Factor {
    D(usize),
    Y(usize),
    Omega(usize),
}

#[derive(Clone, Copy, Debug)]
struct Split {
    factor: Factor,
    at: f64,
}

impl Split {
    fn apply(&self, node: &mut Node, half: Half) {
        let (lo, hi) = match self.factor {
            Factor::D(i) => (&mut node.d_lo[i], &mut node.d_hi[i]),
            Factor::Y(j) => (&mut node.y_lo[j], &mut node.y_hi[j]),
            Factor::Omega(k) => (&mut node.om_lo[k], &mut node.om_hi[k]),
        };
        match half {
            Half::Lower => *hi = self.at,
            Half::Upper => *lo = self.at,
        }
    }
}

/// Most violated lifted product; its wider factor is split at the midpoint.
/// Products are scanned `D·y` first, then `D·ω`, each in `(k, j)` order, and
/// only a strictly larger violation replaces the current pick.
fn choose_branch(l: &Layout, node: &Node, z: &[f64]) -> Option<Split> {
    let mut best: Option<(f64, Split)> = None;
    let mut consider = |violation: f64, d_idx: usize, other: Factor, other_box: (f64, f64)| {
        let d_box = (node.d_lo[d_idx], node.d_hi[d_idx]);
        let (dw, ow) = (d_box.1 - d_box.0, other_box.1 - other_box.0);
        if violation <= PRODUCT_TOL || dw.max(ow) < MIN_WIDTH {
            return;
        }
        let split = if dw >= ow {
            Split {
                factor: Factor::D(d_idx),
                at: 0.5 * (d_box.0 + d_box.1),
            }
        } else {
            Split {
                factor: other,
                at: 0.5 * (other_box.0 + other_box.1),
            }
        };
        if best.map_or(true, |(v, _)| violation > v) {
            best = Some((violation, split));
        }
    };
    for k in 0..l.m {
        for j in 0..l.n {
            let d = z[l.dp(k, j)] - z[l.dm(k, j)];
            let viol = (z[l.wy(k, j)] - d * z[l.y(j)]).abs();
            consider(viol, k * l.n + j, Factor::Y(j), (node.y_lo[j], node.y_hi[j]));
        }
    }
    for k in 0..l.m {
        for j in 0..l.n {
            let d = z[l.dp(k, j)] - z[l.dm(k, j)];
            let viol = (z[l.wo(k, j)] - d * z[l.omega(k)]).abs();
            consider(viol, k * l.n + j, Factor::Omega(k), (node.om_lo[k], node.om_hi[k]));
        }
    }
    best.map(|(_, s)| s)
}

/// `{"method":"exact", ...}` solution record.
#[derive(Clone, Debug, Serialize)]
pub struct ExactRecord {
    pub schema: u32,
    pub method: &'static str,
    pub budget: f64,
    pub x: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub omega: Vec<f64>,
    pub v_p: f64,
    pub objective: f64,
    pub gap: f64,
    pub nodes: usize,
    pub status: &'static str,
}

impl From<&ExactSolution> for ExactRecord {
    fn from(s: &ExactSolution) -> Self {
        Self {
            schema: 1,
            method: "exact",
            budget: s.d.budget(),
            x: s.x.probs().to_vec(),
            d: s.d.matrix().to_rows(),
            y: s.y.probs().to_vec(),
            omega: s.omega.probs().to_vec(),
            v_p: s.v_p,
            objective: s.objective,
            gap: s.gap,
            nodes: s.nodes_explored,
            status: s.status.as_str(),
        }
    }
}
