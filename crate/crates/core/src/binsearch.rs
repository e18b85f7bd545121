//! Feasible deception by bisection on the largest inducible level.
//!
//! Bisection runs once over `[min G - Δ, max G + Δ]` with the inducibility
//! LP as membership oracle. At the final level `v̂` one LP per deceiver row
//! picks the column-constant deception and victim strategy that minimize the
//! deceiver's true loss, and the best row is kept. Because `v̂` is within `δ`
//! of the maximum inducible level, a victim who can guarantee `v̂` in
//! `G + D̄` is (up to `δ`) fully rational there.

use serde::Serialize;

use crate::deception::{self, check_budget, DeceptionMatrix, InducibleLayout};
use crate::error::{Error, Result};
use crate::game::{MatrixGame, MixedStrategy, Side};
use crate::lp::{self, LpStatus, Sense};
use crate::victim;

pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleSolution {
    /// Deceiver's loss `e_iᵀ G ȳ` at the chosen row.
    pub v_best: f64,
    pub x_bar: MixedStrategy,
    pub d_bar: DeceptionMatrix,
    pub y_bar: MixedStrategy,
    /// Highest level confirmed inducible by the bisection.
    pub v_hat: f64,
    pub tolerance: f64,
    pub robust_bound: Option<f64>,
    /// Index of the pure row in `x_bar`.
    pub row: usize,
    /// Number of membership-oracle calls made by the bisection.
    pub inducible_checks: usize,
}

impl FeasibleSolution {
    /// Common column of `D̄`.
    pub fn generator(&self) -> Vec<f64> {
        self.d_bar.matrix().col(0).collect()
    }
}

/// Halvings needed to shrink `[min G - Δ, max G + Δ]` to width `≤ δ`.
pub fn bisection_steps(game: &MatrixGame, budget: f64, tolerance: f64) -> usize {
    let g = game.payoffs();
    let width = g.max() - g.min() + 2.0 * budget;
    let mut steps = 0;
    let mut w = width;
    while w > tolerance {
        w *= 0.5;
        steps += 1;
    }
    steps
}

/// `min e_iᵀ G y` over `y ∈ Δ(n)`, `‖d‖₁ ≤ Δ`, `G y + d ≥ v·1`.
pub fn subrational_lp(game: &MatrixGame, budget: f64, v: f64, row: usize) -> Result<(Vec<f64>, MixedStrategy, f64)> {
    check_budget(budget)?;
    if row >= game.rows() {
        return Err(Error::InvalidArgument(format!("row {row} out of range for {} rows", game.rows())));
    }
    let layout = InducibleLayout::new(game);
    let mut p = layout.system(game, budget, Some(v), Sense::Minimize);
    for j in 0..game.cols() {
        p.cost[layout.y(j)] = game.entry(row, j);
    }
    let sol = lp::solve(&p)?;
    match sol.status {
        LpStatus::Optimal => {
            let cert = layout.certificate(&sol, v)?;
            Ok((cert.d, cert.y, sol.objective))
        }
        LpStatus::Infeasible => Err(Error::InfeasibleLevel(v)),
        LpStatus::Unbounded => Err(Error::SolverFailure("sub-rational LP reported unbounded".into())),
    }
}

pub fn solve_feasible(game: &MatrixGame, budget: f64, tolerance: f64) -> Result<FeasibleSolution> {
    check_budget(budget)?;
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")));
    }
    let g = game.payoffs();
    let mut lo = g.min() - budget;
    let mut hi = g.max() + budget;
    let steps = bisection_steps(game, budget, tolerance);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if deception::check_inducible(game, budget, mid)?.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v_hat = lo;

    let mut best: Option<(usize, Vec<f64>, MixedStrategy, f64)> = None;
    for row in 0..game.rows() {
        let (d, y, obj) = subrational_lp(game, budget, v_hat, row)?;
        if best.as_ref().map_or(true, |b| obj < b.3 - 1e-12) {
            best = Some((row, d, y, obj));
        }
    }
    let (row, d, y_bar, v_best) = best.expect("a game has at least one row");
    Ok(FeasibleSolution {
        v_best,
        x_bar: MixedStrategy::pure(game.rows(), row, Side::Row),
        d_bar: DeceptionMatrix::column_constant(&d, game.cols(), budget)?,
        y_bar,
        v_hat,
        tolerance,
        robust_bound: None,
        row,
        inducible_checks: steps,
    })
}

/// Upper bound on the deceiver's loss against any rational response to
/// `G + D̄`: the maximum of `x̄ᵀ G y` over the sub-rational set at `v̂`,
/// which contains every security policy of `G + D̄`.
pub fn robustify(game: &MatrixGame, sol: &mut FeasibleSolution) -> Result<f64> {
    let gp = deception::perturb(game, &sol.d_bar)?;
    let objective = game.payoffs().tr_mul_vec(sol.x_bar.probs());
    let level = sol.v_hat - 1e-9 * (1.0 + sol.v_hat.abs());
    let y = victim::optimize_over_level(&gp, level, &objective, Sense::Maximize)?
        .ok_or_else(|| Error::SolverFailure("sub-rational set of the returned deception is empty".into()))?;
    let bound = objective.iter().zip(y.probs()).map(|(a, b)| a * b).sum();
    sol.robust_bound = Some(bound);
    Ok(bound)
}

/// `{"method":"binsearch", ...}` solution record.
#[derive(Clone, Debug, Serialize)]
pub struct BinsearchRecord {
    pub schema: u32,
    pub method: &'static str,
    pub budget: f64,
    pub x: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub v_hat: f64,
    pub v_best: f64,
    pub delta: f64,
    pub robust_bound: Option<f64>,
}

impl From<&FeasibleSolution> for BinsearchRecord {
    fn from(s: &FeasibleSolution) -> Self {
        Self {
            schema: 1,
            method: "binsearch",
            budget: s.d_bar.budget(),
            x: s.x_bar.probs().to_vec(),
            d: s.d_bar.matrix().to_rows(),
            y: s.y_bar.probs().to_vec(),
            v_hat: s.v_hat,
            v_best: s.v_best,
            delta: s.tolerance,
            robust_bound: s.robust_bound,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::solve_game;
    use approx::assert_abs_diff_eq;

    fn pennies() -> MatrixGame {
        MatrixGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
    }

    #[test]
    fn subrational_lp_on_pennies() {
        // y₁ = 0.5 + t with t ∈ [-0.2, 0.2]; row 1 loses 2t, smallest at t = -0.2.
        let (d, y, obj) = subrational_lp(&pennies(), 0.4, 0.2, 0).unwrap();
        assert_abs_diff_eq!(obj, -0.2, epsilon = 1e-9);
        assert_abs_diff_eq!(y.probs()[0], 0.4, epsilon = 1e-9);
        assert_abs_diff_eq!(d[0], 0.4, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-9);

        // Same answer on a fine grid over y₁ with the cheapest feasible d.
        let grid_best = (0..=10_000)
            .map(|k| k as f64 / 10_000.0)
            .filter(|&y1| {
                let need = (0.2 - (2.0 * y1 - 1.0)).max(0.0) + (0.2 - (1.0 - 2.0 * y1)).max(0.0);
                need <= 0.4 + 1e-12
            })
            .map(|y1| 2.0 * y1 - 1.0)
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(grid_best, obj, epsilon = 1e-9);
    }

    #[test]
    fn subrational_lp_at_the_lower_bracket_is_unconstrained() {
        let g = MatrixGame::from_rows(&[vec![0.3, 0.8, 0.5], vec![0.9, 0.1, 0.4]]).unwrap();
        let budget = 0.7;
        let v = g.payoffs().min() - budget;
        for row in 0..2 {
            let (_, _, obj) = subrational_lp(&g, budget, v, row).unwrap();
            let row_min = g.payoffs().row(row).iter().copied().fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(obj, row_min, epsilon = 1e-9);
        }
    }

    #[test]
    fn subrational_lp_at_game_value_without_budget() {
        let (_, _, obj) = subrational_lp(&pennies(), 0.0, 0.0, 0).unwrap();
        assert_abs_diff_eq!(obj, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn subrational_lp_rejects_unreachable_levels() {
        assert!(matches!(subrational_lp(&pennies(), 0.4, 0.3, 0), Err(Error::InfeasibleLevel(_))));
    }

    #[test]
    fn pennies_feasible_deception() {
        let mut s = solve_feasible(&pennies(), 0.4, 1e-3).unwrap();
        assert!(s.v_hat >= 0.199 && s.v_hat <= 0.2 + 1e-12, "v_hat = {}", s.v_hat);
        assert_abs_diff_eq!(s.v_best, -0.2, epsilon = 2e-3);
        assert_eq!(s.row, 0);
        assert_eq!(s.inducible_checks, bisection_steps(&pennies(), 0.4, 1e-3));

        let bound = robustify(&pennies(), &mut s).unwrap();
        assert_abs_diff_eq!(bound, -0.2, epsilon = 1e-2);
        assert!(bound >= s.v_best - 1e-8);
        assert_eq!(s.robust_bound, Some(bound));
    }

    #[test]
    fn zero_budget_stays_near_game_value() {
        let g = MatrixGame::from_rows(&[vec![0.2, 0.9, 0.4], vec![0.6, 0.3, 0.8], vec![0.5, 0.5, 0.1]]).unwrap();
        let delta = 1e-3;
        let mut s = solve_feasible(&g, 0.0, delta).unwrap();
        let v_g = solve_game(&g).unwrap().value;
        let lipschitz = (0..3)
            .map(|i| g.payoffs().row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        assert!((s.v_best - v_g).abs() <= delta * lipschitz + 1e-9);
        assert!(s.d_bar.matrix().max_abs() <= 1e-9);

        let mut p = solve_feasible(&pennies(), 0.0, delta).unwrap();
        assert_abs_diff_eq!(robustify(&pennies(), &mut p).unwrap(), 0.0, epsilon = 1e-2);
        robustify(&g, &mut s).unwrap();
    }

    #[test]
    fn single_action_game() {
        let g = MatrixGame::from_rows(&[vec![0.35]]).unwrap();
        let s = solve_feasible(&g, 1.5, 1e-4).unwrap();
        assert_abs_diff_eq!(s.v_best, 0.35, epsilon = 1e-12);
        assert_eq!(s.y_bar.probs(), &[1.0]);
        assert_abs_diff_eq!(s.generator()[0], 1.5, epsilon = 1e-4);
    }

    #[test]
    fn invalid_arguments() {
        assert!(solve_feasible(&pennies(), 0.4, 0.0).is_err());
        assert!(solve_feasible(&pennies(), -0.4, 1e-3).is_err());
        assert!(subrational_lp(&pennies(), 0.4, 0.0, 2).is_err());
    }
}
