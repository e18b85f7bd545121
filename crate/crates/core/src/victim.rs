//! Victim models: which strategies the column player may pick after seeing
//! the announced game `G′`.
//!
//! A trusting victim plays a security policy of `G′`. A robust victim, who
//! hedges against every admissible deception, ends up with exactly the same
//! set of strategies: the worst case over `D` subtracts `Δ · max_i x_i`,
//! which the inner minimization always settles at a vertex where it is the
//! constant `Δ`. So both are served by `Y(G′) = { y : G′y ≥ v_{G′} }`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{self, MatrixGame, MixedStrategy, Side};
use crate::lp::{self, LpProblem, LpStatus, Sense};

/// Slack on the rationality rows when selecting a response, so that a unique
/// security policy is not lost to rounding.
const RESPONSE_SLACK: f64 = 1e-9;

/// How ties inside `Y(G′)` are broken from the deceiver's point of view.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The victim picks the rational response best for the deceiver.
    #[default]
    Optimistic,
    /// The victim picks the rational response worst for the deceiver.
    Pessimistic,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimistic" => Ok(Mode::Optimistic),
            "pessimistic" => Ok(Mode::Pessimistic),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VictimResponse {
    pub y: MixedStrategy,
    pub perceived_value: f64,
    pub mode: Mode,
}

pub fn is_rational_response(gp: &MatrixGame, y: &MixedStrategy, tol: f64) -> Result<bool> {
    if y.side() != Side::Column || y.len() != gp.cols() {
        return Err(Error::DimensionMismatch(format!(
            "column strategy of length {} for {} columns",
            y.len(),
            gp.cols()
        )));
    }
    let value = game::solve_game(gp)?.value;
    Ok(game::column_guarantee(gp, y.probs()) >= value - tol)
}

/// Optimizes `objective · y` over `{ y ∈ Δ(n) : G′y ≥ level·1 }`.
/// Returns `None` if that set is empty at the LP's tolerance.
pub(crate) fn optimize_over_level(
    gp: &MatrixGame,
    level: f64,
    objective: &[f64],
    sense: Sense,
) -> Result<Option<MixedStrategy>> {
    let n = gp.cols();
    let mut p = LpProblem::new(sense, n);
    p.cost.copy_from_slice(objective);
    for i in 0..gp.rows() {
        p.add_ge(gp.payoffs().row(i).to_vec(), level);
    }
    p.add_eq(vec![1.0; n], 1.0);
    let sol = lp::solve(&p)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some(MixedStrategy::from_solver(&sol.primal, Side::Column)?)),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::SolverFailure("response LP over the simplex is unbounded".into())),
    }
}

/// Picks the rational response to `gp` that minimizes (optimistic) or
/// maximizes (pessimistic) the deceiver's true loss `xᵀ G y`.
pub fn select_response(
    true_game: &MatrixGame,
    gp: &MatrixGame,
    x: &MixedStrategy,
    mode: Mode,
) -> Result<VictimResponse> {
    if true_game.shape() != gp.shape() {
        return Err(Error::DimensionMismatch(format!(
            "true game {:?} vs announced {:?}",
            true_game.shape(),
            gp.shape()
        )));
    }
    if x.side() != Side::Row || x.len() != true_game.rows() {
        return Err(Error::DimensionMismatch("expected a row strategy over the game's rows".into()));
    }
    let security = game::solve_game(gp)?;
    let objective = true_game.payoffs().tr_mul_vec(x.probs());
    let sense = match mode {
        Mode::Optimistic => Sense::Minimize,
        Mode::Pessimistic => Sense::Maximize,
    };
    let level = security.value - RESPONSE_SLACK * (1.0 + security.value.abs());
    let y = optimize_over_level(gp, level, &objective, sense)?.unwrap_or(security.col_policy);
    Ok(VictimResponse {
        y,
        perceived_value: security.value,
        mode,
    })
}

/// Optimal value of the robust victim's problem: `v_{G′} - Δ`.
pub fn robust_victim_value(gp: &MatrixGame, budget: f64) -> Result<f64> {
    crate::deception::check_budget(budget)?;
    Ok(game::solve_game(gp)?.value - budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn announced() -> MatrixGame {
        MatrixGame::from_rows(&[vec![1.4, -0.6], vec![-1.0, 1.0]]).unwrap()
    }

    fn pennies() -> MatrixGame {
        MatrixGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
    }

    fn col(p: &[f64]) -> MixedStrategy {
        MixedStrategy::new(p.to_vec(), Side::Column).unwrap()
    }

    #[test]
    fn rationality_examples() {
        // Indifference on G′: 1.4y - 0.6(1-y) = -y + (1-y) -> y = 0.4, value 0.2.
        assert!(is_rational_response(&announced(), &col(&[0.4, 0.6]), 1e-9).unwrap());
        assert!(!is_rational_response(&announced(), &col(&[1.0, 0.0]), 1e-9).unwrap());
        let sp = game::solve_game(&announced()).unwrap().col_policy;
        assert!(is_rational_response(&announced(), &sp, 1e-9).unwrap());
    }

    #[test]
    fn unique_policy_in_both_modes() {
        let x = MixedStrategy::pure(2, 0, Side::Row);
        for mode in [Mode::Optimistic, Mode::Pessimistic] {
            let r = select_response(&pennies(), &announced(), &x, mode).unwrap();
            assert_abs_diff_eq!(r.y.probs()[0], 0.4, epsilon = 1e-8);
            assert_abs_diff_eq!(r.perceived_value, 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn honest_security_play_yields_game_value() {
        let g = MatrixGame::from_rows(&[vec![3.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let s = game::solve_game(&g).unwrap();
        for mode in [Mode::Optimistic, Mode::Pessimistic] {
            let r = select_response(&g, &g, &s.row_policy, mode).unwrap();
            let v = game::outcome(&g, &s.row_policy, &r.y).unwrap();
            assert_abs_diff_eq!(v, s.value, epsilon = 1e-9);
        }
    }

    #[test]
    fn singleton_rational_set_overrides_pure_row() {
        // Y(G) = {(½, ½)} so neither tie-break can reach (0,1) or (1,0).
        let x = MixedStrategy::pure(2, 0, Side::Row);
        for mode in [Mode::Optimistic, Mode::Pessimistic] {
            let r = select_response(&pennies(), &pennies(), &x, mode).unwrap();
            let v = game::outcome(&pennies(), &x, &r.y).unwrap();
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn modes_bracket_a_wide_rational_set() {
        // Column 3 is dominated; Y(G′) = {(t, 1-t, 0)} with t ∈ [0, 1] has value 1.
        let gp = MatrixGame::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.5]]).unwrap();
        let g = MatrixGame::from_rows(&[vec![2.0, -1.0, 0.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let x = MixedStrategy::pure(2, 0, Side::Row);
        let opt = select_response(&g, &gp, &x, Mode::Optimistic).unwrap();
        let pes = select_response(&g, &gp, &x, Mode::Pessimistic).unwrap();
        assert_abs_diff_eq!(game::outcome(&g, &x, &opt.y).unwrap(), -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(game::outcome(&g, &x, &pes.y).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn robust_value_is_shifted_game_value() {
        assert_abs_diff_eq!(robust_victim_value(&announced(), 0.0).unwrap(), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(robust_victim_value(&pennies(), 0.4).unwrap(), -0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(robust_victim_value(&announced(), 1.0).unwrap(), -0.8, epsilon = 1e-12);
        assert!(robust_victim_value(&pennies(), -0.1).is_err());
    }

    #[test]
    fn mode_parses() {
        assert_eq!("pessimistic".parse::<Mode>().unwrap(), Mode::Pessimistic);
        assert!("neutral".parse::<Mode>().is_err());
    }
}
