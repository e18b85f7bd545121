//! Zero-sum matrix games, mixed strategies and security policies.
//!
//! `G[i][j]` is the payment from the row player to the column player, so the
//! row player minimizes `xᵀGy` and the column player maximizes it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, Sense};
use crate::matrix::Matrix;

/// Tolerance on `Σ p = 1` for a mixed strategy.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Row,
    Column,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGame {
    payoffs: Matrix,
}

impl MatrixGame {
    pub fn new(payoffs: Matrix) -> Result<Self> {
        if payoffs.rows() == 0 || payoffs.cols() == 0 {
            return Err(Error::InvalidArgument("a game needs at least one row and one column".into()));
        }
        if !payoffs.is_finite() {
            return Err(Error::InvalidArgument("payoffs must be finite".into()));
        }
        Ok(Self { payoffs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn payoffs(&self) -> &Matrix {
        &self.payoffs
    }

    pub fn rows(&self) -> usize {
        self.payoffs.rows()
    }

    pub fn cols(&self) -> usize {
        self.payoffs.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.payoffs.shape()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.payoffs[(i, j)]
    }
}

/// A probability vector tagged with the player it belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedStrategy {
    probs: Vec<f64>,
    side: Side,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>, side: Side) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty strategy".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -SIMPLEX_TOL) {
            return Err(Error::InvalidArgument(format!("strategy {probs:?} has a negative entry")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!("strategy sums to {total}, not 1")));
        }
        Ok(Self { probs, side })
    }

    /// Clips tiny negatives from a solver and renormalizes.
    pub fn from_solver(raw: &[f64], side: Side) -> Result<Self> {
        let clipped: Vec<f64> = raw.iter().map(|p| p.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if !(total > 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::SolverFailure(format!(
                "solver returned a point off the simplex (mass {total})"
            )));
        }
        Self::new(clipped.iter().map(|p| p / total).collect(), side)
    }

    pub fn pure(len: usize, index: usize, side: Side) -> Self {
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Self { probs, side }
    }

    pub fn uniform(len: usize, side: Side) -> Self {
        Self {
            probs: vec![1.0 / len as f64; len],
            side,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Largest probability and its lowest index.
    pub fn max_entry(&self) -> (usize, f64) {
        let mut best = (0, self.probs[0]);
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > best.1 {
                best = (i, p);
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameSolution {
    pub value: f64,
    pub row_policy: MixedStrategy,
    pub col_policy: MixedStrategy,
}

pub(crate) fn check_strategies(game: &MatrixGame, x: &MixedStrategy, y: &MixedStrategy) -> Result<()> {
    if x.side() != Side::Row || y.side() != Side::Column {
        return Err(Error::DimensionMismatch("expected a row strategy and a column strategy".into()));
    }
    if x.len() != game.rows() || y.len() != game.cols() {
        return Err(Error::DimensionMismatch(format!(
            "strategies of length {}/{} for a {}x{} game",
            x.len(),
            y.len(),
            game.rows(),
            game.cols()
        )));
    }
    Ok(())
}

/// `xᵀ G y`.
pub fn outcome(game: &MatrixGame, x: &MixedStrategy, y: &MixedStrategy) -> Result<f64> {
    check_strategies(game, x, y)?;
    let gy = game.payoffs().mul_vec(y.probs());
    Ok(x.probs().iter().zip(&gy).map(|(a, b)| a * b).sum())
}

/// `min_i (G y)_i`, the payoff `y` guarantees the column player.
pub fn column_guarantee(game: &MatrixGame, y: &[f64]) -> f64 {
    game.payoffs().mul_vec(y).into_iter().fold(f64::INFINITY, f64::min)
}

/// `max_j (Gᵀ x)_j`, the most the row player can lose with `x`.
pub fn row_guarantee(game: &MatrixGame, x: &[f64]) -> f64 {
    game.payoffs().tr_mul_vec(x).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Solves the column player's security LP
///
/// ```text
/// max v  s.t.  v·1 - G y ≤ 0,  Σ y = 1,  y ≥ 0
/// ```
///
/// and reads the row policy off the multipliers of the `m` inequality rows.
pub fn solve_game(game: &MatrixGame) -> Result<GameSolution> {
    let (m, n) = game.shape();
    let g = game.payoffs();
    let mut p = LpProblem::new(Sense::Maximize, n + 1);
    p.cost[n] = 1.0;
    p.set_bounds(n, g.min() - 1.0, g.max() + 1.0);
    for i in 0..m {
        let mut row: Vec<f64> = g.row(i).iter().map(|v| -v).collect();
        row.push(1.0);
        p.add_le(row, 0.0);
    }
    let mut simplex = vec![1.0; n];
    simplex.push(0.0);
    p.add_eq(simplex, 1.0);

    let sol = lp::solve(&p)?;
    if !sol.is_optimal() {
        return Err(Error::SolverFailure(format!("security LP returned {:?}", sol.status)));
    }
    Ok(GameSolution {
        value: sol.objective,
        row_policy: MixedStrategy::from_solver(&sol.dual_ineq, Side::Row)?,
        col_policy: MixedStrategy::from_solver(&sol.primal[..n], Side::Column)?,
    })
}

/// On-disk game format: `{"rows": m, "cols": n, "payoffs": [[...], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameFile {
    pub rows: usize,
    pub cols: usize,
    pub payoffs: Vec<Vec<f64>>,
}

impl TryFrom<GameFile> for MatrixGame {
    type Error = Error;

    fn try_from(f: GameFile) -> Result<Self> {
        let game = MatrixGame::from_rows(&f.payoffs)?;
        if game.shape() != (f.rows, f.cols) {
            return Err(Error::DimensionMismatch(format!(
                "declared {}x{}, payoffs are {}x{}",
                f.rows,
                f.cols,
                game.rows(),
                game.cols()
            )));
        }
        Ok(game)
    }
}

impl From<&MatrixGame> for GameFile {
    fn from(g: &MatrixGame) -> Self {
        GameFile {
            rows: g.rows(),
            cols: g.cols(),
            payoffs: g.payoffs().to_rows(),
        }
    }
}
