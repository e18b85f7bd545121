//! Deception matrices, the stealth budget and inducible values.
//!
//! The budget bounds the OPERATOR 1-norm of `D`, i.e. the largest absolute
//! column sum `max_j Σ_i |D_ij|`. It is not the entrywise sum. The operator
//! norm is what makes `‖D y‖₁ ≤ Δ` hold for every `y` on the simplex.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{MatrixGame, MixedStrategy, Side};
use crate::lp::{self, LpProblem, LpSolution, Sense};
use crate::matrix::Matrix;

/// Absolute slack allowed on `‖D‖₁ ≤ Δ`.
pub const BUDGET_TOL: f64 = 1e-9;

pub fn operator_one_norm(d: &Matrix) -> f64 {
    (0..d.cols())
        .map(|j| d.col(j).map(f64::abs).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn check_budget(budget: f64) -> Result<()> {
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidArgument(format!("budget must be finite and nonnegative, got {budget}")));
    }
    Ok(())
}

/// A perturbation together with the budget it must respect.
#[derive(Clone, Debug, PartialEq)]
pub struct DeceptionMatrix {
    d: Matrix,
    budget: f64,
}

impl DeceptionMatrix {
    pub fn new(d: Matrix, budget: f64) -> Result<Self> {
        check_budget(budget)?;
        if !d.is_finite() {
            return Err(Error::InvalidArgument("deception entries must be finite".into()));
        }
        let norm = operator_one_norm(&d);
        if norm > budget + BUDGET_TOL {
            return Err(Error::BudgetViolation { norm, budget });
        }
        Ok(Self { d, budget })
    }

    pub fn zeros(rows: usize, cols: usize, budget: f64) -> Self {
        Self {
            d: Matrix::zeros(rows, cols),
            budget,
        }
    }

    /// `[d d ⋯ d]` with `n` identical columns. Its operator norm is `‖d‖₁`
    /// and `D y = d` for every `y` on the simplex.
    pub fn column_constant(d: &[f64], cols: usize, budget: f64) -> Result<Self> {
        Self::new(Matrix::from_fn(d.len(), cols, |i, _| d[i]), budget)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.d
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn norm(&self) -> f64 {
        operator_one_norm(&self.d)
    }
}

/// `max_{‖D‖₁ ≤ Δ} xᵀ D y = Δ · max_i x_i`, with the maximizer that puts
/// the whole budget of every column on the lowest-index largest entry of `x`.
pub fn dual_norm_max(x: &MixedStrategy, y: &MixedStrategy, budget: f64) -> Result<(f64, DeceptionMatrix)> {
    check_budget(budget)?;
    let (star, xmax) = x.max_entry();
    let witness = Matrix::from_fn(x.len(), y.len(), |i, _| if i == star { budget } else { 0.0 });
    Ok((budget * xmax, DeceptionMatrix::new(witness, budget)?))
}

/// The announced game `G + D`.
pub fn perturb(game: &MatrixGame, dec: &DeceptionMatrix) -> Result<MatrixGame> {
    let norm = dec.norm();
    if norm > dec.budget() + BUDGET_TOL {
        return Err(Error::BudgetViolation {
            norm,
            budget: dec.budget(),
        });
    }
    MatrixGame::new(game.payoffs().add(dec.matrix())?)
}

/// Witness that level `v` is inducible: `G y + d ≥ v·1` with `‖d‖₁ ≤ Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubrationalCertificate {
    pub v: f64,
    pub y: MixedStrategy,
    pub d: Vec<f64>,
}

impl SubrationalCertificate {
    /// Column-constant deception generated by `d`.
    pub fn deception(&self, cols: usize, budget: f64) -> Result<DeceptionMatrix> {
        DeceptionMatrix::column_constant(&self.d, cols, budget)
    }

    /// Largest violation of `G y + d ≥ v·1`, or 0 if satisfied.
    pub fn violation(&self, game: &MatrixGame) -> f64 {
        game.payoffs()
            .mul_vec(self.y.probs())
            .iter()
            .zip(&self.d)
            .map(|(gy, d)| self.v - gy - d)
            .fold(0.0, f64::max)
    }
}

/// Variable layout shared by the inducibility LPs: `[y (n) | d⁺ (m) | d⁻ (m) | v?]`.
pub(crate) struct InducibleLayout {
    pub m: usize,
    pub n: usize,
}

impl InducibleLayout {
    pub fn new(game: &MatrixGame) -> Self {
        let (m, n) = game.shape();
        Self { m, n }
    }

    pub fn y(&self, j: usize) -> usize {
        j
    }

    pub fn d_plus(&self, i: usize) -> usize {
        self.n + i
    }

    pub fn d_minus(&self, i: usize) -> usize {
        self.n + self.m + i
    }

    pub fn level(&self) -> usize {
        self.n + 2 * self.m
    }

    /// `y ∈ Δ(n)`, `Σ(d⁺ + d⁻) ≤ Δ` and `G y + d⁺ - d⁻ ≥ v·1`. With
    /// `level = None`, `v` is an extra free variable at index [`Self::level`].
    pub fn system(&self, game: &MatrixGame, budget: f64, level: Option<f64>, sense: Sense) -> LpProblem {
        let nv = self.level() + usize::from(level.is_none());
        let mut p = LpProblem::new(sense, nv);
        let mut simplex = vec![0.0; nv];
        for j in 0..self.n {
            simplex[self.y(j)] = 1.0;
        }
        p.add_eq(simplex, 1.0);
        let mut spend = vec![0.0; nv];
        for i in 0..self.m {
            spend[self.d_plus(i)] = 1.0;
            spend[self.d_minus(i)] = 1.0;
        }
        p.add_le(spend, budget);
        for i in 0..self.m {
            // v - (G y)_i - d⁺_i + d⁻_i ≤ 0, or with v fixed the rhs carries -v
            let mut row = vec![0.0; nv];
            for j in 0..self.n {
                row[self.y(j)] = -game.entry(i, j);
            }
            row[self.d_plus(i)] = -1.0;
            row[self.d_minus(i)] = 1.0;
            match level {
                Some(v) => p.add_le(row, -v),
                None => {
                    row[self.level()] = 1.0;
                    p.add_le(row, 0.0)
                }
            };
        }
        if level.is_none() {
            let g = game.payoffs();
            p.set_bounds(self.level(), g.min() - budget, g.max() + budget);
        }
        p
    }

    pub fn certificate(&self, sol: &LpSolution, v: f64) -> Result<SubrationalCertificate> {
        let y = MixedStrategy::from_solver(&sol.primal[..self.n], Side::Column)?;
        let d = (0..self.m)
            .map(|i| sol.primal[self.d_plus(i)] - sol.primal[self.d_minus(i)])
            .collect();
        Ok(SubrationalCertificate { v, y, d })
    }
}

thread_local! {
    static INDUCIBLE_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`check_inducible`] calls made so far on the current thread.
pub fn inducible_calls() -> u64 {
    INDUCIBLE_CALLS.with(Cell::get)
}

/// Whether some admissible deception leaves the victim a strategy that
/// guarantees `v` in the announced game. Decided on the column-constant
/// family `D = [d ⋯ d]`, which loses nothing because `‖D y‖₁ ≤ Δ` always.
pub fn check_inducible(game: &MatrixGame, budget: f64, v: f64) -> Result<(bool, Option<SubrationalCertificate>)> {
    check_budget(budget)?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("level must be finite, got {v}")));
    }
    INDUCIBLE_CALLS.with(|c| c.set(c.get() + 1));
    let layout = InducibleLayout::new(game);
    let p = layout.system(game, budget, Some(v), Sense::Minimize);
    let sol = lp::solve(&p)?;
    match sol.status {
        lp::LpStatus::Optimal => Ok((true, Some(layout.certificate(&sol, v)?))),
        lp::LpStatus::Infeasible => Ok((false, None)),
        lp::LpStatus::Unbounded => Err(Error::SolverFailure("feasibility LP reported unbounded".into())),
    }
}

/// Largest inducible level, computed directly as one LP.
pub fn max_inducible_value(game: &MatrixGame, budget: f64) -> Result<(f64, SubrationalCertificate)> {
    check_budget(budget)?;
    let layout = InducibleLayout::new(game);
    let mut p = layout.system(game, budget, None, Sense::Maximize);
    p.cost[layout.level()] = 1.0;
    let sol = lp::solve(&p)?;
    if !sol.is_optimal() {
        return Err(Error::SolverFailure(format!("inducible-value LP returned {:?}", sol.status)));
    }
    let v = sol.primal[layout.level()];
    Ok((v, layout.certificate(&sol, v)?))
}

/// On-disk deception format: `{"budget": Δ, "D": [[...], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeceptionFile {
    pub budget: f64,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

impl TryFrom<DeceptionFile> for DeceptionMatrix {
    type Error = Error;

    fn try_from(f: DeceptionFile) -> Result<Self> {
        DeceptionMatrix::new(Matrix::from_rows(&f.d)?, f.budget)
    }
}

impl From<&DeceptionMatrix> for DeceptionFile {
    fn from(d: &DeceptionMatrix) -> Self {
        DeceptionFile {
            budget: d.budget(),
            d: d.matrix().to_rows(),
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
    fn operator_norm_is_max_column_sum() {
        assert_eq!(operator_one_norm(&Matrix::zeros(3, 2)), 0.0);
        let d = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(operator_one_norm(&d), 4.0);
        let d = Matrix::from_fn(3, 3, |i, j| if i == 0 && j == 0 { 2.5 } else { 0.0 });
        assert_eq!(operator_one_norm(&d), 2.5);
    }

    #[test]
    fn dual_norm_examples() {
        let x = MixedStrategy::new(vec![0.3, 0.7], Side::Row).unwrap();
        let y = MixedStrategy::new(vec![0.2, 0.5, 0.3], Side::Column).unwrap();
        let (v, w) = dual_norm_max(&x, &y, 2.0).unwrap();
        assert_abs_diff_eq!(v, 1.4, epsilon = 1e-15);
        assert_abs_diff_eq!(w.norm(), 2.0, epsilon = 1e-15);
        assert!((0..3).all(|j| w.matrix()[(1, j)] == 2.0 && w.matrix()[(0, j)] == 0.0));

        let e1 = MixedStrategy::pure(2, 0, Side::Row);
        let (v, w) = dual_norm_max(&e1, &y, 0.0).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(w.matrix().max_abs(), 0.0);
    }

    #[test]
    fn dual_norm_ties_pick_lowest_index() {
        let x = MixedStrategy::uniform(2, Side::Row);
        let y = MixedStrategy::pure(2, 0, Side::Column);
        let (v, w) = dual_norm_max(&x, &y, 1.0).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(w.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn perturb_examples() {
        let g = pennies();
        assert_eq!(perturb(&g, &DeceptionMatrix::zeros(2, 2, 0.0)).unwrap(), g);

        let d = DeceptionMatrix::column_constant(&[0.4, 0.0], 2, 0.4).unwrap();
        let gp = perturb(&g, &d).unwrap();
        assert_eq!(gp.payoffs().to_rows(), vec![vec![1.4, -0.6], vec![-1.0, 1.0]]);

        let err = DeceptionMatrix::column_constant(&[0.4, 0.0], 2, 0.3).unwrap_err();
        assert!(matches!(err, Error::BudgetViolation { .. }));
    }

    #[test]
    fn perturb_rejects_shape_mismatch() {
        let d = DeceptionMatrix::zeros(3, 2, 1.0);
        assert!(matches!(perturb(&pennies(), &d), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn inducible_examples() {
        let g = pennies();
        let (ok, cert) = check_inducible(&g, 0.0, 0.0).unwrap();
        assert!(ok);
        let cert = cert.unwrap();
        assert_abs_diff_eq!(cert.y.probs()[0], 0.5, epsilon = 1e-9);
        assert!(cert.d.iter().all(|d| d.abs() < 1e-12));

        assert!(!check_inducible(&g, 0.0, 0.1).unwrap().0);

        // Even split d = (0.2, 0.2) lifts both rows of G y to 0.2 at y = (½, ½).
        assert!(check_inducible(&g, 0.4, 0.2).unwrap().0);
        assert!(!check_inducible(&g, 0.4, 0.21).unwrap().0);
    }

    #[test]
    fn certificates_satisfy_their_system() {
        let g = MatrixGame::from_rows(&[vec![0.3, 0.9, 0.1], vec![0.7, 0.2, 0.5]]).unwrap();
        let (ok, cert) = check_inducible(&g, 0.5, 0.6).unwrap();
        assert!(ok);
        let cert = cert.unwrap();
        assert!(cert.violation(&g) <= 1e-9);
        assert!(cert.d.iter().map(|d| d.abs()).sum::<f64>() <= 0.5 + 1e-9);
    }

    #[test]
    fn max_inducible_examples() {
        let g = pennies();
        let (v0, _) = max_inducible_value(&g, 0.0).unwrap();
        assert_abs_diff_eq!(v0, solve_game(&g).unwrap().value, epsilon = 1e-9);

        let (v, cert) = max_inducible_value(&g, 0.4).unwrap();
        assert_abs_diff_eq!(v, 0.2, epsilon = 1e-9);
        assert!(cert.violation(&g) <= 1e-9);

        // Bisection with the membership oracle lands on the same level.
        let (mut lo, mut hi) = (-1.4, 1.4);
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if check_inducible(&g, 0.4, mid).unwrap().0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(lo, 0.2, epsilon = 1e-6);

        let single = MatrixGame::from_rows(&[vec![0.7]]).unwrap();
        let (v, _) = max_inducible_value(&single, 2.5).unwrap();
        assert_abs_diff_eq!(v, 3.2, epsilon = 1e-12);
    }

    #[test]
    fn negative_budget_is_rejected() {
        assert!(matches!(check_inducible(&pennies(), -1.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(max_inducible_value(&pennies(), f64::NAN), Err(Error::InvalidArgument(_))));
    }
}
