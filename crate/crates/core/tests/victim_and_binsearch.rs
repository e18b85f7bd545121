mod common;

use common::{pennies, simplex_grid, TestRng};
use honeyx::binsearch::{bisection_steps, robustify, solve_feasible};
use honeyx::deception::{self, check_inducible, max_inducible_value};
use honeyx::game::{self, solve_game, MatrixGame, MixedStrategy, Side};
use honeyx::victim::{is_rational_response, robust_victim_value, select_response, Mode};

/// `min over the x-grid of xᵀG′y - Δ·max_i x_i`.
fn robust_inner_on_grid(gp: &MatrixGame, y: &[f64], budget: f64, grid: &[Vec<f64>]) -> f64 {
    let gy = gp.payoffs().mul_vec(y);
    grid.iter()
        .map(|x| {
            let xgy: f64 = x.iter().zip(&gy).map(|(a, b)| a * b).sum();
            xgy - budget * x.iter().copied().fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn robust_inner_problem_reduces_to_a_shift() {
    let mut rng = TestRng::new(17);
    for _ in 0..20 {
        let (m, n) = (3, 3);
        let gp = rng.game(m, n, -1.0, 1.0);
        let budget = rng.range(0.0, 2.0);
        let grid = simplex_grid(m, 20);
        let y = rng.simplex(n);
        let lhs = robust_inner_on_grid(&gp, &y, budget, &grid);
        let rhs = game::column_guarantee(&gp, &y) - budget;
        assert!((lhs - rhs).abs() <= 0.1 * gp.payoffs().max_abs(), "{lhs} vs {rhs}");

        let sp = solve_game(&gp).unwrap();
        let robust = robust_victim_value(&gp, budget).unwrap();
        assert!((game::column_guarantee(&gp, sp.col_policy.probs()) - budget - robust).abs() <= 1e-8);
        assert!(is_rational_response(&gp, &sp.col_policy, 1e-9).unwrap());
    }
}

#[test]
fn responses_are_rational_and_modes_are_ordered() {
    let mut rng = TestRng::new(29);
    for _ in 0..100 {
        let (m, n) = (2 + (rng.uniform() * 3.0) as usize, 2 + (rng.uniform() * 3.0) as usize);
        let g = rng.game(m, n, 0.0, 1.0);
        // Rounded payoffs make ties and wide rational sets common.
        let gp = MatrixGame::new(g.payoffs().map(|v| (v * 4.0).round() / 4.0)).unwrap();
        let x = MixedStrategy::new(rng.simplex(m), Side::Row).unwrap();
        let opt = select_response(&g, &gp, &x, Mode::Optimistic).unwrap();
        let pes = select_response(&g, &gp, &x, Mode::Pessimistic).unwrap();
        for r in [&opt, &pes] {
            assert!(is_rational_response(&gp, &r.y, 1e-7).unwrap());
            let gy = gp.payoffs().mul_vec(r.y.probs());
            assert!(gy.iter().all(|&v| v >= r.perceived_value - 1e-8));
        }
        let o = game::outcome(&g, &x, &opt.y).unwrap();
        let p = game::outcome(&g, &x, &pes.y).unwrap();
        assert!(o <= p + 1e-8);
    }
}

#[test]
fn bisection_brackets_the_maximum_inducible_level() {
    let mut rng = TestRng::new(41);
    for _ in 0..30 {
        let g = rng.game(4, 4, 0.0, 1.0);
        let budget = rng.range(0.0, 3.0);
        for delta in [1e-1, 1e-2, 1e-3, 1e-4] {
            let before = deception::inducible_calls();
            let s = solve_feasible(&g, budget, delta).unwrap();
            let calls = deception::inducible_calls() - before;
            let (v_star, _) = max_inducible_value(&g, budget).unwrap();
            assert!(s.v_hat <= v_star + 1e-9 && s.v_hat >= v_star - delta - 1e-9);
            assert!(check_inducible(&g, budget, s.v_hat).unwrap().0);
            assert!(!check_inducible(&g, budget, s.v_hat + delta + 1e-6).unwrap().0);

            let gp = deception::perturb(&g, &s.d_bar).unwrap();
            let v_dec = solve_game(&gp).unwrap().value;
            let level_gap = v_dec - s.v_hat;
            assert!((-1e-6..=delta + 1e-6).contains(&level_gap), "gap {level_gap} at δ={delta}");

            let width = g.payoffs().max() - g.payoffs().min() + 2.0 * budget;
            let expected = if width > delta { (width / delta).log2().ceil() as usize } else { 0 };
            assert_eq!(calls, expected as u64);
            assert_eq!(s.inducible_checks, expected);
            assert_eq!(bisection_steps(&g, budget, delta), expected);

            // ȳ certifies the level: G ȳ + d̄ ≥ v̂.
            let gy = gp.payoffs().mul_vec(s.y_bar.probs());
            assert!(gy.iter().all(|&v| v >= s.v_hat - 1e-8));
        }
    }
}

#[test]
fn robust_bound_brackets_the_rational_outcome() {
    let mut rng = TestRng::new(43);
    for _ in 0..30 {
        let g = rng.game(4, 3, 0.0, 1.0);
        let budget = rng.range(0.0, 2.0);
        let mut s = solve_feasible(&g, budget, 1e-3).unwrap();
        let bound = robustify(&g, &mut s).unwrap();
        let gp = deception::perturb(&g, &s.d_bar).unwrap();
        let opt = select_response(&g, &gp, &s.x_bar, Mode::Optimistic).unwrap();
        let pes = select_response(&g, &gp, &s.x_bar, Mode::Pessimistic).unwrap();
        let o = game::outcome(&g, &s.x_bar, &opt.y).unwrap();
        let p = game::outcome(&g, &s.x_bar, &pes.y).unwrap();
        assert!(s.v_best <= o + 1e-8, "v_best {} above rational outcome {o}", s.v_best);
        assert!(p <= bound + 1e-8, "pessimistic {p} above bound {bound}");
    }
}

#[test]
fn pennies_worked_example() {
    let mut s = solve_feasible(&pennies(), 0.4, 1e-3).unwrap();
    assert!((0.199..=0.2).contains(&s.v_hat));
    assert!((s.v_best + 0.2).abs() <= 2e-3);
    assert_eq!(s.row, 0);
    let bound = robustify(&pennies(), &mut s).unwrap();
    assert!((bound + 0.2).abs() <= 1e-2);
}

#[test]
fn single_entry_game() {
    let g = MatrixGame::from_rows(&[vec![0.25]]).unwrap();
    let (v_star, _) = max_inducible_value(&g, 1.5).unwrap();
    assert!((v_star - 1.75).abs() <= 1e-12);
    let s = solve_feasible(&g, 1.5, 1e-6).unwrap();
    assert_eq!(s.v_best, 0.25);
}
