mod common;

use std::time::Duration;

use common::{as_two, grid_oracle_2x2, pennies, TestRng};
use honeyx::exact::{solve_exact, ExactOptions, ExactSolution, ExactStatus};
use honeyx::game::{self, MatrixGame};
use honeyx::victim;

fn opts(node_limit: usize) -> ExactOptions {
    ExactOptions {
        node_limit,
        time_limit: Duration::from_secs(120),
        ..ExactOptions::default()
    }
}

fn assert_single_level_feasible(g: &MatrixGame, budget: f64, s: &ExactSolution) {
    let gp = MatrixGame::new(g.payoffs().add(s.d.matrix()).unwrap()).unwrap();
    let gy = gp.payoffs().mul_vec(s.y.probs());
    let gw = gp.payoffs().tr_mul_vec(s.omega.probs());
    assert!(gy.iter().all(|&v| v >= s.v_p - 1e-6), "(G+D)y = {gy:?}, v_p = {}", s.v_p);
    assert!(gw.iter().all(|&v| v <= s.v_p + 1e-6), "(G+D)ᵀω = {gw:?}, v_p = {}", s.v_p);
    assert!(s.d.norm() <= budget + 1e-9);

    let min_gy = gy.iter().copied().fold(f64::INFINITY, f64::min);
    let max_gw = gw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!((min_gy - s.v_p).abs() <= 1e-6 && (max_gw - s.v_p).abs() <= 1e-6);
    assert!(victim::is_rational_response(&gp, &s.y, 1e-5).unwrap());

    let (row, one) = s.x.max_entry();
    assert_eq!(one, 1.0);
    let loss: f64 = g.payoffs().row(row).iter().zip(s.y.probs()).map(|(a, b)| a * b).sum();
    assert!((loss - s.objective).abs() <= 1e-9);
    assert!(s.lower_bound <= s.objective + 1e-12);
    assert!((s.gap - (s.objective - s.lower_bound)).abs() <= 1e-12);
}

#[test]
fn pennies_reaches_the_analytic_optimum() {
    let s = solve_exact(&pennies(), 0.4, &opts(20_000)).unwrap();
    assert!((s.objective + 0.2).abs() <= 1e-3, "objective {}", s.objective);
    assert_single_level_feasible(&pennies(), 0.4, &s);
    // The grid oracle also lands on -0.2: D = [0.4 0.4; 0 0] is on the grid.
    assert!((grid_oracle_2x2(&as_two(&pennies()), 0.4, 0.05) + 0.2).abs() <= 1e-8);
}

#[test]
fn small_game_matches_coarse_grid_oracle() {
    let g = MatrixGame::from_rows(&[vec![3.0, 1.0], vec![0.0, 2.0]]).unwrap();
    let s = solve_exact(&g, 1.0, &opts(20_000)).unwrap();
    let oracle = grid_oracle_2x2(&as_two(&g), 1.0, 0.1);
    assert!((s.objective - oracle).abs() <= 0.1, "exact {} vs grid {oracle}", s.objective);
    assert!(s.objective <= oracle + 1e-6);
    assert_single_level_feasible(&g, 1.0, &s);
}

#[test]
fn zero_budget_is_the_honest_value() {
    let mut rng = TestRng::new(5);
    for _ in 0..5 {
        let g = rng.game(3, 4, -1.0, 1.0);
        let s = solve_exact(&g, 0.0, &opts(1000)).unwrap();
        let v_g = game::solve_game(&g).unwrap().value;
        assert!((s.objective - v_g).abs() <= 1e-6);
        assert_eq!(s.d.matrix().max_abs(), 0.0);
        assert_eq!(s.status, ExactStatus::Proven);
    }
}

#[test]
fn trace_bounds_and_incumbents_are_monotone() {
    let mut rng = TestRng::new(11);
    for case in 0..6 {
        let g = rng.game(2, 2 + case % 2, 0.0, 1.0);
        let budget = rng.range(0.05, 0.4);
        let o = ExactOptions {
            record_trace: true,
            seed_incumbent: case % 2 == 0,
            ..opts(1500)
        };
        let s = solve_exact(&g, budget, &o).unwrap();
        let trace = s.trace.as_ref().unwrap();
        for &(parent, child) in &trace.child_bounds {
            assert!(child >= parent - 1e-9, "child bound {child} below parent {parent}");
        }
        assert!(!trace.incumbents.is_empty());
        for w in trace.incumbents.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(*trace.incumbents.last().unwrap(), s.objective);
        assert!(s.nodes_explored <= 1500);
        assert_single_level_feasible(&g, budget, &s);
        if s.status == ExactStatus::Proven {
            assert!(s.gap <= o.gap_tol);
        }
    }
}

#[test]
fn lower_bound_never_exceeds_a_feasible_point() {
    let mut rng = TestRng::new(23);
    for _ in 0..8 {
        let g = rng.game(2, 2, 0.0, 1.0);
        let budget = [0.1, 0.2, 0.5][rng.uniform().mul_add(3.0, 0.0) as usize % 3];
        let s = solve_exact(&g, budget, &opts(3000)).unwrap();
        let oracle = grid_oracle_2x2(&as_two(&g), budget, 0.05);
        assert!(s.lower_bound <= oracle + 1e-9, "bound {} above grid point {oracle}", s.lower_bound);
        assert!(s.objective <= oracle + 1e-6, "incumbent {} above grid point {oracle}", s.objective);
        assert_single_level_feasible(&g, budget, &s);
    }
}

#[test]
fn larger_budget_never_hurts() {
    let mut rng = TestRng::new(31);
    let mut compared = 0;
    for _ in 0..6 {
        let g = rng.game(3, 3, 0.0, 1.0);
        let mut prev: Option<ExactSolution> = None;
        for budget in [0.0, 0.25, 0.5, 1.0] {
            let s = solve_exact(&g, budget, &opts(3000)).unwrap();
            assert_single_level_feasible(&g, budget, &s);
            if let Some(p) = &prev {
                if p.status == ExactStatus::Proven {
                    assert!(s.objective <= p.objective + 1e-6);
                    compared += 1;
                }
            }
            prev = Some(s);
        }
    }
    assert!(compared >= 6, "only {compared} proven comparisons");
}

#[test]
fn limits_are_reported() {
    let o = ExactOptions {
        seed_incumbent: false,
        ..opts(5)
    };
    let s = solve_exact(&pennies(), 0.4, &o).unwrap();
    assert_eq!(s.status, ExactStatus::NodeLimit);
    assert_eq!(s.nodes_explored, 5);
    assert!(s.gap > 0.0);
    assert_single_level_feasible(&pennies(), 0.4, &s);
}
