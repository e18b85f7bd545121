//! Independent oracles shared by the integration tests. Nothing here calls
//! the LP solver: 2×2 games are solved in closed form and the other checks
//! enumerate grids.

#![allow(dead_code)]

use honeyx::game::MatrixGame;

pub fn pennies() -> MatrixGame {
    MatrixGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
}

/// Row-major `[a b; c d]`.
pub type Two = [[f64; 2]; 2];

/// Value of the 2×2 game and the interval of column weights `t` on the first
/// column for which `(t, 1-t)` guarantees the value up to `slack(v)`.
pub fn rational_interval(g: &Two, slack: impl Fn(f64) -> f64) -> (f64, f64, f64) {
    let line = |k: usize| (g[k][1], g[k][0] - g[k][1]);
    let worst = |t: f64| (0..2).map(|k| line(k).0 + line(k).1 * t).fold(f64::INFINITY, f64::min);
    let mut ts = vec![0.0, 1.0];
    let (a0, b0) = line(0);
    let (a1, b1) = line(1);
    if (b0 - b1).abs() > 0.0 {
        let t = (a1 - a0) / (b0 - b1);
        if (0.0..=1.0).contains(&t) {
            ts.push(t);
        }
    }
    let v = ts.iter().map(|&t| worst(t)).fold(f64::NEG_INFINITY, f64::max);
    let level = v - slack(v);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for k in 0..2 {
        let (a, b) = line(k);
        if b > 0.0 {
            lo = lo.max((level - a) / b);
        } else if b < 0.0 {
            hi = hi.min((level - a) / b);
        }
    }
    (v, lo, hi.max(lo))
}

/// Deceiver's loss when the victim answers `g + d` optimistically (for the
/// deceiver, who also picks the best pure row).
pub fn optimistic_loss_2x2(g: &Two, d: &Two) -> f64 {
    let gp = [[g[0][0] + d[0][0], g[0][1] + d[0][1]], [g[1][0] + d[1][0], g[1][1] + d[1][1]]];
    let (_, lo, hi) = rational_interval(&gp, |v| 1e-9 * (1.0 + v.abs()));
    let mut best = f64::INFINITY;
    for row in g {
        for t in [lo, hi] {
            best = best.min(row[0] * t + row[1] * (1.0 - t));
        }
    }
    best
}

/// Integer points `(p, q)` with `|p| + |q| ≤ r`.
fn cross_polytope(r: i64) -> Vec<(i64, i64)> {
    let mut pts = Vec::new();
    for p in -r..=r {
        let rest = r - p.abs();
        for q in -rest..=rest {
            pts.push((p, q));
        }
    }
    pts
}

/// Best deceiver loss over deceptions whose columns lie on the `step` grid
/// of the budget cross-polytope.
pub fn grid_oracle_2x2(g: &Two, budget: f64, step: f64) -> f64 {
    let r = (budget / step + 1e-9).floor() as i64;
    let col = cross_polytope(r);
    let mut best = f64::INFINITY;
    for &(p0, q0) in &col {
        for &(p1, q1) in &col {
            let d = [
                [p0 as f64 * step, p1 as f64 * step],
                [q0 as f64 * step, q1 as f64 * step],
            ];
            best = best.min(optimistic_loss_2x2(g, &d));
        }
    }
    best
}

pub fn as_two(g: &MatrixGame) -> Two {
    assert_eq!(g.shape(), (2, 2));
    [[g.entry(0, 0), g.entry(0, 1)], [g.entry(1, 0), g.entry(1, 1)]]
}

/// All points of the probability simplex of dimension `m` with coordinates
/// on multiples of `1/steps`.
pub fn simplex_grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == m - 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(m, left - c, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Minimal deterministic generator for test inputs (xorshift64*).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        (self.0.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn game(&mut self, m: usize, n: usize, lo: f64, hi: f64) -> MatrixGame {
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| self.range(lo, hi)).collect()).collect();
        MatrixGame::from_rows(&rows).unwrap()
    }

    pub fn simplex(&mut self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| -self.uniform().max(1e-300).ln()).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }
}
