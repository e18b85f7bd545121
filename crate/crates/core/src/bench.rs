//! Random instances, the improvement metric, and the three experiment sweeps
//! (over the budget, the game size and the bisection tolerance).

use std::collections::HashMap;
use std::io::Write;
use std::sync::Once;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binsearch;
use crate::deception::{self, DeceptionMatrix};
use crate::error::{Error, Result};
use crate::exact::{self, ExactOptions};
use crate::format::number;
use crate::game::{self, MatrixGame, MixedStrategy};
use crate::matrix::Matrix;
use crate::victim::{self, Mode};

pub const RECORD_HEADER: [&str; 12] = [
    "seed",
    "instance",
    "m",
    "n",
    "budget",
    "delta",
    "method",
    "honest_value",
    "outcome",
    "improvement",
    "wall_time_ms",
    "status",
];
pub const SUMMARY_HEADER: [&str; 5] = ["param", "method", "mean_improvement", "std_improvement", "mean_time_ms"];

/// Caps the number of bench worker threads.
pub const THREADS_ENV: &str = "HONEYX_THREADS";

/// splitmix64, one output per call.
#[derive(Clone, Debug)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// `m × n` game with i.i.d. uniform `[0, 1)` payoffs filled row by row.
pub fn sample_game(m: usize, n: usize, seed: u64) -> Result<MatrixGame> {
    if m == 0 || n == 0 {
        return Err(Error::MalformedProblem(format!("cannot sample a {m}x{n} game")));
    }
    let mut rng = SplitMix64::new(seed);
    MatrixGame::new(Matrix::from_fn(m, n, |_, _| rng.next_f64()))
}

/// Deceiver's true loss when the victim answers `G + D` rationally, and its
/// improvement over the honest value `v_G`.
pub fn evaluate_deception(game: &MatrixGame, x: &MixedStrategy, d: &DeceptionMatrix, mode: Mode) -> Result<(f64, f64)> {
    let gp = deception::perturb(game, d)?;
    let response = victim::select_response(game, &gp, x, mode)?;
    let outcome = game::outcome(game, x, &response.y)?;
    let honest = game::solve_game(game)?.value;
    Ok((outcome, honest - outcome))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    /// Bisection deception, scored against a rational (optimistic) victim.
    Binsearch,
    /// Bisection deception, scored by its guaranteed bound.
    BinsearchRobust,
    /// Bisection deception, scored by the loss the algorithm itself reports.
    BinsearchReported,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Exact, Method::Binsearch, Method::BinsearchRobust, Method::BinsearchReported];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Binsearch => "binsearch",
            Method::BinsearchRobust => "binsearch_robust",
            Method::BinsearchReported => "binsearch_reported",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Swept by the budget sweep; the first entry is used by the other two.
    pub budgets: Vec<f64>,
    /// Swept by the tolerance sweep; the first entry is used by the other two.
    pub deltas: Vec<f64>,
    /// Square game sizes for the size sweep.
    pub sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub exact: ExactOptions,
    pub mode: Mode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 5,
            n: 5,
            samples: 20,
            seed: 0,
            budgets: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            deltas: vec![binsearch::DEFAULT_TOLERANCE],
            sizes: vec![2, 3, 4, 5, 6],
            methods: vec![Method::Exact, Method::Binsearch, Method::BinsearchRobust],
            exact: ExactOptions::default(),
            mode: Mode::Optimistic,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.m == 0 || self.n == 0 || self.sizes.contains(&0) {
            return bad("game dimensions must be positive".into());
        }
        if self.samples == 0 {
            return bad("at least one sample is required".into());
        }
        if self.budgets.is_empty() || self.budgets.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad(format!("budgets must be finite and nonnegative, got {:?}", self.budgets));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return bad(format!("tolerances must be positive, got {:?}", self.deltas));
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if !(self.exact.gap_tol > 0.0) || self.exact.node_limit == 0 || self.exact.time_limit.is_zero() {
            return bad("exact solver limits must be positive".into());
        }
        Ok(())
    }

    fn instance_seed(&self, instance: usize) -> u64 {
        self.seed.wrapping_add(instance as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub seed: u64,
    pub instance: usize,
    pub m: usize,
    pub n: usize,
    pub budget: f64,
    /// Bisection tolerance; `None` for the exact solver.
    pub delta: Option<f64>,
    pub method: Method,
    pub honest_value: f64,
    pub outcome: f64,
    pub improvement: f64,
    pub wall_time_ms: f64,
    /// `ok`, the exact solver's status, or `error: ...`.
    pub status: String,
}

impl BenchRecord {
    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }

    fn csv_fields(&self) -> [String; 12] {
        [
            self.seed.to_string(),
            self.instance.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            number(self.budget),
            self.delta.map(number).unwrap_or_default(),
            self.method.as_str().to_string(),
            number(self.honest_value),
            number(self.outcome),
            number(self.improvement),
            format!("{:.3}", self.wall_time_ms),
            self.status.clone(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub param: f64,
    pub method: Method,
    pub mean_improvement: f64,
    pub std_improvement: f64,
    pub mean_time_ms: f64,
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    instance: usize,
    m: usize,
    n: usize,
    budget: f64,
    delta: f64,
    method: Method,
}

fn warm_up() {
    static WARM: Once = Once::new();
    WARM.call_once(|| {
        if let Ok(g) = sample_game(3, 3, 0) {
            let _ = binsearch::solve_feasible(&g, 1.0, 1e-2);
        }
    });
}

fn worker_pool(single: bool) -> Result<rayon::ThreadPool> {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&t| t > 0);
    let threads = if single { 1 } else { cap.unwrap_or(0) };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::SolverFailure(format!("cannot start bench workers: {e}")))
}

fn run_cell(cfg: &ExperimentConfig, cell: Cell) -> BenchRecord {
    let seed = cfg.instance_seed(cell.instance);
    let mut record = BenchRecord {
        seed,
        instance: cell.instance,
        m: cell.m,
        n: cell.n,
        budget: cell.budget,
        delta: (cell.method != Method::Exact).then_some(cell.delta),
        method: cell.method,
        honest_value: f64::NAN,
        outcome: f64::NAN,
        improvement: f64::NAN,
        wall_time_ms: 0.0,
        status: String::new(),
    };
    match score(cfg, cell, seed, &mut record) {
        Ok(status) => record.status = status,
        Err(e) => record.status = format!("error: {e}"),
    }
    record
}

fn score(cfg: &ExperimentConfig, cell: Cell, seed: u64, record: &mut BenchRecord) -> Result<String> {
    let game = sample_game(cell.m, cell.n, seed)?;
    let honest = game::solve_game(&game)?.value;
    record.honest_value = honest;
    let start = Instant::now();
    let (outcome, status) = match cell.method {
        Method::Exact => {
            let sol = exact::solve_exact(&game, cell.budget, &cfg.exact)?;
            record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            (evaluate_deception(&game, &sol.x, &sol.d, cfg.mode)?.0, sol.status.as_str().to_string())
        }
        Method::Binsearch | Method::BinsearchReported => {
            let sol = binsearch::solve_feasible(&game, cell.budget, cell.delta)?;
            record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            let outcome = if cell.method == Method::Binsearch {
                evaluate_deception(&game, &sol.x_bar, &sol.d_bar, cfg.mode)?.0
            } else {
                sol.v_best
            };
            (outcome, "ok".to_string())
        }
        Method::BinsearchRobust => {
            let mut sol = binsearch::solve_feasible(&game, cell.budget, cell.delta)?;
            let bound = binsearch::robustify(&game, &mut sol)?;
            record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            (bound, "ok".to_string())
        }
    };
    record.outcome = outcome;
    record.improvement = honest - outcome;
    Ok(status)
}

fn run(cfg: &ExperimentConfig, cells: Vec<Cell>, single: bool) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    warm_up();
    let pool = worker_pool(single)?;
    Ok(pool.install(|| cells.par_iter().map(|&c| run_cell(cfg, c)).collect()))
}

/// Every method on every instance at every budget, at tolerance `deltas[0]`.
pub fn sweep_budget(cfg: &ExperimentConfig) -> Result<Vec<BenchRecord>> {
    let delta = cfg.deltas.first().copied().unwrap_or(binsearch::DEFAULT_TOLERANCE);
    let mut cells = Vec::new();
    for instance in 0..cfg.samples {
        for &budget in &cfg.budgets {
            for &method in &cfg.methods {
                cells.push(Cell {
                    instance,
                    m: cfg.m,
                    n: cfg.n,
                    budget,
                    delta,
                    method,
                });
            }
        }
    }
    run(cfg, cells, false)
}

/// Every method on square games of each size at budget `budgets[0]`. Runs on
/// one worker so that timings are not skewed by contention.
pub fn sweep_size(cfg: &ExperimentConfig) -> Result<Vec<BenchRecord>> {
    let budget = cfg.budgets.first().copied().unwrap_or(0.0);
    let delta = cfg.deltas.first().copied().unwrap_or(binsearch::DEFAULT_TOLERANCE);
    let mut cells = Vec::new();
    for &size in &cfg.sizes {
        for instance in 0..cfg.samples {
            for &method in &cfg.methods {
                cells.push(Cell {
                    instance,
                    m: size,
                    n: size,
                    budget,
                    delta,
                    method,
                });
            }
        }
    }
    run(cfg, cells, true)
}

/// Bisection methods at every tolerance, budget `budgets[0]`. The exact
/// solver does not depend on the tolerance and is skipped.
pub fn sweep_tolerance(cfg: &ExperimentConfig) -> Result<Vec<BenchRecord>> {
    let budget = cfg.budgets.first().copied().unwrap_or(0.0);
    let mut cells = Vec::new();
    for instance in 0..cfg.samples {
        for &delta in &cfg.deltas {
            for &method in cfg.methods.iter().filter(|&&m| m != Method::Exact) {
                cells.push(Cell {
                    instance,
                    m: cfg.m,
                    n: cfg.n,
                    budget,
                    delta,
                    method,
                });
            }
        }
    }
    run(cfg, cells, false)
}

/// Mean and sample standard deviation of the improvement per
/// `(param, method)`, in first-seen order. Failed cells are left out.
pub fn summarize(records: &[BenchRecord], param: impl Fn(&BenchRecord) -> f64) -> Vec<SummaryRow> {
    let mut order: Vec<(u64, Method)> = Vec::new();
    let mut groups: HashMap<(u64, Method), Vec<&BenchRecord>> = HashMap::new();
    for r in records.iter().filter(|r| !r.is_error()) {
        let key = (param(r).to_bits(), r.method);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let count = rs.len() as f64;
            let mean = rs.iter().map(|r| r.improvement).sum::<f64>() / count;
            let var = if rs.len() > 1 {
                rs.iter().map(|r| (r.improvement - mean).powi(2)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
            SummaryRow {
                param: f64::from_bits(key.0),
                method: key.1,
                mean_improvement: mean,
                std_improvement: var.sqrt(),
                mean_time_ms: rs.iter().map(|r| r.wall_time_ms).sum::<f64>() / count,
            }
        })
        .collect()
}

pub fn write_records<W: Write>(out: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::InvalidArgument(format!("cannot write CSV: {e}"));
    w.write_record(RECORD_HEADER).map_err(io_err)?;
    for r in records {
        w.write_record(r.csv_fields()).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("cannot write CSV: {e}")))
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::InvalidArgument(format!("cannot write CSV: {e}"));
    w.write_record(SUMMARY_HEADER).map_err(io_err)?;
    for r in rows {
        w.write_record([
            number(r.param),
            r.method.as_str().to_string(),
            number(r.mean_improvement),
            number(r.std_improvement),
            format!("{:.3}", r.mean_time_ms),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("cannot write CSV: {e}")))
}

/// Line chart of mean improvement per method against the swept parameter,
/// with a ±1 standard deviation band.
pub fn summary_svg(rows: &[SummaryRow], x_label: &str, log_x: bool) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

    let xf = |p: f64| if log_x { p.max(f64::MIN_POSITIVE).log10() } else { p };
    let finite = rows.iter().filter(|r| r.mean_improvement.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in finite {
        x0 = x0.min(xf(r.param));
        x1 = x1.max(xf(r.param));
        y0 = y0.min(r.mean_improvement - r.std_improvement);
        y1 = y1.max(r.mean_improvement + r.std_improvement);
    }
    if !(x0.is_finite() && y0.is_finite()) {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |p: f64| PAD + (xf(p) - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{lx}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"12\" y=\"{cy}\" transform=\"rotate(-90 12 {cy})\" text-anchor=\"middle\">improvement</text>\n\
         <text x=\"{PAD}\" y=\"{lx}\" text-anchor=\"start\">{x0:.3}</text>\n\
         <text x=\"{r}\" y=\"{lx}\" text-anchor=\"end\">{x1:.3}</text>\n\
         <text x=\"{tl}\" y=\"{b}\" text-anchor=\"end\">{y0:.3}</text>\n\
         <text x=\"{tl}\" y=\"{PAD}\" text-anchor=\"end\">{y1:.3}</text>\n",
        b = H - PAD,
        r = W - PAD,
        cx = W / 2.0,
        cy = H / 2.0,
        lx = H - 15.0,
        tl = PAD - 4.0,
    );
    let mut methods: Vec<Method> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    for (idx, method) in methods.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let mut pts: Vec<&SummaryRow> = rows.iter().filter(|r| r.method == *method && r.mean_improvement.is_finite()).collect();
        pts.sort_by(|a, b| a.param.total_cmp(&b.param));
        if pts.is_empty() {
            continue;
        }
        let upper = pts.iter().map(|r| format!("{:.2},{:.2}", sx(r.param), sy(r.mean_improvement + r.std_improvement)));
        let lower = pts.iter().rev().map(|r| format!("{:.2},{:.2}", sx(r.param), sy(r.mean_improvement - r.std_improvement)));
        let band: Vec<String> = upper.chain(lower).collect();
        svg += &format!("<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n", band.join(" "));
        let line: Vec<String> = pts.iter().map(|r| format!("{:.2},{:.2}", sx(r.param), sy(r.mean_improvement))).collect();
        svg += &format!("<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n", line.join(" "));
        svg += &format!(
            "<text x=\"{:.0}\" y=\"{:.0}\" fill=\"{color}\">{}</text>\n",
            W - PAD - 120.0,
            PAD + 16.0 * idx as f64,
            method.as_str()
        );
    }
    svg += "</svg>\n";
    svg
}
